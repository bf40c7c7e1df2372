//! Stabilizer codes: validity, LDPC certificates, syndromes, operator
//! classification, exhaustive distance, and the `(A I | B C)` canonical form
//! used to derive logical operators.

use serde::{Deserialize, Serialize};

use crate::error::CodeError;
use crate::gf2::{reduce_against, BinaryMatrix, BitVec, Echelon};
use crate::pauli::{Pauli, PauliOperator};

/// Maximum generator weight `r` and maximum number of generators touching a
/// qubit `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LdpcParams {
    pub r: usize,
    pub c: usize,
}

impl LdpcParams {
    /// Degree bound `z = (r-1)c` of the adjacency graph.
    pub fn z(&self) -> usize {
        self.r.saturating_sub(1) * self.c
    }
}

/// X- and Z-type check matrices of a CSS code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CssMatrices {
    pub hx: BinaryMatrix,
    pub hz: BinaryMatrix,
}

/// A pair of conjugate logical operators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalPair {
    pub x: PauliOperator,
    pub z: PauliOperator,
}

/// Result of [`StabilizerCode::classify`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorClass {
    Stabilizer,
    Logical,
    Detectable,
}

/// An `[[n, k]]` stabilizer code given by a list of generators.
///
/// The code is immutable; derived data (generator supports, the echelon form
/// of the symplectic generator matrix) is computed once at construction.
#[derive(Clone, Debug)]
pub struct StabilizerCode {
    n: usize,
    generators: Vec<PauliOperator>,
    ldpc: Option<LdpcParams>,
    logicals: Option<Vec<LogicalPair>>,
    css: Option<CssMatrices>,
    distance_hint: Option<usize>,
    name: Option<String>,
    supports: Vec<Vec<usize>>,
    qubit_checks: Vec<Vec<usize>>,
    span: Echelon,
}

/// Outcome of [`StabilizerCode::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidityReport {
    pub anticommuting_pairs: Vec<(usize, usize)>,
    pub independent: bool,
    pub rank: usize,
    /// The tightest `(r, c)` achieved by the generator list as given.
    pub tightest: LdpcParams,
    /// For CSS codes, `(r, c)` with `c` counted separately over X-type and
    /// Z-type generators (the larger of the two).
    pub per_sector: Option<LdpcParams>,
    /// Whether the advertised `(r, c)` (if any) holds.
    pub advertised_holds: Option<bool>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.anticommuting_pairs.is_empty() && self.independent && self.advertised_holds != Some(false)
    }
}

/// A code related to the original by Hadamards on `hadamards` (original
/// indices) followed by the qubit relabelling `permutation[q] = new index`.
#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub code: StabilizerCode,
    pub permutation: Vec<usize>,
    pub hadamards: Vec<usize>,
}

/// Hard limit on `n` for the unrestricted (non-CSS) exhaustive distance search.
pub const DISTANCE_GENERAL_MAX_N: usize = 32;
/// Hard limit on `n` for the CSS per-sector distance search.
pub const DISTANCE_CSS_MAX_N: usize = 128;

impl StabilizerCode {
    pub fn new(n: usize, generators: Vec<PauliOperator>) -> Result<Self, CodeError> {
        for g in &generators {
            if g.n() != n {
                return Err(CodeError::QubitCount {
                    expected: n,
                    found: g.n(),
                });
            }
        }
        let supports: Vec<Vec<usize>> = generators.iter().map(PauliOperator::support).collect();
        let mut qubit_checks = vec![Vec::new(); n];
        for (i, s) in supports.iter().enumerate() {
            for &q in s {
                qubit_checks[q].push(i);
            }
        }
        let rows: Vec<BitVec> = generators.iter().map(PauliOperator::to_symplectic).collect();
        let span = BinaryMatrix::from_rows(2 * n, &rows)?.echelon();
        Ok(Self {
            n,
            generators,
            ldpc: None,
            logicals: None,
            css: None,
            distance_hint: None,
            name: None,
            supports,
            qubit_checks,
            span,
        })
    }

    /// CSS code with X-type generators from `hx` followed by Z-type
    /// generators from `hz`.
    pub fn from_css(hx: BinaryMatrix, hz: BinaryMatrix) -> Result<Self, CodeError> {
        if hx.cols() != hz.cols() {
            return Err(CodeError::QubitCount {
                expected: hx.cols(),
                found: hz.cols(),
            });
        }
        let n = hx.cols();
        let generators = (0..hx.rows())
            .map(|r| PauliOperator::x_type(hx.row(r)))
            .chain((0..hz.rows()).map(|r| PauliOperator::z_type(hz.row(r))))
            .collect();
        let mut code = Self::new(n, generators)?;
        code.css = Some(CssMatrices { hx, hz });
        Ok(code)
    }

    pub fn with_ldpc(mut self, params: LdpcParams) -> Self {
        self.ldpc = Some(params);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_distance_hint(mut self, d: usize) -> Self {
        self.distance_hint = Some(d);
        self
    }

    pub fn with_logicals(mut self, logicals: Vec<LogicalPair>) -> Result<Self, CodeError> {
        for pair in &logicals {
            for op in [&pair.x, &pair.z] {
                if op.n() != self.n {
                    return Err(CodeError::QubitCount {
                        expected: self.n,
                        found: op.n(),
                    });
                }
            }
        }
        self.logicals = Some(logicals);
        Ok(self)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// `n - rank(generators)`; equals `n - #generators` for a valid code.
    pub fn k(&self) -> usize {
        self.n - self.span.pivots.len()
    }

    /// Number of generators, i.e. syndrome length.
    #[inline]
    pub fn num_checks(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[PauliOperator] {
        &self.generators
    }

    pub fn ldpc(&self) -> Option<LdpcParams> {
        self.ldpc
    }

    pub fn logicals(&self) -> Option<&[LogicalPair]> {
        self.logicals.as_deref()
    }

    pub fn css(&self) -> Option<&CssMatrices> {
        self.css.as_ref()
    }

    pub fn distance_hint(&self) -> Option<usize> {
        self.distance_hint
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Qubits touched by generator `b`.
    pub fn support(&self, b: usize) -> &[usize] {
        &self.supports[b]
    }

    /// Generators touching qubit `q`, in generator order.
    pub fn checks_on(&self, q: usize) -> &[usize] {
        &self.qubit_checks[q]
    }

    /// Maximum generator weight and maximum qubit degree of the generator list.
    pub fn tightest_ldpc(&self) -> LdpcParams {
        LdpcParams {
            r: self.supports.iter().map(Vec::len).max().unwrap_or(0),
            c: self.qubit_checks.iter().map(Vec::len).max().unwrap_or(0),
        }
    }

    /// The `(r, c)` to use in bounds: the advertised pair if present, else the tightest.
    pub fn ldpc_or_tightest(&self) -> LdpcParams {
        self.ldpc.unwrap_or_else(|| self.tightest_ldpc())
    }

    pub fn validate(&self) -> ValidityReport {
        let m = self.generators.len();
        let mut anticommuting_pairs = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                if self.generators[i].symplectic_unchecked(&self.generators[j]) {
                    anticommuting_pairs.push((i, j));
                }
            }
        }
        let rank = self.span.pivots.len();
        let tightest = self.tightest_ldpc();
        let advertised_holds = self.ldpc.map(|p| tightest.r <= p.r && tightest.c <= p.c);
        let per_sector = self.css.as_ref().map(|css| LdpcParams {
            r: tightest.r,
            c: css
                .hx
                .col_weights()
                .into_iter()
                .chain(css.hz.col_weights())
                .max()
                .unwrap_or(0),
        });
        ValidityReport {
            anticommuting_pairs,
            independent: rank == m,
            rank,
            tightest,
            per_sector,
            advertised_holds,
        }
    }

    fn check_len(&self, p: &PauliOperator) -> Result<(), CodeError> {
        if p.n() != self.n {
            return Err(CodeError::QubitCount {
                expected: self.n,
                found: p.n(),
            });
        }
        Ok(())
    }

    /// Bit `i` is the symplectic product of generator `i` with `e`.
    pub fn syndrome(&self, e: &PauliOperator) -> Result<BitVec, CodeError> {
        self.check_len(e)?;
        Ok(self.syndrome_unchecked(e))
    }

    pub(crate) fn syndrome_unchecked(&self, e: &PauliOperator) -> BitVec {
        let mut s = BitVec::zeros(self.generators.len());
        for (i, g) in self.generators.iter().enumerate() {
            if g.symplectic_unchecked(e) {
                s.set(i, true);
            }
        }
        s
    }

    /// Whether `p` lies in the stabilizer group (up to phase).
    pub fn in_stabilizer(&self, p: &PauliOperator) -> Result<bool, CodeError> {
        self.check_len(p)?;
        Ok(reduce_against(&self.span, &p.to_symplectic()).is_zero())
    }

    pub fn classify(&self, p: &PauliOperator) -> Result<OperatorClass, CodeError> {
        self.check_len(p)?;
        if !self.syndrome_unchecked(p).is_zero() {
            return Ok(OperatorClass::Detectable);
        }
        if reduce_against(&self.span, &p.to_symplectic()).is_zero() {
            Ok(OperatorClass::Stabilizer)
        } else {
            Ok(OperatorClass::Logical)
        }
    }

    /// Minimum weight of a logical operator, if one exists with weight at
    /// most `weight_cap`.
    ///
    /// The search is exhaustive by increasing weight. CSS codes are searched
    /// per sector (pure X and pure Z representatives).
    pub fn distance(&self, weight_cap: usize) -> Result<Option<usize>, CodeError> {
        if weight_cap == 0 || self.k() == 0 {
            return Ok(None);
        }
        if let Some(css) = &self.css {
            if self.n > DISTANCE_CSS_MAX_N {
                return Err(CodeError::Argument(format!(
                    "exhaustive distance search limited to n <= {DISTANCE_CSS_MAX_N}"
                )));
            }
            let hx_span = css.hx.echelon();
            let hz_span = css.hz.echelon();
            for w in 1..=weight_cap.min(self.n) {
                // X-type logical: commutes with Z checks, not in the X-check span
                let x_hit = any_combination(self.n, w, |support| {
                    let v = BitVec::from_positions(self.n, support).expect("in range");
                    css.hz.mul_vec(&v).expect("dims").is_zero() && !reduce_against(&hx_span, &v).is_zero()
                });
                let z_hit = x_hit
                    || any_combination(self.n, w, |support| {
                        let v = BitVec::from_positions(self.n, support).expect("in range");
                        css.hx.mul_vec(&v).expect("dims").is_zero() && !reduce_against(&hz_span, &v).is_zero()
                    });
                if z_hit {
                    return Ok(Some(w));
                }
            }
            return Ok(None);
        }
        if self.n > DISTANCE_GENERAL_MAX_N {
            return Err(CodeError::Argument(format!(
                "exhaustive distance search limited to n <= {DISTANCE_GENERAL_MAX_N}"
            )));
        }
        for w in 1..=weight_cap.min(self.n) {
            let hit = any_combination(self.n, w, |support| {
                any_assignment(self.n, support, |op| {
                    self.syndrome_unchecked(op).is_zero() && !reduce_against(&self.span, &op.to_symplectic()).is_zero()
                })
            });
            if hit {
                return Ok(Some(w));
            }
        }
        Ok(None)
    }

    /// Brings the generators into the block form `(A I | B C)`: after the
    /// reported Hadamards and relabelling, the X part of generator `j` is the
    /// unit vector on qubit `k + j` over the last `n - k` columns.
    ///
    /// Pivots are chosen at the lowest column index; a code already in
    /// canonical form is returned unchanged.
    pub fn canonical_form(&self) -> Result<CanonicalForm, CodeError> {
        let m = self.generators.len();
        if self.span.pivots.len() != m {
            return Err(CodeError::DependentGenerators);
        }
        let k = self.n - m;
        if self.is_canonical() {
            return Ok(CanonicalForm {
                code: self.clone(),
                permutation: (0..self.n).collect(),
                hadamards: Vec::new(),
            });
        }

        let mut rows = self.generators.clone();
        let mut is_pivot = vec![false; self.n];
        let mut pivots = Vec::with_capacity(m);
        let mut hadamards = Vec::new();
        let mut next = 0;

        let eliminate = |rows: &mut Vec<PauliOperator>, pivot_row: usize, col: usize| {
            let p = rows[pivot_row].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != pivot_row && row.x_part().get(col) {
                    row.mul_assign(&p);
                }
            }
        };

        for c in 0..self.n {
            if next == m {
                break;
            }
            if let Some(r) = (next..m).find(|&r| rows[r].x_part().get(c)) {
                rows.swap(r, next);
                eliminate(&mut rows, next, c);
                is_pivot[c] = true;
                pivots.push(c);
                next += 1;
            }
        }
        while next < m {
            let found = (0..self.n)
                .filter(|&c| !is_pivot[c])
                .find_map(|c| (next..m).find(|&r| rows[r].z_part().get(c)).map(|r| (c, r)));
            let Some((c, r)) = found else {
                return Err(CodeError::Argument(
                    "generators admit no (A I | B C) form; are they commuting?".into(),
                ));
            };
            for row in rows.iter_mut() {
                row.hadamard(c);
            }
            hadamards.push(c);
            rows.swap(r, next);
            eliminate(&mut rows, next, c);
            is_pivot[c] = true;
            pivots.push(c);
            next += 1;
        }

        let mut permutation = vec![0; self.n];
        for (pos, c) in (0..self.n).filter(|&c| !is_pivot[c]).enumerate() {
            permutation[c] = pos;
        }
        for (j, &c) in pivots.iter().enumerate() {
            permutation[c] = k + j;
        }
        let generators = rows.iter().map(|g| g.permuted(&permutation)).collect();
        let mut code = StabilizerCode::new(self.n, generators)?;
        code.ldpc = None;
        hadamards.sort_unstable();
        Ok(CanonicalForm {
            code,
            permutation,
            hadamards,
        })
    }

    fn is_canonical(&self) -> bool {
        let m = self.generators.len();
        let k = self.n - m;
        self.generators
            .iter()
            .enumerate()
            .all(|(j, g)| (k..self.n).all(|q| g.x_part().get(q) == (q == k + j)))
    }

    /// Logical pairs `(X̄_i, Z̄_i)`: in the canonical frame `X̄_i = X_i ⊗ P_i`
    /// and `Z̄_i = Z_i ⊗ Q_i` with Z-type tails on the last `n - k` qubits,
    /// mapped back to the original qubit frame.
    pub fn derive_logicals(&self) -> Result<Vec<LogicalPair>, CodeError> {
        let cf = self.canonical_form()?;
        let m = self.generators.len();
        let k = self.n - m;
        let mut inverse = vec![0; self.n];
        for (q, &p) in cf.permutation.iter().enumerate() {
            inverse[p] = q;
        }
        let gens = cf.code.generators();
        let mut pairs = Vec::with_capacity(k);
        for i in 0..k {
            let mut xbar = PauliOperator::single(self.n, i, Pauli::X);
            let mut zbar = PauliOperator::single(self.n, i, Pauli::Z);
            for (j, g) in gens.iter().enumerate() {
                if g.z_part().get(i) {
                    xbar.apply(k + j, Pauli::Z);
                }
                if g.x_part().get(i) {
                    zbar.apply(k + j, Pauli::Z);
                }
            }
            let mut xo = xbar.permuted(&inverse);
            let mut zo = zbar.permuted(&inverse);
            for &h in &cf.hadamards {
                xo.hadamard(h);
                zo.hadamard(h);
            }
            pairs.push(LogicalPair { x: xo, z: zo });
        }
        Ok(pairs)
    }

    /// Stored logicals, or freshly derived ones.
    pub fn logicals_or_derive(&self) -> Result<Vec<LogicalPair>, CodeError> {
        match &self.logicals {
            Some(l) => Ok(l.clone()),
            None => self.derive_logicals(),
        }
    }

    pub fn to_descriptor(&self) -> CodeDescriptor {
        CodeDescriptor {
            name: self.name.clone(),
            n: self.n,
            k: self.k(),
            generators: self
                .generators
                .iter()
                .map(|g| HexPauli {
                    x: g.x_part().to_hex(),
                    z: g.z_part().to_hex(),
                })
                .collect(),
            ldpc: self.ldpc,
            logicals: self.logicals.as_ref().map(|ls| {
                ls.iter()
                    .map(|l| HexLogical {
                        x: HexPauli::from_op(&l.x),
                        z: HexPauli::from_op(&l.z),
                    })
                    .collect()
            }),
            css: self.css.as_ref().map(|c| CssDescriptor {
                hx: c.hx.to_sparse_string(),
                hz: c.hz.to_sparse_string(),
            }),
            distance: self.distance_hint,
        }
    }

    pub fn from_descriptor(d: &CodeDescriptor) -> Result<Self, CodeError> {
        let generators = d
            .generators
            .iter()
            .map(|g| g.to_op(d.n))
            .collect::<Result<Vec<_>, _>>()?;
        let mut code = match &d.css {
            Some(css) => {
                let hx = BinaryMatrix::parse_sparse(&css.hx)?;
                let hz = BinaryMatrix::parse_sparse(&css.hz)?;
                let code = Self::from_css(hx, hz)?;
                if code.n != d.n || code.generators != generators {
                    return Err(CodeError::Descriptor(
                        "css matrices disagree with the generator list".into(),
                    ));
                }
                code
            }
            None => Self::new(d.n, generators)?,
        };
        if code.k() != d.k || code.generators.len() + d.k != d.n {
            return Err(CodeError::Descriptor(format!(
                "declared k = {} but generators give n - rank = {} from {} generators",
                d.k,
                code.k(),
                code.generators.len()
            )));
        }
        code.ldpc = d.ldpc;
        code.name = d.name.clone();
        code.distance_hint = d.distance;
        if let Some(ls) = &d.logicals {
            let pairs = ls
                .iter()
                .map(|l| {
                    Ok(LogicalPair {
                        x: l.x.to_op(d.n)?,
                        z: l.z.to_op(d.n)?,
                    })
                })
                .collect::<Result<Vec<_>, CodeError>>()?;
            code = code.with_logicals(pairs)?;
        }
        Ok(code)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_descriptor()).expect("descriptor serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CodeError> {
        let d: CodeDescriptor = serde_json::from_str(text).map_err(|e| CodeError::Descriptor(e.to_string()))?;
        Self::from_descriptor(&d)
    }
}

/// A Pauli operator as a pair of hex-encoded bit strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HexPauli {
    pub x: String,
    pub z: String,
}

impl HexPauli {
    fn from_op(op: &PauliOperator) -> Self {
        Self {
            x: op.x_part().to_hex(),
            z: op.z_part().to_hex(),
        }
    }

    fn to_op(&self, n: usize) -> Result<PauliOperator, CodeError> {
        let x = BitVec::from_hex(n, &self.x)?;
        let z = BitVec::from_hex(n, &self.z)?;
        Ok(PauliOperator::from_parts(x, z)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HexLogical {
    pub x: HexPauli,
    pub z: HexPauli,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CssDescriptor {
    pub hx: String,
    pub hz: String,
}

/// JSON code descriptor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    pub k: usize,
    pub generators: Vec<HexPauli>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ldpc: Option<LdpcParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logicals: Option<Vec<HexLogical>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub css: Option<CssDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<usize>,
}

/// Calls `f` on every `w`-subset of `0..n` in lexicographic order until it
/// returns `true`.
pub(crate) fn any_combination(n: usize, w: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    if w > n {
        return false;
    }
    let mut idx: Vec<usize> = (0..w).collect();
    loop {
        if f(&idx) {
            return true;
        }
        // advance to the next combination
        let mut i = w;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if idx[i] < n - w + i {
                idx[i] += 1;
                for j in i + 1..w {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Calls `f` on every Pauli with exactly the given support (X < Y < Z per
/// site, first qubit slowest) until it returns `true`.
pub(crate) fn any_assignment(n: usize, support: &[usize], mut f: impl FnMut(&PauliOperator) -> bool) -> bool {
    let w = support.len();
    let total = 3usize.pow(w as u32);
    let mut op = PauliOperator::identity(n);
    for code in 0..total {
        let mut rem = code;
        for i in (0..w).rev() {
            op.set(support[i], Pauli::NON_IDENTITY[rem % 3]);
            rem /= 3;
        }
        if f(&op) {
            return true;
        }
    }
    false
}
