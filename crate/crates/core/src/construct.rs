//! Classical seed codes and the hypergraph product.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CodeError;
use crate::gf2::{BinaryMatrix, BitVec};
use crate::stabcode::{any_combination, LdpcParams, StabilizerCode};

/// A classical linear code given by its parity checks.
#[derive(Clone, Debug)]
pub struct ClassicalCode {
    pub h: BinaryMatrix,
    pub n: usize,
    pub k: usize,
    pub ldpc: Option<LdpcParams>,
    /// Minimum distance when known analytically or computed.
    pub distance: Option<usize>,
    /// Shortest cycle of the Tanner graph, `None` if acyclic.
    pub girth: Option<usize>,
    /// Parallel edges cancelled mod 2 by the socket construction.
    pub repeated_edges: usize,
}

impl ClassicalCode {
    pub fn from_matrix(h: BinaryMatrix) -> Self {
        let n = h.cols();
        let k = n - h.rank();
        let ldpc = LdpcParams {
            r: h.row_weights().into_iter().max().unwrap_or(0),
            c: h.col_weights().into_iter().max().unwrap_or(0),
        };
        let girth = tanner_girth(&h);
        Self {
            h,
            n,
            k,
            ldpc: Some(ldpc),
            distance: None,
            girth,
            repeated_edges: 0,
        }
    }

    pub fn is_full_rank(&self) -> bool {
        self.h.rows() + self.k == self.n
    }

    /// Copy keeping a maximal independent subset of checks (greedy in row order).
    pub fn reduced(&self) -> Self {
        let keep = self.h.independent_rows();
        let mut out = Self::from_matrix(self.h.select_rows(&keep));
        out.distance = self.distance;
        out
    }

    /// Minimum nonzero codeword weight up to `cap`, by increasing weight.
    pub fn min_distance(&self, cap: usize) -> Option<usize> {
        (1..=cap.min(self.n)).find(|&w| {
            any_combination(self.n, w, |support| {
                let v = BitVec::from_positions(self.n, support).expect("in range");
                self.h.mul_vec(&v).expect("dims").is_zero()
            })
        })
    }
}

pub fn repetition_code(l: usize) -> Result<ClassicalCode, CodeError> {
    if l < 2 {
        return Err(CodeError::Argument(format!("repetition length {l} < 2")));
    }
    let rows: Vec<Vec<usize>> = (0..l - 1).map(|i| vec![i, i + 1]).collect();
    let h = BinaryMatrix::from_sparse_rows(l - 1, l, &rows)?;
    let mut code = ClassicalCode::from_matrix(h);
    code.distance = Some(l);
    Ok(code)
}

/// The `[7, 4, 3]` Hamming code; column `j` is the binary expansion of `j + 1`.
pub fn hamming_7_4() -> ClassicalCode {
    let h = BinaryMatrix::from_dense_str("1010101;0110011;0001111").expect("literal");
    let mut code = ClassicalCode::from_matrix(h);
    code.distance = Some(3);
    code
}

/// Regular `(r, c)` Gallager ensemble: `c` stacked copies of a base block,
/// each under a random column permutation.
///
/// When `r` divides `n` the base block is `n/r` disjoint rows of weight `r`
/// and no parallel edges arise. Otherwise the `n·c` column sockets are
/// shuffled and cut into rows of `r`; parallel edges are accepted and counted
/// in `repeated_edges`.
pub fn random_gallager_ldpc(n: usize, r: usize, c: usize, seed: u64) -> Result<ClassicalCode, CodeError> {
    if n < 2 || r < 2 || c < 2 {
        return Err(CodeError::Argument("n, r, c must all be at least 2".into()));
    }
    if !(n * c).is_multiple_of(r) {
        return Err(CodeError::Argument(format!(
            "n·c = {} is not divisible by r = {r}",
            n * c
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = n * c / r;
    let mut rows: Vec<Vec<usize>> = Vec::with_capacity(m);
    if n.is_multiple_of(r) {
        let mut perm: Vec<usize> = (0..n).collect();
        for block in 0..c {
            if block > 0 {
                perm.shuffle(&mut rng);
            }
            rows.extend(perm.chunks(r).map(<[usize]>::to_vec));
        }
    } else {
        let mut sockets: Vec<usize> = (0..n).flat_map(|q| std::iter::repeat_n(q, c)).collect();
        sockets.shuffle(&mut rng);
        rows.extend(sockets.chunks(r).map(<[usize]>::to_vec));
    }
    let mut h = BinaryMatrix::zeros(m, n);
    let mut repeated_edges = 0;
    for (i, row) in rows.iter().enumerate() {
        for &q in row {
            if h.get(i, q) {
                repeated_edges += 1;
            }
            h.set(i, q, !h.get(i, q));
        }
    }
    let mut code = ClassicalCode::from_matrix(h);
    code.ldpc = Some(LdpcParams { r, c });
    code.repeated_edges = repeated_edges;
    Ok(code)
}

/// Shortest cycle in the bipartite Tanner graph of `h`.
pub fn tanner_girth(h: &BinaryMatrix) -> Option<usize> {
    let m = h.rows();
    let n = h.cols();
    // nodes 0..n are bits, n..n+m are checks
    let mut adj = vec![Vec::new(); n + m];
    for r in 0..m {
        for q in h.row_support(r) {
            adj[q].push(n + r);
            adj[n + r].push(q);
        }
    }
    let mut best: Option<usize> = None;
    let mut dist = vec![usize::MAX; n + m];
    let mut parent = vec![usize::MAX; n + m];
    for root in 0..n + m {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[root] = 0;
        parent[root] = usize::MAX;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    parent[v] = u;
                    queue.push_back(v);
                } else if parent[u] != v {
                    let len = dist[u] + dist[v] + 1;
                    best = Some(best.map_or(len, |b| b.min(len)));
                }
            }
        }
    }
    best
}

/// Hypergraph product of a full-rank seed `H` (m × n):
/// `H_x = (H ⊗ I_n | I_m ⊗ Hᵀ)`, `H_z = (I_n ⊗ H | Hᵀ ⊗ I_m)`.
///
/// For an `(r, c)` seed each generator has weight at most `r + c` and each
/// qubit meets at most `max(r, c)` generators of each type, so the advertised
/// certificate counting both types is `(r + c, 2·max(r, c))`.
pub fn hypergraph_product(cl: &ClassicalCode) -> Result<StabilizerCode, CodeError> {
    if !cl.is_full_rank() {
        return Err(CodeError::Argument(format!(
            "parity-check matrix has {} rows but rank {}; reduce it first",
            cl.h.rows(),
            cl.n - cl.k
        )));
    }
    let h = &cl.h;
    let ht = h.transpose();
    let n = cl.n;
    let m = h.rows();
    let i_n = BinaryMatrix::identity(n);
    let i_m = BinaryMatrix::identity(m);
    let hx = h.kron(&i_n).hconcat(&i_m.kron(&ht))?;
    let hz = i_n.kron(h).hconcat(&ht.kron(&i_m))?;
    let mut code = StabilizerCode::from_css(hx, hz)?;
    if let Some(p) = cl.ldpc {
        code = code.with_ldpc(LdpcParams {
            r: p.r + p.c,
            c: 2 * p.r.max(p.c),
        });
    }
    if let Some(d) = cl.distance {
        code = code.with_distance_hint(d);
    }
    Ok(code)
}

/// Hypergraph product after dropping dependent checks of the seed.
pub fn hypergraph_product_reduced(cl: &ClassicalCode) -> Result<StabilizerCode, CodeError> {
    if cl.is_full_rank() {
        hypergraph_product(cl)
    } else {
        hypergraph_product(&cl.reduced())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SeedKind {
    Repetition,
    Hamming,
    Gallager { r: usize, c: usize, seed: u64 },
}

impl SeedKind {
    pub fn build(&self, size: usize) -> Result<ClassicalCode, CodeError> {
        match *self {
            SeedKind::Repetition => repetition_code(size),
            SeedKind::Hamming => {
                if size != 7 {
                    return Err(CodeError::Argument("the Hamming seed has length 7".into()));
                }
                Ok(hamming_7_4())
            }
            SeedKind::Gallager { r, c, seed } => random_gallager_ldpc(size, r, c, seed),
        }
    }
}

/// A family of product codes ordered by size.
#[derive(Clone, Debug)]
pub struct CodeFamily {
    pub members: Vec<StabilizerCode>,
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    /// `n_i - n_{i-1}` for consecutive members.
    pub gaps: Vec<usize>,
    /// Largest `ln(gap_i) / ln(n_{i-1})`; absent for a single member.
    pub beta: Option<f64>,
}

pub fn code_family(seed: SeedKind, sizes: &[usize]) -> Result<CodeFamily, CodeError> {
    if sizes.is_empty() {
        return Err(CodeError::Argument("empty size list".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CodeError::Argument("sizes must be strictly increasing".into()));
    }
    let members = sizes
        .iter()
        .map(|&s| {
            let code = hypergraph_product_reduced(&seed.build(s)?)?;
            let name = match seed {
                SeedKind::Repetition => format!("hp-rep{s}"),
                SeedKind::Hamming => "hp-hamming7".to_string(),
                SeedKind::Gallager { r, c, seed } => format!("hp-gallager{s}-{r}-{c}-{seed}"),
            };
            Ok(code.with_name(name))
        })
        .collect::<Result<Vec<_>, CodeError>>()?;
    let n: Vec<usize> = members.iter().map(StabilizerCode::n).collect();
    let k: Vec<usize> = members.iter().map(StabilizerCode::k).collect();
    let gaps: Vec<usize> = n.windows(2).map(|w| w[1] - w[0]).collect();
    let beta = n
        .windows(2)
        .map(|w| ((w[1] - w[0]) as f64).ln() / (w[0] as f64).ln())
        .fold(None, |acc: Option<f64>, b| Some(acc.map_or(b, |a| a.max(b))));
    Ok(CodeFamily {
        members,
        n,
        k,
        gaps,
        beta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repetition_examples() {
        let r2 = repetition_code(2).unwrap();
        assert_eq!(r2.h.to_sparse_string(), "1 2\n1 2\n");
        let r3 = repetition_code(3).unwrap();
        assert_eq!(r3.k, 1);
        assert_eq!(r3.h, BinaryMatrix::from_dense_str("110;011").unwrap());
        let r5 = repetition_code(5).unwrap();
        assert_eq!(r5.h.rows(), 4);
        assert_eq!(r5.min_distance(5), Some(5));
        assert!(repetition_code(1).is_err());
    }

    #[test]
    fn gallager_examples() {
        let g = random_gallager_ldpc(4, 2, 2, 7).unwrap();
        assert_eq!(g.h.rows(), 4);
        assert!(g.h.row_weights().iter().all(|&w| w == 2));
        assert!(g.h.col_weights().iter().all(|&w| w == 2));
        let g = random_gallager_ldpc(12, 4, 2, 1).unwrap();
        assert_eq!(g.h.rows(), 6);
        assert!(g.h.row_weights().iter().all(|&w| w == 4));
        assert_eq!(
            random_gallager_ldpc(12, 4, 2, 99).unwrap().h,
            random_gallager_ldpc(12, 4, 2, 99).unwrap().h
        );
        assert!(random_gallager_ldpc(5, 3, 2, 0).is_err());
    }

    #[test]
    fn girth_of_small_graphs() {
        // repetition code Tanner graph is a path
        assert_eq!(tanner_girth(&repetition_code(4).unwrap().h), None);
        // two checks sharing two bits form a 4-cycle
        assert_eq!(tanner_girth(&BinaryMatrix::from_dense_str("110;110").unwrap()), Some(4));
        assert_eq!(hamming_7_4().girth, Some(4));
    }

    #[test]
    fn product_parameters() {
        let c13 = hypergraph_product(&repetition_code(3).unwrap()).unwrap();
        assert_eq!((c13.n(), c13.k()), (13, 1));
        let c58 = hypergraph_product(&hamming_7_4()).unwrap();
        assert_eq!((c58.n(), c58.k()), (58, 16));
        let css = c58.css().unwrap();
        assert!(css.hx.mul(&css.hz.transpose()).unwrap().is_zero());
        let report = c58.validate();
        assert!(report.is_valid());
        let t = report.per_sector.unwrap();
        assert!(t.r <= 7 && t.c <= 4);
        assert!(report.tightest.c <= 8);
    }

    #[test]
    fn rank_deficient_seed_rejected_unless_reduced() {
        let h = BinaryMatrix::from_dense_str("110;011;101").unwrap();
        let cl = ClassicalCode::from_matrix(h);
        assert!(hypergraph_product(&cl).is_err());
        let code = hypergraph_product_reduced(&cl).unwrap();
        assert_eq!((code.n(), code.k()), (13, 1));
    }

    #[test]
    fn family_examples() {
        let f = code_family(SeedKind::Repetition, &[3, 5, 7]).unwrap();
        assert_eq!(f.n, vec![13, 41, 85]);
        let f = code_family(SeedKind::Repetition, &[3]).unwrap();
        assert_eq!(f.beta, None);
        let f = code_family(SeedKind::Repetition, &[3, 4, 5]).unwrap();
        assert_eq!(f.gaps, vec![12, 16]);
        assert!(code_family(SeedKind::Repetition, &[5, 3]).is_err());
    }
}
