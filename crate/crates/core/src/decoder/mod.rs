//! Static and space-time minimum-weight decoding, residual extraction, and
//! failure-cluster diagnostics.
//!
//! Both decoders reduce to a [`DecodingProblem`]: the static problem has one
//! mechanism per qubit (alternatives X, Y, Z) and one detector per syndrome
//! bit; the space-time problem has, per round `t`, a data mechanism per qubit
//! flipping the bits of `Δ_t` and a syndrome mechanism per bit flipping
//! `Δ_t` and `Δ_{t+1}`.

pub mod solver;

use std::cmp::Ordering;
use std::sync::OnceLock;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::DecodeError;
use crate::gf2::BitVec;
use crate::graphs::{adjacency_graph, clusters_with_errors, Graph, SpaceTimeNode, SyndromeAdjacencyGraph};
use crate::noise::FaultPath;
use crate::pauli::{Pauli, PauliOperator};
use crate::stabcode::{OperatorClass, StabilizerCode};

pub use solver::{DecodingProblem, ExactSolver, GreedyConfig, Selection, TieBreak, DEFAULT_TABLE_LIMIT};

/// Largest syndrome length for which the static decoder tabulates every syndrome.
pub const FULL_TABLE_MAX_CHECKS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeStatus {
    Success,
    LogicalFailure,
    SpanningClusterFailure,
    DecoderCapExceeded,
    /// No ground truth was supplied.
    Unverified,
}

impl DecodeStatus {
    pub fn is_failure(self) -> bool {
        matches!(
            self,
            DecodeStatus::LogicalFailure | DecodeStatus::SpanningClusterFailure | DecodeStatus::DecoderCapExceeded
        )
    }
}

/// Which solver a decoder uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecoderKind {
    /// Exact minimum weight up to `cap`.
    Exact { cap: usize },
    GreedyCluster {
        local_cap: usize,
        node_budget: u64,
        max_growth: usize,
    },
}

impl DecoderKind {
    pub fn greedy_default() -> Self {
        let g = GreedyConfig::default();
        DecoderKind::GreedyCluster {
            local_cap: g.local_cap,
            node_budget: g.node_budget,
            max_growth: g.max_growth,
        }
    }

    fn greedy_config(&self) -> Option<GreedyConfig> {
        match *self {
            DecoderKind::GreedyCluster {
                local_cap,
                node_budget,
                max_growth,
            } => Some(GreedyConfig {
                local_cap,
                node_budget,
                max_growth,
            }),
            DecoderKind::Exact { .. } => None,
        }
    }
}

fn pauli_of_alt(a: u8) -> Pauli {
    Pauli::NON_IDENTITY[a as usize]
}

/// Static problem: mechanism `q` is qubit `q` with alternatives X, Y, Z.
pub fn static_problem(code: &StabilizerCode) -> DecodingProblem {
    let flips = (0..code.n())
        .map(|q| {
            Pauli::NON_IDENTITY
                .iter()
                .map(|&p| {
                    code.syndrome_unchecked(&PauliOperator::single(code.n(), q, p))
                        .iter_ones()
                        .map(|b| b as u32)
                        .collect()
                })
                .collect()
        })
        .collect();
    DecodingProblem::new(code.num_checks(), flips)
}

fn selection_to_pauli(n: usize, sel: &[(u32, u8)]) -> PauliOperator {
    let mut op = PauliOperator::identity(n);
    for &(q, a) in sel {
        op.apply(q as usize, pauli_of_alt(a));
    }
    op
}

/// Minimum-weight static decoder; ties go to the lexicographically smallest
/// `(x_part, z_part)`.
#[derive(Clone, Debug)]
pub struct StaticDecoder {
    n: usize,
    checks: usize,
    problem: DecodingProblem,
    table: StaticTable,
    greedy: Option<GreedyConfig>,
    random_ties: OnceLock<ExactSolver>,
}

#[derive(Clone, Debug)]
enum StaticTable {
    /// Indexed by the syndrome read as an integer (bit `i` = check `i`).
    Full(Vec<Option<PauliOperator>>),
    Mitm(ExactSolver),
    None,
}

fn static_cmp(n: usize) -> impl Fn(&Selection, &Selection) -> Ordering {
    move |a, b| selection_to_pauli(n, a).lex_cmp(&selection_to_pauli(n, b))
}

impl StaticDecoder {
    /// Exact decoder: a full syndrome table for short syndromes, otherwise a
    /// meet-in-the-middle table.
    pub fn exact(code: &StabilizerCode) -> Self {
        let problem = static_problem(code);
        let m = code.num_checks();
        let table = if m <= FULL_TABLE_MAX_CHECKS && code.n() <= 32 {
            StaticTable::Full(full_table(code, &problem))
        } else {
            StaticTable::Mitm(ExactSolver::new(&problem, DEFAULT_TABLE_LIMIT))
        };
        Self {
            n: code.n(),
            checks: m,
            problem,
            table,
            greedy: None,
            random_ties: OnceLock::new(),
        }
    }

    /// Cluster-based decoder for codes too large for exact search.
    pub fn greedy(code: &StabilizerCode, config: GreedyConfig) -> Self {
        Self {
            n: code.n(),
            checks: code.num_checks(),
            problem: static_problem(code),
            table: StaticTable::None,
            greedy: Some(config),
            random_ties: OnceLock::new(),
        }
    }

    pub fn for_kind(code: &StabilizerCode, kind: &DecoderKind) -> Self {
        match kind.greedy_config() {
            Some(cfg) => Self::greedy(code, cfg),
            None => Self::exact(code),
        }
    }

    fn check_len(&self, syndrome: &BitVec) -> Result<(), DecodeError> {
        if syndrome.len() != self.checks {
            return Err(DecodeError::Dimension(format!(
                "syndrome has {} bits, code has {} checks",
                syndrome.len(),
                self.checks
            )));
        }
        Ok(())
    }

    /// A minimum-weight Pauli with the given syndrome and weight at most `cap`.
    pub fn decode(&self, syndrome: &BitVec, cap: usize) -> Result<PauliOperator, DecodeError> {
        self.check_len(syndrome)?;
        let target = self.problem.pattern_of(syndrome.iter_ones());
        let cmp = static_cmp(self.n);
        match (&self.table, self.greedy) {
            (StaticTable::Full(t), _) => {
                let idx = syndrome_index(syndrome);
                match &t[idx] {
                    Some(op) if op.weight() <= cap => Ok(op.clone()),
                    _ => Err(DecodeError::NotFound { cap }),
                }
            }
            (StaticTable::Mitm(s), _) => {
                let sel = s.solve(&self.problem, &target, cap, &mut TieBreak::Canonical(&cmp))?;
                Ok(selection_to_pauli(self.n, &sel))
            }
            (StaticTable::None, Some(cfg)) => {
                let sel = solver::greedy_solve(&self.problem, &target, &cfg, &cmp)?;
                Ok(selection_to_pauli(self.n, &sel))
            }
            (StaticTable::None, None) => unreachable!("static decoder without a solver"),
        }
    }

    /// Minimum-weight decoding with uniformly random tie-breaking.
    pub fn decode_random_ties(
        &self,
        syndrome: &BitVec,
        cap: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<PauliOperator, DecodeError> {
        self.check_len(syndrome)?;
        let target = self.problem.pattern_of(syndrome.iter_ones());
        let solver = match &self.table {
            StaticTable::Mitm(s) => s,
            _ => self
                .random_ties
                .get_or_init(|| ExactSolver::new(&self.problem, DEFAULT_TABLE_LIMIT)),
        };
        let sel = solver.solve(&self.problem, &target, cap, &mut TieBreak::Random(rng))?;
        Ok(selection_to_pauli(self.n, &sel))
    }
}

fn syndrome_index(s: &BitVec) -> usize {
    s.iter_ones().fold(0usize, |acc, b| acc | (1 << b))
}

/// Lexicographically smallest minimum-weight Pauli for every syndrome,
/// by enumeration in increasing weight until all syndromes are reached.
fn full_table(code: &StabilizerCode, problem: &DecodingProblem) -> Vec<Option<PauliOperator>> {
    let m = code.num_checks();
    let n = code.n();
    let size = 1usize << m;
    let mut table: Vec<Option<PauliOperator>> = vec![None; size];
    let mut filled = 0usize;
    // weight-0: identity
    table[0] = Some(PauliOperator::identity(n));
    filled += 1;
    let cols: Vec<[usize; 3]> = (0..n)
        .map(|q| {
            let mut out = [0usize; 3];
            for (a, slot) in out.iter_mut().enumerate() {
                *slot = problem.flips(q, a).iter().fold(0usize, |acc, &b| acc | (1 << b));
            }
            out
        })
        .collect();
    let mut w = 1;
    while filled < size && w <= n {
        let mut level: Vec<Option<PauliOperator>> = vec![None; size];
        let mut support: Vec<usize> = (0..w).collect();
        loop {
            for code_idx in 0..3usize.pow(w as u32) {
                let mut rem = code_idx;
                let mut synd = 0usize;
                let mut alts = [0usize; 64];
                for i in (0..w).rev() {
                    alts[i] = rem % 3;
                    synd ^= cols[support[i]][rem % 3];
                    rem /= 3;
                }
                if table[synd].is_some() {
                    continue;
                }
                let mut op = PauliOperator::identity(n);
                for i in 0..w {
                    op.set(support[i], Pauli::NON_IDENTITY[alts[i]]);
                }
                match &level[synd] {
                    Some(cur) if cur.lex_cmp(&op) != Ordering::Greater => {}
                    _ => level[synd] = Some(op),
                }
            }
            if !next_combination(&mut support, n) {
                break;
            }
        }
        for (s, op) in level.into_iter().enumerate() {
            if let Some(op) = op {
                table[s] = Some(op);
                filled += 1;
            }
        }
        w += 1;
    }
    table
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let w = idx.len();
    let mut i = w;
    while i > 0 {
        i -= 1;
        if idx[i] < n - w + i {
            idx[i] += 1;
            for j in i + 1..w {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Observed syndrome differences `Δ_1..Δ_T`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyndromeRecord {
    pub rounds: Vec<BitVec>,
}

impl SyndromeRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DecodeError> {
        serde_json::from_str(text).map_err(|e| DecodeError::Dimension(e.to_string()))
    }
}

/// Space-time problem over `T` rounds. Mechanisms are ordered by round; within
/// a round the data mechanisms (qubit order, alternatives X, Y, Z) come before
/// the syndrome mechanisms (bit order). Detector `(t-1)·m + b` is bit `b` of `Δ_t`.
pub fn spacetime_problem(code: &StabilizerCode, rounds: usize) -> DecodingProblem {
    let n = code.n();
    let m = code.num_checks();
    let single: Vec<Vec<Vec<u32>>> = (0..n)
        .map(|q| {
            Pauli::NON_IDENTITY
                .iter()
                .map(|&p| {
                    code.syndrome_unchecked(&PauliOperator::single(n, q, p))
                        .iter_ones()
                        .map(|b| b as u32)
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut flips = Vec::with_capacity(rounds * (n + m));
    for t in 0..rounds {
        let base = (t * m) as u32;
        for alts in &single {
            flips.push(alts.iter().map(|ds| ds.iter().map(|&b| base + b).collect()).collect());
        }
        for b in 0..m as u32 {
            let mut ds = vec![base + b];
            if t + 1 < rounds {
                ds.push(base + m as u32 + b);
            }
            flips.push(vec![ds]);
        }
    }
    DecodingProblem::new(rounds * m, flips)
}

/// A decoded space-time history, with evaluation against ground truth when
/// available.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    /// Product of the deduced data errors `∏ E_t`.
    pub correction: PauliOperator,
    /// Deduced `E_t` (initialization folded into round 1) and `C_t`.
    pub deduced: FaultPath,
    /// Lowest-weight error with syndrome `B_T ⊕ C_T`; needs ground truth.
    pub residual_estimate: Option<PauliOperator>,
    pub status: DecodeStatus,
    pub weight: usize,
    pub diagnostics: Option<ClusterReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterInfo {
    pub size: usize,
    pub errors: usize,
    /// Earliest and latest time layer (space-time clusters only).
    pub t_min: usize,
    pub t_max: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub clusters: Vec<ClusterInfo>,
    /// The composite error acts as a non-trivial logical operator.
    pub logical: bool,
    /// Some cluster reaches from layer 1 to layer `T+1`.
    pub spanning: bool,
    /// Some cluster has `s >= d` and at least `⌈s/2⌉` actual errors.
    pub witness_half: bool,
    /// Some cluster has `s >= d` or spans, with at least `s/4` actual errors.
    pub witness_quarter: bool,
}

impl ClusterReport {
    fn from_clusters(clusters: Vec<ClusterInfo>, d: usize, logical: bool, last_layer: Option<usize>) -> Self {
        let spanning = last_layer.is_some_and(|last| clusters.iter().any(|c| c.t_min == 1 && c.t_max == last));
        let witness_half = clusters.iter().any(|c| c.size >= d && 2 * c.errors >= c.size);
        let witness_quarter = clusters.iter().any(|c| {
            let spans = last_layer.is_some_and(|last| c.t_min == 1 && c.t_max == last);
            (c.size >= d || spans) && 4 * c.errors >= c.size
        });
        Self {
            clusters,
            logical,
            spanning,
            witness_half,
            witness_quarter,
        }
    }
}

/// Clusters of `supp(actual · correction)` on the adjacency graph, each with
/// its count of actually errored qubits.
pub fn static_diagnostics(
    code: &StabilizerCode,
    graph: &Graph,
    actual: &PauliOperator,
    correction: &PauliOperator,
    d: usize,
) -> ClusterReport {
    let composite = actual.mul(correction);
    let marked = composite.support();
    let mask: Vec<bool> = (0..code.n()).map(|q| actual.get(q) != Pauli::I).collect();
    let clusters = clusters_with_errors(&marked, &mask, graph)
        .into_iter()
        .map(|c| ClusterInfo {
            size: c.size(),
            errors: c.errors,
            t_min: 0,
            t_max: 0,
        })
        .collect();
    let logical = code
        .classify(&composite)
        .map(|c| c == OperatorClass::Logical)
        .unwrap_or(false);
    ClusterReport::from_clusters(clusters, d, logical, None)
}

/// Marks `(x, t)` where `E_t F_t` acts on `x` (initialization counted in
/// round 1), `(b, t)` where `B_t ⊕ C_t` is set, and `(x, T+1)` on the support
/// of `G`; actual errors are the nodes of `F_t` and `B_t`.
pub fn spacetime_diagnostics(
    code: &StabilizerCode,
    sag: &SyndromeAdjacencyGraph,
    truth: &FaultPath,
    deduced: &FaultPath,
    residual: &PauliOperator,
    d: usize,
) -> ClusterReport {
    let rounds = truth.rounds();
    let mut marked = Vec::new();
    let mut actual = vec![false; sag.node_count()];
    for t in 1..=rounds {
        let mut f = truth.data_errors[t - 1].clone();
        if t == 1 {
            f.mul_assign(&truth.init_error);
        }
        let mut e = deduced.data_errors[t - 1].clone();
        if t == 1 {
            e.mul_assign(&deduced.init_error);
        }
        for x in f.mul(&e).support() {
            marked.push(sag.qubit(x, t));
        }
        for x in f.support() {
            actual[sag.qubit(x, t)] = true;
        }
        let bc = truth.synd_errors[t - 1].xor(&deduced.synd_errors[t - 1]);
        for b in bc.iter_ones() {
            marked.push(sag.check(b, t));
        }
        for b in truth.synd_errors[t - 1].iter_ones() {
            actual[sag.check(b, t)] = true;
        }
    }
    for x in residual.support() {
        marked.push(sag.qubit(x, rounds + 1));
    }
    let clusters = clusters_with_errors(&marked, &actual, sag.graph())
        .into_iter()
        .map(|c| {
            let times = c.nodes.iter().map(|&v| sag.time(v));
            let t_min = times.clone().min().unwrap_or(0);
            // a check node (b, t) reaches qubit layer t+1
            let t_max = c
                .nodes
                .iter()
                .map(|&v| match sag.node(v) {
                    SpaceTimeNode::Qubit { t, .. } => t,
                    SpaceTimeNode::Check { t, .. } => t,
                })
                .max()
                .unwrap_or(0);
            ClusterInfo {
                size: c.size(),
                errors: c.errors,
                t_min,
                t_max,
            }
        })
        .collect();
    let composite = truth.cumulative_error().mul(&deduced.cumulative_error()).mul(residual);
    let logical = code
        .classify(&composite)
        .map(|c| c == OperatorClass::Logical)
        .unwrap_or(false);
    ClusterReport::from_clusters(clusters, d, logical, Some(rounds + 1))
}

/// Space-time decoder for a fixed code and round count.
#[derive(Clone, Debug)]
pub struct SpaceTimeDecoder {
    code: StabilizerCode,
    rounds: usize,
    kind: DecoderKind,
    problem: DecodingProblem,
    exact: Option<ExactSolver>,
    residual: StaticDecoder,
    sag: SyndromeAdjacencyGraph,
    distance: usize,
}

impl SpaceTimeDecoder {
    /// `distance` is the `d` used by the cluster predicates.
    pub fn new(code: &StabilizerCode, rounds: usize, kind: DecoderKind, distance: usize) -> Result<Self, DecodeError> {
        let sag = SyndromeAdjacencyGraph::new(code, rounds).map_err(|e| DecodeError::Dimension(e.to_string()))?;
        let problem = spacetime_problem(code, rounds);
        let exact = match kind {
            DecoderKind::Exact { .. } => Some(ExactSolver::new(&problem, DEFAULT_TABLE_LIMIT)),
            DecoderKind::GreedyCluster { .. } => None,
        };
        Ok(Self {
            code: code.clone(),
            rounds,
            kind,
            problem,
            exact,
            residual: StaticDecoder::for_kind(code, &kind),
            sag,
            distance,
        })
    }

    pub fn code(&self) -> &StabilizerCode {
        &self.code
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn sag(&self) -> &SyndromeAdjacencyGraph {
        &self.sag
    }

    fn selection_to_path(&self, sel: &[(u32, u8)]) -> FaultPath {
        let n = self.code.n();
        let m = self.code.num_checks();
        let mut fp = FaultPath::empty(n, m, self.rounds);
        for &(mech, a) in sel {
            let mech = mech as usize;
            let t = mech / (n + m);
            let i = mech % (n + m);
            if i < n {
                fp.data_errors[t].apply(i, pauli_of_alt(a));
            } else {
                fp.synd_errors[t].flip(i - n);
            }
        }
        fp
    }

    /// Minimum-weight fault path explaining `deltas`, without evaluation.
    pub fn deduce(&self, deltas: &[BitVec]) -> Result<FaultPath, DecodeError> {
        let m = self.code.num_checks();
        if deltas.len() != self.rounds || deltas.iter().any(|d| d.len() != m) {
            return Err(DecodeError::Dimension(format!(
                "expected {} rounds of {m} bits",
                self.rounds
            )));
        }
        let target = self.problem.pattern_of(
            deltas
                .iter()
                .enumerate()
                .flat_map(|(t, d)| d.iter_ones().map(move |b| t * m + b)),
        );
        let cmp = |a: &Selection, b: &Selection| a.cmp(b);
        let sel = match (&self.kind, &self.exact) {
            (DecoderKind::Exact { cap }, Some(solver)) => {
                solver.solve(&self.problem, &target, *cap, &mut TieBreak::Canonical(&cmp))?
            }
            _ => {
                let cfg = self.kind.greedy_config().expect("greedy kind");
                solver::greedy_solve(&self.problem, &target, &cfg, &cmp)?
            }
        };
        Ok(self.selection_to_path(&sel))
    }

    /// Decodes `deltas`; with `truth`, computes the residual `G` from the
    /// ideal final syndrome `B_T ⊕ C_T` and classifies the outcome.
    pub fn decode(&self, deltas: &[BitVec], truth: Option<&FaultPath>) -> Result<DecodeResult, DecodeError> {
        let deduced = self.deduce(deltas)?;
        let correction = deduced.cumulative_error();
        let weight = deduced.weight();
        let Some(truth) = truth else {
            return Ok(DecodeResult {
                correction,
                deduced,
                residual_estimate: None,
                status: DecodeStatus::Unverified,
                weight,
                diagnostics: None,
            });
        };
        truth
            .check_dims(&self.code)
            .map_err(|e| DecodeError::Dimension(e.to_string()))?;
        let last = self.rounds - 1;
        let final_syndrome = truth.synd_errors[last].xor(&deduced.synd_errors[last]);
        debug_assert_eq!(
            final_syndrome,
            self.code.syndrome_unchecked(&truth.cumulative_error().mul(&correction))
        );
        let g = self.residual.decode(&final_syndrome, self.code.n())?;
        let report = spacetime_diagnostics(&self.code, &self.sag, truth, &deduced, &g, self.distance);
        let status = if report.logical {
            DecodeStatus::LogicalFailure
        } else if report.spanning {
            DecodeStatus::SpanningClusterFailure
        } else {
            DecodeStatus::Success
        };
        Ok(DecodeResult {
            correction,
            deduced,
            residual_estimate: Some(g),
            status,
            weight,
            diagnostics: Some(report),
        })
    }
}

/// Static decode of the final accumulated syndrome with ground truth: the
/// correction `E`, the residual `G` (trivial when measurements are perfect)
/// and the status of `(actual · E · G)`.
pub fn evaluate_static(
    code: &StabilizerCode,
    decoder: &StaticDecoder,
    graph: &Graph,
    truth: &FaultPath,
    deltas: &[BitVec],
    cap: usize,
    d: usize,
) -> Result<DecodeResult, DecodeError> {
    let mut syndrome = BitVec::zeros(code.num_checks());
    for delta in deltas {
        syndrome.xor_assign(delta);
    }
    let correction = decoder.decode(&syndrome, cap)?;
    let actual = truth.cumulative_error();
    let leftover = code.syndrome_unchecked(&actual.mul(&correction));
    let g = decoder.decode(&leftover, code.n())?;
    let with_g = correction.mul(&g);
    let report = static_diagnostics(code, graph, &actual, &with_g, d);
    let status = if report.logical {
        DecodeStatus::LogicalFailure
    } else {
        DecodeStatus::Success
    };
    let mut deduced = FaultPath::for_code(code, truth.rounds());
    deduced.data_errors[truth.rounds() - 1] = correction.clone();
    Ok(DecodeResult {
        weight: correction.weight(),
        correction,
        deduced,
        residual_estimate: Some(g),
        status,
        diagnostics: Some(report),
    })
}

/// Adjacency graph helper re-exported for diagnostics callers.
pub fn code_graph(code: &StabilizerCode) -> Graph {
    adjacency_graph(code)
}
