//! Minimum-weight selection of fault mechanisms reproducing a detector
//! pattern: an exact meet-in-the-middle search and a greedy cluster search.
//!
//! A mechanism is one fallible location with one or more alternatives (e.g.
//! X, Y, Z on a qubit); choosing an alternative flips a fixed set of
//! detectors. A selection uses each mechanism at most once and has unit
//! weight per mechanism.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::DecodeError;

/// `(mechanism, alternative)` pairs, sorted by mechanism.
pub type Selection = Vec<(u32, u8)>;

pub type Pattern = Box<[u64]>;

#[derive(Clone, Debug)]
pub struct DecodingProblem {
    num_detectors: usize,
    words: usize,
    /// `flips[m][a]`: detectors flipped by alternative `a` of mechanism `m`.
    flips: Vec<Vec<Vec<u32>>>,
    patterns: Vec<Vec<Pattern>>,
    detector_mechs: Vec<Vec<u32>>,
    detector_adj: Vec<Vec<u32>>,
    max_flip: usize,
}

impl DecodingProblem {
    pub fn new(num_detectors: usize, flips: Vec<Vec<Vec<u32>>>) -> Self {
        let words = num_detectors.div_ceil(64).max(1);
        let mut detector_mechs = vec![Vec::new(); num_detectors];
        let mut detector_adj = vec![Vec::new(); num_detectors];
        let mut max_flip = 0;
        let patterns = flips
            .iter()
            .enumerate()
            .map(|(m, alts)| {
                let mut touched: Vec<u32> = alts.iter().flatten().copied().collect();
                touched.sort_unstable();
                touched.dedup();
                for &d in &touched {
                    detector_mechs[d as usize].push(m as u32);
                    for &e in &touched {
                        if e != d {
                            detector_adj[d as usize].push(e);
                        }
                    }
                }
                alts.iter()
                    .map(|ds| {
                        max_flip = max_flip.max(ds.len());
                        let mut p = vec![0u64; words];
                        for &d in ds {
                            p[d as usize / 64] ^= 1 << (d % 64);
                        }
                        p.into_boxed_slice()
                    })
                    .collect()
            })
            .collect();
        for list in &mut detector_adj {
            list.sort_unstable();
            list.dedup();
        }
        Self {
            num_detectors,
            words,
            flips,
            patterns,
            detector_mechs,
            detector_adj,
            max_flip,
        }
    }

    pub fn num_detectors(&self) -> usize {
        self.num_detectors
    }

    pub fn num_mechanisms(&self) -> usize {
        self.flips.len()
    }

    pub fn flips(&self, m: usize, alt: usize) -> &[u32] {
        &self.flips[m][alt]
    }

    pub fn zero_pattern(&self) -> Pattern {
        vec![0u64; self.words].into_boxed_slice()
    }

    pub fn pattern_of(&self, detectors: impl IntoIterator<Item = usize>) -> Pattern {
        let mut p = self.zero_pattern();
        for d in detectors {
            p[d / 64] ^= 1 << (d % 64);
        }
        p
    }

    /// Detector pattern produced by a selection.
    pub fn apply(&self, sel: &[(u32, u8)]) -> Pattern {
        let mut p = self.zero_pattern();
        for &(m, a) in sel {
            xor_into(&mut p, &self.patterns[m as usize][a as usize]);
        }
        p
    }
}

#[inline]
fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

fn lowest_set(p: &[u64]) -> Option<usize> {
    p.iter()
        .enumerate()
        .find(|(_, &w)| w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

fn popcount(p: &[u64]) -> usize {
    p.iter().map(|w| w.count_ones() as usize).sum()
}

/// How to choose among several minimum-weight selections.
pub enum TieBreak<'a> {
    /// Smallest under the comparator.
    Canonical(&'a dyn Fn(&Selection, &Selection) -> Ordering),
    /// Uniform among ties (reservoir sampling).
    Random(&'a mut ChaCha8Rng),
}

struct Chooser<'a, 'b> {
    tie: &'b mut TieBreak<'a>,
    best: Option<Selection>,
    ties: u64,
}

impl<'a, 'b> Chooser<'a, 'b> {
    fn new(tie: &'b mut TieBreak<'a>) -> Self {
        Self {
            tie,
            best: None,
            ties: 0,
        }
    }

    fn offer(&mut self, cand: Selection) {
        self.ties += 1;
        match &mut self.tie {
            TieBreak::Canonical(cmp) => {
                if self.best.as_ref().is_none_or(|b| cmp(&cand, b) == Ordering::Less) {
                    self.best = Some(cand);
                }
            }
            TieBreak::Random(rng) => {
                if rng.gen_range(0..self.ties) == 0 {
                    self.best = Some(cand);
                }
            }
        }
    }
}

/// Default limit on the number of stored selections in the MITM table.
pub const DEFAULT_TABLE_LIMIT: usize = 1 << 21;

/// Exact minimum-weight search: a table of all selections of weight at most
/// `h`, keyed by pattern, joined with enumerated prefixes for larger weights.
#[derive(Clone, Debug)]
pub struct ExactSolver {
    half: usize,
    table: HashMap<Pattern, Vec<Selection>>,
}

impl ExactSolver {
    pub fn new(problem: &DecodingProblem, table_limit: usize) -> Self {
        let half = table_half_weight(problem, table_limit);
        let mut table: HashMap<Pattern, Vec<Selection>> = HashMap::new();
        for w in 0..=half {
            enumerate(
                problem,
                w,
                0,
                &mut Vec::new(),
                &mut problem.zero_pattern(),
                &mut |sel, p| {
                    table.entry(p.clone()).or_default().push(sel.to_vec());
                    true
                },
            );
        }
        Self { half, table }
    }

    /// Largest weight stored in the table.
    pub fn half(&self) -> usize {
        self.half
    }

    /// Minimum-weight selection with pattern `target`, searching weights up
    /// to `cap`.
    pub fn solve(
        &self,
        problem: &DecodingProblem,
        target: &Pattern,
        cap: usize,
        tie: &mut TieBreak<'_>,
    ) -> Result<Selection, DecodeError> {
        for w in 0..=cap {
            let mut chooser = Chooser::new(tie);
            if w <= self.half {
                if let Some(list) = self.table.get(target) {
                    for sel in list.iter().filter(|s| s.len() == w) {
                        chooser.offer(sel.clone());
                    }
                }
            } else {
                let prefix = w - self.half;
                let mut key = target.clone();
                enumerate(problem, prefix, 0, &mut Vec::new(), &mut key, &mut |a, k| {
                    if let Some(list) = self.table.get(k) {
                        let last = a.last().map_or(0, |x| x.0);
                        for b in list.iter().filter(|b| b.len() == self.half) {
                            if b.first().is_none_or(|x| x.0 > last) {
                                let mut sel = a.to_vec();
                                sel.extend_from_slice(b);
                                chooser.offer(sel);
                            }
                        }
                    }
                    true
                });
            }
            if let Some(best) = chooser.best {
                return Ok(best);
            }
        }
        Err(DecodeError::NotFound { cap })
    }
}

fn table_half_weight(problem: &DecodingProblem, limit: usize) -> usize {
    let m = problem.num_mechanisms() as f64;
    let alts = problem.flips.iter().map(Vec::len).max().unwrap_or(1) as f64;
    let mut total = 1.0;
    let mut term = 1.0;
    let mut h = 0;
    loop {
        let w = (h + 1) as f64;
        term *= (m - w + 1.0) / w * alts;
        if term <= 0.0 || total + term > limit as f64 {
            return h;
        }
        total += term;
        h += 1;
        if h as f64 >= m {
            return h;
        }
    }
}

/// Calls `f(selection, pattern ⊕ initial)` for every selection of exactly
/// `w` mechanisms with indices `>= start`, in canonical order. Stops early
/// when `f` returns `false`; returns whether enumeration ran to completion.
fn enumerate(
    problem: &DecodingProblem,
    w: usize,
    start: usize,
    sel: &mut Selection,
    pattern: &mut Pattern,
    f: &mut dyn FnMut(&Selection, &Pattern) -> bool,
) -> bool {
    if w == 0 {
        return f(sel, pattern);
    }
    let m_total = problem.num_mechanisms();
    for m in start..m_total.saturating_sub(w - 1) {
        for (a, pat) in problem.patterns[m].iter().enumerate() {
            xor_into(pattern, pat);
            sel.push((m as u32, a as u8));
            let go = enumerate(problem, w - 1, m + 1, sel, pattern, f);
            sel.pop();
            xor_into(pattern, pat);
            if !go {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GreedyConfig {
    /// Largest local selection weight tried before a cluster grows.
    pub local_cap: usize,
    /// Search-node budget for one local solve.
    pub node_budget: u64,
    /// Maximum number of region growth steps.
    pub max_growth: usize,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        Self {
            local_cap: 6,
            node_budget: 200_000,
            max_growth: 64,
        }
    }
}

struct ClusterState {
    events: Vec<usize>,
    region: Vec<bool>,
    region_list: Vec<usize>,
    solution: Option<Selection>,
}

/// Groups detection events into clusters, grows each cluster's detector
/// region until a local exact solve over mechanisms touching the region
/// succeeds, and merges clusters whose regions meet.
pub fn greedy_solve(
    problem: &DecodingProblem,
    target: &Pattern,
    config: &GreedyConfig,
    cmp: &dyn Fn(&Selection, &Selection) -> Ordering,
) -> Result<Selection, DecodeError> {
    let nd = problem.num_detectors();
    let events: Vec<usize> = (0..nd).filter(|&d| target[d / 64] >> (d % 64) & 1 == 1).collect();
    if events.is_empty() {
        return Ok(Vec::new());
    }
    let mut clusters: Vec<ClusterState> = events
        .iter()
        .map(|&e| {
            let mut region = vec![false; nd];
            region[e] = true;
            ClusterState {
                events: vec![e],
                region,
                region_list: vec![e],
                solution: None,
            }
        })
        .collect();
    // events adjacent through one mechanism start together
    merge_overlapping(&mut clusters, problem, true);
    let mut rejected = HashSet::new();
    loop {
        settle(problem, &mut clusters, config, cmp)?;
        if !merge_close(&mut clusters, problem, config, cmp, &mut rejected) {
            break;
        }
    }
    let mut sel: Selection = clusters.into_iter().flat_map(|c| c.solution.unwrap()).collect();
    sel.sort_unstable();
    Ok(sel)
}

/// Grows unsolved clusters until every cluster has a local solution.
fn settle(
    problem: &DecodingProblem,
    clusters: &mut Vec<ClusterState>,
    config: &GreedyConfig,
    cmp: &dyn Fn(&Selection, &Selection) -> Ordering,
) -> Result<(), DecodeError> {
    for _ in 0..=config.max_growth {
        let mut all_solved = true;
        for c in clusters.iter_mut().filter(|c| c.solution.is_none()) {
            match local_solve(problem, c, config.local_cap, config.node_budget, cmp)? {
                Some(sel) => c.solution = Some(sel),
                None => all_solved = false,
            }
        }
        if all_solved {
            return Ok(());
        }
        let mut grew = false;
        for c in clusters.iter_mut().filter(|c| c.solution.is_none()) {
            let frontier: Vec<usize> = c
                .region_list
                .iter()
                .flat_map(|&d| problem.detector_adj[d].iter().map(|&e| e as usize))
                .filter(|&e| !c.region[e])
                .collect();
            for e in frontier {
                if !c.region[e] {
                    c.region[e] = true;
                    c.region_list.push(e);
                    grew = true;
                }
            }
        }
        merge_overlapping(clusters, problem, false);
        if !grew {
            break;
        }
    }
    Err(DecodeError::CapExceeded(format!(
        "clusters unresolved after growth (local cap {})",
        config.local_cap
    )))
}

/// Joins one pair of solved clusters whose events lie closer (in detector
/// hops) than the sum of their solution weights, provided a joint solve finds
/// a strictly lighter selection. Returns whether a join happened.
fn merge_close(
    clusters: &mut Vec<ClusterState>,
    problem: &DecodingProblem,
    config: &GreedyConfig,
    cmp: &dyn Fn(&Selection, &Selection) -> Ordering,
    rejected: &mut HashSet<(usize, usize, usize)>,
) -> bool {
    let weights: Vec<usize> = clusters
        .iter()
        .map(|c| c.solution.as_ref().map_or(0, |s| s.len()))
        .collect();
    let max_w = weights.iter().copied().max().unwrap_or(0);
    let nd = problem.num_detectors();
    let mut dist = vec![usize::MAX; nd];
    let mut touched = Vec::new();
    for i in 0..clusters.len() {
        let mut frontier: Vec<usize> = clusters[i].events.clone();
        for &e in &frontier {
            dist[e] = 0;
            touched.push(e);
        }
        for depth in 1..weights[i] + max_w {
            let mut next = Vec::new();
            for &d in &frontier {
                for &e in &problem.detector_adj[d] {
                    let e = e as usize;
                    if dist[e] == usize::MAX {
                        dist[e] = depth;
                        touched.push(e);
                        next.push(e);
                    }
                }
            }
            frontier = next;
        }
        let candidates: Vec<usize> = (i + 1..clusters.len())
            .filter(|&j| clusters[j].events.iter().any(|&e| dist[e] < weights[i] + weights[j]))
            .collect();
        for &d in &touched {
            dist[d] = usize::MAX;
        }
        touched.clear();
        for j in candidates {
            let key = pair_key(&clusters[i], &clusters[j]);
            if rejected.contains(&key) {
                continue;
            }
            let cap = (weights[i] + weights[j] - 1).min(config.local_cap);
            match joint_solve(problem, &clusters[i], &clusters[j], cap, config, cmp) {
                Some(joint) => {
                    clusters.swap_remove(j);
                    clusters[i] = joint;
                    return true;
                }
                None => {
                    rejected.insert(key);
                }
            }
        }
    }
    false
}

fn pair_key(a: &ClusterState, b: &ClusterState) -> (usize, usize, usize) {
    let lo = |c: &ClusterState| c.events.iter().copied().min().unwrap_or(0);
    let (x, y) = (lo(a), lo(b));
    (x.min(y), x.max(y), a.events.len() + b.events.len())
}

/// Solves the union of two clusters with weight at most `cap`, growing the
/// joint region layer by layer; `None` if nothing that light exists nearby.
fn joint_solve(
    problem: &DecodingProblem,
    a: &ClusterState,
    b: &ClusterState,
    cap: usize,
    config: &GreedyConfig,
    cmp: &dyn Fn(&Selection, &Selection) -> Ordering,
) -> Option<ClusterState> {
    let mut joint = ClusterState {
        events: a.events.iter().chain(&b.events).copied().collect(),
        region: a.region.clone(),
        region_list: a.region_list.clone(),
        solution: None,
    };
    for &d in &b.region_list {
        if !joint.region[d] {
            joint.region[d] = true;
            joint.region_list.push(d);
        }
    }
    for _ in 0..=cap {
        match local_solve(problem, &joint, cap, config.node_budget, cmp) {
            Ok(Some(sel)) => {
                joint.solution = Some(sel);
                return Some(joint);
            }
            Ok(None) => {}
            Err(_) => return None,
        }
        let frontier: Vec<usize> = joint
            .region_list
            .iter()
            .flat_map(|&d| problem.detector_adj[d].iter().map(|&e| e as usize))
            .collect();
        for e in frontier {
            if !joint.region[e] {
                joint.region[e] = true;
                joint.region_list.push(e);
            }
        }
    }
    None
}

/// Merges clusters whose regions intersect (or, with `adjacent`, touch
/// through a detector edge). A merged cluster loses any stored solution.
fn merge_overlapping(clusters: &mut Vec<ClusterState>, problem: &DecodingProblem, adjacent: bool) {
    loop {
        let mut merged = false;
        'outer: for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let touch = clusters[j].region_list.iter().any(|&d| {
                    clusters[i].region[d]
                        || (adjacent && problem.detector_adj[d].iter().any(|&e| clusters[i].region[e as usize]))
                });
                if touch {
                    let other = clusters.swap_remove(j);
                    let c = &mut clusters[i];
                    c.events.extend(other.events);
                    for d in other.region_list {
                        if !c.region[d] {
                            c.region[d] = true;
                            c.region_list.push(d);
                        }
                    }
                    c.solution = None;
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            return;
        }
    }
}

fn local_solve(
    problem: &DecodingProblem,
    cluster: &ClusterState,
    cap: usize,
    budget: u64,
    cmp: &dyn Fn(&Selection, &Selection) -> Ordering,
) -> Result<Option<Selection>, DecodeError> {
    let mut allowed = vec![false; problem.num_mechanisms()];
    for &d in &cluster.region_list {
        for &m in &problem.detector_mechs[d] {
            allowed[m as usize] = true;
        }
    }
    let target = problem.pattern_of(cluster.events.iter().copied());
    let mut search = LocalSearch {
        problem,
        allowed: &allowed,
        used: vec![false; problem.num_mechanisms()],
        nodes: 0,
        budget,
        best: None,
        cmp,
    };
    for w in 1..=cap {
        let mut residual = target.clone();
        let mut sel = Vec::new();
        search.dfs(&mut residual, &mut sel, w)?;
        if let Some(best) = search.best.take() {
            return Ok(Some(best));
        }
    }
    Ok(None)
}

struct LocalSearch<'p> {
    problem: &'p DecodingProblem,
    allowed: &'p [bool],
    used: Vec<bool>,
    nodes: u64,
    budget: u64,
    best: Option<Selection>,
    cmp: &'p dyn Fn(&Selection, &Selection) -> Ordering,
}

impl LocalSearch<'_> {
    /// Branches on the lowest unexplained detector; records every selection
    /// of exactly `remaining` further mechanisms that clears the residual.
    fn dfs(&mut self, residual: &mut Pattern, sel: &mut Selection, remaining: usize) -> Result<(), DecodeError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(DecodeError::CapExceeded(format!(
                "local search exceeded {} nodes",
                self.budget
            )));
        }
        let Some(d) = lowest_set(residual) else {
            if remaining == 0 {
                let mut cand = sel.clone();
                cand.sort_unstable();
                if self
                    .best
                    .as_ref()
                    .is_none_or(|b| (self.cmp)(&cand, b) == Ordering::Less)
                {
                    self.best = Some(cand);
                }
            }
            return Ok(());
        };
        if remaining == 0 || popcount(residual) > remaining * self.problem.max_flip {
            return Ok(());
        }
        for &m in &self.problem.detector_mechs[d] {
            let m = m as usize;
            if !self.allowed[m] || self.used[m] {
                continue;
            }
            for a in 0..self.problem.flips[m].len() {
                if !self.problem.flips[m][a].contains(&(d as u32)) {
                    continue;
                }
                self.used[m] = true;
                xor_into(residual, &self.problem.patterns[m][a]);
                sel.push((m as u32, a as u8));
                let r = self.dfs(residual, sel, remaining - 1);
                sel.pop();
                xor_into(residual, &self.problem.patterns[m][a]);
                self.used[m] = false;
                r?;
            }
        }
        Ok(())
    }
}
