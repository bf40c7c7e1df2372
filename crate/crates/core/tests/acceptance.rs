#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Acceptance suite: each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::cell::RefCell;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use astro_float::{BigFloat, Consts, RoundingMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qldpc_lab::construct::{hamming_7_4, hypergraph_product, repetition_code, SeedKind};
use qldpc_lab::decoder::{DecodeStatus, DecoderKind, SpaceTimeDecoder, StaticDecoder};
use qldpc_lab::graphs::{adjacency_graph, cluster_count_bound, count_cluster_extensions, Graph};
use qldpc_lab::harness::{
    csv_string, run_memory_experiment, threshold_scan, CodeSpec, Decoding, ExperimentConfig, ExperimentSummary,
    NoiseModel, ScanConfig,
};
use qldpc_lab::noise::{observed_syndromes, sample_iid, Channel, FaultPath, PhenomenologicalParams};
use qldpc_lab::overhead::{
    effective_rates, failure_bounds, location_budget, logical_gate_threshold_checks, plan_blocks, threshold_constants,
    BoundInputs, ProtocolParams,
};
use qldpc_lab::pauli::{Pauli, PauliOperator};
use qldpc_lab::shorec::{single_fault_sweep, ExtractionMode, ShorRound};
use qldpc_lab::stabcode::{OperatorClass, StabilizerCode};
use qldpc_lab::stats::fit_loglog;

type Outcome = Result<String, String>;

fn code13() -> StabilizerCode {
    hypergraph_product(&repetition_code(3).unwrap()).unwrap()
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

// ---- bitmask Pauli algebra used by the oracles (n <= 32) ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Mask {
    x: u64,
    z: u64,
}

impl Mask {
    fn of(p: &PauliOperator) -> Self {
        let mut m = Mask { x: 0, z: 0 };
        for q in 0..p.n() {
            match p.get(q) {
                Pauli::X => m.x |= 1 << q,
                Pauli::Z => m.z |= 1 << q,
                Pauli::Y => {
                    m.x |= 1 << q;
                    m.z |= 1 << q;
                }
                Pauli::I => {}
            }
        }
        m
    }

    fn mul(self, o: Mask) -> Mask {
        Mask {
            x: self.x ^ o.x,
            z: self.z ^ o.z,
        }
    }

    fn anticommutes(self, o: Mask) -> bool {
        ((self.x & o.z).count_ones() + (self.z & o.x).count_ones()) % 2 == 1
    }

    fn weight(self) -> u32 {
        (self.x | self.z).count_ones()
    }

    fn syndrome(self, gens: &[Mask]) -> u64 {
        gens.iter()
            .enumerate()
            .fold(0, |s, (i, g)| s | ((self.anticommutes(*g) as u64) << i))
    }

    fn set(&mut self, q: usize, p: u8) {
        // p: 0 = X, 1 = Y, 2 = Z
        if p != 2 {
            self.x ^= 1 << q;
        }
        if p != 0 {
            self.z ^= 1 << q;
        }
    }

    /// Per-qubit bit order, matching lexicographic comparison of bool vectors.
    fn lex_key(self, n: usize) -> (Vec<bool>, Vec<bool>) {
        (
            (0..n).map(|q| self.x >> q & 1 == 1).collect(),
            (0..n).map(|q| self.z >> q & 1 == 1).collect(),
        )
    }
}

/// Row-reduced span of generator masks for membership tests.
struct Span {
    rows: Vec<u128>,
}

impl Span {
    fn new(gens: &[Mask]) -> Self {
        let mut rows: Vec<u128> = Vec::new();
        for g in gens {
            let mut v = (g.x as u128) | ((g.z as u128) << 64);
            for r in &rows {
                let pivot = 127 - r.leading_zeros();
                if v >> pivot & 1 == 1 {
                    v ^= r;
                }
            }
            if v != 0 {
                let pivot = 127 - v.leading_zeros();
                for r in rows.iter_mut() {
                    if *r >> pivot & 1 == 1 {
                        *r ^= v;
                    }
                }
                rows.push(v);
                rows.sort_unstable_by(|a, b| b.cmp(a));
            }
        }
        Span { rows }
    }

    fn contains(&self, m: Mask) -> bool {
        let mut v = (m.x as u128) | ((m.z as u128) << 64);
        for r in &self.rows {
            let pivot = 127 - r.leading_zeros();
            if v >> pivot & 1 == 1 {
                v ^= r;
            }
        }
        v == 0
    }
}

fn for_each_subset(n: usize, w: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, w: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == w {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, w, cur, f);
            cur.pop();
        }
    }
    rec(0, n, w, &mut Vec::new(), f);
}

// ---- criteria ----

fn c1_construction() -> Outcome {
    let mut notes = Vec::new();
    for (name, cl, n, k) in [
        ("repetition-3", repetition_code(3).unwrap(), 13, 1),
        ("Hamming-[7,4]", hamming_7_4(), 58, 16),
    ] {
        let code = hypergraph_product(&cl).unwrap();
        ensure!(
            code.n() == n && code.k() == k,
            "{name}: got [[{}, {}]]",
            code.n(),
            code.k()
        );
        let closed = cl.n * cl.n + (cl.n - cl.k) * (cl.n - cl.k);
        ensure!(closed == n && cl.k * cl.k == k, "{name}: closed form disagrees");
        let css = code.css().unwrap();
        let prod = css.hx.mul(&css.hz.transpose()).unwrap();
        ensure!(prod.is_zero(), "{name}: Hx Hz^T != 0");
        notes.push(format!("[[{n},{k}]]"));
    }
    Ok(notes.join(", "))
}

fn c2_distance() -> Outcome {
    let code = code13();
    let gens: Vec<Mask> = code.generators().iter().map(Mask::of).collect();
    let span = Span::new(&gens);
    let mut found = None;
    for w in 1..=3 {
        let mut hit = false;
        for_each_subset(13, w, &mut |qs| {
            for code_idx in 0..3usize.pow(w as u32) {
                let mut m = Mask { x: 0, z: 0 };
                let mut r = code_idx;
                for &q in qs {
                    m.set(q, (r % 3) as u8);
                    r /= 3;
                }
                if m.syndrome(&gens) == 0 && !span.contains(m) {
                    hit = true;
                }
            }
        });
        if hit {
            found = Some(w);
            break;
        }
    }
    ensure!(found == Some(3), "brute force distance {found:?}");
    let lib = code.distance(13).map_err(|e| e.to_string())?;
    ensure!(lib == Some(3), "library distance {lib:?}");
    Ok("d = 3 (all Paulis of weight <= 3 enumerated)".into())
}

fn c3_logicals() -> Outcome {
    let bitflip = StabilizerCode::new(3, vec!["ZZI".parse().unwrap(), "IZZ".parse().unwrap()]).unwrap();
    let mut notes = Vec::new();
    for (name, code) in [("[[13,1]]", code13()), ("bit-flip", bitflip)] {
        let pairs = code.derive_logicals().map_err(|e| e.to_string())?;
        ensure!(
            pairs.len() == code.k(),
            "{name}: {} pairs for k = {}",
            pairs.len(),
            code.k()
        );
        let gens: Vec<Mask> = code.generators().iter().map(Mask::of).collect();
        let span = Span::new(&gens);
        for (i, pi) in pairs.iter().enumerate() {
            for op in [&pi.x, &pi.z] {
                let m = Mask::of(op);
                ensure!(
                    m.syndrome(&gens) == 0,
                    "{name}: logical {i} fails to commute with a generator"
                );
                ensure!(!span.contains(m), "{name}: logical {i} lies in the stabilizer");
            }
            for (j, pj) in pairs.iter().enumerate() {
                let (xi, zi, xj, zj) = (Mask::of(&pi.x), Mask::of(&pi.z), Mask::of(&pj.x), Mask::of(&pj.z));
                ensure!(xi.anticommutes(zj) == (i == j), "{name}: X{i} vs Z{j}");
                ensure!(!xi.anticommutes(xj), "{name}: X{i} vs X{j}");
                ensure!(!zi.anticommutes(zj), "{name}: Z{i} vs Z{j}");
            }
        }
        notes.push(format!("{name}: {} pair(s)", pairs.len()));
    }
    Ok(notes.join(", "))
}

fn c4_static() -> Outcome {
    let code = code13();
    let dec = StaticDecoder::exact(&code);
    let mut count = 0;
    for q in 0..13 {
        for p in Pauli::NON_IDENTITY {
            let e = PauliOperator::single(13, q, p);
            let c = dec.decode(&code.syndrome(&e).unwrap(), 3).map_err(|e| e.to_string())?;
            let class = code.classify(&e.mul(&c)).unwrap();
            ensure!(
                class == OperatorClass::Stabilizer,
                "{p:?} on {q}: composite is {class:?}"
            );
            count += 1;
        }
    }
    ensure!(count == 39, "{count} errors");
    Ok("39/39 corrected".into())
}

fn c5_cluster_count() -> Outcome {
    let graphs = [
        ("path-10", Graph::path(10)),
        ("cycle-10", Graph::cycle(10)),
        ("[[13,1]] adjacency", adjacency_graph(&code13())),
    ];
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for (name, g) in &graphs {
        let z = g.max_degree();
        let nodes = g.node_count();
        for t in 1..=2 {
            let mut err = None;
            for_each_subset(nodes, t, &mut |seed| {
                for s in t..=6 {
                    let count = count_cluster_extensions(g, seed, s).unwrap();
                    let bound = cluster_count_bound(z, t, s);
                    worst = worst.max(count as f64 / bound);
                    checked += 1;
                    if count as f64 > bound && err.is_none() {
                        err = Some(format!("{name}: S = {seed:?}, s = {s}: {count} > {bound}"));
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
    }
    Ok(format!("{checked} (S, s) cases, max count/bound = {worst:.3}"))
}

/// Independent space-time oracle on bitmasks: minimum-weight explanations by
/// enumeration, lexicographic ties, residual by enumeration, and spanning
/// clusters on a graph built from the definition.
struct SpaceTimeOracle {
    n: usize,
    m: usize,
    rounds: usize,
    gens: Vec<Mask>,
    span: Span,
    supports: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
struct OraclePath {
    data: Vec<Mask>,
    synd: Vec<u64>,
}

impl SpaceTimeOracle {
    fn new(code: &StabilizerCode, rounds: usize) -> Self {
        let gens: Vec<Mask> = code.generators().iter().map(Mask::of).collect();
        Self {
            n: code.n(),
            m: code.num_checks(),
            rounds,
            span: Span::new(&gens),
            supports: (0..code.num_checks()).map(|b| code.support(b).to_vec()).collect(),
            gens,
        }
    }

    fn deltas(&self, p: &OraclePath) -> Vec<u64> {
        (0..self.rounds)
            .map(|t| {
                let mut d = p.data[t].syndrome(&self.gens) ^ p.synd[t];
                if t > 0 {
                    d ^= p.synd[t - 1];
                }
                d
            })
            .collect()
    }

    fn mechanisms(&self) -> Vec<(u32, u8)> {
        let mut out = Vec::new();
        for t in 0..self.rounds {
            let base = (t * (self.n + self.m)) as u32;
            for q in 0..self.n {
                for a in 0..3 {
                    out.push((base + q as u32, a));
                }
            }
            for b in 0..self.m {
                out.push((base + (self.n + b) as u32, 0));
            }
        }
        out
    }

    fn path_of(&self, sel: &[(u32, u8)]) -> OraclePath {
        let mut p = OraclePath {
            data: vec![Mask { x: 0, z: 0 }; self.rounds],
            synd: vec![0; self.rounds],
        };
        for &(mech, a) in sel {
            let t = mech as usize / (self.n + self.m);
            let i = mech as usize % (self.n + self.m);
            if i < self.n {
                p.data[t].set(i, a);
            } else {
                p.synd[t] ^= 1 << (i - self.n);
            }
        }
        p
    }

    fn decode(&self, deltas: &[u64], max_w: usize) -> Option<OraclePath> {
        let mechs = self.mechanisms();
        for w in 0..=max_w {
            let mut best: Option<Vec<(u32, u8)>> = None;
            for_each_subset(mechs.len(), w, &mut |idx| {
                let sel: Vec<(u32, u8)> = idx.iter().map(|&i| mechs[i]).collect();
                if sel.windows(2).any(|p| p[0].0 == p[1].0) {
                    return;
                }
                if self.deltas(&self.path_of(&sel)) == deltas && best.as_ref().is_none_or(|b| sel < *b) {
                    best = Some(sel);
                }
            });
            if let Some(b) = best {
                return Some(self.path_of(&b));
            }
        }
        None
    }

    fn residual(&self, syndrome: u64) -> Mask {
        for w in 0..=self.n {
            let mut best: Option<Mask> = None;
            for_each_subset(self.n, w, &mut |qs| {
                for code_idx in 0..3usize.pow(w as u32) {
                    let mut m = Mask { x: 0, z: 0 };
                    let mut r = code_idx;
                    for &q in qs {
                        m.set(q, (r % 3) as u8);
                        r /= 3;
                    }
                    if m.syndrome(&self.gens) == syndrome && best.is_none_or(|b| m.lex_key(self.n) < b.lex_key(self.n))
                    {
                        best = Some(m);
                    }
                }
            });
            if let Some(b) = best {
                return b;
            }
        }
        unreachable!("every syndrome of a stabilizer code is reachable")
    }

    fn status(&self, truth: &OraclePath, deduced: &OraclePath) -> DecodeStatus {
        let last = self.rounds - 1;
        let g = self.residual(truth.synd[last] ^ deduced.synd[last]);
        let mut composite = g;
        for t in 0..self.rounds {
            composite = composite.mul(truth.data[t]).mul(deduced.data[t]);
        }
        assert_eq!(composite.syndrome(&self.gens), 0);
        if !self.span.contains(composite) {
            return DecodeStatus::LogicalFailure;
        }
        // nodes: qubit (x, t) for t = 0..=T, check (b, t) for t = 0..T
        let (n, m, tt) = (self.n, self.m, self.rounds);
        let qid = |x: usize, t: usize| t * n + x;
        let cid = |b: usize, t: usize| (tt + 1) * n + t * m + b;
        let total = (tt + 1) * n + tt * m;
        let mut marked = vec![false; total];
        for t in 0..tt {
            let et = truth.data[t].mul(deduced.data[t]);
            for x in 0..n {
                marked[qid(x, t)] = (et.x | et.z) >> x & 1 == 1;
            }
            for b in 0..m {
                marked[cid(b, t)] = (truth.synd[t] ^ deduced.synd[t]) >> b & 1 == 1;
            }
        }
        for x in 0..n {
            marked[qid(x, tt)] = (g.x | g.z) >> x & 1 == 1;
        }
        let mut adj = vec![Vec::new(); total];
        for t in 0..=tt {
            for s in &self.supports {
                for &a in s {
                    for &b in s {
                        if a != b {
                            adj[qid(a, t)].push(qid(b, t));
                        }
                    }
                }
            }
        }
        for t in 0..tt {
            for (b, s) in self.supports.iter().enumerate() {
                for &x in s {
                    for tq in [t, t + 1] {
                        adj[cid(b, t)].push(qid(x, tq));
                        adj[qid(x, tq)].push(cid(b, t));
                    }
                }
            }
        }
        let mut seen = vec![false; total];
        for start in 0..n {
            if !marked[qid(start, 0)] || seen[qid(start, 0)] {
                continue;
            }
            let mut stack = vec![qid(start, 0)];
            seen[qid(start, 0)] = true;
            while let Some(v) = stack.pop() {
                if v >= tt * n && v < (tt + 1) * n {
                    return DecodeStatus::SpanningClusterFailure;
                }
                for &u in &adj[v] {
                    if marked[u] && !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
        }
        DecodeStatus::Success
    }
}

fn c6_spacetime_oracle() -> Outcome {
    let code = code13();
    let rounds = 3;
    let dec = SpaceTimeDecoder::new(&code, rounds, DecoderKind::Exact { cap: 4 }, 3).map_err(|e| e.to_string())?;
    let oracle = SpaceTimeOracle::new(&code, rounds);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (n, m) = (code.n(), code.num_checks());
    let mut tally = [0usize; 3];
    for inst in 0..200 {
        let w = rng.gen_range(0..=2);
        let mut fp = FaultPath::for_code(&code, rounds);
        let mut placed = 0;
        while placed < w {
            let p = Pauli::NON_IDENTITY[rng.gen_range(0..3)];
            match rng.gen_range(0..3) {
                0 => {
                    let q = rng.gen_range(0..n);
                    if fp.init_error.get(q) != Pauli::I {
                        continue;
                    }
                    fp.init_error.set(q, p);
                }
                1 => {
                    let (t, q) = (rng.gen_range(0..rounds), rng.gen_range(0..n));
                    if fp.data_errors[t].get(q) != Pauli::I {
                        continue;
                    }
                    fp.data_errors[t].set(q, p);
                }
                _ => {
                    let (t, b) = (rng.gen_range(0..rounds), rng.gen_range(0..m));
                    if fp.synd_errors[t].get(b) {
                        continue;
                    }
                    fp.synd_errors[t].set(b, true);
                }
            }
            placed += 1;
        }
        let mut truth = OraclePath {
            data: fp.data_errors.iter().map(Mask::of).collect(),
            synd: fp
                .synd_errors
                .iter()
                .map(|s| s.iter_ones().fold(0u64, |a, b| a | 1 << b))
                .collect(),
        };
        truth.data[0] = truth.data[0].mul(Mask::of(&fp.init_error));
        let deltas = oracle.deltas(&truth);
        let lib_deltas = observed_syndromes(&code, &fp).map_err(|e| e.to_string())?;
        let lib_as_masks: Vec<u64> = lib_deltas
            .iter()
            .map(|d| d.iter_ones().fold(0u64, |a, b| a | 1 << b))
            .collect();
        ensure!(lib_as_masks == deltas, "instance {inst}: syndrome differences disagree");
        let deduced = oracle
            .decode(&deltas, w)
            .ok_or(format!("instance {inst}: oracle found nothing"))?;
        let expect = oracle.status(&truth, &deduced);
        let got = dec.decode(&lib_deltas, Some(&fp)).map_err(|e| e.to_string())?;
        ensure!(
            got.status == expect,
            "instance {inst}: decoder {:?}, oracle {:?}",
            got.status,
            expect
        );
        let ded_w: u32 = deduced.data.iter().map(|d| d.weight()).sum::<u32>()
            + deduced.synd.iter().map(|s| s.count_ones()).sum::<u32>();
        ensure!(
            got.weight == ded_w as usize,
            "instance {inst}: weight {} vs {ded_w}",
            got.weight
        );
        tally[w] += 1;
    }
    Ok(format!(
        "200/200 agree (true weight 0/1/2: {}/{}/{})",
        tally[0], tally[1], tally[2]
    ))
}

fn c7_telescoping() -> Outcome {
    let code = code13();
    let gens: Vec<Mask> = code.generators().iter().map(Mask::of).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..10_000u64 {
        let rounds = rng.gen_range(1..=6);
        let p = rng.gen_range(0.0..0.3);
        let q = rng.gen_range(0.0..0.3);
        let params = PhenomenologicalParams::new(p, p, q, rounds).unwrap();
        let fp = sample_iid(&params, &code, i);
        let deltas = observed_syndromes(&code, &fp).map_err(|e| e.to_string())?;
        let lhs = deltas
            .iter()
            .fold(0u64, |a, d| a ^ d.iter_ones().fold(0u64, |x, b| x | 1 << b));
        let cum = fp
            .data_errors
            .iter()
            .fold(Mask::of(&fp.init_error), |a, e| a.mul(Mask::of(e)));
        let bt = fp.synd_errors[rounds - 1].iter_ones().fold(0u64, |x, b| x | 1 << b);
        ensure!(lhs == bt ^ cum.syndrome(&gens), "path {i} breaks the identity");
    }
    Ok("10000 paths".into())
}

fn c8_fault_association() -> Outcome {
    let code = code13();
    let round = ShorRound::new(&code, ExtractionMode::Shor).map_err(|e| e.to_string())?;
    let c = code.tightest_ldpc().c;
    let report = single_fault_sweep(&round, c);
    ensure!(
        report.holds(1),
        "max data {} (bound 1), max syndrome {} (bound {})",
        report.max_data_errors,
        report.max_synd_errors,
        report.synd_bound
    );
    Ok(format!(
        "{} locations, {} faults ({} rejected by cat tests); max data errors {}, max syndrome errors {} <= ceil({c}/2) = {}",
        report.locations, report.faults, report.rejected, report.max_data_errors, report.max_synd_errors, report.synd_bound
    ))
}

const SLOPE_GRID: [f64; 5] = [1e-3, 2e-3, 3e-3, 5e-3, 1e-2];

fn slope_runs() -> Result<Vec<ExperimentSummary>, String> {
    SLOPE_GRID
        .iter()
        .map(|&p| {
            run_memory_experiment(&ExperimentConfig {
                code: CodeSpec::repetition(3),
                noise: NoiseModel::Phenomenological {
                    p,
                    q: 0.0,
                    p_init: None,
                    channel: Channel::Depolarizing,
                },
                decoding: Decoding::Static,
                decoder: DecoderKind::Exact { cap: 13 },
                trials: 100_000,
                seed: 9,
                rounds: Some(1),
                workers: None,
                archive_dir: None,
                max_archived: None,
            })
            .map_err(|e| e.to_string())
        })
        .collect()
}

fn c9_slope(runs: &[ExperimentSummary]) -> Outcome {
    let pts: Vec<(f64, f64, f64)> = runs
        .iter()
        .map(|s| (s.row.p, s.row.rate, s.row.failures as f64))
        .collect();
    let fit = fit_loglog(&pts).ok_or("not enough points with failures")?;
    let rates: Vec<String> = runs.iter().map(|s| format!("{:.2e}", s.row.rate)).collect();
    ensure!(
        (fit.slope - 2.0).abs() <= 0.3,
        "slope {:.3} (rates {})",
        fit.slope,
        rates.join(", ")
    );
    Ok(format!(
        "slope {:.3} +/- {:.3}; rates {}",
        fit.slope,
        fit.slope_stderr,
        rates.join(", ")
    ))
}

fn c10_threshold() -> Outcome {
    let low = 1e-3;
    let high = 0.15;
    let scan = |p: f64, trials: u64| {
        threshold_scan(&ScanConfig {
            seed_code: SeedKind::Repetition,
            sizes: vec![3, 5, 7],
            p_grid: vec![p],
            q_factor: 1.0,
            decoding: Decoding::SpaceTime,
            decoder: DecoderKind::greedy_default(),
            trials,
            seed: 10,
            rounds: None,
            workers: None,
            max_rel_width: 0.5,
            max_abs_width: 0.01,
        })
        .map_err(|e| e.to_string())
    };
    // the low point needs many trials to resolve the d = 7 member, the high point few
    let lo = scan(low, 4_000_000)?;
    let hi = scan(high, 2_000)?;
    let lo_rows: Vec<_> = lo.rows.iter().filter(|r| r.p == low).collect();
    let hi_rows: Vec<_> = hi.rows.iter().filter(|r| r.p == high).collect();
    let fmt = |rows: &[&qldpc_lab::harness::ResultRow]| {
        rows.iter()
            .map(|r| format!("n={}: {:.2e} [{:.1e}, {:.1e}]", r.n, r.rate, r.ci_low, r.ci_high))
            .collect::<Vec<_>>()
            .join("; ")
    };
    let lv = lo.low.as_ref().ok_or("low point has too-wide intervals")?;
    let hv = hi.high.as_ref().ok_or("high point has too-wide intervals")?;
    ensure!(lv.decreasing, "not decreasing at p = {low}: {}", fmt(&lo_rows));
    ensure!(
        lv.separated.iter().all(|&s| s),
        "overlapping intervals at p = {low}: {}",
        fmt(&lo_rows)
    );
    ensure!(hv.non_decreasing, "decreasing at p = {high}: {}", fmt(&hi_rows));
    Ok(format!("p={low}: {} | p={high}: {}", fmt(&lo_rows), fmt(&hi_rows)))
}

// ---- arbitrary-precision oracle for the overhead formulas ----

const PREC: usize = 320;
const RM: RoundingMode = RoundingMode::ToEven;

struct Big {
    cc: RefCell<Consts>,
    e: BigFloat,
}

impl Big {
    fn new() -> Self {
        let mut cc = Consts::new().unwrap();
        let e = cc.e(PREC, RM);
        Self {
            cc: RefCell::new(cc),
            e,
        }
    }
    fn f(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, PREC)
    }
    fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, PREC, RM)
    }
    fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, PREC, RM)
    }
    fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, PREC, RM)
    }
    fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, PREC, RM)
    }
    fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(PREC, RM)
    }
    /// `a^(num/den)` with an exact rational exponent.
    fn powr(&self, a: &BigFloat, num: f64, den: f64) -> BigFloat {
        let ex = self.f(num).div(&self.f(den), PREC, RM);
        a.pow(&ex, PREC, RM, &mut self.cc.borrow_mut())
    }
    fn powi(&self, a: &BigFloat, n: usize) -> BigFloat {
        a.powi(n, PREC, RM)
    }
    fn inv(&self, a: &BigFloat) -> BigFloat {
        self.div(&self.f(1.0), a)
    }
    fn close(&self, ours: f64, exact: &BigFloat, tol: f64) -> bool {
        if exact.is_zero() {
            return ours == 0.0;
        }
        let diff = self.sub(&self.f(ours), exact);
        let lim = self.mul(exact, &self.f(tol));
        diff.abs_cmp(&lim).is_some_and(|c| c <= 0)
    }
}

fn c11_overhead_golden() -> Outcome {
    let b = Big::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let tol = 1e-12;
    let mut compared = 0;
    for point in 0..50 {
        let (r, c) = if point == 0 {
            (7, 4)
        } else {
            (rng.gen_range(2..=9), rng.gen_range(1..=6))
        };
        let a_cat = rng.gen_range(4..=24);
        let s = rng.gen_range(1..=8);
        let l = rng.gen_range(4..=60);
        let p = if point == 1 {
            0.0
        } else {
            10f64.powf(rng.gen_range(-8.0..-3.5))
        };
        let params = ProtocolParams {
            r,
            c,
            a_cat,
            b_concat: rng.gen_range(0.0..50.0),
            s,
            l,
            r_prime: r + 1,
            p,
            rate: 0.1,
            eta: 2.0,
            epsilon: 1e-3,
            alpha: 0.5,
            beta: 1.5,
            polylog_a: 3.0,
            polylog_c: 100.0,
            lambda: 0.1,
            omega: 0.1,
            s_prime: 10.0,
        };
        let mut check = |name: &str, ours: f64, exact: &BigFloat| -> Result<(), String> {
            compared += 1;
            if b.close(ours, exact, tol) {
                Ok(())
            } else {
                Err(format!(
                    "point {point} (r={r}, c={c}, p={p:e}): {name} = {ours:e} off from oracle {exact}"
                ))
            }
        };

        // effective rates
        let rates = effective_rates(&params).map_err(|e| e.to_string())?;
        let (bp, ba, bc) = (b.f(p), b.f(a_cat as f64), b.f(c as f64));
        let one = b.f(1.0);
        let one_m_pa = b.sub(&one, &b.mul(&bp, &ba));
        let pp = b.mul(
            &b.add(&b.add(&b.div(&b.mul(&bc, &ba), &one_m_pa), &bc), &b.f((s * l) as f64)),
            &bp,
        );
        let pb = b.mul(&b.add(&b.div(&ba, &one_m_pa), &b.f(3.0 * r as f64)), &bp);
        let pd = b.div(&b.sqrt(&pp), &b.sub(&one, &pb));
        let q1 = b.mul(&b.f(2.0), &b.powr(&pp, 1.0, (c + 1) as f64));
        let q2 = b.div(&b.mul(&b.f(2.0), &pb), &b.sub(&one, &pb));
        let q = if q1.cmp(&q2).is_some_and(|o| o >= 0) { q1 } else { q2 };
        check("p_P", rates.p_p, &pp)?;
        check("p_B", rates.p_b, &pb)?;
        check("p_D", rates.p_d, &pd)?;
        check("q", rates.q, &q)?;

        // threshold constants
        let k = threshold_constants(r, c);
        let z = (r - 1) * c;
        let zp = z + 2 * c;
        if point == 0 {
            ensure!(z == 24 && zp == 32, "(7,4) gives z = {z}, z' = {zp}");
        }
        ensure!(
            k.z == z && k.z_prime == zp,
            "point {point}: z, z' = {}, {}",
            k.z,
            k.z_prime
        );
        let ze = b.mul(&b.f(z as f64), &b.e);
        let zpe = b.mul(&b.f(zp as f64), &b.e);
        let p0s = b.inv(&b.powi(&b.mul(&b.f(2.0), &ze), 2));
        let pf = b.inv(&b.powi(&b.mul(&b.f(2.0), &zpe), 4));
        let pi = b.inv(&b.powi(&b.mul(&b.f(2.0), &zpe), 2));
        let p12 = b.inv(&b.powi(
            &b.mul(&b.mul(&b.f(192.0), &b.powi(&b.f(zp as f64), 5)), &b.powi(&b.e, 6)),
            2,
        ));
        let p12_alt = b.div(
            &b.powi(&pf, 2),
            &b.mul(&b.mul(&b.f(144.0), &b.powi(&b.f(zp as f64), 2)), &b.powi(&b.e, 4)),
        );
        ensure!(
            b.close(0.0, &b.sub(&p12, &p12_alt), 0.0) || {
                let d = b.sub(&p12, &p12_alt);
                d.abs_cmp(&b.mul(&p12, &b.f(1e-60))).is_some_and(|o| o <= 0)
            },
            "the two forms of p1 disagree"
        );
        if z > 0 {
            check("p0_static", k.p0_static, &p0s)?;
        }
        check("p_f", k.p_f, &pf)?;
        check("p_i", k.p_i, &pi)?;
        check("p1", k.p1, &p12)?;
        check("p2", k.p2, &p12)?;

        // failure bounds at a fraction of each threshold
        if z > 0 {
            let n = rng.gen_range(13..400);
            let kk = rng.gen_range(1..n / 4 + 2);
            let d = rng.gen_range(2..12);
            let t = rng.gen_range(1..12);
            let u: f64 = rng.gen_range(0.01..0.8);
            let pr = u * k.p_f;
            let inputs = BoundInputs {
                n,
                k: kk,
                d,
                rounds: t,
                p_init: pr * rng.gen_range(0.5..1.0),
                p: pr * rng.gen_range(0.5..1.0),
                q: pr * rng.gen_range(0.5..1.0),
            };
            let bounds = failure_bounds(&inputs, &k);
            let bn = b.f(n as f64);
            let two = b.f(2.0);
            let p1v = b.f(inputs.p.max(inputs.q));
            let p2v = b.f(inputs.p_init.max(inputs.p).max(inputs.q));
            let series = |b: &Big, nn: &BigFloat, zz: &BigFloat, pv: &BigFloat, root: f64, ex: f64| {
                let thr = b.inv(&b.powr(&b.mul(&two, zz), root, 1.0));
                let proot = b.powr(pv, 1.0, root);
                let den = b.mul(zz, &b.sub(&b.f(1.0), &b.mul(&b.mul(&two, zz), &proot)));
                let ratio = b.div(pv, &thr);
                let pw = b.powr(&ratio, ex, 1.0);
                b.mul(&b.div(nn, &den), &pw)
            };
            let bpv = b.f(inputs.p);
            let stat = series(&b, &bn, &ze, &bpv, 2.0, d as f64 / 2.0);
            let n_inner = b.f((n * (t - 1) + (n - kk) * t) as f64);
            let interior = series(&b, &n_inner, &zpe, &p1v, 2.0, d as f64 / 2.0);
            let fin = series(&b, &bn, &zpe, &p1v, 4.0, d as f64 / 4.0);
            let init = series(&b, &bn, &zpe, &p2v, 2.0, d as f64 / 2.0);
            let ratio = b.div(&p2v, &pf);
            let q4 = b.powr(&ratio, 1.0, 4.0);
            let p2q = b.powr(&p2v, 1.0, 4.0);
            let den = b.mul(&zpe, &b.sub(&b.f(1.0), &b.mul(&b.mul(&two, &zpe), &p2q)));
            let span = b.mul(&b.div(&b.mul(&bn, &q4), &den), &b.powr(&ratio, t as f64, 2.0));
            let p1q = b.powr(&p1v, 1.0, 4.0);
            let rden = b.mul(&b.e, &b.sub(&b.f(1.0), &b.mul(&b.mul(&two, &zpe), &p1q)));
            let resid = b.div(&b.mul(&b.mul(&b.mul(&b.f(4.0), &zpe), &b.e), &b.sqrt(&p1v)), &rden);
            // the static bound uses its own threshold, which p may exceed
            let expected = [
                Some(stat),
                Some(interior),
                Some(fin),
                Some(init),
                Some(span),
                Some(resid),
            ];
            for (bound, exp) in bounds.iter().zip(expected) {
                match (bound.value, exp) {
                    (Some(v), Some(x)) => check(&bound.name, v, &x)?,
                    (None, _) if bound.name == "static" && inputs.p >= k.p0_static => {}
                    (got, _) => return Err(format!("point {point}: {} = {got:?}", bound.name)),
                }
            }
        }

        // location budget
        let (ni, ki, rounds) = (rng.gen_range(13..500), 1, rng.gen_range(1..10));
        let lb = location_budget(&params, ni, ki, rounds).map_err(|e| e.to_string())?;
        let per = b.add(
            &b.f((s * l * ni) as f64),
            &b.mul(
                &b.f((ni - ki) as f64),
                &b.add(&b.div(&ba, &one_m_pa), &b.f(2.0 * r as f64)),
            ),
        );
        check("locations_per_cycle", lb.per_cycle, &b.mul(&b.f(rounds as f64), &per))?;

        // logical gate conditions
        let p0 = k.p0();
        let checks = logical_gate_threshold_checks(p, p0, params.b_concat, &rates, &k);
        let bb = b.f(params.b_concat + 4.0);
        let bp0 = b.f(p0);
        let cnot = b.add(&b.div(&b.mul(&b.f(2.0), &bp0), &b.f(3.0)), &b.mul(&bb, &bp));
        let pi8 = b.add(&b.div(&bp0, &b.f(3.0)), &b.mul(&b.mul(&b.f(2.0), &bb), &bp));
        check("cnot lhs", checks[0].lhs, &cnot)?;
        check("pi/8 lhs", checks[1].lhs, &pi8)?;
        let cnot_holds = cnot.cmp(&bp0).is_some_and(|o| o < 0);
        let pi8_holds = pi8.cmp(&bp0).is_some_and(|o| o < 0);
        ensure!(
            checks[0].holds == cnot_holds && checks[1].holds == pi8_holds,
            "point {point}: gate verdicts"
        );
        ensure!(
            checks[2].holds == (rates.p_d < k.p1) && checks[3].holds == (rates.q < k.p2),
            "point {point}: rate verdicts"
        );
    }
    Ok(format!("50 parameter points, {compared} values within 1e-12 relative"))
}

fn c12_block_plan() -> Outcome {
    let params = ProtocolParams {
        r: 4,
        c: 4,
        a_cat: 12,
        b_concat: 10.0,
        s: 4,
        l: 40,
        r_prime: 5,
        p: 1e-6,
        rate: 1.0 / 13.0,
        eta: 2.0,
        epsilon: 1e-3,
        alpha: 0.5,
        beta: 1.5,
        polylog_a: 3.0,
        polylog_c: 100.0,
        lambda: 0.1,
        omega: 0.1,
        s_prime: 10.0,
    };
    let family = [(13, 1), (41, 1), (85, 1)];
    let plan = plan_blocks(30, &family, 1e4, &params).map_err(|e| e.to_string())?;
    ensure!(
        plan.n_i == 13 && plan.blocks == 30,
        "selected n_i = {}, M = {}",
        plan.n_i,
        plan.blocks
    );
    ensure!(
        (plan.window_lower - 30f64.sqrt()).abs() < 1e-12,
        "k^alpha = {}",
        plan.window_lower
    );
    // independent recount of the plan's qubits
    let pa = params.p * params.a_cat as f64;
    let data = 30.0 * 13.0;
    let ec = 30.0 * 12.0 * params.r_prime as f64 / (params.s as f64 * (1.0 - pa));
    ensure!(
        (plan.data_qubits - data).abs() < 1e-9 && (plan.ec_qubits - ec).abs() < 1e-9 * ec,
        "qubit terms"
    );
    let budget = params.eta * 30.0 / params.rate;
    ensure!((plan.budget - budget).abs() < 1e-9, "budget");
    if plan.feasible {
        ensure!(plan.qubit_total < plan.budget, "feasible but over budget");
        Ok(format!(
            "n_i = 13, M = 30, feasible: {:.1} < {:.1}",
            plan.qubit_total, plan.budget
        ))
    } else {
        ensure!(!plan.violated.is_empty(), "infeasible without a named bound");
        for v in &plan.violated {
            let c = plan
                .checks
                .iter()
                .find(|c| &c.name == v)
                .ok_or("unknown violated bound")?;
            ensure!(!c.holds, "{v} reported violated but holds");
        }
        Ok(format!(
            "n_i = 13, M = 30, qubit total {:.1} vs eta k/R = {:.1}; violated: {}",
            plan.qubit_total,
            plan.budget,
            plan.violated.join(", ")
        ))
    }
}

fn c13_witness(runs: &[ExperimentSummary]) -> Outcome {
    let checked: u64 = runs.iter().map(|s| s.witness.checked).sum();
    let half: u64 = runs.iter().map(|s| s.witness.half).sum();
    ensure!(checked > 0, "no failures were logged");
    ensure!(half == checked, "{half} of {checked} failures have a witness cluster");
    Ok(format!(
        "{checked}/{checked} static failures have a cluster with s >= d and >= ceil(s/2) errors"
    ))
}

fn c14_determinism() -> Outcome {
    let mut outputs = Vec::new();
    for noise in [
        NoiseModel::Phenomenological {
            p: 0.02,
            q: 0.02,
            p_init: None,
            channel: Channel::Depolarizing,
        },
        NoiseModel::Circuit {
            p: 5e-4,
            p_init: Some(0.0),
            mode: ExtractionMode::Shor,
        },
    ] {
        let mut csvs = Vec::new();
        for workers in [1, 2, 8] {
            let config = ExperimentConfig {
                code: CodeSpec::repetition(3),
                noise,
                decoding: Decoding::SpaceTime,
                decoder: DecoderKind::greedy_default(),
                trials: 3_000,
                seed: 14,
                rounds: None,
                workers: Some(workers),
                archive_dir: None,
                max_archived: None,
            };
            let row = run_memory_experiment(&config).map_err(|e| e.to_string())?.row;
            csvs.push(csv_string(&[row]).map_err(|e| e.to_string())?);
        }
        ensure!(
            csvs.windows(2).all(|w| w[0] == w[1]),
            "CSV differs across worker counts"
        );
        outputs.push(csvs.swap_remove(0));
    }
    Ok(format!(
        "identical CSV at 1, 2 and 8 workers for {} configurations",
        outputs.len()
    ))
}

fn run(num: usize, name: &str, f: impl FnOnce() -> Outcome, failed: &mut usize) {
    let start = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match res {
        Ok(detail) => println!("criterion {num:>2} PASS  {name}: {detail} ({secs:.1} s)"),
        Err(detail) => {
            *failed += 1;
            println!("criterion {num:>2} FAIL  {name}: {detail} ({secs:.1} s)");
        }
    }
}

fn main() {
    let mut failed = 0;
    run(1, "construction identities", c1_construction, &mut failed);
    run(2, "distance certification", c2_distance, &mut failed);
    run(3, "logical operator algebra", c3_logicals, &mut failed);
    run(4, "static decoder correctness", c4_static, &mut failed);
    run(5, "cluster counting bound", c5_cluster_count, &mut failed);
    run(6, "space-time oracle equivalence", c6_spacetime_oracle, &mut failed);
    run(7, "telescoping identity", c7_telescoping, &mut failed);
    run(8, "fault association bound", c8_fault_association, &mut failed);
    let runs = slope_runs();
    run(
        9,
        "scaling slope",
        || runs.as_ref().map_err(Clone::clone).and_then(|r| c9_slope(r)),
        &mut failed,
    );
    run(10, "threshold crossing", c10_threshold, &mut failed);
    run(11, "overhead formula golden values", c11_overhead_golden, &mut failed);
    run(12, "block planning", c12_block_plan, &mut failed);
    run(
        13,
        "failure cluster witness",
        || runs.as_ref().map_err(Clone::clone).and_then(|r| c13_witness(r)),
        &mut failed,
    );
    run(14, "determinism", c14_determinism, &mut failed);
    println!("acceptance: {} passed, {failed} failed", 14 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
