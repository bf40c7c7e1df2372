//! Monte Carlo memory experiments: seeded parallel trials, Wilson intervals,
//! CSV rows, run manifests and replayable failure archives.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::construct::{code_family, SeedKind};
use crate::decoder::{
    code_graph, evaluate_static, DecodeResult, DecodeStatus, DecoderKind, SpaceTimeDecoder, StaticDecoder,
};
use crate::error::{DecodeError, HarnessError};
use crate::graphs::Graph;
use crate::noise::{observed_syndromes, sample_iid_with, Channel, FaultPath, PhenomenologicalParams};
use crate::overhead::{effective_rates, EffectiveRates, ProtocolParams};
use crate::pauli::PauliOperator;
use crate::shorec::{ExtractionMode, ShorRound};
use crate::stabcode::{CodeDescriptor, StabilizerCode};
use crate::stats::{wilson_interval, Z95};

/// Codes above this length take their distance from the construction.
pub const DISTANCE_SEARCH_MAX_N: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum CodeSpec {
    /// Hypergraph product of a classical seed code of the given length.
    Product {
        seed: SeedKind,
        size: usize,
    },
    Descriptor {
        descriptor: CodeDescriptor,
    },
}

impl CodeSpec {
    pub fn repetition(size: usize) -> Self {
        CodeSpec::Product {
            seed: SeedKind::Repetition,
            size,
        }
    }

    pub fn build(&self) -> Result<StabilizerCode, HarnessError> {
        match self {
            CodeSpec::Product { seed, size } => {
                let fam = code_family(*seed, &[*size])?;
                Ok(fam.members.into_iter().next().expect("one member"))
            }
            CodeSpec::Descriptor { descriptor } => {
                let text = serde_json::to_string(descriptor)?;
                Ok(StabilizerCode::from_json(&text)?)
            }
        }
    }
}

/// Distance by exhaustive search for small codes, else the construction's hint.
pub fn resolve_distance(code: &StabilizerCode) -> Result<usize, HarnessError> {
    if code.n() <= DISTANCE_SEARCH_MAX_N {
        if let Some(d) = code.distance(code.n())? {
            return Ok(d);
        }
    }
    code.distance_hint()
        .ok_or_else(|| HarnessError::Config(format!("no distance known for a code with n = {}", code.n())))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum NoiseModel {
    Phenomenological {
        p: f64,
        q: f64,
        /// Defaults to `p`.
        #[serde(default)]
        p_init: Option<f64>,
        #[serde(default)]
        channel: Channel,
    },
    /// Shor extraction with i.i.d. location faults at `p`; the final round's
    /// carried errors belong to the next cycle and are dropped.
    Circuit {
        p: f64,
        #[serde(default)]
        p_init: Option<f64>,
        #[serde(default)]
        mode: ExtractionMode,
    },
}

impl NoiseModel {
    pub fn p(&self) -> f64 {
        match *self {
            NoiseModel::Phenomenological { p, .. } | NoiseModel::Circuit { p, .. } => p,
        }
    }

    /// Syndrome error rate reported in results; the location rate for circuits.
    pub fn q(&self) -> f64 {
        match *self {
            NoiseModel::Phenomenological { q, .. } => q,
            NoiseModel::Circuit { p, .. } => p,
        }
    }

    fn p_init(&self) -> f64 {
        match *self {
            NoiseModel::Phenomenological { p, p_init, .. } | NoiseModel::Circuit { p, p_init, .. } => {
                p_init.unwrap_or(p)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoding {
    /// Minimum-weight decoding of the accumulated syndrome.
    Static,
    #[default]
    SpaceTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub code: CodeSpec,
    pub noise: NoiseModel,
    #[serde(default)]
    pub decoding: Decoding,
    pub decoder: DecoderKind,
    pub trials: u64,
    pub seed: u64,
    /// Defaults to the code distance.
    #[serde(default)]
    pub rounds: Option<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub archive_dir: Option<PathBuf>,
    /// Cap on archived failures per run.
    #[serde(default)]
    pub max_archived: Option<usize>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials < 1 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        match self.decoder {
            DecoderKind::Exact { cap: 0 } => return Err(HarnessError::Config("decoder cap must be positive".into())),
            DecoderKind::GreedyCluster {
                local_cap,
                node_budget,
                max_growth,
            } if local_cap == 0 || node_budget == 0 || max_growth == 0 => {
                return Err(HarnessError::Config("decoder caps must be positive".into()))
            }
            _ => {}
        }
        if self.rounds == Some(0) || self.workers == Some(0) {
            return Err(HarnessError::Config("rounds and workers must be positive".into()));
        }
        let p = self.noise.p();
        let q = self.noise.q();
        let pi = self.noise.p_init();
        if ![p, q, pi].iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(HarnessError::Config("noise rates must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One CSV row per configuration cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub code_id: String,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub p: f64,
    pub q: f64,
    #[serde(rename = "T")]
    pub rounds: usize,
    pub trials: u64,
    pub failures: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusCounts {
    pub success: u64,
    pub logical_failure: u64,
    pub spanning_cluster_failure: u64,
    pub decoder_cap_exceeded: u64,
}

impl StatusCounts {
    fn add(&mut self, s: DecodeStatus) {
        match s {
            DecodeStatus::Success | DecodeStatus::Unverified => self.success += 1,
            DecodeStatus::LogicalFailure => self.logical_failure += 1,
            DecodeStatus::SpanningClusterFailure => self.spanning_cluster_failure += 1,
            DecodeStatus::DecoderCapExceeded => self.decoder_cap_exceeded += 1,
        }
    }

    pub fn failures(&self) -> u64 {
        self.logical_failure + self.spanning_cluster_failure + self.decoder_cap_exceeded
    }
}

/// Cluster predicates over decoded failures (cap-exceeded trials excluded).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessTally {
    pub checked: u64,
    /// Failures with a cluster of size `s >= d` holding `>= ⌈s/2⌉` actual errors.
    pub half: u64,
    /// Failures with such a cluster holding `>= s/4` actual errors.
    pub quarter: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub status: DecodeStatus,
    pub residual_weight: usize,
    pub wall_nanos: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub row: ResultRow,
    pub statuses: StatusCounts,
    pub witness: WitnessTally,
    /// Rejected cat preparations (circuit noise only).
    pub cat_retries: u64,
    pub archived: Vec<PathBuf>,
    pub wall_seconds: f64,
}

/// A failed trial with everything needed to decode it again.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchivedFailure {
    pub code: CodeSpec,
    pub decoding: Decoding,
    pub decoder: DecoderKind,
    pub rounds: usize,
    pub distance: usize,
    pub seed: u64,
    pub trial: u64,
    pub status: DecodeStatus,
    pub fault_path: FaultPath,
}

/// Per-trial generator: the master seed with the trial index as stream.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[allow(clippy::large_enum_variant)]
enum Engine {
    Static {
        decoder: StaticDecoder,
        graph: Graph,
        cap: usize,
    },
    SpaceTime(SpaceTimeDecoder),
}

struct Prepared {
    code: StabilizerCode,
    d: usize,
    rounds: usize,
    engine: Engine,
    shor: Option<ShorRound>,
}

impl Prepared {
    fn new(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let code = config.code.build()?;
        let d = resolve_distance(&code)?;
        let rounds = config.rounds.unwrap_or(d);
        let engine = match config.decoding {
            Decoding::Static => {
                let cap = match config.decoder {
                    DecoderKind::Exact { cap } => cap,
                    DecoderKind::GreedyCluster { .. } => code.n(),
                };
                Engine::Static {
                    decoder: StaticDecoder::for_kind(&code, &config.decoder),
                    graph: code_graph(&code),
                    cap,
                }
            }
            Decoding::SpaceTime => Engine::SpaceTime(
                SpaceTimeDecoder::new(&code, rounds, config.decoder, d)
                    .map_err(|e| HarnessError::Config(e.to_string()))?,
            ),
        };
        let shor = match config.noise {
            NoiseModel::Circuit { mode, .. } => Some(ShorRound::new(&code, mode)?),
            NoiseModel::Phenomenological { .. } => None,
        };
        Ok(Self {
            code,
            d,
            rounds,
            engine,
            shor,
        })
    }

    fn phenomenological(&self, noise: &NoiseModel) -> Result<PhenomenologicalParams, HarnessError> {
        let (p, q, channel) = match *noise {
            NoiseModel::Phenomenological { p, q, channel, .. } => (p, q, channel),
            NoiseModel::Circuit { .. } => (0.0, 0.0, Channel::Depolarizing),
        };
        Ok(PhenomenologicalParams::new(noise.p_init(), p, q, self.rounds)?.with_channel(channel))
    }

    fn sample(&self, noise: &NoiseModel, rng: &mut ChaCha8Rng) -> Result<(FaultPath, u64), HarnessError> {
        let params = self.phenomenological(noise)?;
        match (&self.shor, noise) {
            (Some(round), NoiseModel::Circuit { p, .. }) => {
                let n = self.code.n();
                let mut fp = FaultPath::for_code(&self.code, self.rounds);
                for q in 0..n {
                    if rng.gen::<f64>() < params.p_init {
                        fp.init_error.set(q, Channel::Depolarizing.draw(rng));
                    }
                }
                let mut retries = 0;
                for t in 0..self.rounds {
                    let (frag, r) = round.sample(*p, rng);
                    retries += r;
                    fp.data_errors[t].mul_assign(&frag.data_current);
                    fp.synd_errors[t] = frag.synd;
                    if t + 1 < self.rounds {
                        fp.data_errors[t + 1].mul_assign(&frag.data_next);
                    }
                }
                Ok((fp, retries))
            }
            _ => Ok((sample_iid_with(&params, &self.code, rng), 0)),
        }
    }

    fn decode(&self, truth: &FaultPath) -> Result<Option<DecodeResult>, HarnessError> {
        let deltas = observed_syndromes(&self.code, truth)?;
        let res = match &self.engine {
            Engine::Static { decoder, graph, cap } => {
                evaluate_static(&self.code, decoder, graph, truth, &deltas, *cap, self.d)
            }
            Engine::SpaceTime(dec) => dec.decode(&deltas, Some(truth)),
        };
        match res {
            Ok(r) => Ok(Some(r)),
            Err(DecodeError::NotFound { .. } | DecodeError::CapExceeded(_)) => Ok(None),
            Err(e) => Err(HarnessError::Config(e.to_string())),
        }
    }
}

struct TrialRecord {
    outcome: TrialOutcome,
    retries: u64,
    half: bool,
    quarter: bool,
    path: Option<FaultPath>,
}

fn run_trial(
    prep: &Prepared,
    config: &ExperimentConfig,
    trial: u64,
    keep_path: bool,
) -> Result<TrialRecord, HarnessError> {
    let start = Instant::now();
    let mut rng = trial_rng(config.seed, trial);
    let (truth, retries) = prep.sample(&config.noise, &mut rng)?;
    let res = prep.decode(&truth)?;
    let (status, residual_weight, half, quarter) = match &res {
        None => (DecodeStatus::DecoderCapExceeded, 0, false, false),
        Some(r) => {
            let diag = r.diagnostics.as_ref();
            (
                r.status,
                r.residual_estimate.as_ref().map_or(0, PauliOperator::weight),
                diag.is_some_and(|d| d.witness_half),
                diag.is_some_and(|d| d.witness_quarter),
            )
        }
    };
    Ok(TrialRecord {
        outcome: TrialOutcome {
            status,
            residual_weight,
            wall_nanos: start.elapsed().as_nanos() as u64,
        },
        retries,
        half,
        quarter,
        path: (keep_path && status.is_failure()).then_some(truth),
    })
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn make_row(
    code: &StabilizerCode,
    d: usize,
    rounds: usize,
    config: &ExperimentConfig,
    trials: u64,
    failures: u64,
) -> ResultRow {
    let (ci_low, ci_high) = wilson_interval(failures, trials, Z95);
    ResultRow {
        code_id: code.name().unwrap_or("code").to_string(),
        n: code.n(),
        k: code.k(),
        d,
        p: config.noise.p(),
        q: config.noise.q(),
        rounds,
        trials,
        failures,
        rate: failures as f64 / trials as f64,
        ci_low,
        ci_high,
        seed: config.seed,
    }
}

/// Runs `config.trials` independent memory cycles and tallies outcomes.
pub fn run_memory_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary, HarnessError> {
    let start = Instant::now();
    let prep = Prepared::new(config)?;
    let keep = config.archive_dir.is_some();
    let records: Vec<TrialRecord> = with_workers(config.workers, || {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(&prep, config, t, keep))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let mut statuses = StatusCounts::default();
    let mut witness = WitnessTally::default();
    let mut cat_retries = 0;
    for r in &records {
        statuses.add(r.outcome.status);
        cat_retries += r.retries;
        if r.outcome.status.is_failure() && r.outcome.status != DecodeStatus::DecoderCapExceeded {
            witness.checked += 1;
            witness.half += r.half as u64;
            witness.quarter += r.quarter as u64;
        }
    }
    let mut archived = Vec::new();
    if let Some(dir) = &config.archive_dir {
        std::fs::create_dir_all(dir)?;
        let limit = config.max_archived.unwrap_or(usize::MAX);
        for (trial, r) in records.iter().enumerate() {
            if archived.len() >= limit {
                break;
            }
            if let Some(path) = &r.path {
                let entry = ArchivedFailure {
                    code: config.code.clone(),
                    decoding: config.decoding,
                    decoder: config.decoder,
                    rounds: prep.rounds,
                    distance: prep.d,
                    seed: config.seed,
                    trial: trial as u64,
                    status: r.outcome.status,
                    fault_path: path.clone(),
                };
                let name = format!(
                    "failure-{}-p{}-s{}-t{}.json",
                    prep.code.name().unwrap_or("code"),
                    config.noise.p(),
                    config.seed,
                    trial
                );
                let file = dir.join(name);
                std::fs::write(&file, serde_json::to_string_pretty(&entry)?)?;
                archived.push(file);
            }
        }
    }
    let row = make_row(
        &prep.code,
        prep.d,
        prep.rounds,
        config,
        config.trials,
        statuses.failures(),
    );
    Ok(ExperimentSummary {
        row,
        statuses,
        witness,
        cat_retries,
        archived,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Decodes an archived fault path again and returns its status.
pub fn replay_failure(entry: &ArchivedFailure) -> Result<DecodeStatus, HarnessError> {
    let config = ExperimentConfig {
        code: entry.code.clone(),
        noise: NoiseModel::Phenomenological {
            p: 0.0,
            q: 0.0,
            p_init: None,
            channel: Channel::Depolarizing,
        },
        decoding: entry.decoding,
        decoder: entry.decoder,
        trials: 1,
        seed: entry.seed,
        rounds: Some(entry.rounds),
        workers: None,
        archive_dir: None,
        max_archived: None,
    };
    let prep = Prepared::new(&config)?;
    entry.fault_path.check_dims(&prep.code)?;
    Ok(prep
        .decode(&entry.fault_path)?
        .map_or(DecodeStatus::DecoderCapExceeded, |r| r.status))
}

pub fn load_archive(path: &Path) -> Result<ArchivedFailure, HarnessError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String, HarnessError> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

/// Full configuration and results of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub version: &'static str,
    pub config: C,
    pub rows: Vec<ResultRow>,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(config: C, rows: Vec<ResultRow>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            config,
            rows,
        }
    }

    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub seed_code: SeedKind,
    pub sizes: Vec<usize>,
    pub p_grid: Vec<f64>,
    /// `q = q_factor · p`.
    #[serde(default = "one")]
    pub q_factor: f64,
    #[serde(default)]
    pub decoding: Decoding,
    pub decoder: DecoderKind,
    pub trials: u64,
    pub seed: u64,
    /// Defaults to each member's distance.
    #[serde(default)]
    pub rounds: Option<usize>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// A cell is too wide when `ci_high - ci_low > max(rel · rate, abs)`.
    #[serde(default = "default_rel_width")]
    pub max_rel_width: f64,
    #[serde(default = "default_abs_width")]
    pub max_abs_width: f64,
}

fn one() -> f64 {
    1.0
}

fn default_rel_width() -> f64 {
    0.5
}

fn default_abs_width() -> f64 {
    0.01
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderingVerdict {
    pub p: f64,
    /// Rates non-increasing with size, strictly where the smaller is non-zero.
    pub decreasing: bool,
    /// No member is significantly better than a smaller one.
    pub non_decreasing: bool,
    /// Adjacent pairs whose Wilson intervals are disjoint.
    pub separated: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanReport {
    /// Code-major: one row per (member, p).
    pub rows: Vec<ResultRow>,
    /// `rates[member][p]`.
    pub rates: Vec<Vec<f64>>,
    pub wide: Vec<Vec<bool>>,
    pub low: Option<OrderingVerdict>,
    pub high: Option<OrderingVerdict>,
    /// Below-threshold ordering at the lowest p and its reversal or
    /// flattening at the highest.
    pub crossing: Option<bool>,
}

fn ordering(rows: &[&ResultRow]) -> OrderingVerdict {
    let pairs: Vec<(&ResultRow, &ResultRow)> = rows.windows(2).map(|w| (w[0], w[1])).collect();
    OrderingVerdict {
        p: rows[0].p,
        decreasing: pairs
            .iter()
            .all(|(a, b)| b.rate <= a.rate && (a.rate == 0.0 || b.rate < a.rate)),
        non_decreasing: pairs.iter().all(|(a, b)| b.ci_high >= a.ci_low),
        separated: pairs
            .iter()
            .map(|(a, b)| a.ci_low > b.ci_high || b.ci_low > a.ci_high)
            .collect(),
    }
}

pub fn threshold_scan(scan: &ScanConfig) -> Result<ScanReport, HarnessError> {
    if scan.sizes.is_empty() || scan.p_grid.is_empty() {
        return Err(HarnessError::Config("need at least one size and one p".into()));
    }
    let mut rows = Vec::new();
    let mut rates = Vec::new();
    let mut wide = Vec::new();
    for &size in &scan.sizes {
        let mut r_line = Vec::new();
        let mut w_line = Vec::new();
        for &p in &scan.p_grid {
            let config = ExperimentConfig {
                code: CodeSpec::Product {
                    seed: scan.seed_code,
                    size,
                },
                noise: NoiseModel::Phenomenological {
                    p,
                    q: (scan.q_factor * p).min(1.0),
                    p_init: None,
                    channel: Channel::Depolarizing,
                },
                decoding: scan.decoding,
                decoder: scan.decoder,
                trials: scan.trials,
                seed: scan.seed,
                rounds: scan.rounds,
                workers: scan.workers,
                archive_dir: None,
                max_archived: None,
            };
            let s = run_memory_experiment(&config)?;
            r_line.push(s.row.rate);
            w_line.push(s.row.ci_high - s.row.ci_low > f64::max(scan.max_rel_width * s.row.rate, scan.max_abs_width));
            rows.push(s.row);
        }
        rates.push(r_line);
        wide.push(w_line);
    }
    let np = scan.p_grid.len();
    let verdict_at = |j: usize| -> Option<OrderingVerdict> {
        if scan.sizes.len() < 2 || wide.iter().any(|w| w[j]) {
            return None;
        }
        let col: Vec<&ResultRow> = (0..scan.sizes.len()).map(|i| &rows[i * np + j]).collect();
        Some(ordering(&col))
    };
    let (lo_j, hi_j) = {
        let mut idx: Vec<usize> = (0..np).collect();
        idx.sort_by(|&a, &b| scan.p_grid[a].total_cmp(&scan.p_grid[b]));
        (idx[0], idx[np - 1])
    };
    let low = verdict_at(lo_j);
    let high = verdict_at(hi_j);
    let crossing = match (&low, &high) {
        (Some(l), Some(h)) if lo_j != hi_j => Some(l.decreasing && h.non_decreasing),
        _ => None,
    };
    Ok(ScanReport {
        rows,
        rates,
        wide,
        low,
        high,
        crossing,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaggerSummary {
    pub blocks: usize,
    pub s: usize,
    /// Per block-cycle statistics (`trials · M` block-cycles).
    pub row: ResultRow,
    /// Cycles in which at least one block failed.
    pub cycle_failures: u64,
}

/// `M` phenomenological blocks measured one set of `M/s` at a time: each
/// block gets `T` measurements and idles `s - 1` noisy rounds before each.
/// Block `b` of trial `t` uses stream `t·M + b`.
pub fn staggered_ec_experiment(
    config: &ExperimentConfig,
    blocks: usize,
    s: usize,
) -> Result<StaggerSummary, HarnessError> {
    if s < 1 || blocks < s {
        return Err(HarnessError::Config("need M >= s >= 1".into()));
    }
    if !matches!(config.noise, NoiseModel::Phenomenological { .. }) {
        return Err(HarnessError::Config("staggering uses phenomenological noise".into()));
    }
    let prep = Prepared::new(config)?;
    let params = prep.phenomenological(&config.noise)?;
    let idle = PhenomenologicalParams {
        rounds: 1,
        p_init: 0.0,
        q_synd: 0.0,
        ..params
    };
    let m = blocks as u64;
    let per_trial: Vec<Vec<bool>> = with_workers(config.workers, || {
        (0..config.trials)
            .into_par_iter()
            .map(|t| {
                (0..m)
                    .map(|b| {
                        let mut rng = trial_rng(config.seed, t * m + b);
                        let mut fp = sample_iid_with(&params, &prep.code, &mut rng);
                        // extra idle rounds are drawn after the measured cycle
                        for r in 0..prep.rounds {
                            for _ in 1..s {
                                let extra = sample_iid_with(&idle, &prep.code, &mut rng);
                                fp.data_errors[r].mul_assign(&extra.data_errors[0]);
                            }
                        }
                        Ok(prep.decode(&fp)?.is_none_or(|r| r.status.is_failure()))
                    })
                    .collect::<Result<Vec<bool>, HarnessError>>()
            })
            .collect::<Result<Vec<_>, _>>()
    })??;
    let failures = per_trial.iter().flatten().filter(|&&f| f).count() as u64;
    let cycle_failures = per_trial.iter().filter(|v| v.iter().any(|&f| f)).count() as u64;
    let row = make_row(&prep.code, prep.d, prep.rounds, config, config.trials * m, failures);
    Ok(StaggerSummary {
        blocks,
        s,
        row,
        cycle_failures,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircuitComparison {
    pub circuit: ResultRow,
    pub rates: EffectiveRates,
    /// Absent when the effective rates leave `[0, 1]`.
    pub phenomenological: Option<ResultRow>,
    /// `circuit.ci_low <= phenomenological.ci_high`.
    pub holds: Option<bool>,
    pub cat_locations: usize,
    pub depth: usize,
}

/// Circuit-level run next to the phenomenological model at `(p_D, q)`
/// derived from the same circuit's `A`, `l` and `(r, c)`.
pub fn compare_circuit_phenomenological(config: &ExperimentConfig) -> Result<CircuitComparison, HarnessError> {
    let NoiseModel::Circuit { p, p_init, mode } = config.noise else {
        return Err(HarnessError::Config("comparison needs circuit noise".into()));
    };
    let code = config.code.build()?;
    let round = ShorRound::new(&code, mode)?;
    let ldpc = code.tightest_ldpc();
    let a_cat = round.max_prep_locations();
    let params = ProtocolParams {
        r: ldpc.r.max(2),
        c: ldpc.c.max(1),
        a_cat,
        b_concat: 0.0,
        s: 1,
        l: round.depth(),
        r_prime: ldpc.r + 1,
        p,
        rate: 1.0,
        eta: 2.0,
        epsilon: 1.0,
        alpha: 0.5,
        beta: 1.0,
        polylog_a: 3.0,
        polylog_c: 100.0,
        lambda: 0.1,
        omega: 0.1,
        s_prime: 10.0,
    };
    let rates = effective_rates(&params)?;
    let circuit = run_memory_experiment(config)?.row;
    let (phenomenological, holds) = if rates.in_range() {
        let phen = ExperimentConfig {
            noise: NoiseModel::Phenomenological {
                p: rates.p_d,
                q: rates.q,
                p_init,
                channel: Channel::Depolarizing,
            },
            archive_dir: None,
            ..config.clone()
        };
        let row = run_memory_experiment(&phen)?.row;
        let holds = circuit.ci_low <= row.ci_high;
        (Some(row), Some(holds))
    } else {
        (None, None)
    };
    Ok(CircuitComparison {
        circuit,
        rates,
        phenomenological,
        holds,
        cat_locations: a_cat,
        depth: round.depth(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(p: f64, q: f64) -> ExperimentConfig {
        ExperimentConfig {
            code: CodeSpec::repetition(3),
            noise: NoiseModel::Phenomenological {
                p,
                q,
                p_init: None,
                channel: Channel::Depolarizing,
            },
            decoding: Decoding::SpaceTime,
            decoder: DecoderKind::Exact { cap: 4 },
            trials: 200,
            seed: 7,
            rounds: None,
            workers: None,
            archive_dir: None,
            max_archived: None,
        }
    }

    #[test]
    fn noiseless_never_fails() {
        let s = run_memory_experiment(&base(0.0, 0.0)).unwrap();
        assert_eq!(s.row.failures, 0);
        assert_eq!(s.row.rounds, 3);
        assert_eq!(s.statuses.success, 200);
    }

    #[test]
    fn config_validation() {
        let mut c = base(0.01, 0.01);
        c.trials = 0;
        assert!(run_memory_experiment(&c).is_err());
        let mut c = base(0.01, 0.01);
        c.decoder = DecoderKind::Exact { cap: 0 };
        assert!(c.validate().is_err());
        assert!(base(1.5, 0.0).validate().is_err());
    }

    #[test]
    fn same_seed_same_csv() {
        let mut c = base(0.03, 0.03);
        c.workers = Some(1);
        let a = csv_string(&[run_memory_experiment(&c).unwrap().row]).unwrap();
        c.workers = Some(3);
        let b = csv_string(&[run_memory_experiment(&c).unwrap().row]).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("code_id,n,k,d,p,q,T,trials,failures,rate,ci_low,ci_high,seed\n"));
    }

    #[test]
    fn archived_failures_replay() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = base(0.05, 0.05);
        c.decoding = Decoding::Static;
        c.archive_dir = Some(dir.path().to_path_buf());
        c.max_archived = Some(10);
        let s = run_memory_experiment(&c).unwrap();
        assert!(!s.archived.is_empty());
        for f in &s.archived {
            let entry = load_archive(f).unwrap();
            assert_eq!(replay_failure(&entry).unwrap(), entry.status);
        }
    }

    #[test]
    fn stagger_s1_matches_memory_experiment() {
        let c = base(0.02, 0.02);
        let mem = run_memory_experiment(&c).unwrap();
        let st = staggered_ec_experiment(&c, 1, 1).unwrap();
        assert_eq!(st.row, mem.row);
        assert!(staggered_ec_experiment(&c, 1, 2).is_err());
    }

    #[test]
    fn circuit_run_is_deterministic() {
        let mut c = base(0.0, 0.0);
        c.noise = NoiseModel::Circuit {
            p: 1e-3,
            p_init: Some(0.0),
            mode: ExtractionMode::Shor,
        };
        c.trials = 50;
        let a = run_memory_experiment(&c).unwrap();
        let b = run_memory_experiment(&c).unwrap();
        assert_eq!(a.row, b.row);
        assert_eq!(a.cat_retries, b.cat_retries);
    }

    #[test]
    fn scan_single_point_has_no_verdict() {
        let scan = ScanConfig {
            seed_code: SeedKind::Repetition,
            sizes: vec![3],
            p_grid: vec![0.01],
            q_factor: 1.0,
            decoding: Decoding::SpaceTime,
            decoder: DecoderKind::Exact { cap: 4 },
            trials: 20,
            seed: 1,
            rounds: None,
            workers: None,
            max_rel_width: 0.5,
            max_abs_width: 0.01,
        };
        let r = threshold_scan(&scan).unwrap();
        assert_eq!(r.rates.len(), 1);
        assert!(r.low.is_none() && r.crossing.is_none());
    }
}
