//! Fault paths for the phenomenological model, i.i.d. sampling, observed
//! syndrome differences, and an empirical local-stochastic check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::NoiseError;
use crate::gf2::BitVec;
use crate::pauli::{Pauli, PauliOperator};
use crate::stabcode::StabilizerCode;
use crate::stats::wilson_interval;

/// Pauli type drawn on a data or initialization hit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Uniform over X, Y, Z.
    #[default]
    Depolarizing,
    XOnly,
    ZOnly,
}

impl Channel {
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> Pauli {
        match self {
            Channel::Depolarizing => Pauli::NON_IDENTITY[rng.gen_range(0..3)],
            Channel::XOnly => Pauli::X,
            Channel::ZOnly => Pauli::Z,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhenomenologicalParams {
    /// Initialization error rate per qubit.
    pub p_init: f64,
    /// New data error rate per qubit per round.
    pub p_data: f64,
    /// Syndrome-bit flip rate per bit per round.
    pub q_synd: f64,
    pub rounds: usize,
    #[serde(default)]
    pub channel: Channel,
}

impl PhenomenologicalParams {
    pub fn new(p_init: f64, p_data: f64, q_synd: f64, rounds: usize) -> Result<Self, NoiseError> {
        let params = Self {
            p_init,
            p_data,
            q_synd,
            rounds,
            channel: Channel::Depolarizing,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_channel(mut self, channel: Channel) -> Self {
        self.channel = channel;
        self
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        for (name, v) in [
            ("p_init", self.p_init),
            ("p_data", self.p_data),
            ("q_synd", self.q_synd),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(NoiseError::Params(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if self.rounds < 1 {
            return Err(NoiseError::Params("rounds must be at least 1".into()));
        }
        Ok(())
    }
}

/// Ground-truth faults of one error-correction cycle. Round `t` (1-based) is
/// stored at index `t - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultPath {
    pub init_error: PauliOperator,
    pub data_errors: Vec<PauliOperator>,
    pub synd_errors: Vec<BitVec>,
}

/// One fallible location of the phenomenological model; rounds are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Location {
    Init { qubit: usize },
    Data { round: usize, qubit: usize },
    Synd { round: usize, bit: usize },
}

impl FaultPath {
    pub fn empty(n: usize, m: usize, rounds: usize) -> Self {
        Self {
            init_error: PauliOperator::identity(n),
            data_errors: vec![PauliOperator::identity(n); rounds],
            synd_errors: vec![BitVec::zeros(m); rounds],
        }
    }

    pub fn for_code(code: &StabilizerCode, rounds: usize) -> Self {
        Self::empty(code.n(), code.num_checks(), rounds)
    }

    pub fn rounds(&self) -> usize {
        self.data_errors.len()
    }

    pub fn n(&self) -> usize {
        self.init_error.n()
    }

    pub fn check_dims(&self, code: &StabilizerCode) -> Result<(), NoiseError> {
        let n = code.n();
        let m = code.num_checks();
        if self.rounds() == 0 || self.synd_errors.len() != self.rounds() {
            return Err(NoiseError::Dimension(format!(
                "{} data rounds, {} syndrome rounds",
                self.data_errors.len(),
                self.synd_errors.len()
            )));
        }
        if self.init_error.n() != n || self.data_errors.iter().any(|f| f.n() != n) {
            return Err(NoiseError::Dimension(format!("code has {n} qubits")));
        }
        if self.synd_errors.iter().any(|b| b.len() != m) {
            return Err(NoiseError::Dimension(format!("code has {m} syndrome bits")));
        }
        Ok(())
    }

    /// Product of the initialization error and all data errors.
    pub fn cumulative_error(&self) -> PauliOperator {
        let mut acc = self.init_error.clone();
        for f in &self.data_errors {
            acc.mul_assign(f);
        }
        acc
    }

    /// Pointwise product / XOR of two paths of equal shape.
    pub fn compose(&self, other: &FaultPath) -> FaultPath {
        FaultPath {
            init_error: self.init_error.mul(&other.init_error),
            data_errors: self
                .data_errors
                .iter()
                .zip(&other.data_errors)
                .map(|(a, b)| a.mul(b))
                .collect(),
            synd_errors: self
                .synd_errors
                .iter()
                .zip(&other.synd_errors)
                .map(|(a, b)| a.xor(b))
                .collect(),
        }
    }

    /// Number of faulty locations.
    pub fn weight(&self) -> usize {
        self.init_error.weight()
            + self.data_errors.iter().map(PauliOperator::weight).sum::<usize>()
            + self.synd_errors.iter().map(BitVec::weight).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.weight() == 0
    }

    /// Faulty locations in sampling order.
    pub fn locations(&self) -> Vec<Location> {
        let mut out: Vec<Location> = self
            .init_error
            .support()
            .into_iter()
            .map(|qubit| Location::Init { qubit })
            .collect();
        for t in 0..self.rounds() {
            out.extend(
                self.data_errors[t]
                    .support()
                    .into_iter()
                    .map(|qubit| Location::Data { round: t + 1, qubit }),
            );
            out.extend(
                self.synd_errors[t]
                    .iter_ones()
                    .map(|bit| Location::Synd { round: t + 1, bit }),
            );
        }
        out
    }

    pub fn contains(&self, loc: Location) -> bool {
        match loc {
            Location::Init { qubit } => self.init_error.get(qubit) != Pauli::I,
            Location::Data { round, qubit } => self.data_errors[round - 1].get(qubit) != Pauli::I,
            Location::Synd { round, bit } => self.synd_errors[round - 1].get(bit),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("fault path serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, NoiseError> {
        serde_json::from_str(text).map_err(|e| NoiseError::Dimension(e.to_string()))
    }
}

/// Anything that produces fault paths for a code; used to plug in
/// correlated or adversarial noise alongside the i.i.d. sampler.
pub trait FaultSource: Sync {
    fn sample(&self, code: &StabilizerCode, rng: &mut ChaCha8Rng) -> FaultPath;
}

/// The i.i.d. phenomenological sampler as a [`FaultSource`].
#[derive(Clone, Copy, Debug)]
pub struct IidSource(pub PhenomenologicalParams);

impl FaultSource for IidSource {
    fn sample(&self, code: &StabilizerCode, rng: &mut ChaCha8Rng) -> FaultPath {
        sample_iid_with(&self.0, code, rng)
    }
}

/// Draws initialization errors, then for each round the data errors followed
/// by the syndrome-bit flips.
pub fn sample_iid_with<R: Rng + ?Sized>(
    params: &PhenomenologicalParams,
    code: &StabilizerCode,
    rng: &mut R,
) -> FaultPath {
    let n = code.n();
    let m = code.num_checks();
    let mut fp = FaultPath::empty(n, m, params.rounds);
    for q in 0..n {
        if rng.gen::<f64>() < params.p_init {
            fp.init_error.set(q, params.channel.draw(rng));
        }
    }
    for t in 0..params.rounds {
        for q in 0..n {
            if rng.gen::<f64>() < params.p_data {
                fp.data_errors[t].set(q, params.channel.draw(rng));
            }
        }
        for b in 0..m {
            if rng.gen::<f64>() < params.q_synd {
                fp.synd_errors[t].set(b, true);
            }
        }
    }
    fp
}

pub fn sample_iid(params: &PhenomenologicalParams, code: &StabilizerCode, seed: u64) -> FaultPath {
    sample_iid_with(params, code, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `Δ_1 = σ(init·F_1) ⊕ B_1` and `Δ_t = B_{t-1} ⊕ B_t ⊕ σ(F_t)` for `t > 1`.
pub fn observed_syndromes(code: &StabilizerCode, fp: &FaultPath) -> Result<Vec<BitVec>, NoiseError> {
    fp.check_dims(code)?;
    let mut out = Vec::with_capacity(fp.rounds());
    for t in 0..fp.rounds() {
        let mut delta = if t == 0 {
            code.syndrome_unchecked(&fp.init_error.mul(&fp.data_errors[0]))
        } else {
            let mut d = code.syndrome_unchecked(&fp.data_errors[t]);
            d.xor_assign(&fp.synd_errors[t - 1]);
            d
        };
        delta.xor_assign(&fp.synd_errors[t]);
        out.push(delta);
    }
    Ok(out)
}

/// Noisy syndrome actually reported in each round: `σ(errors so far) ⊕ B_t`.
pub fn measured_syndromes(code: &StabilizerCode, fp: &FaultPath) -> Result<Vec<BitVec>, NoiseError> {
    fp.check_dims(code)?;
    let mut acc = fp.init_error.clone();
    Ok((0..fp.rounds())
        .map(|t| {
            acc.mul_assign(&fp.data_errors[t]);
            code.syndrome_unchecked(&acc).xor(&fp.synd_errors[t])
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalStochasticEntry {
    pub locations: Vec<Location>,
    pub hits: u64,
    pub trials: u64,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `rate^a` for a set of `a` locations.
    pub bound: f64,
    /// Set when even the lower confidence limit exceeds the bound.
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalStochasticReport {
    pub entries: Vec<LocalStochasticEntry>,
}

impl LocalStochasticReport {
    pub fn any_violation(&self) -> bool {
        self.entries.iter().any(|e| e.violated)
    }
}

/// Deterministic panel of location sets of sizes 1, 2, 3 spread over the
/// first round, the last round and the initialization layer.
pub fn default_panel(n: usize, m: usize, rounds: usize) -> Vec<Vec<Location>> {
    let last = rounds.max(1);
    let d = |round, qubit| Location::Data {
        round,
        qubit: qubit % n,
    };
    let s = |round, bit| Location::Synd {
        round,
        bit: bit % m.max(1),
    };
    let mut panel = vec![
        vec![d(1, 0)],
        vec![Location::Init { qubit: n - 1 }],
        vec![d(1, 0), d(1, n / 2)],
        vec![d(1, 1), d(last, n - 1)],
        vec![d(1, 0), d(1, n / 2), Location::Init { qubit: n - 1 }],
    ];
    if m > 0 {
        panel.push(vec![s(1, 0)]);
        panel.push(vec![s(1, 0), d(last, 1)]);
        panel.push(vec![s(1, 0), s(last, m / 2), d(1, n / 2)]);
    }
    panel.retain(|set| {
        let mut v = set.clone();
        v.sort();
        v.dedup();
        v.len() == set.len()
    });
    panel
}

/// Empirical joint frequency of each panel set against `rate^a`, with Wilson
/// intervals at normal quantile `z`.
pub fn local_stochastic_check(
    paths: &[FaultPath],
    rate: f64,
    panel: &[Vec<Location>],
    z: f64,
) -> LocalStochasticReport {
    let trials = paths.len() as u64;
    let entries = panel
        .iter()
        .map(|set| {
            let hits = paths.iter().filter(|fp| set.iter().all(|&l| fp.contains(l))).count() as u64;
            let (ci_low, ci_high) = wilson_interval(hits, trials, z);
            let bound = rate.powi(set.len() as i32);
            LocalStochasticEntry {
                locations: set.clone(),
                hits,
                trials,
                frequency: if trials == 0 { 0.0 } else { hits as f64 / trials as f64 },
                ci_low,
                ci_high,
                bound,
                violated: ci_low > bound,
            }
        })
        .collect();
    LocalStochasticReport { entries }
}
