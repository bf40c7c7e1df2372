//! Closed-form resource accounting: effective error rates of Shor error
//! correction, threshold constants, cluster failure bounds, location budgets
//! and block planning.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::OverheadError;

fn default_polylog_a() -> f64 {
    3.0
}

fn default_polylog_c() -> f64 {
    100.0
}

fn default_small() -> f64 {
    0.1
}

fn default_s_prime() -> f64 {
    10.0
}

/// Protocol constants. `a_cat` is the number of locations of one cat
/// preparation with its test, `b_concat` the concatenated-decode constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub r: usize,
    pub c: usize,
    pub a_cat: usize,
    #[serde(default)]
    pub b_concat: f64,
    pub s: usize,
    pub l: usize,
    /// Cat plus test qubits per generator.
    pub r_prime: usize,
    pub p: f64,
    /// Asymptotic code rate.
    pub rate: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Polylog exponent of the state-preparation footprint.
    #[serde(default = "default_polylog_a")]
    pub polylog_a: f64,
    /// Constant of the state-preparation footprint.
    #[serde(default = "default_polylog_c")]
    pub polylog_c: f64,
    #[serde(default = "default_small")]
    pub lambda: f64,
    #[serde(default = "default_small")]
    pub omega: f64,
    #[serde(default = "default_s_prime")]
    pub s_prime: f64,
}

impl ProtocolParams {
    pub fn z(&self) -> usize {
        (self.r - 1) * self.c
    }

    pub fn z_prime(&self) -> usize {
        self.z() + 2 * self.c
    }

    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), OverheadError> {
        let bad = |m: &str| Err(OverheadError::Params(m.to_string()));
        if self.r < 2 || self.c < 1 {
            return bad("need r >= 2 and c >= 1");
        }
        if self.s < 1 {
            return bad("s must be at least 1");
        }
        if !(self.eta > 1.0) {
            return bad("eta must exceed 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.beta > 0.0) {
            return bad("beta must be positive");
        }
        if !(0.0..=1.0).contains(&self.p) || !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad("probabilities must lie in [0, 1]");
        }
        if !(self.rate > 0.0 && self.rate <= 1.0) {
            return bad("rate must lie in (0, 1]");
        }
        if self.lambda <= 0.0 || self.omega <= 0.0 || self.s_prime <= 0.0 {
            return bad("lambda, omega and s' must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EffectiveRates {
    /// Per-qubit data error rate per syndrome measurement.
    pub p_p: f64,
    /// Per-bit syndrome error rate.
    pub p_b: f64,
    pub p_d: f64,
    pub q: f64,
}

impl EffectiveRates {
    pub fn in_range(&self) -> bool {
        [self.p_p, self.p_b, self.p_d, self.q]
            .iter()
            .all(|v| (0.0..=1.0).contains(v))
    }
}

pub fn effective_rates(params: &ProtocolParams) -> Result<EffectiveRates, OverheadError> {
    let p = params.p;
    let a = params.a_cat as f64;
    let c = params.c as f64;
    let pa = p * a;
    if pa >= 1.0 {
        return Err(OverheadError::Divergent(pa));
    }
    let s = params.s as f64;
    let l = params.l as f64;
    let r = params.r as f64;
    let p_p = (c * a / (1.0 - pa) + c + s * l) * p;
    let p_b = (a / (1.0 - pa) + 3.0 * r) * p;
    let p_d = p_p.sqrt() / (1.0 - p_b);
    let q = f64::max(2.0 * p_p.powf(1.0 / (c + 1.0)), 2.0 * p_b / (1.0 - p_b));
    Ok(EffectiveRates { p_p, p_b, p_d, q })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdConstants {
    pub z: usize,
    pub z_prime: usize,
    /// `(2ze)^-2`, the static threshold.
    pub p0_static: f64,
    /// `(2z'e)^-4`, which is also the input-error threshold.
    pub p_f: f64,
    /// `(2z'e)^-2`, the threshold for clusters with initial errors.
    pub p_i: f64,
    pub p1: f64,
    pub p2: f64,
}

impl ThresholdConstants {
    pub fn p0(&self) -> f64 {
        self.p_f
    }
}

pub fn threshold_constants(r: usize, c: usize) -> ThresholdConstants {
    let z = (r.max(1) - 1) * c;
    let zp = z + 2 * c;
    let (zf, zpf) = (z as f64, zp as f64);
    let p_f = (2.0 * zpf * E).powi(-4);
    let p12 = (192.0 * zpf.powi(5) * E.powi(6)).powi(-2);
    ThresholdConstants {
        z,
        z_prime: zp,
        p0_static: (2.0 * zf * E).powi(-2),
        p_f,
        p_i: (2.0 * zpf * E).powi(-2),
        p1: p12,
        p2: p12,
    }
}

/// A bound that is `None` when its geometric series diverges.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedBound {
    pub name: String,
    pub value: Option<f64>,
    /// Divergent, or larger than one.
    pub vacuous: bool,
}

impl NamedBound {
    fn new(name: &str, value: Option<f64>) -> Self {
        let vacuous = value.is_none_or(|v| v.is_nan() || v > 1.0);
        Self {
            name: name.to_string(),
            value,
            vacuous,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub rounds: usize,
    /// Incoming error rate.
    pub p_init: f64,
    pub p: f64,
    pub q: f64,
}

/// `n / (ze(1 - 2ze p^{1/m})) (p / thr)^{d/m}` with `thr = (2ze)^{-m}`.
fn cluster_bound(n: f64, ze: f64, p: f64, root: f64, exponent: f64) -> Option<f64> {
    let thr = (2.0 * ze).powf(-root);
    if p >= thr {
        return None;
    }
    let denom = ze * (1.0 - 2.0 * ze * p.powf(1.0 / root));
    Some(n / denom * (p / thr).powf(exponent))
}

/// The static bound and the four space-time cluster cases, plus the
/// residual-error bound for a single qubit.
pub fn failure_bounds(inputs: &BoundInputs, consts: &ThresholdConstants) -> Vec<NamedBound> {
    let ze = consts.z as f64 * E;
    let zpe = consts.z_prime as f64 * E;
    let n = inputs.n as f64;
    let d = inputs.d as f64;
    let t = inputs.rounds as f64;
    let p1 = inputs.p.max(inputs.q);
    let p2 = inputs.p_init.max(p1);
    let n_inner = n * (t - 1.0).max(0.0) + (inputs.n.saturating_sub(inputs.k)) as f64 * t;
    let spanning = if p2 >= consts.p_f {
        None
    } else {
        let ratio = p2 / consts.p_f;
        Some(n * ratio.powf(0.25) / (zpe * (1.0 - 2.0 * zpe * p2.powf(0.25))) * ratio.powf(t / 2.0))
    };
    let residual = if p1 >= consts.p_f {
        None
    } else {
        let denom = E * (1.0 - 2.0 * zpe * p1.powf(0.25));
        Some((4.0 * zpe * E * p1.sqrt()) / denom)
    };
    vec![
        NamedBound::new("static", cluster_bound(n, ze, inputs.p, 2.0, d / 2.0)),
        NamedBound::new("interior", cluster_bound(n_inner, zpe, p1, 2.0, d / 2.0)),
        NamedBound::new("final_time", cluster_bound(n, zpe, p1, 4.0, d / 4.0)),
        NamedBound::new("initial_time", cluster_bound(n, zpe, p2, 2.0, d / 2.0)),
        NamedBound::new("spanning", spanning),
        NamedBound::new("residual_qubit", residual),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedCheck {
    pub name: String,
    pub inequality: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl NamedCheck {
    fn lt(name: &str, inequality: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.to_string(),
            inequality: inequality.to_string(),
            lhs,
            rhs,
            holds: lhs < rhs,
        }
    }
}

/// CNOT and π/8 gadget conditions plus the rate conditions of error correction.
pub fn logical_gate_threshold_checks(
    p: f64,
    p0: f64,
    b: f64,
    rates: &EffectiveRates,
    consts: &ThresholdConstants,
) -> Vec<NamedCheck> {
    vec![
        NamedCheck::lt("cnot", "2p0/3 + (B+4)p < p0", 2.0 * p0 / 3.0 + (b + 4.0) * p, p0),
        NamedCheck::lt("pi_over_8", "p0/3 + 2(B+4)p < p0", p0 / 3.0 + 2.0 * (b + 4.0) * p, p0),
        NamedCheck::lt("data_rate", "p_D < p1", rates.p_d, consts.p1),
        NamedCheck::lt("syndrome_rate", "q < p2", rates.q, consts.p2),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocationBudget {
    pub per_cycle: f64,
    /// Unevaluated term for gate ancilla preparation.
    pub gate_ancilla_term: String,
}

pub fn location_budget(
    params: &ProtocolParams,
    n_i: usize,
    k_i: usize,
    rounds: usize,
) -> Result<LocationBudget, OverheadError> {
    let pa = params.p * params.a_cat as f64;
    if pa >= 1.0 {
        return Err(OverheadError::Divergent(pa));
    }
    if k_i > n_i {
        return Err(OverheadError::Params("k_i exceeds n_i".into()));
    }
    let n = n_i as f64;
    let per_meas = (params.s * params.l) as f64 * n
        + (n_i - k_i) as f64 * (params.a_cat as f64 / (1.0 - pa) + 2.0 * params.r as f64);
    Ok(LocationBudget {
        per_cycle: rounds as f64 * per_meas,
        gate_ancilla_term: format!("O({n_i} polylog({n_i} f(k)/eps))"),
    })
}

/// Family member as `(n_i, k_i)`.
pub type Member = (usize, usize);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemberVerdict {
    pub n: usize,
    pub k: usize,
    pub above_lower: bool,
    pub below_upper: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockPlan {
    pub index: usize,
    pub n_i: usize,
    pub k_i: usize,
    pub blocks: usize,
    /// `k^α`.
    pub window_lower: f64,
    /// `(k/R) log(3k f(k)/(R ε))^{-(a+1)}`.
    pub window_upper: f64,
    pub verdicts: Vec<MemberVerdict>,
    pub data_qubits: f64,
    pub ec_qubits: f64,
    pub gate_qubits: f64,
    pub qubit_total: f64,
    /// `ηk/R`.
    pub budget: f64,
    pub checks: Vec<NamedCheck>,
    pub feasible: bool,
    /// Names of the failed checks.
    pub violated: Vec<String>,
}

/// Picks the smallest member with `n_i > k^α` and accounts its qubits.
/// Errors only when no member clears the lower bound.
pub fn plan_blocks(
    k: usize,
    family: &[Member],
    f_locations: f64,
    params: &ProtocolParams,
) -> Result<BlockPlan, OverheadError> {
    params.validate()?;
    if family.is_empty() || k == 0 {
        return Err(OverheadError::Params("need a non-empty family and k >= 1".into()));
    }
    if family.windows(2).any(|w| w[0].0 >= w[1].0) || family.iter().any(|&(n, kk)| kk == 0 || kk > n) {
        return Err(OverheadError::Params(
            "family must be strictly increasing with 1 <= k_i <= n_i".into(),
        ));
    }
    let pa = params.p * params.a_cat as f64;
    if pa >= 1.0 {
        return Err(OverheadError::Divergent(pa));
    }
    let kf = k as f64;
    let lower = kf.powf(params.alpha);
    let log_arg = 3.0 * kf * f_locations / (params.rate * params.epsilon);
    let upper = if log_arg > 1.0 {
        kf / params.rate * log_arg.ln().powf(-(params.polylog_a + 1.0))
    } else {
        f64::INFINITY
    };
    let verdicts: Vec<MemberVerdict> = family
        .iter()
        .map(|&(n, kk)| MemberVerdict {
            n,
            k: kk,
            above_lower: n as f64 > lower,
            below_upper: (n as f64) < upper,
        })
        .collect();
    let index = verdicts
        .iter()
        .position(|v| v.above_lower)
        .ok_or_else(|| OverheadError::Infeasible(format!("window lower bound k^alpha = {lower} exceeds every n_i")))?;
    let (n_i, k_i) = family[index];
    let blocks = k.div_ceil(k_i);
    let (nf, kif, mf) = (n_i as f64, k_i as f64, blocks as f64);
    let data_qubits = mf * nf;
    let ec_qubits = mf * (nf - kif) * params.r_prime as f64 / (params.s as f64 * (1.0 - pa));
    let eps0 = params.epsilon / (3.0 * f_locations);
    let gate_qubits = params.polylog_c * nf * (nf / eps0).ln().max(0.0).powf(params.polylog_a);
    let qubit_total = data_qubits + ec_qubits + gate_qubits;
    let budget = params.eta * kf / params.rate;
    let ratio = kif / nf;
    let checks = vec![
        NamedCheck::lt("window_lower", "k^alpha < n_i", lower, nf),
        NamedCheck::lt("window_upper", "n_i < (k/R) log(3kf/(R eps))^-(a+1)", nf, upper),
        NamedCheck {
            name: "block_rounding".into(),
            inequality: "M k_i <= (1+lambda) k".into(),
            lhs: mf * kif,
            rhs: (1.0 + params.lambda) * kf,
            holds: mf * kif <= (1.0 + params.lambda) * kf,
        },
        NamedCheck {
            name: "rate_window".into(),
            inequality: "R/(1+omega) <= k_i/n_i <= R(1+omega)".into(),
            lhs: ratio,
            rhs: params.rate,
            holds: ratio >= params.rate / (1.0 + params.omega) && ratio <= params.rate * (1.0 + params.omega),
        },
        NamedCheck::lt("qubit_budget", "qubit total < eta k/R", qubit_total, budget),
    ];
    let violated: Vec<String> = checks.iter().filter(|c| !c.holds).map(|c| c.name.clone()).collect();
    Ok(BlockPlan {
        index,
        n_i,
        k_i,
        blocks,
        window_lower: lower,
        window_upper: upper,
        verdicts,
        data_qubits,
        ec_qubits,
        gate_qubits,
        qubit_total,
        budget,
        feasible: violated.is_empty(),
        checks,
        violated,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverheadRequest {
    pub params: ProtocolParams,
    pub k: usize,
    pub family: Vec<Member>,
    /// Size of the logical circuit in locations.
    pub f_locations: f64,
    /// Syndrome measurements per cycle; defaults to 1.
    #[serde(default)]
    pub rounds: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverheadReport {
    pub rates: EffectiveRates,
    pub rates_in_range: bool,
    pub constants: ThresholdConstants,
    pub threshold_checks: Vec<NamedCheck>,
    pub block_plan: Option<BlockPlan>,
    pub plan_error: Option<String>,
    pub qubit_total: Option<f64>,
    pub locations_per_cycle: Option<f64>,
    /// `f(k)(s T n_i + n_i log(n_i f(k)/ε)^a)`, constants omitted.
    pub locations_total: Option<f64>,
}

pub fn overhead_report(req: &OverheadRequest) -> Result<OverheadReport, OverheadError> {
    let params = &req.params;
    params.validate()?;
    let rates = effective_rates(params)?;
    let constants = threshold_constants(params.r, params.c);
    let threshold_checks = logical_gate_threshold_checks(params.p, constants.p0(), params.b_concat, &rates, &constants);
    let (block_plan, plan_error) = match plan_blocks(req.k, &req.family, req.f_locations, params) {
        Ok(p) => (Some(p), None),
        Err(OverheadError::Infeasible(m)) => (None, Some(m)),
        Err(e) => return Err(e),
    };
    let rounds = req.rounds.unwrap_or(1);
    let mut locations_per_cycle = None;
    let mut locations_total = None;
    if let Some(plan) = &block_plan {
        locations_per_cycle = Some(location_budget(params, plan.n_i, plan.k_i, rounds)?.per_cycle);
        let n = plan.n_i as f64;
        let polylog = (n * req.f_locations / params.epsilon)
            .ln()
            .max(0.0)
            .powf(params.polylog_a);
        locations_total = Some(req.f_locations * ((params.s * rounds) as f64 * n + n * polylog));
    }
    Ok(OverheadReport {
        rates_in_range: rates.in_range(),
        rates,
        constants,
        threshold_checks,
        qubit_total: block_plan.as_ref().map(|p| p.qubit_total),
        block_plan,
        plan_error,
        locations_per_cycle,
        locations_total,
    })
}
