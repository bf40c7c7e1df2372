//! Circuit-level Shor error correction: verified cat states, generator
//! scheduling, Pauli-frame fault propagation, and the mapping of circuit
//! faults onto the phenomenological model.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CircuitError;
use crate::gf2::BitVec;
use crate::pauli::{Pauli, PauliOperator};
use crate::stabcode::StabilizerCode;

/// One gate or idle step on one or two qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    Prep0 {
        q: usize,
    },
    H {
        q: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    /// Controlled-`pauli` from an ancilla control onto a data target.
    CtrlPauli {
        control: usize,
        target: usize,
        pauli: Pauli,
    },
    MeasZ {
        q: usize,
    },
    MeasX {
        q: usize,
    },
    Wait {
        q: usize,
    },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Prep0 { q } | Gate::H { q } | Gate::MeasZ { q } | Gate::MeasX { q } | Gate::Wait { q } => vec![q],
            Gate::Cnot { control, target } | Gate::CtrlPauli { control, target, .. } => vec![control, target],
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Gate::Cnot { .. } | Gate::CtrlPauli { .. } => 2,
            _ => 1,
        }
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Gate::MeasZ { .. } | Gate::MeasX { .. })
    }

    fn name(&self) -> &'static str {
        match self {
            Gate::Prep0 { .. } => "prep0",
            Gate::H { .. } => "h",
            Gate::Cnot { .. } => "cnot",
            Gate::CtrlPauli { pauli: Pauli::X, .. } => "cx",
            Gate::CtrlPauli { pauli: Pauli::Y, .. } => "cy",
            Gate::CtrlPauli { pauli: Pauli::Z, .. } => "cz",
            Gate::CtrlPauli { .. } => "ci",
            Gate::MeasZ { .. } => "measz",
            Gate::MeasX { .. } => "measx",
            Gate::Wait { .. } => "wait",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    pub step: usize,
    pub gate: Gate,
}

/// Locations grouped by time step; within a step no qubit is used twice.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Circuit {
    num_qubits: usize,
    locations: Vec<Location>,
    steps: Vec<Vec<usize>>,
    /// Measurement ordinal of each location, if it is a measurement.
    meas_index: Vec<Option<usize>>,
    num_meas: usize,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            ..Self::default()
        }
    }

    /// Appends a location at `step`; returns its index.
    pub fn push(&mut self, step: usize, gate: Gate) -> Result<usize, CircuitError> {
        let qs = gate.qubits();
        if qs.iter().any(|&q| q >= self.num_qubits) {
            return Err(CircuitError::Argument(format!(
                "{gate:?} outside {} qubits",
                self.num_qubits
            )));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(CircuitError::Argument(format!("{gate:?} uses one qubit twice")));
        }
        while self.steps.len() <= step {
            self.steps.push(Vec::new());
        }
        for &other in &self.steps[step] {
            if self.locations[other].gate.qubits().iter().any(|q| qs.contains(q)) {
                return Err(CircuitError::Argument(format!("qubit reused at step {step}")));
            }
        }
        let idx = self.locations.len();
        self.locations.push(Location { step, gate });
        self.steps[step].push(idx);
        if gate.is_measurement() {
            self.meas_index.push(Some(self.num_meas));
            self.num_meas += 1;
        } else {
            self.meas_index.push(None);
        }
        Ok(idx)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn num_measurements(&self) -> usize {
        self.num_meas
    }

    pub fn measurement_index(&self, loc: usize) -> Option<usize> {
        self.meas_index[loc]
    }

    /// One line per location: `step kind qubits...`.
    pub fn to_gate_list(&self) -> String {
        let mut out = String::new();
        for (s, locs) in self.steps.iter().enumerate() {
            for &l in locs {
                let g = self.locations[l].gate;
                let qs: Vec<String> = g.qubits().iter().map(ToString::to_string).collect();
                let _ = writeln!(out, "{s} {} {}", g.name(), qs.join(" "));
            }
        }
        out
    }
}

/// Pauli frame over all circuit qubits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    x: Vec<bool>,
    z: Vec<bool>,
}

impl Frame {
    pub fn new(n: usize) -> Self {
        Self {
            x: vec![false; n],
            z: vec![false; n],
        }
    }

    fn apply(&mut self, q: usize, p: Pauli) {
        let (x, z) = p.bits();
        self.x[q] ^= x;
        self.z[q] ^= z;
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x[q], self.z[q])
    }

    /// Conjugates the frame by `gate`; returns the measurement flip for
    /// measurements.
    fn gate(&mut self, gate: &Gate) -> Option<bool> {
        match *gate {
            Gate::Prep0 { q } => {
                self.x[q] = false;
                self.z[q] = false;
                None
            }
            Gate::H { q } => {
                std::mem::swap(&mut self.x[q], &mut self.z[q]);
                None
            }
            Gate::Cnot { control, target } => {
                self.x[target] ^= self.x[control];
                self.z[control] ^= self.z[target];
                None
            }
            Gate::CtrlPauli {
                control: a,
                target: d,
                pauli,
            } => {
                match pauli {
                    Pauli::X => {
                        self.x[d] ^= self.x[a];
                        self.z[a] ^= self.z[d];
                    }
                    Pauli::Z => {
                        let (xa, xd) = (self.x[a], self.x[d]);
                        self.z[d] ^= xa;
                        self.z[a] ^= xd;
                    }
                    Pauli::Y => {
                        let (xa, xd, zd) = (self.x[a], self.x[d], self.z[d]);
                        self.z[a] ^= xd ^ zd;
                        self.x[d] ^= xa;
                        self.z[d] ^= xa;
                    }
                    Pauli::I => {}
                }
                None
            }
            Gate::MeasZ { q } => Some(self.x[q]),
            Gate::MeasX { q } => Some(self.z[q]),
            Gate::Wait { .. } => None,
        }
    }
}

/// Non-identity Paulis on a location: 3 for one qubit, 15 for two (first
/// qubit slowest, order I, X, Y, Z).
pub fn fault_options(arity: usize) -> Vec<Vec<Pauli>> {
    const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    match arity {
        1 => Pauli::NON_IDENTITY.iter().map(|&p| vec![p]).collect(),
        _ => ALL
            .iter()
            .flat_map(|&a| ALL.iter().map(move |&b| vec![a, b]))
            .filter(|v| v.iter().any(|&p| p != Pauli::I))
            .collect(),
    }
}

/// Outcome of fault propagation through a circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Propagation {
    /// Final frame on qubits `0..data_qubits`.
    pub data_error: PauliOperator,
    pub meas_flips: BitVec,
}

/// Pushes injected faults through the circuit. A fault acts right after its
/// location, except on measurements where it acts just before.
pub fn propagate_faults(
    circuit: &Circuit,
    data_qubits: usize,
    incoming: Option<&PauliOperator>,
    faults: &[(usize, PauliOperator)],
) -> Result<Propagation, CircuitError> {
    let mut per_loc: Vec<Option<&PauliOperator>> = vec![None; circuit.num_locations()];
    for (loc, p) in faults {
        let l = circuit.locations.get(*loc).ok_or(CircuitError::InvalidLocation(*loc))?;
        if p.n() != l.gate.arity() {
            return Err(CircuitError::FaultArity {
                expected: l.gate.arity(),
                found: p.n(),
            });
        }
        per_loc[*loc] = Some(p);
    }
    if data_qubits > circuit.num_qubits {
        return Err(CircuitError::Argument("more data qubits than circuit qubits".into()));
    }
    let mut frame = Frame::new(circuit.num_qubits);
    if let Some(e) = incoming {
        if e.n() != data_qubits {
            return Err(CircuitError::Argument("incoming error has the wrong length".into()));
        }
        for q in e.support() {
            frame.apply(q, e.get(q));
        }
    }
    let mut flips = BitVec::zeros(circuit.num_meas);
    for step in &circuit.steps {
        for &l in step {
            let loc = &circuit.locations[l];
            let qs = loc.gate.qubits();
            let fault = per_loc[l];
            if loc.gate.is_measurement() {
                if let Some(p) = fault {
                    frame.apply(qs[0], p.get(0));
                }
            }
            if let Some(f) = frame.gate(&loc.gate) {
                if f {
                    flips.set(circuit.meas_index[l].expect("measurement"), true);
                }
            }
            if !loc.gate.is_measurement() {
                if let Some(p) = fault {
                    for (i, &q) in qs.iter().enumerate() {
                        frame.apply(q, p.get(i));
                    }
                }
            }
        }
    }
    let mut data_error = PauliOperator::identity(data_qubits);
    for q in 0..data_qubits {
        data_error.set(q, frame.get(q));
    }
    Ok(Propagation {
        data_error,
        meas_flips: flips,
    })
}

/// Layout of one verified cat state inside a larger circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatLayout {
    pub cat: Vec<usize>,
    /// Parity-test ancilla comparing the two chain ends (absent in bare mode).
    pub test: Option<usize>,
    /// Locations of the preparation and test, including the test measurement.
    pub prep_locations: Vec<usize>,
    pub test_measurement: Option<usize>,
    /// Number of steps the preparation and test occupy.
    pub steps: usize,
}

/// Steps used by [`emit_cat`] for a `w`-qubit cat.
pub fn cat_steps(w: usize) -> usize {
    let h = w.div_ceil(2);
    // prep, root H, chain, two test CNOTs, test measurement
    2 + h.max(w - h) + 3
}

/// Emits a `w`-qubit cat preparation starting at `start`: the root is qubit
/// `h = ⌈w/2⌉` (1-based); step one copies it rightwards, then the two chains
/// grow outwards in parallel, and a single test ancilla checks the parity of
/// the two chain ends.
fn emit_cat(circuit: &mut Circuit, start: usize, cat: &[usize], test: usize) -> Result<CatLayout, CircuitError> {
    let w = cat.len();
    let h = w.div_ceil(2);
    let mut locs = Vec::new();
    for &q in cat.iter().chain(std::iter::once(&test)) {
        locs.push(circuit.push(start, Gate::Prep0 { q })?);
    }
    locs.push(circuit.push(start + 1, Gate::H { q: cat[h - 1] })?);
    let chain = h.max(w - h);
    for k in 1..=chain {
        let step = start + 1 + k;
        // right chain: a_{h+k-1} -> a_{h+k}
        if h + k <= w {
            locs.push(circuit.push(
                step,
                Gate::Cnot {
                    control: cat[h + k - 2],
                    target: cat[h + k - 1],
                },
            )?);
        }
        // left chain from step 2: a_{h-k+2} -> a_{h-k+1}
        if k >= 2 && h + 1 >= k && h + 1 - k >= 1 {
            locs.push(circuit.push(
                step,
                Gate::Cnot {
                    control: cat[h - k + 1],
                    target: cat[h - k],
                },
            )?);
        }
    }
    let t0 = start + 2 + chain;
    locs.push(circuit.push(
        t0,
        Gate::Cnot {
            control: cat[0],
            target: test,
        },
    )?);
    locs.push(circuit.push(
        t0 + 1,
        Gate::Cnot {
            control: cat[w - 1],
            target: test,
        },
    )?);
    let meas = circuit.push(t0 + 2, Gate::MeasZ { q: test })?;
    locs.push(meas);
    Ok(CatLayout {
        cat: cat.to_vec(),
        test: Some(test),
        prep_locations: locs,
        test_measurement: Some(meas),
        steps: cat_steps(w),
    })
}

/// Standalone cat preparation on qubits `0..w` with test ancilla `w`.
#[derive(Clone, Debug)]
pub struct CatCircuit {
    pub circuit: Circuit,
    pub layout: CatLayout,
    /// Number of fallible locations.
    pub a: usize,
}

pub fn cat_state_circuit(w: usize) -> Result<CatCircuit, CircuitError> {
    if w < 2 {
        return Err(CircuitError::Argument(format!("cat size {w} < 2")));
    }
    let mut circuit = Circuit::new(w + 1);
    let cat: Vec<usize> = (0..w).collect();
    let layout = emit_cat(&mut circuit, 0, &cat, w)?;
    let a = circuit.num_locations();
    Ok(CatCircuit { circuit, layout, a })
}

/// Partition of generators into layers of pairwise disjoint supports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtractionSchedule {
    pub layers: Vec<Vec<usize>>,
    /// Largest number of generators overlapping any one generator.
    pub max_conflict_degree: usize,
}

/// Greedy colouring of the conflict graph in generator order.
pub fn schedule_generators(code: &StabilizerCode) -> ExtractionSchedule {
    let m = code.num_checks();
    let mut conflicts = vec![Vec::new(); m];
    for q in 0..code.n() {
        let gs = code.checks_on(q);
        for &a in gs {
            for &b in gs {
                if a != b {
                    conflicts[a].push(b);
                }
            }
        }
    }
    for c in &mut conflicts {
        c.sort_unstable();
        c.dedup();
    }
    let mut color = vec![usize::MAX; m];
    let mut layers: Vec<Vec<usize>> = Vec::new();
    for g in 0..m {
        let used: Vec<usize> = conflicts[g]
            .iter()
            .map(|&o| color[o])
            .filter(|&c| c != usize::MAX)
            .collect();
        let c = (0..).find(|c| !used.contains(c)).expect("some colour is free");
        color[g] = c;
        if layers.len() <= c {
            layers.resize(c + 1, Vec::new());
        }
        layers[c].push(g);
    }
    ExtractionSchedule {
        layers,
        max_conflict_degree: conflicts.iter().map(Vec::len).max().unwrap_or(0),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMode {
    /// Verified cat state per generator, coupled transversally.
    #[default]
    Shor,
    /// One ancilla per generator, coupled to each support qubit in turn.
    BareAncilla,
}

/// Phenomenological image of some circuit faults in one syndrome round `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundFragment {
    /// Data error placed before measurement `i`.
    pub data_current: PauliOperator,
    /// Data error placed just after measurement `i` (before `i+1`).
    pub data_next: PauliOperator,
    /// Syndrome-bit errors of measurement `i`.
    pub synd: BitVec,
}

impl RoundFragment {
    pub fn empty(n: usize, m: usize) -> Self {
        Self {
            data_current: PauliOperator::identity(n),
            data_next: PauliOperator::identity(n),
            synd: BitVec::zeros(m),
        }
    }

    fn xor_assign(&mut self, other: &RoundFragment) {
        self.data_current.mul_assign(&other.data_current);
        self.data_next.mul_assign(&other.data_next);
        self.synd.xor_assign(&other.synd);
    }

    pub fn data_weight(&self) -> usize {
        self.data_current
            .support_mask()
            .or(&self.data_next.support_mask())
            .weight()
    }
}

/// Effect of a single fault after association.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaultEffect {
    pub fragment: RoundFragment,
    /// Set when the fault is caught by its cat's parity test.
    pub rejected: bool,
}

/// One full syndrome measurement of a code as a circuit, with the fault
/// association table.
#[derive(Clone, Debug)]
pub struct ShorRound {
    n: usize,
    m: usize,
    mode: ExtractionMode,
    circuit: Circuit,
    schedule: ExtractionSchedule,
    cats: Vec<CatLayout>,
    /// Cat measurement ordinals per generator.
    gen_meas: Vec<Vec<usize>>,
    /// Coupling step of generator `g` on each support qubit.
    coupling_step: Vec<Vec<(usize, usize, Pauli)>>,
    /// Per generator: locations of its cat preparation (resampled on rejection).
    prep_of: Vec<Option<usize>>,
    effects: Vec<Vec<FaultEffect>>,
    steps_per_round: usize,
}

impl ShorRound {
    pub fn new(code: &StabilizerCode, mode: ExtractionMode) -> Result<Self, CircuitError> {
        let n = code.n();
        let m = code.num_checks();
        let schedule = schedule_generators(code);
        let weights: Vec<usize> = (0..m).map(|g| code.support(g).len()).collect();
        if weights.contains(&0) {
            return Err(CircuitError::Argument("identity generator".into()));
        }
        if mode == ExtractionMode::Shor && weights.iter().any(|&w| w < 2) {
            return Err(CircuitError::Argument(
                "Shor extraction needs generator weight >= 2".into(),
            ));
        }
        let ancillas: usize = match mode {
            ExtractionMode::Shor => weights.iter().map(|w| w + 1).sum(),
            ExtractionMode::BareAncilla => m,
        };
        let mut circuit = Circuit::new(n + ancillas);
        let mut next_anc = n;
        let mut cats = vec![
            CatLayout {
                cat: Vec::new(),
                test: None,
                prep_locations: Vec::new(),
                test_measurement: None,
                steps: 0,
            };
            m
        ];
        let mut gen_meas = vec![Vec::new(); m];
        let mut coupling_step = vec![Vec::new(); m];
        let mut data_busy: Vec<Vec<bool>> = Vec::new();
        let mut step = 0;
        for layer in &schedule.layers {
            let wmax = layer.iter().map(|&g| weights[g]).max().unwrap_or(0);
            let layer_start = step;
            let layer_steps = match mode {
                ExtractionMode::Shor => cat_steps(wmax) + 3,
                ExtractionMode::BareAncilla => wmax + 4,
            };
            for &g in layer {
                let support = code.support(g);
                let gen = &code.generators()[g];
                match mode {
                    ExtractionMode::Shor => {
                        let cat: Vec<usize> = (next_anc..next_anc + support.len()).collect();
                        let test = next_anc + support.len();
                        next_anc += support.len() + 1;
                        let layout = emit_cat(&mut circuit, layer_start, &cat, test)?;
                        let couple = layer_start + cat_steps(wmax);
                        for (j, &d) in support.iter().enumerate() {
                            circuit.push(
                                couple,
                                Gate::CtrlPauli {
                                    control: cat[j],
                                    target: d,
                                    pauli: gen.get(d),
                                },
                            )?;
                            coupling_step[g].push((d, couple, gen.get(d)));
                        }
                        for &a in &cat {
                            circuit.push(couple + 1, Gate::H { q: a })?;
                            let l = circuit.push(couple + 2, Gate::MeasZ { q: a })?;
                            gen_meas[g].push(circuit.measurement_index(l).expect("measurement"));
                        }
                        cats[g] = layout;
                    }
                    ExtractionMode::BareAncilla => {
                        let a = next_anc;
                        next_anc += 1;
                        let mut locs = vec![circuit.push(layer_start, Gate::Prep0 { q: a })?];
                        locs.push(circuit.push(layer_start + 1, Gate::H { q: a })?);
                        for (j, &d) in support.iter().enumerate() {
                            let s = layer_start + 2 + j;
                            circuit.push(
                                s,
                                Gate::CtrlPauli {
                                    control: a,
                                    target: d,
                                    pauli: gen.get(d),
                                },
                            )?;
                            coupling_step[g].push((d, s, gen.get(d)));
                        }
                        circuit.push(layer_start + 2 + wmax, Gate::H { q: a })?;
                        let l = circuit.push(layer_start + 3 + wmax, Gate::MeasZ { q: a })?;
                        gen_meas[g].push(circuit.measurement_index(l).expect("measurement"));
                        cats[g] = CatLayout {
                            cat: vec![a],
                            test: None,
                            prep_locations: locs,
                            test_measurement: None,
                            steps: 2,
                        };
                    }
                }
            }
            step = layer_start + layer_steps;
            data_busy.resize(step, vec![false; n]);
            for &g in layer {
                for &(d, s, _) in &coupling_step[g] {
                    data_busy[s][d] = true;
                }
            }
        }
        for (s, busy) in data_busy.iter().enumerate() {
            for (d, _) in busy.iter().enumerate().filter(|(_, b)| !**b) {
                circuit.push(s, Gate::Wait { q: d })?;
            }
        }
        let mut prep_of = vec![None; circuit.num_locations()];
        if mode == ExtractionMode::Shor {
            for (g, c) in cats.iter().enumerate() {
                for &l in &c.prep_locations {
                    prep_of[l] = Some(g);
                }
            }
        }
        let mut round = Self {
            n,
            m,
            mode,
            circuit,
            schedule,
            cats,
            gen_meas,
            coupling_step,
            prep_of,
            effects: Vec::new(),
            steps_per_round: step,
        };
        round.effects = (0..round.circuit.num_locations())
            .map(|l| {
                let arity = round.circuit.locations[l].gate.arity();
                fault_options(arity)
                    .into_iter()
                    .map(|ps| round.single_fault_effect(l, &ps))
                    .collect()
            })
            .collect();
        Ok(round)
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn schedule(&self) -> &ExtractionSchedule {
        &self.schedule
    }

    pub fn mode(&self) -> ExtractionMode {
        self.mode
    }

    /// Time steps of one full syndrome measurement (`l`).
    pub fn depth(&self) -> usize {
        self.steps_per_round
    }

    pub fn cat(&self, g: usize) -> &CatLayout {
        &self.cats[g]
    }

    /// Largest number of preparation locations of any generator's cat (`A`).
    pub fn max_prep_locations(&self) -> usize {
        self.cats.iter().map(|c| c.prep_locations.len()).max().unwrap_or(0)
    }

    pub fn effects(&self, loc: usize) -> &[FaultEffect] {
        &self.effects[loc]
    }

    /// Syndrome bits read out from measurement flips.
    pub fn syndrome_from_flips(&self, flips: &BitVec) -> BitVec {
        let mut s = BitVec::zeros(self.m);
        for (g, ms) in self.gen_meas.iter().enumerate() {
            if ms.iter().fold(false, |acc, &i| acc ^ flips.get(i)) {
                s.set(g, true);
            }
        }
        s
    }

    /// Propagates one fault with cat frames reduced modulo the cat
    /// stabilizer just before coupling, tracking when each data qubit was
    /// last changed, then applies the association rule.
    fn single_fault_effect(&self, loc: usize, paulis: &[Pauli]) -> FaultEffect {
        let c = &self.circuit;
        let fault_step = c.locations[loc].step;
        let mut frame = Frame::new(c.num_qubits);
        let mut flips = BitVec::zeros(c.num_meas);
        let mut last_change = vec![usize::MAX; self.n];
        let couple_steps: Vec<Option<usize>> = self
            .coupling_step
            .iter()
            .map(|cs| cs.first().map(|&(_, s, _)| s))
            .collect();
        for (s, step_locs) in c.steps.iter().enumerate().skip(fault_step) {
            if self.mode == ExtractionMode::Shor {
                for (g, cs) in couple_steps.iter().enumerate() {
                    if *cs == Some(s) {
                        reduce_cat_frame(&mut frame, &self.cats[g].cat);
                    }
                }
            }
            for &l in step_locs {
                let gate = &c.locations[l].gate;
                let qs = gate.qubits();
                let before: Vec<Pauli> = qs.iter().filter(|&&q| q < self.n).map(|&q| frame.get(q)).collect();
                if l == loc && gate.is_measurement() {
                    frame.apply(qs[0], paulis[0]);
                }
                if let Some(true) = frame.gate(gate) {
                    flips.set(c.meas_index[l].expect("measurement"), true);
                }
                if l == loc && !gate.is_measurement() {
                    for (i, &q) in qs.iter().enumerate() {
                        frame.apply(q, paulis[i]);
                    }
                }
                for (i, &q) in qs.iter().filter(|&&q| q < self.n).enumerate() {
                    if frame.get(q) != before[i] {
                        last_change[q] = s;
                    }
                }
            }
        }
        let rejected = self.prep_of[loc].is_some_and(|g| {
            let t = self.cats[g].test_measurement.expect("shor cat has a test");
            flips.get(c.meas_index[t].expect("measurement"))
        });
        let measured = self.syndrome_from_flips(&flips);
        let mut frag = RoundFragment::empty(self.n, self.m);
        for x in 0..self.n {
            let p = frame.get(x);
            if p == Pauli::I {
                continue;
            }
            let onset = last_change[x];
            let single = PauliOperator::single(self.n, x, p);
            let (mut before, mut after) = (0usize, 0usize);
            for g in 0..self.m {
                if let Some(&(_, s, _)) = self.coupling_step[g].iter().find(|&&(d, _, _)| d == x) {
                    // only generators whose bit this error flips
                    let anticommutes = self.gen_anticommutes(g, &single);
                    if !anticommutes {
                        continue;
                    }
                    if s < onset {
                        before += 1;
                    } else if s > onset {
                        after += 1;
                    }
                }
            }
            if before >= after {
                frag.data_next.apply(x, p);
            } else {
                frag.data_current.apply(x, p);
            }
        }
        frag.synd = measured.xor(&self.syndrome_of(&frag.data_current));
        FaultEffect {
            fragment: frag,
            rejected,
        }
    }

    fn gen_anticommutes(&self, g: usize, e: &PauliOperator) -> bool {
        self.syndrome_of(e).get(g)
    }

    fn syndrome_of(&self, e: &PauliOperator) -> BitVec {
        // fault-free propagation of `e` through the round reads its syndrome
        let mut s = BitVec::zeros(self.m);
        for g in 0..self.m {
            let mut parity = false;
            for &(d, _, gp) in &self.coupling_step[g] {
                let (ex, ez) = e.get(d).bits();
                let (gx, gz) = gp.bits();
                parity ^= (ex && gz) ^ (ez && gx);
            }
            s.set(g, parity);
        }
        s
    }

    /// Fault-free extraction of `incoming`: the measured syndrome.
    pub fn ideal_syndrome(&self, incoming: &PauliOperator) -> Result<BitVec, CircuitError> {
        let p = propagate_faults(&self.circuit, self.n, Some(incoming), &[])?;
        Ok(self.syndrome_from_flips(&p.meas_flips))
    }

    /// Samples i.i.d. location faults at rate `p` and returns the associated
    /// fragment. Cat preparations failing their test are resampled; the
    /// number of retries is returned.
    pub fn sample<R: Rng + ?Sized>(&self, p: f64, rng: &mut R) -> (RoundFragment, u64) {
        let mut frag = RoundFragment::empty(self.n, self.m);
        let mut retries = 0;
        if p <= 0.0 {
            return (frag, 0);
        }
        for l in 0..self.circuit.num_locations() {
            if self.prep_of[l].is_some() {
                continue;
            }
            if rng.gen::<f64>() < p {
                let opts = &self.effects[l];
                frag.xor_assign(&opts[rng.gen_range(0..opts.len())].fragment);
            }
        }
        if self.mode == ExtractionMode::Shor {
            for cat in &self.cats {
                loop {
                    let mut attempt = RoundFragment::empty(self.n, self.m);
                    let mut test = false;
                    for &l in &cat.prep_locations {
                        if rng.gen::<f64>() < p {
                            let opts = &self.effects[l];
                            let e = &opts[rng.gen_range(0..opts.len())];
                            test ^= e.rejected;
                            attempt.xor_assign(&e.fragment);
                        }
                    }
                    if !test {
                        frag.xor_assign(&attempt);
                        break;
                    }
                    retries += 1;
                }
            }
        }
        (frag, retries)
    }

    /// Association of an explicit fault set (rejected preparations included
    /// as given).
    pub fn fragment_of(&self, faults: &[(usize, usize)]) -> Result<RoundFragment, CircuitError> {
        let mut frag = RoundFragment::empty(self.n, self.m);
        for &(l, opt) in faults {
            let opts = self.effects.get(l).ok_or(CircuitError::InvalidLocation(l))?;
            let e = opts.get(opt).ok_or(CircuitError::FaultArity {
                expected: opts.len(),
                found: opt,
            })?;
            frag.xor_assign(&e.fragment);
        }
        Ok(frag)
    }
}

/// Reduces a cat's frame modulo its stabilizer (`X^{⊗w}` and `Z_i Z_j`):
/// Z parity kept on the first qubit, X part complemented when heavier than half.
fn reduce_cat_frame(frame: &mut Frame, cat: &[usize]) {
    let zpar = cat.iter().fold(false, |acc, &q| acc ^ frame.z[q]);
    for &q in cat {
        frame.z[q] = false;
    }
    frame.z[cat[0]] = zpar;
    let xw = cat.iter().filter(|&&q| frame.x[q]).count();
    if 2 * xw > cat.len() || (2 * xw == cat.len() && frame.x[cat[0]]) {
        for &q in cat {
            frame.x[q] = !frame.x[q];
        }
    }
}

/// Result of the exhaustive single-fault sweep over one round.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub locations: usize,
    pub faults: usize,
    pub rejected: usize,
    pub max_data_errors: usize,
    pub max_synd_errors: usize,
    /// `⌈c/2⌉` for the literal qubit degree `c`.
    pub synd_bound: usize,
}

impl SweepReport {
    pub fn holds(&self, data_bound: usize) -> bool {
        self.max_data_errors <= data_bound && self.max_synd_errors <= self.synd_bound
    }
}

/// Every location and every non-identity fault on it, after post-selection.
pub fn single_fault_sweep(round: &ShorRound, c: usize) -> SweepReport {
    let mut report = SweepReport {
        locations: round.circuit.num_locations(),
        faults: 0,
        rejected: 0,
        max_data_errors: 0,
        max_synd_errors: 0,
        synd_bound: c.div_ceil(2),
    };
    for l in 0..round.circuit.num_locations() {
        for e in round.effects(l) {
            report.faults += 1;
            if e.rejected {
                report.rejected += 1;
                continue;
            }
            report.max_data_errors = report.max_data_errors.max(e.fragment.data_weight());
            report.max_synd_errors = report.max_synd_errors.max(e.fragment.synd.weight());
        }
    }
    report
}
