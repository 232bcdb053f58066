//! Exact statevector simulation.
//!
//! A [`StateVector`] holds the 2^N complex amplitudes of an N-qubit register.
//! Gate kernels operate in place with stride/bit-mask iteration; dense
//! matrices appear only in [`haar_unitary`] and the `Dense` gate used to embed
//! Haar targets. Qubit 0 is the least-significant bit of the outcome index,
//! so outcome strings read left-to-right from the highest qubit down
//! (index 1 on three qubits is `001`).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;
use rand_distr::{Binomial, Distribution};

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Largest register the dense statevector supports.
pub const MAX_QUBITS: usize = 12;
/// Largest register for dense unitary matrices (Haar sampling, shadows).
pub const MAX_DENSE_QUBITS: usize = 6;

const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Parameter-shift rule attached to a gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftRule {
    /// Non-parametric gate, no rule.
    None,
    /// Single-qubit rotation: two shifted evaluations.
    TwoTerm,
    /// Controlled rotation: four shifted evaluations.
    FourTerm,
}

/// Gate kinds understood by the kernels.
#[derive(Clone, Debug, PartialEq)]
pub enum GateKind {
    H,
    X,
    RX,
    RY,
    RZ,
    CZ,
    CNOT,
    CRY,
    /// Controlled real rotation `[[cos t, -sin t], [sin t, cos t]]`, used by
    /// the W-state cascade. Always carries a fixed angle.
    CF,
    /// General single-qubit gate with angles (theta, phi, lambda).
    U3,
    /// Dense unitary on `targets.len()` qubits, row-major.
    Dense(Vec<Complex64>),
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::CZ => "CZ",
            GateKind::CNOT => "CNOT",
            GateKind::CRY => "CRY",
            GateKind::CF => "CF",
            GateKind::U3 => "U3",
            GateKind::Dense(_) => "DENSE",
        }
    }
}

/// One gate in a circuit: kind, target qubits, and either a slot into the
/// parameter vector or fixed angles.
#[derive(Clone, Debug)]
pub struct GateDescriptor {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub param_slot: Option<usize>,
    pub fixed_params: Vec<f64>,
    pub shift_rule: ShiftRule,
}

impl GateDescriptor {
    pub fn h(q: usize) -> Self {
        Self::fixed(GateKind::H, vec![q], vec![])
    }

    pub fn x(q: usize) -> Self {
        Self::fixed(GateKind::X, vec![q], vec![])
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self::fixed(GateKind::CZ, vec![a, b], vec![])
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::fixed(GateKind::CNOT, vec![control, target], vec![])
    }

    pub fn rx(q: usize, slot: usize) -> Self {
        Self::rotation(GateKind::RX, q, slot)
    }

    pub fn ry(q: usize, slot: usize) -> Self {
        Self::rotation(GateKind::RY, q, slot)
    }

    pub fn rz(q: usize, slot: usize) -> Self {
        Self::rotation(GateKind::RZ, q, slot)
    }

    pub fn rx_fixed(q: usize, angle: f64) -> Self {
        Self::fixed(GateKind::RX, vec![q], vec![angle])
    }

    pub fn ry_fixed(q: usize, angle: f64) -> Self {
        Self::fixed(GateKind::RY, vec![q], vec![angle])
    }

    pub fn rz_fixed(q: usize, angle: f64) -> Self {
        Self::fixed(GateKind::RZ, vec![q], vec![angle])
    }

    pub fn cry(control: usize, target: usize, slot: usize) -> Self {
        GateDescriptor {
            kind: GateKind::CRY,
            targets: vec![control, target],
            param_slot: Some(slot),
            fixed_params: vec![],
            shift_rule: ShiftRule::FourTerm,
        }
    }

    pub fn cry_fixed(control: usize, target: usize, angle: f64) -> Self {
        Self::fixed(GateKind::CRY, vec![control, target], vec![angle])
    }

    pub fn cf(control: usize, target: usize, angle: f64) -> Self {
        Self::fixed(GateKind::CF, vec![control, target], vec![angle])
    }

    pub fn u3(q: usize, theta: f64, phi: f64, lambda: f64) -> Self {
        Self::fixed(GateKind::U3, vec![q], vec![theta, phi, lambda])
    }

    pub fn dense(targets: Vec<usize>, matrix: Vec<Complex64>) -> Self {
        debug_assert_eq!(matrix.len(), 1 << (2 * targets.len()));
        Self::fixed(GateKind::Dense(matrix), targets, vec![])
    }

    fn rotation(kind: GateKind, q: usize, slot: usize) -> Self {
        GateDescriptor {
            kind,
            targets: vec![q],
            param_slot: Some(slot),
            fixed_params: vec![],
            shift_rule: ShiftRule::TwoTerm,
        }
    }

    fn fixed(kind: GateKind, targets: Vec<usize>, fixed_params: Vec<f64>) -> Self {
        GateDescriptor {
            kind,
            targets,
            param_slot: None,
            fixed_params,
            shift_rule: ShiftRule::None,
        }
    }

    pub fn is_parametric(&self) -> bool {
        self.param_slot.is_some()
    }
}

/// Dense amplitudes of an N-qubit pure state.
#[derive(Clone, Debug)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

/// Create `|0…0⟩` on `n` qubits.
pub fn init_state(n: usize) -> Result<StateVector> {
    if n < 1 || n > MAX_QUBITS {
        return Err(Error::QubitCount { got: n, min: 1, max: MAX_QUBITS });
    }
    let mut amps = vec![C_ZERO; 1 << n];
    amps[0] = C_ONE;
    Ok(StateVector { n_qubits: n, amps })
}

impl StateVector {
    /// Build a state from raw amplitudes (normalized input expected).
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n || n < 1 || n > MAX_QUBITS {
            return Err(Error::QubitCount { got: n, min: 1, max: MAX_QUBITS });
        }
        Ok(StateVector { n_qubits: n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `|⟨index|ψ⟩|²` for a basis index.
    pub fn probability_of_index(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    /// All 2^N outcome probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨a|b⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::QubitIndex { index: q, n_qubits: self.n_qubits });
        }
        Ok(())
    }

    /// Apply a 2x2 matrix `[[a, b], [c, d]]` on qubit `q`.
    fn apply_single(&mut self, q: usize, m: [Complex64; 4]) {
        let mask = 1usize << q;
        let dim = self.amps.len();
        let mut base = 0usize;
        while base < dim {
            for i in base..base + mask {
                let j = i | mask;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = m[0] * a0 + m[1] * a1;
                self.amps[j] = m[2] * a0 + m[3] * a1;
            }
            base += mask << 1;
        }
    }

    /// Crate-internal hook for generator and basis-change applications.
    pub(crate) fn apply_one_qubit(&mut self, q: usize, m: [Complex64; 4]) {
        self.apply_single(q, m);
    }

    /// Zero out every amplitude whose `control` bit is clear; realizes the
    /// projector `|1⟩⟨1|` on that qubit.
    pub(crate) fn project_control_set(&mut self, control: usize) {
        let mask = 1usize << control;
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == 0 {
                *amp = C_ZERO;
            }
        }
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for amp in &mut self.amps {
            *amp *= factor;
        }
    }

    /// Apply a 2x2 matrix on `target` restricted to `control = 1`.
    fn apply_controlled(&mut self, control: usize, target: usize, m: [Complex64; 4]) {
        let cmask = 1usize << control;
        let tmask = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                let j = i | tmask;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = m[0] * a0 + m[1] * a1;
                self.amps[j] = m[2] * a0 + m[3] * a1;
            }
        }
    }

    fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    /// Gather/scatter application of a dense 2^k x 2^k matrix on `targets`.
    /// `targets[0]` is the least-significant bit of the local index.
    fn apply_dense(&mut self, targets: &[usize], m: &[Complex64]) {
        let k = targets.len();
        let sub = 1usize << k;
        let dim = self.amps.len();
        let tmask: usize = targets.iter().map(|&t| 1usize << t).sum();
        let mut gathered = vec![C_ZERO; sub];
        for base in 0..dim {
            if base & tmask != 0 {
                continue;
            }
            for (l, g) in gathered.iter_mut().enumerate() {
                *g = self.amps[base | spread(l, targets)];
            }
            for lp in 0..sub {
                let mut acc = C_ZERO;
                for l in 0..sub {
                    acc += m[lp * sub + l] * gathered[l];
                }
                self.amps[base | spread(lp, targets)] = acc;
            }
        }
    }
}

/// Spread the bits of a local index `l` onto the global positions `targets`.
fn spread(l: usize, targets: &[usize]) -> usize {
    let mut out = 0usize;
    for (j, &t) in targets.iter().enumerate() {
        out |= ((l >> j) & 1) << t;
    }
    out
}

fn rx_matrix(theta: f64) -> [Complex64; 4] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [
        Complex64::new(c, 0.0),
        Complex64::new(0.0, -s),
        Complex64::new(0.0, -s),
        Complex64::new(c, 0.0),
    ]
}

fn ry_matrix(theta: f64) -> [Complex64; 4] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [
        Complex64::new(c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    ]
}

fn rz_matrix(theta: f64) -> [Complex64; 4] {
    [
        Complex64::from_polar(1.0, -theta / 2.0),
        C_ZERO,
        C_ZERO,
        Complex64::from_polar(1.0, theta / 2.0),
    ]
}

fn cf_matrix(theta: f64) -> [Complex64; 4] {
    let (c, s) = (theta.cos(), theta.sin());
    [
        Complex64::new(c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    ]
}

/// `U3(θ, φ, λ)` entries. The (1,1) entry carries `e^{i(φ+λ)}`, which is the
/// unitary completion of the matrix; any other phase there breaks `U U† = I`.
pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> [Complex64; 4] {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    [
        Complex64::new(c, 0.0),
        -Complex64::from_polar(s, lambda),
        Complex64::from_polar(s, phi),
        Complex64::from_polar(c, phi + lambda),
    ]
}

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn h_matrix() -> [Complex64; 4] {
    [
        Complex64::new(SQRT_HALF, 0.0),
        Complex64::new(SQRT_HALF, 0.0),
        Complex64::new(SQRT_HALF, 0.0),
        Complex64::new(-SQRT_HALF, 0.0),
    ]
}

fn x_matrix() -> [Complex64; 4] {
    [C_ZERO, C_ONE, C_ONE, C_ZERO]
}

/// Apply one gate in place. `theta` must be supplied exactly when the gate is
/// parametric; fixed gates take their angles from the descriptor.
pub fn apply_gate(state: &mut StateVector, g: &GateDescriptor, theta: Option<f64>) -> Result<()> {
    for &t in &g.targets {
        state.check_qubit(t)?;
    }
    if g.targets.len() >= 2 && g.targets[0] == g.targets[1] {
        return Err(Error::QubitIndex { index: g.targets[0], n_qubits: state.n_qubits });
    }
    let angle = |kind: &'static str| -> Result<f64> {
        if g.is_parametric() {
            theta.ok_or(Error::MissingParameter { kind })
        } else {
            Ok(g.fixed_params[0])
        }
    };
    match &g.kind {
        GateKind::H => state.apply_single(g.targets[0], h_matrix()),
        GateKind::X => state.apply_single(g.targets[0], x_matrix()),
        GateKind::RX => state.apply_single(g.targets[0], rx_matrix(angle("RX")?)),
        GateKind::RY => state.apply_single(g.targets[0], ry_matrix(angle("RY")?)),
        GateKind::RZ => state.apply_single(g.targets[0], rz_matrix(angle("RZ")?)),
        GateKind::CZ => state.apply_cz(g.targets[0], g.targets[1]),
        GateKind::CNOT => state.apply_controlled(g.targets[0], g.targets[1], x_matrix()),
        GateKind::CRY => {
            state.apply_controlled(g.targets[0], g.targets[1], ry_matrix(angle("CRY")?))
        }
        GateKind::CF => state.apply_controlled(g.targets[0], g.targets[1], cf_matrix(angle("CF")?)),
        GateKind::U3 => {
            let p = &g.fixed_params;
            state.apply_single(g.targets[0], u3_matrix(p[0], p[1], p[2]));
        }
        GateKind::Dense(m) => state.apply_dense(&g.targets, m),
    }
    Ok(())
}

/// Run a circuit from `|0…0⟩` with the given parameter vector.
pub fn run(circuit: &Circuit, params: &[f64]) -> Result<StateVector> {
    if params.len() != circuit.n_params() {
        return Err(Error::ParamArity { got: params.len(), expected: circuit.n_params() });
    }
    let mut state = init_state(circuit.n_qubits())?;
    apply_circuit(&mut state, circuit, params)?;
    Ok(state)
}

/// Apply every gate of `circuit` to an existing state.
pub fn apply_circuit(state: &mut StateVector, circuit: &Circuit, params: &[f64]) -> Result<()> {
    for g in circuit.gates() {
        let theta = g.param_slot.map(|s| params[s]);
        apply_gate(state, g, theta)?;
    }
    Ok(())
}

/// `|⟨outcome|ψ⟩|²` for a bitstring outcome such as `010`.
pub fn exact_probability(state: &StateVector, outcome: &str) -> Result<f64> {
    let index = bitstring_to_index(outcome, state.n_qubits())?;
    Ok(state.probability_of_index(index))
}

pub fn bitstring_to_index(outcome: &str, n_qubits: usize) -> Result<usize> {
    if outcome.len() != n_qubits || !outcome.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::Outcome { outcome: outcome.to_string(), n_qubits });
    }
    Ok(usize::from_str_radix(outcome, 2).expect("validated binary string"))
}

pub fn index_to_bitstring(index: usize, n_qubits: usize) -> String {
    format!("{index:0n_qubits$b}")
}

/// Shot counts over measurement outcomes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counts {
    pub shots: u64,
    pub table: BTreeMap<String, u64>,
}

impl Counts {
    /// Observed frequency of one outcome.
    pub fn frequency(&self, outcome: &str) -> f64 {
        let c = self.table.get(outcome).copied().unwrap_or(0);
        c as f64 / self.shots as f64
    }
}

/// Multinomial draw of `shots` outcomes from `|amplitude|²`.
///
/// Implemented as a chain of conditional binomials over outcome indices, so
/// the cost is O(2^N) rather than O(shots · N).
pub fn sample_counts(state: &StateVector, shots: u64, rng: &mut Rng) -> Counts {
    let probs = state.probabilities();
    let counts = sample_multinomial(&probs, shots, rng);
    let mut table = BTreeMap::new();
    for (i, c) in counts.into_iter().enumerate() {
        if c > 0 {
            table.insert(index_to_bitstring(i, state.n_qubits()), c);
        }
    }
    Counts { shots, table }
}

/// Multinomial sampling over an arbitrary probability vector.
pub fn sample_multinomial(probs: &[f64], shots: u64, rng: &mut Rng) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining_shots = shots;
    let mut remaining_mass = 1.0f64;
    for (i, &p) in probs.iter().enumerate() {
        if remaining_shots == 0 {
            break;
        }
        if i + 1 == probs.len() {
            counts[i] = remaining_shots;
            break;
        }
        let q = if remaining_mass <= 0.0 { 0.0 } else { (p / remaining_mass).clamp(0.0, 1.0) };
        let draw = Binomial::new(remaining_shots, q)
            .expect("probability in [0, 1]")
            .sample(rng);
        counts[i] = draw;
        remaining_shots -= draw;
        remaining_mass -= p;
    }
    counts
}

/// Sample a single outcome index from `|amplitude|²`.
pub fn sample_outcome(state: &StateVector, rng: &mut Rng) -> usize {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, a) in state.amps.iter().enumerate() {
        acc += a.norm_sqr();
        if r < acc {
            return i;
        }
    }
    state.amps.len() - 1
}

/// Dense unitary with a unitarity check.
#[derive(Clone, Debug)]
pub struct UnitaryMatrix {
    pub dim: usize,
    pub entries: DMatrix<Complex64>,
}

impl UnitaryMatrix {
    /// Max absolute deviation of `U U†` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = &self.entries * self.entries.adjoint();
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let want = if i == j { C_ONE } else { C_ZERO };
                worst = worst.max((prod[(i, j)] - want).norm());
            }
        }
        worst
    }
}

/// Draw a Haar-random unitary on `n` qubits: fill with standard complex
/// Gaussians, QR-factor, and absorb the phases of the diagonal of R so the
/// distribution is exactly Haar.
pub fn haar_unitary(n: usize, rng: &mut Rng) -> Result<UnitaryMatrix> {
    if n < 1 || n > MAX_DENSE_QUBITS {
        return Err(Error::DenseSize { got: n, max: MAX_DENSE_QUBITS });
    }
    let dim = 1usize << n;
    let normal = rand_distr::StandardNormal;
    let ginibre = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(normal.sample(rng), normal.sample(rng))
    });
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 { C_ONE } else { d / d.norm() };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(UnitaryMatrix { dim, entries: q })
}

/// `⟨Z^⊗N⟩ = Σ_b (−1)^{popcount(b)} |a_b|²`.
pub fn expectation_global_z(state: &StateVector) -> f64 {
    state
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let sign = if (i.count_ones() & 1) == 0 { 1.0 } else { -1.0 };
            sign * a.norm_sqr()
        })
        .sum()
}
