//! Fubini-Study cost, fidelity, and parameter-shift gradients.
//!
//! A [`CompilationProblem`] pairs the trainable circuit with its fixed
//! counterpart; the probability of the all-zero outcome after `V† U |0…0⟩`
//! drives the cost `C(θ) = √(1 − p₀(θ))`. Gradients use the two-term shift
//! rule for single-qubit rotations and the four-term rule for controlled-Y
//! rotations, with all shifted evaluations independent and seeded so they can
//! run in parallel.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::noisemit::{apply_readout_noise, CalibrationMatrix};
use crate::parallel::map_indexed;
use crate::rng::{mix, rng_from_seed};
use crate::simcore::{
    apply_circuit, init_state, sample_multinomial, ShiftRule, StateVector,
};

/// Division guard: at cost below this the gradient prefactor −1/(2C) is
/// treated as converged instead of evaluated.
pub const COST_GUARD: f64 = 1e-8;

/// Shift-rule constants. `s` is the two-term shift; the four-term rule uses
/// `d± = (√2 ± 1)/(4√2)` with shifts `α = π/2` and `β = 3π/2`.
#[derive(Clone, Copy, Debug)]
pub struct ShiftConstants {
    pub s: f64,
    pub d_plus: f64,
    pub d_minus: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for ShiftConstants {
    fn default() -> Self {
        ShiftConstants {
            s: FRAC_PI_2,
            d_plus: (SQRT_2 + 1.0) / (4.0 * SQRT_2),
            d_minus: (SQRT_2 - 1.0) / (4.0 * SQRT_2),
            alpha: FRAC_PI_2,
            beta: 3.0 * FRAC_PI_2,
        }
    }
}

/// Readout-error channel attached to the measurement side of a problem,
/// optionally followed by calibration-matrix mitigation.
#[derive(Clone, Debug)]
pub struct ReadoutPipeline {
    pub epsilon: f64,
    pub calibration: Option<CalibrationMatrix>,
}

/// The compilation task `argmin_θ √(1 − |⟨0|V†U(θ)|0⟩|²)`.
///
/// Exactly one of the two circuits carries trainable parameters: the ansatz
/// `U(θ)` for state preparation, or the adjoint ansatz `V†(θ)` for
/// tomography. `shots = 0` selects exact statevector probabilities.
#[derive(Clone, Debug)]
pub struct CompilationProblem {
    u_circuit: Circuit,
    vdag_circuit: Circuit,
    shots: u64,
    noise: Option<ReadoutPipeline>,
}

impl CompilationProblem {
    pub fn new(u_circuit: Circuit, vdag_circuit: Circuit, shots: u64) -> Result<Self> {
        if u_circuit.n_qubits() != vdag_circuit.n_qubits() {
            return Err(Error::Config(format!(
                "circuit widths differ: {} vs {}",
                u_circuit.n_qubits(),
                vdag_circuit.n_qubits()
            )));
        }
        if u_circuit.n_params() > 0 && vdag_circuit.n_params() > 0 {
            return Err(Error::Config(
                "exactly one of U and V† may carry trainable parameters".into(),
            ));
        }
        Ok(CompilationProblem { u_circuit, vdag_circuit, shots, noise: None })
    }

    pub fn with_readout_noise(mut self, epsilon: f64, mitigate: bool) -> Result<Self> {
        if !(0.0..0.5).contains(&epsilon) {
            return Err(Error::ErrorRate(epsilon));
        }
        let calibration = if mitigate {
            Some(CalibrationMatrix::build(self.n_qubits(), epsilon, 0, 0)?)
        } else {
            None
        };
        self.noise = Some(ReadoutPipeline { epsilon, calibration });
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.u_circuit.n_qubits()
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    /// The circuit holding the trainable parameters.
    pub fn trainable(&self) -> &Circuit {
        if self.u_circuit.n_params() > 0 {
            &self.u_circuit
        } else {
            &self.vdag_circuit
        }
    }

    pub fn n_params(&self) -> usize {
        self.trainable().n_params()
    }

    /// The executed circuit `U` followed by `V†` as one gate list. The fixed
    /// side contributes no slots, so parameter slots are unchanged. This is
    /// the circuit whose state family defines the natural-gradient metric.
    pub fn composed_circuit(&self) -> Result<Circuit> {
        let mut gates = self.u_circuit.gates().to_vec();
        gates.extend_from_slice(self.vdag_circuit.gates());
        Circuit::new(self.n_qubits(), gates, crate::circuits::CircuitKind::Custom)
    }

    fn composed_state(&self, params: &[f64]) -> Result<StateVector> {
        let mut state = init_state(self.n_qubits())?;
        let empty: [f64; 0] = [];
        let u_params: &[f64] = if self.u_circuit.n_params() > 0 { params } else { &empty };
        apply_circuit(&mut state, &self.u_circuit, u_params)?;
        let v_params: &[f64] = if self.vdag_circuit.n_params() > 0 { params } else { &empty };
        apply_circuit(&mut state, &self.vdag_circuit, v_params)?;
        Ok(state)
    }

    /// Exact `p₀` ignoring shots and the readout channel. Also doubles as the
    /// fidelity `|⟨γ(θ)|μ⟩|²` in tomography mode.
    pub fn exact_p0(&self, params: &[f64]) -> Result<f64> {
        self.check_arity(params)?;
        Ok(self.composed_state(params)?.probability_of_index(0))
    }

    fn check_arity(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::ParamArity { got: params.len(), expected: self.n_params() });
        }
        Ok(())
    }

    /// Estimate `p₀(θ)` through the configured measurement pipeline. `seed`
    /// feeds the shot sampler; every call draws fresh shots.
    pub fn estimate_p0(&self, params: &[f64], seed: u64) -> Result<f64> {
        self.check_arity(params)?;
        let state = self.composed_state(params)?;
        let mut probs = state.probabilities();
        if let Some(noise) = &self.noise {
            probs = apply_readout_noise(&probs, noise.epsilon)?;
        }
        let mitigation = self.noise.as_ref().and_then(|n| n.calibration.as_ref());
        if self.shots == 0 {
            return Ok(match mitigation {
                Some(calib) => calib.mitigate_raw(&probs)?[0],
                None => probs[0],
            });
        }
        let mut rng = rng_from_seed(seed);
        match mitigation {
            Some(calib) => {
                // The raw inverse keeps the estimator unbiased; it can leave
                // [0, 1] under shot noise and cost() clamps it there.
                let counts = sample_multinomial(&probs, self.shots, &mut rng);
                let empirical: Vec<f64> =
                    counts.iter().map(|&c| c as f64 / self.shots as f64).collect();
                Ok(calib.mitigate_raw(&empirical)?[0])
            }
            None => {
                // Only the all-zero count matters; its marginal is binomial.
                let counts = sample_multinomial(&[probs[0], 1.0 - probs[0]], self.shots, &mut rng);
                Ok(counts[0] as f64 / self.shots as f64)
            }
        }
    }

    /// Per-slot shift rules of the trainable circuit.
    pub fn slot_rules(&self) -> Vec<ShiftRule> {
        let mut rules = vec![ShiftRule::None; self.n_params()];
        for g in self.trainable().gates() {
            if let Some(s) = g.param_slot {
                rules[s] = g.shift_rule;
            }
        }
        rules
    }
}

/// Fubini-Study distance from the all-zero probability. Mitigated estimates
/// can leave `[0, 1]` by shot noise; the argument is clamped.
pub fn cost(p0: f64) -> f64 {
    (1.0 - p0.clamp(0.0, 1.0)).sqrt()
}

/// Squared overlap `|⟨a|b⟩|²` of two pure states.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::Config(format!(
            "fidelity of states on {} and {} qubits",
            a.n_qubits(),
            b.n_qubits()
        )));
    }
    Ok(a.inner(b).norm_sqr())
}

/// Gradient of the cost together with the base-point evaluation it reused.
#[derive(Clone, Debug)]
pub struct GradientResult {
    pub values: Vec<f64>,
    pub cost: f64,
    pub p0: f64,
    /// Set when the division guard fired; the values are then all zero.
    pub converged: bool,
}

/// `∂p₀/∂θ_j` by the shift rule tagged on slot `j`.
fn dp0_slot(
    problem: &CompilationProblem,
    params: &[f64],
    slot: usize,
    rule: ShiftRule,
    shift: &ShiftConstants,
    seed: u64,
) -> Result<f64> {
    let eval = |delta: f64, sub: u64| -> Result<f64> {
        let mut shifted = params.to_vec();
        shifted[slot] += delta;
        problem.estimate_p0(&shifted, mix(seed, &[1 + 4 * slot as u64 + sub]))
    };
    match rule {
        ShiftRule::TwoTerm => {
            let plus = eval(shift.s, 0)?;
            let minus = eval(-shift.s, 1)?;
            Ok((plus - minus) / (2.0 * shift.s.sin()))
        }
        ShiftRule::FourTerm => {
            let ap = eval(shift.alpha, 0)?;
            let am = eval(-shift.alpha, 1)?;
            let bp = eval(shift.beta, 2)?;
            let bm = eval(-shift.beta, 3)?;
            Ok(shift.d_plus * (ap - am) - shift.d_minus * (bp - bm))
        }
        ShiftRule::None => Ok(0.0),
    }
}

/// Full cost gradient with the default shift constants.
pub fn gradient(problem: &CompilationProblem, params: &[f64], seed: u64) -> Result<GradientResult> {
    gradient_with_shift(problem, params, seed, &ShiftConstants::default())
}

/// Full cost gradient. The base point and every shifted point are evaluated
/// with fresh derived seeds; slot evaluations run in parallel.
pub fn gradient_with_shift(
    problem: &CompilationProblem,
    params: &[f64],
    seed: u64,
    shift: &ShiftConstants,
) -> Result<GradientResult> {
    let (dp0, c, p0) = p0_gradient_with_shift(problem, params, seed, shift)?;
    let m = problem.n_params();
    if c < COST_GUARD {
        return Ok(GradientResult { values: vec![0.0; m], cost: c, p0, converged: true });
    }
    let prefactor = -1.0 / (2.0 * c);
    let values = dp0.into_iter().map(|d| prefactor * d).collect();
    Ok(GradientResult { values, cost: c, p0, converged: false })
}

/// Raw `∂p₀/∂θ` vector plus the base-point cost and p₀. This is the
/// prefactor-free form the training loop consumes (the descent direction on
/// the squared distance 1 − p₀ is `−∂p₀`, finite even at the optimum).
pub fn p0_gradient_with_shift(
    problem: &CompilationProblem,
    params: &[f64],
    seed: u64,
    shift: &ShiftConstants,
) -> Result<(Vec<f64>, f64, f64)> {
    let p0 = problem.estimate_p0(params, mix(seed, &[0]))?;
    let c = cost(p0);
    let m = problem.n_params();
    if c < COST_GUARD {
        return Ok((vec![0.0; m], c, p0));
    }
    let rules = problem.slot_rules();
    let dp0: Vec<Result<f64>> =
        map_indexed(m, |j| dp0_slot(problem, params, j, rules[j], shift, seed));
    let mut values = Vec::with_capacity(m);
    for d in dp0 {
        values.push(d?);
    }
    Ok((values, c, p0))
}

/// Single-component cost derivative, used by the barren-plateau scan.
pub fn gradient_component(
    problem: &CompilationProblem,
    params: &[f64],
    slot: usize,
    seed: u64,
) -> Result<f64> {
    let p0 = problem.estimate_p0(params, mix(seed, &[0]))?;
    let c = cost(p0);
    if c < COST_GUARD {
        return Ok(0.0);
    }
    let rules = problem.slot_rules();
    let shift = ShiftConstants::default();
    let d = dp0_slot(problem, params, slot, rules[slot], &shift, seed)?;
    Ok(-d / (2.0 * c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{build_qsp_ansatz, build_target, AnsatzSpec, Circuit, CircuitKind};
    use crate::rng::rng_from_seed;
    use crate::simcore::{apply_gate, GateDescriptor};
    use rand::Rng as _;
    use std::f64::consts::PI;

    fn single_rx_problem() -> CompilationProblem {
        let u = Circuit::new(1, vec![GateDescriptor::rx(0, 0)], CircuitKind::Custom).unwrap();
        CompilationProblem::new(u, Circuit::empty(1), 0).unwrap()
    }

    #[test]
    fn identical_circuits_have_unit_p0() {
        let spec = AnsatzSpec::new(CircuitKind::GraphStar, 3, 2);
        let ansatz = build_qsp_ansatz(&spec).unwrap();
        let mut rng = rng_from_seed(8);
        let params: Vec<f64> =
            (0..ansatz.n_params()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let vdag = ansatz.bind(&params).unwrap().adjoint().unwrap();
        let problem = CompilationProblem::new(ansatz, vdag, 0).unwrap();
        let p0 = problem.estimate_p0(&params, 0).unwrap();
        assert!((p0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_adjoint_against_empty_u() {
        let vdag = build_target(CircuitKind::GhzTarget, 3).unwrap().adjoint().unwrap();
        let problem = CompilationProblem::new(Circuit::empty(3), vdag, 0).unwrap();
        let p0 = problem.estimate_p0(&[], 0).unwrap();
        assert!((p0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shot_estimate_tracks_exact_value() {
        let u = build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::GraphStar, 3, 1)).unwrap();
        let vdag = build_target(CircuitKind::GhzTarget, 3).unwrap().adjoint().unwrap();
        let mut rng = rng_from_seed(4);
        let params: Vec<f64> = (0..u.n_params()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();

        let exact_problem = CompilationProblem::new(u.clone(), vdag.clone(), 0).unwrap();
        let exact = exact_problem.estimate_p0(&params, 0).unwrap();

        let shots = 10_000u64;
        let shot_problem = CompilationProblem::new(u, vdag, shots).unwrap();
        let estimate = shot_problem.estimate_p0(&params, 99).unwrap();
        let sigma = (exact * (1.0 - exact) / shots as f64).sqrt();
        assert!((estimate - exact).abs() <= 3.0 * sigma + 1e-9);

        // determinism of the shot path
        let again = shot_problem.estimate_p0(&params, 99).unwrap();
        assert_eq!(estimate, again);
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let problem = single_rx_problem();
        assert!(matches!(
            problem.estimate_p0(&[0.1, 0.2], 0),
            Err(Error::ParamArity { .. })
        ));
    }

    #[test]
    fn cost_examples_and_monotonicity() {
        assert_eq!(cost(1.0), 0.0);
        assert_eq!(cost(0.0), 1.0);
        assert!((cost(0.75) - 0.5).abs() < 1e-15);
        assert_eq!(cost(1.2), 0.0);
        assert_eq!(cost(-0.1), 1.0);
        let mut last = cost(0.0);
        for i in 1..=100 {
            let c = cost(i as f64 / 100.0);
            assert!(c <= last);
            last = c;
        }
    }

    #[test]
    fn fidelity_examples() {
        let a = crate::simcore::init_state(2).unwrap();
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-15);

        let mut b = crate::simcore::init_state(1).unwrap();
        apply_gate(&mut b, &GateDescriptor::x(0), None).unwrap();
        let zero = crate::simcore::init_state(1).unwrap();
        assert!(fidelity(&zero, &b).unwrap() < 1e-15);

        let mut plus = crate::simcore::init_state(1).unwrap();
        apply_gate(&mut plus, &GateDescriptor::h(0), None).unwrap();
        assert!((fidelity(&zero, &plus).unwrap() - 0.5).abs() < 1e-12);

        let wide = crate::simcore::init_state(2).unwrap();
        assert!(fidelity(&zero, &wide).is_err());
    }

    #[test]
    fn rx_gradient_matches_closed_form() {
        let problem = single_rx_problem();
        let g = gradient(&problem, &[FRAC_PI_2], 0).unwrap();
        assert!(!g.converged);
        let expected = 1.0 / (2.0 * SQRT_2);
        assert!((g.values[0] - expected).abs() < 1e-10, "got {}", g.values[0]);
    }

    #[test]
    fn guard_fires_at_the_optimum() {
        let problem = single_rx_problem();
        let g = gradient(&problem, &[0.0], 0).unwrap();
        assert!(g.converged);
        assert_eq!(g.values, vec![0.0]);
    }

    #[test]
    fn four_term_rule_matches_finite_differences() {
        // X forces the control to |1⟩ so the CRY angle acts nontrivially.
        let gates = vec![GateDescriptor::x(0), GateDescriptor::cry(0, 1, 0)];
        let u = Circuit::new(2, gates, CircuitKind::Custom).unwrap();
        let problem = CompilationProblem::new(u, Circuit::empty(2), 0).unwrap();
        for theta in [0.3, 1.1, 2.5] {
            let g = gradient(&problem, &[theta], 0).unwrap();
            let h = 1e-5;
            let cp = cost(problem.estimate_p0(&[theta + h], 0).unwrap());
            let cm = cost(problem.estimate_p0(&[theta - h], 0).unwrap());
            let fd = (cp - cm) / (2.0 * h);
            assert!((g.values[0] - fd).abs() < 1e-6, "theta {theta}: {} vs {fd}", g.values[0]);
        }
    }

    #[test]
    fn two_term_rule_is_shift_invariant() {
        let u = build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::Linear, 2, 1)).unwrap();
        let vdag = build_target(CircuitKind::GhzTarget, 2).unwrap().adjoint().unwrap();
        let problem = CompilationProblem::new(u, vdag, 0).unwrap();
        let mut rng = rng_from_seed(15);
        let params: Vec<f64> =
            (0..problem.n_params()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let g_default = gradient(&problem, &params, 0).unwrap();
        let alt = ShiftConstants { s: PI / 3.0, ..ShiftConstants::default() };
        let g_alt = gradient_with_shift(&problem, &params, 0, &alt).unwrap();
        for (a, b) in g_default.values.iter().zip(&g_alt.values) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn kernel_is_symmetric_under_circuit_exchange() {
        let mut rng = rng_from_seed(21);
        for _ in 0..5 {
            let ansatz = build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::GraphStar, 3, 1)).unwrap();
            let params: Vec<f64> =
                (0..ansatz.n_params()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
            let bound = ansatz.bind(&params).unwrap();
            let target = build_target(CircuitKind::WTarget, 3).unwrap();

            let forward =
                CompilationProblem::new(bound.clone(), target.adjoint().unwrap(), 0).unwrap();
            let backward =
                CompilationProblem::new(target, bound.adjoint().unwrap(), 0).unwrap();
            let a = forward.estimate_p0(&[], 0).unwrap();
            let b = backward.estimate_p0(&[], 0).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_widths_rejected() {
        let u = Circuit::empty(2);
        let v = Circuit::empty(3);
        assert!(CompilationProblem::new(u, v, 0).is_err());
    }
}
