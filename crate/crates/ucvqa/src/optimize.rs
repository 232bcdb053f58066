//! Parameter updates (SGD, Adam, quantum natural gradient) and the training
//! loop.
//!
//! The natural-gradient metric is the block-diagonal Fubini-Study tensor:
//! one real symmetric block per commuting layer, each entry
//! `Re[⟨ψ|K_i K_j|ψ⟩ − ⟨ψ|K_i|ψ⟩⟨ψ|K_j|ψ⟩]` evaluated on the state just
//! before that layer. Rotation generators are `σ/2`; a controlled-Y rotation
//! contributes `|1⟩⟨1| ⊗ σ_y/2`. The metric is always evaluated in exact
//! statevector mode, independent of the shot budget used for the cost.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::objective::{cost, gradient, CompilationProblem};
use crate::rng::mix;
use crate::simcore::{apply_gate, init_state, GateKind, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
    Qng,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::Qng => "qng",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sgd" => OptimizerKind::Sgd,
            "adam" => OptimizerKind::Adam,
            "qng" => OptimizerKind::Qng,
            other => return Err(Error::Config(format!("unknown optimizer `{other}`"))),
        })
    }
}

/// Hyperparameters shared by all optimizers.
#[derive(Clone, Copy, Debug)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Metric eigenvalues at or below this are treated as null directions.
    pub qng_cutoff: f64,
    /// Training stops once the cost drops below this.
    pub convergence_cost: f64,
}

impl OptimizerConfig {
    pub fn new(kind: OptimizerKind) -> Self {
        OptimizerConfig {
            kind,
            learning_rate: 0.2,
            beta1: 0.8,
            beta2: 0.999,
            epsilon: 1e-8,
            max_iterations: 400,
            qng_cutoff: 1e-10,
            convergence_cost: 1e-4,
        }
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }
}

/// Adam moment buffers. `t` counts completed steps; bias correction uses the
/// incremented counter, so the first step is corrected with `t = 1`.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u32,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        AdamState { m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }
}

pub fn sgd_step(params: &[f64], grad: &[f64], cfg: &OptimizerConfig) -> Result<Vec<f64>> {
    if params.len() != grad.len() {
        return Err(Error::ParamArity { got: grad.len(), expected: params.len() });
    }
    Ok(params.iter().zip(grad).map(|(p, g)| p - cfg.learning_rate * g).collect())
}

pub fn adam_step(
    params: &[f64],
    grad: &[f64],
    state: &AdamState,
    cfg: &OptimizerConfig,
) -> Result<(Vec<f64>, AdamState)> {
    if params.len() != grad.len() || params.len() != state.m.len() {
        return Err(Error::ParamArity { got: grad.len(), expected: params.len() });
    }
    let mut next = state.clone();
    next.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(next.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(next.t as i32);
    let mut out = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        next.m[i] = cfg.beta1 * next.m[i] + (1.0 - cfg.beta1) * grad[i];
        next.v[i] = cfg.beta2 * next.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        let m_hat = next.m[i] / bc1;
        let v_hat = next.v[i] / bc2;
        out.push(params[i] - cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon));
    }
    Ok((out, next))
}

/// Block-diagonal Fubini-Study metric.
#[derive(Clone, Debug)]
pub struct MetricTensor {
    pub blocks: Vec<(Range<usize>, DMatrix<f64>)>,
}

impl MetricTensor {
    pub fn identity(layers: &[Range<usize>]) -> Self {
        let blocks =
            layers.iter().map(|r| (r.clone(), DMatrix::identity(r.len(), r.len()))).collect();
        MetricTensor { blocks }
    }

    pub fn n_params(&self) -> usize {
        self.blocks.last().map(|(r, _)| r.end).unwrap_or(0)
    }

    /// Diagonal as one flat vector, mostly for tests.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_params()];
        for (range, block) in &self.blocks {
            for (i, idx) in range.clone().enumerate() {
                d[idx] = block[(i, i)];
            }
        }
        d
    }
}

/// `K|ψ⟩` for the generator of one parametric gate.
fn apply_generator(state: &StateVector, gate_kind: &GateKind, targets: &[usize]) -> Result<StateVector> {
    const I: Complex64 = Complex64::new(0.0, 1.0);
    const ZERO: Complex64 = Complex64::new(0.0, 0.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);
    let pauli_x = [ZERO, ONE, ONE, ZERO];
    let pauli_y = [ZERO, -I, I, ZERO];
    let pauli_z = [ONE, ZERO, ZERO, -ONE];
    let mut phi = state.clone();
    match gate_kind {
        GateKind::RX => phi.apply_one_qubit(targets[0], pauli_x),
        GateKind::RY => phi.apply_one_qubit(targets[0], pauli_y),
        GateKind::RZ => phi.apply_one_qubit(targets[0], pauli_z),
        GateKind::CRY => {
            phi.project_control_set(targets[0]);
            phi.apply_one_qubit(targets[1], pauli_y);
        }
        _ => return Err(Error::Unlayered),
    }
    phi.scale(0.5);
    Ok(phi)
}

/// Block-diagonal metric of a layered circuit at the given parameters,
/// evaluated from `|0…0⟩` in exact statevector mode.
pub fn qng_metric(circuit: &Circuit, params: &[f64]) -> Result<MetricTensor> {
    if params.len() != circuit.n_params() {
        return Err(Error::ParamArity { got: params.len(), expected: circuit.n_params() });
    }
    if circuit.n_params() > 0 && circuit.layers().is_empty() {
        return Err(Error::Unlayered);
    }
    let gates = circuit.gates();
    let mut state = init_state(circuit.n_qubits())?;
    let mut blocks = Vec::with_capacity(circuit.layers().len());
    let mut gi = 0usize;
    for layer in circuit.layers() {
        // advance through fixed gates up to the first gate of this layer
        while gi < gates.len() && gates[gi].param_slot.is_none() {
            apply_gate(&mut state, &gates[gi], None)?;
            gi += 1;
        }
        let start = gi;
        while gi < gates.len() {
            match gates[gi].param_slot {
                Some(s) if s < layer.end => gi += 1,
                _ => break,
            }
        }
        let layer_gates = &gates[start..gi];
        if layer_gates.len() != layer.len() {
            return Err(Error::Unlayered);
        }
        let phis: Vec<StateVector> = layer_gates
            .iter()
            .map(|g| apply_generator(&state, &g.kind, &g.targets))
            .collect::<Result<_>>()?;
        let first_moments: Vec<f64> = phis.iter().map(|phi| state.inner(phi).re).collect();
        let m = layer.len();
        let mut block = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let second = phis[i].inner(&phis[j]).re;
                let value = second - first_moments[i] * first_moments[j];
                block[(i, j)] = value;
                block[(j, i)] = value;
            }
        }
        blocks.push((layer.clone(), block));
        for g in layer_gates {
            apply_gate(&mut state, g, g.param_slot.map(|s| params[s]))?;
        }
    }
    Ok(MetricTensor { blocks })
}

/// `θ − α g⁺ ∇C` with the pseudo-inverse taken per block by symmetric
/// eigendecomposition; eigenvalues at or below the cutoff are annihilated.
pub fn qng_step(
    params: &[f64],
    grad: &[f64],
    metric: &MetricTensor,
    cfg: &OptimizerConfig,
) -> Result<Vec<f64>> {
    if params.len() != grad.len() {
        return Err(Error::ParamArity { got: grad.len(), expected: params.len() });
    }
    let mut covered = 0usize;
    for (range, _) in &metric.blocks {
        if range.start != covered {
            return Err(Error::MetricCoverage { expected: params.len() });
        }
        covered = range.end;
    }
    if covered != params.len() {
        return Err(Error::MetricCoverage { expected: params.len() });
    }
    let mut out = params.to_vec();
    for (range, block) in &metric.blocks {
        let m = range.len();
        let sub = DVector::from_iterator(m, grad[range.clone()].iter().copied());
        let eig = block.clone().symmetric_eigen();
        let mut natural = DVector::zeros(m);
        for k in 0..m {
            let lambda = eig.eigenvalues[k];
            if lambda > cfg.qng_cutoff {
                let v = eig.eigenvectors.column(k);
                natural.axpy(v.dot(&sub) / lambda, &v, 1.0);
            }
        }
        for (i, idx) in range.clone().enumerate() {
            out[idx] -= cfg.learning_rate * natural[i];
        }
    }
    Ok(out)
}

/// Per-iteration record of the training loop.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub iteration: usize,
    pub cost: f64,
    pub p0: f64,
    pub ms: u64,
}

/// Everything a training run produced.
#[derive(Clone, Debug)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    pub final_params: Vec<f64>,
    pub final_cost: f64,
    pub final_p0: f64,
    pub converged: bool,
}

impl TrainTrace {
    /// First iteration whose recorded cost drops below `threshold`.
    pub fn iterations_to(&self, threshold: f64) -> Option<usize> {
        self.records.iter().find(|r| r.cost < threshold).map(|r| r.iteration)
    }

    /// CSV with header `iteration,cost,p0,ms`. The `ms` column is wall time
    /// and is the one field not covered by the determinism guarantee.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,cost,p0,ms\n");
        for r in &self.records {
            out.push_str(&format!("{},{},{},{}\n", r.iteration, r.cost, r.p0, r.ms));
        }
        out
    }
}

/// Run the gradient/step loop until convergence or the iteration budget.
///
/// Each iteration records the cost at the pre-step parameters. After the loop
/// a final evaluation at the final parameters fills `final_cost`/`final_p0`.
pub fn train(
    problem: &CompilationProblem,
    cfg: &OptimizerConfig,
    init: &[f64],
    master_seed: u64,
) -> Result<TrainTrace> {
    let m = problem.n_params();
    if init.len() != m {
        return Err(Error::ParamArity { got: init.len(), expected: m });
    }
    let mut params = init.to_vec();
    let mut adam = AdamState::new(m);
    let mut records = Vec::new();
    let mut converged = false;
    // The metric lives on the executed-circuit state family: a fixed prefix
    // (a tomography target) shifts every pre-layer state, while a fixed
    // suffix leaves the geometry untouched.
    let composed =
        if cfg.kind == OptimizerKind::Qng { Some(problem.composed_circuit()?) } else { None };

    if m == 0 {
        let p0 = problem.estimate_p0(&[], mix(master_seed, &[0]))?;
        let c = cost(p0);
        records.push(TraceRecord { iteration: 0, cost: c, p0, ms: 0 });
        return Ok(TrainTrace {
            records,
            final_params: params,
            final_cost: c,
            final_p0: p0,
            converged: true,
        });
    }

    for t in 0..cfg.max_iterations {
        let started = Instant::now();
        let seed_t = mix(master_seed, &[t as u64]);
        let (dp0, c, p0) = p0_gradient_with_shift(
            problem,
            &params,
            seed_t,
            &crate::objective::ShiftConstants::default(),
        )?;
        if c < cfg.convergence_cost {
            records.push(TraceRecord {
                iteration: t,
                cost: c,
                p0,
                ms: started.elapsed().as_millis() as u64,
            });
            converged = true;
            break;
        }
        // Steps descend the squared distance 1 − p₀ (gradient −∂p₀ = 2C·∇C):
        // the distance itself is a cone at the optimum, where any fixed-rate
        // update cycles at radius α instead of settling.
        let step_grad: Vec<f64> = dp0.iter().map(|v| -v).collect();
        params = match cfg.kind {
            OptimizerKind::Sgd => sgd_step(&params, &step_grad, cfg)?,
            OptimizerKind::Adam => {
                let (next, next_state) = adam_step(&params, &step_grad, &adam, cfg)?;
                adam = next_state;
                next
            }
            OptimizerKind::Qng => {
                let metric = qng_metric(composed.as_ref().expect("built for qng"), &params)?;
                qng_step(&params, &step_grad, &metric, cfg)?
            }
        };
        records.push(TraceRecord {
            iteration: t,
            cost: g.cost,
            p0: g.p0,
            ms: started.elapsed().as_millis() as u64,
        });
    }

    // A converged run reports the measurement that stopped it; otherwise the
    // final parameters get one fresh evaluation.
    let (final_cost, final_p0) = if converged {
        let last = records.last().expect("converged run has a record");
        (last.cost, last.p0)
    } else {
        let p0 = problem.estimate_p0(&params, mix(master_seed, &[u64::MAX]))?;
        (cost(p0), p0)
    };
    Ok(TrainTrace { records, final_params: params, final_cost, final_p0, converged })
}
