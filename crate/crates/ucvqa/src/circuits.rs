//! Circuit IR and builders for every ansatz and target circuit.
//!
//! Builders assign parameter slots in gate order and derive the commuting
//! layer structure used by the natural-gradient metric: consecutive
//! parametric gates with disjoint qubit supports form one block, and any
//! non-parametric gate closes the current block.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::simcore::{GateDescriptor, GateKind, UnitaryMatrix};

/// Tags the structural family of a circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircuitKind {
    Linear,
    GraphPolygon,
    GraphStar,
    WChain,
    WAlternating,
    WAllToAll,
    GhzTarget,
    WTarget,
    HaarTarget,
    Custom,
}

impl CircuitKind {
    pub fn name(self) -> &'static str {
        match self {
            CircuitKind::Linear => "linear",
            CircuitKind::GraphPolygon => "graph_polygon",
            CircuitKind::GraphStar => "graph_star",
            CircuitKind::WChain => "w_chain",
            CircuitKind::WAlternating => "w_alternating",
            CircuitKind::WAllToAll => "w_all_to_all",
            CircuitKind::GhzTarget => "ghz",
            CircuitKind::WTarget => "w",
            CircuitKind::HaarTarget => "haar",
            CircuitKind::Custom => "custom",
        }
    }

    pub fn is_qsp_ansatz(self) -> bool {
        matches!(self, CircuitKind::Linear | CircuitKind::GraphPolygon | CircuitKind::GraphStar)
    }

    pub fn is_qst_ansatz(self) -> bool {
        matches!(self, CircuitKind::WChain | CircuitKind::WAlternating | CircuitKind::WAllToAll)
    }
}

impl fmt::Display for CircuitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CircuitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "linear" => CircuitKind::Linear,
            "graph_polygon" | "polygon" => CircuitKind::GraphPolygon,
            "graph_star" | "star" => CircuitKind::GraphStar,
            "w_chain" | "chain" => CircuitKind::WChain,
            "w_alternating" | "alternating" => CircuitKind::WAlternating,
            "w_all_to_all" | "all_to_all" => CircuitKind::WAllToAll,
            "ghz" | "ghz_target" => CircuitKind::GhzTarget,
            "w" | "w_target" => CircuitKind::WTarget,
            "haar" | "haar_target" => CircuitKind::HaarTarget,
            other => return Err(Error::Config(format!("unknown circuit kind `{other}`"))),
        })
    }
}

/// Ansatz request: structure, width, and layer count.
#[derive(Clone, Copy, Debug)]
pub struct AnsatzSpec {
    pub kind: CircuitKind,
    pub n_qubits: usize,
    pub n_layers: usize,
}

impl AnsatzSpec {
    pub fn new(kind: CircuitKind, n_qubits: usize, n_layers: usize) -> Self {
        AnsatzSpec { kind, n_qubits, n_layers }
    }

    fn validate(&self, builder: &'static str) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::QubitCount { got: self.n_qubits, min: 2, max: crate::simcore::MAX_QUBITS });
        }
        if self.n_layers < 1 {
            return Err(Error::Config(format!("{builder}: layer count must be >= 1")));
        }
        Ok(())
    }
}

/// Ordered gate list with parameter accounting and commuting-layer structure.
#[derive(Clone, Debug)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<GateDescriptor>,
    n_params: usize,
    layers: Vec<Range<usize>>,
    kind: CircuitKind,
}

impl Circuit {
    /// Assemble a circuit, validating slot and target consistency and
    /// deriving the layer structure.
    pub fn new(n_qubits: usize, gates: Vec<GateDescriptor>, kind: CircuitKind) -> Result<Self> {
        let mut slots: Vec<usize> = gates.iter().filter_map(|g| g.param_slot).collect();
        let n_params = slots.len();
        slots.sort_unstable();
        for (i, s) in slots.iter().enumerate() {
            if *s != i {
                return Err(Error::Config(format!(
                    "parameter slots must cover 0..{n_params} exactly once"
                )));
            }
        }
        for g in &gates {
            for &t in &g.targets {
                if t >= n_qubits {
                    return Err(Error::QubitIndex { index: t, n_qubits });
                }
            }
            if g.targets.len() >= 2 {
                let mut ts = g.targets.clone();
                ts.sort_unstable();
                ts.dedup();
                if ts.len() != g.targets.len() {
                    return Err(Error::QubitIndex { index: g.targets[0], n_qubits });
                }
            }
        }
        let layers = compute_layers(&gates);
        Ok(Circuit { n_qubits, gates, n_params, layers, kind })
    }

    pub fn empty(n_qubits: usize) -> Self {
        Circuit { n_qubits, gates: vec![], n_params: 0, layers: vec![], kind: CircuitKind::Custom }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateDescriptor] {
        &self.gates
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Commuting parameter blocks in slot order; empty when the circuit has
    /// no usable layer structure.
    pub fn layers(&self) -> &[Range<usize>] {
        &self.layers
    }

    pub fn kind(&self) -> CircuitKind {
        self.kind
    }

    /// Greedy-layering depth: each gate lands one step after the last use of
    /// any of its qubits; the depth is the highest step used.
    pub fn depth(&self) -> usize {
        let mut last = vec![0usize; self.n_qubits];
        let mut depth = 0;
        for g in &self.gates {
            let step = 1 + g.targets.iter().map(|&q| last[q]).max().unwrap_or(0);
            for &q in &g.targets {
                last[q] = step;
            }
            depth = depth.max(step);
        }
        depth
    }

    /// Replace parameter slots with the given fixed angles.
    pub fn bind(&self, params: &[f64]) -> Result<Circuit> {
        if params.len() != self.n_params {
            return Err(Error::ParamArity { got: params.len(), expected: self.n_params });
        }
        let gates = self
            .gates
            .iter()
            .map(|g| match g.param_slot {
                Some(s) => GateDescriptor {
                    kind: g.kind.clone(),
                    targets: g.targets.clone(),
                    param_slot: None,
                    fixed_params: vec![params[s]],
                    shift_rule: crate::simcore::ShiftRule::None,
                },
                None => g.clone(),
            })
            .collect();
        Ok(Circuit {
            n_qubits: self.n_qubits,
            gates,
            n_params: 0,
            layers: vec![],
            kind: self.kind,
        })
    }

    /// Adjoint of a parameter-free circuit: gates reversed and inverted.
    pub fn adjoint(&self) -> Result<Circuit> {
        if self.n_params != 0 {
            return Err(Error::AdjointParametric);
        }
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|g| {
                let mut inv = g.clone();
                match &g.kind {
                    GateKind::H | GateKind::X | GateKind::CZ | GateKind::CNOT => {}
                    GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::CRY | GateKind::CF => {
                        inv.fixed_params = vec![-g.fixed_params[0]];
                    }
                    GateKind::U3 => {
                        let p = &g.fixed_params;
                        inv.fixed_params = vec![-p[0], -p[2], -p[1]];
                    }
                    GateKind::Dense(m) => {
                        let dim = 1usize << g.targets.len();
                        let mut adj = vec![num_complex::Complex64::new(0.0, 0.0); m.len()];
                        for r in 0..dim {
                            for c in 0..dim {
                                adj[r * dim + c] = m[c * dim + r].conj();
                            }
                        }
                        inv.kind = GateKind::Dense(adj);
                    }
                }
                inv
            })
            .collect();
        Ok(Circuit {
            n_qubits: self.n_qubits,
            gates,
            n_params: 0,
            layers: vec![],
            kind: self.kind,
        })
    }

    /// Line-oriented text serialization: one gate per line,
    /// `KIND q0[,q1] slot=<k>|angle=<radians>`.
    pub fn to_lines(&self) -> Result<String> {
        let mut out = String::new();
        for g in &self.gates {
            if matches!(g.kind, GateKind::Dense(_)) {
                return Err(Error::Unserializable("DENSE"));
            }
            let qubits: Vec<String> = g.targets.iter().map(|q| q.to_string()).collect();
            out.push_str(g.kind.name());
            out.push(' ');
            out.push_str(&qubits.join(","));
            if let Some(s) = g.param_slot {
                out.push_str(&format!(" slot={s}"));
            } else if !g.fixed_params.is_empty() {
                let angles: Vec<String> = g.fixed_params.iter().map(|a| a.to_string()).collect();
                out.push_str(&format!(" angle={}", angles.join(",")));
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Parse the output of [`Circuit::to_lines`].
    pub fn from_lines(n_qubits: usize, text: &str) -> Result<Circuit> {
        let mut gates = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let kind = parts.next().ok_or_else(|| Error::Parse(line.to_string()))?;
            let qubits: Vec<usize> = parts
                .next()
                .ok_or_else(|| Error::Parse(line.to_string()))?
                .split(',')
                .map(|t| t.parse().map_err(|_| Error::Parse(line.to_string())))
                .collect::<Result<_>>()?;
            let mut slot = None;
            let mut angles = Vec::new();
            if let Some(tail) = parts.next() {
                if let Some(v) = tail.strip_prefix("slot=") {
                    slot = Some(v.parse().map_err(|_| Error::Parse(line.to_string()))?);
                } else if let Some(v) = tail.strip_prefix("angle=") {
                    angles = v
                        .split(',')
                        .map(|t| t.parse().map_err(|_| Error::Parse(line.to_string())))
                        .collect::<Result<_>>()?;
                } else {
                    return Err(Error::Parse(line.to_string()));
                }
            }
            let q = qubits[0];
            let gate = match (kind, slot) {
                ("H", None) => GateDescriptor::h(q),
                ("X", None) => GateDescriptor::x(q),
                ("CZ", None) => GateDescriptor::cz(q, qubits[1]),
                ("CNOT", None) => GateDescriptor::cnot(q, qubits[1]),
                ("RX", Some(s)) => GateDescriptor::rx(q, s),
                ("RY", Some(s)) => GateDescriptor::ry(q, s),
                ("RZ", Some(s)) => GateDescriptor::rz(q, s),
                ("CRY", Some(s)) => GateDescriptor::cry(q, qubits[1], s),
                ("RX", None) => GateDescriptor::rx_fixed(q, angles[0]),
                ("RY", None) => GateDescriptor::ry_fixed(q, angles[0]),
                ("RZ", None) => GateDescriptor::rz_fixed(q, angles[0]),
                ("CRY", None) => GateDescriptor::cry_fixed(q, qubits[1], angles[0]),
                ("CF", None) => GateDescriptor::cf(q, qubits[1], angles[0]),
                ("U3", None) => GateDescriptor::u3(q, angles[0], angles[1], angles[2]),
                _ => return Err(Error::Parse(line.to_string())),
            };
            gates.push(gate);
        }
        Circuit::new(n_qubits, gates, CircuitKind::Custom)
    }
}

/// Greedy commuting-block grouping. Blocks hold consecutive parametric gates
/// with pairwise disjoint qubit supports; slots inside one block are
/// contiguous because builders assign slots in gate order. Returns an empty
/// list when slots do not appear in ascending gate order.
fn compute_layers(gates: &[GateDescriptor]) -> Vec<Range<usize>> {
    let mut layers: Vec<Range<usize>> = Vec::new();
    let mut block: Option<(Range<usize>, Vec<usize>)> = None;
    let mut expected_slot = 0usize;
    for g in gates {
        match g.param_slot {
            Some(s) => {
                if s != expected_slot {
                    return vec![];
                }
                expected_slot += 1;
                match &mut block {
                    Some((range, support)) if g.targets.iter().all(|t| !support.contains(t)) => {
                        range.end = s + 1;
                        support.extend_from_slice(&g.targets);
                    }
                    Some(_) => {
                        let (range, _) = block.take().expect("block present");
                        layers.push(range);
                        block = Some((s..s + 1, g.targets.clone()));
                    }
                    None => block = Some((s..s + 1, g.targets.clone())),
                }
            }
            None => {
                if let Some((range, _)) = block.take() {
                    layers.push(range);
                }
            }
        }
    }
    if let Some((range, _)) = block.take() {
        layers.push(range);
    }
    layers
}

/// Ring edges `(i, i+1 mod N)` split into three rounds so the greedy-layering
/// depth of one polygon layer is the same for every N. The wrap edge moves to
/// the middle round when it would collide inside the first one.
fn polygon_groups(n: usize) -> [Vec<(usize, usize)>; 3] {
    let mut groups: [Vec<(usize, usize)>; 3] = [vec![], vec![], vec![]];
    for i in 0..n {
        let mut idx = i % 3;
        if n % 3 == 1 && i == n - 1 {
            idx = 1;
        }
        groups[idx].push((i, (i + 1) % n));
    }
    groups
}

/// Build a state-preparation ansatz: `linear`, `graph_polygon`, or
/// `graph_star`. Parameter totals are 5NL, 2NL, and (2N−2)L.
pub fn build_qsp_ansatz(spec: &AnsatzSpec) -> Result<Circuit> {
    spec.validate("build_qsp_ansatz")?;
    let (n, layers) = (spec.n_qubits, spec.n_layers);
    let mut gates = Vec::new();
    let mut slot = 0usize;
    let mut next = || {
        let s = slot;
        slot += 1;
        s
    };
    match spec.kind {
        CircuitKind::Linear => {
            for _ in 0..layers {
                for q in 0..n {
                    gates.push(GateDescriptor::rx(q, next()));
                }
                for i in 0..n {
                    gates.push(GateDescriptor::cry(i, (i + 1) % n, next()));
                }
                for q in 0..n {
                    gates.push(GateDescriptor::rz(q, next()));
                }
                for i in (0..n).rev() {
                    gates.push(GateDescriptor::cry((i + 1) % n, i, next()));
                }
                for q in 0..n {
                    gates.push(GateDescriptor::rz(q, next()));
                }
            }
        }
        CircuitKind::GraphPolygon => {
            let groups = polygon_groups(n);
            for layer in 0..layers {
                for q in 0..n {
                    gates.push(GateDescriptor::ry(q, next()));
                }
                let order: Vec<usize> = if layer % 2 == 0 { vec![0, 1, 2] } else { vec![2, 1, 0] };
                for gi in order {
                    for &(a, b) in &groups[gi] {
                        gates.push(GateDescriptor::cz(a, b));
                    }
                }
                for q in 0..n {
                    gates.push(GateDescriptor::ry(q, next()));
                }
            }
        }
        CircuitKind::GraphStar => {
            for _ in 0..layers {
                for k in 1..n {
                    gates.push(GateDescriptor::ry(0, next()));
                    gates.push(GateDescriptor::ry(k, next()));
                    gates.push(GateDescriptor::cz(0, k));
                }
            }
        }
        other => {
            return Err(Error::AnsatzKind { kind: other.name(), builder: "build_qsp_ansatz" })
        }
    }
    Circuit::new(n, gates, spec.kind)
}

/// Entangler pairs for one layer of a tomography ansatz.
fn qst_entangler_pairs(kind: CircuitKind, n: usize, layer: usize) -> Vec<(usize, usize)> {
    match kind {
        CircuitKind::WChain => (0..n).map(|i| (i, (i + 1) % n)).collect(),
        CircuitKind::WAlternating => {
            let offset = layer % 2;
            let pairs = if n % 2 == 0 { n / 2 } else { (n - 1) / 2 };
            (0..pairs)
                .map(|k| {
                    let a = offset + 2 * k;
                    (a, (a + 1) % n)
                })
                .collect()
        }
        CircuitKind::WAllToAll => {
            let mut out = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    out.push((i, j));
                }
            }
            out
        }
        _ => unreachable!("validated by caller"),
    }
}

/// Build a tomography ansatz `V†(θ)`: per layer an entangler of controlled-Y
/// rotations followed by RZ·RX·RZ rows. Parameter totals are 4NL (chain),
/// L⌊N/2⌋ + 3NL (alternating; exactly ⌊NL/2⌋ + 3NL at even N), and
/// N(N+5)L/2 (all-to-all).
pub fn build_qst_ansatz(spec: &AnsatzSpec) -> Result<Circuit> {
    spec.validate("build_qst_ansatz")?;
    if !spec.kind.is_qst_ansatz() {
        return Err(Error::AnsatzKind { kind: spec.kind.name(), builder: "build_qst_ansatz" });
    }
    let (n, layers) = (spec.n_qubits, spec.n_layers);
    let mut gates = Vec::new();
    let mut slot = 0usize;
    let mut next = || {
        let s = slot;
        slot += 1;
        s
    };
    for layer in 0..layers {
        for (c, t) in qst_entangler_pairs(spec.kind, n, layer) {
            gates.push(GateDescriptor::cry(c, t, next()));
        }
        for q in 0..n {
            gates.push(GateDescriptor::rz(q, next()));
        }
        for q in 0..n {
            gates.push(GateDescriptor::rx(q, next()));
        }
        for q in 0..n {
            gates.push(GateDescriptor::rz(q, next()));
        }
    }
    Circuit::new(n, gates, spec.kind)
}

/// Parameter-free target circuits for the GHZ and W classes.
pub fn build_target(kind: CircuitKind, n: usize) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::QubitCount { got: n, min: 2, max: crate::simcore::MAX_QUBITS });
    }
    let mut gates = Vec::new();
    match kind {
        CircuitKind::GhzTarget => {
            gates.push(GateDescriptor::h(0));
            for q in 0..n - 1 {
                gates.push(GateDescriptor::cnot(q, q + 1));
            }
        }
        CircuitKind::WTarget => {
            // Cascade of controlled-F rotations with cos t_k = 1/sqrt(k),
            // each followed by a CNOT pulling the excitation back.
            gates.push(GateDescriptor::x(0));
            for i in 0..n - 1 {
                let k = (n - i) as f64;
                let angle = (1.0 / k.sqrt()).acos();
                gates.push(GateDescriptor::cf(i, i + 1, angle));
                gates.push(GateDescriptor::cnot(i + 1, i));
            }
        }
        other => return Err(Error::AnsatzKind { kind: other.name(), builder: "build_target" }),
    }
    Circuit::new(n, gates, kind)
}

/// One-qubit circuit realizing `U3(θ, φ, λ)`.
pub fn u3_circuit(theta: f64, phi: f64, lambda: f64) -> Circuit {
    Circuit::new(1, vec![GateDescriptor::u3(0, theta, phi, lambda)], CircuitKind::Custom)
        .expect("static construction")
}

/// The trainable side of single-qubit tomography: `R_z(θ₃) R_x(θ₂) R_z(θ₁)`
/// acting after the unknown state, one slot per rotation in circuit order.
pub fn single_qubit_tomography_ansatz() -> Circuit {
    let gates = vec![
        GateDescriptor::rz(0, 0),
        GateDescriptor::rx(0, 1),
        GateDescriptor::rz(0, 2),
    ];
    Circuit::new(1, gates, CircuitKind::Custom).expect("static construction")
}

/// Draw U3 angles Haar-uniformly on the Bloch sphere.
pub fn haar_u3_angles(rng: &mut crate::rng::Rng) -> (f64, f64, f64) {
    use rand::Rng as _;
    let u: f64 = rng.gen();
    let theta = (1.0 - 2.0 * u).acos();
    let phi = rng.gen_range(0.0..2.0 * PI);
    let lambda = rng.gen_range(0.0..2.0 * PI);
    (theta, phi, lambda)
}

/// Wrap a dense unitary as a parameter-free target circuit on all qubits.
pub fn haar_target(n: usize, unitary: &UnitaryMatrix) -> Result<Circuit> {
    if unitary.dim != 1 << n {
        return Err(Error::DenseSize { got: n, max: crate::simcore::MAX_DENSE_QUBITS });
    }
    let mut matrix = Vec::with_capacity(unitary.dim * unitary.dim);
    for r in 0..unitary.dim {
        for c in 0..unitary.dim {
            matrix.push(unitary.entries[(r, c)]);
        }
    }
    let gate = GateDescriptor::dense((0..n).collect(), matrix);
    Circuit::new(n, vec![gate], CircuitKind::HaarTarget)
}

/// Closed-form parameter count for each ansatz family as published; the
/// alternating count is exact at even N and reported by `n_params` otherwise.
pub fn expected_param_count(kind: CircuitKind, n: usize, l: usize) -> Option<usize> {
    Some(match kind {
        CircuitKind::Linear => 5 * n * l,
        CircuitKind::GraphPolygon => 2 * n * l,
        CircuitKind::GraphStar => 2 * n * l - 2 * l,
        CircuitKind::WChain => 4 * n * l,
        CircuitKind::WAlternating => n * l / 2 + 3 * n * l,
        CircuitKind::WAllToAll => n * (n + 5) * l / 2,
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::simcore::{exact_probability, haar_unitary, run};

    #[test]
    fn qsp_param_count_examples() {
        let c = build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::Linear, 3, 2)).unwrap();
        assert_eq!(c.n_params(), 30);
        let c = build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::GraphStar, 3, 2)).unwrap();
        assert_eq!(c.n_params(), 8);
        let c = build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::GraphPolygon, 4, 1)).unwrap();
        assert_eq!(c.n_params(), 8);
    }

    #[test]
    fn qst_param_count_examples() {
        let c = build_qst_ansatz(&AnsatzSpec::new(CircuitKind::WChain, 3, 2)).unwrap();
        assert_eq!(c.n_params(), 24);
        let c = build_qst_ansatz(&AnsatzSpec::new(CircuitKind::WAllToAll, 4, 1)).unwrap();
        assert_eq!(c.n_params(), 18);
        let c = build_qst_ansatz(&AnsatzSpec::new(CircuitKind::WAlternating, 4, 2)).unwrap();
        assert_eq!(c.n_params(), 28);
    }

    #[test]
    fn param_count_formulas_hold_on_grid() {
        let kinds = [
            CircuitKind::Linear,
            CircuitKind::GraphPolygon,
            CircuitKind::GraphStar,
            CircuitKind::WChain,
            CircuitKind::WAlternating,
            CircuitKind::WAllToAll,
        ];
        for &kind in &kinds {
            for n in 2..=8 {
                if kind == CircuitKind::WAlternating && n % 2 == 1 {
                    continue;
                }
                for l in 1..=5 {
                    let spec = AnsatzSpec::new(kind, n, l);
                    let c = if kind.is_qsp_ansatz() {
                        build_qsp_ansatz(&spec).unwrap()
                    } else {
                        build_qst_ansatz(&spec).unwrap()
                    };
                    assert_eq!(
                        c.n_params(),
                        expected_param_count(kind, n, l).unwrap(),
                        "{kind} N={n} L={l}"
                    );
                }
            }
        }
    }

    #[test]
    fn alternating_odd_n_reported_by_n_params() {
        // (N-1)/2 entangler slots per layer at odd N; within L/2 of NL/2.
        for n in [3usize, 5, 7] {
            for l in 1..=5 {
                let c = build_qst_ansatz(&AnsatzSpec::new(CircuitKind::WAlternating, n, l)).unwrap();
                let published = n * l / 2 + 3 * n * l;
                let got = c.n_params();
                assert_eq!(got, l * ((n - 1) / 2) + 3 * n * l);
                assert!(published - got <= l / 2 + 1, "N={n} L={l}: {got} vs {published}");
            }
        }
    }

    #[test]
    fn depth_examples() {
        let c = build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::Linear, 3, 2)).unwrap();
        assert_eq!(c.depth(), 18);
        let c = build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::GraphPolygon, 4, 2)).unwrap();
        assert_eq!(c.depth(), 10);
        let c = build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::GraphStar, 3, 2)).unwrap();
        assert_eq!(c.depth(), 8);
    }

    #[test]
    fn depth_formulas_hold_on_grid() {
        for n in 3..=8 {
            for l in 1..=5 {
                let linear = build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::Linear, n, l)).unwrap();
                assert_eq!(linear.depth(), (2 * n + 3) * l, "linear N={n} L={l}");
                let poly =
                    build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::GraphPolygon, n, l)).unwrap();
                assert_eq!(poly.depth(), 5 * l, "polygon N={n} L={l}");
                let star =
                    build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::GraphStar, n, l)).unwrap();
                assert_eq!(star.depth(), (2 * n - 2) * l, "star N={n} L={l}");
            }
        }
    }

    #[test]
    fn ghz_target_amplitudes() {
        for n in 2..=6 {
            let c = build_target(CircuitKind::GhzTarget, n).unwrap();
            assert_eq!(c.n_params(), 0);
            let s = run(&c, &[]).unwrap();
            let dim = 1 << n;
            let amp = std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..dim {
                let want = if i == 0 || i == dim - 1 { amp } else { 0.0 };
                assert!(
                    (s.amplitudes()[i].re - want).abs() < 1e-10 && s.amplitudes()[i].im.abs() < 1e-10,
                    "N={n} index {i}"
                );
            }
        }
    }

    #[test]
    fn w_target_amplitudes() {
        for n in 2..=6 {
            let c = build_target(CircuitKind::WTarget, n).unwrap();
            let s = run(&c, &[]).unwrap();
            let amp = 1.0 / (n as f64).sqrt();
            for (i, a) in s.amplitudes().iter().enumerate() {
                let want = if i.count_ones() == 1 { amp } else { 0.0 };
                assert!((a.re - want).abs() < 1e-10 && a.im.abs() < 1e-10, "N={n} index {i}");
            }
        }
    }

    #[test]
    fn w_target_examples() {
        let s = run(&build_target(CircuitKind::WTarget, 2).unwrap(), &[]).unwrap();
        assert!((exact_probability(&s, "01").unwrap() - 0.5).abs() < 1e-10);
        assert!((exact_probability(&s, "10").unwrap() - 0.5).abs() < 1e-10);

        let s = run(&build_target(CircuitKind::WTarget, 4).unwrap(), &[]).unwrap();
        let nonzero: Vec<f64> =
            s.probabilities().into_iter().filter(|p| *p > 1e-12).collect();
        assert_eq!(nonzero.len(), 4);
        for p in nonzero {
            assert!((p - 0.25).abs() < 1e-10);
        }
    }

    #[test]
    fn every_cz_is_dressed_by_two_rotations() {
        // Within each layer, the nearest preceding non-CZ gate on both CZ
        // qubits must be a parameterized RY. CZ gates are mutually commuting
        // diagonal gates, so intervening CZs are transparent to the scan.
        for kind in [CircuitKind::GraphPolygon, CircuitKind::GraphStar] {
            for n in 3..=6 {
                for l in 1..=3 {
                    let c = build_qsp_ansatz(&AnsatzSpec::new(kind, n, l)).unwrap();
                    let per_layer = c.gates().len() / l;
                    for (gi, g) in c.gates().iter().enumerate() {
                        if g.kind != GateKind::CZ {
                            continue;
                        }
                        let layer_start = (gi / per_layer) * per_layer;
                        let mut dressed = 0;
                        for &q in &g.targets {
                            let prev = c.gates()[layer_start..gi]
                                .iter()
                                .rev()
                                .find(|p| p.targets.contains(&q) && p.kind != GateKind::CZ);
                            match prev {
                                Some(p) if p.kind == GateKind::RY && p.is_parametric() => {
                                    dressed += 1
                                }
                                other => panic!("{kind} N={n}: CZ fed by {other:?}"),
                            }
                        }
                        assert_eq!(dressed, 2);
                    }
                }
            }
        }
    }

    #[test]
    fn layer_structure_partitions_slots() {
        for (kind, qsp) in [
            (CircuitKind::Linear, true),
            (CircuitKind::GraphPolygon, true),
            (CircuitKind::GraphStar, true),
            (CircuitKind::WChain, false),
            (CircuitKind::WAlternating, false),
            (CircuitKind::WAllToAll, false),
        ] {
            let spec = AnsatzSpec::new(kind, 4, 2);
            let c =
                if qsp { build_qsp_ansatz(&spec).unwrap() } else { build_qst_ansatz(&spec).unwrap() };
            let mut covered = 0usize;
            for layer in c.layers() {
                assert_eq!(layer.start, covered, "{kind}: layers out of order");
                covered = layer.end;
            }
            assert_eq!(covered, c.n_params(), "{kind}: layers must cover all slots");
        }
    }

    #[test]
    fn u3_circuit_examples() {
        let s = run(&u3_circuit(0.0, 0.0, 0.0), &[]).unwrap();
        assert!((s.amplitudes()[0].re - 1.0).abs() < 1e-12);

        let s = run(&u3_circuit(std::f64::consts::PI, 0.0, 0.0), &[]).unwrap();
        assert!(s.probability_of_index(1) > 1.0 - 1e-12);
    }

    #[test]
    fn adjoint_inverts_targets() {
        for (kind, n) in [(CircuitKind::GhzTarget, 3), (CircuitKind::WTarget, 4)] {
            let target = build_target(kind, n).unwrap();
            let mut state = run(&target, &[]).unwrap();
            crate::simcore::apply_circuit(&mut state, &target.adjoint().unwrap(), &[]).unwrap();
            assert!((state.probability_of_index(0) - 1.0).abs() < 1e-10);
        }
        let u = haar_unitary(3, &mut rng_from_seed(2)).unwrap();
        let target = haar_target(3, &u).unwrap();
        let mut state = run(&target, &[]).unwrap();
        crate::simcore::apply_circuit(&mut state, &target.adjoint().unwrap(), &[]).unwrap();
        assert!((state.probability_of_index(0) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn adjoint_requires_bound_params() {
        let c = build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::GraphStar, 3, 1)).unwrap();
        assert!(matches!(c.adjoint(), Err(Error::AdjointParametric)));
        let bound = c.bind(&vec![0.3; c.n_params()]).unwrap();
        assert!(bound.adjoint().is_ok());
    }

    #[test]
    fn serialization_round_trip() {
        use rand::Rng as _;
        let mut rng = rng_from_seed(77);
        for kind in [CircuitKind::Linear, CircuitKind::GraphStar, CircuitKind::WChain] {
            let spec = AnsatzSpec::new(kind, 3, 2);
            let c = if kind.is_qsp_ansatz() {
                build_qsp_ansatz(&spec).unwrap()
            } else {
                build_qst_ansatz(&spec).unwrap()
            };
            let text = c.to_lines().unwrap();
            let parsed = Circuit::from_lines(3, &text).unwrap();
            let params: Vec<f64> = (0..c.n_params()).map(|_| rng.gen_range(0.0..PI)).collect();
            let a = run(&c, &params).unwrap();
            let b = run(&parsed, &params).unwrap();
            for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
                assert!((x - y).norm() < 1e-12);
            }
        }
        let w = build_target(CircuitKind::WTarget, 3).unwrap();
        let parsed = Circuit::from_lines(3, &w.to_lines().unwrap()).unwrap();
        let a = run(&w, &[]).unwrap();
        let b = run(&parsed, &[]).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn invalid_kind_rejected() {
        assert!(build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::WChain, 3, 1)).is_err());
        assert!(build_qst_ansatz(&AnsatzSpec::new(CircuitKind::Linear, 3, 1)).is_err());
        assert!(build_target(CircuitKind::Linear, 3).is_err());
        assert!(build_target(CircuitKind::GhzTarget, 1).is_err());
    }

    #[test]
    fn empty_circuit_runs_to_initial_state() {
        let s = run(&Circuit::empty(3), &[]).unwrap();
        assert!((s.probability_of_index(0) - 1.0).abs() < 1e-15);
    }
}
