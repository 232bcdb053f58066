//! Classical shadows with random Pauli measurements.
//!
//! Each snapshot draws a basis (X, Y, or Z, uniformly) per qubit, rotates
//! into it, and takes a single computational-basis shot. The inverted
//! per-qubit channel `3 U†|b⟩⟨b|U − I` reconstructs the state and predicts
//! linear observables; for the global parity `Z^⊗N` only all-Z snapshots
//! contribute, each worth `±3^N`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::rng::{mix, rng_from_seed};
use crate::simcore::{expectation_global_z, index_to_bitstring, run, sample_outcome, StateVector};

/// Largest register for dense shadow reconstruction.
pub const MAX_RECONSTRUCT_QUBITS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub fn letter(self) -> char {
        match self {
            Basis::X => 'X',
            Basis::Y => 'Y',
            Basis::Z => 'Z',
        }
    }
}

/// One random Pauli measurement: per-qubit basis choices plus the observed
/// outcome bits (qubit q's bit is `(outcome >> q) & 1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowSnapshot {
    pub bases: Vec<Basis>,
    pub outcome: u64,
}

impl ShadowSnapshot {
    pub fn n_qubits(&self) -> usize {
        self.bases.len()
    }

    /// Log line `bases=<XYZ string> outcome=<bitstring>`.
    pub fn to_line(&self) -> String {
        let n = self.n_qubits();
        let letters: String = self.bases.iter().rev().map(|b| b.letter()).collect();
        format!("bases={letters} outcome={}", index_to_bitstring(self.outcome as usize, n))
    }
}

/// Shadow prediction of `⟨Z^⊗N⟩`.
#[derive(Clone, Copy, Debug)]
pub struct ShadowEstimate {
    pub z_hat: f64,
    pub n_snapshots: usize,
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

fn sdg_matrix() -> [Complex64; 4] {
    [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, -1.0),
    ]
}

fn snapshot_from_state(state: &StateVector, rng: &mut crate::rng::Rng) -> ShadowSnapshot {
    let n = state.n_qubits();
    let bases: Vec<Basis> = (0..n)
        .map(|_| match rng.gen_range(0..3u8) {
            0 => Basis::X,
            1 => Basis::Y,
            _ => Basis::Z,
        })
        .collect();
    let mut rotated = state.clone();
    for (q, basis) in bases.iter().enumerate() {
        match basis {
            Basis::X => rotated.apply_one_qubit(q, h_matrix()),
            Basis::Y => {
                rotated.apply_one_qubit(q, sdg_matrix());
                rotated.apply_one_qubit(q, h_matrix());
            }
            Basis::Z => {}
        }
    }
    let outcome = sample_outcome(&rotated, rng) as u64;
    ShadowSnapshot { bases, outcome }
}

/// Collect `r` snapshots of the state prepared by `prep` (parameter-free).
/// Snapshots derive independent seeds and may be collected in parallel.
pub fn collect_pauli_snapshots(prep: &Circuit, r: usize, seed: u64) -> Result<Vec<ShadowSnapshot>> {
    let state = run(prep, &[])?;
    Ok(map_indexed(r, |i| {
        let mut rng = rng_from_seed(mix(seed, &[i as u64]));
        snapshot_from_state(&state, &mut rng)
    }))
}

/// The per-qubit inverted-channel factor `3 U†|b⟩⟨b|U − I` as a 2x2 matrix
/// in row-major order.
fn snapshot_factor(basis: Basis, bit: u64) -> [Complex64; 4] {
    let re = Complex64::new;
    let im = |v: f64| Complex64::new(0.0, v);
    let sign = if bit == 0 { 1.0 } else { -1.0 };
    match basis {
        // 3|b⟩⟨b| - I on the Z axis
        Basis::Z => {
            if bit == 0 {
                [re(2.0, 0.0), re(0.0, 0.0), re(0.0, 0.0), re(-1.0, 0.0)]
            } else {
                [re(-1.0, 0.0), re(0.0, 0.0), re(0.0, 0.0), re(2.0, 0.0)]
            }
        }
        // 3|±⟩⟨±| - I
        Basis::X => [re(0.5, 0.0), re(sign * 1.5, 0.0), re(sign * 1.5, 0.0), re(0.5, 0.0)],
        // 3|±i⟩⟨±i| - I
        Basis::Y => [re(0.5, 0.0), im(-sign * 1.5), im(sign * 1.5), re(0.5, 0.0)],
    }
}

/// Average the tensor-product snapshot states into a dense density matrix.
pub fn reconstruct_pauli(snapshots: &[ShadowSnapshot]) -> Result<DMatrix<Complex64>> {
    let n = snapshots
        .first()
        .map(|s| s.n_qubits())
        .ok_or_else(|| Error::Config("cannot reconstruct from zero snapshots".into()))?;
    if n > MAX_RECONSTRUCT_QUBITS {
        return Err(Error::DenseSize { got: n, max: MAX_RECONSTRUCT_QUBITS });
    }
    let dim = 1usize << n;
    let mut rho = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for snap in snapshots {
        let factors: Vec<[Complex64; 4]> = (0..n)
            .map(|q| snapshot_factor(snap.bases[q], (snap.outcome >> q) & 1))
            .collect();
        for row in 0..dim {
            for col in 0..dim {
                let mut entry = Complex64::new(1.0, 0.0);
                for (q, f) in factors.iter().enumerate() {
                    let r = (row >> q) & 1;
                    let c = (col >> q) & 1;
                    entry *= f[r * 2 + c];
                }
                rho[(row, col)] += entry;
            }
        }
    }
    let scale = Complex64::new(1.0 / snapshots.len() as f64, 0.0);
    Ok(rho * scale)
}

/// Predict `⟨Z^⊗N⟩` without forming the dense matrix: a snapshot contributes
/// `Π_q ±3` over Z-basis qubits and exactly zero if any basis is X or Y.
pub fn predict_global_z(snapshots: &[ShadowSnapshot]) -> Result<ShadowEstimate> {
    if snapshots.is_empty() {
        return Err(Error::Config("cannot estimate from zero snapshots".into()));
    }
    let sum: f64 = snapshots.iter().map(snapshot_z_value).sum();
    Ok(ShadowEstimate { z_hat: sum / snapshots.len() as f64, n_snapshots: snapshots.len() })
}

/// Single-snapshot contribution to the global-Z estimator.
pub fn snapshot_z_value(snap: &ShadowSnapshot) -> f64 {
    let mut product = 1.0;
    for (q, basis) in snap.bases.iter().enumerate() {
        match basis {
            Basis::Z => {
                let bit = (snap.outcome >> q) & 1;
                product *= if bit == 0 { 3.0 } else { -3.0 };
            }
            _ => return 0.0,
        }
    }
    product
}

/// Mean squared deviation of the shadow estimate from the exact `⟨Z^⊗N⟩`
/// over independent snapshot batches of size `r`.
pub fn estimator_variance(prep: &Circuit, r: usize, runs: usize, seed: u64) -> Result<f64> {
    if runs < 2 {
        return Err(Error::Config("variance estimation needs at least 2 runs".into()));
    }
    let true_z = expectation_global_z(&run(prep, &[])?);
    let estimates: Vec<Result<f64>> = map_indexed(runs, |k| {
        let snaps = collect_pauli_snapshots(prep, r, mix(seed, &[k as u64]))?;
        Ok(predict_global_z(&snaps)?.z_hat)
    });
    let mut acc = 0.0;
    for e in &estimates {
        let z = *e.as_ref().map_err(|err| Error::Config(err.to_string()))?;
        acc += (z - true_z) * (z - true_z);
    }
    Ok(acc / runs as f64)
}
