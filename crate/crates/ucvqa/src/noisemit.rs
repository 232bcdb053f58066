//! Readout-error channel and calibration-matrix mitigation.
//!
//! The channel flips each measured bit independently with probability ε; on
//! a probability vector this is the N-fold tensor power of
//! `[[1−ε, ε], [ε, 1−ε]]`. Mitigation inverts the calibration matrix, clips
//! negative entries, and renormalizes. Noise acts on measurement
//! distributions only, never on amplitudes.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rng::{mix, rng_from_seed};
use crate::simcore::sample_multinomial;

/// Largest register for the dense 2^N calibration matrix.
pub const MAX_CALIBRATION_QUBITS: usize = 7;

/// Shared per-qubit flip probability.
#[derive(Clone, Copy, Debug)]
pub struct ReadoutNoiseModel {
    pub epsilon: f64,
}

impl ReadoutNoiseModel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&epsilon) {
            return Err(Error::ErrorRate(epsilon));
        }
        Ok(ReadoutNoiseModel { epsilon })
    }
}

/// Apply the per-qubit flip channel to an outcome distribution.
pub fn apply_readout_noise(probs: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    ReadoutNoiseModel::new(epsilon)?;
    let dim = probs.len();
    let n = dim.trailing_zeros() as usize;
    if dim != 1 << n || dim == 0 {
        return Err(Error::Config(format!("probability vector length {dim} is not a power of two")));
    }
    let mut out = probs.to_vec();
    let keep = 1.0 - epsilon;
    for q in 0..n {
        let mask = 1usize << q;
        for i in 0..dim {
            if i & mask == 0 {
                let j = i | mask;
                let a = out[i];
                let b = out[j];
                out[i] = keep * a + epsilon * b;
                out[j] = epsilon * a + keep * b;
            }
        }
    }
    Ok(out)
}

/// Column-stochastic map from true outcome distributions to noisy ones,
/// with its inverse precomputed for mitigation.
#[derive(Clone, Debug)]
pub struct CalibrationMatrix {
    pub n_qubits: usize,
    pub matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
    pub condition: f64,
}

impl CalibrationMatrix {
    /// Build the calibration matrix for error rate `epsilon`.
    ///
    /// `shots = 0` gives the exact tensor-power matrix. With `shots > 0` each
    /// column is the empirical distribution of `shots` measurements of the
    /// corresponding prepared basis state, the way hardware calibration runs
    /// its 2^N circuits.
    pub fn build(n_qubits: usize, epsilon: f64, shots: u64, seed: u64) -> Result<Self> {
        ReadoutNoiseModel::new(epsilon)?;
        if n_qubits == 0 || n_qubits > MAX_CALIBRATION_QUBITS {
            return Err(Error::QubitCount { got: n_qubits, min: 1, max: MAX_CALIBRATION_QUBITS });
        }
        let dim = 1usize << n_qubits;
        let mut matrix = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mut basis = vec![0.0; dim];
            basis[col] = 1.0;
            let noisy = apply_readout_noise(&basis, epsilon)?;
            if shots == 0 {
                for (row, p) in noisy.iter().enumerate() {
                    matrix[(row, col)] = *p;
                }
            } else {
                let mut rng = rng_from_seed(mix(seed, &[col as u64]));
                let counts = sample_multinomial(&noisy, shots, &mut rng);
                for (row, c) in counts.iter().enumerate() {
                    matrix[(row, col)] = *c as f64 / shots as f64;
                }
            }
        }
        Self::from_matrix(n_qubits, matrix)
    }

    /// Wrap an externally measured calibration matrix.
    pub fn from_matrix(n_qubits: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let norm_m = one_norm(&matrix);
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or(Error::IllConditioned(f64::INFINITY))?;
        let condition = norm_m * one_norm(&inverse);
        if !condition.is_finite() {
            return Err(Error::IllConditioned(condition));
        }
        Ok(CalibrationMatrix { n_qubits, matrix, inverse, condition })
    }

    /// Invert the channel on a noisy distribution, then clip negatives and
    /// renormalize to a proper probability vector.
    pub fn mitigate(&self, noisy_probs: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.mitigate_raw(noisy_probs)?;
        for p in &mut out {
            *p = p.max(0.0);
        }
        let total: f64 = out.iter().sum();
        if total > 0.0 {
            for p in &mut out {
                *p /= total;
            }
        }
        Ok(out)
    }

    /// The bare channel inverse, without clipping or renormalization.
    ///
    /// Entries fluctuate around the true probabilities and may leave [0, 1]
    /// under shot noise; the cost function clamps. Training pipelines use
    /// this form because clipping would bias the paired parameter-shift
    /// differences.
    pub fn mitigate_raw(&self, noisy_probs: &[f64]) -> Result<Vec<f64>> {
        let dim = 1usize << self.n_qubits;
        if noisy_probs.len() != dim {
            return Err(Error::Config(format!(
                "expected {dim} outcome probabilities, got {}",
                noisy_probs.len()
            )));
        }
        let mut out = vec![0.0; dim];
        for (row, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for col in 0..dim {
                acc += self.inverse[(row, col)] * noisy_probs[col];
            }
            *slot = acc;
        }
        Ok(out)
    }

    /// Row-major CSV dump, 2^N columns per row.
    pub fn to_csv(&self) -> String {
        let dim = 1usize << self.n_qubits;
        let mut out = String::new();
        for row in 0..dim {
            let cells: Vec<String> = (0..dim).map(|col| self.matrix[(row, col)].to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for col in 0..m.ncols() {
        let s: f64 = (0..m.nrows()).map(|row| m[(row, col)].abs()).sum();
        worst = worst.max(s);
    }
    worst
}

/// Convenience wrapper: `mitigate(noisy, calib)` as a free function.
pub fn mitigate(noisy_probs: &[f64], calib: &CalibrationMatrix) -> Result<Vec<f64>> {
    calib.mitigate(noisy_probs)
}
