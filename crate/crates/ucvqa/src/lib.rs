//! Variational quantum compilation on an exact statevector simulator.
//!
//! The toolkit trains a parameterized circuit so that the composition
//! `V† U(θ)` acts as the identity on `|0…0⟩`, which covers two workloads:
//! preparing entangled target states (GHZ / W classes) and reconstructing
//! unknown Haar-random states. On top of the core training loop it provides
//! shot-noise simulation, readout-error mitigation, barren-plateau
//! diagnostics, and a classical-shadow estimation baseline.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`simcore`] — statevector, gate kernels, sampling, Haar unitaries
//! - [`circuits`] — circuit IR plus every ansatz / target builder
//! - [`objective`] — Fubini-Study cost and parameter-shift gradients
//! - [`optimize`] — SGD / Adam / quantum natural gradient and the training loop
//! - [`noisemit`] — readout-error channel and calibration-matrix mitigation
//! - [`shadow`] — classical shadows with random Pauli measurements
//! - [`harness`] — seeded experiment sweeps emitting CSV records

pub mod circuits;
pub mod error;
pub mod harness;
pub mod noisemit;
pub mod objective;
pub mod optimize;
pub(crate) mod parallel;
pub mod rng;
pub mod shadow;
pub mod simcore;

pub use error::{Error, Result};
