//! Finite-dimensional POVM refinement, quantum instruments, and
//! entanglement-breaking certification.
//!
//! The toolkit centers on one pipeline: take a discrete POVM, refine it to a
//! rank-1 POVM by spectrally splitting each effect, realize the refined
//! measurement as an indirect measurement model, and condition on the
//! pointer reading to obtain a *complete* measurement whose every outcome
//! leaves the system in a fixed pure state. The [`entanglement`] module then
//! certifies numerically that such complete measurements destroy all
//! entanglement between the measured system and any bystander, while
//! [`scenarios`] packages two worked end-to-end demonstrations (a spin
//! particle measured by a discretized position probe, and a quantum Zeno
//! setup where only the complete measurement freezes the evolution).

#![forbid(unsafe_code)]

pub mod entanglement;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod povm;
pub mod random;
pub mod scenarios;

pub use error::{Error, Result};

/// Default numerical tolerance for validation and comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;
