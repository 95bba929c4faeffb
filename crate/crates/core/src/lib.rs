//! Trainable wave media.
//!
//! Two simulators share the value types in this crate:
//!
//! * [`adjoint`] sculpts the wavenumber map `k(r)` of a 2D Helmholtz medium by
//!   stochastic gradient descent so that the emitter-to-receiver transfer
//!   matrix approaches a target. Gradients come from one forward and one
//!   adjoint (error) field, `g(r) = −4k(r)·Re(φₐ(r)·φₑ(r))`.
//! * [`chip`] models a layered photonic chip of phase shifters and fixed
//!   mixers, trained in situ from three intensity measurements per phase
//!   shifter.
//!
//! Units: the nominal free-space wavelength is 1, so the reference wavenumber
//! is `k₀ = 2π`. Fields use the `e^{+jkx}` convention for outgoing waves;
//! a positive imaginary wavenumber therefore attenuates.

pub mod adjoint;
pub mod chip;
pub mod error;
pub mod gradcheck;
pub mod grid;
pub mod helmholtz;
pub mod io;
pub mod linalg;
pub mod medium;
pub mod metrics;
pub mod random;
pub mod record;
pub mod transducer;

pub use error::{Error, Result};
pub use grid::{FieldGrid, GridGeometry};
pub use linalg::{ComplexMatrix, ComplexVector};
pub use medium::MediumMap;
pub use random::RngSeed;
pub use record::{IterationRecord, SolverTrace, TrainingRecord};
pub use transducer::{Role, SampledTransducers, TransducerArray};

/// Reference free-space wavenumber for unit wavelength.
pub const K0: f64 = 2.0 * std::f64::consts::PI;
