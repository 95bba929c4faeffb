//! Layered photonic chip `o = [Π Pᵢ Uᵢ] a` trained from intensity measurements.
//!
//! Each layer is a fixed mixer `Uᵢ` followed by a column of phase shifters
//! `Pᵢ = diag(λ·e^{jψᵢ})`. Light sent in from the output side sees the
//! transposed chip, which is what makes the three-intensity gradient of
//! [`gradient`] possible.

pub mod gradient;
pub mod mesh;
mod state;
mod train;

pub use gradient::{
    averaged_gradient, averaged_gradient_with, field_gradient, inject_error, intensity_gradient_backwarddir,
    intensity_gradient_backwarddir_with, intensity_gradient_forwarddir, intensity_gradient_forwarddir_with,
    measured_output, PhaseGradient, Renormalization,
};
pub use mesh::{build_coupler_mesh, build_mesh, coupler, default_sublayers, MeshStyle};
pub use state::{backward, chip_backward_matrix, chip_effective_matrix, forward, ChipState, PropagationTrace};
pub use train::{
    build_initial_chip, evaluate_nrmse, phase_fraction_within, train_chip, ChipExperimentConfig, ChipTarget,
    ChipTrainingOutcome, LossScenario, MixerKind, PHASE_WINDOW,
};
