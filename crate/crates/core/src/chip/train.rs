//! In-situ training of the chip phases, one normalized sample per iteration.

use rand::{Rng, RngCore};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::metrics::{mean_nrmse, nrmse};
use crate::random::{random_complex_vector, random_unitary, RngSeed};
use crate::record::{IterationRecord, TrainingRecord};

use super::gradient::{
    averaged_gradient_with, inject_error, intensity_gradient_forwarddir_with, measured_output, PhaseGradient,
    Renormalization,
};
use super::mesh::{build_mesh, default_sublayers, MeshStyle};
use super::state::ChipState;

/// Half-width of the phase window used by truncation, `2π/10`.
pub const PHASE_WINDOW: f64 = 2.0 * PI / 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixerKind {
    /// Coupler mesh; `sublayers = None` picks `⌈log₂M⌉ + 1`.
    CouplerMesh { style: MeshStyle, sublayers: Option<usize> },
    /// Haar-random unitary per layer.
    RandomUnitary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossScenario {
    Ideal,
    /// Uniform loss, forward-direction gradient only.
    Uniform,
    /// Uniform loss, average of both directional gradients.
    UniformBidirectional,
    /// Uniform plus per-waveguide uneven loss, bidirectional gradient.
    UnevenBidirectional,
}

impl LossScenario {
    pub fn is_bidirectional(self) -> bool {
        matches!(self, LossScenario::UniformBidirectional | LossScenario::UnevenBidirectional)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChipTarget {
    RandomUnitary,
    Explicit(ComplexMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChipExperimentConfig {
    pub channels: usize,
    pub layers: usize,
    pub mixer: MixerKind,
    pub scenario: LossScenario,
    /// Power kept per layer under uniform loss; amplitude factor is its root.
    pub power_retention: f64,
    /// Extra per-waveguide power loss is drawn from `U[0, uneven_max_loss]`.
    pub uneven_max_loss: f64,
    pub target: ChipTarget,
    pub iterations: usize,
    pub learning_rate: f64,
    /// `η_k = η(1 − k/N)` when set.
    pub linear_decay: bool,
    /// Clamp phases to `±PHASE_WINDOW` after every step.
    pub truncate_phases: bool,
    pub renormalization: Renormalization,
    /// Fixed inputs used for the final NRMSE.
    pub eval_samples: usize,
    pub seed: RngSeed,
}

impl Default for ChipExperimentConfig {
    fn default() -> Self {
        Self {
            channels: 8,
            layers: 12,
            mixer: MixerKind::CouplerMesh {
                style: MeshStyle::Butterfly,
                sublayers: None,
            },
            scenario: LossScenario::Ideal,
            power_retention: 0.94,
            uneven_max_loss: 0.01,
            target: ChipTarget::RandomUnitary,
            iterations: 5000,
            learning_rate: 0.2,
            linear_decay: false,
            truncate_phases: false,
            renormalization: Renormalization::PerSample,
            eval_samples: 100,
            seed: RngSeed(1),
        }
    }
}

impl ChipExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels < 2 {
            return Err(Error::invalid(format!("channels must be at least 2, got {}", self.channels)));
        }
        if self.layers < 1 {
            return Err(Error::invalid("layers must be at least 1"));
        }
        if self.iterations < 1 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if self.eval_samples < 1 {
            return Err(Error::invalid("eval_samples must be at least 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.power_retention > 0.0 && self.power_retention <= 1.0) {
            return Err(Error::invalid(format!(
                "power_retention must lie in (0, 1], got {}",
                self.power_retention
            )));
        }
        if !(0.0..1.0).contains(&self.uneven_max_loss) {
            return Err(Error::invalid(format!(
                "uneven_max_loss must lie in [0, 1), got {}",
                self.uneven_max_loss
            )));
        }
        if let ChipTarget::Explicit(w) = &self.target {
            if w.rows() != self.channels || w.cols() != self.channels {
                return Err(Error::invalid(format!(
                    "target matrix is {}x{}, expected {}x{}",
                    w.rows(),
                    w.cols(),
                    self.channels,
                    self.channels
                )));
            }
        }
        if let MixerKind::CouplerMesh { sublayers: Some(0), .. } = self.mixer {
            return Err(Error::invalid("mesh sublayers must be at least 1"));
        }
        Ok(())
    }
}

/// Untrained chip for `cfg`: zero phases, mixers and losses drawn from the seed.
pub fn build_initial_chip(cfg: &ChipExperimentConfig) -> Result<ChipState> {
    cfg.validate()?;
    let (m, n) = (cfg.channels, cfg.layers);
    let mut mixer_rng = cfg.seed.stream(3);
    let mixers = (0..n)
        .map(|_| match cfg.mixer {
            MixerKind::CouplerMesh { style, sublayers } => build_mesh(
                m,
                sublayers.unwrap_or_else(|| default_sublayers(m)),
                style,
                RngSeed(mixer_rng.next_u64()),
            ),
            MixerKind::RandomUnitary => random_unitary(m, &mut mixer_rng),
        })
        .collect::<Result<Vec<_>>>()?;
    let chip = ChipState::new(mixers)?;
    let lambda = cfg.power_retention.sqrt();
    Ok(match cfg.scenario {
        LossScenario::Ideal => chip,
        LossScenario::Uniform | LossScenario::UniformBidirectional => chip.with_uniform_loss(lambda)?,
        LossScenario::UnevenBidirectional => {
            let mut rng = cfg.seed.stream(2);
            let factors = (0..n)
                .map(|_| {
                    (0..m)
                        .map(|_| (1.0 - rng.random_range(0.0..=cfg.uneven_max_loss)).sqrt())
                        .collect()
                })
                .collect();
            chip.with_uniform_loss(lambda)?.with_uneven_loss(factors)?
        }
    })
}

fn normalized_inputs(count: usize, m: usize, seed: RngSeed, stream: u64) -> Result<Vec<ComplexVector>> {
    let mut rng = seed.stream(stream);
    (0..count)
        .map(|_| Ok(random_complex_vector(m, &mut rng)?.normalized()))
        .collect()
}

/// Mean NRMSE of the renormalized outputs over `inputs`.
pub fn evaluate_nrmse(
    chip: &ChipState,
    target: &ComplexMatrix,
    inputs: &[ComplexVector],
    renorm: Renormalization,
) -> Result<f64> {
    let outputs = inputs
        .iter()
        .map(|a| measured_output(chip, a, renorm))
        .collect::<Result<Vec<_>>>()?;
    let targets = inputs.iter().map(|a| target.mul_vec(a)).collect::<Result<Vec<_>>>()?;
    mean_nrmse(&outputs, &targets)
}

/// Fraction of phases inside `[−bound, bound]`.
pub fn phase_fraction_within(chip: &ChipState, bound: f64) -> f64 {
    let all: Vec<f64> = chip.phases().iter().flatten().copied().collect();
    all.iter().filter(|p| p.abs() <= bound).count() as f64 / all.len() as f64
}

#[derive(Debug, Clone)]
pub struct ChipTrainingOutcome {
    pub initial: ChipState,
    pub chip: ChipState,
    pub target: ComplexMatrix,
    pub record: TrainingRecord,
    /// Mean NRMSE on the fixed evaluation inputs, on the hardware trained.
    pub final_nrmse: f64,
    /// Same phases with the uneven losses removed; only for the uneven scenario.
    pub reeval_nrmse: Option<f64>,
}

pub fn train_chip(cfg: &ChipExperimentConfig) -> Result<ChipTrainingOutcome> {
    let initial = build_initial_chip(cfg)?;
    let m = cfg.channels;
    let target = match &cfg.target {
        ChipTarget::RandomUnitary => random_unitary(m, &mut cfg.seed.stream(0))?,
        ChipTarget::Explicit(w) => w.clone(),
    };
    let samples = normalized_inputs(cfg.iterations, m, cfg.seed, 1)?;

    let mut chip = initial.clone();
    let mut outputs = Vec::with_capacity(cfg.iterations);
    let mut targets = Vec::with_capacity(cfg.iterations);
    let mut rows = Vec::with_capacity(cfg.iterations);
    for (k, a) in samples.iter().enumerate() {
        let eta = if cfg.linear_decay {
            cfg.learning_rate * (1.0 - k as f64 / cfg.iterations as f64)
        } else {
            cfg.learning_rate
        };
        let o = measured_output(&chip, a, cfg.renormalization)?;
        let o_t = target.mul_vec(a)?;
        let e = inject_error(&o, &o_t)?;
        let g: PhaseGradient = if cfg.scenario.is_bidirectional() {
            averaged_gradient_with(&chip, a, &e, cfg.renormalization)?
        } else {
            intensity_gradient_forwarddir_with(&chip, a, &e, cfg.renormalization)?
        };
        for (layer, grad) in chip.phases_mut().iter_mut().zip(&g) {
            for (p, d) in layer.iter_mut().zip(grad) {
                *p -= eta * d;
                if cfg.truncate_phases {
                    *p = p.clamp(-PHASE_WINDOW, PHASE_WINDOW);
                }
            }
        }
        outputs.push(o);
        targets.push(o_t);
        rows.push(IterationRecord {
            iteration: k,
            eta,
            nrmse: f64::NAN,
            solver: None,
        });
    }
    for (row, value) in rows.iter_mut().zip(nrmse(&outputs, &targets)?) {
        row.nrmse = value;
    }

    let eval = normalized_inputs(cfg.eval_samples, m, cfg.seed, 4)?;
    let final_nrmse = evaluate_nrmse(&chip, &target, &eval, cfg.renormalization)?;
    let reeval_nrmse = match chip.uneven_loss() {
        Some(_) => Some(evaluate_nrmse(
            &chip.without_uneven_loss(),
            &target,
            &eval,
            cfg.renormalization,
        )?),
        None => None,
    };
    if !final_nrmse.is_finite() {
        return Err(Error::NonFinite("chip training diverged"));
    }
    Ok(ChipTrainingOutcome {
        initial,
        chip,
        target,
        record: TrainingRecord::from_rows(rows),
        final_nrmse,
        reeval_nrmse,
    })
}
