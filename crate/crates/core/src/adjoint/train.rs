//! Stochastic gradient descent on the wavenumber map, one sample per iteration.

use crate::error::{Error, Result};
use crate::helmholtz::{solve, Solution, SolverOptions, SourceTerm};
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::medium::MediumMap;
use crate::metrics::nrmse;
use crate::random::{random_complex_matrix, random_complex_vector, RngSeed};
use crate::record::{IterationRecord, SolverTrace, TrainingRecord};
use crate::transducer::SampledTransducers;

use super::{
    effective_matrix, encode_error, encode_input, error_vector, forward_sample, gradient_field, read_output, sample_gradient,
    sgd_step, GradientFieldMap, GradientForm, MediumLayout,
};

#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    /// Complex Gaussian entries times `scale`.
    Random { scale: f64 },
    /// Complex Gaussian entries rescaled so `‖W‖_F = factor·‖W_eff‖_F`, with
    /// `W_eff` the transfer matrix of the untrained medium.
    Matched { factor: f64 },
    Explicit(ComplexMatrix),
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec::Random { scale: 1.0 / 25.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Fixed(f64),
    /// Line search on the first sample: pick η₀ so one step removes 10–50 %
    /// of that sample's cost.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediumExperimentConfig {
    pub layout: MediumLayout,
    pub target: TargetSpec,
    pub iterations: usize,
    pub learning_rate: LearningRate,
    /// `η_k = η₀(1 − k/N)` when set, otherwise η₀ throughout.
    pub linear_decay: bool,
    pub gradient_form: GradientForm,
    pub solver: SolverOptions,
    pub seed: RngSeed,
}

impl Default for MediumExperimentConfig {
    fn default() -> Self {
        Self {
            layout: MediumLayout::default(),
            target: TargetSpec::default(),
            iterations: 300,
            learning_rate: LearningRate::Auto,
            linear_decay: true,
            gradient_form: GradientForm::Full,
            solver: SolverOptions::default(),
            seed: RngSeed(1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MediumTrainingOutcome {
    pub initial_medium: MediumMap,
    pub medium: MediumMap,
    pub emitters: SampledTransducers,
    pub receivers: SampledTransducers,
    pub target: ComplexMatrix,
    pub eta0: f64,
    pub record: TrainingRecord,
}

/// Solve, retrying once at a 10× looser tolerance on non-convergence.
fn solve_with_retry(medium: &MediumMap, source: &SourceTerm, opts: &SolverOptions) -> Result<(Solution, bool)> {
    match solve(medium, source, opts) {
        Ok(sol) => Ok((sol, false)),
        Err(Error::NotConverged { .. }) => {
            let looser = SolverOptions {
                rel_tolerance: (opts.rel_tolerance * 10.0).min(0.5),
                ..*opts
            };
            solve(medium, source, &looser).map(|sol| (sol, true))
        }
        Err(e) => Err(e),
    }
}

/// Returns η such that one `sgd_step` along `gradient` reduces `cost0` by 10–50 %.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_learning_rate(
    medium: &MediumMap,
    emitters: &SampledTransducers,
    receivers: &SampledTransducers,
    a: &ComplexVector,
    o_t: &ComplexVector,
    cost0: f64,
    gradient: &GradientFieldMap,
    opts: &SolverOptions,
) -> Result<f64> {
    let slope: f64 = gradient
        .values()
        .iter()
        .zip(gradient.cell_derivatives())
        .map(|(g, d)| g * d)
        .sum();
    if cost0 == 0.0 || slope == 0.0 {
        return Ok(0.0);
    }
    // first-order model predicts a 30 % reduction
    let mut eta = 0.3 * cost0 / slope;
    let mut best: Option<(f64, f64)> = None;
    for _ in 0..40 {
        let reduction = match sgd_step(medium, gradient, eta) {
            Ok(stepped) => {
                let cost = forward_sample(&stepped, emitters, receivers, a, o_t, opts)?.cost;
                (cost0 - cost) / cost0
            }
            Err(Error::NonPositiveWavenumber { .. }) => f64::NEG_INFINITY,
            Err(e) => return Err(e),
        };
        if reduction > 0.0 && best.is_none_or(|(_, r)| reduction > r) {
            best = Some((eta, reduction));
        }
        if (0.1..=0.5).contains(&reduction) {
            return Ok(eta);
        }
        let predicted = eta * slope / cost0;
        if reduction > 0.5 || (reduction < 0.1 && predicted >= 0.1) {
            eta *= 0.5;
        } else {
            eta *= 2.0;
        }
    }
    best.map(|(eta, _)| eta)
        .ok_or(Error::NonFinite("learning-rate calibration found no descent step"))
}

pub fn train_medium(cfg: &MediumExperimentConfig) -> Result<MediumTrainingOutcome> {
    if cfg.iterations == 0 {
        return Err(Error::invalid("iterations must be at least 1"));
    }
    cfg.solver.validate()?;
    let setup = cfg.layout.build()?;
    let (emitters, receivers) = (setup.emitters, setup.receivers);
    let (n_a, n_o) = (emitters.len(), receivers.len());

    let target = match &cfg.target {
        TargetSpec::Random { scale } => {
            if !(scale.is_finite() && *scale > 0.0) {
                return Err(Error::invalid(format!("target scale must be positive, got {scale}")));
            }
            random_complex_matrix(n_o, n_a, &mut cfg.seed.stream(0))?.scale((*scale).into())
        }
        TargetSpec::Matched { factor } => {
            if !(factor.is_finite() && *factor > 0.0) {
                return Err(Error::invalid(format!("target factor must be positive, got {factor}")));
            }
            let w_eff = effective_matrix(&setup.medium, &emitters, &receivers, &cfg.solver)?;
            let g = random_complex_matrix(n_o, n_a, &mut cfg.seed.stream(0))?;
            g.scale((factor * w_eff.frobenius_norm() / g.frobenius_norm()).into())
        }
        TargetSpec::Explicit(w) => {
            if w.rows() != n_o || w.cols() != n_a {
                return Err(Error::invalid(format!(
                    "target matrix is {}x{}, expected {n_o}x{n_a}",
                    w.rows(),
                    w.cols()
                )));
            }
            w.clone()
        }
    };

    let mut sample_rng = cfg.seed.stream(1);
    let samples: Vec<ComplexVector> = (0..cfg.iterations)
        .map(|_| random_complex_vector(n_a, &mut sample_rng))
        .collect::<Result<_>>()?;
    let targets: Vec<ComplexVector> = samples
        .iter()
        .map(|a| target.mul_vec(a))
        .collect::<Result<_>>()?;

    let initial_medium = setup.medium;
    let eta0 = match cfg.learning_rate {
        LearningRate::Fixed(eta) => {
            if !(eta >= 0.0 && eta.is_finite()) {
                return Err(Error::invalid(format!("learning rate must be non-negative, got {eta}")));
            }
            eta
        }
        LearningRate::Auto => {
            let (fwd, grad) = sample_gradient(
                &initial_medium,
                &emitters,
                &receivers,
                &samples[0],
                &targets[0],
                cfg.gradient_form,
                &cfg.solver,
            )?;
            calibrate_learning_rate(
                &initial_medium,
                &emitters,
                &receivers,
                &samples[0],
                &targets[0],
                fwd.cost,
                &grad,
                &cfg.solver,
            )?
        }
    };

    let mut medium = initial_medium.clone();
    let mut outputs = Vec::with_capacity(cfg.iterations);
    let mut rows = Vec::with_capacity(cfg.iterations);
    for (k, (a, o_t)) in samples.iter().zip(&targets).enumerate() {
        let eta = if cfg.linear_decay {
            eta0 * (1.0 - k as f64 / cfg.iterations as f64)
        } else {
            eta0
        };
        let (fwd, retried_fwd) = solve_with_retry(&medium, &encode_input(a, &emitters)?, &cfg.solver)?;
        let o = read_output(&fwd.field, &receivers)?;
        let e = error_vector(&o, o_t)?;
        let (adj, retried_adj) = solve_with_retry(&medium, &encode_error(&e, &receivers)?, &cfg.solver)?;
        let grad = gradient_field(&fwd.field, &adj.field, &medium, cfg.gradient_form)?;
        medium = sgd_step(&medium, &grad, eta)?;
        outputs.push(o);
        rows.push(IterationRecord {
            iteration: k,
            eta,
            nrmse: f64::NAN,
            solver: Some(SolverTrace {
                forward_iterations: fwd.iterations,
                forward_residual: fwd.rel_residual,
                adjoint_iterations: adj.iterations,
                adjoint_residual: adj.rel_residual,
                retried: retried_fwd || retried_adj,
            }),
        });
    }

    for (row, value) in rows.iter_mut().zip(nrmse(&outputs, &targets)?) {
        row.nrmse = value;
    }

    Ok(MediumTrainingOutcome {
        initial_medium,
        medium,
        emitters,
        receivers,
        target,
        eta0,
        record: TrainingRecord::from_rows(rows),
    })
}
