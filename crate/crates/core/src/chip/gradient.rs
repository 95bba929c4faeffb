//! Phase gradients from intensity measurements.
//!
//! With `e = −j(o − oᵗ)*` injected at the output, the backward field `e_k` at
//! phase layer `k` satisfies `∂Q/∂ψ_k = −2·Re(a_k ⊙ e_k)`. Sending
//! `h = a + e_0*` forward gives `|h_k|² − |a_k|² − |ê_k|² = 2·Re(a_k ⊙ ê_k*)`,
//! and on a lossless chip `ê_k = e_k*`, so three intensity maps yield the exact
//! gradient with proportionality constant 1.

use num_complex::Complex64;

use crate::error::{check_len, Result};
use crate::linalg::ComplexVector;

use super::state::{backward, forward, ChipState, PropagationTrace};

/// One real vector per phase layer, ordered like [`ChipState::phases`].
pub type PhaseGradient = Vec<Vec<f64>>;

/// How measured amplitudes are rescaled to undo the average loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Renormalization {
    /// Use the raw measurement.
    None,
    /// Rescale each measured vector to the norm of the vector that was sent in.
    PerSample,
    /// Multiply by `λ^{−N}`, the nominal uniform-loss attenuation.
    FixedFactor,
}

impl Renormalization {
    /// Rescale `measured`, which left the chip after `sent` went in.
    pub fn apply(self, chip: &ChipState, sent: &ComplexVector, measured: &ComplexVector) -> ComplexVector {
        match self {
            Renormalization::None => measured.clone(),
            Renormalization::PerSample => {
                let n = measured.norm();
                if n == 0.0 {
                    measured.clone()
                } else {
                    measured.scale_real(sent.norm() / n)
                }
            }
            Renormalization::FixedFactor => {
                measured.scale_real(chip.lambda_loss().powi(-(chip.layers() as i32)))
            }
        }
    }
}

/// `e = −j·(o − oᵗ)*`, the field injected at the outputs.
pub fn inject_error(o: &ComplexVector, o_t: &ComplexVector) -> Result<ComplexVector> {
    Ok(o.sub(o_t)?.conj().scale(Complex64::new(0.0, -1.0)))
}

/// `−(|h_k|² − |x_k|² − |y_k|²)` for layers 1..=N.
fn interference(h: &PropagationTrace, x: &PropagationTrace, y: &PropagationTrace) -> PhaseGradient {
    (1..h.states().len())
        .map(|k| {
            h.at(k)
                .iter()
                .zip(x.at(k))
                .zip(y.at(k))
                .map(|((h, x), y)| -(h.norm_sqr() - x.norm_sqr() - y.norm_sqr()))
                .collect()
        })
        .collect()
}

/// Output of `a`, rescaled as the training loop sees it.
pub fn measured_output(chip: &ChipState, a: &ComplexVector, renorm: Renormalization) -> Result<ComplexVector> {
    let o = forward(chip, a)?.last().clone();
    Ok(renorm.apply(chip, a, &o))
}

/// Forward-direction estimate: back-propagate `e`, send `h = a + e_0*` forward,
/// and compare against the separate `a` and `e_0*` runs.
pub fn intensity_gradient_forwarddir_with(
    chip: &ChipState,
    a: &ComplexVector,
    e: &ComplexVector,
    renorm: Renormalization,
) -> Result<PhaseGradient> {
    check_len("forward-direction gradient input", chip.channels(), a.len())?;
    let e0 = backward(chip, e)?.first().clone();
    let e0_star = renorm.apply(chip, e, &e0).conj();
    let h = a.add(&e0_star)?;
    Ok(interference(&forward(chip, &h)?, &forward(chip, a)?, &forward(chip, &e0_star)?))
}

/// Backward-direction estimate: send `o*` back in place of `a*`, so
/// `h' = e + o*` travels against the signal.
pub fn intensity_gradient_backwarddir_with(
    chip: &ChipState,
    a: &ComplexVector,
    e: &ComplexVector,
    renorm: Renormalization,
) -> Result<PhaseGradient> {
    check_len("backward-direction gradient error", chip.channels(), e.len())?;
    let o_star = measured_output(chip, a, renorm)?.conj();
    let h = e.add(&o_star)?;
    Ok(interference(&backward(chip, &h)?, &backward(chip, &o_star)?, &backward(chip, e)?))
}

pub fn averaged_gradient_with(
    chip: &ChipState,
    a: &ComplexVector,
    e: &ComplexVector,
    renorm: Renormalization,
) -> Result<PhaseGradient> {
    let f = intensity_gradient_forwarddir_with(chip, a, e, renorm)?;
    let b = intensity_gradient_backwarddir_with(chip, a, e, renorm)?;
    Ok(f.iter()
        .zip(&b)
        .map(|(fl, bl)| fl.iter().zip(bl).map(|(x, y)| 0.5 * (x + y)).collect())
        .collect())
}

/// [`intensity_gradient_forwarddir_with`] under per-sample renormalization.
pub fn intensity_gradient_forwarddir(chip: &ChipState, a: &ComplexVector, e: &ComplexVector) -> Result<PhaseGradient> {
    intensity_gradient_forwarddir_with(chip, a, e, Renormalization::PerSample)
}

pub fn intensity_gradient_backwarddir(chip: &ChipState, a: &ComplexVector, e: &ComplexVector) -> Result<PhaseGradient> {
    intensity_gradient_backwarddir_with(chip, a, e, Renormalization::PerSample)
}

pub fn averaged_gradient(chip: &ChipState, a: &ComplexVector, e: &ComplexVector) -> Result<PhaseGradient> {
    averaged_gradient_with(chip, a, e, Renormalization::PerSample)
}

/// Field-level gradient `∂Q/∂ψ_k = −2·Re(a_k ⊙ e_k)` of the raw cost
/// `Q = ‖o − oᵗ‖²`. Not measurable on hardware; kept as a reference.
pub fn field_gradient(chip: &ChipState, a: &ComplexVector, o_t: &ComplexVector) -> Result<PhaseGradient> {
    let fwd = forward(chip, a)?;
    let e = inject_error(fwd.last(), o_t)?;
    let bwd = backward(chip, &e)?;
    Ok((1..=chip.layers())
        .map(|k| fwd.at(k).iter().zip(bwd.at(k)).map(|(x, y)| -2.0 * (x * y).re).collect())
        .collect())
}

/// Euclidean norm per layer.
pub fn layer_norms(g: &PhaseGradient) -> Vec<f64> {
    g.iter().map(|l| l.iter().map(|x| x * x).sum::<f64>().sqrt()).collect()
}

pub fn flatten(g: &PhaseGradient) -> Vec<f64> {
    g.iter().flatten().copied().collect()
}
