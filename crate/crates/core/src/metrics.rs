use crate::error::{check_len, Error, Result};
use crate::linalg::ComplexVector;

/// Normalised root-mean-square error per sample:
/// `‖oₙ − oₙᵗ‖ / sqrt(⟨‖oₖᵗ‖²⟩ₖ)`, the normaliser averaging over all targets.
pub fn nrmse(outputs: &[ComplexVector], targets: &[ComplexVector]) -> Result<Vec<f64>> {
    check_len("nrmse (sample count)", targets.len(), outputs.len())?;
    if targets.is_empty() {
        return Err(Error::invalid("nrmse needs at least one sample"));
    }
    let mut mean_sq = 0.0;
    for (o, t) in outputs.iter().zip(targets) {
        check_len("nrmse (vector length)", t.len(), o.len())?;
        mean_sq += t.norm_sqr();
    }
    mean_sq /= targets.len() as f64;
    if mean_sq == 0.0 {
        return Err(Error::invalid("nrmse undefined: all targets are zero"));
    }
    let denom = mean_sq.sqrt();
    outputs
        .iter()
        .zip(targets)
        .map(|(o, t)| Ok(o.sub(t)?.norm() / denom))
        .collect()
}

/// Mean of the per-sample NRMSE values.
pub fn mean_nrmse(outputs: &[ComplexVector], targets: &[ComplexVector]) -> Result<f64> {
    let per_sample = nrmse(outputs, targets)?;
    Ok(per_sample.iter().sum::<f64>() / per_sample.len() as f64)
}
