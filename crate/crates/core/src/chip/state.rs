use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector};

/// A layered chip: layer `i` applies the mixer `Uᵢ`, an optional per-waveguide
/// amplitude loss `Dᵢ`, then the phase layer `Pᵢ = diag(λ·e^{jψᵢ})`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChipState {
    channels: usize,
    psi: Vec<Vec<f64>>,
    mixers: Vec<ComplexMatrix>,
    lambda_loss: f64,
    uneven_loss: Option<Vec<Vec<f64>>>,
}

impl ChipState {
    /// Lossless chip with all phases zero.
    pub fn new(mixers: Vec<ComplexMatrix>) -> Result<Self> {
        let channels = mixers.first().map_or(0, ComplexMatrix::rows);
        if channels < 2 {
            return Err(Error::invalid(format!("chip needs at least 2 channels, got {channels}")));
        }
        for (i, u) in mixers.iter().enumerate() {
            if u.rows() != channels || u.cols() != channels {
                return Err(Error::invalid(format!(
                    "mixer {i} is {}x{}, expected {channels}x{channels}",
                    u.rows(),
                    u.cols()
                )));
            }
            let err = u.unitarity_error();
            if err > 1e-12 {
                return Err(Error::invalid(format!("mixer {i} is not unitary (error {err:.3e})")));
            }
        }
        Ok(Self {
            channels,
            psi: vec![vec![0.0; channels]; mixers.len()],
            mixers,
            lambda_loss: 1.0,
            uneven_loss: None,
        })
    }

    pub fn with_phases(mut self, psi: Vec<Vec<f64>>) -> Result<Self> {
        check_len("ChipState phase layers", self.layers(), psi.len())?;
        for layer in &psi {
            check_len("ChipState phases per layer", self.channels, layer.len())?;
            if layer.iter().any(|p| !p.is_finite()) {
                return Err(Error::NonFinite("chip phases"));
            }
        }
        self.psi = psi;
        Ok(self)
    }

    /// Uniform per-layer amplitude factor, `0 < λ ≤ 1`.
    pub fn with_uniform_loss(mut self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::invalid(format!("loss factor must lie in (0, 1], got {lambda}")));
        }
        self.lambda_loss = lambda;
        Ok(self)
    }

    /// Per-layer, per-waveguide amplitude factors in `(0, 1]`.
    pub fn with_uneven_loss(mut self, factors: Vec<Vec<f64>>) -> Result<Self> {
        check_len("uneven loss layers", self.layers(), factors.len())?;
        for layer in &factors {
            check_len("uneven loss per layer", self.channels, layer.len())?;
            if layer.iter().any(|&d| !(d > 0.0 && d <= 1.0)) {
                return Err(Error::invalid("uneven loss factors must lie in (0, 1]"));
            }
        }
        self.uneven_loss = Some(factors);
        Ok(self)
    }

    pub fn without_uneven_loss(&self) -> Self {
        Self {
            uneven_loss: None,
            ..self.clone()
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn layers(&self) -> usize {
        self.mixers.len()
    }

    pub fn phases(&self) -> &[Vec<f64>] {
        &self.psi
    }

    pub fn mixers(&self) -> &[ComplexMatrix] {
        &self.mixers
    }

    pub fn lambda_loss(&self) -> f64 {
        self.lambda_loss
    }

    pub fn uneven_loss(&self) -> Option<&[Vec<f64>]> {
        self.uneven_loss.as_deref()
    }

    pub fn is_lossless(&self) -> bool {
        self.lambda_loss == 1.0 && self.uneven_loss.is_none()
    }

    pub(crate) fn phases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.psi
    }

    /// Diagonal of `Pᵢ·Dᵢ` for layer `i` (zero-based).
    fn layer_diagonal(&self, i: usize) -> Vec<Complex64> {
        self.psi[i]
            .iter()
            .enumerate()
            .map(|(m, &p)| {
                let d = self.uneven_loss.as_ref().map_or(1.0, |u| u[i][m]);
                Complex64::from_polar(self.lambda_loss * d, p)
            })
            .collect()
    }

    /// Explicit layer matrix `Pᵢ·Dᵢ·Uᵢ`.
    pub fn layer_matrix(&self, i: usize) -> ComplexMatrix {
        let diag = self.layer_diagonal(i);
        let u = &self.mixers[i];
        ComplexMatrix::from_fn(self.channels, self.channels, |r, c| diag[r] * u.get(r, c))
    }
}

/// Field vectors at every layer boundary, `states[0]` at the entry side.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationTrace {
    states: Vec<ComplexVector>,
}

impl PropagationTrace {
    pub fn states(&self) -> &[ComplexVector] {
        &self.states
    }

    /// Field right after phase layer `k` (1-based), or the input for `k = 0`.
    pub fn at(&self, k: usize) -> &ComplexVector {
        &self.states[k]
    }

    pub fn first(&self) -> &ComplexVector {
        &self.states[0]
    }

    pub fn last(&self) -> &ComplexVector {
        self.states.last().expect("trace holds at least the input")
    }

    pub fn intensities(&self) -> Vec<Vec<f64>> {
        self.states.iter().map(ComplexVector::intensities).collect()
    }
}

/// `a_k = P_k D_k U_k a_{k−1}`; `a_0` is the input and `a_N` the output.
pub fn forward(chip: &ChipState, a: &ComplexVector) -> Result<PropagationTrace> {
    check_len("chip forward input", chip.channels, a.len())?;
    let mut states = Vec::with_capacity(chip.layers() + 1);
    states.push(a.clone());
    for i in 0..chip.layers() {
        let mixed = chip.mixers[i].mul_vec(states.last().expect("non-empty"))?;
        states.push(mixed.hadamard(&ComplexVector::new(chip.layer_diagonal(i))?)?);
    }
    Ok(PropagationTrace { states })
}

/// Light entering at the output: `e_{k−1} = U_kᵀ D_k P_k e_k`. The returned
/// trace is indexed like the forward one, so `at(N)` is `e` and `at(0)` is `e_0`.
pub fn backward(chip: &ChipState, e: &ComplexVector) -> Result<PropagationTrace> {
    check_len("chip backward input", chip.channels, e.len())?;
    let n = chip.layers();
    let mut states = vec![ComplexVector::zeros(chip.channels); n + 1];
    states[n] = e.clone();
    for i in (0..n).rev() {
        let through_phase = states[i + 1].hadamard(&ComplexVector::new(chip.layer_diagonal(i))?)?;
        states[i] = chip.mixers[i].transpose().mul_vec(&through_phase)?;
    }
    Ok(PropagationTrace { states })
}

fn probe(chip: &ChipState, pass: fn(&ChipState, &ComplexVector) -> Result<PropagationTrace>, out_last: bool) -> Result<ComplexMatrix> {
    let columns = (0..chip.channels)
        .map(|j| {
            let t = pass(chip, &ComplexVector::basis(chip.channels, j)?)?;
            Ok(if out_last { t.last().clone() } else { t.first().clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    ComplexMatrix::from_columns(&columns)
}

/// Transfer matrix of the chip, probed with basis inputs.
pub fn chip_effective_matrix(chip: &ChipState) -> Result<ComplexMatrix> {
    probe(chip, forward, true)
}

/// Transfer matrix for light entering at the output side.
pub fn chip_backward_matrix(chip: &ChipState) -> Result<ComplexMatrix> {
    probe(chip, backward, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chip::mesh::{build_coupler_mesh, coupler};
    use crate::random::{random_complex_vector, RngSeed};
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_chip(m: usize, n: usize, seed: u64) -> ChipState {
        let mixers = (0..n)
            .map(|i| build_coupler_mesh(m, 3, RngSeed(seed * 100 + i as u64)).unwrap())
            .collect();
        let psi = (0..n)
            .map(|i| (0..m).map(|k| ((i * m + k) as f64 * 0.77).sin() * 2.0).collect())
            .collect();
        ChipState::new(mixers).unwrap().with_phases(psi).unwrap()
    }

    #[test]
    fn identity_chain_passes_input() {
        let chip = ChipState::new(vec![ComplexMatrix::identity(3); 4]).unwrap();
        let a = ComplexVector::new(vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0)]).unwrap();
        assert_eq!(forward(&chip, &a).unwrap().last(), &a);
        assert_eq!(backward(&chip, &a).unwrap().first(), &a);
    }

    #[test]
    fn single_coupler_with_quarter_phase() {
        let chip = ChipState::new(vec![coupler()])
            .unwrap()
            .with_phases(vec![vec![FRAC_PI_2, 0.0]])
            .unwrap();
        let o = forward(&chip, &ComplexVector::basis(2, 0).unwrap()).unwrap();
        let o = o.last();
        assert!((o[0] - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((o[1] - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn lossless_chip_preserves_norm_and_is_unitary() {
        let chip = random_chip(6, 5, 1);
        let a = random_complex_vector(6, &mut RngSeed(4).rng()).unwrap();
        let o = forward(&chip, &a).unwrap();
        assert!((o.last().norm() - a.norm()).abs() < 1e-12 * a.norm());
        assert!(chip_effective_matrix(&chip).unwrap().unitarity_error() < 1e-12);
    }

    #[test]
    fn backward_matrix_is_forward_transpose() {
        let lossy = random_chip(5, 4, 2)
            .with_uniform_loss(0.9)
            .unwrap()
            .with_uneven_loss(vec![vec![0.99, 0.995, 1.0, 0.992, 0.997]; 4])
            .unwrap();
        for chip in [random_chip(5, 4, 2), lossy] {
            let w = chip_effective_matrix(&chip).unwrap();
            let wb = chip_backward_matrix(&chip).unwrap();
            assert!(wb.max_abs_diff(&w.transpose()).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn uniform_loss_scales_by_lambda_power() {
        let chip = random_chip(4, 6, 3);
        let lambda: f64 = 0.94f64.sqrt();
        let lossy = chip.clone().with_uniform_loss(lambda).unwrap();
        let w = chip_effective_matrix(&chip).unwrap().scale(lambda.powi(6).into());
        assert!(chip_effective_matrix(&lossy).unwrap().max_abs_diff(&w).unwrap() < 1e-12);
        // backward norm factors through λᴺ when phases are zero
        let flat = ChipState::new(chip.mixers().to_vec()).unwrap();
        let e = random_complex_vector(4, &mut RngSeed(8).rng()).unwrap();
        let plain = backward(&flat, &e).unwrap().first().norm();
        let damped = backward(&flat.with_uniform_loss(lambda).unwrap(), &e).unwrap().first().norm();
        assert!((damped - lambda.powi(6) * plain).abs() < 1e-12);
    }

    #[test]
    fn probe_matches_direct_forward() {
        let chip = random_chip(7, 3, 5);
        let w = chip_effective_matrix(&chip).unwrap();
        let a = random_complex_vector(7, &mut RngSeed(6).rng()).unwrap();
        let direct = forward(&chip, &a).unwrap();
        assert!(w.mul_vec(&a).unwrap().max_abs_diff(direct.last()).unwrap() < 1e-12);
        // explicit layer product agrees too
        let mut prod = ComplexMatrix::identity(7);
        for i in 0..chip.layers() {
            prod = chip.layer_matrix(i).matmul(&prod).unwrap();
        }
        assert!(prod.max_abs_diff(&w).unwrap() < 1e-12);
    }

    #[test]
    fn invalid_chips_rejected() {
        assert!(ChipState::new(vec![]).is_err());
        let skew = ComplexMatrix::from_fn(2, 2, |r, c| Complex64::new((r + c) as f64, 0.0));
        assert!(ChipState::new(vec![skew]).is_err());
        let chip = random_chip(3, 2, 0);
        assert!(chip.clone().with_uniform_loss(1.2).is_err());
        assert!(chip.clone().with_phases(vec![vec![0.0; 3]]).is_err());
        assert!(chip.clone().with_uneven_loss(vec![vec![0.0; 3]; 2]).is_err());
        assert!(forward(&chip, &ComplexVector::zeros(4)).is_err());
        assert!(backward(&chip, &ComplexVector::zeros(2)).is_err());
    }
}
