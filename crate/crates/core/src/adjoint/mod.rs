//! Adjoint training of a Helmholtz medium as a matrix–vector multiplier.
//!
//! An input vector `a` is emitted as `a(r) = Σ aᵢβᵢ(r)`, the forward field φₐ
//! is solved, and receivers read `oᵢ = ∫ φₐγᵢ dr`. For the cost
//! `Q = ‖o − oᵗ‖²` the error `eᵢ = (oᵢ − oᵢᵗ)*` is emitted from the receivers
//! as `e(r) = Σ eᵢγᵢ(r)`, giving the adjoint field φₑ. Because the discrete
//! operator is complex symmetric, the functional derivative of `Q` with
//! respect to the local wavenumber is `g(r) = −4k(r)·Re(φₐ(r)φₑ(r))`.

mod layout;
mod train;

pub use layout::{MediumLayout, MediumSetup};
pub use train::{
    calibrate_learning_rate, train_medium, LearningRate, MediumExperimentConfig, MediumTrainingOutcome,
    TargetSpec,
};

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::grid::{FieldGrid, GridGeometry};
use crate::helmholtz::{solve, SolverOptions, SourceTerm};
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::medium::MediumMap;
use crate::transducer::SampledTransducers;

fn weighted_profiles(weights: &ComplexVector, transducers: &SampledTransducers) -> Result<SourceTerm> {
    check_len("transducer weights", transducers.len(), weights.len())?;
    let g = *transducers.geometry();
    let mut values = vec![Complex64::new(0.0, 0.0); g.len()];
    for (w, profile) in weights.iter().zip(transducers.profiles()) {
        if *w == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (v, &p) in values.iter_mut().zip(profile) {
            *v += w * p;
        }
    }
    SourceTerm::new(g, values)
}

/// Source field `a(r) = Σ aᵢ βᵢ(r)`.
pub fn encode_input(a: &ComplexVector, emitters: &SampledTransducers) -> Result<SourceTerm> {
    weighted_profiles(a, emitters)
}

/// Error source `e(r) = Σ eᵢ γᵢ(r)`, emitted from the receivers.
pub fn encode_error(e: &ComplexVector, receivers: &SampledTransducers) -> Result<SourceTerm> {
    weighted_profiles(e, receivers)
}

/// Receiver readout `oᵢ = Σ_cells φ·γᵢ·h²`.
pub fn read_output(field: &FieldGrid, receivers: &SampledTransducers) -> Result<ComplexVector> {
    field.geometry().check_same(receivers.geometry(), "read_output")?;
    let area = field.geometry().cell_area();
    ComplexVector::new(
        receivers
            .profiles()
            .iter()
            .map(|profile| {
                field
                    .values()
                    .iter()
                    .zip(profile)
                    .map(|(phi, &p)| phi * p)
                    .sum::<Complex64>()
                    * area
            })
            .collect(),
    )
}

/// `eᵢ = (oᵢ − oᵢᵗ)*`, the Wirtinger derivative of `‖o − oᵗ‖²` w.r.t. `oᵢ`.
pub fn error_vector(o: &ComplexVector, o_t: &ComplexVector) -> Result<ComplexVector> {
    Ok(o.sub(o_t)?.conj())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientForm {
    /// `−4k(r)·Re(φₐφₑ)`, the exact functional derivative.
    Full,
    /// `−Re(φₐφₑ)`; valid when k varies little, the constant folds into η.
    Proportional,
}

/// Gradient density over the grid; exactly zero off the trainable mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientFieldMap {
    geometry: GridGeometry,
    values: Vec<f64>,
}

impl GradientFieldMap {
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        check_len("GradientFieldMap::new", geometry.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("GradientFieldMap"));
        }
        Ok(Self { geometry, values })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    /// Per-unit-area values `g(r)`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∂Q/∂k_cell = g(r_cell)·h²`, the derivative w.r.t. one cell's wavenumber.
    pub fn cell_derivatives(&self) -> Vec<f64> {
        let area = self.geometry.cell_area();
        self.values.iter().map(|g| g * area).collect()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn negated(&self) -> Self {
        Self {
            geometry: self.geometry,
            values: self.values.iter().map(|g| -g).collect(),
        }
    }
}

pub fn gradient_field(
    phi_a: &FieldGrid,
    phi_e: &FieldGrid,
    medium: &MediumMap,
    form: GradientForm,
) -> Result<GradientFieldMap> {
    let g = *medium.geometry();
    g.check_same(phi_a.geometry(), "gradient_field (forward field)")?;
    g.check_same(phi_e.geometry(), "gradient_field (adjoint field)")?;
    let values = phi_a
        .values()
        .iter()
        .zip(phi_e.values())
        .zip(medium.trainable_mask())
        .zip(medium.k_real())
        .map(|(((a, e), &trainable), &k)| {
            if !trainable {
                return 0.0;
            }
            let overlap = (a * e).re;
            match form {
                GradientForm::Full => -4.0 * k * overlap,
                GradientForm::Proportional => -overlap,
            }
        })
        .collect();
    GradientFieldMap::new(g, values)
}

/// `k(r) ← k(r) − η·g(r)` on trainable cells; the absorbing profile is untouched.
pub fn sgd_step(medium: &MediumMap, gradient: &GradientFieldMap, eta: f64) -> Result<MediumMap> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("learning rate must be non-negative, got {eta}")));
    }
    medium.geometry().check_same(gradient.geometry(), "sgd_step")?;
    let mut out = medium.clone();
    if eta == 0.0 {
        return Ok(out);
    }
    let g = *medium.geometry();
    for (idx, (&trainable, &grad)) in medium.trainable_mask().iter().zip(gradient.values()).enumerate() {
        if !trainable || grad == 0.0 {
            continue;
        }
        let updated = medium.k_real()[idx] - eta * grad;
        if !(updated > 0.0 && updated.is_finite()) {
            let (i, j) = g.cell(idx);
            return Err(Error::NonPositiveWavenumber { i, j, value: updated });
        }
        out.set_k_real(idx, updated);
    }
    Ok(out)
}

/// Basis-probed transfer matrix: column j is the readout for input `e_j`.
pub fn effective_matrix(
    medium: &MediumMap,
    emitters: &SampledTransducers,
    receivers: &SampledTransducers,
    opts: &SolverOptions,
) -> Result<ComplexMatrix> {
    if emitters.is_empty() || receivers.is_empty() {
        return Err(Error::invalid("effective matrix needs at least one emitter and one receiver"));
    }
    medium.geometry().check_same(emitters.geometry(), "effective_matrix (emitters)")?;
    medium.geometry().check_same(receivers.geometry(), "effective_matrix (receivers)")?;
    let columns = (0..emitters.len())
        .map(|j| {
            let a = ComplexVector::basis(emitters.len(), j)?;
            let field = solve(medium, &encode_input(&a, emitters)?, opts)?.field;
            read_output(&field, receivers)
        })
        .collect::<Result<Vec<_>>>()?;
    ComplexMatrix::from_columns(&columns)
}

/// Forward pass for one sample: field, readout, and the squared error against `o_t`.
#[derive(Debug, Clone)]
pub struct ForwardSample {
    pub field: FieldGrid,
    pub output: ComplexVector,
    pub cost: f64,
    pub iterations: usize,
    pub rel_residual: f64,
}

pub fn forward_sample(
    medium: &MediumMap,
    emitters: &SampledTransducers,
    receivers: &SampledTransducers,
    a: &ComplexVector,
    o_t: &ComplexVector,
    opts: &SolverOptions,
) -> Result<ForwardSample> {
    let sol = solve(medium, &encode_input(a, emitters)?, opts)?;
    let output = read_output(&sol.field, receivers)?;
    let cost = output.sub(o_t)?.norm_sqr();
    Ok(ForwardSample {
        field: sol.field,
        output,
        cost,
        iterations: sol.iterations,
        rel_residual: sol.rel_residual,
    })
}

/// Adjoint gradient of `‖o − oᵗ‖²` for one sample.
pub fn sample_gradient(
    medium: &MediumMap,
    emitters: &SampledTransducers,
    receivers: &SampledTransducers,
    a: &ComplexVector,
    o_t: &ComplexVector,
    form: GradientForm,
    opts: &SolverOptions,
) -> Result<(ForwardSample, GradientFieldMap)> {
    let fwd = forward_sample(medium, emitters, receivers, a, o_t, opts)?;
    let e = error_vector(&fwd.output, o_t)?;
    let phi_e = solve(medium, &encode_error(&e, receivers)?, opts)?.field;
    let grad = gradient_field(&fwd.field, &phi_e, medium, form)?;
    Ok((fwd, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transducer::{Role, TransducerArray};
    use crate::K0;

    fn geometry() -> GridGeometry {
        GridGeometry::new(30, 24, 0.1).unwrap()
    }

    fn emitters(g: &GridGeometry) -> SampledTransducers {
        TransducerArray::new(vec![(0.8, 1.0), (0.8, 1.4)], 0.2, Role::Emitter)
            .unwrap()
            .sample(g)
            .unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_input_gives_zero_source() {
        let g = geometry();
        let s = encode_input(&ComplexVector::zeros(2), &emitters(&g)).unwrap();
        assert!(s.values().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn basis_input_gives_single_profile() {
        let g = geometry();
        let em = emitters(&g);
        let s = encode_input(&ComplexVector::basis(2, 1).unwrap(), &em).unwrap();
        for (idx, (i, j)) in g.cells().enumerate() {
            let expected = if g.is_boundary(i, j) { 0.0 } else { em.profile(1)[idx] };
            assert_eq!(s.values()[idx], c(expected, 0.0));
        }
    }

    #[test]
    fn two_element_input_is_pointwise_weighted_sum() {
        let g = geometry();
        let em = emitters(&g);
        let a = ComplexVector::new(vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let s = encode_input(&a, &em).unwrap();
        let idx = g.index(9, 12);
        let expected = c(em.profile(0)[idx], em.profile(1)[idx]);
        assert!((s.values()[idx] - expected).norm() < 1e-15);
        let e = encode_error(&a, &em).unwrap();
        assert_eq!(e.values(), s.values());
    }

    #[test]
    fn length_mismatch_rejected() {
        let g = geometry();
        assert!(encode_input(&ComplexVector::zeros(3), &emitters(&g)).is_err());
        assert!(error_vector(&ComplexVector::zeros(2), &ComplexVector::zeros(3)).is_err());
    }

    #[test]
    fn readout_of_constant_field_is_constant() {
        let g = GridGeometry::new(61, 61, 0.1).unwrap();
        let rx = TransducerArray::new(vec![(3.0, 3.0), (2.5, 3.2)], 0.5, Role::Receiver)
            .unwrap()
            .sample(&g)
            .unwrap();
        let field = FieldGrid::from_fn(g, |_, _| c(0.3, -1.2));
        let o = read_output(&field, &rx).unwrap();
        for z in o.iter() {
            assert!((z - c(0.3, -1.2)).norm() < 1e-3);
        }
        let zero = read_output(&FieldGrid::zeros(g), &rx).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn error_vector_conjugates() {
        let o = ComplexVector::new(vec![c(2.0, 3.0)]).unwrap();
        let t = ComplexVector::new(vec![c(1.0, 1.0)]).unwrap();
        let e = error_vector(&o, &t).unwrap();
        assert_eq!(e[0], c(1.0, -2.0));
        assert_eq!(e.conj().add(&t).unwrap(), o);
        assert!(error_vector(&o, &o).unwrap().iter().all(|z| z.norm() == 0.0));
    }

    fn trainable_medium() -> MediumMap {
        MediumMap::uniform(geometry(), K0)
            .unwrap()
            .with_trainable_rect(10..20, 5..19)
    }

    #[test]
    fn gradient_zero_without_error_field() {
        let m = trainable_medium();
        let g = *m.geometry();
        let phi_a = FieldGrid::from_fn(g, |i, j| c(i as f64, j as f64));
        let grad = gradient_field(&phi_a, &FieldGrid::zeros(g), &m, GradientForm::Full).unwrap();
        assert!(grad.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_vanishes_for_imaginary_product() {
        let m = trainable_medium();
        let g = *m.geometry();
        let phi_a = FieldGrid::from_fn(g, |_, _| c(1.0, 0.0));
        let phi_e = FieldGrid::from_fn(g, |_, _| c(0.0, 1.0));
        let grad = gradient_field(&phi_a, &phi_e, &m, GradientForm::Full).unwrap();
        assert_eq!(grad.values()[g.index(12, 10)], 0.0);
    }

    #[test]
    fn gradient_full_and_proportional_forms() {
        let m = trainable_medium();
        let g = *m.geometry();
        let phi_a = FieldGrid::from_fn(g, |_, _| c(1.0, 2.0));
        let phi_e = FieldGrid::from_fn(g, |_, _| c(0.5, 0.0));
        let full = gradient_field(&phi_a, &phi_e, &m, GradientForm::Full).unwrap();
        let prop = gradient_field(&phi_a, &phi_e, &m, GradientForm::Proportional).unwrap();
        let inside = g.index(12, 10);
        assert!((full.values()[inside] - (-4.0 * K0 * 0.5)).abs() < 1e-12);
        assert!((prop.values()[inside] - (-0.5)).abs() < 1e-15);
        // off the mask
        assert_eq!(full.values()[g.index(2, 2)], 0.0);
        assert!((full.cell_derivatives()[inside] - full.values()[inside] * 0.01).abs() < 1e-15);
    }

    #[test]
    fn gradient_symmetric_in_its_fields() {
        let m = trainable_medium();
        let g = *m.geometry();
        let phi_a = FieldGrid::from_fn(g, |i, j| c((i as f64).sin(), (j as f64 * 0.3).cos()));
        let phi_e = FieldGrid::from_fn(g, |i, j| c((j as f64).cos(), (i as f64 * 0.7).sin()));
        let ae = gradient_field(&phi_a, &phi_e, &m, GradientForm::Full).unwrap();
        let ea = gradient_field(&phi_e, &phi_a, &m, GradientForm::Full).unwrap();
        let conj = gradient_field(&phi_a.conj(), &phi_e.conj(), &m, GradientForm::Full).unwrap();
        assert_eq!(ae, ea);
        for (p, q) in ae.values().iter().zip(conj.values()) {
            assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0));
        }
    }

    #[test]
    fn sgd_step_contracts() {
        let m = trainable_medium();
        let g = *m.geometry();
        let grad = GradientFieldMap::new(g, vec![1.0; g.len()]).unwrap();
        assert_eq!(sgd_step(&m, &grad, 0.0).unwrap(), m);
        let stepped = sgd_step(&m, &grad, 0.1).unwrap();
        let inside = g.index(12, 10);
        let outside = g.index(3, 3);
        assert!((stepped.k_real()[inside] - (K0 - 0.1)).abs() < 1e-15);
        assert_eq!(stepped.k_real()[outside], K0);
        assert_eq!(stepped.k_imag(), m.k_imag());
        assert!(sgd_step(&m, &grad, -1.0).is_err());
        assert!(matches!(
            sgd_step(&m, &grad, 10.0),
            Err(Error::NonPositiveWavenumber { .. })
        ));
    }

    #[test]
    fn effective_matrix_rejects_empty_input() {
        let g = geometry();
        let m = trainable_medium();
        let none = TransducerArray::new(vec![], 0.2, Role::Emitter).unwrap().sample(&g).unwrap();
        let rx = emitters(&g);
        assert!(effective_matrix(&m, &none, &rx, &SolverOptions::default()).is_err());
    }
}
