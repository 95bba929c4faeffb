//! Finite-difference oracles for both gradients.
//!
//! The medium oracle rebuilds the discrete operator as a dense matrix from
//! scratch and solves it by LU factorization, so it shares no code with the
//! stencil operator or the iterative solver. The chip oracle evaluates the cost
//! through explicit layer matrices instead of the propagation routines.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::RngCore;

use crate::adjoint::{sample_gradient, GradientForm};
use crate::chip::{self, ChipState, PhaseGradient};
use crate::error::{Error, Result};
use crate::grid::GridGeometry;
use crate::helmholtz::SolverOptions;
use crate::linalg::{ComplexMatrix, ComplexVector};
use crate::medium::MediumMap;
use crate::random::{random_complex_matrix, random_complex_vector, random_unitary, RngSeed};
use crate::transducer::{Role, SampledTransducers, TransducerArray};

fn dense_operator(medium: &MediumMap) -> DMatrix<Complex64> {
    let g = medium.geometry();
    let (nx, ny) = (g.nx(), g.ny());
    let inv_h2 = 1.0 / g.cell_area();
    let n = g.len();
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..ny {
        for i in 0..nx {
            let r = j * nx + i;
            if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                a[(r, r)] = Complex64::new(1.0, 0.0);
                continue;
            }
            let k = Complex64::new(medium.k_real()[r], medium.k_imag()[r]);
            a[(r, r)] = k * k - 4.0 * inv_h2;
            for (ii, jj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                if ii > 0 && jj > 0 && ii < nx - 1 && jj < ny - 1 {
                    a[(r, jj * nx + ii)] = Complex64::new(inv_h2, 0.0);
                }
            }
        }
    }
    a
}

/// Solves the Helmholtz system by dense LU; the boundary ring of the source is
/// ignored, as in the iterative solver.
pub fn dense_solve(medium: &MediumMap, source: &[Complex64]) -> Result<Vec<Complex64>> {
    let g = medium.geometry();
    if source.len() != g.len() {
        return Err(Error::DimensionMismatch {
            context: "dense_solve",
            expected: g.len(),
            found: source.len(),
        });
    }
    let b = DVector::from_iterator(
        g.len(),
        g.cells()
            .zip(source)
            .map(|((i, j), s)| if g.is_boundary(i, j) { Complex64::new(0.0, 0.0) } else { *s }),
    );
    dense_operator(medium)
        .lu()
        .solve(&b)
        .map(|x| x.iter().copied().collect())
        .ok_or(Error::NonFinite("dense Helmholtz matrix is singular"))
}

fn dense_cost(
    medium: &MediumMap,
    emitters: &SampledTransducers,
    receivers: &SampledTransducers,
    a: &ComplexVector,
    o_t: &ComplexVector,
) -> Result<f64> {
    let n = medium.geometry().len();
    let mut source = vec![Complex64::new(0.0, 0.0); n];
    for (w, p) in a.iter().zip(emitters.profiles()) {
        for (s, &v) in source.iter_mut().zip(p) {
            *s += w * v;
        }
    }
    let phi = dense_solve(medium, &source)?;
    let area = medium.geometry().cell_area();
    Ok(receivers
        .profiles()
        .iter()
        .zip(o_t.iter())
        .map(|(p, t)| {
            let o: Complex64 = phi.iter().zip(p).map(|(f, &v)| f * v).sum::<Complex64>() * area;
            (o - t).norm_sqr()
        })
        .sum())
}

/// A 16 × 12 medium with two emitters, two receivers and a trainable block
/// between them, small enough for dense factorization.
#[derive(Debug, Clone)]
pub struct MediumProbe {
    pub medium: MediumMap,
    pub emitters: SampledTransducers,
    pub receivers: SampledTransducers,
    pub input: ComplexVector,
    pub target: ComplexVector,
}

pub fn medium_probe(seed: RngSeed) -> Result<MediumProbe> {
    let g = GridGeometry::new(16, 12, 0.1)?;
    let sigma = 0.15;
    let emitters = TransducerArray::new(vec![(0.4, 0.4), (0.4, 0.7)], sigma, Role::Emitter)?.sample(&g)?;
    let receivers = TransducerArray::new(vec![(1.1, 0.4), (1.1, 0.7)], sigma, Role::Receiver)?.sample(&g)?;
    let mut rng = seed.rng();
    // a mildly inhomogeneous start so cells are not all equivalent
    let base = MediumMap::uniform(g, crate::K0)?
        .with_trainable_rect(5..11, 3..9)
        .apply_absorbing_profile(2, 0.5 * crate::K0)?;
    let jitter = random_complex_vector(g.len(), &mut rng)?;
    let k_real: Vec<f64> = base
        .k_real()
        .iter()
        .zip(base.trainable_mask())
        .zip(jitter.iter())
        .map(|((&k, &t), z)| if t { k * (1.0 + 0.05 * z.re) } else { k })
        .collect();
    let medium = MediumMap::from_parts(
        g,
        k_real,
        base.k_imag().to_vec(),
        base.trainable_mask().to_vec(),
        base.band_cells(),
    )?;
    let input = random_complex_vector(2, &mut rng)?;
    let w0 = crate::adjoint::effective_matrix(&medium, &emitters, &receivers, &SolverOptions::with_tolerance(1e-12))?;
    let w = random_complex_matrix(2, 2, &mut rng)?;
    let target = w.scale((w0.frobenius_norm() / w.frobenius_norm()).into()).mul_vec(&input)?;
    Ok(MediumProbe {
        medium,
        emitters,
        receivers,
        input,
        target,
    })
}

#[derive(Debug, Clone)]
pub struct MediumGradcheckReport {
    pub cells: usize,
    pub max_rel_error: f64,
    /// `(i, j)` of the cell with the largest relative error.
    pub worst_cell: (usize, usize),
    pub adjoint: Vec<f64>,
    pub finite_difference: Vec<f64>,
}

/// Adjoint per-cell derivatives against central differences of the dense
/// cost with step `rel_step·k`. Relative errors use `|fd|` as denominator,
/// floored at `1e-12` to keep exact zeros finite.
pub fn medium_gradcheck(
    probe: &MediumProbe,
    solver: &SolverOptions,
    rel_step: f64,
    corrupt_sign: bool,
) -> Result<MediumGradcheckReport> {
    let (_, grad) = sample_gradient(
        &probe.medium,
        &probe.emitters,
        &probe.receivers,
        &probe.input,
        &probe.target,
        GradientForm::Full,
        solver,
    )?;
    let derivs = grad.cell_derivatives();
    let g = *probe.medium.geometry();
    let cost_at = |idx: usize, k: f64| -> Result<f64> {
        let mut k_real = probe.medium.k_real().to_vec();
        k_real[idx] = k;
        let m = MediumMap::from_parts(
            g,
            k_real,
            probe.medium.k_imag().to_vec(),
            probe.medium.trainable_mask().to_vec(),
            probe.medium.band_cells(),
        )?;
        dense_cost(&m, &probe.emitters, &probe.receivers, &probe.input, &probe.target)
    };
    let mut adjoint = Vec::new();
    let mut fd = Vec::new();
    let mut worst = (0.0, (0, 0));
    for (idx, &trainable) in probe.medium.trainable_mask().iter().enumerate() {
        if !trainable {
            continue;
        }
        let k = probe.medium.k_real()[idx];
        let dk = rel_step * k;
        let central = (cost_at(idx, k + dk)? - cost_at(idx, k - dk)?) / (2.0 * dk);
        let adj = if corrupt_sign { -derivs[idx] } else { derivs[idx] };
        let rel = (adj - central).abs() / central.abs().max(1e-12);
        if rel > worst.0 {
            worst = (rel, g.cell(idx));
        }
        adjoint.push(adj);
        fd.push(central);
    }
    Ok(MediumGradcheckReport {
        cells: adjoint.len(),
        max_rel_error: worst.0,
        worst_cell: worst.1,
        adjoint,
        finite_difference: fd,
    })
}

/// `‖W a − oᵗ‖²` with `W` the explicit product of layer matrices.
pub fn chip_cost(chip: &ChipState, a: &ComplexVector, o_t: &ComplexVector) -> Result<f64> {
    let mut w = ComplexMatrix::identity(chip.channels());
    for i in 0..chip.layers() {
        w = chip.layer_matrix(i).matmul(&w)?;
    }
    Ok(w.mul_vec(a)?.sub(o_t)?.norm_sqr())
}

/// Central differences of [`chip_cost`] in every phase.
pub fn chip_fd_gradient(chip: &ChipState, a: &ComplexVector, o_t: &ComplexVector, step: f64) -> Result<PhaseGradient> {
    let mut out = Vec::with_capacity(chip.layers());
    for l in 0..chip.layers() {
        let mut row = Vec::with_capacity(chip.channels());
        for m in 0..chip.channels() {
            let shifted = |delta: f64| -> Result<f64> {
                let mut psi = chip.phases().to_vec();
                psi[l][m] += delta;
                chip_cost(&chip.clone().with_phases(psi)?, a, o_t)
            };
            row.push((shifted(step)? - shifted(-step)?) / (2.0 * step));
        }
        out.push(row);
    }
    Ok(out)
}

fn intensity_gradient(chip: &ChipState, a: &ComplexVector, o_t: &ComplexVector) -> Result<Vec<f64>> {
    let o = chip::forward(chip, a)?.last().clone();
    let e = chip::inject_error(&o, o_t)?;
    Ok(chip::gradient::flatten(&chip::intensity_gradient_forwarddir(chip, a, &e)?))
}

/// Least-squares constant `c` with `c·g_intensity ≈ g_fd` on one probe sample.
pub fn calibrate_gradient_scale(chip: &ChipState, a: &ComplexVector, o_t: &ComplexVector, step: f64) -> Result<f64> {
    let g = intensity_gradient(chip, a, o_t)?;
    let fd = chip::gradient::flatten(&chip_fd_gradient(chip, a, o_t, step)?);
    let gg: f64 = g.iter().map(|x| x * x).sum();
    if gg == 0.0 {
        return Err(Error::invalid("calibration sample has zero gradient"));
    }
    Ok(g.iter().zip(&fd).map(|(x, y)| x * y).sum::<f64>() / gg)
}

#[derive(Debug, Clone)]
pub struct ChipGradcheckReport {
    pub scale: f64,
    /// `‖c·g − g_fd‖ / ‖g_fd‖` on the check samples, worst case.
    pub max_rel_error: f64,
    /// Smallest cosine similarity between `g` and `g_fd`.
    pub min_cosine: f64,
    pub samples: usize,
}

/// Lossless coupler-mesh chip with random phases.
pub fn chip_probe(channels: usize, layers: usize, seed: RngSeed) -> Result<ChipState> {
    let mut rng = seed.stream(0);
    let mixers = (0..layers)
        .map(|_| chip::build_coupler_mesh(channels, chip::default_sublayers(channels), RngSeed(rng.next_u64())))
        .collect::<Result<Vec<_>>>()?;
    let psi = (0..layers)
        .map(|_| Ok(random_complex_vector(channels, &mut rng)?.iter().map(|z| z.re).collect()))
        .collect::<Result<Vec<Vec<f64>>>>()?;
    ChipState::new(mixers)?.with_phases(psi)
}

/// Calibrates on one sample, then checks `samples` further ones.
pub fn chip_gradcheck(chip: &ChipState, samples: usize, step: f64, seed: RngSeed, corrupt_sign: bool) -> Result<ChipGradcheckReport> {
    let m = chip.channels();
    let mut rng = seed.stream(1);
    let target = random_unitary(m, &mut rng)?;
    let mut draw = || -> Result<(ComplexVector, ComplexVector)> {
        let a = random_complex_vector(m, &mut rng)?.normalized();
        let o_t = target.mul_vec(&a)?;
        Ok((a, o_t))
    };
    let (a0, t0) = draw()?;
    let scale = calibrate_gradient_scale(chip, &a0, &t0, step)?;
    let mut max_rel: f64 = 0.0;
    let mut min_cos: f64 = 1.0;
    for _ in 0..samples {
        let (a, o_t) = draw()?;
        let mut g = intensity_gradient(chip, &a, &o_t)?;
        if corrupt_sign {
            g.iter_mut().for_each(|x| *x = -*x);
        }
        let fd = chip::gradient::flatten(&chip_fd_gradient(chip, &a, &o_t, step)?);
        let diff: f64 = g.iter().zip(&fd).map(|(x, y)| (scale * x - y).powi(2)).sum::<f64>().sqrt();
        let nfd = fd.iter().map(|y| y * y).sum::<f64>().sqrt();
        let ng = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        max_rel = max_rel.max(diff / nfd);
        min_cos = min_cos.min(g.iter().zip(&fd).map(|(x, y)| x * y).sum::<f64>() / (ng * nfd));
    }
    Ok(ChipGradcheckReport {
        scale,
        max_rel_error: max_rel,
        min_cosine: min_cos,
        samples,
    })
}
