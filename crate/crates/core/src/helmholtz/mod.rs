//! Frequency-domain Helmholtz solver: `∇²φ + k²(r)φ = s(r)` with φ = 0 on the
//! outer boundary ring.

mod bicgstab;
mod operator;

pub use bicgstab::{bicgstab, BicgstabOptions, BicgstabOutcome, BreakdownPolicy, Preconditioner};
pub use operator::{assemble_operator, LinearOperator, StencilOperator, StoredOperator};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{FieldGrid, GridGeometry};
use crate::medium::MediumMap;

/// Right-hand side of the Helmholtz equation. Values on the boundary ring are
/// forced to zero so the Dirichlet condition holds.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTerm {
    geometry: GridGeometry,
    values: Vec<Complex64>,
}

impl SourceTerm {
    pub fn new(geometry: GridGeometry, mut values: Vec<Complex64>) -> Result<Self> {
        crate::error::check_len("SourceTerm::new", geometry.len(), values.len())?;
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("SourceTerm"));
        }
        for (idx, (i, j)) in geometry.cells().enumerate() {
            if geometry.is_boundary(i, j) {
                values[idx] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(Self { geometry, values })
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        Self {
            geometry,
            values: vec![Complex64::new(0.0, 0.0); geometry.len()],
        }
    }

    /// Unit point source at cell `(i, j)`.
    pub fn point(geometry: GridGeometry, i: usize, j: usize) -> Result<Self> {
        if i >= geometry.nx() || j >= geometry.ny() {
            return Err(Error::invalid(format!("point source ({i}, {j}) outside grid")));
        }
        let mut values = vec![Complex64::new(0.0, 0.0); geometry.len()];
        values[geometry.index(i, j)] = Complex64::new(1.0, 0.0);
        Self::new(geometry, values)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.geometry.check_same(&other.geometry, "SourceTerm::add")?;
        Ok(Self {
            geometry: self.geometry,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub rel_tolerance: f64,
    /// `None` means 20 × number of cells.
    pub max_iterations: Option<usize>,
    pub preconditioner: Preconditioner,
    pub breakdown: BreakdownPolicy,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-8,
            max_iterations: None,
            preconditioner: Preconditioner::None,
            breakdown: BreakdownPolicy::Restart,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerance(rel_tolerance: f64) -> Self {
        Self {
            rel_tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance < 1.0) {
            return Err(Error::invalid(format!(
                "solver tolerance must lie in (0, 1), got {}",
                self.rel_tolerance
            )));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::invalid("solver max_iterations must be at least 1"));
        }
        Ok(())
    }

    fn iteration_cap(&self, cells: usize) -> usize {
        self.max_iterations.unwrap_or(20 * cells)
    }
}

/// A solved field plus solver statistics.
#[derive(Debug, Clone)]
pub struct Solution {
    pub field: FieldGrid,
    pub iterations: usize,
    pub rel_residual: f64,
}

pub fn solve(medium: &MediumMap, source: &SourceTerm, opts: &SolverOptions) -> Result<Solution> {
    let op = assemble_operator(medium)?;
    solve_with_operator(&op, source, opts)
}

pub fn solve_with_operator(op: &StencilOperator, source: &SourceTerm, opts: &SolverOptions) -> Result<Solution> {
    opts.validate()?;
    op.geometry().check_same(source.geometry(), "solve")?;
    let bopts = BicgstabOptions {
        rel_tolerance: opts.rel_tolerance,
        max_iterations: opts.iteration_cap(op.dim()),
        preconditioner: opts.preconditioner,
        breakdown: opts.breakdown,
    };
    let out = bicgstab(op, source.values(), None, &bopts);
    if !out.converged {
        return Err(Error::NotConverged {
            iterations: out.iterations,
            residual: out.rel_residual,
            tolerance: opts.rel_tolerance,
        });
    }
    Ok(Solution {
        field: FieldGrid::new(*op.geometry(), out.x)?,
        iterations: out.iterations,
        rel_residual: out.rel_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn medium() -> MediumMap {
        let g = GridGeometry::new(24, 20, 0.1).unwrap();
        MediumMap::uniform(g, 2.0 * PI)
            .unwrap()
            .apply_absorbing_profile(4, PI)
            .unwrap()
    }

    #[test]
    fn zero_source_gives_zero_field() {
        let m = medium();
        let sol = solve(&m, &SourceTerm::zeros(*m.geometry()), &SolverOptions::default()).unwrap();
        assert!(sol.field.values().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn boundary_values_of_source_are_cleared() {
        let g = GridGeometry::new(5, 5, 1.0).unwrap();
        let s = SourceTerm::new(g, vec![Complex64::new(1.0, 0.0); 25]).unwrap();
        assert_eq!(s.values()[g.index(0, 2)], Complex64::new(0.0, 0.0));
        assert_eq!(s.values()[g.index(2, 2)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn residual_contract_holds() {
        let m = medium();
        let g = *m.geometry();
        let src = SourceTerm::point(g, 12, 9).unwrap();
        let opts = SolverOptions::with_tolerance(1e-9);
        let sol = solve(&m, &src, &opts).unwrap();
        let op = assemble_operator(&m).unwrap();
        let mut lx = vec![Complex64::default(); g.len()];
        op.apply(sol.field.values(), &mut lx);
        let res: f64 = lx
            .iter()
            .zip(src.values())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(res <= 1e-9 * 1.0 + 1e-15);
        assert!(sol.rel_residual <= 1e-9);
    }

    #[test]
    fn non_convergence_reports_residual() {
        let m = medium();
        let src = SourceTerm::point(*m.geometry(), 12, 9).unwrap();
        let opts = SolverOptions {
            max_iterations: Some(3),
            ..SolverOptions::default()
        };
        match solve(&m, &src, &opts) {
            Err(Error::NotConverged { iterations, residual, .. }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-8);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn jacobi_agrees_with_unpreconditioned() {
        let m = medium();
        let src = SourceTerm::point(*m.geometry(), 8, 11).unwrap();
        let plain = solve(&m, &src, &SolverOptions::with_tolerance(1e-11)).unwrap();
        let jac = solve(
            &m,
            &src,
            &SolverOptions {
                rel_tolerance: 1e-11,
                preconditioner: Preconditioner::Jacobi,
                ..SolverOptions::default()
            },
        )
        .unwrap();
        let scale = plain.field.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let diff = plain
            .field
            .values()
            .iter()
            .zip(jac.field.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-8 * scale, "diff {diff} scale {scale}");
    }

    #[test]
    fn invalid_options_rejected() {
        assert!(SolverOptions::with_tolerance(0.0).validate().is_err());
        assert!(SolverOptions::with_tolerance(1.5).validate().is_err());
        let o = SolverOptions {
            max_iterations: Some(0),
            ..SolverOptions::default()
        };
        assert!(o.validate().is_err());
    }
}
