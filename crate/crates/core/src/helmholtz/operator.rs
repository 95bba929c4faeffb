//! Discrete Helmholtz operator `L v = ∇²v + k²v`.
//!
//! Interior rows use the 5-point Laplacian. Boundary rows are identity rows
//! pinning φ = 0, and interior rows do not reference boundary columns (those
//! values are zero for every admissible solve). This keeps `L` complex
//! symmetric, `Lᵀ = L`, which is what makes the system reciprocal.

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::GridGeometry;
use crate::medium::MediumMap;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y ← L x`
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);

    /// Diagonal entries, for Jacobi preconditioning.
    fn diagonal(&self) -> Vec<Complex64>;
}

/// Matrix-free stencil form of the operator.
#[derive(Debug, Clone)]
pub struct StencilOperator {
    geometry: GridGeometry,
    center: Vec<Complex64>,
    neighbor: Complex64,
}

pub fn assemble_operator(medium: &MediumMap) -> Result<StencilOperator> {
    let g = *medium.geometry();
    let h2 = g.cell_area();
    let center = g
        .cells()
        .enumerate()
        .map(|(idx, (i, j))| {
            if g.is_boundary(i, j) {
                ONE
            } else {
                let k = medium.k_complex(idx);
                Complex64::new(-4.0 / h2, 0.0) + k * k
            }
        })
        .collect();
    Ok(StencilOperator {
        geometry: g,
        center,
        neighbor: Complex64::new(1.0 / h2, 0.0),
    })
}

impl StencilOperator {
    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    /// Neighbour offsets of interior cell `(i, j)` that are themselves interior,
    /// in the fixed order left, right, down, up.
    fn interior_neighbors(&self, i: usize, j: usize) -> impl Iterator<Item = usize> {
        let g = self.geometry;
        let (nx, ny) = (g.nx(), g.ny());
        let idx = g.index(i, j);
        [
            (i > 1).then(|| idx - 1),
            (i + 2 < nx).then(|| idx + 1),
            (j > 1).then(|| idx - nx),
            (j + 2 < ny).then(|| idx + nx),
        ]
        .into_iter()
        .flatten()
    }

    /// Explicit compressed-row copy with identical action.
    pub fn to_stored(&self) -> StoredOperator {
        let g = self.geometry;
        let mut row_ptr = Vec::with_capacity(g.len() + 1);
        let mut cols = Vec::with_capacity(5 * g.len());
        let mut vals = Vec::with_capacity(5 * g.len());
        row_ptr.push(0);
        for (idx, (i, j)) in g.cells().enumerate() {
            cols.push(idx);
            vals.push(self.center[idx]);
            if !g.is_boundary(i, j) {
                for n in self.interior_neighbors(i, j) {
                    cols.push(n);
                    vals.push(self.neighbor);
                }
            }
            row_ptr.push(cols.len());
        }
        StoredOperator {
            row_ptr,
            cols,
            vals,
        }
    }
}

impl LinearOperator for StencilOperator {
    fn dim(&self) -> usize {
        self.geometry.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let g = self.geometry;
        let (nx, ny) = (g.nx(), g.ny());
        debug_assert_eq!(x.len(), g.len());
        debug_assert_eq!(y.len(), g.len());
        let c = self.neighbor;
        for j in 0..ny {
            let row = j * nx;
            if j == 0 || j == ny - 1 {
                for idx in row..row + nx {
                    y[idx] = self.center[idx] * x[idx];
                }
                continue;
            }
            y[row] = self.center[row] * x[row];
            y[row + nx - 1] = self.center[row + nx - 1] * x[row + nx - 1];
            for i in 1..nx - 1 {
                let idx = row + i;
                let mut acc = self.center[idx] * x[idx];
                if i > 1 {
                    acc += c * x[idx - 1];
                }
                if i + 2 < nx {
                    acc += c * x[idx + 1];
                }
                if j > 1 {
                    acc += c * x[idx - nx];
                }
                if j + 2 < ny {
                    acc += c * x[idx + nx];
                }
                y[idx] = acc;
            }
        }
    }

    fn diagonal(&self) -> Vec<Complex64> {
        self.center.clone()
    }
}

/// Compressed sparse row form of the same operator.
#[derive(Debug, Clone)]
pub struct StoredOperator {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl StoredOperator {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entries of row `r` as `(column, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()].iter().copied().zip(self.vals[range].iter().copied())
    }
}

impl LinearOperator for StoredOperator {
    fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let start = self.row_ptr[r];
            let end = self.row_ptr[r + 1];
            let mut acc = self.vals[start] * x[self.cols[start]];
            for k in start + 1..end {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    fn diagonal(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|r| self.vals[self.row_ptr[r]]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn medium(nx: usize, ny: usize, k: f64) -> MediumMap {
        MediumMap::uniform(GridGeometry::new(nx, ny, 0.1).unwrap(), k).unwrap()
    }

    #[test]
    fn constant_field_sees_only_k_squared() {
        let k = 2.0 * PI;
        let m = medium(9, 9, k);
        let op = assemble_operator(&m).unwrap();
        let x = vec![Complex64::new(0.7, -0.2); 81];
        let mut y = vec![Complex64::default(); 81];
        op.apply(&x, &mut y);
        let g = m.geometry();
        let got = y[g.index(4, 4)];
        let expected = x[0] * k * k;
        assert!((got - expected).norm() < 1e-10 * expected.norm());
    }

    #[test]
    fn impulse_column_matches_stencil() {
        let k = 2.0 * PI;
        let m = medium(9, 7, k);
        let g = *m.geometry();
        let op = assemble_operator(&m).unwrap();
        let mut x = vec![Complex64::default(); g.len()];
        x[g.index(4, 3)] = ONE;
        let mut y = vec![Complex64::default(); g.len()];
        op.apply(&x, &mut y);
        let inv_h2 = 1.0 / 0.01;
        assert!((y[g.index(4, 3)].re - (-4.0 * inv_h2 + k * k)).abs() < 1e-9);
        for (i, j) in [(3, 3), (5, 3), (4, 2), (4, 4)] {
            assert!((y[g.index(i, j)].re - inv_h2).abs() < 1e-9);
        }
        let nonzero = y.iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 5);
    }

    #[test]
    fn boundary_rows_are_identity() {
        let m = medium(5, 5, 1.0);
        let g = *m.geometry();
        let op = assemble_operator(&m).unwrap();
        let x: Vec<Complex64> = (0..25).map(|n| Complex64::new(n as f64, 1.0)).collect();
        let mut y = vec![Complex64::default(); 25];
        op.apply(&x, &mut y);
        for (idx, (i, j)) in g.cells().enumerate() {
            if g.is_boundary(i, j) {
                assert_eq!(y[idx], x[idx]);
            }
        }
    }

    #[test]
    fn stored_matches_stencil_bitwise() {
        let m = medium(11, 8, 5.0)
            .apply_absorbing_profile(2, 3.0)
            .unwrap();
        let op = assemble_operator(&m).unwrap();
        let stored = op.to_stored();
        let x: Vec<Complex64> = (0..88)
            .map(|n| Complex64::new((n as f64 * 0.37).sin(), (n as f64 * 1.3).cos()))
            .collect();
        let mut a = vec![Complex64::default(); 88];
        let mut b = vec![Complex64::default(); 88];
        op.apply(&x, &mut a);
        stored.apply(&x, &mut b);
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.re.to_bits(), q.re.to_bits());
            assert_eq!(p.im.to_bits(), q.im.to_bits());
        }
        assert_eq!(op.diagonal(), stored.diagonal());
    }

    #[test]
    fn stored_operator_is_symmetric() {
        let m = medium(7, 6, 3.0).apply_absorbing_profile(1, 2.0).unwrap();
        let stored = assemble_operator(&m).unwrap().to_stored();
        let n = stored.dim();
        let mut dense = vec![Complex64::default(); n * n];
        for r in 0..n {
            for (c, v) in stored.row(r) {
                dense[r * n + c] = v;
            }
        }
        for r in 0..n {
            for c in 0..n {
                assert_eq!(dense[r * n + c], dense[c * n + r]);
            }
        }
    }
}
