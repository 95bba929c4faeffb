//! Oracles shared by the integration tests. Nothing here calls the stencil
//! operator or the iterative solver.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use wavetrain::MediumMap;

/// Dense copy of the discrete Helmholtz matrix, written out from its definition:
/// `(φ_W + φ_E + φ_S + φ_N − 4φ)/h² + k²φ` inside, `φ = 0` on the outer ring.
pub fn dense_helmholtz(medium: &MediumMap) -> DMatrix<Complex64> {
    let g = medium.geometry();
    let (nx, ny, h) = (g.nx() as i64, g.ny() as i64, g.spacing());
    let n = (nx * ny) as usize;
    let on_ring = |i: i64, j: i64| i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..ny {
        for i in 0..nx {
            let r = (j * nx + i) as usize;
            if on_ring(i, j) {
                a[(r, r)] = Complex64::new(1.0, 0.0);
                continue;
            }
            let k = Complex64::new(medium.k_real()[r], medium.k_imag()[r]);
            a[(r, r)] = k * k - Complex64::new(4.0 / (h * h), 0.0);
            for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                let (ii, jj) = (i + di, j + dj);
                if !on_ring(ii, jj) {
                    a[(r, (jj * nx + ii) as usize)] = Complex64::new(1.0 / (h * h), 0.0);
                }
            }
        }
    }
    a
}

pub fn dense_direct_solve(medium: &MediumMap, rhs: &[Complex64]) -> Vec<Complex64> {
    let b = DVector::from_column_slice(rhs);
    dense_helmholtz(medium)
        .lu()
        .solve(&b)
        .expect("non-singular Helmholtz matrix")
        .iter()
        .copied()
        .collect()
}

pub fn max_abs(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
