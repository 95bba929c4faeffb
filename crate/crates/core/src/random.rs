//! Seeded random generation.
//!
//! All randomness flows from a [`RngSeed`] through ChaCha8 streams, so equal
//! seeds give bit-identical draws on every platform.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent stream derived from this seed, for separating e.g. the
    /// target draw from the per-iteration sample draws.
    pub fn stream(self, stream: u64) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_stream(stream);
        rng
    }
}

pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Vector whose real and imaginary parts are independent standard normals.
pub fn random_complex_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ComplexVector> {
    if n == 0 {
        return Err(Error::invalid("random vector length must be at least 1"));
    }
    ComplexVector::new((0..n).map(|_| standard_complex(rng)).collect())
}

pub fn random_complex_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("random matrix must have nonzero shape"));
    }
    let data = (0..rows * cols).map(|_| standard_complex(rng)).collect();
    ComplexMatrix::new(rows, cols, data)
}

/// Haar-distributed unitary: modified Gram-Schmidt on the columns of a
/// complex Gaussian matrix (positive real diagonal of R).
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ComplexMatrix> {
    let g = random_complex_matrix(n, n, rng)?;
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|c| g.column(c).into_vec()).collect();
    for j in 0..n {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        // two passes keep the basis orthonormal to machine precision
        for _ in 0..2 {
            for q in done.iter() {
                let proj: Complex64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::NonFinite("random_unitary (rank-deficient draw)"));
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
    }
    Ok(ComplexMatrix::from_fn(n, n, |r, c| cols[c][r]))
}
