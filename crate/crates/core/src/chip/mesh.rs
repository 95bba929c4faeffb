//! Fixed mixing blocks built from 50/50 directional couplers.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::random::RngSeed;

/// How coupler sublayers pair up waveguides.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshStyle {
    /// Sublayer `s` couples channels `i` and `i ⊕ 2^(s mod ⌈log₂M⌉)`. Three
    /// sublayers already connect every input to every output when M = 8.
    Butterfly,
    /// Alternating even-pair / odd-pair nearest-neighbour couplers. Light
    /// spreads by at most two channels per sublayer.
    NearestNeighbor,
}

/// The symmetric lossless 50/50 coupler `(1/√2)[[1, j], [j, 1]]`.
pub fn coupler() -> ComplexMatrix {
    let d = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let x = Complex64::new(0.0, FRAC_1_SQRT_2);
    ComplexMatrix::new(2, 2, vec![d, x, x, d]).expect("2x2 literal")
}

fn ceil_log2(m: usize) -> u32 {
    usize::BITS - (m - 1).leading_zeros()
}

/// Pairs coupled by sublayer `s`.
fn pairs(m: usize, s: usize, style: MeshStyle) -> Vec<(usize, usize)> {
    match style {
        MeshStyle::NearestNeighbor => (s % 2..m.saturating_sub(1)).step_by(2).map(|i| (i, i + 1)).collect(),
        MeshStyle::Butterfly => {
            let stride = 1usize << (s as u32 % ceil_log2(m).max(1));
            (0..m)
                .filter(|i| i & stride == 0 && i + stride < m)
                .map(|i| (i, i + stride))
                .collect()
        }
    }
}

/// Builds one mixer: each sublayer is a screen of fixed random phases (the
/// unavoidable path-length differences of a fabricated chip) followed by a
/// column of couplers.
pub fn build_mesh(m: usize, sublayers: usize, style: MeshStyle, seed: RngSeed) -> Result<ComplexMatrix> {
    if m < 2 {
        return Err(Error::invalid(format!("mesh needs at least 2 channels, got {m}")));
    }
    if sublayers < 1 {
        return Err(Error::invalid("mesh needs at least one coupler sublayer"));
    }
    let mut rng = seed.rng();
    let c = coupler();
    let mut u = ComplexMatrix::identity(m);
    for s in 0..sublayers {
        let screen: Vec<Complex64> = (0..m)
            .map(|_| Complex64::from_polar(1.0, rng.random_range(-PI..PI)))
            .collect();
        let mut partner: Vec<Option<(usize, usize)>> = vec![None; m];
        for (p, q) in pairs(m, s, style) {
            partner[p] = Some((q, 0));
            partner[q] = Some((p, 1));
        }
        let layer = ComplexMatrix::from_fn(m, m, |r, col| match partner[r] {
            None => Complex64::new(if r == col { 1.0 } else { 0.0 }, 0.0),
            Some((q, side)) if col == q => c.get(side, 1 - side),
            Some((_, side)) if col == r => c.get(side, side),
            Some(_) => Complex64::new(0.0, 0.0),
        });
        u = layer.matmul(&ComplexMatrix::diagonal(&screen))?.matmul(&u)?;
    }
    Ok(u)
}

/// Butterfly coupler mesh, the default mixer.
pub fn build_coupler_mesh(m: usize, sublayers: usize, seed: RngSeed) -> Result<ComplexMatrix> {
    build_mesh(m, sublayers, MeshStyle::Butterfly, seed)
}

/// Default sublayer count `⌈log₂M⌉ + 1`.
pub fn default_sublayers(m: usize) -> usize {
    ceil_log2(m.max(2)) as usize + 1
}
