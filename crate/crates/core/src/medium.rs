//! Spatial wavenumber map with trainable region and absorbing band.
//!
//! The absorbing band occupies the `band_cells` rings just inside the
//! Dirichlet boundary ring. Its imaginary wavenumber follows a quadratic ramp
//! from 0 at the innermost band ring to `max_imag` at the outermost one; the
//! boundary ring carries `max_imag` as well but only ever sees identity rows.

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::grid::GridGeometry;
use crate::transducer::TransducerArray;

#[derive(Debug, Clone, PartialEq)]
pub struct MediumMap {
    geometry: GridGeometry,
    k_real: Vec<f64>,
    k_imag: Vec<f64>,
    trainable: Vec<bool>,
    band_cells: usize,
}

/// Imaginary wavenumber at ring depth `depth` (0 = boundary ring) for a band of
/// `band_cells` rings.
pub fn absorbing_ramp(band_cells: usize, max_imag: f64, depth: usize) -> f64 {
    if band_cells == 0 || depth > band_cells {
        return 0.0;
    }
    if depth == 0 || band_cells == 1 {
        return max_imag;
    }
    let t = (band_cells - depth) as f64 / (band_cells - 1) as f64;
    max_imag * t * t
}

impl MediumMap {
    /// Uniform real wavenumber `k`, no absorption, nothing trainable.
    pub fn uniform(geometry: GridGeometry, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::invalid(format!("wavenumber must be positive, got {k}")));
        }
        let n = geometry.len();
        Ok(Self {
            geometry,
            k_real: vec![k; n],
            k_imag: vec![0.0; n],
            trainable: vec![false; n],
            band_cells: 0,
        })
    }

    pub fn from_parts(
        geometry: GridGeometry,
        k_real: Vec<f64>,
        k_imag: Vec<f64>,
        trainable: Vec<bool>,
        band_cells: usize,
    ) -> Result<Self> {
        let n = geometry.len();
        check_len("MediumMap k_real", n, k_real.len())?;
        check_len("MediumMap k_imag", n, k_imag.len())?;
        check_len("MediumMap trainable", n, trainable.len())?;
        if let Some(idx) = k_real.iter().position(|&k| !(k > 0.0 && k.is_finite())) {
            let (i, j) = geometry.cell(idx);
            return Err(Error::NonPositiveWavenumber {
                i,
                j,
                value: k_real[idx],
            });
        }
        if k_imag.iter().any(|&k| !(k >= 0.0 && k.is_finite())) {
            return Err(Error::invalid("absorbing profile must be finite and non-negative"));
        }
        let medium = Self {
            geometry,
            k_real,
            k_imag,
            trainable,
            band_cells,
        };
        for (idx, &t) in medium.trainable.iter().enumerate() {
            let (i, j) = geometry.cell(idx);
            if t && medium.is_absorbing(i, j) {
                return Err(Error::invalid(format!(
                    "cell ({i}, {j}) is trainable but lies in the absorbing band"
                )));
            }
            if !medium.is_absorbing(i, j) && medium.k_imag[idx] != 0.0 {
                return Err(Error::invalid(format!(
                    "cell ({i}, {j}) is absorbing outside the band"
                )));
            }
        }
        Ok(medium)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn k_real(&self) -> &[f64] {
        &self.k_real
    }

    pub fn k_imag(&self) -> &[f64] {
        &self.k_imag
    }

    pub fn trainable_mask(&self) -> &[bool] {
        &self.trainable
    }

    pub fn band_cells(&self) -> usize {
        self.band_cells
    }

    pub fn trainable_count(&self) -> usize {
        self.trainable.iter().filter(|&&t| t).count()
    }

    #[inline]
    pub fn k_complex(&self, index: usize) -> Complex64 {
        Complex64::new(self.k_real[index], self.k_imag[index])
    }

    /// Boundary ring or absorbing band.
    pub fn is_absorbing(&self, i: usize, j: usize) -> bool {
        self.geometry.is_boundary(i, j)
            || (self.band_cells > 0 && self.geometry.ring_depth(i, j) <= self.band_cells)
    }

    /// Marks the cells with `i0 ≤ i < i1`, `j0 ≤ j < j1` trainable, skipping
    /// any that fall in the absorbing band.
    pub fn with_trainable_rect(mut self, i_range: std::ops::Range<usize>, j_range: std::ops::Range<usize>) -> Self {
        for j in j_range.start..j_range.end.min(self.geometry.ny()) {
            for i in i_range.start..i_range.end.min(self.geometry.nx()) {
                if !self.is_absorbing(i, j) {
                    let idx = self.geometry.index(i, j);
                    self.trainable[idx] = true;
                }
            }
        }
        self
    }

    /// Clears the trainable flag strictly inside `radius` of every transducer
    /// centre. Cells sitting exactly on the circle stay trainable; the relative
    /// slack keeps that decision independent of how positions round.
    pub fn excluding_transducers(mut self, array: &TransducerArray, radius: f64) -> Self {
        let g = self.geometry;
        let r2 = radius * radius * (1.0 - 1e-9);
        for (idx, (i, j)) in g.cells().enumerate() {
            let (x, y) = g.position(i, j);
            if array
                .centers()
                .iter()
                .any(|&(cx, cy)| (x - cx).powi(2) + (y - cy).powi(2) < r2)
            {
                self.trainable[idx] = false;
            }
        }
        self
    }

    /// Adds the quadratic imaginary-wavenumber ramp. `k_real` is untouched and
    /// the band is removed from the trainable region.
    pub fn apply_absorbing_profile(&self, band_cells: usize, max_imag: f64) -> Result<Self> {
        if !(max_imag >= 0.0 && max_imag.is_finite()) {
            return Err(Error::invalid(format!("max_imag must be non-negative, got {max_imag}")));
        }
        let g = self.geometry;
        if 2 * (band_cells + 1) >= g.nx().min(g.ny()) {
            return Err(Error::invalid(format!(
                "absorbing band of {band_cells} cells is wider than half the {}x{} grid",
                g.nx(),
                g.ny()
            )));
        }
        if band_cells == 0 {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        out.band_cells = band_cells;
        for (idx, (i, j)) in g.cells().enumerate() {
            let depth = g.ring_depth(i, j);
            if depth <= band_cells {
                out.k_imag[idx] = absorbing_ramp(band_cells, max_imag, depth);
                out.trainable[idx] = false;
            }
        }
        Ok(out)
    }

    /// Checks that every centre sits strictly inside the non-absorbing region.
    pub fn check_transducers(&self, array: &TransducerArray) -> Result<()> {
        let g = self.geometry;
        for (n, &(x, y)) in array.centers().iter().enumerate() {
            if !g.contains_point(x, y) {
                return Err(Error::invalid(format!("transducer {n} at ({x}, {y}) lies outside the grid")));
            }
            let h = g.spacing();
            let (ex, ey) = g.extent();
            let margin = (self.band_cells + 1) as f64 * h;
            let inside = x > margin && y > margin && x < ex - margin && y < ey - margin;
            if !inside {
                return Err(Error::invalid(format!(
                    "transducer {n} at ({x}, {y}) is not inside the non-absorbing region"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn set_k_real(&mut self, index: usize, value: f64) {
        self.k_real[index] = value;
    }

    /// Largest |k − k̄| / k̄ over trainable cells, k̄ the trainable mean.
    pub fn max_relative_deviation(&self) -> f64 {
        let vals: Vec<f64> = self
            .k_real
            .iter()
            .zip(&self.trainable)
            .filter(|(_, &t)| t)
            .map(|(&k, _)| k)
            .collect();
        if vals.is_empty() {
            return 0.0;
        }
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        vals.iter().map(|k| (k - mean).abs() / mean).fold(0.0, f64::max)
    }
}
