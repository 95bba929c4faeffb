//! Uniform 2D grids.
//!
//! Lengths are in units of the nominal free-space wavelength. Cell `(i, j)`
//! sits at position `r = (i·h, j·h)` and is stored at flat index `j·nx + i`
//! (x varies fastest). The outermost ring of cells is the Dirichlet boundary.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    nx: usize,
    ny: usize,
    h: f64,
}

impl GridGeometry {
    pub fn new(nx: usize, ny: usize, h: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::invalid(format!(
                "grid must be at least 3x3, got {nx}x{ny}"
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("grid spacing must be positive, got {h}")));
        }
        Ok(Self { nx, ny, h })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn cell(&self, index: usize) -> (usize, usize) {
        (index % self.nx, index / self.nx)
    }

    pub fn position(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.h, j as f64 * self.h)
    }

    /// Physical extent `((nx−1)·h, (ny−1)·h)` covered by cell centres.
    pub fn extent(&self) -> (f64, f64) {
        ((self.nx - 1) as f64 * self.h, (self.ny - 1) as f64 * self.h)
    }

    /// Number of cells between `(i, j)` and the outer edge; 0 on the boundary ring.
    pub fn ring_depth(&self, i: usize, j: usize) -> usize {
        i.min(j).min(self.nx - 1 - i).min(self.ny - 1 - j)
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        self.ring_depth(i, j) == 0
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        let (ex, ey) = self.extent();
        (0.0..=ex).contains(&x) && (0.0..=ey).contains(&y)
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (i, j)))
    }

    pub(crate) fn check_same(&self, other: &GridGeometry, context: &'static str) -> Result<()> {
        if self != other {
            return Err(Error::InvalidArgument(format!(
                "{context}: grid geometry mismatch ({}x{} h={} vs {}x{} h={})",
                self.nx, self.ny, self.h, other.nx, other.ny, other.h
            )));
        }
        Ok(())
    }
}

/// Complex scalar field sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    geometry: GridGeometry,
    values: Vec<Complex64>,
}

impl FieldGrid {
    pub fn new(geometry: GridGeometry, values: Vec<Complex64>) -> Result<Self> {
        check_len("FieldGrid::new", geometry.len(), values.len())?;
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("FieldGrid"));
        }
        Ok(Self { geometry, values })
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        Self {
            geometry,
            values: vec![Complex64::new(0.0, 0.0); geometry.len()],
        }
    }

    pub fn from_fn(geometry: GridGeometry, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let values = geometry.cells().map(|(i, j)| f(i, j)).collect();
        Self { geometry, values }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.geometry.index(i, j)]
    }

    pub fn conj(&self) -> Self {
        Self {
            geometry: self.geometry,
            values: self.values.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Debug dump: header `i,j,re,im`, one row per cell.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io_err = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
        w.write_record(["i", "j", "re", "im"]).map_err(io_err)?;
        for ((i, j), z) in self.geometry.cells().zip(&self.values) {
            w.write_record([
                i.to_string(),
                j.to_string(),
                crate::io::fmt_f64(z.re),
                crate::io::fmt_f64(z.im),
            ])
            .map_err(io_err)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))?;
        Ok(())
    }
}
