//! Gaussian emitter/receiver profiles.
//!
//! Each transducer has the normalised profile
//! `β(r) = exp(−‖r − rᵢ‖² / 2σ²) / (2πσ²)`, sampled at cell centres.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::GridGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Emitter,
    Receiver,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransducerArray {
    centers: Vec<(f64, f64)>,
    sigma: f64,
    role: Role,
}

impl TransducerArray {
    pub fn new(centers: Vec<(f64, f64)>, sigma: f64, role: Role) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("transducer sigma must be positive, got {sigma}")));
        }
        if centers.iter().any(|&(x, y)| !(x.is_finite() && y.is_finite())) {
            return Err(Error::NonFinite("transducer centre"));
        }
        Ok(Self {
            centers,
            sigma,
            role,
        })
    }

    pub fn centers(&self) -> &[(f64, f64)] {
        &self.centers
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Same positions and width, opposite role. Used to run the system in reverse.
    pub fn with_role(&self, role: Role) -> Self {
        Self {
            role,
            ..self.clone()
        }
    }

    /// Samples every profile on `geometry`.
    pub fn sample(&self, geometry: &GridGeometry) -> Result<SampledTransducers> {
        let profiles = (0..self.len())
            .map(|i| gaussian_profile(self, i, geometry))
            .collect::<Result<_>>()?;
        Ok(SampledTransducers {
            array: self.clone(),
            geometry: *geometry,
            profiles,
        })
    }
}

/// Discretised Gaussian of transducer `index`, one value per cell.
pub fn gaussian_profile(array: &TransducerArray, index: usize, geometry: &GridGeometry) -> Result<Vec<f64>> {
    let &(cx, cy) = array
        .centers
        .get(index)
        .ok_or(Error::IndexOutOfRange {
            index,
            len: array.len(),
        })?;
    if !geometry.contains_point(cx, cy) {
        return Err(Error::invalid(format!(
            "transducer {index} at ({cx}, {cy}) lies outside the grid"
        )));
    }
    let two_sigma_sq = 2.0 * array.sigma * array.sigma;
    let peak = 1.0 / (PI * two_sigma_sq);
    Ok(geometry
        .cells()
        .map(|(i, j)| {
            let (x, y) = geometry.position(i, j);
            let d2 = (x - cx).powi(2) + (y - cy).powi(2);
            peak * (-d2 / two_sigma_sq).exp()
        })
        .collect())
}

/// A transducer array with its profiles sampled on a specific grid.
#[derive(Debug, Clone)]
pub struct SampledTransducers {
    array: TransducerArray,
    geometry: GridGeometry,
    profiles: Vec<Vec<f64>>,
}

impl SampledTransducers {
    pub fn array(&self) -> &TransducerArray {
        &self.array
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profile(&self, index: usize) -> &[f64] {
        &self.profiles[index]
    }

    pub fn profiles(&self) -> &[Vec<f64>] {
        &self.profiles
    }
}
