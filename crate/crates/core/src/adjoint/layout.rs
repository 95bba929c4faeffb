//! Geometry of the planar MVM: a column of emitters on the left, a column of
//! receivers on the right, and a trainable rectangle between them, all
//! surrounded by the absorbing band.

use crate::error::{Error, Result};
use crate::grid::GridGeometry;
use crate::medium::MediumMap;
use crate::transducer::{Role, SampledTransducers, TransducerArray};
use crate::K0;

#[derive(Debug, Clone, PartialEq)]
pub struct MediumLayout {
    /// Grid spacing (wavelengths).
    pub spacing: f64,
    pub band_cells: usize,
    /// Peak imaginary wavenumber in units of k₀.
    pub max_imag_factor: f64,
    pub emitters: usize,
    pub receivers: usize,
    /// Distance between neighbouring transducers in a column.
    pub transducer_pitch: f64,
    pub sigma: f64,
    /// Trainable extent along x (propagation direction).
    pub trainable_width: f64,
    /// Trainable extent along y.
    pub trainable_height: f64,
    /// Clearance between a transducer column and the absorbing band.
    pub band_margin: f64,
    /// Clearance between a transducer column and the trainable rectangle.
    pub gap: f64,
    /// Background wavenumber.
    pub k_background: f64,
}

impl Default for MediumLayout {
    fn default() -> Self {
        Self {
            spacing: 0.1,
            band_cells: 10,
            max_imag_factor: 0.5,
            emitters: 4,
            receivers: 4,
            transducer_pitch: 2.2,
            sigma: 0.5,
            trainable_width: 4.0,
            trainable_height: 6.0,
            band_margin: 1.5,
            gap: 1.0,
            k_background: K0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MediumSetup {
    pub medium: MediumMap,
    pub emitters: SampledTransducers,
    pub receivers: SampledTransducers,
}

fn cells(length: f64, h: f64) -> usize {
    (length / h).round() as usize
}

fn column(count: usize, pitch: f64, x: f64, y_center: f64) -> Vec<(f64, f64)> {
    let span = (count.saturating_sub(1)) as f64 * pitch;
    (0..count)
        .map(|n| (x, y_center - span / 2.0 + n as f64 * pitch))
        .collect()
}

impl MediumLayout {
    pub fn build(&self) -> Result<MediumSetup> {
        if self.emitters == 0 || self.receivers == 0 {
            return Err(Error::invalid("layout needs at least one emitter and one receiver"));
        }
        for (name, v) in [
            ("spacing", self.spacing),
            ("transducer_pitch", self.transducer_pitch),
            ("trainable_width", self.trainable_width),
            ("trainable_height", self.trainable_height),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("layout {name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("band_margin", self.band_margin), ("gap", self.gap)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("layout {name} must be non-negative, got {v}")));
            }
        }
        let h = self.spacing;
        let edge = self.band_cells + 1;
        let margin = cells(self.band_margin, h).max(1);
        let gap = cells(self.gap, h);
        let width = cells(self.trainable_width, h).max(1);
        let height = cells(self.trainable_height, h).max(1);

        let emitter_i = edge + margin;
        let train_i0 = emitter_i + gap;
        let train_i1 = train_i0 + width;
        let receiver_i = train_i1 + gap;
        let nx = receiver_i + margin + edge + 1;

        let n_max = self.emitters.max(self.receivers);
        let span = cells((n_max - 1) as f64 * self.transducer_pitch, h).max(height);
        let ny = 2 * (edge + margin) + span + 1;
        let geometry = GridGeometry::new(nx, ny, h)?;

        let y_mid = (ny - 1) as f64 * h / 2.0;
        let j0 = (ny - height) / 2;
        let emitter_x = emitter_i as f64 * h;
        let receiver_x = receiver_i as f64 * h;
        let emitters = TransducerArray::new(
            column(self.emitters, self.transducer_pitch, emitter_x, y_mid),
            self.sigma,
            Role::Emitter,
        )?;
        let receivers = TransducerArray::new(
            column(self.receivers, self.transducer_pitch, receiver_x, y_mid),
            self.sigma,
            Role::Receiver,
        )?;

        let medium = MediumMap::uniform(geometry, self.k_background)?
            .with_trainable_rect(train_i0..train_i1, j0..j0 + height)
            .apply_absorbing_profile(self.band_cells, self.max_imag_factor * K0)?
            .excluding_transducers(&emitters, 2.0 * self.sigma)
            .excluding_transducers(&receivers, 2.0 * self.sigma);
        medium.check_transducers(&emitters)?;
        medium.check_transducers(&receivers)?;

        Ok(MediumSetup {
            emitters: emitters.sample(&geometry)?,
            receivers: receivers.sample(&geometry)?,
            medium,
        })
    }
}
