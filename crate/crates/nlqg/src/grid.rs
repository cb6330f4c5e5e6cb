//! Periodic spatial grids.

use serde::{Deserialize, Serialize};

use crate::errors::{Error, Result};

/// A periodic box sampled uniformly along each axis.
///
/// `dim` is the spatial dimension of a single particle (1 or 2). Two-particle
/// fields live on the tensor square of a 1D grid, so the number of array axes
/// of a field is `dim * particle_count`. Power-of-two `points` keeps the
/// transforms fast but is not enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub points: usize,
    pub length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!(
                "dim must be 1 or 2, got {dim}"
            )));
        }
        if points < 8 {
            return Err(Error::InvalidGrid(format!(
                "points must be >= 8 per axis, got {points}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        Ok(GridSpec {
            dim,
            points,
            length,
        })
    }

    /// Sample spacing along every axis.
    pub fn dx(&self) -> f64 {
        self.length / self.points as f64
    }

    /// Node coordinates along one axis: x_i = i * dx, i = 0..points.
    pub fn coords(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.points).map(|i| i as f64 * dx).collect()
    }

    /// Discrete wavenumbers in FFT ordering: k_j = 2*pi*j/L for
    /// j = 0..N/2, then the negative branch.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points as i64;
        let base = 2.0 * std::f64::consts::PI / self.length;
        (0..n)
            .map(|j| {
                let j = if j > n / 2 { j - n } else { j };
                base * j as f64
            })
            .collect()
    }

    /// Largest resolved |k| (Nyquist) along one axis.
    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI * self.points as f64 / self.length
    }

    pub fn axes(&self, particle_count: usize) -> usize {
        self.dim * particle_count
    }

    pub fn node_count(&self, particle_count: usize) -> usize {
        self.points.pow(self.axes(particle_count) as u32)
    }

    /// Quadrature weight per node: dx^axes (exact periodic trapezoid rule).
    pub fn cell_volume(&self, particle_count: usize) -> f64 {
        self.dx().powi(self.axes(particle_count) as i32)
    }
}
