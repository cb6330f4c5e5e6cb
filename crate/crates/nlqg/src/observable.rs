//! Self-adjoint observables given as real multipliers.

use num_complex::Complex64;

use crate::errors::{Error, Result};
use crate::field::WaveField;
use crate::grid::GridSpec;
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableKind {
    /// Real function of position, applied pointwise.
    PositionMultiplier,
    /// Real function of the discrete wavenumbers, applied in Fourier space.
    MomentumMultiplier,
}

/// A real multiplier in position or momentum space. Reality of the samples
/// guarantees self-adjointness with respect to the grid inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub kind: ObservableKind,
    samples: Vec<f64>,
    grid: GridSpec,
    particle_count: usize,
}

impl Observable {
    pub fn new(
        kind: ObservableKind,
        grid: GridSpec,
        particle_count: usize,
        samples: Vec<f64>,
    ) -> Result<Self> {
        if samples.len() != grid.node_count(particle_count) {
            return Err(Error::InvalidParameter(format!(
                "observable has {} samples, grid expects {}",
                samples.len(),
                grid.node_count(particle_count)
            )));
        }
        if !samples.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("observable samples"));
        }
        Ok(Observable {
            kind,
            samples,
            grid,
            particle_count,
        })
    }

    /// Position multiplier from a function of the node coordinates.
    pub fn position(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let samples = tabulate(&grid, 1, &grid.coords(), &f);
        Self::new(ObservableKind::PositionMultiplier, grid, 1, samples)
    }

    /// Momentum multiplier from a function of the wavenumber tuple.
    pub fn momentum(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let samples = tabulate(&grid, 1, &grid.wavenumbers(), &f);
        Self::new(ObservableKind::MomentumMultiplier, grid, 1, samples)
    }

    /// The coordinate along one axis.
    pub fn x(grid: GridSpec, axis: usize) -> Result<Self> {
        Self::position(grid, |x| x[axis])
    }

    /// Squared coordinate along one axis.
    pub fn x2(grid: GridSpec, axis: usize) -> Result<Self> {
        Self::position(grid, |x| x[axis] * x[axis])
    }

    /// cos(2 pi x / L) along one axis: bounded, smooth, commensurate.
    pub fn cos_x(grid: GridSpec, axis: usize) -> Result<Self> {
        let k = 2.0 * std::f64::consts::PI / grid.length;
        Self::position(grid, move |x| (k * x[axis]).cos())
    }

    /// |k|^2, twice the kinetic energy density in hbar = m = 1 units.
    pub fn k2(grid: GridSpec) -> Result<Self> {
        Self::momentum(grid, |k| k.iter().map(|v| v * v).sum())
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// B applied to a field: pointwise for position multipliers, via a
    /// round trip through Fourier space for momentum multipliers.
    pub fn apply(&self, field: &WaveField) -> Result<WaveField> {
        self.check_compatible(field)?;
        match self.kind {
            ObservableKind::PositionMultiplier => {
                let amps: Vec<Complex64> = field
                    .amplitudes()
                    .iter()
                    .zip(&self.samples)
                    .map(|(z, &b)| z * b)
                    .collect();
                WaveField::new(*field.grid(), field.particle_count(), amps)
            }
            ObservableKind::MomentumMultiplier => {
                let shape = field.shape();
                let mut data = field.amplitudes().to_vec();
                spectral::fft_all(&mut data, &shape, false);
                for (z, &b) in data.iter_mut().zip(&self.samples) {
                    *z *= b;
                }
                spectral::fft_all(&mut data, &shape, true);
                WaveField::new(*field.grid(), field.particle_count(), data)
            }
        }
    }

    /// <B> on a normalized field (the norm check is the caller's contract).
    pub fn expectation(&self, field: &WaveField) -> Result<f64> {
        self.check_compatible(field)?;
        field.check_normalized(1e-8)?;
        match self.kind {
            ObservableKind::PositionMultiplier => {
                let acc: f64 = field
                    .amplitudes()
                    .iter()
                    .zip(&self.samples)
                    .map(|(z, &b)| b * z.norm_sqr())
                    .sum();
                Ok(acc * field.cell_volume())
            }
            ObservableKind::MomentumMultiplier => {
                let shape = field.shape();
                let mut data = field.amplitudes().to_vec();
                spectral::fft_all(&mut data, &shape, false);
                let n_total: usize = shape.iter().product();
                // Parseval: sum |psi_hat|^2 = N_total * sum |psi|^2
                let w = field.cell_volume() / n_total as f64;
                let acc: f64 = data
                    .iter()
                    .zip(&self.samples)
                    .map(|(z, &b)| b * z.norm_sqr())
                    .sum();
                Ok(acc * w)
            }
        }
    }

    fn check_compatible(&self, field: &WaveField) -> Result<()> {
        if *field.grid() != self.grid || field.particle_count() != self.particle_count {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

fn tabulate(
    grid: &GridSpec,
    particle_count: usize,
    axis_values: &[f64],
    f: &impl Fn(&[f64]) -> f64,
) -> Vec<f64> {
    let axes = grid.axes(particle_count);
    match axes {
        1 => axis_values.iter().map(|&x| f(&[x])).collect(),
        2 => {
            let mut v = Vec::with_capacity(axis_values.len() * axis_values.len());
            for &x0 in axis_values {
                for &x1 in axis_values {
                    v.push(f(&[x0, x1]));
                }
            }
            v
        }
        _ => unreachable!(),
    }
}
