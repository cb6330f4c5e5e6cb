//! Regularized EPR states and the two collapse channels.
//!
//! An ideal EPR pair (perfect position correlation, zero total momentum) is
//! not normalizable; the minimal normalizable deformation used here is the
//! double gaussian
//!
//! ```text
//! phi(x_a, x_b) ~ exp(-(x_a - x_b)^2 / 4 sigma_c^2)
//!               * exp(-(x_a + x_b - 2 x0)^2 / 4 sigma_env^2)
//! ```
//!
//! centered at the box midpoint, with correlation width sigma_c much
//! smaller than the envelope width sigma_env.

use num_complex::Complex64;

use crate::errors::{Error, Result};
use crate::field::WaveField;
use crate::grid::GridSpec;

/// Geometry of the regularized EPR state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EPRSpec {
    pub sigma_c: f64,
    pub sigma_env: f64,
    pub grid: GridSpec,
}

impl EPRSpec {
    pub fn new(grid: GridSpec, sigma_c: f64, sigma_env: f64) -> Result<Self> {
        if grid.dim != 1 {
            return Err(Error::InvalidParameter(
                "EPR states are built on 1D-per-particle grids".into(),
            ));
        }
        if !(sigma_c > 0.0) || !(sigma_env > sigma_c) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < sigma_c < sigma_env, got {sigma_c}, {sigma_env}"
            )));
        }
        let dx = grid.dx();
        if sigma_c < 4.0 * dx {
            return Err(Error::Resolvability(format!(
                "sigma_c = {sigma_c} is below 4 cells ({})",
                4.0 * dx
            )));
        }
        if sigma_env > grid.length / 8.0 {
            return Err(Error::Resolvability(format!(
                "sigma_env = {sigma_env} exceeds box/8 ({})",
                grid.length / 8.0
            )));
        }
        Ok(EPRSpec {
            sigma_c,
            sigma_env,
            grid,
        })
    }

    /// Pearson correlation of x_a and x_b in the state:
    /// (sigma_env^2 - sigma_c^2) / (sigma_env^2 + sigma_c^2).
    pub fn position_correlation(&self) -> f64 {
        let c2 = self.sigma_c * self.sigma_c;
        let e2 = self.sigma_env * self.sigma_env;
        (e2 - c2) / (e2 + c2)
    }

    /// Closed-form purity of the reduced state, 2 r / (1 + r^2) with
    /// r = sigma_env / sigma_c (the two-gaussian Schmidt spectrum is
    /// geometric).
    pub fn reduced_purity(&self) -> f64 {
        let r = self.sigma_env / self.sigma_c;
        2.0 * r / (1.0 + r * r)
    }
}

/// Build the normalized two-particle EPR field.
pub fn make_epr(spec: &EPRSpec) -> Result<WaveField> {
    let g = spec.grid;
    let n = g.points;
    let coords = g.coords();
    let x0 = g.length / 2.0;
    let c4 = 4.0 * spec.sigma_c * spec.sigma_c;
    let e4 = 4.0 * spec.sigma_env * spec.sigma_env;
    let mut amps = Vec::with_capacity(n * n);
    for ia in 0..n {
        let xa = coords[ia];
        for ib in 0..n {
            let xb = coords[ib];
            let u = xa - xb;
            let v = xa + xb - 2.0 * x0;
            amps.push(Complex64::new((-u * u / c4 - v * v / e4).exp(), 0.0));
        }
    }
    let mut phi = WaveField::new(g, 2, amps)?;
    phi.normalize()?;
    Ok(phi)
}

/// Gaussian pointer sharpness bound: the collapsed width 1/sqrt(2 s) must
/// span at least two cells.
pub fn check_pointer_resolvable(grid: &GridSpec, s: f64) -> Result<()> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!("sharpness s must be > 0, got {s}")));
    }
    let width = 1.0 / (2.0 * s).sqrt();
    let bound = 2.0 * grid.dx();
    if width < bound {
        return Err(Error::Resolvability(format!(
            "pointer width {width} below two cells ({bound}); reduce s or refine the grid"
        )));
    }
    Ok(())
}

/// Post-position-measurement state of particle b:
/// psi_b(x_b) ~ sum_a exp(-s (x_a - q)^2) phi(x_a, x_b), normalized.
pub fn collapse_position(phi: &WaveField, q: f64, s: f64) -> Result<WaveField> {
    if phi.particle_count() != 2 {
        return Err(Error::InvalidParameter(
            "collapse needs a two-particle field".into(),
        ));
    }
    let g = *phi.grid();
    check_pointer_resolvable(&g, s)?;
    let n = g.points;
    let coords = g.coords();
    let dx = g.dx();
    let mut amps = vec![Complex64::default(); n];
    for ia in 0..n {
        let w = (-s * (coords[ia] - q) * (coords[ia] - q)).exp();
        if w == 0.0 {
            continue;
        }
        let row = &phi.amplitudes()[ia * n..(ia + 1) * n];
        for (out, z) in amps.iter_mut().zip(row) {
            *out += w * z;
        }
    }
    for z in &mut amps {
        *z *= dx;
    }
    let mut psi = WaveField::new(g, 1, amps)?;
    let norm = psi.norm();
    if norm < 1e-12 {
        return Err(Error::VanishingNorm { norm });
    }
    psi.normalize()?;
    Ok(psi)
}

/// Post-momentum-measurement state of particle b:
/// psi_b(x_b) ~ sum_a exp(-i p x_a) phi(x_a, x_b), normalized.
/// p must be commensurate with the grid (p = 2 pi m / L).
pub fn collapse_momentum(phi: &WaveField, p: f64) -> Result<WaveField> {
    if phi.particle_count() != 2 {
        return Err(Error::InvalidParameter(
            "collapse needs a two-particle field".into(),
        ));
    }
    let g = *phi.grid();
    let base = 2.0 * std::f64::consts::PI / g.length;
    let mode = p / base;
    if (mode - mode.round()).abs() > 1e-9 || mode.round().abs() >= (g.points / 2) as f64 {
        return Err(Error::InvalidParameter(format!(
            "momentum {p} is not a resolved grid momentum (mode {mode})"
        )));
    }
    let n = g.points;
    let coords = g.coords();
    let dx = g.dx();
    let mut amps = vec![Complex64::default(); n];
    for ia in 0..n {
        let w = Complex64::from_polar(1.0, -p * coords[ia]);
        let row = &phi.amplitudes()[ia * n..(ia + 1) * n];
        for (out, z) in amps.iter_mut().zip(row) {
            *out += w * z;
        }
    }
    for z in &mut amps {
        *z *= dx;
    }
    let mut psi = WaveField::new(g, 1, amps)?;
    let norm = psi.norm();
    if norm < 1e-12 {
        return Err(Error::VanishingNorm { norm });
    }
    psi.normalize()?;
    Ok(psi)
}

/// Mean momentum of a 1D field, sum k |psi_hat(k)|^2 / sum |psi_hat|^2.
pub fn mean_momentum(psi: &WaveField) -> Result<f64> {
    if psi.axes() != 1 {
        return Err(Error::InvalidParameter("mean_momentum expects one axis".into()));
    }
    let shape = psi.shape();
    let mut data = psi.amplitudes().to_vec();
    crate::spectral::fft_all(&mut data, &shape, false);
    let ks = psi.grid().wavenumbers();
    let mut num = 0.0;
    let mut den = 0.0;
    for (z, &k) in data.iter().zip(&ks) {
        let w = z.norm_sqr();
        num += k * w;
        den += w;
    }
    Ok(num / den)
}

/// Total momentum <p_a + p_b> of a two-particle field.
pub fn mean_total_momentum(phi: &WaveField) -> Result<f64> {
    if phi.particle_count() != 2 {
        return Err(Error::InvalidParameter(
            "mean_total_momentum needs a two-particle field".into(),
        ));
    }
    let shape = phi.shape();
    let mut data = phi.amplitudes().to_vec();
    crate::spectral::fft_all(&mut data, &shape, false);
    let ks = phi.grid().wavenumbers();
    let n = phi.grid().points;
    let mut num = 0.0;
    let mut den = 0.0;
    for ia in 0..n {
        for ib in 0..n {
            let w = data[ia * n + ib].norm_sqr();
            num += (ks[ia] + ks[ib]) * w;
            den += w;
        }
    }
    Ok(num / den)
}
