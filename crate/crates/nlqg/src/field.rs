//! Complex wave fields on periodic grids.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::errors::{Error, Result};
use crate::grid::GridSpec;
use crate::spectral;

/// A one- or two-particle wavefunction sampled on a periodic grid.
///
/// Amplitudes are stored row-major over axes; for a two-particle field the
/// layout is `[i_a * points + i_b]` with axis 0 the a-particle coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: GridSpec,
    particle_count: usize,
    amplitudes: Vec<Complex64>,
}

/// Selects which particle's coordinates a differential operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParticleSel {
    One,
    Two,
    All,
}

impl WaveField {
    pub fn new(grid: GridSpec, particle_count: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if particle_count != 1 && particle_count != 2 {
            return Err(Error::InvalidParameter(format!(
                "particle_count must be 1 or 2, got {particle_count}"
            )));
        }
        if particle_count == 2 && grid.dim != 1 {
            return Err(Error::InvalidParameter(
                "two-particle fields are supported on 1D grids only".into(),
            ));
        }
        if amplitudes.len() != grid.node_count(particle_count) {
            return Err(Error::InvalidParameter(format!(
                "amplitude array has {} values, grid expects {}",
                amplitudes.len(),
                grid.node_count(particle_count)
            )));
        }
        if !amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite("field amplitudes"));
        }
        Ok(WaveField {
            grid,
            particle_count,
            amplitudes,
        })
    }

    pub fn zeros(grid: GridSpec, particle_count: usize) -> Result<Self> {
        Self::new(
            grid,
            particle_count,
            vec![Complex64::default(); grid.node_count(particle_count)],
        )
    }

    /// Build a one-particle field from a function of the node coordinates.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let coords = grid.coords();
        let amplitudes = match grid.dim {
            1 => coords.iter().map(|&x| f(&[x])).collect(),
            2 => {
                let mut v = Vec::with_capacity(grid.node_count(1));
                for &x0 in &coords {
                    for &x1 in &coords {
                        v.push(f(&[x0, x1]));
                    }
                }
                v
            }
            _ => unreachable!(),
        };
        Self::new(grid, 1, amplitudes)
    }

    /// Normalized gaussian packet, one value of center/width/wavenumber per axis.
    pub fn gaussian(grid: GridSpec, centers: &[f64], sigmas: &[f64], ks: &[f64]) -> Result<Self> {
        let axes = grid.axes(1);
        if centers.len() != axes || sigmas.len() != axes || ks.len() != axes {
            return Err(Error::InvalidParameter(
                "gaussian needs one center, sigma and wavenumber per axis".into(),
            ));
        }
        if sigmas.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidParameter("gaussian sigma must be > 0".into()));
        }
        let mut field = Self::from_fn(grid, |x| {
            let mut exponent = Complex64::default();
            for a in 0..x.len() {
                let d = x[a] - centers[a];
                exponent += Complex64::new(-d * d / (4.0 * sigmas[a] * sigmas[a]), ks[a] * x[a]);
            }
            exponent.exp()
        })?;
        field.normalize()?;
        Ok(field)
    }

    /// Commensurate plane wave e^{i k.x}/sqrt(V), one integer mode per axis.
    pub fn plane_wave(grid: GridSpec, modes: &[i64]) -> Result<Self> {
        let axes = grid.axes(1);
        if modes.len() != axes {
            return Err(Error::InvalidParameter(
                "plane_wave needs one mode per axis".into(),
            ));
        }
        let base = 2.0 * std::f64::consts::PI / grid.length;
        let volume = grid.length.powi(axes as i32);
        let amp = 1.0 / volume.sqrt();
        Self::from_fn(grid, |x| {
            let phase: f64 = x
                .iter()
                .enumerate()
                .map(|(a, &xa)| base * modes[a] as f64 * xa)
                .sum();
            Complex64::from_polar(amp, phase)
        })
    }

    /// Tensor product of two one-particle 1D fields.
    pub fn product(psi_a: &WaveField, psi_b: &WaveField) -> Result<Self> {
        if psi_a.grid != psi_b.grid || psi_a.particle_count != 1 || psi_b.particle_count != 1 {
            return Err(Error::GridMismatch);
        }
        if psi_a.grid.dim != 1 {
            return Err(Error::InvalidParameter(
                "two-particle fields are supported on 1D grids only".into(),
            ));
        }
        let n = psi_a.grid.points;
        let mut amplitudes = Vec::with_capacity(n * n);
        for ia in 0..n {
            for ib in 0..n {
                amplitudes.push(psi_a.amplitudes[ia] * psi_b.amplitudes[ib]);
            }
        }
        Self::new(psi_a.grid, 2, amplitudes)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn particle_count(&self) -> usize {
        self.particle_count
    }

    pub fn axes(&self) -> usize {
        self.grid.axes(self.particle_count)
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.grid.points; self.axes()]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn cell_volume(&self) -> f64 {
        self.grid.cell_volume(self.particle_count)
    }

    /// L2 norm with the cell-volume quadrature weight.
    pub fn norm(&self) -> f64 {
        let s: f64 = self.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        (s * self.cell_volume()).sqrt()
    }

    pub fn normalize(&mut self) -> Result<f64> {
        let n = self.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::VanishingNorm { norm: n });
        }
        let inv = 1.0 / n;
        for z in &mut self.amplitudes {
            *z *= inv;
        }
        Ok(n)
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > tol {
            return Err(Error::Unnormalized { norm: n });
        }
        Ok(())
    }

    /// Probability density |psi|^2 at every node.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Spectral derivative along the given axis.
    pub fn gradient(&self, axis: usize) -> Result<WaveField> {
        let axes = self.axes();
        if axis >= axes {
            return Err(Error::AxisOutOfRange { axis, axes });
        }
        let ks = self.grid.wavenumbers();
        let out = spectral::derivative_axis(&self.amplitudes, &self.shape(), &ks, axis);
        WaveField::new(self.grid, self.particle_count, out)
    }

    /// Spectral Laplacian over the coordinates of the selected particle(s).
    pub fn laplacian(&self, sel: ParticleSel) -> Result<WaveField> {
        let axes = self.particle_axes(sel)?;
        let ks = self.grid.wavenumbers();
        let out = spectral::laplacian_axes(&self.amplitudes, &self.shape(), &ks, &axes);
        WaveField::new(self.grid, self.particle_count, out)
    }

    /// The array axes belonging to one particle (or all of them).
    pub fn particle_axes(&self, sel: ParticleSel) -> Result<Vec<usize>> {
        let total = self.axes();
        match sel {
            ParticleSel::All => Ok((0..total).collect()),
            ParticleSel::One => Ok((0..self.grid.dim).collect()),
            ParticleSel::Two => {
                if self.particle_count != 2 {
                    return Err(Error::InvalidParameter(
                        "particle selector 2 on a one-particle field".into(),
                    ));
                }
                Ok((self.grid.dim..total).collect())
            }
        }
    }

    /// Mean position along one axis, computed on the normalized density.
    pub fn mean_x(&self, axis: usize) -> Result<f64> {
        self.moment(axis, |x, _| x)
    }

    /// Position variance along one axis, computed on the normalized density.
    pub fn var_x(&self, axis: usize) -> Result<f64> {
        let m = self.mean_x(axis)?;
        self.moment(axis, move |x, _| (x - m) * (x - m))
    }

    fn moment(&self, axis: usize, f: impl Fn(f64, usize) -> f64) -> Result<f64> {
        let axes = self.axes();
        if axis >= axes {
            return Err(Error::AxisOutOfRange { axis, axes });
        }
        let n = self.grid.points;
        let dx = self.grid.dx();
        let stride = n.pow((axes - 1 - axis) as u32);
        let mut acc = 0.0;
        let mut total = 0.0;
        for (idx, z) in self.amplitudes.iter().enumerate() {
            let i = (idx / stride) % n;
            let w = z.norm_sqr();
            acc += f(i as f64 * dx, i) * w;
            total += w;
        }
        Ok(acc / total)
    }

    /// Pointwise linear combination self + c * other (same grid).
    pub fn axpy(&mut self, c: Complex64, other: &WaveField) -> Result<()> {
        if self.grid != other.grid || self.particle_count != other.particle_count {
            return Err(Error::GridMismatch);
        }
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += c * b;
        }
        Ok(())
    }

    /// Checkpoint layout: magic, version, dim, particle_count, points,
    /// length, then re/im f64 pairs in row-major node order, all
    /// little-endian.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(b"NLQF")?;
        f.write_all(&1u32.to_le_bytes())?;
        f.write_all(&(self.grid.dim as u32).to_le_bytes())?;
        f.write_all(&(self.particle_count as u32).to_le_bytes())?;
        f.write_all(&(self.grid.points as u64).to_le_bytes())?;
        f.write_all(&self.grid.length.to_le_bytes())?;
        for z in &self.amplitudes {
            f.write_all(&z.re.to_le_bytes())?;
            f.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<WaveField> {
        let mut f = std::fs::File::open(path)?;
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)?;
        if &magic != b"NLQF" {
            return Err(Error::Format("bad magic in field checkpoint".into()));
        }
        let mut u32buf = [0u8; 4];
        f.read_exact(&mut u32buf)?;
        let version = u32::from_le_bytes(u32buf);
        if version != 1 {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        f.read_exact(&mut u32buf)?;
        let dim = u32::from_le_bytes(u32buf) as usize;
        f.read_exact(&mut u32buf)?;
        let particle_count = u32::from_le_bytes(u32buf) as usize;
        let mut u64buf = [0u8; 8];
        f.read_exact(&mut u64buf)?;
        let points = u64::from_le_bytes(u64buf) as usize;
        f.read_exact(&mut u64buf)?;
        let length = f64::from_le_bytes(u64buf);
        let grid = GridSpec::new(dim, points, length)?;
        let count = grid.node_count(particle_count);
        let mut amplitudes = Vec::with_capacity(count);
        for _ in 0..count {
            f.read_exact(&mut u64buf)?;
            let re = f64::from_le_bytes(u64buf);
            f.read_exact(&mut u64buf)?;
            let im = f64::from_le_bytes(u64buf);
            amplitudes.push(Complex64::new(re, im));
        }
        WaveField::new(grid, particle_count, amplitudes)
    }

    /// CSV layout: one node per row, same ordering as the binary format.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("re,im\n");
        for z in &self.amplitudes {
            out.push_str(&format!("{:.16e},{:.16e}\n", z.re, z.im));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Discretized inner product ∫ conj(f) g with the first slot conjugated.
pub fn inner_product(f: &WaveField, g: &WaveField) -> Result<Complex64> {
    if f.grid != g.grid || f.particle_count != g.particle_count {
        return Err(Error::GridMismatch);
    }
    let mut acc = Complex64::default();
    for (a, b) in f.amplitudes.iter().zip(&g.amplitudes) {
        acc += a.conj() * b;
    }
    Ok(acc * f.cell_volume())
}

/// |<f,g>|^2 / (|f|^2 |g|^2), the overlap fidelity of two states.
pub fn fidelity(f: &WaveField, g: &WaveField) -> Result<f64> {
    let ip = inner_product(f, g)?;
    let nf = f.norm();
    let ng = g.norm();
    Ok(ip.norm_sqr() / (nf * nf * ng * ng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(1, 128, 16.0).unwrap()
    }

    #[test]
    fn plane_wave_gradient_is_ik() {
        let g = grid();
        let f = WaveField::plane_wave(g, &[3]).unwrap();
        let d = f.gradient(0).unwrap();
        let k = 2.0 * std::f64::consts::PI * 3.0 / g.length;
        let mut max_err: f64 = 0.0;
        for (a, b) in d.amplitudes().iter().zip(f.amplitudes()) {
            max_err = max_err.max((a - Complex64::new(0.0, k) * b).norm());
        }
        assert!(max_err <= 1e-12, "max_err = {max_err:e}");
    }

    #[test]
    fn constant_field_gradient_is_zero() {
        let g = grid();
        let f = WaveField::plane_wave(g, &[0]).unwrap();
        let d = f.gradient(0).unwrap();
        assert!(d.amplitudes().iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn gaussian_gradient_matches_analytic() {
        // d/dx e^{-x^2/2} = -x e^{-x^2/2}; box wide enough for 1e-14 tails
        let g = GridSpec::new(1, 256, 32.0).unwrap();
        let x0 = 16.0;
        let f = WaveField::from_fn(g, |x| {
            Complex64::new((-(x[0] - x0) * (x[0] - x0) / 2.0).exp(), 0.0)
        })
        .unwrap();
        let d = f.gradient(0).unwrap();
        let coords = g.coords();
        let mut max_err: f64 = 0.0;
        for (i, v) in d.amplitudes().iter().enumerate() {
            let x = coords[i] - x0;
            let expect = -x * (-x * x / 2.0).exp();
            max_err = max_err.max((v.re - expect).abs().max(v.im.abs()));
        }
        assert!(max_err <= 1e-10, "max_err = {max_err:e}");
    }

    #[test]
    fn gaussian_laplacian_matches_analytic() {
        let g = GridSpec::new(1, 256, 32.0).unwrap();
        let x0 = 16.0;
        let f = WaveField::from_fn(g, |x| {
            Complex64::new((-(x[0] - x0) * (x[0] - x0) / 2.0).exp(), 0.0)
        })
        .unwrap();
        let l = f.laplacian(ParticleSel::All).unwrap();
        let coords = g.coords();
        let mut max_err: f64 = 0.0;
        for (i, v) in l.amplitudes().iter().enumerate() {
            let x = coords[i] - x0;
            let expect = (x * x - 1.0) * (-x * x / 2.0).exp();
            max_err = max_err.max((v.re - expect).abs().max(v.im.abs()));
        }
        assert!(max_err <= 1e-10, "max_err = {max_err:e}");
    }

    #[test]
    fn plane_wave_laplacian_is_minus_k2() {
        let g = grid();
        let f = WaveField::plane_wave(g, &[5]).unwrap();
        let l = f.laplacian(ParticleSel::All).unwrap();
        let k = 2.0 * std::f64::consts::PI * 5.0 / g.length;
        for (a, b) in l.amplitudes().iter().zip(f.amplitudes()) {
            assert!((a + k * k * b).norm() < 1e-10);
        }
    }

    #[test]
    fn full_laplacian_on_2d_gaussian_matches_gradient_norm() {
        // <psi, lap psi> = -sum_axes int |d_axis psi|^2
        let g = GridSpec::new(2, 64, 20.0).unwrap();
        let f = WaveField::gaussian(g, &[10.0, 10.0], &[1.1, 0.8], &[0.5, -0.3]).unwrap();
        let lap = f.laplacian(ParticleSel::All).unwrap();
        let lhs = inner_product(&f, &lap).unwrap().re;
        let mut rhs = 0.0;
        for axis in 0..2 {
            let d = f.gradient(axis).unwrap();
            rhs -= inner_product(&d, &d).unwrap().re;
        }
        assert!((lhs - rhs).abs() < 1e-10, "{lhs} vs {rhs}");
    }

    #[test]
    fn two_particle_partial_laplacian_factorizes() {
        let g = grid();
        let pa = WaveField::gaussian(g, &[8.0], &[1.0], &[0.0]).unwrap();
        let pb = WaveField::gaussian(g, &[6.0], &[1.5], &[0.0]).unwrap();
        let prod = WaveField::product(&pa, &pb).unwrap();
        let l1 = prod.laplacian(ParticleSel::One).unwrap();
        let la = pa.laplacian(ParticleSel::All).unwrap();
        let expect = WaveField::product(&la, &pb).unwrap();
        let mut max_err: f64 = 0.0;
        for (a, b) in l1.amplitudes().iter().zip(expect.amplitudes()) {
            max_err = max_err.max((a - b).norm());
        }
        assert!(max_err < 1e-10, "max_err = {max_err:e}");
    }

    #[test]
    fn inner_product_conventions() {
        let g = grid();
        let f = WaveField::gaussian(g, &[8.0], &[1.0], &[1.2]).unwrap();
        let w = WaveField::plane_wave(g, &[2]).unwrap();
        // normalized
        assert!((inner_product(&f, &f).unwrap().re - 1.0).abs() < 1e-12);
        // orthogonal commensurate plane waves
        let w2 = WaveField::plane_wave(g, &[3]).unwrap();
        assert!(inner_product(&w, &w2).unwrap().norm() < 1e-12);
        // conjugate symmetry
        let a = inner_product(&f, &w).unwrap();
        let b = inner_product(&w, &f).unwrap();
        assert!((a - b.conj()).norm() < 1e-14);
    }

    #[test]
    fn axis_out_of_range_is_an_error() {
        let g = grid();
        let f = WaveField::plane_wave(g, &[1]).unwrap();
        assert!(matches!(
            f.gradient(1),
            Err(Error::AxisOutOfRange { axis: 1, axes: 1 })
        ));
    }

    #[test]
    fn rejects_non_finite_amplitudes() {
        let g = grid();
        let mut amps = vec![Complex64::new(1.0, 0.0); g.node_count(1)];
        amps[3] = Complex64::new(f64::NAN, 0.0);
        assert!(WaveField::new(g, 1, amps).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let g = grid();
        let f = WaveField::gaussian(g, &[8.0], &[1.0], &[0.7]).unwrap();
        let dir = std::env::temp_dir().join("nlqg_field_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.bin");
        f.write_binary(&path).unwrap();
        let back = WaveField::read_binary(&path).unwrap();
        assert_eq!(f, back);
    }
}
