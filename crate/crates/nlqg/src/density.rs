//! Reduced density matrices and the trace distance.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::errors::{Error, Result};
use crate::field::WaveField;
use crate::grid::GridSpec;

/// A density matrix in the discrete position basis of a 1D grid.
///
/// The cell volume is folded into the entries, so the plain matrix trace is
/// the physical trace and the eigenvalues are occupation probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
    grid: GridSpec,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<Complex64>, grid: GridSpec) -> Result<Self> {
        if entries.nrows() != grid.points || entries.ncols() != grid.points {
            return Err(Error::InvalidParameter(format!(
                "density matrix is {}x{}, grid has {} points",
                entries.nrows(),
                entries.ncols(),
                grid.points
            )));
        }
        let dm = DensityMatrix { entries, grid };
        let herm = dm.hermiticity_defect();
        if herm > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "density matrix is not Hermitian (defect {herm:e})"
            )));
        }
        let tr = dm.trace();
        if (tr - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        Ok(dm)
    }

    /// rho = |psi><psi| for a normalized one-particle 1D field.
    pub fn from_pure(psi: &WaveField) -> Result<Self> {
        if psi.particle_count() != 1 || psi.grid().dim != 1 {
            return Err(Error::InvalidParameter(
                "pure-state density matrix needs a one-particle 1D field".into(),
            ));
        }
        psi.check_normalized(1e-8)?;
        let n = psi.grid().points;
        let dx = psi.grid().dx();
        let amps = psi.amplitudes();
        // Same index convention as partial_trace_b: conjugate on the first slot.
        let entries = DMatrix::from_fn(n, n, |i, j| amps[i].conj() * amps[j] * dx);
        Self::new(entries, *psi.grid())
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let adj = self.entries.adjoint();
        (&self.entries - adj)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Tr rho^2 = sum |rho_ij|^2 for Hermitian rho.
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues of the (Hermitian) matrix, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .entries
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }
}

/// rho_b = Tr_a |Phi><Phi| of a normalized two-particle field.
pub fn partial_trace_b(phi: &WaveField) -> Result<DensityMatrix> {
    if phi.particle_count() != 2 {
        return Err(Error::InvalidParameter(
            "partial trace needs a two-particle field".into(),
        ));
    }
    phi.check_normalized(1e-8)?;
    let n = phi.grid().points;
    let dx = phi.grid().dx();
    let amps = phi.amplitudes();
    let w = Complex64::new(dx * dx, 0.0);
    let mut entries = DMatrix::<Complex64>::zeros(n, n);
    for ia in 0..n {
        let row = &amps[ia * n..(ia + 1) * n];
        for i in 0..n {
            let ci = row[i].conj();
            if ci.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                entries[(i, j)] += ci * row[j];
            }
        }
    }
    entries *= w;
    DensityMatrix::new(entries, *phi.grid())
}

/// Half the sum of absolute eigenvalues of rho1 - rho2; lies in [0, 1].
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    if rho1.grid != rho2.grid {
        return Err(Error::GridMismatch);
    }
    let diff = &rho1.entries - &rho2.entries;
    let ev = diff.symmetric_eigen().eigenvalues;
    Ok(0.5 * ev.iter().map(|l| l.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::WaveField;

    fn grid() -> GridSpec {
        GridSpec::new(1, 64, 16.0).unwrap()
    }

    #[test]
    fn product_state_reduces_to_pure() {
        let g = grid();
        let pa = WaveField::gaussian(g, &[8.0], &[1.0], &[0.3]).unwrap();
        let pb = WaveField::gaussian(g, &[6.0], &[1.4], &[0.0]).unwrap();
        let phi = WaveField::product(&pa, &pb).unwrap();
        let rho = partial_trace_b(&phi).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-10);
        assert!((rho.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn schmidt_rank_two_has_half_purity() {
        // (|0>|0> + |1>|1>)/sqrt(2) with orthogonal plane-wave factors
        let g = grid();
        let a0 = WaveField::plane_wave(g, &[0]).unwrap();
        let a1 = WaveField::plane_wave(g, &[1]).unwrap();
        let b0 = WaveField::plane_wave(g, &[2]).unwrap();
        let b1 = WaveField::plane_wave(g, &[3]).unwrap();
        let mut phi = WaveField::product(&a0, &b0).unwrap();
        let t2 = WaveField::product(&a1, &b1).unwrap();
        phi.axpy(Complex64::new(1.0, 0.0), &t2).unwrap();
        phi.normalize().unwrap();
        let rho = partial_trace_b(&phi).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-10);
        assert!((rho.purity() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn trace_distance_extremes() {
        let g = grid();
        let p0 = WaveField::plane_wave(g, &[0]).unwrap();
        let p1 = WaveField::plane_wave(g, &[1]).unwrap();
        let r0 = DensityMatrix::from_pure(&p0).unwrap();
        let r1 = DensityMatrix::from_pure(&p1).unwrap();
        assert!(trace_distance(&r0, &r0).unwrap() < 1e-14);
        let d = trace_distance(&r0, &r1).unwrap();
        assert!((d - 1.0).abs() < 1e-8, "d = {d}");
        // symmetric under swap
        let d2 = trace_distance(&r1, &r0).unwrap();
        assert!((d - d2).abs() < 1e-14);
    }

    #[test]
    fn purity_matches_svd_schmidt_spectrum() {
        // Independent oracle: Schmidt weights are (s_k * dx)^2 for the
        // singular values s_k of the raw amplitude matrix.
        let g = GridSpec::new(1, 32, 8.0).unwrap();
        let n = g.points;
        // deterministic pseudo-random entangled state
        let mut amps = Vec::with_capacity(n * n);
        let mut seed = 0.37_f64;
        for _ in 0..n * n {
            seed = (seed * 997.13 + 0.71).fract();
            let re = seed - 0.5;
            seed = (seed * 997.13 + 0.71).fract();
            let im = seed - 0.5;
            amps.push(Complex64::new(re, im));
        }
        let mut phi = WaveField::new(g, 2, amps).unwrap();
        phi.normalize().unwrap();
        let rho = partial_trace_b(&phi).unwrap();

        let dx = g.dx();
        let m = DMatrix::from_fn(n, n, |i, j| phi.amplitudes()[i * n + j]);
        let svd = m.svd(false, false);
        let purity_svd: f64 = svd
            .singular_values
            .iter()
            .map(|s| (s * dx).powi(4))
            .sum();
        assert!(
            (rho.purity() - purity_svd).abs() <= 1e-8,
            "partial trace {} vs svd {}",
            rho.purity(),
            purity_svd
        );
    }
}
