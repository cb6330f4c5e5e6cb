//! Separating two-particle evolution: i dPhi/dt = (F_a + F_b) Phi with no
//! coupling term. Each side acts through derivatives in its own particle's
//! coordinate and the shared modulus |Phi|, so product states evolve as
//! product states (a tested property, not an enforced constraint).

use num_complex::Complex64;

use crate::density::{partial_trace_b, DensityMatrix};
use crate::dg::{rhs_for_particle, rk4_step, DGParams};
use crate::errors::{Error, Result};
use crate::field::{ParticleSel, WaveField};

/// Parameters of the two sides. Only separating evolutions are supported:
/// there is no coupling operator, by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PairParams {
    pub a: DGParams,
    pub b: DGParams,
}

impl PairParams {
    pub fn new(a: DGParams, b: DGParams) -> Self {
        PairParams { a, b }
    }

    /// True when the two parameter sets agree on the b side; the causal
    /// channel experiment requires variants that differ only on the a side.
    pub fn same_b_side(&self, other: &PairParams) -> bool {
        self.b == other.b
    }
}

/// dPhi/dt for a two-particle field.
pub fn pair_rhs(phi: &WaveField, pp: &PairParams) -> Result<WaveField> {
    if phi.particle_count() != 2 {
        return Err(Error::InvalidParameter(
            "pair_rhs expects a two-particle field".into(),
        ));
    }
    let mut out = rhs_for_particle(phi, ParticleSel::One, &pp.a)?;
    let fb = rhs_for_particle(phi, ParticleSel::Two, &pp.b)?;
    out.axpy(Complex64::new(1.0, 0.0), &fb)?;
    Ok(out)
}

/// One diagnostic record of a pair run.
#[derive(Debug, Clone)]
pub struct PairSample {
    pub t: f64,
    pub norm: f64,
    pub rho_b: DensityMatrix,
}

#[derive(Debug, Clone, Default)]
pub struct PairTrajectory {
    pub samples: Vec<PairSample>,
}

impl PairTrajectory {
    /// CSV columns: t, norm, purity of the reduced b state.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,norm,purity_b\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e}\n",
                s.t,
                s.norm,
                s.rho_b.purity()
            ));
        }
        out
    }
}

fn pair_sample(t: f64, phi: &WaveField) -> Result<PairSample> {
    let mut normalized = phi.clone();
    let norm = normalized.normalize()?;
    Ok(PairSample {
        t,
        norm,
        rho_b: partial_trace_b(&normalized)?,
    })
}

/// Evolve a two-particle field, recording (norm, rho_b) snapshots.
pub fn evolve_pair(
    phi0: &WaveField,
    pp: &PairParams,
    t_final: f64,
    dt: f64,
    sample_every: usize,
) -> Result<(PairTrajectory, WaveField)> {
    if t_final < 0.0 {
        return Err(Error::InvalidParameter("t_final must be >= 0".into()));
    }
    let mut traj = PairTrajectory {
        samples: vec![pair_sample(0.0, phi0)?],
    };
    if t_final == 0.0 {
        return Ok((traj, phi0.clone()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let n_steps = (t_final / dt).ceil().max(1.0) as usize;
    let h = t_final / n_steps as f64;
    let every = sample_every.max(1);

    let mut phi = phi0.clone();
    for step in 1..=n_steps {
        let before = phi.norm();
        phi = rk4_step(&phi, h, |f| pair_rhs(f, pp))?;
        let factor = phi.norm() / before;
        if !factor.is_finite() || (factor - 1.0).abs() > 0.1 {
            return Err(Error::Instability { step, factor });
        }
        if step % every == 0 || step == n_steps {
            traj.samples.push(pair_sample(step as f64 * h, &phi)?);
        }
    }
    Ok((traj, phi))
}

/// Smaller of the two sides' stability bounds.
pub fn suggest_dt_pair(grid: &crate::grid::GridSpec, pp: &PairParams) -> f64 {
    crate::dg::suggest_dt(grid, &pp.a).min(crate::dg::suggest_dt(grid, &pp.b))
}
