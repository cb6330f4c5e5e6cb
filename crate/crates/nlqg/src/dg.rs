//! Doebner-Goldin dynamics: right-hand side, RK4 stepping, and the
//! diagnostics that certify the equation's invariants.
//!
//! The evolution implemented here is
//!
//! ```text
//! d psi/dt = (i hbar / 2m) lap psi
//!          + D (lap psi + (|grad psi|^2 / |psi|^2) psi)
//!          - (i/hbar) (R(psi) + V(x)) psi
//! ```
//!
//! with R a real functional that is complex homogeneous of degree zero.
//! The imaginary nonlinear term is a total divergence at the density level,
//! so the continuum theory conserves the norm exactly and satisfies the
//! diffusion-modified continuity equation d rho/dt = -div j + D lap rho.

use num_complex::Complex64;

use crate::errors::{Error, Result};
use crate::field::{ParticleSel, WaveField};
use crate::grid::GridSpec;
use crate::observable::Observable;

/// Coefficients for the real functional family
/// R = c1 div j / rho + c2 lap rho / rho + c3 j^2/rho^2
///   + c4 j.grad rho / rho^2 + c5 (grad rho)^2 / rho^2.
///
/// Every member is invariant under psi -> z psi for nonzero complex z,
/// because rho and j both scale by |z|^2 and the relative regularization
/// floor scales with them.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RSpec {
    pub coeffs: [f64; 5],
}

impl RSpec {
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

/// Physical constants of the one-particle equation plus the R selection.
///
/// `d` is the diffusion-like coefficient (length^2/time). The sign written
/// in the evolution above yields forward diffusion of the density for
/// d > 0; negative values are allowed only behind `allow_negative_d` and
/// come with no stability promise (backward diffusion is ill-posed).
#[derive(Debug, Clone, PartialEq)]
pub struct DGParams {
    pub hbar: f64,
    pub mass: f64,
    pub d: f64,
    pub r_spec: RSpec,
    /// Optional real multiplicative potential, one sample per node of the
    /// particle's own 1D axis (broadcast along the partner axis in pair
    /// evolution).
    pub potential: Option<Vec<f64>>,
    /// Relative floor for |psi|^2 in the nonlinear denominators:
    /// rho_eps = rho + floor * mean(rho).
    pub regularization_floor: f64,
}

impl DGParams {
    pub fn new(hbar: f64, mass: f64, d: f64) -> Result<Self> {
        Self::with_options(hbar, mass, d, false)
    }

    pub fn with_options(hbar: f64, mass: f64, d: f64, allow_negative_d: bool) -> Result<Self> {
        if !(hbar > 0.0) {
            return Err(Error::InvalidParameter(format!("hbar must be > 0, got {hbar}")));
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter(format!("mass must be > 0, got {mass}")));
        }
        if d < 0.0 && !allow_negative_d {
            return Err(Error::InvalidParameter(format!(
                "d must be >= 0 (got {d}); negative diffusion needs the explicit flag"
            )));
        }
        if !d.is_finite() {
            return Err(Error::InvalidParameter("d must be finite".into()));
        }
        Ok(DGParams {
            hbar,
            mass,
            d,
            r_spec: RSpec::default(),
            potential: None,
            regularization_floor: 1e-12,
        })
    }

    pub fn with_r(mut self, r: RSpec) -> Self {
        self.r_spec = r;
        self
    }

    pub fn with_potential(mut self, v: Vec<f64>) -> Self {
        self.potential = Some(v);
        self
    }

    pub fn linear(&self) -> bool {
        self.d == 0.0 && self.r_spec.is_zero()
    }
}

/// rho = |psi|^2 and the probability current j = (hbar/m) Im(conj(psi) grad psi),
/// one current component per axis.
pub fn density_and_current(
    field: &WaveField,
    hbar: f64,
    mass: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if field.particle_count() != 1 {
        return Err(Error::InvalidParameter(
            "density_and_current expects a one-particle field".into(),
        ));
    }
    let rho = field.density();
    let mut currents = Vec::with_capacity(field.axes());
    for axis in 0..field.axes() {
        let grad = field.gradient(axis)?;
        let j: Vec<f64> = field
            .amplitudes()
            .iter()
            .zip(grad.amplitudes())
            .map(|(z, g)| hbar / mass * (z.conj() * g).im)
            .collect();
        currents.push(j);
    }
    Ok((rho, currents))
}

/// The regularized density rho + floor * mean(rho).
fn regularized_density(field: &WaveField, floor: f64) -> Vec<f64> {
    let rho = field.density();
    let mean = rho.iter().sum::<f64>() / rho.len() as f64;
    let eps = floor * mean;
    rho.iter().map(|&r| r + eps).collect()
}

/// |grad psi|^2 summed over the given axes, one value per node.
fn grad_norm_sq(field: &WaveField, axes: &[usize]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; field.amplitudes().len()];
    for &axis in axes {
        let g = field.gradient(axis)?;
        for (o, z) in out.iter_mut().zip(g.amplitudes()) {
            *o += z.norm_sqr();
        }
    }
    Ok(out)
}

/// Evaluate the R functional on the axes of the selected particle.
pub fn r_functional(
    field: &WaveField,
    sel: ParticleSel,
    params: &DGParams,
) -> Result<Vec<f64>> {
    let axes = field.particle_axes(sel)?;
    let c = params.r_spec.coeffs;
    let n = field.amplitudes().len();
    let mut out = vec![0.0; n];
    if params.r_spec.is_zero() {
        return Ok(out);
    }
    let rho_eps = regularized_density(field, params.regularization_floor);
    let rho_field = WaveField::new(
        *field.grid(),
        field.particle_count(),
        field.density().iter().map(|&r| Complex64::new(r, 0.0)).collect(),
    )?;

    // j components and grad rho components along the selected axes
    let mut j_comps = Vec::with_capacity(axes.len());
    let mut grho_comps = Vec::with_capacity(axes.len());
    for &axis in &axes {
        let g = field.gradient(axis)?;
        let j: Vec<f64> = field
            .amplitudes()
            .iter()
            .zip(g.amplitudes())
            .map(|(z, gz)| params.hbar / params.mass * (z.conj() * gz).im)
            .collect();
        j_comps.push(j);
        let gr = rho_field.gradient(axis)?;
        grho_comps.push(gr.amplitudes().iter().map(|z| z.re).collect::<Vec<f64>>());
    }

    if c[0] != 0.0 {
        // div j / rho
        let mut div_j = vec![0.0; n];
        for (ai, &axis) in axes.iter().enumerate() {
            let jf = WaveField::new(
                *field.grid(),
                field.particle_count(),
                j_comps[ai].iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            )?;
            let dj = jf.gradient(axis)?;
            for (o, z) in div_j.iter_mut().zip(dj.amplitudes()) {
                *o += z.re;
            }
        }
        for i in 0..n {
            out[i] += c[0] * div_j[i] / rho_eps[i];
        }
    }
    if c[1] != 0.0 {
        // lap rho / rho
        let lap = crate::spectral::laplacian_axes(
            rho_field.amplitudes(),
            &field.shape(),
            &field.grid().wavenumbers(),
            &axes,
        );
        for i in 0..n {
            out[i] += c[1] * lap[i].re / rho_eps[i];
        }
    }
    if c[2] != 0.0 {
        for i in 0..n {
            let j2: f64 = j_comps.iter().map(|j| j[i] * j[i]).sum();
            out[i] += c[2] * j2 / (rho_eps[i] * rho_eps[i]);
        }
    }
    if c[3] != 0.0 {
        for i in 0..n {
            let jg: f64 = j_comps
                .iter()
                .zip(&grho_comps)
                .map(|(j, gr)| j[i] * gr[i])
                .sum();
            out[i] += c[3] * jg / (rho_eps[i] * rho_eps[i]);
        }
    }
    if c[4] != 0.0 {
        for i in 0..n {
            let g2: f64 = grho_comps.iter().map(|gr| gr[i] * gr[i]).sum();
            out[i] += c[4] * g2 / (rho_eps[i] * rho_eps[i]);
        }
    }
    Ok(out)
}

/// The nonlinear diffusion bracket lap psi + (|grad psi|^2 / rho_eps) psi
/// over the selected particle's axes.
pub fn dg_bracket(field: &WaveField, sel: ParticleSel, params: &DGParams) -> Result<WaveField> {
    let axes = field.particle_axes(sel)?;
    let lap = field.laplacian(sel)?;
    let gsq = grad_norm_sq(field, &axes)?;
    let rho_eps = regularized_density(field, params.regularization_floor);
    let amps: Vec<Complex64> = lap
        .amplitudes()
        .iter()
        .zip(field.amplitudes())
        .zip(gsq.iter().zip(&rho_eps))
        .map(|((l, z), (&g, &re))| l + z * (g / re))
        .collect();
    WaveField::new(*field.grid(), field.particle_count(), amps)
}

/// One particle's contribution to d psi/dt, acting on the selected axes.
pub(crate) fn rhs_for_particle(
    field: &WaveField,
    sel: ParticleSel,
    params: &DGParams,
) -> Result<WaveField> {
    let kin_factor = Complex64::new(0.0, params.hbar / (2.0 * params.mass));
    let lap = field.laplacian(sel)?;
    let mut out = WaveField::zeros(*field.grid(), field.particle_count())?;
    out.axpy(kin_factor, &lap)?;

    if params.d != 0.0 {
        let axes = field.particle_axes(sel)?;
        let gsq = grad_norm_sq(field, &axes)?;
        let rho_eps = regularized_density(field, params.regularization_floor);
        let d = params.d;
        for (i, o) in out.amplitudes_mut().iter_mut().enumerate() {
            *o += d * (lap.amplitudes()[i] + field.amplitudes()[i] * (gsq[i] / rho_eps[i]));
        }
    }

    let mut phase = vec![0.0; field.amplitudes().len()];
    let mut have_phase = false;
    if !params.r_spec.is_zero() {
        let r = r_functional(field, sel, params)?;
        for (p, v) in phase.iter_mut().zip(&r) {
            *p += v;
        }
        have_phase = true;
    }
    if let Some(v) = &params.potential {
        if v.len() != field.grid().points {
            return Err(Error::InvalidParameter(format!(
                "potential has {} samples, grid axis has {}",
                v.len(),
                field.grid().points
            )));
        }
        // the potential acts along the particle's own axis
        let axes = field.particle_axes(sel)?;
        let axis = axes[0];
        let n = field.grid().points;
        let total_axes = field.axes();
        let stride = n.pow((total_axes - 1 - axis) as u32);
        for (idx, p) in phase.iter_mut().enumerate() {
            let i = (idx / stride) % n;
            *p += v[i];
        }
        have_phase = true;
    }
    if have_phase {
        let factor = Complex64::new(0.0, -1.0 / params.hbar);
        for (o, (z, p)) in out
            .amplitudes_mut()
            .iter_mut()
            .zip(field.amplitudes().iter().zip(&phase))
        {
            *o += factor * z * *p;
        }
    }

    if !out
        .amplitudes()
        .iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
    {
        return Err(Error::NonFinite("dg_rhs output"));
    }
    Ok(out)
}

/// d psi/dt for a one-particle field.
pub fn dg_rhs(field: &WaveField, params: &DGParams) -> Result<WaveField> {
    if field.particle_count() != 1 {
        return Err(Error::InvalidParameter(
            "dg_rhs expects a one-particle field; see pair::pair_rhs".into(),
        ));
    }
    rhs_for_particle(field, ParticleSel::All, params)
}

/// Classical RK4 step shared by the one- and two-particle integrators.
/// No renormalization: norm drift is a diagnostic, not a correction.
pub(crate) fn rk4_step<F>(field: &WaveField, dt: f64, rhs: F) -> Result<WaveField>
where
    F: Fn(&WaveField) -> Result<WaveField>,
{
    let h = Complex64::new(dt, 0.0);
    let k1 = rhs(field)?;
    let mut y = field.clone();
    y.axpy(h * 0.5, &k1)?;
    let k2 = rhs(&y)?;
    y = field.clone();
    y.axpy(h * 0.5, &k2)?;
    let k3 = rhs(&y)?;
    y = field.clone();
    y.axpy(h, &k3)?;
    let k4 = rhs(&y)?;

    let mut out = field.clone();
    out.axpy(h / 6.0, &k1)?;
    out.axpy(h / 3.0, &k2)?;
    out.axpy(h / 3.0, &k3)?;
    out.axpy(h / 6.0, &k4)?;
    Ok(out)
}

fn check_step_stability(before: f64, after: &WaveField, step: usize) -> Result<()> {
    let n = after.norm();
    let factor = n / before;
    if !factor.is_finite() || (factor - 1.0).abs() > 0.1 {
        return Err(Error::Instability { step, factor });
    }
    Ok(())
}

/// One RK4 step of the one-particle equation. Aborts if the norm moves by
/// more than 10% in a single step.
pub fn step_rk4(field: &WaveField, params: &DGParams, dt: f64) -> Result<WaveField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let before = field.norm();
    let out = rk4_step(field, dt, |f| dg_rhs(f, params))?;
    check_step_stability(before, &out, 0)?;
    Ok(out)
}

/// dt bound c / (hbar k_max^2 / 2m + D k_max^2) with safety factor c = 0.1.
pub fn suggest_dt(grid: &GridSpec, params: &DGParams) -> f64 {
    let k2 = grid.k_max() * grid.k_max();
    let rate = params.hbar * k2 / (2.0 * params.mass) + params.d.abs() * k2;
    0.1 / rate
}

/// One diagnostic record of an evolution.
#[derive(Debug, Clone)]
pub struct Sample {
    pub t: f64,
    pub norm: f64,
    pub mean_x: Vec<f64>,
    pub var_x: Vec<f64>,
    pub observables: Vec<f64>,
}

/// Time-ordered diagnostics of a one-particle run.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub observable_names: Vec<String>,
    pub samples: Vec<Sample>,
}

impl Trajectory {
    /// CSV columns: t,norm,mean_x,var_x,<obs>... (one mean/var pair per axis).
    pub fn to_csv(&self, axes: usize) -> String {
        let mut head = String::from("t,norm");
        if axes == 1 {
            head.push_str(",mean_x,var_x");
        } else {
            for a in 0..axes {
                head.push_str(&format!(",mean_x{a},var_x{a}"));
            }
        }
        for name in &self.observable_names {
            head.push(',');
            head.push_str(name);
        }
        head.push('\n');
        let mut out = head;
        for s in &self.samples {
            out.push_str(&format!("{:.16e},{:.16e}", s.t, s.norm));
            for a in 0..axes {
                out.push_str(&format!(",{:.16e},{:.16e}", s.mean_x[a], s.var_x[a]));
            }
            for v in &s.observables {
                out.push_str(&format!(",{:.16e}", v));
            }
            out.push('\n');
        }
        out
    }
}

fn record_sample(
    t: f64,
    field: &WaveField,
    observables: &[(String, Observable)],
) -> Result<Sample> {
    let mut mean_x = Vec::with_capacity(field.axes());
    let mut var_x = Vec::with_capacity(field.axes());
    for a in 0..field.axes() {
        mean_x.push(field.mean_x(a)?);
        var_x.push(field.var_x(a)?);
    }
    let mut normalized = field.clone();
    let norm = normalized.normalize()?;
    let obs = observables
        .iter()
        .map(|(_, b)| b.expectation(&normalized))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Sample {
        t,
        norm,
        mean_x,
        var_x,
        observables: obs,
    })
}

/// Evolve a one-particle field, recording diagnostics every `sample_every`
/// steps (plus the initial and final states). Returns the trajectory and
/// the final field. The requested span is covered by equal steps of size
/// at most `dt`.
pub fn evolve(
    psi0: &WaveField,
    params: &DGParams,
    t_final: f64,
    dt: f64,
    sample_every: usize,
    observables: &[(String, Observable)],
) -> Result<(Trajectory, WaveField)> {
    if t_final < 0.0 {
        return Err(Error::InvalidParameter("t_final must be >= 0".into()));
    }
    let mut traj = Trajectory {
        observable_names: observables.iter().map(|(n, _)| n.clone()).collect(),
        samples: vec![record_sample(0.0, psi0, observables)?],
    };
    if t_final == 0.0 {
        return Ok((traj, psi0.clone()));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let n_steps = (t_final / dt).ceil().max(1.0) as usize;
    let h = t_final / n_steps as f64;
    let every = sample_every.max(1);

    let mut field = psi0.clone();
    for step in 1..=n_steps {
        let before = field.norm();
        field = rk4_step(&field, h, |f| dg_rhs(f, params)).map_err(|e| match e {
            Error::Instability { factor, .. } => Error::Instability { step, factor },
            other => other,
        })?;
        check_step_stability(before, &field, step)?;
        if step % every == 0 || step == n_steps {
            traj.samples
                .push(record_sample(step as f64 * h, &field, observables)?);
        }
    }
    Ok((traj, field))
}

/// Max-norm residual of (rho_after - rho_before)/dt + div j - D lap rho,
/// with the flux terms evaluated at the midpoint field. Converges at
/// O(dt^2) down to the spectral-accuracy floor.
pub fn continuity_residual(
    before: &WaveField,
    after: &WaveField,
    dt: f64,
    params: &DGParams,
) -> Result<f64> {
    continuity_residual_impl(before, after, dt, params, true)
}

/// Same residual with the D lap rho term deliberately omitted; the
/// wrong-physics control for the diffusion term.
pub fn continuity_residual_without_diffusion(
    before: &WaveField,
    after: &WaveField,
    dt: f64,
    params: &DGParams,
) -> Result<f64> {
    continuity_residual_impl(before, after, dt, params, false)
}

fn continuity_residual_impl(
    before: &WaveField,
    after: &WaveField,
    dt: f64,
    params: &DGParams,
    include_diffusion: bool,
) -> Result<f64> {
    if before.grid() != after.grid() || before.particle_count() != after.particle_count() {
        return Err(Error::GridMismatch);
    }
    let mut mid = before.clone();
    mid.axpy(Complex64::new(1.0, 0.0), after)?;
    for z in mid.amplitudes_mut() {
        *z *= 0.5;
    }

    let (rho_mid, currents) = density_and_current(&mid, params.hbar, params.mass)?;
    let n = rho_mid.len();

    let mut div_j = vec![0.0; n];
    for (axis, j) in currents.iter().enumerate() {
        let jf = WaveField::new(
            *mid.grid(),
            1,
            j.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )?;
        let dj = jf.gradient(axis)?;
        for (o, z) in div_j.iter_mut().zip(dj.amplitudes()) {
            *o += z.re;
        }
    }

    let lap_rho = if include_diffusion && params.d != 0.0 {
        let rf = WaveField::new(
            *mid.grid(),
            1,
            rho_mid.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )?;
        let l = rf.laplacian(ParticleSel::All)?;
        l.amplitudes().iter().map(|z| z.re).collect()
    } else {
        vec![0.0; n]
    };

    let rho_b = before.density();
    let rho_a = after.density();
    let mut residual: f64 = 0.0;
    for i in 0..n {
        let r = (rho_a[i] - rho_b[i]) / dt + div_j[i] - params.d * lap_rho[i];
        residual = residual.max(r.abs());
    }
    Ok(residual)
}
