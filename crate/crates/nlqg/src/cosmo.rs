//! Two-fluid flat FRW background: dust-like matter feeding a phantom
//! component through a coupling function b, with reconstruction of b from
//! sampled trajectories and energy-condition bookkeeping.
//!
//! The system integrated here is
//!
//! ```text
//! (a'/a)^2   = kappa0^2/3 (rho_m + rho_ph)         (expanding branch)
//! rho_m'     = -(3 H + b) rho_m
//! rho_ph'    = -3 gamma H rho_ph + b rho_m,        gamma = w + 1
//! ```
//!
//! The b terms move energy between the sectors without creating it:
//! d(rho_m + rho_ph)/dt = -3H (rho_m + gamma rho_ph) independent of b.

use serde::Serialize;

use crate::errors::{Error, Result};
use crate::fit::fit_line;

/// Coupling model: constant, or tabulated with linear interpolation
/// (clamped outside the table).
#[derive(Debug, Clone, PartialEq)]
pub enum BModel {
    Constant(f64),
    Tabulated { ts: Vec<f64>, bs: Vec<f64> },
}

impl BModel {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            BModel::Constant(b) => *b,
            BModel::Tabulated { ts, bs } => {
                if t <= ts[0] {
                    return bs[0];
                }
                if t >= *ts.last().unwrap() {
                    return *bs.last().unwrap();
                }
                let idx = ts.partition_point(|&v| v <= t) - 1;
                let f = (t - ts[idx]) / (ts[idx + 1] - ts[idx]);
                bs[idx] + f * (bs[idx + 1] - bs[idx])
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosmoParams {
    /// kappa0 = sqrt(8 pi G); kappa0^2 = 3 by default so H^2 = rho.
    pub kappa0: f64,
    /// Equation-of-state parameter; phantom when w < -1.
    pub w: f64,
    pub b_model: BModel,
    /// Scale factor at which integration terminates with reason `BigRip`.
    pub a_max: f64,
}

impl CosmoParams {
    pub fn new(kappa0_sq: f64, w: f64, b_model: BModel) -> Result<Self> {
        if !(kappa0_sq > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kappa0^2 must be > 0, got {kappa0_sq}"
            )));
        }
        if let BModel::Tabulated { ts, bs } = &b_model {
            if ts.len() < 2 || ts.len() != bs.len() {
                return Err(Error::InvalidParameter(
                    "tabulated b needs matching ts/bs with at least 2 rows".into(),
                ));
            }
            if !ts.windows(2).all(|w| w[1] > w[0]) {
                return Err(Error::InvalidParameter(
                    "tabulated b times must be strictly increasing".into(),
                ));
            }
        }
        Ok(CosmoParams {
            kappa0: kappa0_sq.sqrt(),
            w,
            b_model,
            a_max: 1e6,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.w + 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosmoState {
    pub t: f64,
    pub a: f64,
    pub rho_m: f64,
    pub rho_ph: f64,
}

impl CosmoState {
    pub fn new(t: f64, a: f64, rho_m: f64, rho_ph: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidParameter(format!("a must be > 0, got {a}")));
        }
        if rho_m < 0.0 || rho_ph < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "densities must be >= 0, got rho_m = {rho_m}, rho_ph = {rho_ph}"
            )));
        }
        Ok(CosmoState { t, a, rho_m, rho_ph })
    }

    pub fn omega_m(&self) -> f64 {
        self.rho_m / (self.rho_m + self.rho_ph)
    }
}

/// H = +sqrt(kappa0^2/3 (rho_m + rho_ph)), expanding branch only.
pub fn hubble(state: &CosmoState, params: &CosmoParams) -> Result<f64> {
    let total = state.rho_m + state.rho_ph;
    if total < 0.0 {
        return Err(Error::Unphysical {
            t: state.t,
            reason: format!("negative total density {total}"),
        });
    }
    Ok((params.kappa0 * params.kappa0 / 3.0 * total).sqrt())
}

/// (da/dt, drho_m/dt, drho_ph/dt).
pub fn cosmo_rhs(state: &CosmoState, params: &CosmoParams) -> Result<[f64; 3]> {
    let h = hubble(state, params)?;
    let b = params.b_model.eval(state.t);
    let gamma = params.gamma();
    Ok([
        state.a * h,
        -(3.0 * h + b) * state.rho_m,
        -3.0 * gamma * h * state.rho_ph + b * state.rho_m,
    ])
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    TFinalReached,
    BigRip,
    Unphysical,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::TFinalReached => write!(f, "t_final_reached"),
            Termination::BigRip => write!(f, "big_rip"),
            Termination::Unphysical => write!(f, "unphysical"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosmoSample {
    pub t: f64,
    pub a: f64,
    pub h: f64,
    pub rho_m: f64,
    pub rho_ph: f64,
    pub omega_m: f64,
}

#[derive(Debug, Clone)]
pub struct CosmoTrajectory {
    pub samples: Vec<CosmoSample>,
    pub termination: Termination,
}

impl CosmoTrajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,a,H,rho_m,rho_ph,omega_m\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                s.t, s.a, s.h, s.rho_m, s.rho_ph, s.omega_m
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

fn rhs_vec(t: f64, y: &[f64; 3], params: &CosmoParams) -> Result<[f64; 3]> {
    let state = CosmoState {
        t,
        a: y[0],
        rho_m: y[1],
        rho_ph: y[2],
    };
    cosmo_rhs(&state, params)
}

/// One embedded step; returns (y5, error_norm).
fn dp_step(t: f64, y: &[f64; 3], h: f64, params: &CosmoParams, tol: &Tolerances) -> Result<([f64; 3], f64)> {
    let mut k = [[0.0; 3]; 7];
    k[0] = rhs_vec(t, y, params)?;
    for stage in 0..6 {
        let mut yi = *y;
        for (j, kj) in k.iter().enumerate().take(stage + 1) {
            let aij = DP_A[stage][j];
            if aij != 0.0 {
                for d in 0..3 {
                    yi[d] += h * aij * kj[d];
                }
            }
        }
        k[stage + 1] = rhs_vec(t + DP_C[stage] * h, &yi, params)?;
    }
    let mut y5 = *y;
    let mut y4 = *y;
    for (j, kj) in k.iter().enumerate() {
        for d in 0..3 {
            y5[d] += h * DP_B5[j] * kj[d];
            y4[d] += h * DP_B4[j] * kj[d];
        }
    }
    let mut err: f64 = 0.0;
    for d in 0..3 {
        let scale = tol.atol + tol.rtol * y[d].abs().max(y5[d].abs());
        err = err.max(((y5[d] - y4[d]) / scale).abs());
    }
    Ok((y5, err))
}

/// Integrate from `initial`, sampling every `sample_interval` in t. The
/// integrator steps adaptively and lands exactly on sample times, so the
/// output grid is uniform. Terminates early with `BigRip` once a exceeds
/// `params.a_max`, or `Unphysical` if a density goes negative.
pub fn integrate(
    initial: &CosmoState,
    params: &CosmoParams,
    t_final: f64,
    sample_interval: f64,
    tol: &Tolerances,
) -> Result<CosmoTrajectory> {
    if !(t_final > initial.t) {
        return Err(Error::InvalidParameter(
            "t_final must exceed the initial time".into(),
        ));
    }
    if !(sample_interval > 0.0) {
        return Err(Error::InvalidParameter(
            "sample_interval must be > 0".into(),
        ));
    }
    if !(tol.rtol > 0.0) || !(tol.atol > 0.0) {
        return Err(Error::InvalidParameter("tolerances must be > 0".into()));
    }
    CosmoState::new(initial.t, initial.a, initial.rho_m, initial.rho_ph)?;

    let mut samples = Vec::new();
    let push = |samples: &mut Vec<CosmoSample>, t: f64, y: &[f64; 3]| -> Result<()> {
        let st = CosmoState {
            t,
            a: y[0],
            rho_m: y[1],
            rho_ph: y[2],
        };
        samples.push(CosmoSample {
            t,
            a: st.a,
            h: hubble(&st, params)?,
            rho_m: st.rho_m,
            rho_ph: st.rho_ph,
            omega_m: st.omega_m(),
        });
        Ok(())
    };

    let mut t = initial.t;
    let mut y = [initial.a, initial.rho_m, initial.rho_ph];
    push(&mut samples, t, &y)?;

    let n_samples = ((t_final - initial.t) / sample_interval).round() as usize;
    let mut h = sample_interval / 8.0;

    for i in 1..=n_samples {
        let t_target = initial.t + i as f64 * sample_interval;
        while t < t_target - 1e-14 * t_target.abs().max(1.0) {
            let h_try = h.min(t_target - t);
            let (y_new, err) = dp_step(t, &y, h_try, params, tol)?;
            if err <= 1.0 {
                t += h_try;
                y = y_new;
                if y[1] < 0.0 || y[2] < 0.0 {
                    push(&mut samples, t, &y.map(|v| v.max(0.0)))?;
                    return Ok(CosmoTrajectory {
                        samples,
                        termination: Termination::Unphysical,
                    });
                }
                if y[0] > params.a_max {
                    push(&mut samples, t, &y)?;
                    return Ok(CosmoTrajectory {
                        samples,
                        termination: Termination::BigRip,
                    });
                }
            }
            // standard fifth-order controller with safety factor
            let factor = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            h = (h_try * factor).min(sample_interval);
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t });
            }
        }
        push(&mut samples, t_target, &y)?;
        t = t_target;
    }
    Ok(CosmoTrajectory {
        samples,
        termination: Termination::TFinalReached,
    })
}

/// Reconstruct the coupling from a sampled trajectory:
/// b = 3 w H (1 - Omega_m) - Omega_m'/Omega_m, with Omega_m' from centered
/// differences on the sample grid (one-sided at the ends). Errors if any
/// Omega_m is below the 1e-6 floor.
pub fn reconstruct_b(traj: &CosmoTrajectory, params: &CosmoParams) -> Result<Vec<(f64, f64)>> {
    let s = &traj.samples;
    if s.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "reconstruction needs at least 5 samples, got {}",
            s.len()
        )));
    }
    const OMEGA_FLOOR: f64 = 1e-6;
    for row in s {
        if row.omega_m < OMEGA_FLOOR {
            return Err(Error::OmegaFloor {
                t: row.t,
                omega_m: row.omega_m,
            });
        }
    }
    let n = s.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let omega_dot = if i == 0 {
            (s[1].omega_m - s[0].omega_m) / (s[1].t - s[0].t)
        } else if i == n - 1 {
            (s[n - 1].omega_m - s[n - 2].omega_m) / (s[n - 1].t - s[n - 2].t)
        } else {
            (s[i + 1].omega_m - s[i - 1].omega_m) / (s[i + 1].t - s[i - 1].t)
        };
        let b = 3.0 * params.w * s[i].h * (1.0 - s[i].omega_m) - omega_dot / s[i].omega_m;
        out.push((s[i].t, b));
    }
    Ok(out)
}

pub fn b_table_csv(table: &[(f64, f64)]) -> String {
    let mut out = String::from("t,b\n");
    for (t, b) in table {
        out.push_str(&format!("{:.16e},{:.16e}\n", t, b));
    }
    out
}

/// A maximal run of constant sign in a b table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignInterval {
    pub t_start: f64,
    pub t_end: f64,
    /// -1, 0, or +1; |b| <= the dead band counts as 0.
    pub sign: i8,
}

/// Split a b(t) table into maximal constant-sign intervals. Values within
/// the dead band `eta` are classified as zero.
pub fn b_sign_intervals(table: &[(f64, f64)], eta: f64) -> Vec<SignInterval> {
    let sign_of = |b: f64| -> i8 {
        if b.abs() <= eta {
            0
        } else if b > 0.0 {
            1
        } else {
            -1
        }
    };
    let mut out: Vec<SignInterval> = Vec::new();
    for &(t, b) in table {
        let s = sign_of(b);
        match out.last_mut() {
            Some(last) if last.sign == s => last.t_end = t,
            _ => out.push(SignInterval {
                t_start: t,
                t_end: t,
                sign: s,
            }),
        }
    }
    out
}

/// Perfect-fluid energy conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyConditionReport {
    pub weak: bool,
    pub dominant: bool,
    pub rho: f64,
    pub p: f64,
}

/// weak: rho >= 0 and rho + p >= 0; dominant: rho >= |p|. Comparisons are
/// inclusive, so the w = -1 boundary satisfies both.
pub fn energy_conditions(rho: f64, p: f64) -> EnergyConditionReport {
    EnergyConditionReport {
        weak: rho >= 0.0 && rho + p >= 0.0,
        dominant: rho >= p.abs(),
        rho,
        p,
    }
}

/// Fit the expansion exponent of a matter-only trajectory: regresses
/// ln a on ln(t - t_s) where t_s = t0 - 2/(3 H0) is the zero of the
/// matter-dominated scale factor.
pub fn expansion_exponent(traj: &CosmoTrajectory) -> Result<f64> {
    let s0 = traj
        .samples
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty trajectory".into()))?;
    let t_singularity = s0.t - 2.0 / (3.0 * s0.h);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in &traj.samples {
        xs.push((row.t - t_singularity).ln());
        ys.push(row.a.ln());
    }
    Ok(fit_line(&xs, &ys)?.slope)
}
