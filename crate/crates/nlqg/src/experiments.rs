//! The experiment registry: builds inputs from a validated config, runs
//! the named experiment, and emits its data files.

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::config::{
    Delta1Section, DgSection, ExperimentConfig, Experiment, FieldFormat, InitialKind,
    PairInitial, PotentialKind,
};
use crate::cosmo::{
    b_sign_intervals, b_table_csv, energy_conditions, integrate, reconstruct_b, BModel,
    CosmoParams, CosmoSample, CosmoState, CosmoTrajectory, Termination, Tolerances,
};
use crate::dg::{evolve, suggest_dt, DGParams, RSpec};
use crate::epr::{make_epr, EPRSpec};
use crate::errors::{Error, Result};
use crate::field::WaveField;
use crate::grid::GridSpec;
use crate::observable::Observable;
use crate::pair::{evolve_pair, suggest_dt_pair, PairParams};
use crate::response::{causal_channel_demo, causal_csv, delta1_sweep};

/// What a successful run produced.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<String>,
    pub termination: String,
    pub summary: serde_json::Value,
}

/// Dispatch a validated config to its experiment. Writes data files into
/// `outdir` and returns their names plus a scalar summary.
pub fn execute(cfg: &ExperimentConfig, outdir: &Path) -> Result<RunOutput> {
    std::fs::create_dir_all(outdir)?;
    match cfg.experiment {
        Experiment::Evolve => run_evolve(cfg, outdir),
        Experiment::EvolvePair => run_evolve_pair(cfg, outdir),
        Experiment::EprDelta1 => run_epr_delta1(cfg, outdir),
        Experiment::CausalChannel => run_causal_channel(cfg, outdir),
        Experiment::CosmoIntegrate => run_cosmo_integrate(cfg, outdir),
        Experiment::CosmoReconstructB => run_cosmo_reconstruct(cfg, outdir),
        Experiment::EnergyCheck => run_energy_check(cfg, outdir),
    }
}

/// Input files an experiment reads (for manifest hashing).
pub fn input_files(cfg: &ExperimentConfig) -> Vec<PathBuf> {
    let mut v = Vec::new();
    if cfg.experiment == Experiment::CosmoReconstructB && !cfg.cosmo.input_trajectory.is_empty() {
        v.push(PathBuf::from(&cfg.cosmo.input_trajectory));
    }
    if !cfg.cosmo.b_table.is_empty() {
        v.push(PathBuf::from(&cfg.cosmo.b_table));
    }
    v
}

fn dg_params_from(dg: &DgSection, grid: &GridSpec) -> Result<DGParams> {
    let mut p = DGParams::with_options(dg.hbar, dg.mass, dg.d, dg.allow_negative_d)
        .map_err(|e| Error::Config(format!("dg: {e}")))?;
    p.r_spec = RSpec { coeffs: dg.r };
    p.regularization_floor = dg.regularization_floor;
    if let PotentialKind::Cosine = dg.potential {
        p = p.with_potential(cosine_potential(grid, dg.potential_amp));
    }
    Ok(p)
}

fn cosine_potential(grid: &GridSpec, amp: f64) -> Vec<f64> {
    let k = 2.0 * std::f64::consts::PI / grid.length;
    grid.coords().iter().map(|&x| amp * (k * x).cos()).collect()
}

fn named_observable(grid: GridSpec, name: &str) -> Result<Observable> {
    match name {
        "x" => Observable::x(grid, 0),
        "x2" => Observable::x2(grid, 0),
        "cos" => Observable::cos_x(grid, 0),
        "k2" => Observable::k2(grid),
        other => Err(Error::Config(format!("unknown observable '{other}'"))),
    }
}

fn write_file(outdir: &Path, name: &str, contents: &str) -> Result<String> {
    std::fs::write(outdir.join(name), contents)?;
    Ok(name.to_string())
}

fn checkpoint_field(
    field: &WaveField,
    cfg: &ExperimentConfig,
    outdir: &Path,
    files: &mut Vec<String>,
) -> Result<()> {
    if !cfg.output.write_field {
        return Ok(());
    }
    match cfg.output.field_format {
        FieldFormat::Binary => {
            field.write_binary(&outdir.join("field.bin"))?;
            files.push("field.bin".into());
        }
        FieldFormat::Csv => {
            field.write_csv(&outdir.join("field.csv"))?;
            files.push("field.csv".into());
        }
    }
    Ok(())
}

fn initial_one_particle(cfg: &ExperimentConfig, grid: GridSpec) -> Result<WaveField> {
    match cfg.evolve.initial {
        InitialKind::Gaussian => {
            let x0 = cfg.evolve.x0.unwrap_or(grid.length / 2.0);
            let axes = grid.axes(1);
            WaveField::gaussian(
                grid,
                &vec![x0; axes],
                &vec![cfg.evolve.sigma; axes],
                &vec![cfg.evolve.k; axes],
            )
        }
        InitialKind::Plane => {
            let axes = grid.axes(1);
            WaveField::plane_wave(grid, &vec![cfg.evolve.mode; axes])
        }
    }
}

fn run_evolve(cfg: &ExperimentConfig, outdir: &Path) -> Result<RunOutput> {
    let grid = cfg.grid_spec()?;
    let params = dg_params_from(&cfg.dg, &grid)?;
    let psi0 = initial_one_particle(cfg, grid)?;
    let dt = if cfg.evolve.dt > 0.0 {
        cfg.evolve.dt
    } else {
        suggest_dt(&grid, &params)
    };
    let observables = cfg
        .dg
        .observables
        .iter()
        .map(|n| Ok((n.clone(), named_observable(grid, n)?)))
        .collect::<Result<Vec<_>>>()?;
    let (traj, final_field) = evolve(
        &psi0,
        &params,
        cfg.evolve.t_final,
        dt,
        cfg.evolve.sample_every,
        &observables,
    )?;
    let mut files = vec![write_file(outdir, "trajectory.csv", &traj.to_csv(psi0.axes()))?];
    checkpoint_field(&final_field, cfg, outdir, &mut files)?;
    let last = traj.samples.last().unwrap();
    let summary = json!({
        "dt": dt,
        "steps": traj.samples.len(),
        "final_norm": last.norm,
        "final_mean_x": last.mean_x,
        "final_var_x": last.var_x,
    });
    Ok(RunOutput {
        files,
        termination: "t_final_reached".into(),
        summary,
    })
}

fn pair_initial(cfg: &ExperimentConfig, grid: GridSpec, which: PairInitial) -> Result<WaveField> {
    match which {
        PairInitial::Product => {
            let x0a = cfg.pair.x0_a.unwrap_or(grid.length / 2.0);
            let x0b = cfg.pair.x0_b.unwrap_or(grid.length / 2.0);
            let a = WaveField::gaussian(grid, &[x0a], &[cfg.pair.sigma_a], &[cfg.pair.k_a])?;
            let b = WaveField::gaussian(grid, &[x0b], &[cfg.pair.sigma_b], &[cfg.pair.k_b])?;
            WaveField::product(&a, &b)
        }
        PairInitial::Epr => {
            let spec = EPRSpec::new(grid, cfg.epr.sigma_c, cfg.epr.sigma_env)?;
            make_epr(&spec)
        }
    }
}

fn run_evolve_pair(cfg: &ExperimentConfig, outdir: &Path) -> Result<RunOutput> {
    let grid = cfg.grid_spec()?;
    if grid.dim != 1 {
        return Err(Error::Config("pair runs need grid.dim = 1".into()));
    }
    let phi0 = pair_initial(cfg, grid, cfg.pair.initial)?;
    let base = dg_params_from(&cfg.dg, &grid)?;
    let mut pa = base.clone();
    pa.d = cfg.pair.d_a;
    pa.potential = match cfg.pair.potential_a {
        PotentialKind::Cosine => Some(cosine_potential(&grid, cfg.pair.potential_a_amp)),
        PotentialKind::None => None,
    };
    let mut pb = base;
    pb.d = cfg.pair.d_b;
    pb.potential = match cfg.pair.potential_b {
        PotentialKind::Cosine => Some(cosine_potential(&grid, cfg.pair.potential_b_amp)),
        PotentialKind::None => None,
    };
    let pp = PairParams::new(pa, pb);
    let dt = if cfg.pair.dt > 0.0 {
        cfg.pair.dt
    } else {
        suggest_dt_pair(&grid, &pp)
    };
    let (traj, final_field) = evolve_pair(&phi0, &pp, cfg.pair.t_final, dt, cfg.pair.sample_every)?;
    let mut files = vec![write_file(outdir, "pair_trajectory.csv", &traj.to_csv())?];
    checkpoint_field(&final_field, cfg, outdir, &mut files)?;
    let last = traj.samples.last().unwrap();
    let summary = json!({
        "dt": dt,
        "final_norm": last.norm,
        "final_purity_b": last.rho_b.purity(),
    });
    Ok(RunOutput {
        files,
        termination: "t_final_reached".into(),
        summary,
    })
}

fn delta1_inputs(
    cfg: &ExperimentConfig,
    grid: GridSpec,
) -> Result<(WaveField, f64, f64, Vec<f64>, Observable, DGParams)> {
    let spec = EPRSpec::new(grid, cfg.epr.sigma_c, cfg.epr.sigma_env)?;
    let phi = make_epr(&spec)?;
    let d1: &Delta1Section = &cfg.delta1;
    let q = d1.q.unwrap_or(grid.length / 2.0);
    let p = 2.0 * std::f64::consts::PI * d1.p_mode as f64 / grid.length;
    let s_list: Vec<f64> = (0..d1.s_count)
        .map(|i| d1.s_min + (d1.s_max - d1.s_min) * i as f64 / (d1.s_count - 1) as f64)
        .collect();
    let b = named_observable(grid, &d1.observable)?;
    let mut params = dg_params_from(&cfg.dg, &grid)?;
    params.d = d1.d_b;
    Ok((phi, q, p, s_list, b, params))
}

fn run_epr_delta1(cfg: &ExperimentConfig, outdir: &Path) -> Result<RunOutput> {
    let grid = cfg.grid_spec()?;
    if grid.dim != 1 {
        return Err(Error::Config("epr-delta1 needs grid.dim = 1".into()));
    }
    let (phi, q, p, s_list, b, params) = delta1_inputs(cfg, grid)?;
    let res = delta1_sweep(&phi, q, p, &s_list, &b, &params)?;
    let files = vec![write_file(outdir, "delta1.csv", &res.to_csv())?];
    let summary = json!({
        "fitted_slope": res.fitted_slope,
        "predicted_slope": res.predicted_slope,
        "fit_r2": res.fit_r2,
        "slope_ratio": res.fitted_slope / res.predicted_slope,
        "config": cfg.resolved_json(),
        "tool_version": crate::manifest::tool_version(),
    });
    Ok(RunOutput {
        files,
        termination: "t_final_reached".into(),
        summary,
    })
}

fn run_causal_channel(cfg: &ExperimentConfig, outdir: &Path) -> Result<RunOutput> {
    let grid = cfg.grid_spec()?;
    if grid.dim != 1 {
        return Err(Error::Config("causal-channel needs grid.dim = 1".into()));
    }
    let phi0 = pair_initial(cfg, grid, cfg.causal.input)?;
    let base = dg_params_from(&cfg.dg, &grid)?;
    let mut side_a1 = base.clone();
    side_a1.d = cfg.causal.d_a;
    side_a1.potential = if cfg.causal.potential_amp_1 != 0.0 {
        Some(cosine_potential(&grid, cfg.causal.potential_amp_1))
    } else {
        None
    };
    let mut side_a2 = side_a1.clone();
    side_a2.potential = if cfg.causal.potential_amp_2 != 0.0 {
        Some(cosine_potential(&grid, cfg.causal.potential_amp_2))
    } else {
        None
    };
    let mut side_b = base;
    side_b.d = cfg.causal.d_b;
    let pp1 = PairParams::new(side_a1, side_b.clone());
    let pp2 = PairParams::new(side_a2, side_b);
    let dt = if cfg.causal.dt > 0.0 {
        cfg.causal.dt
    } else {
        suggest_dt_pair(&grid, &pp1).min(suggest_dt_pair(&grid, &pp2))
    };
    let rows = causal_channel_demo(&phi0, &pp1, &pp2, cfg.causal.t_final, dt, cfg.causal.sample_every)?;
    let files = vec![write_file(outdir, "causal.csv", &causal_csv(&rows))?];
    let max_distance = rows.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    let summary = json!({
        "dt": dt,
        "max_trace_distance": max_distance,
        "final_trace_distance": rows.last().map(|(_, d)| *d),
        "input": match cfg.causal.input { PairInitial::Epr => "epr", PairInitial::Product => "product" },
    });
    Ok(RunOutput {
        files,
        termination: "t_final_reached".into(),
        summary,
    })
}

fn cosmo_params_from(cfg: &ExperimentConfig) -> Result<CosmoParams> {
    let b_model = if cfg.cosmo.b_table.is_empty() {
        BModel::Constant(cfg.cosmo.b0)
    } else {
        let (ts, bs) = read_b_table(Path::new(&cfg.cosmo.b_table))?;
        BModel::Tabulated { ts, bs }
    };
    let mut p = CosmoParams::new(cfg.cosmo.kappa0_sq, cfg.cosmo.w, b_model)
        .map_err(|e| Error::Config(format!("cosmo: {e}")))?;
    p.a_max = cfg.cosmo.a_max;
    Ok(p)
}

fn read_b_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read b table {}: {e}", path.display())))?;
    let mut ts = Vec::new();
    let mut bs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with('t')) {
            continue;
        }
        let mut cols = line.split(',');
        let t: f64 = cols
            .next()
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Config(format!("bad b table row {}", i + 1)))?;
        let b: f64 = cols
            .next()
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Config(format!("bad b table row {}", i + 1)))?;
        ts.push(t);
        bs.push(b);
    }
    Ok((ts, bs))
}

fn run_cosmo_integrate(cfg: &ExperimentConfig, outdir: &Path) -> Result<RunOutput> {
    let params = cosmo_params_from(cfg)?;
    let rho_m0 = cfg.cosmo.omega_m0 * cfg.cosmo.rho_total0;
    let rho_ph0 = (1.0 - cfg.cosmo.omega_m0) * cfg.cosmo.rho_total0;
    let init = CosmoState::new(0.0, cfg.cosmo.a0, rho_m0, rho_ph0)
        .map_err(|e| Error::Config(format!("cosmo: {e}")))?;
    let tol = Tolerances {
        rtol: cfg.cosmo.rtol,
        atol: cfg.cosmo.atol,
    };
    let traj = integrate(&init, &params, cfg.cosmo.t_final, cfg.cosmo.sample_interval, &tol)?;
    let files = vec![write_file(outdir, "trajectory.csv", &traj.to_csv())?];
    let last = traj.samples.last().unwrap();
    let summary = json!({
        "termination": traj.termination.to_string(),
        "samples": traj.samples.len(),
        "final": {"t": last.t, "a": last.a, "rho_m": last.rho_m, "rho_ph": last.rho_ph},
    });
    Ok(RunOutput {
        files,
        termination: traj.termination.to_string(),
        summary,
    })
}

fn read_trajectory_csv(path: &Path) -> Result<CosmoTrajectory> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read trajectory {}: {e}", path.display())))?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with('t')) {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Config(format!("bad trajectory row {}: {e}", i + 1)))?;
        if cols.len() != 6 {
            return Err(Error::Config(format!(
                "trajectory row {} has {} columns, expected 6 (t,a,H,rho_m,rho_ph,omega_m)",
                i + 1,
                cols.len()
            )));
        }
        samples.push(CosmoSample {
            t: cols[0],
            a: cols[1],
            h: cols[2],
            rho_m: cols[3],
            rho_ph: cols[4],
            omega_m: cols[5],
        });
    }
    Ok(CosmoTrajectory {
        samples,
        termination: Termination::TFinalReached,
    })
}

fn run_cosmo_reconstruct(cfg: &ExperimentConfig, outdir: &Path) -> Result<RunOutput> {
    if cfg.cosmo.input_trajectory.is_empty() {
        return Err(Error::Config(
            "cosmo.input_trajectory: reconstruct-b needs a trajectory CSV".into(),
        ));
    }
    let params = cosmo_params_from(cfg)?;
    let traj = read_trajectory_csv(Path::new(&cfg.cosmo.input_trajectory))?;
    let table = reconstruct_b(&traj, &params)?;
    let intervals = b_sign_intervals(&table, cfg.cosmo.eta);
    let files = vec![write_file(outdir, "b_table.csv", &b_table_csv(&table))?];
    let summary = json!({
        "rows": table.len(),
        "sign_intervals": intervals,
        "has_positive_interval": intervals.iter().any(|iv| iv.sign > 0),
    });
    Ok(RunOutput {
        files,
        termination: "t_final_reached".into(),
        summary,
    })
}

fn run_energy_check(cfg: &ExperimentConfig, outdir: &Path) -> Result<RunOutput> {
    let report = energy_conditions(cfg.energy.rho, cfg.energy.p);
    let summary = serde_json::to_value(report).expect("report serializes");
    let files = vec![write_file(
        outdir,
        "energy.json",
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?];
    Ok(RunOutput {
        files,
        termination: "t_final_reached".into(),
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;

    #[test]
    fn cosmo_integrate_writes_deterministic_files() {
        let cfg = parse_config_str(
            "experiment = \"cosmo-integrate\"\n[cosmo]\nt_final = 0.5\nsample_interval = 0.05\n",
            &[],
        )
        .unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let o1 = execute(&cfg, d1.path()).unwrap();
        let o2 = execute(&cfg, d2.path()).unwrap();
        assert_eq!(o1.termination, "t_final_reached");
        let a = std::fs::read(d1.path().join("trajectory.csv")).unwrap();
        let b = std::fs::read(d2.path().join("trajectory.csv")).unwrap();
        assert_eq!(a, b, "repeated runs must be byte-identical");
    }

    #[test]
    fn reconstruct_b_round_trip_via_files() {
        let cfg = parse_config_str(
            "experiment = \"cosmo-integrate\"\n[cosmo]\nt_final = 1.0\nsample_interval = 0.002\nb0 = 0.1\n",
            &[],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        execute(&cfg, dir.path()).unwrap();
        let traj_path = dir.path().join("trajectory.csv");

        let cfg2 = parse_config_str(
            &format!(
                "experiment = \"cosmo-reconstruct-b\"\n[cosmo]\nb0 = 0.1\ninput_trajectory = \"{}\"\n",
                traj_path.display()
            ),
            &[],
        )
        .unwrap();
        let out = execute(&cfg2, dir.path()).unwrap();
        assert!(out.summary["has_positive_interval"].as_bool().unwrap());
        let table = std::fs::read_to_string(dir.path().join("b_table.csv")).unwrap();
        let mid_line = table.lines().nth(table.lines().count() / 2).unwrap();
        let b: f64 = mid_line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((b - 0.1).abs() < 1e-4, "reconstructed {b}");
    }

    #[test]
    fn evolve_instability_maps_to_error() {
        let cfg = parse_config_str(
            "experiment = \"evolve\"\n[grid]\npoints = 64\n[dg]\nd = 0.01\n[evolve]\ndt = 0.5\nt_final = 5.0\n",
            &[],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let err = execute(&cfg, dir.path()).unwrap_err();
        assert!(matches!(err, Error::Instability { .. }), "{err}");
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn energy_check_truth_table_entry() {
        let cfg = parse_config_str(
            "experiment = \"energy-check\"\n[energy]\nrho = 1.0\np = -1.2\n",
            &[],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = execute(&cfg, dir.path()).unwrap();
        assert_eq!(out.summary["weak"], serde_json::json!(false));
        assert_eq!(out.summary["dominant"], serde_json::json!(false));
    }
}
