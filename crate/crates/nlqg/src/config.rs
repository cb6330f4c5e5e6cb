//! Flat single-file experiment configuration: TOML with sectioned keys,
//! unknown keys rejected, defaults documented by `--print-defaults`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::errors::{Error, Result};
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Evolve,
    EvolvePair,
    EprDelta1,
    CausalChannel,
    CosmoIntegrate,
    CosmoReconstructB,
    EnergyCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Evolve,
        Experiment::EvolvePair,
        Experiment::EprDelta1,
        Experiment::CausalChannel,
        Experiment::CosmoIntegrate,
        Experiment::CosmoReconstructB,
        Experiment::EnergyCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Evolve => "evolve",
            Experiment::EvolvePair => "evolve-pair",
            Experiment::EprDelta1 => "epr-delta1",
            Experiment::CausalChannel => "causal-channel",
            Experiment::CosmoIntegrate => "cosmo-integrate",
            Experiment::CosmoReconstructB => "cosmo-reconstruct-b",
            Experiment::EnergyCheck => "energy-check",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .find(|e| e.name() == name)
            .copied()
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown experiment '{name}'; known: {}",
                    Self::ALL.map(|e| e.name()).join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub dim: usize,
    pub points: usize,
    pub length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection {
            dim: 1,
            points: 512,
            length: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    None,
    /// amp * cos(2 pi x / L)
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DgSection {
    pub hbar: f64,
    pub mass: f64,
    pub d: f64,
    pub allow_negative_d: bool,
    /// Coefficients of the five real degree-zero functionals.
    pub r: [f64; 5],
    pub regularization_floor: f64,
    pub potential: PotentialKind,
    pub potential_amp: f64,
    /// Diagnostics recorded along the trajectory: x, x2, cos, k2.
    pub observables: Vec<String>,
}

impl Default for DgSection {
    fn default() -> Self {
        DgSection {
            hbar: 1.0,
            mass: 1.0,
            d: 0.0,
            allow_negative_d: false,
            r: [0.0; 5],
            regularization_floor: 1e-12,
            potential: PotentialKind::None,
            potential_amp: 0.0,
            observables: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    Gaussian,
    Plane,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSection {
    pub initial: InitialKind,
    pub sigma: f64,
    /// Packet center; box midpoint when absent.
    pub x0: Option<f64>,
    pub k: f64,
    /// Plane-wave mode number when initial = "plane".
    pub mode: i64,
    pub t_final: f64,
    /// Step size; 0 selects the suggested stability bound.
    pub dt: f64,
    pub sample_every: usize,
}

impl Default for EvolveSection {
    fn default() -> Self {
        EvolveSection {
            initial: InitialKind::Gaussian,
            sigma: 1.0,
            x0: None,
            k: 0.0,
            mode: 1,
            t_final: 1.0,
            dt: 0.0,
            sample_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairInitial {
    Product,
    Epr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairSection {
    pub initial: PairInitial,
    pub d_a: f64,
    pub d_b: f64,
    pub potential_a: PotentialKind,
    pub potential_a_amp: f64,
    pub potential_b: PotentialKind,
    pub potential_b_amp: f64,
    pub sigma_a: f64,
    pub x0_a: Option<f64>,
    pub k_a: f64,
    pub sigma_b: f64,
    pub x0_b: Option<f64>,
    pub k_b: f64,
    pub t_final: f64,
    pub dt: f64,
    pub sample_every: usize,
}

impl Default for PairSection {
    fn default() -> Self {
        PairSection {
            initial: PairInitial::Product,
            d_a: 0.0,
            d_b: 0.0,
            potential_a: PotentialKind::None,
            potential_a_amp: 0.0,
            potential_b: PotentialKind::None,
            potential_b_amp: 0.0,
            sigma_a: 1.0,
            x0_a: None,
            k_a: 0.0,
            sigma_b: 1.0,
            x0_b: None,
            k_b: 0.0,
            t_final: 0.5,
            dt: 0.0,
            sample_every: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EprSection {
    pub sigma_c: f64,
    pub sigma_env: f64,
}

impl Default for EprSection {
    fn default() -> Self {
        EprSection {
            sigma_c: 0.15625,
            sigma_env: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Delta1Section {
    pub s_min: f64,
    pub s_max: f64,
    pub s_count: usize,
    /// Position outcome; box midpoint when absent.
    pub q: Option<f64>,
    /// Momentum outcome as a grid mode number: p = 2 pi mode / L.
    pub p_mode: i64,
    pub d_b: f64,
    /// Observable on particle b: x, x2, cos, or k2.
    pub observable: String,
}

impl Default for Delta1Section {
    fn default() -> Self {
        Delta1Section {
            s_min: 0.2,
            s_max: 2.0,
            s_count: 8,
            q: None,
            p_mode: 10,
            d_b: 0.01,
            observable: "cos".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CausalSection {
    pub input: PairInitial,
    pub d_a: f64,
    pub d_b: f64,
    /// Amplitudes of the a-side cosine potential in the two variants.
    pub potential_amp_1: f64,
    pub potential_amp_2: f64,
    pub t_final: f64,
    pub dt: f64,
    pub sample_every: usize,
}

impl Default for CausalSection {
    fn default() -> Self {
        CausalSection {
            input: PairInitial::Epr,
            d_a: 0.02,
            d_b: 0.02,
            potential_amp_1: 0.0,
            potential_amp_2: 0.5,
            t_final: 1.0,
            dt: 0.0,
            sample_every: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CosmoSection {
    pub kappa0_sq: f64,
    pub w: f64,
    pub b0: f64,
    /// Path to a t,b CSV; when set it overrides b0.
    pub b_table: String,
    pub a0: f64,
    pub omega_m0: f64,
    pub rho_total0: f64,
    pub t_final: f64,
    pub sample_interval: f64,
    pub a_max: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Trajectory CSV consumed by cosmo-reconstruct-b.
    pub input_trajectory: String,
    /// Dead band for sign classification of the reconstructed b.
    pub eta: f64,
}

impl Default for CosmoSection {
    fn default() -> Self {
        CosmoSection {
            kappa0_sq: 3.0,
            w: -1.2,
            b0: 0.1,
            b_table: String::new(),
            a0: 1.0,
            omega_m0: 0.3,
            rho_total0: 1.0,
            t_final: 2.0,
            sample_interval: 0.001,
            a_max: 1e6,
            rtol: 1e-10,
            atol: 1e-12,
            input_trajectory: String::new(),
            eta: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergySection {
    pub rho: f64,
    pub p: f64,
}

impl Default for EnergySection {
    fn default() -> Self {
        EnergySection { rho: 1.0, p: -1.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldFormat {
    Binary,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub write_field: bool,
    pub field_format: FieldFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            write_field: false,
            field_format: FieldFormat::Binary,
        }
    }
}

/// The fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub dg: DgSection,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub pair: PairSection,
    #[serde(default)]
    pub epr: EprSection,
    #[serde(default)]
    pub delta1: Delta1Section,
    #[serde(default)]
    pub causal: CausalSection,
    #[serde(default)]
    pub cosmo: CosmoSection,
    #[serde(default)]
    pub energy: EnergySection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            grid: GridSection::default(),
            dg: DgSection::default(),
            evolve: EvolveSection::default(),
            pair: PairSection::default(),
            epr: EprSection::default(),
            delta1: Delta1Section::default(),
            causal: CausalSection::default(),
            cosmo: CosmoSection::default(),
            energy: EnergySection::default(),
            output: OutputSection::default(),
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.dim, self.grid.points, self.grid.length)
            .map_err(|e| Error::Config(format!("grid: {e}")))
    }

    /// Semantic constraints beyond what deserialization can see, each
    /// reported with its key path.
    pub fn validate(&self) -> Result<()> {
        self.grid_spec()?;
        let check = |ok: bool, key: &str, msg: String| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{key}: {msg}")))
            }
        };
        check(self.dg.hbar > 0.0, "dg.hbar", format!("must be > 0, got {}", self.dg.hbar))?;
        check(self.dg.mass > 0.0, "dg.mass", format!("must be > 0, got {}", self.dg.mass))?;
        check(
            self.dg.d >= 0.0 || self.dg.allow_negative_d,
            "dg.d",
            format!(
                "negative diffusion ({}) requires dg.allow_negative_d = true",
                self.dg.d
            ),
        )?;
        check(
            self.dg.regularization_floor > 0.0,
            "dg.regularization_floor",
            "must be > 0".into(),
        )?;
        for name in &self.dg.observables {
            check(
                matches!(name.as_str(), "x" | "x2" | "cos" | "k2"),
                "dg.observables",
                format!("unknown observable '{name}' (known: x, x2, cos, k2)"),
            )?;
        }
        check(
            matches!(self.delta1.observable.as_str(), "x" | "x2" | "cos" | "k2"),
            "delta1.observable",
            format!("unknown observable '{}'", self.delta1.observable),
        )?;
        check(
            self.delta1.s_count >= 4,
            "delta1.s_count",
            format!("sweep needs >= 4 points, got {}", self.delta1.s_count),
        )?;
        check(
            self.delta1.s_max > self.delta1.s_min && self.delta1.s_min > 0.0,
            "delta1.s_min",
            "need 0 < s_min < s_max".into(),
        )?;
        check(
            self.evolve.t_final >= 0.0,
            "evolve.t_final",
            "must be >= 0".into(),
        )?;
        check(self.evolve.sigma > 0.0, "evolve.sigma", "must be > 0".into())?;
        check(self.pair.t_final >= 0.0, "pair.t_final", "must be >= 0".into())?;
        check(self.causal.t_final > 0.0, "causal.t_final", "must be > 0".into())?;
        check(
            self.cosmo.kappa0_sq > 0.0,
            "cosmo.kappa0_sq",
            "must be > 0".into(),
        )?;
        check(self.cosmo.a0 > 0.0, "cosmo.a0", "must be > 0".into())?;
        check(
            (0.0..=1.0).contains(&self.cosmo.omega_m0),
            "cosmo.omega_m0",
            format!("must lie in [0, 1], got {}", self.cosmo.omega_m0),
        )?;
        check(
            self.cosmo.rho_total0 >= 0.0,
            "cosmo.rho_total0",
            "must be >= 0".into(),
        )?;
        check(
            self.cosmo.sample_interval > 0.0,
            "cosmo.sample_interval",
            "must be > 0".into(),
        )?;
        check(
            self.cosmo.rtol > 0.0 && self.cosmo.atol > 0.0,
            "cosmo.rtol",
            "tolerances must be > 0".into(),
        )?;
        check(self.cosmo.eta >= 0.0, "cosmo.eta", "must be >= 0".into())?;
        Ok(())
    }

    /// Echo of the resolved configuration for manifests and summaries.
    pub fn resolved_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Parse a config file, apply `key=value` overrides, validate.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, overrides)
}

pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e| Error::Config(format!("parse error: {e}")))?;
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    let rendered = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
    let cfg: ExperimentConfig =
        toml::from_str(&rendered).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Apply one `section.key=value` (or `key=value`) override. The value is
/// parsed as a TOML literal, falling back to a bare string.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' is not key=value")))?;
    let value = parse_toml_value(raw.trim());
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.is_empty() || keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("override '{spec}' has an empty key path")));
    }
    let mut cursor = table;
    for key in &keys[..keys.len() - 1] {
        cursor = cursor
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{spec}': '{key}' is not a table")))?;
    }
    cursor.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}

fn parse_toml_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap(),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}
