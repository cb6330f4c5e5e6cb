use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use nlqg::config::{parse_config, Experiment, ExperimentConfig};
use nlqg::errors::Error;
use nlqg::experiments::{execute, input_files};
use nlqg::manifest::{sha256_file, tool_version, RunManifest};

/// Deterministic experiments on nonlinear wave dynamics and two-fluid
/// cosmology. Output directory resolution: --out, else $NLQG_OUT, else ./out.
#[derive(Parser)]
#[command(name = "nlqg", version, about)]
struct Cli {
    /// List registered experiments and exit.
    #[arg(long)]
    list_experiments: bool,

    /// Print the full default config for an experiment and exit.
    #[arg(long, value_name = "EXPERIMENT")]
    print_defaults: Option<String>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (TOML).
    #[arg(long)]
    config: PathBuf,

    /// Output directory; falls back to $NLQG_OUT, then ./out.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Config overrides, e.g. --override dg.d=0.02 (repeatable).
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One-particle evolution with trajectory diagnostics.
    Evolve(RunArgs),
    /// Two-particle separating evolution with reduced-state snapshots.
    EvolvePair(RunArgs),
    /// Sharpness sweep of the post-collapse response difference.
    EprDelta1(RunArgs),
    /// Reduced-state trace distance under a-side parameter variation.
    CausalChannel(RunArgs),
    /// Two-fluid FRW experiments.
    Cosmo {
        #[command(subcommand)]
        sub: CosmoCommand,
    },
}

#[derive(Subcommand)]
enum CosmoCommand {
    /// Integrate the two-fluid background.
    Integrate(RunArgs),
    /// Reconstruct the coupling function from a trajectory CSV.
    ReconstructB(RunArgs),
    /// Evaluate the perfect-fluid energy conditions.
    EnergyCheck(RunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if cli.list_experiments {
        for e in Experiment::ALL {
            println!("{}", e.name());
        }
        return ExitCode::SUCCESS;
    }
    if let Some(name) = &cli.print_defaults {
        return match Experiment::from_name(name) {
            Ok(exp) => {
                let cfg = ExperimentConfig::defaults(exp);
                print!("{}", toml::to_string_pretty(&cfg).expect("defaults serialize"));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        };
    }

    let Some(command) = cli.command else {
        eprintln!("error: no subcommand; try --help or --list-experiments");
        return ExitCode::from(2);
    };

    let (expected, args) = match &command {
        Command::Evolve(a) => (Experiment::Evolve, a),
        Command::EvolvePair(a) => (Experiment::EvolvePair, a),
        Command::EprDelta1(a) => (Experiment::EprDelta1, a),
        Command::CausalChannel(a) => (Experiment::CausalChannel, a),
        Command::Cosmo { sub } => match sub {
            CosmoCommand::Integrate(a) => (Experiment::CosmoIntegrate, a),
            CosmoCommand::ReconstructB(a) => (Experiment::CosmoReconstructB, a),
            CosmoCommand::EnergyCheck(a) => (Experiment::EnergyCheck, a),
        },
    };

    match run(expected, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn out_dir(args: &RunArgs) -> PathBuf {
    args.out
        .clone()
        .or_else(|| std::env::var_os("NLQG_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn run(expected: Experiment, args: &RunArgs) -> Result<(), Error> {
    let cfg = parse_config(&args.config, &args.overrides)?;
    if cfg.experiment != expected {
        return Err(Error::Config(format!(
            "config names experiment '{}' but the subcommand is '{}'",
            cfg.experiment.name(),
            expected.name()
        )));
    }
    let outdir = out_dir(args);
    std::fs::create_dir_all(&outdir)?;

    let mut input_hashes = BTreeMap::new();
    input_hashes.insert(
        args.config.display().to_string(),
        sha256_file(&args.config)?,
    );
    for input in input_files(&cfg) {
        input_hashes.insert(input.display().to_string(), sha256_file(&input)?);
    }

    let started = Instant::now();
    let result = execute(&cfg, &outdir);
    let duration = started.elapsed().as_secs_f64();

    let (termination, aborted_step, files, summary) = match &result {
        Ok(out) => (
            out.termination.clone(),
            None,
            out.files.clone(),
            Some(out.summary.clone()),
        ),
        Err(Error::Instability { step, .. }) => {
            ("numerical_instability".to_string(), Some(*step), vec![], None)
        }
        Err(Error::StepUnderflow { .. }) => ("numerical_instability".to_string(), None, vec![], None),
        Err(Error::Unphysical { .. }) => ("unphysical".to_string(), None, vec![], None),
        Err(e) if e.exit_code() == 2 => ("validation_error".to_string(), None, vec![], None),
        Err(_) => ("error".to_string(), None, vec![], None),
    };

    if let Some(summary) = &summary {
        std::fs::write(
            outdir.join("summary.json"),
            serde_json::to_string_pretty(summary).expect("summary serializes"),
        )?;
    }

    let mut output_files = files;
    if summary.is_some() {
        output_files.push("summary.json".into());
    }
    let manifest = RunManifest {
        tool_version: tool_version(),
        experiment: cfg.experiment.name().to_string(),
        resolved_config: cfg.resolved_json(),
        input_hashes,
        output_files,
        duration_seconds: duration,
        termination,
        aborted_step,
    };
    manifest.write_atomic(&outdir.join("manifest.json"))?;

    result.map(|out| {
        println!(
            "{}: {} -> {}",
            cfg.experiment.name(),
            out.termination,
            outdir.display()
        );
    })
}
