//! `fockduet`: experiments on two microwave resonators coupled through
//! one tunable qubit. Verbs: `scan` (number-splitting selectivity
//! grid), `synth` (compile and replay a target state), `timing`
//! (closed-form duration tables), `validate` (built-in trajectory
//! self-check).
//!
//! Exit codes: 0 success, 2 synthesis failure, 3 configuration or I/O
//! error, 4 numerical tolerance failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use fockduet_cli::config::ExperimentConfig;
use fockduet_core::params::units;
use fockduet_cli::scan::{run_selectivity_scan, ScanRequest};
use fockduet_cli::selfcheck::run_trajectory_check;
use fockduet_cli::synth::{render_report, run_synthesis, RunMode};
use fockduet_cli::timing::run_timing_table;
use fockduet_cli::{output, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// Idealized replay only.
    Ideal,
    /// Idealized replay plus lab-frame dynamics.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DriveFreq {
    /// Use the configured or second-order tone frequency as given.
    Literal,
    /// Search around the second-order value for the strongest
    /// on-diagonal response.
    Autotune,
}

#[derive(Debug, Parser)]
#[command(name = "fockduet", version, about = "Entangled-state synthesis and spectroscopy for a qubit-coupled resonator pair")]
struct Cli {
    /// Experiment configuration file (JSON); defaults are built in.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for results and the run manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override for stochastic targets.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Control model(s) for synthesis replay.
    #[arg(long, global = true, value_enum, default_value_t = Mode::Ideal)]
    mode: Mode,
    /// Scan tone policy.
    #[arg(long = "drive-freq", global = true, value_enum, default_value_t = DriveFreq::Autotune)]
    drive_freq: DriveFreq,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Maximum qubit transition probability over a grid of initial
    /// Fock states under a constant selective tone.
    Scan,
    /// Compile a target state to gates, lower to pulses, and replay.
    Synth {
        /// Target override: noon:NA,NB, max-entangled:N, random:NA,NB,
        /// vacuum, or file:PATH.
        #[arg(long)]
        target: Option<String>,
    },
    /// Closed-form preparation-time table at both operating points.
    Timing,
    /// Verify the built-in (3, 3) ladder trajectory step by step.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let started = Instant::now();
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Command::Synth { target: Some(t) } = &cli.command {
        cfg.synth.target.clone_from(t);
    }
    let (params, resolved, warnings) = cfg.system.resolve()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    let out = output::prepare_dir(&out_dir)?;

    // A failed tolerance verdict is deferred so the manifest and
    // artifacts still land on disk for inspection.
    let mut verdict: Option<CliError> = None;
    let command_name = match cli.command {
        Command::Scan => {
            // The scan has its own amplitude default: the hard
            // selectivity bound, the value of the reference spectrum.
            // Synthesis keeps the safer recommended amplitude.
            let scan_rabi_mhz = cfg
                .scan
                .rabi_mhz
                .or(cfg.system.rabi_mhz)
                .unwrap_or(resolved.hard_bound_rabi_mhz);
            let mut scan_params = params;
            scan_params.rabi_amplitude = units::mhz_to_rad(scan_rabi_mhz);

            let req = ScanRequest::from_config(&cfg.scan, cli.drive_freq == DriveFreq::Literal);
            let result = run_selectivity_scan(&scan_params, &req)?;
            output::write_text(&out.join("scan.csv"), &result.to_csv())?;
            output::write_json(&out.join("scan_meta.json"), &result.metadata)?;

            let m = &result.metadata;
            println!(
                "tone: {:.6} GHz ({}no offset reference {:.6} GHz, offset {:+.3} MHz)",
                m.drive_ghz,
                if m.autotuned { "autotuned, " } else { "literal, " },
                m.reference_drive_ghz,
                m.detuning_from_reference_mhz
            );
            let mut on_min: Option<f64> = None;
            let mut off_max: Option<f64> = None;
            for c in &result.grid {
                if c.n_a as i64 - c.n_b as i64 == m.diagonal {
                    on_min = Some(on_min.map_or(c.max_prob, |v| v.min(c.max_prob)));
                } else {
                    off_max = Some(off_max.map_or(c.max_prob, |v| v.max(c.max_prob)));
                }
                println!("cell ({}, {}): max transition probability {:.6}", c.n_a, c.n_b, c.max_prob);
            }
            if let (Some(on), Some(off)) = (on_min, off_max) {
                println!(
                    "weakest on-diagonal {:.6}, strongest off-diagonal {:.6} ({})",
                    on,
                    off,
                    if on > off { "separated" } else { "NOT separated" }
                );
            }
            "scan"
        }
        Command::Synth { .. } => {
            let mode = match cli.mode {
                Mode::Ideal => RunMode::Ideal,
                Mode::Full => RunMode::Full,
            };
            let report = run_synthesis(&params, &cfg.synth.target, cfg.seed, mode, &out)?;
            print!("{}", render_report(&report));
            "synth"
        }
        Command::Timing => {
            let table = run_timing_table(cfg.timing.max_photons)?;
            output::write_text(&out.join("timing.csv"), &table.to_csv())?;
            print!("{}", table.render());
            if !table.violations.is_empty() {
                verdict = Some(CliError::numerical(table.violations.join("; ")));
            }
            "timing"
        }
        Command::Validate => {
            let check = run_trajectory_check()?;
            output::write_json(&out.join("validate.json"), &check)?;
            print!("{}", check.render());
            if !check.all_pass {
                verdict = Some(CliError::numerical(
                    "trajectory self-check failed; see validate.json",
                ));
            }
            "validate"
        }
    };

    output::write_manifest(
        &out,
        command_name,
        &cfg,
        &resolved,
        &warnings,
        started.elapsed().as_secs_f64(),
    )?;
    match verdict {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
