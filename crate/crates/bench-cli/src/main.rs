use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use bench_cli::{parse_sweep, resolve_map, subjects};
use chair_core::experiment::{CohortConfig, DEFAULT_SNR_DB, DEFAULT_SUBJECTS};
use chair_core::metrics::fmt2;
use chair_core::sim::EpisodeConfig;
use chair_core::Execution;
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(version, about = "Synthetic-subject experiments for the hybrid SSVEP + blink wheelchair interface")]
struct Cli {
    /// Master seed; every output is a function of it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Number of synthetic subjects in the SNR sweep.
    #[arg(long, global = true, default_value_t = DEFAULT_SUBJECTS)]
    subjects: usize,
    /// SSVEP SNR range of the sweep in dB, as LO:HI.
    #[arg(long, global = true, value_parser = parse_sweep, allow_hyphen_values = true)]
    snr_sweep: Option<(f64, f64)>,
    /// Profile TOML to use instead of the SNR sweep.
    #[arg(long, global = true)]
    profiles: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Run on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write calibration and held-out feature sets and the subject profiles.
    Synth,
    /// Fit one model per subject by Bayesian search over cross-validated accuracy.
    Train,
    /// Held-out accuracy and the online protocol, using models from `train`.
    Eval,
    /// Randomized headless closed-loop episodes with safety checks.
    Simulate {
        /// Built-in map id (`home`, `open`) or a map file.
        #[arg(long, default_value = "home")]
        map: String,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        /// Episode length, s.
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        /// Read exact ranges instead of noisy ones.
        #[arg(long)]
        noise_free_sensors: bool,
    },
    /// Full protocol for every subject; writes report.txt, report.csv and report.json.
    Report,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::Parallel };
    let (lo, hi) = cli.snr_sweep.unwrap_or(DEFAULT_SNR_DB);
    let cohort = CohortConfig::new(cli.subjects, cli.seed, lo, hi);
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::Synth => {
            let files = bench_cli::synth(&subjects(&cohort, cli.profiles.as_deref())?, out, exec)?;
            println!("wrote {} files to {}", files.len(), out.display());
        }
        Command::Train => {
            for r in bench_cli::train(&subjects(&cohort, cli.profiles.as_deref())?, &cohort, out, exec)? {
                println!("{:<8} C {:.3e} gamma {:.3e} cv {}%", r.subject, r.c, r.gamma, fmt2(r.cv_accuracy));
            }
        }
        Command::Eval => {
            for r in bench_cli::eval(&subjects(&cohort, cli.profiles.as_deref())?, out, exec)? {
                println!(
                    "{:<8} test {}% success {}% itr {} bits/min",
                    r.subject,
                    fmt2(r.test_accuracy),
                    fmt2(r.success_rate),
                    fmt2(r.itr)
                );
            }
        }
        Command::Simulate { map, episodes, duration, noise_free_sensors } => {
            let world = resolve_map(&map)?;
            let cfg = EpisodeConfig { duration_s: duration, ..EpisodeConfig::default() };
            let s = bench_cli::simulate(&world, episodes, &cfg, noise_free_sensors, cli.seed, out, exec)?;
            println!(
                "{} episodes, {} ticks: {} force-stops, {} collisions, {} unsafe ticks, {} latch violations",
                s.episodes, s.ticks, s.force_stops, s.collisions, s.unsafe_ticks, s.latch_violations
            );
            if s.unsafe_episodes > 0 {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Report => {
            let report = bench_cli::report(&subjects(&cohort, cli.profiles.as_deref())?, &cohort, out, exec)?;
            print!("{}", report.to_table());
        }
    }
    Ok(ExitCode::SUCCESS)
}
