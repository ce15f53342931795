//! `rkf`: estimator sweeps, tracking benchmarks and sampler checks.
//!
//! Exit status: 0 success, 1 a failed check or a runtime error,
//! 2 bad flags or configuration (nothing is written).

mod config;
mod output;
mod plot;
mod stable_check;
mod sweep;
mod track;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use rkf_core::scale::GammaSeriesConfig;

use config::ExperimentConfig;
use stable_check::{CheckArgs, CheckOutcome};
use sweep::{SweepArgs, SweepMethod};
use track::TrackOptions;

#[derive(Parser)]
#[command(name = "rkf", version, about = "Robust Kalman filtering under sub-Gaussian alpha-stable noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one scale estimator on an (alpha, eta) grid.
    ScaleSweep {
        /// Comma-separated stable indices in (0, 2].
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        /// Comma-separated residual statistics.
        #[arg(long, value_delimiter = ',', default_value = "0.1,1,10,100")]
        eta_grid: Vec<f64>,
        /// Measurement dimension.
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, value_enum, default_value = "gsis")]
        method: SweepMethod,
        /// Importance-sampling particles (is, gsis, gsgl). Default 100.
        #[arg(long)]
        n: Option<usize>,
        /// Laguerre order (glq, gsgl). Default 2.
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Gamma-series truncation.
        #[arg(long, default_value_t = 30)]
        cap_xi: usize,
        /// Gamma-series stability tolerance.
        #[arg(long, default_value_t = 1e-2)]
        eps1: f64,
        /// Gamma-series stability window.
        #[arg(long, default_value_t = 4)]
        tau1: usize,
        /// Fill the wall_ns column (makes output nondeterministic).
        #[arg(long)]
        timing: bool,
    },
    /// Run a constant-velocity tracking Monte Carlo experiment.
    Track {
        /// JSON experiment file.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Built-in experiment: gaussian, sgas-sweep, student-t-sweep, gm-sweep.
        #[arg(long)]
        preset: Option<String>,
        /// Output directory (overrides the config's `out`). Default `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// 300 steps and 100 Monte Carlo runs.
        #[arg(long)]
        paper_scale: bool,
        #[arg(long)]
        no_plots: bool,
        /// Fill the avg_time_s column (makes output nondeterministic).
        #[arg(long)]
        timing: bool,
    },
    /// Check the mixing-law sampler against its Laplace transform and CDF.
    StableCheck {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the version.
    Version,
}

fn usage_error(subcommand: &str, msg: &str) -> ExitCode {
    let mut root = Cli::command();
    root.build();
    let mut cmd = root.find_subcommand(subcommand).cloned().unwrap_or(root);
    let err = cmd.error(clap::error::ErrorKind::ValueValidation, msg);
    let _ = err.print();
    ExitCode::from(2)
}

fn runtime_error(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(1)
}

fn thread_pool() -> Result<rayon::ThreadPool, String> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("RKF_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| format!("RKF_THREADS must be a positive integer, got `{v}`"))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::ScaleSweep {
            alpha,
            eta_grid,
            m,
            method,
            n,
            l,
            seed,
            out,
            cap_xi,
            eps1,
            tau1,
            timing,
        } => {
            let args = SweepArgs {
                alphas: alpha,
                etas: eta_grid,
                m,
                method,
                particles: n,
                order: l,
                seed,
                series: GammaSeriesConfig { cap_xi, eps1, tau1 },
                timing,
            };
            if let Err(msg) = args.validate() {
                return usage_error("scale-sweep", &msg);
            }
            match sweep::run(&args, &out) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => runtime_error(e),
            }
        }
        Command::Track {
            config,
            preset,
            out,
            seed,
            paper_scale,
            no_plots,
            timing,
        } => {
            let loaded = match (&config, &preset) {
                (Some(path), _) => ExperimentConfig::load(path),
                (None, Some(name)) => ExperimentConfig::from_preset(name),
                (None, None) => unreachable!("clap requires --config or --preset"),
            };
            let mut exp = match loaded {
                Ok(exp) => exp,
                Err(e) => return usage_error("track", &e.to_string()),
            };
            if let Some(seed) = seed {
                exp.scenario.seed = seed;
            }
            exp.paper_scale |= paper_scale;
            let scenarios = match exp.scenarios() {
                Ok(s) => s,
                Err(e) => return usage_error("track", &e.to_string()),
            };
            let pool = match thread_pool() {
                Ok(p) => p,
                Err(msg) => return usage_error("track", &msg),
            };
            let out_dir = out.or(exp.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let opts = TrackOptions {
                plots: exp.plots && !no_plots,
                timing,
                sweep: exp.is_sweep(),
            };
            let result = track::run_scenarios(&scenarios, &pool)
                .and_then(|results| track::write_outputs(&results, &out_dir, &opts));
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => runtime_error(e),
            }
        }
        Command::StableCheck { alpha, samples, seed } => match stable_check::run(&CheckArgs { alpha, samples, seed }) {
            Ok(CheckOutcome::Passed) => ExitCode::SUCCESS,
            Ok(CheckOutcome::Failed(lines)) => {
                for line in lines {
                    eprintln!("failed: {line}");
                }
                ExitCode::from(1)
            }
            Err(msg) => usage_error("stable-check", &msg),
        },
        Command::Version => {
            println!("rkf {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}
