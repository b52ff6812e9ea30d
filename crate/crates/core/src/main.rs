use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spinchaos::config::{parse_config, Config};
use spinchaos::ensemble::{CalibrationObjective, SearchSpace};
use spinchaos::output::read_file;
use spinchaos::pipeline::{self, AnalyzeOptions, FieldGrid, SimulateOptions, OUTCOMES_FILE};
use spinchaos::{Error, Result};

#[derive(Parser)]
#[command(name = "spinchaos", version, about = "Deterministic-chaos spin model of Stern-Gerlach statistics")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value`); shipped defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides `master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    /// Use the full 1001 x 100 ensemble and its smoothing widths.
    #[arg(long, global = true)]
    full: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the loop field on a grid and write field.csv.
    Field {
        #[arg(long, default_value_t = -0.2, allow_hyphen_values = true)]
        x_min: f64,
        #[arg(long, default_value_t = 0.2, allow_hyphen_values = true)]
        x_max: f64,
        #[arg(long, default_value_t = 81)]
        nx: usize,
        #[arg(long, default_value_t = -0.1, allow_hyphen_values = true)]
        z_min: f64,
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        z_max: f64,
        #[arg(long, default_value_t = 41)]
        nz: usize,
    },
    /// Run the ensemble and write outcomes.csv with its manifest.
    Simulate {
        /// Also dump one unperturbed trajectory starting at this angle.
        #[arg(long)]
        trace_angle: Option<f64>,
        #[arg(long, default_value_t = 10)]
        trace_stride: usize,
    },
    /// Smooth, score and measure an outcome table.
    Analyze {
        /// Outcome table; defaults to outcomes.csv in the output directory.
        #[arg(long)]
        outcomes: Option<PathBuf>,
    },
    /// Grid search over damping and inertia around the configured values.
    Calibrate {
        /// Search spans `[value / span, value * span]` on each axis.
        #[arg(long, default_value_t = 2.0)]
        span: f64,
        #[arg(long, default_value_t = 5)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        refine: usize,
    },
    /// Write an SVG of the reference curve and an optional simulated curve.
    Plot {
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long, default_value = "pdown.svg")]
        name: String,
    },
    /// Check a simulate manifest and print the acceptance summary.
    Report,
}

fn load_config(common: &Common) -> Result<Config> {
    let mut config = match &common.config {
        Some(path) => parse_config(&read_file(path)?)?,
        None => Config::default(),
    };
    if let Some(seed) = common.seed {
        config.master_seed = seed;
    }
    if let Some(out) = &common.out {
        config.output_dir = out.display().to_string();
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let config = load_config(common)?;
    let out = Path::new(&config.output_dir).to_path_buf();
    let scale = config.scale(common.full);
    match cli.command {
        Command::Field { x_min, x_max, nx, z_min, z_max, nz } => {
            let grid = FieldGrid { x_min, x_max, nx, z_min, z_max, nz };
            let rows = pipeline::write_field(&config, &grid, &out)?;
            let flagged = rows.iter().filter(|r| r.field.is_none()).count();
            println!("wrote {} rows ({flagged} flagged near the wire)", rows.len());
        }
        Command::Simulate { trace_angle, trace_stride } => {
            let opts = SimulateOptions {
                n_angles: scale.n_angles,
                n_runs: scale.n_runs,
                master_seed: config.master_seed,
                workers: common.workers,
            };
            let result = pipeline::cmd_simulate(&config, &opts, &out)?;
            println!(
                "wrote {} outcome rows ({} unsettled)",
                result.n_angles() * result.n_runs(),
                result.unsettled_count()
            );
            if let Some(theta) = trace_angle {
                let n = pipeline::cmd_trace(&config, theta, trace_stride, &out)?;
                println!("wrote {n} trace rows");
            }
        }
        Command::Analyze { outcomes } => {
            let input = outcomes.unwrap_or_else(|| out.join(OUTCOMES_FILE));
            let opts = AnalyzeOptions {
                half_width: scale.half_width,
                compare_half_width: scale.compare_half_width,
                step_lengths: config.step_lengths(),
            };
            let a = pipeline::cmd_analyze(&input, &config, &opts, &out)?;
            println!("rmse raw {:.4}, w{} {:.4}, w{} {:.4}", a.rmse_raw, a.compare_half_width, a.rmse_compare, a.half_width, a.rmse_smoothed);
            println!(
                "d_f raw {:.3}, w{} {:.3}, w{} {:.3}",
                a.dim_raw.d_f, a.compare_half_width, a.dim_compare.d_f, a.half_width, a.dim_smoothed.d_f
            );
        }
        Command::Calibrate { span, points, refine } => {
            if !(span > 1.0) || points == 0 {
                return Err(Error::Config { key: "span".into(), reason: "need span > 1 and points >= 1".into() });
            }
            let mut space = SearchSpace::grid(
                SearchSpace::log_range(config.damping / span, config.damping * span, points),
                SearchSpace::log_range(config.inertia / span, config.inertia * span, points),
            );
            space.refine_levels = refine;
            let objective = CalibrationObjective {
                n_angles: scale.n_angles,
                n_runs: scale.n_runs,
                master_seed: config.master_seed,
                half_width: scale.half_width,
                workers: common.workers,
            };
            let result = pipeline::cmd_calibrate(&config, &space, &objective, &out)?;
            println!(
                "best damping {:e}, inertia {:e}, rmse {:.4} ({} points)",
                result.best.damping,
                result.best.inertia,
                result.best.objective,
                result.log.len()
            );
        }
        Command::Plot { curve, name } => {
            pipeline::cmd_plot(curve.as_deref(), &out.join(name))?;
        }
        Command::Report => {
            let checks = pipeline::cmd_report(&out, common.full)?;
            for c in &checks {
                println!("{}", c.line());
            }
            if checks.iter().any(|c| !c.passed) {
                return Err(Error::Domain("acceptance summary has failures".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
