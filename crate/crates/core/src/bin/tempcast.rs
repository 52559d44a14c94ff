use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tempcast::experiment::{grid_search, run_experiment, write_outputs, GridSpace, ModelKind, RunConfig, RunReport};
use tempcast::stream::{gen_sinus, inject_loss, read_dataset, BurstGap, DatasetSpec, Delimiter, LossModel, SinusConfig};
use tempcast::{BaselineInput, Error, LearnSchedule};

#[derive(Parser)]
#[command(name = "tempcast", version, about = "On-line temperature forecasting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a model on the synthetic sinus stream.
    Simulate(SimulateArgs),
    /// Run a model on a recorded dataset (UCI SML2010 layout by default).
    RunSml(RunSmlArgs),
    /// Rank learning schedules on a seeded sinus stream.
    GridSearch(GridArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// lin, mlp or bayes
    #[arg(long, default_value = "lin")]
    model: ModelKind,
    #[arg(long, default_value_t = 8)]
    p: usize,
    #[arg(long, default_value_t = 8)]
    q: usize,
    #[arg(long, default_value_t = 8)]
    h: usize,
    /// Defaults to the shipped schedule of the chosen model.
    #[arg(long)]
    eta0: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Seed of the weight initialisation.
    #[arg(long, default_value_t = 1)]
    init_seed: u64,
    /// Feed the baseline first differences instead of quarter means.
    #[arg(long)]
    bayes_differences: bool,
    #[arg(long)]
    bayes_intercept: bool,
}

impl ModelArgs {
    fn config(&self) -> RunConfig {
        let base = self.model.default_schedule();
        RunConfig {
            p: self.p,
            q: self.q,
            h: self.h,
            schedule: LearnSchedule {
                eta0: self.eta0.unwrap_or(base.eta0),
                gamma: self.gamma.unwrap_or(base.gamma),
                epsilon: self.epsilon.unwrap_or(base.epsilon),
            },
            seed: self.init_seed,
            bayes_input: if self.bayes_differences {
                BaselineInput::Differences
            } else {
                BaselineInput::Levels
            },
            bayes_intercept: self.bayes_intercept,
            ..RunConfig::new(self.model)
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 1_000_000)]
    frames: usize,
    /// Seed of the stream and of the loss model.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.0)]
    drop_prob: f64,
    /// Remove every frame of N quarters starting halfway through the run.
    #[arg(long)]
    burst_gap: Option<u32>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct RunSmlArgs {
    #[arg(long)]
    data: PathBuf,
    /// Zero-based value column.
    #[arg(long, default_value_t = 2)]
    column: usize,
    /// Single-character delimiter; whitespace if omitted.
    #[arg(long)]
    delimiter: Option<char>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value = "lin")]
    model: ModelKind,
    /// Path to a space file or inline `eta0=..;gamma=..;epsilon=..`.
    #[arg(long)]
    space: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    frames: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Ingestion { .. } => 3,
                Error::ModelDiverged { .. } => 4,
                _ => 1,
            })
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate(a) => {
            let cfg = a.model.config();
            let sinus = SinusConfig {
                n_frames: a.frames,
                seed: a.seed,
                ..SinusConfig::default()
            };
            let mean_dt = 0.5 * (sinus.dt_min + sinus.dt_max);
            let loss = LossModel {
                drop_prob: a.drop_prob,
                burst: a.burst_gap.map(|quarters| BurstGap {
                    start_secs: (a.frames as f64 * mean_dt / 2.0 / cfg.quarter_secs).floor() * cfg.quarter_secs,
                    quarters,
                }),
                quarter_secs: cfg.quarter_secs,
                seed: a.seed.wrapping_add(1),
            };
            let frames = inject_loss(gen_sinus(sinus)?, loss)?;
            finish(run_experiment(&cfg, frames)?, &a.out)
        }
        Command::RunSml(a) => {
            let cfg = a.model.config();
            let mut spec = DatasetSpec::sml2010(&a.data);
            spec.value_col = a.column;
            if let Some(c) = a.delimiter {
                spec.delimiter = Delimiter::Char(c);
            }
            let frames = read_dataset(&spec)?;
            finish(run_experiment(&cfg, frames)?, &a.out)
        }
        Command::GridSearch(a) => {
            let space = match &a.space {
                None => GridSpace::default(),
                Some(s) if PathBuf::from(s).is_file() => fs::read_to_string(s)?.parse()?,
                Some(s) => s.parse()?,
            };
            let base = RunConfig::new(a.model);
            let sinus = SinusConfig {
                n_frames: a.frames,
                seed: a.seed,
                ..SinusConfig::default()
            };
            gen_sinus(sinus.clone())?;
            let ranked = grid_search(&space, &base, || gen_sinus(sinus.clone()).expect("validated"))?;
            println!("rank,eta0,gamma,epsilon,mae_star,diverged");
            for (i, r) in ranked.iter().enumerate() {
                let mae = r.mae_star.map(|m| m.to_string()).unwrap_or_default();
                println!(
                    "{},{},{},{},{},{}",
                    i + 1,
                    r.schedule.eta0,
                    r.schedule.gamma,
                    r.schedule.epsilon,
                    mae,
                    r.diverged
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn finish(report: RunReport, out: &Path) -> Result<ExitCode, Error> {
    write_outputs(out, &report)?;
    match report.summary {
        Some(s) => println!(
            "{}: events={} min={:.4} q1={:.4} median={:.4} mean={:.4} q3={:.4} max={:.4}",
            report.method,
            report.event_mae.len(),
            s.min,
            s.q1,
            s.median,
            s.mean,
            s.q3,
            s.max
        ),
        None => println!("{}: no forecast could be scored", report.method),
    }
    println!(
        "frames={} quarters={} resets={} late={} unscored={} -> {}",
        report.frames,
        report.quarters,
        report.resets,
        report.late_frames,
        report.unscored,
        out.display()
    );
    if report.diverged {
        eprintln!("error: model diverged after {} updates; partial results written", report.updates);
        return Ok(ExitCode::from(4));
    }
    Ok(ExitCode::SUCCESS)
}
