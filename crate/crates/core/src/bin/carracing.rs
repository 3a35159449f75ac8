//! Command-line front end for the experiment harness.
//!
//! Exit codes: 0 success, 1 config error, 2 I/O or file format error,
//! 3 training or evaluation failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use carracing::environment::generate_track;
use carracing::harness::{
    evaluate_policy, load_checkpoint, parse, run_experiment, ConfigError, ExperimentConfig, HarnessError, RunOptions,
};
use carracing::neuralnet::{Dims, Layer};

#[derive(Parser)]
#[command(name = "carracing", version, about = "Train and evaluate car-racing policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train with the method named in the config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the trainer seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Evolution state file to continue from.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Greedy evaluation of a checkpoint on the config's evaluation tracks.
    Evaluate {
        checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// First evaluation track seed; trial `i` uses `seed + i`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Directory for `evaluation.csv` with one reward per trial.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a track and write it in the text format.
    GenTrack {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the track seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for `track_<seed>.txt`; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the header and layer layout of a checkpoint.
    InspectCheckpoint { checkpoint: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(path: Option<&Path>, fallback_method: &str) -> Result<ExperimentConfig, HarnessError> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| HarnessError::Io {
                path: p.into(),
                source: e,
            })?;
            Ok(parse(&text)?)
        }
        None => Ok(ExperimentConfig::defaults(fallback_method)?),
    }
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Train {
            config,
            seed,
            out,
            resume,
        } => {
            let mut cfg = load_config(Some(&config), "evolution")?;
            if let Some(s) = seed {
                cfg.trainer.set_seed(s);
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let summary = run_experiment(&cfg, &RunOptions { resume, progress: true })?;
            println!(
                "{} rows written to {}; best reward {:.1}; best checkpoint {}",
                summary.rows,
                summary.history.display(),
                summary.best_reward,
                summary.best_checkpoint.display()
            );
            Ok(())
        }
        Command::Evaluate {
            checkpoint,
            config,
            seed,
            trials,
            out,
        } => {
            let cfg = load_config(config.as_deref(), "evolution")?;
            let ck = load_checkpoint(&checkpoint)?;
            let trials = trials.unwrap_or(cfg.eval.trials);
            if trials == 0 {
                return Err(ConfigError::Invalid {
                    key: "trials".into(),
                    message: "must be positive".into(),
                }
                .into());
            }
            let seeds = match seed {
                Some(s) => (0..trials as u64).map(|i| s + i).collect(),
                None => cfg.eval.resolve_seeds(cfg.track.seed),
            };
            let report = evaluate_policy(&ck, &cfg.track, &cfg.env, &seeds, trials)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| HarnessError::Io {
                    path: dir.clone(),
                    source: e,
                })?;
                let path = dir.join("evaluation.csv");
                let mut text = String::from("trial,seed,reward\n");
                for (i, r) in report.rewards.iter().enumerate() {
                    text.push_str(&format!("{i},{},{r}\n", seeds[i % seeds.len()]));
                }
                std::fs::write(&path, text).map_err(|e| HarnessError::Io { path, source: e })?;
            }
            println!(
                "trials {}  mean {:.2}  std {:.2}  solved {}",
                report.trials, report.mean, report.std_dev, report.solved
            );
            Ok(())
        }
        Command::GenTrack { config, seed, out } => {
            let cfg = load_config(config.as_deref(), "evolution")?;
            let track_cfg = match seed {
                Some(s) => cfg.track.with_seed(s),
                None => cfg.track.clone(),
            };
            let track = generate_track(&track_cfg).map_err(|e| {
                HarnessError::Config(ConfigError::Invalid {
                    key: "track".into(),
                    message: e.to_string(),
                })
            })?;
            match out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::Io {
                        path: dir.clone(),
                        source: e,
                    })?;
                    let path = dir.join(format!("track_{}.txt", track_cfg.seed));
                    std::fs::write(&path, track.to_text()).map_err(|e| HarnessError::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    println!("{}", path.display());
                }
                None => print!("{}", track.to_text()),
            }
            Ok(())
        }
        Command::InspectCheckpoint { checkpoint } => {
            let ck = load_checkpoint(&checkpoint)?;
            let shape = ck.genome.shape();
            println!("role      {}", ck.role.name());
            println!("input     {}", dims(shape.input()));
            for (i, layer) in shape.layers().iter().enumerate() {
                let (w, b) = shape.layer_param_counts(i);
                println!("layer {i:<3} {:<28} {} weights, {} biases", describe(layer), w, b);
            }
            println!("genes     {}", ck.genome.len());
            println!("checksum  {:016x}", ck.genome.checksum());
            println!("finite    {}", ck.genome.genes().iter().all(|g| g.is_finite()));
            Ok(())
        }
    }
}

fn dims(d: Dims) -> String {
    match d {
        Dims::Vector(n) => format!("[{n}]"),
        Dims::Grid {
            height,
            width,
            channels,
        } => format!("[{height}x{width}x{channels}]"),
    }
}

fn describe(layer: &Layer) -> String {
    match layer {
        Layer::Dense { units, activation } => format!("dense {units} {}", activation.name()),
        Layer::Conv {
            filters,
            kernel,
            stride,
            activation,
        } => format!("conv {filters}@{kernel}x{kernel}/{stride} {}", activation.name()),
        Layer::Flatten => "flatten".into(),
    }
}
