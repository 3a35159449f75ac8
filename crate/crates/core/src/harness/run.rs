//! Training runs that leave a directory of artifacts behind:
//!
//! ```text
//! config.txt        rendered config actually used
//! track.txt         training track in the text format
//! history.csv       one row per generation or episode
//! state_gNNNNN.bin  evolution state every `checkpoint_period` generations
//! policy_gNNNNN.bin best genome at the same points
//! online_eNNNNN.bin / target_eNNNNN.bin  DDQN networks every period episodes
//! best.bin          final best policy (evolution) or best-episode online net
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::ddqn::{DdqnConfig, DdqnTrainer, DiscreteActionSet, EpisodeRecord, RacingEnv};
use crate::environment::generate_track;
use crate::evolution::{EvoConfig, EvoError, EvolutionRun, EvolutionState, GenerationRecord};
use crate::neuralnet::{Checkpoint, Role};

use super::{render, save_checkpoint, save_network, ExperimentConfig, HarnessError, Trainer};

pub const EVOLUTION_HEADER: [&str; 5] = [
    "generation",
    "best_fitness",
    "mean_fitness",
    "frames_of_best",
    "tiles_of_best",
];
pub const DDQN_HEADER: [&str; 6] = ["episode", "reward", "frames", "tiles", "epsilon", "mean_td_error"];

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Evolution state file to continue from. History then starts at the
    /// generation after the saved one.
    pub resume: Option<PathBuf>,
    /// Print one line per generation or episode to stdout.
    pub progress: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub rows: usize,
    pub best_reward: f64,
    pub history: PathBuf,
    pub best_checkpoint: PathBuf,
}

struct History {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
    rows: usize,
}

impl History {
    fn create(path: PathBuf, header: &[&str]) -> Result<Self, HarnessError> {
        let mut writer = csv::Writer::from_path(&path).map_err(|e| HarnessError::io(&path, e.into()))?;
        writer.write_record(header).map_err(|e| HarnessError::io(&path, e.into()))?;
        Ok(Self { path, writer, rows: 0 })
    }

    /// Rows are flushed immediately so an interrupted run keeps its history.
    fn push(&mut self, fields: &[String]) -> Result<(), HarnessError> {
        self.writer
            .write_record(fields)
            .and_then(|_| self.writer.flush().map_err(Into::into))
            .map_err(|e| HarnessError::io(&self.path, e.into()))?;
        self.rows += 1;
        Ok(())
    }
}

fn evolution_row(r: &GenerationRecord) -> Vec<String> {
    vec![
        r.generation.to_string(),
        r.best_fitness.to_string(),
        r.mean_fitness.to_string(),
        r.frames_of_best.to_string(),
        r.tiles_of_best.to_string(),
    ]
}

fn ddqn_row(r: &EpisodeRecord) -> Vec<String> {
    vec![
        r.episode.to_string(),
        r.reward.to_string(),
        r.frames.to_string(),
        r.tiles.to_string(),
        r.epsilon.to_string(),
        r.mean_td_error.to_string(),
    ]
}

/// Validates `cfg`, prepares the output directory (failing before any
/// training if it cannot be written), then trains with the configured method.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunSummary, HarnessError> {
    cfg.validate()?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let config_path = out.join("config.txt");
    fs::write(&config_path, render(cfg)).map_err(|e| HarnessError::io(&config_path, e))?;
    let track = generate_track(&cfg.track).map_err(|e| HarnessError::Training(e.to_string()))?;
    let track_path = out.join("track.txt");
    fs::write(&track_path, track.to_text()).map_err(|e| HarnessError::io(&track_path, e))?;

    match &cfg.trainer {
        Trainer::Evolution(evo) => run_evolution(cfg, evo, opts),
        Trainer::Ddqn(ddqn) => {
            if opts.resume.is_some() {
                return Err(HarnessError::Config(super::ConfigError::Invalid {
                    key: "resume".into(),
                    message: "only evolution runs can be resumed".into(),
                }));
            }
            run_ddqn(cfg, ddqn, opts)
        }
    }
}

/// Loads an evolution state file, reporting format problems against the path.
pub fn load_state(path: &Path) -> Result<EvolutionState, HarnessError> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    EvolutionState::from_bytes(&bytes).map_err(|e| match e {
        EvoError::Checkpoint(source) => HarnessError::Checkpoint {
            path: path.into(),
            source,
        },
        other => HarnessError::Training(other.to_string()),
    })
}

fn run_evolution(cfg: &ExperimentConfig, evo: &EvoConfig, opts: &RunOptions) -> Result<RunSummary, HarnessError> {
    let out = &cfg.out_dir;
    let mut run = match &opts.resume {
        Some(path) => EvolutionRun::resume(evo.clone(), &cfg.track, &cfg.env, load_state(path)?)?,
        None => EvolutionRun::new(evo.clone(), &cfg.track, &cfg.env)?,
    };
    let mut history = History::create(out.join("history.csv"), &EVOLUTION_HEADER)?;
    while run.generation() < evo.generations {
        let record = run.step()?;
        history.push(&evolution_row(&record))?;
        if opts.progress {
            println!(
                "generation {:>4}  best {:>8.1}  mean {:>8.1}  tiles {}",
                record.generation, record.best_fitness, record.mean_fitness, record.tiles_of_best
            );
        }
        let g = record.generation;
        if cfg.checkpoint_period > 0 && g % cfg.checkpoint_period == 0 {
            let state_path = out.join(format!("state_g{g:05}.bin"));
            fs::write(&state_path, run.state().to_bytes()).map_err(|e| HarnessError::io(&state_path, e))?;
            let ck = Checkpoint::new(Role::Policy, run.best().genome.clone());
            save_checkpoint(&ck, out.join(format!("policy_g{g:05}.bin")))?;
        }
    }
    let state_path = out.join("state.bin");
    fs::write(&state_path, run.state().to_bytes()).map_err(|e| HarnessError::io(&state_path, e))?;
    let best_path = out.join("best.bin");
    save_checkpoint(&Checkpoint::new(Role::Policy, run.best().genome.clone()), &best_path)?;
    Ok(RunSummary {
        rows: history.rows,
        best_reward: run.best().fitness,
        history: history.path,
        best_checkpoint: best_path,
    })
}

fn run_ddqn(cfg: &ExperimentConfig, ddqn: &DdqnConfig, opts: &RunOptions) -> Result<RunSummary, HarnessError> {
    let out = &cfg.out_dir;
    let track = generate_track(&cfg.track).map_err(|e| HarnessError::Training(e.to_string()))?;
    let env = RacingEnv::new(track, cfg.env.clone(), DiscreteActionSet::default())?;
    let mut trainer = DdqnTrainer::new(env, ddqn.clone())?;
    let mut history = History::create(out.join("history.csv"), &DDQN_HEADER)?;
    let mut best = (f64::NEG_INFINITY, trainer.online().clone());
    while trainer.episode() < ddqn.episodes {
        let record = trainer.run_episode()?;
        history.push(&ddqn_row(&record))?;
        if opts.progress {
            println!(
                "episode {:>5}  reward {:>8.1}  tiles {:>4}  epsilon {:.3}  td {:.4}",
                record.episode, record.reward, record.tiles, record.epsilon, record.mean_td_error
            );
        }
        if record.reward > best.0 {
            best = (record.reward, trainer.online().clone());
        }
        let done = trainer.episode();
        if cfg.checkpoint_period > 0 && done % cfg.checkpoint_period == 0 {
            save_network(trainer.online(), Role::Online, out.join(format!("online_e{done:05}.bin")))?;
            save_network(trainer.target(), Role::Target, out.join(format!("target_e{done:05}.bin")))?;
        }
    }
    save_network(trainer.online(), Role::Online, out.join("final_online.bin"))?;
    save_network(trainer.target(), Role::Target, out.join("final_target.bin"))?;
    let best_path = out.join("best.bin");
    save_network(&best.1, Role::Online, &best_path)?;
    Ok(RunSummary {
        rows: history.rows,
        best_reward: best.0,
        history: history.path,
        best_checkpoint: best_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::parse;

    fn small_evolution(out: &Path) -> ExperimentConfig {
        parse(&format!(
            "method = evolution\nout_dir = {}\ncheckpoint_period = 2\n\
             track.max_frames = 150\nevolution.population_size = 8\n\
             evolution.parent_count = 2\nevolution.generations = 3\n",
            out.display()
        ))
        .unwrap()
    }

    #[test]
    fn evolution_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_evolution(&dir.path().join("run"));
        let summary = run_experiment(&cfg, &RunOptions::default()).unwrap();
        assert_eq!(summary.rows, 3);
        let text = fs::read_to_string(&summary.history).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], EVOLUTION_HEADER.join(","));
        for name in ["config.txt", "track.txt", "state_g00002.bin", "policy_g00002.bin", "best.bin", "state.bin"] {
            assert!(cfg.out_dir.join(name).exists(), "{name}");
        }
        let saved = parse(&fs::read_to_string(cfg.out_dir.join("config.txt")).unwrap()).unwrap();
        assert_eq!(saved, cfg);
    }

    #[test]
    fn ddqn_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse(&format!(
            "method = ddqn\nout_dir = {}\ncheckpoint_period = 1\nenv.observation = features\n\
             track.max_frames = 40\nddqn.episodes = 2\nddqn.batch_size = 8\nddqn.replay_capacity = 64\n",
            dir.path().display()
        ))
        .unwrap();
        let summary = run_experiment(&cfg, &RunOptions::default()).unwrap();
        assert_eq!(summary.rows, 2);
        let text = fs::read_to_string(&summary.history).unwrap();
        assert!(text.starts_with(&DDQN_HEADER.join(",")));
        for name in ["online_e00001.bin", "target_e00002.bin", "best.bin", "final_online.bin"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
    }

    #[test]
    fn unwritable_output_fails_before_training() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"x").unwrap();
        let cfg = small_evolution(&blocker.join("run"));
        let err = run_experiment(&cfg, &RunOptions::default()).unwrap_err();
        assert!(matches!(err, HarnessError::Io { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn ddqn_cannot_resume() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::defaults("ddqn").unwrap();
        cfg.out_dir = dir.path().to_path_buf();
        let opts = RunOptions {
            resume: Some(dir.path().join("state.bin")),
            progress: false,
        };
        assert_eq!(run_experiment(&cfg, &opts).unwrap_err().exit_code(), 1);
    }
}
