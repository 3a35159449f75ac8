//! Line-oriented experiment config: `section.key = value`, `#` comments.
//!
//! Keys without a section (`method`, `out_dir`, `checkpoint_period`) describe
//! the experiment itself. Every key not listed in [`render`]'s output is
//! rejected, and a method section that does not match `method` is an error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::ddqn::DdqnConfig;
use crate::environment::{CarParams, EnvConfig, FeatureConfig, ObservationMode, PixelConfig, TrackConfig};
use crate::evolution::EvoConfig;
use crate::neuralnet::OptimizerKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: key `{key}` appears more than once")]
    Duplicate { key: String, line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: `{key}` expects {expected}, got `{value}`")]
    Type {
        key: String,
        value: String,
        expected: &'static str,
        line: usize,
    },
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Trainer {
    Evolution(EvoConfig),
    Ddqn(DdqnConfig),
}

impl Trainer {
    pub fn method(&self) -> &'static str {
        match self {
            Trainer::Evolution(_) => "evolution",
            Trainer::Ddqn(_) => "ddqn",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Trainer::Evolution(c) => c.seed,
            Trainer::Ddqn(c) => c.seed,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Trainer::Evolution(c) => c.seed = seed,
            Trainer::Ddqn(c) => c.seed = seed,
        }
    }
}

/// Which tracks the evaluator drives on.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub trials: usize,
    /// Explicit track seeds, cycled over the trials. Empty means derive them.
    pub seeds: Vec<u64>,
    /// With no explicit seeds: `true` uses `track.seed + 1000 + i` for trial
    /// `i`, `false` reuses the training track.
    pub held_out: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            seeds: Vec::new(),
            held_out: true,
        }
    }
}

impl EvalConfig {
    pub fn resolve_seeds(&self, track_seed: u64) -> Vec<u64> {
        if !self.seeds.is_empty() {
            self.seeds.clone()
        } else if self.held_out {
            (0..self.trials as u64).map(|i| track_seed + 1000 + i).collect()
        } else {
            vec![track_seed]
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub trainer: Trainer,
    pub track: TrackConfig,
    /// `max_frames` always equals `track.max_frames`.
    pub env: EnvConfig,
    pub out_dir: PathBuf,
    /// Generations or episodes between checkpoints; 0 disables them.
    pub checkpoint_period: usize,
    pub eval: EvalConfig,
}

impl ExperimentConfig {
    /// Defaults for a method: evolution uses feature observations, DDQN
    /// 32x32 grayscale pixels.
    pub fn defaults(method: &str) -> Result<Self, ConfigError> {
        let (trainer, observation) = match method {
            "evolution" => (Trainer::Evolution(EvoConfig::default()), ObservationMode::default()),
            "ddqn" => (
                Trainer::Ddqn(DdqnConfig::default()),
                ObservationMode::Pixels(PixelConfig::default()),
            ),
            other => {
                return Err(ConfigError::Invalid {
                    key: "method".into(),
                    message: format!("expected `evolution` or `ddqn`, got `{other}`"),
                })
            }
        };
        let track = TrackConfig::default();
        Ok(Self {
            trainer,
            env: EnvConfig {
                max_frames: track.max_frames,
                observation,
                ..EnvConfig::default()
            },
            track,
            out_dir: PathBuf::from("runs"),
            checkpoint_period: 10,
            eval: EvalConfig::default(),
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, message: String| ConfigError::Invalid {
            key: key.into(),
            message,
        };
        self.track.validate().map_err(|e| invalid("track", e.to_string()))?;
        self.env.validate().map_err(|e| invalid("env", e.to_string()))?;
        if self.env.max_frames != self.track.max_frames {
            return Err(invalid("track.max_frames", "env and track frame limits differ".into()));
        }
        match &self.trainer {
            Trainer::Evolution(c) => {
                c.validate().map_err(|e| invalid("evolution", e.to_string()))?;
                if !matches!(self.env.observation, ObservationMode::Features(_)) {
                    return Err(invalid(
                        "env.observation",
                        "evolution needs feature observations".into(),
                    ));
                }
            }
            Trainer::Ddqn(c) => c.validate().map_err(|e| invalid("ddqn", e.to_string()))?,
        }
        if self.eval.trials == 0 {
            return Err(invalid("eval.trials", "must be positive".into()));
        }
        Ok(())
    }
}

struct Entry {
    value: String,
    line: usize,
}

struct Doc {
    entries: BTreeMap<String, Entry>,
}

impl Doc {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let key = key.trim();
            if key.is_empty() || key.split('.').any(str::is_empty) || key.split('.').count() > 2 {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("malformed key `{key}`"),
                });
            }
            let entry = Entry {
                value: value.trim().to_string(),
                line,
            };
            if entries.insert(key.to_string(), entry).is_some() {
                return Err(ConfigError::Duplicate {
                    key: key.into(),
                    line,
                });
            }
        }
        Ok(Self { entries })
    }

    fn take_raw(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn take<T: FromStr>(&mut self, key: &str, expected: &'static str) -> Result<Option<T>, ConfigError> {
        let Some(e) = self.take_raw(key) else {
            return Ok(None);
        };
        e.value.parse().map(Some).map_err(|_| ConfigError::Type {
            key: key.into(),
            value: e.value,
            expected,
            line: e.line,
        })
    }

    fn set<T: FromStr>(&mut self, key: &str, slot: &mut T, expected: &'static str) -> Result<(), ConfigError> {
        if let Some(v) = self.take(key, expected)? {
            *slot = v;
        }
        Ok(())
    }

    fn has_section(&self, section: &str) -> Option<(&str, usize)> {
        let prefix = format!("{section}.");
        self.entries
            .iter()
            .find(|(k, _)| k.starts_with(&prefix))
            .map(|(k, e)| (k.as_str(), e.line))
    }
}

const INT: &str = "a non-negative integer";
const REAL: &str = "a number";
const BOOL: &str = "`true` or `false`";

/// Parses and validates a config document, filling defaults.
pub fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut doc = Doc::parse(text)?;
    let method = match doc.take_raw("method") {
        Some(e) => e.value,
        None => {
            return Err(ConfigError::Invalid {
                key: "method".into(),
                message: "missing; expected `evolution` or `ddqn`".into(),
            })
        }
    };
    let mut cfg = ExperimentConfig::defaults(&method)?;
    let other = match cfg.trainer {
        Trainer::Evolution(_) => "ddqn",
        Trainer::Ddqn(_) => "evolution",
    };
    if let Some((key, line)) = doc.has_section(other) {
        return Err(ConfigError::Invalid {
            key: key.into(),
            message: format!("line {line}: section `{other}` does not apply to method `{method}`"),
        });
    }

    if let Some(e) = doc.take_raw("out_dir") {
        cfg.out_dir = PathBuf::from(e.value);
    }
    doc.set("checkpoint_period", &mut cfg.checkpoint_period, INT)?;

    let t = &mut cfg.track;
    doc.set("track.seed", &mut t.seed, INT)?;
    doc.set("track.tiles", &mut t.tile_count, INT)?;
    doc.set("track.road_width", &mut t.road_width, REAL)?;
    doc.set("track.control_points", &mut t.control_points, INT)?;
    doc.set("track.max_frames", &mut t.max_frames, INT)?;
    cfg.env.max_frames = t.max_frames;

    doc.set("env.dt", &mut cfg.env.dt, REAL)?;
    if let Some(e) = doc.take_raw("env.observation") {
        cfg.env.observation = match e.value.as_str() {
            "features" => ObservationMode::Features(FeatureConfig::default()),
            "pixels" => ObservationMode::Pixels(PixelConfig::default()),
            _ => {
                return Err(ConfigError::Type {
                    key: "env.observation".into(),
                    value: e.value,
                    expected: "`features` or `pixels`",
                    line: e.line,
                })
            }
        };
    }
    match &mut cfg.env.observation {
        ObservationMode::Features(f) => {
            doc.set("env.feature_samples", &mut f.samples, INT)?;
            doc.set("env.feature_spacing", &mut f.spacing, REAL)?;
        }
        ObservationMode::Pixels(p) => {
            doc.set("env.pixel_height", &mut p.height, INT)?;
            doc.set("env.pixel_width", &mut p.width, INT)?;
            doc.set("env.pixel_channels", &mut p.channels, INT)?;
            doc.set("env.view_span", &mut p.view_span, REAL)?;
        }
    }
    set_car(&mut doc, &mut cfg.env.car)?;

    match &mut cfg.trainer {
        Trainer::Evolution(c) => set_evolution(&mut doc, c)?,
        Trainer::Ddqn(c) => set_ddqn(&mut doc, c)?,
    }

    doc.set("eval.trials", &mut cfg.eval.trials, INT)?;
    doc.set("eval.held_out", &mut cfg.eval.held_out, BOOL)?;
    if let Some(e) = doc.take_raw("eval.seeds") {
        cfg.eval.seeds = e
            .value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| ConfigError::Type {
                key: "eval.seeds".into(),
                value: e.value.clone(),
                expected: "a comma-separated list of integers",
                line: e.line,
            })?;
    }

    if let Some((key, e)) = doc.entries.into_iter().next() {
        return Err(ConfigError::UnknownKey { key, line: e.line });
    }
    cfg.validate()?;
    Ok(cfg)
}

fn set_car(doc: &mut Doc, c: &mut CarParams) -> Result<(), ConfigError> {
    doc.set("car.wheelbase", &mut c.wheelbase, REAL)?;
    doc.set("car.rear_axle", &mut c.rear_axle, REAL)?;
    doc.set("car.max_wheel_angle", &mut c.max_wheel_angle, REAL)?;
    doc.set("car.steer_rate", &mut c.steer_rate, REAL)?;
    doc.set("car.max_accel", &mut c.max_accel, REAL)?;
    doc.set("car.max_brake", &mut c.max_brake, REAL)?;
    doc.set("car.rolling_resistance", &mut c.rolling_resistance, REAL)?;
    doc.set("car.max_speed", &mut c.max_speed, REAL)?;
    doc.set("car.lateral_grip", &mut c.lateral_grip, REAL)?;
    doc.set("car.length", &mut c.length, REAL)?;
    doc.set("car.width", &mut c.width, REAL)
}

fn set_evolution(doc: &mut Doc, c: &mut EvoConfig) -> Result<(), ConfigError> {
    doc.set("evolution.population_size", &mut c.population_size, INT)?;
    doc.set("evolution.parent_count", &mut c.parent_count, INT)?;
    doc.set("evolution.mutation_rate", &mut c.mutation_rate, REAL)?;
    doc.set("evolution.mutation_sigma", &mut c.mutation_sigma, REAL)?;
    doc.set("evolution.gene_bound", &mut c.gene_bound, REAL)?;
    doc.set("evolution.crossover_probability", &mut c.crossover_probability, REAL)?;
    doc.set("evolution.generations", &mut c.generations, INT)?;
    doc.set("evolution.seed", &mut c.seed, INT)?;
    doc.set("evolution.episodes_per_eval", &mut c.episodes_per_eval, INT)?;
    doc.set("evolution.training_tracks", &mut c.training_tracks, INT)
}

fn set_ddqn(doc: &mut Doc, c: &mut DdqnConfig) -> Result<(), ConfigError> {
    doc.set("ddqn.gamma", &mut c.gamma, REAL)?;
    doc.set("ddqn.learning_rate", &mut c.learning_rate, REAL)?;
    if let Some(e) = doc.take_raw("ddqn.optimizer") {
        c.optimizer = match e.value.as_str() {
            "adam" => OptimizerKind::Adam,
            "sgd" => OptimizerKind::Sgd,
            _ => {
                return Err(ConfigError::Type {
                    key: "ddqn.optimizer".into(),
                    value: e.value,
                    expected: "`adam` or `sgd`",
                    line: e.line,
                })
            }
        };
    }
    doc.set("ddqn.batch_size", &mut c.batch_size, INT)?;
    doc.set("ddqn.replay_capacity", &mut c.replay_capacity, INT)?;
    doc.set("ddqn.priority_exponent", &mut c.priority_exponent, REAL)?;
    doc.set("ddqn.priority_floor", &mut c.priority_floor, REAL)?;
    doc.set("ddqn.epsilon_start", &mut c.epsilon_start, REAL)?;
    doc.set("ddqn.epsilon_end", &mut c.epsilon_end, REAL)?;
    doc.set("ddqn.target_sync_period", &mut c.target_sync_period, INT)?;
    doc.set("ddqn.learn_start", &mut c.learn_start, INT)?;
    doc.set("ddqn.importance_sampling", &mut c.importance_sampling, BOOL)?;
    doc.set("ddqn.importance_beta", &mut c.importance_beta, REAL)?;
    doc.set("ddqn.episodes", &mut c.episodes, INT)?;
    doc.set("ddqn.seed", &mut c.seed, INT)?;
    // The decay horizon follows the episode count unless given explicitly.
    c.epsilon_decay_episodes = c.episodes * 4 / 5;
    doc.set("ddqn.epsilon_decay_episodes", &mut c.epsilon_decay_episodes, INT)
}

/// Writes every key of `cfg`, so `parse(&render(cfg)) == cfg`.
pub fn render(cfg: &ExperimentConfig) -> String {
    let mut s = String::new();
    let mut kv = |key: &str, value: String| {
        let _ = writeln!(s, "{key} = {value}");
    };
    kv("method", cfg.trainer.method().into());
    kv("out_dir", cfg.out_dir.display().to_string());
    kv("checkpoint_period", cfg.checkpoint_period.to_string());

    let t = &cfg.track;
    kv("track.seed", t.seed.to_string());
    kv("track.tiles", t.tile_count.to_string());
    kv("track.road_width", format!("{:?}", t.road_width));
    kv("track.control_points", t.control_points.to_string());
    kv("track.max_frames", t.max_frames.to_string());

    kv("env.dt", format!("{:?}", cfg.env.dt));
    match &cfg.env.observation {
        ObservationMode::Features(f) => {
            kv("env.observation", "features".into());
            kv("env.feature_samples", f.samples.to_string());
            kv("env.feature_spacing", format!("{:?}", f.spacing));
        }
        ObservationMode::Pixels(p) => {
            kv("env.observation", "pixels".into());
            kv("env.pixel_height", p.height.to_string());
            kv("env.pixel_width", p.width.to_string());
            kv("env.pixel_channels", p.channels.to_string());
            kv("env.view_span", format!("{:?}", p.view_span));
        }
    }

    let c = &cfg.env.car;
    for (key, v) in [
        ("wheelbase", c.wheelbase),
        ("rear_axle", c.rear_axle),
        ("max_wheel_angle", c.max_wheel_angle),
        ("steer_rate", c.steer_rate),
        ("max_accel", c.max_accel),
        ("max_brake", c.max_brake),
        ("rolling_resistance", c.rolling_resistance),
        ("max_speed", c.max_speed),
        ("lateral_grip", c.lateral_grip),
        ("length", c.length),
        ("width", c.width),
    ] {
        kv(&format!("car.{key}"), format!("{v:?}"));
    }

    match &cfg.trainer {
        Trainer::Evolution(e) => {
            kv("evolution.population_size", e.population_size.to_string());
            kv("evolution.parent_count", e.parent_count.to_string());
            kv("evolution.mutation_rate", format!("{:?}", e.mutation_rate));
            kv("evolution.mutation_sigma", format!("{:?}", e.mutation_sigma));
            kv("evolution.gene_bound", format!("{:?}", e.gene_bound));
            kv("evolution.crossover_probability", format!("{:?}", e.crossover_probability));
            kv("evolution.generations", e.generations.to_string());
            kv("evolution.seed", e.seed.to_string());
            kv("evolution.episodes_per_eval", e.episodes_per_eval.to_string());
            kv("evolution.training_tracks", e.training_tracks.to_string());
        }
        Trainer::Ddqn(d) => {
            kv("ddqn.gamma", format!("{:?}", d.gamma));
            kv("ddqn.learning_rate", format!("{:?}", d.learning_rate));
            let optimizer = match d.optimizer {
                OptimizerKind::Adam => "adam",
                OptimizerKind::Sgd => "sgd",
            };
            kv("ddqn.optimizer", optimizer.into());
            kv("ddqn.batch_size", d.batch_size.to_string());
            kv("ddqn.replay_capacity", d.replay_capacity.to_string());
            kv("ddqn.priority_exponent", format!("{:?}", d.priority_exponent));
            kv("ddqn.priority_floor", format!("{:?}", d.priority_floor));
            kv("ddqn.epsilon_start", format!("{:?}", d.epsilon_start));
            kv("ddqn.epsilon_end", format!("{:?}", d.epsilon_end));
            kv("ddqn.epsilon_decay_episodes", d.epsilon_decay_episodes.to_string());
            kv("ddqn.target_sync_period", d.target_sync_period.to_string());
            kv("ddqn.learn_start", d.learn_start.to_string());
            kv("ddqn.importance_sampling", d.importance_sampling.to_string());
            kv("ddqn.importance_beta", format!("{:?}", d.importance_beta));
            kv("ddqn.episodes", d.episodes.to_string());
            kv("ddqn.seed", d.seed.to_string());
        }
    }

    kv("eval.trials", cfg.eval.trials.to_string());
    kv("eval.held_out", cfg.eval.held_out.to_string());
    if !cfg.eval.seeds.is_empty() {
        let seeds: Vec<String> = cfg.eval.seeds.iter().map(u64::to_string).collect();
        kv("eval.seeds", seeds.join(", "));
    }
    s
}
