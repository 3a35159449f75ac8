//! Deterministic 2D tile-track driving environment.
//!
//! Each frame costs `0.1` points and each tile the car enters for the first
//! time pays `1000 / N`, so the running return always equals
//! `1000 * tiles_visited / N - 0.1 * frames`. A tile counts as entered when
//! the projection of the car's reference point onto the centerline falls in
//! that tile's arc-length span. Episodes end when every tile has been
//! visited, when the car is more than a road width from the centerline, or
//! at the frame limit.

mod car;
mod geometry;
mod observe;
mod track;

use thiserror::Error;

pub use car::{advance, CarParams, CarState, ContinuousAction};
pub use geometry::{wrap_angle, Vec2};
pub use observe::{
    extract_features, render_pixels, FeatureConfig, FeatureObservation, PixelConfig, PixelObservation,
};
pub use track::{generate_track, Projection, Tile, Track, TrackConfig, TRACK_FORMAT_HEADER};

/// Penalty charged every frame.
pub const FRAME_PENALTY: f64 = 0.1;
/// Reward for visiting every tile of a track once, split evenly over tiles.
pub const LAP_REWARD: f64 = 1000.0;
/// Seconds per frame.
pub const DEFAULT_DT: f64 = 1.0 / 50.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("degenerate track: {0}")]
    Degenerate(String),
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("action component {field} = {value} is out of range")]
    ActionOutOfRange { field: &'static str, value: f64 },
    #[error("car is off road ({distance:.3} m from the centerline)")]
    OffRoad { distance: f64 },
    #[error("episode is already done; call reset")]
    EpisodeDone,
    #[error("track text line {line}: {message}")]
    TrackFormat { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObservationMode {
    Features(FeatureConfig),
    Pixels(PixelConfig),
}

impl Default for ObservationMode {
    fn default() -> Self {
        ObservationMode::Features(FeatureConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Observation {
    Features(FeatureObservation),
    Pixels(PixelObservation),
}

impl Observation {
    /// Flat input vector for a network.
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            Observation::Features(f) => f.to_vec(),
            Observation::Pixels(p) => p.data.clone(),
        }
    }

    pub fn features(&self) -> Option<&FeatureObservation> {
        match self {
            Observation::Features(f) => Some(f),
            Observation::Pixels(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvConfig {
    pub dt: f64,
    pub max_frames: usize,
    pub car: CarParams,
    pub observation: ObservationMode,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            max_frames: 2000,
            car: CarParams::default(),
            observation: ObservationMode::default(),
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EnvError::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.max_frames == 0 {
            return Err(EnvError::InvalidConfig("max_frames must be positive".into()));
        }
        match &self.observation {
            ObservationMode::Features(f) if !(f.spacing > 0.0) => Err(EnvError::InvalidConfig(
                "curvature sample spacing must be positive".into(),
            )),
            ObservationMode::Pixels(p) => p.validate(),
            _ => Ok(()),
        }
    }
}

/// Why an episode ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Completed,
    OffRoad,
    TimeLimit,
}

impl Termination {
    /// True for terminal states of the underlying task. The frame limit only
    /// truncates the episode.
    pub fn is_terminal(self) -> bool {
        !matches!(self, Termination::TimeLimit)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub termination: Option<Termination>,
    pub new_tiles: usize,
    pub tiles_visited: usize,
    pub frame: usize,
}

/// Summary of a finished (or abandoned) episode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpisodeResult {
    pub reward: f64,
    pub frames: usize,
    pub tiles_visited: usize,
}

/// Episode return computed from counts: `1000 * tiles / N - 0.1 * frames`,
/// evaluated as `(10000 * tiles / N - frames) / 10` so that whole-tenth
/// results such as `1000 - 0.1 * 732` come out correctly rounded.
pub fn episode_return(tiles_visited: usize, tile_count: usize, frames: usize) -> f64 {
    // Everything in units of the frame penalty (tenths of a point).
    let tile_tenths = 10_000.0 * tiles_visited as f64 / tile_count as f64;
    (tile_tenths - frames as f64) / 10.0
}

#[derive(Clone, Debug)]
pub struct Env {
    track: Track,
    config: EnvConfig,
    car: CarState,
    visited: Vec<bool>,
    tiles_visited: usize,
    last_tile: Option<usize>,
    frame: usize,
    reward_sum: f64,
    termination: Option<Termination>,
}

impl Env {
    pub fn new(track: Track, config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        let n = track.tile_count();
        let mut env = Self {
            track,
            config,
            car: CarState::default(),
            visited: vec![false; n],
            tiles_visited: 0,
            last_tile: None,
            frame: 0,
            reward_sum: 0.0,
            termination: None,
        };
        env.reset();
        Ok(env)
    }

    pub fn track(&self) -> &Track {
        &self.track
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn car(&self) -> &CarState {
        &self.car
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    pub fn tiles_visited(&self) -> usize {
        self.tiles_visited
    }

    pub fn is_visited(&self, tile: usize) -> bool {
        self.visited[tile]
    }

    pub fn is_done(&self) -> bool {
        self.termination.is_some()
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    /// Sum of the per-frame rewards handed out so far.
    pub fn reward_sum(&self) -> f64 {
        self.reward_sum
    }

    /// Return of the episode so far from the visit and frame counts.
    pub fn episode_return(&self) -> f64 {
        episode_return(self.tiles_visited, self.track.tile_count(), self.frame)
    }

    pub fn result(&self) -> EpisodeResult {
        EpisodeResult {
            reward: self.episode_return(),
            frames: self.frame,
            tiles_visited: self.tiles_visited,
        }
    }

    /// Puts the car at rest on the start of tile 0, heading along the tile,
    /// and clears the visited set and frame counter.
    pub fn reset(&mut self) -> Observation {
        let tile = self.track.tiles()[0];
        self.car = CarState::at_rest(tile.start, tile.direction().angle());
        self.visited.iter_mut().for_each(|v| *v = false);
        self.tiles_visited = 0;
        self.last_tile = None;
        self.frame = 0;
        self.reward_sum = 0.0;
        self.termination = None;
        self.observe()
    }

    /// Overrides the car state, e.g. for scripted scenarios. Tile bookkeeping
    /// is left alone; the next `step` accounts for wherever the car is.
    pub fn place_car(&mut self, state: CarState) {
        self.car = state;
    }

    pub fn observe(&self) -> Observation {
        match &self.config.observation {
            ObservationMode::Features(cfg) => {
                Observation::Features(observe::features_unchecked(&self.car, &self.track, cfg))
            }
            ObservationMode::Pixels(cfg) => {
                Observation::Pixels(render_pixels(&self.car, &self.track, &self.config.car, cfg))
            }
        }
    }

    pub fn step(&mut self, action: &ContinuousAction) -> Result<StepOutcome, EnvError> {
        if self.termination.is_some() {
            return Err(EnvError::EpisodeDone);
        }
        action.validate()?;
        self.car = advance(&self.car, action, &self.config.car, self.config.dt);
        self.frame += 1;

        let proj = self.track.project(self.car.position);
        let new_tiles = self.mark_visited(proj.tile);
        let reward = -FRAME_PENALTY + LAP_REWARD / self.track.tile_count() as f64 * new_tiles as f64;
        self.reward_sum += reward;

        self.termination = if self.tiles_visited == self.track.tile_count() {
            Some(Termination::Completed)
        } else if proj.lateral.abs() > self.track.width() {
            Some(Termination::OffRoad)
        } else if self.frame >= self.config.max_frames {
            Some(Termination::TimeLimit)
        } else {
            None
        };

        Ok(StepOutcome {
            observation: self.observe(),
            reward,
            done: self.termination.is_some(),
            termination: self.termination,
            new_tiles,
            tiles_visited: self.tiles_visited,
            frame: self.frame,
        })
    }

    /// Marks the current tile, plus any tiles the projection swept across
    /// since the previous frame, and returns how many were new.
    fn mark_visited(&mut self, current: usize) -> usize {
        let n = self.track.tile_count();
        let sweep_limit = (n / 8).max(1);
        let span: Vec<usize> = match self.last_tile {
            None => vec![current],
            Some(last) => {
                let forward = (current + n - last) % n;
                let backward = (last + n - current) % n;
                if forward == 0 {
                    vec![current]
                } else if forward <= sweep_limit {
                    (1..=forward).map(|k| (last + k) % n).collect()
                } else if backward <= sweep_limit {
                    (0..backward).map(|k| (current + k) % n).collect()
                } else {
                    vec![current]
                }
            }
        };
        self.last_tile = Some(current);
        let mut fresh = 0;
        for tile in span {
            if !self.visited[tile] {
                self.visited[tile] = true;
                fresh += 1;
            }
        }
        self.tiles_visited += fresh;
        fresh
    }
}
