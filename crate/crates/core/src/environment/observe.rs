//! Feature-vector and rasterized observations of a car on a track.

use super::car::{CarParams, CarState};
use super::geometry::{point_segment_distance, wrap_angle, Vec2};
use super::track::Track;
use super::EnvError;

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureConfig {
    /// Number of curvature samples ahead of the car.
    pub samples: usize,
    /// Arc-length spacing between samples, meters.
    pub spacing: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            samples: 5,
            spacing: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureObservation {
    pub speed: f64,
    /// Heading minus the local centerline tangent direction.
    pub car_angle: f64,
    pub wheel_angle: f64,
    /// Velocity direction minus heading.
    pub speed_direction: f64,
    pub angular_velocity: f64,
    /// Signed lateral offset from the centerline, left positive.
    pub center_distance: f64,
    pub curvatures: Vec<f64>,
}

impl FeatureObservation {
    pub fn len(&self) -> usize {
        6 + self.curvatures.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `[speed, car_angle, wheel_angle, speed_direction, angular_velocity,
    /// center_distance, curvatures...]`
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&[
            self.speed,
            self.car_angle,
            self.wheel_angle,
            self.speed_direction,
            self.angular_velocity,
            self.center_distance,
        ]);
        v.extend_from_slice(&self.curvatures);
        v
    }

    /// Network-friendly version of [`FeatureObservation::to_vec`]: angles stay
    /// in radians, the center distance is measured in half road widths, and
    /// speed and curvature are divided by fixed scales.
    pub fn normalized(&self, road_width: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.push(self.speed / SPEED_SCALE);
        v.push(self.car_angle);
        v.push(self.wheel_angle);
        v.push(self.speed_direction);
        v.push(self.angular_velocity);
        v.push(self.center_distance / (road_width / 2.0));
        v.extend(self.curvatures.iter().map(|c| c * CURVATURE_SCALE));
        v
    }
}

// Rough magnitudes that bring features near unit scale.
const SPEED_SCALE: f64 = 20.0;
const CURVATURE_SCALE: f64 = 20.0;

/// Feature observation; fails with [`EnvError::OffRoad`] once the car is more
/// than a full road width from the centerline.
pub fn extract_features(
    state: &CarState,
    track: &Track,
    config: &FeatureConfig,
) -> Result<FeatureObservation, EnvError> {
    let obs = features_unchecked(state, track, config);
    if obs.center_distance.abs() > track.width() {
        return Err(EnvError::OffRoad {
            distance: obs.center_distance,
        });
    }
    Ok(obs)
}

pub(crate) fn features_unchecked(state: &CarState, track: &Track, config: &FeatureConfig) -> FeatureObservation {
    let proj = track.project(state.position);
    let curvatures = (1..=config.samples)
        .map(|k| track.curvature_at(proj.arc + k as f64 * config.spacing))
        .collect();
    FeatureObservation {
        speed: state.speed,
        car_angle: wrap_angle(state.heading - proj.tangent.angle()),
        wheel_angle: state.wheel_angle,
        speed_direction: wrap_angle(state.velocity_direction - state.heading),
        angular_velocity: state.angular_velocity,
        center_distance: proj.lateral,
        curvatures,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PixelConfig {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Meters covered by the full image width.
    pub view_span: f64,
}

impl Default for PixelConfig {
    fn default() -> Self {
        Self {
            height: 32,
            width: 32,
            channels: 1,
            view_span: 40.0,
        }
    }
}

impl PixelConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.height < 16 || self.width < 16 {
            return Err(EnvError::InvalidConfig(format!(
                "pixel observations need at least 16x16, got {}x{}",
                self.height, self.width
            )));
        }
        if self.channels == 0 || !(self.view_span > 0.0) {
            return Err(EnvError::InvalidConfig(
                "pixel channels and view span must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Row-major `height x width x channels` grid with intensities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelObservation {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl PixelObservation {
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + channel]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Surface {
    Grass,
    Road,
    CarOnGrass,
    CarOnRoad,
}

impl Surface {
    fn gray(self) -> f64 {
        match self {
            Surface::Grass => 0.2,
            Surface::Road => 0.5,
            Surface::CarOnGrass => 0.85,
            Surface::CarOnRoad => 1.0,
        }
    }

    fn rgb(self) -> [f64; 3] {
        match self {
            Surface::Grass => [0.25, 0.6, 0.25],
            Surface::Road => [0.45, 0.45, 0.45],
            Surface::CarOnGrass => [0.8, 0.05, 0.05],
            Surface::CarOnRoad => [1.0, 0.1, 0.1],
        }
    }
}

/// Top-down, car-centered, heading-up rasterization. The car sits in the
/// middle column three quarters of the way down the image. Grass, road and
/// car fall in disjoint intensity bands; car pixels are brighter when the
/// ground under them is road. Three channels render color, any other channel
/// count repeats the gray level.
pub fn render_pixels(state: &CarState, track: &Track, car: &CarParams, config: &PixelConfig) -> PixelObservation {
    assert!(config.height >= 16 && config.width >= 16, "image must be at least 16x16");
    let mpp = config.view_span / config.width as f64;
    let half_road = track.width() / 2.0;
    let forward_axis = Vec2::from_angle(state.heading);
    let left_axis = forward_axis.perp();
    let anchor_row = 0.75 * config.height as f64;
    let anchor_col = 0.5 * config.width as f64;

    // Only tiles that can reach the view window matter.
    let reach = {
        let fwd = anchor_row.max(config.height as f64 - anchor_row) * mpp;
        let side = anchor_col * mpp;
        fwd.hypot(side) + half_road
    };
    let nearby: Vec<(Vec2, Vec2)> = track
        .tiles()
        .iter()
        .filter(|t| point_segment_distance(t.start, t.end, state.position) <= reach)
        .map(|t| (t.start, t.end))
        .collect();

    let mut data = Vec::with_capacity(config.height * config.width * config.channels);
    for row in 0..config.height {
        let forward = (anchor_row - (row as f64 + 0.5)) * mpp;
        for col in 0..config.width {
            let right = ((col as f64 + 0.5) - anchor_col) * mpp;
            let world = state.position + forward_axis * forward - left_axis * right;
            let road = nearby
                .iter()
                .any(|&(a, b)| point_segment_distance(a, b, world) <= half_road);
            let in_car = forward.abs() <= car.length / 2.0 && right.abs() <= car.width / 2.0;
            let surface = match (in_car, road) {
                (true, true) => Surface::CarOnRoad,
                (true, false) => Surface::CarOnGrass,
                (false, true) => Surface::Road,
                (false, false) => Surface::Grass,
            };
            if config.channels == 3 {
                data.extend_from_slice(&surface.rgb());
            } else {
                data.extend(std::iter::repeat_n(surface.gray(), config.channels));
            }
        }
    }
    PixelObservation {
        height: config.height,
        width: config.width,
        channels: config.channels,
        data,
    }
}
