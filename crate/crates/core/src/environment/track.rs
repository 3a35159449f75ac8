//! Closed tile tracks: procedural generation, projection onto the centerline
//! and the flat text serialization used for reproducibility.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use rand::Rng as _;

use super::geometry::{segment_param, segment_segment_distance, Vec2};
use super::EnvError;
use crate::seeding;

/// Header line of the serialized track format.
pub const TRACK_FORMAT_HEADER: &str = "carracing-track 1";

const CLOSURE_TOLERANCE: f64 = 1e-9;
const INNER_RADIUS: f64 = 45.0;
const OUTER_RADIUS: f64 = 90.0;
const SAMPLES_PER_SEGMENT: usize = 256;
const MAX_ATTEMPTS: u64 = 256;
const MIN_TURN_RADIUS: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct TrackConfig {
    pub seed: u64,
    /// Number of tiles `N`; the per-tile reward is `1000 / N`.
    pub tile_count: usize,
    pub road_width: f64,
    pub control_points: usize,
    pub max_frames: usize,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            tile_count: 100,
            road_width: 10.0,
            control_points: 12,
            max_frames: 2000,
        }
    }
}

impl TrackConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.tile_count < 8 {
            return Err(EnvError::Degenerate(format!(
                "tile count {} is below the minimum of 8",
                self.tile_count
            )));
        }
        if !(self.road_width > 0.0 && self.road_width.is_finite()) {
            return Err(EnvError::Degenerate(format!(
                "road width must be positive, got {}",
                self.road_width
            )));
        }
        if self.control_points < 4 {
            return Err(EnvError::Degenerate(format!(
                "at least 4 control points are needed, got {}",
                self.control_points
            )));
        }
        if self.max_frames == 0 {
            return Err(EnvError::Degenerate("max_frames must be positive".into()));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// One straight centerline segment of the track.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tile {
    pub start: Vec2,
    pub end: Vec2,
    /// Signed curvature of the underlying curve at this tile, positive for left turns.
    pub curvature: f64,
}

impl Tile {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn direction(&self) -> Vec2 {
        let d = self.end - self.start;
        d * (1.0 / d.length())
    }
}

/// Nearest point of the centerline to a query point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub tile: usize,
    /// Arc length from the start of tile 0, in `[0, total_length)`.
    pub arc: f64,
    pub point: Vec2,
    pub tangent: Vec2,
    /// Signed distance from the centerline, left of travel positive.
    pub lateral: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    seed: u64,
    tiles: Vec<Tile>,
    width: f64,
    /// `starts[i]` is the arc length at the start of tile `i`; one extra entry holds the total.
    starts: Vec<f64>,
}

impl Track {
    /// Builds a track from explicit tiles, checking that they form a closed chain.
    pub fn from_tiles(seed: u64, tiles: Vec<Tile>, width: f64) -> Result<Self, EnvError> {
        if tiles.len() < 8 {
            return Err(EnvError::Degenerate(format!(
                "a track needs at least 8 tiles, got {}",
                tiles.len()
            )));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(EnvError::Degenerate(format!("road width must be positive, got {width}")));
        }
        for (i, tile) in tiles.iter().enumerate() {
            let next = &tiles[(i + 1) % tiles.len()];
            if tile.end.distance(next.start) > CLOSURE_TOLERANCE {
                return Err(EnvError::Degenerate(format!(
                    "tile {i} does not end where tile {} starts",
                    (i + 1) % tiles.len()
                )));
            }
            if !(tile.length() > 0.0) || !tile.curvature.is_finite() {
                return Err(EnvError::Degenerate(format!("tile {i} is degenerate")));
            }
        }
        let mut starts = Vec::with_capacity(tiles.len() + 1);
        let mut acc = 0.0;
        for tile in &tiles {
            starts.push(acc);
            acc += tile.length();
        }
        starts.push(acc);
        Ok(Self {
            seed,
            tiles,
            width,
            starts,
        })
    }

    /// Builds a track through the given closed list of centerline vertices.
    /// Tile `i` runs from `points[i]` to `points[i + 1]` (wrapping).
    pub fn from_centerline(
        seed: u64,
        points: &[Vec2],
        curvatures: &[f64],
        width: f64,
    ) -> Result<Self, EnvError> {
        if points.len() != curvatures.len() {
            return Err(EnvError::Degenerate(
                "one curvature per centerline vertex is required".into(),
            ));
        }
        let tiles = (0..points.len())
            .map(|i| Tile {
                start: points[i],
                end: points[(i + 1) % points.len()],
                curvature: curvatures[i],
            })
            .collect();
        Self::from_tiles(seed, tiles, width)
    }

    /// A counter-clockwise circle of `radius` centered on `(0, radius)` so that
    /// tile 0 starts at the origin heading along `+x`.
    pub fn circle(radius: f64, tiles: usize, width: f64) -> Result<Self, EnvError> {
        let points: Vec<Vec2> = (0..tiles)
            .map(|i| {
                let theta = TAU * i as f64 / tiles as f64;
                Vec2::new(radius * theta.sin(), radius - radius * theta.cos())
            })
            .collect();
        Self::from_centerline(0, &points, &vec![1.0 / radius; tiles], width)
    }

    /// A counter-clockwise stadium: a straight of `straight` meters along `+x`
    /// starting at the origin, a left half-circle, the return straight and a
    /// second half-circle.
    pub fn stadium(
        straight: f64,
        radius: f64,
        tiles_per_straight: usize,
        tiles_per_turn: usize,
        width: f64,
    ) -> Result<Self, EnvError> {
        let mut points = Vec::new();
        let mut curvatures = Vec::new();
        for i in 0..tiles_per_straight {
            points.push(Vec2::new(straight * i as f64 / tiles_per_straight as f64, 0.0));
            curvatures.push(0.0);
        }
        for i in 0..tiles_per_turn {
            let phi = -PI / 2.0 + PI * i as f64 / tiles_per_turn as f64;
            points.push(Vec2::new(straight + radius * phi.cos(), radius + radius * phi.sin()));
            curvatures.push(1.0 / radius);
        }
        for i in 0..tiles_per_straight {
            points.push(Vec2::new(
                straight - straight * i as f64 / tiles_per_straight as f64,
                2.0 * radius,
            ));
            curvatures.push(0.0);
        }
        for i in 0..tiles_per_turn {
            let phi = PI / 2.0 + PI * i as f64 / tiles_per_turn as f64;
            points.push(Vec2::new(radius * phi.cos(), radius + radius * phi.sin()));
            curvatures.push(1.0 / radius);
        }
        Self::from_centerline(0, &points, &curvatures, width)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn tile_count(&self) -> usize {
        self.tiles.len()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn total_length(&self) -> f64 {
        self.starts[self.tiles.len()]
    }

    pub fn tile_start_arc(&self, tile: usize) -> f64 {
        self.starts[tile]
    }

    /// Index of the tile whose arc-length span `[start, end)` contains `arc`
    /// (taken modulo the lap length).
    pub fn tile_at(&self, arc: f64) -> usize {
        let s = arc.rem_euclid(self.total_length());
        let idx = self.starts.partition_point(|&start| start <= s);
        idx.saturating_sub(1).min(self.tiles.len() - 1)
    }

    pub fn curvature_at(&self, arc: f64) -> f64 {
        self.tiles[self.tile_at(arc)].curvature
    }

    /// Centerline point and unit tangent at an arc length.
    pub fn point_at(&self, arc: f64) -> (Vec2, Vec2) {
        let s = arc.rem_euclid(self.total_length());
        let tile_idx = self.tile_at(s);
        let tile = &self.tiles[tile_idx];
        let t = (s - self.starts[tile_idx]) / tile.length();
        (tile.start + (tile.end - tile.start) * t, tile.direction())
    }

    /// Projects `p` onto the nearest point of the centerline polyline.
    /// Ties go to the lowest tile index.
    pub fn project(&self, p: Vec2) -> Projection {
        let mut best = (f64::INFINITY, 0usize, 0.0f64);
        for (i, tile) in self.tiles.iter().enumerate() {
            let t = segment_param(tile.start, tile.end, p);
            let q = tile.start + (tile.end - tile.start) * t;
            let d2 = (p - q).dot(p - q);
            if d2 < best.0 {
                best = (d2, i, t);
            }
        }
        let (_, mut tile_idx, mut t) = best;
        if t >= 1.0 {
            tile_idx = (tile_idx + 1) % self.tiles.len();
            t = 0.0;
        }
        let tile = &self.tiles[tile_idx];
        let point = tile.start + (tile.end - tile.start) * t;
        let tangent = tile.direction();
        let offset = p - point;
        let distance = offset.length();
        let side = tangent.cross(offset);
        let lateral = if side < 0.0 { -distance } else { distance };
        let arc = (self.starts[tile_idx] + t * tile.length()).min(self.starts[tile_idx + 1]);
        Projection {
            tile: tile_idx,
            arc: if arc >= self.total_length() { 0.0 } else { arc },
            point,
            tangent,
            lateral,
        }
    }

    /// Whether `p` lies on the road surface, i.e. within half a road width of
    /// the centerline.
    pub fn on_road(&self, p: Vec2) -> bool {
        self.project(p).lateral.abs() <= self.width / 2.0
    }

    /// Serializes the track in the versioned text format: a header line, a
    /// `seed=.. tiles=.. width=..` line, then `x0 y0 x1 y1 curvature` per tile.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{TRACK_FORMAT_HEADER}");
        let _ = writeln!(
            out,
            "seed={} tiles={} width={:?}",
            self.seed,
            self.tiles.len(),
            self.width
        );
        for t in &self.tiles {
            let _ = writeln!(
                out,
                "{:?} {:?} {:?} {:?} {:?}",
                t.start.x, t.start.y, t.end.x, t.end.y, t.curvature
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, EnvError> {
        let bad = |line: usize, msg: &str| EnvError::TrackFormat {
            line,
            message: msg.to_string(),
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == TRACK_FORMAT_HEADER => {}
            Some((_, h)) if h.starts_with("carracing-track") => {
                return Err(bad(1, &format!("unsupported version line {h:?}")))
            }
            _ => return Err(bad(1, "missing track header")),
        }
        let (_, meta) = lines.next().ok_or_else(|| bad(2, "missing metadata line"))?;
        let mut seed = None;
        let mut count = None;
        let mut width = None;
        for field in meta.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| bad(2, &format!("malformed field {field:?}")))?;
            match key {
                "seed" => seed = value.parse::<u64>().ok(),
                "tiles" => count = value.parse::<usize>().ok(),
                "width" => width = value.parse::<f64>().ok(),
                _ => return Err(bad(2, &format!("unknown field {key:?}"))),
            }
        }
        let (seed, count, width) = match (seed, count, width) {
            (Some(s), Some(c), Some(w)) => (s, c, w),
            _ => return Err(bad(2, "seed, tiles and width are all required")),
        };
        let mut tiles = Vec::with_capacity(count);
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let nums: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
            let nums = nums.map_err(|_| bad(idx + 1, "tile fields must be numbers"))?;
            if nums.len() != 5 {
                return Err(bad(idx + 1, "expected x0 y0 x1 y1 curvature"));
            }
            tiles.push(Tile {
                start: Vec2::new(nums[0], nums[1]),
                end: Vec2::new(nums[2], nums[3]),
                curvature: nums[4],
            });
        }
        if tiles.len() != count {
            return Err(bad(
                2,
                &format!("header declares {count} tiles but {} were found", tiles.len()),
            ));
        }
        Self::from_tiles(seed, tiles, width)
    }
}

/// Generates a closed circuit: random control points on an annulus, a
/// periodic centripetal Catmull-Rom spline through them, resampled into
/// `tile_count` tiles of equal arc length. Layouts that fold back onto
/// themselves or turn too tightly are rejected and redrawn from the next
/// seed stream, so the output depends only on the config.
pub fn generate_track(config: &TrackConfig) -> Result<Track, EnvError> {
    config.validate()?;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = seeding::stream(config.seed, &[attempt]);
        let k = config.control_points;
        let control: Vec<Vec2> = (0..k)
            .map(|i| {
                let slot = TAU / k as f64;
                let theta = slot * i as f64 + rng.random_range(-0.35..0.35) * slot;
                let r = rng.random_range(INNER_RADIUS..OUTER_RADIUS);
                Vec2::new(r * theta.cos(), r * theta.sin())
            })
            .collect();
        let spline = ClosedSpline::new(control);
        let track = spline.resample(config.seed, config.tile_count, config.road_width)?;
        if is_well_formed(&track) {
            return Ok(track);
        }
    }
    Err(EnvError::Degenerate(format!(
        "no well-formed layout found for seed {} after {MAX_ATTEMPTS} attempts",
        config.seed
    )))
}

fn is_well_formed(track: &Track) -> bool {
    let tiles = track.tiles();
    let total = track.total_length();
    let width = track.width();
    if tiles.iter().any(|t| t.curvature.abs() > 1.0 / MIN_TURN_RADIUS) {
        return false;
    }
    for i in 0..tiles.len() {
        for j in (i + 1)..tiles.len() {
            let gap = (track.tile_start_arc(j) - track.tile_start_arc(i)).abs();
            let gap = gap.min(total - gap);
            if gap <= 3.0 * width {
                continue;
            }
            let d = segment_segment_distance(tiles[i].start, tiles[i].end, tiles[j].start, tiles[j].end);
            if d < 1.5 * width {
                return false;
            }
        }
    }
    true
}

/// Periodic centripetal Catmull-Rom spline through a closed list of points.
struct ClosedSpline {
    points: Vec<Vec2>,
}

impl ClosedSpline {
    fn new(points: Vec<Vec2>) -> Self {
        Self { points }
    }

    fn segments(&self) -> usize {
        self.points.len()
    }

    /// Position on segment `seg` (from point `seg` to `seg + 1`) at local parameter `u`.
    fn eval(&self, seg: usize, u: f64) -> Vec2 {
        let n = self.points.len();
        let p0 = self.points[(seg + n - 1) % n];
        let p1 = self.points[seg];
        let p2 = self.points[(seg + 1) % n];
        let p3 = self.points[(seg + 2) % n];
        let knot = |a: Vec2, b: Vec2| a.distance(b).sqrt().max(1e-12);
        let t0 = 0.0;
        let t1 = t0 + knot(p0, p1);
        let t2 = t1 + knot(p1, p2);
        let t3 = t2 + knot(p2, p3);
        let t = t1 + u * (t2 - t1);
        let lerp = |a: Vec2, b: Vec2, ta: f64, tb: f64| a * ((tb - t) / (tb - ta)) + b * ((t - ta) / (tb - ta));
        let a1 = lerp(p0, p1, t0, t1);
        let a2 = lerp(p1, p2, t1, t2);
        let a3 = lerp(p2, p3, t2, t3);
        let b1 = lerp(a1, a2, t0, t2);
        let b2 = lerp(a2, a3, t1, t3);
        lerp(b1, b2, t1, t2)
    }

    fn curvature(&self, seg: usize, u: f64) -> f64 {
        let h = 1e-4;
        let prev = self.eval(seg, u - h);
        let here = self.eval(seg, u);
        let next = self.eval(seg, u + h);
        let d1 = (next - prev) * (1.0 / (2.0 * h));
        let d2 = (next - here * 2.0 + prev) * (1.0 / (h * h));
        d1.cross(d2) / d1.length().powi(3)
    }

    fn resample(&self, seed: u64, tiles: usize, width: f64) -> Result<Track, EnvError> {
        // Dense polyline with (segment, u) tags for every vertex.
        let mut dense = Vec::with_capacity(self.segments() * SAMPLES_PER_SEGMENT + 1);
        for seg in 0..self.segments() {
            for k in 0..SAMPLES_PER_SEGMENT {
                let u = k as f64 / SAMPLES_PER_SEGMENT as f64;
                dense.push((seg as f64 + u, self.eval(seg, u)));
            }
        }
        dense.push((self.segments() as f64, self.points[0]));
        let mut cumulative = Vec::with_capacity(dense.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in dense.windows(2) {
            acc += w[0].1.distance(w[1].1);
            cumulative.push(acc);
        }
        let total = acc;
        let locate = |s: f64| -> (f64, Vec2) {
            let idx = cumulative.partition_point(|&c| c <= s).clamp(1, dense.len() - 1);
            let (c0, c1) = (cumulative[idx - 1], cumulative[idx]);
            let f = if c1 > c0 { (s - c0) / (c1 - c0) } else { 0.0 };
            let (g0, p0) = dense[idx - 1];
            let (g1, p1) = dense[idx];
            (g0 + f * (g1 - g0), p0 + (p1 - p0) * f)
        };
        let step = total / tiles as f64;
        let mut points = Vec::with_capacity(tiles);
        let mut curvatures = Vec::with_capacity(tiles);
        for i in 0..tiles {
            let (_, p) = if i == 0 { (0.0, self.points[0]) } else { locate(step * i as f64) };
            points.push(p);
            let (g, _) = locate(step * (i as f64 + 0.5));
            let seg = (g.floor() as usize).min(self.segments() - 1);
            curvatures.push(self.curvature(seg, g - seg as f64));
        }
        Track::from_centerline(seed, &points, &curvatures, width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_honors_tile_count_and_closes() {
        let cfg = TrackConfig {
            seed: 7,
            tile_count: 100,
            ..TrackConfig::default()
        };
        let track = generate_track(&cfg).unwrap();
        assert_eq!(track.tile_count(), 100);
        let first = track.tiles()[0];
        let last = track.tiles()[99];
        assert!(last.end.distance(first.start) <= 1e-9);
        for w in track.tiles().windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let cfg = TrackConfig::default();
        assert_eq!(generate_track(&cfg).unwrap().to_text(), generate_track(&cfg).unwrap().to_text());
    }

    #[test]
    fn different_seeds_give_different_tracks() {
        let a = generate_track(&TrackConfig::default().with_seed(7)).unwrap();
        let b = generate_track(&TrackConfig::default().with_seed(8)).unwrap();
        assert!(a
            .tiles()
            .iter()
            .zip(b.tiles())
            .any(|(x, y)| x.start != y.start || x.end != y.end));
    }

    #[test]
    fn tiles_have_equal_arc_length() {
        let track = generate_track(&TrackConfig::default()).unwrap();
        let mean = track.total_length() / track.tile_count() as f64;
        for t in track.tiles() {
            assert!((t.length() - mean).abs() / mean < 0.02, "{} vs {mean}", t.length());
        }
    }

    #[test]
    fn rejects_degenerate_configs() {
        let few = TrackConfig {
            tile_count: 7,
            ..TrackConfig::default()
        };
        assert!(matches!(generate_track(&few), Err(EnvError::Degenerate(_))));
        let narrow = TrackConfig {
            road_width: 0.0,
            ..TrackConfig::default()
        };
        assert!(matches!(generate_track(&narrow), Err(EnvError::Degenerate(_))));
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let track = generate_track(&TrackConfig::default().with_seed(3)).unwrap();
        let parsed = Track::from_text(&track.to_text()).unwrap();
        assert_eq!(parsed, track);
    }

    #[test]
    fn text_rejects_bad_input() {
        let track = Track::circle(30.0, 12, 8.0).unwrap();
        let text = track.to_text();
        assert!(Track::from_text(&text.replace("carracing-track 1", "carracing-track 2")).is_err());
        let truncated: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            Track::from_text(&truncated),
            Err(EnvError::TrackFormat { line: 2, .. })
        ));
    }

    #[test]
    fn projection_on_circle() {
        let track = Track::circle(20.0, 64, 6.0).unwrap();
        let p = track.project(Vec2::new(0.0, 0.0));
        assert_eq!(p.tile, 0);
        assert_eq!(p.arc, 0.0);
        // A point inside the circle is to the left of counter-clockwise travel.
        let inside = track.project(Vec2::new(0.0, 1.0));
        assert!(inside.lateral > 0.99 && inside.lateral <= 1.0);
        let outside = track.project(Vec2::new(0.0, -1.0));
        assert!(outside.lateral < -0.99 && outside.lateral >= -1.0);
    }

    #[test]
    fn tile_at_matches_spans() {
        let track = Track::stadium(50.0, 20.0, 10, 10, 8.0).unwrap();
        for i in 0..track.tile_count() {
            let s = track.tile_start_arc(i);
            assert_eq!(track.tile_at(s), i);
            assert_eq!(track.tile_at(s + 1e-6), i);
        }
        assert_eq!(track.tile_at(track.total_length()), 0);
        assert_eq!(track.tile_at(-1e-6), track.tile_count() - 1);
    }
}
