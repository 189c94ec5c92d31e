//! Trigger-zone state machine accumulating the cumulative blob image of one
//! gesture.
//!
//! A gesture starts when the primary blob's centroid enters the start
//! (green) zone and completes when it reaches the end (red) zone after at
//! least `min_path_points` observations. While tracing, every observed blob
//! is OR-ed into a frame-sized accumulator; jumps longer than the blob
//! diameter are bridged with a straight stroke so the image stays connected.

use serde::{Deserialize, Serialize};

use crate::error::TraceError;
use crate::imaging::{BitMask, Blob};
use crate::preprocess::PatternImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoneRole {
    Start,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerZone {
    pub center: (f64, f64),
    pub radius: f64,
    pub role: ZoneRole,
}

impl TriggerZone {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        dx * dx + dy * dy <= self.radius * self.radius
    }

    fn fits(&self, width: usize, height: usize) -> bool {
        let (cx, cy) = self.center;
        self.radius > 0.0
            && cx - self.radius >= 0.0
            && cy - self.radius >= 0.0
            && cx + self.radius <= width as f64
            && cy + self.radius <= height as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub start_zone: TriggerZone,
    pub end_zone: TriggerZone,
    pub min_path_points: usize,
    /// Consecutive blob-less frames tolerated before a trace is aborted.
    pub gap_tolerance: u32,
    pub stroke_width: u32,
}

impl TraceConfig {
    /// Default zone layout: start at (0.15 W, 0.5 H), end at (0.85 W, 0.5 H),
    /// both with radius 0.08 min(W, H).
    pub fn for_frame(width: usize, height: usize) -> Self {
        let (w, h) = (width as f64, height as f64);
        let radius = 0.08 * w.min(h);
        TraceConfig {
            start_zone: TriggerZone { center: (0.15 * w, 0.5 * h), radius, role: ZoneRole::Start },
            end_zone: TriggerZone { center: (0.85 * w, 0.5 * h), radius, role: ZoneRole::End },
            min_path_points: 10,
            gap_tolerance: 5,
            stroke_width: 3,
        }
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<(), TraceError> {
        for zone in [&self.start_zone, &self.end_zone] {
            if !zone.fits(width, height) {
                return Err(TraceError::Config(format!("{:?} zone does not fit a {width}x{height} frame", zone.role)));
            }
        }
        let (dx, dy) = (
            self.start_zone.center.0 - self.end_zone.center.0,
            self.start_zone.center.1 - self.end_zone.center.1,
        );
        if (dx * dx + dy * dy).sqrt() <= self.start_zone.radius + self.end_zone.radius {
            return Err(TraceError::Config("start and end zones overlap".into()));
        }
        if self.min_path_points == 0 || self.stroke_width == 0 {
            return Err(TraceError::Config("min_path_points and stroke_width must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Idle,
    Tracing,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub frame: u64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    None,
    Started,
    /// Carries the accumulator frozen at the transition.
    Completed(PatternImage),
    Aborted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceState {
    phase: Phase,
    path: Vec<PathPoint>,
    accumulator: BitMask,
    missing_run: u32,
}

impl TraceState {
    pub fn new(width: usize, height: usize) -> Self {
        TraceState { phase: Phase::Idle, path: Vec::new(), accumulator: BitMask::new(width, height), missing_run: 0 }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn path(&self) -> &[PathPoint] {
        &self.path
    }

    pub fn accumulator(&self) -> &BitMask {
        &self.accumulator
    }

    pub fn missing_run(&self) -> u32 {
        self.missing_run
    }

    /// Back to Idle with an empty path and accumulator.
    pub fn reset(&mut self) {
        self.phase = Phase::Idle;
        self.path.clear();
        self.accumulator.clear();
        self.missing_run = 0;
    }

    /// In-place form of [`trace_step`].
    pub fn step(&mut self, blob: Option<&Blob>, frame_index: u64, config: &TraceConfig) -> TraceEvent {
        match (self.phase, blob) {
            (Phase::Complete, _) => TraceEvent::None,
            (Phase::Idle, Some(blob)) => {
                let (x, y) = blob.centroid;
                if !config.start_zone.contains(x, y) {
                    return TraceEvent::None;
                }
                self.phase = Phase::Tracing;
                self.missing_run = 0;
                self.path.push(PathPoint { frame: frame_index, x, y });
                self.accumulator.or_blob(blob);
                TraceEvent::Started
            }
            (Phase::Idle, None) => TraceEvent::None,
            (Phase::Tracing, Some(blob)) => {
                let (x, y) = blob.centroid;
                self.missing_run = 0;
                let prev = *self.path.last().expect("tracing path is never empty");
                self.path.push(PathPoint { frame: frame_index, x, y });
                self.accumulator.or_blob(blob);
                let jump = ((x - prev.x).powi(2) + (y - prev.y).powi(2)).sqrt();
                if jump > 2.0 * blob.equivalent_radius() {
                    bridge(&mut self.accumulator, round_point(prev.x, prev.y), round_point(x, y), config.stroke_width);
                }
                if config.end_zone.contains(x, y) && self.path.len() >= config.min_path_points {
                    self.phase = Phase::Complete;
                    return TraceEvent::Completed(PatternImage::from_mask(&self.accumulator));
                }
                TraceEvent::None
            }
            (Phase::Tracing, None) => {
                self.missing_run += 1;
                if self.missing_run > config.gap_tolerance {
                    self.reset();
                    return TraceEvent::Aborted;
                }
                TraceEvent::None
            }
        }
    }
}

/// Pure state transition: returns the successor state and the emitted event.
pub fn trace_step(state: &TraceState, blob: Option<&Blob>, frame_index: u64, config: &TraceConfig) -> (TraceState, TraceEvent) {
    let mut next = state.clone();
    let event = next.step(blob, frame_index, config);
    (next, event)
}

fn round_point(x: f64, y: f64) -> (i64, i64) {
    (x.round() as i64, y.round() as i64)
}

/// Integer points of the Bresenham line from `p0` to `p1`, both inclusive.
pub fn bresenham(p0: (i64, i64), p1: (i64, i64)) -> Vec<(i64, i64)> {
    let (mut x, mut y) = p0;
    let dx = (p1.0 - x).abs();
    let dy = -(p1.1 - y).abs();
    let sx = if x < p1.0 { 1 } else { -1 };
    let sy = if y < p1.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut points = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        points.push((x, y));
        if (x, y) == p1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    points
}

/// Stamps a square brush along the Bresenham line `p0 -> p1`.
///
/// The brush half-size is `(width - 1) / 2`, so no set pixel is farther
/// than `width / 2` (Chebyshev) from the continuous segment. Pixels already
/// set stay set; off-canvas pixels are skipped.
pub fn bridge(canvas: &mut BitMask, p0: (i64, i64), p1: (i64, i64), width: u32) {
    let half = (width.max(1) as i64 - 1) / 2;
    for (x, y) in bresenham(p0, p1) {
        for oy in -half..=half {
            for ox in -half..=half {
                canvas.set_checked(x + ox, y + oy);
            }
        }
    }
}

/// The completed gesture image: set accumulator bits become 255.
pub fn finalize_pattern(state: &TraceState) -> Result<PatternImage, TraceError> {
    match state.phase {
        Phase::Complete => Ok(PatternImage::from_mask(&state.accumulator)),
        other => Err(TraceError::WrongPhase(other)),
    }
}
