//! Synthetic IR scenes: a bright disc moving along a letter-shaped polyline
//! over dim uniform noise. Stands in for the camera when testing the
//! pipeline end to end.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::SynthError;
use crate::imaging::Frame;
use crate::trace::TraceConfig;

/// Letters with a shipped stroke template.
pub const SUPPORTED_LETTERS: [char; 2] = ['A', 'C'];

/// Template for 'A' in the unit square (y down): lead-in, left leg up, right
/// leg halfway down, crossbar and back, rest of the right leg, lead-out.
const TEMPLATE_A: [(f64, f64); 8] =
    [(0.0, 0.5), (0.2, 1.0), (0.5, 0.0), (0.65, 0.5), (0.35, 0.5), (0.65, 0.5), (0.8, 1.0), (1.0, 0.5)];

/// 'C' arc: 12 points from the upper tip counter-clockwise to the lower tip,
/// centered at (0.5, 0.5) with radius 0.4 and opening to the right.
fn template_c() -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 0.5)];
    for k in 0..12 {
        let angle = (60.0 + 240.0 * k as f64 / 11.0).to_radians();
        pts.push((0.5 + 0.4 * angle.cos(), 0.5 - 0.4 * angle.sin()));
    }
    pts.push((1.0, 0.5));
    pts
}

fn template(letter: char) -> Result<Vec<(f64, f64)>, SynthError> {
    match letter.to_ascii_uppercase() {
        'A' => Ok(TEMPLATE_A.to_vec()),
        'C' => Ok(template_c()),
        other => Err(SynthError::UnsupportedLetter(other)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GestureScript {
    pub waypoints: Vec<(f64, f64)>,
    pub samples_per_segment: usize,
    pub blob_radius: f64,
    pub blob_intensity: u8,
    pub background_noise_max: u8,
    pub jitter_sigma: f64,
    pub seed: u64,
}

impl GestureScript {
    pub fn new(waypoints: Vec<(f64, f64)>) -> Self {
        GestureScript {
            waypoints,
            samples_per_segment: 6,
            blob_radius: 6.0,
            blob_intensity: 255,
            background_noise_max: 30,
            jitter_sigma: 1.0,
            seed: 0,
        }
    }

    /// Checks the script's own fields and that it starts and ends in the zones.
    pub fn validate(&self, config: &TraceConfig) -> Result<(), SynthError> {
        if self.waypoints.len() < 2 {
            return Err(SynthError::Script("need at least two waypoints".into()));
        }
        if self.samples_per_segment == 0 {
            return Err(SynthError::Script("samples_per_segment must be positive".into()));
        }
        if self.blob_radius.is_nan() || self.blob_radius <= 0.0 || self.jitter_sigma.is_nan() || self.jitter_sigma < 0.0 {
            return Err(SynthError::Script("blob_radius must be positive and jitter_sigma non-negative".into()));
        }
        let (first, last) = (self.waypoints[0], self.waypoints[self.waypoints.len() - 1]);
        if !config.start_zone.contains(first.0, first.1) {
            return Err(SynthError::Script("first waypoint outside the start zone".into()));
        }
        if !config.end_zone.contains(last.0, last.1) {
            return Err(SynthError::Script("last waypoint outside the end zone".into()));
        }
        Ok(())
    }

    /// Points linearly interpolated along each segment (before jitter).
    pub fn sample_points(&self) -> Vec<(f64, f64)> {
        let n = self.samples_per_segment.max(1);
        let mut pts = Vec::with_capacity((self.waypoints.len().saturating_sub(1)) * n + 1);
        for seg in self.waypoints.windows(2) {
            let ((x0, y0), (x1, y1)) = (seg[0], seg[1]);
            for s in 0..n {
                let t = s as f64 / n as f64;
                pts.push((x0 + (x1 - x0) * t, y0 + (y1 - y0) * t));
            }
        }
        if let Some(&last) = self.waypoints.last() {
            pts.push(last);
        }
        pts
    }

    /// `key=value` header lines followed by one `x y` line per waypoint.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "samples_per_segment={}", self.samples_per_segment).unwrap();
        writeln!(out, "blob_radius={}", self.blob_radius).unwrap();
        writeln!(out, "blob_intensity={}", self.blob_intensity).unwrap();
        writeln!(out, "background_noise_max={}", self.background_noise_max).unwrap();
        writeln!(out, "jitter_sigma={}", self.jitter_sigma).unwrap();
        writeln!(out, "seed={}", self.seed).unwrap();
        for (x, y) in &self.waypoints {
            writeln!(out, "{x} {y}").unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let mut script = GestureScript::new(Vec::new());
        for (i, line) in text.lines().map(str::trim).enumerate().filter(|(_, l)| !l.is_empty()) {
            let bad = |what: &str| SynthError::Script(format!("line {}: {what}", i + 1));
            if let Some((key, value)) = line.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "samples_per_segment" => script.samples_per_segment = value.parse().map_err(|_| bad("bad count"))?,
                    "blob_radius" => script.blob_radius = value.parse().map_err(|_| bad("bad radius"))?,
                    "blob_intensity" => script.blob_intensity = value.parse().map_err(|_| bad("bad intensity"))?,
                    "background_noise_max" => script.background_noise_max = value.parse().map_err(|_| bad("bad noise"))?,
                    "jitter_sigma" => script.jitter_sigma = value.parse().map_err(|_| bad("bad sigma"))?,
                    "seed" => script.seed = value.parse().map_err(|_| bad("bad seed"))?,
                    other => return Err(bad(&format!("unknown key {other:?}"))),
                }
            } else {
                let mut it = line.split_whitespace().map(str::parse::<f64>);
                match (it.next(), it.next(), it.next()) {
                    (Some(Ok(x)), Some(Ok(y)), None) => script.waypoints.push((x, y)),
                    _ => return Err(bad("expected `x y`")),
                }
            }
        }
        Ok(script)
    }
}

/// Maps the letter's template so it starts at the start-zone center and ends
/// at the end-zone center. The template's vertical extent becomes
/// `0.6 * min(zone distance, frame height)` pixels, perpendicular to the
/// start-to-end direction.
pub fn letter_path(letter: char, config: &TraceConfig, width: usize, height: usize) -> Result<GestureScript, SynthError> {
    let points = template(letter)?;
    config.validate(width, height)?;
    let (sx, sy) = config.start_zone.center;
    let (ex, ey) = config.end_zone.center;
    let (ux, uy) = (ex - sx, ey - sy);
    let d = (ux * ux + uy * uy).sqrt();
    let (nx, ny) = (-uy / d, ux / d);
    let extent = 0.6 * d.min(height as f64);
    let waypoints = points
        .into_iter()
        .map(|(x, y)| {
            let off = (y - 0.5) * extent;
            (sx + x * ux + off * nx, sy + x * uy + off * ny)
        })
        .collect();
    let script = GestureScript::new(waypoints);
    script.validate(config)?;
    Ok(script)
}

/// Paints a filled disc of `intensity` centered at `center` onto `frame`.
pub fn stamp_disc(frame: &mut Frame, center: (f64, f64), radius: f64, intensity: u8) {
    let (cx, cy) = center;
    let r2 = radius * radius;
    let x0 = (cx - radius).floor().max(0.0) as usize;
    let y0 = (cy - radius).floor().max(0.0) as usize;
    let x1 = ((cx + radius).ceil() as usize).min(frame.width() - 1);
    let y1 = ((cy + radius).ceil() as usize).min(frame.height() - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            if dx * dx + dy * dy <= r2 {
                frame.set(x, y, intensity);
            }
        }
    }
}

fn check_bounds(center: (f64, f64), width: usize, height: usize) -> Result<(), SynthError> {
    let (x, y) = center;
    if x >= 0.0 && y >= 0.0 && x < width as f64 && y < height as f64 {
        Ok(())
    } else {
        Err(SynthError::BlobOutOfBounds { x, y, width, height })
    }
}

/// Noise-free frame with a single disc, as synthesized for live pointer input.
pub fn disc_frame(width: usize, height: usize, center: (f64, f64), radius: f64, intensity: u8, index: u64) -> Result<Frame, SynthError> {
    check_bounds(center, width, height)?;
    let mut frame = Frame::dark(width, height, index).map_err(|e| SynthError::Script(e.to_string()))?;
    stamp_disc(&mut frame, center, radius, intensity);
    Ok(frame)
}

/// One frame per sample point, indexed from 1. Deterministic for a given seed.
pub fn render_sequence(script: &GestureScript, width: usize, height: usize) -> Result<Vec<Frame>, SynthError> {
    if script.waypoints.len() < 2 {
        return Err(SynthError::Script("need at least two waypoints".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(script.seed);
    let jitter = Normal::new(0.0, script.jitter_sigma).map_err(|e| SynthError::Script(e.to_string()))?;
    let mut frames = Vec::new();
    for (i, (px, py)) in script.sample_points().into_iter().enumerate() {
        let center = if script.jitter_sigma > 0.0 {
            (px + jitter.sample(&mut rng), py + jitter.sample(&mut rng))
        } else {
            (px, py)
        };
        check_bounds(center, width, height)?;
        let pixels: Vec<u8> = if script.background_noise_max == 0 {
            vec![0; width * height]
        } else {
            (0..width * height).map(|_| rng.random_range(0..=script.background_noise_max)).collect()
        };
        let mut frame = Frame::new(width, height, pixels, i as u64 + 1).map_err(|e| SynthError::Script(e.to_string()))?;
        stamp_disc(&mut frame, center, script.blob_radius, script.blob_intensity);
        frames.push(frame);
    }
    Ok(frames)
}
