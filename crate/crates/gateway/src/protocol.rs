//! JSON messages, one document per WebSocket text frame.
//!
//! Client to server, tagged by `type`:
//!
//! ```json
//! {"type":"session_start","width":320,"height":240,"config":{"stroke_width":5}}
//! {"type":"pointer","x":48.0,"y":120.0}
//! {"type":"pointer_absent"}
//! {"type":"reset"}
//! ```
//!
//! Server to client is either `{"type":"update", ...SessionUpdate}` or
//! `{"type":"error","kind":"protocol"|"validation","message":"..."}`.
//! Errors never close the session.
//!
//! The accumulator is sent as one array of run lengths per row. Runs
//! alternate unset/set and always start with an unset run (possibly 0), so
//! every row sums to the frame width.

use darkwand_core::dispatch::{Bindings, Level};
use darkwand_core::imaging::Connectivity;
use darkwand_core::imaging::BitMask;
use darkwand_core::pipeline::{EventKind, PipelineConfig, Prediction};
use darkwand_core::trace::{Phase, TriggerZone, ZoneRole};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    SessionStart {
        width: usize,
        height: usize,
        #[serde(default)]
        config: Option<ConfigOverrides>,
    },
    Pointer {
        x: f64,
        y: f64,
    },
    PointerAbsent,
    Reset,
}

/// Optional replacements for the defaults derived from the frame size.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub threshold: Option<u8>,
    pub connectivity: Option<u8>,
    pub min_area: Option<usize>,
    pub min_path_points: Option<usize>,
    pub gap_tolerance: Option<u32>,
    pub stroke_width: Option<u32>,
    pub start_zone: Option<ZoneGeometry>,
    pub end_zone: Option<ZoneGeometry>,
    /// Bindings file text, `LETTER PIN LEVEL` per line.
    pub bindings: Option<String>,
}

fn zone(g: ZoneGeometry, role: ZoneRole) -> TriggerZone {
    TriggerZone { center: (g.x, g.y), radius: g.radius, role }
}

impl ConfigOverrides {
    /// Frame-size defaults with these overrides applied, validated.
    pub fn build(&self, width: usize, height: usize) -> Result<PipelineConfig, String> {
        let o = self;
        let mut c = PipelineConfig::for_frame(width, height);
        if let Some(t) = o.threshold {
            c.threshold = t;
        }
        if let Some(n) = o.connectivity {
            c.connectivity = Connectivity::try_from(n).map_err(|e| e.to_string())?;
        }
        if let Some(a) = o.min_area {
            c.min_area = a;
        }
        if let Some(n) = o.min_path_points {
            c.trace.min_path_points = n;
        }
        if let Some(n) = o.gap_tolerance {
            c.trace.gap_tolerance = n;
        }
        if let Some(n) = o.stroke_width {
            c.trace.stroke_width = n;
        }
        if let Some(z) = o.start_zone {
            c.trace.start_zone = zone(z, ZoneRole::Start);
        }
        if let Some(z) = o.end_zone {
            c.trace.end_zone = zone(z, ZoneRole::End);
        }
        if let Some(text) = &o.bindings {
            c.bindings = Bindings::parse(text).map_err(|e| e.to_string())?;
        }
        c.trace.validate(width, height).map_err(|e| e.to_string())?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneGeometry {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl From<&TriggerZone> for ZoneGeometry {
    fn from(z: &TriggerZone) -> Self {
        ZoneGeometry { x: z.center.0, y: z.center.1, radius: z.radius }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zones {
    pub start: ZoneGeometry,
    pub end: ZoneGeometry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionUpdate {
    pub width: usize,
    pub height: usize,
    /// Index of the last synthesized frame; 0 before the first pointer message.
    pub frame_index: u64,
    pub phase: Phase,
    pub centroid: Option<[f64; 2]>,
    pub path: Vec<[f64; 2]>,
    pub zones: Zones,
    pub accumulator: Vec<Vec<u32>>,
    pub event: Option<EventKind>,
    /// Present on completion only.
    pub prediction: Option<Prediction>,
    /// Every pin written so far, ascending by pin number.
    pub pins: Vec<PinState>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PinState {
    pub pin: u8,
    pub level: Level,
}

impl SessionUpdate {
    pub fn pin(&self, pin: u8) -> Option<Level> {
        self.pins.iter().find(|p| p.pin == pin).map(|p| p.level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Protocol,
    Validation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Update(Box<SessionUpdate>),
    Error { kind: ErrorKind, message: String },
}

impl ServerMessage {
    pub fn protocol(message: impl Into<String>) -> Self {
        ServerMessage::Error { kind: ErrorKind::Protocol, message: message.into() }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        ServerMessage::Error { kind: ErrorKind::Validation, message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages always serialize")
    }
}

pub fn encode_rle_rows(mask: &BitMask) -> Vec<Vec<u32>> {
    (0..mask.height())
        .map(|y| {
            let mut runs = Vec::new();
            let mut current = false;
            let mut len = 0u32;
            for x in 0..mask.width() {
                let bit = mask.get(x, y);
                if bit != current {
                    runs.push(len);
                    current = bit;
                    len = 0;
                }
                len += 1;
            }
            runs.push(len);
            runs
        })
        .collect()
}

/// Inverse of [`encode_rle_rows`]; `None` unless every row sums to `width`.
pub fn decode_rle_rows(rows: &[Vec<u32>], width: usize) -> Option<BitMask> {
    let height = rows.len();
    if width == 0 || height == 0 {
        return None;
    }
    let mut mask = BitMask::new(width, height);
    for (y, runs) in rows.iter().enumerate() {
        let mut x = 0usize;
        for (i, &run) in runs.iter().enumerate() {
            let end = x.checked_add(run as usize)?;
            if end > width {
                return None;
            }
            if i % 2 == 1 {
                for xi in x..end {
                    mask.set(xi, y, true);
                }
            }
            x = end;
        }
        if x != width {
            return None;
        }
    }
    Some(mask)
}
