use std::sync::Arc;

use darkwand_core::dispatch::GpioPort;
use darkwand_core::pipeline::{PipelineReport, StepOutcome};
use darkwand_core::synth::disc_frame;
use darkwand_core::{Model, Pipeline};

use crate::protocol::{encode_rle_rows, ClientMessage, ConfigOverrides, PinState, ServerMessage, SessionUpdate, Zones};

pub const POINTER_RADIUS: f64 = 6.0;
pub const POINTER_INTENSITY: u8 = 255;

/// Largest accepted frame, in pixels.
const MAX_PIXELS: usize = 4096 * 4096;

struct Active {
    pipeline: Pipeline,
    frame_index: u64,
}

/// One client's gesture session. Messages are handled strictly in order.
pub struct Session {
    model: Arc<Model>,
    active: Option<Active>,
}

impl Session {
    pub fn new(model: Arc<Model>) -> Self {
        Session { model, active: None }
    }

    pub fn is_started(&self) -> bool {
        self.active.is_some()
    }

    /// Offline-comparable summary of everything processed so far.
    pub fn report(&self) -> Option<PipelineReport> {
        self.active.as_ref().map(|a| a.pipeline.report())
    }

    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle_message(msg),
            Err(e) => vec![ServerMessage::protocol(format!("malformed message: {e}"))],
        }
    }

    pub fn handle_message(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        let reply = match msg {
            ClientMessage::SessionStart { width, height, config } => self.start(width, height, config.unwrap_or_default()),
            ClientMessage::Pointer { x, y } => self.pointer(x, y),
            ClientMessage::PointerAbsent => self.with_active(|a| {
                a.frame_index += 1;
                let outcome = a.pipeline.observe(None, a.frame_index);
                Ok(update(a, Some(&outcome)))
            }),
            ClientMessage::Reset => self.with_active(|a| {
                a.pipeline.reset_trace();
                Ok(update(a, None))
            }),
        };
        vec![reply]
    }

    fn with_active(&mut self, f: impl FnOnce(&mut Active) -> Result<ServerMessage, ServerMessage>) -> ServerMessage {
        match self.active.as_mut() {
            Some(a) => f(a).unwrap_or_else(|e| e),
            None => ServerMessage::protocol("session_start must come first"),
        }
    }

    fn start(&mut self, width: usize, height: usize, overrides: ConfigOverrides) -> ServerMessage {
        if self.active.is_some() {
            return ServerMessage::protocol("session already started");
        }
        if width == 0 || height == 0 || width.saturating_mul(height) > MAX_PIXELS {
            return ServerMessage::validation(format!("unsupported frame size {width}x{height}"));
        }
        let config = match overrides.build(width, height) {
            Ok(c) => c,
            Err(e) => return ServerMessage::validation(e),
        };
        match Pipeline::new(width, height, config, Arc::clone(&self.model), Default::default()) {
            Ok(pipeline) => {
                let active = Active { pipeline, frame_index: 0 };
                let msg = update(&active, None);
                self.active = Some(active);
                msg
            }
            Err(e) => ServerMessage::validation(e.to_string()),
        }
    }

    fn pointer(&mut self, x: f64, y: f64) -> ServerMessage {
        self.with_active(|a| {
            let (w, h) = a.pipeline.dimensions();
            if !(x.is_finite() && y.is_finite() && x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64) {
                return Err(ServerMessage::validation(format!("pointer ({x}, {y}) outside the {w}x{h} frame")));
            }
            a.frame_index += 1;
            let frame = disc_frame(w, h, (x, y), POINTER_RADIUS, POINTER_INTENSITY, a.frame_index)
                .map_err(|e| ServerMessage::validation(e.to_string()))?;
            let outcome = a.pipeline.step(&frame).map_err(|e| ServerMessage::validation(e.to_string()))?;
            Ok(update(a, Some(&outcome)))
        })
    }
}

fn update(a: &Active, outcome: Option<&StepOutcome>) -> ServerMessage {
    let p = &a.pipeline;
    let (width, height) = p.dimensions();
    let event = outcome.and_then(|o| o.event.as_ref());
    let trace = &p.config().trace;
    ServerMessage::Update(Box::new(SessionUpdate {
        width,
        height,
        frame_index: a.frame_index,
        phase: p.trace_state().phase(),
        centroid: outcome.and_then(|o| o.centroid).map(|(x, y)| [x, y]),
        path: p.path().iter().map(|pt| [pt.x, pt.y]).collect(),
        zones: Zones { start: (&trace.start_zone).into(), end: (&trace.end_zone).into() },
        accumulator: encode_rle_rows(p.trace_state().accumulator()),
        event: event.map(|e| e.kind),
        prediction: event.and_then(|e| e.prediction.clone()),
        pins: p.gpio().snapshot().into_iter().map(|(pin, level)| PinState { pin, level }).collect(),
    }))
}
