//! Frame-by-frame driver: frames -> blobs -> trace -> pattern -> features ->
//! prediction -> dispatch.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classify::{argmax_lowest, Classifier, Model};
use crate::dataset::{label_to_letter, letter_to_label, Dataset, Sample};
use crate::dispatch::{dispatch, Bindings, DispatchReport, GpioEvent, GpioPort, Level, VirtualGpio};
use crate::error::{ClassifyError, PipelineError, SynthError};
use crate::imaging::{find_blobs, primary_blob, threshold, Blob, Connectivity, Frame, DEFAULT_MIN_AREA, DEFAULT_THRESHOLD};
use crate::preprocess::{extract_features, PatternImage, FEATURE_DIM};
use crate::scalar::Scalar;
use crate::synth::{letter_path, render_sequence};
use crate::trace::{Phase, PathPoint, TraceConfig, TraceEvent, TraceState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub threshold: u8,
    pub connectivity: Connectivity,
    pub min_area: usize,
    pub trace: TraceConfig,
    pub bindings: Bindings,
}

impl PipelineConfig {
    pub fn for_frame(width: usize, height: usize) -> Self {
        PipelineConfig {
            threshold: DEFAULT_THRESHOLD,
            connectivity: Connectivity::Eight,
            min_area: DEFAULT_MIN_AREA,
            trace: TraceConfig::for_frame(width, height),
            bindings: Bindings::default(),
        }
    }

    /// Thresholds the frame and picks its primary blob.
    pub fn detect(&self, frame: &Frame) -> Option<Blob> {
        let blobs = find_blobs(&threshold(frame, self.threshold), self.connectivity, self.min_area);
        primary_blob(&blobs).cloned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Started,
    Completed,
    Aborted,
    /// Completed trace whose pattern had no ink after denoising; treated as an abort.
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u8,
    pub letter: char,
    /// Scores in `classes` order.
    pub classes: Vec<u8>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEvent {
    pub kind: EventKind,
    pub frame: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction: Option<Prediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dispatch: Option<DispatchReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub frames_consumed: u64,
    pub events: Vec<ReportEvent>,
    /// Prediction of the last completed gesture, if any.
    pub prediction: Option<Prediction>,
    pub pins: BTreeMap<u8, Level>,
    pub gpio_log: Vec<GpioEvent>,
}

impl PipelineReport {
    pub fn completed(&self) -> impl Iterator<Item = &ReportEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::Completed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// What one frame did to the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub frame: u64,
    pub phase: Phase,
    pub centroid: Option<(f64, f64)>,
    pub event: Option<ReportEvent>,
}

/// One gesture session over a sequence of equally sized frames.
pub struct Pipeline<T: Scalar, P: GpioPort = VirtualGpio> {
    config: PipelineConfig,
    model: Arc<Model<T>>,
    gpio: P,
    state: TraceState,
    width: usize,
    height: usize,
    frames_consumed: u64,
    events: Vec<ReportEvent>,
    gpio_log: Vec<GpioEvent>,
}

impl<T: Scalar, P: GpioPort> Pipeline<T, P> {
    pub fn new(width: usize, height: usize, config: PipelineConfig, model: Arc<Model<T>>, gpio: P) -> Result<Self, PipelineError> {
        if model.dim() != FEATURE_DIM {
            return Err(ClassifyError::Dimension { expected: FEATURE_DIM, actual: model.dim() }.into());
        }
        config.trace.validate(width, height)?;
        Ok(Pipeline {
            config,
            model,
            gpio,
            state: TraceState::new(width, height),
            width,
            height,
            frames_consumed: 0,
            events: Vec::new(),
            gpio_log: Vec::new(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn model(&self) -> &Model<T> {
        &self.model
    }

    pub fn trace_state(&self) -> &TraceState {
        &self.state
    }

    pub fn gpio(&self) -> &P {
        &self.gpio
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Drops any gesture in progress.
    pub fn reset_trace(&mut self) {
        self.state.reset();
    }

    fn classify(&self, pattern: &PatternImage) -> Option<Prediction> {
        let features = extract_features::<T>(pattern).ok()?;
        let scores = self.model.scores(features.values()).expect("dimension checked at construction");
        let classes = self.model.classes().to_vec();
        let label = classes[argmax_lowest(&scores)];
        Some(Prediction {
            label,
            letter: label_to_letter(label).unwrap_or('?'),
            classes,
            scores: scores.iter().map(|s| s.to_f64().unwrap_or(f64::NAN)).collect(),
        })
    }

    /// Advances by one frame.
    pub fn step(&mut self, frame: &Frame) -> Result<StepOutcome, PipelineError> {
        if (frame.width(), frame.height()) != (self.width, self.height) {
            return Err(PipelineError::FrameSize {
                index: frame.index(),
                width: frame.width(),
                height: frame.height(),
                expected_width: self.width,
                expected_height: self.height,
            });
        }
        let blob = self.config.detect(frame);
        Ok(self.observe(blob.as_ref(), frame.index()))
    }

    /// Advances with an already detected primary blob (or none).
    pub fn observe(&mut self, blob: Option<&Blob>, frame_index: u64) -> StepOutcome {
        // A completed gesture stays visible for one step, then the session rearms.
        if self.state.phase() == Phase::Complete {
            self.state.reset();
        }
        self.frames_consumed += 1;
        let event = match self.state.step(blob, frame_index, &self.config.trace) {
            TraceEvent::None => None,
            TraceEvent::Started => Some(ReportEvent { kind: EventKind::Started, frame: frame_index, prediction: None, dispatch: None }),
            TraceEvent::Aborted => Some(ReportEvent { kind: EventKind::Aborted, frame: frame_index, prediction: None, dispatch: None }),
            TraceEvent::Completed(pattern) => match self.classify(&pattern) {
                Some(prediction) => {
                    let report = dispatch(prediction.label, &self.config.bindings, &mut self.gpio);
                    if let Some(action) = report.action {
                        self.gpio_log.push(GpioEvent { seq: self.gpio_log.len() as u64 + 1, pin: action.pin, level: action.level });
                    }
                    Some(ReportEvent { kind: EventKind::Completed, frame: frame_index, prediction: Some(prediction), dispatch: Some(report) })
                }
                None => {
                    self.state.reset();
                    Some(ReportEvent { kind: EventKind::Rejected, frame: frame_index, prediction: None, dispatch: None })
                }
            },
        };
        if let Some(e) = &event {
            self.events.push(e.clone());
        }
        StepOutcome { frame: frame_index, phase: self.state.phase(), centroid: blob.map(|b| b.centroid), event }
    }

    pub fn path(&self) -> &[PathPoint] {
        self.state.path()
    }

    pub fn report(&self) -> PipelineReport {
        PipelineReport {
            frames_consumed: self.frames_consumed,
            events: self.events.clone(),
            prediction: self.events.iter().rev().find_map(|e| e.prediction.clone()),
            pins: self.gpio.snapshot(),
            gpio_log: self.gpio_log.clone(),
        }
    }
}

/// Runs a whole frame sequence through a fresh pipeline on `gpio`.
///
/// An empty sequence produces an empty report. Frame dimensions are taken
/// from the first frame.
pub fn run_pipeline<T: Scalar, P: GpioPort>(
    frames: impl IntoIterator<Item = Frame>,
    config: &PipelineConfig,
    model: Arc<Model<T>>,
    gpio: P,
) -> Result<(PipelineReport, P), PipelineError> {
    let mut frames = frames.into_iter().peekable();
    let Some(first) = frames.peek() else {
        if model.dim() != FEATURE_DIM {
            return Err(ClassifyError::Dimension { expected: FEATURE_DIM, actual: model.dim() }.into());
        }
        let report = PipelineReport { frames_consumed: 0, events: Vec::new(), prediction: None, pins: gpio.snapshot(), gpio_log: Vec::new() };
        return Ok((report, gpio));
    };
    let mut pipeline = Pipeline::new(first.width(), first.height(), config.clone(), model, gpio)?;
    for frame in frames {
        pipeline.step(&frame)?;
    }
    let report = pipeline.report();
    Ok((report, pipeline.gpio))
}

/// Traces frames until the first completed gesture and returns its pattern.
pub fn trace_pattern<'a>(frames: impl IntoIterator<Item = &'a Frame>, config: &PipelineConfig) -> Option<PatternImage> {
    let mut state: Option<TraceState> = None;
    for frame in frames {
        let state = state.get_or_insert_with(|| TraceState::new(frame.width(), frame.height()));
        let blob = config.detect(frame);
        if let TraceEvent::Completed(pattern) = state.step(blob.as_ref(), frame.index(), &config.trace) {
            return Some(pattern);
        }
    }
    None
}

/// Options for [`synthetic_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDatasetOptions {
    pub width: usize,
    pub height: usize,
    pub per_letter: usize,
    pub seed: u64,
    pub jitter_sigma: f64,
    pub background_noise_max: u8,
}

impl Default for SynthDatasetOptions {
    fn default() -> Self {
        SynthDatasetOptions { width: 320, height: 240, per_letter: 100, seed: 1, jitter_sigma: 1.5, background_noise_max: 30 }
    }
}

/// Renders `per_letter` jittered gestures per letter, traces them, and
/// extracts their feature vectors. Sample `i` of a letter uses seed
/// `seed + i * letters.len() + letter position`.
pub fn synthetic_dataset<T: Scalar>(letters: &[char], options: &SynthDatasetOptions) -> Result<Dataset<T>, SynthError> {
    let config = PipelineConfig::for_frame(options.width, options.height);
    let mut samples = Vec::with_capacity(letters.len() * options.per_letter);
    for i in 0..options.per_letter {
        for (k, &letter) in letters.iter().enumerate() {
            let label = letter_to_label(letter).ok_or(SynthError::UnsupportedLetter(letter))?;
            let mut script = letter_path(letter, &config.trace, options.width, options.height)?;
            script.seed = options.seed.wrapping_add((i * letters.len() + k) as u64);
            script.jitter_sigma = options.jitter_sigma;
            script.background_noise_max = options.background_noise_max;
            let frames = render_sequence(&script, options.width, options.height)?;
            let pattern = trace_pattern(&frames, &config)
                .ok_or_else(|| SynthError::Script(format!("{letter} gesture with seed {} never completed", script.seed)))?;
            let features = extract_features(&pattern).map_err(|e| SynthError::Script(e.to_string()))?;
            samples.push(Sample { label, features });
        }
    }
    Ok(Dataset::new(samples, format!("synthetic {letters:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{train_svm, GaussianNb, SvmParams};
    use std::sync::OnceLock;

    fn model() -> Arc<Model<f64>> {
        static MODEL: OnceLock<Arc<Model<f64>>> = OnceLock::new();
        MODEL
            .get_or_init(|| {
                let opts = SynthDatasetOptions { per_letter: 20, ..Default::default() };
                let data = synthetic_dataset::<f64>(&['A', 'C'], &opts).unwrap();
                Arc::new(Model::Svm(train_svm(&data, &SvmParams::default()).unwrap()))
            })
            .clone()
    }

    fn letter_frames(letter: char, seed: u64) -> Vec<Frame> {
        let config = PipelineConfig::for_frame(320, 240);
        let mut script = letter_path(letter, &config.trace, 320, 240).unwrap();
        script.seed = seed;
        render_sequence(&script, 320, 240).unwrap()
    }

    #[test]
    fn synthetic_a_switches_led_on() {
        let config = PipelineConfig::for_frame(320, 240);
        let (report, gpio) = run_pipeline(letter_frames('A', 1000), &config, model(), VirtualGpio::new()).unwrap();
        assert_eq!(report.completed().count(), 1);
        assert_eq!(report.prediction.as_ref().unwrap().label, 0);
        assert_eq!(report.pins.get(&17), Some(&Level::High));
        assert_eq!(gpio.read(17), Some(Level::High));
    }

    #[test]
    fn dark_sequence_does_nothing() {
        let config = PipelineConfig::for_frame(320, 240);
        let frames: Vec<Frame> = (1..=30).map(|i| Frame::dark(320, 240, i).unwrap()).collect();
        let (report, _) = run_pipeline(frames, &config, model(), VirtualGpio::new()).unwrap();
        assert_eq!(report.frames_consumed, 30);
        assert!(report.events.is_empty());
        assert!(report.prediction.is_none());
        assert!(report.pins.is_empty());
    }

    #[test]
    fn empty_sequence_gives_empty_report() {
        let config = PipelineConfig::for_frame(320, 240);
        let (report, _) = run_pipeline(Vec::new(), &config, model(), VirtualGpio::new()).unwrap();
        assert_eq!(report.frames_consumed, 0);
        assert!(report.events.is_empty());
    }

    #[test]
    fn two_gestures_back_to_back() {
        let config = PipelineConfig::for_frame(320, 240);
        let mut frames = letter_frames('A', 2000);
        let offset = frames.len() as u64;
        frames.extend(letter_frames('C', 2001).into_iter().map(|f| {
            let i = f.index();
            f.with_index(offset + i)
        }));
        let (report, _) = run_pipeline(frames, &config, model(), VirtualGpio::new()).unwrap();
        let labels: Vec<u8> = report.completed().map(|e| e.prediction.as_ref().unwrap().label).collect();
        assert_eq!(labels, vec![0, 2]);
        assert_eq!(report.pins.get(&17), Some(&Level::Low));
        assert_eq!(report.gpio_log.len(), 2);
    }

    #[test]
    fn stepwise_equals_batch() {
        let config = PipelineConfig::for_frame(320, 240);
        let frames = letter_frames('C', 3000);
        let (batch, _) = run_pipeline(frames.clone(), &config, model(), VirtualGpio::new()).unwrap();
        let mut p = Pipeline::new(320, 240, config, model(), VirtualGpio::new()).unwrap();
        for f in &frames {
            p.step(f).unwrap();
        }
        assert_eq!(p.report(), batch);
        assert_eq!(batch.completed().count(), 1);
    }

    #[test]
    fn wrong_model_dimension_is_fatal() {
        let nb = GaussianNb::from_parts(vec![0, 2], vec![-0.7, -0.7], vec![vec![0.0; 3]; 2], vec![vec![1.0; 3]; 2]).unwrap();
        let config = PipelineConfig::for_frame(320, 240);
        let err = Pipeline::new(320, 240, config.clone(), Arc::new(Model::Nb(nb.clone())), VirtualGpio::new()).err().unwrap();
        assert!(matches!(err, PipelineError::Classify(ClassifyError::Dimension { .. })));
        assert!(run_pipeline(Vec::new(), &config, Arc::new(Model::Nb(nb)), VirtualGpio::new()).is_err());
    }

    #[test]
    fn mismatched_frame_size_rejected() {
        let config = PipelineConfig::for_frame(320, 240);
        let mut p = Pipeline::new(320, 240, config, model(), VirtualGpio::new()).unwrap();
        assert!(matches!(p.step(&Frame::dark(100, 100, 1).unwrap()), Err(PipelineError::FrameSize { .. })));
    }

    #[test]
    fn inkless_completion_is_rejected_not_fatal() {
        // A 1-pixel blob with 1-pixel bridges: the median filter erases the whole trace.
        let mut config = PipelineConfig::for_frame(320, 240);
        config.min_area = 1;
        config.trace.min_path_points = 2;
        config.trace.stroke_width = 1;
        let mut p = Pipeline::new(320, 240, config, model(), VirtualGpio::new()).unwrap();
        let dot = |x: usize, i: u64| {
            let mut f = Frame::dark(320, 240, i).unwrap();
            f.set(x, 120, 255);
            f
        };
        p.step(&dot(48, 1)).unwrap();
        p.step(&dot(50, 2)).unwrap();
        let outcome = p.step(&dot(272, 3)).unwrap();
        assert_eq!(outcome.event.unwrap().kind, EventKind::Rejected);
        assert_eq!(p.trace_state().phase(), Phase::Idle);
        assert!(p.gpio().snapshot().is_empty());
    }

    #[test]
    fn report_json_shape() {
        let config = PipelineConfig::for_frame(320, 240);
        let (report, _) = run_pipeline(letter_frames('A', 4000), &config, model(), VirtualGpio::new()).unwrap();
        let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        assert_eq!(json["prediction"]["letter"], "A");
        assert_eq!(json["pins"]["17"], "HIGH");
        assert_eq!(json["events"][0]["kind"], "started");
        let back: PipelineReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, report);
    }
}
