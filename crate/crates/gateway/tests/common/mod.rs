#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use darkwand_core::classify::{train_svm, SvmParams};
use darkwand_core::imaging::Frame;
use darkwand_core::pipeline::{synthetic_dataset, SynthDatasetOptions};
use darkwand_core::synth::{letter_path, render_sequence, GestureScript};
use darkwand_core::trace::TraceConfig;
use darkwand_core::Model;

pub const W: usize = 320;
pub const H: usize = 240;

pub fn model() -> Arc<Model> {
    static MODEL: OnceLock<Arc<Model>> = OnceLock::new();
    MODEL
        .get_or_init(|| {
            let opts = SynthDatasetOptions { per_letter: 30, ..Default::default() };
            let data = synthetic_dataset(&['A', 'C'], &opts).unwrap();
            Arc::new(Model::Svm(train_svm(&data, &SvmParams::default()).unwrap()))
        })
        .clone()
}

/// Noise- and jitter-free script for `letter` on the default zones.
pub fn clean_script(letter: char) -> GestureScript {
    let mut script = letter_path(letter, &TraceConfig::for_frame(W, H), W, H).unwrap();
    script.background_noise_max = 0;
    script.jitter_sigma = 0.0;
    script
}

pub fn pointer_messages(letter: char) -> Vec<String> {
    clean_script(letter)
        .sample_points()
        .into_iter()
        .map(|(x, y)| format!(r#"{{"type":"pointer","x":{x},"y":{y}}}"#))
        .collect()
}

pub fn offline_frames(letter: char) -> Vec<Frame> {
    render_sequence(&clean_script(letter), W, H).unwrap()
}

pub fn start_message() -> String {
    format!(r#"{{"type":"session_start","width":{W},"height":{H}}}"#)
}
