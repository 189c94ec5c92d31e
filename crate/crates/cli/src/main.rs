//! `darkwand` command-line entry point.
//!
//! Machine-readable results go to stdout as one JSON document; logs go to
//! stderr (`RUST_LOG` controls verbosity).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use darkwand_core::classify::{evaluate, load_model, save_model, train_nb, train_svm_rows, Algorithm, Classifier, SvmParams};
use darkwand_core::dataset::{label_to_letter, letter_to_label, load_dataset_with, parse_label_list, split, LoadOptions, DEFAULT_SEED, DEFAULT_TRAIN_FRACTION};
use darkwand_core::dispatch::VirtualGpio;
use darkwand_core::pgm::{list_sequence, read_sequence, write_sequence};
use darkwand_core::pipeline::{run_pipeline, synthetic_dataset, PipelineConfig, SynthDatasetOptions};
use darkwand_core::synth::{letter_path, render_sequence};
use darkwand_core::{Dataset, Model, Real};
use darkwand_gateway::{ConfigOverrides, ZoneGeometry};
use serde::Serialize;
use serde_json::value::RawValue;

const MODEL_ENV: &str = "DARKWAND_MODEL";

#[derive(Parser)]
#[command(name = "darkwand", version, about = "Letter gestures traced with a bright wand tip in the dark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier, report held-out accuracy and save the model.
    Train(TrainArgs),
    /// Measure a saved model's accuracy on a dataset.
    Eval(EvalArgs),
    /// Render a synthetic letter gesture as a PGM frame directory.
    Synth(SynthArgs),
    /// Run a recorded frame directory through the pipeline.
    Run(RunArgs),
    /// Host live WebSocket sessions.
    Serve(ServeArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV with a label column followed by 784 pixel columns.
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Use N rendered and traced gestures per letter instead of a CSV.
    #[arg(long, value_name = "N")]
    synthetic: Option<usize>,
    /// Letters or numeric labels to keep.
    #[arg(long, default_value = "A,C")]
    labels: String,
    /// Keep at most this many rows per label, in file order.
    #[arg(long)]
    max_per_label: Option<usize>,
    /// Seed for the train/test shuffle and for synthetic rendering.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "svm", value_parser = ["svm", "nb"])]
    algo: String,
    /// Fraction of samples used for training.
    #[arg(long, default_value_t = DEFAULT_TRAIN_FRACTION)]
    split: f64,
    #[arg(long, default_value = "model.dgrm")]
    out: PathBuf,
    /// SVM penalty.
    #[arg(long, default_value_t = SvmParams::default().c)]
    c: f64,
    /// SVM stopping tolerance on the projected gradient.
    #[arg(long, default_value_t = SvmParams::default().tol)]
    tol: f64,
    #[arg(long, default_value_t = SvmParams::default().max_epochs)]
    max_epochs: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, env = MODEL_ENV)]
    model: PathBuf,
    /// Score only the held-out part of a split at this training fraction.
    #[arg(long)]
    split: Option<f64>,
}

#[derive(Args, Default)]
struct PipelineArgs {
    /// Pixels at or above this intensity are foreground.
    #[arg(long)]
    threshold: Option<u8>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(4..=8))]
    connectivity: Option<u8>,
    /// Smallest blob area kept, in pixels.
    #[arg(long)]
    min_area: Option<usize>,
    #[arg(long)]
    min_path_points: Option<usize>,
    /// Consecutive blobless frames tolerated while tracing.
    #[arg(long)]
    gap_tolerance: Option<u32>,
    #[arg(long)]
    stroke_width: Option<u32>,
    #[arg(long, value_name = "X,Y,R", value_parser = parse_zone)]
    start_zone: Option<ZoneGeometry>,
    #[arg(long, value_name = "X,Y,R", value_parser = parse_zone)]
    end_zone: Option<ZoneGeometry>,
}

impl PipelineArgs {
    fn overrides(&self, bindings: Option<String>) -> ConfigOverrides {
        ConfigOverrides {
            threshold: self.threshold,
            connectivity: self.connectivity,
            min_area: self.min_area,
            min_path_points: self.min_path_points,
            gap_tolerance: self.gap_tolerance,
            stroke_width: self.stroke_width,
            start_zone: self.start_zone,
            end_zone: self.end_zone,
            bindings,
        }
    }
}

fn parse_zone(s: &str) -> Result<ZoneGeometry, String> {
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [x, y, radius] => Ok(ZoneGeometry { x, y, radius }),
        _ => Err("expected X,Y,R".into()),
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    letter: char,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 320)]
    width: usize,
    #[arg(long, default_value_t = 240)]
    height: usize,
    /// Frames per template segment.
    #[arg(long, default_value_t = 6)]
    samples_per_segment: usize,
    #[arg(long, default_value_t = 6.0)]
    blob_radius: f64,
    #[arg(long, default_value_t = 255)]
    blob_intensity: u8,
    /// Background pixels are uniform in 0..=NOISE.
    #[arg(long, default_value_t = 30)]
    noise: u8,
    /// Standard deviation of the per-frame blob jitter, in pixels.
    #[arg(long, default_value_t = 1.0)]
    jitter: f64,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct RunArgs {
    /// Directory of frame_NNNNNN.pgm files.
    #[arg(long)]
    frames: PathBuf,
    #[arg(long, env = MODEL_ENV)]
    model: PathBuf,
    /// Bindings file, `LETTER PIN LEVEL` per line.
    #[arg(long)]
    bindings: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = MODEL_ENV)]
    model: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    #[arg(long, default_value_t = 8080)]
    port: u16,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
        Command::Run(a) => run(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}

/// Joins the error chain, skipping causes already spelled out by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

fn fixed4(x: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{x:.4}")).expect("a finite decimal is valid JSON")
}

fn load_data(d: &DataArgs) -> Result<Dataset> {
    let keep = parse_label_list(&d.labels)?;
    let ds = match (&d.data, d.synthetic) {
        (Some(path), _) => {
            let options = LoadOptions { keep: Some(keep), max_per_label: d.max_per_label };
            load_dataset_with(path, &options).with_context(|| format!("loading {}", path.display()))?
        }
        (None, Some(n)) => {
            let letters: Vec<char> = keep.iter().map(|&l| label_to_letter(l).expect("parsed labels are letters")).collect();
            let options = SynthDatasetOptions { per_letter: n, seed: d.seed, ..Default::default() };
            synthetic_dataset(&letters, &options).context("rendering synthetic dataset")?
        }
        (None, None) => unreachable!("clap requires --data or --synthetic"),
    };
    log::info!("{} samples, per label {:?}", ds.len(), ds.label_counts());
    Ok(ds)
}

fn open_model(path: &Path) -> Result<Model> {
    load_model(path).with_context(|| format!("loading model {}", path.display()))
}

#[derive(Serialize)]
struct TrainOutput {
    algorithm: &'static str,
    classes: Vec<u8>,
    train_samples: usize,
    test_samples: usize,
    accuracy: Box<RawValue>,
    model: String,
}

fn train(a: TrainArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let (train_set, test_set) = split(&data, a.split, a.data.seed)?;
    let algorithm: Algorithm = a.algo.parse()?;
    let model: Model = match algorithm {
        Algorithm::Svm => {
            let params = SvmParams { c: a.c, tol: a.tol, max_epochs: a.max_epochs, seed: a.data.seed };
            let rows: Vec<&[Real]> = train_set.samples.iter().map(|s| s.features.values()).collect();
            let labels: Vec<u8> = train_set.samples.iter().map(|s| s.label).collect();
            let (svm, report) = train_svm_rows(&rows, &labels, &params)?;
            for (k, p) in report.problems.iter().enumerate() {
                if p.converged {
                    log::info!("problem {k}: converged after {} epochs", p.epochs);
                } else {
                    log::warn!("problem {k}: stopped at {} epochs without reaching tol {}", p.epochs, a.tol);
                }
            }
            svm.into()
        }
        Algorithm::Nb => train_nb(&train_set)?.into(),
    };
    let accuracy = evaluate(&model, &test_set)?;
    save_model(&model, &a.out)?;
    log::info!("saved {}", a.out.display());
    print_json(&TrainOutput {
        algorithm: algorithm.tag(),
        classes: model.classes().to_vec(),
        train_samples: train_set.len(),
        test_samples: test_set.len(),
        accuracy: fixed4(accuracy),
        model: a.out.display().to_string(),
    })
}

#[derive(Serialize)]
struct EvalOutput {
    algorithm: &'static str,
    samples: usize,
    accuracy: Box<RawValue>,
}

fn eval(a: EvalArgs) -> Result<()> {
    let model = open_model(&a.model)?;
    let data = load_data(&a.data)?;
    let test = match a.split {
        Some(fraction) => split(&data, fraction, a.data.seed)?.1,
        None => data,
    };
    let accuracy = evaluate(&model, &test)?;
    print_json(&EvalOutput { algorithm: model.algorithm().tag(), samples: test.len(), accuracy: fixed4(accuracy) })
}

#[derive(Serialize)]
struct SynthManifest {
    letter: char,
    label: u8,
    width: usize,
    height: usize,
    frames: usize,
    seed: u64,
    script: String,
}

fn synth(a: SynthArgs) -> Result<()> {
    let label = letter_to_label(a.letter).with_context(|| format!("{:?} is not a letter", a.letter))?;
    let config = a.pipeline.overrides(None).build(a.width, a.height).map_err(anyhow::Error::msg)?;
    let mut script = letter_path(a.letter, &config.trace, a.width, a.height)?;
    script.seed = a.seed;
    script.samples_per_segment = a.samples_per_segment;
    script.blob_radius = a.blob_radius;
    script.blob_intensity = a.blob_intensity;
    script.background_noise_max = a.noise;
    script.jitter_sigma = a.jitter;
    let frames = render_sequence(&script, a.width, a.height)?;

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    if !list_sequence(&a.out)?.is_empty() {
        bail!("{} already contains frames", a.out.display());
    }
    write_sequence(&a.out, &frames)?;
    let script_name = "gesture.txt";
    fs::write(a.out.join(script_name), script.to_text())?;
    let manifest = SynthManifest { letter: a.letter, label, width: a.width, height: a.height, frames: frames.len(), seed: a.seed, script: script_name.into() };
    fs::write(a.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    log::info!("wrote {} frames to {}", frames.len(), a.out.display());
    print_json(&manifest)
}

fn run(a: RunArgs) -> Result<()> {
    let model = Arc::new(open_model(&a.model)?);
    let bindings = match &a.bindings {
        Some(p) => Some(fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let frames = read_sequence(&a.frames)?;
    let overrides = a.pipeline.overrides(bindings);
    let config = match frames.first() {
        Some(f) => overrides.build(f.width(), f.height()).map_err(anyhow::Error::msg)?,
        None => {
            // Nothing to trace; only the bindings still need checking.
            let mut c = PipelineConfig::for_frame(1, 1);
            if let Some(text) = &overrides.bindings {
                c.bindings = darkwand_core::dispatch::Bindings::parse(text)?;
            }
            c
        }
    };
    let (report, _) = run_pipeline(frames, &config, model, VirtualGpio::new())?;
    match &report.prediction {
        Some(p) => log::info!("{} frames, last prediction {}", report.frames_consumed, p.letter),
        None => log::info!("{} frames, no gesture completed", report.frames_consumed),
    }
    println!("{}", report.to_json());
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let model = Arc::new(open_model(&a.model)?);
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port)).await.with_context(|| format!("binding {}:{}", a.host, a.port))?;
        log::info!("listening on http://{}", listener.local_addr()?);
        darkwand_gateway::serve(listener, model, async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("interrupt received, shutting down");
        })
        .await?;
        Ok(())
    })
}
