//! Dark-environment wand gesture recognition.
//!
//! A retroreflective wand tip shows up as a bright blob in IR frames. The
//! blob is tracked from a start zone to an end zone, its cumulative trail is
//! rendered into one pattern image, normalized to 28x28, classified as a
//! letter and mapped to a GPIO action.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the default precision.

pub mod classify;
pub mod dataset;
pub mod dispatch;
pub mod error;
pub mod imaging;
pub mod pgm;
pub mod pipeline;
pub mod preprocess;
pub mod scalar;
pub mod synth;
pub mod trace;

pub use scalar::Scalar;

/// Default scalar precision.
pub type Real = f64;

pub type FeatureVector = preprocess::FeatureVector<Real>;
pub type Sample = dataset::Sample<Real>;
pub type Dataset = dataset::Dataset<Real>;
pub type SvmModel = classify::LinearSvm<Real>;
pub type NbModel = classify::GaussianNb<Real>;
pub type Model = classify::Model<Real>;
pub type Pipeline<P = dispatch::VirtualGpio> = pipeline::Pipeline<Real, P>;

pub type FeatureVectorF32 = preprocess::FeatureVector<f32>;
pub type DatasetF32 = dataset::Dataset<f32>;
pub type SvmModelF32 = classify::LinearSvm<f32>;
pub type ModelF32 = classify::Model<f32>;
