//! Letter classifiers: a linear SVM and a Gaussian naive Bayes baseline.
//!
//! Every classifier scores each class and predicts the argmax, breaking ties
//! toward the lowest label.

mod nb;
mod persist;
mod svm;

pub use nb::{train_nb_rows, GaussianNb, VARIANCE_FLOOR};
pub use persist::{load_model, model_from_text, model_to_text, save_model, MAGIC};
pub use svm::{train_svm_rows, Hyperplane, LinearSvm, SolverTrace, SvmParams, SvmTrainingReport};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::ClassifyError;
use crate::preprocess::FeatureVector;
use crate::scalar::Scalar;

pub trait Classifier<T: Scalar> {
    /// Labels in ascending order; scores are reported in this order.
    fn classes(&self) -> &[u8];

    fn dim(&self) -> usize;

    fn scores(&self, x: &[T]) -> Result<Vec<T>, ClassifyError>;

    fn predict(&self, x: &[T]) -> Result<u8, ClassifyError> {
        Ok(self.classes()[argmax_lowest(&self.scores(x)?)])
    }

    fn check_dim(&self, x: &[T]) -> Result<(), ClassifyError> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(ClassifyError::Dimension { expected: self.dim(), actual: x.len() })
        }
    }
}

/// First index of the maximum score.
pub fn argmax_lowest<T: PartialOrd + Copy>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Returns the sorted distinct labels and the common row dimension.
pub(crate) fn check_training_rows<T>(rows: &[&[T]], labels: &[u8]) -> Result<(Vec<u8>, usize), ClassifyError> {
    if rows.len() != labels.len() {
        return Err(ClassifyError::Params(format!("{} rows but {} labels", rows.len(), labels.len())));
    }
    let dim = rows.first().map(|r| r.len()).ok_or(ClassifyError::SingleClass)?;
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(ClassifyError::Dimension { expected: dim, actual: bad.len() });
    }
    let classes: Vec<u8> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(ClassifyError::SingleClass);
    }
    Ok((classes, dim))
}

fn dataset_rows<T: Scalar>(ds: &Dataset<T>) -> (Vec<&[T]>, Vec<u8>) {
    ds.samples.iter().map(|s| (s.features.values(), s.label)).unzip()
}

pub fn train_svm<T: Scalar>(train: &Dataset<T>, params: &SvmParams) -> Result<LinearSvm<T>, ClassifyError> {
    let (rows, labels) = dataset_rows(train);
    Ok(train_svm_rows(&rows, &labels, params)?.0)
}

pub fn train_nb<T: Scalar>(train: &Dataset<T>) -> Result<GaussianNb<T>, ClassifyError> {
    let (rows, labels) = dataset_rows(train);
    train_nb_rows(&rows, &labels)
}

/// Per-class decision scores, in `model.classes()` order.
pub fn svm_decision<T: Scalar>(model: &LinearSvm<T>, x: &FeatureVector<T>) -> Result<Vec<T>, ClassifyError> {
    model.scores(x.values())
}

pub fn svm_predict<T: Scalar>(model: &LinearSvm<T>, x: &FeatureVector<T>) -> Result<u8, ClassifyError> {
    model.predict(x.values())
}

pub fn nb_predict<T: Scalar>(model: &GaussianNb<T>, x: &FeatureVector<T>) -> Result<u8, ClassifyError> {
    model.predict(x.values())
}

/// Fraction of test samples predicted correctly.
pub fn evaluate<T: Scalar, C: Classifier<T> + ?Sized>(model: &C, test: &Dataset<T>) -> Result<f64, ClassifyError> {
    if test.is_empty() {
        return Err(ClassifyError::EmptyTest);
    }
    let mut correct = 0usize;
    for s in &test.samples {
        if model.predict(s.features.values())? == s.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Svm,
    Nb,
}

impl Algorithm {
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Svm => "svm",
            Algorithm::Nb => "nb",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "svm" => Ok(Algorithm::Svm),
            "nb" => Ok(Algorithm::Nb),
            other => Err(ClassifyError::Params(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Either trained classifier, as stored in a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum Model<T> {
    Svm(LinearSvm<T>),
    Nb(GaussianNb<T>),
}

impl<T: Scalar> Model<T> {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Model::Svm(_) => Algorithm::Svm,
            Model::Nb(_) => Algorithm::Nb,
        }
    }
}

impl<T: Scalar> Classifier<T> for Model<T> {
    fn classes(&self) -> &[u8] {
        match self {
            Model::Svm(m) => m.classes(),
            Model::Nb(m) => m.classes(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Model::Svm(m) => m.dim(),
            Model::Nb(m) => m.dim(),
        }
    }

    fn scores(&self, x: &[T]) -> Result<Vec<T>, ClassifyError> {
        match self {
            Model::Svm(m) => m.scores(x),
            Model::Nb(m) => m.scores(x),
        }
    }
}

impl<T> From<LinearSvm<T>> for Model<T> {
    fn from(m: LinearSvm<T>) -> Self {
        Model::Svm(m)
    }
}

impl<T> From<GaussianNb<T>> for Model<T> {
    fn from(m: GaussianNb<T>) -> Self {
        Model::Nb(m)
    }
}
