//! Flat text model format shared by both algorithms.
//!
//! ```text
//! DGRM1
//! algorithm svm
//! classes 0 2
//! dim 784
//! convention ties=lowest-label binary-positive=higher-class
//! plane 0 <bias> <w_1> ... <w_dim>
//! crc32 <decimal CRC32 of every preceding byte>
//! ```
//!
//! Naive Bayes bodies carry `prior <label> <log prior>`, `mean <label> ...`
//! and `var <label> ...` rows instead of `plane` rows. Numbers are written
//! in shortest round-trip decimal form, so reloading is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Algorithm, Classifier, GaussianNb, Hyperplane, LinearSvm, Model};
use crate::error::ClassifyError;
use crate::scalar::Scalar;

pub const MAGIC: &str = "DGRM1";
const CONVENTION: &str = "convention ties=lowest-label binary-positive=higher-class";

fn push_row<T: Scalar>(out: &mut String, head: &str, values: impl IntoIterator<Item = T>) {
    out.push_str(head);
    for v in values {
        write!(out, " {v}").expect("write to string");
    }
    out.push('\n');
}

pub fn model_to_text<T: Scalar>(model: &Model<T>) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "algorithm {}", model.algorithm().tag()).unwrap();
    let classes: Vec<String> = model.classes().iter().map(u8::to_string).collect();
    writeln!(out, "classes {}", classes.join(" ")).unwrap();
    writeln!(out, "dim {}", model.dim()).unwrap();
    writeln!(out, "{CONVENTION}").unwrap();
    match model {
        Model::Svm(svm) => {
            for (k, plane) in svm.planes().iter().enumerate() {
                push_row(&mut out, &format!("plane {k}"), std::iter::once(plane.bias).chain(plane.weights.iter().copied()));
            }
        }
        Model::Nb(nb) => {
            for (c, &label) in nb.classes().iter().enumerate() {
                push_row(&mut out, &format!("prior {label}"), [nb.log_priors()[c]]);
                push_row(&mut out, &format!("mean {label}"), nb.means()[c].iter().copied());
                push_row(&mut out, &format!("var {label}"), nb.variances()[c].iter().copied());
            }
        }
    }
    let crc = crc32fast::hash(out.as_bytes());
    writeln!(out, "crc32 {crc}").unwrap();
    out
}

fn format_err(msg: impl Into<String>) -> ClassifyError {
    ClassifyError::Format(msg.into())
}

fn parse_values<T: Scalar>(tokens: &[&str], what: &str) -> Result<Vec<T>, ClassifyError> {
    tokens
        .iter()
        .map(|t| t.parse::<T>().map_err(|_| format_err(format!("{what}: bad number {t:?}"))))
        .collect()
}

/// Splits off and verifies the trailing checksum line, returning the body.
fn verified_body(text: &str) -> Result<&str, ClassifyError> {
    let first = text.lines().next().unwrap_or("");
    if first != MAGIC {
        return Err(ClassifyError::Version { found: first.chars().take(32).collect() });
    }
    let trimmed = text.strip_suffix('\n').ok_or_else(|| ClassifyError::Checksum("missing trailer".into()))?;
    let split = trimmed.rfind('\n').ok_or_else(|| ClassifyError::Checksum("missing trailer".into()))?;
    let (body, trailer) = (&text[..split + 1], &trimmed[split + 1..]);
    let stored: u32 = trailer
        .strip_prefix("crc32 ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| ClassifyError::Checksum("missing trailer".into()))?;
    let actual = crc32fast::hash(body.as_bytes());
    if stored != actual {
        return Err(ClassifyError::Checksum(format!("stored {stored}, computed {actual}")));
    }
    Ok(body)
}

pub fn model_from_text<T: Scalar>(text: &str) -> Result<Model<T>, ClassifyError> {
    let body = verified_body(text)?;
    let mut lines = body.lines().skip(1);
    let mut header = |key: &str| -> Result<Vec<&str>, ClassifyError> {
        let line = lines.next().ok_or_else(|| format_err(format!("missing {key} line")))?;
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some(key) {
            return Err(format_err(format!("expected {key} line, got {line:?}")));
        }
        Ok(tokens.collect())
    };
    let algorithm: Algorithm = header("algorithm")?.first().copied().unwrap_or("").parse()?;
    let classes: Vec<u8> = header("classes")?
        .iter()
        .map(|t| t.parse().map_err(|_| format_err(format!("bad class label {t:?}"))))
        .collect::<Result<_, _>>()?;
    let dim: usize = header("dim")?
        .first()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| format_err("bad dim"))?;
    header("convention")?;

    let rows: Vec<(String, Vec<&str>)> = lines
        .map(|line| {
            let mut tokens = line.split_whitespace();
            let kind = tokens.next().unwrap_or("");
            let tag = tokens.next().unwrap_or("");
            (format!("{kind} {tag}"), tokens.collect())
        })
        .collect();
    let row = |key: String, len: usize| -> Result<Vec<T>, ClassifyError> {
        let (_, tokens) = rows.iter().find(|(k, _)| *k == key).ok_or_else(|| format_err(format!("missing row {key:?}")))?;
        if tokens.len() != len {
            return Err(ClassifyError::Dimension { expected: len, actual: tokens.len() });
        }
        parse_values(tokens, &key)
    };

    match algorithm {
        Algorithm::Svm => {
            let count = if classes.len() == 2 { 1 } else { classes.len() };
            let planes = (0..count)
                .map(|k| {
                    let values = row(format!("plane {k}"), dim + 1)?;
                    Ok(Hyperplane { bias: values[0], weights: values[1..].to_vec() })
                })
                .collect::<Result<Vec<_>, ClassifyError>>()?;
            Ok(Model::Svm(LinearSvm::from_parts(classes, dim, planes)?))
        }
        Algorithm::Nb => {
            let mut priors = Vec::new();
            let mut means = Vec::new();
            let mut vars = Vec::new();
            for &label in &classes {
                priors.push(row(format!("prior {label}"), 1)?[0]);
                means.push(row(format!("mean {label}"), dim)?);
                vars.push(row(format!("var {label}"), dim)?);
            }
            Ok(Model::Nb(GaussianNb::from_parts(classes, priors, means, vars)?))
        }
    }
}

pub fn save_model<T: Scalar>(model: &Model<T>, path: &Path) -> Result<(), ClassifyError> {
    fs::write(path, model_to_text(model)).map_err(|source| ClassifyError::Io { path: path.to_owned(), source })
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<Model<T>, ClassifyError> {
    let bytes = fs::read(path).map_err(|source| ClassifyError::Io { path: path.to_owned(), source })?;
    let text = String::from_utf8(bytes).map_err(|_| ClassifyError::Version { found: "<binary data>".into() })?;
    model_from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{train_nb_rows, train_svm_rows, SvmParams};

    fn toy_svm() -> Model<f64> {
        let rows = [vec![1.0, 1.0, 0.25], vec![-1.0, -1.0, 0.5], vec![0.7, 0.9, 0.1]];
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        Model::Svm(train_svm_rows(&refs, &[2, 0, 2], &SvmParams::default()).unwrap().0)
    }

    fn toy_nb() -> Model<f64> {
        let rows = [vec![0.1, 0.3], vec![0.2, 0.1], vec![0.9, 0.8], vec![0.7, 0.6], vec![0.4, 0.4]];
        let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
        Model::Nb(train_nb_rows(&refs, &[0, 0, 2, 2, 5]).unwrap())
    }

    #[test]
    fn text_round_trip_is_exact() {
        for model in [toy_svm(), toy_nb()] {
            let text = model_to_text(&model);
            assert!(text.starts_with("DGRM1\nalgorithm "));
            assert_eq!(model_from_text::<f64>(&text).unwrap(), model);
        }
    }

    #[test]
    fn wrong_magic_is_version_error() {
        let text = model_to_text(&toy_svm()).replacen("DGRM1", "DGRM2", 1);
        assert!(matches!(model_from_text::<f64>(&text), Err(ClassifyError::Version { .. })));
    }

    #[test]
    fn truncation_and_tampering_fail_checksum() {
        let text = model_to_text(&toy_nb());
        let cut = &text[..text.len() - 20];
        assert!(matches!(model_from_text::<f64>(cut), Err(ClassifyError::Checksum(_))));
        let tampered = text.replacen("prior 0 ", "prior 0 1", 1);
        assert!(matches!(model_from_text::<f64>(&tampered), Err(ClassifyError::Checksum(_))));
    }

    #[test]
    fn single_precision_round_trip() {
        let rows = [vec![1.0f32, 0.5], vec![-1.0, -0.25]];
        let refs: Vec<&[f32]> = rows.iter().map(Vec::as_slice).collect();
        let model = Model::Svm(train_svm_rows(&refs, &[0, 1], &SvmParams::default()).unwrap().0);
        assert_eq!(model_from_text::<f32>(&model_to_text(&model)).unwrap(), model);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.dgrm");
        save_model(&toy_svm(), &path).unwrap();
        assert_eq!(load_model::<f64>(&path).unwrap(), toy_svm());
        assert!(matches!(load_model::<f64>(&dir.path().join("missing")), Err(ClassifyError::Io { .. })));
    }
}
