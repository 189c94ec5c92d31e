//! Handwritten-alphabet CSV ingestion: one label column (0 = 'A' .. 25 = 'Z')
//! followed by 784 row-major 28x28 pixel intensities.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::DatasetError;
use crate::preprocess::{FeatureVector, FEATURE_DIM};
use crate::scalar::Scalar;

pub const NUM_LETTERS: u8 = 26;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;
pub const DEFAULT_SEED: u64 = 42;

pub fn label_to_letter(label: u8) -> Option<char> {
    (label < NUM_LETTERS).then(|| (b'A' + label) as char)
}

pub fn letter_to_label(letter: char) -> Option<u8> {
    let upper = letter.to_ascii_uppercase();
    upper.is_ascii_uppercase().then(|| upper as u8 - b'A')
}

/// Parses `"A,C"` or `"0,2"` (or a mix) into a label set.
pub fn parse_label_list(list: &str) -> Result<BTreeSet<u8>, DatasetError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let mut chars = item.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_alphabetic() => letter_to_label(c),
                _ => item.parse::<u8>().ok().filter(|&l| l < NUM_LETTERS),
            }
            .ok_or_else(|| DatasetError::Letter(item.to_owned()))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub label: u8,
    pub features: FeatureVector<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub samples: Vec<Sample<T>>,
    pub source: String,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(samples: Vec<Sample<T>>, source: impl Into<String>) -> Self {
        Dataset { samples, source: source.into() }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Distinct labels, ascending.
    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.label).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn label_counts(&self) -> BTreeMap<u8, usize> {
        let mut counts = BTreeMap::new();
        for s in &self.samples {
            *counts.entry(s.label).or_insert(0) += 1;
        }
        counts
    }
}

/// Row selection applied while streaming a CSV.
#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Only rows with these labels are kept.
    pub keep: Option<BTreeSet<u8>>,
    /// At most this many rows per label, in file order.
    pub max_per_label: Option<usize>,
}

fn parse_row(line: &str, row: usize) -> Result<(u8, Vec<u8>), DatasetError> {
    let err = |message: String| DatasetError::Format { row, message };
    let cells: Vec<&str> = line.split(',').map(str::trim).collect();
    if cells.len() != FEATURE_DIM + 1 {
        return Err(err(format!("expected {} columns, found {}", FEATURE_DIM + 1, cells.len())));
    }
    let int = |col: usize| cells[col].parse::<i64>().map_err(|_| err(format!("column {}: {:?} is not an integer", col + 1, cells[col])));
    let label = int(0)?;
    if !(0..NUM_LETTERS as i64).contains(&label) {
        return Err(err(format!("label {label} outside 0-25")));
    }
    let mut pixels = Vec::with_capacity(FEATURE_DIM);
    for col in 1..=FEATURE_DIM {
        let v = int(col)?;
        if !(0..=255).contains(&v) {
            return Err(err(format!("column {}: pixel {v} outside 0-255", col + 1)));
        }
        pixels.push(v as u8);
    }
    Ok((label as u8, pixels))
}

fn is_header(line: &str) -> bool {
    line.split(',').any(|cell| cell.trim().parse::<i64>().is_err())
}

/// Streams rows of a CSV file, calling `visit(row_number, label, pixels)` for
/// each data row. Row numbers are 1-based physical lines. A first line with
/// any non-integer cell is skipped as a header.
pub fn for_each_row(
    path: &Path,
    mut visit: impl FnMut(usize, u8, Vec<u8>) -> Result<bool, DatasetError>,
) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io { path: path.to_owned(), source };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let row = i + 1;
        if line.trim().is_empty() || (row == 1 && is_header(&line)) {
            continue;
        }
        let (label, pixels) = parse_row(&line, row)?;
        if !visit(row, label, pixels)? {
            break;
        }
    }
    Ok(())
}

pub fn load_dataset<T: Scalar>(path: &Path) -> Result<Dataset<T>, DatasetError> {
    load_dataset_with(path, &LoadOptions::default())
}

pub fn load_dataset_with<T: Scalar>(path: &Path, options: &LoadOptions) -> Result<Dataset<T>, DatasetError> {
    let mut samples = Vec::new();
    let mut per_label = [0usize; NUM_LETTERS as usize];
    let quota_full = |counts: &[usize; NUM_LETTERS as usize]| match (&options.keep, options.max_per_label) {
        (Some(keep), Some(max)) => keep.iter().all(|&l| counts[l as usize] >= max),
        _ => false,
    };
    for_each_row(path, |row, label, pixels| {
        if options.keep.as_ref().is_some_and(|k| !k.contains(&label)) {
            return Ok(true);
        }
        if options.max_per_label.is_some_and(|max| per_label[label as usize] >= max) {
            return Ok(true);
        }
        per_label[label as usize] += 1;
        let features = FeatureVector::from_intensities(&pixels)
            .map_err(|e| DatasetError::Format { row, message: e.to_string() })?;
        samples.push(Sample { label, features });
        Ok(!quota_full(&per_label))
    })?;
    Ok(Dataset::new(samples, path.display().to_string()))
}

/// Writes the dataset as a headerless CSV, pixels rounded back to 0-255.
pub fn write_csv<T: Scalar>(ds: &Dataset<T>, path: &Path) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io { path: path.to_owned(), source };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for s in &ds.samples {
        let mut line = s.label.to_string();
        for v in s.features.to_intensities() {
            line.push(',');
            line.push_str(&v.to_string());
        }
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Keeps samples whose label is in `keep`, preserving order.
pub fn filter_labels<T: Scalar>(ds: &Dataset<T>, keep: &BTreeSet<u8>) -> Result<Dataset<T>, DatasetError> {
    if keep.is_empty() {
        return Err(DatasetError::EmptyKeep);
    }
    let samples: Vec<Sample<T>> = ds.samples.iter().filter(|s| keep.contains(&s.label)).cloned().collect();
    if samples.is_empty() {
        return Err(DatasetError::EmptyResult);
    }
    Ok(Dataset::new(samples, ds.source.clone()))
}

/// Seeded shuffle, then the first `floor(fraction * N)` samples train.
pub fn split<T: Scalar>(ds: &Dataset<T>, train_fraction: f64, seed: u64) -> Result<(Dataset<T>, Dataset<T>), DatasetError> {
    let n = ds.len();
    let degenerate = DatasetError::DegenerateSplit { samples: n, fraction: train_fraction };
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(degenerate);
    }
    let n_train = (train_fraction * n as f64).floor() as usize;
    if n_train == 0 || n_train >= n {
        return Err(degenerate);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let pick = |idx: &[usize]| idx.iter().map(|&i| ds.samples[i].clone()).collect::<Vec<_>>();
    Ok((
        Dataset::new(pick(&order[..n_train]), format!("{} [train]", ds.source)),
        Dataset::new(pick(&order[n_train..]), format!("{} [test]", ds.source)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(label: u8, fill: u8) -> Sample<f64> {
        Sample { label, features: FeatureVector::from_intensities(&[fill; FEATURE_DIM]).unwrap() }
    }

    fn toy(labels: &[u8]) -> Dataset<f64> {
        Dataset::new(labels.iter().enumerate().map(|(i, &l)| sample(l, i as u8)).collect(), "toy")
    }

    fn csv_file(rows: &[String]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for r in rows {
            writeln!(f, "{r}").unwrap();
        }
        f
    }

    fn row(label: i64, pixel: i64, columns: usize) -> String {
        std::iter::once(label.to_string()).chain(std::iter::repeat_n(pixel.to_string(), columns - 1)).collect::<Vec<_>>().join(",")
    }

    #[test]
    fn letters() {
        assert_eq!(label_to_letter(0), Some('A'));
        assert_eq!(label_to_letter(25), Some('Z'));
        assert_eq!(label_to_letter(26), None);
        assert_eq!(letter_to_label('c'), Some(2));
        assert_eq!(parse_label_list("A, C").unwrap().into_iter().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(parse_label_list("0,7").unwrap().into_iter().collect::<Vec<_>>(), vec![0, 7]);
        assert!(parse_label_list("A,?").is_err());
        assert!(parse_label_list("26").is_err());
    }

    #[test]
    fn zero_row_loads_as_a() {
        let f = csv_file(&[row(0, 0, 785)]);
        let ds: Dataset<f64> = load_dataset(f.path()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.samples[0].label, 0);
        assert!(ds.samples[0].features.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn short_row_cites_row_one() {
        let f = csv_file(&[row(0, 0, 784)]);
        match load_dataset::<f64>(f.path()) {
            Err(DatasetError::Format { row, .. }) => assert_eq!(row, 1),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_cells_rejected_with_row() {
        for bad in [row(26, 0, 785), row(0, 256, 785), row(0, -1, 785), row(1, 0, 785).replacen(",0", ",0.5", 1)] {
            let f = csv_file(&[row(1, 3, 785), bad]);
            assert!(matches!(load_dataset::<f32>(f.path()), Err(DatasetError::Format { row: 2, .. })));
        }
    }

    #[test]
    fn header_rows_skipped() {
        // pandas-style export header: "0,0.1,0.2,..."
        let header: String = std::iter::once("0".to_string()).chain((1..785).map(|i| format!("0.{i}"))).collect::<Vec<_>>().join(",");
        let f = csv_file(&[header, row(2, 255, 785)]);
        let ds: Dataset<f64> = load_dataset(f.path()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.samples[0].label, 2);
        assert!(ds.samples[0].features.values().iter().all(|&v| v == 1.0));

        let named: String = std::iter::once("label".to_string()).chain((1..785).map(|i| format!("p{i}"))).collect::<Vec<_>>().join(",");
        let f = csv_file(&[named, row(4, 1, 785)]);
        assert_eq!(load_dataset::<f64>(f.path()).unwrap().len(), 1);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_dataset::<f64>(Path::new("/nonexistent/az.csv")), Err(DatasetError::Io { .. })));
    }

    #[test]
    fn load_options_filter_and_cap() {
        let rows: Vec<String> = [0, 1, 2, 0, 2, 0, 2, 1].iter().map(|&l| row(l, 9, 785)).collect();
        let f = csv_file(&rows);
        let opts = LoadOptions { keep: Some([0, 2].into()), max_per_label: Some(2) };
        let ds: Dataset<f32> = load_dataset_with(f.path(), &opts).unwrap();
        assert_eq!(ds.samples.iter().map(|s| s.label).collect::<Vec<_>>(), vec![0, 2, 0, 2]);
    }

    #[test]
    fn filter_keeps_order() {
        let ds = toy(&[0, 1, 2, 2, 1, 0]);
        let kept = filter_labels(&ds, &[0, 2].into()).unwrap();
        assert_eq!(kept.samples.iter().map(|s| s.label).collect::<Vec<_>>(), vec![0, 2, 2, 0]);
        assert_eq!(kept.samples[0], ds.samples[0]);
        assert_eq!(kept.samples[3], ds.samples[5]);

        let all: BTreeSet<u8> = (0..26).collect();
        assert_eq!(filter_labels(&ds, &all).unwrap(), ds);
        assert!(matches!(filter_labels(&ds, &[7].into()), Err(DatasetError::EmptyResult)));
        assert!(matches!(filter_labels(&ds, &BTreeSet::new()), Err(DatasetError::EmptyKeep)));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = toy(&[0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
        let (train, test) = split(&ds, 0.8, 42).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        let (train2, test2) = split(&ds, 0.8, 42).unwrap();
        assert_eq!(train.samples, train2.samples);
        assert_eq!(test.samples, test2.samples);
        assert!(matches!(split(&toy(&[0]), 0.5, 1), Err(DatasetError::DegenerateSplit { .. })));
        assert!(split(&ds, 0.05, 1).is_err());
        assert!(split(&ds, 1.0, 1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut ds = toy(&[3, 0, 25]);
        ds.samples[1].features = FeatureVector::from_intensities(&(0..FEATURE_DIM).map(|i| (i % 256) as u8).collect::<Vec<_>>()).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, f.path()).unwrap();
        let back: Dataset<f64> = load_dataset(f.path()).unwrap();
        assert_eq!(back.samples, ds.samples);
    }

    proptest! {
        #[test]
        fn split_is_partition(n in 2usize..60, fraction in 0.01f64..0.99, seed in any::<u64>()) {
            // Fill value encodes the sample's original position.
            let ds = Dataset::new((0..n).map(|i| sample((i % 3) as u8, i as u8)).collect(), "p");
            match split(&ds, fraction, seed) {
                Ok((train, test)) => {
                    prop_assert_eq!(train.len(), (fraction * n as f64).floor() as usize);
                    let mut seen: Vec<u8> = train.samples.iter().chain(&test.samples).map(|s| s.features.to_intensities()[0]).collect();
                    seen.sort();
                    prop_assert_eq!(seen, (0..n).map(|i| i as u8).collect::<Vec<_>>());
                }
                Err(_) => {
                    let k = (fraction * n as f64).floor() as usize;
                    prop_assert!(k == 0 || k == n);
                }
            }
        }

        #[test]
        fn filter_is_idempotent(labels in proptest::collection::vec(0u8..5, 1..40), keep in proptest::collection::btree_set(0u8..5, 1..4)) {
            let ds = toy(&labels);
            if let Ok(once) = filter_labels(&ds, &keep) {
                prop_assert_eq!(filter_labels(&once, &keep).unwrap(), once);
            }
        }
    }
}
