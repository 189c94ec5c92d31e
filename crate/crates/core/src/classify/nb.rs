//! Gaussian naive Bayes baseline.

use super::{check_training_rows, Classifier};
use crate::error::ClassifyError;
use crate::scalar::Scalar;

/// Lower bound on every per-feature variance.
pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNb<T> {
    classes: Vec<u8>,
    dim: usize,
    log_priors: Vec<T>,
    means: Vec<Vec<T>>,
    variances: Vec<Vec<T>>,
    // sum_j ln(2 pi var_j) per class, cached for scoring.
    log_norms: Vec<T>,
}

impl<T: Scalar> GaussianNb<T> {
    pub fn from_parts(classes: Vec<u8>, log_priors: Vec<T>, means: Vec<Vec<T>>, variances: Vec<Vec<T>>) -> Result<Self, ClassifyError> {
        if classes.len() < 2 {
            return Err(ClassifyError::SingleClass);
        }
        if !classes.windows(2).all(|w| w[0] < w[1]) {
            return Err(ClassifyError::Format("classes must be strictly ascending".into()));
        }
        let k = classes.len();
        if log_priors.len() != k || means.len() != k || variances.len() != k {
            return Err(ClassifyError::Format("per-class parameter count does not match classes".into()));
        }
        let dim = means[0].len();
        for v in means.iter().chain(&variances) {
            if v.len() != dim {
                return Err(ClassifyError::Dimension { expected: dim, actual: v.len() });
            }
        }
        let floor = T::lit(VARIANCE_FLOOR);
        if variances.iter().flatten().any(|&v| v.is_nan() || v < floor) {
            return Err(ClassifyError::Format("variance below floor".into()));
        }
        let two_pi = T::lit(2.0 * std::f64::consts::PI);
        let log_norms = variances.iter().map(|vars| vars.iter().map(|&v| (two_pi * v).ln()).sum()).collect();
        Ok(GaussianNb { classes, dim, log_priors, means, variances, log_norms })
    }

    pub fn log_priors(&self) -> &[T] {
        &self.log_priors
    }

    pub fn means(&self) -> &[Vec<T>] {
        &self.means
    }

    pub fn variances(&self) -> &[Vec<T>] {
        &self.variances
    }

    /// Class posteriors, normalized with log-sum-exp.
    pub fn posteriors(&self, x: &[T]) -> Result<Vec<T>, ClassifyError> {
        let joint = self.scores(x)?;
        let max = joint.iter().copied().fold(T::neg_infinity(), T::max);
        let exp: Vec<T> = joint.iter().map(|&s| (s - max).exp()).collect();
        let total: T = exp.iter().copied().sum();
        Ok(exp.into_iter().map(|e| e / total).collect())
    }
}

impl<T: Scalar> Classifier<T> for GaussianNb<T> {
    fn classes(&self) -> &[u8] {
        &self.classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    /// Log joint density `ln P(c) + sum_j ln N(x_j; mu_cj, var_cj)` per class.
    fn scores(&self, x: &[T]) -> Result<Vec<T>, ClassifyError> {
        self.check_dim(x)?;
        let half = T::lit(0.5);
        Ok((0..self.classes.len())
            .map(|c| {
                let quad: T = x
                    .iter()
                    .zip(&self.means[c])
                    .zip(&self.variances[c])
                    .map(|((&xj, &mu), &var)| (xj - mu) * (xj - mu) / var)
                    .sum();
                self.log_priors[c] - half * (self.log_norms[c] + quad)
            })
            .collect())
    }
}

/// Empirical priors and per-class feature means and (population) variances.
pub fn train_nb_rows<T: Scalar>(rows: &[&[T]], labels: &[u8]) -> Result<GaussianNb<T>, ClassifyError> {
    let (classes, dim) = check_training_rows(rows, labels)?;
    let k = classes.len();
    let slot = |label: u8| classes.binary_search(&label).expect("label collected from data");
    let mut counts = vec![0usize; k];
    let mut means = vec![vec![T::zero(); dim]; k];
    for (x, &l) in rows.iter().zip(labels) {
        let c = slot(l);
        counts[c] += 1;
        for (m, &v) in means[c].iter_mut().zip(x.iter()) {
            *m = *m + v;
        }
    }
    for (c, m) in means.iter_mut().enumerate() {
        let n = T::from_usize_lossy(counts[c]);
        m.iter_mut().for_each(|v| *v = *v / n);
    }
    let mut variances = vec![vec![T::zero(); dim]; k];
    for (x, &l) in rows.iter().zip(labels) {
        let c = slot(l);
        for ((s, &v), &mu) in variances[c].iter_mut().zip(x.iter()).zip(&means[c]) {
            *s = *s + (v - mu) * (v - mu);
        }
    }
    let floor = T::lit(VARIANCE_FLOOR);
    for (c, vars) in variances.iter_mut().enumerate() {
        let n = T::from_usize_lossy(counts[c]);
        vars.iter_mut().for_each(|v| *v = (*v / n).max(floor));
    }
    let total = T::from_usize_lossy(rows.len());
    let log_priors = counts.iter().map(|&n| (T::from_usize_lossy(n) / total).ln()).collect();
    GaussianNb::from_parts(classes, log_priors, means, variances)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn refs(rows: &[Vec<f64>]) -> Vec<&[f64]> {
        rows.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn priors_from_counts() {
        let rows = vec![vec![0.1], vec![0.2], vec![0.3], vec![0.9]];
        let model = train_nb_rows(&refs(&rows), &[0, 0, 0, 1]).unwrap();
        assert!((model.log_priors()[0].exp() - 0.75).abs() < 1e-15);
        assert!((model.log_priors()[1].exp() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_feature_gets_floor() {
        let rows = vec![vec![0.5, 0.0], vec![0.5, 1.0], vec![0.1, 0.2]];
        let model = train_nb_rows(&refs(&rows), &[0, 0, 1]).unwrap();
        assert_eq!(model.variances()[0][0], VARIANCE_FLOOR);
        assert_eq!(model.variances()[1][1], VARIANCE_FLOOR);
        assert!((model.variances()[0][1] - 0.25).abs() < 1e-15);
        let scores = model.scores(&[1.0, 1.0]).unwrap();
        assert!(scores.iter().all(|s| s.is_finite()));
    }

    #[test]
    fn gaussian_log_ratio_decides() {
        let model = GaussianNb::from_parts(
            vec![0, 1],
            vec![0.5f64.ln(), 0.5f64.ln()],
            vec![vec![0.2], vec![0.8]],
            vec![vec![0.04], vec![0.04]],
        )
        .unwrap();
        // Closed form: ln p1/p0 = ((x-0.2)^2 - (x-0.8)^2) / (2 var) = (1.2x - 0.6) / 0.08.
        for x in [0.1, 0.45, 0.6, 0.95] {
            let s = model.scores(&[x]).unwrap();
            let expected = (1.2 * x - 0.6) / 0.08;
            assert!(((s[1] - s[0]) - expected).abs() < 1e-9);
        }
        assert_eq!(model.predict(&[0.5]).unwrap(), 0);
        assert_eq!(model.predict(&[0.6]).unwrap(), 1);
    }

    #[test]
    fn exact_tie_goes_to_lower_label() {
        let model = GaussianNb::from_parts(
            vec![2, 5],
            vec![0.5f64.ln(), 0.5f64.ln()],
            vec![vec![0.25], vec![0.75]],
            vec![vec![0.0625], vec![0.0625]],
        )
        .unwrap();
        let s = model.scores(&[0.5]).unwrap();
        assert_eq!(s[0], s[1]);
        assert_eq!(model.predict(&[0.5]).unwrap(), 2);
    }

    #[test]
    fn identical_classes_always_predict_lowest() {
        let rows = vec![vec![0.1, 0.9], vec![0.3, 0.7], vec![0.1, 0.9], vec![0.3, 0.7]];
        let model = train_nb_rows(&refs(&rows), &[6, 6, 1, 1]).unwrap();
        for x in [[0.0, 0.0], [0.2, 0.8], [1.0, 0.3]] {
            assert_eq!(model.predict(&x).unwrap(), 1);
        }
    }

    #[test]
    fn posteriors_normalize() {
        let rows = vec![vec![0.1, 0.9], vec![0.2, 0.6], vec![0.8, 0.1], vec![0.9, 0.3], vec![0.5, 0.5]];
        let model = train_nb_rows(&refs(&rows), &[0, 0, 1, 1, 2]).unwrap();
        for x in [[0.0, 0.0], [0.5, 0.5], [1.0, 1.0], [0.3, 0.8]] {
            let total: f64 = model.posteriors(&x).unwrap().iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_class_rejected() {
        let rows = vec![vec![0.1], vec![0.2]];
        assert!(matches!(train_nb_rows(&refs(&rows), &[3, 3]), Err(ClassifyError::SingleClass)));
    }
}
