//! Linear SVM trained by dual coordinate descent on the hinge-loss dual.
//!
//! Each binary problem solves
//!
//! ```text
//! min_w  1/2 |w~|^2 + C * sum_i max(0, 1 - y_i w~ . x~_i)
//! ```
//!
//! where `x~ = (x, 1)` carries the bias as an extra constant feature. The
//! dual `min_a 1/2 a'Qa - sum a, 0 <= a_i <= C` is minimized one coordinate
//! at a time with a closed-form clipped Newton step, visiting coordinates in
//! a seeded random order each epoch. The primal iterate follows the dual
//! one through a per-epoch line search (see [`solve_binary`]).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_training_rows, dot, Classifier};
use crate::error::ClassifyError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    /// Stop once every projected gradient magnitude is at most `tol`.
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, tol: 1e-4, max_epochs: 1000, seed: 42 }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(ClassifyError::Params(format!("C must be positive, got {}", self.c)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(ClassifyError::Params(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_epochs == 0 {
            return Err(ClassifyError::Params("max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// `w . x + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane<T> {
    pub weights: Vec<T>,
    pub bias: T,
}

impl<T: Scalar> Hyperplane<T> {
    #[inline]
    pub fn margin(&self, x: &[T]) -> T {
        dot(&self.weights, x) + self.bias
    }
}

/// Trained linear SVM.
///
/// With two classes there is a single hyperplane whose positive side is the
/// higher label. With more, one one-vs-rest hyperplane per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm<T> {
    classes: Vec<u8>,
    dim: usize,
    planes: Vec<Hyperplane<T>>,
}

impl<T: Scalar> LinearSvm<T> {
    pub fn from_parts(classes: Vec<u8>, dim: usize, planes: Vec<Hyperplane<T>>) -> Result<Self, ClassifyError> {
        if classes.len() < 2 {
            return Err(ClassifyError::SingleClass);
        }
        if !classes.windows(2).all(|w| w[0] < w[1]) {
            return Err(ClassifyError::Format("classes must be strictly ascending".into()));
        }
        let expected = if classes.len() == 2 { 1 } else { classes.len() };
        if planes.len() != expected {
            return Err(ClassifyError::Format(format!("{} classes need {expected} hyperplanes, got {}", classes.len(), planes.len())));
        }
        if let Some(p) = planes.iter().find(|p| p.weights.len() != dim) {
            return Err(ClassifyError::Dimension { expected: dim, actual: p.weights.len() });
        }
        Ok(LinearSvm { classes, dim, planes })
    }

    pub fn planes(&self) -> &[Hyperplane<T>] {
        &self.planes
    }

    pub fn is_binary(&self) -> bool {
        self.classes.len() == 2
    }
}

impl<T: Scalar> Classifier<T> for LinearSvm<T> {
    fn classes(&self) -> &[u8] {
        &self.classes
    }

    fn dim(&self) -> usize {
        self.dim
    }

    /// Binary: `[-m, m]` for the signed margin `m`; multiclass: one margin per class.
    fn scores(&self, x: &[T]) -> Result<Vec<T>, ClassifyError> {
        self.check_dim(x)?;
        if self.is_binary() {
            let m = self.planes[0].margin(x);
            Ok(vec![-m, m])
        } else {
            Ok(self.planes.iter().map(|p| p.margin(x)).collect())
        }
    }
}

/// Per-epoch solver diagnostics for one binary problem.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub epochs: usize,
    pub converged: bool,
    /// Regularized hinge objective of the returned iterate after each epoch.
    pub primal: Vec<f64>,
    /// Dual objective `1/2 |w~|^2 - sum a` after each epoch.
    pub dual: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SvmTrainingReport {
    pub problems: Vec<SolverTrace>,
}

/// Margins `y_i (w~ . x~_i)` of every row.
fn margins<T: Scalar>(rows: &[&[T]], sign: &impl Fn(usize) -> T, w: &[T], b: T) -> Vec<f64> {
    rows.iter()
        .enumerate()
        .map(|(i, x)| (sign(i) * (dot(w, x) + b)).to_f64().unwrap_or(f64::NAN))
        .collect()
}

fn primal_objective(half_norm: f64, c: f64, margins: &[f64]) -> f64 {
    half_norm + c * margins.iter().map(|m| (1.0 - m).max(0.0)).sum::<f64>()
}

/// Minimizes the primal along `w + eta d`, `eta` in `[0, 1]`.
///
/// The objective restricted to the segment is convex and piecewise
/// quadratic; its derivative `a + eta q - C sum_{active} delta_i` is
/// nondecreasing, so bisection on its sign finds the minimizer.
fn segment_search(w_dot_d: f64, d_norm2: f64, c: f64, margins: &[f64], deltas: &[f64]) -> f64 {
    let slope = |eta: f64| {
        let hinge: f64 = margins
            .iter()
            .zip(deltas)
            .filter(|(m, dl)| 1.0 - *m - eta * *dl > 0.0)
            .map(|(_, dl)| dl)
            .sum();
        w_dot_d + eta * d_norm2 - c * hinge
    };
    if slope(1.0) <= 0.0 {
        return 1.0;
    }
    if slope(0.0) >= 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves one binary problem; `positive[i]` marks `y_i = +1`.
///
/// The dual iterate `w(a) = sum a_i y_i x~_i` converges to the optimum but
/// its primal objective can rise between epochs when `C` is large. After
/// each sweep the returned primal iterate therefore moves toward `w(a)` by
/// an exact line search, so the primal objective never increases and still
/// converges with the dual.
fn solve_binary<T: Scalar>(rows: &[&[T]], positive: &[bool], params: &SvmParams, seed: u64) -> (Hyperplane<T>, SolverTrace) {
    let n = rows.len();
    let dim = rows[0].len();
    let c = T::lit(params.c);
    let sign = |i: usize| if positive[i] { T::one() } else { -T::one() };
    // Diagonal of Q: |x~_i|^2 = |x_i|^2 + 1.
    let q_diag: Vec<T> = rows.iter().map(|x| dot(x, x) + T::one()).collect();

    let mut alpha = vec![T::zero(); n];
    let mut w = vec![T::zero(); dim];
    let mut b = T::zero();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = SolverTrace::default();
    let tol = T::lit(params.tol);

    // Primal iterate, starting at w = 0 where every hinge is 1.
    let mut wp = vec![T::zero(); dim];
    let mut bp = T::zero();
    let mut wp_margins = vec![0.0; n];
    let mut wp_objective = params.c * n as f64;

    for _ in 0..params.max_epochs {
        order.shuffle(&mut rng);
        let mut max_pg = T::zero();
        for &i in &order {
            let y = sign(i);
            let g = y * (dot(&w, rows[i]) + b) - T::one();
            let pg = if alpha[i] <= T::zero() {
                g.min(T::zero())
            } else if alpha[i] >= c {
                g.max(T::zero())
            } else {
                g
            };
            max_pg = max_pg.max(pg.abs());
            if pg == T::zero() {
                continue;
            }
            let old = alpha[i];
            alpha[i] = (old - g / q_diag[i]).max(T::zero()).min(c);
            let step = (alpha[i] - old) * y;
            if step != T::zero() {
                for (wj, &xj) in w.iter_mut().zip(rows[i]) {
                    *wj = *wj + step * xj;
                }
                b = b + step;
            }
        }
        trace.epochs += 1;

        let d: Vec<T> = w.iter().zip(&wp).map(|(&a, &p)| a - p).collect();
        let db = b - bp;
        let deltas = margins(rows, &sign, &d, db);
        let w_dot_d = (dot(&wp, &d) + bp * db).to_f64().unwrap_or(f64::NAN);
        let d_norm2 = (dot(&d, &d) + db * db).to_f64().unwrap_or(f64::NAN);
        let eta = segment_search(w_dot_d, d_norm2, params.c, &wp_margins, &deltas);
        if eta > 0.0 {
            let eta_t = T::lit(eta);
            let cand: Vec<T> = wp.iter().zip(&d).map(|(&p, &dj)| p + eta_t * dj).collect();
            let cand_b = bp + eta_t * db;
            let cand_margins = margins(rows, &sign, &cand, cand_b);
            let half_norm = 0.5 * (dot(&cand, &cand) + cand_b * cand_b).to_f64().unwrap_or(f64::NAN);
            let objective = primal_objective(half_norm, params.c, &cand_margins);
            // Rounding can make a vanishing step look uphill; keep the old iterate then.
            if objective <= wp_objective {
                wp = cand;
                bp = cand_b;
                wp_margins = cand_margins;
                wp_objective = objective;
            }
        }

        let half_norm = 0.5 * (dot(&w, &w) + b * b).to_f64().unwrap_or(f64::NAN);
        let alpha_sum: f64 = alpha.iter().map(|a| a.to_f64().unwrap_or(f64::NAN)).sum();
        trace.primal.push(wp_objective);
        trace.dual.push(half_norm - alpha_sum);
        if max_pg <= tol {
            trace.converged = true;
            break;
        }
    }
    (Hyperplane { weights: wp, bias: bp }, trace)
}

/// Trains on raw rows, returning the model and solver diagnostics.
pub fn train_svm_rows<T: Scalar>(
    rows: &[&[T]],
    labels: &[u8],
    params: &SvmParams,
) -> Result<(LinearSvm<T>, SvmTrainingReport), ClassifyError> {
    params.validate()?;
    let (classes, dim) = check_training_rows(rows, labels)?;
    let mut report = SvmTrainingReport::default();
    let mut planes = Vec::new();
    let targets: Vec<u8> = if classes.len() == 2 { vec![classes[1]] } else { classes.clone() };
    for (k, &target) in targets.iter().enumerate() {
        let positive: Vec<bool> = labels.iter().map(|&l| l == target).collect();
        let (plane, trace) = solve_binary(rows, &positive, params, params.seed.wrapping_add(k as u64));
        planes.push(plane);
        report.problems.push(trace);
    }
    Ok((LinearSvm { classes, dim, planes }, report))
}
