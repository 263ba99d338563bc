//! Second-order moments of `(x, y, u)` for the single-feature model and the
//! conditional-variance / entropy quantities derived from them.
//!
//! Regression uses the Gaussian (differential) entropy `½ ln σ²`; trees use
//! the `depth − 1` bit bound. The two are never converted into each other.

use crate::data::{predictions, Dataset, LinearHypothesis};
use crate::error::{Error, Result};

/// Tolerance used for the PSD checks on 2×2 and 3×3 principal minors.
pub const PSD_TOLERANCE: f64 = 1e-9;

/// Means and covariance of the jointly Gaussian `(x, y, u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMoments {
    pub mu_x: f64,
    pub mu_y: f64,
    pub mu_u: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub var_u: f64,
    pub cov_xy: f64,
    pub cov_xu: f64,
    pub cov_yu: f64,
}

impl GaussianMoments {
    /// Zero-mean moments with `σ²_{x|u} = 1` whose dual tradeoff curve is
    /// `12.77·e^{2η} − 67.7·e^{η} + 104.93` below the knee `η* ≈ 0.975` and
    /// flat at `σ²_{y|x} ≈ 15.20` above it.
    ///
    /// `u` is built to be conditionally independent of `y` given `x`, which
    /// fixes `cov_yu` and keeps the 3×3 covariance positive semidefinite.
    pub fn tradeoff_reference() -> Self {
        let var_x = 12.77;
        let cov_xy = 33.85;
        let cov_xu = (var_x - 1.0f64).sqrt();
        GaussianMoments {
            mu_x: 0.0,
            mu_y: 0.0,
            mu_u: 0.0,
            var_x,
            var_y: 104.93,
            var_u: 1.0,
            cov_xy,
            cov_xu,
            cov_yu: cov_xy * cov_xu / var_x,
        }
    }

    pub fn mean(&self) -> [f64; 3] {
        [self.mu_x, self.mu_y, self.mu_u]
    }

    /// Covariance in `(x, y, u)` order.
    pub fn covariance(&self) -> [[f64; 3]; 3] {
        [
            [self.var_x, self.cov_xy, self.cov_xu],
            [self.cov_xy, self.var_y, self.cov_yu],
            [self.cov_xu, self.cov_yu, self.var_u],
        ]
    }

    pub fn from_parts(mean: [f64; 3], cov: [[f64; 3]; 3]) -> Self {
        GaussianMoments {
            mu_x: mean[0],
            mu_y: mean[1],
            mu_u: mean[2],
            var_x: cov[0][0],
            var_y: cov[1][1],
            var_u: cov[2][2],
            cov_xy: cov[0][1],
            cov_xu: cov[0][2],
            cov_yu: cov[1][2],
        }
    }

    /// Raw second moment `E[x²]`.
    pub fn mean_x2(&self) -> f64 {
        self.var_x + self.mu_x * self.mu_x
    }

    /// Raw cross moment `E[xy]`.
    pub fn mean_xy(&self) -> f64 {
        self.cov_xy + self.mu_x * self.mu_y
    }

    /// Raw second moment `E[y²]`.
    pub fn mean_y2(&self) -> f64 {
        self.var_y + self.mu_y * self.mu_y
    }

    /// `σ²_{y|x}`, the risk of the best affine predictor of `y` from `x`.
    pub fn conditional_variance_y_given_x(&self) -> Result<f64> {
        if self.var_x <= 0.0 {
            return Err(Error::DegenerateFeature(self.var_x));
        }
        Ok((self.var_y - self.cov_xy * self.cov_xy / self.var_x).max(0.0))
    }

    /// Checks finiteness, nonnegative variances and that every principal
    /// minor of the covariance is `≥ −PSD_TOLERANCE·scale`.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mu_x", self.mu_x),
            ("mu_y", self.mu_y),
            ("mu_u", self.mu_u),
            ("var_x", self.var_x),
            ("var_y", self.var_y),
            ("var_u", self.var_u),
            ("cov_xy", self.cov_xy),
            ("cov_xu", self.cov_xu),
            ("cov_yu", self.cov_yu),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::non_finite("moments", name));
            }
        }
        if let Some((minor, value)) = first_negative_minor(&self.covariance()) {
            return Err(Error::NotPositiveSemidefinite { minor, value });
        }
        Ok(())
    }
}

/// Name and value of the first principal minor that is negative beyond
/// tolerance, checked in order of size.
pub(crate) fn first_negative_minor(c: &[[f64; 3]; 3]) -> Option<(String, f64)> {
    const NAMES: [&str; 3] = ["x", "y", "u"];
    let scale = (0..3).map(|i| c[i][i].abs()).fold(1.0f64, f64::max);
    for i in 0..3 {
        if c[i][i] < -PSD_TOLERANCE * scale {
            return Some((format!("var_{}", NAMES[i]), c[i][i]));
        }
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let det = c[i][i] * c[j][j] - c[i][j] * c[j][i];
        if det < -PSD_TOLERANCE * scale * scale {
            return Some((format!("det[{},{}]", NAMES[i], NAMES[j]), det));
        }
    }
    let det3 = c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
        + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0]);
    if det3 < -PSD_TOLERANCE * scale * scale * scale {
        return Some(("det[x,y,u]".to_string(), det3));
    }
    None
}

/// Sample means and 1/m covariances of `(x, y, u)` for a single-feature dataset.
pub fn estimate_moments(d: &Dataset) -> Result<GaussianMoments> {
    d.require_numeric_labels("moments")?;
    if d.feature_dim() != 1 {
        return Err(Error::invalid(
            "moments",
            "feature_dim",
            format!("the Gaussian model has a single feature, dataset has {}", d.feature_dim()),
        ));
    }
    if d.len() < 2 {
        return Err(Error::TooFewPoints {
            module: "moments",
            required: 2,
            actual: d.len(),
        });
    }
    let m = d.len() as f64;
    let mut mean = [0.0f64; 3];
    for p in d.points() {
        mean[0] += p.features[0];
        mean[1] += p.label;
        mean[2] += p.user_signal;
    }
    mean.iter_mut().for_each(|v| *v /= m);

    // centered two-pass accumulation
    let mut cov = [[0.0f64; 3]; 3];
    for p in d.points() {
        let r = [p.features[0] - mean[0], p.label - mean[1], p.user_signal - mean[2]];
        for i in 0..3 {
            for j in i..3 {
                cov[i][j] += r[i] * r[j];
            }
        }
    }
    for i in 0..3 {
        for j in i..3 {
            cov[i][j] /= m;
            cov[j][i] = cov[i][j];
        }
    }
    let mom = GaussianMoments::from_parts(mean, cov);
    mom.validate()?;
    Ok(mom)
}

/// `σ²_{x|u}` together with a flag telling whether `u` was degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalVariance {
    pub value: f64,
    /// `var_u = 0`: the signal carries no information and `value = var_x`.
    pub signal_degenerate: bool,
}

/// `σ²_{x|u} = var_x − cov_xu² / var_u`, clamped at zero.
pub fn conditional_variance_x_given_u(mom: &GaussianMoments) -> ConditionalVariance {
    if mom.var_u <= 0.0 {
        return ConditionalVariance {
            value: mom.var_x.max(0.0),
            signal_degenerate: true,
        };
    }
    ConditionalVariance {
        value: (mom.var_x - mom.cov_xu * mom.cov_xu / mom.var_u).max(0.0),
        signal_degenerate: false,
    }
}

/// Conditional variance of the prediction `w1·x + w0` given `u`: `w1²·σ²_{x|u}`.
pub fn conditional_variance_pred(mom: &GaussianMoments, w1: f64) -> f64 {
    w1 * w1 * conditional_variance_x_given_u(mom).value
}

/// Differential entropy `½ ln σ²` of a Gaussian with the given variance.
pub fn entropy_gaussian(cond_var: f64) -> Result<f64> {
    if !(cond_var > 0.0) || !cond_var.is_finite() {
        return Err(Error::DegeneratePrediction(cond_var));
    }
    Ok(0.5 * cond_var.ln())
}

/// Sample estimate of the conditional variance of predictions given `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    pub value: f64,
    pub alpha: f64,
}

/// `min_α (1/m) Σ (h(x⁽ⁱ⁾) − α u⁽ⁱ⁾)²` with its minimizer.
///
/// When every `u⁽ⁱ⁾` is zero the objective does not depend on `α`; then
/// `α = 0` and the value is the mean squared prediction.
pub fn entropy_estimate_linear(d: &Dataset, h: &LinearHypothesis) -> Result<EntropyEstimate> {
    let preds = predictions(d, h)?;
    let signals: Vec<f64> = d.points().iter().map(|p| p.user_signal).collect();
    Ok(entropy_estimate_from(&preds, &signals))
}

pub(crate) fn entropy_estimate_from(preds: &[f64], signals: &[f64]) -> EntropyEstimate {
    let suu: f64 = signals.iter().map(|u| u * u).sum();
    let suh: f64 = signals.iter().zip(preds).map(|(u, h)| u * h).sum();
    let alpha = if suu > 0.0 { suh / suu } else { 0.0 };
    let value = preds
        .iter()
        .zip(signals)
        .map(|(h, u)| (h - alpha * u).powi(2))
        .sum::<f64>()
        / preds.len() as f64;
    EntropyEstimate { value, alpha }
}

/// Entropy bound, in bits, of a tree of the given depth whose root tests `u`.
pub fn entropy_estimate_tree(depth: usize) -> f64 {
    depth.saturating_sub(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabeledPoint;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dataset(rows: &[(f64, f64, f64)]) -> Dataset {
        Dataset::numeric(rows.iter().map(|&(x, y, u)| LabeledPoint::scalar(x, y, u)).collect()).unwrap()
    }

    /// Dataset with prescribed predictions under `h = identity` on x.
    fn preds_and_signals(preds: &[f64], signals: &[f64]) -> (Dataset, LinearHypothesis) {
        let rows: Vec<_> = preds.iter().zip(signals).map(|(&p, &u)| (p, 0.0, u)).collect();
        (dataset(&rows), LinearHypothesis::affine(1.0, 0.0))
    }

    #[test]
    fn identical_points_have_no_spread() {
        let m = estimate_moments(&dataset(&[(1.0, 2.0, 3.0), (1.0, 2.0, 3.0)])).unwrap();
        assert_eq!((m.mu_x, m.mu_y, m.mu_u), (1.0, 2.0, 3.0));
        for v in [m.var_x, m.var_y, m.var_u, m.cov_xy, m.cov_xu, m.cov_yu] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn two_point_symmetry() {
        let m = estimate_moments(&dataset(&[(0.0, 0.0, 0.0), (2.0, 2.0, 2.0)])).unwrap();
        for v in [m.mu_x, m.mu_y, m.mu_u, m.var_x, m.var_y, m.var_u, m.cov_xy, m.cov_xu, m.cov_yu] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn estimate_needs_two_points() {
        let err = estimate_moments(&dataset(&[(0.0, 0.0, 0.0)])).unwrap_err();
        assert!(matches!(err, Error::TooFewPoints { required: 2, actual: 1, .. }));
    }

    #[test]
    fn conditional_variance_examples() {
        let mut m = GaussianMoments::tradeoff_reference();
        assert_relative_eq!(conditional_variance_x_given_u(&m).value, 1.0, epsilon = 1e-12);

        m.cov_xu = 0.0;
        assert_eq!(conditional_variance_x_given_u(&m).value, m.var_x);

        let same = GaussianMoments {
            var_x: 2.5,
            var_u: 2.5,
            cov_xu: 2.5,
            ..m
        };
        assert_eq!(conditional_variance_x_given_u(&same).value, 0.0);
    }

    #[test]
    fn degenerate_signal_reports_var_x() {
        let m = GaussianMoments {
            var_u: 0.0,
            cov_xu: 0.0,
            ..GaussianMoments::tradeoff_reference()
        };
        let cv = conditional_variance_x_given_u(&m);
        assert!(cv.signal_degenerate);
        assert_eq!(cv.value, 12.77);
    }

    #[test]
    fn prediction_variance_examples() {
        let m = GaussianMoments::tradeoff_reference();
        assert_eq!(conditional_variance_pred(&m, 0.0), 0.0);
        assert_relative_eq!(conditional_variance_pred(&m, 1.0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(conditional_variance_pred(&m, 2.6507), 7.02621, epsilon = 1e-4);
    }

    #[test]
    fn gaussian_entropy_examples() {
        assert_eq!(entropy_gaussian(1.0).unwrap(), 0.0);
        assert_relative_eq!(entropy_gaussian(std::f64::consts::E.powi(2)).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(entropy_gaussian(7.026).unwrap(), 0.97487, epsilon = 1e-4);
        assert!(matches!(entropy_gaussian(0.0), Err(Error::DegeneratePrediction(_))));
        assert!(entropy_gaussian(-1.0).is_err());
    }

    #[test]
    fn entropy_estimate_perfect_alignment() {
        let (d, h) = preds_and_signals(&[1.0, -2.0, 4.0], &[1.0, -2.0, 4.0]);
        let e = entropy_estimate_linear(&d, &h).unwrap();
        assert_eq!(e.alpha, 1.0);
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn entropy_estimate_zero_signal() {
        let (d, h) = preds_and_signals(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]);
        let e = entropy_estimate_linear(&d, &h).unwrap();
        assert_eq!(e.alpha, 0.0);
        assert_relative_eq!(e.value, 14.0 / 3.0);
    }

    /// Golden-section-free oracle: scan α on a fine grid.
    fn grid_min_alpha(preds: &[f64], signals: &[f64], lo: f64, hi: f64, steps: usize) -> (f64, f64) {
        let m = preds.len() as f64;
        (0..=steps)
            .map(|k| {
                let a = lo + (hi - lo) * k as f64 / steps as f64;
                let v = preds.iter().zip(signals).map(|(h, u)| (h - a * u).powi(2)).sum::<f64>() / m;
                (v, a)
            })
            .fold((f64::INFINITY, 0.0), |best, cur| if cur.0 < best.0 { cur } else { best })
    }

    #[test]
    fn entropy_estimate_three_points() {
        let preds = [1.0, 2.0, 3.0];
        let signals = [1.0, 1.0, 2.0];
        let (grid_value, grid_alpha) = grid_min_alpha(&preds, &signals, -5.0, 5.0, 100_000);
        assert_relative_eq!(grid_alpha, 1.5, epsilon = 1e-4);
        assert_relative_eq!(grid_value, 1.0 / 6.0, epsilon = 1e-8);

        let (d, h) = preds_and_signals(&preds, &signals);
        let e = entropy_estimate_linear(&d, &h).unwrap();
        assert_relative_eq!(e.alpha, 1.5, epsilon = 1e-15);
        assert_relative_eq!(e.value, 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn tree_entropy_bound() {
        assert_eq!(entropy_estimate_tree(0), 0.0);
        assert_eq!(entropy_estimate_tree(1), 0.0);
        assert_eq!(entropy_estimate_tree(3), 2.0);
    }

    #[test]
    fn validate_names_offending_minor() {
        let bad = GaussianMoments {
            cov_xy: 100.0,
            ..GaussianMoments::tradeoff_reference()
        };
        match bad.validate().unwrap_err() {
            Error::NotPositiveSemidefinite { minor, value } => {
                assert_eq!(minor, "det[x,y]");
                assert!(value < 0.0);
            }
            other => panic!("unexpected {other}"),
        }
        GaussianMoments::tradeoff_reference().validate().unwrap();
    }

    fn rows() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 2..12)
    }

    proptest! {
        #[test]
        fn entropy_estimate_is_quadratically_homogeneous(r in rows(), w1 in -3.0..3.0f64, w0 in -3.0..3.0f64, c in -3.0..3.0f64) {
            let d = dataset(&r);
            let h = LinearHypothesis::affine(w1, w0);
            let base = entropy_estimate_linear(&d, &h).unwrap().value;
            let scaled = entropy_estimate_linear(&d, &h.scaled(c)).unwrap().value;
            prop_assert!((scaled - c * c * base).abs() <= 1e-9 * (1.0 + c * c * base));
        }

        #[test]
        fn entropy_estimate_matches_alpha_grid(r in rows(), w1 in -3.0..3.0f64, w0 in -3.0..3.0f64) {
            let d = dataset(&r);
            let h = LinearHypothesis::affine(w1, w0);
            let e = entropy_estimate_linear(&d, &h).unwrap();
            prop_assert!(e.value >= 0.0);
            let preds: Vec<f64> = r.iter().map(|&(x, _, _)| w1 * x + w0).collect();
            let signals: Vec<f64> = r.iter().map(|&(_, _, u)| u).collect();
            // coarse scan around the closed-form α, then a fine one
            let (_, a0) = grid_min_alpha(&preds, &signals, e.alpha - 50.0, e.alpha + 50.0, 20_000);
            let (g, _) = grid_min_alpha(&preds, &signals, a0 - 0.01, a0 + 0.01, 2_000);
            prop_assert!(e.value <= g + 1e-12 * (1.0 + g));
            prop_assert!(g - e.value <= 1e-6 * (1.0 + g));
        }

        #[test]
        fn conditional_variance_never_negative(vx in 0.0..10.0f64, vu in 0.0..10.0f64, rho in -1.2..1.2f64) {
            let m = GaussianMoments {
                var_x: vx,
                var_u: vu,
                cov_xu: rho * (vx * vu).sqrt(),
                ..GaussianMoments::tradeoff_reference()
            };
            prop_assert!(conditional_variance_x_given_u(&m).value >= 0.0);
        }

        #[test]
        fn moments_are_permutation_invariant(r in rows(), k in 0usize..12) {
            let a = estimate_moments(&dataset(&r)).unwrap();
            let mut s = r.clone();
            let k = k % s.len();
            s.rotate_left(k);
            s.reverse();
            let b = estimate_moments(&dataset(&s)).unwrap();
            let (fa, fb) = (a.covariance(), b.covariance());
            for i in 0..3 {
                prop_assert!((a.mean()[i] - b.mean()[i]).abs() < 1e-12);
                for j in 0..3 {
                    prop_assert!((fa[i][j] - fb[i][j]).abs() < 1e-10);
                }
            }
        }
    }
}
