//! Explainable linear regression.
//!
//! Two routes to the risk/explainability tradeoff:
//!
//! * [`fit_primal`] minimizes `Σ (y − wᵀx)² + λ Σ (wᵀx − α u)²` jointly over
//!   `(w, α)` on a dataset. The problem is a convex quadratic, solved exactly
//!   through its normal equations.
//! * [`fit_dual_closed_form`] minimizes the population risk of a single-feature
//!   affine predictor under the Gaussian model subject to
//!   `½ ln(w₁² σ²_{x|u}) ≤ η`, using the closed-form KKT solution.
//!
//! Sweeping `λ` or `η` yields a [`TradeoffPoint`] curve. In both curves the
//! `entropy` column holds the conditional variance of the predictions given
//! `u` (sample estimate for the primal, population value for the dual); map
//! it through [`entropy_gaussian`](crate::moments::entropy_gaussian) to get nats.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::data::{dot_affine, Dataset, LinearHypothesis};
use crate::error::{Error, Result};
use crate::moments::{conditional_variance_x_given_u, entropy_estimate_from, GaussianMoments};

/// Eigenvalues below this fraction of the largest are treated as zero when
/// forming the pseudo-inverse of the normal matrix.
const PINV_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalSolution {
    pub hypothesis: LinearHypothesis,
    pub lambda: f64,
    /// Summed objective `Σ residual² + λ Σ alignment²` at the solution.
    pub objective_value: f64,
    pub empirical_risk: f64,
    /// Sample conditional variance of the predictions given `u`.
    pub entropy_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualSolution {
    pub w1: f64,
    pub w0: f64,
    pub eta: f64,
    pub population_risk: f64,
    pub constraint_active: bool,
    pub lagrange_multiplier: f64,
    /// `σ²_{x|u}` used for the constraint.
    pub conditional_variance: f64,
}

impl DualSolution {
    /// `exp(2η)/σ²_{x|u}`, the largest admissible `w₁²`. Infinite when `σ²_{x|u} = 0`.
    pub fn slope_bound(&self) -> f64 {
        (2.0 * self.eta).exp() / self.conditional_variance
    }

    pub fn hypothesis(&self) -> LinearHypothesis {
        LinearHypothesis::affine(self.w1, self.w0)
    }
}

/// One row of a tradeoff curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    /// `η` for dual curves, `λ` for primal curves.
    pub control: f64,
    pub risk: f64,
    pub entropy: f64,
    pub w1: f64,
    pub w0: f64,
}

/// Joint objective of the primal problem, summed over the dataset.
pub fn primal_objective(d: &Dataset, weights: &[f64], alpha: f64, lambda: f64) -> f64 {
    d.points()
        .iter()
        .map(|p| {
            let h = dot_affine(weights, &p.features);
            (p.label - h).powi(2) + lambda * (h - alpha * p.user_signal).powi(2)
        })
        .sum()
}

/// Minimizes the primal objective over `(w, α)`.
///
/// Among multiple minimizers the minimum-norm one is returned. At `λ = 0`
/// the objective does not depend on `α`; the reported `α` is then the
/// alignment coefficient of the sample entropy estimate.
pub fn fit_primal(d: &Dataset, lambda: f64) -> Result<PrimalSolution> {
    d.require_numeric_labels("linreg")?;
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::invalid("linreg", "lambda", format!("must be finite and >= 0, got {lambda}")));
    }
    if d.points().iter().any(|p| !p.label.is_finite() || !p.user_signal.is_finite()) {
        return Err(Error::non_finite("linreg", "labels or user signals"));
    }

    let n = d.feature_dim();
    let k = n + 1; // weights incl. intercept
    let dim = k + 1; // plus alpha
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    let mut row = vec![0.0; k];
    for p in d.points() {
        row[..n].copy_from_slice(&p.features);
        row[n] = 1.0;
        for i in 0..k {
            rhs[i] += row[i] * p.label;
            for j in i..k {
                gram[(i, j)] += (1.0 + lambda) * row[i] * row[j];
            }
            gram[(i, k)] -= lambda * row[i] * p.user_signal;
        }
        gram[(k, k)] += lambda * p.user_signal * p.user_signal;
    }
    for i in 0..dim {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }

    let theta = solve_min_norm(gram, &rhs)?;
    let weights: Vec<f64> = theta.iter().take(k).copied().collect();

    let preds: Vec<f64> = d.points().iter().map(|p| dot_affine(&weights, &p.features)).collect();
    let signals: Vec<f64> = d.points().iter().map(|p| p.user_signal).collect();
    let estimate = entropy_estimate_from(&preds, &signals);
    let alpha = if lambda > 0.0 { theta[k] } else { estimate.alpha };

    let residual: f64 = preds.iter().zip(d.points()).map(|(h, p)| (p.label - h).powi(2)).sum();
    let objective_value = primal_objective(d, &weights, alpha, lambda);
    if !objective_value.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::non_finite("linreg", "primal solution"));
    }
    Ok(PrimalSolution {
        hypothesis: LinearHypothesis::new(weights, alpha),
        lambda,
        objective_value,
        empirical_risk: residual / d.len() as f64,
        entropy_estimate: estimate.value,
    })
}

/// Minimum-norm solution of the symmetric PSD system `G θ = b` through an
/// eigendecomposition, followed by one step of iterative refinement.
fn solve_min_norm(gram: DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let eig = SymmetricEigen::new(gram.clone());
    let max_eig = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if !max_eig.is_finite() {
        return Err(Error::non_finite("linreg", "normal equations"));
    }
    let cutoff = max_eig * PINV_RCOND;
    let apply_pinv = |b: &DVector<f64>| -> DVector<f64> {
        let mut coeffs = eig.eigenvectors.tr_mul(b);
        for (c, &ev) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
            *c = if ev > cutoff { *c / ev } else { 0.0 };
        }
        &eig.eigenvectors * coeffs
    };
    let mut theta = apply_pinv(rhs);
    let residual = rhs - &gram * &theta;
    theta += apply_pinv(&residual);
    Ok(theta)
}

/// `E[(y − w₁x − w₀)²]` under the Gaussian model, from raw (uncentered) moments.
pub fn population_risk(mom: &GaussianMoments, w1: f64, w0: f64) -> f64 {
    mom.mean_x2() * w1 * w1 + w0 * w0 - 2.0 * mom.mu_y * w0 + mom.mean_y2() + 2.0 * mom.mu_x * w1 * w0
        - 2.0 * mom.mean_xy() * w1
}

/// Smallest `η` at which the unconstrained least-squares slope is feasible:
/// `½ ln(cov_xy² σ²_{x|u} / var_x²)`.
///
/// `None` when that slope is feasible for every `η` (zero covariance or a
/// signal that determines `x` exactly).
pub fn knee_eta(mom: &GaussianMoments) -> Option<f64> {
    let cv = conditional_variance_x_given_u(mom).value;
    if mom.cov_xy == 0.0 || cv == 0.0 || mom.var_x <= 0.0 {
        return None;
    }
    Some(0.5 * (mom.cov_xy * mom.cov_xy * cv / (mom.var_x * mom.var_x)).ln())
}

/// Risk-minimizing affine predictor subject to the entropy bound `η`.
pub fn fit_dual_closed_form(mom: &GaussianMoments, eta: f64) -> Result<DualSolution> {
    if !mom.var_x.is_finite() || mom.var_x <= 0.0 {
        return Err(Error::DegenerateFeature(mom.var_x));
    }
    if !eta.is_finite() {
        return Err(Error::invalid("linreg", "eta", format!("must be finite, got {eta}")));
    }
    for (name, v) in [("mu_x", mom.mu_x), ("mu_y", mom.mu_y), ("var_y", mom.var_y), ("cov_xy", mom.cov_xy)] {
        if !v.is_finite() {
            return Err(Error::non_finite("linreg", name));
        }
    }
    let cv = conditional_variance_x_given_u(mom).value;
    let ols_slope = mom.cov_xy / mom.var_x;
    let bound = (2.0 * eta).exp() / cv;

    let (w1, active) = if cv == 0.0 || ols_slope * ols_slope <= bound {
        (ols_slope, false)
    } else {
        debug_assert!(mom.cov_xy != 0.0, "a zero slope always satisfies the constraint");
        (mom.cov_xy.signum() * eta.exp() / cv.sqrt(), true)
    };
    let w0 = mom.mu_y - mom.mu_x * w1;

    let (risk, multiplier) = if active {
        let risk = mom.var_x * bound - 2.0 * mom.cov_xy.abs() * eta.exp() / cv.sqrt() + mom.var_y;
        (risk, (mom.cov_xy / w1 - mom.var_x).max(0.0))
    } else {
        (mom.conditional_variance_y_given_x()?, 0.0)
    };

    Ok(DualSolution {
        w1,
        w0,
        eta,
        population_risk: risk,
        constraint_active: active,
        lagrange_multiplier: multiplier,
        conditional_variance: cv,
    })
}

fn check_grid(module_name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("linreg", module_name, "grid is empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::non_finite("linreg", module_name));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("linreg", module_name, "grid must be sorted ascending"));
    }
    Ok(())
}

/// Closed-form dual solution for each `η` of an ascending grid.
pub fn tradeoff_curve_dual(mom: &GaussianMoments, etas: &[f64]) -> Result<Vec<TradeoffPoint>> {
    check_grid("etas", etas)?;
    etas.iter()
        .map(|&eta| {
            let s = fit_dual_closed_form(mom, eta)?;
            Ok(TradeoffPoint {
                control: eta,
                risk: s.population_risk,
                entropy: s.w1 * s.w1 * s.conditional_variance,
                w1: s.w1,
                w0: s.w0,
            })
        })
        .collect()
}

/// Primal solution for each `λ` of an ascending, nonnegative grid.
///
/// `w1` is the first slope; for multi-feature data the other slopes are not
/// part of the curve.
pub fn tradeoff_curve_primal(d: &Dataset, lambdas: &[f64]) -> Result<Vec<TradeoffPoint>> {
    check_grid("lambdas", lambdas)?;
    if lambdas[0] < 0.0 {
        return Err(Error::invalid("linreg", "lambdas", "values must be >= 0"));
    }
    lambdas
        .iter()
        .map(|&lambda| {
            let s = fit_primal(d, lambda)?;
            Ok(TradeoffPoint {
                control: lambda,
                risk: s.empirical_risk,
                entropy: s.entropy_estimate,
                w1: s.hypothesis.weights[0],
                w0: s.hypothesis.intercept(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{empirical_risk, LabeledPoint};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn dataset(rows: &[(f64, f64, f64)]) -> Dataset {
        Dataset::numeric(rows.iter().map(|&(x, y, u)| LabeledPoint::scalar(x, y, u)).collect()).unwrap()
    }

    #[test]
    fn lambda_zero_is_least_squares() {
        let s = fit_primal(&dataset(&[(0.0, 0.0, 3.0), (1.0, 1.0, -7.0)]), 0.0).unwrap();
        assert_relative_eq!(s.hypothesis.weights[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.hypothesis.weights[1], 0.0, epsilon = 1e-12);
        assert!(s.objective_value < 1e-20);
    }

    #[test]
    fn aligned_signal_is_a_fixed_point() {
        let d = dataset(&[(0.0, 0.0, 0.0), (1.0, 1.0, 1.0)]);
        for lambda in [0.0, 0.5, 1.0, 1e3] {
            let s = fit_primal(&d, lambda).unwrap();
            assert_relative_eq!(s.hypothesis.weights[0], 1.0, epsilon = 1e-9);
            assert_relative_eq!(s.hypothesis.weights[1], 0.0, epsilon = 1e-9);
            assert_relative_eq!(s.hypothesis.alpha, 1.0, epsilon = 1e-9);
            assert!(s.objective_value < 1e-15, "lambda {lambda}: {}", s.objective_value);
        }
    }

    #[test]
    fn negative_lambda_is_rejected() {
        let d = dataset(&[(0.0, 0.0, 0.0)]);
        assert!(matches!(fit_primal(&d, -1.0), Err(Error::InvalidParameter { name: "lambda", .. })));
        assert!(fit_primal(&d, f64::NAN).is_err());
    }

    #[test]
    fn analytic_gradient_vanishes() {
        let d = dataset(&[(0.0, 1.0, 0.0), (1.0, 2.0, 1.0), (2.0, 2.0, 1.0), (3.5, -1.0, 2.0)]);
        let s = fit_primal(&d, 1.7).unwrap();
        let (w, a, l) = (&s.hypothesis.weights, s.hypothesis.alpha, s.lambda);
        let mut g = [0.0; 3];
        for p in d.points() {
            let h = w[0] * p.features[0] + w[1];
            let r = h - p.label;
            let e = h - a * p.user_signal;
            g[0] += 2.0 * (r + l * e) * p.features[0];
            g[1] += 2.0 * (r + l * e);
            g[2] += -2.0 * l * e * p.user_signal;
        }
        let norm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(norm <= 1e-6 * (1.0 + s.objective_value), "{g:?}");
    }

    #[test]
    fn dual_reference_points() {
        let mom = GaussianMoments::tradeoff_reference();
        let at_zero = fit_dual_closed_form(&mom, 0.0).unwrap();
        assert!(at_zero.constraint_active);
        assert_relative_eq!(at_zero.w1, 1.0, epsilon = 1e-12);
        assert_relative_eq!(at_zero.population_risk, 12.77 - 2.0 * 33.85 + 104.93, epsilon = 1e-9);

        let plateau = fit_dual_closed_form(&mom, 0.975).unwrap();
        assert!(!plateau.constraint_active);
        assert_relative_eq!(plateau.w1, 33.85 / 12.77, epsilon = 1e-12);
        assert_relative_eq!(plateau.population_risk, 104.93 - 33.85 * 33.85 / 12.77, epsilon = 1e-9);
        assert!((plateau.population_risk - 15.20).abs() < 0.005);
    }

    #[test]
    fn uncorrelated_label_never_binds() {
        let mom = GaussianMoments {
            cov_xy: 0.0,
            cov_yu: 0.0,
            mu_y: 4.0,
            mu_x: 1.0,
            ..GaussianMoments::tradeoff_reference()
        };
        for eta in [-3.0, 0.0, 2.0] {
            let s = fit_dual_closed_form(&mom, eta).unwrap();
            assert_eq!(s.w1, 0.0);
            assert_eq!(s.w0, 4.0);
            assert_eq!(s.population_risk, mom.var_y);
            assert!(!s.constraint_active);
        }
    }

    #[test]
    fn degenerate_feature_and_exact_signal() {
        let mom = GaussianMoments {
            var_x: 0.0,
            ..GaussianMoments::tradeoff_reference()
        };
        assert!(matches!(fit_dual_closed_form(&mom, 0.0), Err(Error::DegenerateFeature(_))));

        // u = x, so σ²_{x|u} = 0 and the constraint is vacuous
        let exact = GaussianMoments {
            var_x: 4.0,
            var_u: 4.0,
            cov_xu: 4.0,
            cov_xy: 3.0,
            ..GaussianMoments::tradeoff_reference()
        };
        let s = fit_dual_closed_form(&exact, -5.0).unwrap();
        assert!(!s.constraint_active);
        assert_eq!(s.w1, 0.75);
        assert!(knee_eta(&exact).is_none());
    }

    #[test]
    fn population_risk_examples() {
        let mom = GaussianMoments {
            mu_y: 2.0,
            ..GaussianMoments::tradeoff_reference()
        };
        assert_relative_eq!(population_risk(&mom, 0.0, 0.0), 104.93 + 4.0);
        let reference = GaussianMoments::tradeoff_reference();
        assert!((population_risk(&reference, 2.6507, 0.0) - 15.20).abs() < 0.005);
    }

    #[test]
    fn closed_form_risk_matches_quadratic_form() {
        let mom = GaussianMoments {
            mu_x: 1.5,
            mu_y: -2.0,
            ..GaussianMoments::tradeoff_reference()
        };
        for eta in [-1.0, 0.0, 0.5, 0.9, 1.2] {
            let s = fit_dual_closed_form(&mom, eta).unwrap();
            assert_relative_eq!(s.population_risk, population_risk(&mom, s.w1, s.w0), max_relative = 1e-12);
        }
    }

    #[test]
    fn dual_curve_grid() {
        let mom = GaussianMoments::tradeoff_reference();
        let curve = tradeoff_curve_dual(&mom, &[0.0, 0.5, 0.975, 1.5]).unwrap();
        let risks: Vec<f64> = curve.iter().map(|p| p.risk).collect();
        // 12.77 e^{2η} − 67.7 e^{η} + 104.93 below the knee
        let mid = 12.77 * 1f64.exp() - 67.7 * 0.5f64.exp() + 104.93;
        assert_relative_eq!(risks[0], 50.0, epsilon = 1e-9);
        assert_relative_eq!(risks[1], mid, epsilon = 1e-9);
        assert!((risks[1] - 28.02).abs() < 0.005);
        assert!((risks[2] - 15.20).abs() < 0.005);
        assert_eq!(risks[2], risks[3]);

        let single = tradeoff_curve_dual(&mom, &[0.3]).unwrap();
        let s = fit_dual_closed_form(&mom, 0.3).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!((single[0].risk, single[0].w1, single[0].w0), (s.population_risk, s.w1, s.w0));
    }

    #[test]
    fn unsorted_grid_is_rejected() {
        let mom = GaussianMoments::tradeoff_reference();
        assert!(tradeoff_curve_dual(&mom, &[0.5, 0.1]).is_err());
        assert!(tradeoff_curve_dual(&mom, &[]).is_err());
        let d = dataset(&[(0.0, 0.0, 0.0), (1.0, 1.0, 1.0)]);
        assert!(tradeoff_curve_primal(&d, &[-1.0, 0.0]).is_err());
    }

    #[test]
    fn knee_of_reference_curve() {
        let mom = GaussianMoments::tradeoff_reference();
        let knee = knee_eta(&mom).unwrap();
        assert!((knee - 0.975).abs() < 0.001, "{knee}");
        assert!(!fit_dual_closed_form(&mom, knee + 1e-12).unwrap().constraint_active);
        assert!(fit_dual_closed_form(&mom, knee - 1e-9).unwrap().constraint_active);
    }

    #[test]
    fn primal_curve_starts_at_least_squares() {
        let d = dataset(&[(0.0, 1.0, 0.3), (1.0, 2.0, 1.0), (2.0, 2.0, 1.0), (4.0, 5.0, -0.5)]);
        let curve = tradeoff_curve_primal(&d, &[0.0, 1.0, 10.0]).unwrap();
        let ols = fit_primal(&d, 0.0).unwrap();
        assert_eq!(curve[0].risk, empirical_risk(&d, &ols.hypothesis).unwrap());
    }

    #[test]
    fn large_lambda_drives_entropy_to_zero_when_signal_is_label() {
        let rows: Vec<_> = (0..20)
            .map(|i| {
                let x = i as f64 * 0.37 - 3.0;
                let y = 1.3 * x + (i as f64 * 1.7).sin();
                (x, y, y)
            })
            .collect();
        let d = dataset(&rows);
        let curve = tradeoff_curve_primal(&d, &[0.0, 1.0, 1e3, 1e6]).unwrap();
        assert!(curve[0].entropy > 1e-3);
        assert!(curve[3].entropy < 1e-6, "{:?}", curve[3]);
    }

    fn random_moments() -> impl Strategy<Value = GaussianMoments> {
        (prop::array::uniform9(-2.0..2.0f64), prop::array::uniform3(-3.0..3.0f64)).prop_map(|(l, mean)| {
            let l = [[l[0], 0.0, 0.0], [l[1], l[2], 0.0], [l[3], l[4], l[5]]];
            let mut c = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    c[i][j] = (0..3).map(|k| l[i][k] * l[j][k]).sum::<f64>() + if i == j { 0.05 } else { 0.0 };
                }
            }
            GaussianMoments::from_parts(mean, c)
        })
    }

    proptest! {
        #[test]
        fn dual_branch_consistency(mom in random_moments(), eta in -1.0..3.0f64) {
            let s = fit_dual_closed_form(&mom, eta).unwrap();
            let cv = conditional_variance_x_given_u(&mom).value;
            let fires = (mom.cov_xy * mom.cov_xy) / (mom.var_x * mom.var_x) > (2.0 * eta).exp() / cv;
            prop_assert_eq!(s.constraint_active, fires);
            prop_assert!(s.w1 * s.w1 <= s.slope_bound() * (1.0 + 1e-12) + 1e-9);
        }

        #[test]
        fn dual_risk_is_monotone(mom in random_moments(), a in -1.0..3.0f64, b in -1.0..3.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let r_lo = fit_dual_closed_form(&mom, lo).unwrap().population_risk;
            let r_hi = fit_dual_closed_form(&mom, hi).unwrap().population_risk;
            prop_assert!(r_hi <= r_lo + 1e-9 * (1.0 + r_lo.abs()));
        }

        #[test]
        fn primal_entropy_decreases_with_lambda(
            rows in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64), 4..15),
        ) {
            let d = dataset(&rows);
            let curve = tradeoff_curve_primal(&d, &[0.0, 0.1, 1.0, 10.0, 100.0]).unwrap();
            for w in curve.windows(2) {
                prop_assert!(w[1].entropy <= w[0].entropy + 1e-9 * (1.0 + w[0].entropy));
                prop_assert!(w[1].risk + 1e-9 * (1.0 + w[1].risk) >= w[0].risk);
            }
        }
    }
}
