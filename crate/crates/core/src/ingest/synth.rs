use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use super::seeded_rng;
use crate::data::{Dataset, LabeledPoint};
use crate::error::{Error, Result};
use crate::moments::{first_negative_minor, GaussianMoments};

/// Symmetric square root of a PSD covariance, with tiny negative eigenvalues
/// from rounding clamped to zero.
fn symmetric_sqrt(cov: &[[f64; 3]; 3]) -> Matrix3<f64> {
    let c = Matrix3::from_fn(|i, j| cov[i][j]);
    let eig = SymmetricEigen::new(c);
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    eig.eigenvectors * Matrix3::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `m` i.i.d. draws of `(x, y, u)` from the Gaussian with the given moments.
pub fn synth_gaussian(mom: &GaussianMoments, m: usize, seed: u64) -> Result<Dataset> {
    if m == 0 {
        return Err(Error::invalid("ingest", "m", "sample size must be positive"));
    }
    mom.validate()?;
    let cov = mom.covariance();
    if let Some((minor, value)) = first_negative_minor(&cov) {
        return Err(Error::NotPositiveSemidefinite { minor, value });
    }
    let root = symmetric_sqrt(&cov);
    let mean = Vector3::from(mom.mean());
    let mut rng = seeded_rng(seed);
    let points = (0..m)
        .map(|_| {
            let z = Vector3::from_fn(|_, _| StandardNormal.sample(&mut rng));
            let s = mean + root * z;
            LabeledPoint::scalar(s[0], s[1], s[2])
        })
        .collect();
    Dataset::numeric(points)
}

/// Replaces the user signal by the label plus i.i.d. `N(0, noise_std²)` noise.
pub fn weather_signal(d: &Dataset, noise_std: f64, seed: u64) -> Result<Dataset> {
    d.require_numeric_labels("ingest")?;
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(Error::invalid("ingest", "noise_std", format!("must be finite and >= 0, got {noise_std}")));
    }
    let mut rng = seeded_rng(seed);
    let points = d
        .points()
        .iter()
        .map(|p| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            LabeledPoint::new(p.features.clone(), p.label, p.label + noise_std * eps)
        })
        .collect();
    Dataset::new(points, d.label_kind(), crate::data::ValueKind::Numeric)
}

/// Seeded shuffle of `0..m` cut into (train, test) index lists, each sorted.
///
/// The test part has `round(m·test_fraction)` elements, clamped so that both
/// parts are nonempty.
pub fn train_test_indices(m: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(
            "ingest",
            "test_fraction",
            format!("must lie in (0, 1), got {test_fraction}"),
        ));
    }
    if m < 2 {
        return Err(Error::TooFewPoints {
            module: "ingest",
            required: 2,
            actual: m,
        });
    }
    let n_test = ((m as f64 * test_fraction).round() as usize).clamp(1, m - 1);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut seeded_rng(seed));
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

pub fn train_test_split(d: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = train_test_indices(d.len(), test_fraction, seed)?;
    let pick = |ix: &[usize]| d.with_points(ix.iter().map(|&i| d.points()[i].clone()).collect());
    Ok((pick(&train)?, pick(&test)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ValueKind;
    use crate::moments::estimate_moments;

    #[test]
    fn zero_covariance_returns_the_mean() {
        let mom = GaussianMoments::from_parts([1.0, -2.0, 0.5], [[0.0; 3]; 3]);
        let d = synth_gaussian(&mom, 5, 9).unwrap();
        for p in d.points() {
            assert_eq!((p.features[0], p.label, p.user_signal), (1.0, -2.0, 0.5));
        }
    }

    #[test]
    fn same_seed_same_draws() {
        let mom = GaussianMoments::tradeoff_reference();
        let a = synth_gaussian(&mom, 50, 42).unwrap();
        let b = synth_gaussian(&mom, 50, 42).unwrap();
        let c = synth_gaussian(&mom, 50, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn non_psd_is_rejected() {
        let mom = GaussianMoments {
            cov_yu: 30.0,
            ..GaussianMoments::tradeoff_reference()
        };
        assert!(matches!(synth_gaussian(&mom, 10, 0), Err(Error::NotPositiveSemidefinite { .. })));
    }

    #[test]
    fn square_root_reproduces_covariance() {
        let cov = GaussianMoments::tradeoff_reference().covariance();
        let r = symmetric_sqrt(&cov);
        let back = r * r;
        for i in 0..3 {
            for j in 0..3 {
                assert!((back[(i, j)] - cov[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn synth_then_estimate_is_close() {
        let mom = GaussianMoments::tradeoff_reference();
        let est = estimate_moments(&synth_gaussian(&mom, 20_000, 1).unwrap()).unwrap();
        assert!((est.var_x / mom.var_x - 1.0).abs() < 0.05);
        assert!((est.cov_xy / mom.cov_xy - 1.0).abs() < 0.05);
    }

    fn numeric_line(m: usize) -> Dataset {
        Dataset::numeric((0..m).map(|i| LabeledPoint::scalar(i as f64, 2.0 * i as f64, 0.0)).collect()).unwrap()
    }

    #[test]
    fn zero_noise_copies_the_label() {
        let d = weather_signal(&numeric_line(10), 0.0, 5).unwrap();
        assert!(d.points().iter().all(|p| p.user_signal == p.label));
        assert_eq!(d.signal_kind(), ValueKind::Numeric);
        assert!(weather_signal(&numeric_line(3), -1.0, 5).is_err());
    }

    #[test]
    fn noise_is_seeded() {
        let a = weather_signal(&numeric_line(10), 2.0, 5).unwrap();
        let b = weather_signal(&numeric_line(10), 2.0, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ten_points_split_nine_one() {
        let d = numeric_line(10);
        let (train, test) = train_test_split(&d, 0.1, 3).unwrap();
        assert_eq!((train.len(), test.len()), (9, 1));
        let again = train_test_split(&d, 0.1, 3).unwrap();
        assert_eq!((train.clone(), test.clone()), again);

        let mut xs: Vec<f64> = train.points().iter().chain(test.points()).map(|p| p.features[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, (0..10).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let d = numeric_line(10);
        for f in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(train_test_split(&d, f, 0).is_err());
        }
        assert!(train_test_split(&numeric_line(1), 0.5, 0).is_err());
    }

    #[test]
    fn split_sizes_within_one() {
        for m in 2..60 {
            for f in [0.05, 0.1, 0.33, 0.5, 0.9] {
                let (tr, te) = train_test_indices(m, f, 11).unwrap();
                assert_eq!(tr.len() + te.len(), m);
                assert!((te.len() as f64 - m as f64 * f).abs() <= 1.0);
                assert!((tr.len() as f64 - m as f64 * (1.0 - f)).abs() <= 1.0);
            }
        }
    }
}
