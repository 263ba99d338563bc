//! Data points, datasets, linear hypotheses and the losses evaluated on them.
//!
//! A linear hypothesis always carries one more weight than there are
//! features: the last weight multiplies an implicit constant-1 feature, so the
//! intercept and the slopes share a single code path.

use crate::error::{Error, Result};

/// Whether a label or user signal column takes arbitrary reals or only {0, 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Numeric,
    Binary,
}

impl ValueKind {
    pub fn admits(self, value: f64) -> bool {
        match self {
            ValueKind::Numeric => value.is_finite(),
            ValueKind::Binary => value == 0.0 || value == 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Numeric => "numeric",
            ValueKind::Binary => "binary",
        }
    }
}

/// One data point: features `x`, label `y` and user signal `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub features: Vec<f64>,
    pub label: f64,
    pub user_signal: f64,
}

impl LabeledPoint {
    pub fn new(features: Vec<f64>, label: f64, user_signal: f64) -> Self {
        LabeledPoint {
            features,
            label,
            user_signal,
        }
    }

    /// Convenience constructor for the single-feature case.
    pub fn scalar(x: f64, label: f64, user_signal: f64) -> Self {
        LabeledPoint::new(vec![x], label, user_signal)
    }
}

/// A nonempty, ordered collection of points sharing one feature dimension.
///
/// Construction validates every point, so the fields are read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<LabeledPoint>,
    feature_dim: usize,
    label_kind: ValueKind,
    signal_kind: ValueKind,
}

impl Dataset {
    pub fn new(points: Vec<LabeledPoint>, label_kind: ValueKind, signal_kind: ValueKind) -> Result<Self> {
        let first = points.first().ok_or(Error::EmptyDataset { module: "core" })?;
        let feature_dim = first.features.len();
        if feature_dim == 0 {
            return Err(Error::invalid("core", "features", "feature vectors must be nonempty"));
        }
        for (i, p) in points.iter().enumerate() {
            if p.features.len() != feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: feature_dim,
                    actual: p.features.len(),
                });
            }
            if p.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::non_finite("core", format!("features of point {i}")));
            }
            if !label_kind.admits(p.label) {
                return Err(Error::invalid(
                    "core",
                    "label",
                    format!("point {i} has label {} but labels are {}", p.label, label_kind.as_str()),
                ));
            }
            if !signal_kind.admits(p.user_signal) {
                return Err(Error::invalid(
                    "core",
                    "user_signal",
                    format!(
                        "point {i} has user signal {} but signals are {}",
                        p.user_signal,
                        signal_kind.as_str()
                    ),
                ));
            }
        }
        Ok(Dataset {
            points,
            feature_dim,
            label_kind,
            signal_kind,
        })
    }

    /// Numeric labels and numeric user signals.
    pub fn numeric(points: Vec<LabeledPoint>) -> Result<Self> {
        Dataset::new(points, ValueKind::Numeric, ValueKind::Numeric)
    }

    /// Binary labels and binary user signals.
    pub fn binary(points: Vec<LabeledPoint>) -> Result<Self> {
        Dataset::new(points, ValueKind::Binary, ValueKind::Binary)
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn into_points(self) -> Vec<LabeledPoint> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn label_kind(&self) -> ValueKind {
        self.label_kind
    }

    pub fn signal_kind(&self) -> ValueKind {
        self.signal_kind
    }

    /// Same kinds and dimension, different points.
    pub fn with_points(&self, points: Vec<LabeledPoint>) -> Result<Self> {
        let d = Dataset::new(points, self.label_kind, self.signal_kind)?;
        if d.feature_dim != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                actual: d.feature_dim,
            });
        }
        Ok(d)
    }

    pub(crate) fn require_numeric_labels(&self, module: &'static str) -> Result<()> {
        if self.label_kind != ValueKind::Numeric {
            return Err(Error::WrongKind {
                module,
                what: "labels",
                expected: "numeric",
            });
        }
        Ok(())
    }

    pub(crate) fn require_binary_labels(&self, module: &'static str) -> Result<()> {
        if self.label_kind != ValueKind::Binary {
            return Err(Error::WrongKind {
                module,
                what: "labels",
                expected: "binary",
            });
        }
        Ok(())
    }
}

/// Linear predictor `h(x) = w·[x; 1]` plus the alignment coefficient used by
/// the explainability penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHypothesis {
    /// Slopes followed by the intercept.
    pub weights: Vec<f64>,
    pub alpha: f64,
}

impl LinearHypothesis {
    pub fn new(weights: Vec<f64>, alpha: f64) -> Self {
        LinearHypothesis { weights, alpha }
    }

    pub fn zeros(feature_dim: usize) -> Self {
        LinearHypothesis::new(vec![0.0; feature_dim + 1], 0.0)
    }

    /// Slope/intercept pair for one feature.
    pub fn affine(w1: f64, w0: f64) -> Self {
        LinearHypothesis::new(vec![w1, w0], 0.0)
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.len().saturating_sub(1)
    }

    pub fn intercept(&self) -> f64 {
        self.weights.last().copied().unwrap_or(0.0)
    }

    pub fn slopes(&self) -> &[f64] {
        &self.weights[..self.feature_dim()]
    }

    pub fn scaled(&self, c: f64) -> Self {
        LinearHypothesis::new(self.weights.iter().map(|w| c * w).collect(), c * self.alpha)
    }
}

pub fn predict_linear(h: &LinearHypothesis, x: &[f64]) -> Result<f64> {
    if x.len() != h.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: h.feature_dim(),
            actual: x.len(),
        });
    }
    Ok(dot_affine(&h.weights, x))
}

/// `w·[x; 1]` without a length check.
pub(crate) fn dot_affine(weights: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    x.iter().zip(&weights[..n]).map(|(a, b)| a * b).sum::<f64>() + weights[n]
}

/// Predictions of `h` on every point of `d`, in dataset order.
pub fn predictions(d: &Dataset, h: &LinearHypothesis) -> Result<Vec<f64>> {
    if h.feature_dim() != d.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: d.feature_dim(),
            actual: h.feature_dim(),
        });
    }
    Ok(d.points().iter().map(|p| dot_affine(&h.weights, &p.features)).collect())
}

/// Average squared error of `h` over `d`.
pub fn empirical_risk(d: &Dataset, h: &LinearHypothesis) -> Result<f64> {
    d.require_numeric_labels("core")?;
    let preds = predictions(d, h)?;
    let sum: f64 = preds
        .iter()
        .zip(d.points())
        .map(|(yhat, p)| (yhat - p.label).powi(2))
        .sum();
    Ok(sum / d.len() as f64)
}

/// A hypothesis with {0, 1} output. The whole point is passed so that
/// predictors routed by the user signal can see it.
pub trait BinaryClassifier {
    fn classify(&self, point: &LabeledPoint) -> Result<u8>;
}

impl<F> BinaryClassifier for F
where
    F: Fn(&LabeledPoint) -> u8,
{
    fn classify(&self, point: &LabeledPoint) -> Result<u8> {
        Ok(self(point))
    }
}

/// Fraction of points whose predicted class equals the label.
pub fn accuracy<C: BinaryClassifier + ?Sized>(d: &Dataset, predictor: &C) -> Result<f64> {
    d.require_binary_labels("core")?;
    let mut correct = 0usize;
    for p in d.points() {
        if f64::from(predictor.classify(p)?) == p.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / d.len() as f64)
}

/// Confusion counts of a binary classifier, indexed `[label][prediction]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion(pub [[usize; 2]; 2]);

impl Confusion {
    pub fn total(&self) -> usize {
        self.0.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        self.0[0][0] + self.0[1][1]
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }
}

impl std::ops::Add for Confusion {
    type Output = Confusion;

    fn add(self, rhs: Confusion) -> Confusion {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

pub fn confusion<C: BinaryClassifier + ?Sized>(d: &Dataset, predictor: &C) -> Result<Confusion> {
    d.require_binary_labels("core")?;
    let mut c = Confusion::default();
    for p in d.points() {
        let pred = predictor.classify(p)?;
        c.0[usize::from(p.label == 1.0)][usize::from(pred == 1)] += 1;
    }
    Ok(c)
}
