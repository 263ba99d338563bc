//! Explainable empirical risk minimization.
//!
//! Learning methods that trade prediction risk against how well a specific
//! user can anticipate the predictions from a *user signal* `u` attached to
//! every data point. Explainability is measured through the conditional
//! entropy of the predictions given `u`:
//!
//! * [`linreg`]: linear regression penalized by the conditional variance of
//!   its predictions given `u` (primal form, any number of features), and the
//!   single-feature closed form under an entropy constraint (dual form).
//! * [`dtree`]: a classifier whose root tests the binary `u` and whose two
//!   branches are CART trees limited to `⌈η⌉` levels.
//! * [`moments`]: Gaussian moment estimates and the conditional
//!   variance/entropy quantities both methods rely on.
//! * [`ingest`]: CSV tables, tf-idf features with keyword signals, and a
//!   seeded Gaussian sampler.
//!
//! ```
//! use eerm_core::{linreg, GaussianMoments};
//!
//! let mom = GaussianMoments::tradeoff_reference();
//! let tight = linreg::fit_dual_closed_form(&mom, 0.0)?;
//! let loose = linreg::fit_dual_closed_form(&mom, 2.0)?;
//! assert!(tight.constraint_active && !loose.constraint_active);
//! assert!(tight.population_risk > loose.population_risk);
//! # Ok::<(), eerm_core::Error>(())
//! ```

pub mod data;
pub mod dtree;
mod error;
pub mod ingest;
pub mod linreg;
pub mod moments;

pub use data::{
    accuracy, empirical_risk, predict_linear, BinaryClassifier, Dataset, LabeledPoint, LinearHypothesis, ValueKind,
};
pub use dtree::{fit_eerm_tree, fit_tree, predict_composite, CompositeTree, TreeNode};
pub use error::{Error, Result};
pub use linreg::{fit_dual_closed_form, fit_primal, DualSolution, PrimalSolution, TradeoffPoint};
pub use moments::{estimate_moments, GaussianMoments};
