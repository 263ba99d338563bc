//! Browser bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string. The `*_json` functions hold the logic
//! and run natively as well, so they are what the tests exercise.

use eerm_core::dtree::fit_eerm_tree;
use eerm_core::ingest::{
    build_tfidf_limited, derive_keyword_signal, keyword_presence, synth_gaussian, text_dataset, TextCorpus,
};
use eerm_core::linreg::{knee_eta, tradeoff_curve_dual, tradeoff_curve_primal};
use eerm_core::moments::entropy_gaussian;
use eerm_core::{accuracy, predict_composite, GaussianMoments, TreeNode};
use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Moments with zero means, `var_u = 1` and `u` independent of `y` given `x`,
/// parameterized by the quantities that shape the dual curve.
fn moments(var_x: f64, cov_xy: f64, var_y: f64, cond_var_x: f64) -> Result<GaussianMoments, String> {
    if !(cond_var_x > 0.0 && cond_var_x <= var_x) {
        return Err(format!("need 0 < σ²(x|u) <= var(x), got {cond_var_x} and {var_x}"));
    }
    let cov_xu = (var_x - cond_var_x).sqrt();
    let mom = GaussianMoments {
        mu_x: 0.0,
        mu_y: 0.0,
        mu_u: 0.0,
        var_x,
        var_y,
        var_u: 1.0,
        cov_xy,
        cov_xu,
        cov_yu: cov_xy * cov_xu / var_x,
    };
    mom.validate().map_err(|e| e.to_string())?;
    Ok(mom)
}

fn grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, String> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) || n == 0 || n > 10_000 {
        return Err(format!("bad grid {lo}..{hi} with {n} points"));
    }
    Ok(match n {
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    })
}

#[derive(Serialize)]
struct Curve {
    control: Vec<f64>,
    risk: Vec<f64>,
    /// Entropy in nats, `½ ln` of the conditional variance.
    eta: Vec<f64>,
    w1: Vec<f64>,
}

pub fn dual_curve_json(
    var_x: f64,
    cov_xy: f64,
    var_y: f64,
    cond_var_x: f64,
    eta_lo: f64,
    eta_hi: f64,
    n: usize,
) -> Result<String, String> {
    let mom = moments(var_x, cov_xy, var_y, cond_var_x)?;
    let pts = tradeoff_curve_dual(&mom, &grid(eta_lo, eta_hi, n)?).map_err(|e| e.to_string())?;
    let out = json!({
        "curve": Curve {
            control: pts.iter().map(|p| p.control).collect(),
            risk: pts.iter().map(|p| p.risk).collect(),
            eta: pts.iter().map(|p| p.control).collect(),
            w1: pts.iter().map(|p| p.w1).collect(),
        },
        "knee": knee_eta(&mom),
        "plateau": mom.conditional_variance_y_given_x().map_err(|e| e.to_string())?,
    });
    Ok(out.to_string())
}

/// Risk/entropy pairs of the penalized fit on `m` samples from the
/// reference moments, one per `λ` on a log grid `10^lo .. 10^hi`.
pub fn primal_curve_json(m: usize, seed: u64, log_lo: f64, log_hi: f64, n: usize) -> Result<String, String> {
    if m < 2 || m > 200_000 {
        return Err(format!("sample size must be in 2..=200000, got {m}"));
    }
    let lambdas: Vec<f64> = grid(log_lo, log_hi, n)?.into_iter().map(|e| 10f64.powf(e)).collect();
    let d = synth_gaussian(&GaussianMoments::tradeoff_reference(), m, seed).map_err(|e| e.to_string())?;
    let pts = tradeoff_curve_primal(&d, &lambdas).map_err(|e| e.to_string())?;
    let eta = pts
        .iter()
        .map(|p| entropy_gaussian(p.entropy).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let out = Curve {
        control: pts.iter().map(|p| p.control).collect(),
        risk: pts.iter().map(|p| p.risk).collect(),
        eta,
        w1: pts.iter().map(|p| p.w1).collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

fn node_json(n: &TreeNode, vocabulary: &[(String, usize)]) -> Value {
    match n {
        TreeNode::Leaf {
            predicted_label,
            class_counts,
        } => json!({ "label": predicted_label, "counts": class_counts }),
        TreeNode::Split {
            feature_index,
            threshold,
            left,
            right,
        } => json!({
            "token": vocabulary[*feature_index].0,
            "threshold": threshold,
            "left": node_json(left, vocabulary),
            "right": node_json(right, vocabulary),
        }),
    }
}

/// Fits the composite tree on line-aligned documents and 0/1 labels and
/// classifies `query`.
pub fn tree_json(documents: &str, labels: &str, eta: f64, k: usize, query: &str) -> Result<String, String> {
    let docs: Vec<String> = documents.lines().map(str::to_string).collect();
    let labels = labels
        .lines()
        .map(|l| match l.trim() {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            other => Err(format!("label {other:?} is not 0 or 1")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let corpus = TextCorpus::new(docs, labels).map_err(|e| e.to_string())?;
    let (tfidf, x) = build_tfidf_limited(&corpus, Some(2000)).map_err(|e| e.to_string())?;
    let kw = derive_keyword_signal(&corpus, k).map_err(|e| e.to_string())?;
    let d = text_dataset(x, corpus.labels(), &kw.signals).map_err(|e| e.to_string())?;
    let tree = fit_eerm_tree(&d, eta).map_err(|e| e.to_string())?;
    let train_accuracy = accuracy(&d, &tree).map_err(|e| e.to_string())?;

    let q = query.to_string();
    let u = keyword_presence([&q], &kw.keywords)[0];
    let label = predict_composite(&tree, &tfidf.transform(&q), u).map_err(|e| e.to_string())?;
    let out = json!({
        "keywords": kw.keywords,
        "d_max": tree.max_depth,
        "train_accuracy": train_accuracy,
        "tree_u0": node_json(&tree.tree_u0, &tfidf.vocabulary),
        "tree_u1": node_json(&tree.tree_u1, &tfidf.vocabulary),
        "query": { "u": u, "label": label },
    });
    Ok(out.to_string())
}

#[wasm_bindgen]
pub fn dual_curve(
    var_x: f64,
    cov_xy: f64,
    var_y: f64,
    cond_var_x: f64,
    eta_lo: f64,
    eta_hi: f64,
    n: usize,
) -> Result<String, JsError> {
    dual_curve_json(var_x, cov_xy, var_y, cond_var_x, eta_lo, eta_hi, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn primal_curve(m: usize, seed: u64, log_lo: f64, log_hi: f64, n: usize) -> Result<String, JsError> {
    primal_curve_json(m, seed, log_lo, log_hi, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fit_tree(documents: &str, labels: &str, eta: f64, k: usize, query: &str) -> Result<String, JsError> {
    tree_json(documents, labels, eta, k, query).map_err(|e| JsError::new(&e))
}

/// Bundled toy corpus, so the page works without uploads.
#[wasm_bindgen]
pub fn toy_corpus() -> String {
    include_str!("../../../data/toy_corpus.txt").to_string()
}

#[wasm_bindgen]
pub fn toy_labels() -> String {
    include_str!("../../../data/toy_labels.txt").to_string()
}
