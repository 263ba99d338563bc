use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use eerm_core::dtree::fit_eerm_tree;
use eerm_core::ingest::{
    build_tfidf_limited, derive_keyword_signal, keyword_presence, load_csv, synth_gaussian, text_dataset,
    train_test_indices, weather_signal, write_csv, CsvColumns, CsvSchema, TextCorpus,
};
use eerm_core::linreg::{tradeoff_curve_dual, tradeoff_curve_primal};
use eerm_core::moments::entropy_estimate_linear;
use eerm_core::{accuracy, empirical_risk, estimate_moments, fit_primal, Dataset, TradeoffPoint, ValueKind};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::artifact::{f17, ModelArtifact, ModelKind, Provenance, SchemaRecord, TextRecord};
use crate::config::{
    output_path, parse_grid, with_suffix, Command, CorpusArgs, CurveDualArgs, CurveLinearArgs, EvaluateArgs,
    FitLinearArgs, FitTreeArgs, RunConfig, SynthArgs, TableArgs,
};
use crate::error::CliError;

/// Identifies one invocation in every file it writes.
struct Stamp {
    command: &'static str,
    seed: u64,
    input_sha256: String,
    config_sha256: String,
}

impl Stamp {
    fn new(cfg: &RunConfig, seed: u64, inputs: &[&Path]) -> Result<Self, CliError> {
        let config = serde_json::to_vec(&cfg.command).map_err(|e| CliError::config(e.to_string()))?;
        Ok(Stamp {
            command: cfg.command.name(),
            seed,
            input_sha256: fingerprint(inputs)?,
            config_sha256: hex::encode(Sha256::digest(&config)),
        })
    }

    fn comment(&self) -> String {
        format!(
            "seed={} input_sha256={} config_sha256={}",
            self.seed, self.input_sha256, self.config_sha256
        )
    }

    fn provenance(&self) -> Provenance {
        Provenance {
            command: self.command.to_string(),
            seed: self.seed,
            config_sha256: self.config_sha256.clone(),
            input_sha256: self.input_sha256.clone(),
        }
    }
}

/// SHA-256 over the concatenated bytes of the input files, or `none`.
pub fn fingerprint(paths: &[&Path]) -> Result<String, CliError> {
    if paths.is_empty() {
        return Ok("none".to_string());
    }
    let mut h = Sha256::new();
    for p in paths {
        let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

/// 17 significant digits; non-finite values are an error.
pub fn fmt17(what: &str, v: f64) -> Result<String, CliError> {
    if !v.is_finite() {
        return Err(CliError::Compute(eerm_core::Error::NonFinite {
            module: "cli",
            what: format!("{what} = {v}"),
        }));
    }
    Ok(format!("{v:.16e}"))
}

fn json17(what: &str, v: f64) -> Result<Value, CliError> {
    f17::number(v)
        .map(Value::Number)
        .map_err(|e| CliError::Compute(eerm_core::Error::NonFinite {
            module: "cli",
            what: format!("{what}: {e}"),
        }))
}

fn write_output(path: &Path, contents: &str) -> Result<PathBuf, CliError> {
    let path = output_path(path);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn csv_table(stamp: &Stamp, header: &[&str], rows: &[Vec<(&str, f64)>]) -> Result<String, CliError> {
    let mut s = format!("# {}\n{}\n", stamp.comment(), header.join(","));
    for row in rows {
        let cells = row.iter().map(|(name, v)| fmt17(name, *v)).collect::<Result<Vec<_>, _>>()?;
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    Ok(s)
}

fn curve_csv(stamp: &Stamp, curve: &[TradeoffPoint]) -> Result<String, CliError> {
    let rows: Vec<Vec<(&str, f64)>> = curve
        .iter()
        .map(|p| vec![("control", p.control), ("risk", p.risk), ("entropy", p.entropy), ("w1", p.w1), ("w0", p.w0)])
        .collect();
    csv_table(stamp, &["control", "risk", "entropy", "w1", "w0"], &rows)
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::config(msg()))
    }
}

fn check_noise(noise_std: Option<f64>, signal: Option<&String>) -> Result<(), CliError> {
    if let Some(s) = noise_std {
        require(s.is_finite() && s >= 0.0, || format!("--noise-std must be finite and >= 0, got {s}"))?;
        require(signal.is_none(), || "--signal and --noise-std are mutually exclusive".into())?;
    }
    Ok(())
}

fn load_table(schema: &CsvSchema, input: &Path, noise_std: Option<f64>, seed: u64) -> Result<Dataset, CliError> {
    let d = load_csv(input, schema)?;
    Ok(match noise_std {
        Some(s) => weather_signal(&d, s, seed)?,
        None => d,
    })
}

fn table_schema(t: &TableArgs) -> Result<CsvSchema, CliError> {
    check_noise(t.noise_std, t.signal.as_ref())?;
    let features: Vec<&str> = t.features.iter().map(String::as_str).collect();
    let schema = CsvSchema::numeric(&features, &t.label, t.signal.as_deref());
    schema.validate().map_err(|e| CliError::config(e.to_string()))?;
    Ok(schema)
}

fn load_corpus(c: &CorpusArgs) -> Result<TextCorpus, CliError> {
    Ok(match (&c.corpus, &c.labels, &c.corpus_csv) {
        (Some(docs), Some(labels), None) => TextCorpus::from_files(docs, labels)?,
        (None, None, Some(path)) => TextCorpus::from_csv(path, &c.text_column, &c.label_column)?,
        _ => return Err(CliError::config("give either --corpus with --labels, or --corpus-csv")),
    })
}

pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    match &cfg.command {
        Command::Synth(a) => synth(cfg, a),
        Command::FitLinear(a) => fit_linear(cfg, a),
        Command::CurveLinear(a) => curve_linear(cfg, a),
        Command::CurveDual(a) => curve_dual(cfg, a),
        Command::FitTree(a) => fit_tree(cfg, a),
        Command::Evaluate(a) => evaluate(cfg, a),
    }
}

fn synth(cfg: &RunConfig, a: &SynthArgs) -> Result<Vec<PathBuf>, CliError> {
    require(a.m > 0, || "--m must be positive".into())?;
    let mom = a.moments.moments();
    mom.validate().map_err(|e| CliError::config(e.to_string()))?;
    let stamp = Stamp::new(cfg, a.seed, &[])?;
    let d = synth_gaussian(&mom, a.m, a.seed)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &d, &CsvColumns::default_for(1), &[stamp.comment()])
        .map_err(|e| CliError::io(&a.out, e))?;
    let text = String::from_utf8(buf).expect("csv output is ASCII");
    Ok(vec![write_output(&a.out, &text)?])
}

fn fit_linear(cfg: &RunConfig, a: &FitLinearArgs) -> Result<Vec<PathBuf>, CliError> {
    let schema = table_schema(&a.table)?;
    require(a.lambda.is_finite() && a.lambda >= 0.0, || {
        format!("--lambda must be finite and >= 0, got {}", a.lambda)
    })?;
    let stamp = Stamp::new(cfg, a.seed, &[&a.table.input])?;
    let d = load_table(&schema, &a.table.input, a.table.noise_std, a.seed)?;
    let sol = fit_primal(&d, a.lambda)?;

    let model = ModelArtifact::linear(&sol.hypothesis, a.lambda, Some(&schema), stamp.provenance());
    let metrics = csv_table(
        &stamp,
        &["lambda", "empirical_risk", "entropy_estimate", "alpha", "objective"],
        &[vec![
            ("lambda", sol.lambda),
            ("empirical_risk", sol.empirical_risk),
            ("entropy_estimate", sol.entropy_estimate),
            ("alpha", sol.hypothesis.alpha),
            ("objective", sol.objective_value),
        ]],
    )?;
    let metrics_path = a.metrics.clone().unwrap_or_else(|| with_suffix(&a.out, ".metrics.csv"));
    Ok(vec![write_output(&a.out, &model.to_json()?)?, write_output(&metrics_path, &metrics)?])
}

fn curve_linear(cfg: &RunConfig, a: &CurveLinearArgs) -> Result<Vec<PathBuf>, CliError> {
    let schema = table_schema(&a.table)?;
    let lambdas = parse_grid("lambdas", &a.lambdas)?;
    require(lambdas[0] >= 0.0, || "--lambdas values must be >= 0".into())?;
    let stamp = Stamp::new(cfg, a.seed, &[&a.table.input])?;
    let d = load_table(&schema, &a.table.input, a.table.noise_std, a.seed)?;
    let curve = tradeoff_curve_primal(&d, &lambdas)?;
    Ok(vec![write_output(&a.out, &curve_csv(&stamp, &curve)?)?])
}

fn curve_dual(cfg: &RunConfig, a: &CurveDualArgs) -> Result<Vec<PathBuf>, CliError> {
    let etas = parse_grid("etas", &a.etas)?;
    let inputs: Vec<&Path> = a.input.iter().map(PathBuf::as_path).collect();
    let stamp = Stamp::new(cfg, a.seed, &inputs)?;
    let mom = match &a.input {
        Some(path) => {
            let schema = CsvSchema::numeric(&[&a.feature], &a.label, Some(&a.signal));
            schema.validate().map_err(|e| CliError::config(e.to_string()))?;
            estimate_moments(&load_csv(path, &schema)?)?
        }
        None => {
            let mom = a.moments.moments();
            mom.validate().map_err(|e| CliError::config(e.to_string()))?;
            mom
        }
    };
    let curve = tradeoff_curve_dual(&mom, &etas)?;
    Ok(vec![write_output(&a.out, &curve_csv(&stamp, &curve)?)?])
}

fn majority_label(labels: &[u8]) -> u8 {
    let ones = labels.iter().filter(|&&l| l == 1).count();
    u8::from(2 * ones > labels.len())
}

fn label_share(labels: &[u8], label: u8) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels.iter().filter(|&&l| l == label).count() as f64 / labels.len() as f64
}

fn fit_tree(cfg: &RunConfig, a: &FitTreeArgs) -> Result<Vec<PathBuf>, CliError> {
    require(a.eta.is_finite() && a.eta >= 0.0, || format!("--eta must be finite and >= 0, got {}", a.eta))?;
    require(a.k > 0, || "--k must be positive".into())?;
    require(a.test_fraction > 0.0 && a.test_fraction < 1.0, || {
        format!("--test-fraction must lie in (0, 1), got {}", a.test_fraction)
    })?;
    require(a.max_features != Some(0), || "--max-features must be positive".into())?;
    let stamp = Stamp::new(cfg, a.seed, &a.corpus.paths()?)?;

    let corpus = load_corpus(&a.corpus)?;
    let (train_idx, test_idx) = train_test_indices(corpus.len(), a.test_fraction, a.seed)?;
    let train = corpus.select(&train_idx)?;
    let test = corpus.select(&test_idx)?;

    let (tfidf, x_train) = build_tfidf_limited(&train, a.max_features)?;
    let kw = derive_keyword_signal(&train, a.k)?;
    let d_train = text_dataset(x_train, train.labels(), &kw.signals)?;
    let tree = fit_eerm_tree(&d_train, a.eta)?;

    let u_test = keyword_presence(test.documents(), &kw.keywords);
    let d_test = text_dataset(tfidf.transform_all(test.documents()), test.labels(), &u_test)?;
    let train_acc = accuracy(&d_train, &tree)?;
    let test_acc = accuracy(&d_test, &tree)?;
    let baseline = label_share(test.labels(), majority_label(train.labels()));

    let text = TextRecord {
        vocabulary: tfidf.vocabulary.clone(),
        num_documents: tfidf.num_documents,
        keywords: kw.keywords.clone(),
    };
    let model = ModelArtifact::composite_tree(&tree, None, Some(text), stamp.provenance());
    let report = json!({
        "seed": stamp.seed,
        "input_sha256": stamp.input_sha256,
        "config_sha256": stamp.config_sha256,
        "eta": json17("eta", a.eta)?,
        "d_max": tree.max_depth,
        "depth": tree.depth(),
        "depth_u0": tree.tree_u0.depth(),
        "depth_u1": tree.tree_u1.depth(),
        "fallback_label": tree.fallback_label,
        "keywords": kw.keywords,
        "keywords_truncated": kw.truncated,
        "vocabulary_size": tfidf.len(),
        "train_size": train.len(),
        "test_size": test.len(),
        "train_accuracy": json17("train_accuracy", train_acc)?,
        "test_accuracy": json17("test_accuracy", test_acc)?,
        "majority_baseline": json17("majority_baseline", baseline)?,
    });
    let mut report_text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Model(e.to_string()))?;
    report_text.push('\n');
    let report_path = a.report.clone().unwrap_or_else(|| with_suffix(&a.out, ".report.json"));
    Ok(vec![write_output(&a.out, &model.to_json()?)?, write_output(&report_path, &report_text)?])
}

/// Columns for `evaluate`: flags first, then the model's recorded schema,
/// then the `x`/`y`/`u` defaults.
fn eval_schema(a: &EvaluateArgs, recorded: Option<&SchemaRecord>, kind: ValueKind) -> Result<CsvSchema, CliError> {
    check_noise(a.noise_std, a.signal.as_ref())?;
    let base = match recorded {
        Some(r) => r.to_schema()?,
        None => CsvSchema {
            feature_columns: vec!["x".into()],
            label_column: "y".into(),
            signal_column: Some("u".into()),
            label_kind: kind,
            signal_kind: kind,
        },
    };
    let signal_column = match (&a.signal, a.noise_std) {
        (Some(s), _) => Some(s.clone()),
        (None, Some(_)) => None,
        (None, None) => base.signal_column,
    };
    let schema = CsvSchema {
        feature_columns: a.features.clone().unwrap_or(base.feature_columns),
        label_column: a.label.clone().unwrap_or(base.label_column),
        signal_column,
        label_kind: kind,
        signal_kind: kind,
    };
    schema.validate().map_err(|e| CliError::config(e.to_string()))?;
    Ok(schema)
}

fn evaluate(cfg: &RunConfig, a: &EvaluateArgs) -> Result<Vec<PathBuf>, CliError> {
    let model = ModelArtifact::read(&a.model)?;
    let text_model = model.tree.as_ref().and_then(|t| t.text.as_ref());
    let data_paths: Vec<&Path> = if text_model.is_some() {
        a.corpus.paths()?
    } else {
        let input = a
            .input
            .as_deref()
            .ok_or_else(|| CliError::config("--input is required for this model"))?;
        vec![input]
    };
    let mut inputs = vec![a.model.as_path()];
    inputs.extend(data_paths);
    let stamp = Stamp::new(cfg, a.seed, &inputs)?;

    let out = match model.kind {
        ModelKind::Linear => {
            let h = model.hypothesis()?;
            let recorded = model.linear.as_ref().and_then(|l| l.schema.as_ref());
            let schema = eval_schema(a, recorded, ValueKind::Numeric)?;
            let input = a.input.as_deref().expect("checked above");
            let d = load_table(&schema, input, a.noise_std, a.seed)?;
            let risk = empirical_risk(&d, &h)?;
            let entropy = entropy_estimate_linear(&d, &h)?.value;
            csv_table(
                &stamp,
                &["empirical_risk", "entropy_estimate"],
                &[vec![("empirical_risk", risk), ("entropy_estimate", entropy)]],
            )?
        }
        ModelKind::CompositeTree => {
            let tree = model.composite()?;
            let d = match text_model {
                Some(t) => {
                    let corpus = load_corpus(&a.corpus)?;
                    let u = keyword_presence(corpus.documents(), &t.keywords);
                    text_dataset(t.tfidf().transform_all(corpus.documents()), corpus.labels(), &u)?
                }
                None => {
                    let recorded = model.tree.as_ref().and_then(|t| t.schema.as_ref());
                    let schema = eval_schema(a, recorded, ValueKind::Binary)?;
                    load_table(&schema, a.input.as_deref().expect("checked above"), None, a.seed)?
                }
            };
            let labels: Vec<u8> = d.points().iter().map(|p| u8::from(p.label == 1.0)).collect();
            let acc = accuracy(&d, &tree)?;
            let baseline = label_share(&labels, majority_label(&labels));
            csv_table(
                &stamp,
                &["accuracy", "majority_baseline"],
                &[vec![("accuracy", acc), ("majority_baseline", baseline)]],
            )?
        }
    };
    Ok(vec![write_output(&a.out, &out)?])
}

/// Collapses a diagnostic to one line.
pub fn one_line(msg: &str) -> String {
    let mut s = String::new();
    for (i, part) in msg.lines().map(str::trim).filter(|l| !l.is_empty()).enumerate() {
        if i > 0 {
            s.push_str("; ");
        }
        let _ = write!(s, "{part}");
    }
    s
}
