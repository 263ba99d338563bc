//! Model files.
//!
//! A model is a JSON document with a frozen field list (schema version 1).
//! Every float is written with 17 significant digits, so reading a model back
//! reproduces the in-memory parameters bit for bit.
//!
//! ```text
//! {
//!   "format": "eerm-model",
//!   "version": 1,
//!   "kind": "linear" | "composite-tree",
//!   "provenance": { "command", "seed", "config_sha256", "input_sha256" },
//!   "linear": { "weights", "alpha", "lambda", "schema" },            // kind = linear
//!   "tree": { "max_depth", "feature_dim", "fallback_label",
//!             "tree_u0", "tree_u1", "schema", "text" }                // kind = composite-tree
//! }
//! ```
//!
//! Tree nodes are `{"leaf": {"label", "counts"}}` or
//! `{"split": {"feature", "threshold", "left", "right"}}`; a point goes left
//! when `feature <= threshold`.

use std::path::Path;

use eerm_core::ingest::{CsvSchema, TfidfModel};
use eerm_core::{CompositeTree, LinearHypothesis, TreeNode, ValueKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const FORMAT: &str = "eerm-model";
pub const VERSION: u32 = 1;

/// Serde adapters writing `f64` as a JSON number with 17 significant digits.
pub(crate) mod f17 {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use serde_json::Number;

    pub fn number(v: f64) -> Result<Number, String> {
        if !v.is_finite() {
            return Err(format!("cannot serialize non-finite value {v}"));
        }
        format!("{v:.16e}").parse::<Number>().map_err(|e| e.to_string())
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        number(*v).map_err(serde::ser::Error::custom)?.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let n = Number::deserialize(d)?;
        n.as_f64().ok_or_else(|| D::Error::custom(format!("{n} is not a finite float")))
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let nums = v
                .iter()
                .map(|x| number(*x))
                .collect::<Result<Vec<_>, _>>()
                .map_err(serde::ser::Error::custom)?;
            nums.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Number>::deserialize(d)?
                .into_iter()
                .map(|n| n.as_f64().ok_or_else(|| D::Error::custom(format!("{n} is not a finite float"))))
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub input_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaRecord {
    pub feature_columns: Vec<String>,
    pub label_column: String,
    pub signal_column: Option<String>,
    pub label_kind: String,
    pub signal_kind: String,
}

fn kind_name(k: ValueKind) -> String {
    k.as_str().to_string()
}

fn parse_kind(field: &str, s: &str) -> Result<ValueKind, CliError> {
    match s {
        "numeric" => Ok(ValueKind::Numeric),
        "binary" => Ok(ValueKind::Binary),
        other => Err(CliError::Model(format!("field `{field}`: unknown kind {other:?}"))),
    }
}

impl SchemaRecord {
    pub fn from_schema(s: &CsvSchema) -> Self {
        SchemaRecord {
            feature_columns: s.feature_columns.clone(),
            label_column: s.label_column.clone(),
            signal_column: s.signal_column.clone(),
            label_kind: kind_name(s.label_kind),
            signal_kind: kind_name(s.signal_kind),
        }
    }

    pub fn to_schema(&self) -> Result<CsvSchema, CliError> {
        Ok(CsvSchema {
            feature_columns: self.feature_columns.clone(),
            label_column: self.label_column.clone(),
            signal_column: self.signal_column.clone(),
            label_kind: parse_kind("schema.label_kind", &self.label_kind)?,
            signal_kind: parse_kind("schema.signal_kind", &self.signal_kind)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRecord {
    #[serde(with = "f17::vec")]
    pub weights: Vec<f64>,
    #[serde(with = "f17")]
    pub alpha: f64,
    #[serde(with = "f17")]
    pub lambda: f64,
    pub schema: Option<SchemaRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafRecord {
    pub label: u8,
    pub counts: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRecord {
    pub feature: usize,
    #[serde(with = "f17")]
    pub threshold: f64,
    pub left: Box<NodeRecord>,
    pub right: Box<NodeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NodeRecord {
    Leaf(LeafRecord),
    Split(SplitRecord),
}

impl NodeRecord {
    fn from_node(n: &TreeNode) -> Self {
        match n {
            TreeNode::Leaf {
                predicted_label,
                class_counts,
            } => NodeRecord::Leaf(LeafRecord {
                label: *predicted_label,
                counts: *class_counts,
            }),
            TreeNode::Split {
                feature_index,
                threshold,
                left,
                right,
            } => NodeRecord::Split(SplitRecord {
                feature: *feature_index,
                threshold: *threshold,
                left: Box::new(NodeRecord::from_node(left)),
                right: Box::new(NodeRecord::from_node(right)),
            }),
        }
    }

    fn to_node(&self, field: &str) -> Result<TreeNode, CliError> {
        Ok(match self {
            NodeRecord::Leaf(l) => {
                if l.label > 1 {
                    return Err(CliError::Model(format!("field `{field}.leaf.label`: {} is not 0 or 1", l.label)));
                }
                TreeNode::Leaf {
                    predicted_label: l.label,
                    class_counts: l.counts,
                }
            }
            NodeRecord::Split(s) => TreeNode::Split {
                feature_index: s.feature,
                threshold: s.threshold,
                left: Box::new(s.left.to_node(&format!("{field}.split.left"))?),
                right: Box::new(s.right.to_node(&format!("{field}.split.right"))?),
            },
        })
    }
}

/// Vocabulary, document count and keywords needed to featurize new text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextRecord {
    pub vocabulary: Vec<(String, usize)>,
    pub num_documents: usize,
    pub keywords: Vec<String>,
}

impl TextRecord {
    pub fn tfidf(&self) -> TfidfModel {
        TfidfModel {
            vocabulary: self.vocabulary.clone(),
            num_documents: self.num_documents,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeRecord {
    pub max_depth: usize,
    pub feature_dim: usize,
    pub fallback_label: Option<u8>,
    pub tree_u0: NodeRecord,
    pub tree_u1: NodeRecord,
    pub schema: Option<SchemaRecord>,
    pub text: Option<TextRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Linear,
    CompositeTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArtifact {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeRecord>,
}

/// Only the header fields, read first so that a version mismatch is reported
/// as such rather than as a confusing structural error.
#[derive(Deserialize)]
struct Header {
    format: Option<String>,
    version: Option<serde_json::Value>,
}

impl ModelArtifact {
    pub fn linear(h: &LinearHypothesis, lambda: f64, schema: Option<&CsvSchema>, provenance: Provenance) -> Self {
        ModelArtifact {
            format: FORMAT.to_string(),
            version: VERSION,
            kind: ModelKind::Linear,
            provenance,
            linear: Some(LinearRecord {
                weights: h.weights.clone(),
                alpha: h.alpha,
                lambda,
                schema: schema.map(SchemaRecord::from_schema),
            }),
            tree: None,
        }
    }

    pub fn composite_tree(
        c: &CompositeTree,
        schema: Option<&CsvSchema>,
        text: Option<TextRecord>,
        provenance: Provenance,
    ) -> Self {
        ModelArtifact {
            format: FORMAT.to_string(),
            version: VERSION,
            kind: ModelKind::CompositeTree,
            provenance,
            linear: None,
            tree: Some(TreeRecord {
                max_depth: c.max_depth,
                feature_dim: c.feature_dim,
                fallback_label: c.fallback_label,
                tree_u0: NodeRecord::from_node(&c.tree_u0),
                tree_u1: NodeRecord::from_node(&c.tree_u1),
                schema: schema.map(SchemaRecord::from_schema),
                text,
            }),
        }
    }

    pub fn hypothesis(&self) -> Result<LinearHypothesis, CliError> {
        let l = self
            .linear
            .as_ref()
            .ok_or_else(|| CliError::Model("field `linear`: missing for a linear model".into()))?;
        Ok(LinearHypothesis::new(l.weights.clone(), l.alpha))
    }

    pub fn composite(&self) -> Result<CompositeTree, CliError> {
        let t = self
            .tree
            .as_ref()
            .ok_or_else(|| CliError::Model("field `tree`: missing for a composite-tree model".into()))?;
        let c = CompositeTree {
            tree_u0: t.tree_u0.to_node("tree.tree_u0")?,
            tree_u1: t.tree_u1.to_node("tree.tree_u1")?,
            max_depth: t.max_depth,
            fallback_label: t.fallback_label,
            feature_dim: t.feature_dim,
        };
        c.validate().map_err(|e| CliError::Model(format!("field `tree`: {e}")))?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Model(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Parses and validates a model. Nothing is returned unless the whole
    /// document is well formed.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let header: Header =
            serde_json::from_str(text).map_err(|e| CliError::Model(format!("corrupted model file: {e}")))?;
        match header.format.as_deref() {
            Some(FORMAT) => {}
            Some(other) => return Err(CliError::Model(format!("field `format`: expected {FORMAT:?}, got {other:?}"))),
            None => return Err(CliError::Model("field `format`: missing".into())),
        }
        match header.version.as_ref().and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(VERSION) => {}
            Some(v) => {
                return Err(CliError::Model(format!(
                    "field `version`: unsupported version {v} (this build reads {VERSION})"
                )))
            }
            None => return Err(CliError::Model("field `version`: missing or not an integer".into())),
        }
        let artifact: ModelArtifact =
            serde_json::from_str(text).map_err(|e| CliError::Model(format!("corrupted model file: {e}")))?;
        match artifact.kind {
            ModelKind::Linear => {
                let h = artifact.hypothesis()?;
                if h.weights.is_empty() {
                    return Err(CliError::Model("field `linear.weights`: empty".into()));
                }
                if artifact.tree.is_some() {
                    return Err(CliError::Model("field `tree`: unexpected in a linear model".into()));
                }
            }
            ModelKind::CompositeTree => {
                artifact.composite()?;
                if artifact.linear.is_some() {
                    return Err(CliError::Model("field `linear`: unexpected in a composite-tree model".into()));
                }
            }
        }
        Ok(artifact)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        ModelArtifact::from_json(&text).map_err(|e| match e {
            CliError::Model(msg) => CliError::Model(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn provenance() -> Provenance {
        Provenance {
            command: "fit-linear".into(),
            seed: 7,
            config_sha256: "ab".into(),
            input_sha256: "cd".into(),
        }
    }

    #[test]
    fn linear_round_trip_is_exact() {
        let h = LinearHypothesis::new(vec![0.1 + 0.2, -1.0 / 3.0, 2.6507e-300], std::f64::consts::PI);
        let a = ModelArtifact::linear(&h, 0.25, Some(&CsvSchema::numeric(&["a", "b"], "y", Some("u"))), provenance());
        let text = a.to_json().unwrap();
        assert!(text.contains("3.0000000000000004e-1"), "{text}");
        let back = ModelArtifact::from_json(&text).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.hypothesis().unwrap(), h);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let h = LinearHypothesis::affine(1.0, 2.0);
        let text = ModelArtifact::linear(&h, 0.0, None, provenance()).to_json().unwrap();
        for cut in [10, text.len() / 2, text.len() - 3] {
            assert!(ModelArtifact::from_json(&text[..cut]).is_err());
        }
    }

    #[test]
    fn version_mismatch_names_the_field() {
        let h = LinearHypothesis::affine(1.0, 2.0);
        let text = ModelArtifact::linear(&h, 0.0, None, provenance())
            .to_json()
            .unwrap()
            .replace("\"version\": 1", "\"version\": 2");
        let err = ModelArtifact::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("`version`"), "{err}");
    }

    #[test]
    fn missing_field_is_named() {
        let text = r#"{"format":"eerm-model","version":1,"kind":"linear","provenance":{"command":"x","seed":0,"config_sha256":"","input_sha256":""},"linear":{"alpha":0,"lambda":0,"schema":null}}"#;
        let err = ModelArtifact::from_json(text).unwrap_err().to_string();
        assert!(err.contains("weights"), "{err}");
    }

    #[test]
    fn tree_depth_is_validated() {
        let c = CompositeTree {
            tree_u0: TreeNode::Split {
                feature_index: 0,
                threshold: 0.5,
                left: Box::new(TreeNode::leaf([1, 0])),
                right: Box::new(TreeNode::leaf([0, 1])),
            },
            tree_u1: TreeNode::leaf([2, 1]),
            max_depth: 1,
            fallback_label: None,
            feature_dim: 1,
        };
        let text = ModelArtifact::composite_tree(&c, None, None, provenance()).to_json().unwrap();
        assert_eq!(ModelArtifact::from_json(&text).unwrap().composite().unwrap(), c);
        let bad = text.replace("\"max_depth\": 1", "\"max_depth\": 0");
        let err = ModelArtifact::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("`tree`"), "{err}");
    }
}
