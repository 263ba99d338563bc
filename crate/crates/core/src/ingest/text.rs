//! Short-text corpora: tokenization, tf-idf features and keyword-derived
//! binary user signals.
//!
//! Tokens are lowercase alphanumeric runs of at least two characters. No
//! stemming, no stop words.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use crate::data::{Dataset, LabeledPoint, ValueKind};
use crate::error::{Error, Result};
use crate::ingest::table::io_error;

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextCorpus {
    documents: Vec<String>,
    labels: Vec<u8>,
}

impl TextCorpus {
    pub fn new(documents: Vec<String>, labels: Vec<u8>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::Corpus("corpus is empty".into()));
        }
        if documents.len() != labels.len() {
            return Err(Error::Corpus(format!(
                "{} documents but {} labels",
                documents.len(),
                labels.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(Error::Corpus(format!("label {} of document {} is not 0 or 1", labels[i], i + 1)));
        }
        Ok(TextCorpus { documents, labels })
    }

    /// One document per line in `docs`, one `0`/`1` per line in `labels`.
    /// Blank document lines are kept (they become zero vectors).
    pub fn from_files(docs: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Self> {
        let (docs, labels) = (docs.as_ref(), labels.as_ref());
        let text = std::fs::read_to_string(docs).map_err(io_error(docs))?;
        let label_text = std::fs::read_to_string(labels).map_err(io_error(labels))?;
        let documents: Vec<String> = text.lines().map(str::to_string).collect();
        let labels = label_text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| match l.trim() {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(Error::Corpus(format!(
                    "{}: line {}: expected 0 or 1, got {other:?}",
                    labels.display(),
                    i + 1
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        TextCorpus::new(documents, labels)
    }

    /// Text and label taken from two columns of a CSV file.
    pub fn from_csv(path: impl AsRef<Path>, text_column: &str, label_column: &str) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::Reader::from_path(path).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let headers = rdr
            .headers()
            .map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?
            .clone();
        let column = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
        };
        let (ti, li) = (column(text_column)?, column(label_column)?);
        let mut documents = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|source| Error::Csv {
                path: path.to_path_buf(),
                source,
            })?;
            documents.push(rec.get(ti).unwrap_or("").to_string());
            let raw = rec.get(li).unwrap_or("");
            labels.push(match raw.trim() {
                "0" => 0,
                "1" => 1,
                _ => {
                    return Err(Error::BadCell {
                        path: path.to_path_buf(),
                        row: i + 1,
                        column: label_column.to_string(),
                        cell: raw.to_string(),
                    })
                }
            });
        }
        if documents.is_empty() {
            return Err(Error::NoDataRows { path: path.to_path_buf() });
        }
        TextCorpus::new(documents, labels)
    }

    pub fn documents(&self) -> &[String] {
        &self.documents
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Sub-corpus with the given document indices, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        TextCorpus::new(
            indices.iter().map(|&i| self.documents[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

/// Vocabulary with document frequencies, sorted by token.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    pub vocabulary: Vec<(String, usize)>,
    pub num_documents: usize,
}

impl TfidfModel {
    /// Smoothed inverse document frequency `ln((1+N)/(1+df)) + 1`.
    pub fn idf(&self, df: usize) -> f64 {
        ((1.0 + self.num_documents as f64) / (1.0 + df as f64)).ln() + 1.0
    }

    pub fn len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocabulary.is_empty()
    }

    /// L2-normalized tf-idf vector of one document. Out-of-vocabulary tokens
    /// are ignored but still count towards the document length.
    pub fn transform(&self, document: &str) -> Vec<f64> {
        let tokens = tokenize(document);
        let mut v = vec![0.0; self.vocabulary.len()];
        if tokens.is_empty() {
            return v;
        }
        let total = tokens.len() as f64;
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in &tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        for (slot, (token, df)) in v.iter_mut().zip(&self.vocabulary) {
            if let Some(&c) = counts.get(token.as_str()) {
                *slot = c as f64 / total * self.idf(*df);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    pub fn transform_all<'a>(&self, docs: impl IntoIterator<Item = &'a String>) -> Vec<Vec<f64>> {
        docs.into_iter().map(|d| self.transform(d)).collect()
    }
}

/// Fits the vocabulary on `corpus` and returns its feature matrix, one row per document.
pub fn build_tfidf(corpus: &TextCorpus) -> Result<(TfidfModel, Vec<Vec<f64>>)> {
    build_tfidf_limited(corpus, None)
}

/// [`build_tfidf`] keeping only the `max_features` tokens with the highest
/// document frequency (ties broken lexicographically).
pub fn build_tfidf_limited(corpus: &TextCorpus, max_features: Option<usize>) -> Result<(TfidfModel, Vec<Vec<f64>>)> {
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in corpus.documents() {
        let unique: BTreeSet<String> = tokenize(doc).into_iter().collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::Corpus("every document is empty after tokenization".into()));
    }
    let mut vocabulary: Vec<(String, usize)> = df.into_iter().collect();
    if let Some(limit) = max_features {
        if limit == 0 {
            return Err(Error::invalid("ingest", "max_features", "must be positive"));
        }
        if vocabulary.len() > limit {
            vocabulary.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            vocabulary.truncate(limit);
            vocabulary.sort_by(|a, b| a.0.cmp(&b.0));
        }
    }
    let model = TfidfModel {
        vocabulary,
        num_documents: corpus.len(),
    };
    let matrix = model.transform_all(corpus.documents());
    Ok((model, matrix))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSignal {
    pub keywords: Vec<String>,
    /// `1` iff the document contains at least one keyword.
    pub signals: Vec<u8>,
    /// Fewer than `k` distinct tokens occur in positive documents.
    pub truncated: bool,
}

/// Top-`k` tokens by total count over label-1 documents (ties
/// lexicographic), and the presence signal they induce on every document.
pub fn derive_keyword_signal(corpus: &TextCorpus, k: usize) -> Result<KeywordSignal> {
    if k == 0 {
        return Err(Error::invalid("ingest", "k", "must be positive"));
    }
    if !corpus.labels().contains(&1) {
        return Err(Error::Corpus("no documents with label 1 to draw keywords from".into()));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for (doc, _) in corpus.documents().iter().zip(corpus.labels()).filter(|(_, &l)| l == 1) {
        for t in tokenize(doc) {
            *counts.entry(t).or_default() += 1;
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let truncated = ranked.len() < k;
    let keywords: Vec<String> = ranked.into_iter().take(k).map(|(t, _)| t).collect();
    let signals = keyword_presence(corpus.documents(), &keywords);
    Ok(KeywordSignal {
        keywords,
        signals,
        truncated,
    })
}

/// Presence signal of `keywords` in each document.
pub fn keyword_presence<'a>(docs: impl IntoIterator<Item = &'a String>, keywords: &[String]) -> Vec<u8> {
    let set: BTreeSet<&str> = keywords.iter().map(String::as_str).collect();
    docs.into_iter()
        .map(|d| u8::from(tokenize(d).iter().any(|t| set.contains(t.as_str()))))
        .collect()
}

/// Binary dataset from feature rows, corpus labels and signals.
pub fn text_dataset(features: Vec<Vec<f64>>, labels: &[u8], signals: &[u8]) -> Result<Dataset> {
    let points = features
        .into_iter()
        .zip(labels)
        .zip(signals)
        .map(|((x, &y), &u)| LabeledPoint::new(x, f64::from(y), f64::from(u)))
        .collect();
    Dataset::new(points, ValueKind::Binary, ValueKind::Binary)
}
