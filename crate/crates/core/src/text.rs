//! Labelled text corpora and TF-IDF features.
//!
//! A corpus on disk is a directory of UTF-8 `<doc_id>.txt` files plus a
//! `labels.csv` with header `doc_id,label` and labels in `{0, 1}`.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use log::warn;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

pub const DEFAULT_MIN_DF: usize = 5;

/// Lowercases, splits on non-alphanumeric characters and drops tokens
/// shorter than two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2)
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub tokens: Vec<String>,
}

/// Documents with aligned binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    labels: Vec<u8>,
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    doc_id: String,
    label: u8,
}

impl Corpus {
    /// Builds a corpus from `(doc_id, text, label)` triples.
    pub fn from_texts<I, S, T>(items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T, u8)>,
        S: Into<String>,
        T: AsRef<str>,
    {
        let mut documents = Vec::new();
        let mut labels = Vec::new();
        for (id, text, label) in items {
            if label > 1 {
                return Err(Error::invalid(format!("label must be 0 or 1, got {label}")));
            }
            documents.push(Document {
                id: id.into(),
                tokens: tokenize(text.as_ref()),
            });
            labels.push(label);
        }
        if documents.is_empty() {
            return Err(Error::InsufficientData("corpus has no documents".into()));
        }
        Ok(Corpus { documents, labels })
    }

    /// Reads `labels.csv` and the matching `.txt` files from `dir`. Files are
    /// parsed in parallel; document order follows `labels.csv`.
    pub fn load(dir: &Path) -> Result<Self> {
        let label_path = dir.join("labels.csv");
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(&label_path)?;
        let mut rows = Vec::new();
        let mut seen = HashMap::new();
        for row in reader.deserialize() {
            let row: LabelRow = row?;
            if row.label > 1 {
                return Err(Error::Parse {
                    path: label_path.clone(),
                    message: format!("label for {} must be 0 or 1, got {}", row.doc_id, row.label),
                });
            }
            if seen.insert(row.doc_id.clone(), ()).is_some() {
                return Err(Error::Parse {
                    path: label_path.clone(),
                    message: format!("duplicate doc_id {}", row.doc_id),
                });
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::InsufficientData(format!("{} lists no documents", label_path.display())));
        }
        let documents: Result<Vec<Document>> = rows
            .par_iter()
            .map(|row| {
                let path = dir.join(format!("{}.txt", row.doc_id));
                let text = std::fs::read_to_string(&path).map_err(|e| Error::Parse {
                    path: path.clone(),
                    message: format!("labelled document unreadable: {e}"),
                })?;
                Ok(Document {
                    id: row.doc_id.clone(),
                    tokens: tokenize(&text),
                })
            })
            .collect();
        let documents = documents?;
        let on_disk = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().extension().is_some_and(|x| x == "txt"))
            .count();
        if on_disk > documents.len() {
            warn!("{} .txt files in {} have no label and were ignored", on_disk - documents.len(), dir.display());
        }
        Ok(Corpus {
            documents,
            labels: rows.iter().map(|r| r.label).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }
}

/// Token ↔ column mapping; tokens are sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(mut tokens: Vec<String>) -> Self {
        tokens.sort_unstable();
        tokens.dedup();
        Vocabulary::from_sorted(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    fn from_sorted(tokens: Vec<String>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, column: usize) -> Option<&str> {
        self.tokens.get(column).map(String::as_str)
    }

    pub fn column(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TfidfOptions {
    pub min_df: usize,
    /// `ln((1+N)/(1+df)) + 1` instead of `ln(N/df)`.
    pub smooth: bool,
}

impl Default for TfidfOptions {
    fn default() -> Self {
        TfidfOptions {
            min_df: DEFAULT_MIN_DF,
            smooth: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub vocabulary: Vocabulary,
    pub idf: Vec<f64>,
    pub n_documents: usize,
}

/// Raw TF-IDF matrix (documents × terms) with the rows that matched no term.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfMatrix {
    pub matrix: DMatrix<f64>,
    pub zero_rows: Vec<usize>,
}

impl TfidfModel {
    /// Learns the vocabulary and idf weights from `docs`. Terms with
    /// `df < min_df` or zero idf are dropped.
    pub fn fit<'a>(docs: impl IntoIterator<Item = &'a Document>, options: TfidfOptions) -> Result<Self> {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        let mut n = 0usize;
        for doc in docs {
            n += 1;
            let mut unique: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
            unique.sort_unstable();
            unique.dedup();
            for t in unique {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        if n == 0 {
            return Err(Error::InsufficientData("no documents to fit".into()));
        }
        let nf = n as f64;
        let mut tokens = Vec::new();
        let mut idf = Vec::new();
        // BTreeMap iteration is already lexicographic.
        for (t, d) in df {
            if d < options.min_df {
                continue;
            }
            let w = if options.smooth {
                ((1.0 + nf) / (1.0 + d as f64)).ln() + 1.0
            } else {
                (nf / d as f64).ln()
            };
            if w > 0.0 {
                tokens.push(t.to_string());
                idf.push(w);
            }
        }
        if tokens.is_empty() {
            return Err(Error::InsufficientData(format!(
                "vocabulary is empty after filtering (min_df = {})",
                options.min_df
            )));
        }
        Ok(TfidfModel {
            vocabulary: Vocabulary::from_sorted(tokens),
            idf,
            n_documents: n,
        })
    }

    /// `tf(t, d) · idf(t)` with raw counts; out-of-vocabulary tokens are
    /// ignored.
    pub fn transform<'a>(&self, docs: impl IntoIterator<Item = &'a Document>) -> TfidfMatrix {
        let rows: Vec<Vec<(usize, f64)>> = docs
            .into_iter()
            .map(|doc| {
                let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
                for t in &doc.tokens {
                    if let Some(c) = self.vocabulary.column(t) {
                        *counts.entry(c).or_insert(0.0) += 1.0;
                    }
                }
                counts.into_iter().map(|(c, tf)| (c, tf * self.idf[c])).collect()
            })
            .collect();
        let mut matrix = DMatrix::zeros(rows.len(), self.vocabulary.len());
        let mut zero_rows = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.is_empty() {
                zero_rows.push(i);
            }
            for &(c, v) in row {
                matrix[(i, c)] = v;
            }
        }
        if !zero_rows.is_empty() {
            warn!("{} documents contain no vocabulary term", zero_rows.len());
        }
        TfidfMatrix { matrix, zero_rows }
    }
}

/// Fits TF-IDF on the whole corpus and returns its features.
pub fn build_tfidf(corpus: &Corpus, options: TfidfOptions) -> Result<(TfidfModel, TfidfMatrix)> {
    if corpus.is_empty() {
        return Err(Error::InsufficientData("corpus is empty".into()));
    }
    let model = TfidfModel::fit(corpus.documents(), options)?;
    let features = model.transform(corpus.documents());
    Ok((model, features))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bin {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Draws `bins` disjoint train/test splits, stratified by label so each
/// part keeps the corpus class balance up to rounding.
pub fn split_bins(labels: &[u8], bins: usize, train_per_bin: usize, test_per_bin: usize, seed: u64) -> Result<Vec<Bin>> {
    let needed = bins * (train_per_bin + test_per_bin);
    if bins == 0 || train_per_bin == 0 || test_per_bin == 0 {
        return Err(Error::invalid("bins, train_per_bin and test_per_bin must be positive"));
    }
    if needed > labels.len() {
        return Err(Error::InsufficientData(format!(
            "{bins} bins of {train_per_bin}+{test_per_bin} need {needed} documents, corpus has {}",
            labels.len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let share = pos.len() as f64 / labels.len() as f64;
    let positives = |m: usize| (m as f64 * share).round() as usize;
    let (tp, sp) = (positives(train_per_bin), positives(test_per_bin));
    if bins * (tp + sp) > pos.len() || bins * (train_per_bin - tp + test_per_bin - sp) > neg.len() {
        return Err(Error::InsufficientData("not enough documents of one class for stratified bins".into()));
    }
    let (mut pi, mut ni) = (pos.into_iter(), neg.into_iter());
    let mut take = |count_pos: usize, count_neg: usize| -> Vec<usize> {
        let mut part: Vec<usize> = pi.by_ref().take(count_pos).chain(ni.by_ref().take(count_neg)).collect();
        part.shuffle(&mut rng);
        part
    };
    Ok((0..bins)
        .map(|_| Bin {
            train: take(tp, train_per_bin - tp),
            test: take(sp, test_per_bin - sp),
        })
        .collect())
}
