//! Embedding tables, labeled corpora, tokenization, and the bridge from
//! documents to composed ball points.
//!
//! File formats:
//!
//! * embeddings: UTF-8, one `token v₁ v₂ … v_d` entry per line, fields
//!   separated by whitespace. A leading `count dim` header line (two
//!   integers) is recognized and skipped.
//! * corpus: UTF-8, one `label<TAB>text` document per line.
//!
//! Blank lines are ignored by both loaders and do not count as lines.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::{self, CompositionConfig, CompositionMethod, PointSequence};
use crate::error::{Error, Result};
use crate::gyroball::{self, BallParams, BallPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Euclidean,
    Poincare,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Self::Euclidean => "euclidean",
            Self::Poincare => "poincare",
        }
    }
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Flavor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Self::Euclidean),
            "poincare" => Ok(Self::Poincare),
            other => Err(Error::Parse(format!("unknown embedding flavor `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    /// Loading fails when more than this fraction of lines is malformed.
    pub max_malformed_fraction: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            max_malformed_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EmbeddingLoadReport {
    /// Non-blank entry lines, excluding a header.
    pub total_lines: usize,
    pub parsed: usize,
    pub malformed: usize,
    pub duplicates: usize,
    /// Poincaré vectors pulled back inside the unit ball.
    pub clamped: usize,
    pub header: bool,
}

impl EmbeddingLoadReport {
    pub fn skipped(&self) -> usize {
        self.malformed + self.duplicates
    }
}

/// Token → vector lookup with a single dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    flavor: Flavor,
    tokens: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
    report: EmbeddingLoadReport,
}

impl EmbeddingTable {
    /// Builds a table from in-memory entries, applying the same clamping
    /// and duplicate rules as the file loader.
    pub fn from_entries(flavor: Flavor, entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let dim = entries.first().ok_or(Error::Empty("embedding entries"))?.1.len();
        if dim == 0 {
            return Err(Error::Empty("embedding vector"));
        }
        let mut table = Self::empty(flavor, dim);
        for (tok, v) in entries {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("embedding vector"));
            }
            table.report.total_lines += 1;
            table.insert(tok, v);
        }
        Ok(table)
    }

    fn empty(flavor: Flavor, dim: usize) -> Self {
        Self {
            dim,
            flavor,
            tokens: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
            report: EmbeddingLoadReport::default(),
        }
    }

    fn insert(&mut self, token: String, mut v: Vec<f64>) {
        if self.index.contains_key(&token) {
            self.report.duplicates += 1;
            return;
        }
        if self.flavor == Flavor::Poincare && gyroball::norm(&v) >= 1.0 {
            v = gyroball::clamp_raw(v, &BallParams::default());
            self.report.clamped += 1;
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.data.extend(v);
        self.report.parsed += 1;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens in file order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn report(&self) -> &EmbeddingLoadReport {
        &self.report
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| self.vector(i))
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn parse_header(fields: &[&str]) -> Option<usize> {
    match fields {
        [count, dim] => {
            count.parse::<usize>().ok()?;
            dim.parse::<usize>().ok().filter(|&d| d > 0)
        }
        _ => None,
    }
}

pub fn load_embeddings(path: impl AsRef<Path>, flavor: Flavor) -> Result<EmbeddingTable> {
    load_embeddings_with(path, flavor, &LoadOptions::default())
}

pub fn load_embeddings_with(
    path: impl AsRef<Path>,
    flavor: Flavor,
    opts: &LoadOptions,
) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(BufReader::new(file), flavor, opts, path)
}

/// Parses the embedding text format from any reader; `origin` names the
/// source in error messages.
pub fn parse_embeddings<R: BufRead>(
    reader: R,
    flavor: Flavor,
    opts: &LoadOptions,
    origin: &Path,
) -> Result<EmbeddingTable> {
    let mut table: Option<EmbeddingTable> = None;
    let mut header_dim = None;
    let mut header_seen = false;
    let mut first = true;

    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if first {
            first = false;
            if let Some(d) = parse_header(&fields) {
                header_dim = Some(d);
                header_seen = true;
                continue;
            }
        }
        let t = table.get_or_insert_with(|| {
            let d = header_dim.unwrap_or(fields.len().saturating_sub(1));
            EmbeddingTable::empty(flavor, d)
        });
        t.report.total_lines += 1;

        let parsed: Option<Vec<f64>> = if fields.len() == t.dim + 1 && t.dim > 0 {
            fields[1..]
                .iter()
                .map(|s| s.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect()
        } else {
            None
        };
        match parsed {
            Some(v) => t.insert(fields[0].to_string(), v),
            None => t.report.malformed += 1,
        }
    }

    let mut table = table.ok_or(Error::Empty("embedding file"))?;
    table.report.header = header_seen;
    let r = table.report;
    if r.malformed as f64 > opts.max_malformed_fraction * r.total_lines as f64 {
        return Err(Error::TooManyMalformed {
            path: origin.to_path_buf(),
            malformed: r.malformed,
            total: r.total_lines,
            limit: opts.max_malformed_fraction,
        });
    }
    if r.malformed > 0 || r.duplicates > 0 || r.clamped > 0 {
        log::info!(
            "{}: {} entries, {} malformed, {} duplicate, {} clamped into the ball",
            origin.display(),
            r.parsed,
            r.malformed,
            r.duplicates,
            r.clamped
        );
    }
    if table.is_empty() {
        return Err(Error::Empty("embedding file"));
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self { lowercase: true }
    }
}

/// Maximal runs of alphabetic or numeric characters (Unicode properties),
/// optionally lowercased with the default Unicode case mapping.
pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    text.split(|c: char| !(c.is_alphabetic() || c.is_numeric()))
        .filter(|t| !t.is_empty())
        .map(|t| {
            if cfg.lowercase {
                t.to_lowercase()
            } else {
                t.to_string()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CorpusLoadReport {
    pub total_lines: usize,
    pub parsed: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCorpus {
    records: Vec<Record>,
    labels: Vec<String>,
    report: CorpusLoadReport,
}

impl LabeledCorpus {
    pub fn from_records(records: Vec<Record>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Empty("corpus"));
        }
        let labels: BTreeSet<&str> = records.iter().map(|r| r.label.as_str()).collect();
        let labels = labels.into_iter().map(str::to_string).collect();
        let n = records.len();
        Ok(Self {
            records,
            labels,
            report: CorpusLoadReport {
                total_lines: n,
                parsed: n,
                rejected: 0,
            },
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Sorted label set; a label's position is its class id.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn report(&self) -> &CorpusLoadReport {
        &self.report
    }

    pub fn class_ids(&self) -> Vec<usize> {
        self.records
            .iter()
            .map(|r| {
                self.labels
                    .binary_search(&r.label)
                    .expect("label set built from records")
            })
            .collect()
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<LabeledCorpus> {
    load_corpus_with(path, &LoadOptions::default())
}

pub fn load_corpus_with(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<LabeledCorpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut report = CorpusLoadReport::default();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        report.total_lines += 1;
        match line.split_once('\t') {
            Some((label, text)) if !label.trim().is_empty() => {
                records.push(Record {
                    label: label.trim().to_string(),
                    text: text.to_string(),
                });
                report.parsed += 1;
            }
            _ => report.rejected += 1,
        }
    }
    if report.rejected as f64 > opts.max_malformed_fraction * report.total_lines as f64 {
        return Err(Error::TooManyMalformed {
            path: path.to_path_buf(),
            malformed: report.rejected,
            total: report.total_lines,
            limit: opts.max_malformed_fraction,
        });
    }
    if report.rejected > 0 {
        log::warn!("{}: rejected {} lines without a TAB", path.display(), report.rejected);
    }
    let mut corpus = LabeledCorpus::from_records(records)?;
    corpus.report = report;
    Ok(corpus)
}

/// In-vocabulary tokens of one document as a weight-1 point sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DocPoints {
    /// `None` for empty or all-OOV documents.
    pub sequence: Option<PointSequence>,
    pub oov: usize,
}

impl DocPoints {
    pub fn is_empty(&self) -> bool {
        self.sequence.is_none()
    }
}

pub fn doc_to_points<S: AsRef<str>>(tokens: &[S], table: &EmbeddingTable) -> Result<DocPoints> {
    let ball = BallParams::default();
    let mut points = Vec::with_capacity(tokens.len());
    let mut oov = 0;
    for t in tokens {
        match table.get(t.as_ref()) {
            Some(v) => points.push(BallPoint::new(v.to_vec(), &ball)?),
            None => oov += 1,
        }
    }
    let sequence = if points.is_empty() {
        None
    } else {
        Some(PointSequence::uniform(points)?)
    };
    Ok(DocPoints { sequence, oov })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RepresentationDiagnostics {
    /// Documents with no in-vocabulary token, represented by the origin.
    pub empty_documents: Vec<usize>,
    pub total_tokens: usize,
    pub oov_tokens: usize,
}

impl RepresentationDiagnostics {
    pub fn oov_rate(&self) -> f64 {
        if self.total_tokens == 0 {
            0.0
        } else {
            self.oov_tokens as f64 / self.total_tokens as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRepresentation {
    /// One composed vector per document, in corpus order.
    pub vectors: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    pub diagnostics: RepresentationDiagnostics,
}

/// Composes every document of `corpus` with `method`.
///
/// Hyperbolic methods require Poincaré embeddings. Euclidean embeddings are
/// only averaged (`emean`) and are not constrained to the ball.
pub fn represent_corpus(
    corpus: &LabeledCorpus,
    table: &EmbeddingTable,
    method: CompositionMethod,
    cfg: &CompositionConfig,
    tokenizer: &TokenizerConfig,
) -> Result<CorpusRepresentation> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    if table.flavor() == Flavor::Euclidean && method.is_hyperbolic() {
        return Err(Error::FlavorMismatch {
            method: method.to_string(),
        });
    }
    let dim = table.dim();
    let per_doc: Vec<(Option<Vec<f64>>, usize, usize)> = corpus
        .records()
        .par_iter()
        .map(|r| -> Result<_> {
            let tokens = tokenize(&r.text, tokenizer);
            let n_tokens = tokens.len();
            let (v, oov) = match table.flavor() {
                Flavor::Euclidean => {
                    let hits: Vec<&[f64]> = tokens.iter().filter_map(|t| table.get(t)).collect();
                    let v = (!hits.is_empty()).then(|| {
                        let mut acc = vec![0.0; dim];
                        for h in &hits {
                            acc.iter_mut().zip(*h).for_each(|(a, x)| *a += x);
                        }
                        acc.iter_mut().for_each(|a| *a /= hits.len() as f64);
                        acc
                    });
                    (v, n_tokens - hits.len())
                }
                Flavor::Poincare => {
                    let doc = doc_to_points(&tokens, table)?;
                    let v = doc
                        .sequence
                        .as_ref()
                        .map(|s| composition::compose(method, s, cfg).into_coords());
                    (v, doc.oov)
                }
            };
            Ok((v, n_tokens, oov))
        })
        .collect::<Result<_>>()?;

    let mut diagnostics = RepresentationDiagnostics::default();
    let mut vectors = Vec::with_capacity(per_doc.len());
    for (i, (v, n_tokens, oov)) in per_doc.into_iter().enumerate() {
        diagnostics.total_tokens += n_tokens;
        diagnostics.oov_tokens += oov;
        vectors.push(v.unwrap_or_else(|| {
            diagnostics.empty_documents.push(i);
            vec![0.0; dim]
        }));
    }
    if !diagnostics.empty_documents.is_empty() {
        log::warn!(
            "{} documents had no in-vocabulary tokens and are represented by the origin",
            diagnostics.empty_documents.len()
        );
    }
    Ok(CorpusRepresentation {
        vectors,
        labels: corpus.class_ids(),
        class_names: corpus.labels().to_vec(),
        diagnostics,
    })
}
