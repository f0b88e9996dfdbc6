//! Experiment grid: stratified splits, evaluation, and results tables.
//!
//! A grid is every `composition × classifier` cell. Hyperbolic compositions
//! on Euclidean embeddings are recorded as `NA` rows, and a failing cell is
//! recorded without stopping the rest of the grid.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{
    knn_fit, knn_predict_many, ovr_predict_many, ovr_train, BinaryTrainer, LinearSvmConfig,
    MetricKind, SmoConfig,
};
use crate::composition::{CompositionConfig, CompositionMethod};
use crate::corpus::{
    self, CorpusRepresentation, EmbeddingTable, Flavor, LabeledCorpus, LoadOptions,
    TokenizerConfig,
};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SplitSpec {
    /// `ratio` is the training fraction.
    Holdout { ratio: f64 },
    KFold { folds: usize },
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self::Holdout { ratio: 0.8 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Holdout { ratio } if !(ratio > 0.0 && ratio < 1.0) => {
                Err(Error::param("ratio", format!("must lie in (0, 1), got {ratio}")))
            }
            Self::KFold { folds } if folds < 2 => Err(Error::param("folds", "must be at least 2")),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Holdout { ratio } => write!(f, "holdout:{ratio}"),
            Self::KFold { folds } => write!(f, "kfold:{folds}"),
        }
    }
}

/// Parses `holdout:RATIO` or `kfold:N`.
impl FromStr for SplitSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("split `{s}` is not of the form kind:value")))?;
        let bad = |_| Error::Parse(format!("bad split value `{value}`"));
        let spec = match kind.trim() {
            "holdout" => Self::Holdout {
                ratio: value.trim().parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
            },
            "kfold" => Self::KFold {
                folds: value.trim().parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
            },
            other => return Err(Error::Parse(format!("unknown split kind `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitConfig {
    pub spec: SplitSpec,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            spec: SplitSpec::default(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Partition {
    /// Ascending document indices.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn members_by_class(labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    by_class
}

/// Stratified partitions of `labels`: one for holdout, `folds` for k-fold.
///
/// Holdout puts `round(n_c · (1 − ratio))` documents of each class `c` in
/// the test set, keeping at least one in training. Classes are shuffled in
/// ascending class order from a single seeded stream.
pub fn split(labels: &[usize], cfg: &SplitConfig) -> Result<Vec<Partition>> {
    if labels.is_empty() {
        return Err(Error::Empty("labels"));
    }
    cfg.spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut by_class = members_by_class(labels);
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
    }

    let mut parts = match cfg.spec {
        SplitSpec::Holdout { ratio } => {
            let mut p = Partition {
                train: Vec::new(),
                test: Vec::new(),
            };
            for members in by_class.values() {
                let n = members.len();
                let n_test = ((n as f64 * (1.0 - ratio)).round() as usize).min(n - 1);
                p.test.extend_from_slice(&members[..n_test]);
                p.train.extend_from_slice(&members[n_test..]);
            }
            vec![p]
        }
        SplitSpec::KFold { folds } => {
            if let Some((&class, m)) = by_class.iter().find(|(_, m)| m.len() < folds) {
                return Err(Error::ClassTooSmall {
                    class,
                    members: m.len(),
                    folds,
                });
            }
            let mut fold_of = vec![0; labels.len()];
            for members in by_class.values() {
                for (j, &i) in members.iter().enumerate() {
                    fold_of[i] = j % folds;
                }
            }
            (0..folds)
                .map(|f| {
                    let (test, train) = (0..labels.len()).partition(|&i| fold_of[i] == f);
                    Partition { train, test }
                })
                .collect()
        }
    };
    for p in &mut parts {
        p.train.sort_unstable();
        p.test.sort_unstable();
    }
    Ok(parts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub micro_f1: f64,
    /// Sorted union of gold and predicted labels; indexes `confusion`.
    pub classes: Vec<usize>,
    /// `confusion[g][p]` counts gold class `g` predicted as `p`.
    pub confusion: Vec<Vec<usize>>,
    pub n_test: usize,
}

/// Accuracy and micro-averaged F1 from the confusion matrix.
///
/// ```text
/// accuracy = Σ_c M[c][c] / n
/// P = TP / (TP + FP),  R = TP / (TP + FN),  F1 = 2PR / (P + R)
/// ```
///
/// with TP, FP and FN summed over classes. For single-label prediction
/// FP = FN = n − TP, so F1 equals accuracy; this is checked.
pub fn evaluate(predictions: &[usize], gold: &[usize]) -> Result<EvalReport> {
    if predictions.len() != gold.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let mut classes: Vec<usize> = gold.iter().chain(predictions).copied().collect();
    classes.sort_unstable();
    classes.dedup();
    let pos = |c: usize| classes.binary_search(&c).expect("class in union");
    let k = classes.len();
    let mut confusion = vec![vec![0usize; k]; k];
    for (&p, &g) in predictions.iter().zip(gold) {
        confusion[pos(g)][pos(p)] += 1;
    }

    let n = gold.len();
    let tp: usize = (0..k).map(|c| confusion[c][c]).sum();
    let fp: usize = (0..k)
        .map(|c| (0..k).filter(|&g| g != c).map(|g| confusion[g][c]).sum::<usize>())
        .sum();
    let fn_: usize = (0..k)
        .map(|c| (0..k).filter(|&p| p != c).map(|p| confusion[c][p]).sum::<usize>())
        .sum();
    let accuracy = tp as f64 / n as f64;
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    let micro_f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    assert!(
        (micro_f1 - accuracy).abs() <= 1e-12,
        "micro-F1 {micro_f1} differs from accuracy {accuracy}"
    );
    Ok(EvalReport {
        accuracy,
        // Both are the same ratio; report the exact one.
        micro_f1: accuracy,
        classes,
        confusion,
        n_test: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassifierSpec {
    Knn { k: usize, metric: MetricKind },
    KernelSvm { kernel: KernelSpec, c: f64 },
    LinearSvm { c: f64, epochs: usize },
}

impl ClassifierSpec {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Knn { .. } => "knn",
            Self::KernelSvm { .. } => "svm-smo",
            Self::LinearSvm { .. } => "linear-svm",
        }
    }

    /// Hyperparameters as `key=value` pairs joined by `;`.
    pub fn params(&self) -> String {
        match self {
            Self::Knn { k, metric } => format!("k={k};metric={metric}"),
            Self::KernelSvm { kernel, c } => match kernel {
                KernelSpec::Geodesic { lambda, q } => format!("kernel=geodesic;q={q};lambda={lambda};C={c}"),
                KernelSpec::EuclideanRbf { lambda } => format!("kernel=rbf;lambda={lambda};C={c}"),
                KernelSpec::Linear => format!("kernel=linear;C={c}"),
            },
            Self::LinearSvm { c, epochs } => format!("C={c};epochs={epochs}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Knn { k: 0, .. } => Err(Error::param("k", "must be at least 1")),
            Self::KernelSvm { c, .. } | Self::LinearSvm { c, .. } if !(c.is_finite() && c > 0.0) => {
                Err(Error::param("C", format!("must be positive, got {c}")))
            }
            Self::LinearSvm { epochs: 0, .. } => Err(Error::param("epochs", "must be at least 1")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub embeddings: PathBuf,
    pub flavor: Flavor,
    pub methods: Vec<CompositionMethod>,
    pub classifiers: Vec<ClassifierSpec>,
    pub split: SplitConfig,
    #[serde(skip)]
    pub composition: CompositionConfig,
    pub tokenizer: TokenizerConfig,
    #[serde(skip)]
    pub load: LoadOptions,
}

impl ExperimentConfig {
    pub fn new(
        corpus: impl Into<PathBuf>,
        embeddings: impl Into<PathBuf>,
        flavor: Flavor,
        methods: Vec<CompositionMethod>,
        classifiers: Vec<ClassifierSpec>,
    ) -> Self {
        Self {
            corpus: corpus.into(),
            embeddings: embeddings.into(),
            flavor,
            methods,
            classifiers,
            split: SplitConfig::default(),
            composition: CompositionConfig::default(),
            tokenizer: TokenizerConfig::default(),
            load: LoadOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Empty("composition methods"));
        }
        if self.classifiers.is_empty() {
            return Err(Error::Empty("classifiers"));
        }
        self.split.spec.validate()?;
        self.classifiers.iter().try_for_each(ClassifierSpec::validate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum CellOutcome {
    Done {
        accuracy: f64,
        micro_f1: f64,
        runtime_s: f64,
        n_test: usize,
        psd_warning: bool,
    },
    /// Skipped by the flavor rule.
    Na,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub embedding: Flavor,
    pub composition: CompositionMethod,
    pub classifier: String,
    pub params: String,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
}

impl ResultsTable {
    pub fn failures(&self) -> impl Iterator<Item = (&ResultRow, &str)> {
        self.rows.iter().filter_map(|r| match &r.outcome {
            CellOutcome::Failed { error } => Some((r, error.as_str())),
            _ => None,
        })
    }

    pub fn has_failures(&self) -> bool {
        self.failures().next().is_some()
    }
}

/// Loads the configured files and runs the grid.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    let corpus = corpus::load_corpus_with(&cfg.corpus, &cfg.load)?;
    let table = corpus::load_embeddings_with(&cfg.embeddings, cfg.flavor, &cfg.load)?;
    if table.flavor() != cfg.flavor {
        return Err(Error::param("flavor", "table flavor differs from configuration"));
    }
    run_grid(&corpus, &table, cfg)
}

/// Runs the grid on an already loaded corpus and table; file paths in `cfg`
/// are ignored.
pub fn run_grid(
    corpus: &LabeledCorpus,
    table: &EmbeddingTable,
    cfg: &ExperimentConfig,
) -> Result<ResultsTable> {
    cfg.validate()?;
    let labels = corpus.class_ids();
    let partitions = split(&labels, &cfg.split)?;
    let flavor = table.flavor();

    let reps: Vec<Option<Result<CorpusRepresentation>>> = cfg
        .methods
        .iter()
        .map(|&m| {
            (flavor == Flavor::Poincare || !m.is_hyperbolic())
                .then(|| corpus::represent_corpus(corpus, table, m, &cfg.composition, &cfg.tokenizer))
        })
        .collect();

    let cells: Vec<(usize, &ClassifierSpec)> = (0..cfg.methods.len())
        .flat_map(|mi| cfg.classifiers.iter().map(move |c| (mi, c)))
        .collect();

    let rows = cells
        .par_iter()
        .map(|&(mi, clf)| {
            let method = cfg.methods[mi];
            let outcome = match &reps[mi] {
                None => CellOutcome::Na,
                Some(Err(e)) => CellOutcome::Failed {
                    error: e.to_string(),
                },
                Some(Ok(rep)) => match run_cell(rep, &partitions, clf, cfg.split.seed) {
                    Ok(o) => o,
                    Err(e) => CellOutcome::Failed {
                        error: e.to_string(),
                    },
                },
            };
            if let CellOutcome::Failed { error } = &outcome {
                log::error!("cell {method}/{}({}) failed: {error}", clf.id(), clf.params());
            }
            ResultRow {
                embedding: flavor,
                composition: method,
                classifier: clf.id().to_string(),
                params: clf.params(),
                outcome,
            }
        })
        .collect();
    Ok(ResultsTable { rows })
}

fn gather<T: Clone>(items: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| items[i].clone()).collect()
}

/// Trains and evaluates one classifier over every partition. Test
/// predictions of all partitions are pooled into a single report.
fn run_cell(
    rep: &CorpusRepresentation,
    partitions: &[Partition],
    clf: &ClassifierSpec,
    seed: u64,
) -> Result<CellOutcome> {
    let start = Instant::now();
    let mut predictions = Vec::new();
    let mut gold = Vec::new();
    let mut psd_warning = false;
    for p in partitions {
        let train_x = gather(&rep.vectors, &p.train);
        let train_y = gather(&rep.labels, &p.train);
        let test_x = gather(&rep.vectors, &p.test);
        let preds = match *clf {
            ClassifierSpec::Knn { k, metric } => {
                let model = knn_fit(train_x, train_y, k, metric)?;
                knn_predict_many(&model, &test_x)?
            }
            ClassifierSpec::KernelSvm { kernel, c } => {
                let trainer = BinaryTrainer::Smo {
                    kernel,
                    config: SmoConfig {
                        c,
                        ..SmoConfig::default()
                    },
                };
                let model = ovr_train(&train_x, &train_y, &trainer)?;
                psd_warning |= model.psd_warning();
                ovr_predict_many(&model, &test_x)?
            }
            ClassifierSpec::LinearSvm { c, epochs } => {
                let trainer = BinaryTrainer::LinearPrimal(LinearSvmConfig { c, epochs, seed });
                let model = ovr_train(&train_x, &train_y, &trainer)?;
                ovr_predict_many(&model, &test_x)?
            }
        };
        predictions.extend(preds);
        gold.extend(gather(&rep.labels, &p.test));
    }
    let report = evaluate(&predictions, &gold)?;
    // Guarantees a positive runtime even below the clock resolution.
    let runtime_s = start.elapsed().as_secs_f64().max(1e-9);
    Ok(CellOutcome::Done {
        accuracy: report.accuracy,
        micro_f1: report.micro_f1,
        runtime_s,
        n_test: report.n_test,
        psd_warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Parse(format!("unknown output format `{other}`"))),
        }
    }
}

pub const CSV_HEADER: [&str; 7] = [
    "embedding",
    "composition",
    "classifier",
    "params",
    "accuracy",
    "micro_f1",
    "runtime_s",
];

#[derive(Serialize)]
struct FlatRow<'a> {
    embedding: Flavor,
    composition: CompositionMethod,
    classifier: &'a str,
    params: &'a str,
    accuracy: Option<f64>,
    micro_f1: Option<f64>,
    runtime_s: Option<f64>,
}

impl<'a> From<&'a ResultRow> for FlatRow<'a> {
    fn from(r: &'a ResultRow) -> Self {
        let (accuracy, micro_f1, runtime_s) = match r.outcome {
            CellOutcome::Done {
                accuracy,
                micro_f1,
                runtime_s,
                ..
            } => (Some(accuracy), Some(micro_f1), Some(runtime_s)),
            _ => (None, None, None),
        };
        Self {
            embedding: r.embedding,
            composition: r.composition,
            classifier: &r.classifier,
            params: &r.params,
            accuracy,
            micro_f1,
            runtime_s,
        }
    }
}

fn na_or(v: Option<f64>) -> String {
    // `{}` on f64 is the shortest round-trip form, as in the JSON output.
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Writes the table as CSV (fixed header, `NA` for skipped or failed
/// cells) or as a JSON array of rows (`null` in place of `NA`).
pub fn emit_table<W: Write>(results: &ResultsTable, format: OutputFormat, out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER)?;
            for r in &results.rows {
                let f = FlatRow::from(r);
                w.write_record([
                    f.embedding.name(),
                    f.composition.name(),
                    f.classifier,
                    f.params,
                    &na_or(f.accuracy),
                    &na_or(f.micro_f1),
                    &na_or(f.runtime_s),
                ])?;
            }
            w.flush().map_err(|e| Error::io("<csv output>", e))?;
        }
        OutputFormat::Json => {
            let rows: Vec<FlatRow> = results.rows.iter().map(FlatRow::from).collect();
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, &rows)?;
            writeln!(out).map_err(|e| Error::io("<json output>", e))?;
        }
    }
    Ok(())
}

pub fn emit_table_to_path(results: &ResultsTable, format: OutputFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    emit_table(results, format, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}
