use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hyperdoc::classify::MetricKind;
use hyperdoc::composition::{compose, CompositionConfig, CompositionMethod};
use hyperdoc::corpus::{self, doc_to_points, tokenize, Flavor, LoadOptions, TokenizerConfig};
use hyperdoc::harness::{
    emit_table, emit_table_to_path, run_experiment, ClassifierSpec, ExperimentConfig,
    OutputFormat, SplitConfig, SplitSpec,
};
use hyperdoc::kernels::{gram_matrix_of, psd_check, KernelSpec};

#[derive(Parser)]
#[command(name = "hyperdoc", version, about = "Hyperbolic document composition and classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a composition × classifier grid and emit a results table.
    Run(RunArgs),
    /// Check a random geodesic-kernel Gram matrix for positive semidefiniteness.
    CheckKernel(CheckKernelArgs),
    /// Compose a single document and print its point.
    Compose(ComposeArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value = "poincare")]
    flavor: Flavor,
    #[arg(long, value_delimiter = ',', default_value = "emean,lcf,lcb,lca,fnw,bnw")]
    methods: Vec<CompositionMethod>,
    /// k values, e.g. `k=3,5,7,9,11`.
    #[arg(long)]
    knn: Option<String>,
    #[arg(long, default_value = "poincare")]
    knn_metric: MetricKind,
    /// Kernel SVM cell, e.g. `kernel=geodesic-laplacian,lambda=1.0,C=1.0`. Repeatable.
    #[arg(long)]
    svm: Vec<String>,
    /// Linear SVM cell, e.g. `C=1.0` or `C=1.0,epochs=50`. Repeatable.
    #[arg(long)]
    linear_svm: Vec<String>,
    /// `holdout:RATIO` or `kfold:N`.
    #[arg(long, default_value = "holdout:0.8")]
    split: SplitSpec,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    /// Largest tolerated fraction of malformed input lines.
    #[arg(long, default_value_t = 0.01)]
    max_malformed: f64,
}

#[derive(clap::Args)]
struct CheckKernelArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value_t = 30)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(clap::Args)]
struct ComposeArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long, default_value = "poincare")]
    flavor: Flavor,
    #[arg(long)]
    method: CompositionMethod,
    #[arg(long)]
    text: String,
}

fn key_values(s: &str) -> anyhow::Result<Vec<(String, String)>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| anyhow!("expected key=value, got `{p}`"))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn parse_knn(s: &str, metric: MetricKind) -> anyhow::Result<Vec<ClassifierSpec>> {
    let list = s.trim().strip_prefix("k=").unwrap_or(s.trim());
    list.split(',')
        .map(|k| {
            let k = k.trim().parse().with_context(|| format!("bad k value `{k}`"))?;
            Ok(ClassifierSpec::Knn { k, metric })
        })
        .collect()
}

fn parse_svm(s: &str) -> anyhow::Result<ClassifierSpec> {
    let mut kernel = "geodesic-laplacian".to_string();
    let (mut lambda, mut c, mut q) = (1.0, 1.0, None);
    for (k, v) in key_values(s)? {
        match k.as_str() {
            "kernel" => kernel = v,
            "lambda" => lambda = v.parse()?,
            "C" | "c" => c = v.parse()?,
            "q" => q = Some(v.parse()?),
            other => bail!("unknown svm option `{other}`"),
        }
    }
    let kernel = match (kernel.as_str(), q) {
        ("geodesic-laplacian", None) => KernelSpec::geodesic_laplacian(lambda)?,
        ("geodesic-gaussian", None) => KernelSpec::geodesic_gaussian(lambda)?,
        ("geodesic", Some(q)) => KernelSpec::geodesic(lambda, q)?,
        ("rbf", None) => KernelSpec::euclidean_rbf(lambda)?,
        ("linear", None) => KernelSpec::linear(),
        (other, _) => bail!("unknown kernel `{other}` (or q given for a fixed-exponent kernel)"),
    };
    Ok(ClassifierSpec::KernelSvm { kernel, c })
}

fn parse_linear(s: &str) -> anyhow::Result<ClassifierSpec> {
    let (mut c, mut epochs) = (1.0, 50);
    for (k, v) in key_values(s)? {
        match k.as_str() {
            "C" | "c" => c = v.parse()?,
            "epochs" => epochs = v.parse()?,
            other => bail!("unknown linear-svm option `{other}`"),
        }
    }
    Ok(ClassifierSpec::LinearSvm { c, epochs })
}

fn run(args: RunArgs) -> anyhow::Result<ExitCode> {
    let mut classifiers = Vec::new();
    if let Some(knn) = &args.knn {
        classifiers.extend(parse_knn(knn, args.knn_metric)?);
    }
    for s in &args.svm {
        classifiers.push(parse_svm(s)?);
    }
    for s in &args.linear_svm {
        classifiers.push(parse_linear(s)?);
    }
    if classifiers.is_empty() {
        bail!("no classifier given; use --knn, --svm or --linear-svm");
    }
    let mut cfg = ExperimentConfig::new(
        &args.corpus,
        &args.embeddings,
        args.flavor,
        args.methods,
        classifiers,
    );
    cfg.split = SplitConfig {
        spec: args.split,
        seed: args.seed,
    };
    cfg.load = LoadOptions {
        max_malformed_fraction: args.max_malformed,
    };
    let results = run_experiment(&cfg)?;
    match &args.out {
        Some(path) => emit_table_to_path(&results, args.format, path)?,
        None => emit_table(&results, args.format, io::stdout().lock())?,
    }

    let failures: Vec<_> = results.failures().collect();
    if failures.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    eprintln!("{} of {} cells failed:", failures.len(), results.rows.len());
    for (row, err) in failures {
        eprintln!("  {} / {} ({}): {err}", row.composition, row.classifier, row.params);
    }
    Ok(ExitCode::from(2))
}

fn check_kernel(args: CheckKernelArgs) -> anyhow::Result<ExitCode> {
    let table = corpus::load_embeddings(&args.embeddings, Flavor::Poincare)?;
    if args.n == 0 || args.n > table.len() {
        bail!("--n must lie in 1..={}", table.len());
    }
    let spec = KernelSpec::geodesic(args.lambda, args.q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut idx = sample(&mut rng, table.len(), args.n).into_vec();
    idx.sort_unstable();
    let points: Vec<&[f64]> = idx.iter().map(|&i| table.vector(i)).collect();
    let gram = gram_matrix_of(&points, &spec)?;
    let report = psd_check(&gram, args.tol)?;
    println!("kernel          {spec}");
    println!("points          {}", args.n);
    println!("min eigenvalue  {:e}", report.min_eigenvalue);
    println!("threshold       {:e}", report.threshold);
    println!("psd             {}", report.is_psd);
    Ok(ExitCode::SUCCESS)
}

fn compose_one(args: ComposeArgs) -> anyhow::Result<ExitCode> {
    if args.flavor == Flavor::Euclidean && args.method.is_hyperbolic() {
        bail!("composition {} requires poincare-flavor embeddings", args.method);
    }
    let table = corpus::load_embeddings(&args.embeddings, args.flavor)?;
    let tokens = tokenize(&args.text, &TokenizerConfig::default());
    let doc = doc_to_points(&tokens, &table)?;
    let point = match &doc.sequence {
        Some(seq) => compose(args.method, seq, &CompositionConfig::default()).into_coords(),
        None => vec![0.0; table.dim()],
    };
    let norm = point.iter().map(|x| x * x).sum::<f64>().sqrt();
    let out = serde_json::json!({
        "method": args.method,
        "tokens": tokens.len(),
        "oov": doc.oov,
        "empty": doc.is_empty(),
        "norm": norm,
        "point": point,
    });
    let mut stdout = io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &out)?;
    writeln!(stdout)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::CheckKernel(a) => check_kernel(a),
        Command::Compose(a) => compose_one(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
