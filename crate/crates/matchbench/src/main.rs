//! `matchbench` command-line entry point.
//!
//! Exit codes: 0 success, 1 validation or domain errors, 2 usage errors
//! (the latter produced by argument parsing). Diagnostics go to standard
//! error; data goes to files or standard output.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use matchbench::benchmark::{
    import_benchmark, load_benchmark_with_diagnostics, save_benchmark, Benchmark, Severity,
};
use matchbench::eval::{
    baseline_runs, combination_tables, consistency, evaluate, median_table, EvalError, MethodRuns,
    MetricRow,
};
use matchbench::experiment::{ExperimentRecord, Harness, SuiteConfig};
use matchbench::llm::{
    Backend, LiveBackend, LiveConfig, MockBackend, MockPolicy, ResponseStore,
};
use matchbench::parse::VoteValue;
use matchbench::prompt::{PromptTemplate, TaskScope};
use matchbench::report;
use matchbench::similarity::Metric;

const API_KEY_VAR: &str = "MATCHBENCH_API_KEY";
const BASE_URL_VAR: &str = "MATCHBENCH_BASE_URL";

#[derive(Parser)]
#[command(
    name = "matchbench",
    version,
    about = "Schema-matching benchmarks: similarity baselines, LLM matchers, evaluation"
)]
struct Cli {
    /// TOML config file supplying defaults (flags and env vars win).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a benchmark manifest and check every integrity invariant.
    Validate {
        /// Manifest file, or a directory holding benchmark.json / index.json.
        path: PathBuf,
    },

    /// Assemble a benchmark.json from CSV exports.
    ImportBenchmark {
        /// Directory with tables.csv, attributes.csv, datasets.csv, matches.csv.
        #[arg(long, value_name = "DIR")]
        from: PathBuf,
        /// Destination manifest path.
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
    },

    /// Similarity baseline with per-dataset best-F1 thresholds.
    Baseline {
        /// Similarity metric: ngram, jaro_winkler, levenshtein, monge_elkan.
        #[arg(long, value_parser = parse_metric)]
        metric: Metric,
        #[arg(long, value_name = "PATH")]
        benchmark: PathBuf,
        /// Per-dataset CSV destination (standard output when omitted).
        #[arg(long, value_name = "CSV")]
        out: Option<PathBuf>,
        /// Also write this metric's pooled PR curve (threshold, precision, recall).
        #[arg(long, value_name = "CSV")]
        pr_curve: Option<PathBuf>,
    },

    /// Prompt a backend for matches and persist responses, votes and records.
    Run {
        #[arg(long, value_name = "PATH")]
        benchmark: PathBuf,
        /// Task scope (repeatable): 1-to-1, 1-to-n, n-to-1, n-to-m. Default: all four.
        #[arg(long = "scope", value_name = "SCOPE", value_parser = parse_scope)]
        scopes: Vec<TaskScope>,
        /// Restrict to these dataset ids (repeatable). Default: every dataset.
        #[arg(long = "dataset", value_name = "ID")]
        datasets: Vec<String>,
        /// Model name sent to the backend and used in the store layout.
        #[arg(long)]
        model: Option<String>,
        /// Repetitions per (dataset, scope).
        #[arg(long)]
        runs: Option<usize>,
        /// Completions per prompt fed into majority voting (odd).
        #[arg(long)]
        votes: Option<usize>,
        #[arg(long, value_enum, default_value_t = BackendKind::Mock)]
        backend: BackendKind,
        /// Mock behaviour: oracle[:eps=E,omit=O,seed=S] or constant:yes|no|unknown.
        #[arg(long, value_name = "POLICY")]
        mock_policy: Option<String>,
        /// Response store root (default runs/).
        #[arg(long, value_name = "DIR")]
        runs_dir: Option<PathBuf>,
        /// Concurrent in-flight requests.
        #[arg(long)]
        concurrency: Option<usize>,
        /// Cap on live HTTP attempts for this invocation.
        #[arg(long)]
        budget: Option<u64>,
        /// Prompt template file overriding the built-in wording.
        #[arg(long, value_name = "PATH")]
        template: Option<PathBuf>,
        /// Chat-completions base URL (env MATCHBENCH_BASE_URL).
        #[arg(long, value_name = "URL")]
        base_url: Option<String>,
    },

    /// Score persisted records: per-run, median, decisiveness, consistency tables.
    Evaluate {
        #[arg(long, value_name = "PATH")]
        benchmark: PathBuf,
        /// Response store root to read records from (default runs/).
        #[arg(long, value_name = "DIR")]
        runs_dir: Option<PathBuf>,
        /// Report directory (created if missing).
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Restrict to one model. Default: every model found.
        #[arg(long)]
        model: Option<String>,
        /// Add the four similarity baselines as extra columns.
        #[arg(long)]
        with_baselines: bool,
    },

    /// Pairwise method unions: true matches, inspection effort and F1 matrices.
    Combine {
        #[arg(long, value_name = "PATH")]
        benchmark: PathBuf,
        /// Response store root (needed when methods include task scopes).
        #[arg(long, value_name = "DIR")]
        runs_dir: Option<PathBuf>,
        /// Comma-separated methods: similarity metrics and/or task scopes,
        /// e.g. ngram,1-to-n,n-to-1.
        #[arg(long, value_delimiter = ',', required = true, value_name = "LIST")]
        methods: Vec<String>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long)]
        model: Option<String>,
        /// Baseline repetition count when no scope method fixes it.
        #[arg(long)]
        runs: Option<usize>,
    },

    /// Pooled PR curves and AUC comparison for all similarity metrics.
    Report {
        #[arg(long, value_name = "PATH")]
        benchmark: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Live,
    Mock,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    Metric::from_str(s).map_err(|e| e.to_string())
}

fn parse_scope(s: &str) -> Result<TaskScope, String> {
    TaskScope::from_str(s).map_err(|e| e.to_string())
}

/// Optional TOML file with defaults for the knobs flags can override.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<String>,
    runs: Option<usize>,
    votes: Option<usize>,
    concurrency: Option<usize>,
    budget: Option<u64>,
    base_url: Option<String>,
    api_key: Option<String>,
    template: Option<PathBuf>,
    runs_dir: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

macro_rules! domain_from {
    ($($ty:ty),+ $(,)?) => {
        $(impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Domain(e.to_string())
            }
        })+
    };
}

domain_from!(
    matchbench::benchmark::BenchmarkError,
    matchbench::similarity::SimilarityError,
    matchbench::eval::EvalError,
    matchbench::experiment::ExperimentError,
    matchbench::llm::LlmError,
    matchbench::prompt::TemplateError,
    std::io::Error,
    serde_json::Error,
    toml::de::Error,
);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let file = match load_file_config(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => return fail(&e),
    };
    match dispatch(cli.command, &file) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        CliError::Usage(_) => ExitCode::from(2),
        CliError::Domain(_) => ExitCode::from(1),
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Domain(format!("cannot read config {}: {e}", path.display())))?;
    let cfg = toml::from_str(&text)
        .map_err(|e| CliError::Domain(format!("bad config {}: {e}", path.display())))?;
    Ok(cfg)
}

fn dispatch(command: Command, file: &FileConfig) -> Result<(), CliError> {
    match command {
        Command::Validate { path } => cmd_validate(&path),
        Command::ImportBenchmark { from, out } => cmd_import(&from, &out),
        Command::Baseline {
            metric,
            benchmark,
            out,
            pr_curve,
        } => cmd_baseline(metric, &benchmark, out.as_deref(), pr_curve.as_deref()),
        Command::Run {
            benchmark,
            scopes,
            datasets,
            model,
            runs,
            votes,
            backend,
            mock_policy,
            runs_dir,
            concurrency,
            budget,
            template,
            base_url,
        } => cmd_run(RunArgs {
            benchmark,
            scopes,
            datasets,
            model,
            runs,
            votes,
            backend,
            mock_policy,
            runs_dir,
            concurrency,
            budget,
            template,
            base_url,
            file,
        }),
        Command::Evaluate {
            benchmark,
            runs_dir,
            out,
            model,
            with_baselines,
        } => cmd_evaluate(
            &benchmark,
            &resolve_runs_dir(runs_dir, file),
            &out,
            model.as_deref(),
            with_baselines,
        ),
        Command::Combine {
            benchmark,
            runs_dir,
            methods,
            out,
            model,
            runs,
        } => cmd_combine(
            &benchmark,
            &resolve_runs_dir(runs_dir, file),
            &methods,
            &out,
            model.as_deref(),
            runs,
        ),
        Command::Report { benchmark, out } => cmd_report(&benchmark, &out),
    }
}

fn resolve_runs_dir(flag: Option<PathBuf>, file: &FileConfig) -> PathBuf {
    flag.or_else(|| file.runs_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn load(path: &Path) -> Result<Benchmark, CliError> {
    let (benchmark, diagnostics) = load_benchmark_with_diagnostics(path)?;
    for d in &diagnostics {
        eprintln!("warning: {}", d.message);
    }
    Ok(benchmark)
}

fn cmd_validate(path: &Path) -> Result<(), CliError> {
    let (benchmark, diagnostics) = load_benchmark_with_diagnostics(path)?;
    let mut errors = 0usize;
    for d in &diagnostics {
        match d.severity {
            Severity::Error => {
                errors += 1;
                eprintln!("error: {}", d.message);
            }
            Severity::Warning => eprintln!("warning: {}", d.message),
        }
    }
    if errors > 0 {
        return Err(CliError::Domain(format!(
            "benchmark failed validation with {errors} error(s)"
        )));
    }
    println!(
        "ok: {} datasets, {} pairs, {} matches",
        benchmark.datasets.len(),
        benchmark.total_pairs(),
        benchmark.total_matches()
    );
    for d in &benchmark.datasets {
        let matches = benchmark.truth(&d.id).map_or(0, |t| t.matches.len());
        println!(
            "  {}: {} x {} = {} pairs, {} matches",
            d.id,
            d.source.len(),
            d.target.len(),
            d.pair_count(),
            matches
        );
    }
    Ok(())
}

fn cmd_import(from: &Path, out: &Path) -> Result<(), CliError> {
    let benchmark = import_benchmark(from)?;
    save_benchmark(&benchmark, out)?;
    eprintln!(
        "imported {} datasets ({} pairs, {} matches) -> {}",
        benchmark.datasets.len(),
        benchmark.total_pairs(),
        benchmark.total_matches(),
        out.display()
    );
    Ok(())
}

fn cmd_baseline(
    metric: Metric,
    benchmark: &Path,
    out: Option<&Path>,
    pr_curve: Option<&Path>,
) -> Result<(), CliError> {
    let b = load(benchmark)?;
    let rep = report::baseline_report(metric, &b)?;
    let csv_text = report::baseline_csv(&rep);
    match out {
        Some(path) => {
            write_file(path, &csv_text)?;
            print!("{}", report::baseline_markdown(&rep));
        }
        None => print!("{csv_text}"),
    }
    if let Some(path) = pr_curve {
        let curve = matchbench::similarity::pooled_pr_curve(metric, &b)?;
        write_file(path, &report::pr_curve_csv(&curve))?;
        eprintln!("pooled {} AUC {:.3} -> {}", metric, curve.auc, path.display());
    }
    Ok(())
}

struct RunArgs<'a> {
    benchmark: PathBuf,
    scopes: Vec<TaskScope>,
    datasets: Vec<String>,
    model: Option<String>,
    runs: Option<usize>,
    votes: Option<usize>,
    backend: BackendKind,
    mock_policy: Option<String>,
    runs_dir: Option<PathBuf>,
    concurrency: Option<usize>,
    budget: Option<u64>,
    template: Option<PathBuf>,
    base_url: Option<String>,
    file: &'a FileConfig,
}

fn cmd_run(args: RunArgs<'_>) -> Result<(), CliError> {
    let file = args.file;
    if args.backend == BackendKind::Live && args.mock_policy.is_some() {
        return Err(CliError::Usage(
            "--mock-policy only applies to --backend mock".into(),
        ));
    }

    let benchmark = load(&args.benchmark)?;
    let defaults = SuiteConfig::default();
    let config = SuiteConfig {
        scopes: if args.scopes.is_empty() {
            TaskScope::ALL.to_vec()
        } else {
            args.scopes
        },
        model: args
            .model
            .or_else(|| file.model.clone())
            .unwrap_or(defaults.model),
        runs: args.runs.or(file.runs).unwrap_or(defaults.runs),
        votes: args.votes.or(file.votes).unwrap_or(defaults.votes),
        concurrency: args
            .concurrency
            .or(file.concurrency)
            .unwrap_or(defaults.concurrency),
    };

    let dataset_ids: Vec<String> = if args.datasets.is_empty() {
        benchmark.datasets.iter().map(|d| d.id.clone()).collect()
    } else {
        for id in &args.datasets {
            if benchmark.dataset(id).is_none() {
                return Err(CliError::Domain(format!("unknown dataset {id:?}")));
            }
        }
        args.datasets
    };

    let template = match args.template.as_ref().or(file.template.as_ref()) {
        Some(path) => PromptTemplate::from_file(path)?,
        None => PromptTemplate::default(),
    };

    let backend: Box<dyn Backend> = match args.backend {
        BackendKind::Mock => {
            let policy = parse_mock_policy(args.mock_policy.as_deref().unwrap_or("oracle"))?;
            Box::new(MockBackend::new(policy, Arc::new(benchmark.clone())))
        }
        BackendKind::Live => {
            let d = LiveConfig::default();
            let api_key = std::env::var(API_KEY_VAR)
                .ok()
                .filter(|k| !k.is_empty())
                .or_else(|| file.api_key.clone())
                .ok_or_else(|| {
                    CliError::Domain(format!(
                        "the live backend needs an API key: set {API_KEY_VAR} or api_key in the config file"
                    ))
                })?;
            let base_url = args
                .base_url
                .or_else(|| std::env::var(BASE_URL_VAR).ok().filter(|u| !u.is_empty()))
                .or_else(|| file.base_url.clone())
                .unwrap_or(d.base_url);
            let budget = args.budget.or(file.budget).unwrap_or(d.budget);
            Box::new(LiveBackend::new(LiveConfig {
                base_url,
                api_key,
                budget,
                max_attempts: d.max_attempts,
                base_delay_ms: d.base_delay_ms,
                timeout: Duration::from_secs(60),
            })?)
        }
    };

    let store = ResponseStore::open(resolve_runs_dir(args.runs_dir, file));
    let harness = Harness {
        benchmark: &benchmark,
        backend: backend.as_ref(),
        store: &store,
        template: &template,
        config: &config,
    };

    let mut written = 0usize;
    for id in &dataset_ids {
        for &scope in &config.scopes {
            for run in 1..=config.runs {
                let record = harness.run_experiment(id, scope, run)?;
                let pairs = record.votes.len();
                eprintln!(
                    "{id} {scope} run {run}: {} yes, {} no of {pairs} pairs",
                    record.matching.yes.len(),
                    record.matching.no.len()
                );
                written += 1;
            }
        }
    }
    eprintln!("wrote {written} records under {}", store.root().display());
    Ok(())
}

/// `oracle[:eps=E,omit=O,seed=S]` or `constant:yes|no|unknown`.
fn parse_mock_policy(text: &str) -> Result<MockPolicy, CliError> {
    let bad = |msg: String| CliError::Usage(msg);
    let (kind, rest) = match text.split_once(':') {
        Some((k, r)) => (k, Some(r)),
        None => (text, None),
    };
    match kind {
        "oracle" => {
            let mut flip_prob = 0.0;
            let mut omit_prob = 0.0;
            let mut seed = 0u64;
            for part in rest.into_iter().flat_map(|r| r.split(',')) {
                let (key, value) = part
                    .split_once('=')
                    .ok_or_else(|| bad(format!("mock policy field {part:?} is not key=value")))?;
                match key.trim() {
                    "eps" | "flip" => {
                        flip_prob = value
                            .parse()
                            .map_err(|_| bad(format!("bad eps value {value:?}")))?
                    }
                    "omit" => {
                        omit_prob = value
                            .parse()
                            .map_err(|_| bad(format!("bad omit value {value:?}")))?
                    }
                    "seed" => {
                        seed = value
                            .parse()
                            .map_err(|_| bad(format!("bad seed value {value:?}")))?
                    }
                    other => return Err(bad(format!("unknown mock policy field {other:?}"))),
                }
            }
            for p in [flip_prob, omit_prob] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(bad(format!("probability {p} outside [0, 1]")));
                }
            }
            Ok(MockPolicy::Oracle {
                flip_prob,
                omit_prob,
                seed,
            })
        }
        "constant" => {
            let value = rest.ok_or_else(|| bad("constant policy needs a value".into()))?;
            match value.trim().to_ascii_lowercase().as_str() {
                "yes" => Ok(MockPolicy::Constant(VoteValue::Yes)),
                "no" => Ok(MockPolicy::Constant(VoteValue::No)),
                "unknown" => Ok(MockPolicy::Constant(VoteValue::Unknown)),
                other => Err(bad(format!("constant policy value {other:?} is not yes/no/unknown"))),
            }
        }
        other => Err(bad(format!(
            "unknown mock policy {other:?}; expected oracle[:eps=..] or constant:.."
        ))),
    }
}

/// Read every `run<k>.record.json` under the store root.
fn discover_records(runs_dir: &Path) -> Result<Vec<ExperimentRecord>, CliError> {
    if !runs_dir.is_dir() {
        return Err(CliError::Domain(format!(
            "runs directory {} does not exist",
            runs_dir.display()
        )));
    }
    let mut records = Vec::new();
    let mut stack = vec![runs_dir.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(".record.json"))
            {
                let text = fs::read_to_string(&path)?;
                let record: ExperimentRecord = serde_json::from_str(&text).map_err(|e| {
                    CliError::Domain(format!("bad record {}: {e}", path.display()))
                })?;
                records.push(record);
            }
        }
    }
    records.sort_by(|a, b| {
        (&a.model, a.scope.to_string(), &a.dataset_id, a.run_index).cmp(&(
            &b.model,
            b.scope.to_string(),
            &b.dataset_id,
            b.run_index,
        ))
    });
    Ok(records)
}

fn filtered_records(
    runs_dir: &Path,
    model: Option<&str>,
) -> Result<Vec<ExperimentRecord>, CliError> {
    let records: Vec<ExperimentRecord> = discover_records(runs_dir)?
        .into_iter()
        .filter(|r| model.is_none_or(|m| r.model == m))
        .collect();
    if records.is_empty() {
        let hint = model.map(|m| format!(" for model {m:?}")).unwrap_or_default();
        return Err(CliError::Domain(format!(
            "no records found under {}{hint}; run `matchbench run` first",
            runs_dir.display()
        )));
    }
    Ok(records)
}

fn cmd_evaluate(
    benchmark: &Path,
    runs_dir: &Path,
    out: &Path,
    model: Option<&str>,
    with_baselines: bool,
) -> Result<(), CliError> {
    let b = load(benchmark)?;
    let records = filtered_records(runs_dir, model)?;
    let models: BTreeSet<&str> = records.iter().map(|r| r.model.as_str()).collect();
    let multi_model = models.len() > 1;
    let run_count = records.iter().map(|r| r.run_index).max().unwrap_or(1);

    let mut rows: Vec<MetricRow> = Vec::new();
    if with_baselines {
        for metric in Metric::ALL {
            for d in &b.datasets {
                let t = truth_of(&b, &d.id)?;
                let m = matchbench::eval::baseline_matching(metric, d, t)?;
                for run in 1..=run_count {
                    rows.push(evaluate(&m, t, d, metric.to_string(), run)?);
                }
            }
        }
    }
    for r in &records {
        let d = b.dataset(&r.dataset_id).ok_or_else(|| {
            CliError::Domain(format!(
                "record references dataset {:?} absent from the benchmark",
                r.dataset_id
            ))
        })?;
        let t = truth_of(&b, &r.dataset_id)?;
        let method = if multi_model {
            format!("{} {}", r.model, r.scope)
        } else {
            r.scope.to_string()
        };
        rows.push(evaluate(&r.matching, t, d, method, r.run_index)?);
    }

    fs::create_dir_all(out)?;
    write_file(out.join("runs.csv"), &report::rows_csv(&rows))?;

    let table = median_table(&rows);
    write_file(out.join("median.csv"), &report::median_csv(&table))?;
    write_file(out.join("median.md"), &report::median_markdown(&table))?;

    let decisiveness = report::value_table(&rows, |r| r.decisiveness);
    write_file(
        out.join("decisiveness.csv"),
        &report::value_csv(&decisiveness, "decisiveness"),
    )?;
    write_file(
        out.join("decisiveness.md"),
        &report::value_markdown(&decisiveness, "decisiveness"),
    )?;

    match consistency(&rows) {
        Ok(c) => {
            write_file(out.join("consistency.csv"), &report::consistency_csv(&c))?;
            write_file(out.join("consistency.md"), &report::consistency_markdown(&c))?;
        }
        Err(EvalError::InsufficientRuns { .. }) => {
            eprintln!("note: consistency needs at least 2 runs per method; skipped");
        }
        Err(e) => return Err(e.into()),
    }

    eprintln!(
        "evaluated {} records ({} methods) -> {}",
        records.len(),
        table.methods.len(),
        out.display()
    );
    print!("{}", report::median_markdown(&table));
    Ok(())
}

fn truth_of<'b>(
    b: &'b Benchmark,
    dataset_id: &str,
) -> Result<&'b matchbench::benchmark::GroundTruth, CliError> {
    b.truth(dataset_id).ok_or_else(|| {
        CliError::Domain(format!("no ground truth for dataset {dataset_id:?}"))
    })
}

fn cmd_combine(
    benchmark: &Path,
    runs_dir: &Path,
    methods: &[String],
    out: &Path,
    model: Option<&str>,
    runs_flag: Option<usize>,
) -> Result<(), CliError> {
    enum Spec {
        Baseline(Metric),
        Scope(TaskScope),
    }
    let b = load(benchmark)?;
    let specs: Vec<(String, Spec)> = methods
        .iter()
        .map(|m| {
            if let Ok(metric) = Metric::from_str(m) {
                Ok((metric.to_string(), Spec::Baseline(metric)))
            } else if let Ok(scope) = TaskScope::from_str(m) {
                Ok((scope.to_string(), Spec::Scope(scope)))
            } else {
                Err(CliError::Usage(format!(
                    "method {m:?} is neither a similarity metric nor a task scope"
                )))
            }
        })
        .collect::<Result<_, _>>()?;

    let needs_records = specs.iter().any(|(_, s)| matches!(s, Spec::Scope(_)));
    let records = if needs_records {
        let records = filtered_records(runs_dir, model)?;
        let models: BTreeSet<&str> = records.iter().map(|r| r.model.as_str()).collect();
        if models.len() > 1 {
            return Err(CliError::Domain(format!(
                "records from several models found ({}); pass --model",
                models.into_iter().collect::<Vec<_>>().join(", ")
            )));
        }
        records
    } else {
        Vec::new()
    };

    let scope_runs = |scope: TaskScope| -> Result<MethodRuns, CliError> {
        let mut by_run: BTreeMap<usize, BTreeMap<String, matchbench::experiment::Matching>> =
            BTreeMap::new();
        for r in records.iter().filter(|r| r.scope == scope) {
            by_run
                .entry(r.run_index)
                .or_default()
                .insert(r.dataset_id.clone(), r.matching.clone());
        }
        if by_run.is_empty() {
            return Err(CliError::Domain(format!(
                "no records for scope {scope} under {}",
                runs_dir.display()
            )));
        }
        Ok(MethodRuns {
            method: scope.to_string(),
            runs: by_run.into_values().collect(),
        })
    };

    // Baselines repeat to the run count the scope methods establish.
    let mut run_count = runs_flag;
    let mut built: Vec<MethodRuns> = Vec::new();
    for (_, spec) in &specs {
        if let Spec::Scope(scope) = spec {
            let m = scope_runs(*scope)?;
            run_count.get_or_insert(m.runs.len());
            built.push(m);
        }
    }
    let run_count = run_count.unwrap_or(5);
    let mut ordered: Vec<MethodRuns> = Vec::new();
    let mut scope_iter = built.into_iter();
    for (_, spec) in &specs {
        match spec {
            Spec::Baseline(metric) => ordered.push(baseline_runs(*metric, &b, run_count)?),
            Spec::Scope(_) => ordered.push(scope_iter.next().expect("built in order")),
        }
    }

    let tables = combination_tables(&ordered, &b)?;
    fs::create_dir_all(out)?;
    write_file(out.join("combination.csv"), &report::combination_csv(&tables))?;
    write_file(
        out.join("combination_true_matches.md"),
        &report::combination_markdown(&tables, report::CombinationValue::TrueMatches),
    )?;
    write_file(
        out.join("combination_effort.md"),
        &report::combination_markdown(&tables, report::CombinationValue::Effort),
    )?;
    write_file(
        out.join("combination_f1.md"),
        &report::combination_markdown(&tables, report::CombinationValue::F1),
    )?;
    eprintln!(
        "combined {} methods over {run_count} runs -> {}",
        tables.methods.len(),
        out.display()
    );
    print!(
        "{}",
        report::combination_markdown(&tables, report::CombinationValue::F1)
    );
    Ok(())
}

fn cmd_report(benchmark: &Path, out: &Path) -> Result<(), CliError> {
    let b = load(benchmark)?;
    let curves = report::auc_comparison(&b)?;
    fs::create_dir_all(out)?;
    for (metric, curve) in &curves {
        write_file(
            out.join(format!("pr_curve_{metric}.csv")),
            &report::pr_curve_csv(curve),
        )?;
    }
    write_file(out.join("auc.csv"), &report::auc_csv(&curves))?;
    write_file(out.join("auc.md"), &report::auc_markdown(&curves))?;
    print!("{}", report::auc_markdown(&curves));
    Ok(())
}

fn write_file(path: impl AsRef<Path>, content: &str) -> Result<(), CliError> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, content)
        .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display())))
}
