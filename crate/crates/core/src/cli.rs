//! The `fqn-probe` command line: scan, sample, compose, run, eval, report.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::{
    BackendError, CompletionBackend, CompletionRequest, HttpBackend, HttpConfig, OracleBackend,
    RecallParams, RequestMetadata, StochasticBackend,
};
use crate::composer::{
    compose_batch, ExampleOrder, Manifest, ManifestRecord, OneShotSelection, PromptConfig,
    ShotKind, ShotSetting, TaskDescription, Template, MANIFEST_FILE,
};
use crate::corpus::{compute_stats, Corpus};
use crate::evaluator::{emit_report, evaluate, from_csv, PredictionRecord, ReportFormat};
use crate::normalizer::{is_correct, Prediction};
use crate::sampler::{sample, SamplerConfig};
use crate::scanner::{extract_simple_names, ScanHit};

pub const TASKS_DIR: &str = "tasks";
pub const PREDICTIONS_FILE: &str = "predictions.jsonl";
pub const REPORT_DIR: &str = "report";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{0}")]
    Backend(#[from] BackendError),
    /// The command finished but some items were skipped or failed.
    #[error("{0}")]
    Partial(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Partial(_) => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path, err: impl std::fmt::Display) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        message: err.to_string(),
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fqn-probe",
    version,
    about = "Probe FQN inference of code completion models"
)]
pub struct Cli {
    /// JSON run configuration; paths inside are relative to its directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract simple-name candidates from every snippet of a corpus.
    Scan(ScanArgs),
    /// Draw a diverse sample of short methods.
    Sample(SampleArgs),
    /// Render task inputs and a manifest.
    Compose(ComposeArgs),
    /// Send composed task inputs to a backend.
    Run(RunArgs),
    /// Score predictions and write the stratified report.
    Eval(EvalArgs),
    /// Re-render a CSV report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Hits file (JSON lines); defaults to `<out_dir>/hits.jsonl`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Sampled corpus file; the log goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub max_loc: Option<usize>,
    #[arg(long)]
    pub min_pairs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Run directory; task inputs go to `<out>/tasks`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated presets: basic, best, ablation, or any ablation name.
    #[arg(long)]
    pub preset: Option<String>,
    /// Comma-separated shots: zero, one-enic, one, few-rep, few-loo, all.
    #[arg(long)]
    pub shots: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run directory holding `tasks/manifest.jsonl`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// oracle, stochastic or http.
    #[arg(long)]
    pub backend: Option<String>,
    /// Needed by the stochastic backend.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Endpoint for the http backend.
    #[arg(long)]
    pub base_url: Option<String>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated: csv, md.
    #[arg(long, default_value = "csv,md")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A `report.csv` written by `eval`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "md")]
    pub format: String,
}

/// A named preset or an override of one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PromptSpec {
    Named(String),
    Inline(PromptOverride),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptOverride {
    /// Preset to start from; `basic` when absent.
    pub preset: Option<String>,
    pub code_context: Option<bool>,
    pub task_description: Option<TaskDescription>,
    pub template: Option<Template>,
    pub example_order: Option<ExampleOrder>,
    pub identifier_quotes: Option<bool>,
    pub blank_line_after_context: Option<bool>,
    pub one_shot_selection: Option<OneShotSelection>,
}

impl PromptOverride {
    fn resolve(&self) -> Result<PromptConfig, CliError> {
        let name = self.preset.as_deref().unwrap_or("basic");
        let mut c = PromptConfig::preset(name)
            .ok_or_else(|| CliError::Config(format!("unknown preset {name:?}")))?;
        if let Some(v) = self.code_context {
            c.code_context = v;
        }
        if let Some(v) = self.task_description {
            c.task_description = v;
        }
        if let Some(v) = self.template {
            c.template = v;
        }
        if let Some(v) = self.example_order {
            c.example_order = v;
        }
        if let Some(v) = self.identifier_quotes {
            c.identifier_quotes = v;
        }
        if let Some(v) = self.blank_line_after_context {
            c.blank_line_after_context = v;
        }
        if let Some(v) = self.one_shot_selection {
            c.one_shot_selection = v;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendSpec {
    Oracle,
    Stochastic {
        #[serde(default)]
        params: Option<RecallParams>,
    },
    Http(HttpConfig),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus_path: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub prompts: Vec<PromptSpec>,
    pub shots: Vec<String>,
    pub backend: Option<BackendSpec>,
    pub concurrency: Option<usize>,
    pub seed: Option<u64>,
    pub sampler: Option<SamplerConfig>,
}

impl RunConfig {
    /// Loads a configuration and makes its paths relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.corpus_path, &mut config.out_dir]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn prompt_configs(&self, seed: u64) -> Result<Vec<PromptConfig>, CliError> {
        let specs = if self.prompts.is_empty() {
            vec![PromptSpec::Named("basic".into())]
        } else {
            self.prompts.clone()
        };
        let mut out = Vec::new();
        for spec in &specs {
            match spec {
                PromptSpec::Named(name) => out.extend(resolve_preset_list(name)?),
                PromptSpec::Inline(o) => out.push(o.resolve()?),
            }
        }
        let mut seen = std::collections::HashSet::new();
        out.retain(|c| seen.insert(c.config_id()));
        Ok(out.into_iter().map(|c| c.with_seed(seed)).collect())
    }

    pub fn shot_settings(&self) -> Result<Vec<ShotSetting>, CliError> {
        let spec = if self.shots.is_empty() {
            "all".to_string()
        } else {
            self.shots.join(",")
        };
        ShotSetting::parse_list(&spec).map_err(CliError::Config)
    }
}

fn resolve_preset_list(spec: &str) -> Result<Vec<PromptConfig>, CliError> {
    let mut out = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        if name == "ablation" {
            out.extend(PromptConfig::ablation_suite().into_iter().map(|(_, c)| c));
        } else {
            out.push(
                PromptConfig::preset(name)
                    .ok_or_else(|| CliError::Config(format!("unknown preset {name:?}")))?,
            );
        }
    }
    Ok(out)
}

fn require<T: Clone>(value: Option<T>, what: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Config(format!("{what} not given (flag or config file)")))
}

fn load_corpus(path: &Path) -> Result<Corpus, CliError> {
    if !path.exists() {
        return Err(io_err(path, "no such file"));
    }
    Corpus::load(path).map_err(|e| io_err(path, e))
}

fn guard_output(path: &Path, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Config(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}

fn write_file(path: &Path, body: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, body).map_err(|e| io_err(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScanRecord {
    pub snippet_id: String,
    pub hits: Vec<ScanHit>,
}

pub fn cmd_scan(corpus_path: &Path, out: &Path, force: bool) -> Result<usize, CliError> {
    let corpus = load_corpus(corpus_path)?;
    guard_output(out, force)?;
    let mut body = Vec::new();
    for snippet in corpus.snippets() {
        let record = ScanRecord {
            snippet_id: snippet.id.clone(),
            hits: extract_simple_names(&snippet.source_text),
        };
        serde_json::to_writer(&mut body, &record).expect("scan record serializes");
        body.push(b'\n');
    }
    write_file(out, &body)?;
    Ok(corpus.len())
}

pub fn cmd_sample(
    corpus_path: &Path,
    out: &Path,
    config: &SamplerConfig,
    force: bool,
) -> Result<usize, CliError> {
    config.validate().map_err(CliError::Config)?;
    let corpus = load_corpus(corpus_path)?;
    let log_path = out.with_extension("log.jsonl");
    guard_output(out, force)?;
    guard_output(&log_path, force)?;
    let result = sample(&corpus, config);
    let mut body = Vec::new();
    corpus
        .subset(&result.ids)
        .write(&mut body)
        .map_err(|e| io_err(out, e))?;
    write_file(out, &body)?;
    let mut log = Vec::new();
    for entry in &result.log {
        serde_json::to_writer(&mut log, entry).expect("log entry serializes");
        log.push(b'\n');
    }
    write_file(&log_path, &log)?;
    Ok(result.ids.len())
}

/// Writes `<out>/tasks/...`; returns the manifest. Skipped shots make this a
/// partial success.
pub fn cmd_compose(
    corpus_path: &Path,
    out: &Path,
    configs: &[PromptConfig],
    shots: &[ShotSetting],
    force: bool,
) -> Result<Manifest, CliError> {
    let corpus = load_corpus(corpus_path)?;
    let tasks = out.join(TASKS_DIR);
    guard_output(&tasks, force)?;
    if tasks.exists() {
        fs::remove_dir_all(&tasks).map_err(|e| io_err(&tasks, e))?;
    }
    let stats = compute_stats(&corpus);
    let manifest = compose_batch(&corpus, &stats, configs, shots, &tasks).map_err(|e| match e {
        crate::composer::ComposeError::Io { path, source } => io_err(&path, source),
        other => CliError::Config(other.to_string()),
    })?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionLine {
    pub file: String,
    pub snippet_id: String,
    pub target: String,
    pub shot: ShotKind,
    pub config_id: String,
    pub raw: String,
    pub normalized: String,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn build_backend(
    spec: &BackendSpec,
    manifest: &Manifest,
    corpus_path: Option<&Path>,
    seed: u64,
) -> Result<Arc<dyn CompletionBackend>, CliError> {
    Ok(match spec {
        BackendSpec::Oracle => Arc::new(OracleBackend::from_manifest(manifest)),
        BackendSpec::Stochastic { params } => {
            let path = require(
                corpus_path.map(Path::to_path_buf),
                "corpus path for the stochastic backend",
            )?;
            let corpus = load_corpus(&path)?;
            let stats = compute_stats(&corpus);
            let params = params.clone().unwrap_or_default().with_seed(seed);
            Arc::new(StochasticBackend::new(&corpus, stats, params)?)
        }
        BackendSpec::Http(config) => Arc::new(HttpBackend::new(config.clone())?),
    })
}

/// Completes every manifest entry in manifest order.
pub fn run_tasks(
    tasks_dir: &Path,
    manifest: &Manifest,
    backend: &dyn CompletionBackend,
    concurrency: usize,
) -> Result<Vec<PredictionLine>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(concurrency.max(1))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let results: Vec<Result<PredictionLine, CliError>> = pool.install(|| {
        manifest
            .records
            .par_iter()
            .map(|record| run_one(tasks_dir, record, backend))
            .collect()
    });
    results.into_iter().collect()
}

fn run_one(
    tasks_dir: &Path,
    record: &ManifestRecord,
    backend: &dyn CompletionBackend,
) -> Result<PredictionLine, CliError> {
    let path = tasks_dir.join(&record.file);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let request = CompletionRequest::new(text).with_metadata(RequestMetadata {
        snippet_id: Some(record.snippet_id.clone()),
        file_name: Some(record.file.clone()),
        shot: Some(record.shot),
    });
    let (prediction, error) = match backend.complete(&request) {
        Ok(result) => (Prediction::from_result(&result), None),
        Err(e @ BackendError::Auth(_)) | Err(e @ BackendError::Config(_)) => return Err(e.into()),
        Err(e) => (
            Prediction::from_result(&crate::backend::CompletionResult::none()),
            Some(e.to_string()),
        ),
    };
    Ok(PredictionLine {
        file: record.file.clone(),
        snippet_id: record.snippet_id.clone(),
        target: record.target.clone(),
        shot: record.shot,
        config_id: record.config_id.clone(),
        raw: prediction.raw,
        correct: is_correct(&prediction.normalized, &record.gold_fqn),
        normalized: prediction.normalized,
        error,
    })
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| io_err(path, format!("line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn cmd_run(
    out: &Path,
    backend: &dyn CompletionBackend,
    concurrency: usize,
    force: bool,
) -> Result<Vec<PredictionLine>, CliError> {
    let tasks_dir = out.join(TASKS_DIR);
    let manifest_path = tasks_dir.join(MANIFEST_FILE);
    let manifest = Manifest::load(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let pred_path = out.join(PREDICTIONS_FILE);
    guard_output(&pred_path, force)?;
    let lines = run_tasks(&tasks_dir, &manifest, backend, concurrency)?;
    let mut body = Vec::new();
    for line in &lines {
        serde_json::to_writer(&mut body, line).expect("prediction serializes");
        body.push(b'\n');
    }
    write_file(&pred_path, &body)?;
    Ok(lines)
}

/// Joins predictions with the manifest into scored records.
pub fn join_predictions(
    manifest: &Manifest,
    predictions: &[PredictionLine],
) -> Result<(Vec<PredictionRecord>, usize), CliError> {
    let by_file: HashMap<&str, &PredictionLine> =
        predictions.iter().map(|p| (p.file.as_str(), p)).collect();
    let mut records = Vec::new();
    let mut missing = 0;
    for m in &manifest.records {
        let Some(p) = by_file.get(m.file.as_str()) else {
            missing += 1;
            continue;
        };
        if p.correct != is_correct(&p.normalized, &m.gold_fqn) {
            return Err(CliError::Config(format!(
                "prediction for {} has a correct flag inconsistent with its gold FQN",
                m.file
            )));
        }
        records.push(PredictionRecord {
            snippet_id: m.snippet_id.clone(),
            simple_name: m.target.clone(),
            gold_fqn: m.gold_fqn.clone(),
            predicted_fqn: p.normalized.clone(),
            correct: p.correct,
            shot: m.shot,
            config_id: m.config_id.clone(),
            seed: m.seed,
        });
    }
    Ok((records, missing))
}

fn parse_formats(spec: &str) -> Result<Vec<ReportFormat>, CliError> {
    spec.split(',')
        .map(str::trim)
        .filter(|f| !f.is_empty())
        .map(|f| match f {
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            other => Err(CliError::Config(format!("unknown report format {other:?}"))),
        })
        .collect()
}

pub fn cmd_eval(
    corpus_path: &Path,
    out: &Path,
    formats: &[ReportFormat],
    force: bool,
) -> Result<Vec<PathBuf>, CliError> {
    let corpus = load_corpus(corpus_path)?;
    let manifest_path = out.join(TASKS_DIR).join(MANIFEST_FILE);
    let manifest = Manifest::load(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let predictions: Vec<PredictionLine> = read_jsonl(&out.join(PREDICTIONS_FILE))?;
    let (records, missing) = join_predictions(&manifest, &predictions)?;
    let stats = compute_stats(&corpus);
    let report =
        evaluate(&records, &stats, Some(&corpus)).map_err(|e| CliError::Config(e.to_string()))?;
    let dir = out.join(REPORT_DIR);
    guard_output(&dir, force)?;
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let written =
        emit_report(&report, &dir, formats).map_err(|e| CliError::Config(e.to_string()))?;
    if missing > 0 {
        return Err(CliError::Partial(format!(
            "{missing} manifest entries have no prediction"
        )));
    }
    Ok(written)
}

pub fn cmd_report(
    input: &Path,
    out: &Path,
    formats: &[ReportFormat],
    force: bool,
) -> Result<Vec<PathBuf>, CliError> {
    let text = fs::read_to_string(input).map_err(|e| io_err(input, e))?;
    let report = from_csv(&text).map_err(|e| io_err(input, e))?;
    for f in formats {
        let name = match f {
            ReportFormat::Csv => "report.csv",
            ReportFormat::Markdown => "report.md",
        };
        guard_output(&out.join(name), force)?;
    }
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    emit_report(&report, out, formats).map_err(|e| CliError::Config(e.to_string()))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let corpus_of = |flag: &Option<PathBuf>| {
        require(flag.clone().or(config.corpus_path.clone()), "corpus path")
    };
    let out_of = |flag: &Option<PathBuf>| {
        require(flag.clone().or(config.out_dir.clone()), "output directory")
    };

    match &cli.command {
        Command::Scan(a) => {
            let out = match &a.out {
                Some(o) => o.clone(),
                None => out_of(&None)?.join("hits.jsonl"),
            };
            let n = cmd_scan(&corpus_of(&a.corpus)?, &out, cli.force)?;
            eprintln!("scanned {n} snippets into {}", out.display());
        }
        Command::Sample(a) => {
            let mut sc = config.sampler.unwrap_or_default();
            sc.seed = seed;
            if let Some(t) = a.threshold {
                sc.similarity_threshold = t;
            }
            if let Some(m) = a.max_loc {
                sc.max_loc = m;
            }
            if let Some(m) = a.min_pairs {
                sc.min_pairs = m;
            }
            let out = match &a.out {
                Some(o) => o.clone(),
                None => out_of(&None)?.join("sample.jsonl"),
            };
            let n = cmd_sample(&corpus_of(&a.corpus)?, &out, &sc, cli.force)?;
            eprintln!("sampled {n} snippets into {}", out.display());
        }
        Command::Compose(a) => {
            let configs = match &a.preset {
                Some(p) => resolve_preset_list(p)?
                    .into_iter()
                    .map(|c| c.with_seed(seed))
                    .collect(),
                None => config.prompt_configs(seed)?,
            };
            let shots = match &a.shots {
                Some(s) => ShotSetting::parse_list(s).map_err(CliError::Config)?,
                None => config.shot_settings()?,
            };
            let out = out_of(&a.out)?;
            let manifest = cmd_compose(&corpus_of(&a.corpus)?, &out, &configs, &shots, cli.force)?;
            eprintln!(
                "composed {} task inputs under {}",
                manifest.records.len(),
                out.join(TASKS_DIR).display()
            );
            if !manifest.skipped.is_empty() {
                for s in &manifest.skipped {
                    eprintln!("warning: {}", s.warning);
                }
                return Err(CliError::Partial(format!(
                    "{} infeasible shot settings skipped",
                    manifest.skipped.len()
                )));
            }
        }
        Command::Run(a) => {
            let out = out_of(&a.out)?;
            let spec = match a.backend.as_deref() {
                None => config.backend.clone().unwrap_or(BackendSpec::Oracle),
                Some("oracle") => BackendSpec::Oracle,
                Some("stochastic") => match &config.backend {
                    Some(s @ BackendSpec::Stochastic { .. }) => s.clone(),
                    _ => BackendSpec::Stochastic { params: None },
                },
                Some("http") => {
                    let mut http = match &config.backend {
                        Some(BackendSpec::Http(h)) => h.clone(),
                        _ => HttpConfig::default(),
                    };
                    if let Some(url) = &a.base_url {
                        http.base_url = url.clone();
                    }
                    BackendSpec::Http(http)
                }
                Some(other) => return Err(CliError::Config(format!("unknown backend {other:?}"))),
            };
            let manifest_path = out.join(TASKS_DIR).join(MANIFEST_FILE);
            let manifest = Manifest::load(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
            let corpus = a.corpus.clone().or(config.corpus_path.clone());
            let backend = build_backend(&spec, &manifest, corpus.as_deref(), seed)?;
            let concurrency = a.concurrency.or(config.concurrency).unwrap_or(1);
            let lines = cmd_run(&out, backend.as_ref(), concurrency, cli.force)?;
            let failed = lines.iter().filter(|l| l.error.is_some()).count();
            let correct = lines.iter().filter(|l| l.correct).count();
            eprintln!("{correct}/{} predictions correct", lines.len());
            if failed > 0 {
                return Err(CliError::Partial(format!("{failed} requests failed")));
            }
        }
        Command::Eval(a) => {
            let formats = parse_formats(&a.format)?;
            let written = cmd_eval(
                &corpus_of(&a.corpus)?,
                &out_of(&a.out)?,
                &formats,
                cli.force,
            )?;
            for p in written {
                eprintln!("wrote {}", p.display());
            }
        }
        Command::Report(a) => {
            let formats = parse_formats(&a.format)?;
            for p in cmd_report(&a.input, &a.out, &formats, cli.force)? {
                eprintln!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            e.exit_code()
        }
    }
}
