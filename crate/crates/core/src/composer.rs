//! Renders in-context-learning task inputs.
//!
//! A task input is, line by line: the code context (optional), a blank line
//! (optional), a task description comment (optional), the example prompts, and
//! the to-be-complete prompt. Every prompt is a `//` comment carrying one
//! simple-name/FQN mapping.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{CodeSnippet, Corpus, NameKind, NamePair, StatsIndex};
use crate::rng;

pub const CONCISE_DESCRIPTION: &str = "type inference";
pub const VERBOSE_DESCRIPTION: &str = "parse simple name to fully qualified name";
pub const ARROW: &str = "\u{2192}";

const DESCRIPTION_PREFIX: &str = "// the fully qualified name of ";

/// Examples used by the one-shot setting whose example is not in the code.
/// The first one whose simple name is not bound in the snippet wins.
pub const ENIC_FALLBACKS: [(&str, &str); 3] = [
    ("Object", "java.lang.Object"),
    ("String", "java.lang.String"),
    ("Integer", "java.lang.Integer"),
];

#[derive(Debug, thiserror::Error)]
pub enum ComposeError {
    #[error("shot infeasible for snippet {snippet} ({shot}): {reason}")]
    Infeasible {
        snippet: String,
        shot: ShotKind,
        reason: String,
    },
    #[error("snippet {snippet}: target {target} is not one of its name pairs")]
    UnknownTarget { snippet: String, target: String },
    #[error("two task inputs map to the same file {0}")]
    FileCollision(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskDescription {
    None,
    Concise,
    Verbose,
}

impl TaskDescription {
    pub fn text(self) -> Option<&'static str> {
        match self {
            TaskDescription::None => None,
            TaskDescription::Concise => Some(CONCISE_DESCRIPTION),
            TaskDescription::Verbose => Some(VERBOSE_DESCRIPTION),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    /// `the fully qualified name of SN is FQN`
    Description,
    /// `SN → FQN`
    Symbol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleOrder {
    Random,
    FrequentFirst,
    InfrequentFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OneShotSelection {
    Random,
    MostUsed,
}

/// The five prompt-engineering factors plus rendering switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptConfig {
    pub code_context: bool,
    pub task_description: TaskDescription,
    pub template: Template,
    pub example_order: ExampleOrder,
    pub identifier_quotes: bool,
    #[serde(default)]
    pub blank_line_after_context: bool,
    #[serde(default = "default_one_shot")]
    pub one_shot_selection: OneShotSelection,
    #[serde(default)]
    pub seed: u64,
}

fn default_one_shot() -> OneShotSelection {
    OneShotSelection::Random
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self::basic()
    }
}

impl PromptConfig {
    /// Context, verbose description, description template, random order, quotes.
    pub fn basic() -> Self {
        PromptConfig {
            code_context: true,
            task_description: TaskDescription::Verbose,
            template: Template::Description,
            example_order: ExampleOrder::Random,
            identifier_quotes: true,
            blank_line_after_context: false,
            one_shot_selection: OneShotSelection::Random,
            seed: 0,
        }
    }

    /// Basic with a concise description and infrequent-first examples.
    pub fn best() -> Self {
        PromptConfig {
            task_description: TaskDescription::Concise,
            example_order: ExampleOrder::InfrequentFirst,
            ..Self::basic()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        Self::ablation_suite()
            .into_iter()
            .find(|(n, _)| *n == name)
            .map(|(_, c)| c)
    }

    /// Basic, Best, and the seven single-factor variants of Basic.
    pub fn ablation_suite() -> Vec<(&'static str, PromptConfig)> {
        let basic = Self::basic();
        vec![
            ("basic", basic),
            ("best", Self::best()),
            (
                "no-context",
                PromptConfig {
                    code_context: false,
                    ..basic
                },
            ),
            (
                "concise",
                PromptConfig {
                    task_description: TaskDescription::Concise,
                    ..basic
                },
            ),
            (
                "no-description",
                PromptConfig {
                    task_description: TaskDescription::None,
                    ..basic
                },
            ),
            (
                "symbol",
                PromptConfig {
                    template: Template::Symbol,
                    ..basic
                },
            ),
            (
                "frequent-first",
                PromptConfig {
                    example_order: ExampleOrder::FrequentFirst,
                    ..basic
                },
            ),
            (
                "infrequent-first",
                PromptConfig {
                    example_order: ExampleOrder::InfrequentFirst,
                    ..basic
                },
            ),
            (
                "no-quotes",
                PromptConfig {
                    identifier_quotes: false,
                    ..basic
                },
            ),
        ]
    }

    pub fn with_seed(self, seed: u64) -> Self {
        PromptConfig { seed, ..self }
    }

    /// Stable identifier of the factor combination. The seed is excluded so
    /// that the same configuration keeps its id across reruns.
    pub fn config_id(&self) -> String {
        let canonical = format!(
            "ctx={};desc={:?};tmpl={:?};order={:?};quotes={};blank={};one={:?}",
            self.code_context,
            self.task_description,
            self.template,
            self.example_order,
            self.identifier_quotes,
            self.blank_line_after_context,
            self.one_shot_selection,
        );
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..6])
    }

    /// Name of the matching ablation preset, if any.
    pub fn preset_name(&self) -> Option<&'static str> {
        let id = self.config_id();
        Self::ablation_suite()
            .into_iter()
            .find(|(_, c)| c.config_id() == id)
            .map(|(n, _)| n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShotKind {
    Zero,
    OneEnic,
    One,
    FewRep,
    FewLoo,
}

impl ShotKind {
    pub const ALL: [ShotKind; 5] = [
        ShotKind::Zero,
        ShotKind::OneEnic,
        ShotKind::One,
        ShotKind::FewRep,
        ShotKind::FewLoo,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            ShotKind::Zero => "zero",
            ShotKind::OneEnic => "one-enic",
            ShotKind::One => "one",
            ShotKind::FewRep => "few-rep",
            ShotKind::FewLoo => "few-loo",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ShotKind::Zero => "Zero-Shot",
            ShotKind::OneEnic => "One-Shot-ENIC",
            ShotKind::One => "One-Shot",
            ShotKind::FewRep => "Few-Shot-REP",
            ShotKind::FewLoo => "Few-Shot-LOO",
        }
    }

    pub fn parse(slug: &str) -> Option<Self> {
        ShotKind::ALL.into_iter().find(|s| s.slug() == slug)
    }

    pub fn setting(self) -> ShotSetting {
        match self {
            ShotKind::Zero => ShotSetting::Zero,
            ShotKind::OneEnic => ShotSetting::OneEnic,
            ShotKind::One => ShotSetting::One,
            ShotKind::FewRep => ShotSetting::FewRep(None),
            ShotKind::FewLoo => ShotSetting::FewLoo,
        }
    }
}

impl fmt::Display for ShotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// How many and which example prompts precede the query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShotSetting {
    Zero,
    /// One example whose name is not bound in the snippet.
    OneEnic,
    /// One example taken from the snippet.
    One,
    /// `k` random examples from the snippet; `k` drawn from `[2, n-2]` if unset.
    FewRep(Option<usize>),
    /// All other names of the snippet.
    FewLoo,
}

impl ShotSetting {
    pub fn kind(self) -> ShotKind {
        match self {
            ShotSetting::Zero => ShotKind::Zero,
            ShotSetting::OneEnic => ShotKind::OneEnic,
            ShotSetting::One => ShotKind::One,
            ShotSetting::FewRep(_) => ShotKind::FewRep,
            ShotSetting::FewLoo => ShotKind::FewLoo,
        }
    }

    /// Parses a comma-separated list of shot slugs; `all` expands to every setting.
    pub fn parse_list(spec: &str) -> Result<Vec<ShotSetting>, String> {
        let mut out = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                out.extend(ShotKind::ALL.map(ShotKind::setting));
            } else {
                let kind = ShotKind::parse(part).ok_or_else(|| format!("unknown shot {part:?}"))?;
                out.push(kind.setting());
            }
        }
        if out.is_empty() {
            return Err("no shot settings given".into());
        }
        out.dedup();
        Ok(out)
    }
}

/// One rendered model input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskInput {
    pub snippet_id: String,
    pub target: NamePair,
    pub shot: ShotSetting,
    pub config: PromptConfig,
    pub examples: Vec<NamePair>,
    pub rendered_text: String,
    pub file_name: String,
}

fn quoted(text: &str, quotes: bool) -> String {
    if quotes {
        format!("\"{text}\"")
    } else {
        text.to_string()
    }
}

pub fn render_example(simple_name: &str, fqn: &str, config: &PromptConfig) -> String {
    let q = config.identifier_quotes;
    match config.template {
        Template::Description => format!(
            "{DESCRIPTION_PREFIX}{} is {}",
            quoted(simple_name, q),
            quoted(fqn, q)
        ),
        Template::Symbol => format!("// {} {ARROW} {}", quoted(simple_name, q), quoted(fqn, q)),
    }
}

/// The example template cut off right before the FQN slot.
pub fn render_query(simple_name: &str, config: &PromptConfig) -> String {
    let q = config.identifier_quotes;
    match config.template {
        Template::Description => format!("{DESCRIPTION_PREFIX}{} is", quoted(simple_name, q)),
        Template::Symbol => format!("// {} {ARROW}", quoted(simple_name, q)),
    }
}

fn unquote(text: &str) -> (String, bool) {
    match text
        .strip_prefix('"')
        .and_then(|rest| rest.strip_suffix('"'))
    {
        Some(inner) if text.len() >= 2 => (inner.to_string(), true),
        _ => (text.to_string(), false),
    }
}

/// A query line parsed back into its simple name and quoting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedQuery {
    pub simple_name: String,
    pub quoted: bool,
    pub template: Template,
}

pub fn parse_query_line(line: &str) -> Option<ParsedQuery> {
    let line = line.trim_end();
    if let Some(rest) = line.strip_prefix(DESCRIPTION_PREFIX) {
        let name = rest.strip_suffix(" is")?;
        let (simple_name, quoted) = unquote(name);
        return (!simple_name.is_empty() && !simple_name.contains(' ')).then_some(ParsedQuery {
            simple_name,
            quoted,
            template: Template::Description,
        });
    }
    let rest = line.strip_prefix("// ")?;
    let name = rest.strip_suffix(&format!(" {ARROW}"))?;
    let (simple_name, quoted) = unquote(name);
    (!simple_name.is_empty() && !simple_name.contains(' ')).then_some(ParsedQuery {
        simple_name,
        quoted,
        template: Template::Symbol,
    })
}

/// Parses an example line into `(simple_name, fqn)`.
pub fn parse_example_line(line: &str) -> Option<(String, String)> {
    let line = line.trim_end();
    let (name, fqn) = if let Some(rest) = line.strip_prefix(DESCRIPTION_PREFIX) {
        rest.split_once(" is ")?
    } else {
        line.strip_prefix("// ")?
            .split_once(&format!(" {ARROW} "))?
    };
    let (name, _) = unquote(name);
    let (fqn, _) = unquote(fqn);
    if name.is_empty() || fqn.is_empty() || name.contains(' ') || fqn.contains(' ') {
        return None;
    }
    Some((name, fqn))
}

fn infeasible(snippet: &str, shot: ShotSetting, reason: impl Into<String>) -> ComposeError {
    ComposeError::Infeasible {
        snippet: snippet.to_string(),
        shot: shot.kind(),
        reason: reason.into(),
    }
}

/// Chooses and orders the example prompts for one target.
///
/// Selection depends only on the seed, the snippet, the target and the shot, so
/// configurations that differ in other factors see the same examples.
pub fn select_examples(
    pairs: &[NamePair],
    target: &NamePair,
    shot: ShotSetting,
    config: &PromptConfig,
    stats: &StatsIndex,
) -> Result<Vec<NamePair>, ComposeError> {
    let snippet = target.snippet_id.as_str();
    let others: Vec<&NamePair> = pairs
        .iter()
        .filter(|p| p.simple_name != target.simple_name)
        .collect();
    let n = others.len() + 1;
    let keys = [snippet, target.simple_name.as_str(), shot.kind().slug()];
    let mut select_rng = rng::seeded(config.seed, &[&["select"][..], &keys].concat());

    let mut chosen: Vec<NamePair> = match shot {
        ShotSetting::Zero => Vec::new(),
        ShotSetting::OneEnic => {
            let (name, fqn) = ENIC_FALLBACKS
                .iter()
                .find(|(name, _)| pairs.iter().all(|p| p.simple_name != *name))
                .ok_or_else(|| infeasible(snippet, shot, "every fallback example is bound"))?;
            vec![NamePair::new(snippet, *name, *fqn, NameKind::DeclType, 1)]
        }
        ShotSetting::One => {
            if others.is_empty() {
                return Err(infeasible(snippet, shot, "needs at least 2 name pairs"));
            }
            let pick = match config.one_shot_selection {
                OneShotSelection::Random => others[select_rng.random_range(0..others.len())],
                OneShotSelection::MostUsed => *others
                    .iter()
                    .min_by(|a, b| {
                        stats
                            .usage(&b.fqn)
                            .cmp(&stats.usage(&a.fqn))
                            .then_with(|| a.fqn.cmp(&b.fqn))
                            .then_with(|| a.simple_name.cmp(&b.simple_name))
                    })
                    .expect("non-empty"),
            };
            vec![pick.clone()]
        }
        ShotSetting::FewRep(k) => {
            let k = match k {
                Some(k) if k >= 1 && k < n => k,
                Some(k) => {
                    return Err(infeasible(
                        snippet,
                        shot,
                        format!("k = {k} outside [1, {}]", n.saturating_sub(1)),
                    ))
                }
                None if n >= 4 => select_rng.random_range(2..=n - 2),
                None => return Err(infeasible(snippet, shot, "needs at least 4 name pairs")),
            };
            let mut idx = rand::seq::index::sample(&mut select_rng, others.len(), k).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| others[i].clone()).collect()
        }
        ShotSetting::FewLoo => {
            if others.is_empty() {
                return Err(infeasible(snippet, shot, "needs at least 2 name pairs"));
            }
            others.into_iter().cloned().collect()
        }
    };

    match config.example_order {
        ExampleOrder::Random => {
            let mut order_rng = rng::seeded(config.seed, &[&["order"][..], &keys].concat());
            chosen.shuffle(&mut order_rng);
        }
        ExampleOrder::FrequentFirst => chosen.sort_by(|a, b| {
            stats
                .usage(&b.fqn)
                .cmp(&stats.usage(&a.fqn))
                .then_with(|| a.fqn.cmp(&b.fqn))
                .then_with(|| a.simple_name.cmp(&b.simple_name))
        }),
        ExampleOrder::InfrequentFirst => chosen.sort_by(|a, b| {
            stats
                .usage(&a.fqn)
                .cmp(&stats.usage(&b.fqn))
                .then_with(|| a.fqn.cmp(&b.fqn))
                .then_with(|| a.simple_name.cmp(&b.simple_name))
        }),
    }
    Ok(chosen)
}

fn sanitize(text: &str) -> String {
    text.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-' | '$') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// File-system safe rendering of a form-tagged name; injective over valid names.
pub fn target_slug(simple_name: &str) -> String {
    let (base, form) = crate::corpus::split_form(simple_name);
    let tag = match form {
        crate::corpus::Form::Plain => "",
        crate::corpus::Form::Generic => "-gen",
        crate::corpus::Form::Array => "-arr",
        crate::corpus::Form::Call => "-call",
    };
    format!("{}{tag}", sanitize(base))
}

pub fn task_file_name(snippet_id: &str, simple_name: &str) -> String {
    format!(
        "{}__{}.java",
        sanitize(snippet_id),
        target_slug(simple_name)
    )
}

/// Renders one task input.
pub fn compose(
    snippet: &CodeSnippet,
    pairs: &[NamePair],
    target: &NamePair,
    shot: ShotSetting,
    config: &PromptConfig,
    stats: &StatsIndex,
) -> Result<TaskInput, ComposeError> {
    if !pairs.iter().any(|p| p.simple_name == target.simple_name) {
        return Err(ComposeError::UnknownTarget {
            snippet: snippet.id.clone(),
            target: target.simple_name.clone(),
        });
    }
    let examples = select_examples(pairs, target, shot, config, stats)?;

    let mut lines: Vec<String> = Vec::new();
    if config.code_context {
        lines.push(
            snippet
                .source_text
                .trim_end_matches(['\n', '\r'])
                .to_string(),
        );
        if config.blank_line_after_context {
            lines.push(String::new());
        }
    }
    if let Some(text) = config.task_description.text() {
        lines.push(format!("// {text}"));
    }
    for example in &examples {
        lines.push(render_example(&example.simple_name, &example.fqn, config));
    }
    lines.push(render_query(&target.simple_name, config));

    Ok(TaskInput {
        snippet_id: snippet.id.clone(),
        target: target.clone(),
        shot,
        config: *config,
        examples,
        rendered_text: lines.join("\n"),
        file_name: task_file_name(&snippet.id, &target.simple_name),
    })
}

/// One line of the batch manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRecord {
    /// Path relative to the manifest's directory.
    pub file: String,
    pub snippet_id: String,
    pub target: String,
    pub gold_fqn: String,
    pub shot: ShotKind,
    pub config_id: String,
    pub seed: u64,
}

/// Manifest entry for a (snippet, target, shot, config) that could not be composed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub warning: String,
    pub snippet_id: String,
    pub target: String,
    pub shot: ShotKind,
    pub config_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifestLine {
    Task(ManifestRecord),
    Skipped(SkipRecord),
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub records: Vec<ManifestRecord>,
    pub skipped: Vec<SkipRecord>,
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, String> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut manifest = Manifest::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ManifestLine = serde_json::from_str(line)
                .map_err(|e| format!("{}: line {}: {e}", path.display(), i + 1))?;
            match parsed {
                ManifestLine::Task(r) => manifest.records.push(r),
                ManifestLine::Skipped(s) => manifest.skipped.push(s),
            }
        }
        Ok(manifest)
    }

    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        for r in &self.records {
            writeln!(out, "{}", serde_json::to_string(r)?)?;
        }
        for s in &self.skipped {
            writeln!(out, "{}", serde_json::to_string(s)?)?;
        }
        Ok(())
    }
}

/// Composes every (config, shot, snippet, target) combination in memory.
///
/// Infeasible combinations are reported as [`SkipRecord`]s instead of failing.
pub fn compose_all(
    corpus: &Corpus,
    stats: &StatsIndex,
    configs: &[PromptConfig],
    shots: &[ShotSetting],
) -> Result<(Vec<TaskInput>, Vec<SkipRecord>), ComposeError> {
    let mut tasks = Vec::new();
    let mut skipped = Vec::new();
    for config in configs {
        for &shot in shots {
            for (snippet, pairs) in corpus.entries() {
                for target in pairs {
                    match compose(snippet, pairs, target, shot, config, stats) {
                        Ok(task) => tasks.push(task),
                        Err(err @ ComposeError::Infeasible { .. }) => skipped.push(SkipRecord {
                            warning: err.to_string(),
                            snippet_id: snippet.id.clone(),
                            target: target.simple_name.clone(),
                            shot: shot.kind(),
                            config_id: config.config_id(),
                        }),
                        Err(other) => return Err(other),
                    }
                }
            }
        }
    }
    Ok((tasks, skipped))
}

pub fn task_relative_path(task: &TaskInput) -> String {
    format!(
        "{}/{}/{}",
        task.config.config_id(),
        task.shot.kind().slug(),
        task.file_name
    )
}

/// Writes every task input as a `.java` file under
/// `<out_dir>/<config-id>/<shot>/` and the manifest last.
pub fn compose_batch(
    corpus: &Corpus,
    stats: &StatsIndex,
    configs: &[PromptConfig],
    shots: &[ShotSetting],
    out_dir: &Path,
) -> Result<Manifest, ComposeError> {
    let (tasks, skipped) = compose_all(corpus, stats, configs, shots)?;
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ComposeError::Io { path, source }
    };

    let mut seen = std::collections::HashSet::new();
    let mut records = Vec::with_capacity(tasks.len());
    for task in &tasks {
        let rel = task_relative_path(task);
        if !seen.insert(rel.clone()) {
            return Err(ComposeError::FileCollision(rel));
        }
        let path = out_dir.join(&rel);
        let dir = path.parent().expect("task path has a parent");
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        fs::write(&path, &task.rendered_text).map_err(io_err(&path))?;
        records.push(ManifestRecord {
            file: rel,
            snippet_id: task.snippet_id.clone(),
            target: task.target.simple_name.clone(),
            gold_fqn: task.target.fqn.clone(),
            shot: task.shot.kind(),
            config_id: task.config.config_id(),
            seed: task.config.seed,
        });
    }

    let manifest = Manifest { records, skipped };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let mut buf = Vec::new();
    manifest.write(&mut buf).map_err(io_err(&manifest_path))?;
    fs::write(&manifest_path, buf).map_err(io_err(&manifest_path))?;
    Ok(manifest)
}
