//! Dataset model: snippets, their simple-name/FQN bindings, and corpus-wide
//! FQN statistics.
//!
//! A corpus file holds one JSON object per line:
//!
//! ```json
//! {"id":"m1","library":"jdk","package":"java.io","loc":3,"code":"...",
//!  "pairs":[{"name":"File","fqn":"java.io.File","kind":"decl","count":1}]}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::normalizer::normalize_fqn;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate snippet id: {0}")]
    DuplicateId(String),
    #[error("snippet {snippet}: simple name {name} is bound more than once")]
    Shadowed { snippet: String, name: String },
    #[error("snippet {snippet}: {message}")]
    Invalid { snippet: String, message: String },
}

/// Syntactic role of a cannot-be-resolved simple name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NameKind {
    /// Type of a variable declaration.
    #[serde(rename = "decl")]
    DeclType,
    /// Type after `new` (instantiation or array creation).
    #[serde(rename = "inst")]
    InstType,
    /// Object or type on which a method is invoked or a field accessed.
    #[serde(rename = "recv")]
    Receiver,
    /// Method or field name of the first (non-chained) access.
    #[serde(rename = "member")]
    Member,
}

impl NameKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NameKind::DeclType => "decl",
            NameKind::InstType => "inst",
            NameKind::Receiver => "recv",
            NameKind::Member => "member",
        }
    }
}

/// Syntactic form suffix carried by a simple name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Form {
    Plain,
    Generic,
    Array,
    Call,
}

impl Form {
    pub const ALL: [Form; 4] = [Form::Plain, Form::Generic, Form::Array, Form::Call];

    pub fn suffix(self) -> &'static str {
        match self {
            Form::Plain => "",
            Form::Generic => "<>",
            Form::Array => "[]",
            Form::Call => "()",
        }
    }

    pub fn apply(self, base: &str) -> String {
        format!("{base}{}", self.suffix())
    }
}

/// Splits a form-tagged simple name into its base identifier and form.
pub fn split_form(name: &str) -> (&str, Form) {
    for form in [Form::Generic, Form::Array, Form::Call] {
        if let Some(base) = name.strip_suffix(form.suffix()) {
            return (base, form);
        }
    }
    (name, Form::Plain)
}

pub fn base_name(name: &str) -> &str {
    split_form(name).0
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeSnippet {
    pub id: String,
    pub library: String,
    pub package_path: String,
    pub source_text: String,
    pub loc: usize,
}

/// Number of non-blank lines.
pub fn count_loc(source: &str) -> usize {
    source.lines().filter(|l| !l.trim().is_empty()).count()
}

impl CodeSnippet {
    pub fn new(
        id: impl Into<String>,
        library: impl Into<String>,
        package_path: impl Into<String>,
        source_text: impl Into<String>,
    ) -> Self {
        let source_text = source_text.into();
        CodeSnippet {
            id: id.into(),
            library: library.into(),
            package_path: package_path.into(),
            loc: count_loc(&source_text),
            source_text,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NamePair {
    pub snippet_id: String,
    pub simple_name: String,
    pub fqn: String,
    pub kind: NameKind,
    pub occurrence_count: u32,
}

impl NamePair {
    pub fn new(
        snippet_id: impl Into<String>,
        simple_name: impl Into<String>,
        fqn: impl Into<String>,
        kind: NameKind,
        occurrence_count: u32,
    ) -> Self {
        NamePair {
            snippet_id: snippet_id.into(),
            simple_name: simple_name.into(),
            fqn: fqn.into(),
            kind,
            occurrence_count,
        }
    }

    pub fn base(&self) -> &str {
        base_name(&self.simple_name)
    }
}

fn check_simple_name(name: &str) -> Result<(), String> {
    let (base, _) = split_form(name);
    if base.is_empty() {
        return Err(format!("empty simple name {name:?}"));
    }
    if base
        .chars()
        .any(|c| c.is_whitespace() || "<>[]()\"'".contains(c))
    {
        return Err(format!("malformed simple name {name:?}"));
    }
    Ok(())
}

fn check_fqn(fqn: &str) -> Result<(), String> {
    if fqn.chars().any(char::is_whitespace) {
        return Err(format!("FQN {fqn:?} contains whitespace"));
    }
    let tokens: Vec<&str> = fqn.split('.').collect();
    if tokens.len() < 2 || tokens.iter().any(|t| t.is_empty()) {
        return Err(format!(
            "FQN {fqn:?} needs at least two dot-separated tokens"
        ));
    }
    if normalize_fqn(fqn) != fqn {
        return Err(format!("FQN {fqn:?} is not in normalized form"));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PairRecord {
    name: String,
    fqn: String,
    kind: NameKind,
    count: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SnippetRecord {
    id: String,
    #[serde(default)]
    library: String,
    #[serde(default)]
    package: String,
    loc: usize,
    code: String,
    #[serde(default)]
    pairs: Vec<PairRecord>,
}

/// Indexed, validated collection of snippets and their name pairs.
///
/// Immutable after construction.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    snippets: Vec<CodeSnippet>,
    pairs: Vec<Vec<NamePair>>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, validating every snippet and pair invariant.
    pub fn from_parts(
        entries: impl IntoIterator<Item = (CodeSnippet, Vec<NamePair>)>,
    ) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::default();
        for (snippet, pairs) in entries {
            corpus.push(snippet, pairs)?;
        }
        Ok(corpus)
    }

    fn push(&mut self, snippet: CodeSnippet, mut pairs: Vec<NamePair>) -> Result<(), CorpusError> {
        let invalid = |message: String| CorpusError::Invalid {
            snippet: snippet.id.clone(),
            message,
        };
        if snippet.id.is_empty() {
            return Err(invalid("empty snippet id".into()));
        }
        if self.by_id.contains_key(&snippet.id) {
            return Err(CorpusError::DuplicateId(snippet.id));
        }
        if snippet.source_text.trim().is_empty() {
            return Err(invalid("empty source text".into()));
        }
        let loc = count_loc(&snippet.source_text);
        if loc != snippet.loc {
            return Err(invalid(format!(
                "loc {} does not match {} non-blank lines",
                snippet.loc, loc
            )));
        }
        let mut seen = BTreeSet::new();
        for pair in &mut pairs {
            pair.snippet_id.clone_from(&snippet.id);
            check_simple_name(&pair.simple_name).map_err(invalid)?;
            check_fqn(&pair.fqn).map_err(invalid)?;
            if pair.occurrence_count == 0 {
                return Err(invalid(format!(
                    "{} has zero occurrences",
                    pair.simple_name
                )));
            }
            if !seen.insert(pair.simple_name.clone()) {
                return Err(CorpusError::Shadowed {
                    snippet: snippet.id.clone(),
                    name: pair.simple_name.clone(),
                });
            }
        }
        self.by_id.insert(snippet.id.clone(), self.snippets.len());
        self.snippets.push(snippet);
        self.pairs.push(pairs);
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::read(BufReader::new(file)).map_err(|e| match e {
            CorpusError::Io { source, .. } => CorpusError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => other,
        })
    }

    /// Parses the line-oriented JSON format. Blank lines are skipped.
    pub fn read(reader: impl BufRead) -> Result<Self, CorpusError> {
        let mut corpus = Corpus::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| CorpusError::Io {
                path: PathBuf::new(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record: SnippetRecord =
                serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            let pairs = record
                .pairs
                .into_iter()
                .map(|p| NamePair::new(record.id.clone(), p.name, p.fqn, p.kind, p.count))
                .collect();
            let snippet = CodeSnippet {
                id: record.id,
                library: record.library,
                package_path: record.package,
                source_text: record.code,
                loc: record.loc,
            };
            corpus.push(snippet, pairs)?;
        }
        Ok(corpus)
    }

    pub fn parse_str(text: &str) -> Result<Self, CorpusError> {
        Self::read(text.as_bytes())
    }

    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        for (snippet, pairs) in self.entries() {
            writeln!(out, "{}", snippet_json(snippet, pairs))?;
        }
        Ok(())
    }

    /// Returns a new corpus holding only the given snippet ids, in that order.
    pub fn subset(&self, ids: &[String]) -> Corpus {
        let mut out = Corpus::default();
        for id in ids {
            if let Some(&idx) = self.by_id.get(id) {
                out.by_id.insert(id.clone(), out.snippets.len());
                out.snippets.push(self.snippets[idx].clone());
                out.pairs.push(self.pairs[idx].clone());
            }
        }
        out
    }

    pub fn snippets(&self) -> &[CodeSnippet] {
        &self.snippets
    }

    pub fn entries(&self) -> impl Iterator<Item = (&CodeSnippet, &[NamePair])> {
        self.snippets
            .iter()
            .zip(self.pairs.iter().map(Vec::as_slice))
    }

    pub fn get(&self, id: &str) -> Option<&CodeSnippet> {
        self.by_id.get(id).map(|&i| &self.snippets[i])
    }

    pub fn pairs_of(&self, id: &str) -> &[NamePair] {
        self.by_id
            .get(id)
            .map_or(&[], |&i| self.pairs[i].as_slice())
    }

    pub fn all_pairs(&self) -> impl Iterator<Item = &NamePair> {
        self.pairs.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.snippets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snippets.is_empty()
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.iter().map(Vec::len).sum()
    }
}

fn snippet_json(snippet: &CodeSnippet, pairs: &[NamePair]) -> String {
    let record = SnippetRecord {
        id: snippet.id.clone(),
        library: snippet.library.clone(),
        package: snippet.package_path.clone(),
        loc: snippet.loc,
        code: snippet.source_text.clone(),
        pairs: pairs
            .iter()
            .map(|p| PairRecord {
                name: p.simple_name.clone(),
                fqn: p.fqn.clone(),
                kind: p.kind,
                count: p.occurrence_count,
            })
            .collect(),
    };
    serde_json::to_string(&record).expect("snippet record serializes")
}

/// Corpus-wide properties of one FQN.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FqnStats {
    pub fqn: String,
    pub length_tokens: usize,
    pub usage_count: u64,
    /// Distinct FQNs sharing a base simple name with this FQN (polysemy).
    pub sn_fqn: usize,
    /// Distinct receiver names bound to this FQN (synonymy).
    pub fqn_sn: usize,
}

impl FqnStats {
    pub fn buckets(&self) -> PropertyBuckets {
        bucketize(self)
    }
}

pub fn fqn_length(fqn: &str) -> usize {
    fqn.split('.').count()
}

/// Per-FQN statistics plus the base-name → FQN index used for polysemy lookups.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatsIndex {
    by_fqn: BTreeMap<String, FqnStats>,
    fqns_by_base: BTreeMap<String, BTreeSet<String>>,
}

impl StatsIndex {
    pub fn get(&self, fqn: &str) -> Option<&FqnStats> {
        self.by_fqn.get(fqn)
    }

    pub fn len(&self) -> usize {
        self.by_fqn.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_fqn.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FqnStats> {
        self.by_fqn.values()
    }

    pub fn usage(&self, fqn: &str) -> u64 {
        self.by_fqn.get(fqn).map_or(0, |s| s.usage_count)
    }

    /// Number of distinct FQNs bound to the base of `simple_name` (at least 1).
    pub fn sn_fqn_for_name(&self, simple_name: &str) -> usize {
        self.fqns_by_base
            .get(base_name(simple_name))
            .map_or(1, |s| s.len().max(1))
    }
}

pub fn compute_stats(corpus: &Corpus) -> StatsIndex {
    let mut usage: BTreeMap<&str, u64> = BTreeMap::new();
    let mut fqns_by_base: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut bases_by_fqn: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut receivers: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();

    for pair in corpus.all_pairs() {
        *usage.entry(&pair.fqn).or_default() += u64::from(pair.occurrence_count);
        fqns_by_base
            .entry(pair.base().to_string())
            .or_default()
            .insert(pair.fqn.clone());
        bases_by_fqn
            .entry(&pair.fqn)
            .or_default()
            .insert(pair.base());
        if pair.kind == NameKind::Receiver {
            receivers
                .entry(&pair.fqn)
                .or_default()
                .insert(&pair.simple_name);
        }
    }

    let by_fqn = usage
        .into_iter()
        .map(|(fqn, usage_count)| {
            let sn_fqn = bases_by_fqn[fqn]
                .iter()
                .map(|b| fqns_by_base[*b].len())
                .max()
                .unwrap_or(1);
            let fqn_sn = receivers.get(fqn).map_or(1, |r| r.len().max(1));
            let stats = FqnStats {
                fqn: fqn.to_string(),
                length_tokens: fqn_length(fqn),
                usage_count,
                sn_fqn,
                fqn_sn,
            };
            (fqn.to_string(), stats)
        })
        .collect();

    StatsIndex {
        by_fqn,
        fqns_by_base,
    }
}

/// The four stratification dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dimension {
    Length,
    Usage,
    SnFqn,
    FqnSn,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Length,
        Dimension::Usage,
        Dimension::SnFqn,
        Dimension::FqnSn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Length => "length",
            Dimension::Usage => "usage",
            Dimension::SnFqn => "sn_fqn",
            Dimension::FqnSn => "fqn_sn",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Dimension::Length => "FQN Length",
            Dimension::Usage => "FQN Usage",
            Dimension::SnFqn => "SN:FQN",
            Dimension::FqnSn => "FQN:SN",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Dimension::ALL.into_iter().find(|d| d.as_str() == s)
    }

    /// Bucket labels in ascending order of the underlying quantity.
    pub fn labels(self) -> [&'static str; 4] {
        match self {
            Dimension::Length => ["2-4", "5-7", "8-10", ">=11"],
            Dimension::Usage => ["[1,10)", "[10,1k)", "[1k,10k)", ">=10k"],
            Dimension::SnFqn | Dimension::FqnSn => ["1:1", "1:2", "1:3", "1:>=4"],
        }
    }
}

/// Bucket indices (0..4, ascending) for each dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PropertyBuckets {
    pub length: u8,
    pub usage: u8,
    pub sn_fqn: u8,
    pub fqn_sn: u8,
}

impl PropertyBuckets {
    pub fn get(&self, dim: Dimension) -> u8 {
        match dim {
            Dimension::Length => self.length,
            Dimension::Usage => self.usage,
            Dimension::SnFqn => self.sn_fqn,
            Dimension::FqnSn => self.fqn_sn,
        }
    }

    pub fn label(&self, dim: Dimension) -> &'static str {
        dim.labels()[self.get(dim) as usize]
    }
}

pub fn length_bucket(tokens: usize) -> u8 {
    match tokens {
        0..=4 => 0,
        5..=7 => 1,
        8..=10 => 2,
        _ => 3,
    }
}

pub fn usage_bucket(usage: u64) -> u8 {
    match usage {
        0..=9 => 0,
        10..=999 => 1,
        1_000..=9_999 => 2,
        _ => 3,
    }
}

pub fn cardinality_bucket(n: usize) -> u8 {
    match n {
        0 | 1 => 0,
        2 => 1,
        3 => 2,
        _ => 3,
    }
}

pub fn bucketize(stats: &FqnStats) -> PropertyBuckets {
    PropertyBuckets {
        length: length_bucket(stats.length_tokens),
        usage: usage_bucket(stats.usage_count),
        sn_fqn: cardinality_bucket(stats.sn_fqn),
        fqn_sn: cardinality_bucket(stats.fqn_sn),
    }
}

impl fmt::Display for NameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
