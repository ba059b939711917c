//! Accuracy reports: overall, per property bucket, per library, and the
//! per-instance accuracy variants.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::composer::{PromptConfig, ShotKind};
use crate::corpus::{
    cardinality_bucket, length_bucket, usage_bucket, Corpus, Dimension, StatsIndex,
};
use crate::normalizer::is_correct;
use crate::rng;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("record {snippet}/{name}: gold FQN {gold} has no corpus statistics")]
    UnknownGold {
        snippet: String,
        name: String,
        gold: String,
    },
    #[error("record {snippet}/{name}: correct flag disagrees with exact match")]
    InconsistentRecord { snippet: String, name: String },
    #[error("no prediction groups to score")]
    Empty,
    #[error("report line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub snippet_id: String,
    pub simple_name: String,
    pub gold_fqn: String,
    pub predicted_fqn: String,
    pub correct: bool,
    pub shot: ShotKind,
    pub config_id: String,
    pub seed: u64,
}

impl PredictionRecord {
    pub fn is_consistent(&self) -> bool {
        self.correct == is_correct(&self.predicted_fqn, &self.gold_fqn)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub correct: u64,
    pub total: u64,
}

impl Tally {
    pub fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += correct as u64;
    }

    /// Percentage; `None` for an empty cell.
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.correct as f64 / self.total as f64)
    }
}

/// What a cell is restricted to, beyond its configuration and shot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stratum {
    Overall,
    Bucket(Dimension, u8),
    Library(String),
}

impl Stratum {
    pub fn dimension_label(&self) -> &str {
        match self {
            Stratum::Overall => "overall",
            Stratum::Bucket(d, _) => d.as_str(),
            Stratum::Library(_) => "library",
        }
    }

    pub fn bucket_label(&self) -> &str {
        match self {
            Stratum::Overall => "all",
            Stratum::Bucket(d, b) => d.labels()[*b as usize],
            Stratum::Library(name) => name,
        }
    }

    pub fn parse(dimension: &str, bucket: &str) -> Option<Stratum> {
        match dimension {
            "overall" => (bucket == "all").then_some(Stratum::Overall),
            "library" => Some(Stratum::Library(bucket.to_string())),
            d => {
                let dim = Dimension::parse(d)?;
                let idx = dim.labels().iter().position(|l| *l == bucket)?;
                Some(Stratum::Bucket(dim, idx as u8))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub config_id: String,
    pub shot: ShotKind,
    pub stratum: Stratum,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StratifiedReport {
    pub cells: BTreeMap<CellKey, Tally>,
}

impl StratifiedReport {
    pub fn cell(&self, config_id: &str, shot: ShotKind, stratum: &Stratum) -> Option<Tally> {
        self.cells
            .get(&CellKey {
                config_id: config_id.to_string(),
                shot,
                stratum: stratum.clone(),
            })
            .copied()
    }

    pub fn overall(&self, config_id: &str, shot: ShotKind) -> Option<Tally> {
        self.cell(config_id, shot, &Stratum::Overall)
    }

    pub fn bucket(&self, config_id: &str, shot: ShotKind, dim: Dimension, bucket: u8) -> Tally {
        self.cell(config_id, shot, &Stratum::Bucket(dim, bucket))
            .unwrap_or_default()
    }

    pub fn config_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.cells.keys().map(|k| k.config_id.clone()).collect();
        ids.dedup();
        ids
    }

    pub fn shots(&self, config_id: &str) -> Vec<ShotKind> {
        let mut shots: Vec<ShotKind> = self
            .cells
            .keys()
            .filter(|k| k.config_id == config_id)
            .map(|k| k.shot)
            .collect();
        shots.dedup();
        shots
    }

    pub fn libraries(&self, config_id: &str) -> Vec<String> {
        let mut libs: Vec<String> = self
            .cells
            .keys()
            .filter_map(|k| match &k.stratum {
                Stratum::Library(l) if k.config_id == config_id => Some(l.clone()),
                _ => None,
            })
            .collect();
        libs.sort();
        libs.dedup();
        libs
    }
}

/// Scores records into per-(config, shot) cells. Library cells are added when
/// a corpus is given.
pub fn evaluate(
    records: &[PredictionRecord],
    stats: &StatsIndex,
    corpus: Option<&Corpus>,
) -> Result<StratifiedReport, EvalError> {
    let mut report = StratifiedReport::default();
    for r in records {
        let gold = stats
            .get(&r.gold_fqn)
            .ok_or_else(|| EvalError::UnknownGold {
                snippet: r.snippet_id.clone(),
                name: r.simple_name.clone(),
                gold: r.gold_fqn.clone(),
            })?;
        if !r.is_consistent() {
            return Err(EvalError::InconsistentRecord {
                snippet: r.snippet_id.clone(),
                name: r.simple_name.clone(),
            });
        }
        let mut strata = vec![
            Stratum::Overall,
            Stratum::Bucket(Dimension::Length, length_bucket(gold.length_tokens)),
            Stratum::Bucket(Dimension::Usage, usage_bucket(gold.usage_count)),
            Stratum::Bucket(
                Dimension::SnFqn,
                cardinality_bucket(stats.sn_fqn_for_name(&r.simple_name)),
            ),
            Stratum::Bucket(Dimension::FqnSn, cardinality_bucket(gold.fqn_sn)),
        ];
        if let Some(snippet) = corpus.and_then(|c| c.get(&r.snippet_id)) {
            strata.push(Stratum::Library(snippet.library.clone()));
        }
        for stratum in strata {
            report
                .cells
                .entry(CellKey {
                    config_id: r.config_id.clone(),
                    shot: r.shot,
                    stratum,
                })
                .or_default()
                .add(r.correct);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyVariants {
    pub individuals: f64,
    pub majority_win: f64,
    pub any_correct: f64,
    pub instances: usize,
    pub names: usize,
}

/// Individuals, majority-win and any-correct accuracy (percentages) over
/// instances grouped by `(snippet_id, simple_name)`. Majority ties are broken
/// by a seeded random pick.
pub fn accuracy_variants(
    records: &[PredictionRecord],
    seed: u64,
) -> Result<AccuracyVariants, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut groups: BTreeMap<(&str, &str), Vec<&PredictionRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.snippet_id.as_str(), r.simple_name.as_str()))
            .or_default()
            .push(r);
    }
    let individuals = records.iter().filter(|r| r.correct).count();
    let mut majority = 0usize;
    let mut any = 0usize;
    for ((snippet, name), group) in &groups {
        let gold = &group[0].gold_fqn;
        let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
        for r in group {
            *votes.entry(r.predicted_fqn.as_str()).or_default() += 1;
        }
        let top = *votes.values().max().expect("non-empty group");
        let tied: Vec<&str> = votes
            .iter()
            .filter(|(_, n)| **n == top)
            .map(|(p, _)| *p)
            .collect();
        let pick = if tied.len() == 1 {
            tied[0]
        } else {
            let mut rng = rng::seeded(seed, &["majority", snippet, name]);
            tied[rng.random_range(0..tied.len())]
        };
        majority += is_correct(pick, gold) as usize;
        any += group.iter().any(|r| r.correct) as usize;
    }
    let pct = |n: usize, d: usize| 100.0 * n as f64 / d as f64;
    Ok(AccuracyVariants {
        individuals: pct(individuals, records.len()),
        majority_win: pct(majority, groups.len()),
        any_correct: pct(any, groups.len()),
        instances: records.len(),
        names: groups.len(),
    })
}

pub const CSV_HEADER: &str = "config_id,shot,dimension,bucket,correct,total,accuracy";

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            c => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

pub fn to_csv(report: &StratifiedReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (key, tally) in &report.cells {
        let acc = tally
            .accuracy()
            .map(|a| format!("{a:.2}"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(&key.config_id),
            key.shot.slug(),
            key.stratum.dimension_label(),
            csv_field(key.stratum.bucket_label()),
            tally.correct,
            tally.total,
            acc
        );
    }
    out
}

pub fn from_csv(text: &str) -> Result<StratifiedReport, EvalError> {
    let mut report = StratifiedReport::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || (i == 0 && line == CSV_HEADER) {
            continue;
        }
        let err = |message: String| EvalError::Parse {
            line: line_no,
            message,
        };
        let f = split_csv_line(line);
        if f.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", f.len())));
        }
        let shot = ShotKind::parse(&f[1]).ok_or_else(|| err(format!("unknown shot {:?}", f[1])))?;
        let stratum = Stratum::parse(&f[2], &f[3])
            .ok_or_else(|| err(format!("unknown cell {}/{}", f[2], f[3])))?;
        let correct = f[4].parse().map_err(|_| err("bad correct count".into()))?;
        let total = f[5].parse().map_err(|_| err("bad total count".into()))?;
        report.cells.insert(
            CellKey {
                config_id: f[0].clone(),
                shot,
                stratum,
            },
            Tally { correct, total },
        );
    }
    Ok(report)
}

fn pct(t: Option<Tally>) -> String {
    match t.and_then(|t| t.accuracy()) {
        Some(a) => format!("{a:.2}%"),
        None => "n/a".to_string(),
    }
}

fn config_label(config_id: &str) -> String {
    match PromptConfig::ablation_suite()
        .into_iter()
        .find(|(_, c)| c.config_id() == config_id)
    {
        Some((name, _)) => format!("{name} (`{config_id}`)"),
        None => format!("`{config_id}`"),
    }
}

fn shot_header(out: &mut String, first: &str, shots: &[ShotKind]) {
    let _ = write!(out, "| {first} |");
    for s in shots {
        let _ = write!(out, " {} |", s.title());
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in shots {
        out.push_str("---:|");
    }
    out.push('\n');
}

fn all_shots(report: &StratifiedReport) -> Vec<ShotKind> {
    let mut shots: Vec<ShotKind> = report.cells.keys().map(|k| k.shot).collect();
    shots.sort();
    shots.dedup();
    shots
}

/// Markdown: overall accuracy with deltas against the basic configuration,
/// then one bucket × shot table per configuration and dimension.
pub fn to_markdown(report: &StratifiedReport) -> String {
    let mut out = String::new();
    let shots = all_shots(report);
    let configs = report.config_ids();
    let basic_id = PromptConfig::basic().config_id();
    let has_basic = configs.contains(&basic_id);

    out.push_str("## Overall accuracy\n\n");
    shot_header(&mut out, "Configuration", &shots);
    let mut ordered = configs.clone();
    ordered.sort_by_key(|id| *id != basic_id);
    for id in &ordered {
        let _ = write!(out, "| {} |", config_label(id));
        for &shot in &shots {
            let cell = report.overall(id, shot);
            let text = if has_basic && *id != basic_id {
                match (
                    cell.and_then(|t| t.accuracy()),
                    report.overall(&basic_id, shot).and_then(|t| t.accuracy()),
                ) {
                    (Some(a), Some(b)) => format!("{:+.2}%", a - b),
                    _ => "n/a".to_string(),
                }
            } else {
                pct(cell)
            };
            let _ = write!(out, " {text} |");
        }
        out.push('\n');
    }
    if has_basic && ordered.len() > 1 {
        out.push_str("\nRows other than the basic configuration show the difference from it.\n");
    }

    for id in &ordered {
        let _ = writeln!(out, "\n## {}\n", config_label(id));
        for dim in Dimension::ALL {
            let _ = writeln!(out, "### {}\n", dim.title());
            shot_header(&mut out, dim.title(), &shots);
            for (b, label) in dim.labels().iter().enumerate() {
                let _ = write!(out, "| {label} |");
                for &shot in &shots {
                    let _ = write!(
                        out,
                        " {} |",
                        pct(report.cell(id, shot, &Stratum::Bucket(dim, b as u8)))
                    );
                }
                out.push('\n');
            }
            out.push('\n');
        }
        let libs = report.libraries(id);
        if !libs.is_empty() {
            out.push_str("### Library\n\n");
            shot_header(&mut out, "Library", &shots);
            for lib in libs {
                let _ = write!(out, "| {lib} |");
                for &shot in &shots {
                    let _ = write!(
                        out,
                        " {} |",
                        pct(report.cell(id, shot, &Stratum::Library(lib.clone())))
                    );
                }
                out.push('\n');
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// Writes `report.csv` and/or `report.md` into `dir`; returns the paths written.
pub fn emit_report(
    report: &StratifiedReport,
    dir: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>, EvalError> {
    let mut written = Vec::new();
    for format in formats {
        let (name, body) = match format {
            ReportFormat::Csv => ("report.csv", to_csv(report)),
            ReportFormat::Markdown => ("report.md", to_markdown(report)),
        };
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|source| EvalError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{compute_stats, CodeSnippet, NameKind, NamePair};
    use proptest::prelude::*;

    fn corpus() -> Corpus {
        let s = CodeSnippet::new("s1", "jdk", "p", "x();");
        let pairs = vec![
            NamePair::new("s1", "File", "java.io.File", NameKind::DeclType, 20),
            NamePair::new("s1", "f", "java.io.File", NameKind::Receiver, 1),
            NamePair::new("s1", "Date", "java.sql.Date", NameKind::DeclType, 2),
        ];
        let t = CodeSnippet::new("s2", "android", "q", "y();");
        let tp = vec![NamePair::new(
            "s2",
            "Date",
            "java.util.Date",
            NameKind::DeclType,
            5,
        )];
        Corpus::from_parts([(s, pairs), (t, tp)]).unwrap()
    }

    fn rec(snippet: &str, name: &str, gold: &str, pred: &str, shot: ShotKind) -> PredictionRecord {
        PredictionRecord {
            snippet_id: snippet.into(),
            simple_name: name.into(),
            gold_fqn: gold.into(),
            predicted_fqn: pred.into(),
            correct: is_correct(pred, gold),
            shot,
            config_id: "c".into(),
            seed: 0,
        }
    }

    #[test]
    fn seven_of_ten() {
        let c = corpus();
        let stats = compute_stats(&c);
        let records: Vec<_> = (0..10)
            .map(|i| {
                let pred = if i < 7 { "java.io.File" } else { "..." };
                rec("s1", "File", "java.io.File", pred, ShotKind::Zero)
            })
            .collect();
        let report = evaluate(&records, &stats, Some(&c)).unwrap();
        let overall = report.overall("c", ShotKind::Zero).unwrap();
        assert_eq!(
            overall,
            Tally {
                correct: 7,
                total: 10
            }
        );
        assert_eq!(format!("{:.2}", overall.accuracy().unwrap()), "70.00");
        assert!(report.overall("c", ShotKind::One).is_none());
        assert_eq!(
            report.cell("c", ShotKind::Zero, &Stratum::Library("jdk".into())),
            Some(Tally {
                correct: 7,
                total: 10
            })
        );
    }

    #[test]
    fn polysemy_and_synonymy_buckets() {
        let c = corpus();
        let stats = compute_stats(&c);
        let records = vec![
            rec(
                "s1",
                "Date",
                "java.sql.Date",
                "java.sql.Date",
                ShotKind::Zero,
            ),
            rec("s1", "f", "java.io.File", "java.io.File", ShotKind::Zero),
        ];
        let report = evaluate(&records, &stats, None).unwrap();
        assert_eq!(
            report
                .bucket("c", ShotKind::Zero, Dimension::SnFqn, 1)
                .total,
            1
        );
        assert_eq!(
            report
                .bucket("c", ShotKind::Zero, Dimension::SnFqn, 0)
                .total,
            1
        );
        assert_eq!(
            report
                .bucket("c", ShotKind::Zero, Dimension::FqnSn, 0)
                .total,
            2
        );
    }

    #[test]
    fn unknown_gold_rejected() {
        let c = corpus();
        let stats = compute_stats(&c);
        let records = vec![rec("s9", "X", "a.b.X", "a.b.X", ShotKind::Zero)];
        let err = evaluate(&records, &stats, None).unwrap_err();
        assert!(err.to_string().contains("a.b.X"));
        let mut bad = rec("s1", "File", "java.io.File", "java.io.Fil", ShotKind::Zero);
        bad.correct = true;
        assert!(matches!(
            evaluate(&[bad], &stats, None),
            Err(EvalError::InconsistentRecord { .. })
        ));
    }

    #[test]
    fn majority_example() {
        let recs = vec![
            rec("s", "n", "A.x", "A.x", ShotKind::Zero),
            rec("s", "n", "A.x", "A.x", ShotKind::Zero),
            rec("s", "n", "A.x", "B.x", ShotKind::Zero),
        ];
        let v = accuracy_variants(&recs, 0).unwrap();
        assert_eq!(v.majority_win, 100.0);
        assert_eq!(v.any_correct, 100.0);
        assert!((v.individuals - 200.0 / 3.0).abs() < 1e-9);
        assert!(accuracy_variants(&[], 0).is_err());
    }

    #[test]
    fn csv_round_trip_and_markdown() {
        let c = corpus();
        let stats = compute_stats(&c);
        let basic = PromptConfig::basic().config_id();
        let best = PromptConfig::best().config_id();
        let mut records = Vec::new();
        for (id, hits) in [(&basic, 1), (&best, 2)] {
            for i in 0..2 {
                let mut r = rec(
                    "s1",
                    "File",
                    "java.io.File",
                    if i < hits { "java.io.File" } else { "..." },
                    ShotKind::One,
                );
                r.config_id = id.clone();
                records.push(r);
            }
        }
        let report = evaluate(&records, &stats, Some(&c)).unwrap();
        let csv = to_csv(&report);
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(from_csv(&csv).unwrap(), report);
        let md = to_markdown(&report);
        assert!(md.contains("+50.00%"), "{md}");
        assert!(md.contains("50.00%"));
        assert!(md.contains("n/a"));
        assert!(md.contains("| best ("));
    }

    fn arb_records() -> impl Strategy<Value = Vec<PredictionRecord>> {
        let names = prop_oneof![
            Just(("s1", "File", "java.io.File")),
            Just(("s1", "f", "java.io.File")),
            Just(("s1", "Date", "java.sql.Date")),
            Just(("s2", "Date", "java.util.Date"))
        ];
        proptest::collection::vec((names, any::<bool>(), 0usize..5), 0..60).prop_map(|v| {
            v.into_iter()
                .map(|((s, n, g), ok, shot)| {
                    rec(s, n, g, if ok { g } else { "x.Y" }, ShotKind::ALL[shot])
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn buckets_partition_overall(records in arb_records()) {
            let c = corpus();
            let stats = compute_stats(&c);
            let report = evaluate(&records, &stats, Some(&c)).unwrap();
            for shot in ShotKind::ALL {
                let overall = report.overall("c", shot).unwrap_or_default();
                for dim in Dimension::ALL {
                    let (mut n, mut d) = (0, 0);
                    for b in 0..4 {
                        let t = report.bucket("c", shot, dim, b);
                        n += t.correct;
                        d += t.total;
                    }
                    prop_assert_eq!((n, d), (overall.correct, overall.total));
                }
            }
        }

        #[test]
        fn any_at_least_majority(preds in proptest::collection::vec((0usize..4, 0usize..3), 1..40), seed in any::<u64>()) {
            let recs: Vec<_> = preds.iter().map(|&(name, p)| {
                let n = format!("n{name}");
                let mut r = rec("s", &n, "a.G", ["a.G", "a.H", "..."][p], ShotKind::Zero);
                r.simple_name = n;
                r
            }).collect();
            let v = accuracy_variants(&recs, seed).unwrap();
            prop_assert!(v.any_correct >= v.majority_win);
        }
    }
}
