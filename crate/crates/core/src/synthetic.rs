//! Synthetic corpora for simulation and sampler tests.
//!
//! Occurrence counts in a Zipfian corpus stand in for usage in an unsampled
//! background corpus: the pairs of the rank-`r` FQN together carry roughly
//! `top_usage / r^usage_exponent` occurrences.

use std::collections::BTreeSet;

use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::Zipf;
use serde::{Deserialize, Serialize};

use crate::corpus::{usage_bucket, CodeSnippet, Corpus, NameKind, NamePair};
use crate::rng;

const PACKAGE_WORDS: &[&str] = &[
    "com",
    "org",
    "net",
    "io",
    "util",
    "core",
    "api",
    "impl",
    "data",
    "model",
    "client",
    "server",
    "http",
    "text",
    "xml",
    "json",
    "sql",
    "awt",
    "swing",
    "event",
    "graphics",
    "widget",
    "content",
    "os",
    "app",
    "view",
    "media",
    "crypto",
    "security",
    "spi",
    "concurrent",
    "atomic",
    "stream",
    "function",
    "reflect",
    "nio",
    "channels",
    "charset",
    "time",
    "format",
    "zone",
    "lang",
    "ref",
];

const CLASS_HEADS: &[&str] = &[
    "Buffered",
    "Abstract",
    "Default",
    "Simple",
    "Linked",
    "Array",
    "Hash",
    "Tree",
    "Concurrent",
    "Input",
    "Output",
    "Http",
    "Url",
    "File",
    "Text",
    "Date",
    "Event",
    "Color",
    "Image",
    "Key",
    "Byte",
    "Char",
    "Object",
    "String",
    "Thread",
    "Task",
    "Cache",
    "Node",
    "Stream",
    "Socket",
];

const CLASS_TAILS: &[&str] = &[
    "Reader", "Writer", "List", "Map", "Set", "Builder", "Factory", "Handler", "Listener",
    "Manager", "Parser", "Context", "Provider", "Service", "Adapter", "Filter", "Buffer", "Entry",
    "Queue", "Stream", "Format", "Loader", "Channel", "Pool", "Panel", "View", "Client", "Util",
];

/// Shape of a Zipfian corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZipfConfig {
    pub snippets: usize,
    pub min_pairs: usize,
    pub max_pairs: usize,
    pub fqns: usize,
    /// Exponent of the rank-to-usage law.
    pub usage_exponent: f64,
    pub top_usage: f64,
    /// Exponent of the rank law used to draw which FQN a pair refers to.
    pub draw_exponent: f64,
    /// Weights of the length buckets 2-4, 5-7, 8-10, 11-13.
    pub length_weights: [f64; 4],
    /// Share of pairs that are receivers rather than declared types.
    pub receiver_share: f64,
    pub seed: u64,
}

impl Default for ZipfConfig {
    fn default() -> Self {
        ZipfConfig {
            snippets: 1_400,
            min_pairs: 4,
            max_pairs: 8,
            fqns: 2_000,
            usage_exponent: 1.6,
            top_usage: 1_000_000.0,
            draw_exponent: 0.5,
            length_weights: [0.5, 0.25, 0.15, 0.10],
            receiver_share: 0.3,
            seed: 0,
        }
    }
}

struct SynthFqn {
    fqn: String,
    class: String,
    receivers: Vec<String>,
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Length bucket of every rank. Within each usage tier the buckets receive
/// the configured share of the expected pair mass, which keeps length and
/// usage independent.
fn length_plan(config: &ZipfConfig) -> Vec<usize> {
    let total: f64 = config.length_weights.iter().sum();
    let mut tier_mass = [0.0f64; 4];
    let mut assigned = [[0.0f64; 4]; 4];
    (1..=config.fqns)
        .map(|rank| {
            let r = rank as f64;
            let usage = (config.top_usage / r.powf(config.usage_exponent)).round() as u64;
            let tier = usage_bucket(usage) as usize;
            let mass = r.powf(-config.draw_exponent);
            tier_mass[tier] += mass;
            let deficit =
                |b: usize| config.length_weights[b] / total * tier_mass[tier] - assigned[tier][b];
            let bucket = (0..4)
                .max_by(|&a, &b| deficit(a).total_cmp(&deficit(b)))
                .unwrap();
            assigned[tier][bucket] += mass;
            bucket
        })
        .collect()
}

fn make_fqns(config: &ZipfConfig, rng: &mut impl Rng) -> Vec<SynthFqn> {
    let plan = length_plan(config);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(config.fqns);
    while out.len() < config.fqns {
        let bucket = plan[out.len()];
        let len = 2 + 3 * bucket + rng.random_range(0..3);
        let class = format!(
            "{}{}",
            CLASS_HEADS.choose(rng).unwrap(),
            CLASS_TAILS.choose(rng).unwrap()
        );
        let mut tokens: Vec<String> = (0..len - 1)
            .map(|_| PACKAGE_WORDS.choose(rng).unwrap().to_string())
            .collect();
        tokens.push(class.clone());
        let fqn = tokens.join(".");
        if !seen.insert(fqn.clone()) {
            continue;
        }
        let short = lower_first(&class);
        let abbrev: String = class
            .chars()
            .filter(|c| c.is_ascii_uppercase())
            .collect::<String>()
            .to_lowercase();
        let mut receivers = vec![short.clone()];
        for cand in [abbrev, format!("my{class}"), format!("{short}2")] {
            if rng.random_bool(0.4) {
                receivers.push(cand);
            }
        }
        out.push(SynthFqn {
            fqn,
            class,
            receivers,
        });
    }
    out
}

/// A corpus whose FQN usage, length and name ambiguity follow the configured
/// laws; every snippet has between `min_pairs` and `max_pairs` pairs.
pub fn zipf_corpus(config: &ZipfConfig) -> Corpus {
    let mut rng = rng::seeded(config.seed, &["zipf"]);
    let fqns = make_fqns(config, &mut rng);
    let draw = Zipf::new(config.fqns as f64, config.draw_exponent).expect("valid zipf law");

    // pass 1: pick the FQN and name of every pair
    let mut plan: Vec<Vec<(usize, String, NameKind)>> = Vec::with_capacity(config.snippets);
    let mut uses = vec![0u32; fqns.len()];
    for _ in 0..config.snippets {
        let want = rng.random_range(config.min_pairs..=config.max_pairs);
        let mut names = BTreeSet::new();
        let mut entries = Vec::new();
        let mut attempts = 0;
        while entries.len() < want && attempts < 200 {
            attempts += 1;
            let rank = draw.sample(&mut rng) as usize - 1;
            let f = &fqns[rank];
            let (name, kind) = if rng.random_bool(config.receiver_share) {
                (
                    f.receivers.choose(&mut rng).unwrap().clone(),
                    NameKind::Receiver,
                )
            } else {
                (f.class.clone(), NameKind::DeclType)
            };
            if names.insert(name.clone()) {
                uses[rank] += 1;
                entries.push((rank, name, kind));
            }
        }
        plan.push(entries);
    }

    // pass 2: spread each FQN's usage over its pairs
    let mut entries = Vec::with_capacity(plan.len());
    for (i, planned) in plan.into_iter().enumerate() {
        let id = format!("z{i:05}");
        let mut code = Vec::new();
        let mut pairs = Vec::new();
        for (rank, name, kind) in planned {
            let usage = config.top_usage / ((rank + 1) as f64).powf(config.usage_exponent);
            let count = (usage / uses[rank] as f64)
                .round()
                .clamp(1.0, u32::MAX as f64) as u32;
            code.push(match kind {
                NameKind::Receiver => format!("{name}.run();"),
                _ => format!("{name} v{} = null;", code.len()),
            });
            pairs.push(NamePair::new(
                &id,
                name,
                fqns[rank].fqn.clone(),
                kind,
                count,
            ));
        }
        let snippet = CodeSnippet::new(
            &id,
            "synthetic",
            format!("syn.p{}", i % 97),
            code.join("\n"),
        );
        entries.push((snippet, pairs));
    }
    Corpus::from_parts(entries).expect("synthetic corpus is valid")
}

/// Method corpus for sampler checks: random statement soup across packages,
/// with a share of near-clones (one token changed) of earlier methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CloneCorpusConfig {
    pub methods: usize,
    pub packages: usize,
    pub clone_share: f64,
    pub min_loc: usize,
    pub max_loc: usize,
    pub min_pairs: usize,
    pub max_pairs: usize,
    pub seed: u64,
}

impl Default for CloneCorpusConfig {
    fn default() -> Self {
        CloneCorpusConfig {
            methods: 500,
            packages: 60,
            clone_share: 0.25,
            min_loc: 5,
            max_loc: 40,
            min_pairs: 2,
            max_pairs: 8,
            seed: 0,
        }
    }
}

fn statement(rng: &mut impl Rng) -> String {
    let v = |rng: &mut dyn rand::RngCore| format!("v{}", rng.random_range(0..40));
    match rng.random_range(0..4) {
        0 => format!(
            "int {} = f{}({}, {});",
            v(rng),
            rng.random_range(0..30),
            v(rng),
            rng.random_range(0..100)
        ),
        1 => format!("{}.call{}({});", v(rng), rng.random_range(0..30), v(rng)),
        2 => format!(
            "if ({} > {}) {{ {} = {}; }}",
            v(rng),
            rng.random_range(0..50),
            v(rng),
            v(rng)
        ),
        _ => format!(
            "T{} {} = new T{}();",
            rng.random_range(0..20),
            v(rng),
            rng.random_range(0..20)
        ),
    }
}

pub fn clone_corpus(config: &CloneCorpusConfig) -> Corpus {
    let mut rng = rng::seeded(config.seed, &["clones"]);
    let mut sources: Vec<Vec<String>> = Vec::new();
    let mut entries = Vec::new();
    for i in 0..config.methods {
        let lines: Vec<String> = if !sources.is_empty() && rng.random_bool(config.clone_share) {
            let mut lines = sources[rng.random_range(0..sources.len())].clone();
            let at = rng.random_range(0..lines.len());
            lines[at] = lines[at].replacen('v', "w", 1);
            lines
        } else {
            let loc = rng.random_range(config.min_loc..=config.max_loc);
            (0..loc).map(|_| statement(&mut rng)).collect()
        };
        let id = format!("m{i:04}");
        let n = rng.random_range(config.min_pairs..=config.max_pairs);
        let pairs = (0..n)
            .map(|j| {
                NamePair::new(
                    &id,
                    format!("T{j}"),
                    format!("syn.t{j}.T{j}"),
                    NameKind::DeclType,
                    1,
                )
            })
            .collect();
        let pkg = format!("syn.pkg{}", rng.random_range(0..config.packages));
        entries.push((
            CodeSnippet::new(&id, "synthetic", pkg, lines.join("\n")),
            pairs,
        ));
        sources.push(lines);
    }
    Corpus::from_parts(entries).expect("clone corpus is valid")
}
