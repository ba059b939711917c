#![allow(dead_code)]

use std::path::{Path, PathBuf};

use fqn_probe::composer::{compose, PromptConfig, ShotKind};
use fqn_probe::corpus::{compute_stats, Corpus};

pub const GOLDEN_SNIPPET: &str = "jdk-read-lines";
pub const GOLDEN_TARGET: &str = "readLine()";
pub const GOLDEN_SEED: u64 = 7;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn desk_corpus() -> Corpus {
    Corpus::load(fixture("desk_corpus.jsonl")).expect("desk corpus loads")
}

/// `(relative path, rendered text)` for every ablation config and shot of the
/// golden snippet.
pub fn golden_renders() -> Vec<(String, String)> {
    let corpus = desk_corpus();
    let stats = compute_stats(&corpus);
    let snippet = corpus.get(GOLDEN_SNIPPET).expect("golden snippet");
    let pairs = corpus.pairs_of(GOLDEN_SNIPPET);
    let target = pairs
        .iter()
        .find(|p| p.simple_name == GOLDEN_TARGET)
        .expect("golden target");
    let mut out = Vec::new();
    for (name, config) in PromptConfig::ablation_suite() {
        let config = config.with_seed(GOLDEN_SEED);
        for shot in ShotKind::ALL {
            let task = compose(snippet, pairs, target, shot.setting(), &config, &stats)
                .unwrap_or_else(|e| panic!("{name}/{}: {e}", shot.slug()));
            out.push((format!("{name}/{}.java", shot.slug()), task.rendered_text));
        }
    }
    out
}

pub fn golden_dir() -> PathBuf {
    fixture("golden")
}
