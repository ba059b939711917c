//! Greedy diversity sampling of short methods, one package at a time.

use std::collections::BTreeMap;
use std::hash::{DefaultHasher, Hash, Hasher};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CodeSnippet, Corpus};
use crate::rng;
use crate::scanner::tokenize_lenient;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub similarity_threshold: f64,
    /// Exclusive upper bound on lines of code.
    pub max_loc: usize,
    pub min_pairs: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            similarity_threshold: 0.9,
            max_loc: 30,
            min_pairs: 4,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold <= 1.0) {
            return Err("similarity_threshold must lie in (0, 1]".into());
        }
        if self.max_loc < 1 {
            return Err("max_loc must be at least 1".into());
        }
        Ok(())
    }
}

/// A pairwise code similarity in `[0, 1]`.
pub trait SimilarityMetric {
    type Sketch;
    fn sketch(&self, snippet: &CodeSnippet) -> Self::Sketch;
    fn compare(&self, a: &Self::Sketch, b: &Self::Sketch) -> f64;
}

/// Jaccard coefficient over k-token shingles of the lenient token stream.
#[derive(Debug, Clone, Copy)]
pub struct ShingleJaccard {
    pub k: usize,
}

impl Default for ShingleJaccard {
    fn default() -> Self {
        ShingleJaccard { k: 3 }
    }
}

impl ShingleJaccard {
    /// Sorted, deduplicated shingle hashes. Streams shorter than `k` form a
    /// single shingle.
    pub fn shingles(&self, source: &str) -> Vec<u64> {
        let tokens: Vec<String> = tokenize_lenient(source)
            .into_iter()
            .map(|t| t.text)
            .collect();
        if tokens.is_empty() {
            return Vec::new();
        }
        let k = self.k.max(1);
        let windows: Vec<&[String]> = if tokens.len() < k {
            vec![&tokens[..]]
        } else {
            tokens.windows(k).collect()
        };
        let mut out: Vec<u64> = windows
            .into_iter()
            .map(|w| {
                let mut h = DefaultHasher::new();
                w.hash(&mut h);
                h.finish()
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl SimilarityMetric for ShingleJaccard {
    type Sketch = Vec<u64>;

    fn sketch(&self, snippet: &CodeSnippet) -> Vec<u64> {
        self.shingles(&snippet.source_text)
    }

    fn compare(&self, a: &Vec<u64>, b: &Vec<u64>) -> f64 {
        if a.is_empty() && b.is_empty() {
            return 1.0;
        }
        let (mut i, mut j, mut common) = (0, 0, 0usize);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    common += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        common as f64 / (a.len() + b.len() - common) as f64
    }
}

pub fn similarity(a: &CodeSnippet, b: &CodeSnippet) -> f64 {
    let m = ShingleJaccard::default();
    m.compare(&m.sketch(a), &m.sketch(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CandidateStatus {
    Accepted,
    /// Passed the similarity test but lost to a less similar method.
    Eligible,
    TooSimilar,
    TooFewPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateLog {
    pub id: String,
    pub max_similarity: f64,
    pub pairs: usize,
    pub status: CandidateStatus,
}

/// What happened while visiting one package.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageLog {
    pub package: String,
    pub seed: bool,
    pub accepted: Option<String>,
    pub too_long: Vec<String>,
    pub candidates: Vec<CandidateLog>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sample {
    /// Accepted snippet ids in acceptance order; the first one is the seed.
    pub ids: Vec<String>,
    pub log: Vec<PackageLog>,
}

pub fn sample(corpus: &Corpus, config: &SamplerConfig) -> Sample {
    sample_with(corpus, config, &ShingleJaccard::default())
}

pub fn sample_with<M: SimilarityMetric>(
    corpus: &Corpus,
    config: &SamplerConfig,
    metric: &M,
) -> Sample {
    let mut packages: BTreeMap<&str, (Vec<&CodeSnippet>, Vec<String>)> = BTreeMap::new();
    for s in corpus.snippets() {
        let entry = packages.entry(s.package_path.as_str()).or_default();
        if s.loc < config.max_loc {
            entry.0.push(s);
        } else {
            entry.1.push(s.id.clone());
        }
    }
    for (methods, _) in packages.values_mut() {
        methods.sort_by(|a, b| a.id.cmp(&b.id));
    }
    let mut order: Vec<&str> = packages
        .iter()
        .filter(|(_, (m, _))| !m.is_empty())
        .map(|(p, _)| *p)
        .collect();
    let mut result = Sample::default();
    if order.is_empty() {
        return result;
    }

    let mut rng = rng::seeded(config.seed, &["sampler"]);
    let seed_pkg = order.remove(rng.random_range(0..order.len()));
    let (seed_methods, seed_long) = &packages[seed_pkg];
    let seed_method = seed_methods[rng.random_range(0..seed_methods.len())];
    let mut sketches = vec![metric.sketch(seed_method)];
    result.ids.push(seed_method.id.clone());
    result.log.push(PackageLog {
        package: seed_pkg.to_string(),
        seed: true,
        accepted: Some(seed_method.id.clone()),
        too_long: seed_long.clone(),
        candidates: vec![CandidateLog {
            id: seed_method.id.clone(),
            max_similarity: 0.0,
            pairs: corpus.pairs_of(&seed_method.id).len(),
            status: CandidateStatus::Accepted,
        }],
    });
    order.shuffle(&mut rng);

    for pkg in order {
        let (methods, too_long) = &packages[pkg];
        let mut candidates: Vec<CandidateLog> = methods
            .iter()
            .map(|m| {
                let sketch = metric.sketch(m);
                let max_similarity = sketches
                    .iter()
                    .map(|s| metric.compare(&sketch, s))
                    .fold(0.0, f64::max);
                let pairs = corpus.pairs_of(&m.id).len();
                let status = if max_similarity >= config.similarity_threshold {
                    CandidateStatus::TooSimilar
                } else if pairs < config.min_pairs {
                    CandidateStatus::TooFewPairs
                } else {
                    CandidateStatus::Eligible
                };
                CandidateLog {
                    id: m.id.clone(),
                    max_similarity,
                    pairs,
                    status,
                }
            })
            .collect();
        let best = candidates
            .iter()
            .enumerate()
            .filter(|(_, c)| c.status == CandidateStatus::Eligible)
            .min_by(|(_, a), (_, b)| {
                a.max_similarity
                    .total_cmp(&b.max_similarity)
                    .then_with(|| a.id.cmp(&b.id))
            })
            .map(|(i, _)| i);
        let accepted = best.map(|i| {
            candidates[i].status = CandidateStatus::Accepted;
            let id = candidates[i].id.clone();
            let snippet = methods[i];
            sketches.push(metric.sketch(snippet));
            result.ids.push(id.clone());
            id
        });
        result.log.push(PackageLog {
            package: pkg.to_string(),
            seed: false,
            accepted,
            too_long: too_long.clone(),
            candidates,
        });
    }
    result
}
