//! Python bindings: scanning, prompt composition, backends, normalization and
//! scoring helpers.

use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fqn_probe::backend::{stochastic_recall_probability, RequestMetadata};
use fqn_probe::composer::{self, ShotKind};
use fqn_probe::corpus::{self, compute_stats, fqn_length, CodeSnippet, FqnStats, StatsIndex};
use fqn_probe::evaluator::{self, PredictionRecord};
use fqn_probe::normalizer;
use fqn_probe::sampler::{self, SamplerConfig};
use fqn_probe::{
    CompletionBackend, CompletionRequest, OracleBackend, RecallParams, StochasticBackend,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_shot(slug: &str) -> PyResult<ShotKind> {
    ShotKind::parse(slug).ok_or_else(|| value_err(format!("unknown shot {slug:?}")))
}

/// One simple-name candidate found by the scanner.
#[pyclass(name = "ScanHit", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyScanHit {
    simple_name: String,
    kind: String,
    line: usize,
    occurrence_count: u32,
}

#[pymethods]
impl PyScanHit {
    fn __repr__(&self) -> String {
        format!(
            "ScanHit({:?}, {}, line={}, count={})",
            self.simple_name, self.kind, self.line, self.occurrence_count
        )
    }
}

#[pyfunction]
fn scan(source: &str) -> Vec<PyScanHit> {
    fqn_probe::extract_simple_names(source)
        .into_iter()
        .map(|h| PyScanHit {
            simple_name: h.simple_name,
            kind: h.kind.as_str().to_string(),
            line: h.line,
            occurrence_count: h.occurrence_count,
        })
        .collect()
}

#[pyfunction]
fn normalize_fqn(raw: &str) -> String {
    normalizer::normalize_fqn(raw)
}

#[pyfunction]
fn is_correct(prediction: &str, gold: &str) -> bool {
    normalizer::is_correct(prediction, gold)
}

#[pyclass(name = "PromptConfig", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPromptConfig {
    inner: composer::PromptConfig,
}

#[pymethods]
impl PyPromptConfig {
    #[staticmethod]
    fn basic() -> Self {
        PyPromptConfig {
            inner: composer::PromptConfig::basic(),
        }
    }

    #[staticmethod]
    fn best() -> Self {
        PyPromptConfig {
            inner: composer::PromptConfig::best(),
        }
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        composer::PromptConfig::preset(name)
            .map(|inner| PyPromptConfig { inner })
            .ok_or_else(|| value_err(format!("unknown preset {name:?}")))
    }

    /// `(name, config)` for each configuration of the ablation suite.
    #[staticmethod]
    fn ablation_suite() -> Vec<(String, PyPromptConfig)> {
        composer::PromptConfig::ablation_suite()
            .into_iter()
            .map(|(n, inner)| (n.to_string(), PyPromptConfig { inner }))
            .collect()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(|inner| PyPromptConfig { inner })
            .map_err(value_err)
    }

    fn with_seed(&self, seed: u64) -> Self {
        PyPromptConfig {
            inner: self.inner.with_seed(seed),
        }
    }

    #[getter]
    fn config_id(&self) -> String {
        self.inner.config_id()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("config serializes")
    }

    fn render_example(&self, simple_name: &str, fqn: &str) -> String {
        composer::render_example(simple_name, fqn, &self.inner)
    }

    fn render_query(&self, simple_name: &str) -> String {
        composer::render_query(simple_name, &self.inner)
    }

    fn __repr__(&self) -> String {
        match self.inner.preset_name() {
            Some(name) => format!("PromptConfig({name}, seed={})", self.inner.seed),
            None => format!(
                "PromptConfig({}, seed={})",
                self.inner.config_id(),
                self.inner.seed
            ),
        }
    }
}

#[pyclass(name = "Corpus", frozen)]
struct PyCorpus {
    inner: corpus::Corpus,
    stats: StatsIndex,
}

impl PyCorpus {
    fn wrap(inner: corpus::Corpus) -> Self {
        let stats = compute_stats(&inner);
        PyCorpus { inner, stats }
    }

    fn snippet(&self, id: &str) -> PyResult<&CodeSnippet> {
        self.inner
            .get(id)
            .ok_or_else(|| value_err(format!("unknown snippet {id:?}")))
    }
}

#[pymethods]
impl PyCorpus {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        corpus::Corpus::load(path)
            .map(Self::wrap)
            .map_err(|e| PyIOError::new_err(e.to_string()))
    }

    /// Parses JSON-lines text in the corpus file format.
    #[staticmethod]
    fn from_jsonl(text: &str) -> PyResult<Self> {
        corpus::Corpus::parse_str(text)
            .map(Self::wrap)
            .map_err(value_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn pair_count(&self) -> usize {
        self.inner.pair_count()
    }

    fn snippet_ids(&self) -> Vec<String> {
        self.inner.snippets().iter().map(|s| s.id.clone()).collect()
    }

    fn source(&self, snippet_id: &str) -> PyResult<String> {
        Ok(self.snippet(snippet_id)?.source_text.clone())
    }

    /// `(simple_name, fqn, kind, occurrence_count)` for every pair of a snippet.
    fn pairs(&self, snippet_id: &str) -> PyResult<Vec<(String, String, String, u32)>> {
        self.snippet(snippet_id)?;
        Ok(self
            .inner
            .pairs_of(snippet_id)
            .iter()
            .map(|p| {
                (
                    p.simple_name.clone(),
                    p.fqn.clone(),
                    p.kind.as_str().to_string(),
                    p.occurrence_count,
                )
            })
            .collect())
    }

    /// Length, usage and cardinalities of an FQN, with their bucket labels.
    fn fqn_stats<'py>(&self, py: Python<'py>, fqn: &str) -> PyResult<Bound<'py, PyDict>> {
        let s = self
            .stats
            .get(fqn)
            .ok_or_else(|| value_err(format!("{fqn:?} is not a gold FQN")))?;
        let d = PyDict::new(py);
        d.set_item("length_tokens", s.length_tokens)?;
        d.set_item("usage_count", s.usage_count)?;
        d.set_item("sn_fqn", s.sn_fqn)?;
        d.set_item("fqn_sn", s.fqn_sn)?;
        let b = s.buckets();
        for dim in corpus::Dimension::ALL {
            d.set_item(format!("{}_bucket", dim.as_str()), b.label(dim))?;
        }
        Ok(d)
    }

    /// Renders the task input for one target of a snippet.
    #[pyo3(signature = (snippet_id, target, shot, config=None))]
    fn compose(
        &self,
        snippet_id: &str,
        target: &str,
        shot: &str,
        config: Option<&PyPromptConfig>,
    ) -> PyResult<String> {
        let snippet = self.snippet(snippet_id)?;
        let pairs = self.inner.pairs_of(snippet_id);
        let pair = pairs
            .iter()
            .find(|p| p.simple_name == target)
            .ok_or_else(|| value_err(format!("{target:?} is not a name of {snippet_id:?}")))?;
        let config = config
            .map(|c| c.inner)
            .unwrap_or_else(composer::PromptConfig::basic);
        composer::compose(
            snippet,
            pairs,
            pair,
            parse_shot(shot)?.setting(),
            &config,
            &self.stats,
        )
        .map(|t| t.rendered_text)
        .map_err(value_err)
    }

    /// Greedy diversity sample; returns accepted snippet ids in order.
    #[pyo3(signature = (threshold=0.9, max_loc=30, min_pairs=4, seed=0))]
    fn sample(
        &self,
        threshold: f64,
        max_loc: usize,
        min_pairs: usize,
        seed: u64,
    ) -> PyResult<Vec<String>> {
        let config = SamplerConfig {
            similarity_threshold: threshold,
            max_loc,
            min_pairs,
            seed,
        };
        config.validate().map_err(value_err)?;
        Ok(sampler::sample(&self.inner, &config).ids)
    }
}

#[pyclass(name = "Backend", frozen)]
struct PyBackend {
    inner: Arc<dyn CompletionBackend>,
}

#[pymethods]
impl PyBackend {
    /// Answers every query with the gold FQN.
    #[staticmethod]
    fn oracle(corpus: &PyCorpus) -> Self {
        PyBackend {
            inner: Arc::new(OracleBackend::from_corpus(&corpus.inner)),
        }
    }

    /// Simulated model with the shipped recall parameters.
    #[staticmethod]
    #[pyo3(signature = (corpus, seed=0))]
    fn stochastic(corpus: &PyCorpus, seed: u64) -> PyResult<Self> {
        let params = RecallParams::default().with_seed(seed);
        let backend = StochasticBackend::new(&corpus.inner, corpus.stats.clone(), params)
            .map_err(value_err)?;
        Ok(PyBackend {
            inner: Arc::new(backend),
        })
    }

    /// Raw completion text, or `None` when the backend found nothing.
    #[pyo3(signature = (text, snippet_id=None, shot=None, key=None))]
    fn complete(
        &self,
        py: Python<'_>,
        text: &str,
        snippet_id: Option<String>,
        shot: Option<&str>,
        key: Option<String>,
    ) -> PyResult<Option<String>> {
        let metadata = RequestMetadata {
            snippet_id,
            file_name: key,
            shot: shot.map(parse_shot).transpose()?,
        };
        let request = CompletionRequest::new(text).with_metadata(metadata);
        let backend = Arc::clone(&self.inner);
        let result = py
            .detach(move || backend.complete(&request))
            .map_err(value_err)?;
        Ok(result.raw().map(str::to_string))
    }
}

/// Normalized prediction for a raw completion; `None` stands for no completion.
#[pyfunction]
#[pyo3(signature = (raw))]
fn prediction(raw: Option<&str>) -> String {
    let result = match raw {
        Some(text) => fqn_probe::CompletionResult::text(text),
        None => fqn_probe::CompletionResult::none(),
    };
    fqn_probe::Prediction::from_result(&result).normalized
}

#[pyfunction]
fn similarity(a: &str, b: &str) -> f64 {
    sampler::similarity(
        &CodeSnippet::new("a", "", "", a),
        &CodeSnippet::new("b", "", "", b),
    )
}

/// Individuals, majority-win and any-correct accuracy over
/// `(snippet_id, simple_name, gold_fqn, predicted_fqn)` records.
#[pyfunction]
#[pyo3(signature = (records, seed=0))]
fn accuracy_variants<'py>(
    py: Python<'py>,
    records: Vec<(String, String, String, String)>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let records: Vec<PredictionRecord> = records
        .into_iter()
        .map(|(snippet_id, simple_name, gold_fqn, predicted)| {
            let predicted_fqn = normalizer::normalize_fqn(&predicted);
            PredictionRecord {
                correct: normalizer::is_correct(&predicted_fqn, &gold_fqn),
                snippet_id,
                simple_name,
                gold_fqn,
                predicted_fqn,
                shot: ShotKind::Zero,
                config_id: String::new(),
                seed,
            }
        })
        .collect();
    let v = evaluator::accuracy_variants(&records, seed).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("individuals", v.individuals)?;
    d.set_item("majority_win", v.majority_win)?;
    d.set_item("any_correct", v.any_correct)?;
    d.set_item("instances", v.instances)?;
    d.set_item("names", v.names)?;
    Ok(d)
}

/// Recall probability of the simulated model under the shipped parameters.
#[pyfunction]
#[pyo3(signature = (fqn, usage_count, shot, in_context=false))]
fn recall_probability(fqn: &str, usage_count: u64, shot: &str, in_context: bool) -> PyResult<f64> {
    let stats = FqnStats {
        fqn: fqn.to_string(),
        length_tokens: fqn_length(fqn),
        usage_count,
        sn_fqn: 1,
        fqn_sn: 1,
    };
    Ok(stochastic_recall_probability(
        &stats,
        parse_shot(shot)?,
        in_context,
        &RecallParams::default(),
    ))
}

#[pymodule]
fn fqn_probe_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FAILURE_MARKER", normalizer::FAILURE_MARKER)?;
    m.add(
        "SHOTS",
        ShotKind::ALL.iter().map(|s| s.slug()).collect::<Vec<_>>(),
    )?;
    m.add_class::<PyScanHit>()?;
    m.add_class::<PyPromptConfig>()?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyBackend>()?;
    m.add_function(wrap_pyfunction!(scan, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_fqn, m)?)?;
    m.add_function(wrap_pyfunction!(is_correct, m)?)?;
    m.add_function(wrap_pyfunction!(prediction, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_variants, m)?)?;
    m.add_function(wrap_pyfunction!(recall_probability, m)?)?;
    Ok(())
}
