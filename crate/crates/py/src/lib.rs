//! Python bindings for the collabmetrics library.

use ::collabmetrics::cli::{validation_table, Tolerances};
use ::collabmetrics::corpus::{self as corpus_mod, build_citation_index, CitationIndex};
use ::collabmetrics::metrics::{self, EntityProfile, WeightExponent};
use ::collabmetrics::scaling::{self, Estimator, ScalingOptions};
use ::collabmetrics::synthcollab;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn alpha(a: f64) -> PyResult<WeightExponent> {
    WeightExponent::new(a).map_err(value_error)
}

#[pyclass(name = "Profile", frozen, get_all)]
#[derive(Clone)]
struct PyProfile {
    entity_id: String,
    n_pap: u64,
    n_totcit: u64,
    n_fcit: f64,
    n_icit: f64,
    h_index: u64,
    mean_naut: f64,
    weighted_npap: f64,
    alpha: f64,
}

impl From<EntityProfile> for PyProfile {
    fn from(p: EntityProfile) -> Self {
        PyProfile {
            entity_id: p.entity_id,
            n_pap: p.n_pap,
            n_totcit: p.n_totcit,
            n_fcit: p.n_fcit,
            n_icit: p.n_icit,
            h_index: p.h_index,
            mean_naut: p.mean_naut,
            weighted_npap: p.weighted_npap,
            alpha: p.alpha,
        }
    }
}

#[pymethods]
impl PyProfile {
    fn __repr__(&self) -> String {
        format!(
            "Profile({:?}, n_pap={}, n_totcit={}, n_fcit={}, h_index={})",
            self.entity_id, self.n_pap, self.n_totcit, self.n_fcit, self.h_index
        )
    }
}

/// A parsed corpus together with its citation index.
#[pyclass(name = "Corpus", frozen)]
struct PyCorpus {
    corpus: corpus_mod::Corpus,
    index: CitationIndex,
    #[pyo3(get)]
    rejections: Vec<(usize, String)>,
    #[pyo3(get)]
    warnings: Vec<(usize, String)>,
}

#[pymethods]
impl PyCorpus {
    fn __len__(&self) -> usize {
        self.corpus.len()
    }

    fn paper_ids(&self) -> Vec<String> {
        self.corpus.papers().iter().map(|p| p.paper_id.clone()).collect()
    }

    /// `(n_cit, n_icit)` of one paper.
    fn citations(&self, paper_id: &str) -> PyResult<(u64, f64)> {
        self.index
            .lookup(&self.corpus, paper_id)
            .map(|e| (e.n_cit, e.n_icit))
            .ok_or_else(|| value_error(format!("unknown paper id {paper_id:?}")))
    }

    #[pyo3(signature = (alpha = 1.0))]
    fn author_profiles(&self, alpha: f64) -> PyResult<Vec<PyProfile>> {
        let a = self::alpha(alpha)?;
        let v = metrics::all_author_profiles(&self.corpus, &self.index, a).map_err(value_error)?;
        Ok(v.into_iter().map(Into::into).collect())
    }

    #[pyo3(signature = (alpha = 1.0))]
    fn collaboration_profiles(&self, alpha: f64) -> PyResult<Vec<PyProfile>> {
        let a = self::alpha(alpha)?;
        let v = metrics::all_collaboration_profiles(&self.corpus, &self.index, a).map_err(value_error)?;
        Ok(v.into_iter().map(Into::into).collect())
    }
}

/// Parses JSON-lines text. Bad lines are collected in `rejections`.
#[pyfunction]
fn parse_corpus(text: &str) -> PyResult<PyCorpus> {
    let out = corpus_mod::parse_corpus(text.as_bytes()).map_err(value_error)?;
    let index = build_citation_index(&out.corpus);
    Ok(PyCorpus {
        index,
        corpus: out.corpus,
        rejections: out.rejections.into_iter().map(|r| (r.line, r.reason)).collect(),
        warnings: out.warnings.into_iter().map(|w| (w.line, w.message)).collect(),
    })
}

#[pyfunction]
fn h_index(citations: Vec<u64>) -> u64 {
    metrics::h_index(&citations)
}

#[pyfunction]
fn fractional_weight(n_aut: usize, alpha: f64) -> PyResult<f64> {
    metrics::fractional_weight(n_aut, self::alpha(alpha)?).map_err(value_error)
}

fn estimator(name: &str) -> PyResult<Estimator> {
    Estimator::parse(name).ok_or_else(|| value_error(format!("unknown estimator {name:?}")))
}

/// `(center, count, mean, median)` for each retained bin.
#[pyfunction]
#[pyo3(signature = (points, bins_per_decade = 5, min_bin_count = 3))]
fn log_bin(points: Vec<(f64, f64)>, bins_per_decade: u32, min_bin_count: usize) -> PyResult<Vec<(f64, usize, f64, f64)>> {
    let curve = scaling::log_bin(&points, bins_per_decade, min_bin_count).map_err(value_error)?;
    Ok(curve.bins.iter().map(|b| (b.center, b.count, b.mean, b.median)).collect())
}

#[pyclass(name = "ScalingFit", frozen, get_all)]
struct PyScalingFit {
    exponent: f64,
    amplitude: f64,
    exponent_stderr: f64,
    r_squared: f64,
    n_bins_used: usize,
}

#[pymethods]
impl PyScalingFit {
    fn __repr__(&self) -> String {
        format!(
            "ScalingFit(exponent={}, stderr={}, amplitude={}, r_squared={}, n_bins={})",
            self.exponent, self.exponent_stderr, self.amplitude, self.r_squared, self.n_bins_used
        )
    }
}

/// Bins `(n_aut, value)` points and fits `value = C * n_aut^p`.
#[pyfunction]
#[pyo3(signature = (points, bins_per_decade = 5, min_bin_count = 3, estimator = "mean"))]
fn fit_power_law(
    points: Vec<(f64, f64)>,
    bins_per_decade: u32,
    min_bin_count: usize,
    estimator: &str,
) -> PyResult<PyScalingFit> {
    let est = self::estimator(estimator)?;
    let curve = scaling::log_bin(&points, bins_per_decade, min_bin_count).map_err(value_error)?;
    let f = scaling::fit_power_law(&curve, est).map_err(value_error)?;
    Ok(PyScalingFit {
        exponent: f.exponent,
        amplitude: f.amplitude,
        exponent_stderr: f.exponent_stderr,
        r_squared: f.r_squared,
        n_bins_used: f.n_bins_used,
    })
}

/// `(mu_log, sigma_log, zero_fraction)`.
#[pyfunction]
fn fit_lognormal(values: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let f = scaling::fit_lognormal(&values).map_err(value_error)?;
    Ok((f.mu_log, f.sigma_log, f.zero_fraction))
}

#[pyfunction]
fn solve_equilibrium_s() -> f64 {
    synthcollab::solve_equilibrium_s().s
}

/// `(p_pap, p_cit, p_totcit, p_fcit)`.
#[pyfunction]
fn theoretical_exponents(s: f64) -> PyResult<(f64, f64, f64, f64)> {
    let t = synthcollab::theoretical_exponents(s).map_err(value_error)?;
    Ok((t.p_pap, t.p_cit, t.p_totcit, t.p_fcit))
}

#[pyclass(name = "SynthConfig", get_all, set_all)]
#[derive(Clone)]
struct PySynthConfig {
    s: f64,
    n_collabs: usize,
    naut_min: u32,
    naut_max: u32,
    papers_per_topic: f64,
    sigma_log: f64,
    base_median_cit: f64,
    seed: u64,
    deterministic_papers: bool,
    citer_refs: u32,
}

impl From<&PySynthConfig> for synthcollab::SynthConfig {
    fn from(c: &PySynthConfig) -> Self {
        synthcollab::SynthConfig {
            s: c.s,
            n_collabs: c.n_collabs,
            naut_min: c.naut_min,
            naut_max: c.naut_max,
            papers_per_topic: c.papers_per_topic,
            sigma_log: c.sigma_log,
            base_median_cit: c.base_median_cit,
            seed: c.seed,
            deterministic_papers: c.deterministic_papers,
            citer_refs: c.citer_refs,
        }
    }
}

#[pymethods]
impl PySynthConfig {
    #[new]
    #[pyo3(signature = (seed, **kwargs))]
    fn new(seed: u64, kwargs: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let d = synthcollab::SynthConfig::default();
        let mut c = PySynthConfig {
            s: d.s,
            n_collabs: d.n_collabs,
            naut_min: d.naut_min,
            naut_max: d.naut_max,
            papers_per_topic: d.papers_per_topic,
            sigma_log: d.sigma_log,
            base_median_cit: d.base_median_cit,
            seed,
            deterministic_papers: d.deterministic_papers,
            citer_refs: d.citer_refs,
        };
        if let Some(kw) = kwargs {
            let py_self = Bound::new(kw.py(), c.clone())?;
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                if !py_self.hasattr(key.as_str())? || key.starts_with('_') {
                    return Err(value_error(format!("unknown option {key:?}")));
                }
                py_self.setattr(key.as_str(), v)?;
            }
            c = py_self.borrow().clone();
        }
        Ok(c)
    }
}

#[pyclass(name = "SynthCollaboration", frozen, get_all)]
struct PySynthCollaboration {
    index: usize,
    n_aut: u32,
    n_sub: u32,
    citations: Vec<u64>,
}

#[pyfunction]
fn generate(config: &PySynthConfig) -> PyResult<Vec<PySynthCollaboration>> {
    let collabs = synthcollab::generate(&config.into()).map_err(value_error)?;
    Ok(collabs
        .into_iter()
        .map(|c| PySynthCollaboration {
            index: c.index,
            n_aut: c.n_aut,
            n_sub: c.n_sub,
            citations: c.citations,
        })
        .collect())
}

/// `(quantity, theoretical, fitted, tolerance, passed)`.
type DeltaTuple = (String, f64, f64, f64, bool);

#[pyfunction]
fn validate(py: Python<'_>, config: &PySynthConfig) -> PyResult<Vec<DeltaTuple>> {
    let cfg: synthcollab::SynthConfig = config.into();
    let v = py
        .detach(|| validation_table(&cfg, &ScalingOptions::default(), Tolerances::default()))
        .map_err(value_error)?;
    Ok(v.rows
        .iter()
        .map(|r| (r.quantity.clone(), r.theoretical, r.fitted, r.tolerance, r.passed()))
        .collect())
}

#[pymodule]
#[pyo3(name = "collabmetrics")]
fn collabmetrics_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyProfile>()?;
    m.add_class::<PyScalingFit>()?;
    m.add_class::<PySynthConfig>()?;
    m.add_class::<PySynthCollaboration>()?;
    m.add_function(wrap_pyfunction!(parse_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(h_index, m)?)?;
    m.add_function(wrap_pyfunction!(fractional_weight, m)?)?;
    m.add_function(wrap_pyfunction!(log_bin, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_law, m)?)?;
    m.add_function(wrap_pyfunction!(fit_lognormal, m)?)?;
    m.add_function(wrap_pyfunction!(solve_equilibrium_s, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
