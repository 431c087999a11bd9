//! Python bindings: the main domain types plus the similarity measures,
//! baselines, statistics and the batch pipeline entry point.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use itemnet::analysis;
use itemnet::baselines;
use itemnet::extract::{self, ItemNetwork, SubjectArea};
use itemnet::features::{self, FeatureTable, QtsConfig, StructureCounts};
use itemnet::fixtures::{self, FixtureSpec};
use itemnet::ingest::{self, ArticleRecord, Corpus as CorpusInner, KnowledgeGraph as GraphInner};
use itemnet::netsim::{self, GraphMeasure, PprOptions};
use itemnet::pipeline::{self, RunConfig};
use itemnet::types::{ItemId, Lang, MeasureKind};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(e.to_string())
}

fn ids(items: Vec<String>) -> BTreeSet<ItemId> {
    items.into_iter().map(ItemId::new).collect()
}

fn ppr_options(alpha: f64, eps: f64, max_iterations: usize) -> PprOptions {
    PprOptions { alpha, eps, max_iterations }
}

/// The Wikidata-side directed labeled graph.
#[pyclass(name = "KnowledgeGraph")]
struct PyKnowledgeGraph {
    inner: GraphInner,
}

#[pymethods]
impl PyKnowledgeGraph {
    /// Parses an `items.jsonl` dump subset.
    #[staticmethod]
    fn parse(path: PathBuf) -> PyResult<Self> {
        let (inner, _) = ingest::parse_knowledge_graph(&path).map_err(io_err)?;
        Ok(PyKnowledgeGraph { inner })
    }

    #[getter]
    fn item_count(&self) -> usize {
        self.inner.item_count()
    }

    #[getter]
    fn arc_count(&self) -> usize {
        self.inner.arc_count()
    }

    /// All items reachable from `root` by descending the subclass hierarchy.
    fn expand_a_hierarchy(&self, root: &str) -> PyResult<Vec<String>> {
        let expanded =
            extract::expand_a_hierarchy(&self.inner, &ItemId::new(root)).map_err(value_err)?;
        Ok(expanded.into_iter().map(|i| i.to_string()).collect())
    }

    /// Studies-targets of the given item set.
    fn collect_studies_targets(&self, a_set: Vec<String>) -> Vec<String> {
        extract::collect_studies_targets(&self.inner, &ids(a_set))
            .into_iter()
            .map(|i| i.to_string())
            .collect()
    }

    /// Candidate subject-area seeds for a set of hierarchy roots.
    fn enumerate_candidate_areas(&self, roots: Vec<String>) -> PyResult<Vec<String>> {
        let seeds =
            extract::enumerate_candidate_areas(&self.inner, &ids(roots)).map_err(value_err)?;
        Ok(seeds.into_iter().map(|i| i.to_string()).collect())
    }

    /// Direct instances of a subject-area seed.
    fn resolve_members(&self, seed: &str) -> PyResult<Vec<String>> {
        let area =
            extract::resolve_members(&self.inner, &ItemId::new(seed)).map_err(value_err)?;
        Ok(area.members.into_iter().map(|i| i.to_string()).collect())
    }
}

/// The multi-language article corpus.
#[pyclass(name = "Corpus")]
struct PyCorpus {
    inner: CorpusInner,
}

#[pymethods]
impl PyCorpus {
    /// Parses an `articles.jsonl` dump subset restricted to `languages`.
    #[staticmethod]
    fn parse(path: PathBuf, languages: Vec<String>) -> PyResult<Self> {
        let langs: BTreeSet<Lang> = languages.into_iter().map(Lang::new).collect();
        let (inner, _) = ingest::parse_corpus(&path, &langs).map_err(io_err)?;
        Ok(PyCorpus { inner })
    }

    #[getter]
    fn languages(&self) -> Vec<String> {
        self.inner.languages().map(|l| l.to_string()).collect()
    }

    #[getter]
    fn article_count(&self) -> usize {
        self.inner.article_count()
    }

    /// Induces one language's item network for an area given by seed and
    /// member items.
    fn induce(
        &self,
        lang: &str,
        area_id: &str,
        seed: &str,
        members: Vec<String>,
    ) -> PyResult<PyItemNetwork> {
        let area =
            SubjectArea { id: area_id.to_owned(), seed: ItemId::new(seed), members: ids(members) };
        let net = extract::induce_item_network(&self.inner, &Lang::new(lang), &area)
            .map_err(value_err)?;
        Ok(PyItemNetwork { inner: net })
    }
}

/// One language's directed article graph over a subject area, keyed by
/// item ids.
#[pyclass(name = "ItemNetwork")]
struct PyItemNetwork {
    inner: ItemNetwork,
}

#[pymethods]
impl PyItemNetwork {
    #[new]
    fn new(
        language: &str,
        area: &str,
        vertices: Vec<String>,
        arcs: Vec<(String, String)>,
    ) -> PyResult<Self> {
        let vertex_set = ids(vertices);
        let arc_set: BTreeSet<(ItemId, ItemId)> =
            arcs.into_iter().map(|(s, t)| (ItemId::new(s), ItemId::new(t))).collect();
        for (s, t) in &arc_set {
            if !vertex_set.contains(s) || !vertex_set.contains(t) {
                return Err(value_err(format!(
                    "arc ({s},{t}) has an endpoint outside the vertex set"
                )));
            }
        }
        Ok(PyItemNetwork {
            inner: ItemNetwork::new(Lang::new(language), area, vertex_set, arc_set),
        })
    }

    #[getter]
    fn language(&self) -> String {
        self.inner.language.to_string()
    }

    #[getter]
    fn area(&self) -> String {
        self.inner.area.clone()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    fn vertices(&self) -> Vec<String> {
        self.inner.vertices().iter().map(|v| v.to_string()).collect()
    }

    fn arcs(&self) -> Vec<(String, String)> {
        self.inner.arcs().iter().map(|(s, t)| (s.to_string(), t.to_string())).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "ItemNetwork(language='{}', area='{}', order={}, size={})",
            self.inner.language,
            self.inner.area,
            self.inner.order(),
            self.inner.size()
        )
    }
}

#[pyfunction]
fn ges(i: &PyItemNetwork, j: &PyItemNetwork) -> PyResult<f64> {
    Ok(netsim::ges(&i.inner, &j.inner).map_err(value_err)?.value)
}

#[pyfunction]
fn ejs(i: &PyItemNetwork, j: &PyItemNetwork) -> PyResult<f64> {
    Ok(netsim::ejs(&i.inner, &j.inner).map_err(value_err)?.value)
}

#[pyfunction]
#[pyo3(signature = (i, j, alpha=0.85, eps=1e-10, max_iterations=1000))]
fn deltacon(
    i: &PyItemNetwork,
    j: &PyItemNetwork,
    alpha: f64,
    eps: f64,
    max_iterations: usize,
) -> PyResult<f64> {
    let opts = ppr_options(alpha, eps, max_iterations);
    Ok(netsim::deltacon(&i.inner, &j.inner, &opts).map_err(value_err)?.value)
}

#[pyfunction]
fn cgs(i: &PyItemNetwork, j: &PyItemNetwork, shareable: usize) -> PyResult<f64> {
    Ok(netsim::cgs(&i.inner, &j.inner, shareable).map_err(value_err)?.value)
}

#[pyfunction]
#[pyo3(signature = (n, source, alpha=0.85, eps=1e-10, max_iterations=1000))]
fn personalized_pagerank(
    n: &PyItemNetwork,
    source: &str,
    alpha: f64,
    eps: f64,
    max_iterations: usize,
) -> PyResult<BTreeMap<String, f64>> {
    let opts = ppr_options(alpha, eps, max_iterations);
    let p = netsim::personalized_pagerank(&n.inner, &ItemId::new(source), &opts)
        .map_err(value_err)?;
    Ok(p.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn to_table(h: BTreeMap<String, Vec<f64>>) -> FeatureTable {
    h.into_iter().map(|(k, v)| (ItemId::new(k), v)).collect()
}

/// Vertex-set cosine similarity over the item-id alignment of the two
/// networks; `hi` and `hj` map item ids to feature vectors.
#[pyfunction]
fn vertex_cosine(
    i: &PyItemNetwork,
    j: &PyItemNetwork,
    hi: BTreeMap<String, Vec<f64>>,
    hj: BTreeMap<String, Vec<f64>>,
) -> PyResult<f64> {
    let alignment = extract::alignment_set(&i.inner, &j.inner).map_err(value_err)?;
    features::vertex_cosine_similarity(
        &i.inner,
        &j.inner,
        &alignment,
        &to_table(hi),
        &to_table(hj),
    )
    .map_err(value_err)
}

#[pyfunction]
fn lds_vector(counts: BTreeMap<String, u64>) -> PyResult<Vec<f64>> {
    for key in counts.keys() {
        if !StructureCounts::DIM_NAMES.contains(&key.as_str()) {
            return Err(value_err(format!("unknown structure count `{key}`")));
        }
    }
    let get = |key: &str| counts.get(key).copied().unwrap_or(0);
    let structure = StructureCounts {
        characters: get("characters"),
        sections: get("sections"),
        toc_breadth: get("toc_breadth"),
        toc_depth: get("toc_depth"),
        internal_links: get("internal_links"),
        external_links: get("external_links"),
        pictures: get("pictures"),
        tables: get("tables"),
        authority_links: get("authority_links"),
        references: get("references"),
        categories: get("categories"),
    };
    Ok(features::lds_vector(&structure).values)
}

#[pyfunction]
#[pyo3(signature = (sentences, assoc=None, difficult_word_min_chars=10))]
fn qts_vector(
    sentences: Vec<Vec<String>>,
    assoc: Option<Vec<f64>>,
    difficult_word_min_chars: usize,
) -> PyResult<Vec<f64>> {
    let record = ArticleRecord {
        language: Lang::new("xx"),
        title: String::new(),
        item: ItemId::new("Q0"),
        outlinks: vec![],
        structure: StructureCounts::default(),
        sentences,
        topic_vector: None,
        assoc_series: assoc,
    };
    let cfg = QtsConfig { difficult_word_min_chars };
    Ok(features::qts_vector_with(&record, &cfg).map_err(value_err)?.values)
}

#[pyfunction]
fn er_randomize(n: &PyItemNetwork, seed: u64) -> PyResult<PyItemNetwork> {
    let inner = baselines::er_randomize(&n.inner, seed).map_err(value_err)?;
    Ok(PyItemNetwork { inner })
}

/// Structural lower bound of a measure over randomized counterparts.
/// Returns `(observed, random_mean, random_sd, samples)`.
#[pyfunction]
#[pyo3(signature = (i, j, measure, runs=100, seed=0, shareable=None, alpha=0.85))]
fn structural_lower_bound(
    i: &PyItemNetwork,
    j: &PyItemNetwork,
    measure: &str,
    runs: usize,
    seed: u64,
    shareable: Option<usize>,
    alpha: f64,
) -> PyResult<(f64, f64, f64, Vec<f64>)> {
    let kind: MeasureKind = measure.parse().map_err(value_err)?;
    let gm = match kind {
        MeasureKind::Ges => GraphMeasure::Ges,
        MeasureKind::Ejs => GraphMeasure::Ejs,
        MeasureKind::DeltaCon => GraphMeasure::DeltaCon(PprOptions::with_alpha(alpha)),
        MeasureKind::Cgs => GraphMeasure::Cgs {
            shareable: shareable
                .ok_or_else(|| value_err("cgs requires the `shareable` argument"))?,
        },
        other => return Err(value_err(format!("{other} is not a structural measure"))),
    };
    let b = baselines::structural_lower_bound(&i.inner, &j.inner, &gm, runs, seed)
        .map_err(value_err)?;
    Ok((b.observed, b.random_mean, b.random_sd, b.random_samples))
}

#[pyfunction]
fn spearman(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<(f64, f64)> {
    let r = analysis::spearman(&xs, &ys).map_err(value_err)?;
    Ok((r.rho, r.p_value))
}

#[pyfunction]
fn distance_correlation(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    analysis::distance_correlation(&xs, &ys).map_err(value_err)
}

#[pyfunction]
fn expected_comparisons(n_measures: usize, per_area_langs: Vec<usize>) -> u64 {
    analysis::expected_comparisons(n_measures, &per_area_langs)
}

/// Generates a synthetic corpus; `spec_json` is a FixtureSpec document.
/// Returns the paths of `(items, articles, expected)`.
#[pyfunction]
fn generate_fixture(spec_json: &str, out_dir: PathBuf) -> PyResult<(String, String, String)> {
    let spec: FixtureSpec = serde_json::from_str(spec_json).map_err(value_err)?;
    let files = fixtures::generate(&spec, &out_dir).map_err(io_err)?;
    Ok((
        files.items.display().to_string(),
        files.articles.display().to_string(),
        files.expected.display().to_string(),
    ))
}

/// A twins/strangers/half-twins FixtureSpec as JSON, ready for
/// `generate_fixture`.
#[pyfunction]
#[pyo3(signature = (preset, languages=3, areas=2, members=6, seed=42))]
fn fixture_preset(
    preset: &str,
    languages: usize,
    areas: usize,
    members: usize,
    seed: u64,
) -> PyResult<String> {
    let spec = match preset {
        "twins" => FixtureSpec::twins(languages, areas, members, seed),
        "strangers" => FixtureSpec::strangers(languages, areas, members, seed),
        "half-twins" => FixtureSpec::half_twins(languages, areas, members, seed),
        other => return Err(value_err(format!("unknown preset `{other}`"))),
    };
    serde_json::to_string(&spec).map_err(value_err)
}

/// Runs the batch pipeline for a JSON config file and returns the manifest
/// as a JSON string.
#[pyfunction]
fn run_pipeline(config_path: PathBuf) -> PyResult<String> {
    let config = RunConfig::from_file(&config_path).map_err(value_err)?;
    let manifest = pipeline::run(&config).map_err(value_err)?;
    serde_json::to_string_pretty(&manifest).map_err(value_err)
}

#[pymodule]
fn _itemnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKnowledgeGraph>()?;
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyItemNetwork>()?;
    m.add_function(wrap_pyfunction!(ges, m)?)?;
    m.add_function(wrap_pyfunction!(ejs, m)?)?;
    m.add_function(wrap_pyfunction!(deltacon, m)?)?;
    m.add_function(wrap_pyfunction!(cgs, m)?)?;
    m.add_function(wrap_pyfunction!(personalized_pagerank, m)?)?;
    m.add_function(wrap_pyfunction!(vertex_cosine, m)?)?;
    m.add_function(wrap_pyfunction!(lds_vector, m)?)?;
    m.add_function(wrap_pyfunction!(qts_vector, m)?)?;
    m.add_function(wrap_pyfunction!(er_randomize, m)?)?;
    m.add_function(wrap_pyfunction!(structural_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(spearman, m)?)?;
    m.add_function(wrap_pyfunction!(distance_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(expected_comparisons, m)?)?;
    m.add_function(wrap_pyfunction!(generate_fixture, m)?)?;
    m.add_function(wrap_pyfunction!(fixture_preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    Ok(())
}
