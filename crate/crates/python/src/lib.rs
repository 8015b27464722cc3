//! Python bindings. Datasets and reports cross the boundary as JSON text so
//! the Python side can use `json.loads` and keep the exact on-disk format.

use std::collections::BTreeMap;

use layoutqa::funsd::parse_funsd_file;
use layoutqa::funsd_qa::emit_funsd_dataset;
use layoutqa::geometry::{self, BBox};
use layoutqa::layout::{self, Page};
use layoutqa::metrics::{self, PredictionRecord};
use layoutqa::question::{emit_dataset, Dataset, EmitConfig, SplitRatios, TemplateBank};
use layoutqa::scene_graph::{self, serialize_scene_graph, SceneGraphConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_bbox(c: [f64; 4]) -> PyResult<BBox> {
    BBox::try_from(c).map_err(value_err)
}

fn ratios(values: Vec<f64>) -> PyResult<SplitRatios> {
    SplitRatios::from_values(&values).map_err(PyValueError::new_err)
}

/// A validated layout page.
#[pyclass(name = "Page", module = "layoutqa_py", frozen)]
struct PyPage {
    inner: Page,
}

#[pymethods]
impl PyPage {
    #[getter]
    fn page_id(&self) -> &str {
        &self.inner.page_id
    }

    #[getter]
    fn width(&self) -> f64 {
        self.inner.width
    }

    #[getter]
    fn height(&self) -> f64 {
        self.inner.height
    }

    /// `(id, category, [x0, y0, x1, y1], text)` per segment, in input order.
    fn segments(&self) -> Vec<(String, String, [f64; 4], String)> {
        self.inner
            .segments
            .iter()
            .map(|s| (s.id.clone(), s.category.as_str().to_owned(), s.bbox.to_array(), s.text.clone()))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.segments.len()
    }

    fn __repr__(&self) -> String {
        format!("Page(page_id={:?}, segments={})", self.inner.page_id, self.inner.segments.len())
    }
}

#[pyclass(name = "SceneGraph", module = "layoutqa_py", frozen)]
struct PySceneGraph {
    inner: scene_graph::SceneGraph,
}

#[pymethods]
impl PySceneGraph {
    #[getter]
    fn page_id(&self) -> &str {
        self.inner.page_id()
    }

    #[getter]
    fn reading_order(&self) -> Vec<String> {
        self.inner.reading_order.clone()
    }

    /// Refined category of every segment.
    fn categories(&self) -> BTreeMap<String, String> {
        self.inner
            .segments()
            .iter()
            .map(|s| (s.id.clone(), s.category.as_str().to_owned()))
            .collect()
    }

    /// `(kind, from, to, value)`; `value` is the relative position for
    /// `relative` edges and `None` for `parent_of`.
    fn edges(&self) -> Vec<(String, String, String, Option<String>)> {
        self.inner
            .edges
            .iter()
            .map(|e| {
                let kind = match e.kind {
                    scene_graph::EdgeKind::ParentOf => "parent_of",
                    scene_graph::EdgeKind::Relative => "relative",
                };
                (kind.to_owned(), e.from.clone(), e.to.clone(), e.value.map(|v| v.as_str().to_owned()))
            })
            .collect()
    }

    fn parent_of(&self, child: &str) -> Option<String> {
        self.inner.parent_of(child).map(str::to_owned)
    }

    fn gap(&self, a: &str, b: &str) -> f64 {
        self.inner.gaps.get(a, b)
    }

    fn to_json(&self) -> String {
        String::from_utf8(serialize_scene_graph(&self.inner)).expect("JSON is UTF-8")
    }

    fn __repr__(&self) -> String {
        format!("SceneGraph(page_id={:?}, edges={})", self.inner.page_id(), self.inner.edges.len())
    }
}

#[pyfunction]
fn gap_distance(a: [f64; 4], b: [f64; 4]) -> PyResult<f64> {
    Ok(geometry::gap_distance(&to_bbox(a)?, &to_bbox(b)?))
}

/// Position of `a` relative to `b`, e.g. `"left_top"`.
#[pyfunction]
fn relative_position(a: [f64; 4], b: [f64; 4]) -> PyResult<&'static str> {
    Ok(geometry::relative_position(&to_bbox(a)?, &to_bbox(b)?).as_str())
}

#[pyfunction]
fn parse_layout(text: &str) -> PyResult<Vec<PyPage>> {
    let pages = layout::parse_layout_file(text.as_bytes()).map_err(value_err)?;
    Ok(pages.into_iter().map(|inner| PyPage { inner }).collect())
}

#[pyfunction]
#[pyo3(signature = (page, max_caption_gap_frac = scene_graph::DEFAULT_MAX_CAPTION_GAP_FRAC))]
fn build_scene_graph(page: &PyPage, max_caption_gap_frac: f64) -> PyResult<PySceneGraph> {
    let config = SceneGraphConfig { max_caption_gap_frac };
    let inner = scene_graph::build_scene_graph(&page.inner, &config).map_err(value_err)?;
    Ok(PySceneGraph { inner })
}

/// Generate a question dataset from layout JSON; returns the dataset JSON.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (layout_json, total, ratios, seed, quota = 10, retry_cap = 50, templates = None))]
fn generate_dataset(
    py: Python<'_>,
    layout_json: &str,
    total: usize,
    ratios: Vec<f64>,
    seed: u64,
    quota: usize,
    retry_cap: usize,
    templates: Option<&str>,
) -> PyResult<String> {
    let bank = match templates {
        Some(t) => TemplateBank::parse(t.as_bytes()).map_err(value_err)?,
        None => TemplateBank::default(),
    };
    let config = EmitConfig {
        total,
        ratios: self::ratios(ratios)?,
        seed,
        quota,
        retry_cap,
    };
    let bytes = layout_json.as_bytes().to_vec();
    py.detach(move || {
        let pages = layout::parse_layout_file(&bytes).map_err(|e| e.to_string())?;
        let graphs = pages
            .iter()
            .map(|p| scene_graph::build_scene_graph(p, &SceneGraphConfig::default()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let ds = emit_dataset(&graphs, &bank, &config).map_err(|e| e.to_string())?;
        Ok::<_, String>(String::from_utf8(ds.to_json()).expect("JSON is UTF-8"))
    })
    .map_err(PyValueError::new_err)
}

/// Extractive QA from FUNSD annotations keyed by page id; returns JSON.
#[pyfunction]
fn derive_funsd_qa(forms: BTreeMap<String, String>, ratios: Vec<f64>, seed: u64) -> PyResult<String> {
    let parsed = forms
        .into_iter()
        .map(|(id, text)| {
            parse_funsd_file(text.as_bytes())
                .map(|f| (id.clone(), f))
                .map_err(|e| value_err(format!("{id}: {e}")))
        })
        .collect::<PyResult<Vec<_>>>()?;
    let ds = emit_funsd_dataset(&parsed, &self::ratios(ratios)?, seed).map_err(value_err)?;
    Ok(String::from_utf8(ds.to_json()).expect("JSON is UTF-8"))
}

/// Sentence BLEU (0-100) of two raw strings after tokenization.
#[pyfunction]
fn sentence_bleu(reference: &str, hypothesis: &str) -> PyResult<f64> {
    metrics::sentence_bleu(&metrics::tokenize(reference), &metrics::tokenize(hypothesis)).map_err(value_err)
}

/// Exact-match report for `{question_id: prediction}`; returns JSON.
#[pyfunction]
fn exact_match_accuracy(dataset_json: &str, predictions: BTreeMap<String, String>) -> PyResult<String> {
    let ds = Dataset::parse(dataset_json.as_bytes()).map_err(value_err)?;
    let preds: Vec<PredictionRecord> = predictions
        .into_iter()
        .map(|(question_id, prediction)| PredictionRecord { question_id, prediction })
        .collect();
    let report = metrics::exact_match_accuracy(&ds, &preds).map_err(value_err)?;
    Ok(String::from_utf8(report.to_json()).expect("JSON is UTF-8"))
}

#[pymodule]
fn layoutqa_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPage>()?;
    m.add_class::<PySceneGraph>()?;
    m.add_function(wrap_pyfunction!(gap_distance, m)?)?;
    m.add_function(wrap_pyfunction!(relative_position, m)?)?;
    m.add_function(wrap_pyfunction!(parse_layout, m)?)?;
    m.add_function(wrap_pyfunction!(build_scene_graph, m)?)?;
    m.add_function(wrap_pyfunction!(generate_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(derive_funsd_qa, m)?)?;
    m.add_function(wrap_pyfunction!(sentence_bleu, m)?)?;
    m.add_function(wrap_pyfunction!(exact_match_accuracy, m)?)?;
    Ok(())
}
