//! Python bindings for the `sedpp` post-processing library.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::sync::Mutex;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sedpp::dataio::{self, WeakTags};
use sedpp::metrics::{self, DEFAULT_OFFSET_RATIO, DEFAULT_ONSET_COLLAR};
use sedpp::optimizer::{self, Dimension, Evaluator, Search, TuningOptions, ValueKind};
use sedpp::segmentation;
use sedpp::synthgen::{self, SynthSpec};
use sedpp::types::{self, CHALLENGE_MARGIN_SECONDS, DEFAULT_FRAME_DURATION};
use sedpp::{Collars, Method, ParameterSpace, SlopeParams};

fn err(e: sedpp::Error) -> PyErr {
    match e {
        sedpp::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for sedpp::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

fn open(path: &PathBuf) -> PyResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))
}

fn weak_tags(tags: Option<BTreeMap<String, Vec<String>>>) -> Option<WeakTags> {
    tags.map(|map| {
        let mut out = WeakTags::default();
        for (clip, classes) in map {
            out.add_clip(&clip);
            for c in classes {
                out.insert(&clip, &c);
            }
        }
        out
    })
}

/// Per-frame class probabilities of one clip.
#[pyclass(frozen, from_py_object, name = "ClipPrediction")]
#[derive(Clone)]
struct PyClipPrediction(types::ClipPrediction);

#[pymethods]
impl PyClipPrediction {
    /// `curves` holds one list of probabilities per class.
    #[new]
    #[pyo3(signature = (clip_id, class_names, curves, frame_duration = DEFAULT_FRAME_DURATION))]
    fn new(
        clip_id: String,
        class_names: Vec<String>,
        curves: Vec<Vec<f64>>,
        frame_duration: f64,
    ) -> PyResult<Self> {
        Ok(Self(
            types::ClipPrediction::from_curves(clip_id, class_names, curves, frame_duration)
                .py()?,
        ))
    }

    #[getter]
    fn clip_id(&self) -> &str {
        self.0.clip_id()
    }

    #[getter]
    fn class_names(&self) -> Vec<String> {
        self.0.class_names().to_vec()
    }

    #[getter]
    fn n_frames(&self) -> usize {
        self.0.n_frames()
    }

    #[getter]
    fn frame_duration(&self) -> f64 {
        self.0.frame_duration()
    }

    fn curve(&self, class_name: &str) -> PyResult<Vec<f64>> {
        let c = self
            .0
            .class_index(class_name)
            .ok_or_else(|| PyValueError::new_err(format!("unknown class {class_name}")))?;
        Ok(self.0.curve(c).to_vec())
    }

    fn __repr__(&self) -> String {
        format!(
            "ClipPrediction({:?}, {} frames x {} classes)",
            self.0.clip_id(),
            self.0.n_frames(),
            self.0.n_classes()
        )
    }
}

#[pyclass(frozen, from_py_object, name = "Event")]
#[derive(Clone)]
struct PyEvent(types::Event);

#[pymethods]
impl PyEvent {
    #[new]
    fn new(clip_id: String, class_name: String, onset: f64, offset: f64) -> PyResult<Self> {
        Ok(Self(
            types::Event::new(clip_id, class_name, onset, offset).py()?,
        ))
    }

    #[getter]
    fn clip_id(&self) -> &str {
        &self.0.clip_id
    }

    #[getter]
    fn class_name(&self) -> &str {
        &self.0.class_name
    }

    #[getter]
    fn onset(&self) -> f64 {
        self.0.onset
    }

    #[getter]
    fn offset(&self) -> f64 {
        self.0.offset
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!(
            "Event({:?}, {:?}, {}, {})",
            self.0.clip_id, self.0.class_name, self.0.onset, self.0.offset
        )
    }
}

fn wrap_events(events: Vec<types::Event>) -> Vec<PyEvent> {
    events.into_iter().map(PyEvent).collect()
}

fn unwrap_events(events: &[PyEvent]) -> Vec<types::Event> {
    events.iter().map(|e| e.0.clone()).collect()
}

/// Strong annotations: clips and their events.
#[pyclass(frozen, skip_from_py_object, name = "AnnotationSet")]
#[derive(Clone)]
struct PyAnnotationSet(types::AnnotationSet);

#[pymethods]
impl PyAnnotationSet {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        let reader = open(&path)?;
        Ok(Self(
            dataio::read_annotations_tsv(reader, &path.display().to_string()).py()?,
        ))
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        let mut buf = Vec::new();
        dataio::write_annotations_tsv(&self.0, &mut buf).py()?;
        dataio::write_atomic(&path, &buf).py()
    }

    fn events(&self) -> Vec<PyEvent> {
        wrap_events(self.0.events().to_vec())
    }

    fn clips(&self) -> Vec<String> {
        self.0.clips().keys().cloned().collect()
    }

    /// Class names per clip, as derived from the strong events.
    fn weak_tags(&self) -> BTreeMap<String, Vec<String>> {
        dataio::derive_weak_tags(&self.0)
            .clips()
            .map(|(clip, tags)| (clip.clone(), tags.iter().cloned().collect()))
            .collect()
    }

    fn subset(&self, clips: Vec<String>) -> Self {
        Self(self.0.subset(clips.iter().map(String::as_str)))
    }

    fn __len__(&self) -> usize {
        self.0.events().len()
    }
}

/// Segmentation method, parameters and merge/prune margins.
#[pyclass(frozen, skip_from_py_object, name = "SegmenterConfig")]
#[derive(Clone)]
struct PySegmenterConfig(sedpp::SegmenterConfig);

#[pymethods]
impl PySegmenterConfig {
    /// Parses the `key = value` configuration format.
    #[staticmethod]
    #[pyo3(signature = (text, default_margin_frames = None))]
    fn parse(text: &str, default_margin_frames: Option<usize>) -> PyResult<Self> {
        let margin = default_margin_frames.unwrap_or_else(|| {
            types::default_margin_frames(DEFAULT_FRAME_DURATION, CHALLENGE_MARGIN_SECONDS)
        });
        Ok(Self(
            sedpp::SegmenterConfig::parse_kv(text, "<string>", margin).py()?,
        ))
    }

    /// Configuration of a data-wise method, which has no parameters.
    #[staticmethod]
    #[pyo3(signature = (method, min_gap_frames = 9, min_len_frames = 9))]
    fn statistic(method: &str, min_gap_frames: usize, min_len_frames: usize) -> PyResult<Self> {
        let method: Method = method.parse().py()?;
        if !method.is_statistic() {
            return Err(PyValueError::new_err(format!("{method} needs parameters")));
        }
        Ok(Self(sedpp::SegmenterConfig::statistic(
            method,
            min_gap_frames,
            min_len_frames,
        )))
    }

    fn to_kv(&self) -> String {
        self.0.to_kv()
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.0.method.as_str()
    }

    #[getter]
    fn min_gap_frames(&self) -> usize {
        self.0.min_gap_frames
    }

    #[getter]
    fn min_len_frames(&self) -> usize {
        self.0.min_len_frames
    }

    fn __repr__(&self) -> String {
        format!("SegmenterConfig({})", self.0.method)
    }
}

#[pyclass(frozen, name = "ScoreReport")]
struct PyScoreReport(metrics::ScoreReport);

#[pymethods]
impl PyScoreReport {
    #[getter]
    fn macro_f1(&self) -> f64 {
        self.0.macro_f1
    }

    #[getter]
    fn error_rate(&self) -> f64 {
        self.0.error_rate
    }

    /// One dict per class with `tp`, `fp`, `fn`, `n_ref` and `f1` (None when excluded).
    fn classes<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.0
            .classes
            .iter()
            .map(|c| {
                let d = PyDict::new(py);
                d.set_item("class_name", &c.class_name)?;
                d.set_item("n_ref", c.n_ref)?;
                d.set_item("tp", c.counts.tp)?;
                d.set_item("fp", c.counts.fp)?;
                d.set_item("fn", c.counts.fn_)?;
                d.set_item("f1", c.f1)?;
                Ok(d)
            })
            .collect()
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }
}

#[pyfunction]
fn smooth(curve: Vec<f64>, window: usize) -> PyResult<Vec<f64>> {
    sedpp::smoothing::smooth_moving_average(&curve, window).py()
}

#[pyfunction]
fn binarize_absolute(curve: Vec<f64>, threshold: f64) -> Vec<bool> {
    segmentation::binarize_absolute(&curve, threshold)
}

#[pyfunction]
fn binarize_hysteresis(curve: Vec<f64>, t_high: f64, t_low: f64) -> PyResult<Vec<bool>> {
    segmentation::binarize_hysteresis(&curve, t_high, t_low).py()
}

#[pyfunction]
#[pyo3(signature = (curve, k, rise, fall, plateau_eps = 0.0, plateau_len = 10))]
fn binarize_slope(
    curve: Vec<f64>,
    k: usize,
    rise: f64,
    fall: f64,
    plateau_eps: f64,
    plateau_len: usize,
) -> PyResult<Vec<bool>> {
    let params = SlopeParams {
        k,
        rise,
        fall,
        plateau_eps,
        plateau_len,
    };
    segmentation::binarize_slope(&curve, &params).py()
}

/// Maximal active runs as half-open `(start, end)` frame pairs.
#[pyfunction]
fn mask_to_segments(mask: Vec<bool>) -> Vec<(usize, usize)> {
    segmentation::mask_to_segments(&mask, 0)
        .into_iter()
        .map(|s| (s.start_frame, s.end_frame))
        .collect()
}

#[pyfunction]
fn merge_and_prune(
    segments: Vec<(usize, usize)>,
    min_gap_frames: usize,
    min_len_frames: usize,
) -> PyResult<Vec<(usize, usize)>> {
    if segments.windows(2).any(|w| w[1].0 < w[0].1) || segments.iter().any(|s| s.1 < s.0) {
        return Err(PyValueError::new_err(
            "segments must be sorted and disjoint",
        ));
    }
    let segs: Vec<_> = segments
        .iter()
        .map(|&(a, b)| types::Segment::new(0, a, b))
        .collect();
    Ok(
        segmentation::merge_and_prune(&segs, min_gap_frames, min_len_frames)
            .into_iter()
            .map(|s| (s.start_frame, s.end_frame))
            .collect(),
    )
}

#[pyfunction]
#[pyo3(signature = (frame, frame_duration = DEFAULT_FRAME_DURATION))]
fn frames_to_seconds(frame: usize, frame_duration: f64) -> f64 {
    types::frames_to_seconds(frame, frame_duration)
}

#[pyfunction]
#[pyo3(signature = (seconds, frame_duration = DEFAULT_FRAME_DURATION))]
fn seconds_to_frames(seconds: f64, frame_duration: f64) -> usize {
    types::seconds_to_frames(seconds, frame_duration)
}

#[pyfunction]
#[pyo3(signature = (frame_duration = DEFAULT_FRAME_DURATION, margin = CHALLENGE_MARGIN_SECONDS))]
fn default_margin_frames(frame_duration: f64, margin: f64) -> usize {
    types::default_margin_frames(frame_duration, margin)
}

fn unwrap_clips(clips: &[PyClipPrediction]) -> Vec<types::ClipPrediction> {
    clips.iter().map(|c| c.0.clone()).collect()
}

/// Returns `(per_class, global)` data-wise thresholds.
#[pyfunction]
fn datawise_thresholds(clips: Vec<PyClipPrediction>) -> PyResult<(BTreeMap<String, f64>, f64)> {
    let t = segmentation::compute_datawise_thresholds(&unwrap_clips(&clips)).py()?;
    Ok((
        t.class_names.into_iter().zip(t.per_class).collect(),
        t.global,
    ))
}

/// Segments a dataset. `tags` maps clip ids to the classes to segment.
#[pyfunction]
#[pyo3(signature = (clips, config, tags = None))]
fn segment(
    py: Python<'_>,
    clips: Vec<PyClipPrediction>,
    config: &PySegmenterConfig,
    tags: Option<BTreeMap<String, Vec<String>>>,
) -> PyResult<Vec<PyEvent>> {
    let clips = unwrap_clips(&clips);
    let tags = weak_tags(tags);
    let config = config.0.clone();
    let events = py.detach(|| segmentation::segment_dataset(&clips, &config, tags.as_ref()));
    Ok(wrap_events(events.py()?))
}

#[pyfunction]
#[pyo3(signature = (annotations, events, onset_collar = DEFAULT_ONSET_COLLAR, offset_ratio = DEFAULT_OFFSET_RATIO))]
fn score(
    annotations: &PyAnnotationSet,
    events: Vec<PyEvent>,
    onset_collar: f64,
    offset_ratio: f64,
) -> PyResult<PyScoreReport> {
    let collars = Collars {
        onset: onset_collar,
        offset_ratio,
    };
    collars.validate().py()?;
    Ok(PyScoreReport(
        metrics::score(&annotations.0, &unwrap_events(&events), &collars).py()?,
    ))
}

fn parse_space(
    bounds: Vec<(String, f64, f64, String)>,
    points: usize,
    steps: usize,
) -> PyResult<ParameterSpace> {
    let dims = bounds
        .into_iter()
        .map(|(name, lo, hi, kind)| {
            Ok(Dimension::new(
                &name,
                lo,
                hi,
                kind.parse::<ValueKind>().py()?,
            ))
        })
        .collect::<PyResult<Vec<_>>>()?;
    ParameterSpace::new(dims, points, steps).py()
}

/// Maximizes a Python callable over a bounded space.
///
/// `bounds` lists `(name, lower, upper, kind)` with kind `real`, `int` or
/// `odd`. The callable receives a list of floats and returns a float.
/// Returns `(best, best_value, evaluations)`.
#[pyfunction]
#[pyo3(signature = (objective, bounds, points = 9, steps = 4))]
fn dichotomic_search(
    py: Python<'_>,
    objective: Py<PyAny>,
    bounds: Vec<(String, f64, f64, String)>,
    points: usize,
    steps: usize,
) -> PyResult<(Vec<f64>, f64, usize)> {
    let space = parse_space(bounds, points, steps)?;
    let failure: Mutex<Option<PyErr>> = Mutex::new(None);
    let f = |x: &[f64]| -> f64 {
        Python::attach(|py| {
            match objective
                .call1(py, (x.to_vec(),))
                .and_then(|v| v.extract::<f64>(py))
            {
                Ok(v) => v,
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                    f64::NAN
                }
            }
        })
    };
    let result = py
        .detach(|| optimizer::dichotomic_search(&f, &space))
        .py()?;
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok((result.best, result.best_value, result.evaluations))
}

/// Tunes a parametric method. Returns `(config, macro_f1, evaluations)`.
///
/// `bounds` defaults to the method family's standard space.
#[pyfunction]
#[pyo3(signature = (clips, annotations, method, bounds = None, points = 9, steps = 4, mode = "dicho", use_oracle = true))]
#[allow(clippy::too_many_arguments)]
fn optimize(
    py: Python<'_>,
    clips: Vec<PyClipPrediction>,
    annotations: &PyAnnotationSet,
    method: &str,
    bounds: Option<Vec<(String, f64, f64, String)>>,
    points: usize,
    steps: usize,
    mode: &str,
    use_oracle: bool,
) -> PyResult<(PySegmenterConfig, f64, usize)> {
    let method: Method = method.parse().py()?;
    let space = match bounds {
        Some(b) => parse_space(b, points, steps)?,
        None => optimizer::default_space(method.family(), points, steps).py()?,
    };
    let search = match mode {
        "grid" => Search::Grid(space.initial_grid()),
        "dicho" => Search::Dichotomic(space),
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let clips = unwrap_clips(&clips);
    let margin = types::default_margin_frames(
        clips
            .first()
            .map_or(DEFAULT_FRAME_DURATION, |c| c.frame_duration()),
        CHALLENGE_MARGIN_SECONDS,
    );
    let options = TuningOptions {
        collars: Collars::default(),
        min_gap_frames: margin,
        min_len_frames: margin,
        use_oracle,
    };
    let outcome = py
        .detach(|| {
            let evaluator = Evaluator::new(&clips, &annotations.0, options)?;
            if method.is_class_dependent() {
                optimizer::optimize_class_dependent(method, &search, &evaluator)
            } else {
                optimizer::optimize_class_independent(method, &search, &evaluator)
            }
        })
        .py()?;
    Ok((
        PySegmenterConfig(outcome.config),
        outcome.macro_f1,
        outcome.evaluations,
    ))
}

/// Generates a synthetic corpus. Returns `(annotations, clips)`.
#[pyfunction]
#[pyo3(signature = (seed = 0, n_clips = 100, noise_sigma = None, inside_prob = None, outside_prob = None))]
fn synth(
    seed: u64,
    n_clips: usize,
    noise_sigma: Option<f64>,
    inside_prob: Option<f64>,
    outside_prob: Option<f64>,
) -> PyResult<(PyAnnotationSet, Vec<PyClipPrediction>)> {
    let defaults = SynthSpec::default();
    let spec = SynthSpec {
        seed,
        n_clips,
        noise_sigma: noise_sigma.unwrap_or(defaults.noise_sigma),
        inside_prob: inside_prob.unwrap_or(defaults.inside_prob),
        outside_prob: outside_prob.unwrap_or(defaults.outside_prob),
        ..defaults
    };
    let corpus = synthgen::generate(&spec).py()?;
    Ok((
        PyAnnotationSet(corpus.annotations),
        corpus
            .predictions
            .into_iter()
            .map(PyClipPrediction)
            .collect(),
    ))
}

#[pyfunction]
#[pyo3(signature = (directory, frame_duration = DEFAULT_FRAME_DURATION))]
fn read_predictions(directory: PathBuf, frame_duration: f64) -> PyResult<Vec<PyClipPrediction>> {
    Ok(dataio::read_prediction_dir(&directory, frame_duration)
        .py()?
        .into_iter()
        .map(PyClipPrediction)
        .collect())
}

#[pyfunction]
fn write_prediction(clip: &PyClipPrediction, path: PathBuf) -> PyResult<()> {
    let mut buf = Vec::new();
    dataio::write_probability_csv(&clip.0, &mut buf).py()?;
    dataio::write_atomic(&path, &buf).py()
}

#[pyfunction]
fn read_events(path: PathBuf) -> PyResult<Vec<PyEvent>> {
    let reader = open(&path)?;
    let set = dataio::read_annotations_tsv(reader, &path.display().to_string()).py()?;
    Ok(wrap_events(set.events().to_vec()))
}

#[pyfunction]
fn write_events(events: Vec<PyEvent>, path: PathBuf) -> PyResult<()> {
    let mut buf = Vec::new();
    dataio::write_events_tsv(&unwrap_events(&events), &mut buf).py()?;
    dataio::write_atomic(&path, &buf).py()
}

#[pymodule]
fn pysedpp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyClipPrediction>()?;
    m.add_class::<PyEvent>()?;
    m.add_class::<PyAnnotationSet>()?;
    m.add_class::<PySegmenterConfig>()?;
    m.add_class::<PyScoreReport>()?;
    m.add("DEFAULT_FRAME_DURATION", DEFAULT_FRAME_DURATION)?;
    m.add(
        "METHODS",
        Method::ALL.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
    )?;
    m.add_function(wrap_pyfunction!(smooth, m)?)?;
    m.add_function(wrap_pyfunction!(binarize_absolute, m)?)?;
    m.add_function(wrap_pyfunction!(binarize_hysteresis, m)?)?;
    m.add_function(wrap_pyfunction!(binarize_slope, m)?)?;
    m.add_function(wrap_pyfunction!(mask_to_segments, m)?)?;
    m.add_function(wrap_pyfunction!(merge_and_prune, m)?)?;
    m.add_function(wrap_pyfunction!(frames_to_seconds, m)?)?;
    m.add_function(wrap_pyfunction!(seconds_to_frames, m)?)?;
    m.add_function(wrap_pyfunction!(default_margin_frames, m)?)?;
    m.add_function(wrap_pyfunction!(datawise_thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(dichotomic_search, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(read_predictions, m)?)?;
    m.add_function(wrap_pyfunction!(write_prediction, m)?)?;
    m.add_function(wrap_pyfunction!(read_events, m)?)?;
    m.add_function(wrap_pyfunction!(write_events, m)?)?;
    Ok(())
}
