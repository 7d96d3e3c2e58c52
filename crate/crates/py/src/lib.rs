//! Python bindings. Structured results (summaries, ground truth, config)
//! cross the boundary as JSON strings for `json.loads`.

use std::path::PathBuf;

use pyo3::exceptions::{PyFileNotFoundError, PyIOError, PyValueError};
use pyo3::prelude::*;
use teachlens_core::analytics::{point_in_polygon as core_point_in_polygon, speak_pause_ratio as core_speak_pause};
use teachlens_core::config::AnalysisConfig as CoreConfig;
use teachlens_core::ingest::AudioClip;
use teachlens_core::model::{NormPoint, TimeInterval};
use teachlens_core::pipeline::{analyze_session as core_analyze, validate_session as core_validate, write_artifacts};
use teachlens_core::scoring::{self, Direction, StyleMetrics, StyleNorms};
use teachlens_core::speech::{self, SpeechParams, Utterance};
use teachlens_core::synth::{self, Scenario};
use teachlens_core::Error;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::ManifestMissing(p) => PyFileNotFoundError::new_err(format!("session manifest not found: {}", p.display())),
        Error::Io { .. } => PyIOError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    teachlens_core::analytics::to_canonical_string(value).map_err(to_py)
}

fn clip(samples: Vec<f64>, sample_rate: u32) -> PyResult<AudioClip> {
    AudioClip::new(sample_rate, samples).map_err(to_py)
}

/// Analysis configuration with defaults for every stage.
#[pyclass(name = "AnalysisConfig", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: CoreConfig,
}

#[pymethods]
impl PyConfig {
    /// Defaults, or the TOML/JSON file at `path`.
    #[new]
    #[pyo3(signature = (path=None))]
    fn new(path: Option<PathBuf>) -> PyResult<Self> {
        let inner = match path {
            Some(p) => CoreConfig::load(&p).map_err(to_py)?,
            None => CoreConfig::default(),
        };
        Ok(Self { inner })
    }

    /// Applies one `section.key=value` override.
    fn set(&mut self, assignment: &str) -> PyResult<()> {
        self.inner.set(assignment).map_err(to_py)
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }

    fn __repr__(&self) -> String {
        "AnalysisConfig(...)".to_string()
    }
}

/// Runs the full analysis and returns `summary.json` as a string. Writes the
/// artifacts when `out_dir` is given.
#[pyfunction]
#[pyo3(signature = (session_dir, config=None, out_dir=None, dump_tracking=false))]
fn analyze_session(py: Python<'_>, session_dir: PathBuf, config: Option<PyConfig>, out_dir: Option<PathBuf>, dump_tracking: bool) -> PyResult<String> {
    let config = config.map(|c| c.inner).unwrap_or_default();
    py.detach(|| {
        let artifacts = core_analyze(&session_dir, &config).map_err(to_py)?;
        if let Some(out) = &out_dir {
            write_artifacts(&artifacts, out, dump_tracking).map_err(to_py)?;
        }
        artifacts.summary.to_json().map_err(to_py)
    })
}

/// Returns `(findings, warnings)`, each a list of `(file, message)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn validate_session(session_dir: PathBuf) -> (Vec<(String, String)>, Vec<(String, String)>) {
    let report = core_validate(&session_dir);
    let pairs = |v: Vec<teachlens_core::pipeline::Finding>| v.into_iter().map(|f| (f.file, f.message)).collect();
    (pairs(report.findings), pairs(report.warnings))
}

/// Writes a synthetic session and returns its ground truth as JSON.
#[pyfunction]
#[pyo3(signature = (scenario, out_dir, seed=synth::DEFAULT_SEED))]
fn generate_session(scenario: &str, out_dir: PathBuf, seed: u64) -> PyResult<String> {
    let scenario: Scenario = scenario.parse().map_err(to_py)?;
    json(&synth::generate(scenario, seed, &out_dir).map_err(to_py)?)
}

#[pyfunction]
fn scenarios() -> Vec<&'static str> {
    Scenario::ALL.iter().map(|s| s.name()).collect()
}

/// Speech intervals `(start, end)` in seconds.
#[pyfunction]
fn segment_utterances(samples: Vec<f64>, sample_rate: u32) -> PyResult<Vec<(f64, f64)>> {
    let audio = clip(samples, sample_rate)?;
    Ok(speech::segment_utterances(&audio, &SpeechParams::default())
        .into_iter()
        .map(|u| (u.interval.start, u.interval.end))
        .collect())
}

/// F0 in Hz at each time, `None` where unvoiced.
#[pyfunction]
fn estimate_pitch(samples: Vec<f64>, sample_rate: u32, times: Vec<f64>) -> PyResult<Vec<Option<f64>>> {
    let audio = clip(samples, sample_rate)?;
    Ok(speech::estimate_pitch(&audio, &times, &SpeechParams::default())
        .into_iter()
        .map(|e| e.f0_hz)
        .collect())
}

/// `(jitter_percent, shimmer_percent, cpp_db)` over the voiced frames of the clip.
#[pyfunction]
fn voice_quality(samples: Vec<f64>, sample_rate: u32) -> PyResult<(Option<f64>, Option<f64>, Option<f64>)> {
    let audio = clip(samples, sample_rate)?;
    let p = SpeechParams::default();
    let frames = (audio.duration() / p.hop).floor() as usize;
    let times: Vec<f64> = (0..frames).map(|i| (i as f64 + 0.5) * p.hop).collect();
    let voiced: Vec<(f64, f64)> = speech::estimate_pitch(&audio, &times, &p)
        .into_iter()
        .filter_map(|e| e.f0_hz.map(|f| (e.time, f)))
        .collect();
    let q = speech::voice_quality(&audio, &voiced, &p);
    Ok((q.jitter_percent, q.shimmer_percent, q.cpp_db))
}

/// Full frame and window analysis of a clip, as JSON.
#[pyfunction]
#[pyo3(signature = (samples, sample_rate, window_seconds=10.0))]
fn analyze_audio(py: Python<'_>, samples: Vec<f64>, sample_rate: u32, window_seconds: f64) -> PyResult<String> {
    let audio = clip(samples, sample_rate)?;
    py.detach(|| {
        let p = SpeechParams::default();
        let analysis = speech::analyze_speech(&audio, &p).map_err(to_py)?;
        let windows = speech::aggregate_windows(&analysis, speech::WindowLevel::Fine, window_seconds, &p);
        json(&serde_json::json!({
            "utterances": analysis.utterances.iter().map(|u| [u.interval.start, u.interval.end]).collect::<Vec<_>>(),
            "speaking_rate_wpm": analysis.speaking_rate_wpm(&p),
            "windows": windows,
        }))
    })
}

/// Maps a raw value onto `[0, 100]`: higher-is-better over `[lo, hi]`, or
/// centred on `target` when `target` and `tolerance` are given.
#[pyfunction]
#[pyo3(signature = (value, lo, hi, target=None, tolerance=None))]
fn normalize_feature(value: f64, lo: f64, hi: f64, target: Option<f64>, tolerance: Option<f64>) -> PyResult<f64> {
    let direction = match (target, tolerance) {
        (Some(target), Some(tolerance)) => Direction::TargetCentered { target, tolerance },
        (None, None) => Direction::HigherBetter,
        _ => return Err(PyValueError::new_err("target and tolerance go together")),
    };
    Ok(scoring::normalize_feature(value, (lo, hi), direction))
}

#[pyfunction]
fn score_equal_weights(scores: Vec<f64>) -> PyResult<f64> {
    scoring::score_equal_weights(&scores).map_err(to_py)
}

/// Returns `(score, weights)`.
#[pyfunction]
fn score_reciprocal_std_weights(scores: Vec<f64>, stds: Vec<f64>) -> PyResult<(f64, Vec<f64>)> {
    scoring::score_reciprocal_std_weights(&scores, &stds).map_err(to_py)
}

/// Band verdicts against the default norms, as JSON.
#[pyfunction]
#[pyo3(signature = (speaking_rate_wpm=None, clarity=None, monotony=None))]
fn classify_style(speaking_rate_wpm: Option<f64>, clarity: Option<f64>, monotony: Option<f64>) -> PyResult<String> {
    json(&scoring::classify_style(&StyleMetrics { speaking_rate_wpm, clarity, monotony }, &StyleNorms::default()))
}

/// Closed point-in-polygon test in normalized image coordinates.
#[pyfunction]
fn point_in_polygon(x: f64, y: f64, polygon: Vec<(f64, f64)>) -> bool {
    let poly: Vec<NormPoint> = polygon.into_iter().map(|(x, y)| NormPoint { x, y }).collect();
    core_point_in_polygon(&NormPoint { x, y }, &poly)
}

/// Speech-to-pause statistics for utterances `(start, end)`, as JSON.
#[pyfunction]
fn speak_pause_ratio(utterances: Vec<(f64, f64)>, duration: f64) -> PyResult<String> {
    let utts: Vec<Utterance> = utterances
        .into_iter()
        .map(|(start, end)| TimeInterval::new(start, end).map(|interval| Utterance { interval }))
        .collect::<Result<_, _>>()
        .map_err(to_py)?;
    json(&core_speak_pause(&utts, duration))
}

#[pymodule]
fn teachlens(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(analyze_session, m)?)?;
    m.add_function(wrap_pyfunction!(validate_session, m)?)?;
    m.add_function(wrap_pyfunction!(generate_session, m)?)?;
    m.add_function(wrap_pyfunction!(scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(segment_utterances, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_pitch, m)?)?;
    m.add_function(wrap_pyfunction!(voice_quality, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_audio, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_feature, m)?)?;
    m.add_function(wrap_pyfunction!(score_equal_weights, m)?)?;
    m.add_function(wrap_pyfunction!(score_reciprocal_std_weights, m)?)?;
    m.add_function(wrap_pyfunction!(classify_style, m)?)?;
    m.add_function(wrap_pyfunction!(point_in_polygon, m)?)?;
    m.add_function(wrap_pyfunction!(speak_pause_ratio, m)?)?;
    Ok(())
}
