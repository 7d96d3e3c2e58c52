//! The per-session summary document behind both dashboard screens.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::activity::{action_proportions, speak_pause_ratio, teaching_style_balance, ActionProportions, SpeakPause, TeachingStyle};
use super::spatial::{compute_heatmap, xy_series, zone_occupancy, HeatmapGrid, XyPoint, ZoneOccupancy};
use crate::actions::EventTimeline;
use crate::config::AnalysisConfig;
use crate::ingest::{AnnotationSource, RawAnnotation, SessionManifest};
use crate::model::TimeInterval;
use crate::scoring::{classify_style, score_session, ScoreFeature, SpeakingScore, StyleMetrics, StyleNorms, StyleVerdicts};
use crate::speech::{aggregate_windows, jitter_percent, mean, population_std, shimmer_percent, SpeechAnalysis, WindowFeatures, WindowLevel};
use crate::{Error, Result};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMELINE_FILE: &str = "timeline.json";
pub const WINDOWS_FILE: &str = "windows.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaInfo {
    pub path: String,
    pub available: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingSummary {
    pub track_id: u64,
    pub sample_count: usize,
    pub exits: Vec<TimeInterval>,
}

/// Session-level vocal measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeakingMetrics {
    pub speaking_rate_wpm: f64,
    pub clarity: Option<f64>,
    pub cpp_db: Option<f64>,
    /// Mean intonation score over fine windows.
    pub monotony: Option<f64>,
    pub jitter_percent: Option<f64>,
    pub shimmer_percent: Option<f64>,
    pub loudness_mean_db: Option<f64>,
    pub loudness_std_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakingStyle {
    pub metrics: SpeakingMetrics,
    pub verdicts: StyleVerdicts,
    /// `None` when no scoring feature has a value.
    pub score: Option<SpeakingScore>,
    pub norms: StyleNorms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSets {
    pub coarse: Vec<WindowFeatures>,
    pub fine: Vec<WindowFeatures>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineRef {
    pub file: String,
    pub event_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config: Value,
}

impl Provenance {
    pub fn new(config: &AnalysisConfig) -> Result<Self> {
        Ok(Self {
            tool: "teachlens".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: serde_json::to_value(config)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub schema_version: u32,
    pub session_id: String,
    pub duration: f64,
    pub media: MediaInfo,
    pub tracking: TrackingSummary,
    pub heatmap: HeatmapGrid,
    pub zone_occupancy: ZoneOccupancy,
    pub xy_series: Vec<XyPoint>,
    pub action_proportions: ActionProportions,
    pub teaching_style: TeachingStyle,
    pub speaking_style: SpeakingStyle,
    pub speak_pause: SpeakPause,
    pub windows: WindowSets,
    pub timeline: TimelineRef,
    pub provenance: Provenance,
}

/// Recursively rebuilds every JSON object with its keys in sorted order.
pub fn canonical_json(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Map::new();
            for (k, v) in entries {
                out.insert(k, canonical_json(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonical_json).collect()),
        other => other,
    }
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&canonical_json(serde_json::to_value(value)?))?;
    s.push('\n');
    Ok(s)
}

impl SessionSummary {
    pub fn to_json(&self) -> Result<String> {
        to_canonical_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Everything `compile_summary` draws on. `None` marks an artifact that was
/// not produced upstream.
pub struct SummaryInputs<'a> {
    pub manifest: &'a SessionManifest,
    pub config: &'a AnalysisConfig,
    pub track: Option<&'a crate::tracking::TeacherTrack>,
    pub timeline: Option<&'a EventTimeline>,
    pub speech: Option<&'a SpeechAnalysis>,
    /// Manual annotations (the only source of teaching-style labels).
    pub annotations: &'a [RawAnnotation],
    pub media: MediaInfo,
}

/// Scoring features for a session: the manifest list when present, else the
/// configured list.
pub fn scoring_features(manifest: &SessionManifest, config: &AnalysisConfig) -> Result<Vec<ScoreFeature>> {
    match &manifest.scoring_features {
        Some(names) => names.iter().map(|n| n.parse()).collect(),
        None => Ok(config.scoring.features.clone()),
    }
}

pub fn compile_summary(inputs: &SummaryInputs<'_>) -> Result<SessionSummary> {
    let track = inputs.track.ok_or(Error::MissingArtifact("teacher track"))?;
    let timeline = inputs.timeline.ok_or(Error::MissingArtifact("event timeline"))?;
    let speech = inputs.speech.ok_or(Error::MissingArtifact("speech analysis"))?;
    let cfg = inputs.config;
    let m = inputs.manifest;
    let duration = m.duration;

    let coarse = aggregate_windows(speech, WindowLevel::Coarse, cfg.windows.coarse_seconds, &cfg.speech);
    let fine = aggregate_windows(speech, WindowLevel::Fine, cfg.windows.fine_seconds, &cfg.speech);

    let speak_pause = speak_pause_ratio(&speech.utterances, speech.duration);
    let loudness: Vec<f64> = speech.frames.iter().filter(|f| f.speech).map(|f| f.loudness_db).collect();
    let cpp = speech.mean_cpp();
    let metrics = SpeakingMetrics {
        speaking_rate_wpm: speech.speaking_rate_wpm(&cfg.speech),
        clarity: cpp.map(|c| cfg.speech.clarity_from_cpp(c)),
        cpp_db: cpp,
        monotony: mean(fine.iter().filter_map(|w| w.linguistic.intonation_score)),
        jitter_percent: jitter_percent(&speech.cycles),
        shimmer_percent: shimmer_percent(&speech.cycles),
        loudness_mean_db: mean(loudness.iter().copied()),
        loudness_std_db: population_std(&loudness),
    };
    let norms = &cfg.scoring.norms;
    let verdicts = classify_style(
        &StyleMetrics {
            speaking_rate_wpm: Some(metrics.speaking_rate_wpm),
            clarity: metrics.clarity,
            monotony: metrics.monotony,
        },
        norms,
    );
    let session_values: Vec<(ScoreFeature, Option<f64>)> = scoring_features(m, cfg)?
        .into_iter()
        .map(|f| {
            let v = match f {
                ScoreFeature::LoudnessStability => metrics.loudness_std_db,
                ScoreFeature::Intonation => metrics.monotony,
                ScoreFeature::Clarity => metrics.clarity,
                ScoreFeature::SpeakingRate => Some(metrics.speaking_rate_wpm),
                ScoreFeature::SpeechFraction => Some(speak_pause.speech_fraction),
            };
            (f, v)
        })
        .collect();
    let score = if session_values.iter().any(|(_, v)| v.is_some()) {
        Some(score_session(&session_values, &fine, norms, &cfg.speech)?)
    } else {
        None
    };

    let manual: Vec<RawAnnotation> = inputs.annotations.iter().filter(|a| a.source == AnnotationSource::Manual).cloned().collect();
    let a = &cfg.analytics;
    Ok(SessionSummary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        session_id: m.session_id.clone(),
        duration,
        media: inputs.media.clone(),
        tracking: TrackingSummary {
            track_id: track.track_id,
            sample_count: track.samples.len(),
            exits: track.exits.clone(),
        },
        heatmap: compute_heatmap(track, a.heatmap_rows, a.heatmap_cols),
        zone_occupancy: zone_occupancy(track, &m.zones),
        xy_series: xy_series(track, a.xy_step),
        action_proportions: action_proportions(timeline, track, &m.zones, duration, &a.donut),
        teaching_style: teaching_style_balance(&manual, &m.style_map),
        speaking_style: SpeakingStyle {
            metrics,
            verdicts,
            score,
            norms: norms.clone(),
        },
        speak_pause,
        windows: WindowSets { coarse, fine },
        timeline: TimelineRef {
            file: TIMELINE_FILE.into(),
            event_count: timeline.events.len(),
        },
        provenance: Provenance::new(cfg)?,
    })
}
