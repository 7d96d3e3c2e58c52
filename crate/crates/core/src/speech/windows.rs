//! Coarse and fine window aggregation of frame and utterance features.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{jitter_percent, mean, shimmer_percent, population_std, words_per_minute, SpeechAnalysis, SpeechParams};
use crate::model::TimeInterval;

/// Reference frequency for semitone conversion.
const SEMITONE_REF_HZ: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowLevel {
    Coarse,
    Fine,
}

impl WindowLevel {
    /// Nominal window length in seconds.
    pub fn seconds(self) -> f64 {
        match self {
            WindowLevel::Coarse => 60.0,
            WindowLevel::Fine => 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StatisticalFeatures {
    pub loudness_mean_db: Option<f64>,
    pub loudness_std_db: Option<f64>,
    /// Semitones relative to 100 Hz.
    pub pitch_mean_st: Option<f64>,
    pub pitch_std_st: Option<f64>,
    pub f1_hz: Option<f64>,
    pub f2_hz: Option<f64>,
    pub voicing_prob_mean: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ContextualFeatures {
    pub utterance_count: usize,
    pub mean_utterance_len: Option<f64>,
    pub mean_pause_len: Option<f64>,
    pub speaking_rate_wpm: f64,
    pub speech_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinguisticFeatures {
    pub cpp_db: Option<f64>,
    pub jitter_percent: Option<f64>,
    pub shimmer_percent: Option<f64>,
    pub intonation_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowFeatures {
    pub interval: TimeInterval,
    pub level: WindowLevel,
    /// Shorter than the nominal length (the session tail).
    pub partial: bool,
    pub statistical: StatisticalFeatures,
    pub contextual: ContextualFeatures,
    pub linguistic: LinguisticFeatures,
}

/// Splits `[0, duration]` into consecutive windows of `length` seconds; the
/// last one ends at `duration`.
pub fn tile_windows(duration: f64, length: f64) -> Vec<TimeInterval> {
    if !(duration > 0.0 && length > 0.0) {
        return Vec::new();
    }
    let count = (duration / length).ceil().max(1.0) as usize;
    (0..count)
        .map(|k| TimeInterval {
            start: k as f64 * length,
            end: ((k + 1) as f64 * length).min(duration),
        })
        .filter(|w| w.duration() > 0.0)
        .collect()
}

fn semitones(hz: f64) -> f64 {
    12.0 * (hz / SEMITONE_REF_HZ).log2()
}

/// `[start, end)` membership, with the final window closed.
fn in_window(t: f64, w: &TimeInterval, last: bool) -> bool {
    t >= w.start && (t < w.end || (last && t <= w.end))
}

fn overlap(a: &TimeInterval, w: &TimeInterval) -> f64 {
    (a.end.min(w.end) - a.start.max(w.start)).max(0.0)
}

/// Per-window features at `level`, using `window_length` seconds per window.
pub fn aggregate_windows(analysis: &SpeechAnalysis, level: WindowLevel, window_length: f64, params: &SpeechParams) -> Vec<WindowFeatures> {
    let tiles = tile_windows(analysis.duration, window_length);
    let pauses: Vec<TimeInterval> = analysis
        .utterances
        .windows(2)
        .map(|p| TimeInterval { start: p[0].interval.end, end: p[1].interval.start })
        .collect();
    let count = tiles.len();
    tiles
        .into_iter()
        .enumerate()
        .map(|(k, w)| {
            let last = k + 1 == count;
            let frames: Vec<_> = analysis.frames.iter().filter(|f| in_window(f.time, &w, last)).collect();
            let speech: Vec<_> = frames.iter().filter(|f| f.speech).collect();
            let loudness: Vec<f64> = speech.iter().map(|f| f.loudness_db).collect();
            let pitch: Vec<f64> = frames.iter().filter_map(|f| f.f0_hz.map(semitones)).collect();
            let pitch_std = population_std(&pitch);

            let utt: Vec<f64> = analysis
                .utterances
                .iter()
                .map(|u| overlap(&u.interval, &w))
                .filter(|o| *o > 0.0)
                .collect();
            let pause: Vec<f64> = pauses.iter().map(|p| overlap(p, &w)).filter(|o| *o > 0.0).collect();
            let nuclei = analysis.nuclei.iter().filter(|t| in_window(**t, &w, last)).count();
            let cycles: Vec<_> = analysis.cycles.iter().filter(|c| in_window(c.time, &w, last)).copied().collect();

            WindowFeatures {
                interval: w,
                level,
                partial: w.duration() < window_length - 1e-9,
                statistical: StatisticalFeatures {
                    loudness_mean_db: mean(loudness.iter().copied()),
                    loudness_std_db: population_std(&loudness),
                    pitch_mean_st: mean(pitch.iter().copied()),
                    pitch_std_st: pitch_std,
                    f1_hz: mean(frames.iter().filter_map(|f| f.f1_hz)),
                    f2_hz: mean(frames.iter().filter_map(|f| f.f2_hz)),
                    voicing_prob_mean: mean(speech.iter().map(|f| f.voicing_prob)),
                },
                contextual: ContextualFeatures {
                    utterance_count: utt.len(),
                    mean_utterance_len: mean(utt.iter().copied()),
                    mean_pause_len: mean(pause.iter().copied()),
                    speaking_rate_wpm: words_per_minute(nuclei, w.duration(), params.syllables_per_word),
                    speech_fraction: (utt.iter().sum::<f64>() / w.duration()).clamp(0.0, 1.0),
                },
                linguistic: LinguisticFeatures {
                    cpp_db: mean(frames.iter().filter_map(|f| f.cpp_db)),
                    jitter_percent: jitter_percent(&cycles),
                    shimmer_percent: shimmer_percent(&cycles),
                    intonation_score: pitch_std.map(|s| s / params.semitone_ref),
                },
            }
        })
        .collect()
}

pub const CSV_COLUMNS: [&str; 21] = [
    "start",
    "end",
    "level",
    "partial",
    "loudness_mean_db",
    "loudness_std_db",
    "pitch_mean_st",
    "pitch_std_st",
    "f1_hz",
    "f2_hz",
    "voicing_prob_mean",
    "utterance_count",
    "mean_utterance_len",
    "mean_pause_len",
    "speaking_rate_wpm",
    "speech_fraction",
    "cpp_db",
    "jitter_percent",
    "shimmer_percent",
    "intonation_score",
    "clarity",
];

/// One row per window; unavailable values are empty cells.
pub fn windows_to_csv(windows: &[WindowFeatures], params: &SpeechParams) -> String {
    fn opt(v: Option<f64>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for w in windows {
        let s = &w.statistical;
        let c = &w.contextual;
        let l = &w.linguistic;
        let level = match w.level {
            WindowLevel::Coarse => "coarse",
            WindowLevel::Fine => "fine",
        };
        let cells = [
            w.interval.start.to_string(),
            w.interval.end.to_string(),
            level.to_string(),
            w.partial.to_string(),
            opt(s.loudness_mean_db),
            opt(s.loudness_std_db),
            opt(s.pitch_mean_st),
            opt(s.pitch_std_st),
            opt(s.f1_hz),
            opt(s.f2_hz),
            opt(s.voicing_prob_mean),
            c.utterance_count.to_string(),
            opt(c.mean_utterance_len),
            opt(c.mean_pause_len),
            c.speaking_rate_wpm.to_string(),
            c.speech_fraction.to_string(),
            opt(l.cpp_db),
            opt(l.jitter_percent),
            opt(l.shimmer_percent),
            opt(l.intonation_score),
            opt(l.cpp_db.map(|v| params.clarity_from_cpp(v))),
        ];
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
