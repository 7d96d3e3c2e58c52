//! Speech analysis: utterance segmentation, frame-level acoustics, voice
//! quality, speaking rate, and aggregation into coarse and fine windows.

mod formants;
mod pitch;
mod quality;
mod rate;
mod vad;
mod windows;

use serde::{Deserialize, Serialize};

pub use formants::{estimate_formants, FormantEstimate};
pub use pitch::{estimate_pitch, PitchEstimate};
pub use quality::{cepstral_peak_prominence, detect_cycles, jitter_percent, shimmer_percent, voice_quality, Cycle, VoiceQuality};
pub use rate::{speaking_rate, syllable_nuclei, words_per_minute};
pub use vad::{frame_energies, segment_utterances};
pub use windows::{aggregate_windows, tile_windows, windows_to_csv, ContextualFeatures, LinguisticFeatures, StatisticalFeatures, WindowFeatures, WindowLevel};

use crate::ingest::AudioClip;
use crate::model::TimeInterval;

/// Floor applied to mean-square energies before taking logs.
pub(crate) const ENERGY_FLOOR: f64 = 1e-20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeechParams {
    /// Analysis frame length, seconds.
    pub frame_length: f64,
    /// Frame hop, seconds.
    pub hop: f64,
    /// Speech threshold above the noise floor, dB.
    pub vad_delta_db: f64,
    /// Percentile of frame energies taken as the noise floor.
    pub noise_percentile: f64,
    /// Silences shorter than this inside speech are bridged, seconds.
    pub gap_close: f64,
    /// Utterances shorter than this are discarded, seconds.
    pub min_utterance: f64,
    pub pitch_window: f64,
    pub f0_min: f64,
    pub f0_max: f64,
    pub voicing_threshold: f64,
    /// The shortest-lag autocorrelation peak within this fraction of the best
    /// peak wins, which suppresses octave-down errors.
    pub octave_tolerance: f64,
    /// Pitch spread (semitones) that maps to an intonation score of 1.
    pub semitone_ref: f64,
    /// Intensity smoothing window for syllable nuclei, seconds.
    pub intensity_smoothing: f64,
    pub nucleus_prominence_db: f64,
    pub syllables_per_word: f64,
    pub cpp_window: f64,
    pub formant_window: f64,
    /// CPP values (dB) mapped to clarity 0 and 1.
    pub clarity_cpp_range: [f64; 2],
}

impl Default for SpeechParams {
    fn default() -> Self {
        Self {
            frame_length: 0.025,
            hop: 0.010,
            vad_delta_db: 9.0,
            noise_percentile: 10.0,
            gap_close: 0.2,
            min_utterance: 0.125,
            pitch_window: 0.040,
            f0_min: 75.0,
            f0_max: 400.0,
            voicing_threshold: 0.45,
            octave_tolerance: 0.9,
            semitone_ref: 2.0,
            intensity_smoothing: 0.120,
            nucleus_prominence_db: 2.0,
            syllables_per_word: 1.5,
            cpp_window: 0.064,
            formant_window: 0.030,
            clarity_cpp_range: [0.0, 15.0],
        }
    }
}

impl SpeechParams {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            ("frame_length", self.frame_length),
            ("hop", self.hop),
            ("pitch_window", self.pitch_window),
            ("f0_min", self.f0_min),
            ("semitone_ref", self.semitone_ref),
            ("intensity_smoothing", self.intensity_smoothing),
            ("syllables_per_word", self.syllables_per_word),
            ("cpp_window", self.cpp_window),
            ("formant_window", self.formant_window),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(crate::Error::Config(format!("speech.{name} must be > 0")));
            }
        }
        if self.f0_max <= self.f0_min {
            return Err(crate::Error::Config("speech.f0_max must exceed f0_min".into()));
        }
        if !(0.0..=100.0).contains(&self.noise_percentile) {
            return Err(crate::Error::Config("speech.noise_percentile must be in [0, 100]".into()));
        }
        if self.clarity_cpp_range[1] <= self.clarity_cpp_range[0] {
            return Err(crate::Error::Config("speech.clarity_cpp_range must be increasing".into()));
        }
        Ok(())
    }

    /// Linear map of a CPP value onto `[0, 1]`.
    pub fn clarity_from_cpp(&self, cpp_db: f64) -> f64 {
        let [lo, hi] = self.clarity_cpp_range;
        ((cpp_db - lo) / (hi - lo)).clamp(0.0, 1.0)
    }
}

/// A contiguous stretch of speech.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub interval: TimeInterval,
}

impl Utterance {
    pub fn duration(&self) -> f64 {
        self.interval.duration()
    }
}

/// Acoustic measurements at one analysis frame (centered at `time`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameFeatures {
    pub time: f64,
    pub loudness_db: f64,
    /// Frame lies inside an utterance.
    pub speech: bool,
    pub f0_hz: Option<f64>,
    pub voicing_prob: f64,
    pub f1_hz: Option<f64>,
    pub f2_hz: Option<f64>,
    pub cpp_db: Option<f64>,
}

/// Everything the speech stage derives from one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechAnalysis {
    pub duration: f64,
    pub utterances: Vec<Utterance>,
    pub frames: Vec<FrameFeatures>,
    pub cycles: Vec<Cycle>,
    /// Times of detected syllable nuclei.
    pub nuclei: Vec<f64>,
}

impl SpeechAnalysis {
    pub fn speaking_rate_wpm(&self, params: &SpeechParams) -> f64 {
        words_per_minute(self.nuclei.len(), self.duration, params.syllables_per_word)
    }

    /// Mean CPP over voiced frames.
    pub fn mean_cpp(&self) -> Option<f64> {
        mean(self.frames.iter().filter_map(|f| f.cpp_db))
    }
}

pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    (n > 0).then(|| sum / n as f64)
}

/// Population standard deviation; exactly zero for constant input.
pub fn population_std(values: &[f64]) -> Option<f64> {
    let m = mean(values.iter().copied())?;
    let first = values[0];
    if values.iter().all(|v| *v == first) {
        return Some(0.0);
    }
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    Some(var.sqrt())
}

pub(crate) fn frame_center(index: usize, hop: usize, len: usize, rate: f64) -> f64 {
    (index * hop) as f64 / rate + 0.5 * len as f64 / rate
}

/// Runs every speech stage over a clip.
pub fn analyze_speech(clip: &AudioClip, params: &SpeechParams) -> crate::Result<SpeechAnalysis> {
    params.validate()?;
    let utterances = segment_utterances(clip, params);
    let energies = frame_energies(clip, params);
    let rate = f64::from(clip.sample_rate());
    let (hop, len) = vad::frame_geometry(clip.sample_rate(), params);

    let mut frames: Vec<FrameFeatures> = energies
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let time = frame_center(i, hop, len, rate);
            FrameFeatures {
                time,
                loudness_db: 10.0 * e.max(ENERGY_FLOOR).log10(),
                speech: false,
                f0_hz: None,
                voicing_prob: 0.0,
                f1_hz: None,
                f2_hz: None,
                cpp_db: None,
            }
        })
        .collect();

    let mut u = 0;
    for f in &mut frames {
        while u < utterances.len() && utterances[u].interval.end < f.time {
            u += 1;
        }
        f.speech = u < utterances.len() && utterances[u].interval.contains(f.time);
    }

    let speech_idx: Vec<usize> = (0..frames.len()).filter(|&i| frames[i].speech).collect();
    let speech_times: Vec<f64> = speech_idx.iter().map(|&i| frames[i].time).collect();
    let pitch = estimate_pitch(clip, &speech_times, params);
    for (&i, p) in speech_idx.iter().zip(&pitch) {
        frames[i].f0_hz = p.f0_hz;
        frames[i].voicing_prob = p.voicing_prob;
    }

    let voiced_times: Vec<f64> = frames.iter().filter(|f| f.f0_hz.is_some()).map(|f| f.time).collect();
    let formants = estimate_formants(clip, &voiced_times, params);
    let mut planner = rustfft::FftPlanner::new();
    for (f, est) in frames.iter_mut().filter(|f| f.f0_hz.is_some()).zip(&formants) {
        f.f1_hz = est.f1_hz;
        f.f2_hz = est.f2_hz;
        f.cpp_db = cepstral_peak_prominence(clip, f.time, params, &mut planner);
    }

    let voiced: Vec<(f64, f64)> = frames.iter().filter_map(|f| f.f0_hz.map(|p| (f.time, p))).collect();
    let cycles = detect_cycles(clip, &voiced, params);
    let nuclei = syllable_nuclei(clip, &utterances, params);

    Ok(SpeechAnalysis {
        duration: clip.duration(),
        utterances,
        frames,
        cycles,
        nuclei,
    })
}
