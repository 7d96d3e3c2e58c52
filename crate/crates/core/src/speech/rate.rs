//! Speaking rate from syllable nuclei in the smoothed intensity contour.

use super::{frame_center, frame_energies, vad, SpeechParams, Utterance, ENERGY_FLOOR};
use crate::ingest::AudioClip;

/// Centered moving average of `values` over `width` samples (odd).
fn smooth(values: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    let mut prefix = vec![0.0; values.len() + 1];
    for (i, v) in values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Indices of peaks rising and falling by at least `prominence` relative to
/// the minima on either side.
fn prominent_peaks(contour: &[f64], prominence: f64) -> Vec<usize> {
    let mut peaks = Vec::new();
    let Some(&first) = contour.first() else { return peaks };
    let mut low = first;
    let mut candidate: Option<(usize, f64)> = None;
    for (i, &v) in contour.iter().enumerate() {
        match candidate {
            None => {
                low = low.min(v);
                if v >= low + prominence {
                    candidate = Some((i, v));
                }
            }
            Some((_, peak)) if v > peak => candidate = Some((i, v)),
            Some((at, peak)) if v <= peak - prominence => {
                peaks.push(at);
                candidate = None;
                low = v;
            }
            Some(_) => {}
        }
    }
    peaks
}

/// Times of syllable nuclei: prominent maxima of the smoothed intensity
/// contour (dB) that fall inside an utterance.
pub fn syllable_nuclei(clip: &AudioClip, utterances: &[Utterance], params: &SpeechParams) -> Vec<f64> {
    if utterances.is_empty() {
        return Vec::new();
    }
    let energies = frame_energies(clip, params);
    let (hop, len) = vad::frame_geometry(clip.sample_rate(), params);
    let rate = f64::from(clip.sample_rate());
    let width = (((params.intensity_smoothing / params.hop).round() as usize) | 1).max(1);
    let contour: Vec<f64> = smooth(&energies, width)
        .into_iter()
        .map(|e| 10.0 * e.max(ENERGY_FLOOR).log10())
        .collect();
    prominent_peaks(&contour, params.nucleus_prominence_db)
        .into_iter()
        .map(|i| frame_center(i, hop, len, rate))
        .filter(|t| utterances.iter().any(|u| u.interval.contains(*t)))
        .collect()
}

/// Words per minute for `nuclei` syllables over `duration` seconds.
pub fn words_per_minute(nuclei: usize, duration: f64, syllables_per_word: f64) -> f64 {
    if duration <= 0.0 || nuclei == 0 {
        return 0.0;
    }
    nuclei as f64 / (duration / 60.0) / syllables_per_word
}

/// Session speaking rate in words per minute.
pub fn speaking_rate(utterances: &[Utterance], clip: &AudioClip, params: &SpeechParams) -> f64 {
    let nuclei = syllable_nuclei(clip, utterances, params);
    words_per_minute(nuclei.len(), clip.duration(), params.syllables_per_word)
}
