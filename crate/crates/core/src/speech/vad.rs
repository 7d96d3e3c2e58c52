use super::{SpeechParams, Utterance, ENERGY_FLOOR};
use crate::ingest::AudioClip;
use crate::model::TimeInterval;

/// Refinement block length and hop, seconds.
const REFINE_BLOCK: f64 = 0.005;
const REFINE_HOP: f64 = 0.001;

/// `(hop, frame_len)` in samples.
pub(crate) fn frame_geometry(rate: u32, params: &SpeechParams) -> (usize, usize) {
    let r = f64::from(rate);
    let hop = ((params.hop * r).round() as usize).max(1);
    let len = ((params.frame_length * r).round() as usize).max(1);
    (hop, len)
}

/// Mean-square energy of each analysis frame.
pub fn frame_energies(clip: &AudioClip, params: &SpeechParams) -> Vec<f64> {
    let (hop, len) = frame_geometry(clip.sample_rate(), params);
    let x = clip.samples();
    if x.len() < len {
        return Vec::new();
    }
    let count = (x.len() - len) / hop + 1;
    (0..count)
        .map(|i| mean_square(&x[i * hop..i * hop + len]))
        .collect()
}

fn mean_square(block: &[f64]) -> f64 {
    block.iter().map(|v| v * v).sum::<f64>() / block.len() as f64
}

fn percentile(values: &[f64], pct: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((pct / 100.0) * (sorted.len() - 1) as f64).round() as usize;
    sorted[rank.min(sorted.len() - 1)]
}

/// Energy-based segmentation into utterances.
///
/// Frames whose level exceeds the noise floor (a low percentile of all frame
/// levels) by `vad_delta_db` are speech. Runs of speech frames have their
/// edges refined on a 1 ms grid, short silences are bridged, and segments
/// shorter than `min_utterance` are dropped.
pub fn segment_utterances(clip: &AudioClip, params: &SpeechParams) -> Vec<Utterance> {
    let energies = frame_energies(clip, params);
    if energies.is_empty() {
        return Vec::new();
    }
    let (hop, len) = frame_geometry(clip.sample_rate(), params);
    let levels: Vec<f64> = energies.iter().map(|e| 10.0 * e.max(ENERGY_FLOOR).log10()).collect();
    let floor_db = percentile(&levels, params.noise_percentile);
    let threshold_db = floor_db + params.vad_delta_db;
    let threshold = 10f64.powf(threshold_db / 10.0);

    let x = clip.samples();
    let rate = f64::from(clip.sample_rate());
    let block = ((REFINE_BLOCK * rate).round() as usize).max(1);
    let step = ((REFINE_HOP * rate).round() as usize).max(1);

    let mut segments: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < levels.len() {
        if levels[i] <= threshold_db {
            i += 1;
            continue;
        }
        let first = i;
        while i + 1 < levels.len() && levels[i + 1] > threshold_db {
            i += 1;
        }
        let last = i;
        i += 1;

        let coarse_start = first * hop;
        let coarse_end = (last * hop + len).min(x.len());
        let start = refine_start(x, coarse_start, (coarse_start + len).min(coarse_end), block, step, threshold)
            .unwrap_or(coarse_start);
        let end = refine_end(x, (coarse_end.saturating_sub(len)).max(start), coarse_end, block, step, threshold)
            .unwrap_or(coarse_end);
        if end > start {
            segments.push((start, end));
        }
    }

    let gap = (params.gap_close * rate).round() as usize;
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(segments.len());
    for (s, e) in segments {
        match merged.last_mut() {
            Some(last) if s < last.1 + gap => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }

    merged
        .into_iter()
        .map(|(s, e)| TimeInterval {
            start: s as f64 / rate,
            end: e as f64 / rate,
        })
        .filter(|iv| iv.duration() >= params.min_utterance)
        .map(|interval| Utterance { interval })
        .collect()
}

/// First sample above the amplitude threshold inside the first fine block
/// of `[lo, hi)` whose energy exceeds `threshold`.
fn refine_start(x: &[f64], lo: usize, hi: usize, block: usize, step: usize, threshold: f64) -> Option<usize> {
    let amp = threshold.sqrt();
    let mut b = lo;
    while b < hi && b + block <= x.len() {
        let blk = &x[b..b + block];
        if mean_square(blk) > threshold {
            return blk.iter().position(|v| v.abs() > amp).map(|k| b + k);
        }
        b += step;
    }
    None
}

/// One past the last sample above the amplitude threshold inside the last
/// fine block of `[lo, hi)` whose energy exceeds `threshold`.
fn refine_end(x: &[f64], lo: usize, hi: usize, block: usize, step: usize, threshold: f64) -> Option<usize> {
    let amp = threshold.sqrt();
    let mut e = hi.min(x.len());
    while e >= lo + block && e >= block {
        let blk = &x[e - block..e];
        if mean_square(blk) > threshold {
            return blk.iter().rposition(|v| v.abs() > amp).map(|k| e - block + k + 1);
        }
        e = e.saturating_sub(step);
        if e == 0 {
            break;
        }
    }
    None
}
