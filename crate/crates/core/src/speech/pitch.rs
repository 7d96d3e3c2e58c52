//! Autocorrelation pitch tracking.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::SpeechParams;
use crate::ingest::AudioClip;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchEstimate {
    pub time: f64,
    /// `None` when the frame is unvoiced.
    pub f0_hz: Option<f64>,
    /// Height of the normalized autocorrelation peak, in `[0, 1]`.
    pub voicing_prob: f64,
}

/// Extracts `len` samples centered at `t`, zero-padding past the clip edges.
pub(crate) fn centered_window(x: &[f64], rate: f64, t: f64, len: usize) -> Vec<f64> {
    let center = (t * rate).round() as isize;
    let start = center - (len / 2) as isize;
    (0..len as isize)
        .map(|k| {
            let i = start + k;
            if i >= 0 && (i as usize) < x.len() {
                x[i as usize]
            } else {
                0.0
            }
        })
        .collect()
}

struct Autocorrelator {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    size: usize,
}

impl Autocorrelator {
    fn new(len: usize) -> Self {
        let size = (2 * len).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
            size,
        }
    }

    /// Linear (non-circular) autocorrelation for lags `0..len`.
    fn raw(&self, x: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(self.size, Complex::new(0.0, 0.0));
        self.forward.process(&mut buf);
        for c in &mut buf {
            *c = Complex::new(c.norm_sqr(), 0.0);
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.size as f64;
        buf[..self.len].iter().map(|c| c.re * scale).collect()
    }
}

/// Normalized autocorrelation of `x` at each lag: the cross term divided by
/// the geometric mean of the energies of the two overlapping segments.
fn normalized_acf(ac: &Autocorrelator, x: &[f64]) -> Vec<f64> {
    let r = ac.raw(x);
    let n = x.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, v) in x.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v * v;
    }
    (0..n)
        .map(|tau| {
            let head = prefix[n - tau];
            let tail = prefix[n] - prefix[tau];
            let denom = (head * tail).sqrt();
            if denom > 0.0 {
                r[tau] / denom
            } else {
                0.0
            }
        })
        .collect()
}

/// Vertex offset and height of the parabola through three points.
pub(crate) fn parabolic_peak(left: f64, mid: f64, right: f64) -> (f64, f64) {
    let denom = left - 2.0 * mid + right;
    if denom.abs() < f64::EPSILON {
        return (0.0, mid);
    }
    let delta = (0.5 * (left - right) / denom).clamp(-0.5, 0.5);
    (delta, mid - 0.25 * (left - right) * delta)
}

/// Per-frame pitch for windows of `pitch_window` seconds centered at `times`.
///
/// The fundamental is the shortest-lag local maximum of the normalized
/// autocorrelation within the `f0_min..f0_max` band whose height is within
/// `octave_tolerance` of the band's best peak, refined by parabolic
/// interpolation. Frames whose best peak falls below `voicing_threshold`
/// are unvoiced.
pub fn estimate_pitch(clip: &AudioClip, times: &[f64], params: &SpeechParams) -> Vec<PitchEstimate> {
    let rate = f64::from(clip.sample_rate());
    let len = ((params.pitch_window * rate).round() as usize).max(4);
    let min_lag = ((rate / params.f0_max).floor() as usize).max(2);
    let max_lag = ((rate / params.f0_min).ceil() as usize).min(len - 2);
    let ac = Autocorrelator::new(len);
    times
        .iter()
        .map(|&t| {
            let mut frame = centered_window(clip.samples(), rate, t, len);
            let mean = frame.iter().sum::<f64>() / len as f64;
            frame.iter_mut().for_each(|v| *v -= mean);
            let unvoiced = |p: f64| PitchEstimate {
                time: t,
                f0_hz: None,
                voicing_prob: p.clamp(0.0, 1.0),
            };
            if min_lag >= max_lag || frame.iter().all(|v| *v == 0.0) {
                return unvoiced(0.0);
            }
            let r = normalized_acf(&ac, &frame);
            let peaks: Vec<usize> = (min_lag..=max_lag)
                .filter(|&k| k >= 1 && k + 1 < r.len() && r[k] > r[k - 1] && r[k] >= r[k + 1])
                .collect();
            let Some(best) = peaks.iter().map(|&k| r[k]).max_by(f64::total_cmp) else {
                return unvoiced(0.0);
            };
            if best < params.voicing_threshold {
                return unvoiced(best);
            }
            let k = peaks
                .iter()
                .copied()
                .find(|&k| r[k] >= params.octave_tolerance * best)
                .unwrap_or(peaks[0]);
            let (delta, height) = parabolic_peak(r[k - 1], r[k], r[k + 1]);
            let lag = k as f64 + delta;
            PitchEstimate {
                time: t,
                f0_hz: Some(rate / lag),
                voicing_prob: height.clamp(0.0, 1.0),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SR: u32 = 16_000;

    fn tone(freq: f64, seconds: f64, amp: f64) -> AudioClip {
        let n = (seconds * SR as f64) as usize;
        let x = (0..n)
            .map(|i| amp * (2.0 * std::f64::consts::PI * freq * i as f64 / SR as f64).sin())
            .collect();
        AudioClip::new(SR, x).unwrap()
    }

    fn interior_times(seconds: f64) -> Vec<f64> {
        (5..((seconds / 0.01) as usize - 5)).map(|i| i as f64 * 0.01).collect()
    }

    #[test]
    fn sine_220() {
        let clip = tone(220.0, 1.0, 0.5);
        let est = estimate_pitch(&clip, &interior_times(1.0), &SpeechParams::default());
        for e in &est {
            let f = e.f0_hz.expect("voiced");
            assert!((f - 220.0).abs() <= 2.0, "{f}");
        }
    }

    #[test]
    fn white_noise_mostly_unvoiced() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let x = (0..SR as usize).map(|_| rng.random_range(-0.5..0.5)).collect();
        let clip = AudioClip::new(SR, x).unwrap();
        let est = estimate_pitch(&clip, &interior_times(1.0), &SpeechParams::default());
        let unvoiced = est.iter().filter(|e| e.f0_hz.is_none()).count();
        assert!(unvoiced as f64 >= 0.9 * est.len() as f64, "{unvoiced}/{}", est.len());
    }

    #[test]
    fn silence_unvoiced() {
        let clip = AudioClip::new(SR, vec![0.0; SR as usize]).unwrap();
        let est = estimate_pitch(&clip, &interior_times(1.0), &SpeechParams::default());
        assert!(est.iter().all(|e| e.f0_hz.is_none() && e.voicing_prob == 0.0));
    }

    #[test]
    fn gain_invariant() {
        let clip = tone(137.0, 0.5, 0.6);
        let half = clip.scaled(0.5);
        let p = SpeechParams::default();
        let a = estimate_pitch(&clip, &interior_times(0.5), &p);
        let b = estimate_pitch(&half, &interior_times(0.5), &p);
        for (x, y) in a.iter().zip(&b) {
            assert!((x.f0_hz.unwrap() - y.f0_hz.unwrap()).abs() <= 1.0);
        }
    }
}
