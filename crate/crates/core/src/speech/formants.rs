//! Formant estimation from the linear-prediction spectral envelope.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::pitch::centered_window;
use super::SpeechParams;
use crate::ingest::AudioClip;

const PRE_EMPHASIS: f64 = 0.97;
const ENVELOPE_POINTS: usize = 2049;
const MIN_FORMANT_HZ: f64 = 90.0;
/// Envelope peaks broader than this at -3 dB are not treated as formants.
const MAX_BANDWIDTH_HZ: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormantEstimate {
    pub time: f64,
    pub f1_hz: Option<f64>,
    pub f2_hz: Option<f64>,
    /// Set when the frame was skipped or yielded fewer than two formants.
    pub flagged: bool,
}

/// Autocorrelation-method LPC via Levinson-Durbin. Returns `[1, a1, .., ap]`,
/// or `None` when a reflection coefficient reaches the unit circle.
pub(crate) fn lpc(x: &[f64], order: usize) -> Option<Vec<f64>> {
    let r: Vec<f64> = (0..=order)
        .map(|lag| x.iter().zip(&x[lag.min(x.len())..]).map(|(a, b)| a * b).sum())
        .collect();
    if r[0] <= 0.0 {
        return None;
    }
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    for i in 1..=order {
        let acc: f64 = (1..i).map(|j| a[j] * r[i - j]).sum::<f64>() + r[i];
        let k = -acc / err;
        if !(k.abs() < 1.0) {
            return None;
        }
        let prev = a.clone();
        for j in 1..i {
            a[j] = prev[j] + k * prev[i - j];
        }
        a[i] = k;
        err *= 1.0 - k * k;
        if err <= 0.0 {
            return None;
        }
    }
    Some(a)
}

/// `-10 log10 |A(e^jw)|^2` sampled on `points` frequencies from 0 to
/// Nyquist inclusive.
fn envelope_db(a: &[f64], points: usize, planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let n = 2 * (points - 1);
    let mut buf: Vec<Complex<f64>> = (0..n).map(|k| Complex::new(a.get(k).copied().unwrap_or(0.0), 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    buf[..points].iter().map(|c| -10.0 * c.norm_sqr().max(1e-30).log10()).collect()
}

/// Half-power width of the envelope peak at `i`, in grid steps, or `None`
/// when the envelope turns upward before falling 3 dB on either side.
fn half_power_width(env: &[f64], i: usize) -> Option<usize> {
    let floor = env[i] - 3.0;
    let mut left = i;
    while env[left] > floor {
        if left == 0 || env[left - 1] > env[left] {
            return None;
        }
        left -= 1;
    }
    let mut right = i;
    while env[right] > floor {
        if right + 1 == env.len() || env[right + 1] > env[right] {
            return None;
        }
        right += 1;
    }
    Some(right - left)
}

/// Formant frequencies of one frame, ascending.
fn frame_formants(frame: &[f64], rate: f64, planner: &mut FftPlanner<f64>) -> Option<Vec<f64>> {
    let order = 2 + (rate / 1000.0).round() as usize;
    let n = frame.len();
    let windowed: Vec<f64> = (0..n)
        .map(|i| {
            let pre = if i == 0 { frame[0] } else { frame[i] - PRE_EMPHASIS * frame[i - 1] };
            let w = 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos();
            pre * w
        })
        .collect();
    let a = lpc(&windowed, order)?;
    let env = envelope_db(&a, ENVELOPE_POINTS, planner);
    let step = 0.5 * rate / (ENVELOPE_POINTS - 1) as f64;
    let max_width = (MAX_BANDWIDTH_HZ / step).round() as usize;
    let mut found = Vec::new();
    for i in 1..env.len() - 1 {
        let hz = i as f64 * step;
        if hz < MIN_FORMANT_HZ || hz > 0.5 * rate - MIN_FORMANT_HZ {
            continue;
        }
        if env[i] > env[i - 1] && env[i] >= env[i + 1] && half_power_width(&env, i).is_some_and(|w| w <= max_width) {
            let (delta, _) = super::pitch::parabolic_peak(env[i - 1], env[i], env[i + 1]);
            found.push((i as f64 + delta) * step);
        }
    }
    Some(found)
}

/// First two formants at each of `times`. Frames whose prediction filter is
/// unstable are skipped (both formants `None`, flagged).
pub fn estimate_formants(clip: &AudioClip, times: &[f64], params: &SpeechParams) -> Vec<FormantEstimate> {
    let rate = f64::from(clip.sample_rate());
    let len = ((params.formant_window * rate).round() as usize).max(16);
    let mut planner = FftPlanner::new();
    times
        .iter()
        .map(|&time| {
            let frame = centered_window(clip.samples(), rate, time, len);
            match frame_formants(&frame, rate, &mut planner) {
                Some(f) => FormantEstimate {
                    time,
                    f1_hz: f.first().copied(),
                    f2_hz: f.get(1).copied(),
                    flagged: f.len() < 2,
                },
                None => FormantEstimate { time, f1_hz: None, f2_hz: None, flagged: true },
            }
        })
        .collect()
}
