//! Voice-quality measures: cycle-to-cycle jitter and shimmer, and cepstral
//! peak prominence.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::pitch::{centered_window, parabolic_peak};
use super::SpeechParams;
use crate::ingest::AudioClip;

/// One glottal cycle located by peak picking inside a voiced stretch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    /// Sequence number across the whole clip.
    pub index: usize,
    /// Voiced stretch this cycle belongs to.
    pub run: usize,
    /// Peak time, seconds.
    pub time: f64,
    /// Distance to the previous peak of the same stretch, seconds.
    pub period: Option<f64>,
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoiceQuality {
    pub jitter_percent: Option<f64>,
    pub shimmer_percent: Option<f64>,
    pub cpp_db: Option<f64>,
}

/// Splits voiced frames into stretches of consecutive frames.
fn voiced_runs(voiced: &[(f64, f64)], hop: f64) -> Vec<&[(f64, f64)]> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=voiced.len() {
        if i == voiced.len() || voiced[i].0 - voiced[i - 1].0 > 1.5 * hop {
            if i > start {
                runs.push(&voiced[start..i]);
            }
            start = i;
        }
    }
    runs
}

/// Locates successive positive peaks one local period apart within each
/// voiced stretch. `voiced` holds `(frame time, f0)` pairs in time order.
pub fn detect_cycles(clip: &AudioClip, voiced: &[(f64, f64)], params: &SpeechParams) -> Vec<Cycle> {
    let x = clip.samples();
    let rate = f64::from(clip.sample_rate());
    let mut out = Vec::new();
    for (run_id, run) in voiced_runs(voiced, params.hop).into_iter().enumerate() {
        let a = (((run[0].0 - 0.5 * params.hop) * rate).floor().max(0.0)) as usize;
        let b = ((((run[run.len() - 1].0 + 0.5 * params.hop) * rate).ceil()) as usize).min(x.len());
        let f0_at = |sample: usize| {
            let t = sample as f64 / rate;
            let i = run.partition_point(|(ft, _)| *ft < t);
            let near = if i == 0 {
                0
            } else if i >= run.len() || (t - run[i - 1].0) <= (run[i].0 - t) {
                (i - 1).min(run.len() - 1)
            } else {
                i
            };
            run[near].1
        };

        let first_period = (rate / f0_at(a)).round() as usize;
        if a + first_period + 1 >= b {
            continue;
        }
        let mut prev: Option<(usize, f64)> = None;
        let mut lo = a.max(1);
        let mut hi = (a + first_period).min(b - 1);
        while let Some(n) = argmax(x, lo, hi) {
            if x[n] <= 0.0 || n == 0 || n + 1 >= x.len() {
                break;
            }
            let (delta, amplitude) = parabolic_peak(x[n - 1], x[n], x[n + 1]);
            let period = prev.map(|(pn, pd)| ((n - pn) as f64 + (delta - pd)) / rate);
            out.push(Cycle {
                index: out.len(),
                run: run_id,
                time: (n as f64 + delta) / rate,
                period,
                amplitude,
            });
            prev = Some((n, delta));
            let t = rate / f0_at(n);
            lo = n + (0.8 * t).ceil() as usize;
            hi = n + (1.2 * t).floor() as usize;
            if hi >= b {
                break;
            }
        }
    }
    out
}

fn argmax(x: &[f64], lo: usize, hi: usize) -> Option<usize> {
    if lo > hi || hi >= x.len() {
        return None;
    }
    let mut best = lo;
    for i in lo..=hi {
        if x[i] > x[best] {
            best = i;
        }
    }
    Some(best)
}

/// Consecutive cycle pairs from the same stretch.
fn consecutive_pairs(cycles: &[Cycle]) -> impl Iterator<Item = (&Cycle, &Cycle)> {
    cycles
        .windows(2)
        .filter(|w| w[1].index == w[0].index + 1 && w[1].run == w[0].run)
        .map(|w| (&w[0], &w[1]))
}

/// True when some stretch contributes at least three periods.
fn enough_periods(cycles: &[Cycle]) -> bool {
    let mut best = 0usize;
    let mut current = 0usize;
    let mut last: Option<&Cycle> = None;
    for c in cycles {
        let continues = last.is_some_and(|l| l.run == c.run && c.index == l.index + 1);
        if c.period.is_some() && continues {
            current += 1;
        } else {
            current = 0;
        }
        best = best.max(current);
        last = Some(c);
    }
    best >= 3
}

/// Mean absolute difference of consecutive periods over the mean period, in
/// percent. `None` without at least three consecutive periods.
pub fn jitter_percent(cycles: &[Cycle]) -> Option<f64> {
    if !enough_periods(cycles) {
        return None;
    }
    let diffs: Vec<f64> = consecutive_pairs(cycles)
        .filter_map(|(a, b)| Some((b.period? - a.period?).abs()))
        .collect();
    let periods: Vec<f64> = cycles.iter().filter_map(|c| c.period).collect();
    let mean_diff = super::mean(diffs.iter().copied())?;
    let mean_period = super::mean(periods.iter().copied())?;
    (mean_period > 0.0).then(|| 100.0 * mean_diff / mean_period)
}

/// Mean absolute difference of consecutive peak amplitudes over the mean
/// amplitude, in percent.
pub fn shimmer_percent(cycles: &[Cycle]) -> Option<f64> {
    if !enough_periods(cycles) {
        return None;
    }
    let diffs: Vec<f64> = consecutive_pairs(cycles).map(|(a, b)| (b.amplitude - a.amplitude).abs()).collect();
    let mean_diff = super::mean(diffs.iter().copied())?;
    let mean_amp = super::mean(cycles.iter().map(|c| c.amplitude))?;
    (mean_amp > 0.0).then(|| 100.0 * mean_diff / mean_amp)
}

/// Cepstral peak prominence of the window centered at `t`: height of the
/// largest cepstral peak in the pitch quefrency band above the least-squares
/// line fitted to the cepstrum (dB) over that band.
pub fn cepstral_peak_prominence(clip: &AudioClip, t: f64, params: &SpeechParams, planner: &mut FftPlanner<f64>) -> Option<f64> {
    let rate = f64::from(clip.sample_rate());
    let len = ((params.cpp_window * rate).round() as usize).max(8);
    let frame = centered_window(clip.samples(), rate, t, len);
    if frame.iter().all(|v| *v == 0.0) {
        return None;
    }
    let size = len.next_power_of_two();
    let fft = planner.plan_fft_forward(size);
    let mut buf: Vec<Complex<f64>> = frame
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (len - 1) as f64).cos();
            Complex::new(v * w, 0.0)
        })
        .collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    fft.process(&mut buf);
    let mut log_spec: Vec<Complex<f64>> = buf
        .iter()
        .map(|c| Complex::new(10.0 * (c.norm_sqr() + 1e-20).log10(), 0.0))
        .collect();
    let ifft = planner.plan_fft_inverse(size);
    ifft.process(&mut log_spec);
    let cep_db: Vec<f64> = log_spec
        .iter()
        .map(|c| 20.0 * (c.re.abs() / size as f64 + 1e-12).log10())
        .collect();

    let lo = (rate / params.f0_max).ceil() as usize;
    let hi = ((rate / params.f0_min).floor() as usize).min(size / 2 - 1);
    if hi <= lo + 2 {
        return None;
    }
    let band = lo..=hi;
    let n = (hi - lo + 1) as f64;
    let (sx, sy) = band.clone().fold((0.0, 0.0), |(sx, sy), k| (sx + k as f64, sy + cep_db[k]));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = band.clone().fold((0.0, 0.0), |(sxy, sxx), k| {
        let dx = k as f64 - mx;
        (sxy + dx * (cep_db[k] - my), sxx + dx * dx)
    });
    let slope = sxy / sxx;
    let peak = band.max_by(|&a, &b| cep_db[a].total_cmp(&cep_db[b]))?;
    let line = my + slope * (peak as f64 - mx);
    Some(cep_db[peak] - line)
}

/// Jitter, shimmer and mean CPP for a clip. CPP is averaged over the voiced
/// frames, or over every hop when none are voiced.
pub fn voice_quality(clip: &AudioClip, voiced: &[(f64, f64)], params: &SpeechParams) -> VoiceQuality {
    let cycles = detect_cycles(clip, voiced, params);
    let mut planner = FftPlanner::new();
    let times: Vec<f64> = if voiced.is_empty() {
        let n = (clip.duration() / params.hop).floor() as usize;
        (0..n).map(|i| (i as f64 + 0.5) * params.hop).collect()
    } else {
        voiced.iter().map(|v| v.0).collect()
    };
    let cpp = super::mean(times.iter().filter_map(|&t| cepstral_peak_prominence(clip, t, params, &mut planner)));
    VoiceQuality {
        jitter_percent: jitter_percent(&cycles),
        shimmer_percent: shimmer_percent(&cycles),
        cpp_db: cpp,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::speech::estimate_pitch;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SR: u32 = 16_000;

    /// Identical decaying pulses every `period` samples.
    fn pulse_train(period: usize, seconds: f64) -> AudioClip {
        let n = (seconds * SR as f64) as usize;
        let shape = [0.2, 0.6, 0.8, 0.5, 0.1, -0.2, -0.3, -0.15];
        let mut x = vec![0.0; n];
        let mut start = 0;
        while start + shape.len() < n {
            x[start..start + shape.len()].copy_from_slice(&shape);
            start += period;
        }
        AudioClip::new(SR, x).unwrap()
    }

    fn voiced_frames(clip: &AudioClip) -> Vec<(f64, f64)> {
        let p = SpeechParams::default();
        let times: Vec<f64> = (3..((clip.duration() / 0.01) as usize - 3)).map(|i| i as f64 * 0.01).collect();
        estimate_pitch(clip, &times, &p)
            .into_iter()
            .filter_map(|e| e.f0_hz.map(|f| (e.time, f)))
            .collect()
    }

    #[test]
    fn pulse_train_zero_jitter_and_shimmer() {
        let clip = pulse_train(160, 1.0);
        let voiced = voiced_frames(&clip);
        assert!(voiced.len() > 80);
        let q = voice_quality(&clip, &voiced, &SpeechParams::default());
        assert_eq!(q.jitter_percent, Some(0.0));
        assert_eq!(q.shimmer_percent, Some(0.0));
    }

    #[test]
    fn constant_amplitude_sine_zero_shimmer() {
        // 125 Hz at 16 kHz: exactly 128 samples per period.
        let x: Vec<f64> = (0..SR as usize)
            .map(|i| 0.5 * (2.0 * std::f64::consts::PI * 125.0 * i as f64 / SR as f64).sin())
            .collect();
        let clip = AudioClip::new(SR, x).unwrap();
        let voiced = voiced_frames(&clip);
        let q = voice_quality(&clip, &voiced, &SpeechParams::default());
        assert!(q.shimmer_percent.unwrap() < 1e-9, "{q:?}");
        assert!(q.jitter_percent.unwrap() < 1e-9, "{q:?}");
    }

    #[test]
    fn perturbed_periods_give_positive_jitter() {
        let mut x = vec![0.0; SR as usize];
        let mut pos = 0usize;
        let mut k = 0;
        while pos + 4 < x.len() {
            x[pos + 1] = 0.5;
            x[pos + 2] = 0.9;
            x[pos + 3] = 0.5;
            pos += if k % 2 == 0 { 150 } else { 170 };
            k += 1;
        }
        let clip = AudioClip::new(SR, x).unwrap();
        let voiced = voiced_frames(&clip);
        let q = voice_quality(&clip, &voiced, &SpeechParams::default());
        let j = q.jitter_percent.unwrap();
        // |150 - 170| / 160 = 12.5%.
        assert!((j - 12.5).abs() < 0.5, "{j}");
    }

    #[test]
    fn insufficient_material_is_unavailable() {
        let clip = AudioClip::new(SR, vec![0.0; 8000]).unwrap();
        let q = voice_quality(&clip, &[], &SpeechParams::default());
        assert_eq!(q.jitter_percent, None);
        assert_eq!(q.shimmer_percent, None);
        assert_eq!(q.cpp_db, None);
    }

    #[test]
    fn cpp_periodic_beats_noise() {
        let periodic: Vec<f64> = (0..SR as usize)
            .map(|i| {
                let t = i as f64 / SR as f64;
                (1..=8).map(|h| 0.3 / h as f64 * (2.0 * std::f64::consts::PI * 150.0 * h as f64 * t).sin()).sum::<f64>()
            })
            .collect();
        let periodic = AudioClip::new(SR, periodic).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = AudioClip::new(SR, (0..SR as usize).map(|_| rng.random_range(-0.5..0.5)).collect()).unwrap();
        let p = SpeechParams::default();
        let a = voice_quality(&periodic, &[], &p).cpp_db.unwrap();
        let b = voice_quality(&noise, &[], &p).cpp_db.unwrap();
        assert!(a > b, "periodic {a} noise {b}");
    }
}
