use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// Clips above this rate are decimated by an integer factor at load.
pub const MAX_SAMPLE_RATE: u32 = 48_000;
const MIN_SAMPLE_RATE: u32 = 8_000;

/// Mono audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    sample_rate: u32,
    samples: Vec<f64>,
}

impl AudioClip {
    pub fn new(sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(Error::UnsupportedAudio {
                field: "sample_rate",
                value: sample_rate.to_string(),
            });
        }
        if samples.is_empty() {
            return Err(Error::Audio("clip has no samples".into()));
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::Audio(format!("sample {bad} outside [-1, 1]")));
        }
        Ok(Self { sample_rate, samples })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Copy with every sample multiplied by `gain` (clamped to full scale).
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            sample_rate: self.sample_rate,
            samples: self.samples.iter().map(|s| (s * gain).clamp(-1.0, 1.0)).collect(),
        }
    }

    /// Writes 16-bit PCM mono.
    pub fn write_wav16(&self, path: &Path) -> Result<()> {
        let spec = WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: SampleFormat::Int,
        };
        let wav_err = |e: hound::Error| Error::Audio(format!("{}: {e}", path.display()));
        let mut w = WavWriter::create(path, spec).map_err(wav_err)?;
        for &s in &self.samples {
            let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            w.write_sample(v).map_err(wav_err)?;
        }
        w.finalize().map_err(wav_err)
    }
}

/// Loads 16-bit integer or 32-bit float PCM WAV, downmixing stereo by
/// averaging channels.
pub fn load_audio(path: &Path) -> Result<AudioClip> {
    let reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        hound::Error::Unsupported => Error::UnsupportedAudio {
            field: "format_tag",
            value: "non-PCM".into(),
        },
        other => Error::Audio(format!("{}: {other}", path.display())),
    })?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.channels > 2 {
        return Err(Error::UnsupportedAudio {
            field: "channels",
            value: spec.channels.to_string(),
        });
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>(),
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| f64::from(v).clamp(-1.0, 1.0)))
            .collect::<std::result::Result<_, _>>(),
        (SampleFormat::Int, bits) | (SampleFormat::Float, bits) => {
            return Err(Error::UnsupportedAudio {
                field: "bits_per_sample",
                value: format!("{bits} ({:?})", spec.sample_format),
            })
        }
    }
    .map_err(|e| Error::Audio(format!("{}: {e}", path.display())))?;

    let channels = usize::from(spec.channels);
    let mono: Vec<f64> = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    let (rate, mono) = decimate(spec.sample_rate, mono);
    AudioClip::new(rate, mono)
}

/// Integer decimation with block averaging so the rate ends up at or below
/// [`MAX_SAMPLE_RATE`].
fn decimate(rate: u32, samples: Vec<f64>) -> (u32, Vec<f64>) {
    if rate <= MAX_SAMPLE_RATE {
        return (rate, samples);
    }
    let factor = rate.div_ceil(MAX_SAMPLE_RATE) as usize;
    let out = samples
        .chunks_exact(factor)
        .map(|block| block.iter().sum::<f64>() / factor as f64)
        .collect();
    (rate / factor as u32, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(path: &Path, spec: WavSpec, f: impl FnOnce(&mut WavWriter<std::io::BufWriter<std::fs::File>>)) {
        let mut w = WavWriter::create(path, spec).unwrap();
        f(&mut w);
        w.finalize().unwrap();
    }

    #[test]
    fn mono_16bit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let spec = WavSpec { channels: 1, sample_rate: 16_000, bits_per_sample: 16, sample_format: SampleFormat::Int };
        write(&p, spec, |w| {
            for i in 0..16_000 {
                w.write_sample(((i % 100) as i16 - 50) * 100).unwrap();
            }
        });
        let clip = load_audio(&p).unwrap();
        assert_eq!(clip.samples().len(), 16_000);
        assert_eq!(clip.sample_rate(), 16_000);
    }

    #[test]
    fn stereo_downmix_average() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let spec = WavSpec { channels: 2, sample_rate: 16_000, bits_per_sample: 32, sample_format: SampleFormat::Float };
        write(&p, spec, |w| {
            for _ in 0..800 {
                w.write_sample(0.5f32).unwrap();
                w.write_sample(-0.5f32).unwrap();
            }
        });
        let clip = load_audio(&p).unwrap();
        assert_eq!(clip.samples().len(), 800);
        assert!(clip.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn stereo_downmix_matches_channel_mean() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s16.wav");
        let spec = WavSpec { channels: 2, sample_rate: 8_000, bits_per_sample: 16, sample_format: SampleFormat::Int };
        let pairs: Vec<(i16, i16)> = (0..400).map(|i| ((i * 37 % 2000) as i16 - 1000, (i * 91 % 3000) as i16 - 1500)).collect();
        write(&p, spec, |w| {
            for &(l, r) in &pairs {
                w.write_sample(l).unwrap();
                w.write_sample(r).unwrap();
            }
        });
        let clip = load_audio(&p).unwrap();
        for (s, (l, r)) in clip.samples().iter().zip(&pairs) {
            let expect = 0.5 * (f64::from(*l) / 32768.0 + f64::from(*r) / 32768.0);
            assert!((s - expect).abs() <= 1e-6);
        }
    }

    #[test]
    fn int16_min_scales_to_minus_one() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.wav");
        let spec = WavSpec { channels: 1, sample_rate: 8_000, bits_per_sample: 16, sample_format: SampleFormat::Int };
        write(&p, spec, |w| w.write_sample(i16::MIN).unwrap());
        let clip = load_audio(&p).unwrap();
        assert!((clip.samples()[0] + 1.0).abs() <= 1e-4);
    }

    #[test]
    fn rejects_24bit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.wav");
        let spec = WavSpec { channels: 1, sample_rate: 16_000, bits_per_sample: 24, sample_format: SampleFormat::Int };
        write(&p, spec, |w| w.write_sample(5i32).unwrap());
        let err = load_audio(&p).unwrap_err();
        assert!(err.to_string().contains("bits_per_sample"), "{err}");
    }

    #[test]
    fn high_rate_decimated() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.wav");
        let spec = WavSpec { channels: 1, sample_rate: 96_000, bits_per_sample: 16, sample_format: SampleFormat::Int };
        write(&p, spec, |w| {
            for _ in 0..9600 {
                w.write_sample(1000i16).unwrap();
            }
        });
        let clip = load_audio(&p).unwrap();
        assert_eq!(clip.sample_rate(), 48_000);
        assert_eq!(clip.samples().len(), 4800);
    }
}
