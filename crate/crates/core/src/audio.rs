//! Mono sample buffers, WAV I/O, band-limited resampling and level utilities.
//!
//! Samples are `f64` in the nominal range `[-1, 1]`. 16-bit PCM maps `v` to
//! `v / 32768`; on output samples are clamped to `[-1, 32767/32768]` and
//! quantized with round-half-away-from-zero.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Sample rate every DSP stage in this crate operates at.
pub const WORKING_RATE: u32 = 24_000;

const PCM16_SCALE: f64 = 32768.0;
const PCM16_MAX: f64 = 32767.0 / 32768.0;

#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    /// Panics if `sample_rate` is zero.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Largest absolute sample value, 0 for an empty buffer.
    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, &s| m.max(s.abs()))
    }

    pub fn scaled(&self, gain: f64) -> AudioBuffer {
        AudioBuffer::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate,
        )
    }

    /// Scales the buffer down to unit peak if it overloads. Returns the
    /// applied gain (1.0 when untouched).
    pub fn normalize_overload(&mut self) -> f64 {
        let peak = self.peak();
        if peak > 1.0 {
            let gain = 1.0 / peak;
            for s in &mut self.samples {
                *s *= gain;
            }
            gain
        } else {
            1.0
        }
    }
}

/// Root-mean-square level of the buffer.
pub fn measure_rms(buffer: &AudioBuffer) -> Result<f64> {
    rms(buffer.samples())
}

pub(crate) fn rms(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let energy: f64 = samples.iter().map(|s| s * s).sum();
    Ok((energy / samples.len() as f64).sqrt())
}

/// The 16-bit code a sample is stored as.
pub fn quantize_sample(s: f64) -> i16 {
    // f64::round rounds half away from zero.
    (s.clamp(-1.0, PCM16_MAX) * PCM16_SCALE).round() as i16
}

/// Returns the buffer as it will read back after a 16-bit round trip.
pub fn quantize(buffer: &AudioBuffer) -> AudioBuffer {
    AudioBuffer::new(
        buffer
            .samples()
            .iter()
            .map(|&s| quantize_sample(s) as f64 / PCM16_SCALE)
            .collect(),
        buffer.sample_rate(),
    )
}

/// Repeats `samples` with an equal-power crossfade of `crossfade` samples
/// between copies until `needed` samples exist; the result is cut to exactly
/// `needed`. Returns the output and the number of tiles used.
pub fn tile_with_crossfade(samples: &[f64], needed: usize, crossfade: usize) -> (Vec<f64>, usize) {
    assert!(!samples.is_empty(), "cannot tile an empty buffer");
    let xf = crossfade.min(samples.len() / 2);
    let mut out = samples.to_vec();
    let mut tiles = 1;
    while out.len() < needed {
        let start = out.len() - xf;
        for j in 0..xf {
            let t = (j as f64 + 0.5) / xf as f64 * std::f64::consts::FRAC_PI_2;
            out[start + j] = out[start + j] * t.cos() + samples[j] * t.sin();
        }
        out.extend_from_slice(&samples[xf..]);
        tiles += 1;
    }
    out.truncate(needed);
    (out, tiles)
}

fn map_hound(path: &Path, err: hound::Error) -> Error {
    match err {
        // hound reports short reads as generic I/O errors
        hound::Error::IoError(e)
            if matches!(
                e.kind(),
                std::io::ErrorKind::UnexpectedEof
                    | std::io::ErrorKind::Other
                    | std::io::ErrorKind::InvalidData
            ) =>
        {
            Error::CorruptHeader(format!("{}: {e}", path.display()))
        }
        hound::Error::IoError(e) => Error::io(path, e),
        hound::Error::Unsupported | hound::Error::InvalidSampleFormat => {
            Error::UnsupportedFormat(format!("{}: {err}", path.display()))
        }
        other => Error::CorruptHeader(format!("{}: {other}", path.display())),
    }
}

fn check_spec(path: &Path, spec: &hound::WavSpec) -> Result<()> {
    if spec.channels != 1 {
        return Err(Error::UnsupportedFormat(format!(
            "{}: {} channels, only mono is supported",
            path.display(),
            spec.channels
        )));
    }
    match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) | (hound::SampleFormat::Float, 32) => Ok(()),
        (fmt, bits) => Err(Error::UnsupportedFormat(format!(
            "{}: {bits}-bit {fmt:?} samples",
            path.display()
        ))),
    }
}

/// Header-level facts about a WAV file, read without decoding samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavInfo {
    pub sample_rate: u32,
    pub frames: u32,
}

impl WavInfo {
    pub fn duration_seconds(&self) -> f64 {
        self.frames as f64 / self.sample_rate as f64
    }
}

pub fn wav_info(path: impl AsRef<Path>) -> Result<WavInfo> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    check_spec(path, &spec)?;
    Ok(WavInfo {
        sample_rate: spec.sample_rate,
        frames: reader.duration(),
    })
}

/// Reads a mono 16-bit PCM or 32-bit float WAV file.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    check_spec(path, &spec)?;
    if spec.sample_rate == 0 {
        return Err(Error::CorruptHeader(format!(
            "{}: zero sample rate",
            path.display()
        )));
    }
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Int => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / PCM16_SCALE))
            .collect::<Result<_, _>>(),
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>(),
    }
    .map_err(|e| map_hound(path, e))?;
    Ok(AudioBuffer::new(samples, spec.sample_rate))
}

/// Writes a 16-bit PCM mono WAV file.
pub fn write_wav(buffer: &AudioBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| map_hound(path, e))?;
    for &s in buffer.samples() {
        writer
            .write_sample(quantize_sample(s))
            .map_err(|e| map_hound(path, e))?;
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

// Windowed-sinc interpolation kernel: 64 taps per output phase, Kaiser beta = 8.
const KERNEL_HALF_TAPS: usize = 32;
const KAISER_BETA: f64 = 8.0;
const TABLE_OVERSAMPLE: usize = 512;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn kernel_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let half = KERNEL_HALF_TAPS as f64;
        let norm = bessel_i0(KAISER_BETA);
        (0..=KERNEL_HALF_TAPS * TABLE_OVERSAMPLE + 1)
            .map(|i| {
                let u = i as f64 / TABLE_OVERSAMPLE as f64;
                if u >= half {
                    return 0.0;
                }
                let sinc = if u == 0.0 {
                    1.0
                } else {
                    (PI * u).sin() / (PI * u)
                };
                let r = u / half;
                sinc * bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm
            })
            .collect()
    })
}

#[inline]
fn kernel(u: f64) -> f64 {
    let table = kernel_table();
    let pos = u.abs() * TABLE_OVERSAMPLE as f64;
    let idx = pos as usize;
    if idx + 1 >= table.len() {
        return 0.0;
    }
    let frac = pos - idx as f64;
    table[idx] + (table[idx + 1] - table[idx]) * frac
}

/// Band-limited resampling of raw samples by `ratio` (output rate / input
/// rate), producing exactly `out_len` samples.
pub(crate) fn resample_samples(input: &[f64], ratio: f64, out_len: usize) -> Vec<f64> {
    let cutoff = ratio.min(1.0);
    let half_width = KERNEL_HALF_TAPS as f64 / cutoff;
    let n = input.len() as isize;
    (0..out_len)
        .map(|j| {
            let t = j as f64 / ratio;
            let lo = ((t - half_width).ceil() as isize).max(0);
            let hi = ((t + half_width).floor() as isize).min(n - 1);
            let mut acc = 0.0;
            for i in lo..=hi {
                acc += input[i as usize] * kernel(cutoff * (t - i as f64));
            }
            acc * cutoff
        })
        .collect()
}

/// Resamples to `target_rate`. Output length is `round(len * target / source)`.
pub fn resample(buffer: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer> {
    if target_rate == 0 {
        return Err(Error::InvalidParams("target rate must be positive".into()));
    }
    if target_rate == buffer.sample_rate() {
        return Ok(buffer.clone());
    }
    let ratio = target_rate as f64 / buffer.sample_rate() as f64;
    let out_len = (buffer.len() as f64 * ratio).round() as usize;
    Ok(AudioBuffer::new(
        resample_samples(buffer.samples(), ratio, out_len),
        target_rate,
    ))
}
