//! Mel-spectrogram front end and cepstral spectral envelopes.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::{AudioBuffer, WORKING_RATE};
use crate::error::{Error, Result};
use crate::pitch::{self, F0_MAX_HZ, F0_MIN_HZ, HOP_SAMPLES, WINDOW_SAMPLES};

pub const N_MELS: usize = 80;
pub const MEL_FFT_SIZE: usize = 2048;
pub const LOG_FLOOR: f64 = 1e-10;
const MEL_FMAX_HZ: f64 = 12_000.0;

/// Lifter cutoff as a fraction of the pitch period.
pub const LIFTER_PERIOD_FRACTION: f64 = 0.8;

pub(crate) fn hann(len: usize) -> Vec<f64> {
    // periodic form: overlapping copies at hop len/2 sum to one
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
        .collect()
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Log-mel spectrogram, row-major `frames x n_mels`.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    values: Vec<f64>,
    frames: usize,
    sample_rate: u32,
}

impl MelSpectrogram {
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn n_mels(&self) -> usize {
        N_MELS
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn win_ms(&self) -> f64 {
        pitch::WINDOW_MS
    }

    pub fn hop_ms(&self) -> f64 {
        pitch::HOP_MS
    }

    pub fn frame(&self, i: usize) -> &[f64] {
        &self.values[i * N_MELS..(i + 1) * N_MELS]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sidecar(&self) -> MelSidecar {
        MelSidecar {
            frames: self.frames,
            n_mels: N_MELS,
            win_ms: self.win_ms(),
            hop_ms: self.hop_ms(),
            sample_rate: self.sample_rate,
            mel_scale: "htk".into(),
            fft_size: MEL_FFT_SIZE,
            fmin_hz: 0.0,
            fmax_hz: MEL_FMAX_HZ,
            log_floor: LOG_FLOOR,
            dtype: "float32-le".into(),
        }
    }

    /// Writes the matrix as raw little-endian `f32` plus a JSON sidecar at
    /// `path` with its extension replaced by `.json`.
    pub fn export(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = Vec::with_capacity(self.values.len() * 4);
        for &v in &self.values {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
        let side = path.with_extension("json");
        let mut f = std::fs::File::create(&side).map_err(|e| Error::io(&side, e))?;
        serde_json::to_writer_pretty(&mut f, &self.sidecar())?;
        f.write_all(b"\n").map_err(|e| Error::io(&side, e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelSidecar {
    pub frames: usize,
    pub n_mels: usize,
    pub win_ms: f64,
    pub hop_ms: f64,
    pub sample_rate: u32,
    pub mel_scale: String,
    pub fft_size: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub log_floor: f64,
    pub dtype: String,
}

/// Triangular HTK-scale filters over the `MEL_FFT_SIZE / 2 + 1` bins.
fn mel_filterbank(sample_rate: f64) -> Vec<Vec<(usize, f64)>> {
    let bins = MEL_FFT_SIZE / 2 + 1;
    let mel_max = hz_to_mel(MEL_FMAX_HZ);
    let edges: Vec<f64> = (0..N_MELS + 2)
        .map(|i| mel_to_hz(mel_max * i as f64 / (N_MELS + 1) as f64))
        .collect();
    (0..N_MELS)
        .map(|m| {
            let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .filter_map(|b| {
                    let f = b as f64 * sample_rate / MEL_FFT_SIZE as f64;
                    let w = if f > lo && f <= center {
                        (f - lo) / (center - lo)
                    } else if f > center && f < hi {
                        (hi - f) / (hi - center)
                    } else {
                        0.0
                    };
                    (w > 0.0).then_some((b, w))
                })
                .collect()
        })
        .collect()
}

/// 80-band log-mel spectrogram: 45 ms Hann window, 5 ms hop, 2048-point FFT.
pub fn mel_spectrogram(audio: &AudioBuffer) -> Result<MelSpectrogram> {
    if audio.sample_rate() != WORKING_RATE {
        return Err(Error::UnexpectedSampleRate {
            expected: WORKING_RATE,
            got: audio.sample_rate(),
        });
    }
    let frames = pitch::frame_count(audio.len());
    if frames == 0 {
        return Err(Error::TooShort {
            got: audio.len(),
            needed: WINDOW_SAMPLES,
        });
    }
    let window = hann(WINDOW_SAMPLES);
    let filters = mel_filterbank(audio.sample_rate() as f64);
    let fft = FftPlanner::new().plan_fft_forward(MEL_FFT_SIZE);
    let mut buf = vec![Complex::default(); MEL_FFT_SIZE];
    let mut mags = vec![0.0; MEL_FFT_SIZE / 2 + 1];
    let mut values = Vec::with_capacity(frames * N_MELS);
    for i in 0..frames {
        let chunk = &audio.samples()[i * HOP_SAMPLES..i * HOP_SAMPLES + WINDOW_SAMPLES];
        buf.fill(Complex::default());
        for ((slot, s), w) in buf.iter_mut().zip(chunk).zip(&window) {
            slot.re = s * w;
        }
        fft.process(&mut buf);
        for (m, z) in mags.iter_mut().zip(&buf) {
            *m = z.norm();
        }
        values.extend(filters.iter().map(|band| {
            let e: f64 = band.iter().map(|&(b, w)| w * mags[b]).sum();
            e.max(LOG_FLOOR).ln()
        }));
    }
    Ok(MelSpectrogram {
        values,
        frames,
        sample_rate: audio.sample_rate(),
    })
}

/// Smooth natural-log magnitude spectrum over linear frequency bins.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEnvelope {
    pub log_magnitude: Vec<f64>,
    pub fft_size: usize,
    pub sample_rate: u32,
}

impl SpectralEnvelope {
    pub fn bin_hz(&self) -> f64 {
        self.sample_rate as f64 / self.fft_size as f64
    }

    /// Frequency of bin `b` in Hz.
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz()
    }
}

type PlanPair = (usize, Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

/// Reusable cepstral-smoothing engine; caches FFT plans across calls.
pub struct EnvelopeAnalyzer {
    planner: FftPlanner<f64>,
    plans: Vec<PlanPair>,
    buf: Vec<Complex<f64>>,
}

impl Default for EnvelopeAnalyzer {
    fn default() -> Self {
        Self::new()
    }
}

impl EnvelopeAnalyzer {
    pub fn new() -> Self {
        Self {
            planner: FftPlanner::new(),
            plans: Vec::new(),
            buf: Vec::new(),
        }
    }

    pub(crate) fn plans(&mut self, size: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        if let Some((_, f, i)) = self.plans.iter().find(|(n, _, _)| *n == size) {
            return (f.clone(), i.clone());
        }
        let f = self.planner.plan_fft_forward(size);
        let i = self.planner.plan_fft_inverse(size);
        self.plans.push((size, f.clone(), i.clone()));
        (f, i)
    }

    /// Envelope of a frame that already carries its analysis window,
    /// computed at `fft_size` (power of two, at least the frame length).
    pub(crate) fn envelope_of_windowed(
        &mut self,
        windowed: &[f64],
        f0_hz: f64,
        sample_rate: u32,
        fft_size: usize,
    ) -> SpectralEnvelope {
        let (fwd, _) = self.plans(fft_size);
        let mut spectrum = vec![Complex::default(); fft_size];
        for (slot, &s) in spectrum.iter_mut().zip(windowed) {
            slot.re = s;
        }
        fwd.process(&mut spectrum);
        SpectralEnvelope {
            log_magnitude: self.smooth_log_spectrum(&spectrum, f0_hz, sample_rate),
            fft_size,
            sample_rate,
        }
    }

    /// Cepstrally smoothed log magnitude (bins `0..=N/2`) of a full complex
    /// spectrum.
    pub(crate) fn smooth_log_spectrum(
        &mut self,
        spectrum: &[Complex<f64>],
        f0_hz: f64,
        sample_rate: u32,
    ) -> Vec<f64> {
        let fft_size = spectrum.len();
        let (fwd, inv) = self.plans(fft_size);
        self.buf.clear();
        self.buf.extend(
            spectrum
                .iter()
                .map(|z| Complex::new(z.norm().max(LOG_FLOOR).ln(), 0.0)),
        );
        inv.process(&mut self.buf);
        // keep quefrencies below the cutoff (both halves of the even cepstrum)
        let cutoff = (LIFTER_PERIOD_FRACTION * sample_rate as f64 / f0_hz).floor() as usize;
        let scale = 1.0 / fft_size as f64;
        for (n, z) in self.buf.iter_mut().enumerate() {
            let q = n.min(fft_size - n);
            *z = if q <= cutoff {
                Complex::new(z.re * scale, 0.0)
            } else {
                Complex::default()
            };
        }
        fwd.process(&mut self.buf);
        self.buf[..=fft_size / 2].iter().map(|z| z.re).collect()
    }

    /// Hann-windows `frame` and returns its cepstrally smoothed envelope.
    pub fn envelope(
        &mut self,
        frame: &[f64],
        f0_hz: f64,
        sample_rate: u32,
    ) -> Result<SpectralEnvelope> {
        if !(F0_MIN_HZ..=F0_MAX_HZ).contains(&f0_hz) {
            return Err(Error::InvalidParams(format!(
                "envelope f0 {f0_hz} Hz outside [{F0_MIN_HZ}, {F0_MAX_HZ}]"
            )));
        }
        let needed = (2.0 * sample_rate as f64 / f0_hz).ceil() as usize;
        if frame.len() < needed {
            return Err(Error::FrameTooShort {
                got: frame.len(),
                needed,
            });
        }
        let windowed: Vec<f64> = frame
            .iter()
            .zip(hann(frame.len()))
            .map(|(s, w)| s * w)
            .collect();
        let fft_size = frame.len().next_power_of_two();
        Ok(self.envelope_of_windowed(&windowed, f0_hz, sample_rate, fft_size))
    }
}

/// Cepstrally smoothed envelope of one frame, liftered at `0.8 / f0` seconds.
pub fn cepstral_envelope(frame: &[f64], f0_hz: f64, sample_rate: u32) -> Result<SpectralEnvelope> {
    EnvelopeAnalyzer::new().envelope(frame, f0_hz, sample_rate)
}

pub const MIN_WARP_FACTOR: f64 = 0.25;
pub const MAX_WARP_FACTOR: f64 = 4.0;

/// Stretches the frequency axis so content at `F` moves to `F * factor`.
pub fn warp_envelope_axis(env: &SpectralEnvelope, factor: f64) -> Result<SpectralEnvelope> {
    if !(MIN_WARP_FACTOR..=MAX_WARP_FACTOR).contains(&factor) {
        return Err(Error::InvalidParams(format!(
            "warp factor {factor} outside [{MIN_WARP_FACTOR}, {MAX_WARP_FACTOR}]"
        )));
    }
    if factor == 1.0 {
        return Ok(env.clone());
    }
    Ok(SpectralEnvelope {
        log_magnitude: warp_values(&env.log_magnitude, factor),
        fft_size: env.fft_size,
        sample_rate: env.sample_rate,
    })
}

pub(crate) fn warp_values(values: &[f64], factor: f64) -> Vec<f64> {
    let last = values.len() - 1;
    (0..values.len())
        .map(|b| {
            let src = b as f64 / factor;
            if src >= last as f64 {
                return values[last];
            }
            let i = src as usize;
            let frac = src - i as f64;
            values[i] + (values[i + 1] - values[i]) * frac
        })
        .collect()
}
