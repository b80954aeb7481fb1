//! F0 contour estimation and contour arithmetic.
//!
//! The estimator evaluates the cumulative-mean-normalized difference function
//! (YIN family) on 45 ms frames every 5 ms. Voicing confidence is `1 - d_min`,
//! where `d_min` is the minimum of the normalized difference over the
//! 50-600 Hz lag range. Frames with `d_min > 0.85` are unvoiced and receive
//! linearly interpolated F0 so the contour stays positive everywhere.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::audio::{AudioBuffer, WORKING_RATE};
use crate::error::{Error, Result};

pub const F0_MIN_HZ: f64 = 50.0;
pub const F0_MAX_HZ: f64 = 600.0;
/// F0 assigned to every frame when no frame is voiced.
pub const UNVOICED_FILL_HZ: f64 = 150.0;
pub const HOP_MS: f64 = 5.0;
pub const WINDOW_MS: f64 = 45.0;
/// Frames whose normalized-difference minimum exceeds this are unvoiced.
pub const VOICING_THRESHOLD: f64 = 0.85;

/// Analysis window and hop at the working rate, in samples.
pub const WINDOW_SAMPLES: usize = 1080;
pub const HOP_SAMPLES: usize = 120;

// First dip under this value wins over the global minimum; avoids
// picking sub-harmonic lags on strongly periodic input.
const DIP_THRESHOLD: f64 = 0.1;
const FFT_SIZE: usize = 2048;

/// Number of analysis frames for `len` samples at the working rate.
pub fn frame_count(len: usize) -> usize {
    if len < WINDOW_SAMPLES {
        0
    } else {
        (len - WINDOW_SAMPLES) / HOP_SAMPLES + 1
    }
}

/// Sample index at the center of analysis frame `frame`.
pub fn frame_center(frame: usize) -> usize {
    frame * HOP_SAMPLES + WINDOW_SAMPLES / 2
}

/// Per-frame fundamental frequency and voicing confidence at a 5 ms hop.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Contour {
    f0_hz: Vec<f64>,
    confidence: Vec<f64>,
}

impl F0Contour {
    pub fn new(f0_hz: Vec<f64>, confidence: Vec<f64>) -> Result<Self> {
        if f0_hz.len() != confidence.len() {
            return Err(Error::InvalidParams(format!(
                "contour has {} f0 values but {} confidences",
                f0_hz.len(),
                confidence.len()
            )));
        }
        if let Some(f) = f0_hz
            .iter()
            .find(|f| !(F0_MIN_HZ..=F0_MAX_HZ).contains(*f))
        {
            return Err(Error::InvalidParams(format!(
                "f0 {f} Hz outside [{F0_MIN_HZ}, {F0_MAX_HZ}]"
            )));
        }
        if let Some(c) = confidence.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidParams(format!(
                "confidence {c} outside [0, 1]"
            )));
        }
        Ok(Self { f0_hz, confidence })
    }

    /// Builds a contour from values already known to satisfy the invariants.
    pub(crate) fn from_parts(f0_hz: Vec<f64>, confidence: Vec<f64>) -> Self {
        debug_assert_eq!(f0_hz.len(), confidence.len());
        Self { f0_hz, confidence }
    }

    pub fn constant(f0_hz: f64, confidence: f64, frames: usize) -> Result<Self> {
        Self::new(vec![f0_hz; frames], vec![confidence; frames])
    }

    pub fn f0_hz(&self) -> &[f64] {
        &self.f0_hz
    }

    pub fn confidence(&self) -> &[f64] {
        &self.confidence
    }

    pub fn hop_ms(&self) -> f64 {
        HOP_MS
    }

    pub fn len(&self) -> usize {
        self.f0_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0_hz.is_empty()
    }

    pub fn is_voiced(&self, frame: usize) -> bool {
        self.confidence[frame] >= 1.0 - VOICING_THRESHOLD
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,f0_hz,confidence\n");
        for (i, (f, c)) in self.f0_hz.iter().zip(&self.confidence).enumerate() {
            writeln!(out, "{i},{f:.6},{c:.6}").unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let parse_err = |reason: String| Error::Parse {
            what: "contour CSV",
            reason,
        };
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "frame,f0_hz,confidence" => {}
            other => return Err(parse_err(format!("bad header {other:?}"))),
        }
        let mut f0 = Vec::new();
        let mut conf = Vec::new();
        for (row, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("row {row}: expected 3 fields")));
            }
            let frame: usize = fields[0]
                .parse()
                .map_err(|e| parse_err(format!("row {row}: {e}")))?;
            if frame != row {
                return Err(parse_err(format!("row {row}: frame index {frame}")));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|e| parse_err(format!("row {row}: {e}")))
            };
            f0.push(num(fields[1])?);
            conf.push(num(fields[2])?);
        }
        Self::new(f0, conf)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}

/// Frequency ratio of a shift by `semitones`.
pub fn semitone_ratio(semitones: f64) -> f64 {
    (semitones / 12.0).exp2()
}

/// Moving-average length in frames for a smoothing window in milliseconds,
/// rounded to whole frames and forced odd.
pub fn smoothing_frames(window_ms: f64) -> usize {
    let frames = ((window_ms / HOP_MS).round() as usize).max(1);
    frames | 1
}

/// Centered moving average of width `width` (odd). Near the edges the window
/// shrinks symmetrically so every output stays centered on its frame.
pub(crate) fn centered_moving_average(values: &[f64], width: usize) -> Vec<f64> {
    let n = values.len();
    let half = width / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let (lo, hi) = (i - h, i + h + 1);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Smooths log-F0 with a centered moving average; confidence is untouched.
pub fn smooth_contour(contour: &F0Contour, window_ms: f64) -> Result<F0Contour> {
    if !(window_ms > 0.0) {
        return Err(Error::InvalidParams(format!(
            "smoothing window must be positive, got {window_ms} ms"
        )));
    }
    let width = smoothing_frames(window_ms);
    if width == 1 {
        return Ok(contour.clone());
    }
    let logs: Vec<f64> = contour.f0_hz.iter().map(|f| f.ln()).collect();
    let f0 = centered_moving_average(&logs, width)
        .into_iter()
        .zip(&contour.f0_hz)
        .map(|(l, &orig)| {
            // a constant run must come back bit-identical
            let v = l.exp();
            if (v - orig).abs() < 1e-12 * orig {
                orig
            } else {
                v.clamp(F0_MIN_HZ, F0_MAX_HZ)
            }
        })
        .collect();
    Ok(F0Contour::from_parts(f0, contour.confidence.clone()))
}

/// Per-frame YIN analysis result before gap filling.
#[derive(Debug, Clone, Copy)]
struct FrameEstimate {
    f0_hz: f64,
    d_min: f64,
}

struct DifferenceAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex<f64>>,
    cross: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    squares: Vec<f64>,
    diff: Vec<f64>,
    tau_min: usize,
    tau_max: usize,
    sample_rate: f64,
}

impl DifferenceAnalyzer {
    fn new(sample_rate: u32) -> Self {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(FFT_SIZE);
        let ifft = planner.plan_fft_inverse(FFT_SIZE);
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        let sr = sample_rate as f64;
        Self {
            fft,
            ifft,
            spectrum: vec![Complex::default(); FFT_SIZE],
            cross: vec![Complex::default(); FFT_SIZE],
            scratch: vec![Complex::default(); scratch_len],
            squares: vec![0.0; WINDOW_SAMPLES + 1],
            diff: Vec::new(),
            tau_min: (sr / F0_MAX_HZ).floor() as usize,
            tau_max: (sr / F0_MIN_HZ).ceil() as usize,
            sample_rate: sr,
        }
    }

    fn analyze(&mut self, frame: &[f64]) -> FrameEstimate {
        let w = frame.len() - self.tau_max;
        // Pack the integration window (real) and the full frame (imag) into
        // one transform, then split the two spectra by conjugate symmetry.
        for (i, z) in self.spectrum.iter_mut().enumerate() {
            let a = if i < w { frame[i] } else { 0.0 };
            let b = frame.get(i).copied().unwrap_or(0.0);
            *z = Complex::new(a, b);
        }
        self.fft
            .process_with_scratch(&mut self.spectrum, &mut self.scratch);
        for k in 0..FFT_SIZE {
            let zk = self.spectrum[k];
            let zn = self.spectrum[(FFT_SIZE - k) % FFT_SIZE].conj();
            let a = (zk + zn) * 0.5;
            let b = (zk - zn) * Complex::new(0.0, -0.5);
            self.cross[k] = a.conj() * b;
        }
        self.ifft
            .process_with_scratch(&mut self.cross, &mut self.scratch);

        self.squares[0] = 0.0;
        for (i, s) in frame.iter().enumerate() {
            self.squares[i + 1] = self.squares[i] + s * s;
        }
        let energy0 = self.squares[w];
        let scale = 1.0 / FFT_SIZE as f64;
        self.diff.clear();
        self.diff.push(0.0);
        for tau in 1..=self.tau_max {
            let energy_tau = self.squares[tau + w] - self.squares[tau];
            let r = self.cross[tau].re * scale;
            self.diff.push((energy0 + energy_tau - 2.0 * r).max(0.0));
        }

        // cumulative-mean normalization, in place
        let floor = 1e-12 * (energy0 + 1e-300);
        let mut running = 0.0;
        self.diff[0] = 1.0;
        for tau in 1..=self.tau_max {
            running += self.diff[tau];
            self.diff[tau] = if running > floor {
                self.diff[tau] * tau as f64 / running
            } else {
                1.0
            };
        }

        let range = self.tau_min..=self.tau_max;
        let (global_tau, d_min) = range
            .clone()
            .map(|t| (t, self.diff[t]))
            .fold((self.tau_min, f64::INFINITY), |best, cur| {
                if cur.1 < best.1 {
                    cur
                } else {
                    best
                }
            });
        let mut best_tau = global_tau;
        if let Some(mut t) = range.clone().find(|&t| self.diff[t] < DIP_THRESHOLD) {
            while t < self.tau_max && self.diff[t + 1] < self.diff[t] {
                t += 1;
            }
            best_tau = t;
        }
        let refined = if best_tau > self.tau_min && best_tau < self.tau_max {
            let (a, b, c) = (
                self.diff[best_tau - 1],
                self.diff[best_tau],
                self.diff[best_tau + 1],
            );
            let denom = a - 2.0 * b + c;
            if denom.abs() > 1e-12 {
                best_tau as f64 + (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
            } else {
                best_tau as f64
            }
        } else {
            best_tau as f64
        };
        FrameEstimate {
            f0_hz: (self.sample_rate / refined).clamp(F0_MIN_HZ, F0_MAX_HZ),
            d_min,
        }
    }
}

/// Estimates the F0 contour and voicing confidence of 24 kHz audio.
pub fn estimate_f0(audio: &AudioBuffer) -> Result<F0Contour> {
    if audio.sample_rate() != WORKING_RATE {
        return Err(Error::UnexpectedSampleRate {
            expected: WORKING_RATE,
            got: audio.sample_rate(),
        });
    }
    let frames = frame_count(audio.len());
    if frames == 0 {
        return Err(Error::TooShort {
            got: audio.len(),
            needed: WINDOW_SAMPLES,
        });
    }
    let mut analyzer = DifferenceAnalyzer::new(audio.sample_rate());
    let estimates: Vec<FrameEstimate> = (0..frames)
        .map(|i| {
            let start = i * HOP_SAMPLES;
            analyzer.analyze(&audio.samples()[start..start + WINDOW_SAMPLES])
        })
        .collect();

    let confidence: Vec<f64> = estimates
        .iter()
        .map(|e| (1.0 - e.d_min).clamp(0.0, 1.0))
        .collect();
    let voiced: Vec<Option<f64>> = estimates
        .iter()
        .map(|e| (e.d_min <= VOICING_THRESHOLD).then_some(e.f0_hz))
        .collect();
    Ok(F0Contour::from_parts(fill_unvoiced(&voiced), confidence))
}

/// Linear interpolation across unvoiced gaps; edges hold the nearest voiced
/// value, and an entirely unvoiced contour gets the default fill.
fn fill_unvoiced(voiced: &[Option<f64>]) -> Vec<f64> {
    let anchors: Vec<(usize, f64)> = voiced
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|f| (i, f)))
        .collect();
    if anchors.is_empty() {
        return vec![UNVOICED_FILL_HZ; voiced.len()];
    }
    let mut out = vec![0.0; voiced.len()];
    let (first_i, first_f) = anchors[0];
    let (last_i, last_f) = *anchors.last().unwrap();
    out[..=first_i].fill(first_f);
    out[last_i..].fill(last_f);
    for pair in anchors.windows(2) {
        let ((i0, f0), (i1, f1)) = (pair[0], pair[1]);
        for (i, slot) in out.iter_mut().enumerate().take(i1 + 1).skip(i0) {
            let t = (i - i0) as f64 / (i1 - i0) as f64;
            *slot = f0 + (f1 - f0) * t;
        }
    }
    out
}
