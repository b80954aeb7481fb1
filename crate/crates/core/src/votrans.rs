//! Pulse-based voice transformation.
//!
//! The signal is cut into two-period Hann grains centred on pitch marks
//! (one mark per glottal pulse). Re-spacing the grains changes the pitch
//! while each grain keeps its own spectral envelope, so formants stay put.
//! A per-grain envelope replacement then moves the formants by
//! `2^(kappa * p / 12)`: `kappa = 0` keeps them, `kappa = 1` lets them follow
//! the pitch.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::features::{warp_values, EnvelopeAnalyzer};
use crate::pitch::{semitone_ratio, F0Contour, F0_MAX_HZ, F0_MIN_HZ, HOP_SAMPLES, WINDOW_SAMPLES};

/// Mark spacing in unvoiced regions.
pub const UNVOICED_SPACING_MS: f64 = 10.0;
/// Snap radius around the nominal next mark, as a fraction of the period.
const SNAP_FRACTION: f64 = 0.1;
/// Nominal pulse rate assumed for unvoiced grains when smoothing envelopes.
const UNVOICED_ENVELOPE_F0: f64 = 100.0;
/// Largest per-bin envelope correction, in natural-log units.
const MAX_LOG_CORRECTION: f64 = 9.21; // ln(1e4)

pub const MAX_SHIFT_SEMITONES: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PitchMarks {
    positions: Vec<usize>,
    periods: Vec<usize>,
    voiced: Vec<bool>,
    source_len: usize,
    sample_rate: u32,
}

impl PitchMarks {
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Local pulse period (samples) at each mark.
    pub fn periods(&self) -> &[usize] {
        &self.periods
    }

    pub fn voiced(&self) -> &[bool] {
        &self.voiced
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn gaps(&self) -> Vec<usize> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoTransParams {
    /// Pitch shift in semitones.
    pub pitch_shift: f64,
    /// Formant coupling: 0 preserves formants, 1 moves them with the pitch.
    pub envelope_warp_kappa: f64,
}

impl VoTransParams {
    pub fn new(pitch_shift: f64, envelope_warp_kappa: f64) -> Result<Self> {
        let p = Self {
            pitch_shift,
            envelope_warp_kappa,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pitch_shift.abs() <= MAX_SHIFT_SEMITONES) {
            return Err(Error::InvalidParams(format!(
                "pitch shift {} outside [-12, 12] semitones",
                self.pitch_shift
            )));
        }
        if !(0.0..=1.0).contains(&self.envelope_warp_kappa) {
            return Err(Error::InvalidParams(format!(
                "kappa {} outside [0, 1]",
                self.envelope_warp_kappa
            )));
        }
        Ok(())
    }

    pub fn pitch_ratio(&self) -> f64 {
        semitone_ratio(self.pitch_shift)
    }

    /// Frequency-axis factor applied to each grain's envelope.
    pub fn envelope_warp(&self) -> f64 {
        semitone_ratio(self.envelope_warp_kappa * self.pitch_shift)
    }
}

/// Contour lookup by sample position.
struct FrameLookup<'a> {
    contour: &'a F0Contour,
}

impl FrameLookup<'_> {
    fn frame(&self, sample: usize) -> Option<usize> {
        if self.contour.is_empty() {
            return None;
        }
        let rel = sample as f64 - (WINDOW_SAMPLES / 2) as f64;
        let idx = (rel / HOP_SAMPLES as f64).round().max(0.0) as usize;
        Some(idx.min(self.contour.len() - 1))
    }

    /// Period in samples if the region around `sample` is voiced.
    fn voiced_period(&self, sample: usize, sample_rate: f64) -> Option<f64> {
        let frame = self.frame(sample)?;
        self.contour
            .is_voiced(frame)
            .then(|| sample_rate / self.contour.f0_hz()[frame])
    }
}

/// Index of the most negative sample in `lo..hi`, first on ties.
fn most_negative(samples: &[f64], lo: usize, hi: usize) -> usize {
    (lo..hi).fold(lo, |best, i| if samples[i] < samples[best] { i } else { best })
}

/// Places one mark per pulse in voiced regions and a mark every 10 ms
/// elsewhere.
pub fn detect_pitch_marks(audio: &AudioBuffer, contour: &F0Contour) -> Result<PitchMarks> {
    if audio.is_empty() {
        return Err(Error::EmptyAudio);
    }
    let samples = audio.samples();
    let n = samples.len();
    let sr = audio.sample_rate() as f64;
    let lookup = FrameLookup { contour };
    let unvoiced_step = (UNVOICED_SPACING_MS * sr / 1000.0).round() as usize;
    let min_gap = (sr / F0_MAX_HZ).floor() as usize;
    let max_gap = (sr / F0_MIN_HZ).ceil() as usize;

    let mut positions = Vec::new();
    let mut periods = Vec::new();
    let mut voiced = Vec::new();

    let mut t = match lookup.voiced_period(0, sr) {
        Some(p) => most_negative(samples, 0, (p.round() as usize).clamp(1, n)),
        None => 0,
    };
    // whether the current mark sits on a located pulse
    let mut locked = lookup.voiced_period(0, sr).is_some();
    loop {
        let period = lookup.voiced_period(t, sr);
        positions.push(t);
        match period {
            Some(p) => {
                periods.push(p.round() as usize);
                voiced.push(true);
            }
            None => {
                periods.push(unvoiced_step);
                voiced.push(false);
            }
        }
        let next = match period {
            Some(p) => {
                let radius = if locked { SNAP_FRACTION * p } else { 0.5 * p };
                let nominal = t as f64 + p;
                let lo = ((nominal - radius).round() as usize).max(t + min_gap);
                let hi = ((nominal + radius).round() as usize + 1).min(t + max_gap + 1);
                if lo >= n {
                    break;
                }
                locked = true;
                most_negative(samples, lo, hi.min(n).max(lo + 1))
            }
            None => {
                locked = false;
                t + unvoiced_step
            }
        };
        if next >= n {
            break;
        }
        t = next;
    }
    Ok(PitchMarks {
        positions,
        periods,
        voiced,
        source_len: n,
        sample_rate: audio.sample_rate(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformOutput {
    pub audio: AudioBuffer,
    /// Gain applied to avoid overload (1.0 if none was needed).
    pub normalization_gain: f64,
}

/// Raised-cosine grain of half-width `half` centred on index `half`.
fn grain_window(half: usize) -> impl Iterator<Item = f64> {
    let h = half as f64;
    (0..=2 * half).map(move |i| {
        let k = i as f64 - h;
        0.5 + 0.5 * (std::f64::consts::PI * k / h).cos()
    })
}

struct GrainBank<'a> {
    samples: &'a [f64],
    marks: &'a PitchMarks,
    warp: f64,
    analyzer: EnvelopeAnalyzer,
    cache: Vec<Option<Vec<f64>>>,
}

impl<'a> GrainBank<'a> {
    fn new(samples: &'a [f64], marks: &'a PitchMarks, warp: f64) -> Self {
        Self {
            samples,
            marks,
            warp,
            analyzer: EnvelopeAnalyzer::new(),
            cache: vec![None; marks.len()],
        }
    }

    /// Windowed grain around mark `i`, centred on index `len / 2`.
    fn raw(&self, i: usize) -> Vec<f64> {
        let centre = self.marks.positions[i] as isize;
        let half = self.marks.periods[i];
        grain_window(half)
            .enumerate()
            .map(|(j, w)| {
                let idx = centre - half as isize + j as isize;
                if idx >= 0 && (idx as usize) < self.samples.len() {
                    self.samples[idx as usize] * w
                } else {
                    0.0
                }
            })
            .collect()
    }

    fn grain(&mut self, i: usize) -> &[f64] {
        if self.cache[i].is_none() {
            let raw = self.raw(i);
            let grain = if self.warp == 1.0 {
                raw
            } else {
                self.reshape(i, raw)
            };
            self.cache[i] = Some(grain);
        }
        self.cache[i].as_deref().unwrap()
    }

    /// Replaces the grain's envelope with its frequency-warped version.
    /// The result is twice as long as the input grain.
    fn reshape(&mut self, i: usize, raw: Vec<f64>) -> Vec<f64> {
        let half = raw.len() / 2;
        let fft_size = (2 * raw.len()).next_power_of_two();
        let mut spec = vec![Complex::default(); fft_size];
        // zero-phase placement: grain centre at index 0
        for (j, &s) in raw.iter().enumerate() {
            let k = (j as isize - half as isize).rem_euclid(fft_size as isize) as usize;
            spec[k].re = s;
        }
        let (fwd, inv) = self.analyzer.plans(fft_size);
        fwd.process(&mut spec);
        let f0 = if self.marks.voiced[i] {
            self.marks.sample_rate as f64 / self.marks.periods[i] as f64
        } else {
            UNVOICED_ENVELOPE_F0
        };
        let env = self
            .analyzer
            .smooth_log_spectrum(&spec, f0, self.marks.sample_rate);
        let target = warp_values(&env, self.warp);
        for b in 0..=fft_size / 2 {
            let gain = (target[b] - env[b])
                .clamp(-MAX_LOG_CORRECTION, MAX_LOG_CORRECTION)
                .exp();
            spec[b] *= gain;
            if b != 0 && b != fft_size / 2 {
                spec[fft_size - b] *= gain;
            }
        }
        inv.process(&mut spec);
        let scale = 1.0 / fft_size as f64;
        let out_half = 2 * half;
        (0..=2 * out_half)
            .map(|j| {
                let k = (j as isize - out_half as isize).rem_euclid(fft_size as isize) as usize;
                spec[k].re * scale
            })
            .collect()
    }
}

/// Pitch-shifts by `params.pitch_shift` semitones with formant movement set
/// by `params.envelope_warp_kappa`. Output length equals input length.
pub fn transform(
    audio: &AudioBuffer,
    contour: &F0Contour,
    params: &VoTransParams,
) -> Result<TransformOutput> {
    params.validate()?;
    let marks = detect_pitch_marks(audio, contour)?;
    let n = audio.len();
    let ratio = params.pitch_ratio();
    let mut bank = GrainBank::new(audio.samples(), &marks, params.envelope_warp());
    let mut out = vec![0.0; n];

    let positions = marks.positions();
    let mut nearest = 0;
    let mut ts = positions[0] as f64;
    while ts < n as f64 {
        while nearest + 1 < positions.len()
            && (positions[nearest + 1] as f64 - ts).abs() <= (positions[nearest] as f64 - ts).abs()
        {
            nearest += 1;
        }
        let (step, weight) = if marks.voiced[nearest] {
            let p = marks.periods[nearest] as f64;
            (p / ratio, 1.0 / ratio)
        } else {
            (marks.periods[nearest] as f64, 1.0)
        };
        let at = ts.round() as isize;
        let grain = bank.grain(nearest);
        let half = (grain.len() / 2) as isize;
        for (j, &g) in grain.iter().enumerate() {
            let idx = at - half + j as isize;
            if idx >= 0 && (idx as usize) < n {
                out[idx as usize] += weight * g;
            }
        }
        ts += step;
    }

    let mut audio = AudioBuffer::new(out, audio.sample_rate());
    let normalization_gain = audio.normalize_overload();
    Ok(TransformOutput {
        audio,
        normalization_gain,
    })
}
