//! The augmentation schemes, their parameter records and deterministic
//! per-(input, copy) seeding.

mod contour;
mod mix;
mod shift;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use contour::{
    perturb_f0, perturb_f0_smoothed, perturb_f0_smoothed_with_window, sample_smoothing_window,
    stream_perturb_f0, F0Stream, StreamMode,
};
pub use mix::{mix_at_snr, noise_gain_for_snr, snr_db, MixOutput, NOISE_CROSSFADE_S};
pub use shift::{pitch_shift_plain, wsola_stretch, MAX_PLAIN_SHIFT};

use crate::audio::AudioBuffer;
use crate::dataset::{NoiseBank, NoisePick};
use crate::error::{Error, Result};
use crate::pitch::{estimate_f0, F0Contour};
use crate::votrans::{self, VoTransParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    Noisy,
    NoisyF0,
    #[serde(rename = "NoisyF0-SM")]
    NoisyF0Sm,
    SoX,
    VoTrans,
    #[serde(rename = "NoisyF0-VT")]
    NoisyF0Vt,
    #[serde(rename = "NoisyF0-VT-SoX")]
    NoisyF0VtSox,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Noisy,
        Scheme::NoisyF0,
        Scheme::NoisyF0Sm,
        Scheme::SoX,
        Scheme::VoTrans,
        Scheme::NoisyF0Vt,
        Scheme::NoisyF0VtSox,
    ];

    /// Display label, e.g. `NoisyF0-VT-SoX`.
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Noisy => "Noisy",
            Scheme::NoisyF0 => "NoisyF0",
            Scheme::NoisyF0Sm => "NoisyF0-SM",
            Scheme::SoX => "SoX",
            Scheme::VoTrans => "VoTrans",
            Scheme::NoisyF0Vt => "NoisyF0-VT",
            Scheme::NoisyF0VtSox => "NoisyF0-VT-SoX",
        }
    }

    /// Lowercase name used on the command line and in file names.
    pub fn slug(self) -> &'static str {
        match self {
            Scheme::Noisy => "noisy",
            Scheme::NoisyF0 => "noisyf0",
            Scheme::NoisyF0Sm => "noisyf0-sm",
            Scheme::SoX => "sox",
            Scheme::VoTrans => "votrans",
            Scheme::NoisyF0Vt => "noisyf0-vt",
            Scheme::NoisyF0VtSox => "noisyf0-vt-sox",
        }
    }

    /// Schemes that only touch the control signals, never the audio.
    pub fn is_controls_only(self) -> bool {
        matches!(self, Scheme::NoisyF0 | Scheme::NoisyF0Sm)
    }

    pub fn needs_noise(self) -> bool {
        self == Scheme::Noisy
    }

    pub fn default_copies(self) -> u32 {
        match self {
            Scheme::SoX | Scheme::VoTrans => 10,
            Scheme::Noisy => NoiseParams::default().segments_per_clean,
            _ => 1,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.slug() == lower || sc.label().to_ascii_lowercase() == lower)
            .ok_or_else(|| Error::Parse {
                what: "scheme",
                reason: format!("unknown scheme {s:?}"),
            })
    }
}

fn check_range(name: &str, low: f64, high: f64) -> Result<()> {
    if !(low.is_finite() && high.is_finite() && low <= high) {
        return Err(Error::InvalidParams(format!(
            "{name} range [{low}, {high}] is invalid"
        )));
    }
    Ok(())
}

fn check_variance(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::InvalidParams(format!("{name} must be >= 0, got {v}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseParams {
    pub snr_low: f64,
    pub snr_high: f64,
    pub segments_per_clean: u32,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            snr_low: 4.0,
            snr_high: 12.0,
            segments_per_clean: 5,
        }
    }
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        check_range("snr", self.snr_low, self.snr_high)?;
        if self.segments_per_clean == 0 {
            return Err(Error::InvalidParams("segments_per_clean must be >= 1".into()));
        }
        Ok(())
    }
}

/// Noise on the control signals. Variances are in semitones² for F0 and
/// raw units for confidence. Zero variances are accepted and disable the
/// corresponding noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct F0NoiseParams {
    pub f0_variance: f64,
    pub conf_variance: f64,
    pub smooth_window_low_ms: f64,
    pub smooth_window_high_ms: f64,
    pub noise_smooth_divisor: f64,
}

impl Default for F0NoiseParams {
    fn default() -> Self {
        Self {
            f0_variance: 0.25,
            conf_variance: 0.215,
            smooth_window_low_ms: 100.0,
            smooth_window_high_ms: 300.0,
            noise_smooth_divisor: 2.0,
        }
    }
}

impl F0NoiseParams {
    pub fn validate(&self) -> Result<()> {
        check_variance("f0_variance", self.f0_variance)?;
        check_variance("conf_variance", self.conf_variance)?;
        check_range(
            "smoothing window",
            self.smooth_window_low_ms,
            self.smooth_window_high_ms,
        )?;
        if !(self.smooth_window_low_ms > 0.0) {
            return Err(Error::InvalidParams("smoothing window must be positive".into()));
        }
        if !(self.noise_smooth_divisor >= 1.0) {
            return Err(Error::InvalidParams(
                "noise_smooth_divisor must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PitchShiftParams {
    /// Variance of the SoX-style shift in semitones².
    pub sox_variance: f64,
    /// Largest SoX-style shift magnitude in semitones.
    pub sox_cap: f64,
    pub votrans_low: f64,
    pub votrans_high: f64,
}

impl Default for PitchShiftParams {
    fn default() -> Self {
        Self {
            sox_variance: 3.0,
            sox_cap: 8.0,
            votrans_low: -12.0,
            votrans_high: 12.0,
        }
    }
}

impl PitchShiftParams {
    pub fn validate(&self) -> Result<()> {
        check_variance("sox_variance", self.sox_variance)?;
        if !(self.sox_cap > 0.0 && self.sox_cap <= MAX_PLAIN_SHIFT) {
            return Err(Error::InvalidParams(format!(
                "sox_cap must be in (0, {MAX_PLAIN_SHIFT}], got {}",
                self.sox_cap
            )));
        }
        check_range("votrans shift", self.votrans_low, self.votrans_high)?;
        if self.votrans_low < -votrans::MAX_SHIFT_SEMITONES
            || self.votrans_high > votrans::MAX_SHIFT_SEMITONES
        {
            return Err(Error::InvalidParams(
                "votrans shift range exceeds one octave".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeParams {
    pub noise: NoiseParams,
    pub f0: F0NoiseParams,
    pub shift: PitchShiftParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub scheme: Scheme,
    #[serde(default)]
    pub params: SchemeParams,
    pub seed: u64,
    pub copies_per_input: u32,
}

impl AugmentationSpec {
    /// Default parameters and copy count for `scheme`.
    pub fn new(scheme: Scheme, seed: u64) -> Self {
        Self {
            scheme,
            params: SchemeParams::default(),
            seed,
            copies_per_input: scheme.default_copies(),
        }
    }

    pub fn with_copies(mut self, copies: u32) -> Self {
        self.copies_per_input = copies;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.copies_per_input == 0 {
            return Err(Error::InvalidParams("copies_per_input must be >= 1".into()));
        }
        self.params.noise.validate()?;
        self.params.f0.validate()?;
        self.params.shift.validate()
    }
}

/// Independent generator for one (input, copy) pair.
pub fn derive_rng(seed: u64, input_id: &str, copy_index: u32) -> ChaCha8Rng {
    let mut bytes = Vec::with_capacity(input_id.len() + 5);
    bytes.extend_from_slice(input_id.as_bytes());
    // separator keeps ("a", 1) and ("a\x01", ..) apart
    bytes.push(0);
    bytes.extend_from_slice(&copy_index.to_le_bytes());
    ChaCha8Rng::seed_from_u64(xxhash_rust::xxh3::xxh3_64_with_seed(&bytes, seed))
}

pub fn sample_snr(params: &NoiseParams, rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(params.snr_low..=params.snr_high)
}

/// Raw (unclamped) SoX-style shift draw.
pub fn sample_sox_shift_raw(params: &PitchShiftParams, rng: &mut ChaCha8Rng) -> f64 {
    Normal::new(0.0, params.sox_variance.sqrt())
        .expect("validated variance")
        .sample(rng)
}

/// Symmetric magnitude clamp to `sox_cap`.
pub fn clamp_sox_shift(raw: f64, params: &PitchShiftParams) -> f64 {
    raw.clamp(-params.sox_cap, params.sox_cap)
}

pub fn sample_sox_shift(params: &PitchShiftParams, rng: &mut ChaCha8Rng) -> f64 {
    clamp_sox_shift(sample_sox_shift_raw(params, rng), params)
}

/// Draws `(pitch_shift, kappa)` for the voice transformation.
pub fn sample_votrans(params: &PitchShiftParams, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let p = rng.gen_range(params.votrans_low..=params.votrans_high);
    let kappa = rng.gen_range(0.0..=1.0);
    (p, kappa)
}

/// Every random quantity drawn for one output. Absent fields were not used
/// by the scheme.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Draws {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noise_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noise_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noise_offset: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub snr_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub votrans_shift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub votrans_kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sox_shift_raw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sox_shift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub smoothing_window_ms: Option<f64>,
    /// Seed of the generator that produced the per-frame control noise.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub contour_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scheme: Scheme,
    pub seed: u64,
    pub input_id: String,
    pub copy_index: u32,
    pub draws: Draws,
    pub normalization_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub audio: AudioBuffer,
    pub contour: F0Contour,
    pub provenance: Provenance,
}

/// Draws every value `spec.scheme` needs, in a fixed order.
fn draw_all(
    spec: &AugmentationSpec,
    noise_bank: Option<&NoiseBank>,
    audio_len: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Draws> {
    let p = &spec.params;
    let mut d = Draws::default();
    match spec.scheme {
        Scheme::Noisy => {
            let bank = noise_bank.ok_or(Error::MissingNoiseBank(spec.scheme.label()))?;
            let pick = bank.draw_pick(audio_len, rng);
            d.noise_index = Some(pick.index);
            d.noise_file = Some(bank.segments()[pick.index].path.display().to_string());
            d.noise_offset = Some(pick.offset);
            d.snr_db = Some(sample_snr(&p.noise, rng));
        }
        Scheme::SoX => {
            let raw = sample_sox_shift_raw(&p.shift, rng);
            d.sox_shift_raw = Some(raw);
            d.sox_shift = Some(clamp_sox_shift(raw, &p.shift));
        }
        Scheme::VoTrans | Scheme::NoisyF0Vt | Scheme::NoisyF0VtSox => {
            let (shift, kappa) = sample_votrans(&p.shift, rng);
            d.votrans_shift = Some(shift);
            d.votrans_kappa = Some(kappa);
            if spec.scheme == Scheme::NoisyF0VtSox {
                let raw = sample_sox_shift_raw(&p.shift, rng);
                d.sox_shift_raw = Some(raw);
                d.sox_shift = Some(clamp_sox_shift(raw, &p.shift));
            }
        }
        Scheme::NoisyF0 | Scheme::NoisyF0Sm => {}
    }
    if matches!(
        spec.scheme,
        Scheme::NoisyF0 | Scheme::NoisyF0Sm | Scheme::NoisyF0Vt | Scheme::NoisyF0VtSox
    ) {
        let seed = rng.gen::<u64>();
        d.contour_seed = Some(seed);
        if spec.scheme == Scheme::NoisyF0Sm {
            let mut sub = ChaCha8Rng::seed_from_u64(seed);
            d.smoothing_window_ms = Some(sample_smoothing_window(&p.f0, &mut sub));
        }
    }
    Ok(d)
}

/// Runs one scheme with the given draws. Shared by [`apply_scheme`] and
/// [`replay`].
fn run(
    audio: &AudioBuffer,
    contour: &F0Contour,
    noise_bank: Option<&NoiseBank>,
    spec: &AugmentationSpec,
    draws: &Draws,
) -> Result<(AudioBuffer, F0Contour, f64)> {
    let p = &spec.params;
    let missing = |what: &str| {
        Error::InvalidParams(format!("{} provenance lacks {what}", spec.scheme.label()))
    };
    let mut out = audio.clone();
    let mut gain = 1.0;
    let mut audio_changed = false;

    if spec.scheme == Scheme::Noisy {
        let bank = noise_bank.ok_or(Error::MissingNoiseBank(spec.scheme.label()))?;
        let pick = NoisePick {
            index: draws.noise_index.ok_or_else(|| missing("noise_index"))?,
            offset: draws.noise_offset.ok_or_else(|| missing("noise_offset"))?,
        };
        if pick.index >= bank.len() {
            return Err(Error::InvalidParams(format!(
                "noise index {} outside bank of {}",
                pick.index,
                bank.len()
            )));
        }
        let noise = bank.segment(pick, out.len());
        let snr = draws.snr_db.ok_or_else(|| missing("snr_db"))?;
        let mixed = mix_at_snr(&out, &noise, snr)?;
        out = mixed.audio;
        gain *= mixed.normalization_gain;
        audio_changed = true;
    }
    if let (Some(shift), Some(kappa)) = (draws.votrans_shift, draws.votrans_kappa) {
        let t = votrans::transform(&out, contour, &VoTransParams::new(shift, kappa)?)?;
        out = t.audio;
        gain *= t.normalization_gain;
        audio_changed = true;
    }
    if let Some(shift) = draws.sox_shift {
        out = pitch_shift_plain(&out, shift)?;
        audio_changed = true;
    }
    gain *= out.normalize_overload();

    // the controls must describe the audio that is actually returned
    let base = if audio_changed {
        estimate_f0(&out)?
    } else {
        contour.clone()
    };
    let new_contour = match (spec.scheme, draws.contour_seed) {
        (Scheme::NoisyF0Sm, Some(seed)) => {
            let window = draws
                .smoothing_window_ms
                .ok_or_else(|| missing("smoothing_window_ms"))?;
            let mut sub = ChaCha8Rng::seed_from_u64(seed);
            // keep the generator aligned with perturb_f0_smoothed's own draw
            let _ = sample_smoothing_window(&p.f0, &mut sub);
            perturb_f0_smoothed_with_window(&base, &p.f0, window, &mut sub)
        }
        (_, Some(seed)) => perturb_f0(&base, &p.f0, &mut ChaCha8Rng::seed_from_u64(seed)),
        (_, None) => base,
    };
    Ok((out, new_contour, gain))
}

/// Applies `spec.scheme` to one input. The result depends only on
/// `(spec, input_id, copy_index)` and the inputs, never on scheduling.
pub fn apply_scheme(
    audio: &AudioBuffer,
    contour: &F0Contour,
    noise_bank: Option<&NoiseBank>,
    spec: &AugmentationSpec,
    input_id: &str,
    copy_index: u32,
) -> Result<Augmented> {
    spec.validate()?;
    if audio.is_empty() {
        return Err(Error::EmptyAudio);
    }
    let mut rng = derive_rng(spec.seed, input_id, copy_index);
    let draws = draw_all(spec, noise_bank, audio.len(), &mut rng)?;
    let (audio, contour, normalization_gain) = run(audio, contour, noise_bank, spec, &draws)?;
    Ok(Augmented {
        audio,
        contour,
        provenance: Provenance {
            scheme: spec.scheme,
            seed: spec.seed,
            input_id: input_id.to_string(),
            copy_index,
            draws,
            normalization_gain,
        },
    })
}

/// Regenerates an output from its provenance record alone.
pub fn replay(
    audio: &AudioBuffer,
    contour: &F0Contour,
    noise_bank: Option<&NoiseBank>,
    params: &SchemeParams,
    provenance: &Provenance,
) -> Result<(AudioBuffer, F0Contour)> {
    let spec = AugmentationSpec {
        scheme: provenance.scheme,
        params: *params,
        seed: provenance.seed,
        copies_per_input: 1,
    };
    spec.validate()?;
    let (audio, contour, _) = run(audio, contour, noise_bank, &spec, &provenance.draws)?;
    Ok((audio, contour))
}
