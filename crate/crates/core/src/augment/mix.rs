use crate::audio::{rms, tile_with_crossfade, AudioBuffer};
use crate::error::{Error, Result};

/// Crossfade used when a noise clip has to be repeated, in seconds.
pub const NOISE_CROSSFADE_S: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct MixOutput {
    pub audio: AudioBuffer,
    /// Gain applied to the noise segment before summation.
    pub noise_gain: f64,
    /// Gain applied to the whole mixture to avoid overload (1.0 if none).
    pub normalization_gain: f64,
}

/// Gain that puts `noise_rms` at `snr_db` below `clean_rms`.
pub fn noise_gain_for_snr(clean_rms: f64, noise_rms: f64, snr_db: f64) -> f64 {
    clean_rms / (noise_rms * 10f64.powf(snr_db / 20.0))
}

/// `20 log10(rms(signal) / rms(noise))`.
pub fn snr_db(signal: &[f64], noise: &[f64]) -> Result<f64> {
    Ok(20.0 * (rms(signal)? / rms(noise)?).log10())
}

/// Adds `noise` to `clean` at the requested SNR. Noise longer than the clean
/// signal is truncated; shorter noise is tiled with an equal-power crossfade.
pub fn mix_at_snr(clean: &AudioBuffer, noise: &AudioBuffer, snr_db: f64) -> Result<MixOutput> {
    if clean.sample_rate() != noise.sample_rate() {
        return Err(Error::SampleRateMismatch(
            clean.sample_rate(),
            noise.sample_rate(),
        ));
    }
    if clean.is_empty() || noise.is_empty() {
        return Err(Error::SilentInput);
    }
    let segment: Vec<f64> = if noise.len() >= clean.len() {
        noise.samples()[..clean.len()].to_vec()
    } else {
        let xf = (NOISE_CROSSFADE_S * noise.sample_rate() as f64).round() as usize;
        tile_with_crossfade(noise.samples(), clean.len(), xf).0
    };
    let clean_rms = rms(clean.samples())?;
    let noise_rms = rms(&segment)?;
    if clean_rms == 0.0 || noise_rms == 0.0 {
        return Err(Error::SilentInput);
    }
    let noise_gain = noise_gain_for_snr(clean_rms, noise_rms, snr_db);
    let mixed = clean
        .samples()
        .iter()
        .zip(&segment)
        .map(|(c, n)| c + noise_gain * n)
        .collect();
    let mut audio = AudioBuffer::new(mixed, clean.sample_rate());
    let normalization_gain = audio.normalize_overload();
    Ok(MixOutput {
        audio,
        noise_gain,
        normalization_gain,
    })
}
