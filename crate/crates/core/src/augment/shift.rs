//! Plain pitch shifting: resample, then time-stretch back with WSOLA.
//! Formants move with the pitch.

use crate::audio::{resample_samples, AudioBuffer};
use crate::error::{Error, Result};
use crate::pitch::semitone_ratio;

const SEGMENT_MS: f64 = 30.0;
const OVERLAP_MS: f64 = 10.0;
const SEARCH_MS: f64 = 5.0;

/// Waveform-similarity overlap-add stretch of `input` to `out_len` samples.
pub fn wsola_stretch(input: &[f64], out_len: usize, sample_rate: u32) -> Vec<f64> {
    let ms = |v: f64| (v * sample_rate as f64 / 1000.0).round() as usize;
    let (seg, overlap, tol) = (ms(SEGMENT_MS), ms(OVERLAP_MS), ms(SEARCH_MS));
    let hop = seg - overlap;
    if input.is_empty() || out_len == 0 {
        return vec![0.0; out_len];
    }
    let alpha = input.len() as f64 / out_len as f64;
    // reads beyond the end see silence
    let at = |i: usize| input.get(i).copied().unwrap_or(0.0);
    let max_start = input.len().saturating_sub(seg);

    let mut out = vec![0.0; out_len + seg];
    for (j, slot) in out.iter_mut().enumerate().take(seg) {
        *slot = at(j);
    }
    let mut prev = 0usize;
    let mut k = 1;
    while k * hop < out_len {
        let out_start = k * hop;
        let nominal = (out_start as f64 * alpha).round() as isize;
        let natural = prev + hop;
        let lo = (nominal - tol as isize).clamp(0, max_start as isize) as usize;
        let hi = (nominal + tol as isize).clamp(0, max_start as isize) as usize;
        let target_energy: f64 = (0..overlap).map(|j| at(natural + j).powi(2)).sum();
        let mut best = lo;
        let mut best_score = f64::NEG_INFINITY;
        for cand in lo..=hi {
            let (mut dot, mut energy) = (0.0, 0.0);
            for j in 0..overlap {
                let c = at(cand + j);
                dot += c * at(natural + j);
                energy += c * c;
            }
            let score = dot / (energy * target_energy).sqrt().max(1e-20);
            if score > best_score {
                best_score = score;
                best = cand;
            }
        }
        for j in 0..overlap {
            let w = 0.5 - 0.5 * (std::f64::consts::PI * (j as f64 + 0.5) / overlap as f64).cos();
            out[out_start + j] = out[out_start + j] * (1.0 - w) + at(best + j) * w;
        }
        for j in overlap..seg {
            out[out_start + j] = at(best + j);
        }
        prev = best;
        k += 1;
    }
    out.truncate(out_len);
    out
}

pub const MAX_PLAIN_SHIFT: f64 = 12.0;

/// Shifts pitch and formants together by `semitones`, keeping duration.
pub fn pitch_shift_plain(audio: &AudioBuffer, semitones: f64) -> Result<AudioBuffer> {
    if !(semitones.abs() <= MAX_PLAIN_SHIFT) {
        return Err(Error::InvalidShift(semitones));
    }
    if semitones == 0.0 {
        return Ok(audio.clone());
    }
    let ratio = semitone_ratio(semitones);
    // fewer samples at the same rate plays back `ratio` times higher
    let squeezed_len = (audio.len() as f64 / ratio).round() as usize;
    let squeezed = resample_samples(audio.samples(), 1.0 / ratio, squeezed_len);
    Ok(AudioBuffer::new(
        wsola_stretch(&squeezed, audio.len(), audio.sample_rate()),
        audio.sample_rate(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pitch::estimate_f0;
    use crate::synth;
    use crate::testutil::{formant_peaks, max_relative_error};

    fn median_f0(audio: &AudioBuffer) -> f64 {
        let c = estimate_f0(audio).unwrap();
        let mut f = c.f0_hz()[10..c.len() - 10].to_vec();
        f.sort_by(f64::total_cmp);
        f[f.len() / 2]
    }

    #[test]
    fn zero_shift_is_bypass() {
        let audio = synth::speech_like(0.5, 1, 24000);
        assert_eq!(pitch_shift_plain(&audio, 0.0).unwrap(), audio);
    }

    #[test]
    fn octave_up_on_sine() {
        let audio = synth::sine(220.0, 1.0, 0.5, 24000);
        let out = pitch_shift_plain(&audio, 12.0).unwrap();
        assert_eq!(out.len(), audio.len());
        let f = median_f0(&out);
        assert!((f / 440.0 - 1.0).abs() < 0.01, "{f}");
    }

    #[test]
    fn pitch_ratio_holds_across_shifts() {
        let audio = synth::reference_vowel(150.0, 1.0, 24000);
        let base = median_f0(&audio);
        for p in [-12.0, -6.0, -2.5, 6.0, 12.0] {
            let out = pitch_shift_plain(&audio, p).unwrap();
            let ratio = median_f0(&out) / base;
            assert!(
                (ratio / semitone_ratio(p) - 1.0).abs() < 0.02,
                "p={p} ratio {ratio}"
            );
        }
    }

    #[test]
    fn formants_move_with_pitch() {
        let audio = synth::reference_vowel(150.0, 1.0, 24000);
        let out = pitch_shift_plain(&audio, 6.0).unwrap();
        let scale = semitone_ratio(6.0);
        let f0 = 150.0 * scale;
        let formants: Vec<(f64, f64)> = synth::VOWEL_FORMANTS
            .iter()
            .map(|&(f, bw)| (f * scale, bw * scale))
            .collect();
        let reference = synth::vowel(f0, &formants, 1.0, 0.5, 24000);
        let nominal: Vec<f64> = formants.iter().map(|&(f, _)| f).collect();
        let want = formant_peaks(&reference, f0, &nominal);
        let got = formant_peaks(&out, f0, &want);
        let err = max_relative_error(&got, &want);
        assert!(err < 0.08, "error {err}");
        // and clearly away from the unshifted formants
        let original: Vec<f64> = synth::VOWEL_FORMANTS.iter().map(|&(f, _)| f).collect();
        assert!(max_relative_error(&got, &original) > 0.2);
    }

    #[test]
    fn stretch_hits_requested_length() {
        let x = synth::white_noise(0.4, 0.1, 2, 24000).into_samples();
        for len in [4800, 9600, 19200, 100] {
            assert_eq!(wsola_stretch(&x, len, 24000).len(), len);
        }
    }

    #[test]
    fn shifts_beyond_an_octave_are_rejected() {
        let audio = synth::sine(220.0, 0.1, 0.5, 24000);
        assert!(matches!(
            pitch_shift_plain(&audio, 12.5),
            Err(Error::InvalidShift(_))
        ));
        assert!(pitch_shift_plain(&audio, f64::NAN).is_err());
    }
}
