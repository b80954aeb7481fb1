//! Measurement helpers shared by unit tests.

use crate::audio::AudioBuffer;
use crate::features::cepstral_envelope;

/// Formant peak frequencies of `audio` near each `expected` value: mean
/// cepstral envelope over 40 three-period frames, nearest local maximum
/// within 25% of the expectation, refined by parabolic interpolation.
pub(crate) fn formant_peaks(audio: &AudioBuffer, f0_hz: f64, expected: &[f64]) -> Vec<f64> {
    let sr = audio.sample_rate();
    let len = (3.0 * sr as f64 / f0_hz).round() as usize;
    let mut mean: Vec<f64> = Vec::new();
    let mut bin_hz = 0.0;
    for k in 0..40 {
        let start = 3000 + 400 * k;
        let env = cepstral_envelope(&audio.samples()[start..start + len], f0_hz, sr).unwrap();
        bin_hz = env.bin_hz();
        if mean.is_empty() {
            mean = vec![0.0; env.log_magnitude.len()];
        }
        for (m, v) in mean.iter_mut().zip(&env.log_magnitude) {
            *m += v / 40.0;
        }
    }
    expected
        .iter()
        .map(|&e| {
            let lo = ((0.75 * e / bin_hz).floor() as usize).max(1);
            let hi = ((1.25 * e / bin_hz).ceil() as usize).min(mean.len() - 2);
            let b = (lo..=hi)
                .filter(|&b| mean[b] > mean[b - 1] && mean[b] >= mean[b + 1])
                .min_by(|&a, &b| {
                    let d = |x: usize| (x as f64 * bin_hz - e).abs();
                    d(a).total_cmp(&d(b))
                })
                .unwrap_or_else(|| panic!("no envelope peak near {e} Hz"));
            let (y0, y1, y2) = (mean[b - 1], mean[b], mean[b + 1]);
            let denom = y0 - 2.0 * y1 + y2;
            let delta = if denom.abs() > 1e-12 { 0.5 * (y0 - y2) / denom } else { 0.0 };
            (b as f64 + delta) * bin_hz
        })
        .collect()
}

/// Largest relative deviation between paired peak lists.
pub(crate) fn max_relative_error(got: &[f64], want: &[f64]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(g, w)| (g / w - 1.0).abs())
        .fold(0.0, f64::max)
}
