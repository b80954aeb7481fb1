//! Deterministic test-signal generators.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::audio::AudioBuffer;

/// Formant frequencies and bandwidths (Hz) of the reference /a/-like vowel.
pub const VOWEL_FORMANTS: [(f64, f64); 3] = [(700.0, 130.0), (1220.0, 150.0), (2600.0, 200.0)];

pub fn sine(freq_hz: f64, seconds: f64, amplitude: f64, sample_rate: u32) -> AudioBuffer {
    let n = (seconds * sample_rate as f64).round() as usize;
    let sr = sample_rate as f64;
    AudioBuffer::new(
        (0..n)
            .map(|i| amplitude * (2.0 * PI * freq_hz * i as f64 / sr).sin())
            .collect(),
        sample_rate,
    )
}

/// Linear chirp from `start_hz` to `end_hz`.
pub fn chirp(start_hz: f64, end_hz: f64, seconds: f64, amplitude: f64, sample_rate: u32) -> AudioBuffer {
    let n = (seconds * sample_rate as f64).round() as usize;
    let sr = sample_rate as f64;
    let rate = (end_hz - start_hz) / seconds;
    AudioBuffer::new(
        (0..n)
            .map(|i| {
                let t = i as f64 / sr;
                amplitude * (2.0 * PI * (start_hz * t + 0.5 * rate * t * t)).sin()
            })
            .collect(),
        sample_rate,
    )
}

pub fn white_noise(seconds: f64, std_dev: f64, seed: u64, sample_rate: u32) -> AudioBuffer {
    let n = (seconds * sample_rate as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std_dev).expect("finite std dev");
    AudioBuffer::new(
        (0..n).map(|_| normal.sample(&mut rng)).collect(),
        sample_rate,
    )
}

/// Two-pole resonator (Klatt form) applied in place.
fn resonate(signal: &mut [f64], freq_hz: f64, bandwidth_hz: f64, sample_rate: f64) {
    let t = 1.0 / sample_rate;
    let c = -(-2.0 * PI * bandwidth_hz * t).exp();
    let b = 2.0 * (-PI * bandwidth_hz * t).exp() * (2.0 * PI * freq_hz * t).cos();
    let a = 1.0 - b - c;
    let (mut y1, mut y2) = (0.0, 0.0);
    for s in signal.iter_mut() {
        let y = a * *s + b * y1 + c * y2;
        y2 = y1;
        y1 = y;
        *s = y;
    }
}

/// Impulse-train source at `f0_hz` shaped by cascaded formant resonators,
/// scaled to the given peak.
pub fn vowel(
    f0_hz: f64,
    formants: &[(f64, f64)],
    seconds: f64,
    peak: f64,
    sample_rate: u32,
) -> AudioBuffer {
    let n = (seconds * sample_rate as f64).round() as usize;
    let sr = sample_rate as f64;
    let period = sr / f0_hz;
    let mut signal = vec![0.0; n];
    let mut next = 0.0;
    while (next as usize) < n {
        signal[next as usize] = 1.0;
        next += period;
    }
    for &(f, bw) in formants {
        resonate(&mut signal, f, bw, sr);
    }
    // remove the resonators' DC pass-through before scaling
    let mean = signal.iter().sum::<f64>() / n.max(1) as f64;
    signal.iter_mut().for_each(|s| *s -= mean);
    let current = signal.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if current > 0.0 {
        signal.iter_mut().for_each(|s| *s *= peak / current);
    }
    AudioBuffer::new(signal, sample_rate)
}

/// The reference three-formant vowel used throughout the tests.
pub fn reference_vowel(f0_hz: f64, seconds: f64, sample_rate: u32) -> AudioBuffer {
    vowel(f0_hz, &VOWEL_FORMANTS, seconds, 0.5, sample_rate)
}

/// Speech-like test signal: vowels with gliding pitch separated by short
/// pauses, cycling through several voices.
pub fn speech_like(seconds: f64, seed: u64, sample_rate: u32) -> AudioBuffer {
    let n = (seconds * sample_rate as f64).round() as usize;
    let sr = sample_rate as f64;
    let vowels: [[(f64, f64); 3]; 3] = [
        VOWEL_FORMANTS,
        [(300.0, 90.0), (2300.0, 150.0), (3000.0, 200.0)],
        [(500.0, 110.0), (900.0, 130.0), (2400.0, 180.0)],
    ];
    let mut noise = white_noise(seconds, 0.002, seed, sample_rate).into_samples();
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    while out.len() < n {
        let voiced_len = (0.35 * sr) as usize;
        let base = 110.0 + 40.0 * ((k as u64 ^ seed) % 4) as f64;
        let mut seg = vec![0.0; voiced_len];
        let mut phase = 0.0;
        for (i, s) in seg.iter_mut().enumerate() {
            let f0 = base * (1.0 + 0.15 * (i as f64 / voiced_len as f64));
            phase += f0 / sr;
            if phase >= 1.0 {
                phase -= 1.0;
                *s = 1.0;
            }
        }
        for &(f, bw) in &vowels[k % 3] {
            resonate(&mut seg, f, bw, sr);
        }
        let peak = seg.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let fade = (0.01 * sr) as usize;
        for (i, s) in seg.iter_mut().enumerate() {
            let edge = i.min(voiced_len - 1 - i);
            let g = if edge < fade { edge as f64 / fade as f64 } else { 1.0 };
            *s *= 0.4 * g / peak;
        }
        out.extend(seg);
        out.extend(std::iter::repeat_n(0.0, (0.08 * sr) as usize));
        k += 1;
    }
    out.truncate(n);
    for (o, z) in out.iter_mut().zip(noise.iter_mut()) {
        *o += *z;
    }
    AudioBuffer::new(out, sample_rate)
}
