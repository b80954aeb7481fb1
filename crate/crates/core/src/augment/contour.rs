//! Control-signal augmentations: additive F0/confidence noise, batch and
//! streaming.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::F0NoiseParams;
use crate::error::{Error, Result};
use crate::pitch::{
    centered_moving_average, semitone_ratio, smooth_contour, smoothing_frames, F0Contour,
    F0_MAX_HZ, F0_MIN_HZ,
};

/// Per-frame noise source. Each frame draws the F0 term first, then the
/// confidence term, so batch and streaming consumers stay in lockstep.
struct FrameNoise {
    f0: Normal<f64>,
    conf: Normal<f64>,
}

impl FrameNoise {
    fn new(params: &F0NoiseParams) -> Self {
        Self {
            f0: Normal::new(0.0, params.f0_variance.sqrt()).expect("validated variance"),
            conf: Normal::new(0.0, params.conf_variance.sqrt()).expect("validated variance"),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let x = self.f0.sample(rng);
        let y = self.conf.sample(rng);
        (x, y)
    }
}

fn apply_noise(f0: f64, conf: f64, semitones: f64, y: f64) -> (f64, f64) {
    (
        (f0 * semitone_ratio(semitones)).clamp(F0_MIN_HZ, F0_MAX_HZ),
        (conf + y).clamp(0.0, 1.0),
    )
}

/// Adds i.i.d. semitone noise to every F0 value and Gaussian noise to every
/// confidence value.
pub fn perturb_f0(contour: &F0Contour, params: &F0NoiseParams, rng: &mut ChaCha8Rng) -> F0Contour {
    let noise = FrameNoise::new(params);
    let (f0, conf) = contour
        .f0_hz()
        .iter()
        .zip(contour.confidence())
        .map(|(&f, &c)| {
            let (x, y) = noise.draw(rng);
            apply_noise(f, c, x, y)
        })
        .unzip();
    F0Contour::from_parts(f0, conf)
}

/// Draws the smoothing window `S` in milliseconds.
pub fn sample_smoothing_window(params: &F0NoiseParams, rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(params.smooth_window_low_ms..=params.smooth_window_high_ms)
}

/// Smooths the contour with a random window, then adds noise that was itself
/// smoothed with a shorter window.
pub fn perturb_f0_smoothed(
    contour: &F0Contour,
    params: &F0NoiseParams,
    rng: &mut ChaCha8Rng,
) -> F0Contour {
    let window_ms = sample_smoothing_window(params, rng);
    perturb_f0_smoothed_with_window(contour, params, window_ms, rng)
}

/// [`perturb_f0_smoothed`] with the window already drawn.
pub fn perturb_f0_smoothed_with_window(
    contour: &F0Contour,
    params: &F0NoiseParams,
    window_ms: f64,
    rng: &mut ChaCha8Rng,
) -> F0Contour {
    let base = smooth_contour(contour, window_ms).expect("window is positive");
    let noise = FrameNoise::new(params);
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..contour.len()).map(|_| noise.draw(rng)).unzip();
    let noise_width = smoothing_frames(window_ms / params.noise_smooth_divisor);
    let xs = centered_moving_average(&xs, noise_width);
    let (f0, conf) = base
        .f0_hz()
        .iter()
        .zip(base.confidence())
        .zip(xs.iter().zip(&ys))
        .map(|((&f, &c), (&x, &y))| apply_noise(f, c, x, y))
        .unzip();
    F0Contour::from_parts(f0, conf)
}

/// Which online augmentation a stream applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamMode {
    NoisyF0,
    /// Causal variant of the smoothed scheme: trailing windows only.
    NoisyF0Smoothed,
}

#[derive(Debug, Clone)]
struct Causal {
    width: usize,
    buf: VecDeque<f64>,
}

impl Causal {
    fn new(width: usize) -> Self {
        Self {
            width,
            buf: VecDeque::with_capacity(width),
        }
    }

    fn push(&mut self, v: f64) -> f64 {
        if self.buf.len() == self.width {
            self.buf.pop_front();
        }
        self.buf.push_back(v);
        self.buf.iter().sum::<f64>() / self.buf.len() as f64
    }
}

#[derive(Debug, Clone)]
struct StreamInner {
    rng: ChaCha8Rng,
    f0: Normal<f64>,
    conf: Normal<f64>,
    smoothing: Option<(Causal, Causal)>,
    window_ms: Option<f64>,
}

/// Frame-by-frame state for the online schemes. A default-constructed state
/// is uninitialized and refuses to process frames.
#[derive(Debug, Clone, Default)]
pub struct F0Stream {
    inner: Option<StreamInner>,
}

impl F0Stream {
    pub fn new(mode: StreamMode, params: &F0NoiseParams, mut rng: ChaCha8Rng) -> Result<Self> {
        params.validate()?;
        let (smoothing, window_ms) = match mode {
            StreamMode::NoisyF0 => (None, None),
            StreamMode::NoisyF0Smoothed => {
                let s = sample_smoothing_window(params, &mut rng);
                let base = Causal::new(smoothing_frames(s));
                let noise = Causal::new(smoothing_frames(s / params.noise_smooth_divisor));
                (Some((base, noise)), Some(s))
            }
        };
        let noise = FrameNoise::new(params);
        Ok(Self {
            inner: Some(StreamInner {
                rng,
                f0: noise.f0,
                conf: noise.conf,
                smoothing,
                window_ms,
            }),
        })
    }

    /// The smoothing window drawn at construction, for the smoothed mode.
    pub fn window_ms(&self) -> Option<f64> {
        self.inner.as_ref().and_then(|s| s.window_ms)
    }

    pub fn process(&mut self, f0_hz: f64, confidence: f64) -> Result<(f64, f64)> {
        let state = self.inner.as_mut().ok_or(Error::UninitializedState)?;
        let x = state.f0.sample(&mut state.rng);
        let y = state.conf.sample(&mut state.rng);
        Ok(match &mut state.smoothing {
            None => apply_noise(f0_hz, confidence, x, y),
            Some((base, noise)) => {
                let f = base.push(f0_hz.ln()).exp();
                apply_noise(f, confidence, noise.push(x), y)
            }
        })
    }
}

/// Functional form of [`F0Stream::process`].
pub fn stream_perturb_f0(
    frame_f0: f64,
    frame_conf: f64,
    mut state: F0Stream,
) -> Result<(f64, f64, F0Stream)> {
    let (f, c) = state.process(frame_f0, frame_conf)?;
    Ok((f, c, state))
}
