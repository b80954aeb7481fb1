//! Streaming-constraint checks: latency accounting for dilated convolution
//! stacks and real-time-factor measurement of augmentation chains.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::audio::{AudioBuffer, WORKING_RATE};
use crate::augment::{apply_scheme, AugmentationSpec, Scheme};
use crate::dataset::NoiseBank;
use crate::error::{Error, Result};
use crate::pitch::{estimate_f0, HOP_MS, WINDOW_MS};
use crate::synth;

pub const LATENCY_BUDGET_MS: f64 = 90.0;
pub const RTF_THRESHOLD: f64 = 3.0;
pub const MIN_REPEATS: usize = 3;
pub const MIN_BENCH_SECONDS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub kernel: usize,
    pub dilation: usize,
    #[serde(default)]
    pub causal: bool,
}

fn default_hop() -> f64 {
    HOP_MS
}

fn default_window() -> f64 {
    WINDOW_MS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvStackSpec {
    pub layers: Vec<ConvLayer>,
    #[serde(default = "default_hop")]
    pub hop_ms: f64,
    #[serde(default = "default_window")]
    pub window_ms: f64,
}

impl ConvStackSpec {
    pub fn new(layers: Vec<ConvLayer>) -> Self {
        Self {
            layers,
            hop_ms: HOP_MS,
            window_ms: WINDOW_MS,
        }
    }

    /// Nine non-causal kernel-3 layers whose receptive field spans 125 ms.
    pub fn reference() -> Self {
        Self::new(
            [1, 1, 1, 1, 2, 2, 2, 1, 1]
                .into_iter()
                .map(|dilation| ConvLayer {
                    kernel: 3,
                    dilation,
                    causal: false,
                })
                .collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidParams("stack has no layers".into()));
        }
        if let Some(l) = self.layers.iter().find(|l| l.kernel == 0 || l.dilation == 0) {
            return Err(Error::InvalidParams(format!(
                "kernel and dilation must be >= 1, got {l:?}"
            )));
        }
        if !(self.hop_ms > 0.0 && self.window_ms >= self.hop_ms) {
            return Err(Error::InvalidParams(format!(
                "need 0 < hop_ms <= window_ms, got hop {} window {}",
                self.hop_ms, self.window_ms
            )));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }
}

/// Frames of input that influence one output frame.
pub fn receptive_field(spec: &ConvStackSpec) -> usize {
    1 + spec
        .layers
        .iter()
        .map(|l| (l.kernel - 1) * l.dilation)
        .sum::<usize>()
}

/// Future frames one output frame waits for.
pub fn lookahead_frames(spec: &ConvStackSpec) -> usize {
    spec.layers
        .iter()
        .filter(|l| !l.causal)
        .map(|l| (l.kernel - 1) / 2 * l.dilation)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub receptive_field_frames: usize,
    pub receptive_field_ms: f64,
    pub lookahead_ms: f64,
    pub algorithmic_latency_ms: f64,
    pub within_budget: bool,
}

/// Algorithmic latency: network lookahead, plus the analysis window's
/// reach past its centre, plus one hop of output buffering.
pub fn latency_budget(spec: &ConvStackSpec) -> Result<LatencyReport> {
    spec.validate()?;
    let rf = receptive_field(spec);
    let lookahead_ms = lookahead_frames(spec) as f64 * spec.hop_ms;
    let latency = lookahead_ms + (spec.window_ms - spec.hop_ms) / 2.0 + spec.hop_ms;
    Ok(LatencyReport {
        receptive_field_frames: rf,
        receptive_field_ms: rf as f64 * spec.hop_ms,
        lookahead_ms,
        algorithmic_latency_ms: latency,
        within_budget: latency < LATENCY_BUDGET_MS,
    })
}

/// Something whose throughput can be measured against audio duration.
pub trait Workload {
    fn name(&self) -> String;
    fn run(&mut self, audio: &AudioBuffer) -> Result<()>;
}

/// Wraps a closure as a [`Workload`].
pub struct FnWorkload<F> {
    name: String,
    f: F,
}

impl<F: FnMut(&AudioBuffer) -> Result<()>> FnWorkload<F> {
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self {
            name: name.into(),
            f,
        }
    }
}

impl<F: FnMut(&AudioBuffer) -> Result<()>> Workload for FnWorkload<F> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn run(&mut self, audio: &AudioBuffer) -> Result<()> {
        (self.f)(audio)
    }
}

/// F0 analysis followed by one augmentation scheme: what an offline
/// augmentation pass does per file.
pub struct SchemeWorkload {
    spec: AugmentationSpec,
    bank: Option<NoiseBank>,
    copy: u32,
}

impl SchemeWorkload {
    /// Uses `bank` when given; noise-mixing schemes otherwise get a seeded
    /// synthetic noise bank.
    pub fn new(scheme: Scheme, seed: u64, bank: Option<NoiseBank>) -> Result<Self> {
        let bank = match (scheme.needs_noise(), bank) {
            (true, None) => Some(NoiseBank::from_buffers(vec![synth::white_noise(
                30.0,
                0.1,
                seed,
                WORKING_RATE,
            )])?),
            (_, b) => b,
        };
        Ok(Self {
            spec: AugmentationSpec::new(scheme, seed),
            bank,
            copy: 0,
        })
    }
}

impl Workload for SchemeWorkload {
    fn name(&self) -> String {
        self.spec.scheme.label().to_string()
    }

    fn run(&mut self, audio: &AudioBuffer) -> Result<()> {
        let contour = estimate_f0(audio)?;
        apply_scheme(audio, &contour, self.bank.as_ref(), &self.spec, "bench", self.copy)?;
        // a fresh draw each repeat, as in a real augmentation pass
        self.copy += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtfReport {
    pub workload: String,
    pub audio_seconds: f64,
    pub repeats: usize,
    pub wall_seconds: Vec<f64>,
    pub median_wall_seconds: f64,
    pub rtf: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Real-time factor: audio seconds processed per wall-clock second, from the
/// median of `repeats` single-threaded runs.
pub fn measure_rtf(
    workload: &mut dyn Workload,
    audio: &AudioBuffer,
    repeats: usize,
) -> Result<RtfReport> {
    if repeats < MIN_REPEATS {
        return Err(Error::InvalidParams(format!(
            "need at least {MIN_REPEATS} repeats, got {repeats}"
        )));
    }
    let audio_seconds = audio.duration_seconds();
    if audio_seconds < MIN_BENCH_SECONDS {
        return Err(Error::TooShort {
            got: audio.len(),
            needed: (MIN_BENCH_SECONDS * audio.sample_rate() as f64) as usize,
        });
    }
    let name = workload.name();
    // timed on the calling thread; nothing here fans out to other threads
    let wall_seconds = (0..repeats)
        .map(|_| {
            let start = Instant::now();
            workload
                .run(audio)
                .map_err(|e| Error::WorkloadFailure(format!("{name}: {e}")))?;
            Ok(start.elapsed().as_secs_f64())
        })
        .collect::<Result<Vec<_>>>()?;
    let med = median(wall_seconds.clone()).max(Duration::from_nanos(1).as_secs_f64());
    let rtf = audio_seconds / med;
    Ok(RtfReport {
        workload: name,
        audio_seconds,
        repeats,
        wall_seconds,
        median_wall_seconds: med,
        rtf,
        threshold: RTF_THRESHOLD,
        passed: rtf >= RTF_THRESHOLD,
    })
}
