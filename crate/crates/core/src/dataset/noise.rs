use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::list_wavs;
use crate::audio::{read_wav, resample, tile_with_crossfade, AudioBuffer, WORKING_RATE};
use crate::augment::NOISE_CROSSFADE_S;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSegmentInfo {
    pub path: PathBuf,
    pub duration_s: f64,
}

/// Noise recordings held in memory at the working rate.
#[derive(Debug, Clone)]
pub struct NoiseBank {
    segments: Vec<NoiseSegmentInfo>,
    audio: Vec<AudioBuffer>,
}

/// Where a noise segment came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoisePick {
    pub index: usize,
    pub offset: usize,
}

impl NoiseBank {
    /// Loads every WAV in `dir` (sorted by name), resampling to 24 kHz.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let files = list_wavs(dir.as_ref())?;
        let mut segments = Vec::with_capacity(files.len());
        let mut audio = Vec::with_capacity(files.len());
        for path in files {
            let buf = read_wav(&path).map_err(|e| Error::UnreadableFile {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            let buf = resample(&buf, WORKING_RATE)?;
            if buf.is_empty() {
                return Err(Error::UnreadableFile {
                    path,
                    reason: "no samples".into(),
                });
            }
            segments.push(NoiseSegmentInfo {
                path,
                duration_s: buf.duration_seconds(),
            });
            audio.push(buf);
        }
        Ok(Self { segments, audio })
    }

    /// Builds a bank from in-memory buffers; paths are synthetic labels.
    pub fn from_buffers(buffers: Vec<AudioBuffer>) -> Result<Self> {
        if buffers.is_empty() {
            return Err(Error::EmptyDirectory(PathBuf::from("<memory>")));
        }
        let audio = buffers
            .into_iter()
            .map(|b| resample(&b, WORKING_RATE))
            .collect::<Result<Vec<_>>>()?;
        if audio.iter().any(AudioBuffer::is_empty) {
            return Err(Error::EmptyAudio);
        }
        let segments = audio
            .iter()
            .enumerate()
            .map(|(i, b)| NoiseSegmentInfo {
                path: PathBuf::from(format!("<memory:{i}>")),
                duration_s: b.duration_seconds(),
            })
            .collect();
        Ok(Self { segments, audio })
    }

    pub fn segments(&self) -> &[NoiseSegmentInfo] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.audio.len()
    }

    pub fn is_empty(&self) -> bool {
        self.audio.is_empty()
    }

    pub fn total_duration_s(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    pub fn audio(&self, index: usize) -> &AudioBuffer {
        &self.audio[index]
    }

    /// Uniform file choice, then uniform start offset among the positions
    /// that leave `needed` samples. Files shorter than `needed` start at 0.
    pub fn draw_pick(&self, needed: usize, rng: &mut ChaCha8Rng) -> NoisePick {
        let index = rng.gen_range(0..self.audio.len());
        let len = self.audio[index].len();
        let offset = if len > needed {
            rng.gen_range(0..=len - needed)
        } else {
            0
        };
        NoisePick { index, offset }
    }

    /// Materializes a pick as exactly `needed` samples, tiling short files.
    pub fn segment(&self, pick: NoisePick, needed: usize) -> AudioBuffer {
        let src = &self.audio[pick.index];
        let samples = if src.len() >= pick.offset + needed {
            src.samples()[pick.offset..pick.offset + needed].to_vec()
        } else {
            let xf = (NOISE_CROSSFADE_S * WORKING_RATE as f64).round() as usize;
            tile_with_crossfade(&src.samples()[pick.offset..], needed, xf).0
        };
        AudioBuffer::new(samples, WORKING_RATE)
    }
}

pub fn load_noise_bank(dir: impl AsRef<Path>) -> Result<NoiseBank> {
    NoiseBank::load(dir)
}

/// Random noise excerpt of exactly `needed_s` seconds at the working rate.
pub fn pick_noise_segment(bank: &NoiseBank, needed_s: f64, rng: &mut ChaCha8Rng) -> AudioBuffer {
    let needed = (needed_s * WORKING_RATE as f64).round() as usize;
    let pick = bank.draw_pick(needed, rng);
    bank.segment(pick, needed)
}
