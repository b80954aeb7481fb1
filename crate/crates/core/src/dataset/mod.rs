//! Dataset manifests, duration subsets, noise corpora and offline
//! materialization of augmented datasets.

mod materialize;
mod noise;

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use materialize::{materialize, output_stem, SPEC_FILE};
pub use noise::{load_noise_bank, pick_noise_segment, NoiseBank, NoisePick, NoiseSegmentInfo};

use crate::audio::wav_info;
use crate::error::{Error, Result};

/// Tolerance on `total_duration_s` against the sum of entry durations.
const TOTAL_TOLERANCE_S: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub duration_s: f64,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub total_duration_s: f64,
}

impl DatasetManifest {
    /// Builds a manifest from entries, computing the total.
    pub fn from_entries(entries: Vec<ManifestEntry>) -> Result<Self> {
        let total_duration_s = entries.iter().map(|e| e.duration_s).sum();
        let m = Self {
            entries,
            total_duration_s,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::InvalidParams(format!("duplicate manifest id {:?}", e.id)));
            }
            if !(e.duration_s.is_finite() && e.duration_s >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "entry {:?} has invalid duration {}",
                    e.id, e.duration_s
                )));
            }
        }
        let sum: f64 = self.entries.iter().map(|e| e.duration_s).sum();
        if (sum - self.total_duration_s).abs() > TOTAL_TOLERANCE_S {
            return Err(Error::InvalidParams(format!(
                "total_duration_s {} disagrees with entry sum {sum}",
                self.total_duration_s
            )));
        }
        Ok(())
    }

    pub fn train(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.split == Split::Train)
    }

    pub fn validation(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.split == Split::Validation)
    }

    pub fn train_duration_s(&self) -> f64 {
        self.train().map(|e| e.duration_s).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    /// Loads a manifest; relative entry paths are resolved against the
    /// manifest's own directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m: Self = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for e in &mut m.entries {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
        }
        m.validate()?;
        Ok(m)
    }
}

fn is_wav(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

/// WAV files directly inside `dir`, in lexicographic order.
pub(crate) fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if is_wav(&path) {
            files.push(path);
        }
    }
    if files.is_empty() {
        return Err(Error::EmptyDirectory(dir.to_path_buf()));
    }
    files.sort();
    Ok(files)
}

pub const MAX_VALIDATION_FRACTION: f64 = 0.5;
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.05;

/// Indexes the WAV files in `root`. The last `ceil(fraction * N)` files in
/// name order form the validation split.
pub fn build_manifest(root: impl AsRef<Path>, validation_fraction: f64) -> Result<DatasetManifest> {
    if !(0.0..=MAX_VALIDATION_FRACTION).contains(&validation_fraction) {
        return Err(Error::InvalidParams(format!(
            "validation fraction {validation_fraction} outside [0, {MAX_VALIDATION_FRACTION}]"
        )));
    }
    let root = root.as_ref();
    let root = root.canonicalize().map_err(|e| Error::io(root, e))?;
    let files = list_wavs(&root)?;
    let n = files.len();
    // guard against 0.1 * 10 landing a hair above 1
    let n_val = ((validation_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut entries = Vec::with_capacity(n);
    for (i, path) in files.into_iter().enumerate() {
        let info = wav_info(&path).map_err(|e| Error::UnreadableFile {
            path: path.clone(),
            reason: e.to_string(),
        })?;
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::UnreadableFile {
                path: path.clone(),
                reason: "file name is not valid UTF-8".into(),
            })?
            .to_string();
        entries.push(ManifestEntry {
            id,
            path,
            duration_s: info.duration_seconds(),
            split: if i >= n - n_val { Split::Validation } else { Split::Train },
        });
    }
    DatasetManifest::from_entries(entries)
}

/// How much training audio a subset should hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsetTarget {
    Minutes(f64),
    All,
}

impl std::str::FromStr for SubsetTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(SubsetTarget::All);
        }
        match s.parse::<f64>() {
            Ok(m) if m.is_finite() && m >= 0.0 => Ok(SubsetTarget::Minutes(m)),
            _ => Err(Error::Parse {
                what: "duration target",
                reason: format!("expected minutes or \"all\", got {s:?}"),
            }),
        }
    }
}

/// Takes training entries in manifest order until their duration reaches the
/// target. Validation entries are always kept.
pub fn subset_by_duration(manifest: &DatasetManifest, target: SubsetTarget) -> Result<DatasetManifest> {
    let target_s = match target {
        SubsetTarget::All => return Ok(manifest.clone()),
        SubsetTarget::Minutes(m) => m * 60.0,
    };
    let available = manifest.train_duration_s();
    if target_s > available {
        return Err(Error::TargetExceedsTotal {
            target_s,
            total_s: available,
        });
    }
    let mut acc = 0.0;
    let entries = manifest
        .entries
        .iter()
        .filter(|e| {
            if e.split == Split::Validation {
                return true;
            }
            if acc >= target_s {
                return false;
            }
            acc += e.duration_s;
            true
        })
        .cloned()
        .collect();
    DatasetManifest::from_entries(entries)
}
