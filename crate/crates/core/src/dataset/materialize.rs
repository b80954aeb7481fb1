use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{DatasetManifest, ManifestEntry, NoiseBank, Split};
use crate::audio::{read_wav, resample, write_wav, WORKING_RATE};
use crate::augment::{apply_scheme, AugmentationSpec, Scheme};
use crate::error::{Error, Result};
use crate::pitch::estimate_f0;

/// Name of the file recording the spec a directory was generated with.
pub const SPEC_FILE: &str = "augmentation.json";
const MANIFEST_FILE: &str = "manifest.json";

/// File stem shared by an output's WAV, contour and provenance sidecar.
pub fn output_stem(id: &str, scheme: Scheme, copy: u32) -> String {
    format!("{id}__{}__{copy}", scheme.slug())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn process_train(
    entry: &ManifestEntry,
    spec: &AugmentationSpec,
    bank: Option<&NoiseBank>,
    out_dir: &Path,
) -> Result<Vec<ManifestEntry>> {
    let audio = resample(&read_wav(&entry.path)?, WORKING_RATE)?;
    let contour = estimate_f0(&audio)?;
    (0..spec.copies_per_input)
        .into_par_iter()
        .map(|copy| {
            let out = apply_scheme(&audio, &contour, bank, spec, &entry.id, copy)?;
            let stem = output_stem(&entry.id, spec.scheme, copy);
            out.contour.write_csv(out_dir.join(format!("{stem}.f0.csv")))?;
            write_json(&out_dir.join(format!("{stem}.json")), &out.provenance)?;
            let path = if spec.scheme.is_controls_only() {
                entry.path.clone()
            } else {
                let name = PathBuf::from(format!("{stem}.wav"));
                write_wav(&out.audio, out_dir.join(&name))?;
                name
            };
            Ok(ManifestEntry {
                id: stem,
                path,
                duration_s: out.audio.duration_seconds(),
                split: Split::Train,
            })
        })
        .collect()
}

fn copy_validation(entry: &ManifestEntry, out_dir: &Path) -> Result<ManifestEntry> {
    let name = PathBuf::from(format!("{}.wav", entry.id));
    let dest = out_dir.join(&name);
    fs::copy(&entry.path, &dest).map_err(|e| Error::io(&entry.path, e))?;
    Ok(ManifestEntry {
        path: name,
        ..entry.clone()
    })
}

fn run(
    manifest: &DatasetManifest,
    spec: &AugmentationSpec,
    bank: Option<&NoiseBank>,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    write_json(&out_dir.join(SPEC_FILE), spec)?;
    let groups: Vec<Vec<ManifestEntry>> = manifest
        .entries
        .par_iter()
        .map(|e| match e.split {
            Split::Train => {
                log::debug!("augmenting {}", e.id);
                process_train(e, spec, bank, out_dir)
            }
            Split::Validation => copy_validation(e, out_dir).map(|e| vec![e]),
        })
        .collect::<Result<_>>()?;
    let out = DatasetManifest::from_entries(groups.into_iter().flatten().collect())?;
    out.save(out_dir.join(MANIFEST_FILE))?;
    Ok(out)
}

fn prepare_out_dir(out_dir: &Path) -> Result<bool> {
    if out_dir.exists() {
        let mut it = fs::read_dir(out_dir).map_err(|e| Error::io(out_dir, e))?;
        if it.next().is_some() {
            return Err(Error::InvalidParams(format!(
                "output directory {} is not empty",
                out_dir.display()
            )));
        }
        Ok(false)
    } else {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        Ok(true)
    }
}

/// Augments every training entry `spec.copies_per_input` times into
/// `out_dir` and copies validation entries untouched. Output paths in the
/// returned manifest (and the `manifest.json` written last) are relative to
/// `out_dir`, except controls-only outputs, which point at the source audio.
///
/// `out_dir` must be absent or empty; on failure it is left as found.
pub fn materialize(
    manifest: &DatasetManifest,
    spec: &AugmentationSpec,
    noise_dir: Option<&Path>,
    out_dir: &Path,
    jobs: usize,
) -> Result<DatasetManifest> {
    spec.validate()?;
    let bank = match (spec.scheme.needs_noise(), noise_dir) {
        (true, Some(dir)) => Some(NoiseBank::load(dir)?),
        (true, None) => return Err(Error::MissingNoiseBank(spec.scheme.label())),
        (false, Some(_)) => {
            log::warn!("scheme {} ignores the noise directory", spec.scheme);
            None
        }
        (false, None) => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))?;
    let created = prepare_out_dir(out_dir)?;
    let result = pool.install(|| run(manifest, spec, bank.as_ref(), out_dir));
    if result.is_err() {
        let cleanup = if created {
            fs::remove_dir_all(out_dir)
        } else {
            fs::read_dir(out_dir).and_then(|entries| {
                entries.into_iter().try_for_each(|e| fs::remove_file(e?.path()))
            })
        };
        if let Err(e) = cleanup {
            log::warn!("could not clean up {}: {e}", out_dir.display());
        }
    }
    result
}
