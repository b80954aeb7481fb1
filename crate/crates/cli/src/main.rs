use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use vcaug::audio::{read_wav, resample, AudioBuffer, WORKING_RATE};
use vcaug::augment::{AugmentationSpec, Scheme};
use vcaug::bench::{latency_budget, measure_rtf, ConvStackSpec, SchemeWorkload};
use vcaug::dataset::{
    build_manifest, load_noise_bank, materialize, subset_by_duration, DatasetManifest,
    SubsetTarget, DEFAULT_VALIDATION_FRACTION,
};
use vcaug::features::mel_spectrogram;
use vcaug::pitch::estimate_f0;

/// Speech data augmentation for voice-conversion training.
#[derive(Debug, Parser)]
#[command(name = "vcaug", version)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for file processing.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    jobs: u32,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build or subset dataset manifests.
    #[command(subcommand)]
    Manifest(ManifestCommand),
    /// Materialize an augmented copy of a dataset.
    Augment(AugmentArgs),
    /// F0 contour extraction.
    #[command(subcommand)]
    F0(F0Command),
    /// Write a log-mel spectrogram as raw f32 with a JSON sidecar.
    Mel {
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Latency and throughput checks.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Debug, Subcommand)]
enum ManifestCommand {
    /// Index the WAV files of a directory.
    Build {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_VALIDATION_FRACTION)]
        val_fraction: f64,
    },
    /// Keep the first training entries that reach a duration target.
    Subset {
        manifest: PathBuf,
        /// Minutes of training audio, or "all".
        #[arg(long)]
        minutes: SubsetTarget,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct AugmentArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// noisy, noisyf0, noisyf0-sm, sox, votrans, noisyf0-vt or noisyf0-vt-sox
    #[arg(long)]
    scheme: Scheme,
    #[arg(long)]
    out: PathBuf,
    /// Directory of noise recordings (required by noisy).
    #[arg(long)]
    noise_dir: Option<PathBuf>,
    /// Copies per training file; defaults depend on the scheme.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    copies: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum F0Command {
    /// Write the F0 contour of a WAV file as CSV.
    Extract {
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Receptive field and algorithmic latency of a convolution stack.
    Latency {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Real-time factor of F0 analysis plus one scheme.
    Rtf {
        #[arg(long)]
        scheme: Scheme,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long)]
        noise_dir: Option<PathBuf>,
    },
}

fn load_working(path: &Path) -> Result<AudioBuffer> {
    let audio = read_wav(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(resample(&audio, WORKING_RATE)?)
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Manifest(ManifestCommand::Build {
            dir,
            out,
            val_fraction,
        }) => {
            let m = build_manifest(&dir, val_fraction)?;
            m.save(&out)?;
            log::info!(
                "{} entries ({} validation), {:.1} s",
                m.entries.len(),
                m.validation().count(),
                m.total_duration_s
            );
        }
        Command::Manifest(ManifestCommand::Subset {
            manifest,
            minutes,
            out,
        }) => {
            let m = DatasetManifest::load(&manifest)?;
            let s = subset_by_duration(&m, minutes)?;
            s.save(&out)?;
            log::info!(
                "kept {} training entries, {:.1} s",
                s.train().count(),
                s.train_duration_s()
            );
        }
        Command::Augment(args) => {
            let manifest = DatasetManifest::load(&args.manifest)?;
            let mut spec = AugmentationSpec::new(args.scheme, cli.seed);
            if let Some(c) = args.copies {
                spec = spec.with_copies(c);
            }
            let out = materialize(
                &manifest,
                &spec,
                args.noise_dir.as_deref(),
                &args.out,
                cli.jobs as usize,
            )?;
            log::info!(
                "wrote {} entries to {}",
                out.entries.len(),
                args.out.display()
            );
        }
        Command::F0(F0Command::Extract { wav, out }) => {
            let contour = estimate_f0(&load_working(&wav)?)?;
            contour.write_csv(&out)?;
        }
        Command::Mel { wav, out } => {
            mel_spectrogram(&load_working(&wav)?)?.export(&out)?;
        }
        Command::Bench(BenchCommand::Latency { spec }) => {
            let text = std::fs::read_to_string(&spec)
                .with_context(|| format!("reading {}", spec.display()))?;
            print_json(&latency_budget(&ConvStackSpec::from_json(&text)?)?)?;
        }
        Command::Bench(BenchCommand::Rtf {
            scheme,
            input,
            repeats,
            noise_dir,
        }) => {
            let audio = load_working(&input)?;
            let bank = noise_dir.map(load_noise_bank).transpose()?;
            let mut workload = SchemeWorkload::new(scheme, cli.seed, bank)?;
            let report = measure_rtf(&mut workload, &audio, repeats)?;
            if !report.passed {
                log::warn!("RTF {:.2} is below {}", report.rtf, report.threshold);
            }
            print_json(&report)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}
