//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vcaug::audio::{quantize, read_wav, write_wav, AudioBuffer};
use vcaug::augment::{
    mix_at_snr, perturb_f0, pitch_shift_plain, replay, sample_smoothing_window, sample_snr,
    sample_sox_shift, sample_sox_shift_raw, sample_votrans, AugmentationSpec, F0NoiseParams,
    F0Stream, NoiseParams, PitchShiftParams, Provenance, Scheme, StreamMode,
};
use vcaug::bench::{
    latency_budget, lookahead_frames, measure_rtf, receptive_field, ConvLayer, ConvStackSpec,
    SchemeWorkload,
};
use vcaug::dataset::{build_manifest, materialize, DatasetManifest, NoiseBank, Split, SPEC_FILE};
use vcaug::features::{cepstral_envelope, mel_spectrogram};
use vcaug::pitch::{estimate_f0, semitone_ratio, F0Contour};
use vcaug::synth;
use vcaug::votrans::{transform, VoTransParams};

const SR: u32 = 24_000;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_vcaug"));
    c.env("RUST_LOG", "warn");
    c
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = bin().args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "vcaug {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var.sqrt())
}

fn median_f0(audio: &AudioBuffer) -> f64 {
    let c = estimate_f0(audio).unwrap();
    let mut f = c.f0_hz()[20..c.len() - 20].to_vec();
    f.sort_by(f64::total_cmp);
    f[f.len() / 2]
}

/// Formant peaks near `expected`: mean cepstral envelope over 40
/// three-period frames, nearest local maximum within 25%, parabolic refine.
fn formant_peaks(audio: &AudioBuffer, f0: f64, expected: &[f64]) -> Vec<f64> {
    let len = (3.0 * SR as f64 / f0).round() as usize;
    let mut mean = Vec::new();
    let mut bin_hz = 0.0;
    for k in 0..40 {
        let start = 3000 + 400 * k;
        let env = cepstral_envelope(&audio.samples()[start..start + len], f0, SR).unwrap();
        bin_hz = env.bin_hz();
        mean.resize(env.log_magnitude.len(), 0.0);
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
            let den = y0 - 2.0 * y1 + y2;
            let delta = if den.abs() > 1e-12 { 0.5 * (y0 - y2) / den } else { 0.0 };
            (b as f64 + delta) * bin_hz
        })
        .collect()
}

fn max_rel(got: &[f64], want: &[f64]) -> f64 {
    got.iter().zip(want).map(|(g, w)| (g / w - 1.0).abs()).fold(0.0, f64::max)
}

/// Peaks of `out` against the vowel synthesized at `f0` with formant
/// frequencies and bandwidths scaled by `scale`.
fn formant_error(out: &AudioBuffer, f0: f64, scale: f64) -> f64 {
    let formants: Vec<(f64, f64)> = synth::VOWEL_FORMANTS
        .iter()
        .map(|&(f, bw)| (f * scale, bw * scale))
        .collect();
    let reference = synth::vowel(f0, &formants, 1.0, 0.5, SR);
    let nominal: Vec<f64> = formants.iter().map(|&(f, _)| f).collect();
    let want = formant_peaks(&reference, f0, &nominal);
    max_rel(&formant_peaks(out, f0, &want), &want)
}

fn snr_accuracy() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let params = NoiseParams::default();
    let mut worst: f64 = 0.0;
    for i in 0..200u64 {
        let secs = rng.gen_range(0.3..1.0);
        let clean = match i % 3 {
            0 => synth::reference_vowel(rng.gen_range(90.0..300.0), secs, SR),
            1 => synth::speech_like(secs, i, SR),
            _ => synth::sine(rng.gen_range(100.0..1000.0), secs, 0.9, SR),
        };
        // every fourth noise clip is shorter than the clean signal and gets tiled
        let noise_secs = if i % 4 == 0 { secs * 0.4 } else { secs + 0.5 };
        let noise = synth::white_noise(noise_secs, rng.gen_range(0.01..0.5), 1000 + i, SR);
        let snr = sample_snr(&params, &mut rng);
        let out = mix_at_snr(&clean, &noise, snr).map_err(|e| e.to_string())?;
        let noise_part: Vec<f64> = out
            .audio
            .samples()
            .iter()
            .zip(clean.samples())
            .map(|(m, c)| m / out.normalization_gain - c)
            .collect();
        let measured = 20.0 * (rms(clean.samples()) / rms(&noise_part)).log10();
        worst = worst.max((measured - snr).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 0.05, format!("worst SNR error {worst:.2e} dB"))?;
    check(secs < 10.0, format!("took {secs:.1} s"))?;
    Ok(format!("200 mixtures, worst error {worst:.2e} dB, {secs:.2} s"))
}

fn distributions() -> Outcome {
    const N: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let snr: Vec<f64> = (0..N).map(|_| sample_snr(&NoiseParams::default(), &mut rng)).collect();
    let (m, s) = mean_std(&snr);
    check(snr.iter().all(|x| (4.0..=12.0).contains(x)), "SNR outside [4, 12]")?;
    check((m - 8.0).abs() <= 0.05, format!("SNR mean {m:.4}"))?;
    check((s - 8.0 / 12f64.sqrt()).abs() <= 0.05, format!("SNR sd {s:.4}"))?;

    let sp = PitchShiftParams::default();
    let mut a = ChaCha8Rng::seed_from_u64(3);
    let mut b = ChaCha8Rng::seed_from_u64(3);
    let clamped: Vec<f64> = (0..N).map(|_| sample_sox_shift(&sp, &mut a)).collect();
    let raw: Vec<f64> = (0..N).map(|_| sample_sox_shift_raw(&sp, &mut b)).collect();
    check(clamped.iter().all(|x| x.abs() <= 8.0), "SoX shift beyond 8")?;
    let oracle: Vec<f64> = raw.iter().map(|r| r.clamp(-8.0, 8.0)).collect();
    check(clamped == oracle, "SoX shifts differ from clamped raw draws")?;
    let (_, raw_sd) = mean_std(&raw);
    check((raw_sd - 3f64.sqrt()).abs() <= 0.02, format!("SoX raw sd {raw_sd:.4}"))?;

    let vt: Vec<f64> = (0..N).map(|_| sample_votrans(&sp, &mut rng).0).collect();
    let lo = vt.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (vm, _) = mean_std(&vt);
    check((-12.0..=-11.9).contains(&lo) && (11.9..=12.0).contains(&hi), format!("VoTrans range [{lo:.3}, {hi:.3}]"))?;
    check(vm.abs() <= 0.1, format!("VoTrans mean {vm:.4}"))?;

    let fp = F0NoiseParams::default();
    let flat = F0Contour::constant(200.0, 0.5, N).unwrap();
    let noisy = perturb_f0(&flat, &fp, &mut rng);
    let semis: Vec<f64> = noisy.f0_hz().iter().map(|f| 12.0 * (f / 200.0).log2()).collect();
    let (_, f0_sd) = mean_std(&semis);
    check((f0_sd - 0.5).abs() <= 0.01, format!("F0 noise sd {f0_sd:.4}"))?;

    let windows: Vec<f64> = (0..N).map(|_| sample_smoothing_window(&fp, &mut rng)).collect();
    check(windows.iter().all(|w| (100.0..=300.0).contains(w)), "window outside [100, 300]")?;
    Ok(format!(
        "SNR mean {m:.3} sd {s:.3}; SoX raw sd {raw_sd:.3}; VoTrans [{lo:.2}, {hi:.2}] mean {vm:.3}; F0 sd {f0_sd:.4}"
    ))
}

fn pitch_shift() -> Outcome {
    let sine = synth::sine(220.0, 1.0, 0.5, SR);
    let plain = median_f0(&pitch_shift_plain(&sine, 12.0).map_err(|e| e.to_string())?);
    check((plain / 440.0 - 1.0).abs() <= 0.01, format!("plain +12 gives {plain:.2} Hz"))?;

    let octave = |audio: &AudioBuffer, kappa: f64| {
        let c = estimate_f0(audio).unwrap();
        median_f0(&transform(audio, &c, &VoTransParams::new(12.0, kappa).unwrap()).unwrap().audio)
    };
    // a bare sine carries no envelope energy at 440 Hz, so it is shifted with
    // formants following; the harmonic-rich vowel checks the formant-keeping path
    let vt_sine = octave(&sine, 1.0);
    let vowel = synth::reference_vowel(220.0, 1.0, SR);
    let vt_vowel = octave(&vowel, 0.0);
    check((vt_sine / 440.0 - 1.0).abs() <= 0.01, format!("votrans sine {vt_sine:.2} Hz"))?;
    check((vt_vowel / 440.0 - 1.0).abs() <= 0.01, format!("votrans vowel {vt_vowel:.2} Hz"))?;

    check(pitch_shift_plain(&sine, 0.0).unwrap() == sine, "plain p=0 is not identity")?;
    let c = estimate_f0(&vowel).unwrap();
    let same = transform(&vowel, &c, &VoTransParams::new(0.0, 0.5).unwrap()).unwrap().audio;
    let f = median_f0(&same);
    check((f / 220.0 - 1.0).abs() <= 0.01, format!("votrans p=0 gives {f:.2} Hz"))?;
    let dlen = (same.len() as i64 - vowel.len() as i64).abs();
    check(dlen <= 120, format!("votrans p=0 length off by {dlen}"))?;
    Ok(format!(
        "plain {plain:.1} Hz, votrans sine(k=1) {vt_sine:.1} Hz, vowel(k=0) {vt_vowel:.1} Hz, p=0 {f:.1} Hz"
    ))
}

fn formants() -> Outcome {
    let vowel = synth::reference_vowel(150.0, 1.0, SR);
    let contour = estimate_f0(&vowel).unwrap();
    let vt = |p: f64, kappa: f64| {
        transform(&vowel, &contour, &VoTransParams::new(p, kappa).unwrap()).unwrap().audio
    };
    let mut notes = Vec::new();
    for p in [6.0, -6.0] {
        let err = formant_error(&vt(p, 0.0), 150.0 * semitone_ratio(p), 1.0);
        notes.push(format!("k=0 p={p:+} {:.1}%", err * 100.0));
        check(err < 0.05, format!("kappa 0, p {p}: {:.1}%", err * 100.0))?;
    }
    let err = formant_error(&vt(12.0, 1.0), 300.0, 2.0);
    notes.push(format!("k=1 p=+12 {:.1}%", err * 100.0));
    check(err < 0.05, format!("kappa 1, p 12: {:.1}%", err * 100.0))?;
    let plain = pitch_shift_plain(&vowel, 6.0).unwrap();
    let err = formant_error(&plain, 150.0 * semitone_ratio(6.0), semitone_ratio(6.0));
    notes.push(format!("plain p=+6 {:.1}%", err * 100.0));
    check(err < 0.08, format!("plain p 6: {:.1}%", err * 100.0))?;
    Ok(notes.join(", "))
}

fn geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let n = rng.gen_range(0..24_000usize);
        let audio = AudioBuffer::new(vec![0.01; n], SR);
        let expected = if n < 1080 { 0 } else { (n - 1080) / 120 + 1 };
        match mel_spectrogram(&audio) {
            Ok(m) => check(m.frames() == expected, format!("{n} samples: {} frames", m.frames()))?,
            Err(_) => check(expected == 0, format!("{n} samples rejected"))?,
        }
    }
    for _ in 0..100 {
        let layers: Vec<ConvLayer> = (0..rng.gen_range(1..10))
            .map(|_| ConvLayer {
                kernel: rng.gen_range(1..8),
                dilation: rng.gen_range(1..6),
                causal: rng.gen(),
            })
            .collect();
        let spec = ConvStackSpec::new(layers);
        // walk every tap back from output frame 0
        let mut reach = vec![0i64];
        for l in spec.layers.iter().rev() {
            let (k, d) = (l.kernel as i64, l.dilation as i64);
            let fut = if l.causal { 0 } else { (k - 1) / 2 };
            let mut next: Vec<i64> = reach
                .iter()
                .flat_map(|p| (0..k).map(move |j| p + (j - (k - 1 - fut)) * d))
                .collect();
            next.sort_unstable();
            next.dedup();
            reach = next;
        }
        let span = (reach[reach.len() - 1] - reach[0] + 1) as usize;
        check(receptive_field(&spec) == span, format!("RF mismatch on {:?}", spec.layers))?;
        check(
            lookahead_frames(&spec) as i64 == reach[reach.len() - 1],
            "lookahead mismatch",
        )?;
    }
    let r = latency_budget(&ConvStackSpec::reference()).unwrap();
    check(r.receptive_field_ms == 125.0, format!("reference RF {} ms", r.receptive_field_ms))?;
    Ok(format!(
        "1000 mel lengths, 100 stacks; reference stack RF {} ms, latency {} ms",
        r.receptive_field_ms, r.algorithmic_latency_ms
    ))
}

fn small_corpus(dir: &Path, n: u64, secs: f64) -> PathBuf {
    let corpus = dir.join("corpus");
    fs::create_dir_all(&corpus).unwrap();
    for i in 0..n {
        write_wav(&synth::speech_like(secs, i, SR), corpus.join(format!("utt{i:03}.wav"))).unwrap();
    }
    corpus
}

fn noise_corpus(dir: &Path) -> PathBuf {
    let noise = dir.join("noise");
    fs::create_dir_all(&noise).unwrap();
    write_wav(&synth::white_noise(20.0, 0.1, 77, SR), noise.join("a.wav")).unwrap();
    write_wav(&synth::white_noise(1.0, 0.2, 78, 48_000), noise.join("b.wav")).unwrap();
    noise
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), 4, 3.0);
    let noise = noise_corpus(tmp.path());
    let manifest = tmp.path().join("m.json");
    run_cli(&["manifest", "build", p(&corpus), "--out", p(&manifest), "--val-fraction", "0.25"])?;
    let mut files = 0;
    for scheme in ["noisy", "votrans", "noisyf0-sm", "noisyf0-vt-sox"] {
        let mut trees = Vec::new();
        for jobs in ["1", "8"] {
            let out = tmp.path().join(format!("{scheme}-{jobs}"));
            run_cli(&[
                "augment", "--manifest", p(&manifest), "--scheme", scheme, "--out", p(&out),
                "--seed", "1234", "--jobs", jobs, "--noise-dir", p(&noise), "--copies", "3",
            ])?;
            trees.push(tree(&out));
        }
        check(trees[0] == trees[1], format!("{scheme}: trees differ between --jobs 1 and 8"))?;
        files += trees[0].len();
    }
    Ok(format!("4 schemes, {files} files byte-identical across --jobs 1/8"))
}

fn streaming() -> Outcome {
    const N: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let f0: Vec<f64> = (0..N).map(|_| rng.gen_range(60.0..500.0)).collect();
    let conf: Vec<f64> = (0..N).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let contour = F0Contour::new(f0.clone(), conf.clone()).unwrap();
    let params = F0NoiseParams::default();
    let batch = perturb_f0(&contour, &params, &mut ChaCha8Rng::seed_from_u64(99));
    let mut stream = F0Stream::new(StreamMode::NoisyF0, &params, ChaCha8Rng::seed_from_u64(99))
        .map_err(|e| e.to_string())?;
    for i in 0..N {
        let (f, c) = stream.process(f0[i], conf[i]).map_err(|e| e.to_string())?;
        check(
            f == batch.f0_hz()[i] && c == batch.confidence()[i],
            format!("frame {i} differs"),
        )?;
    }
    Ok(format!("{N} frames bit-identical"))
}

fn realtime() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let audio = synth::speech_like(60.0, 8, SR);
    let start = Instant::now();
    let mut work = SchemeWorkload::new(Scheme::NoisyF0VtSox, 3, None).map_err(|e| e.to_string())?;
    let report = measure_rtf(&mut work, &audio, 3).map_err(|e| e.to_string())?;
    let wall = start.elapsed().as_secs_f64();
    check(report.passed && report.rtf >= 3.0, format!("in-process RTF {:.2}", report.rtf))?;

    let wav = tmp.path().join("sixty.wav");
    write_wav(&audio, &wav).unwrap();
    let out = run_cli(&["bench", "rtf", "--scheme", "noisyf0-vt-sox", "--input", p(&wav), "--repeats", "3"])?;
    let cli: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    let cli_rtf = cli["rtf"].as_f64().unwrap_or(0.0);
    check(cli["passed"].as_bool() == Some(true), format!("bench rtf reports {cli_rtf:.2}"))?;
    Ok(format!(
        "RTF {:.1} in-process, {cli_rtf:.1} via CLI (threshold 3.0), {wall:.1} s wall",
        report.rtf
    ))
}

fn bookkeeping() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), 3, 2.0);
    let manifest = build_manifest(&corpus, 0.3).map_err(|e| e.to_string())?;
    check(
        manifest.train().count() == 2 && manifest.validation().count() == 1,
        "fixture split is not 2/1",
    )?;
    let out = tmp.path().join("sox");
    let spec = AugmentationSpec::new(Scheme::SoX, 10).with_copies(10);
    materialize(&manifest, &spec, None, &out, 2).map_err(|e| e.to_string())?;
    let files = tree(&out);
    let wavs = files.keys().filter(|k| k.contains("__sox__") && k.ends_with(".wav")).count();
    let sidecars = files.keys().filter(|k| k.contains("__sox__") && k.ends_with(".json")).count();
    check(wavs == 20 && sidecars == 20, format!("{wavs} WAVs, {sidecars} sidecars"))?;
    let val = manifest.validation().next().unwrap();
    check(
        files.get(&format!("{}.wav", val.id)) == Some(&fs::read(&val.path).unwrap()),
        "validation file altered",
    )?;
    Ok(format!("{wavs} WAVs, {sidecars} sidecars, validation bit-identical"))
}

/// Checks one materialized scheme directory against the source manifest.
fn check_outputs(
    scheme: Scheme,
    source: &DatasetManifest,
    out_dir: &Path,
    bank: &NoiseBank,
) -> Result<usize, String> {
    let produced = DatasetManifest::load(out_dir.join("manifest.json")).map_err(|e| e.to_string())?;
    let spec: AugmentationSpec =
        serde_json::from_slice(&fs::read(out_dir.join(SPEC_FILE)).unwrap()).unwrap();
    let copies = spec.copies_per_input as usize;
    check(
        produced.train().count() == source.train().count() * copies,
        format!("{scheme}: wrong output count"),
    )?;
    for (k, src) in source.train().enumerate() {
        let audio = read_wav(&src.path).unwrap();
        for copy in 0..copies as u32 {
            let stem = format!("{}__{}__{copy}", src.id, scheme.slug());
            let entry = produced.entries.iter().find(|e| e.id == stem).ok_or("missing entry")?;
            let prov: Provenance =
                serde_json::from_slice(&fs::read(out_dir.join(format!("{stem}.json"))).unwrap())
                    .map_err(|e| format!("{stem}: bad sidecar: {e}"))?;
            let contour = F0Contour::read_csv(out_dir.join(format!("{stem}.f0.csv")))
                .map_err(|e| format!("{stem}: bad contour: {e}"))?;
            let out_audio = read_wav(&entry.path).map_err(|e| format!("{stem}: {e}"))?;
            check(out_audio.sample_rate() == SR, format!("{stem}: rate"))?;
            check(
                (out_audio.len() as i64 - audio.len() as i64).abs() <= 120,
                format!("{stem}: duration changed"),
            )?;
            check(
                contour.len() == vcaug::pitch::frame_count(out_audio.len()),
                format!("{stem}: contour length"),
            )?;
            if scheme.is_controls_only() {
                check(entry.path == src.path, format!("{stem}: controls-only output rewrote audio"))?;
            }
            let d = &prov.draws;
            let within = |v: Option<f64>, lo: f64, hi: f64| v.is_none_or(|x| (lo..=hi).contains(&x));
            check(
                within(d.snr_db, 4.0, 12.0)
                    && within(d.sox_shift, -8.0, 8.0)
                    && within(d.votrans_shift, -12.0, 12.0)
                    && within(d.votrans_kappa, 0.0, 1.0)
                    && within(d.smoothing_window_ms, 100.0, 300.0),
                format!("{stem}: draw outside its support"),
            )?;
            if k == 0 && copy == 0 {
                let source_contour = estimate_f0(&audio).unwrap();
                let (a, c) = replay(&audio, &source_contour, Some(bank), &spec.params, &prov)
                    .map_err(|e| e.to_string())?;
                check(quantize(&a) == out_audio, format!("{stem}: replayed audio differs"))?;
                check(c.to_csv() == contour.to_csv(), format!("{stem}: replayed contour differs"))?;
            }
        }
    }
    for val in source.validation() {
        let copied = out_dir.join(format!("{}.wav", val.id));
        check(
            fs::read(&copied).ok() == Some(fs::read(&val.path).unwrap()),
            format!("{scheme}: validation file altered"),
        )?;
    }
    check(
        produced.validation().count() == source.validation().count(),
        "validation entries missing",
    )?;
    Ok(produced.entries.len())
}

fn smoke() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    // 36 files of 50 s: 30 minutes
    let corpus = small_corpus(tmp.path(), 36, 50.0);
    let noise = noise_corpus(tmp.path());
    let full = tmp.path().join("full.json");
    let sub = tmp.path().join("m15.json");
    run_cli(&["manifest", "build", p(&corpus), "--out", p(&full)])?;
    run_cli(&["manifest", "subset", p(&full), "--minutes", "15", "--out", p(&sub)])?;
    let subset = DatasetManifest::load(&sub).unwrap();
    check(subset.train_duration_s() >= 900.0, "subset under 15 minutes")?;
    check(
        subset.validation().all(|e| e.split == Split::Validation) && subset.validation().count() == 2,
        "validation entries not kept",
    )?;
    let bank = NoiseBank::load(&noise).unwrap();
    let mut counts = Vec::new();
    for scheme in Scheme::ALL {
        let out = tmp.path().join(scheme.slug());
        run_cli(&[
            "augment", "--manifest", p(&sub), "--scheme", scheme.slug(), "--out", p(&out),
            "--seed", "2024", "--noise-dir", p(&noise), "--copies", "1",
        ])?;
        counts.push(check_outputs(scheme, &subset, &out, &bank)?);
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 300.0, format!("took {secs:.0} s"))?;
    Ok(format!(
        "15 min subset ({} train files), 7 schemes, {} entries checked, {secs:.0} s",
        subset.train().count(),
        counts.iter().sum::<usize>()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("SNR accuracy", snr_accuracy),
        ("distribution conformance", distributions),
        ("pitch-shift correctness", pitch_shift),
        ("formant behaviour", formants),
        ("geometry", geometry),
        ("determinism across --jobs", determinism),
        ("online/offline equivalence", streaming),
        ("real-time factor", realtime),
        ("dataset bookkeeping", bookkeeping),
        ("pipeline smoke test", smoke),
    ];
    // keep panics from individual criteria out of the report
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
