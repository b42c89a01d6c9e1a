use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde::Serialize;
use serde_json::json;

use rtmotion::evaluation::{manifest_agreement, run_experiment, ExperimentSpec, LstmLearner, MetricsReport};
use rtmotion::model::{count_params, save_model, LstmClassifier};
use rtmotion::pipeline::{build_samples, labelled_periods, CountTable, PeriodSet};
use rtmotion::skeleton::manifest::DatasetManifest;
use rtmotion::skeleton::synth::{write_synth_dataset, SynthDatasetConfig};
use rtmotion::skeleton::{labels_per_frame, parse_annotations, parse_sequence};
use rtmotion::{Error, Matrix, Sample, Setting};

use crate::config::RunConfig;

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

/// Timestamps and host details, kept apart from reproducible outputs.
fn write_metadata(path: &Path, command: &str, started: Instant) -> anyhow::Result<()> {
    let unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_json(
        path,
        &json!({
            "command": command,
            "finished_unix_s": unix,
            "elapsed_s": started.elapsed().as_secs_f64(),
            "threads": rayon::current_num_threads(),
            "version": env!("CARGO_PKG_VERSION"),
            "host": std::env::var("HOSTNAME").unwrap_or_default(),
        }),
    )
}

#[derive(Serialize)]
struct FileError {
    file: String,
    error: String,
}

pub fn validate(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let path = cfg.require(&cfg.manifest, "manifest")?;
    let manifest = match DatasetManifest::load(path) {
        Ok(m) => m,
        Err(e) => {
            println!(
                "{}",
                json!({"manifest": path, "entries": 0, "errors": [FileError { file: path.display().to_string(), error: e.to_string() }]})
            );
            return Ok(ExitCode::from(1));
        }
    };
    let mut errors = Vec::new();
    if manifest.is_empty() {
        errors.push(FileError {
            file: path.display().to_string(),
            error: "manifest has no entries".into(),
        });
    }
    for entry in &manifest.entries {
        let seq = parse_sequence(&entry.sequence, entry.meta());
        if let Err(e) = &seq {
            errors.push(FileError {
                file: entry.sequence.display().to_string(),
                error: e.to_string(),
            });
        }
        if entry.annotations.is_empty() {
            errors.push(FileError {
                file: entry.sequence.display().to_string(),
                error: "no annotation track listed".into(),
            });
        }
        for a in &entry.annotations {
            let checked = parse_annotations(a).and_then(|track| match &seq {
                Ok(s) => labels_per_frame(s, &track).map(|_| ()),
                Err(_) => Ok(()),
            });
            if let Err(e) = checked {
                errors.push(FileError {
                    file: a.display().to_string(),
                    error: e.to_string(),
                });
            }
        }
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "manifest": path,
            "entries": manifest.entries.len(),
            "errors": errors,
        }))?
    );
    Ok(if errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

pub fn prepare(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let started = Instant::now();
    let manifest_path = cfg.require(&cfg.manifest, "manifest")?;
    let out = cfg.require(&cfg.output, "out")?;
    let manifest = DatasetManifest::load(manifest_path).context("stage prepare: loading manifest")?;
    let set = PeriodSet::prepare(&manifest, cfg.prepare_config(cfg.window)).context("stage prepare")?;
    set.save(out).context("stage prepare: writing period set")?;
    write_json(&out.join("run_config.json"), cfg)?;
    write_metadata(&out.join("metadata.json"), "prepare", started)?;
    print!("{}", set.counts().render());
    println!("items\t{}", set.samples.len());
    Ok(ExitCode::SUCCESS)
}

fn load_samples(cfg: &RunConfig) -> anyhow::Result<(PeriodSet, Vec<Sample>)> {
    let dir = cfg.require(&cfg.data, "data")?;
    let set = PeriodSet::load(dir).with_context(|| format!("loading prepared data from {}", dir.display()))?;
    let samples: Vec<Sample> = set
        .samples
        .iter()
        .filter(|s| cfg.setting.is_none_or(|want| s.provenance.setting == want))
        .cloned()
        .collect();
    if samples.is_empty() {
        return Err(Error::Empty(format!("no items in {} for the selected setting", dir.display())).into());
    }
    Ok((set, samples))
}

pub fn train(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let started = Instant::now();
    let out = cfg.require(&cfg.output, "out")?;
    let (set, samples) = load_samples(cfg)?;
    let network = cfg.network_config(samples[0].data.cols());
    let xs: Vec<Matrix> = samples.iter().map(|s| s.data.clone()).collect();
    let ys: Vec<_> = samples.iter().map(|s| s.label).collect();
    let model = LstmClassifier::fit(network, &cfg.training, &xs, &ys).context("stage train")?;
    save_model(&model, out).context("stage train: writing model")?;
    let sidecar = |ext: &str| out.with_extension(ext);
    write_json(
        &sidecar("train.json"),
        &json!({
            "run_config": cfg,
            "prepare": set.config,
            "network": network,
            "param_count": count_params(&network),
            "items": samples.len(),
            "loss_trace": model.loss_trace,
        }),
    )?;
    write_metadata(&sidecar("meta.json"), "train", started)?;
    println!(
        "trained {} ({} parameters) on {} items; final loss {:.6}",
        network.architecture(),
        count_params(&network),
        samples.len(),
        model.loss_trace.last().copied().unwrap_or(f64::NAN)
    );
    Ok(ExitCode::SUCCESS)
}

fn write_report(dir: &Path, stem: &str, report: &MetricsReport) -> anyhow::Result<()> {
    write_json(&dir.join(format!("{stem}.json")), report)?;
    let path = dir.join(format!("{stem}.csv"));
    let f = fs::File::create(&path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    report.write_csv(f)?;
    Ok(())
}

fn print_overall(report: &MetricsReport) {
    let m = report.overall;
    println!(
        "{} {} {}{}: accuracy {:.4}  F1(RT) {:.4}  F1(NRT) {:.4}  MCC {:.4}",
        report.protocol,
        report.architecture,
        report.input_form,
        report.window.map(|w| format!(" w={w}")).unwrap_or_default(),
        m.accuracy,
        m.f1_rt,
        m.f1_nrt,
        m.mcc
    );
}

pub fn eval(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let started = Instant::now();
    let out = cfg.require(&cfg.output, "out")?;
    let (set, samples) = load_samples(cfg)?;
    let learner = LstmLearner {
        network: cfg.network_config(samples[0].data.cols()),
        training: cfg.training,
    };
    let spec = ExperimentSpec {
        protocol: cfg.protocol,
        architecture: cfg.architecture,
        input_form: set.config.input_form,
        window: set.config.window,
        seed: cfg.training.seed,
    };
    let mut report = run_experiment(&spec, &samples, &learner).context("stage eval")?;
    report.run_config = Some(json!({"run": cfg, "prepare": set.config, "network": learner.network}));
    create_dir(out)?;
    write_report(out, "report", &report)?;
    write_metadata(&out.join("metadata.json"), "eval", started)?;
    print_overall(&report);
    Ok(ExitCode::SUCCESS)
}

fn setting_count(samples: &[Sample], setting: Setting) -> usize {
    samples.iter().filter(|s| s.provenance.setting == setting).count()
}

pub fn sweep(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let started = Instant::now();
    let manifest_path = cfg.require(&cfg.manifest, "manifest")?;
    let out = cfg.require(&cfg.output, "out")?;
    let manifest = DatasetManifest::load(manifest_path).context("stage sweep-w: loading manifest")?;
    let periods = labelled_periods(&manifest).context("stage sweep-w: segmentation")?;
    create_dir(out)?;
    let mut rows = csv::Writer::from_writer(Vec::new());
    rows.write_record(["w", "items_a", "items_b", "accuracy", "f1_rt", "f1_nrt", "mcc"])?;
    for &w in &cfg.widths {
        let prep = cfg.prepare_config(Some(w));
        let samples = build_samples(&periods, &prep).with_context(|| format!("stage sweep-w: windows w={w}"))?;
        let counts = CountTable::from_items(samples.iter().map(|s| (&s.provenance, s.label, s.original_length)));
        let learner = LstmLearner {
            network: cfg.network_config(cfg.input_form.channels()),
            training: cfg.training,
        };
        let spec = ExperimentSpec {
            protocol: cfg.protocol,
            architecture: cfg.architecture,
            input_form: cfg.input_form,
            window: Some(w),
            seed: cfg.training.seed,
        };
        let mut report = run_experiment(&spec, &samples, &learner).with_context(|| format!("stage sweep-w: w={w}"))?;
        report.run_config = Some(json!({"run": cfg, "prepare": prep, "network": learner.network, "counts": counts}));
        write_report(out, &format!("report_w{w}"), &report)?;
        let m = report.overall;
        rows.write_record([
            w.to_string(),
            setting_count(&samples, Setting::A).to_string(),
            setting_count(&samples, Setting::B).to_string(),
            m.accuracy.to_string(),
            m.f1_rt.to_string(),
            m.f1_nrt.to_string(),
            m.mcc.to_string(),
        ])?;
        print_overall(&report);
    }
    let path = out.join("sweep.csv");
    fs::write(&path, rows.into_inner()?).map_err(|e| Error::Io { path, source: e })?;
    write_metadata(&out.join("metadata.json"), "sweep-w", started)?;
    Ok(ExitCode::SUCCESS)
}

pub fn agreement(cfg: &RunConfig) -> anyhow::Result<ExitCode> {
    let path = cfg.require(&cfg.manifest, "manifest")?;
    let manifest = DatasetManifest::load(path).context("stage agreement: loading manifest")?;
    let report = manifest_agreement(&manifest).context("stage agreement")?;
    if let Some(out) = &cfg.output {
        write_json(out, &report)?;
    }
    match report.icc {
        Some(v) => println!("ICC(A,2) = {v:.6} over {} frames", report.frames),
        None => println!("ICC(A,2) undefined over {} frames", report.frames),
    }
    Ok(ExitCode::SUCCESS)
}

pub fn synth(
    out: &Path,
    children_a: usize,
    children_b: usize,
    tasks: usize,
    rt_segments: usize,
    seed: u64,
) -> anyhow::Result<ExitCode> {
    let cfg = SynthDatasetConfig {
        children_a,
        children_b,
        tasks_per_child: tasks,
        rt_segments,
        seed,
        ..SynthDatasetConfig::default()
    };
    let manifest = write_synth_dataset(out, &cfg).context("stage synth")?;
    println!(
        "wrote {} sequences to {}",
        manifest.entries.len(),
        out.join("manifest.json").display()
    );
    Ok(ExitCode::SUCCESS)
}
