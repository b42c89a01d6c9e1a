//! Always-runnable acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rtmotion::evaluation::{
    icc_agreement, metrics, run_experiment, ConfusionMatrix, ExperimentSpec, LstmLearner, Protocol,
};
use rtmotion::features::{angle_between, extract_features, WindowParams};
use rtmotion::model::{
    loss_and_gradients, Architecture, DdConfig, Network, NetworkConfig, Readout, TrainingConfig, VConfig,
};
use rtmotion::pipeline::{PeriodSet, PrepareConfig};
use rtmotion::segmentation::{
    augment_all, balance_periods, extract_periods, resample_period, window_subsegments, MIN_TAIL,
};
use rtmotion::skeleton::manifest::DatasetManifest;
use rtmotion::skeleton::synth::{synth_sequence, synth_session, write_synth_dataset, SegmentClass, SynthDatasetConfig};
use rtmotion::skeleton::{labels_per_frame, SequenceMeta};
use rtmotion::{Frame, InputForm, Label, Matrix, Vec3};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: impl Into<String>, bad: impl Into<String>) -> Outcome {
    if cond {
        Ok(ok.into())
    } else {
        Err(bad.into())
    }
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(-1.5..1.5)).collect(),
    )
    .unwrap()
}

fn max_rel_error(net: &Network, batch: &[(&Matrix, Label)]) -> f64 {
    let (_, analytic) = loss_and_gradients(net, batch).unwrap();
    let loss = |p: &Network| loss_and_gradients(p, batch).unwrap().0;
    let mut worst: f64 = 0.0;
    for (k, &g) in analytic.iter().enumerate() {
        let mut plus = net.clone();
        plus.params[k] += 1e-5;
        let mut minus = net.clone();
        minus.params[k] -= 1e-5;
        let numeric = (loss(&plus) - loss(&minus)) / 2e-5;
        let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

fn gradient_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let configs = 24;
    for i in 0..configs {
        let d = rng.random_range(1..=5);
        let readout = if rng.random_bool(0.5) {
            Readout::Final
        } else {
            Readout::Mean
        };
        let cfg = if i % 2 == 0 {
            NetworkConfig::Dd(DdConfig {
                input_width: d,
                hidden: rng.random_range(1..=4),
                integration: rng.random_range(1..=4),
                readout,
            })
        } else {
            NetworkConfig::V(VConfig {
                input_width: d,
                hidden: [rng.random_range(1..=4), rng.random_range(1..=4)],
                readout,
            })
        };
        let net = Network::init(cfg, &mut rng).unwrap();
        let x1 = random_matrix(rng.random_range(1..=10), d, &mut rng);
        let x2 = random_matrix(rng.random_range(1..=10), d, &mut rng);
        worst = worst.max(max_rel_error(&net, &[(&x1, Label::Rt), (&x2, Label::Nrt)]));
    }
    let took = started.elapsed();
    check(
        worst < 1e-4 && took < Duration::from_secs(60),
        format!("{configs} configs, max rel error {worst:.2e}, {took:.1?}"),
        format!("max rel error {worst:.2e} (limit 1e-4), {took:.1?} (limit 60 s)"),
    )
}

/// Uniformly random rotation from a unit quaternion.
fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (
        a * (2.0 * PI * u2).sin(),
        a * (2.0 * PI * u2).cos(),
        b * (2.0 * PI * u3).sin(),
        b * (2.0 * PI * u3).cos(),
    );
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
        ],
        [
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
        ],
        [
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn feature_isometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let w = WindowParams::default();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let class = if i % 2 == 0 {
            SegmentClass::PauseRich
        } else {
            SegmentClass::MotionRich
        };
        let (seq, _) = synth_sequence(class, rng.random_range(2.0..4.0), 1000 + i).unwrap();
        let frames = seq.frames();
        let base = extract_features(frames, w).unwrap();

        let rot = random_rotation(&mut rng);
        let shift = Vec3::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        );
        let mut variants: Vec<Vec<Frame>> = vec![frames
            .iter()
            .map(|f| f.map_positions(|p| p.transform(&rot) + shift))
            .collect()];
        for axis in 0..3 {
            variants.push(
                frames
                    .iter()
                    .map(|f| {
                        f.map_positions(|mut p| {
                            p.set(axis, -p.get(axis));
                            p
                        })
                    })
                    .collect(),
            );
        }
        for v in variants {
            worst = worst.max(max_abs_diff(&base, &extract_features(&v, w).unwrap()));
        }
    }
    check(
        worst <= 1e-9,
        format!("100 periods, max deviation {worst:.2e}"),
        format!("max deviation {worst:.2e} (limit 1e-9)"),
    )
}

fn angle_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let random_vec = |rng: &mut ChaCha8Rng| loop {
        let v = Vec3::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        );
        if v.norm() > 1e-3 {
            return v;
        }
    };
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let u = random_vec(&mut rng);
        let v = random_vec(&mut rng);
        let reference = (u.dot(v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos();
        worst = worst.max((angle_between(u, v) - reference).abs());
    }
    let mut antiparallel_ok = true;
    for _ in 0..1000 {
        let u = random_vec(&mut rng);
        let c = rng.random_range(0.01..10.0);
        antiparallel_ok &= angle_between(u, u * -c) == PI;
    }
    check(
        worst <= 1e-9 && antiparallel_ok,
        format!("1e5 pairs, max deviation {worst:.2e}; anti-parallel gives pi"),
        format!("max deviation {worst:.2e} (limit 1e-9), anti-parallel exact: {antiparallel_ok}"),
    )
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for set in 0..10_000 {
        let n = rng.random_range(1..200);
        let bias_p = rng.random_range(0.0..1.0);
        let bias_a = rng.random_range(0.0..1.0);
        let pred: Vec<bool> = (0..n).map(|_| rng.random_bool(bias_p)).collect();
        let actual: Vec<bool> = (0..n).map(|_| rng.random_bool(bias_a)).collect();
        let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
        for (&p, &a) in pred.iter().zip(&actual) {
            match (p, a) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        let labels = |v: &[bool]| v.iter().map(|&b| Label::from_positive(b)).collect::<Vec<_>>();
        let cm = ConfusionMatrix::from_pairs(&labels(&pred), &labels(&actual)).unwrap();
        let m = metrics(&cm).unwrap();
        let (tpf, fpf, fnf, tnf) = (tp as f64, fp as f64, fn_ as f64, tn as f64);
        let f1 = |t: f64, a: f64, b: f64| {
            if 2.0 * t + a + b == 0.0 {
                0.0
            } else {
                2.0 * t / (2.0 * t + a + b)
            }
        };
        let den = (tpf + fpf) * (tpf + fnf) * (tnf + fpf) * (tnf + fnf);
        let mcc = if den == 0.0 {
            0.0
        } else {
            (tpf * tnf - fpf * fnf) / den.sqrt()
        };
        let expected = (
            (tp, fp, fn_, tn),
            (tpf + tnf) / n as f64,
            f1(tpf, fpf, fnf),
            f1(tnf, fnf, fpf),
            mcc,
        );
        let got = ((cm.tp, cm.fp, cm.fn_, cm.tn), m.accuracy, m.f1_rt, m.f1_nrt, m.mcc);
        if got != expected {
            return Err(format!("set {set}: got {got:?}, expected {expected:?}"));
        }
    }
    let n = 20_000;
    let actual: Vec<Label> = (0..n).map(|i| Label::from_positive(i % 2 == 0)).collect();
    let pred: Vec<Label> = (0..n).map(|_| Label::from_positive(rng.random_bool(0.5))).collect();
    let mcc = metrics(&ConfusionMatrix::from_pairs(&pred, &actual).unwrap())
        .unwrap()
        .mcc;
    check(
        mcc.abs() < 0.05,
        format!("1e4 sets exact; random balanced classifier MCC {mcc:+.4}"),
        format!("random balanced classifier MCC {mcc:+.4} (limit 0.05)"),
    )
}

fn pipeline_arithmetic() -> Outcome {
    use SegmentClass::*;
    let meta = SequenceMeta::default();
    let segments = [
        (MotionRich, 3.0),
        (PauseRich, 3.0),
        (MotionRich, 4.0),
        (PauseRich, 3.0),
        (MotionRich, 3.0),
    ];
    let (seq, track) = synth_session(meta.clone(), "R1", &segments, 11).unwrap();
    let periods = extract_periods(&seq, &labels_per_frame(&seq, &track).unwrap(), 0).unwrap();
    let balanced = balance_periods(periods.clone());
    let drops_tail = periods.len() == 5
        && periods.last().unwrap().label == Label::Nrt
        && balanced.len() == 4
        && balanced.iter().zip(&periods).all(|(a, b)| a == b);
    let (seq_rt, track_rt) = synth_session(meta, "R1", &segments[..4], 12).unwrap();
    let rt_end = extract_periods(&seq_rt, &labels_per_frame(&seq_rt, &track_rt).unwrap(), 0).unwrap();
    let keeps_rt_tail = balance_periods(rt_end.clone()).len() == rt_end.len();

    let augmented = augment_all(&balanced);
    let times_four = augmented.len() == 4 * balanced.len();

    let (seq120, _) = synth_sequence(MotionRich, 4.0, 13).unwrap();
    let mut p120 = periods[0].clone();
    p120.frames = seq120.frames()[..120].to_vec();
    let identity = resample_period(&p120, 120).unwrap().frames == p120.frames;

    let m = Matrix::zeros(250, 3);
    let windows = window_subsegments(&m, 120, MIN_TAIL).unwrap().len();

    let ok = drops_tail && keeps_rt_tail && times_four && identity && windows == 3;
    check(
        ok,
        format!(
            "augment {} -> {}; resample 120 identity; 250 at w=120 -> {windows} windows; trailing NRT dropped",
            balanced.len(),
            augmented.len()
        ),
        format!(
            "drops tail {drops_tail}, keeps RT tail {keeps_rt_tail}, x4 {times_four}, identity {identity}, windows {windows}"
        ),
    )
}

fn end_to_end() -> Outcome {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    write_synth_dataset(dir.path(), &SynthDatasetConfig::default()).map_err(|e| e.to_string())?;
    let manifest = DatasetManifest::load(dir.path().join("manifest.json")).map_err(|e| e.to_string())?;
    let set = PeriodSet::prepare(
        &manifest,
        PrepareConfig {
            input_form: InputForm::Feats,
            ..PrepareConfig::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let training = TrainingConfig {
        epochs: 50,
        seed: 3,
        ..TrainingConfig::default()
    };
    let learner = LstmLearner {
        network: NetworkConfig::default_for(Architecture::Dd, InputForm::Feats.channels()),
        training,
    };
    let spec = ExperimentSpec {
        protocol: Protocol::Holdout,
        architecture: Architecture::Dd,
        input_form: InputForm::Feats,
        window: None,
        seed: training.seed,
    };
    let first = run_experiment(&spec, &set.samples, &learner).map_err(|e| e.to_string())?;
    let second = run_experiment(&spec, &set.samples, &learner).map_err(|e| e.to_string())?;
    let same = serde_json::to_string(&first).unwrap() == serde_json::to_string(&second).unwrap();
    let acc = first.overall.accuracy;
    let took = started.elapsed();
    check(
        acc >= 0.9 && same && took < Duration::from_secs(300),
        format!("held-out accuracy {acc:.4}, deterministic, {took:.1?} for two runs"),
        format!("accuracy {acc:.4} (min 0.9), deterministic {same}, {took:.1?} (limit 300 s)"),
    )
}

fn icc_fixture() -> Outcome {
    let a = [1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0];
    let b = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0];
    // Grand mean 11/20, rater means 1/2 and 3/5; SSR 69/20, SSC 1/20, SSE 29/20.
    let (msr, msc, mse) = (23.0 / 60.0, 1.0 / 20.0, 29.0 / 180.0);
    let expected = (msr - mse) / (msr + (msc - mse) / 10.0);
    let r = icc_agreement(&a, &b).map_err(|e| e.to_string())?;
    let icc = r.icc.ok_or("icc undefined")?;
    let dev = [
        icc - expected,
        r.ms_rows - msr,
        r.ms_cols - msc,
        r.ms_error - mse,
        expected - 40.0 / 67.0,
    ]
    .iter()
    .fold(0.0_f64, |m, d| m.max(d.abs()));
    let same = icc_agreement(&a, &a).map_err(|e| e.to_string())?.icc;
    let identical_ok = same.is_some_and(|v| (v - 1.0).abs() <= 1e-9);
    check(
        dev <= 1e-9 && identical_ok,
        format!("ICC {icc:.6} = 40/67, max deviation {dev:.2e}; identical raters give 1"),
        format!("max deviation {dev:.2e} (limit 1e-9), identical raters gave {same:?}"),
    )
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("gradient oracle", gradient_oracle),
        ("feature isometry", feature_isometry),
        ("angle oracle", angle_oracle),
        ("metric oracle", metric_oracle),
        ("pipeline arithmetic", pipeline_arithmetic),
        ("end-to-end smoke", end_to_end),
        ("ICC fixture", icc_fixture),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(msg) => println!("[{}] PASS {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("[{}] FAIL {name}: {msg}", i + 1);
            }
        }
    }
    println!("dataset-dependent criteria: not run (released dataset not present)");
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}
