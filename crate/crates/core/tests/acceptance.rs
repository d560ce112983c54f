//! Acceptance run: one PASS / FAIL / NOT RUN line per criterion.
//!
//! Criteria 9-14 need the released recordings converted to session manifests;
//! point `SCRATCHQ_DATASET` at that directory to run them. The process exits
//! non-zero on any FAIL only when `SCRATCHQ_ACCEPTANCE_STRICT=1`.

#[path = "acceptance/dataset.rs"]
mod dataset;

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use scratchq::activity::Activity;
use scratchq::dataset::FeatureTable;
use scratchq::eval::{
    mae, mape, run_loso, spearman, wilcoxon_signed_rank, LosoConfig, WilcoxonMode,
};
use scratchq::io::{decode_model, encode_labels_csv, encode_model, parse_labels_csv, LabelRecord};
use scratchq::labeling::{
    filter_outliers, label_block, savgol_coefficients, savgol_smooth, ContactTrace, CriticalKind, CriticalPoint,
    LabelConfig, PowerLabel, RejectReason, WindowDiagnostics, TABLET_RATE_HZ,
};
use scratchq::mlp::{Adam, AdamParams, LossKind, MlpConfig, MlpModel};
use scratchq::pipeline::train_model;
use scratchq::spectral::{dft, FeatureBlocks, Task};
use scratchq::synth::{
    detection_toy, gen_contact_trace, intensity_toy, naive_dft, ForceProfile, ScratchStyle, SyntheticScratchSpec,
    ToyConfig, Trajectory,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    NotRun,
}

pub struct Outcome {
    pub status: Status,
    pub detail: String,
}

impl Outcome {
    pub fn check(ok: bool, detail: impl Into<String>) -> Self {
        Self {
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }

    pub fn not_run(detail: impl Into<String>) -> Self {
        Self {
            status: Status::NotRun,
            detail: detail.into(),
        }
    }
}

fn c1_dft() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for &n in &[400usize, 512, 8000] {
        let mut ratio: f64 = 0.0;
        for _ in 0..50 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let fast = dft(&x);
            let slow = naive_dft(&x);
            let err = fast
                .iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            ratio = ratio.max(err / n as f64);
            count += 1;
        }
        worst = worst.max(ratio);
    }
    Outcome::check(
        worst < 1e-9,
        format!("{count} signals, max |fast - naive| / N = {worst:.2e} (limit 1e-9)"),
    )
}

/// Least-squares degree-5 fit over each 31-sample window, evaluated at the centre.
fn lsq_center_values(y: &[f64], order: usize, window: usize) -> Vec<f64> {
    let half = window / 2;
    let a = DMatrix::from_fn(window, order + 1, |r, c| (r as f64 - half as f64).powi(c as i32));
    let pinv = (a.transpose() * &a).try_inverse().expect("normal matrix invertible") * a.transpose();
    (half..y.len() - half)
        .map(|i| {
            let seg = DVector::from_column_slice(&y[i - half..=i + half]);
            (&pinv * seg)[0]
        })
        .collect()
}

fn c2_savgol() -> Outcome {
    let coeffs = savgol_coefficients(5, 31).expect("valid filter");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut poly_err: f64 = 0.0;
    for degree in 0..=5 {
        for _ in 0..10 {
            let c: Vec<f64> = (0..=degree).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..300)
                .map(|i| {
                    let t = i as f64 / 150.0 - 1.0;
                    c.iter().rev().fold(0.0, |acc, &k| acc * t + k)
                })
                .collect();
            let s = savgol_smooth(&y, &coeffs).expect("long enough");
            for i in 15..285 {
                poly_err = poly_err.max((s[i] - y[i]).abs());
            }
        }
    }
    let noise = Normal::new(0.0, 2.0).unwrap();
    let mut lsq_err: f64 = 0.0;
    for _ in 0..10 {
        let y: Vec<f64> = (0..400)
            .map(|i| 70.0 + 20.0 * (i as f64 * 0.05).sin() + noise.sample(&mut rng))
            .collect();
        let s = savgol_smooth(&y, &coeffs).expect("long enough");
        let oracle = lsq_center_values(&y, 5, 31);
        for (k, o) in oracle.iter().enumerate() {
            lsq_err = lsq_err.max((s[k + 15] - o).abs());
        }
    }
    Outcome::check(
        poly_err < 1e-9 && lsq_err < 1e-9,
        format!("polynomial reproduction {poly_err:.1e}, least-squares oracle {lsq_err:.1e} (limit 1e-9)"),
    )
}

fn block_trace(seconds: f64, f: impl Fn(f64) -> (f64, f64, f64)) -> ContactTrace {
    let n = (seconds * TABLET_RATE_HZ).round() as usize;
    let t: Vec<f64> = (0..n).map(|i| i as f64 / TABLET_RATE_HZ).collect();
    let (mut x, mut y, mut force) = (Vec::new(), Vec::new(), Vec::new());
    for &ti in &t {
        let (a, b, c) = f(ti);
        x.push(a);
        y.push(b);
        force.push(c);
    }
    ContactTrace::new(0.0, seconds, t, x, y, force).expect("valid fixture")
}

fn sine_y(t: f64) -> f64 {
    70.0 + 20.0 * (2.0 * std::f64::consts::PI * (t - 0.1) / 0.5).cos()
}

fn c3_labeling() -> Outcome {
    let cfg = LabelConfig::default();
    let (mut windows, mut valid, mut worst) = (0usize, 0usize, 0.0f64);
    let mut bad = Vec::new();
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let lift = seed % 2 == 1;
        let force = if rng.random_bool(0.5) {
            ForceProfile::Constant {
                newtons: rng.random_range(0.3..2.0),
            }
        } else {
            ForceProfile::Sinusoid {
                mean: rng.random_range(0.6..1.6),
                amplitude: 0.3,
                freq_hz: rng.random_range(0.2..2.0),
            }
        };
        let spec = SyntheticScratchSpec {
            style: if lift { ScratchStyle::LiftOff } else { ScratchStyle::ContinuousContact },
            trajectory: Trajectory::Sine,
            stroke_amplitude: rng.random_range(20.0..50.0),
            stroke_period: rng.random_range(0.4..0.9),
            force,
            duration: 10.0,
            position_noise_sd: rng.random_range(0.0..0.5),
            force_noise_sd: 0.02,
            contact_gap_fraction: if lift { rng.random_range(0.1..0.3) } else { 0.0 },
            phase: rng.random_range(0.0..0.3),
            center: (120.0, 70.0),
            seed,
        };
        let g = gen_contact_trace(&spec).expect("valid spec");
        for (l, truth) in label_block(&g.trace, &cfg).iter().zip(&g.true_power) {
            windows += 1;
            if !l.is_valid() {
                continue;
            }
            valid += 1;
            let rel = (l.power - truth).abs() / truth;
            worst = worst.max(rel);
            if rel > 0.1 && bad.len() < 3 {
                bad.push(format!("seed {seed} t={} {:.1} vs {truth:.1}", l.window_start, l.power));
            }
        }
    }
    let recovered = worst <= 0.1 && valid * 10 >= windows * 9;

    let zero = label_block(&block_trace(3.0, |t| (100.0, sine_y(t), 0.0)), &cfg);
    let zero_ok = zero.iter().all(|l| l.is_valid() && l.power == 0.0);

    // trace-level fixtures where the condition arises naturally
    let ramp = label_block(&block_trace(2.0, |t| (100.0, 40.0 + 10.0 * t, 1.0)), &cfg);
    let jump = label_block(
        &block_trace(3.0, |t| (if t >= 1.5 { 106.0 } else { 100.0 }, sine_y(t), 1.0)),
        &cfg,
    );
    let hot = label_block(&block_trace(3.0, |t| (100.0, sine_y(t), 5.0)), &cfg);
    // repeated peak: diagnostics fixture for the rule itself
    let cp = |t: f64, y: f64, kind| CriticalPoint {
        index: 0,
        t,
        x: 100.0,
        y,
        kind,
    };
    let twin = filter_outliers(
        &WindowDiagnostics {
            window_start: 0.0,
            mean_force: Some(1.0),
            critical_points: vec![
                cp(0.1, 80.0, CriticalKind::Peak),
                cp(0.4, 40.0, CriticalKind::Valley),
                cp(0.6, 78.0, CriticalKind::Peak),
                cp(0.8, 79.0, CriticalKind::Peak),
            ],
            max_position_jump: 0.5,
        },
        &cfg,
    );
    let is = |l: &PowerLabel, r| l.rejection == Some(r);
    let fixtures = [
        ("TooFewCriticalPoints", ramp.iter().all(|l| is(l, RejectReason::TooFewCriticalPoints))),
        ("ConsecutiveSameKind", is(&twin, RejectReason::ConsecutiveSameKind)),
        ("PositionJump", is(&jump[1], RejectReason::PositionJump) && jump[0].is_valid()),
        ("PowerTooHigh", hot.iter().all(|l| is(l, RejectReason::PowerTooHigh))),
    ];
    let missed: Vec<&str> = fixtures.iter().filter(|f| !f.1).map(|f| f.0).collect();
    Outcome::check(
        recovered && zero_ok && missed.is_empty(),
        format!(
            "{valid}/{windows} windows valid, max relative error {:.2} % (limit 10 %){}; zero force -> 0 mW: {zero_ok}; outlier fixtures missed: {missed:?}",
            worst * 100.0,
            if bad.is_empty() { String::new() } else { format!(" [{}]", bad.join("; ")) }
        ),
    )
}

fn preset_gradient_error(config: MlpConfig, seed: u64) -> (f64, usize) {
    let mut m = MlpModel::new(config).expect("preset is valid");
    let width = m.input_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..2 * width).map(|_| rng.random_range(0.0..1.0)).collect();
    // MAE targets sit 0.5 either side of the outputs: no kink nearby and a
    // small loss, so rounding in the difference quotient stays small
    let ys = match m.config.loss {
        LossKind::Mae => {
            let p = m.predict_batch(&xs.chunks(width).collect::<Vec<_>>()).expect("shapes match");
            vec![p[0] + 0.5, p[1] - 0.5]
        }
        LossKind::Bce => vec![1.0, 0.0],
    };
    let eval = |m: &MlpModel| {
        // same dropout masks on every evaluation
        let mut r = ChaCha8Rng::seed_from_u64(77);
        m.compute_gradients(&xs, &ys, Some(&mut r)).expect("shapes match")
    };
    let (_, analytic) = eval(&m);
    let h = 1e-5;
    let (mut worst, mut checked) = (0.0f64, 0usize);
    for li in 0..m.layers.len() {
        let n = m.layers[li].weights.len();
        let mut pick = ChaCha8Rng::seed_from_u64(seed ^ li as u64);
        for _ in 0..200.min(n) {
            let idx = pick.random_range(0..n);
            let orig = m.layers[li].weights[idx];
            m.layers[li].weights[idx] = orig + h;
            let (up, _) = eval(&m);
            m.layers[li].weights[idx] = orig - h;
            let (down, _) = eval(&m);
            m.layers[li].weights[idx] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.layers[li].weights[idx];
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((a - numeric).abs() / denom);
            checked += 1;
        }
    }
    (worst, checked)
}

fn c4_gradients() -> Outcome {
    let (mae_err, n1) = preset_gradient_error(MlpConfig::intensity(), 4);
    let (bce_err, n2) = preset_gradient_error(MlpConfig::detection(), 5);
    Outcome::check(
        mae_err < 1e-5 && bce_err < 1e-5,
        format!(
            "intensity preset (MAE) {mae_err:.1e} over {n1} weights, detection preset (BCE) {bce_err:.1e} over {n2} weights (limit 1e-5)"
        ),
    )
}

fn c5_adam() -> Outcome {
    // minimize (w - 3)^2 from w = 0
    let hp = AdamParams {
        learning_rate: 0.1,
        ..AdamParams::default()
    };
    let mut adam = Adam::new(hp);
    let mut w = vec![0.0];
    let (mut ow, mut m, mut v) = (0.0f64, 0.0f64, 0.0f64);
    let mut worst: f64 = 0.0;
    for t in 1..=10 {
        let g = 2.0 * (w[0] - 3.0);
        adam.step(&mut [&mut w], &[&[g]]);
        let og = 2.0 * (ow - 3.0);
        m = 0.9 * m + 0.1 * og;
        v = 0.999 * v + 0.001 * og * og;
        let mh = m / (1.0 - 0.9f64.powi(t));
        let vh = v / (1.0 - 0.999f64.powi(t));
        ow -= 0.1 * mh / (vh.sqrt() + 1e-8);
        worst = worst.max((w[0] - ow).abs());
    }

    let table = intensity_toy(&ToyConfig {
        participants: 2,
        windows_per_participant: 20,
        ..ToyConfig::default()
    })
    .expect("toy");
    let mut cfg = MlpConfig::intensity();
    cfg.layer_sizes = vec![575, 32, 32, 1];
    cfg.epochs = 5;
    cfg.seed = 42;
    let artifact = || encode_model(&train_model(&table, FeatureBlocks::Both, &cfg).expect("trains"), Task::Intensity);
    let (a, b) = (artifact(), artifact());
    let hex: String = a[a.len() - 32..].iter().take(8).map(|b| format!("{b:02x}")).collect();
    Outcome::check(
        worst < 1e-12 && a == b,
        format!("10 Adam steps max deviation {worst:.1e} (limit 1e-12); two seeded runs identical: {} (sha256 {hex}...)", a == b),
    )
}

fn c6_metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut mape_exact = true;
    for _ in 0..1000 {
        let n = rng.random_range(1..50);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..600.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..650.0)).collect();
        mape_exact &= mape(&y, &p).unwrap() == mae(&y, &p).unwrap() / 600.0 * 100.0;
    }

    // exact vs normal Wilcoxon at n = 15 on random paired samples
    let noise = Normal::new(0.0, 1.0).unwrap();
    let (mut gap, mut gap_small_p) = (0.0f64, 0.0f64);
    for _ in 0..500 {
        let shift = rng.random_range(0.0..1.2);
        let a: Vec<f64> = (0..15).map(|_| noise.sample(&mut rng) + shift).collect();
        let b: Vec<f64> = (0..15).map(|_| noise.sample(&mut rng)).collect();
        let e = wilcoxon_signed_rank(&a, &b, WilcoxonMode::Exact).unwrap();
        let z = wilcoxon_signed_rank(&a, &b, WilcoxonMode::Normal).unwrap();
        let d = (e.p_value - z.p_value).abs();
        gap = gap.max(d);
        if e.p_value < 0.3 {
            gap_small_p = gap_small_p.max(d);
        }
    }

    let x: Vec<f64> = (0..40).map(|_| rng.random_range(-5.0..5.0)).collect();
    let up: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let down: Vec<f64> = x.iter().map(|v| -v * v * v).collect();
    let rho_up = spearman(&x, &up).unwrap().statistic;
    let rho_down = spearman(&x, &down).unwrap().statistic;
    let y: Vec<f64> = x.iter().map(|v| v + noise.sample(&mut rng) * 3.0).collect();
    let base = spearman(&x, &y).unwrap().statistic;
    let moved = spearman(
        &x.iter().map(|v| 2.0 * v + 7.0).collect::<Vec<_>>(),
        &y.iter().map(|v| v.powi(3) + v).collect::<Vec<_>>(),
    )
    .unwrap()
    .statistic;
    let spearman_ok = rho_up == 1.0 && rho_down == -1.0 && (base - moved).abs() < 1e-12;

    Outcome::check(
        mape_exact && gap <= 0.01 && spearman_ok,
        format!(
            "mape identity exact: {mape_exact}; wilcoxon n=15 max |exact - normal| = {gap:.4} (limit 0.01; {gap_small_p:.4} where exact p < 0.3); spearman +1/-1/invariance: {spearman_ok}"
        ),
    )
}

fn small_config(task: Task, width: usize) -> MlpConfig {
    let mut cfg = match task {
        Task::Intensity => MlpConfig::intensity(),
        Task::Detection => MlpConfig::detection(),
    };
    cfg.layer_sizes = vec![width, 64, 64, 1];
    cfg.dropout_p = 0.0;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 16;
    cfg.epochs = match task {
        Task::Intensity => 100,
        Task::Detection => 60,
    };
    cfg.seed = 3;
    cfg
}

fn toy_loso(table: &FeatureTable) -> scratchq::eval::LosoReport {
    let cfg = LosoConfig {
        mlp: small_config(table.task, table.task.dims()),
        blocks: FeatureBlocks::Both,
        jobs: 0,
    };
    run_loso(table, &cfg).expect("toy LOSO runs")
}

fn c7_toy() -> Outcome {
    let start = Instant::now();
    let det = detection_toy(&ToyConfig::default()).expect("toy");
    let det_report = toy_loso(&det);
    let acc = det_report.accuracy().expect("detection").0;
    // 1200 training rows against 575 features; with fewer rows than
    // features the net fits the noise bins
    let int = intensity_toy(&ToyConfig {
        windows_per_participant: 400,
        ..ToyConfig::default()
    })
    .expect("toy");
    let int_report = toy_loso(&int);
    let (mae_mean, _) = int_report.mae().expect("intensity");
    let naive = int_report.naive_mae().expect("intensity").0;
    let secs = start.elapsed().as_secs_f64();
    Outcome::check(
        acc == 100.0 && mae_mean < 10.0 && secs < 300.0,
        format!(
            "detection accuracy {acc:.2} % over {} folds; intensity MAE {mae_mean:.2} mW (naive {naive:.1}); {secs:.1} s",
            det_report.folds.len()
        ),
    )
}

fn c8_serialization() -> Outcome {
    let mut cfg = MlpConfig::detection();
    cfg.layer_sizes = vec![475, 48, 32, 1];
    cfg.seed = 8;
    let model = MlpModel::new(cfg).expect("valid");
    let (task, back) = decode_model(&encode_model(&model, Task::Detection)).expect("round trip");
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut identical = task == Task::Detection;
    for _ in 0..100 {
        let x: Vec<f64> = (0..475).map(|_| rng.random_range(-2.0..2.0)).collect();
        identical &= model.predict(&x).unwrap().to_bits() == back.predict(&x).unwrap().to_bits();
    }

    let reasons = [None, Some(RejectReason::PowerTooHigh), Some(RejectReason::NoContact)];
    let records: Vec<LabelRecord> = (0..200)
        .map(|i| {
            let f = rng.random_range(0.0..5.0);
            let v = rng.random_range(0.0..400.0) / 3.0;
            LabelRecord {
                participant: format!("P{}", i % 7),
                activity: (i % 2 == 0).then_some(Activity::Unspecified),
                label: PowerLabel {
                    window_start: i as f64 * 0.25,
                    mean_force: f,
                    mean_velocity: v,
                    power: f * v,
                    rejection: reasons[i % 3],
                },
            }
        })
        .collect();
    let back = parse_labels_csv(std::str::from_utf8(&encode_labels_csv(&records)).unwrap(), "mem").unwrap();
    let mut label_err: f64 = 0.0;
    let mut same_meta = back.len() == records.len();
    for (a, b) in records.iter().zip(&back) {
        same_meta &= a.participant == b.participant && a.label.rejection == b.label.rejection;
        for (p, q) in [
            (a.label.window_start, b.label.window_start),
            (a.label.mean_force, b.label.mean_force),
            (a.label.mean_velocity, b.label.mean_velocity),
            (a.label.power, b.label.power),
        ] {
            label_err = label_err.max((p - q).abs());
        }
    }
    Outcome::check(
        identical && same_meta && label_err < 1e-9,
        format!("model forward outputs bit-exact: {identical}; label CSV max error {label_err:.1e}, fields intact: {same_meta}"),
    )
}

fn main() {
    let names = [
        "DFT correctness",
        "Savitzky-Golay",
        "Labeling oracle",
        "Gradient check",
        "Adam trace and deterministic training",
        "Metric identities",
        "End-to-end toy",
        "Serialization",
    ];
    let checks: [fn() -> Outcome; 8] = [
        c1_dft,
        c2_savgol,
        c3_labeling,
        c4_gradients,
        c5_adam,
        c6_metrics,
        c7_toy,
        c8_serialization,
    ];
    let mut results: Vec<(usize, String, Outcome)> = Vec::new();
    for (i, (name, check)) in names.iter().zip(checks).enumerate() {
        let start = Instant::now();
        let mut o = check();
        o.detail = format!("{} [{:.1} s]", o.detail, start.elapsed().as_secs_f64());
        results.push((i + 1, name.to_string(), o));
    }
    for (i, (name, o)) in dataset::run().into_iter().enumerate() {
        results.push((9 + i, name.to_string(), o));
    }

    let mut failed = 0;
    for (id, name, o) in &results {
        let tag = match o.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::NotRun => "NOT RUN",
        };
        println!("{tag:<8} {id:>2}. {name}: {}", o.detail);
    }
    let passed = results.iter().filter(|r| r.2.status == Status::Pass).count();
    println!("acceptance: {passed} passed, {failed} failed, {} not run", results.len() - passed - failed);
    if failed > 0 && std::env::var("SCRATCHQ_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
