//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! fails.

use std::path::Path;
use std::time::{Duration, Instant};

use fidac::channel::{build_equivalent_mimo, mixer_constants, ImpairmentChannelSpec, ImpairmentRanges, F_LEAD, F_TAPS};
use fidac::compensation::{backprop_error, ie_gradient, ie_loss, train_estimator_white, AdaptOutcome, ChannelEstimate};
use fidac::dsp::lo_phasor;
use fidac::experiment::{run_experiment_with_workers, ExperimentConfig, ExperimentKind, SweepRow};
use fidac::link::Link;
use fidac::metrics::{derive_seed, ber_16qam_gray, esn0_for_ber_16qam, read_csv, NoiseLoader};
use fidac::mimo::MimoFir;
use fidac::splitter::{remodulate_streams, TxParams};
use fidac::{MultiStream, SampledSignal};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within(t: Duration, limit_s: u64) -> (bool, String) {
    (t.as_secs_f64() < limit_s as f64, format!("{:.1} s of {limit_s} s", t.as_secs_f64()))
}

fn random_fir(rng: &mut ChaCha8Rng, len: usize, delay: i64) -> MimoFir {
    let mut f = MimoFir::zeros(4, 4, len, delay);
    for u in 0..4 {
        for v in 0..4 {
            for t in f.entry_mut(u, v) {
                *t = rng.random_range(-1.0..1.0);
            }
        }
    }
    f
}

fn random_streams(rng: &mut ChaCha8Rng, n: usize, origin: i64) -> MultiStream {
    MultiStream::new((0..4).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(), 1.0, origin).unwrap()
}

fn random_complex(rng: &mut ChaCha8Rng, n: usize, origin: i64) -> SampledSignal<Complex64> {
    SampledSignal::with_origin((0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(), 1.0, origin).unwrap()
}

fn run(cfg: &ExperimentConfig, dir: &Path, workers: usize) -> fidac::experiment::RunReport {
    run_experiment_with_workers(cfg, dir, workers).expect("experiment runs")
}

fn equivalence(tmp: &Path) -> Outcome {
    let t0 = Instant::now();
    let cfg = ExperimentConfig::for_experiment(ExperimentKind::EquivalenceCheck);
    let report = run(&cfg, &tmp.join("equivalence"), 8);
    let (fast, time) = within(t0.elapsed(), 60);
    let c = &report.checks[0];
    outcome(c.passed && fast, format!("{}; {time}", c.detail))
}

fn mixer_identities() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..21 {
        for j in 0..21 {
            let delta = -0.25 + 0.025 * i as f64;
            let phi = (-22.0 + 2.2 * j as f64).to_radians();
            for band in [1u8, 2] {
                let (k1, k2) = mixer_constants(delta, phi, band);
                worst = worst.max((k1.norm_sqr() + k2.norm_sqr() - (1.0 + delta * delta)).abs());
            }
        }
    }
    let w = std::f64::consts::FRAC_PI_4;
    let mut ideal_err: f64 = 0.0;
    for t in -20..20 {
        let e = lo_phasor(w, t);
        let (a1, a2) = mixer_constants(0.0, 0.0, 1);
        let (b1, b2) = mixer_constants(0.0, 0.0, 2);
        ideal_err = ideal_err.max((a1 * e + a2 * e.conj() - e).norm());
        ideal_err = ideal_err.max((b1 * e + b2 * e.conj() - e.conj()).norm());
    }
    outcome(
        worst < 1e-12 && ideal_err < 1e-15,
        format!("max | |k1|^2+|k2|^2 - (1+delta^2) | = {worst:.1e} over 21x21 grid, both bands; ideal carriers off by {ideal_err:.1e}"),
    )
}

fn gradient() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let w = std::f64::consts::FRAC_PI_4;
    let mut worst: f64 = 0.0;
    let instances = 24;
    for _ in 0..instances {
        let lh = rng.random_range(1..=4);
        let lf = rng.random_range(1..=4);
        let n = rng.random_range(16..=64);
        let (dh, df) = (rng.random_range(0..lh as i64), rng.random_range(0..lf as i64));
        let h = random_fir(&mut rng, lh, dh);
        let f = random_fir(&mut rng, lf, df);
        let r = random_streams(&mut rng, n, 0);
        let x = random_complex(&mut rng, n, 0);
        let g = ie_gradient(&h, &f, &r, &x, w).unwrap();
        let eps = 1e-5;
        let mut scale: f64 = 0.0;
        let mut diffs = Vec::new();
        for u in 0..4 {
            for v in 0..4 {
                for i in 0..lh {
                    let mut hp = h.clone();
                    hp.entry_mut(u, v)[i] += eps;
                    let mut hm = h.clone();
                    hm.entry_mut(u, v)[i] -= eps;
                    let fd = (ie_loss(&hp, &f, &r, &x, w).unwrap() - ie_loss(&hm, &f, &r, &x, w).unwrap()) / (2.0 * eps);
                    scale = scale.max(fd.abs());
                    diffs.push((g.entry(u, v)[i] - fd).abs());
                }
            }
        }
        let rel = diffs.iter().fold(0.0f64, |m, d| m.max(d / scale));
        worst = worst.max(rel);
    }
    let (fast, time) = within(t0.elapsed(), 10);
    outcome(worst < 1e-6 && fast, format!("max relative error {worst:.1e} over {instances} instances; {time}"))
}

fn adjoint() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let w = std::f64::consts::FRAC_PI_4;
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let len = rng.random_range(1..12);
        let d = rng.random_range(0..len as i64);
        let f = random_fir(&mut rng, len, d);
        let (n, origin) = (rng.random_range(len..200), rng.random_range(-50..50));
        let a = random_streams(&mut rng, n, origin);
        let fwd = remodulate_streams(&f.apply(&a).unwrap(), w).unwrap();
        let b = random_complex(&mut rng, fwd.len(), fwd.origin());
        let lhs: f64 = fwd.samples().iter().zip(b.samples()).map(|(p, q)| (p * q.conj()).re).sum();
        let adj = backprop_error(&b, &f, w).unwrap();
        let rhs: f64 = (0..4).map(|v| (a.origin()..a.end()).map(|t| a.at(v, t) * adj.at(v, t)).sum::<f64>()).sum();
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    outcome(worst < 1e-10, format!("max |<Fa,b> - <a,F*b>| / |<Fa,b>| = {worst:.1e} over 50 pairs"))
}

fn estimator() -> Outcome {
    let t0 = Instant::now();
    let tx = TxParams::default();
    let mut base = ImpairmentChannelSpec::nominal();
    base.alpha = 1;
    base.dac_bits = None;
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..3 {
        let spec = ImpairmentChannelSpec::random(&base, &ImpairmentRanges::default(), derive_seed(5, 0, seed));
        let truth = build_equivalent_mimo(&spec, tx.omega0(), F_TAPS, F_LEAD).unwrap();
        let mut est = ChannelEstimate::new(MimoFir::zeros(4, 4, F_TAPS, F_LEAD), 0.5, 128).unwrap();
        let trace = train_estimator_white(&spec, tx.omega0(), &mut est, &truth, 2_000_000, 0.3, 500_000, seed).unwrap();
        worst = worst.max(trace.last().unwrap().nmse_db);
    }
    let (fast, time) = within(t0.elapsed(), 120);
    outcome(worst < -30.0 && fast, format!("worst NMSE {worst:.1} dB after 2e6 samples, M = 128, 3 random channels; {time}"))
}

fn sweep_rows(dir: &Path, kind: ExperimentKind) -> Vec<SweepRow> {
    read_csv(std::fs::File::open(dir.join(format!("{kind}.csv"))).unwrap()).unwrap()
}

fn compensation(tmp: &Path) -> Outcome {
    let t0 = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (kind, max) in [(ExperimentKind::SweepGain, 0.25), (ExperimentKind::SweepPhase, 22.0), (ExperimentKind::SweepBw, 0.25)] {
        let dir = tmp.join(kind.name());
        let report = run(&ExperimentConfig::for_experiment(kind), &dir, 8);
        let rows = sweep_rows(&dir, kind);
        let r = rows.iter().find(|r| r.value == max).expect("maximum in sweep");
        let pass = r.penalty_compensated_db < 0.5 && r.penalty_uncompensated_db - r.penalty_compensated_db >= 1.0;
        ok &= pass;
        parts.push(format!("{kind} at {max}: {:.2} dB vs {:.2} dB", r.penalty_uncompensated_db, r.penalty_compensated_db));
        for c in report.checks.iter().filter(|c| !c.passed) {
            parts.push(format!("[{kind} check {} failed: {}]", c.name, c.detail));
        }
    }
    let (fast, time) = within(t0.elapsed(), 15 * 60);
    outcome(ok && fast, format!("{}; {time}", parts.join("; ")))
}

fn montecarlo(tmp: &Path) -> Outcome {
    let t0 = Instant::now();
    let dir = tmp.join("montecarlo");
    let report = run(&ExperimentConfig::for_experiment(ExperimentKind::Montecarlo), &dir, 8);
    let detail: Vec<String> = report.checks.iter().map(|c| format!("{}: {}", c.name, c.detail)).collect();
    let get = |n: &str| report.checks.iter().find(|c| c.name == n).is_some_and(|c| c.passed);
    let (fast, time) = within(t0.elapsed(), 30 * 60);
    outcome(get("compensated_within_ratio") && get("uncompensated_median_ratio") && fast, format!("{}; {time}", detail.join("; ")))
}

fn zero_impairment(tmp: &Path) -> Outcome {
    let dir = tmp.join(ExperimentKind::SweepGain.name());
    let rows = sweep_rows(&dir, ExperimentKind::SweepGain);
    let r = rows.iter().find(|r| r.value == 0.0).expect("zero point");
    let pen_ok = r.penalty_uncompensated_db.abs() <= 0.1 && r.penalty_compensated_db.abs() <= 0.1;

    let cfg = ExperimentConfig::for_experiment(ExperimentKind::SweepGain);
    let cal: AdaptOutcome = serde_json::from_str(&std::fs::read_to_string(dir.join("calibration.json")).unwrap()).unwrap();
    let link = Link::new(&cfg.tx, &cfg.link, 99).unwrap();
    let xh = link.transmit(&cal.ie.h, &cfg.channel).unwrap();
    let es = esn0_for_ber_16qam(1e-3).unwrap();
    let mut count = fidac::metrics::BerCount::default();
    for s in 0..3 {
        count = count.merge(link.ber(&xh, &NoiseLoader::new(es, 1000 + s)).unwrap());
    }
    let ratio = count.ber() / ber_16qam_gray(es);
    outcome(
        pen_ok && (ratio - 1.0).abs() <= 0.3,
        format!(
            "penalties {:.3} / {:.3} dB; BER {:.3e} at {es:.2} dB vs closed form 1e-3 ({:+.1}%)",
            r.penalty_uncompensated_db,
            r.penalty_compensated_db,
            count.ber(),
            100.0 * (ratio - 1.0)
        ),
    )
}

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "jsonl"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

fn determinism(tmp: &Path) -> Outcome {
    let small = [
        "link.symbols=20000",
        "calibration.joint_samples=262144",
        "adapt.ce_only_samples=65536",
        "adapt.joint_samples=131072",
        "montecarlo.channels=3",
        "sweep.gain=[0.0, 0.25]",
    ]
    .map(String::from);
    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [ExperimentKind::SweepGain, ExperimentKind::Montecarlo] {
        let cfg = ExperimentConfig::resolve(Some(kind), None, false, &small).unwrap();
        let a = tmp.join(format!("det-a-{kind}"));
        let b = tmp.join(format!("det-b-{kind}"));
        run(&cfg, &a, 1);
        run(&cfg, &b, 3);
        let (fa, fb) = (csv_bytes(&a), csv_bytes(&b));
        let same = !fa.is_empty() && fa == fb;
        ok &= same;
        parts.push(format!("{kind}: {} files {}", fa.len(), if same { "identical" } else { "differ" }));
    }
    outcome(ok, format!("{} (1 vs 3 workers)", parts.join(", ")))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(&str, Box<dyn Fn(&Path) -> Outcome>)> = vec![
        ("model equivalence", Box::new(equivalence)),
        ("mixer-constant identities", Box::new(|_| mixer_identities())),
        ("gradient correctness", Box::new(|_| gradient())),
        ("adjoint identity", Box::new(|_| adjoint())),
        ("channel estimator convergence", Box::new(|_| estimator())),
        ("compensation effectiveness", Box::new(compensation)),
        ("monte carlo", Box::new(montecarlo)),
        ("zero-impairment sanity", Box::new(zero_impairment)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f(tmp.path());
        if !o.passed {
            failed += 1;
        }
        println!("criterion {} {name}: {} ({})", i + 1, if o.passed { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
