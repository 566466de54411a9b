//! Acceptance gate: one pass/fail line per criterion, non-zero exit on any
//! failure. Run with `cargo test -p uregm-cli --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tempfile::TempDir;
use uregm::data::{Dataset, SampleRecord, SmellType, TargetKind};
use uregm::ensemble::{self, default_configs};
use uregm::evaluation::{self, ModelSpec};
use uregm::learners::{self, LearnerConfig, LearnerKind, Parameters};
use uregm::workload::{self, AnchorCurve, GenConfig};
use uregm::{metrics, select, FeatureMask, GAConfig};

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn dataset(columns: &[Vec<f64>], y: &[f64]) -> Dataset<f64> {
    let names = (1..=columns.len()).map(|j| format!("f{j}")).collect();
    let rows = y
        .iter()
        .enumerate()
        .map(|(i, &t)| SampleRecord {
            sample_id: format!("r{i}"),
            smell_type: SmellType::ALL[i % 5],
            features: columns.iter().map(|c| c[i]).collect(),
            delta_cpu: Some(t),
            delta_mem: None,
        })
        .collect();
    Dataset::new(names, rows, TargetKind::Cpu).unwrap()
}

fn within(label: &str, elapsed: Duration, budget: Duration) -> Result<(), String> {
    if elapsed > budget {
        Err(format!("{label} took {elapsed:.1?}, budget {budget:?}"))
    } else {
        Ok(())
    }
}

fn metric_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_rmse, mut worst_acc) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let n = rng.random_range(1..50);
        let pred: Vec<f64> = (0..n).map(|_| rng.random_range(-20.0..20.0)).collect();
        let actual: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..20.0)).collect();
        let mse = metrics::mse(&pred, &actual).unwrap();
        worst_rmse = worst_rmse.max((metrics::rmse(&pred, &actual).unwrap() - mse.sqrt()).abs());
        let a = rng.random_range(0.01..100.0);
        let sp: Vec<f64> = pred.iter().map(|v| v * a).collect();
        let sa: Vec<f64> = actual.iter().map(|v| v * a).collect();
        let acc = metrics::accuracy(&pred, &actual).unwrap();
        worst_acc = worst_acc.max((metrics::accuracy(&sp, &sa).unwrap() - acc).abs());
    }
    if worst_rmse <= 1e-12 && worst_acc <= 1e-9 {
        Ok(format!("max |rmse − √mse| = {worst_rmse:.1e}, max accuracy drift = {worst_acc:.1e}"))
    } else {
        Err(format!("rmse gap {worst_rmse:.1e}, accuracy drift {worst_acc:.1e}"))
    }
}

fn ga_fixture(seed: u64) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut cols = vec![Vec::new(); 8];
    let mut y = Vec::new();
    for _ in 0..200 {
        for (j, c) in cols.iter_mut().enumerate() {
            let v: f64 = rng.random();
            // f1 ∈ [2, 3] keeps the target positive.
            c.push(if j == 0 { 2.0 + v } else { v });
        }
        y.push(3.0 * cols[0].last().unwrap() - 2.0 * cols[1].last().unwrap() + noise.sample(&mut rng));
    }
    dataset(&cols, &y)
}

fn ga_oracle() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let ds = ga_fixture(seed);
        let cfg = GAConfig { seed, ..GAConfig::default() };
        let res = select::evolve(&ds, &cfg).map_err(|e| e.to_string())?;
        let exhaustive = (1..256u64)
            .map(|code| select::fitness(&FeatureMask::from_code(8, code), &ds, cfg.fitness_folds, seed).unwrap())
            .fold(f64::MIN, f64::max);
        worst = worst.max((res.best_fitness - exhaustive).abs());
    }
    if worst <= 1e-9 {
        Ok(format!("5 seeds, max |GA − exhaustive| = {worst:.1e}"))
    } else {
        Err(format!("max |GA − exhaustive| = {worst:.3e}"))
    }
}

fn coefficients(m: &uregm::FittedLearner) -> (f64, Vec<f64>) {
    match &m.parameters {
        Parameters::Coefficients { intercept, weights } => (*intercept, weights.clone()),
        Parameters::Trees(_) => unreachable!(),
    }
}

fn lasso_limits() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cols: Vec<Vec<f64>> = (0..10).map(|_| (0..500).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let noise = Normal::new(0.0, 0.5).unwrap();
    let y: Vec<f64> = (0..500)
        .map(|i| 4.0 + (0..10).map(|j| (j as f64 - 4.5) * cols[j][i]).sum::<f64>() + noise.sample(&mut rng))
        .collect();
    let ds = dataset(&cols, &y);
    let mask = FeatureMask::all(10);
    let train = |cfg: LearnerConfig| coefficients(&learners::train(&ds, &mask, &cfg).unwrap());
    let (_, ols) = train(LearnerConfig::new(LearnerKind::LiR));
    let (_, tiny) = train(LearnerConfig {
        lasso_lambda: 1e-8,
        lasso_max_sweeps: 100_000,
        lasso_tol: 1e-12,
        ..LearnerConfig::new(LearnerKind::LR)
    });
    let gap = ols.iter().zip(&tiny).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let (b0, huge) = train(LearnerConfig { lasso_lambda: 1e6, ..LearnerConfig::new(LearnerKind::LR) });
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let zero = huge.iter().all(|&w| w == 0.0);
    if gap <= 1e-4 && zero && (b0 - mean).abs() <= 1e-9 {
        Ok(format!("λ=1e-8 max gap {gap:.1e}; λ=1e6 slopes 0, |b0 − ȳ| = {:.1e}", (b0 - mean).abs()))
    } else {
        Err(format!("gap {gap:.1e}, slopes zero {zero}, |b0 − ȳ| {:.1e}", (b0 - mean).abs()))
    }
}

fn ensemble_dominance() -> Check {
    let specs = [
        ModelSpec::Learner(LearnerKind::LiR),
        ModelSpec::Learner(LearnerKind::PR),
        ModelSpec::Learner(LearnerKind::LR),
        ModelSpec::Learner(LearnerKind::RF),
        ModelSpec::Uregm,
    ];
    let (mut at_least, mut strictly) = (0, 0);
    for seed in 0..20 {
        let ds: uregm::Dataset = workload::generate(&GenConfig { rows: 1000, seed, ..GenConfig::default() }).unwrap();
        let mask = FeatureMask::all(ds.n_features());
        let r = evaluation::kfold_evaluate(&ds, &mask, &specs, &default_configs(), 5, seed).map_err(|e| e.to_string())?;
        let u = r.models["URegM"].accuracy;
        let best = LearnerKind::ALL.iter().map(|k| r.models[k.label()].accuracy).fold(f64::MIN, f64::max);
        at_least += (u >= best) as usize;
        strictly += (u > best) as usize;
    }
    let msg = format!("≥ best singleton {at_least}/20, strictly greater {strictly}/20");
    if at_least == 20 && strictly >= 10 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// MAE between the anchors and URegM's mean prediction over the probe rows.
fn anchor_mae(target: TargetKind, curve: &AnchorCurve, limit: f64) -> Check {
    let ds: uregm::Dataset = workload::generate(&GenConfig { rows: 5000, seed: 42, target, ..GenConfig::default() }).unwrap();
    let model = ensemble::uregm_search(&ds, &FeatureMask::all(ds.n_features()), &default_configs(), 5, 42)
        .map_err(|e| e.to_string())?;
    let mut cells = Vec::new();
    let mut mae = 0.0;
    for &(t, actual) in &curve.points {
        let probe: uregm::Dataset = workload::anchor_probe(t, target).unwrap();
        let p = ensemble::uregm_predict(&model, &probe).map_err(|e| e.to_string())?;
        let mean = p.iter().sum::<f64>() / p.len() as f64;
        cells.push(format!("{t}:{mean:.2}"));
        mae += (mean - actual).abs() / curve.points.len() as f64;
    }
    let msg = format!("MAE {mae:.3} pp (limit {limit}) [{}]", cells.join(" "));
    if mae <= limit {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_uregm"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

const PIPELINE_ARTIFACTS: [&str; 5] = ["d.csv", "mask.json", "model.json", "preds.csv", "report.json"];

fn pipeline(dir: &Path) -> Result<(), String> {
    run_cli(dir, &["gen-data", "--rows", "1000", "--seed", "7", "--target", "cpu", "--out", "d.csv"])?;
    run_cli(dir, &["select-features", "--data", "d.csv", "--target", "cpu", "--generations", "20", "--population", "20", "--seed", "7", "--out", "mask.json"])?;
    run_cli(dir, &["train", "--data", "d.csv", "--mask", "mask.json", "--model", "uregm", "--folds", "5", "--seed", "7", "--out", "model.json"])?;
    run_cli(dir, &["predict", "--model", "model.json", "--data", "d.csv", "--out", "preds.csv"])?;
    run_cli(dir, &["evaluate", "--data", "d.csv", "--mask", "mask.json", "--folds", "5", "--seed", "7", "--report", "report.json", "--format", "json"])
}

fn end_to_end_determinism() -> Check {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    pipeline(a.path())?;
    pipeline(b.path())?;
    for name in PIPELINE_ARTIFACTS {
        let x = fs::read(a.path().join(name)).map_err(|e| format!("{name}: {e}"))?;
        let y = fs::read(b.path().join(name)).map_err(|e| format!("{name}: {e}"))?;
        if x != y {
            return Err(format!("{name} differs between runs"));
        }
    }
    Ok(format!("{} artifacts byte-identical across two runs", PIPELINE_ARTIFACTS.len()))
}

fn scale_budget() -> Check {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    run_cli(d, &["gen-data", "--rows", "5000", "--seed", "8", "--out", "d.csv"])?;
    let eval = |jobs: &str, report: &str| {
        run_cli(d, &["--jobs", jobs, "evaluate", "--data", "d.csv", "--models", "lir,pr,lr,rf,reap,uregm", "--folds", "5", "--seed", "8", "--report", report, "--format", "json"])
    };
    let start = Instant::now();
    eval("1", "r1.json")?;
    let single = start.elapsed();
    within("--jobs 1 evaluate", single, Duration::from_secs(60))?;
    eval("4", "r4.json")?;
    if fs::read(d.join("r1.json")).unwrap() != fs::read(d.join("r4.json")).unwrap() {
        return Err("--jobs 4 report differs from --jobs 1".into());
    }
    Ok(format!("--jobs 1 in {single:.1?}; --jobs 4 byte-identical"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 metric identities", Duration::from_secs(5), metric_identities),
        ("2 GA-oracle equivalence", Duration::from_secs(30), ga_oracle),
        ("3 lasso limits", Duration::from_secs(10), lasso_limits),
        ("4 ensemble dominance", Duration::from_secs(300), ensemble_dominance),
        ("5 CPU anchor reproduction", Duration::from_secs(120), || {
            anchor_mae(TargetKind::Cpu, &AnchorCurve::cpu(), 0.3)
        }),
        ("6 memory anchor reproduction", Duration::from_secs(120), || {
            anchor_mae(TargetKind::Memory, &AnchorCurve::mem_cleaned(), 0.35)
        }),
        ("7 end-to-end determinism", Duration::from_secs(180), end_to_end_determinism),
        ("8 scale budget", Duration::from_secs(120), scale_budget),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let result = check().and_then(|msg| within(name, start.elapsed(), budget).map(|_| msg));
        let elapsed = start.elapsed();
        match result {
            Ok(msg) => println!("[PASS] {name} ({elapsed:.1?}): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("[FAIL] {name} ({elapsed:.1?}): {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
