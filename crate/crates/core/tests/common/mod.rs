#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use uregm::data::{Dataset, SampleRecord, SmellType, TargetKind};

/// Column-major features plus a cpu target.
pub fn dataset(columns: &[Vec<f64>], y: &[f64]) -> Dataset<f64> {
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

/// 8 features, target 3·f1 − 2·f2 + N(0, 0.05); f1 ∈ [2, 3] keeps targets positive.
pub fn ga_fixture(rows: usize, seed: u64) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.05).unwrap();
    let mut cols: Vec<Vec<f64>> = (0..8).map(|_| Vec::with_capacity(rows)).collect();
    let mut y = Vec::with_capacity(rows);
    for _ in 0..rows {
        for (j, c) in cols.iter_mut().enumerate() {
            let v: f64 = rng.random();
            c.push(if j == 0 { 2.0 + v } else { v });
        }
        y.push(3.0 * cols[0].last().unwrap() - 2.0 * cols[1].last().unwrap() + noise.sample(&mut rng));
    }
    dataset(&cols, &y)
}

/// `n` rows of `p` uniform features with `y = 5 + Σ (j+1)·x_j + N(0, sigma)`.
pub fn linear_fixture(n: usize, p: usize, sigma: f64, seed: u64) -> Dataset<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y = (0..n)
        .map(|i| {
            let e = if sigma > 0.0 { Normal::new(0.0, sigma).unwrap().sample(&mut rng) } else { 0.0 };
            5.0 + (0..p).map(|j| (j + 1) as f64 * cols[j][i]).sum::<f64>() + e
        })
        .collect::<Vec<_>>();
    dataset(&cols, &y)
}
