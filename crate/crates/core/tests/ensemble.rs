mod common;

use common::{dataset, linear_fixture};
use proptest::prelude::*;
use uregm::ensemble::{self, default_configs, OofMatrix};
use uregm::learners::{self, LearnerConfig, LearnerKind};
use uregm::mask::FeatureMask;
use uregm::workload::{self, GenConfig};

fn fast_configs() -> ensemble::ConfigMap {
    let mut cfgs = default_configs();
    cfgs.get_mut(&LearnerKind::RF).unwrap().rf_trees = 20;
    cfgs
}

fn generated(rows: usize, seed: u64) -> uregm::Dataset {
    workload::generate(&GenConfig { rows, seed, ..GenConfig::default() }).unwrap()
}

#[test]
fn oof_constant_target() {
    let ds = linear_fixture(30, 2, 0.0, 1);
    let cols: Vec<Vec<f64>> = (0..2).map(|j| ds.column(j)).collect();
    let ds = dataset(&cols, &[5.0; 30]);
    let oof = ensemble::oof_predictions(&ds, &FeatureMask::all(2), &[LearnerKind::LiR], &default_configs(), 5, 0).unwrap();
    assert!(oof.columns[0].iter().all(|v| (v - 5.0).abs() < 1e-9));
}

#[test]
fn oof_leave_one_out_covers_every_row() {
    let ds = linear_fixture(10, 1, 0.0, 2);
    let oof = ensemble::oof_predictions(&ds, &FeatureMask::all(1), &[LearnerKind::LiR], &default_configs(), 10, 0).unwrap();
    assert_eq!(oof.n_rows(), 10);
    // Exact-linear target: each held-out row is interpolated by the fold model.
    let y = ds.targets().unwrap();
    for (p, t) in oof.columns[0].iter().zip(&y) {
        assert!((p - t).abs() < 1e-6);
    }
}

#[test]
fn oof_rows_come_from_models_that_did_not_see_them() {
    // With one tree and min_leaf = n - fold, each fold model is the fold's
    // training mean, so every held-out prediction must exclude its own row.
    let x: Vec<f64> = (0..10).map(f64::from).collect();
    let y: Vec<f64> = (0..10).map(|i| if i == 3 { 1000.0 } else { 1.0 }).collect();
    let ds = dataset(&[x], &y);
    let mut cfgs = default_configs();
    *cfgs.get_mut(&LearnerKind::RF).unwrap() = LearnerConfig {
        rf_trees: 1,
        rf_min_leaf: 100,
        rf_bootstrap: false,
        ..LearnerConfig::new(LearnerKind::RF)
    };
    let oof = ensemble::oof_predictions(&ds, &FeatureMask::all(1), &[LearnerKind::RF], &cfgs, 10, 0).unwrap();
    assert_eq!(oof.columns[0][3], 1.0);
    assert!(oof.columns[0].iter().enumerate().all(|(i, &p)| i == 3 || p > 100.0));
}

#[test]
fn search_log_and_containment() {
    let ds = generated(300, 1);
    let model = ensemble::uregm_search(&ds, &FeatureMask::all(ds.n_features()), &fast_configs(), 5, 3).unwrap();
    assert_eq!(model.search_log.len(), 15);
    let best_single = model.search_log[..4].iter().map(|r| r.score).fold(f64::MIN, f64::max);
    assert!(model.best.score >= best_single);
    let max_score = model.search_log.iter().map(|r| r.score).fold(f64::MIN, f64::max);
    assert_eq!(model.best.score, max_score);
    for r in &model.search_log {
        let w = &r.combination.weights;
        assert!(w.iter().all(|&v| v >= 0.0));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    assert_eq!(model.fitted_members.len(), model.best.combination.members.len());
}

#[test]
fn exact_linear_target_is_won_by_a_set_with_lir_score() {
    let ds = linear_fixture(120, 3, 0.0, 4);
    let model = ensemble::uregm_search(&ds, &FeatureMask::all(3), &fast_configs(), 5, 0).unwrap();
    let lir = &model.search_log[0];
    assert_eq!(lir.combination.members, vec![LearnerKind::LiR]);
    assert!((model.best.score - lir.score).abs() < 1e-6);
    let pred = ensemble::uregm_predict(&model, &ds).unwrap();
    assert!(uregm::metrics::mse(&pred, &ds.targets().unwrap()).unwrap() < 1e-6);
}

#[test]
fn reap_has_one_entry_and_fits_exact_targets() {
    let ds = linear_fixture(120, 3, 0.0, 5);
    let model = ensemble::reap_baseline(&ds, &FeatureMask::all(3), &fast_configs(), 5, 0).unwrap();
    assert_eq!(model.search_log.len(), 1);
    assert_eq!(model.label, ensemble::LABEL_REAP);
    let pred = ensemble::uregm_predict(&model, &ds).unwrap();
    assert!(uregm::metrics::mse(&pred, &ds.targets().unwrap()).unwrap() < 1e-6);
}

#[test]
fn predictions_are_convex_in_members() {
    let ds = generated(200, 6);
    let model = ensemble::uregm_search(&ds, &FeatureMask::all(ds.n_features()), &fast_configs(), 4, 1).unwrap();
    let probe = generated(50, 99);
    let members = ensemble::member_predictions(&model, &probe).unwrap();
    let pred = ensemble::uregm_predict(&model, &probe).unwrap();
    for (i, p) in pred.iter().enumerate() {
        let lo = members.iter().map(|m| m[i]).fold(f64::MAX, f64::min);
        let hi = members.iter().map(|m| m[i]).fold(f64::MIN, f64::max);
        assert!(*p >= lo - 1e-12 && *p <= hi + 1e-12);
    }
}

#[test]
fn single_member_model_passes_through() {
    let ds = linear_fixture(120, 3, 0.0, 7);
    let model = ensemble::uregm_search(&ds, &FeatureMask::all(3), &fast_configs(), 5, 0).unwrap();
    assert_eq!(model.best.combination.members.len(), 1);
    let k = model.best.combination.members[0];
    let direct = learners::predict(&model.fitted_members[&k], &ds).unwrap();
    assert_eq!(ensemble::uregm_predict(&model, &ds).unwrap(), direct);
}

#[test]
fn search_is_deterministic() {
    let ds = generated(150, 8);
    let mask = FeatureMask::all(ds.n_features());
    let a = ensemble::uregm_search(&ds, &mask, &fast_configs(), 5, 2).unwrap().without_timings();
    let b = ensemble::uregm_search(&ds, &mask, &fast_configs(), 5, 2).unwrap().without_timings();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn search_ignores_thread_count() {
    let ds = generated(150, 9);
    let mask = FeatureMask::all(ds.n_features());
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let m = pool.install(|| ensemble::uregm_search(&ds, &mask, &fast_configs(), 5, 2).unwrap());
        serde_json::to_string(&m.without_timings()).unwrap()
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn weights_match_grid_search() {
    // Target column and a target-independent noise column.
    let y: Vec<f64> = (0..60).map(|i| 3.0 + (i as f64 * 0.37).sin()).collect();
    let noise: Vec<f64> = (0..60).map(|i| 3.0 + ((i * 17) % 7) as f64 / 3.0).collect();
    let cols = [y.as_slice(), noise.as_slice()];
    let w = ensemble::fit_weights(&cols, &y).unwrap();
    assert!(w[0] >= 0.99);
    let got = ensemble::blend_objective(&cols, &y, &w);
    let grid = (0..=1000)
        .map(|k| {
            let a = k as f64 / 1000.0;
            ensemble::blend_objective(&cols, &y, &[a, 1.0 - a])
        })
        .fold(f64::MAX, f64::min);
    assert!(got <= grid + 1e-12);
}

#[test]
fn weights_for_partial_signals_match_grid() {
    let y: Vec<f64> = (0..80).map(|i| 2.0 + (i as f64 * 0.21).cos()).collect();
    let a: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + if i % 2 == 0 { 0.4 } else { -0.1 }).collect();
    let b: Vec<f64> = y.iter().enumerate().map(|(i, v)| v + if i % 2 == 0 { -0.3 } else { 0.2 }).collect();
    let c: Vec<f64> = y.iter().map(|v| v * 0.5 + 1.0).collect();
    let cols = [a.as_slice(), b.as_slice(), c.as_slice()];
    let w = ensemble::fit_weights(&cols, &y).unwrap();
    let got = ensemble::blend_objective(&cols, &y, &w);
    let mut grid = f64::MAX;
    for i in 0..=200 {
        for j in 0..=(200 - i) {
            let (p, q) = (i as f64 / 200.0, j as f64 / 200.0);
            grid = grid.min(ensemble::blend_objective(&cols, &y, &[p, q, 1.0 - p - q]));
        }
    }
    assert!(got <= grid + 1e-12, "{got} vs {grid}");
}

#[test]
fn identical_columns_keep_single_column_objective() {
    let y: Vec<f64> = (0..20).map(f64::from).collect();
    let x: Vec<f64> = y.iter().map(|v| v + 0.5).collect();
    let w = ensemble::fit_weights(&[&x, &x], &y).unwrap();
    assert!((w[0] + w[1] - 1.0).abs() < 1e-9);
    let single = ensemble::blend_objective(&[&x], &y, &[1.0]);
    assert!((ensemble::blend_objective(&[&x, &x], &y, &w) - single).abs() < 1e-9);
}

#[test]
fn running_best_is_monotone() {
    let ds = generated(150, 10);
    let oof: OofMatrix<f64> =
        ensemble::oof_predictions(&ds, &FeatureMask::all(ds.n_features()), &LearnerKind::ALL, &fast_configs(), 5, 0)
            .unwrap();
    let (log, best) = ensemble::search_combinations(&oof, &ds.targets().unwrap()).unwrap();
    let mut running = f64::MIN;
    let mut arg = 0;
    for (i, r) in log.iter().enumerate() {
        if r.score > running {
            running = r.score;
            arg = i;
        }
    }
    assert_eq!(best, arg);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fitted_weights_lie_on_simplex(
        cols in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 12), 1..5),
        y in prop::collection::vec(-10.0f64..10.0, 12),
    ) {
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let w = ensemble::fit_weights(&refs, &y).unwrap();
        prop_assert!(w.iter().all(|&v| v >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        // Never worse than the best single column.
        let got = ensemble::blend_objective(&refs, &y, &w);
        for j in 0..refs.len() {
            let mut e = vec![0.0; refs.len()];
            e[j] = 1.0;
            prop_assert!(got <= ensemble::blend_objective(&refs, &y, &e) + 1e-9);
        }
    }
}
