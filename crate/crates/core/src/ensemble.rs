//! The unified model: every non-empty subset of the four base learners is
//! scored by out-of-fold stacking and the best-scoring blend is kept.
//!
//! Out-of-fold predictions are computed once per `(fold, learner)` and shared
//! by all fifteen subsets, so a singleton subset scores exactly what its
//! learner scores alone. Blends use non-negative weights summing to one. The
//! fixed REAP-analogue baseline instead stacks all four learners with an
//! unconstrained least-squares combiner.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, NormStats};
use crate::error::{Error, Result};
use crate::learners::{self, FittedLearner, LearnerConfig, LearnerKind};
use crate::linalg;
use crate::mask::FeatureMask;
use crate::metrics;
use crate::rng;
use crate::scalar::Scalar;

pub const LABEL_UREGM: &str = "URegM";
pub const LABEL_REAP: &str = "REAP-analogue";
pub const DEFAULT_FOLDS: usize = 5;
pub const FORMAT_VERSION: u32 = 1;

const WEIGHT_MAX_ITERS: usize = 10_000;
const WEIGHT_STOP_NORM: f64 = 1e-10;

pub type ConfigMap = BTreeMap<LearnerKind, LearnerConfig>;

/// Default hyperparameters for all four learners.
pub fn default_configs() -> ConfigMap {
    LearnerKind::ALL.iter().map(|&k| (k, LearnerConfig::new(k))).collect()
}

fn config_for(cfgs: &ConfigMap, kind: LearnerKind) -> LearnerConfig {
    let mut c = cfgs.get(&kind).cloned().unwrap_or_else(|| LearnerConfig::new(kind));
    c.kind = kind;
    c
}

/// Members with their blend weights. Convex blends have `intercept == 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Combination<F> {
    pub members: Vec<LearnerKind>,
    pub weights: Vec<F>,
    #[serde(default)]
    pub intercept: F,
}

impl<F: Scalar> Combination<F> {
    /// Non-negative weights summing to one (within 1e-9).
    pub fn convex(members: Vec<LearnerKind>, weights: Vec<F>) -> Result<Self> {
        if members.is_empty() || members.len() != weights.len() {
            return Err(Error::InvalidArgument("combination needs one weight per member".into()));
        }
        let sum: F = weights.iter().copied().sum();
        if weights.iter().any(|&w| w < F::zero()) || (sum - F::one()).abs() > F::lit(1e-9) {
            return Err(Error::InvalidArgument(format!("weights must lie on the simplex, sum {sum}")));
        }
        Ok(Combination {
            members,
            weights,
            intercept: F::zero(),
        })
    }

    pub fn affine(members: Vec<LearnerKind>, intercept: F, weights: Vec<F>) -> Self {
        Combination {
            members,
            weights,
            intercept,
        }
    }

    /// `intercept + sum_k w_k * preds[k]`, where `preds` follows `members`.
    pub fn blend(&self, preds: &[&[F]]) -> Vec<F> {
        let n = preds.first().map_or(0, |p| p.len());
        (0..n)
            .map(|i| self.intercept + self.weights.iter().zip(preds).map(|(&w, p)| w * p[i]).sum::<F>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct CombinationResult<F> {
    #[serde(flatten)]
    pub combination: Combination<F>,
    /// Cross-validated accuracy of the blended out-of-fold prediction.
    pub score: F,
    pub mse: F,
    pub rmse: F,
    pub fit_time_s: Option<f64>,
}

impl<F: Scalar> CombinationResult<F> {
    fn new(combination: Combination<F>, blended: &[F], y: &[F], fit_time_s: f64) -> Result<Self> {
        let mse = metrics::mse(blended, y)?;
        Ok(CombinationResult {
            combination,
            score: metrics::accuracy(blended, y)?,
            mse,
            rmse: mse.sqrt(),
            fit_time_s: Some(fit_time_s),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct UregmModel<F> {
    /// `URegM` or `REAP-analogue`.
    pub label: String,
    pub best: CombinationResult<F>,
    pub fitted_members: BTreeMap<LearnerKind, FittedLearner<F>>,
    pub mask: FeatureMask,
    pub norm: NormStats<F>,
    pub search_log: Vec<CombinationResult<F>>,
    pub folds: usize,
    pub seed: u64,
    pub format_version: u32,
}

impl<F: Scalar> UregmModel<F> {
    /// Drops wall-clock fields so two runs serialize identically.
    pub fn without_timings(mut self) -> Self {
        self.best.fit_time_s = None;
        for r in &mut self.search_log {
            r.fit_time_s = None;
        }
        self.fitted_members = self
            .fitted_members
            .into_iter()
            .map(|(k, m)| (k, m.without_timing()))
            .collect();
        self
    }
}

/// Out-of-fold predictions, one column per learner kind.
#[derive(Debug, Clone, PartialEq)]
pub struct OofMatrix<F> {
    pub kinds: Vec<LearnerKind>,
    pub columns: Vec<Vec<F>>,
    /// Summed train+predict seconds per kind across folds.
    pub times: Vec<f64>,
}

impl<F: Scalar> OofMatrix<F> {
    pub fn column(&self, kind: LearnerKind) -> Option<&[F]> {
        self.kinds.iter().position(|&k| k == kind).map(|i| self.columns[i].as_slice())
    }

    pub fn time(&self, kind: LearnerKind) -> Option<f64> {
        self.kinds.iter().position(|&k| k == kind).map(|i| self.times[i])
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

/// Learner seed for one fold; independent of which other kinds are trained.
pub fn fold_seed(seed: u64, fold: usize, kind: LearnerKind) -> u64 {
    rng::derive_seed(seed, "oof", &[fold as u64, kind.index() as u64])
}

pub fn refit_seed(seed: u64, kind: LearnerKind) -> u64 {
    rng::derive_seed(seed, "refit", &[kind.index() as u64])
}

/// Out-of-fold predictions over the folds of `kfold_indices(n, folds, seed)`.
pub fn oof_predictions<F: Scalar>(
    ds: &Dataset<F>,
    mask: &FeatureMask,
    kinds: &[LearnerKind],
    cfgs: &ConfigMap,
    folds: usize,
    seed: u64,
) -> Result<OofMatrix<F>> {
    let partition = data::kfold_indices(ds.len(), folds, seed)?;
    oof_on_partition(ds, mask, kinds, cfgs, &partition, seed)
}

pub(crate) fn oof_on_partition<F: Scalar>(
    ds: &Dataset<F>,
    mask: &FeatureMask,
    kinds: &[LearnerKind],
    cfgs: &ConfigMap,
    partition: &[Vec<usize>],
    seed: u64,
) -> Result<OofMatrix<F>> {
    mask.validate(ds.n_features())?;
    ds.targets()?;
    let n = ds.len();
    let jobs: Vec<(usize, usize)> = (0..partition.len())
        .flat_map(|f| (0..kinds.len()).map(move |k| (f, k)))
        .collect();
    let results: Vec<Result<(Vec<F>, f64)>> = jobs
        .par_iter()
        .map(|&(f, k)| {
            let kind = kinds[k];
            let fold = &partition[f];
            let cfg = config_for(cfgs, kind).with_seed(fold_seed(seed, f, kind));
            let start = Instant::now();
            let train = ds.subset(&data::complement(n, fold));
            let model = learners::train(&train, mask, &cfg).map_err(|e| e.in_fold(kind.label(), f))?;
            let preds = learners::predict(&model, &ds.subset(fold)).map_err(|e| e.in_fold(kind.label(), f))?;
            Ok((preds, start.elapsed().as_secs_f64()))
        })
        .collect();

    let mut columns = vec![vec![F::zero(); n]; kinds.len()];
    let mut times = vec![0.0; kinds.len()];
    for (&(f, k), r) in jobs.iter().zip(results) {
        let (preds, t) = r?;
        for (&i, p) in partition[f].iter().zip(preds) {
            columns[k][i] = p;
        }
        times[k] += t;
    }
    Ok(OofMatrix {
        kinds: kinds.to_vec(),
        columns,
        times,
    })
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex<F: Scalar>(v: &[F]) -> Vec<F> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut cumsum = F::zero();
    let mut theta = F::zero();
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - F::one()) / F::from_usize_lossy(j + 1);
        if uj - t > F::zero() {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(F::zero())).collect()
}

/// `||A w - y||^2`.
pub fn blend_objective<F: Scalar>(columns: &[&[F]], y: &[F], w: &[F]) -> F {
    (0..y.len())
        .map(|i| {
            let r = columns.iter().zip(w).map(|(c, &wk)| c[i] * wk).sum::<F>() - y[i];
            r * r
        })
        .sum()
}

/// Simplex-constrained least squares: `min ||A w - y||^2, w >= 0, sum w = 1`.
///
/// On the simplex `A w - y = D w` with `D = A - y 1ᵀ`, so projected gradient
/// runs on the residual Gram matrix `DᵀD`, with step `1 / L`,
/// `L = 2 * lambda_max(DᵀD)`. It starts from the best single column, which
/// makes the result never worse than any single member.
pub fn fit_weights<F: Scalar>(columns: &[&[F]], y: &[F]) -> Result<Vec<F>> {
    if columns.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(c) = columns.iter().find(|c| c.len() != y.len()) {
        return Err(Error::LengthMismatch { left: c.len(), right: y.len() });
    }
    if y.iter().chain(columns.iter().flat_map(|c| c.iter())).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("stacking inputs"));
    }
    let k = columns.len();
    if k == 1 {
        return Ok(vec![F::one()]);
    }
    let resid: Vec<Vec<F>> = columns
        .iter()
        .map(|c| c.iter().zip(y).map(|(&p, &t)| p - t).collect())
        .collect();
    let gram = linalg::gram(&resid);
    let lipschitz = F::lit(2.0) * linalg::spectral_radius(&gram);

    let best_vertex = (0..k)
        .min_by(|&a, &b| gram[a][a].partial_cmp(&gram[b][b]).expect("finite"))
        .expect("k >= 2");
    let mut w = vec![F::zero(); k];
    w[best_vertex] = F::one();
    if lipschitz <= F::zero() {
        return Ok(w);
    }
    let step = F::one() / lipschitz;
    let stop = F::lit(WEIGHT_STOP_NORM);
    for _ in 0..WEIGHT_MAX_ITERS {
        let grad: Vec<F> = gram
            .iter()
            .map(|row| F::lit(2.0) * row.iter().zip(&w).map(|(&g, &x)| g * x).sum::<F>())
            .collect();
        let trial: Vec<F> = w.iter().zip(&grad).map(|(&x, &g)| x - step * g).collect();
        let next = project_simplex(&trial);
        let delta = next.iter().zip(&w).map(|(&a, &b)| (a - b) * (a - b)).sum::<F>().sqrt();
        w = next;
        if delta < stop {
            break;
        }
    }
    Ok(w)
}

/// All fifteen non-empty subsets of the four learners, ordered by size and
/// then lexicographically over (LiR, PR, LR, RF). This order is also the
/// tie-break: earlier subsets win equal scores.
pub fn subsets() -> Vec<Vec<LearnerKind>> {
    let mut out: Vec<Vec<LearnerKind>> = (1u32..16)
        .map(|code| {
            LearnerKind::ALL
                .iter()
                .enumerate()
                .filter(|(i, _)| code >> i & 1 == 1)
                .map(|(_, &k)| k)
                .collect()
        })
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Scores every subset on shared out-of-fold predictions; returns the log in
/// subset order and the index of the winner.
pub fn search_combinations<F: Scalar>(oof: &OofMatrix<F>, y: &[F]) -> Result<(Vec<CombinationResult<F>>, usize)> {
    let candidates: Vec<Vec<LearnerKind>> = subsets()
        .into_iter()
        .filter(|s| s.iter().all(|k| oof.column(*k).is_some()))
        .collect();
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("no learner predictions to combine".into()));
    }
    let log: Vec<Result<CombinationResult<F>>> = candidates
        .par_iter()
        .map(|members| {
            let start = Instant::now();
            let cols: Vec<&[F]> = members.iter().map(|&k| oof.column(k).expect("filtered")).collect();
            let weights = fit_weights(&cols, y)?;
            let combo = Combination::convex(members.clone(), weights)?;
            let blended = combo.blend(&cols);
            let member_time: f64 = members.iter().filter_map(|&k| oof.time(k)).sum();
            CombinationResult::new(combo, &blended, y, member_time + start.elapsed().as_secs_f64())
        })
        .collect();
    let log = log.into_iter().collect::<Result<Vec<_>>>()?;

    // Strict improvement only: the first of equal scores is retained.
    let mut best = 0;
    for (i, r) in log.iter().enumerate().skip(1) {
        if r.score > log[best].score {
            best = i;
        }
    }
    Ok((log, best))
}

/// Unconstrained least-squares stacking of every column (intercept allowed).
pub fn fit_affine_combiner<F: Scalar>(oof: &OofMatrix<F>, y: &[F]) -> Result<CombinationResult<F>> {
    let start = Instant::now();
    let fit = linalg::least_squares(&oof.columns, y)?;
    let combo = Combination::affine(oof.kinds.clone(), fit.intercept, fit.coefficients);
    let cols: Vec<&[F]> = oof.columns.iter().map(Vec::as_slice).collect();
    let blended = combo.blend(&cols);
    let member_time: f64 = oof.times.iter().sum();
    CombinationResult::new(combo, &blended, y, member_time + start.elapsed().as_secs_f64())
}

fn refit_members<F: Scalar>(
    ds: &Dataset<F>,
    mask: &FeatureMask,
    kinds: &[LearnerKind],
    cfgs: &ConfigMap,
    seed: u64,
) -> Result<BTreeMap<LearnerKind, FittedLearner<F>>> {
    kinds
        .par_iter()
        .map(|&k| {
            let cfg = config_for(cfgs, k).with_seed(refit_seed(seed, k));
            learners::train(ds, mask, &cfg).map(|m| (k, m))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().collect())
}

fn check_search_inputs<F: Scalar>(ds: &Dataset<F>, mask: &FeatureMask, folds: usize) -> Result<()> {
    mask.validate(ds.n_features())?;
    if folds < 2 {
        return Err(Error::InvalidArgument(format!("folds must be >= 2, got {folds}")));
    }
    if ds.len() < folds {
        return Err(Error::TooManyFolds { folds, rows: ds.len() });
    }
    Ok(())
}

/// Exhaustive subset search; the winning members are refit on all of `ds`.
pub fn uregm_search<F: Scalar>(
    ds: &Dataset<F>,
    mask: &FeatureMask,
    cfgs: &ConfigMap,
    folds: usize,
    seed: u64,
) -> Result<UregmModel<F>> {
    check_search_inputs(ds, mask, folds)?;
    let y = ds.targets()?;
    let oof = oof_predictions(ds, mask, &LearnerKind::ALL, cfgs, folds, seed)?;
    let (search_log, best) = search_combinations(&oof, &y)?;
    let winner = search_log[best].clone();
    let fitted_members = refit_members(ds, mask, &winner.combination.members, cfgs, seed)?;
    Ok(UregmModel {
        label: LABEL_UREGM.into(),
        best: winner,
        fitted_members,
        mask: mask.clone(),
        norm: NormStats::fit(ds),
        search_log,
        folds,
        seed,
        format_version: FORMAT_VERSION,
    })
}

/// Fixed all-learner stacking baseline with an unconstrained combiner.
pub fn reap_baseline<F: Scalar>(
    ds: &Dataset<F>,
    mask: &FeatureMask,
    cfgs: &ConfigMap,
    folds: usize,
    seed: u64,
) -> Result<UregmModel<F>> {
    check_search_inputs(ds, mask, folds)?;
    let y = ds.targets()?;
    let oof = oof_predictions(ds, mask, &LearnerKind::ALL, cfgs, folds, seed)?;
    let result = fit_affine_combiner(&oof, &y)?;
    let fitted_members = refit_members(ds, mask, &LearnerKind::ALL, cfgs, seed)?;
    Ok(UregmModel {
        label: LABEL_REAP.into(),
        best: result.clone(),
        fitted_members,
        mask: mask.clone(),
        norm: NormStats::fit(ds),
        search_log: vec![result],
        folds,
        seed,
        format_version: FORMAT_VERSION,
    })
}

/// Each member's predictions, in `best.combination.members` order.
pub fn member_predictions<F: Scalar>(model: &UregmModel<F>, rows: &Dataset<F>) -> Result<Vec<Vec<F>>> {
    model
        .best
        .combination
        .members
        .iter()
        .map(|k| {
            let m = model
                .fitted_members
                .get(k)
                .ok_or_else(|| Error::InvalidArgument(format!("model lacks fitted member {k}")))?;
            learners::predict(m, rows)
        })
        .collect()
}

pub fn uregm_predict<F: Scalar>(model: &UregmModel<F>, rows: &Dataset<F>) -> Result<Vec<F>> {
    if model.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion(model.format_version));
    }
    let preds = member_predictions(model, rows)?;
    let refs: Vec<&[F]> = preds.iter().map(Vec::as_slice).collect();
    Ok(model.best.combination.blend(&refs))
}
