//! The four base regressors behind one train/predict contract.
//!
//! Every learner standardizes the training features itself (statistics are
//! kept in the fitted model and re-applied at prediction time) and fits the
//! raw, unstandardized target so predictions stay in percentage points.

pub mod forest;
pub mod lasso;
pub mod linear;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, NormStats};
use crate::error::{Error, Result};
use crate::mask::FeatureMask;
use crate::scalar::Scalar;

pub use forest::{Node, Tree};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LearnerKind {
    LiR,
    PR,
    LR,
    RF,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [LearnerKind::LiR, LearnerKind::PR, LearnerKind::LR, LearnerKind::RF];

    pub fn label(self) -> &'static str {
        match self {
            LearnerKind::LiR => "LiR",
            LearnerKind::PR => "PR",
            LearnerKind::LR => "LR",
            LearnerKind::RF => "RF",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lir" => Ok(LearnerKind::LiR),
            "pr" => Ok(LearnerKind::PR),
            "lr" => Ok(LearnerKind::LR),
            "rf" => Ok(LearnerKind::RF),
            _ => Err(Error::InvalidArgument(format!("unknown learner `{s}` (valid: lir, pr, lr, rf)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    pub poly_degree: usize,
    pub lasso_lambda: f64,
    pub lasso_max_sweeps: usize,
    pub lasso_tol: f64,
    pub rf_trees: usize,
    pub rf_max_depth: usize,
    pub rf_min_leaf: usize,
    pub rf_feature_subsample: f64,
    /// Draw each tree's rows with replacement; when false every tree sees the
    /// full training set.
    pub rf_bootstrap: bool,
    pub seed: u64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            kind: LearnerKind::LiR,
            poly_degree: 2,
            lasso_lambda: 0.1,
            lasso_max_sweeps: 1000,
            lasso_tol: 1e-8,
            rf_trees: 100,
            rf_max_depth: 12,
            rf_min_leaf: 2,
            rf_feature_subsample: 1.0 / 3.0,
            rf_bootstrap: true,
            seed: 0,
        }
    }
}

impl LearnerConfig {
    pub fn new(kind: LearnerKind) -> Self {
        LearnerConfig {
            kind,
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.poly_degree < 1 {
            return bad("poly_degree must be >= 1");
        }
        if !(self.lasso_lambda >= 0.0 && self.lasso_lambda.is_finite()) {
            return bad("lasso_lambda must be a non-negative finite number");
        }
        if self.lasso_tol <= 0.0 || self.lasso_max_sweeps == 0 {
            return bad("lasso_tol must be > 0 and lasso_max_sweeps >= 1");
        }
        if self.rf_trees < 1 || self.rf_min_leaf < 1 {
            return bad("rf_trees and rf_min_leaf must be >= 1");
        }
        if !(self.rf_feature_subsample > 0.0 && self.rf_feature_subsample <= 1.0) {
            return bad("rf_feature_subsample must lie in (0, 1]");
        }
        Ok(())
    }
}

/// Learned parameters: a linear model over (possibly expanded) standardized
/// features, or a forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "F: Scalar")]
pub enum Parameters<F> {
    Coefficients { intercept: F, weights: Vec<F> },
    Trees(Vec<Tree<F>>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct FitSummary<F> {
    /// Set when least squares fell back to ridge.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ridge_lambda: Option<F>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lasso_sweeps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expanded_columns: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct FittedLearner<F> {
    pub kind: LearnerKind,
    /// Full training schema; the mask indexes into it.
    pub feature_names: Vec<String>,
    pub mask: FeatureMask,
    pub norm: NormStats<F>,
    pub parameters: Parameters<F>,
    pub config: LearnerConfig,
    #[serde(default)]
    pub fit_summary: FitSummary<F>,
    pub train_time_s: Option<f64>,
    pub format_version: u32,
}

impl<F: Scalar> FittedLearner<F> {
    pub fn without_timing(mut self) -> Self {
        self.train_time_s = None;
        self
    }

    pub fn selected_names(&self) -> Vec<&str> {
        self.mask.selected().into_iter().map(|i| self.feature_names[i].as_str()).collect()
    }

    /// Standardized selected columns of `rows`, matched by feature name.
    fn design(&self, rows: &Dataset<F>) -> Result<Vec<Vec<F>>> {
        self.mask
            .selected()
            .into_iter()
            .map(|j| {
                let name = &self.feature_names[j];
                let src = rows.feature_index(name).ok_or_else(|| Error::MissingColumn(name.clone()))?;
                Ok(rows
                    .rows()
                    .iter()
                    .map(|r| self.norm.apply_value(j, r.features[src]))
                    .collect())
            })
            .collect()
    }
}

/// Standardized, masked design columns for training.
pub(crate) fn training_design<F: Scalar>(ds: &Dataset<F>, mask: &FeatureMask, norm: &NormStats<F>) -> Vec<Vec<F>> {
    mask.selected()
        .into_iter()
        .map(|j| ds.rows().iter().map(|r| norm.apply_value(j, r.features[j])).collect())
        .collect()
}

pub fn train<F: Scalar>(ds: &Dataset<F>, mask: &FeatureMask, cfg: &LearnerConfig) -> Result<FittedLearner<F>> {
    cfg.validate()?;
    mask.validate(ds.n_features())?;
    if ds.len() < 2 {
        return Err(Error::InvalidArgument(format!("training needs >= 2 rows, got {}", ds.len())));
    }
    let y = ds.targets()?;
    let start = Instant::now();
    let norm = NormStats::fit(ds);
    let x = training_design(ds, mask, &norm);

    let mut summary = FitSummary::default();
    let parameters = match cfg.kind {
        LearnerKind::LiR => {
            let fit = crate::linalg::least_squares(&x, &y)?;
            summary.ridge_lambda = fit.ridge;
            Parameters::Coefficients {
                intercept: fit.intercept,
                weights: fit.coefficients,
            }
        }
        LearnerKind::PR => {
            let terms = linear::expansion_terms(x.len(), cfg.poly_degree)?;
            let expanded = linear::expand_columns(&x, &terms);
            summary.expanded_columns = Some(terms.len());
            let fit = crate::linalg::least_squares(&expanded, &y)?;
            summary.ridge_lambda = fit.ridge;
            Parameters::Coefficients {
                intercept: fit.intercept,
                weights: fit.coefficients,
            }
        }
        LearnerKind::LR => {
            let fit = lasso::coordinate_descent(&x, &y, F::lit(cfg.lasso_lambda), cfg.lasso_max_sweeps, F::lit(cfg.lasso_tol))?;
            summary.lasso_sweeps = Some(fit.sweeps);
            Parameters::Coefficients {
                intercept: fit.intercept,
                weights: fit.coefficients,
            }
        }
        LearnerKind::RF => Parameters::Trees(forest::grow_forest(&x, &y, cfg)),
    };

    Ok(FittedLearner {
        kind: cfg.kind,
        feature_names: ds.feature_names().to_vec(),
        mask: mask.clone(),
        norm,
        parameters,
        config: cfg.clone(),
        fit_summary: summary,
        train_time_s: Some(start.elapsed().as_secs_f64()),
        format_version: FORMAT_VERSION,
    })
}

/// One prediction per row of `rows`, which may be any dataset exposing the
/// model's selected feature names.
pub fn predict<F: Scalar>(model: &FittedLearner<F>, rows: &Dataset<F>) -> Result<Vec<F>> {
    if model.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion(model.format_version));
    }
    let x = model.design(rows)?;
    let n = rows.len();
    Ok(match &model.parameters {
        Parameters::Coefficients { intercept, weights } => {
            let cols = if model.kind == LearnerKind::PR {
                let terms = linear::expansion_terms(x.len(), model.config.poly_degree)?;
                linear::expand_columns(&x, &terms)
            } else {
                x
            };
            if cols.len() != weights.len() {
                return Err(Error::LengthMismatch {
                    left: cols.len(),
                    right: weights.len(),
                });
            }
            (0..n)
                .map(|i| *intercept + cols.iter().zip(weights).map(|(c, &w)| c[i] * w).sum::<F>())
                .collect()
        }
        Parameters::Trees(trees) => {
            let mut row = vec![F::zero(); x.len()];
            (0..n)
                .map(|i| {
                    for (v, c) in row.iter_mut().zip(&x) {
                        *v = c[i];
                    }
                    forest::predict_row(trees, &row)
                })
                .collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{SampleRecord, SmellType, TargetKind};

    pub(crate) fn dataset(xs: &[Vec<f64>], y: &[f64]) -> Dataset<f64> {
        let p = xs[0].len();
        let rows = xs
            .iter()
            .zip(y)
            .enumerate()
            .map(|(i, (x, &t))| SampleRecord {
                sample_id: format!("r{i}"),
                smell_type: SmellType::GodClass,
                features: x.clone(),
                delta_cpu: Some(t),
                delta_mem: Some(t),
            })
            .collect();
        Dataset::new((0..p).map(|j| format!("f{j}")).collect(), rows, TargetKind::Cpu).unwrap()
    }

    fn coefficients(m: &FittedLearner<f64>) -> (f64, Vec<f64>) {
        match &m.parameters {
            Parameters::Coefficients { intercept, weights } => (*intercept, weights.clone()),
            Parameters::Trees(_) => panic!("not linear"),
        }
    }

    #[test]
    fn lir_interpolates_affine_points() {
        let ds = dataset(&[vec![0.0], vec![1.0], vec![2.0]], &[1.0, 3.0, 5.0]);
        let m = train(&ds, &FeatureMask::all(1), &LearnerConfig::new(LearnerKind::LiR)).unwrap();
        // Coefficients live in standardized space: x = 1 + z * sqrt(2/3).
        let (b0, w) = coefficients(&m);
        let s = (2.0f64 / 3.0).sqrt();
        assert!((b0 - 3.0).abs() < 1e-9);
        assert!((w[0] - 2.0 * s).abs() < 1e-9);
        // Mapped back to raw units: intercept 1, slope 2.
        let raw_slope = w[0] / m.norm.stds[0];
        let raw_intercept = b0 - raw_slope * m.norm.means[0];
        assert!((raw_slope - 2.0).abs() < 1e-9);
        assert!((raw_intercept - 1.0).abs() < 1e-9);

        let preds = predict(&m, &ds).unwrap();
        let mse = crate::metrics::mse(&preds, &ds.targets().unwrap()).unwrap();
        assert!(mse < 1e-12);
    }

    #[test]
    fn hand_built_lir_evaluates_affine() {
        let ds = dataset(&[vec![3.0]], &[0.0]);
        let m = FittedLearner {
            kind: LearnerKind::LiR,
            feature_names: vec!["f0".into()],
            mask: FeatureMask::all(1),
            norm: NormStats {
                means: vec![0.0],
                stds: vec![1.0],
                flags: vec![false],
            },
            parameters: Parameters::Coefficients {
                intercept: 1.0,
                weights: vec![2.0],
            },
            config: LearnerConfig::new(LearnerKind::LiR),
            fit_summary: FitSummary::default(),
            train_time_s: None,
            format_version: FORMAT_VERSION,
        };
        assert_eq!(predict(&m, &ds).unwrap(), vec![7.0]);
    }

    #[test]
    fn predict_requires_named_columns() {
        let ds = dataset(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![2.0, 2.0]], &[1.0, 2.0, 3.0]);
        let m = train(&ds, &FeatureMask::of(2, &[1]), &LearnerConfig::new(LearnerKind::LiR)).unwrap();
        let other = Dataset::new(
            vec!["f0".into(), "g".into()],
            ds.rows().to_vec(),
            TargetKind::Cpu,
        )
        .unwrap();
        assert!(matches!(predict(&m, &other), Err(Error::MissingColumn(c)) if c == "f1"));
        // Only the selected column is needed.
        let only_f1 = Dataset::new(
            vec!["f1".into()],
            ds.rows().iter().map(|r| SampleRecord { features: vec![r.features[1]], ..r.clone() }).collect(),
            TargetKind::Cpu,
        )
        .unwrap();
        assert_eq!(predict(&m, &only_f1).unwrap(), predict(&m, &ds).unwrap());
    }

    #[test]
    fn rejects_bad_inputs() {
        let ds = dataset(&[vec![0.0], vec![1.0]], &[1.0, 2.0]);
        let cfg = LearnerConfig::new(LearnerKind::LiR);
        assert!(matches!(train(&ds, &FeatureMask::none(1), &cfg), Err(Error::EmptyMask)));
        let bad = LearnerConfig { poly_degree: 0, ..LearnerConfig::new(LearnerKind::PR) };
        assert!(train(&ds, &FeatureMask::all(1), &bad).is_err());
        let one = dataset(&[vec![0.0]], &[1.0]);
        assert!(train(&one, &FeatureMask::all(1), &cfg).is_err());
    }

    #[test]
    fn model_json_round_trips() {
        let ds = dataset(&[vec![0.0, 2.0], vec![1.0, 1.0], vec![2.0, 5.0], vec![3.0, 4.0]], &[1.0, 2.0, 4.0, 3.0]);
        for kind in LearnerKind::ALL {
            let cfg = LearnerConfig { rf_trees: 3, ..LearnerConfig::new(kind) };
            let m = train(&ds, &FeatureMask::all(2), &cfg).unwrap();
            let json = serde_json::to_string(&m).unwrap();
            let back: FittedLearner<f64> = serde_json::from_str(&json).unwrap();
            assert_eq!(back, m);
            assert_eq!(predict(&back, &ds).unwrap(), predict(&m, &ds).unwrap());
        }
    }

    #[test]
    fn f32_training_works() {
        let rows: Vec<SampleRecord<f32>> = (0..20)
            .map(|i| SampleRecord {
                sample_id: i.to_string(),
                smell_type: SmellType::GodMethod,
                features: vec![i as f32],
                delta_cpu: Some(0.5 * i as f32 + 2.0),
                delta_mem: None,
            })
            .collect();
        let ds = Dataset::new(vec!["x".into()], rows, TargetKind::Cpu).unwrap();
        for kind in [LearnerKind::LiR, LearnerKind::PR, LearnerKind::LR] {
            let cfg = LearnerConfig { lasso_lambda: 0.0, lasso_tol: 1e-6, ..LearnerConfig::new(kind) };
            let m = train(&ds, &FeatureMask::all(1), &cfg).unwrap();
            let p = predict(&m, &ds).unwrap();
            assert!((p[10] - 7.0).abs() < 1e-3, "{kind}: {}", p[10]);
        }
    }
}
