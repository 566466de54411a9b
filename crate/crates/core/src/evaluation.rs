//! K-fold comparison of the base learners and both ensembles.
//!
//! All requested models share one fold partition. Base learners contribute
//! their pooled out-of-fold predictions; the ensembles are scored on those
//! same pooled predictions, so URegM's accuracy can never fall below the best
//! base learner's in a report.

use std::fmt::Write as _;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, TargetKind};
use crate::ensemble::{self, ConfigMap, LABEL_REAP, LABEL_UREGM};
use crate::error::{Error, Result};
use crate::learners::LearnerKind;
use crate::mask::FeatureMask;
use crate::metrics::{self, ACCURACY_DEFINITION};
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelSpec {
    Learner(LearnerKind),
    Reap,
    Uregm,
}

impl ModelSpec {
    pub const ALL: [ModelSpec; 6] = [
        ModelSpec::Learner(LearnerKind::LiR),
        ModelSpec::Learner(LearnerKind::PR),
        ModelSpec::Learner(LearnerKind::LR),
        ModelSpec::Learner(LearnerKind::RF),
        ModelSpec::Reap,
        ModelSpec::Uregm,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelSpec::Learner(k) => k.label(),
            ModelSpec::Reap => LABEL_REAP,
            ModelSpec::Uregm => LABEL_UREGM,
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "reap" | "reap-analogue" => Ok(ModelSpec::Reap),
            "uregm" => Ok(ModelSpec::Uregm),
            other => other.parse().map(ModelSpec::Learner).map_err(|_| {
                Error::InvalidArgument(format!("unknown model `{s}` (valid: lir, pr, lr, rf, reap, uregm)"))
            }),
        }
    }
}

/// Pooled out-of-fold metrics for one model. `rmse` is always derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MetricsRecord", from = "MetricsRecord")]
pub struct Metrics {
    pub mse: f64,
    pub accuracy: f64,
    /// Train + predict wall time, seconds.
    pub eval_time: Option<f64>,
}

impl Metrics {
    pub fn rmse(&self) -> f64 {
        self.mse.sqrt()
    }
}

#[derive(Serialize, Deserialize)]
struct MetricsRecord {
    mse: f64,
    rmse: f64,
    accuracy: f64,
    time_s: Option<f64>,
}

impl From<Metrics> for MetricsRecord {
    fn from(m: Metrics) -> Self {
        MetricsRecord {
            mse: m.mse,
            rmse: m.rmse(),
            accuracy: m.accuracy,
            time_s: m.eval_time,
        }
    }
}

impl From<MetricsRecord> for Metrics {
    fn from(r: MetricsRecord) -> Self {
        Metrics {
            mse: r.mse,
            accuracy: r.accuracy,
            eval_time: r.time_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub rows: usize,
    pub features: Vec<String>,
    pub target: TargetKind,
    /// Rows with |actual| <= 1e-9, left out of accuracy.
    pub accuracy_excluded_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub models: IndexMap<String, Metrics>,
    pub folds: usize,
    pub seed: u64,
    pub dataset: DatasetFingerprint,
    pub accuracy_definition: String,
    /// Thread count in effect when the embedded timings were taken.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_jobs: Option<usize>,
    pub format_version: u32,
}

impl EvaluationReport {
    pub fn without_timings(mut self) -> Self {
        for m in self.models.values_mut() {
            m.eval_time = None;
        }
        self.timing_jobs = None;
        self
    }
}

fn scored<F: Scalar>(pred: &[F], y: &[F], time: f64) -> Result<Metrics> {
    Ok(Metrics {
        mse: metrics::mse(pred, y)?.as_f64(),
        accuracy: metrics::accuracy(pred, y)?.as_f64(),
        eval_time: Some(time),
    })
}

pub fn kfold_evaluate<F: Scalar>(
    ds: &Dataset<F>,
    mask: &FeatureMask,
    specs: &[ModelSpec],
    cfgs: &ConfigMap,
    folds: usize,
    seed: u64,
) -> Result<EvaluationReport> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("no models requested".into()));
    }
    let mut labels = std::collections::HashSet::new();
    if let Some(dup) = specs.iter().find(|s| !labels.insert(s.label())) {
        return Err(Error::InvalidArgument(format!("model {} requested twice", dup.label())));
    }
    mask.validate(ds.n_features())?;
    let partition = data::kfold_indices(ds.len(), folds, seed)?;
    let y = ds.targets()?;
    let (_, excluded) = metrics::accuracy_with_exclusions(&y, &y)?;

    let need_all = specs.iter().any(|s| matches!(s, ModelSpec::Reap | ModelSpec::Uregm));
    let kinds: Vec<LearnerKind> = LearnerKind::ALL
        .into_iter()
        .filter(|k| need_all || specs.contains(&ModelSpec::Learner(*k)))
        .collect();
    let oof = ensemble::oof_on_partition(ds, mask, &kinds, cfgs, &partition, seed)?;

    let mut models = IndexMap::new();
    for &spec in specs {
        let m = match spec {
            ModelSpec::Learner(k) => {
                let col = oof.column(k).expect("kind trained");
                scored(col, &y, oof.time(k).expect("kind trained"))?
            }
            ModelSpec::Uregm => {
                let start = std::time::Instant::now();
                let (log, best) = ensemble::search_combinations(&oof, &y)?;
                let base_time: f64 = oof.times.iter().sum();
                Metrics {
                    mse: log[best].mse.as_f64(),
                    accuracy: log[best].score.as_f64(),
                    eval_time: Some(base_time + start.elapsed().as_secs_f64()),
                }
            }
            ModelSpec::Reap => {
                let r = ensemble::fit_affine_combiner(&oof, &y)?;
                Metrics {
                    mse: r.mse.as_f64(),
                    accuracy: r.score.as_f64(),
                    eval_time: r.fit_time_s,
                }
            }
        };
        models.insert(spec.label().to_string(), m);
    }

    Ok(EvaluationReport {
        models,
        folds,
        seed,
        dataset: DatasetFingerprint {
            rows: ds.len(),
            features: mask.selected().into_iter().map(|j| ds.feature_names()[j].clone()).collect(),
            target: ds.target_kind(),
            accuracy_excluded_rows: excluded,
        },
        accuracy_definition: ACCURACY_DEFINITION.into(),
        timing_jobs: None,
        format_version: FORMAT_VERSION,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

const CSV_HEADER: [&str; 12] = [
    "model",
    "mse",
    "rmse",
    "accuracy",
    "time_s",
    "folds",
    "seed",
    "rows",
    "target",
    "accuracy_excluded_rows",
    "features",
    "timing_jobs",
];

pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Text => Ok(render_text(report)),
    }
}

fn render_csv(report: &EvaluationReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    let target = match report.dataset.target {
        TargetKind::Cpu => "cpu",
        TargetKind::Memory => "mem",
    };
    let opt = |v: Option<String>| v.unwrap_or_default();
    for (label, m) in &report.models {
        w.write_record([
            label.clone(),
            m.mse.to_string(),
            m.rmse().to_string(),
            m.accuracy.to_string(),
            opt(m.eval_time.map(|t| t.to_string())),
            report.folds.to_string(),
            report.seed.to_string(),
            report.dataset.rows.to_string(),
            target.to_string(),
            report.dataset.accuracy_excluded_rows.to_string(),
            report.dataset.features.join(";"),
            opt(report.timing_jobs.map(|j| j.to_string())),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Parses the CSV rendering back into a report.
pub fn parse_report_csv(text: &str) -> Result<EvaluationReport> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let bad = |m: &str| Error::InvalidArgument(format!("report csv: {m}"));
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CSV_HEADER) {
        return Err(bad("unexpected header"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number `{s}`")));
    let int = |s: &str| s.parse::<u64>().map_err(|_| bad(&format!("bad integer `{s}`")));
    let mut models = IndexMap::new();
    let mut meta = None;
    for rec in rdr.records() {
        let rec = rec?;
        let time = if rec[4].is_empty() { None } else { Some(num(&rec[4])?) };
        models.insert(
            rec[0].to_string(),
            Metrics {
                mse: num(&rec[1])?,
                accuracy: num(&rec[3])?,
                eval_time: time,
            },
        );
        let target = match &rec[8] {
            "cpu" => TargetKind::Cpu,
            "mem" => TargetKind::Memory,
            other => return Err(bad(&format!("bad target `{other}`"))),
        };
        let features = if rec[10].is_empty() {
            Vec::new()
        } else {
            rec[10].split(';').map(str::to_string).collect()
        };
        let jobs = if rec[11].is_empty() { None } else { Some(int(&rec[11])? as usize) };
        meta = Some((int(&rec[5])? as usize, int(&rec[6])?, int(&rec[7])? as usize, target, int(&rec[9])? as usize, features, jobs));
    }
    let (folds, seed, rows, target, excluded, features, timing_jobs) = meta.ok_or_else(|| bad("no model rows"))?;
    Ok(EvaluationReport {
        models,
        folds,
        seed,
        dataset: DatasetFingerprint {
            rows,
            features,
            target,
            accuracy_excluded_rows: excluded,
        },
        accuracy_definition: ACCURACY_DEFINITION.into(),
        timing_jobs,
        format_version: FORMAT_VERSION,
    })
}

/// Metrics as rows, models as columns.
fn render_text(report: &EvaluationReport) -> String {
    let labels: Vec<&str> = report.models.keys().map(String::as_str).collect();
    let width = labels.iter().map(|l| l.len()).max().unwrap_or(0).max(9) + 2;
    let mut out = String::new();
    let _ = write!(out, "{:<14}", "Metrics");
    for l in &labels {
        let _ = write!(out, "{l:>width$}");
    }
    out.push('\n');
    let row = |out: &mut String, name: &str, cell: &dyn Fn(&Metrics) -> String| {
        let _ = write!(out, "{name:<14}");
        for m in report.models.values() {
            let _ = write!(out, "{:>width$}", cell(m));
        }
        out.push('\n');
    };
    row(&mut out, "mse", &|m| format!("{:.4}", m.mse));
    row(&mut out, "rmse", &|m| format!("{:.4}", m.rmse()));
    row(&mut out, "accuracy (%)", &|m| format!("{:.2}", m.accuracy));
    row(&mut out, "time (s)", &|m| m.eval_time.map_or("-".into(), |t| format!("{t:.3}")));
    let _ = writeln!(
        out,
        "\n{} rows, {} folds, seed {}, accuracy = {}",
        report.dataset.rows, report.folds, report.seed, report.accuracy_definition
    );
    out
}
