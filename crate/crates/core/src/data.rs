//! Dataset schema, CSV ingestion and cleaning, standardization and
//! deterministic partitioning.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

pub const SAMPLE_ID: &str = "sample_id";
pub const SMELL_TYPE: &str = "smell_type";
pub const DELTA_CPU: &str = "delta_cpu";
pub const DELTA_MEM: &str = "delta_mem";

const RESERVED: [&str; 4] = [SAMPLE_ID, SMELL_TYPE, DELTA_CPU, DELTA_MEM];

/// The five refactored smell categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SmellType {
    GodClass,
    GodMethod,
    CyclicDependency,
    LongParameter,
    SpaghettiCode,
}

impl SmellType {
    pub const ALL: [SmellType; 5] = [
        SmellType::GodClass,
        SmellType::GodMethod,
        SmellType::CyclicDependency,
        SmellType::LongParameter,
        SmellType::SpaghettiCode,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SmellType::GodClass => "GodClass",
            SmellType::GodMethod => "GodMethod",
            SmellType::CyclicDependency => "CyclicDependency",
            SmellType::LongParameter => "LongParameter",
            SmellType::SpaghettiCode => "SpaghettiCode",
        }
    }
}

impl fmt::Display for SmellType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SmellType {
    type Err = ();

    /// Accepts `GodClass`, `god class`, `god_class`, `god-class` and other
    /// case/separator variants of the five names.
    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        let norm: String = s
            .chars()
            .filter(|c| !matches!(c, ' ' | '_' | '-'))
            .flat_map(char::to_lowercase)
            .collect();
        SmellType::ALL
            .into_iter()
            .find(|t| t.as_str().to_lowercase() == norm)
            .ok_or(())
    }
}

/// Which resource delta a dataset predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Cpu,
    #[serde(rename = "mem")]
    Memory,
}

impl TargetKind {
    pub fn column(self) -> &'static str {
        match self {
            TargetKind::Cpu => DELTA_CPU,
            TargetKind::Memory => DELTA_MEM,
        }
    }
}

/// One refactored method or class.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord<F> {
    pub sample_id: String,
    pub smell_type: SmellType,
    /// Values in `Dataset::feature_names` order.
    pub features: Vec<F>,
    /// Post- minus pre-refactor CPU, percentage points.
    pub delta_cpu: Option<F>,
    /// Post- minus pre-refactor memory, percentage points.
    pub delta_mem: Option<F>,
}

impl<F: Scalar> SampleRecord<F> {
    pub fn target(&self, kind: TargetKind) -> Option<F> {
        match kind {
            TargetKind::Cpu => self.delta_cpu,
            TargetKind::Memory => self.delta_mem,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<F> {
    feature_names: Vec<String>,
    rows: Vec<SampleRecord<F>>,
    target_kind: TargetKind,
}

impl<F: Scalar> Dataset<F> {
    /// Builds a dataset, checking that every row matches the schema.
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<SampleRecord<F>>,
        target_kind: TargetKind,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) || RESERVED.contains(&name.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "feature name `{name}` duplicated or reserved"
                )));
            }
        }
        for (i, r) in rows.iter().enumerate() {
            if r.features.len() != feature_names.len() {
                return Err(Error::LengthMismatch {
                    left: r.features.len(),
                    right: feature_names.len(),
                });
            }
            if r.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("features"));
            }
            if r.delta_cpu.iter().chain(r.delta_mem.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("targets"));
            }
            if r.sample_id.is_empty() {
                return Err(Error::EmptySampleId { row: i + 1 });
            }
        }
        Ok(Dataset {
            feature_names,
            rows,
            target_kind,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn rows(&self) -> &[SampleRecord<F>] {
        &self.rows
    }

    pub fn target_kind(&self) -> TargetKind {
        self.target_kind
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        self.rows.iter().map(|r| r.features[j]).collect()
    }

    /// Target values; errors if any row lacks the selected delta.
    pub fn targets(&self) -> Result<Vec<F>> {
        self.rows
            .iter()
            .map(|r| r.target(self.target_kind))
            .collect::<Option<Vec<F>>>()
            .ok_or_else(|| Error::MissingColumn(self.target_kind.column().to_string()))
    }

    pub fn with_target(mut self, kind: TargetKind) -> Self {
        self.target_kind = kind;
        self
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            target_kind: self.target_kind,
        }
    }

    fn map_features(&self, f: impl Fn(usize, F) -> F) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| SampleRecord {
                features: r.features.iter().enumerate().map(|(j, &v)| f(j, v)).collect(),
                ..r.clone()
            })
            .collect();
        Dataset {
            feature_names: self.feature_names.clone(),
            rows,
            target_kind: self.target_kind,
        }
    }
}

/// Outcome of CSV ingestion.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadSummary {
    pub rows_read: usize,
    pub rows_dropped: usize,
    /// 1-based data row numbers of dropped rows.
    pub dropped_rows: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub target_kind: TargetKind,
    /// When false the target column may be absent (prediction inputs).
    pub require_target: bool,
}

impl LoadOptions {
    pub fn training(target_kind: TargetKind) -> Self {
        LoadOptions {
            target_kind,
            require_target: true,
        }
    }

    pub fn features_only(target_kind: TargetKind) -> Self {
        LoadOptions {
            target_kind,
            require_target: false,
        }
    }
}

fn is_null(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "NA"
}

/// Parses a numeric cell; `None` for null, non-numeric or non-finite.
fn parse_cell<F: Scalar>(cell: &str) -> Option<F> {
    if is_null(cell) {
        return None;
    }
    cell.trim().parse::<F>().ok().filter(|v| v.is_finite())
}

pub fn load_csv<F: Scalar>(
    path: impl AsRef<Path>,
    target_kind: TargetKind,
) -> Result<(Dataset<F>, LoadSummary)> {
    load_csv_with(path, LoadOptions::training(target_kind))
}

pub fn load_csv_with<F: Scalar>(
    path: impl AsRef<Path>,
    opts: LoadOptions,
) -> Result<(Dataset<F>, LoadSummary)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, opts)
}

/// Reads the CSV schema `sample_id, smell_type, <features...>, delta_cpu,
/// delta_mem` (any column order). Rows with a null, empty or non-numeric cell
/// in a feature or the target column are dropped; surviving values are never
/// altered and keep their input order.
pub fn read_csv<F: Scalar, R: Read>(
    reader: R,
    opts: LoadOptions,
) -> Result<(Dataset<F>, LoadSummary)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::Headers)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let id_col = find(SAMPLE_ID).ok_or_else(|| Error::MissingColumn(SAMPLE_ID.into()))?;
    let smell_col = find(SMELL_TYPE).ok_or_else(|| Error::MissingColumn(SMELL_TYPE.into()))?;
    let cpu_col = find(DELTA_CPU);
    let mem_col = find(DELTA_MEM);
    let target_col = match opts.target_kind {
        TargetKind::Cpu => cpu_col,
        TargetKind::Memory => mem_col,
    };
    if opts.require_target && target_col.is_none() {
        return Err(Error::MissingColumn(opts.target_kind.column().into()));
    }

    let feature_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !RESERVED.contains(h))
        .map(|(i, _)| i)
        .collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&i| headers[i].to_string()).collect();

    let mut summary = LoadSummary::default();
    let mut rows = Vec::new();
    let mut ids = HashSet::new();

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row_no = i + 1;
        summary.rows_read += 1;
        let cell = |c: usize| record.get(c).unwrap_or("");

        let features: Option<Vec<F>> = feature_cols.iter().map(|&c| parse_cell(cell(c))).collect();
        let target_ok = match target_col {
            Some(c) => parse_cell::<F>(cell(c)).is_some(),
            None => true,
        };
        let smell_cell = cell(smell_col);
        let (Some(features), true, false) = (features, target_ok, is_null(smell_cell)) else {
            summary.rows_dropped += 1;
            summary.dropped_rows.push(row_no);
            continue;
        };
        let smell_type = smell_cell.trim().parse::<SmellType>().map_err(|_| Error::UnknownSmell {
            row: row_no,
            token: smell_cell.to_string(),
        })?;

        let sample_id = cell(id_col).trim().to_string();
        if sample_id.is_empty() {
            return Err(Error::EmptySampleId { row: row_no });
        }
        if !ids.insert(sample_id.clone()) {
            return Err(Error::DuplicateSampleId {
                row: row_no,
                id: sample_id,
            });
        }
        for (name, &v) in feature_names.iter().zip(&features) {
            check_domain(row_no, name, v.as_f64())?;
        }
        rows.push(SampleRecord {
            sample_id,
            smell_type,
            features,
            delta_cpu: cpu_col.and_then(|c| parse_cell(cell(c))),
            delta_mem: mem_col.and_then(|c| parse_cell(cell(c))),
        });
    }
    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    Ok((Dataset::new(feature_names, rows, opts.target_kind)?, summary))
}

fn check_domain(row: usize, column: &str, value: f64) -> Result<()> {
    let rule = match column {
        "task_count" if value < 0.0 => "task_count >= 0",
        "vcpu" if value < 1.0 => "vcpu >= 1",
        "ram" if value <= 0.0 => "ram > 0",
        _ => return Ok(()),
    };
    Err(Error::InvalidValue {
        row,
        column: column.to_string(),
        value,
        rule,
    })
}

/// Writes the dataset in the ingestion schema. Missing deltas become empty
/// cells.
pub fn write_csv<F: Scalar, W: Write>(ds: &Dataset<F>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![SAMPLE_ID.to_string(), SMELL_TYPE.to_string()];
    header.extend(ds.feature_names.iter().cloned());
    header.push(DELTA_CPU.into());
    header.push(DELTA_MEM.into());
    w.write_record(&header)?;
    let opt = |v: Option<F>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &ds.rows {
        let mut rec = vec![r.sample_id.clone(), r.smell_type.to_string()];
        rec.extend(r.features.iter().map(|v| v.to_string()));
        rec.push(opt(r.delta_cpu));
        rec.push(opt(r.delta_mem));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv<F: Scalar>(ds: &Dataset<F>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

impl SplitSpec {
    /// `ceil(train_fraction * n)`.
    pub fn train_size(&self, n: usize) -> usize {
        // 1e-9 absorbs representation error such as 0.7 * 10 = 7.000000000000001.
        ((self.train_fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
    }
}

/// Shuffles with the seeded stream, then takes the train prefix.
pub fn split<F: Scalar>(ds: &Dataset<F>, spec: SplitSpec) -> Result<(Dataset<F>, Dataset<F>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction {} outside (0, 1)",
            spec.train_fraction
        )));
    }
    if ds.len() < 2 {
        return Err(Error::InvalidArgument("split needs at least 2 rows".into()));
    }
    let n_train = spec.train_size(ds.len());
    if n_train == 0 {
        return Err(Error::EmptyPartition("train"));
    }
    if n_train >= ds.len() {
        return Err(Error::EmptyPartition("test"));
    }
    let order = rng::permutation(ds.len(), spec.seed, "split");
    let (train, test) = order.split_at(n_train);
    Ok((ds.subset(train), ds.subset(test)))
}

/// Partitions `0..n` into `k` disjoint folds whose sizes differ by at most one.
pub fn kfold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("folds must be >= 2, got {k}")));
    }
    if k > n {
        return Err(Error::TooManyFolds { folds: k, rows: n });
    }
    let order = rng::permutation(n, seed, "kfold");
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(order[start..start + len].to_vec());
        start += len;
    }
    Ok(folds)
}

/// Indices not in `fold`, ascending.
pub fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut held = vec![false; n];
    for &i in fold {
        held[i] = true;
    }
    (0..n).filter(|&i| !held[i]).collect()
}

/// Per-column standardization statistics (population standard deviation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct NormStats<F> {
    pub means: Vec<F>,
    pub stds: Vec<F>,
    /// True where the column had zero variance; such columns map to 0.
    pub flags: Vec<bool>,
}

impl<F: Scalar> NormStats<F> {
    pub fn fit(ds: &Dataset<F>) -> Self {
        let n = F::from_usize_lossy(ds.len().max(1));
        let mut means = Vec::with_capacity(ds.n_features());
        let mut stds = Vec::with_capacity(ds.n_features());
        let mut flags = Vec::with_capacity(ds.n_features());
        for j in 0..ds.n_features() {
            let col = ds.column(j);
            let mean = col.iter().copied().sum::<F>() / n;
            let var = col.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / n;
            let std = var.sqrt();
            let scale = mean.abs().max(F::one());
            let flat = std <= F::epsilon() * F::lit(16.0) * scale;
            means.push(mean);
            stds.push(if flat { F::zero() } else { std });
            flags.push(flat);
        }
        NormStats { means, stds, flags }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn apply_value(&self, j: usize, v: F) -> F {
        if self.flags[j] {
            F::zero()
        } else {
            (v - self.means[j]) / self.stds[j]
        }
    }

    /// Inverse transform; flagged columns come back as their mean.
    pub fn invert_value(&self, j: usize, z: F) -> F {
        if self.flags[j] {
            self.means[j]
        } else {
            z * self.stds[j] + self.means[j]
        }
    }

    pub fn apply(&self, ds: &Dataset<F>) -> Dataset<F> {
        ds.map_features(|j, v| self.apply_value(j, v))
    }

    pub fn invert(&self, ds: &Dataset<F>) -> Dataset<F> {
        ds.map_features(|j, v| self.invert_value(j, v))
    }
}

/// Zero-mean, unit-variance feature columns plus the statistics used.
pub fn standardize<F: Scalar>(ds: &Dataset<F>) -> (Dataset<F>, NormStats<F>) {
    let stats = NormStats::fit(ds);
    (stats.apply(ds), stats)
}
