//! Synthetic refactoring-impact data built around measured task-count curves.
//!
//! Targets depend only on the task count and the smell type; the code
//! metrics carry the smell signal and the VM columns are nuisance features.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SampleRecord, SmellType, TargetKind};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

pub const MIN_ROWS: usize = 10;
pub const MAX_TASK_COUNT: f64 = 10_000.0;
pub const TASK_RANGE: (u32, u32) = (250, 4500);
/// Input volume per task, MB.
pub const MB_PER_TASK: f64 = 53.6;

pub const FEATURES: [&str; 10] = [
    "wmc",
    "lookahead",
    "loc",
    "parameter_count",
    "fan_in",
    "fan_out",
    "task_count",
    "data_size",
    "vcpu",
    "ram",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VmProfile {
    pub vm_id: u32,
    pub vcpu: u32,
    pub ram_gb: f64,
    pub disk_gb: u32,
    pub os_label: &'static str,
}

pub const VM_PROFILES: [VmProfile; 6] = [
    VmProfile { vm_id: 1, vcpu: 1, ram_gb: 0.5, disk_gb: 50, os_label: "Ubuntu 18.04" },
    VmProfile { vm_id: 2, vcpu: 1, ram_gb: 1.0, disk_gb: 256, os_label: "CentOS 7" },
    VmProfile { vm_id: 3, vcpu: 2, ram_gb: 2.0, disk_gb: 500, os_label: "Ubuntu 18.04" },
    VmProfile { vm_id: 4, vcpu: 2, ram_gb: 4.0, disk_gb: 500, os_label: "CentOS 7" },
    VmProfile { vm_id: 5, vcpu: 4, ram_gb: 4.0, disk_gb: 500, os_label: "Ubuntu 18.04" },
    VmProfile { vm_id: 6, vcpu: 4, ram_gb: 6.0, disk_gb: 500, os_label: "CentOS 7" },
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    CpuActual,
    CpuPredicted,
    MemActual,
    MemPredicted,
}

const TASKS: [u32; 8] = [500, 1000, 1500, 2000, 2500, 3000, 3500, 4000];

// Measured tables, as printed.
const CPU_PREDICTED: [&str; 8] = ["3.6", "4.0", "4.2", "5", "5.9", "6.6", "7.3", "7.8"];
const CPU_ACTUAL: [&str; 8] = ["3.8", "4.1", "4.6", "5.3", "5.9", "6.7", "7.6", "8.2"];
const MEM_PREDICTED: [&str; 8] = ["2.9", "3.4", "3.8", "4.3", "4.9", "6.2", "6.12", "7.4"];
const MEM_ACTUAL: [&str; 8] = ["3.4", "3.7", "3.10", "4.5", "4.16", "6.9", "6.28", "7.9"];
// Monotone replacement for MEM_ACTUAL used by the generator.
const MEM_ACTUAL_CLEANED: [f64; 8] = [3.4, 3.7, 4.1, 4.5, 5.2, 6.4, 7.1, 7.9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorCurve {
    pub kind: CurveKind,
    /// `(task_count, percent)`, task counts strictly increasing.
    pub points: Vec<(f64, f64)>,
}

fn literal(values: &[&str; 8]) -> Vec<(f64, f64)> {
    TASKS
        .iter()
        .zip(values)
        .map(|(&t, v)| (t as f64, v.parse().expect("table literal")))
        .collect()
}

impl AnchorCurve {
    /// The literal table column.
    pub fn literal(kind: CurveKind) -> Self {
        let values = match kind {
            CurveKind::CpuActual => &CPU_ACTUAL,
            CurveKind::CpuPredicted => &CPU_PREDICTED,
            CurveKind::MemActual => &MEM_ACTUAL,
            CurveKind::MemPredicted => &MEM_PREDICTED,
        };
        AnchorCurve { kind, points: literal(values) }
    }

    pub fn cpu() -> Self {
        Self::literal(CurveKind::CpuActual)
    }

    /// Memory anchors with the out-of-order measurements replaced.
    pub fn mem_cleaned() -> Self {
        AnchorCurve {
            kind: CurveKind::MemActual,
            points: TASKS.iter().zip(MEM_ACTUAL_CLEANED).map(|(&t, v)| (t as f64, v)).collect(),
        }
    }

    /// Piecewise-linear; outside the anchors the end segments are extended.
    pub fn eval(&self, task_count: f64) -> Result<f64> {
        if !(task_count > 0.0 && task_count <= MAX_TASK_COUNT) {
            return Err(Error::TaskCountOutOfRange(task_count));
        }
        let p = &self.points;
        let seg = p
            .windows(2)
            .position(|w| task_count <= w[1].0)
            .unwrap_or(p.len() - 2);
        let ((t0, y0), (t1, y1)) = (p[seg], p[seg + 1]);
        Ok(y0 + (task_count - t0) * (y1 - y0) / (t1 - t0))
    }
}

pub fn cpu_curve(task_count: f64) -> Result<f64> {
    AnchorCurve::cpu().eval(task_count)
}

pub fn mem_curve(task_count: f64) -> Result<f64> {
    AnchorCurve::mem_cleaned().eval(task_count)
}

/// Synthetic per-smell multiplier on both resource curves.
pub fn smell_scale(smell: SmellType) -> f64 {
    match smell {
        SmellType::GodClass => 1.2,
        SmellType::GodMethod => 1.1,
        SmellType::CyclicDependency => 1.0,
        SmellType::LongParameter => 0.9,
        SmellType::SpaghettiCode => 0.8,
    }
}

/// Noiseless `(delta_cpu, delta_mem)`.
pub fn row_targets(task_count: f64, smell: SmellType) -> Result<(f64, f64)> {
    let s = smell_scale(smell);
    Ok((cpu_curve(task_count)? * s, mem_curve(task_count)? * s))
}

/// `(mean, sd)` of wmc, lookahead, loc, parameter_count, fan_in, fan_out.
pub fn code_metric_params(smell: SmellType) -> [(f64, f64); 6] {
    match smell {
        SmellType::GodClass => [(55.0, 8.0), (4.0, 1.0), (850.0, 120.0), (3.0, 1.0), (12.0, 3.0), (14.0, 3.0)],
        SmellType::GodMethod => [(18.0, 4.0), (6.0, 1.5), (320.0, 60.0), (4.0, 1.2), (5.0, 2.0), (9.0, 2.0)],
        SmellType::CyclicDependency => [(14.0, 3.0), (3.0, 1.0), (180.0, 40.0), (2.5, 1.0), (16.0, 3.0), (16.0, 3.0)],
        SmellType::LongParameter => [(10.0, 3.0), (2.0, 0.8), (90.0, 25.0), (11.0, 2.0), (4.0, 1.5), (4.0, 1.5)],
        SmellType::SpaghettiCode => [(30.0, 6.0), (12.0, 2.5), (500.0, 90.0), (3.0, 1.0), (3.0, 1.5), (11.0, 3.0)],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub rows: usize,
    /// Standard deviation of the additive target noise, percentage points.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Weights over `SmellType::ALL`.
    pub smell_mix: [f64; 5],
    pub target: TargetKind,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            rows: 1000,
            noise_sigma: 0.1,
            seed: 0,
            smell_mix: [1.0; 5],
            target: TargetKind::Cpu,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows < MIN_ROWS {
            return Err(Error::InvalidArgument(format!("rows must be ≥ {MIN_ROWS}")));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidArgument("noise must be a finite value ≥ 0".into()));
        }
        if self.smell_mix.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || self.smell_mix.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidArgument("smell mix weights must be ≥ 0 and not all zero".into()));
        }
        Ok(())
    }
}

fn feature_names() -> Vec<String> {
    FEATURES.iter().map(|s| s.to_string()).collect()
}

fn draw_metrics(rng: &mut impl Rng, smell: SmellType) -> [f64; 6] {
    let params = code_metric_params(smell);
    let mut out = [0.0; 6];
    for (o, (mean, sd)) in out.iter_mut().zip(params) {
        let v: f64 = Normal::new(mean, sd).expect("valid sd").sample(rng);
        *o = v.round().max(0.0);
    }
    // Every unit has at least one line.
    out[2] = out[2].max(1.0);
    out
}

fn record<F: Scalar>(
    sample_id: String,
    smell: SmellType,
    metrics: [f64; 6],
    task_count: f64,
    data_size: f64,
    vm: &VmProfile,
    targets: (f64, f64),
) -> SampleRecord<F> {
    let mut features: Vec<F> = metrics.iter().map(|&v| F::lit(v)).collect();
    features.extend([task_count, data_size, vm.vcpu as f64, vm.ram_gb].map(F::lit));
    SampleRecord {
        sample_id,
        smell_type: smell,
        features,
        delta_cpu: Some(F::lit(targets.0)),
        delta_mem: Some(F::lit(targets.1)),
    }
}

pub fn generate<F: Scalar>(cfg: &GenConfig) -> Result<Dataset<F>> {
    cfg.validate()?;
    let mix = WeightedIndex::new(cfg.smell_mix).expect("validated weights");
    let noise = Normal::new(0.0, cfg.noise_sigma).expect("validated sigma");
    let width = cfg.rows.to_string().len().max(6);
    let rows = (0..cfg.rows)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(cfg.seed, "gen", &[i as u64]);
            let smell = SmellType::ALL[mix.sample(&mut r)];
            let t = r.random_range(TASK_RANGE.0..=TASK_RANGE.1) as f64;
            let vm = &VM_PROFILES[r.random_range(0..VM_PROFILES.len())];
            let data_size = (t * MB_PER_TASK * r.random_range(0.9..1.1) * 10.0).round() / 10.0;
            let metrics = draw_metrics(&mut r, smell);
            let (mut cpu, mut mem) = row_targets(t, smell)?;
            if cfg.noise_sigma > 0.0 {
                cpu += noise.sample(&mut r);
                mem += noise.sample(&mut r);
            }
            Ok(record(format!("s{i:0width$}"), smell, metrics, t, data_size, vm, (cpu, mem)))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(feature_names(), rows, cfg.target)
}

/// Noiseless rows at one task count: every smell on every VM profile, code
/// metrics at their per-smell means. Averaging a model's predictions over the
/// probe estimates its curve value under a uniform smell mix.
pub fn anchor_probe<F: Scalar>(task_count: f64, target: TargetKind) -> Result<Dataset<F>> {
    let mut rows = Vec::new();
    for smell in SmellType::ALL {
        let metrics = code_metric_params(smell).map(|(m, _)| m.round());
        let targets = row_targets(task_count, smell)?;
        for vm in &VM_PROFILES {
            let id = format!("probe-{}-{}-{}", task_count, smell.as_str(), vm.vm_id);
            rows.push(record(id, smell, metrics, task_count, task_count * MB_PER_TASK, vm, targets));
        }
    }
    Dataset::new(feature_names(), rows, target)
}

/// Literal and cleaned anchor tables as `curve,task_count,percent`.
pub fn anchor_tables_csv() -> String {
    let mut out = String::from("curve,task_count,percent\n");
    let tables: [(&str, Vec<String>); 5] = [
        ("cpu_predicted", CPU_PREDICTED.map(String::from).to_vec()),
        ("cpu_actual", CPU_ACTUAL.map(String::from).to_vec()),
        ("mem_predicted", MEM_PREDICTED.map(String::from).to_vec()),
        ("mem_actual_literal", MEM_ACTUAL.map(String::from).to_vec()),
        ("mem_actual_cleaned", MEM_ACTUAL_CLEANED.map(|v| v.to_string()).to_vec()),
    ];
    for (name, values) in tables {
        for (t, v) in TASKS.iter().zip(values) {
            out.push_str(&format!("{name},{t},{v}\n"));
        }
    }
    out
}
