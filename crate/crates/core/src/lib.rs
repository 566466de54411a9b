//! Predicting the CPU and memory impact of refactoring code smells.
//!
//! The pipeline: load or [generate](workload::generate) a [`Dataset`], pick
//! features with the genetic search in [`select`], train the four base
//! regressors in [`learners`], and search their convex blends in
//! [`ensemble`]. [`evaluation`] compares everything under one k-fold split.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix it to `f64`.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod learners;
pub mod linalg;
pub mod mask;
pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod select;
pub mod workload;

pub use data::{LoadOptions, LoadSummary, SmellType, SplitSpec, TargetKind};
pub use ensemble::{ConfigMap, LABEL_REAP, LABEL_UREGM};
pub use error::{Error, Result};
pub use evaluation::{EvaluationReport, Metrics, ModelSpec, ReportFormat};
pub use learners::{LearnerConfig, LearnerKind};
pub use mask::FeatureMask;
pub use scalar::Scalar;
pub use select::{GAConfig, GAResult};
pub use workload::GenConfig;

pub type Dataset = data::Dataset<f64>;
pub type SampleRecord = data::SampleRecord<f64>;
pub type NormStats = data::NormStats<f64>;
pub type FittedLearner = learners::FittedLearner<f64>;
pub type UregmModel = ensemble::UregmModel<f64>;
pub type Combination = ensemble::Combination<f64>;
pub type CombinationResult = ensemble::CombinationResult<f64>;
