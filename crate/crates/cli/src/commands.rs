use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use uregm::data::{self, LoadOptions};
use uregm::ensemble::{self, DEFAULT_FOLDS};
use uregm::evaluation::{self, ModelSpec, ReportFormat};
use uregm::learners;
use uregm::{select, workload, Dataset, FeatureMask, FittedLearner, GenConfig, TargetKind, UregmModel};

use crate::config::Resolver;
use crate::error::{CliError, CliResult};
use crate::manifest::{self, FileRef, RunManifest};
use crate::{Cli, Command, EvaluateArgs, GenDataArgs, PredictArgs, SelectArgs, TrainArgs};

/// On-disk model: the target it predicts plus the fitted model.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub target: TargetKind,
    pub model: ModelBody,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelBody {
    Ensemble(UregmModel),
    Learner(FittedLearner),
}

struct Ctx {
    command: &'static str,
    resolver: Resolver,
    embed_timings: bool,
    started_at: String,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    timings: BTreeMap<String, f64>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl Ctx {
    fn finish(mut self, output: &Path) -> CliResult<()> {
        // The manifest records the pool size, not the raw flag.
        self.resolver.resolved.remove("jobs");
        let inputs = self.inputs.iter().map(|p| FileRef::of(p)).collect::<CliResult<_>>()?;
        let m = RunManifest {
            command: self.command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            flags: self.resolver.resolved,
            seed: self.seed,
            jobs: rayon::current_num_threads(),
            inputs,
            outputs: vec![FileRef::of(output)?],
            started_at: self.started_at,
            finished_at: now(),
            timings: self.timings,
        };
        let path = m.write_for(output)?;
        log(&format!("wrote {} and {}", output.display(), path.display()));
        Ok(())
    }
}

fn log(msg: &str) {
    eprintln!("uregm: {msg}");
}

pub fn run(cli: Cli) -> CliResult<()> {
    let mut resolver = Resolver::load(cli.config.as_deref())?;
    if let Some(jobs) = resolver.optional::<usize>("jobs", cli.jobs)? {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size worker pool: {e}")))?;
    }
    let ctx = Ctx {
        command: cli.command.name(),
        resolver,
        embed_timings: cli.embed_timings,
        started_at: now(),
        seed: None,
        inputs: Vec::new(),
        timings: BTreeMap::new(),
    };
    match cli.command {
        Command::GenData(a) => gen_data(a, ctx),
        Command::SelectFeatures(a) => select_features(a, ctx),
        Command::Train(a) => train(a, ctx),
        Command::Predict(a) => predict(a, ctx),
        Command::Evaluate(a) => evaluate(a, ctx),
    }
}

fn parse_smell_mix(s: &str) -> CliResult<[f64; 5]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--smell-mix: `{s}` is not a list of numbers")))?;
    parts
        .try_into()
        .map_err(|_| CliError::Usage("--smell-mix needs exactly 5 weights".into()))
}

fn gen_data(a: GenDataArgs, mut ctx: Ctx) -> CliResult<()> {
    let r = &mut ctx.resolver;
    if a.anchors {
        let text = workload::anchor_tables_csv();
        return match r.optional::<PathBuf>("out", a.out)? {
            Some(out) => {
                manifest::write_text(&out, &text)?;
                ctx.finish(&out)
            }
            None => {
                print!("{text}");
                Ok(())
            }
        };
    }
    let defaults = GenConfig::default();
    let smell_mix = match r.optional::<String>("smell-mix", a.smell_mix)? {
        Some(s) => parse_smell_mix(&s)?,
        None => defaults.smell_mix,
    };
    let cfg = GenConfig {
        rows: r.get("rows", a.rows, defaults.rows)?,
        noise_sigma: r.get("noise", a.noise, defaults.noise_sigma)?,
        seed: r.get("seed", a.seed, defaults.seed)?,
        smell_mix,
        target: r.get("target", a.target, defaults.target)?,
    };
    let out: PathBuf = r.require("out", a.out)?;
    cfg.validate().map_err(CliError::usage)?;
    ctx.seed = Some(cfg.seed);

    let start = Instant::now();
    let ds: Dataset = workload::generate(&cfg)?;
    ctx.timings.insert("generate_s".into(), start.elapsed().as_secs_f64());
    data::save_csv(&ds, &out)?;
    log(&format!("generated {} rows", ds.len()));
    ctx.finish(&out)
}

fn load_training(r: &mut Resolver, data_flag: Option<PathBuf>, target: Option<TargetKind>) -> CliResult<(Dataset, PathBuf)> {
    let path: PathBuf = r.require("data", data_flag)?;
    let target = r.get("target", target, TargetKind::Cpu)?;
    let (ds, summary) = data::load_csv_with::<f64>(&path, LoadOptions::training(target))?;
    if summary.rows_dropped > 0 {
        log(&format!(
            "{}: dropped {} of {} rows with missing or invalid values",
            path.display(),
            summary.rows_dropped,
            summary.rows_read
        ));
    }
    Ok((ds, path))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MaskFile {
    Ga {
        best_mask: FeatureMask,
        #[serde(default)]
        feature_names: Vec<String>,
    },
    Bits(FeatureMask),
}

fn load_mask(path: Option<&Path>, ds: &Dataset) -> CliResult<FeatureMask> {
    let Some(path) = path else {
        return Ok(FeatureMask::all(ds.n_features()));
    };
    let text = std::fs::read_to_string(path).map_err(|e| uregm::Error::io(path, e))?;
    let bad = |message: String| CliError::Artifact {
        path: path.to_path_buf(),
        message,
    };
    let (mask, names) = match serde_json::from_str(&text).map_err(|e| bad(format!("not a mask file: {e}")))? {
        MaskFile::Ga { best_mask, feature_names } => (best_mask, feature_names),
        MaskFile::Bits(m) => (m, Vec::new()),
    };
    if !names.is_empty() && names != ds.feature_names() {
        return Err(bad(format!(
            "mask was selected on features [{}], dataset has [{}]",
            names.join(", "),
            ds.feature_names().join(", ")
        )));
    }
    mask.validate(ds.n_features()).map_err(|e| bad(e.to_string()))?;
    Ok(mask)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(uregm::Error::from)?;
    text.push('\n');
    manifest::write_text(path, &text)
}

fn select_features(a: SelectArgs, mut ctx: Ctx) -> CliResult<()> {
    let r = &mut ctx.resolver;
    let (ds, data_path) = load_training(r, a.data, a.target)?;
    let base = r.ga_base()?;
    let cfg = select::GAConfig {
        population_size: r.get("population", a.population, base.population_size)?,
        generations: r.get("generations", a.generations, base.generations)?,
        crossover_rate: r.get("crossover-rate", a.crossover_rate, base.crossover_rate)?,
        mutation_rate: match r.optional("mutation-rate", a.mutation_rate)? {
            Some(v) => Some(v),
            None => base.mutation_rate,
        },
        elitism: r.get("elitism", a.elitism, base.elitism)?,
        seed: r.get("seed", a.seed, base.seed)?,
        fitness_folds: r.get("folds", a.folds, base.fitness_folds)?,
    };
    let out: PathBuf = r.require("out", a.out)?;
    cfg.validate().map_err(CliError::usage)?;
    ctx.seed = Some(cfg.seed);
    ctx.inputs.push(data_path);

    let start = Instant::now();
    let res = select::evolve(&ds, &cfg)?;
    ctx.timings.insert("evolve_s".into(), start.elapsed().as_secs_f64());
    let names: Vec<&str> = res.best_mask.selected().into_iter().map(|j| res.feature_names[j].as_str()).collect();
    log(&format!(
        "best fitness {:.4} ({} band) with [{}]",
        res.best_fitness,
        if res.in_acceptable_band { "inside" } else { "outside" },
        names.join(", ")
    ));
    write_json(&out, &res)?;
    ctx.finish(&out)
}

fn parse_model(token: &str) -> CliResult<ModelSpec> {
    token.parse().map_err(CliError::usage)
}

fn train(a: TrainArgs, mut ctx: Ctx) -> CliResult<()> {
    let r = &mut ctx.resolver;
    let spec = parse_model(&r.require::<String>("model", a.model)?)?;
    let (ds, data_path) = load_training(r, a.data, a.target)?;
    let mask_path = r.optional::<PathBuf>("mask", a.mask)?;
    let folds = r.get("folds", a.folds, DEFAULT_FOLDS)?;
    let seed = r.get("seed", a.seed, 0u64)?;
    let cfgs = r.learner_configs()?;
    let out: PathBuf = r.require("out", a.out)?;
    if folds < 2 {
        return Err(CliError::Usage("--folds must be ≥ 2".into()));
    }
    let mask = load_mask(mask_path.as_deref(), &ds)?;
    ctx.seed = Some(seed);
    ctx.inputs.push(data_path);
    ctx.inputs.extend(mask_path);

    let start = Instant::now();
    let model = match spec {
        ModelSpec::Learner(kind) => {
            // Same seed the ensembles use for their refit, so a one-member
            // ensemble and the standalone learner agree.
            let cfg = cfgs[&kind].clone().with_seed(ensemble::refit_seed(seed, kind));
            let m = learners::train(&ds, &mask, &cfg)?;
            ModelBody::Learner(if ctx.embed_timings { m } else { m.without_timing() })
        }
        ModelSpec::Uregm | ModelSpec::Reap => {
            let m = if spec == ModelSpec::Uregm {
                ensemble::uregm_search(&ds, &mask, &cfgs, folds, seed)?
            } else {
                ensemble::reap_baseline(&ds, &mask, &cfgs, folds, seed)?
            };
            let members: Vec<&str> = m.best.combination.members.iter().map(|k| k.label()).collect();
            log(&format!(
                "{}: accuracy {:.4}, mse {:.6} with [{}]",
                m.label,
                m.best.score,
                m.best.mse,
                members.join(", ")
            ));
            ModelBody::Ensemble(if ctx.embed_timings { m } else { m.without_timings() })
        }
    };
    ctx.timings.insert("train_s".into(), start.elapsed().as_secs_f64());
    write_json(&out, &ModelArtifact { target: ds.target_kind(), model })?;
    ctx.finish(&out)
}

fn predict(a: PredictArgs, mut ctx: Ctx) -> CliResult<()> {
    let r = &mut ctx.resolver;
    let model_path: PathBuf = r.require("model", a.model)?;
    let data_path: PathBuf = r.require("data", a.data)?;
    let out: PathBuf = r.require("out", a.out)?;

    let text = std::fs::read_to_string(&model_path).map_err(|e| uregm::Error::io(&model_path, e))?;
    let artifact: ModelArtifact = serde_json::from_str(&text).map_err(|e| CliError::Artifact {
        path: model_path.clone(),
        message: format!("not a model file: {e}"),
    })?;
    let (ds, summary) = data::load_csv_with::<f64>(&data_path, LoadOptions::features_only(artifact.target))?;
    if let Some(row) = summary.dropped_rows.first() {
        return Err(CliError::Artifact {
            path: data_path,
            message: format!(
                "{} rows have missing or invalid feature values (first: data row {row}); cannot predict them",
                summary.rows_dropped
            ),
        });
    }
    let start = Instant::now();
    let preds = match &artifact.model {
        ModelBody::Learner(m) => learners::predict(m, &ds)?,
        ModelBody::Ensemble(m) => ensemble::uregm_predict(m, &ds)?,
    };
    ctx.timings.insert("predict_s".into(), start.elapsed().as_secs_f64());

    let mut w = csv::Writer::from_path(&out).map_err(|e| CliError::Write {
        path: out.clone(),
        source: e.into(),
    })?;
    let write_err = |e: csv::Error| CliError::Write {
        path: out.clone(),
        source: e.into(),
    };
    w.write_record(["sample_id", "prediction"]).map_err(write_err)?;
    for (row, p) in ds.rows().iter().zip(&preds) {
        w.write_record([row.sample_id.as_str(), &p.to_string()]).map_err(write_err)?;
    }
    w.flush().map_err(|source| CliError::Write {
        path: out.clone(),
        source,
    })?;
    drop(w);
    log(&format!("predicted {} rows", preds.len()));
    ctx.inputs.extend([model_path, data_path]);
    ctx.finish(&out)
}

fn parse_models(list: &str) -> CliResult<Vec<ModelSpec>> {
    let specs = list
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_model(t.trim()))
        .collect::<CliResult<Vec<_>>>()?;
    if specs.is_empty() {
        return Err(CliError::Usage("--models is empty".into()));
    }
    Ok(specs)
}

fn parse_format(s: &str) -> CliResult<ReportFormat> {
    match s {
        "text" => Ok(ReportFormat::Text),
        "json" => Ok(ReportFormat::Json),
        "csv" => Ok(ReportFormat::Csv),
        other => Err(CliError::Usage(format!("unknown format `{other}` (valid: text, json, csv)"))),
    }
}

fn evaluate(a: EvaluateArgs, mut ctx: Ctx) -> CliResult<()> {
    let r = &mut ctx.resolver;
    let specs = parse_models(&r.get("models", a.models, "lir,pr,lr,rf,reap,uregm".to_string())?)?;
    let format = parse_format(&r.get("format", a.format, "text".to_string())?)?;
    let (ds, data_path) = load_training(r, a.data, a.target)?;
    let mask_path = r.optional::<PathBuf>("mask", a.mask)?;
    let folds = r.get("folds", a.folds, DEFAULT_FOLDS)?;
    let seed = r.get("seed", a.seed, 0u64)?;
    let cfgs = r.learner_configs()?;
    let report_path = r.optional::<PathBuf>("report", a.report)?;
    if folds < 2 {
        return Err(CliError::Usage("--folds must be ≥ 2".into()));
    }
    let mask = load_mask(mask_path.as_deref(), &ds)?;
    ctx.seed = Some(seed);
    ctx.inputs.push(data_path);
    ctx.inputs.extend(mask_path);

    let start = Instant::now();
    let report = evaluation::kfold_evaluate(&ds, &mask, &specs, &cfgs, folds, seed)?;
    ctx.timings.insert("evaluate_s".into(), start.elapsed().as_secs_f64());
    for (label, m) in &report.models {
        if let Some(t) = m.eval_time {
            ctx.timings.insert(format!("{label}_s"), t);
        }
    }
    let artifact = if ctx.embed_timings {
        evaluation::EvaluationReport {
            timing_jobs: Some(rayon::current_num_threads()),
            ..report.clone()
        }
    } else {
        report.clone().without_timings()
    };

    if format == ReportFormat::Text {
        print!("{}", evaluation::render_report(&report, ReportFormat::Text)?);
    }
    match report_path {
        Some(path) => {
            manifest::write_text(&path, &evaluation::render_report(&artifact, format)?)?;
            ctx.finish(&path)
        }
        None if format != ReportFormat::Text => {
            print!("{}", evaluation::render_report(&artifact, format)?);
            Ok(())
        }
        None => Ok(()),
    }
}
