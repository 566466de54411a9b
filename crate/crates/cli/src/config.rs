//! `--config` JSON merging. Keys are the long flag names (`"noise"`,
//! `"generations"`, ...); a flag given on the command line always wins.
//! Two structured keys are also read: `"learners"` (per-kind learner
//! settings keyed by `LiR`/`PR`/`LR`/`RF`) and `"ga"` (extra GA settings).

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use uregm::ensemble::{default_configs, ConfigMap};
use uregm::LearnerKind;

use crate::error::{CliError, CliResult};

#[derive(Debug, Default)]
pub struct Resolver {
    file: Map<String, Value>,
    /// Every value actually used, for the manifest.
    pub resolved: BTreeMap<String, Value>,
}

impl Resolver {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Resolver::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| uregm::Error::io(path, e))?;
        match serde_json::from_str(&text) {
            Ok(Value::Object(file)) => Ok(Resolver { file, ..Resolver::default() }),
            Ok(_) => Err(CliError::Usage(format!("{}: config must be a JSON object", path.display()))),
            Err(e) => Err(CliError::Usage(format!("{}: {e}", path.display()))),
        }
    }

    fn file_value<T: DeserializeOwned>(&self, key: &str) -> CliResult<Option<T>> {
        self.file
            .get(key)
            .map(|v| serde_json::from_value(v.clone()).map_err(|e| CliError::Usage(format!("config key `{key}`: {e}"))))
            .transpose()
    }

    fn record<T: Serialize>(&mut self, key: &str, value: &T) {
        self.resolved
            .insert(key.to_string(), serde_json::to_value(value).expect("flag value serializes"));
    }

    /// Flag, else config file, else `default`.
    pub fn get<T: Serialize + DeserializeOwned>(&mut self, key: &str, flag: Option<T>, default: T) -> CliResult<T> {
        let v = match flag {
            Some(v) => v,
            None => self.file_value(key)?.unwrap_or(default),
        };
        self.record(key, &v);
        Ok(v)
    }

    pub fn optional<T: Serialize + DeserializeOwned>(&mut self, key: &str, flag: Option<T>) -> CliResult<Option<T>> {
        let v = match flag {
            Some(v) => Some(v),
            None => self.file_value(key)?,
        };
        if let Some(v) = &v {
            self.record(key, v);
        }
        Ok(v)
    }

    pub fn require<T: Serialize + DeserializeOwned>(&mut self, key: &str, flag: Option<T>) -> CliResult<T> {
        self.optional(key, flag)?
            .ok_or_else(|| CliError::Usage(format!("missing required flag --{key}")))
    }

    /// Default learner settings overlaid with the config's `"learners"` map.
    pub fn learner_configs(&mut self) -> CliResult<ConfigMap> {
        let mut cfgs = default_configs();
        if let Some(Value::Object(over)) = self.file.get("learners").cloned() {
            for (name, patch) in over {
                let kind: LearnerKind = name
                    .parse()
                    .map_err(|_| CliError::Usage(format!("config `learners`: unknown learner `{name}`")))?;
                let mut merged = serde_json::to_value(&cfgs[&kind]).expect("config serializes");
                let Value::Object(patch) = patch else {
                    return Err(CliError::Usage(format!("config `learners.{name}` must be an object")));
                };
                merged.as_object_mut().expect("object").extend(patch);
                let cfg: uregm::LearnerConfig = serde_json::from_value(merged)
                    .map_err(|e| CliError::Usage(format!("config `learners.{name}`: {e}")))?;
                if cfg.kind != kind {
                    return Err(CliError::Usage(format!("config `learners.{name}` sets a different kind")));
                }
                cfg.validate().map_err(CliError::usage)?;
                cfgs.insert(kind, cfg);
            }
        }
        self.record("learners", &cfgs);
        Ok(cfgs)
    }

    /// The config's `"ga"` object, if any, as a base for flag overrides.
    pub fn ga_base(&self) -> CliResult<uregm::GAConfig> {
        Ok(self.file_value("ga")?.unwrap_or_default())
    }
}
