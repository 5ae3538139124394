//! Effective settings: command-line flags win over `RISKRAG_*` environment
//! variables, which win over the config file, which wins over defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use riskrag::generation::GeneratorConfig;
use riskrag::retrieval::Backend;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// The config file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSettings {
    pub providers: Option<PathBuf>,
    pub offline: Option<bool>,
    pub jobs: Option<usize>,
    pub backend: Option<String>,
    pub k: Option<usize>,
    pub threshold: Option<f64>,
    pub generator: Option<GeneratorConfig>,
}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct FlagSettings {
    pub providers: Option<PathBuf>,
    pub offline: bool,
    pub jobs: Option<usize>,
    pub backend: Option<String>,
    pub k: Option<usize>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub providers: Option<PathBuf>,
    pub offline: bool,
    pub jobs: Option<usize>,
    pub backend: Backend,
    pub k: usize,
    pub threshold: f64,
    pub generator: GeneratorConfig,
    #[serde(skip)]
    pub sources: BTreeMap<String, String>,
}

pub const ENV_PREFIX: &str = "RISKRAG_";

fn parse<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| CliError::Usage(format!("invalid value `{raw}` for {key}: {e}")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, CliError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" | "" => Ok(false),
        other => Err(CliError::Usage(format!("invalid boolean `{other}` for {key}"))),
    }
}

struct Resolver<'a> {
    env: &'a dyn Fn(&str) -> Option<String>,
    sources: BTreeMap<String, String>,
}

impl Resolver<'_> {
    /// First of flag, environment, file; records which one won.
    fn pick<T>(
        &mut self,
        key: &str,
        flag: Option<T>,
        file: Option<T>,
        from_env: impl Fn(&str) -> Result<T, CliError>,
    ) -> Result<Option<T>, CliError> {
        let env_key = format!("{ENV_PREFIX}{}", key.to_ascii_uppercase());
        let (value, source) = if let Some(v) = flag {
            (Some(v), "flag".to_string())
        } else if let Some(raw) = (self.env)(&env_key) {
            (Some(from_env(&raw)?), format!("env:{env_key}"))
        } else if let Some(v) = file {
            (Some(v), "file".to_string())
        } else {
            (None, "default".to_string())
        };
        self.sources.insert(key.to_string(), source);
        Ok(value)
    }
}

pub fn load_file(path: &Path) -> Result<FileSettings, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

pub fn resolve(
    file: FileSettings,
    flags: FlagSettings,
    env: &dyn Fn(&str) -> Option<String>,
) -> Result<Settings, CliError> {
    let mut r = Resolver {
        env,
        sources: BTreeMap::new(),
    };
    let providers = r.pick("providers", flags.providers, file.providers, |v| Ok(PathBuf::from(v)))?;
    let offline = r
        .pick("offline", flags.offline.then_some(true), file.offline, |v| {
            parse_bool("offline", v)
        })?
        .unwrap_or(false);
    let jobs = r.pick("jobs", flags.jobs, file.jobs, |v| parse("jobs", v))?;
    let backend_raw = r
        .pick("backend", flags.backend, file.backend, |v| Ok(v.to_string()))?
        .unwrap_or_else(|| "tfidf".into());
    let backend: Backend = backend_raw.parse().map_err(CliError::Usage)?;
    let k = r.pick("k", flags.k, file.k, |v| parse("k", v))?.unwrap_or(10);
    let threshold = r
        .pick("threshold", flags.threshold, file.threshold, |v| parse("threshold", v))?
        .unwrap_or(riskrag::evaluation::DEFAULT_THRESHOLD);
    r.sources.insert(
        "generator".into(),
        if file.generator.is_some() { "file" } else { "default" }.into(),
    );
    let generator = file.generator.unwrap_or_default();
    generator.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if k == 0 {
        return Err(CliError::Usage("k must be at least 1".into()));
    }
    if jobs == Some(0) {
        return Err(CliError::Usage("jobs must be at least 1".into()));
    }
    Ok(Settings {
        providers,
        offline,
        jobs,
        backend,
        k,
        threshold,
        generator,
        sources: r.sources,
    })
}
