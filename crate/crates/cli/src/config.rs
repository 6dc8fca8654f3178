//! Run configuration: a TOML file plus command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use meg_core::{model::parse_component, AdamConfig, EmConfig, ModelSpec};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::ingest::GraphDecl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Adam,
    Em,
}

impl std::str::FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(Method::Adam),
            "em" => Ok(Method::Em),
            other => Err(CliError::Config(format!(
                "unknown method '{other}' (expected adam or em)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub main: String,
    pub interaction: String,
    pub dim: usize,
    pub tau: String,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            main: "hawkes".into(),
            interaction: "absent".into(),
            dim: 1,
            tau: "mle".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamSection {
    pub eta: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub restarts: usize,
    pub restart_jitter: f64,
    pub warm_start: bool,
    /// Start interaction baselines at the square root of the node rates.
    pub sqrt_gamma: bool,
}

impl Default for AdamSection {
    fn default() -> Self {
        let d = AdamConfig::default();
        Self {
            eta: d.eta,
            max_iter: d.max_iter,
            tol: d.tol,
            restarts: d.restarts,
            restart_jitter: d.restart_jitter,
            warm_start: d.warm_start,
            sqrt_gamma: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmSection {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EmSection {
    fn default() -> Self {
        let d = EmConfig::default();
        Self {
            max_iter: d.max_iter,
            tol: d.tol,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub horizon: Option<f64>,
    /// Simulate exactly this many events instead of up to a horizon.
    pub events: Option<usize>,
    pub max_events: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            horizon: None,
            events: None,
            max_events: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub events: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub graph: GraphDecl,
    pub split: Option<f64>,
    pub dt: f64,
    pub seed: Option<u64>,
    pub reproducible: bool,
    pub method: Method,
    /// `evaluate` reports whether each KS score is below this.
    pub ks_threshold: Option<f64>,
    pub model: ModelSection,
    pub adam: AdamSection,
    pub em: EmSection,
    pub simulate: SimulateSection,
}

/// Command-line values that replace the file's settings.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub events: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub eta: Option<f64>,
    pub method: Option<Method>,
    pub tau: Option<String>,
    pub dim: Option<usize>,
    pub main: Option<String>,
    pub interaction: Option<String>,
    pub split: Option<f64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub n_events: Option<usize>,
    pub reproducible: bool,
}

impl RunConfig {
    /// Reads a config file; relative paths are taken from the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.events, &mut cfg.params, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Clone>(slot: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *slot = v.clone();
            }
        }
        if o.events.is_some() {
            self.events = o.events.clone();
        }
        if o.params.is_some() {
            self.params = o.params.clone();
        }
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.split.is_some() {
            self.split = o.split;
        }
        if o.horizon.is_some() {
            self.simulate.horizon = o.horizon;
        }
        if o.n_events.is_some() {
            self.simulate.events = o.n_events;
        }
        set(&mut self.adam.eta, &o.eta);
        set(&mut self.method, &o.method);
        set(&mut self.model.tau, &o.tau);
        set(&mut self.model.dim, &o.dim);
        set(&mut self.model.main, &o.main);
        set(&mut self.model.interaction, &o.interaction);
        set(&mut self.dt, &o.dt);
        self.reproducible |= o.reproducible;
    }

    pub fn spec(&self) -> Result<ModelSpec> {
        let m = &self.model;
        Ok(ModelSpec::new(
            parse_component(&m.main)?,
            parse_component(&m.interaction)?,
            m.dim,
            m.tau.parse()?,
        )?)
    }

    /// The configured seed; without one, 0 under `reproducible` and a
    /// clock-derived value otherwise.
    pub fn resolved_seed(&self) -> u64 {
        match (self.seed, self.reproducible) {
            (Some(s), _) => s,
            (None, true) => 0,
            (None, false) => std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_nanos() as u64),
        }
    }

    pub fn adam_config(&self, seed: u64) -> AdamConfig {
        let a = &self.adam;
        AdamConfig {
            eta: a.eta,
            max_iter: a.max_iter,
            tol: a.tol,
            restarts: a.restarts,
            restart_jitter: a.restart_jitter,
            warm_start: a.warm_start,
            seed,
            ..AdamConfig::default()
        }
    }

    pub fn em_config(&self) -> EmConfig {
        EmConfig {
            max_iter: self.em.max_iter,
            tol: self.em.tol,
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub(crate) fn require_events(&self) -> Result<&Path> {
        let p = self
            .events
            .as_deref()
            .ok_or_else(|| CliError::Config("an event file is required (events = ... or --events)".into()))?;
        if !p.is_file() {
            return Err(CliError::Config(format!("event file {} does not exist", p.display())));
        }
        Ok(p)
    }

    pub(crate) fn require_params(&self) -> Result<&Path> {
        let p = self
            .params
            .as_deref()
            .ok_or_else(|| CliError::Config("a parameter file is required (params = ... or --params)".into()))?;
        if !p.is_file() {
            return Err(CliError::Config(format!(
                "parameter file {} does not exist",
                p.display()
            )));
        }
        Ok(p)
    }
}
