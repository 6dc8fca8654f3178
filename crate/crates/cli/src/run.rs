//! The four experiment commands and the files they write.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use meg_core::{
    adam_fit, default_init, em_fit, estimate_tau, ks_pvalue, score_events, score_training, simulate, simulate_events,
    EventIndex, EventLog, FitReport, GraphShape, InitOptions, ModelSpec, Params, ScoreReport, SimConfig, TauMatrix,
};

use crate::config::{Method, RunConfig};
use crate::error::{CliError, Result};
use crate::ingest::{ingest, write_events, Dataset, LabelSource, Labels};
use crate::paramfile::ParamFile;
use crate::split::{split, SplitSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Fit,
    Score,
    Evaluate,
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulate" => Ok(Command::Simulate),
            "fit" => Ok(Command::Fit),
            "score" => Ok(Command::Score),
            "evaluate" => Ok(Command::Evaluate),
            other => Err(CliError::Config(format!("unknown command '{other}'"))),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::Score => "score",
            Command::Evaluate => "evaluate",
        })
    }
}

/// Summary lines plus the files a command wrote.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub summary: Vec<(String, String)>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    fn push(&mut self, key: &str, value: impl fmt::Display) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// `key: value` lines.
    pub fn render(&self) -> String {
        self.summary.iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
    }

    fn write_summary(&mut self, out: &Path, name: &str) -> Result<()> {
        let path = out.join(name);
        fs::write(&path, self.render()).map_err(|e| CliError::io(&path, e))?;
        self.artifacts.push(path);
        Ok(())
    }
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Outcome> {
    let out = cfg.out_dir();
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    let seed = cfg.resolved_seed();
    log::info!("{cmd} with seed {seed}");
    let mut outcome = Outcome::default();
    outcome.push("command", cmd);
    outcome.push("seed", seed);
    match cmd {
        Command::Simulate => run_simulate(cfg, seed, &out, &mut outcome)?,
        Command::Fit => run_fit(cfg, seed, &out, &mut outcome)?,
        Command::Score => run_score(cfg, &out, &mut outcome)?,
        Command::Evaluate => run_evaluate(cfg, seed, &out, &mut outcome)?,
    }
    Ok(outcome)
}

fn run_simulate(cfg: &RunConfig, seed: u64, out: &Path, outcome: &mut Outcome) -> Result<()> {
    let model = ParamFile::read(cfg.require_params()?)?;
    let shape = GraphShape::new(model.labels.kind());
    // Every edge starts at time zero: a simulation has no training data to
    // take changepoints from.
    let tau = TauMatrix::uniform(shape.kind, 0.0);
    let sim = &cfg.simulate;
    let log = match (sim.events, sim.horizon) {
        (Some(n), _) => simulate_events(
            &model.params,
            &tau,
            model.spec,
            &shape,
            SimConfig::new(1.0, seed).with_max_events(sim.max_events),
            n,
        )?,
        (None, Some(h)) => simulate(
            &model.params,
            &tau,
            model.spec,
            &shape,
            SimConfig::new(h, seed).with_max_events(sim.max_events),
        )?,
        (None, None) => {
            return Err(CliError::Config(
                "simulate needs [simulate] horizon or events (or --horizon / --n-events)".into(),
            ))
        }
    };
    let path = out.join("events.csv");
    write_events(&path, &log, &model.labels, None)?;
    outcome.artifacts.push(path);
    outcome.push("events", log.len());
    outcome.push("horizon", log.horizon());
    outcome.write_summary(out, "simulate_summary.txt")
}

/// Training and (optional) test windows of the configured event file.
struct Windows {
    data: Dataset,
    train: EventLog,
    test: Option<EventLog>,
}

fn load_windows(cfg: &RunConfig, labels: LabelSource<'_>, outcome: &mut Outcome) -> Result<Windows> {
    let (data, report) = ingest(cfg.require_events()?, labels, cfg.dt)?;
    outcome.push("records", report.records);
    outcome.push("duplicates_removed", report.duplicates);
    let (train, test) = match cfg.split {
        Some(at) => {
            let (train, test, summary) = split(&data.log, at)?;
            push_split(outcome, &summary);
            (train, Some(test))
        }
        None => (data.log.clone(), None),
    };
    Ok(Windows { data, train, test })
}

fn push_split(outcome: &mut Outcome, summary: &SplitSummary) {
    outcome.summary.extend(summary.lines());
}

fn changepoints(labels: &Labels, train: &EventLog, spec: ModelSpec) -> Result<(GraphShape, EventIndex, TauMatrix)> {
    let shape = GraphShape::from_log(labels.kind(), train)?;
    let index = EventIndex::build(train, shape.kind)?;
    let tau = estimate_tau(&index, &shape, spec.tau);
    Ok((shape, index, tau))
}

/// Fits `spec` to `train` from the data-driven starting point.
pub fn fit_model(
    cfg: &RunConfig,
    spec: ModelSpec,
    labels: &Labels,
    train: &EventLog,
    seed: u64,
) -> Result<FitReport<f64>> {
    let (shape, index, tau) = changepoints(labels, train, spec)?;
    let init: Params<f64> = default_init(
        &index,
        &shape,
        spec,
        InitOptions {
            sqrt_gamma: cfg.adam.sqrt_gamma,
            seed,
        },
    )?;
    let report = match cfg.method {
        Method::Adam => adam_fit(&index, &tau, spec, &shape, &init, &cfg.adam_config(seed))?,
        Method::Em => em_fit(&index, &tau, spec, &shape, &init, &cfg.em_config())?,
    };
    Ok(report)
}

fn write_fit(out: &Path, file: &ParamFile, report: &FitReport<f64>, outcome: &mut Outcome) -> Result<()> {
    let path = out.join("params.toml");
    file.write(&path)?;
    outcome.artifacts.push(path);
    let path = out.join("trace.csv");
    let mut text = String::from("iteration,log_likelihood\n");
    for (k, v) in report.trace.iter().enumerate() {
        text.push_str(&format!("{k},{v}\n"));
    }
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    outcome.artifacts.push(path);
    outcome.push("log_likelihood", report.log_likelihood);
    outcome.push("iterations", report.iterations);
    outcome.push("converged", report.converged);
    outcome.push("best_restart", report.best_restart);
    outcome.push("failed_restarts", report.failed_restarts);
    Ok(())
}

fn run_fit(cfg: &RunConfig, seed: u64, out: &Path, outcome: &mut Outcome) -> Result<()> {
    let spec = cfg.spec()?;
    let w = load_windows(cfg, LabelSource::Discover(cfg.graph), outcome)?;
    outcome.push("method", format!("{:?}", cfg.method).to_lowercase());
    let report = fit_model(cfg, spec, &w.data.labels, &w.train, seed)?;
    let file = ParamFile {
        spec,
        labels: w.data.labels.clone(),
        params: report.params.clone(),
    };
    write_fit(out, &file, &report, outcome)?;
    outcome.write_summary(out, "fit_summary.txt")
}

/// Scores test events after the training window, or the training events
/// themselves when there is no test window.
fn score_window(model: &ParamFile, train: &EventLog, test: Option<&EventLog>) -> Result<ScoreReport> {
    let (shape, _, tau) = changepoints(&model.labels, train, model.spec)?;
    Ok(match test {
        Some(test) => score_events(&model.params, model.spec, &tau, shape.kind, train, test)?,
        None => score_training(&model.params, model.spec, &tau, shape.kind, train)?,
    })
}

fn write_report(out: &Path, suffix: &str, labels: &Labels, report: &ScoreReport, outcome: &mut Outcome) -> Result<()> {
    let (src, dst) = (labels.sources(), labels.destinations());
    let mut scores = String::from("time,source,destination,pvalue,new_edge,tau_infinite\n");
    for e in &report.events {
        scores.push_str(&format!(
            "{},{},{},{},{},{}\n",
            e.time, src[e.src], dst[e.dst], e.pvalue, e.new_edge as u8, e.tau_infinite as u8
        ));
    }
    let mut edges = String::from("source,destination,events,ks\n");
    for e in &report.per_edge {
        edges.push_str(&format!("{},{},{},{}\n", src[e.src], dst[e.dst], e.events, e.ks));
    }
    let mut qq = String::from("theoretical,empirical\n");
    for (a, b) in &report.qq {
        qq.push_str(&format!("{a},{b}\n"));
    }
    for (name, text) in [("scores", scores), ("edge_ks", edges), ("qq", qq)] {
        let path = out.join(format!("{name}{suffix}.csv"));
        let mut f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        f.write_all(text.as_bytes()).map_err(|e| CliError::io(&path, e))?;
        outcome.artifacts.push(path);
    }
    Ok(())
}

fn push_ks(outcome: &mut Outcome, prefix: &str, report: &ScoreReport, threshold: Option<f64>) {
    let m = report.events.len();
    outcome.push(&format!("{prefix}events"), m);
    outcome.push(&format!("{prefix}new_edge_events"), report.new_edge_count());
    outcome.push(
        &format!("{prefix}tau_infinite_events"),
        report.events.iter().filter(|e| e.tau_infinite).count(),
    );
    match report.ks {
        Some(ks) => {
            outcome.push(&format!("{prefix}ks"), ks);
            outcome.push(&format!("{prefix}ks_pvalue"), ks_pvalue(ks, m));
            if let Some(t) = threshold {
                outcome.push(&format!("{prefix}ks_below_threshold"), ks < t);
            }
        }
        None => outcome.push(&format!("{prefix}ks"), "none"),
    }
}

fn run_score(cfg: &RunConfig, out: &Path, outcome: &mut Outcome) -> Result<()> {
    let model = ParamFile::read(cfg.require_params()?)?;
    let w = load_windows(cfg, LabelSource::Fixed(&model.labels), outcome)?;
    let report = score_window(&model, &w.train, w.test.as_ref())?;
    write_report(out, "", &model.labels, &report, outcome)?;
    push_ks(outcome, "", &report, cfg.ks_threshold);
    outcome.write_summary(out, "score_summary.txt")
}

fn run_evaluate(cfg: &RunConfig, seed: u64, out: &Path, outcome: &mut Outcome) -> Result<()> {
    let (model, w) = match &cfg.params {
        Some(_) => {
            let model = ParamFile::read(cfg.require_params()?)?;
            let w = load_windows(cfg, LabelSource::Fixed(&model.labels), outcome)?;
            (model, w)
        }
        None => {
            let spec = cfg.spec()?;
            let w = load_windows(cfg, LabelSource::Discover(cfg.graph), outcome)?;
            outcome.push("method", format!("{:?}", cfg.method).to_lowercase());
            let report = fit_model(cfg, spec, &w.data.labels, &w.train, seed)?;
            let model = ParamFile {
                spec,
                labels: w.data.labels.clone(),
                params: report.params.clone(),
            };
            write_fit(out, &model, &report, outcome)?;
            (model, w)
        }
    };
    let train = score_window(&model, &w.train, None)?;
    write_report(out, "_train", &model.labels, &train, outcome)?;
    push_ks(outcome, "train_", &train, cfg.ks_threshold);
    if let Some(test) = &w.test {
        let report = score_window(&model, &w.train, Some(test))?;
        write_report(out, "_test", &model.labels, &report, outcome)?;
        push_ks(outcome, "test_", &report, cfg.ks_threshold);
    }
    outcome.write_summary(out, "evaluate_summary.txt")
}
