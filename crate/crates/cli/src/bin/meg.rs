use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use meg_cli::{run, CliError, Command, Method, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "meg",
    version,
    about = "Simulate, fit and score mutually exciting graph models"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate events from a parameter file.
    Simulate(Args),
    /// Fit a model to an event file and write a parameter file.
    Fit(Args),
    /// Score events with a parameter file.
    Score(Args),
    /// Fit (or load) a model and report training and test KS scores.
    Evaluate(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_parser = ["em", "adam"])]
    method: Option<String>,
    #[arg(long, value_parser = ["mle", "zero", "adjacency"])]
    tau: Option<String>,
    #[arg(long = "d")]
    dim: Option<usize>,
    #[arg(long, value_parser = ["absent", "poisson", "markov", "hawkes"])]
    main: Option<String>,
    #[arg(long, value_parser = ["absent", "poisson", "markov", "hawkes"])]
    interaction: Option<String>,
    /// Training window end, in seconds from the file epoch.
    #[arg(long)]
    split: Option<f64>,
    /// Tie offset: an event excites others only from `t + dt` onwards.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long = "n-events")]
    n_events: Option<usize>,
    /// Fix the seed to 0 when none is given.
    #[arg(long)]
    reproducible: bool,
}

fn execute(command: Command, args: Args) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let method = args.method.as_deref().map(str::parse::<Method>).transpose()?;
    cfg.apply(&Overrides {
        events: args.events,
        params: args.params,
        out: args.out,
        seed: args.seed,
        eta: args.eta,
        method,
        tau: args.tau,
        dim: args.dim,
        main: args.main,
        interaction: args.interaction,
        split: args.split,
        dt: args.dt,
        horizon: args.horizon,
        n_events: args.n_events,
        reproducible: args.reproducible,
    });
    let outcome = run(command, &cfg).with_context(|| format!("meg {command} failed"))?;
    print!("{}", outcome.render());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Fit(a) => (Command::Fit, a),
        Cmd::Score(a) => (Command::Score, a),
        Cmd::Evaluate(a) => (Command::Evaluate, a),
    };
    match execute(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.downcast_ref::<CliError>().map_or("internal", CliError::kind);
            let record = serde_json::json!({
                "error": kind,
                "command": command.to_string(),
                "message": format!("{e:#}"),
            });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
