//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::eval::{evaluate, read_results, render_results, sweep, write_results, EvalConfig, ResultRow, SweepAxis};
use crate::harness::{derive_seed, train};
use crate::mdp::Action;
use crate::policy::{ActorPolicy, ConstantPolicy, Policy, RandomPolicy, VerticalAvoidancePolicy};
use crate::sacd::{ActionMode, SacdAgent};
use crate::sim::{generate_network, generate_scenario, CorridorNetwork, Surveillance};

#[derive(Debug, Parser)]
#[command(
    name = "corridor-rl",
    version,
    about = "Corridor separation assurance: simulate, train, evaluate"
)]
pub struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true, env = "CORRIDOR_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Rollout workers for training, threads for evaluation.
    #[arg(long, global = true, env = "CORRIDOR_WORKERS")]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "CORRIDOR_OUT", default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    /// Greedy actor from a checkpoint.
    Checkpoint,
    Maintain,
    Random,
    Rule,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic corridor network.
    GenNetwork,
    /// Write a demand scenario.
    GenScenario {
        /// Network file; generated from the configuration when absent.
        #[arg(long)]
        network: Option<PathBuf>,
    },
    /// Train an agent; writes metrics.jsonl and checkpoint/.
    Train,
    /// Paired evaluation of a checkpoint against the unequipped baseline.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        surveillance: Option<String>,
    },
    /// One paired evaluation per value of a stress axis.
    Sweep {
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Defaults to <out>/checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "checkpoint")]
        policy: PolicyKind,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Render a results table as a human-readable summary.
    Report {
        /// Defaults to <out>/results.csv.
        #[arg(long)]
        results: Option<PathBuf>,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code: 0 on success, 2 on usage and
/// configuration errors, 1 on runtime failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e @ (Error::Config(_) | Error::Parse { .. })) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut c = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        c.train.seed = seed;
    }
    if let Some(w) = cli.workers {
        c.train.workers = w;
    }
    Ok(c)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn load_policy(kind: PolicyKind, checkpoint: &Path) -> Result<Box<dyn Policy>> {
    Ok(match kind {
        PolicyKind::Checkpoint => {
            let (agent, _) = SacdAgent::<f32>::load(checkpoint)?;
            Box::new(ActorPolicy::new(agent.actor, ActionMode::Greedy))
        }
        PolicyKind::Maintain => Box::new(ConstantPolicy(Action::MaintainSpeed)),
        PolicyKind::Random => Box::new(RandomPolicy),
        PolicyKind::Rule => Box::new(VerticalAvoidancePolicy::default()),
    })
}

fn with_threads<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn network(config: &Config) -> Result<CorridorNetwork> {
    generate_network(&config.train.network, derive_seed(config.train.seed, &[u64::MAX - 3]))
}

fn eval_config(config: &Config, episodes: Option<usize>) -> EvalConfig {
    let mut e = config.eval_config(config.train.seed);
    if let Some(n) = episodes {
        e.episodes = n;
    }
    e
}

fn execute(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    let out = &cli.out;
    match &cli.command {
        Command::GenNetwork => {
            ensure_dir(out)?;
            let path = out.join("network.txt");
            write_file(&path, &network(&config)?.to_text())?;
            println!("wrote {}", path.display());
        }
        Command::GenScenario { network: net_path } => {
            let net = match net_path {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                    CorridorNetwork::from_text(&text)?
                }
                None => network(&config)?,
            };
            let scenario = generate_scenario(&net, &config.train.scenario, config.train.seed)?;
            ensure_dir(out)?;
            let path = out.join("scenario.txt");
            write_file(&path, &scenario.to_text())?;
            println!("wrote {} ({} flights)", path.display(), scenario.demands.len());
        }
        Command::Train => {
            ensure_dir(out)?;
            write_file(&out.join("config.cfg"), &config.to_text())?;
            let (_, report) = train(&config.train, Some(out))?;
            println!(
                "trained {} iterations ({} env steps, {} learner steps, {} episodes) in {:.1} s",
                report.iterations(),
                report.env_steps,
                report.learner_steps,
                report.episodes,
                report.elapsed_s
            );
            if let Some(p) = &report.checkpoint {
                println!("checkpoint {}", p.display());
            }
        }
        Command::Evaluate {
            checkpoint,
            episodes,
            surveillance,
        } => {
            let mut e = eval_config(&config, *episodes);
            if let Some(s) = surveillance {
                e.env.surveillance =
                    Surveillance::parse(s).ok_or_else(|| Error::Config(format!("unknown surveillance '{s}'")))?;
            }
            let policy = load_policy(PolicyKind::Checkpoint, checkpoint)?;
            let report = with_threads(cli.workers, || evaluate(policy.as_ref(), &e))??;
            let rows = ResultRow::pair("none", "-", &report).to_vec();
            ensure_dir(out)?;
            write_results(&out.join("results.csv"), &rows)?;
            println!("{}", report.descriptor);
            print!("{}", render_results(&rows));
        }
        Command::Sweep {
            axis,
            values,
            checkpoint,
            policy,
            episodes,
        } => {
            let axis = SweepAxis::parse(axis).ok_or_else(|| Error::Config(format!("unknown sweep axis '{axis}'")))?;
            let ckpt = checkpoint.clone().unwrap_or_else(|| out.join("checkpoint"));
            let policy = load_policy(*policy, &ckpt)?;
            let base = eval_config(&config, *episodes);
            let reports = with_threads(cli.workers, || sweep(policy.as_ref(), axis, values, &base))??;
            let rows: Vec<ResultRow> = reports
                .iter()
                .flat_map(|(v, r)| ResultRow::pair(axis.as_str(), v, r))
                .collect();
            ensure_dir(out)?;
            write_results(&out.join("results.csv"), &rows)?;
            print!("{}", render_results(&rows));
        }
        Command::Report { results } => {
            let path = results.clone().unwrap_or_else(|| out.join("results.csv"));
            let rows = read_results(&path)?;
            let text = render_results(&rows);
            print!("{text}");
        }
    }
    Ok(())
}
