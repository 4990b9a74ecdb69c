//! Command-line orchestration: dataset generation, training, evaluation,
//! baseline planning, and report emission.

pub mod config;
pub mod dataset_cmd;
pub mod eval_cmd;
pub mod metrics;
pub mod train_cmd;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{CliError, RunConfig};
pub use metrics::{MetricsRow, BUILD_ID};

#[derive(Debug, Parser)]
#[command(name = "partforge", version, about = "Part-assembly planning and learning toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate an annotated chair dataset.
    GenDataset {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Total chairs; split 3:1:1 easy-train / hard-train / test.
        #[arg(long)]
        n_chairs: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-annotate a dataset in place and verify connection recovery.
    Annotate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train the point-cloud autoencoder on all dataset parts.
    TrainAe {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Train a single-task expert on one chair.
    TrainSingle {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        chair: u64,
        #[arg(long)]
        ae: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        budget: Option<usize>,
        /// Action caps as P,K,W.
        #[arg(long)]
        caps: Option<String>,
        #[arg(long)]
        max_states: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Distill expert checkpoints into one multi-task policy.
    Distill {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        ae: PathBuf,
        /// Comma-separated expert checkpoint paths.
        #[arg(long, value_delimiter = ',')]
        experts: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Greedy-rollout evaluation of a policy checkpoint on a split.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        ae: PathBuf,
        #[arg(long)]
        split: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        max_states: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Whole-assembly RRT-Connect baseline over a split.
    Baseline {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        split: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_states: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Export per-step OBJ scenes from a trajectory log.
    ExportTraj {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        chair: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge run directories into a sorted metrics CSV plus summary.
    Report {
        /// Comma-separated run directories containing metrics.csv.
        #[arg(long, value_delimiter = ',')]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Run the CLI; returns the process exit code (0 ok, 2 config, 3
/// divergence, 4 I/O).
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::GenDataset { out, seed, n_chairs, config } => {
            dataset_cmd::gen_dataset(&out, seed, n_chairs, config.as_deref())
        }
        Command::Annotate { dataset, config } => dataset_cmd::annotate(&dataset, config.as_deref()),
        Command::TrainAe { dataset, out, seed, config } => {
            train_cmd::train_ae_cmd(&dataset, &out, seed, config.as_deref())
        }
        Command::TrainSingle { dataset, chair, ae, out, seed, budget, caps, max_states, config } => {
            train_cmd::train_single_cmd(
                &dataset,
                chair,
                &ae,
                &out,
                seed,
                budget,
                caps.as_deref(),
                max_states,
                config.as_deref(),
            )
        }
        Command::Distill { dataset, ae, experts, out, seed, config } => {
            train_cmd::distill_cmd(&dataset, &ae, &experts, &out, seed, config.as_deref())
        }
        Command::Eval { dataset, policy, ae, split, out, seed, episodes, max_states, config } => {
            eval_cmd::eval_cmd(
                &dataset,
                &policy,
                &ae,
                &split,
                &out,
                seed,
                episodes,
                max_states,
                config.as_deref(),
            )
        }
        Command::Baseline { dataset, split, out, seed, max_states, config } => {
            eval_cmd::baseline_cmd(&dataset, &split, &out, seed, max_states, config.as_deref())
        }
        Command::ExportTraj { log, dataset, chair, out } => {
            eval_cmd::export_traj_cmd(&log, &dataset, chair, &out)
        }
        Command::Report { runs, out } => eval_cmd::report_cmd(&runs, &out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
