use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use graphfl::algorithms::Algorithm;
use graphfl::graph::io::{load_dataset_with_stats, write_dataset};
use graphfl::graph::sbm::generate_sbm;
use graphfl::harness::{self, ExperimentConfig, SweepAxis};
use graphfl::metrics::format_float;
use graphfl::Result;

/// Federated graph learning experiment runner.
#[derive(Parser)]
#[command(name = "graphfl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment across its seeds.
    Run(RunArgs),
    /// Repeat a run while varying one axis; tabulate results in sweep.csv.
    Sweep(SweepArgs),
    /// Partition a dataset and write splits.json without training.
    GenSplits(GenSplitsArgs),
    /// Generate a stochastic block model dataset in canonical layout.
    GenSynth(GenSynthArgs),
    /// Re-emit a dataset directory in canonical form, validating it.
    Convert(ConvertArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to output_dir from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Axis to vary: labels_per_class, rho, gamma, or n_pseudo.
    #[arg(long)]
    axis: SweepAxis,
    /// Comma-separated axis values, echoed verbatim into sweep.csv.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
    /// Algorithms to compare at each value; defaults to the configured one.
    #[arg(long, value_delimiter = ',')]
    algorithms: Vec<Algorithm>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenSplitsArgs {
    #[arg(long)]
    config: PathBuf,
    /// Partition seed; defaults to the first seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long, default_value = "splits.json")]
    out: PathBuf,
}

#[derive(Args)]
struct GenSynthArgs {
    #[arg(long)]
    blocks: usize,
    #[arg(long)]
    nodes_per_block: usize,
    #[arg(long, default_value_t = 0.2)]
    p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    p_out: f64,
    #[arg(long, default_value_t = 0.2)]
    feature_noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConvertArgs {
    /// Dataset directory to read (manifest.json + CSVs).
    #[arg(long)]
    input: PathBuf,
    /// Directory for the canonical re-emission.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    harness::init_threads_from_env();
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run(a) => {
            let cfg = ExperimentConfig::load(&a.config)?;
            let summary = harness::run(&cfg, a.out.as_deref())?;
            println!(
                "{}: mean accuracy {} ± {} over {} seed(s)",
                summary.algorithm,
                format_float(summary.mean_accuracy),
                format_float(summary.std_accuracy),
                summary.per_seed.len()
            );
        }
        Command::Sweep(a) => {
            let cfg = ExperimentConfig::load(&a.config)?;
            let path = harness::sweep(&cfg, a.axis, &a.values, &a.algorithms, a.out.as_deref())?;
            println!("wrote {}", path.display());
        }
        Command::GenSplits(a) => {
            let cfg = ExperimentConfig::load(&a.config)?;
            let g = harness::load_graph(&cfg)?;
            let seed = a.seed.unwrap_or(cfg.seeds[0]);
            let split = harness::build_split(&g, &cfg, seed)?;
            for w in split.warnings() {
                eprintln!("warning: {w}");
            }
            split.save(&a.out)?;
            println!(
                "wrote {} ({} clients, {} test nodes)",
                a.out.display(),
                split.clients.len(),
                split.test_nodes.len()
            );
        }
        Command::GenSynth(a) => {
            let g = generate_sbm(a.blocks, a.nodes_per_block, a.p_in, a.p_out, a.feature_noise, a.seed)?;
            write_dataset(&g, &a.out)?;
            println!(
                "wrote {} ({} nodes, {} edges, {} classes)",
                a.out.display(),
                g.num_nodes,
                g.num_edges(),
                g.num_classes
            );
        }
        Command::Convert(a) => {
            let (g, stats) = load_dataset_with_stats(&a.input)?;
            write_dataset(&g, &a.out)?;
            println!(
                "wrote {} ({} nodes, {} edges; dropped {} self-loops, {} duplicate edges)",
                a.out.display(),
                g.num_nodes,
                g.num_edges(),
                stats.self_loops_dropped,
                stats.duplicate_edges_dropped
            );
        }
    }
    Ok(())
}
