//! Experiment runner: wires a parsed [`ExperimentConfig`] through graph
//! loading, partitioning, optional self-training, and the chosen algorithm,
//! then writes the artifact files. Layout under the output directory:
//!
//! ```text
//! config.toml              effective configuration (defaults materialized)
//! summary.json             mean ± sample std across seeds
//! seed{S}/splits.json      the split actually trained on
//! seed{S}/metrics.jsonl    one record per episode
//! seed{S}/checkpoint.params  final global parameters
//! ```
//!
//! Sweeps repeat `run` per (axis value, algorithm) pair in isolated
//! subdirectories and tabulate the summaries into `sweep.csv`.

pub mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{
    load_graph, DatasetConfig, ExperimentConfig, PartitionConfig, SelfTrainingConfig,
    SyntheticConfig,
};

use crate::algorithms::{build_env, run_algorithm, self_train_augment, Algorithm};
use crate::graph::GraphDataset;
use crate::metrics::{format_float, to_json_line, to_json_pretty};
use crate::model::ParamVector;
use crate::partition::{
    partition_labels_noniid, partition_new_domain, partition_overlap_noniid, sample_test_set,
    ExperimentSplit, Regime,
};
use crate::{Error, Result};

/// Cap rayon's global pool from `GRAPHFL_THREADS`. Call once at startup;
/// if the pool was already built (or the variable is unset/invalid) this is
/// a no-op.
pub fn init_threads_from_env() {
    if let Some(n) = std::env::var("GRAPHFL_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Partition the graph for one seed, or load a pre-generated split when
/// `partition.splits_path` is set. Non-IID and overlap regimes draw their
/// shared test set here; the new-domain partitioner carries its own.
pub fn build_split(g: &GraphDataset, cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentSplit> {
    let p = &cfg.partition;
    if let Some(path) = &p.splits_path {
        let split = ExperimentSplit::load(path)?;
        split.validate(g)?;
        if split.regime != p.regime {
            return Err(Error::config(
                "partition.splits_path",
                format!(
                    "loaded split has regime {:?}, config expects {:?}",
                    split.regime, p.regime
                ),
            ));
        }
        return Ok(split);
    }
    match p.regime {
        Regime::NonIid => {
            let mut split = partition_labels_noniid(g, p.num_clients, p.labels_per_class, seed)?;
            attach_test_set(g, &mut split, p.test_per_class, seed)?;
            Ok(split)
        }
        Regime::Overlap => {
            let mut split =
                partition_overlap_noniid(g, p.num_clients, p.labels_per_class, p.gamma, seed)?;
            attach_test_set(g, &mut split, p.test_per_class, seed)?;
            Ok(split)
        }
        Regime::NewDomain => partition_new_domain(
            g,
            p.num_clients,
            p.k0,
            p.n_per_class,
            p.n_adapt(),
            p.test_per_class,
            seed,
        ),
    }
}

fn attach_test_set(
    g: &GraphDataset,
    split: &mut ExperimentSplit,
    test_per_class: usize,
    seed: u64,
) -> Result<()> {
    let n = test_per_class * g.num_classes;
    split.test_nodes = sample_test_set(g, &split.training_nodes(), n, seed)?;
    split.params.n_test_per_class = Some(test_per_class);
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub final_accuracy: f64,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pseudo_label_purity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub per_seed: Vec<SeedOutcome>,
}

/// Sample standard deviation (n − 1 denominator); 0 for fewer than two values.
fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() <= 1 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Execute the configured experiment for every seed and write all artifacts
/// under `out` (defaulting to `config.output_dir`).
pub fn run(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<RunSummary> {
    cfg.validate()?;
    let out_dir = out.map_or_else(|| cfg.output_dir.clone(), Path::to_path_buf);
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    let g = load_graph(cfg)?;

    let mut per_seed = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        per_seed.push(run_seed(cfg, &g, seed, &out_dir)?);
    }

    let accs: Vec<f64> = per_seed.iter().map(|o| o.final_accuracy).collect();
    let summary = RunSummary {
        algorithm: cfg.algorithm,
        mean_accuracy: accs.iter().sum::<f64>() / accs.len() as f64,
        std_accuracy: sample_std(&accs),
        per_seed,
    };
    write_text(&out_dir.join("config.toml"), &cfg.to_toml())?;
    let mut text = to_json_pretty(&summary);
    text.push('\n');
    write_text(&out_dir.join("summary.json"), &text)?;
    Ok(summary)
}

fn run_seed(
    cfg: &ExperimentConfig,
    g: &GraphDataset,
    seed: u64,
    out_dir: &Path,
) -> Result<SeedOutcome> {
    let dir = out_dir.join(format!("seed{seed}"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let split = build_split(g, cfg, seed)?;
    for w in split.warnings() {
        eprintln!("warning: seed {seed}: {w}");
    }
    let (split, purity) = if cfg.self_training.enabled {
        self_train_augment(
            g,
            &split,
            &cfg.model,
            &cfg.train,
            cfg.self_training.n_pseudo_per_class,
            seed,
        )?
    } else {
        (split, None)
    };
    split.save(&dir.join("splits.json"))?;

    let env = build_env(g, &split, &cfg.model)?;
    let mut result = run_algorithm(cfg.algorithm, &env, &cfg.train, seed)?;
    if purity.is_some() {
        for rec in &mut result.history {
            rec.pseudo_label_purity = purity;
        }
    }

    let mut lines = String::with_capacity(result.history.len() * 160);
    for rec in &result.history {
        lines.push_str(&to_json_line(rec));
        lines.push('\n');
    }
    write_text(&dir.join("metrics.jsonl"), &lines)?;
    let mut ckpt = to_json_line(&result.final_params);
    ckpt.push('\n');
    write_text(&dir.join("checkpoint.params"), &ckpt)?;

    Ok(SeedOutcome {
        seed,
        final_accuracy: result.final_accuracy,
        wall_ms: result.wall_ms,
        pseudo_label_purity: purity,
    })
}

/// Load a checkpoint written by [`run`].
pub fn load_checkpoint(path: &Path) -> Result<ParamVector> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::ingest(path, None::<usize>, e.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    LabelsPerClass,
    Rho,
    Gamma,
    NPseudo,
}

impl SweepAxis {
    pub fn slug(self) -> &'static str {
        match self {
            SweepAxis::LabelsPerClass => "labels_per_class",
            SweepAxis::Rho => "rho",
            SweepAxis::Gamma => "gamma",
            SweepAxis::NPseudo => "n_pseudo",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<SweepAxis> {
        match s {
            "labels_per_class" => Ok(SweepAxis::LabelsPerClass),
            "rho" => Ok(SweepAxis::Rho),
            "gamma" => Ok(SweepAxis::Gamma),
            "n_pseudo" => Ok(SweepAxis::NPseudo),
            other => Err(Error::config(
                "axis",
                format!(
                    "unknown sweep axis {other:?}; valid: labels_per_class, rho, gamma, n_pseudo"
                ),
            )),
        }
    }
}

fn apply_axis(cfg: &ExperimentConfig, axis: SweepAxis, raw: &str) -> Result<ExperimentConfig> {
    fn parse<T: FromStr>(raw: &str, axis: SweepAxis) -> Result<T> {
        raw.parse().map_err(|_| {
            Error::config("values", format!("{axis} value {raw:?} does not parse"))
        })
    }
    let mut cfg = cfg.clone();
    match axis {
        SweepAxis::LabelsPerClass => cfg.partition.labels_per_class = parse(raw, axis)?,
        SweepAxis::Rho => cfg.train.rho = parse(raw, axis)?,
        SweepAxis::Gamma => cfg.partition.gamma = parse(raw, axis)?,
        SweepAxis::NPseudo => {
            cfg.self_training.enabled = true;
            cfg.self_training.n_pseudo_per_class = parse(raw, axis)?;
        }
    }
    Ok(cfg)
}

fn check_axis_regime(axis: SweepAxis, regime: Regime) -> Result<()> {
    let ok = match axis {
        SweepAxis::Gamma => regime == Regime::Overlap,
        SweepAxis::LabelsPerClass => regime != Regime::NewDomain,
        SweepAxis::Rho | SweepAxis::NPseudo => true,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::config(
            "axis",
            format!("axis {axis} is incompatible with the {regime:?} partition regime"),
        ))
    }
}

/// Run every (value, algorithm) combination into
/// `out/{axis}-{value}/{algorithm}/` and tabulate `out/sweep.csv` with one row
/// per combination. Values are echoed into the CSV verbatim. An empty
/// algorithm list means "just the configured one".
pub fn sweep(
    cfg: &ExperimentConfig,
    axis: SweepAxis,
    values: &[String],
    algorithms: &[Algorithm],
    out: Option<&Path>,
) -> Result<PathBuf> {
    cfg.validate()?;
    if values.is_empty() {
        return Err(Error::config("values", "at least one sweep value is required"));
    }
    check_axis_regime(axis, cfg.partition.regime)?;
    let algorithms: Vec<Algorithm> = if algorithms.is_empty() {
        vec![cfg.algorithm]
    } else {
        algorithms.to_vec()
    };
    let out_dir = out.map_or_else(|| cfg.output_dir.clone(), Path::to_path_buf);
    std::fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    let mut csv = format!("{axis},algorithm,mean_accuracy,std_accuracy\n");
    for raw in values {
        for &alg in &algorithms {
            let mut point = apply_axis(cfg, axis, raw)?;
            point.algorithm = alg;
            point.validate()?;
            let dir = out_dir.join(format!("{}-{raw}", axis.slug())).join(alg.slug());
            let summary = run(&point, Some(&dir))?;
            csv.push_str(&format!(
                "{raw},{alg},{},{}\n",
                format_float(summary.mean_accuracy),
                format_float(summary.std_accuracy)
            ));
        }
    }
    let path = out_dir.join("sweep.csv");
    write_text(&path, &csv)?;
    Ok(path)
}
