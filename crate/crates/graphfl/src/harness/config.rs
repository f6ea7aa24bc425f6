//! Experiment configuration: a single TOML file describing the dataset,
//! model, partition regime, training hyperparameters, algorithm, and seeds.
//! Every omitted field takes a documented default, so parsing then
//! serializing materializes the full effective configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, SecondOrder, TrainConfig};
use crate::graph::io::load_dataset;
use crate::graph::sbm::generate_sbm;
use crate::graph::{row_normalize_features, GraphDataset};
use crate::model::{ModelKind, ModelSpec};
use crate::partition::Regime;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub model: ModelSpec,
    pub partition: PartitionConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub self_training: SelfTrainingConfig,
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Directory holding manifest.json + edges/features/labels CSVs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Generate a stochastic block model instead of loading from disk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    /// Row-normalize features after loading.
    #[serde(default = "default_true")]
    pub normalize_features: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub blocks: usize,
    pub nodes_per_block: usize,
    #[serde(default = "default_p_in")]
    pub p_in: f64,
    #[serde(default = "default_p_out")]
    pub p_out: f64,
    #[serde(default = "default_feature_noise")]
    pub feature_noise: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_p_in() -> f64 {
    0.2
}

fn default_p_out() -> f64 {
    0.01
}

fn default_feature_noise() -> f64 {
    0.2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub regime: Regime,
    #[serde(default = "default_num_clients")]
    pub num_clients: usize,
    /// Labeled nodes per class shared out among clients (non_iid, overlap).
    #[serde(default = "default_labels_per_class")]
    pub labels_per_class: usize,
    /// Test nodes drawn per class (total = per class × classes).
    #[serde(default = "default_test_per_class")]
    pub test_per_class: usize,
    /// New-domain class count (new_domain regime).
    #[serde(default = "default_k0")]
    pub k0: usize,
    /// Labeled nodes per sampled old-domain class per client (new_domain).
    #[serde(default = "default_n_per_class")]
    pub n_per_class: usize,
    /// Adaptation labels per new class; defaults to ceil(n_per_class / 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_adapt: Option<usize>,
    /// Fraction of window overlap between consecutive clients (overlap).
    #[serde(default)]
    pub gamma: f64,
    /// Reuse an existing splits.json instead of partitioning.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits_path: Option<PathBuf>,
}

fn default_num_clients() -> usize {
    50
}

fn default_labels_per_class() -> usize {
    20
}

fn default_test_per_class() -> usize {
    20
}

fn default_k0() -> usize {
    2
}

fn default_n_per_class() -> usize {
    10
}

impl PartitionConfig {
    pub fn n_adapt(&self) -> usize {
        self.n_adapt.unwrap_or(self.n_per_class.div_ceil(2))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfTrainingConfig {
    pub enabled: bool,
    pub n_pseudo_per_class: usize,
}

impl Default for SelfTrainingConfig {
    fn default() -> SelfTrainingConfig {
        SelfTrainingConfig {
            enabled: false,
            n_pseudo_per_class: 5,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        match (&self.dataset.path, &self.dataset.synthetic) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => {
                return Err(Error::config(
                    "dataset",
                    "exactly one of dataset.path or dataset.synthetic must be set",
                ))
            }
        }
        self.model.validate()?;
        self.train.validate()?;
        let regime = self.partition.regime;
        match self.algorithm {
            Algorithm::GraphflNewdomain | Algorithm::FlTl => {
                if regime != Regime::NewDomain {
                    return Err(Error::config(
                        "algorithm",
                        format!("{} requires partition.regime = \"new_domain\"", self.algorithm),
                    ));
                }
            }
            Algorithm::GraphflNoniid => {
                if regime == Regime::NewDomain {
                    return Err(Error::config(
                        "algorithm",
                        "graphfl_noniid requires partition.regime = \"non_iid\" or \"overlap\"",
                    ));
                }
            }
            _ => {}
        }
        if self.algorithm == Algorithm::GraphflNewdomain
            && self.train.second_order == SecondOrder::Exact
            && self.model.kind == ModelKind::Gcn2
        {
            return Err(Error::config(
                "train.second_order",
                "exact HVP is unavailable for gcn2; use finite_diff or first_order",
            ));
        }
        let p = &self.partition;
        if p.num_clients == 0 {
            return Err(Error::config("partition.num_clients", "must be >= 1"));
        }
        if p.test_per_class == 0 {
            return Err(Error::config("partition.test_per_class", "must be >= 1"));
        }
        match regime {
            Regime::NonIid | Regime::Overlap => {
                if p.labels_per_class == 0 {
                    return Err(Error::config("partition.labels_per_class", "must be >= 1"));
                }
                if regime == Regime::Overlap && !(0.0..=1.0).contains(&p.gamma) {
                    return Err(Error::config("partition.gamma", "must be in [0, 1]"));
                }
            }
            Regime::NewDomain => {
                if p.k0 == 0 {
                    return Err(Error::config("partition.k0", "must be >= 1"));
                }
                if p.n_per_class == 0 {
                    return Err(Error::config("partition.n_per_class", "must be >= 1"));
                }
                if p.n_adapt() == 0 {
                    return Err(Error::config("partition.n_adapt", "must be >= 1"));
                }
            }
        }
        Ok(())
    }
}

/// Load or generate the configured graph, applying feature normalization.
pub fn load_graph(cfg: &ExperimentConfig) -> Result<GraphDataset> {
    let g = match (&cfg.dataset.path, &cfg.dataset.synthetic) {
        (Some(p), None) => load_dataset(p)?,
        (None, Some(s)) => generate_sbm(
            s.blocks,
            s.nodes_per_block,
            s.p_in,
            s.p_out,
            s.feature_noise,
            s.seed,
        )?,
        _ => {
            return Err(Error::config(
                "dataset",
                "exactly one of dataset.path or dataset.synthetic must be set",
            ))
        }
    };
    Ok(if cfg.dataset.normalize_features {
        row_normalize_features(&g)
    } else {
        g
    })
}
