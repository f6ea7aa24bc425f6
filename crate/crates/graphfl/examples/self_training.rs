//! Grow each client's support set with pseudo labels before federated
//! training. Every client fits a throwaway model on its own labels, predicts
//! its unlabeled nodes, and keeps the most confident few per class. Purity is
//! the fraction of pseudo labels matching ground truth — the simulator can
//! check because it kept the answers. Run with --release.

use graphfl::algorithms::{build_env, run_algorithm, self_train_augment, Algorithm, TrainConfig};
use graphfl::graph::row_normalize_features;
use graphfl::graph::sbm::generate_sbm;
use graphfl::model::{ModelKind, ModelSpec};
use graphfl::partition::{partition_labels_noniid, sample_test_set};

fn main() -> Result<(), graphfl::Error> {
    let g = row_normalize_features(&generate_sbm(5, 60, 0.15, 0.01, 0.3, 0)?);
    // Few, label-rich clients: pseudo labeling needs each client to have seen
    // a class before it can nominate confident members of it.
    let mut split = partition_labels_noniid(&g, 5, 20, 0)?;
    split.test_nodes = sample_test_set(&g, &split.training_nodes(), 20 * g.num_classes, 0)?;

    let spec = ModelSpec::new(ModelKind::Gcn2);
    let cfg = TrainConfig {
        episodes: 40,
        local_epochs: 10,
        rho: 0.4,
        ..TrainConfig::default()
    };

    for n_pseudo in [0, 5, 10] {
        let (augmented, purity) = self_train_augment(&g, &split, &spec, &cfg, n_pseudo, 0)?;
        let added: usize = augmented.clients.iter().map(|c| c.pseudo_labels.len()).sum();
        let env = build_env(&g, &augmented, &spec)?;
        let r = run_algorithm(Algorithm::GraphflNoniid, &env, &cfg, 0)?;
        match purity {
            Some(p) => println!(
                "n_pseudo={n_pseudo:<2} +{added} pseudo labels, purity {p:.3}, accuracy {:.3}",
                r.final_accuracy
            ),
            None => println!(
                "n_pseudo={n_pseudo:<2} true labels only,            accuracy {:.3}",
                r.final_accuracy
            ),
        }
    }
    Ok(())
}
