//! Transfer to a label domain never seen in training. Clients train on eight
//! old classes; two held-out classes appear only as a handful of adaptation
//! labels per client at test time. The meta scheme (graphfl_newdomain) is
//! trained so a few gradient steps specialize it; fl_tl trains plain FedAvg
//! and bolts the same adaptation on afterwards. Run with --release.

use graphfl::algorithms::{build_env, run_algorithm, Algorithm, TrainConfig};
use graphfl::graph::row_normalize_features;
use graphfl::graph::sbm::generate_sbm;
use graphfl::model::{ModelKind, ModelSpec};
use graphfl::partition::partition_new_domain;

fn main() -> Result<(), graphfl::Error> {
    let g = row_normalize_features(&generate_sbm(10, 160, 0.2, 0.01, 0.4, 0)?);
    let cfg = TrainConfig {
        alpha: 0.05,
        beta: 0.2,
        episodes: 40,
        local_epochs: 5,
        rho: 0.4,
        adapt_steps: 15,
        ..TrainConfig::default()
    };
    println!("{} nodes; classes 8 and 9 are the new domain", g.num_nodes);
    println!("accuracy = mean over clients after each adapts the shared model\n");

    for n_adapt in [2, 10] {
        // A fresh partition per setting: adaptation draws feed the same RNG
        // stream as the rest of the split.
        let split = partition_new_domain(&g, 12, 2, 10, n_adapt, 20, 0)?;
        println!("{n_adapt} adaptation labels per new class ({} test nodes):", split.test_nodes.len());
        for alg in [Algorithm::FlTl, Algorithm::GraphflNewdomain] {
            let env = build_env(&g, &split, &ModelSpec::new(ModelKind::Gcn2))?;
            let r = run_algorithm(alg, &env, &cfg, 0)?;
            println!("  {:<18} adapted accuracy {:.3}", alg.to_string(), r.final_accuracy);
        }
        println!();
    }
    Ok(())
}
