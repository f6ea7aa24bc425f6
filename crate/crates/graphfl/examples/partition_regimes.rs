//! Build all three client partition regimes on one graph and show what each
//! client ends up holding.

use graphfl::graph::sbm::generate_sbm;
use graphfl::partition::{
    partition_labels_noniid, partition_new_domain, partition_overlap_noniid, sample_test_set,
    ClientNodes,
};

fn main() -> Result<(), graphfl::Error> {
    let g = generate_sbm(5, 40, 0.2, 0.01, 0.2, 3)?;
    println!("graph: {} nodes, {} classes\n", g.num_nodes, g.num_classes);

    // Non-IID: a shared pool of 10 labels per class dealt round-robin to 8
    // clients. Shares are small, so class coverage per client is skewed.
    let mut split = partition_labels_noniid(&g, 8, 10, 0)?;
    split.test_nodes = sample_test_set(&g, &split.training_nodes(), 50, 0)?;
    println!("non_iid: {} clients, {} test nodes", split.clients.len(), split.test_nodes.len());
    for c in &split.clients {
        let classes: std::collections::BTreeSet<usize> =
            c.support.iter().chain(&c.query).map(|&v| g.labels[v]).collect();
        println!(
            "  client {}: support {:?} query {:?} classes {classes:?}",
            c.id, c.support, c.query
        );
    }

    // New label domain: the last K₀ classes are held out of training
    // entirely; each client gets a few labels for them to adapt on at test
    // time.
    let split = partition_new_domain(&g, 4, 2, 6, 3, 10, 0)?;
    println!("\nnew_domain: old classes 0..3, new classes 3..5");
    for c in &split.clients {
        let train_classes: std::collections::BTreeSet<usize> =
            c.support.iter().map(|&v| g.labels[v]).collect();
        let adapt_classes: std::collections::BTreeSet<usize> =
            c.adaptation.iter().map(|&v| g.labels[v]).collect();
        println!(
            "  client {}: trains on classes {train_classes:?}, adapts on {adapt_classes:?}",
            c.id
        );
    }

    // Overlap: each client sees only a window of the graph; consecutive
    // windows share a γ fraction of their nodes.
    for gamma in [0.0, 0.5] {
        let split = partition_overlap_noniid(&g, 5, 10, gamma, 0)?;
        let sizes: Vec<usize> = split
            .clients
            .iter()
            .map(|c| match &c.nodes {
                ClientNodes::Subset(w) => w.len(),
                ClientNodes::Full => g.num_nodes,
            })
            .collect();
        println!("\noverlap γ={gamma}: window sizes {sizes:?}");
    }
    for w in partition_overlap_noniid(&g, 5, 10, 0.5, 0)?.warnings() {
        println!("  warning: {w}");
    }
    Ok(())
}
