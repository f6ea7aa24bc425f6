//! Stochastic-block-model generator used as the synthetic test fixture.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{adjacency_from_pairs, DenseMatrix, GraphDataset};
use crate::error::{Error, Result};
use crate::rng::substream;

/// Sample an SBM graph: `blocks` groups of `nodes_per_block` nodes, edge
/// probability `p_in` within a block and `p_out` across blocks. The node label
/// is its block; features are one-hot(block) plus Gaussian noise with std
/// `feature_noise`. Fully determined by `seed`.
pub fn generate_sbm(
    blocks: usize,
    nodes_per_block: usize,
    p_in: f64,
    p_out: f64,
    feature_noise: f64,
    seed: u64,
) -> Result<GraphDataset> {
    if !(0.0..=1.0).contains(&p_out) || !(0.0..=1.0).contains(&p_in) || p_out >= p_in {
        return Err(Error::config(
            "p_in/p_out",
            format!("need 0 <= p_out < p_in <= 1, got p_in={p_in}, p_out={p_out}"),
        ));
    }
    if blocks == 0 || nodes_per_block == 0 {
        return Err(Error::config("blocks", "need at least one block and one node per block"));
    }
    let n = blocks * nodes_per_block;
    let block_of = |v: usize| v / nodes_per_block;

    let mut edge_rng = substream(seed, 0, "sbm_edges");
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if block_of(i) == block_of(j) { p_in } else { p_out };
            if edge_rng.gen_bool(p) {
                pairs.push((i, j));
            }
        }
    }
    let (adjacency, _, _) = adjacency_from_pairs(n, &pairs);

    let mut feat_rng = substream(seed, 1, "sbm_features");
    let mut features = DenseMatrix::zeros(n, blocks);
    for v in 0..n {
        let row = features.row_mut(v);
        for (k, x) in row.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut feat_rng);
            *x = if k == block_of(v) { 1.0 } else { 0.0 } + feature_noise * z;
        }
    }

    Ok(GraphDataset {
        name: format!("sbm-{blocks}x{nodes_per_block}"),
        num_nodes: n,
        num_features: blocks,
        num_classes: blocks,
        adjacency,
        features,
        labels: (0..n).map(block_of).collect(),
        node_ids: (0..n).collect(),
    })
}
