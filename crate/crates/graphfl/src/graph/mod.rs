//! Graph representation, normalization, induced subgraphs, and ingestion.

pub mod csr;
pub mod dense;
pub mod io;
pub mod sbm;

pub use csr::CsrMatrix;
pub use dense::DenseMatrix;

use crate::error::{Error, Result};

/// An undirected node-classification dataset.
///
/// The adjacency matrix is 0/1 and symmetric, with each undirected edge stored
/// in both directions and no self-loops. `node_ids` maps local indices to the
/// ids of the graph this one was induced from (identity for loaded datasets).
#[derive(Clone, Debug)]
pub struct GraphDataset {
    pub name: String,
    pub num_nodes: usize,
    pub num_features: usize,
    pub num_classes: usize,
    pub adjacency: CsrMatrix,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub node_ids: Vec<usize>,
}

impl GraphDataset {
    /// Number of undirected edges (half the stored entry count).
    pub fn num_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    /// Degree of each node in the plain (self-loop-free) adjacency.
    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes)
            .map(|v| self.adjacency.row(v).0.len())
            .collect()
    }

    /// Check the structural invariants; used after ingestion and in tests.
    pub fn validate(&self) -> Result<()> {
        let check = |cond: bool, expected: &str, got: String| -> Result<()> {
            if cond {
                Ok(())
            } else {
                Err(Error::Shape {
                    op: "GraphDataset::validate",
                    expected: expected.to_string(),
                    got,
                })
            }
        };
        check(
            self.adjacency.rows() == self.num_nodes && self.adjacency.cols() == self.num_nodes,
            "square adjacency of num_nodes",
            format!("{}x{}", self.adjacency.rows(), self.adjacency.cols()),
        )?;
        check(
            self.features.rows() == self.num_nodes && self.features.cols() == self.num_features,
            "features num_nodes x num_features",
            format!("{}x{}", self.features.rows(), self.features.cols()),
        )?;
        check(
            self.labels.len() == self.num_nodes && self.node_ids.len() == self.num_nodes,
            "labels and node_ids of length num_nodes",
            format!("{} / {}", self.labels.len(), self.node_ids.len()),
        )?;
        for (v, &y) in self.labels.iter().enumerate() {
            check(y < self.num_classes, "label < num_classes", format!("labels[{v}] = {y}"))?;
        }
        for v in 0..self.num_nodes {
            let (cols, vals) = self.adjacency.row(v);
            for (&u, &w) in cols.iter().zip(vals) {
                check(u != v, "no self-loops", format!("loop at {v}"))?;
                check(w == 1.0, "0/1 adjacency", format!("A[{v}][{u}] = {w}"))?;
                let (back, _) = self.adjacency.row(u);
                check(
                    back.binary_search(&v).is_ok(),
                    "symmetric adjacency",
                    format!("edge {v}->{u} has no reverse"),
                )?;
            }
        }
        Ok(())
    }
}

/// Build a symmetric 0/1 adjacency from undirected pairs, dropping self-loops
/// and duplicates. Returns (matrix, self_loops_dropped, duplicates_dropped).
pub(crate) fn adjacency_from_pairs(
    num_nodes: usize,
    pairs: &[(usize, usize)],
) -> (CsrMatrix, usize, usize) {
    let mut canon: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
    let mut self_loops = 0usize;
    for &(a, b) in pairs {
        if a == b {
            self_loops += 1;
        } else {
            canon.push((a.min(b), a.max(b)));
        }
    }
    canon.sort_unstable();
    let before = canon.len();
    canon.dedup();
    let duplicates = before - canon.len();
    let mut triples = Vec::with_capacity(canon.len() * 2);
    for &(a, b) in &canon {
        triples.push((a, b, 1.0));
        triples.push((b, a, 1.0));
    }
    (
        CsrMatrix::from_triples(num_nodes, num_nodes, triples),
        self_loops,
        duplicates,
    )
}

/// The normalized propagation matrix S = D̂^(-1/2)(A + I)D̂^(-1/2), where D̂ is
/// the degree matrix of A + I. Symmetric, every row holds at least its
/// self-loop entry, all entries in (0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct PropagationMatrix(CsrMatrix);

impl PropagationMatrix {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn spmm(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.0.spmm(x)
    }

    pub fn spmm_row(&self, i: usize, x: &DenseMatrix, out: &mut [f64]) {
        self.0.spmm_row(i, x, out)
    }
}

/// S = D̂^(-1/2)(A + I)D̂^(-1/2) with d̂_v = deg(v) + 1. The self-loop keeps
/// every degree positive, so no error path exists.
pub fn normalize_adjacency(g: &GraphDataset) -> PropagationMatrix {
    let inv_sqrt: Vec<f64> = (0..g.num_nodes)
        .map(|v| 1.0 / ((g.adjacency.row(v).0.len() + 1) as f64).sqrt())
        .collect();
    let mut triples = Vec::with_capacity(g.adjacency.nnz() + g.num_nodes);
    for v in 0..g.num_nodes {
        triples.push((v, v, inv_sqrt[v] * inv_sqrt[v]));
        let (cols, _) = g.adjacency.row(v);
        for &u in cols {
            triples.push((v, u, inv_sqrt[v] * inv_sqrt[u]));
        }
    }
    PropagationMatrix(CsrMatrix::from_triples(g.num_nodes, g.num_nodes, triples))
}

/// Scale each feature row so it sums to 1. Rows summing to zero are left
/// unchanged; with non-negative bag-of-words features those are exactly the
/// all-zero rows.
pub fn row_normalize_features(g: &GraphDataset) -> GraphDataset {
    let mut out = g.clone();
    for v in 0..out.num_nodes {
        let row = out.features.row_mut(v);
        let sum: f64 = row.iter().sum();
        if sum != 0.0 {
            for x in row {
                *x /= sum;
            }
        }
    }
    out
}

/// Induced subgraph on `nodes`: keeps only edges with both endpoints inside,
/// re-indexes locally in ascending original order, and composes `node_ids` so
/// it always refers to the outermost graph.
pub fn subgraph(g: &GraphDataset, nodes: &[usize]) -> Result<GraphDataset> {
    let mut sorted: Vec<usize> = nodes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&bad) = sorted.iter().find(|&&v| v >= g.num_nodes) {
        return Err(Error::Shape {
            op: "subgraph",
            expected: format!("node id < {}", g.num_nodes),
            got: format!("{bad}"),
        });
    }
    let mut local = vec![usize::MAX; g.num_nodes];
    for (l, &v) in sorted.iter().enumerate() {
        local[v] = l;
    }
    let mut triples = Vec::new();
    for &v in &sorted {
        let (cols, _) = g.adjacency.row(v);
        for &u in cols {
            if local[u] != usize::MAX {
                triples.push((local[v], local[u], 1.0));
            }
        }
    }
    Ok(GraphDataset {
        name: g.name.clone(),
        num_nodes: sorted.len(),
        num_features: g.num_features,
        num_classes: g.num_classes,
        adjacency: CsrMatrix::from_triples(sorted.len(), sorted.len(), triples),
        features: g.features.select_rows(&sorted),
        labels: sorted.iter().map(|&v| g.labels[v]).collect(),
        node_ids: sorted.iter().map(|&v| g.node_ids[v]).collect(),
    })
}

#[cfg(test)]
pub(crate) fn dataset_from_edges(
    num_nodes: usize,
    num_classes: usize,
    edges: &[(usize, usize)],
    features: DenseMatrix,
    labels: Vec<usize>,
) -> GraphDataset {
    let num_features = features.cols();
    let (adjacency, _, _) = adjacency_from_pairs(num_nodes, edges);
    GraphDataset {
        name: "test".into(),
        num_nodes,
        num_features,
        num_classes,
        adjacency,
        features,
        labels,
        node_ids: (0..num_nodes).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> GraphDataset {
        // 0 - 1 - 2
        dataset_from_edges(
            3,
            2,
            &[(0, 1), (1, 2)],
            DenseMatrix::from_vec(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
            vec![0, 1, 0],
        )
    }

    #[test]
    fn single_edge_normalization() {
        // [DERIVED] hand computation: D̂ = diag(2, 2), so every entry of S is
        // 1/sqrt(2·2) = 0.5.
        let g = dataset_from_edges(
            2,
            2,
            &[(0, 1)],
            DenseMatrix::zeros(2, 1),
            vec![0, 1],
        );
        let s = normalize_adjacency(&g).matrix().to_dense();
        for i in 0..2 {
            for j in 0..2 {
                assert!((s.get(i, j) - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn isolated_node_row_is_unit_self_loop() {
        let g = dataset_from_edges(3, 2, &[(0, 1)], DenseMatrix::zeros(3, 1), vec![0, 1, 0]);
        let s = normalize_adjacency(&g);
        let (cols, vals) = s.matrix().row(2);
        assert_eq!(cols, &[2]);
        assert_eq!(vals, &[1.0]);
    }

    #[test]
    fn path_normalization_matches_dense_oracle() {
        // [DERIVED] dense oracle: build A + I densely, form D̂^(-1/2)(A+I)D̂^(-1/2)
        // entry by entry.
        let g = path3();
        let s = normalize_adjacency(&g).matrix().to_dense();
        let mut a_hat = DenseMatrix::zeros(3, 3);
        for &(u, v) in &[(0usize, 1usize), (1, 2)] {
            a_hat.set(u, v, 1.0);
            a_hat.set(v, u, 1.0);
        }
        for v in 0..3 {
            a_hat.set(v, v, 1.0);
        }
        let deg: Vec<f64> = (0..3)
            .map(|v| (0..3).map(|u| a_hat.get(v, u)).sum())
            .collect();
        for i in 0..3 {
            for j in 0..3 {
                let want = a_hat.get(i, j) / (deg[i] * deg[j]).sqrt();
                assert!(
                    (s.get(i, j) - want).abs() < 1e-15,
                    "S[{i}][{j}] = {} want {want}",
                    s.get(i, j)
                );
            }
        }
    }

    #[test]
    fn scaled_propagation_is_row_stochastic() {
        // D̂^(1/2)·S·D̂^(-1/2) is row-stochastic: Σ_u S[v][u]·sqrt(d̂_u/d̂_v) = 1.
        let g = sbm::generate_sbm(3, 10, 0.4, 0.1, 0.0, 7).unwrap();
        let s = normalize_adjacency(&g);
        let deg: Vec<f64> = g.degrees().iter().map(|&d| (d + 1) as f64).collect();
        for v in 0..g.num_nodes {
            let (cols, vals) = s.matrix().row(v);
            let sum: f64 = cols
                .iter()
                .zip(vals)
                .map(|(&u, &w)| w * (deg[u] / deg[v]).sqrt())
                .sum();
            assert!((sum - 1.0).abs() < 1e-12, "row {v} sums to {sum}");
        }
    }

    #[test]
    fn propagation_entries_in_unit_interval() {
        let g = sbm::generate_sbm(2, 12, 0.5, 0.2, 0.0, 3).unwrap();
        let s = normalize_adjacency(&g);
        for v in 0..g.num_nodes {
            let (_, vals) = s.matrix().row(v);
            assert!(!vals.is_empty());
            for &w in vals {
                assert!(w > 0.0 && w <= 1.0);
            }
        }
    }

    #[test]
    fn row_normalize_cases() {
        let g = dataset_from_edges(
            2,
            2,
            &[],
            DenseMatrix::from_vec(2, 3, vec![2.0, 2.0, 0.0, 0.0, 0.0, 0.0]),
            vec![0, 1],
        );
        let n = row_normalize_features(&g);
        assert_eq!(n.features.row(0), &[0.5, 0.5, 0.0]);
        assert_eq!(n.features.row(1), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn row_normalize_sums_to_one_or_zero() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let data: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..4.0_f64).floor()).collect();
        let g = dataset_from_edges(
            5,
            2,
            &[],
            DenseMatrix::from_vec(5, 4, data),
            vec![0; 5],
        );
        let n = row_normalize_features(&g);
        for v in 0..5 {
            let sum: f64 = n.features.row(v).iter().sum();
            assert!(sum == 0.0 || (sum - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn subgraph_full_is_identity() {
        let g = path3();
        let s = subgraph(&g, &[0, 1, 2]).unwrap();
        assert_eq!(s.num_edges(), g.num_edges());
        assert_eq!(s.node_ids, vec![0, 1, 2]);
        assert_eq!(s.labels, g.labels);
    }

    #[test]
    fn subgraph_singleton_is_edgeless() {
        let g = path3();
        let s = subgraph(&g, &[1]).unwrap();
        assert_eq!(s.num_nodes, 1);
        assert_eq!(s.num_edges(), 0);
        assert_eq!(s.node_ids, vec![1]);
    }

    #[test]
    fn subgraph_of_triangle_keeps_one_edge() {
        let g = dataset_from_edges(
            3,
            2,
            &[(0, 1), (1, 2), (0, 2)],
            DenseMatrix::zeros(3, 1),
            vec![0, 1, 0],
        );
        let s = subgraph(&g, &[0, 2]).unwrap();
        assert_eq!(s.num_edges(), 1);
    }

    #[test]
    fn subgraph_composes_node_ids() {
        let g = dataset_from_edges(
            4,
            2,
            &[(0, 1), (1, 2), (2, 3)],
            DenseMatrix::zeros(4, 1),
            vec![0, 1, 0, 1],
        );
        let s1 = subgraph(&g, &[1, 2, 3]).unwrap();
        let s2 = subgraph(&s1, &[0, 2]).unwrap();
        assert_eq!(s2.node_ids, vec![1, 3]);
    }

    #[test]
    fn subgraph_out_of_range_errors() {
        let g = path3();
        assert!(subgraph(&g, &[0, 5]).is_err());
    }

    #[test]
    fn validate_accepts_well_formed() {
        path3().validate().unwrap();
    }
}
