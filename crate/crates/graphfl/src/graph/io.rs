//! Dataset directory ingestion and writing.
//!
//! A dataset directory holds four files:
//! - `manifest.json`: `{"num_nodes": N, "num_features": D, "num_classes": K, "name": str}`
//! - `edges.csv`: header `src,dst`, one undirected edge per line (either orientation)
//! - `features.csv`: header `node,f0,...,f{D-1}`, one row per node, every node present
//! - `labels.csv`: header `node,label`, one label per node
//!
//! Loading symmetrizes edges and drops duplicates and self-loops, reporting
//! how many were dropped. All parse failures name the file and line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{adjacency_from_pairs, DenseMatrix, GraphDataset};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct Manifest {
    num_nodes: usize,
    num_features: usize,
    num_classes: usize,
    name: String,
}

/// Counts of on-disk irregularities repaired during loading.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub self_loops_dropped: usize,
    pub duplicate_edges_dropped: usize,
}

fn read_file(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
}

fn parse_id(field: &str, file: &str, line: usize, num_nodes: usize) -> Result<usize> {
    let id: usize = field
        .trim()
        .parse()
        .map_err(|_| Error::ingest(file, line, format!("invalid node id {field:?}")))?;
    if id >= num_nodes {
        return Err(Error::ingest(
            file,
            line,
            format!("node id {id} out of range (num_nodes = {num_nodes})"),
        ));
    }
    Ok(id)
}

pub fn load_dataset(dir: &Path) -> Result<GraphDataset> {
    Ok(load_dataset_with_stats(dir)?.0)
}

pub fn load_dataset_with_stats(dir: &Path) -> Result<(GraphDataset, LoadStats)> {
    let manifest: Manifest = serde_json::from_str(&read_file(dir, "manifest.json")?)
        .map_err(|e| Error::ingest("manifest.json", e.line(), e.to_string()))?;
    let n = manifest.num_nodes;

    // edges.csv
    let edges_text = read_file(dir, "edges.csv")?;
    let mut pairs = Vec::new();
    for (idx, raw) in edges_text.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim_end_matches('\r');
        if line == 1 {
            if text.trim() != "src,dst" {
                return Err(Error::ingest("edges.csv", 1, format!("expected header \"src,dst\", got {text:?}")));
            }
            continue;
        }
        if text.trim().is_empty() {
            continue;
        }
        let mut fields = text.split(',');
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(Error::ingest("edges.csv", line, "expected exactly 2 fields")),
        };
        pairs.push((
            parse_id(a, "edges.csv", line, n)?,
            parse_id(b, "edges.csv", line, n)?,
        ));
    }
    let (adjacency, self_loops_dropped, duplicate_edges_dropped) = adjacency_from_pairs(n, &pairs);

    // features.csv
    let feat_text = read_file(dir, "features.csv")?;
    let mut features = DenseMatrix::zeros(n, manifest.num_features);
    let mut seen = vec![false; n];
    for (idx, raw) in feat_text.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim_end_matches('\r');
        if line == 1 {
            if !text.starts_with("node,") {
                return Err(Error::ingest("features.csv", 1, format!("expected header \"node,f0,...\", got {text:?}")));
            }
            continue;
        }
        if text.trim().is_empty() {
            continue;
        }
        let mut fields = text.split(',');
        let v = parse_id(
            fields.next().ok_or_else(|| Error::ingest("features.csv", line, "missing node id"))?,
            "features.csv",
            line,
            n,
        )?;
        if seen[v] {
            return Err(Error::ingest("features.csv", line, format!("duplicate row for node {v}")));
        }
        seen[v] = true;
        let row = features.row_mut(v);
        let mut count = 0usize;
        for field in fields {
            if count >= row.len() {
                count += 1;
                continue;
            }
            let x: f64 = field.trim().parse().map_err(|_| {
                Error::ingest("features.csv", line, format!("non-numeric feature {field:?}"))
            })?;
            if !x.is_finite() {
                return Err(Error::ingest("features.csv", line, format!("non-finite feature {field:?}")));
            }
            row[count] = x;
            count += 1;
        }
        if count != manifest.num_features {
            return Err(Error::ingest(
                "features.csv",
                line,
                format!("expected {} feature values, got {count}", manifest.num_features),
            ));
        }
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(Error::ingest("features.csv", feat_text.lines().count(), format!("node {v} has no feature row")));
    }

    // labels.csv
    let label_text = read_file(dir, "labels.csv")?;
    let mut labels = vec![usize::MAX; n];
    for (idx, raw) in label_text.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim_end_matches('\r');
        if line == 1 {
            if text.trim() != "node,label" {
                return Err(Error::ingest("labels.csv", 1, format!("expected header \"node,label\", got {text:?}")));
            }
            continue;
        }
        if text.trim().is_empty() {
            continue;
        }
        let mut fields = text.split(',');
        let (a, b) = match (fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(Error::ingest("labels.csv", line, "expected exactly 2 fields")),
        };
        let v = parse_id(a, "labels.csv", line, n)?;
        let y: usize = b
            .trim()
            .parse()
            .map_err(|_| Error::ingest("labels.csv", line, format!("invalid label {b:?}")))?;
        if y >= manifest.num_classes {
            return Err(Error::ingest(
                "labels.csv",
                line,
                format!("label {y} out of range (num_classes = {})", manifest.num_classes),
            ));
        }
        labels[v] = y;
    }
    if let Some(v) = labels.iter().position(|&y| y == usize::MAX) {
        return Err(Error::ingest("labels.csv", label_text.lines().count(), format!("node {v} has no label")));
    }

    let dataset = GraphDataset {
        name: manifest.name,
        num_nodes: n,
        num_features: manifest.num_features,
        num_classes: manifest.num_classes,
        adjacency,
        features,
        labels,
        node_ids: (0..n).collect(),
    };
    dataset.validate()?;
    Ok((dataset, LoadStats { self_loops_dropped, duplicate_edges_dropped }))
}

/// Write `g` in the dataset directory format. Each undirected edge is written
/// once with its smaller endpoint first; floats use shortest round-trip
/// formatting, so write → load is lossless.
pub fn write_dataset(g: &GraphDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, content: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| Error::io(&path, e))
    };

    let manifest = Manifest {
        num_nodes: g.num_nodes,
        num_features: g.num_features,
        num_classes: g.num_classes,
        name: g.name.clone(),
    };
    write(
        "manifest.json",
        serde_json::to_string_pretty(&manifest).expect("manifest serialization"),
    )?;

    let mut edges = String::from("src,dst\n");
    for v in 0..g.num_nodes {
        let (cols, _) = g.adjacency.row(v);
        for &u in cols {
            if v < u {
                edges.push_str(&format!("{v},{u}\n"));
            }
        }
    }
    write("edges.csv", edges)?;

    let mut feats = String::from("node");
    for k in 0..g.num_features {
        feats.push_str(&format!(",f{k}"));
    }
    feats.push('\n');
    for v in 0..g.num_nodes {
        feats.push_str(&format!("{v}"));
        for &x in g.features.row(v) {
            feats.push_str(&format!(",{x}"));
        }
        feats.push('\n');
    }
    write("features.csv", feats)?;

    let mut labels = String::from("node,label\n");
    for (v, &y) in g.labels.iter().enumerate() {
        labels.push_str(&format!("{v},{y}\n"));
    }
    write("labels.csv", labels)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::sbm::generate_sbm;
    use proptest::prelude::*;

    fn write_files(dir: &Path, manifest: &str, edges: &str, features: &str, labels: &str) {
        fs::write(dir.join("manifest.json"), manifest).unwrap();
        fs::write(dir.join("edges.csv"), edges).unwrap();
        fs::write(dir.join("features.csv"), features).unwrap();
        fs::write(dir.join("labels.csv"), labels).unwrap();
    }

    const MANIFEST3: &str =
        r#"{"num_nodes": 3, "num_features": 2, "num_classes": 2, "name": "tiny"}"#;
    const FEATURES3: &str = "node,f0,f1\n0,1.0,0.0\n1,0.5,0.5\n2,0.0,1.0\n";
    const LABELS3: &str = "node,label\n0,0\n1,1\n2,0\n";

    #[test]
    fn empty_edge_file_gives_edgeless_graph() {
        let dir = tempfile::tempdir().unwrap();
        write_files(dir.path(), MANIFEST3, "src,dst\n", FEATURES3, LABELS3);
        let g = load_dataset(dir.path()).unwrap();
        assert_eq!(g.num_nodes, 3);
        assert_eq!(g.num_edges(), 0);
    }

    #[test]
    fn both_orientations_collapse_to_one_edge() {
        let dir = tempfile::tempdir().unwrap();
        write_files(dir.path(), MANIFEST3, "src,dst\n0,1\n1,0\n", FEATURES3, LABELS3);
        let (g, stats) = load_dataset_with_stats(dir.path()).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(stats.duplicate_edges_dropped, 1);
    }

    #[test]
    fn self_loops_dropped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        write_files(dir.path(), MANIFEST3, "src,dst\n0,0\n0,1\n", FEATURES3, LABELS3);
        let (g, stats) = load_dataset_with_stats(dir.path()).unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(stats.self_loops_dropped, 1);
    }

    #[test]
    fn missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn out_of_range_node_names_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        write_files(dir.path(), MANIFEST3, "src,dst\n0,7\n", FEATURES3, LABELS3);
        let err = load_dataset(dir.path()).unwrap_err();
        match err {
            Error::Ingest { ref file, line, .. } => {
                assert_eq!(file.to_str(), Some("edges.csv"));
                assert_eq!(line, Some(2));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn non_numeric_feature_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            MANIFEST3,
            "src,dst\n",
            "node,f0,f1\n0,1.0,0.0\n1,abc,0.5\n2,0.0,1.0\n",
            LABELS3,
        );
        let err = load_dataset(dir.path()).unwrap_err();
        match err {
            Error::Ingest { ref file, line, .. } => {
                assert_eq!(file.to_str(), Some("features.csv"));
                assert_eq!(line, Some(3));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn label_out_of_range_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_files(dir.path(), MANIFEST3, "src,dst\n", FEATURES3, "node,label\n0,0\n1,5\n2,0\n");
        assert!(matches!(load_dataset(dir.path()), Err(Error::Ingest { .. })));
    }

    #[test]
    fn missing_label_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_files(dir.path(), MANIFEST3, "src,dst\n", FEATURES3, "node,label\n0,0\n2,0\n");
        assert!(matches!(load_dataset(dir.path()), Err(Error::Ingest { .. })));
    }

    #[test]
    fn write_then_load_round_trips() {
        let g = generate_sbm(3, 7, 0.5, 0.1, 0.25, 13).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&g, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back.num_nodes, g.num_nodes);
        assert_eq!(back.adjacency, g.adjacency);
        assert_eq!(back.features.as_slice(), g.features.as_slice());
        assert_eq!(back.labels, g.labels);
        assert_eq!(back.name, g.name);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn round_trip_random_graphs(seed in 0u64..1000) {
            let g = generate_sbm(2, 5, 0.6, 0.2, 0.5, seed).unwrap();
            let dir = tempfile::tempdir().unwrap();
            write_dataset(&g, dir.path()).unwrap();
            let back = load_dataset(dir.path()).unwrap();
            prop_assert_eq!(back.adjacency, g.adjacency);
            prop_assert_eq!(back.features.as_slice(), g.features.as_slice());
            prop_assert_eq!(back.labels, g.labels);
        }
    }
}
