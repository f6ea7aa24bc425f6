//! Model specification, flat parameter vectors, and per-graph contexts.

pub mod ops;

use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, DenseMatrix, GraphDataset, PropagationMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Two-layer GCN: S·ReLU(S·X·W1)·W2.
    Gcn2,
    /// Simplified graph convolution: (SᵏX)·W.
    Sgc,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Hidden width of the GCN2 middle layer; ignored by SGC.
    #[serde(default = "default_hidden_dim")]
    pub hidden_dim: usize,
    /// Number of propagation steps k for SGC; ignored by GCN2.
    #[serde(default = "default_propagation_steps")]
    pub propagation_steps: usize,
    /// L2 penalty on the first block (W1 for GCN2, W for SGC).
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
}

fn default_hidden_dim() -> usize {
    16
}

fn default_propagation_steps() -> usize {
    2
}

fn default_weight_decay() -> f64 {
    5e-4
}

impl ModelSpec {
    pub fn new(kind: ModelKind) -> ModelSpec {
        ModelSpec {
            kind,
            hidden_dim: 16,
            propagation_steps: 2,
            weight_decay: 5e-4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim < 1 {
            return Err(Error::config("model.hidden_dim", "must be >= 1"));
        }
        if self.propagation_steps < 1 {
            return Err(Error::config("model.propagation_steps", "must be >= 1"));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::config("model.weight_decay", "must be >= 0"));
        }
        Ok(())
    }
}

/// Named blocks of a flat parameter vector; each block is a row-major
/// `rows x cols` matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamShape {
    pub blocks: Vec<(String, usize, usize)>,
}

impl ParamShape {
    pub fn for_spec(spec: &ModelSpec, num_features: usize, num_classes: usize) -> ParamShape {
        let blocks = match spec.kind {
            ModelKind::Gcn2 => vec![
                ("W1".to_string(), num_features, spec.hidden_dim),
                ("W2".to_string(), spec.hidden_dim, num_classes),
            ],
            ModelKind::Sgc => vec![("W".to_string(), num_features, num_classes)],
        };
        ParamShape { blocks }
    }

    pub fn total_len(&self) -> usize {
        self.blocks.iter().map(|(_, r, c)| r * c).sum()
    }

    pub fn block_range(&self, idx: usize) -> Range<usize> {
        let start: usize = self.blocks[..idx].iter().map(|(_, r, c)| r * c).sum();
        let (_, r, c) = &self.blocks[idx];
        start..start + r * c
    }
}

/// Flat vector of model parameters plus its block shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamVectorRepr")]
pub struct ParamVector {
    shape: ParamShape,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct ParamVectorRepr {
    shape: ParamShape,
    data: Vec<f64>,
}

impl TryFrom<ParamVectorRepr> for ParamVector {
    type Error = String;

    fn try_from(r: ParamVectorRepr) -> std::result::Result<ParamVector, String> {
        if r.data.len() != r.shape.total_len() {
            return Err(format!(
                "param vector has {} values but shape requires {}",
                r.data.len(),
                r.shape.total_len()
            ));
        }
        Ok(ParamVector {
            shape: r.shape,
            data: r.data,
        })
    }
}

impl ParamVector {
    pub fn zeros(shape: ParamShape) -> ParamVector {
        let len = shape.total_len();
        ParamVector {
            shape,
            data: vec![0.0; len],
        }
    }

    pub fn from_data(shape: ParamShape, data: Vec<f64>) -> ParamVector {
        assert_eq!(data.len(), shape.total_len(), "param vector length");
        ParamVector { shape, data }
    }

    pub fn shape(&self) -> &ParamShape {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn block(&self, idx: usize) -> &[f64] {
        &self.data[self.shape.block_range(idx)]
    }

    pub fn block_mut(&mut self, idx: usize) -> &mut [f64] {
        let range = self.shape.block_range(idx);
        &mut self.data[range]
    }

    /// self += c · other. Shapes must match.
    pub fn add_scaled(&mut self, other: &ParamVector, c: f64) {
        assert_eq!(self.shape, other.shape, "param shape mismatch");
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    pub fn scale(&mut self, c: f64) {
        for a in &mut self.data {
            *a *= c;
        }
    }

    /// self − other as a new vector.
    pub fn sub(&self, other: &ParamVector) -> ParamVector {
        assert_eq!(self.shape, other.shape, "param shape mismatch");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        ParamVector {
            shape: self.shape.clone(),
            data,
        }
    }

    pub fn dot(&self, other: &ParamVector) -> f64 {
        assert_eq!(self.shape, other.shape, "param shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn linf_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Serialize as a one-line JSON shape header followed by raw little-endian
    /// 64-bit floats.
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let header = serde_json::to_string(&self.shape).expect("shape serialization");
        w.write_all(header.as_bytes())?;
        w.write_all(b"\n")?;
        for &x in &self.data {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<ParamVector> {
        let fail = |msg: &str| Error::ingest("<param vector>", None, msg);
        let mut header = Vec::new();
        let mut byte = [0u8; 1];
        loop {
            match r.read_exact(&mut byte) {
                Ok(()) if byte[0] == b'\n' => break,
                Ok(()) => header.push(byte[0]),
                Err(_) => return Err(fail("missing shape header")),
            }
            if header.len() > 1 << 16 {
                return Err(fail("unterminated shape header"));
            }
        }
        let shape: ParamShape = serde_json::from_slice(&header)
            .map_err(|e| fail(&format!("bad shape header: {e}")))?;
        let mut data = vec![0.0f64; shape.total_len()];
        let mut buf = [0u8; 8];
        for x in &mut data {
            r.read_exact(&mut buf).map_err(|_| fail("truncated parameter data"))?;
            *x = f64::from_le_bytes(buf);
        }
        if r.read(&mut buf).map_err(|_| fail("read error"))? != 0 {
            return Err(fail("trailing bytes after parameter data"));
        }
        Ok(ParamVector { shape, data })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("in-memory write");
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<ParamVector> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        ParamVector::read_from(&mut bytes.as_slice())
    }
}

/// A sorted set of node ids with their training labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledNodes {
    ids: Vec<usize>,
    labels: Vec<usize>,
}

impl LabeledNodes {
    /// Build from (id, label) pairs; sorts by id. Duplicate ids are a caller
    /// bug.
    pub fn new(mut pairs: Vec<(usize, usize)>) -> LabeledNodes {
        pairs.sort_unstable();
        for w in pairs.windows(2) {
            assert_ne!(w[0].0, w[1].0, "duplicate node id {}", w[0].0);
        }
        LabeledNodes {
            ids: pairs.iter().map(|p| p.0).collect(),
            labels: pairs.iter().map(|p| p.1).collect(),
        }
    }

    /// Take ground-truth labels for `ids` from the dataset.
    pub fn from_dataset(g: &GraphDataset, ids: &[usize]) -> LabeledNodes {
        LabeledNodes::new(ids.iter().map(|&v| (v, g.labels[v])).collect())
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ids.iter().copied().zip(self.labels.iter().copied())
    }

    /// Union with `other`; `other` wins on duplicate ids (used when stacking
    /// pseudo-labels onto true labels — true labels are added second).
    pub fn merged(&self, other: &LabeledNodes) -> LabeledNodes {
        let mut map: std::collections::BTreeMap<usize, usize> = self.iter().collect();
        for (id, y) in other.iter() {
            map.insert(id, y);
        }
        LabeledNodes {
            ids: map.keys().copied().collect(),
            labels: map.values().copied().collect(),
        }
    }
}

/// Everything fixed about a (graph, model) pair during training: the
/// propagation matrix, features, and the model's propagation cache
/// (S·X for GCN2, SᵏX for SGC).
#[derive(Debug)]
pub struct ModelContext {
    pub spec: ModelSpec,
    pub num_nodes: usize,
    pub num_features: usize,
    /// Output width of the classifier head. Usually the dataset's class
    /// count, but smaller when training on a restricted label domain.
    pub num_classes: usize,
    pub s: PropagationMatrix,
    pub x: DenseMatrix,
    /// GCN2: P = S·X. SGC: Z = SᵏX.
    pub cache: DenseMatrix,
}

impl ModelContext {
    pub fn new(spec: ModelSpec, g: &GraphDataset) -> Result<ModelContext> {
        ModelContext::with_head(spec, g, g.num_classes)
    }

    /// Like `new`, but with an explicit classifier width (for restricted or
    /// adapted label domains).
    pub fn with_head(spec: ModelSpec, g: &GraphDataset, num_classes: usize) -> Result<ModelContext> {
        spec.validate()?;
        if num_classes == 0 {
            return Err(Error::config("num_classes", "must be >= 1"));
        }
        let s = normalize_adjacency(g);
        let cache = match spec.kind {
            ModelKind::Gcn2 => s.spmm(&g.features)?,
            ModelKind::Sgc => {
                let mut z = g.features.clone();
                for _ in 0..spec.propagation_steps {
                    z = s.spmm(&z)?;
                }
                z
            }
        };
        Ok(ModelContext {
            spec,
            num_nodes: g.num_nodes,
            num_features: g.num_features,
            num_classes,
            s,
            x: g.features.clone(),
            cache,
        })
    }

    pub fn param_shape(&self) -> ParamShape {
        ParamShape::for_spec(&self.spec, self.num_features, self.num_classes)
    }

    pub(crate) fn check_shape(&self, theta: &ParamVector, op: &'static str) -> Result<()> {
        let want = self.param_shape();
        if *theta.shape() != want {
            return Err(Error::Shape {
                op,
                expected: format!("{:?}", want.blocks),
                got: format!("{:?}", theta.shape().blocks),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_lengths() {
        let spec = ModelSpec::new(ModelKind::Sgc);
        let shape = ParamShape::for_spec(&spec, 4, 3);
        assert_eq!(shape.total_len(), 12);

        let spec = ModelSpec::new(ModelKind::Gcn2);
        let shape = ParamShape::for_spec(&spec, 10, 3);
        assert_eq!(shape.total_len(), 10 * 16 + 16 * 3);
        assert_eq!(shape.block_range(0), 0..160);
        assert_eq!(shape.block_range(1), 160..208);
    }

    #[test]
    fn param_arithmetic() {
        let shape = ParamShape {
            blocks: vec![("W".into(), 1, 3)],
        };
        let a = ParamVector::from_data(shape.clone(), vec![1.0, 2.0, 3.0]);
        let b = ParamVector::from_data(shape.clone(), vec![0.5, 0.5, 0.5]);
        let mut c = a.clone();
        c.add_scaled(&b, 2.0);
        assert_eq!(c.data(), &[2.0, 3.0, 4.0]);
        assert_eq!(a.sub(&b).data(), &[0.5, 1.5, 2.5]);
        assert_eq!(a.dot(&b), 3.0);
        assert_eq!(a.linf_norm(), 3.0);
    }

    #[test]
    fn serialization_round_trips_bitwise() {
        let shape = ParamShape {
            blocks: vec![("W1".into(), 2, 3), ("W2".into(), 3, 2)],
        };
        let v = ParamVector::from_data(
            shape,
            vec![0.1, -2.5e-17, 3e300, 0.0, -0.0, 1.0, f64::MIN_POSITIVE, 7.25, -1.5, 0.3, 0.7, 9.0],
        );
        let mut buf = Vec::new();
        v.write_to(&mut buf).unwrap();
        let back = ParamVector::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.shape(), v.shape());
        for (a, b) in v.data().iter().zip(back.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_serialization_rejected() {
        let shape = ParamShape {
            blocks: vec![("W".into(), 2, 2)],
        };
        let v = ParamVector::zeros(shape);
        let mut buf = Vec::new();
        v.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(ParamVector::read_from(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn labeled_nodes_sorted_and_merged() {
        let a = LabeledNodes::new(vec![(5, 1), (2, 0), (9, 2)]);
        assert_eq!(a.ids(), &[2, 5, 9]);
        assert_eq!(a.labels(), &[0, 1, 2]);
        let b = LabeledNodes::new(vec![(5, 3), (1, 1)]);
        let m = a.merged(&b);
        assert_eq!(m.ids(), &[1, 2, 5, 9]);
        assert_eq!(m.labels(), &[1, 0, 3, 2]);
    }

    #[test]
    #[should_panic(expected = "duplicate node id")]
    fn labeled_nodes_rejects_duplicates() {
        LabeledNodes::new(vec![(1, 0), (1, 1)]);
    }
}
