//! Model operations: init, forward, loss, hand-derived gradients, Hessian-
//! vector products, gradient descent, and prediction.
//!
//! Losses and gradients are computed on a restricted row subset: only labeled
//! nodes and (for GCN2) their one-hop neighborhood are touched, so a training
//! step costs O(|M1|·D·H) rather than O(N·D·H). The restricted path reuses the
//! exact accumulation kernels of the full forward pass, so both produce
//! bit-identical logits for the same rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LabeledNodes, ModelContext, ModelKind, ModelSpec, ParamShape, ParamVector};
use crate::error::{Error, Result};
use crate::graph::DenseMatrix;

/// Glorot-uniform initialization: each block drawn from
/// U(−a, a) with a = sqrt(6/(fan_in + fan_out)). Deterministic in `seed`.
pub fn init_params(
    spec: &ModelSpec,
    num_features: usize,
    num_classes: usize,
    seed: u64,
) -> ParamVector {
    let shape = ParamShape::for_spec(spec, num_features, num_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = ParamVector::zeros(shape.clone());
    for (idx, (_, rows, cols)) in shape.blocks.iter().enumerate() {
        let limit = (6.0 / (rows + cols) as f64).sqrt();
        for x in v.block_mut(idx) {
            *x = rng.gen_range(-limit..limit);
        }
    }
    v
}

fn block_matrix(theta: &ParamVector, idx: usize) -> DenseMatrix {
    let (_, r, c) = theta.shape().blocks[idx].clone();
    DenseMatrix::from_vec(r, c, theta.block(idx).to_vec())
}

/// dst (a.len() × b.len(), row-major) += a ⊗ b, skipping zero rows of `a` the
/// same way `matmul` does.
fn add_outer(dst: &mut [f64], a: &[f64], b: &[f64]) {
    let cols = b.len();
    for (i, &av) in a.iter().enumerate() {
        if av == 0.0 {
            continue;
        }
        let row = &mut dst[i * cols..(i + 1) * cols];
        for (d, &bv) in row.iter_mut().zip(b) {
            *d += av * bv;
        }
    }
}

/// Full-graph logits, N × num_classes.
pub fn forward(ctx: &ModelContext, theta: &ParamVector) -> Result<DenseMatrix> {
    ctx.check_shape(theta, "forward")?;
    match ctx.spec.kind {
        ModelKind::Sgc => ctx.cache.matmul(&block_matrix(theta, 0)),
        ModelKind::Gcn2 => {
            let w1 = block_matrix(theta, 0);
            let w2 = block_matrix(theta, 1);
            let mut hidden = ctx.cache.matmul(&w1)?;
            for h in hidden.as_mut_slice() {
                if *h < 0.0 {
                    *h = 0.0;
                }
            }
            let agg = ctx.s.spmm(&hidden)?;
            agg.matmul(&w2)
        }
    }
}

/// Sorted closure of `ids` under the propagation neighborhood (S rows include
/// the self-loop, so ids ⊆ result).
fn neighborhood_closure(ctx: &ModelContext, ids: &[usize]) -> Vec<usize> {
    let mut m1 = Vec::new();
    for &v in ids {
        m1.extend_from_slice(ctx.s.matrix().row(v).0);
    }
    m1.sort_unstable();
    m1.dedup();
    m1
}

/// Intermediates of the restricted GCN2 forward pass over `ids`. The hidden
/// activations themselves are not kept: backward only needs the ReLU mask.
struct Gcn2Restricted {
    m1: Vec<usize>,
    /// ReLU mask (pre-activation > 0), |m1| × H.
    active: Vec<bool>,
    /// |ids| × H: rows of S·hidden at the labeled nodes.
    agg: DenseMatrix,
    /// |ids| × K.
    logits: DenseMatrix,
}

fn gcn2_restricted(
    ctx: &ModelContext,
    w1: &DenseMatrix,
    w2: &DenseMatrix,
    ids: &[usize],
) -> Gcn2Restricted {
    let h_dim = w1.cols();
    let m1 = neighborhood_closure(ctx, ids);
    let mut hidden = DenseMatrix::zeros(m1.len(), h_dim);
    let mut active = vec![false; m1.len() * h_dim];
    for (local, &m) in m1.iter().enumerate() {
        let row = hidden.row_mut(local);
        w1.vecmat_into(ctx.cache.row(m), row);
        for (j, h) in row.iter_mut().enumerate() {
            if *h > 0.0 {
                active[local * h_dim + j] = true;
            } else {
                *h = 0.0;
            }
        }
    }
    let lookup = |u: usize| m1.binary_search(&u).expect("closure contains neighbor");
    let mut agg = DenseMatrix::zeros(ids.len(), h_dim);
    let mut logits = DenseMatrix::zeros(ids.len(), w2.cols());
    for (i, &v) in ids.iter().enumerate() {
        let (cols, vals) = ctx.s.matrix().row(v);
        let a = agg.row_mut(i);
        for (&u, &s) in cols.iter().zip(vals) {
            let src = hidden.row(lookup(u));
            for (d, &x) in a.iter_mut().zip(src) {
                *d += s * x;
            }
        }
        w2.vecmat_into(agg.row(i), logits.row_mut(i));
    }
    Gcn2Restricted {
        m1,
        active,
        agg,
        logits,
    }
}

/// Logits restricted to `ids` (rows in the given order), bit-identical to the
/// corresponding rows of `forward`.
pub fn logits_at(ctx: &ModelContext, theta: &ParamVector, ids: &[usize]) -> Result<DenseMatrix> {
    ctx.check_shape(theta, "forward")?;
    if let Some(&bad) = ids.iter().find(|&&v| v >= ctx.num_nodes) {
        return Err(Error::Shape {
            op: "forward",
            expected: format!("node id < {}", ctx.num_nodes),
            got: format!("{bad}"),
        });
    }
    match ctx.spec.kind {
        ModelKind::Sgc => {
            let w = block_matrix(theta, 0);
            let mut logits = DenseMatrix::zeros(ids.len(), w.cols());
            for (i, &v) in ids.iter().enumerate() {
                w.vecmat_into(ctx.cache.row(v), logits.row_mut(i));
            }
            Ok(logits)
        }
        ModelKind::Gcn2 => {
            let w1 = block_matrix(theta, 0);
            let w2 = block_matrix(theta, 1);
            Ok(gcn2_restricted(ctx, &w1, &w2, ids).logits)
        }
    }
}

/// Mean softmax cross-entropy with max-shift stabilization; log-probabilities
/// clamped at ln(1e−300). Returns the mean loss and the residual matrix with
/// rows (p − onehot(y))/n.
fn ce_loss_residual(logits: &DenseMatrix, labels: &[usize]) -> (f64, DenseMatrix) {
    let n = logits.rows();
    let clamp = 1e-300_f64.ln();
    let mut residual = DenseMatrix::zeros(n, logits.cols());
    let mut total = 0.0;
    for i in 0..n {
        let row = logits.row(i);
        let m = row.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let mut sum = 0.0;
        for &z in row {
            sum += (z - m).exp();
        }
        let log_p = (row[labels[i]] - m - sum.ln()).max(clamp);
        total += -log_p;
        let r = residual.row_mut(i);
        for (j, &z) in row.iter().enumerate() {
            r[j] = (z - m).exp() / sum;
        }
        r[labels[i]] -= 1.0;
        for x in r.iter_mut() {
            *x /= n as f64;
        }
    }
    (total / n as f64, residual)
}

fn check_nodes(ctx: &ModelContext, nodes: &LabeledNodes) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::Empty {
            what: "labeled node set",
        });
    }
    if let Some(&bad) = nodes.ids().iter().find(|&&v| v >= ctx.num_nodes) {
        return Err(Error::Shape {
            op: "loss",
            expected: format!("node id < {}", ctx.num_nodes),
            got: format!("{bad}"),
        });
    }
    if let Some(&bad) = nodes.labels().iter().find(|&&y| y >= ctx.num_classes) {
        return Err(Error::Shape {
            op: "loss",
            expected: format!("label < {}", ctx.num_classes),
            got: format!("{bad}"),
        });
    }
    Ok(())
}

/// Loss and its exact gradient in one restricted pass.
pub fn loss_grad(
    ctx: &ModelContext,
    theta: &ParamVector,
    nodes: &LabeledNodes,
) -> Result<(f64, ParamVector)> {
    ctx.check_shape(theta, "loss")?;
    check_nodes(ctx, nodes)?;
    let decay = ctx.spec.weight_decay;
    let mut grad = ParamVector::zeros(theta.shape().clone());

    let loss = match ctx.spec.kind {
        ModelKind::Sgc => {
            let w = block_matrix(theta, 0);
            let mut logits = DenseMatrix::zeros(nodes.len(), w.cols());
            for (i, &v) in nodes.ids().iter().enumerate() {
                w.vecmat_into(ctx.cache.row(v), logits.row_mut(i));
            }
            let (ce, residual) = ce_loss_residual(&logits, nodes.labels());
            let dw = grad.block_mut(0);
            for (i, &v) in nodes.ids().iter().enumerate() {
                add_outer(dw, ctx.cache.row(v), residual.row(i));
            }
            ce
        }
        ModelKind::Gcn2 => {
            let w1 = block_matrix(theta, 0);
            let w2 = block_matrix(theta, 1);
            let h_dim = w1.cols();
            let f = gcn2_restricted(ctx, &w1, &w2, nodes.ids());
            let (ce, residual) = ce_loss_residual(&f.logits, nodes.labels());

            // dW2 = Σ_v agg[v]ᵀ · residual[v]
            for i in 0..nodes.len() {
                add_outer(grad.block_mut(1), f.agg.row(i), residual.row(i));
            }
            // Pull the residual back through S: U[m] = Σ_v S[v][m]·residual[v],
            // nonzero only on the closure.
            let lookup = |u: usize| f.m1.binary_search(&u).expect("closure contains neighbor");
            let mut upstream = DenseMatrix::zeros(f.m1.len(), w2.cols());
            for (i, &v) in nodes.ids().iter().enumerate() {
                let (cols, vals) = ctx.s.matrix().row(v);
                for (&u, &s) in cols.iter().zip(vals) {
                    let dst = upstream.row_mut(lookup(u));
                    for (d, &r) in dst.iter_mut().zip(residual.row(i)) {
                        *d += s * r;
                    }
                }
            }
            // Through W2 and the ReLU mask, then dW1 = Σ_m P[m]ᵀ · dpre[m].
            let mut w2_t = DenseMatrix::zeros(w2.cols(), h_dim);
            for r in 0..h_dim {
                for c in 0..w2.cols() {
                    w2_t.set(c, r, w2.get(r, c));
                }
            }
            let mut dpre = vec![0.0; h_dim];
            for (local, &m) in f.m1.iter().enumerate() {
                w2_t.vecmat_into(upstream.row(local), &mut dpre);
                for (j, d) in dpre.iter_mut().enumerate() {
                    if !f.active[local * h_dim + j] {
                        *d = 0.0;
                    }
                }
                add_outer(grad.block_mut(0), ctx.cache.row(m), &dpre);
            }
            ce
        }
    };

    // Weight decay on the first block only.
    let reg_sq: f64 = theta.block(0).iter().map(|x| x * x).sum();
    let g0 = grad.block_mut(0);
    for (g, &w) in g0.iter_mut().zip(theta.block(0)) {
        *g += decay * w;
    }
    Ok((loss + 0.5 * decay * reg_sq, grad))
}

pub fn loss(ctx: &ModelContext, theta: &ParamVector, nodes: &LabeledNodes) -> Result<f64> {
    Ok(loss_grad(ctx, theta, nodes)?.0)
}

pub fn grad(ctx: &ModelContext, theta: &ParamVector, nodes: &LabeledNodes) -> Result<ParamVector> {
    Ok(loss_grad(ctx, theta, nodes)?.1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HvpMode {
    /// Exact Hessian-vector product; SGC only.
    Analytic,
    /// Central difference of gradients; works for any model.
    FiniteDiff,
}

/// ∇²L(θ)·v over `nodes`.
pub fn hvp(
    ctx: &ModelContext,
    theta: &ParamVector,
    nodes: &LabeledNodes,
    v: &ParamVector,
    mode: HvpMode,
) -> Result<ParamVector> {
    ctx.check_shape(theta, "hvp")?;
    ctx.check_shape(v, "hvp")?;
    check_nodes(ctx, nodes)?;
    match mode {
        HvpMode::FiniteDiff => {
            let h = 1e-5 * (1.0 + theta.linf_norm());
            let mut plus = theta.clone();
            plus.add_scaled(v, h);
            let mut minus = theta.clone();
            minus.add_scaled(v, -h);
            let mut out = loss_grad(ctx, &plus, nodes)?.1;
            out.add_scaled(&loss_grad(ctx, &minus, nodes)?.1, -1.0);
            out.scale(1.0 / (2.0 * h));
            Ok(out)
        }
        HvpMode::Analytic => {
            if ctx.spec.kind != ModelKind::Sgc {
                return Err(Error::Unsupported {
                    msg: "analytic Hessian-vector product is only defined for SGC; \
                          use finite-difference mode for GCN2"
                        .into(),
                });
            }
            // For Z the cached SᵏX restricted to nodes:
            //   H·v = Σ_m Z[m]ᵀ·[(diag(p_m) − p_m p_mᵀ)·(Z·V)_m]/n + decay·v
            let w = block_matrix(theta, 0);
            let vmat = block_matrix(v, 0);
            let k = w.cols();
            let n = nodes.len() as f64;
            let mut out = ParamVector::zeros(theta.shape().clone());
            let mut logits = vec![0.0; k];
            let mut t = vec![0.0; k];
            let mut curv = vec![0.0; k];
            for &m in nodes.ids() {
                let z = ctx.cache.row(m);
                w.vecmat_into(z, &mut logits);
                let mx = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                let mut sum = 0.0;
                for l in logits.iter_mut() {
                    *l = (*l - mx).exp();
                    sum += *l;
                }
                for l in logits.iter_mut() {
                    *l /= sum; // now p_m
                }
                vmat.vecmat_into(z, &mut t);
                let pt: f64 = logits.iter().zip(&t).map(|(p, t)| p * t).sum();
                for ((c, &p), &tj) in curv.iter_mut().zip(&logits).zip(&t) {
                    *c = p * (tj - pt) / n;
                }
                add_outer(out.block_mut(0), z, &curv);
            }
            out.add_scaled(v, ctx.spec.weight_decay);
            Ok(out)
        }
    }
}

/// `steps` full-batch gradient-descent steps θ ← θ − α·∇L(θ). Pure; the input
/// is not modified. A non-finite loss aborts with a divergence error carrying
/// the 0-based step index.
pub fn sgd_steps(
    ctx: &ModelContext,
    theta: &ParamVector,
    nodes: &LabeledNodes,
    alpha: f64,
    steps: usize,
) -> Result<ParamVector> {
    // α=0 is allowed so degenerate-inner-loop identities hold exactly.
    assert!(alpha >= 0.0, "learning rate must be non-negative");
    let mut th = theta.clone();
    for step in 0..steps {
        let (l, g) = loss_grad(ctx, &th, nodes)?;
        if !l.is_finite() {
            return Err(Error::Divergence { step, client: None });
        }
        th.add_scaled(&g, -alpha);
    }
    if !th.is_finite() {
        return Err(Error::Divergence {
            step: steps.saturating_sub(1),
            client: None,
        });
    }
    Ok(th)
}

/// Per-node (argmax class, max softmax probability) over `ids`. Ties break to
/// the lowest class index.
pub fn predict(
    ctx: &ModelContext,
    theta: &ParamVector,
    ids: &[usize],
) -> Result<Vec<(usize, f64)>> {
    let logits = logits_at(ctx, theta, ids)?;
    let mut out = Vec::with_capacity(ids.len());
    for i in 0..logits.rows() {
        let row = logits.row(i);
        let mut best = 0;
        for (j, &z) in row.iter().enumerate() {
            if z > row[best] {
                best = j;
            }
        }
        let mx = row[best];
        let sum: f64 = row.iter().map(|&z| (z - mx).exp()).sum();
        out.push((best, 1.0 / sum));
    }
    Ok(out)
}
