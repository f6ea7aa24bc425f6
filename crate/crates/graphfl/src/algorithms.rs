//! Training procedures: GraphFL for non-IID data (two-stage MAML+FL
//! episodes), GraphFL for new label domains (per-client meta-updates with a
//! curvature correction), the IL/CL/FL/FL+TL baselines, test-time fast
//! adaptation, self-training augmentation, and evaluation.
//!
//! Per-episode client work runs in parallel; results are collected in
//! ascending-client order and aggregated sequentially, so every run is
//! bitwise reproducible for a given (config, seed, split).

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fed::{self, ClientUpdate, FedState, UpdatePayload};
use crate::graph::{subgraph, GraphDataset};
use crate::metrics::MetricsRecord;
use crate::model::ops::{self, HvpMode};
use crate::model::{LabeledNodes, ModelContext, ModelSpec, ParamVector};
use crate::partition::{ClientNodes, ExperimentSplit, Regime};
use crate::rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecondOrder {
    /// Analytic Hessian-vector product (SGC only).
    Exact,
    /// Central-difference Hessian-vector product.
    FiniteDiff,
    /// Drop the curvature term entirely.
    FirstOrder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineLabels {
    SupportOnly,
    /// Baselines train on support ∪ query (the stronger-baseline reading).
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    GraphflNoniid,
    GraphflNewdomain,
    Fl,
    FlTl,
    Il,
    Cl,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::GraphflNoniid,
        Algorithm::GraphflNewdomain,
        Algorithm::Fl,
        Algorithm::FlTl,
        Algorithm::Il,
        Algorithm::Cl,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            Algorithm::GraphflNoniid => "graphfl_noniid",
            Algorithm::GraphflNewdomain => "graphfl_newdomain",
            Algorithm::Fl => "fl",
            Algorithm::FlTl => "fl_tl",
            Algorithm::Il => "il",
            Algorithm::Cl => "cl",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.slug())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Algorithm> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.slug() == s)
            .ok_or_else(|| {
                Error::config(
                    "algorithm",
                    format!(
                        "unknown algorithm {s:?}; expected one of graphfl_noniid, graphfl_newdomain, fl, fl_tl, il, cl"
                    ),
                )
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Inner (local) learning rate α.
    pub alpha: f64,
    /// Meta learning rate β.
    pub beta: f64,
    /// Episodes T.
    pub episodes: usize,
    /// Local epochs T_e per episode.
    pub local_epochs: usize,
    /// Fraction of clients sampled per episode.
    pub rho: f64,
    pub second_order: SecondOrder,
    /// Test-time adaptation steps (defaults to local_epochs).
    pub adapt_steps: usize,
    /// Divide the summed meta-gradient by the cohort size.
    pub meta_normalize: bool,
    pub baseline_labels: BaselineLabels,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            alpha: 0.05,
            beta: 0.5,
            episodes: 50,
            local_epochs: 15,
            rho: 0.2,
            second_order: SecondOrder::FirstOrder,
            adapt_steps: 15,
            meta_normalize: true,
            baseline_labels: BaselineLabels::All,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return Err(Error::config("train.alpha", "must be > 0"));
        }
        if !(self.beta > 0.0) {
            return Err(Error::config("train.beta", "must be > 0"));
        }
        if self.episodes < 1 {
            return Err(Error::config("train.episodes", "must be >= 1"));
        }
        if self.local_epochs < 1 {
            return Err(Error::config("train.local_epochs", "must be >= 1"));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::config("train.rho", "must be in (0, 1]"));
        }
        Ok(())
    }
}

/// One client's compiled view: its model context (full graph or induced
/// subgraph), labeled sets in local ids, and the unlabeled pool available for
/// pseudo-labeling (test nodes already excluded).
pub struct ClientEnv {
    pub id: usize,
    pub ctx: Arc<ModelContext>,
    /// Labels in the training head's domain; pseudo labels already applied.
    pub support: LabeledNodes,
    pub query: LabeledNodes,
    /// New-domain adaptation nodes, labels remapped to 0..K₀.
    pub adaptation: LabeledNodes,
    pub unlabeled: Vec<usize>,
    /// local → original id map for subgraph clients; None = full graph.
    pub window: Option<Arc<Vec<usize>>>,
}

impl ClientEnv {
    pub fn to_original(&self, local: usize) -> usize {
        match &self.window {
            None => local,
            Some(w) => w[local],
        }
    }
}

/// Test nodes live here and nowhere else; training code never sees them.
pub struct EvalEnv {
    /// Full-graph context with the evaluation head (K₀ for NewDomain).
    pub ctx: Arc<ModelContext>,
    pub test: LabeledNodes,
}

pub struct FedEnv {
    pub regime: Regime,
    pub spec: ModelSpec,
    pub clients: Vec<ClientEnv>,
    pub eval: EvalEnv,
    /// Full-graph context with the training head; shared by full-graph clients.
    pub train_ctx: Arc<ModelContext>,
    pub num_features: usize,
    /// New-domain class count; 0 outside the NewDomain regime.
    pub k0: usize,
}

/// Compile a split against its graph: build per-client contexts, translate
/// node ids to local indices, apply pseudo labels, and remap label domains.
pub fn build_env(g: &GraphDataset, split: &ExperimentSplit, spec: &ModelSpec) -> Result<FedEnv> {
    split.validate(g)?;
    if split.clients.is_empty() {
        return Err(Error::Empty { what: "split clients" });
    }
    let (train_head, k0) = match split.regime {
        Regime::NewDomain => {
            let k0 = split
                .params
                .k0
                .ok_or_else(|| Error::config("split.params.k0", "required for the new_domain regime"))?;
            (g.num_classes - k0, k0)
        }
        _ => (g.num_classes, 0),
    };
    let train_ctx = Arc::new(ModelContext::with_head(*spec, g, train_head)?);
    let eval_ctx = match split.regime {
        Regime::NewDomain => Arc::new(ModelContext::with_head(*spec, g, k0)?),
        _ => Arc::clone(&train_ctx),
    };
    let test = match split.regime {
        Regime::NewDomain => LabeledNodes::new(
            split
                .test_nodes
                .iter()
                .map(|&v| (v, g.labels[v] - train_head))
                .collect(),
        ),
        _ => LabeledNodes::from_dataset(g, &split.test_nodes),
    };

    let mut clients = Vec::with_capacity(split.clients.len());
    for c in &split.clients {
        let (ctx, window) = match &c.nodes {
            ClientNodes::Full => (Arc::clone(&train_ctx), None),
            ClientNodes::Subset(ids) => {
                let sub = subgraph(g, ids)?;
                let ctx = Arc::new(ModelContext::with_head(*spec, &sub, train_head)?);
                (ctx, Some(Arc::new(ids.clone())))
            }
        };
        let to_local = |v: usize| -> usize {
            match &window {
                None => v,
                Some(w) => w.binary_search(&v).expect("split validated against window"),
            }
        };
        let label_of = |v: usize| c.pseudo_labels.get(&v).copied().unwrap_or(g.labels[v]);
        let support = LabeledNodes::new(c.support.iter().map(|&v| (to_local(v), label_of(v))).collect());
        let query = LabeledNodes::new(c.query.iter().map(|&v| (to_local(v), g.labels[v])).collect());
        let adaptation = LabeledNodes::new(
            c.adaptation
                .iter()
                .map(|&v| (to_local(v), g.labels[v] - train_head))
                .collect(),
        );
        let unlabeled = c
            .unlabeled(g.num_nodes)
            .into_iter()
            .filter(|v| split.test_nodes.binary_search(v).is_err())
            .map(to_local)
            .collect();
        clients.push(ClientEnv {
            id: c.id,
            ctx,
            support,
            query,
            adaptation,
            unlabeled,
            window,
        });
    }
    Ok(FedEnv {
        regime: split.regime,
        spec: *spec,
        clients,
        eval: EvalEnv { ctx: eval_ctx, test },
        train_ctx,
        num_features: g.num_features,
        k0,
    })
}

pub struct RunResult {
    pub final_params: ParamVector,
    /// Per-client models; populated by individual learning only.
    pub client_params: Vec<ParamVector>,
    pub history: Vec<MetricsRecord>,
    pub final_accuracy: f64,
    pub wall_ms: f64,
}

/// Fraction of argmax predictions matching the true labels.
pub fn evaluate(ctx: &ModelContext, theta: &ParamVector, test: &LabeledNodes) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Empty { what: "test nodes" });
    }
    let preds = ops::predict(ctx, theta, test.ids())?;
    let hits = preds
        .iter()
        .zip(test.labels())
        .filter(|((p, _), &y)| *p == y)
        .count();
    Ok(hits as f64 / test.len() as f64)
}

/// Adapt θ to a new label domain: re-initialize the output block to the
/// context's head width (seeded), keep the remaining blocks, then descend on
/// the adaptation nodes.
pub fn fast_adapt(
    ctx: &ModelContext,
    theta: &ParamVector,
    adaptation: &LabeledNodes,
    alpha: f64,
    steps: usize,
    head_seed: u64,
) -> Result<ParamVector> {
    if adaptation.is_empty() {
        return Err(Error::Empty { what: "adaptation nodes" });
    }
    let mut fresh = ops::init_params(&ctx.spec, ctx.num_features, ctx.num_classes, head_seed);
    let n_blocks = fresh.shape().blocks.len();
    if theta.shape().blocks.len() != n_blocks {
        return Err(Error::Shape {
            op: "fast_adapt",
            expected: format!("{n_blocks} parameter blocks"),
            got: format!("{}", theta.shape().blocks.len()),
        });
    }
    for b in 0..n_blocks - 1 {
        let (fr, fc) = (fresh.shape().blocks[b].1, fresh.shape().blocks[b].2);
        let (tr, tc) = (theta.shape().blocks[b].1, theta.shape().blocks[b].2);
        if (fr, fc) != (tr, tc) {
            return Err(Error::Shape {
                op: "fast_adapt",
                expected: format!("block {b}: {fr}x{fc}"),
                got: format!("{tr}x{tc}"),
            });
        }
        fresh.block_mut(b).copy_from_slice(theta.block(b));
    }
    ops::sgd_steps(ctx, &fresh, adaptation, alpha, steps)
}

/// New-domain evaluation: every client adapts θ on its own adaptation nodes
/// and classifies the pooled test set; accuracies are averaged.
pub fn adapted_accuracy(
    env: &FedEnv,
    theta: &ParamVector,
    cfg: &TrainConfig,
    master_seed: u64,
) -> Result<f64> {
    let accs = par_clients(&env.clients, |c| {
        let seed = rng::derive_seed(master_seed, c.id as u64, "adapt_init");
        let adapted = fast_adapt(&env.eval.ctx, theta, &c.adaptation, cfg.alpha, cfg.adapt_steps, seed)
            .map_err(|e| e.with_client(c.id))?;
        evaluate(&env.eval.ctx, &adapted, &env.eval.test)
    })?;
    Ok(accs.iter().sum::<f64>() / accs.len() as f64)
}

fn episode_accuracy(env: &FedEnv, theta: &ParamVector, cfg: &TrainConfig, seed: u64) -> Result<f64> {
    match env.regime {
        Regime::NewDomain => adapted_accuracy(env, theta, cfg, seed),
        _ => evaluate(&env.eval.ctx, theta, &env.eval.test),
    }
}

/// Run `f` over clients in parallel; results come back in input order.
fn par_clients<'a, T: Send>(
    clients: &'a [ClientEnv],
    f: impl Fn(&'a ClientEnv) -> Result<T> + Send + Sync,
) -> Result<Vec<T>> {
    clients.par_iter().map(f).collect()
}

fn selected<'a>(env: &'a FedEnv, ids: &[usize]) -> Vec<&'a ClientEnv> {
    ids.iter().map(|&i| &env.clients[i]).collect()
}

fn par_selected<'a, T: Send>(
    env: &'a FedEnv,
    ids: &[usize],
    f: impl Fn(&'a ClientEnv) -> Result<T> + Send + Sync,
) -> Result<Vec<T>> {
    selected(env, ids)
        .into_par_iter()
        .map(f)
        .collect()
}

fn baseline_nodes(c: &ClientEnv, cfg: &TrainConfig) -> LabeledNodes {
    match cfg.baseline_labels {
        BaselineLabels::SupportOnly => c.support.clone(),
        BaselineLabels::All => c.support.merged(&c.query),
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn finish_episode(
    state: &mut FedState,
    env: &FedEnv,
    cfg: &TrainConfig,
    participating: Vec<usize>,
    support_losses: &[f64],
    query_losses: &[f64],
    t0: Instant,
) -> Result<()> {
    let acc = episode_accuracy(env, &state.global, cfg, state.seed)?;
    state.history.push(MetricsRecord {
        episode: state.episode,
        global_test_accuracy: acc,
        mean_support_loss: mean(support_losses),
        mean_query_loss: mean(query_losses),
        participating_client_ids: participating,
        pseudo_label_purity: None,
        wall_ms: t0.elapsed().as_secs_f64() * 1e3,
    });
    state.episode += 1;
    Ok(())
}

/// One GraphFL episode for non-IID data. Stage I: every sampled client adapts
/// locally on support and returns the query gradient at the adapted
/// parameters (first-order); the server takes a meta step. Stage II: clients
/// train locally from the meta model; the server averages.
pub fn graphfl_noniid_episode(mut state: FedState, env: &FedEnv, cfg: &TrainConfig) -> Result<FedState> {
    let t0 = Instant::now();
    let picked = fed::sample_clients(env.clients.len(), cfg.rho, &mut state.substream("client_sample"));
    let global = &state.global;

    let updates: Vec<ClientUpdate> = par_selected(env, &picked, |c| {
        let adapted = ops::sgd_steps(&c.ctx, global, &c.support, cfg.alpha, cfg.local_epochs)
            .map_err(|e| e.with_client(c.id))?;
        let support_loss = ops::loss(&c.ctx, &adapted, &c.support).map_err(|e| e.with_client(c.id))?;
        let (query_loss, g) = ops::loss_grad(&c.ctx, &adapted, &c.query).map_err(|e| e.with_client(c.id))?;
        Ok(ClientUpdate {
            client_id: c.id,
            payload: UpdatePayload::Gradient(g),
            support_loss,
            query_loss,
        })
    })?;
    let support_losses: Vec<f64> = updates.iter().map(|u| u.support_loss).collect();
    let query_losses: Vec<f64> = updates.iter().map(|u| u.query_loss).collect();
    let participating: Vec<usize> = updates.iter().map(|u| u.client_id).collect();
    let grads: Vec<ParamVector> = updates.into_iter().map(ClientUpdate::into_params).collect();

    let meta = fed::meta_aggregate(&state.global, &grads, cfg.beta, cfg.meta_normalize)?;

    let finals: Vec<ParamVector> = par_selected(env, &picked, |c| {
        ops::sgd_steps(&c.ctx, &meta, &c.support, cfg.alpha, cfg.local_epochs)
            .map_err(|e| e.with_client(c.id))
    })?;
    state.global = fed::fedavg(&finals)?;

    finish_episode(&mut state, env, cfg, participating, &support_losses, &query_losses, t0)?;
    Ok(state)
}

/// One GraphFL episode for a new label domain. Each sampled client runs T_e
/// meta-updates from θ_t: a lookahead step on support, then a query-gradient
/// step corrected by −α·∇²L_support·g_query per the second-order mode. The
/// server averages the resulting client models.
pub fn graphfl_newdomain_episode(
    mut state: FedState,
    env: &FedEnv,
    cfg: &TrainConfig,
) -> Result<FedState> {
    let t0 = Instant::now();
    let picked = fed::sample_clients(env.clients.len(), cfg.rho, &mut state.substream("client_sample"));
    let global = &state.global;

    let updates: Vec<ClientUpdate> = par_selected(env, &picked, |c| {
        let mut th = global.clone();
        let mut support_loss = 0.0;
        let mut query_loss = 0.0;
        for step in 0..cfg.local_epochs {
            let (sl, gs) = ops::loss_grad(&c.ctx, &th, &c.support).map_err(|e| e.with_client(c.id))?;
            let mut lookahead = th.clone();
            lookahead.add_scaled(&gs, -cfg.alpha);
            let (ql, gq) = ops::loss_grad(&c.ctx, &lookahead, &c.query).map_err(|e| e.with_client(c.id))?;
            let correction = match cfg.second_order {
                SecondOrder::FirstOrder => gq,
                SecondOrder::Exact | SecondOrder::FiniteDiff => {
                    let mode = if cfg.second_order == SecondOrder::Exact {
                        HvpMode::Analytic
                    } else {
                        HvpMode::FiniteDiff
                    };
                    let hv = ops::hvp(&c.ctx, &th, &c.support, &gq, mode)
                        .map_err(|e| e.with_client(c.id))?;
                    let mut corr = gq;
                    corr.add_scaled(&hv, -cfg.alpha);
                    corr
                }
            };
            th.add_scaled(&correction, -cfg.beta);
            if !(sl.is_finite() && ql.is_finite() && th.is_finite()) {
                return Err(Error::Divergence {
                    step,
                    client: Some(c.id),
                });
            }
            support_loss = sl;
            query_loss = ql;
        }
        Ok(ClientUpdate {
            client_id: c.id,
            payload: UpdatePayload::Params(th),
            support_loss,
            query_loss,
        })
    })?;
    let support_losses: Vec<f64> = updates.iter().map(|u| u.support_loss).collect();
    let query_losses: Vec<f64> = updates.iter().map(|u| u.query_loss).collect();
    let participating: Vec<usize> = updates.iter().map(|u| u.client_id).collect();
    let models: Vec<ParamVector> = updates.into_iter().map(ClientUpdate::into_params).collect();
    state.global = fed::fedavg(&models)?;

    finish_episode(&mut state, env, cfg, participating, &support_losses, &query_losses, t0)?;
    Ok(state)
}

/// One FedAvg episode: sampled clients train locally on their labels
/// (support ∪ query by default) and the server averages the models.
pub fn fl_baseline_episode(mut state: FedState, env: &FedEnv, cfg: &TrainConfig) -> Result<FedState> {
    let t0 = Instant::now();
    let picked = fed::sample_clients(env.clients.len(), cfg.rho, &mut state.substream("client_sample"));
    let global = &state.global;

    let updates: Vec<ClientUpdate> = par_selected(env, &picked, |c| {
        let train = baseline_nodes(c, cfg);
        let th = ops::sgd_steps(&c.ctx, global, &train, cfg.alpha, cfg.local_epochs)
            .map_err(|e| e.with_client(c.id))?;
        let support_loss = ops::loss(&c.ctx, &th, &c.support).map_err(|e| e.with_client(c.id))?;
        let query_loss = ops::loss(&c.ctx, &th, &c.query).map_err(|e| e.with_client(c.id))?;
        Ok(ClientUpdate {
            client_id: c.id,
            payload: UpdatePayload::Params(th),
            support_loss,
            query_loss,
        })
    })?;
    let support_losses: Vec<f64> = updates.iter().map(|u| u.support_loss).collect();
    let query_losses: Vec<f64> = updates.iter().map(|u| u.query_loss).collect();
    let participating: Vec<usize> = updates.iter().map(|u| u.client_id).collect();
    let models: Vec<ParamVector> = updates.into_iter().map(ClientUpdate::into_params).collect();
    state.global = fed::fedavg(&models)?;

    finish_episode(&mut state, env, cfg, participating, &support_losses, &query_losses, t0)?;
    Ok(state)
}

/// Each client trains its own model from a per-client seeded init; accuracy
/// is the mean over clients on the shared test set. Episodes chunk the same
/// T·T_e descent so learning curves line up with the federated algorithms.
pub fn individual_learning(env: &FedEnv, cfg: &TrainConfig, seed: u64) -> Result<RunResult> {
    let t_start = Instant::now();
    let mut models: Vec<ParamVector> = env
        .clients
        .iter()
        .map(|c| {
            ops::init_params(
                &env.spec,
                c.ctx.num_features,
                c.ctx.num_classes,
                rng::derive_seed(seed, c.id as u64, "model_init"),
            )
        })
        .collect();
    let all_ids: Vec<usize> = env.clients.iter().map(|c| c.id).collect();
    let mut history = Vec::with_capacity(cfg.episodes);
    for episode in 0..cfg.episodes {
        let t0 = Instant::now();
        let stepped: Vec<(ParamVector, f64, f64)> = env
            .clients
            .par_iter()
            .zip(models.par_iter())
            .map(|(c, m)| {
                let train = baseline_nodes(c, cfg);
                let th = ops::sgd_steps(&c.ctx, m, &train, cfg.alpha, cfg.local_epochs)
                    .map_err(|e| e.with_client(c.id))?;
                let sl = ops::loss(&c.ctx, &th, &c.support).map_err(|e| e.with_client(c.id))?;
                let ql = ops::loss(&c.ctx, &th, &c.query).map_err(|e| e.with_client(c.id))?;
                Ok((th, sl, ql))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut support_losses = Vec::with_capacity(stepped.len());
        let mut query_losses = Vec::with_capacity(stepped.len());
        models = stepped
            .into_iter()
            .map(|(th, sl, ql)| {
                support_losses.push(sl);
                query_losses.push(ql);
                th
            })
            .collect();
        let accs: Vec<f64> = env
            .clients
            .par_iter()
            .zip(models.par_iter())
            .map(|(c, m)| match env.regime {
                Regime::NewDomain => {
                    let head_seed = rng::derive_seed(seed, c.id as u64, "adapt_init");
                    let adapted =
                        fast_adapt(&env.eval.ctx, m, &c.adaptation, cfg.alpha, cfg.adapt_steps, head_seed)
                            .map_err(|e| e.with_client(c.id))?;
                    evaluate(&env.eval.ctx, &adapted, &env.eval.test)
                }
                _ => evaluate(&env.eval.ctx, m, &env.eval.test),
            })
            .collect::<Result<Vec<_>>>()?;
        history.push(MetricsRecord {
            episode,
            global_test_accuracy: mean(&accs),
            mean_support_loss: mean(&support_losses),
            mean_query_loss: mean(&query_losses),
            participating_client_ids: all_ids.clone(),
            pseudo_label_purity: None,
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        });
    }
    let final_accuracy = history.last().map(|r| r.global_test_accuracy).unwrap_or(0.0);
    Ok(RunResult {
        final_params: fed::fedavg(&models)?,
        client_params: models,
        history,
        final_accuracy,
        wall_ms: t_start.elapsed().as_secs_f64() * 1e3,
    })
}

/// All clients' labels pooled into one training set (original node ids
/// translated back from subgraph-local ids).
fn pooled_labels(env: &FedEnv, cfg: &TrainConfig) -> LabeledNodes {
    let mut map: BTreeMap<usize, usize> = BTreeMap::new();
    for c in &env.clients {
        for (local, y) in c.support.iter() {
            map.insert(c.to_original(local), y);
        }
        if cfg.baseline_labels == BaselineLabels::All {
            for (local, y) in c.query.iter() {
                map.insert(c.to_original(local), y);
            }
        }
    }
    LabeledNodes::new(map.into_iter().collect())
}

/// One model trained centrally on all labeled nodes; the upper-bound
/// reference.
pub fn centralized_learning(env: &FedEnv, cfg: &TrainConfig, seed: u64) -> Result<RunResult> {
    let t_start = Instant::now();
    let pooled = pooled_labels(env, cfg);
    let ctx = &env.train_ctx;
    let mut th = ops::init_params(
        &env.spec,
        env.num_features,
        ctx.num_classes,
        rng::derive_seed(seed, 0, "model_init"),
    );
    let mut history = Vec::with_capacity(cfg.episodes);
    for episode in 0..cfg.episodes {
        let t0 = Instant::now();
        th = ops::sgd_steps(ctx, &th, &pooled, cfg.alpha, cfg.local_epochs)?;
        let l = ops::loss(ctx, &th, &pooled)?;
        let acc = episode_accuracy(env, &th, cfg, seed)?;
        history.push(MetricsRecord {
            episode,
            global_test_accuracy: acc,
            mean_support_loss: l,
            mean_query_loss: l,
            participating_client_ids: Vec::new(),
            pseudo_label_purity: None,
            wall_ms: t0.elapsed().as_secs_f64() * 1e3,
        });
    }
    let final_accuracy = history.last().map(|r| r.global_test_accuracy).unwrap_or(0.0);
    Ok(RunResult {
        final_params: th,
        client_params: Vec::new(),
        history,
        final_accuracy,
        wall_ms: t_start.elapsed().as_secs_f64() * 1e3,
    })
}

/// FedAvg on old-domain labels for T episodes, then per-client fast
/// adaptation on the new domain (the FL+TL baseline).
pub fn fl_plus_transfer(env: &FedEnv, cfg: &TrainConfig, seed: u64) -> Result<RunResult> {
    if env.regime != Regime::NewDomain {
        return Err(Error::config("algorithm", "fl_tl requires the new_domain regime"));
    }
    run_fed_loop(fl_baseline_episode, env, cfg, seed)
}

type EpisodeFn = fn(FedState, &FedEnv, &TrainConfig) -> Result<FedState>;

fn run_fed_loop(episode: EpisodeFn, env: &FedEnv, cfg: &TrainConfig, seed: u64) -> Result<RunResult> {
    let t_start = Instant::now();
    let init = ops::init_params(
        &env.spec,
        env.num_features,
        env.train_ctx.num_classes,
        rng::derive_seed(seed, 0, "model_init"),
    );
    let mut state = FedState::new(seed, init);
    for _ in 0..cfg.episodes {
        state = episode(state, env, cfg)?;
    }
    let final_accuracy = match state.history.last() {
        Some(r) => r.global_test_accuracy,
        None => episode_accuracy(env, &state.global, cfg, seed)?,
    };
    Ok(RunResult {
        final_params: state.global,
        client_params: Vec::new(),
        history: state.history,
        final_accuracy,
        wall_ms: t_start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Run a full training procedure for one seed.
pub fn run_algorithm(alg: Algorithm, env: &FedEnv, cfg: &TrainConfig, seed: u64) -> Result<RunResult> {
    match alg {
        Algorithm::GraphflNoniid => {
            if env.regime == Regime::NewDomain {
                return Err(Error::config(
                    "algorithm",
                    "graphfl_noniid requires the non_iid or overlap regime",
                ));
            }
            run_fed_loop(graphfl_noniid_episode, env, cfg, seed)
        }
        Algorithm::GraphflNewdomain => {
            if env.regime != Regime::NewDomain {
                return Err(Error::config(
                    "algorithm",
                    "graphfl_newdomain requires the new_domain regime",
                ));
            }
            run_fed_loop(graphfl_newdomain_episode, env, cfg, seed)
        }
        Algorithm::Fl => run_fed_loop(fl_baseline_episode, env, cfg, seed),
        Algorithm::FlTl => fl_plus_transfer(env, cfg, seed),
        Algorithm::Il => individual_learning(env, cfg, seed),
        Algorithm::Cl => centralized_learning(env, cfg, seed),
    }
}

/// Self-training: each client trains a fresh local model on its current
/// labels, predicts its unlabeled pool, and keeps the `n_pseudo_per_class`
/// most confident predictions per class (ties to the lower node id) as new
/// pseudo-labeled support nodes. Returns the augmented split and the pseudo
/// label purity (fraction matching ground truth); the input is unmodified.
pub fn self_train_augment(
    g: &GraphDataset,
    split: &ExperimentSplit,
    spec: &ModelSpec,
    cfg: &TrainConfig,
    n_pseudo_per_class: usize,
    seed: u64,
) -> Result<(ExperimentSplit, Option<f64>)> {
    if n_pseudo_per_class == 0 {
        return Ok((split.clone(), None));
    }
    let env = build_env(g, split, spec)?;
    let picks: Vec<Vec<(usize, usize)>> = par_clients(&env.clients, |c| {
        if c.unlabeled.is_empty() {
            return Ok(Vec::new());
        }
        let init = ops::init_params(
            &env.spec,
            c.ctx.num_features,
            c.ctx.num_classes,
            rng::derive_seed(seed, c.id as u64, "selftrain_init"),
        );
        let labeled = c.support.merged(&c.query);
        let trained = ops::sgd_steps(&c.ctx, &init, &labeled, cfg.alpha, cfg.episodes * cfg.local_epochs)
            .map_err(|e| e.with_client(c.id))?;
        let preds = ops::predict(&c.ctx, &trained, &c.unlabeled).map_err(|e| e.with_client(c.id))?;
        let mut by_class: Vec<Vec<(f64, usize)>> = vec![Vec::new(); c.ctx.num_classes];
        for (&local, &(cls, conf)) in c.unlabeled.iter().zip(&preds) {
            by_class[cls].push((conf, c.to_original(local)));
        }
        let mut picked = Vec::new();
        for (cls, mut cand) in by_class.into_iter().enumerate() {
            cand.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            for &(_, orig) in cand.iter().take(n_pseudo_per_class) {
                picked.push((orig, cls));
            }
        }
        Ok(picked)
    })?;

    let mut out = split.clone();
    let (mut total, mut correct) = (0usize, 0usize);
    for (c_out, picked) in out.clients.iter_mut().zip(picks) {
        for (orig, cls) in picked {
            c_out.support.push(orig);
            c_out.pseudo_labels.insert(orig, cls);
            total += 1;
            if g.labels[orig] == cls {
                correct += 1;
            }
        }
        c_out.support.sort_unstable();
    }
    let purity = if total == 0 {
        None
    } else {
        Some(correct as f64 / total as f64)
    };
    Ok((out, purity))
}
