//! Federated core: client sampling, FedAvg, meta-aggregation, and the
//! server/client message vocabulary.
//!
//! Averages are computed as an anchored mean `v₁ + Σ(vᵢ − v₁)/k` so that the
//! mean of k identical vectors is bitwise equal to the input. Aggregation
//! order is the caller's update order, which the training loops keep at
//! ascending client id, so results are reproducible regardless of how the
//! per-client work was scheduled.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metrics::MetricsRecord;
use crate::model::ParamVector;
use crate::rng;
use crate::{Error, Result};

/// Server-side training state threaded through episodes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FedState {
    /// Master seed for the run; all per-episode randomness derives from it.
    pub seed: u64,
    /// Number of completed episodes (the next episode index).
    pub episode: usize,
    pub global: ParamVector,
    pub history: Vec<MetricsRecord>,
}

impl FedState {
    pub fn new(seed: u64, global: ParamVector) -> FedState {
        FedState {
            seed,
            episode: 0,
            global,
            history: Vec::new(),
        }
    }

    /// RNG stream for `purpose` in the current episode.
    pub fn substream(&self, purpose: &str) -> ChaCha8Rng {
        rng::substream(self.seed, self.episode as u64, purpose)
    }
}

/// What a client sends back after local work.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdatePayload {
    /// Query gradient evaluated at locally adapted parameters.
    Gradient(ParamVector),
    /// Full locally trained parameters.
    Params(ParamVector),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientUpdate {
    pub client_id: usize,
    pub payload: UpdatePayload,
    pub support_loss: f64,
    pub query_loss: f64,
}

impl ClientUpdate {
    pub fn params(&self) -> &ParamVector {
        match &self.payload {
            UpdatePayload::Gradient(p) | UpdatePayload::Params(p) => p,
        }
    }

    pub fn into_params(self) -> ParamVector {
        match self.payload {
            UpdatePayload::Gradient(p) | UpdatePayload::Params(p) => p,
        }
    }
}

/// Everything that crosses the server/client boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Message {
    Broadcast { episode: usize, params: ParamVector },
    Update { episode: usize, update: ClientUpdate },
    Aggregate { episode: usize, params: ParamVector },
}

/// Draw `round(rho·n)` distinct client ids (clamped to `1..=n`), uniformly
/// without replacement, returned ascending.
pub fn sample_clients(num_clients: usize, rho: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    assert!(num_clients >= 1, "need at least one client");
    assert!(rho > 0.0 && rho <= 1.0, "rho must be in (0, 1]");
    let m = ((rho * num_clients as f64).round() as usize).clamp(1, num_clients);
    let mut picked = rand::seq::index::sample(rng, num_clients, m).into_vec();
    picked.sort_unstable();
    picked
}

fn check_same_shape(op: &'static str, anchor: &ParamVector, v: &ParamVector) -> Result<()> {
    if v.shape() != anchor.shape() {
        return Err(Error::Shape {
            op,
            expected: format!("{:?}", anchor.shape().blocks),
            got: format!("{:?}", v.shape().blocks),
        });
    }
    Ok(())
}

/// Anchored mean over `vs` in the given order.
fn anchored_mean(op: &'static str, vs: &[ParamVector]) -> Result<ParamVector> {
    let anchor = &vs[0];
    if vs.len() == 1 {
        return Ok(anchor.clone());
    }
    let mut delta = ParamVector::zeros(anchor.shape().clone());
    for v in vs {
        check_same_shape(op, anchor, v)?;
        for ((d, &a), &b) in delta.data_mut().iter_mut().zip(v.data()).zip(anchor.data()) {
            *d += a - b;
        }
    }
    delta.scale(1.0 / vs.len() as f64);
    let mut mean = anchor.clone();
    mean.add_scaled(&delta, 1.0);
    Ok(mean)
}

/// FedAvg: elementwise mean of the updates. A single update is returned
/// unchanged (bitwise).
pub fn fedavg(updates: &[ParamVector]) -> Result<ParamVector> {
    if updates.is_empty() {
        return Err(Error::Empty { what: "fedavg updates" });
    }
    anchored_mean("fedavg", updates)
}

/// Meta step: `theta − beta·(Σ grads)/k` when `normalize`, else
/// `theta − beta·Σ grads`.
pub fn meta_aggregate(
    theta: &ParamVector,
    grads: &[ParamVector],
    beta: f64,
    normalize: bool,
) -> Result<ParamVector> {
    if grads.is_empty() {
        return Err(Error::Empty { what: "meta_aggregate gradients" });
    }
    for g in grads {
        check_same_shape("meta_aggregate", theta, g)?;
    }
    let step = if normalize {
        anchored_mean("meta_aggregate", grads)?
    } else {
        let mut sum = ParamVector::zeros(theta.shape().clone());
        for g in grads {
            sum.add_scaled(g, 1.0);
        }
        sum
    };
    let mut out = theta.clone();
    out.add_scaled(&step, -beta);
    Ok(out)
}
