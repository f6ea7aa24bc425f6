//! Client dataset construction for the three experimental regimes:
//! non-IID label distribution, new-label-domain splits, and overlapped
//! subgraph distribution.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphDataset;
use crate::rng::substream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    NonIid,
    NewDomain,
    Overlap,
}

/// The portion of the graph a client holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClientNodes {
    /// The client sees the whole graph.
    Full,
    /// Induced subgraph on these original node ids (sorted).
    Subset(Vec<usize>),
}

impl Serialize for ClientNodes {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ClientNodes::Full => s.serialize_str("full"),
            ClientNodes::Subset(ids) => ids.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ClientNodes {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Tag(String),
            Ids(Vec<usize>),
        }
        match Repr::deserialize(d)? {
            Repr::Tag(t) if t == "full" => Ok(ClientNodes::Full),
            Repr::Tag(t) => Err(serde::de::Error::custom(format!(
                "expected \"full\" or an id array, got {t:?}"
            ))),
            Repr::Ids(ids) => Ok(ClientNodes::Subset(ids)),
        }
    }
}

fn is_full(n: &ClientNodes) -> bool {
    matches!(n, ClientNodes::Full)
}

/// One client's data assignment. All node ids are original-graph ids; support,
/// query, and adaptation sets are stored sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClientSplit {
    pub id: usize,
    #[serde(default = "default_nodes", skip_serializing_if = "is_full")]
    pub nodes: ClientNodes,
    pub support: Vec<usize>,
    pub query: Vec<usize>,
    pub adaptation: Vec<usize>,
    /// Pseudo labels attached by self-training: node id → predicted label.
    /// Every key also appears in `support`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pseudo_labels: BTreeMap<usize, usize>,
}

fn default_nodes() -> ClientNodes {
    ClientNodes::Full
}

impl ClientSplit {
    fn empty(id: usize) -> ClientSplit {
        ClientSplit {
            id,
            nodes: ClientNodes::Full,
            support: Vec::new(),
            query: Vec::new(),
            adaptation: Vec::new(),
            pseudo_labels: BTreeMap::new(),
        }
    }

    /// Original ids of the nodes the client holds.
    pub fn node_ids(&self, num_nodes: usize) -> Vec<usize> {
        match &self.nodes {
            ClientNodes::Full => (0..num_nodes).collect(),
            ClientNodes::Subset(ids) => ids.clone(),
        }
    }

    /// The client's unlabeled nodes: everything it holds minus its labeled
    /// sets. Derived rather than stored, so splits stay compact.
    pub fn unlabeled(&self, num_nodes: usize) -> Vec<usize> {
        let mut labeled: Vec<usize> = self
            .support
            .iter()
            .chain(&self.query)
            .chain(&self.adaptation)
            .copied()
            .collect();
        labeled.sort_unstable();
        labeled.dedup();
        self.node_ids(num_nodes)
            .into_iter()
            .filter(|v| labeled.binary_search(v).is_err())
            .collect()
    }
}

/// Regime parameters echoed into splits.json for replay.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitParams {
    pub num_clients: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_per_class: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_per_class: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_adapt: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_test_per_class: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSplit {
    pub regime: Regime,
    pub seed: u64,
    pub clients: Vec<ClientSplit>,
    pub test_nodes: Vec<usize>,
    pub params: SplitParams,
}

impl ExperimentSplit {
    /// All support ∪ query nodes across clients, sorted, deduplicated.
    pub fn training_nodes(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .clients
            .iter()
            .flat_map(|c| c.support.iter().chain(&c.query).copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// All adaptation nodes across clients, sorted, deduplicated.
    pub fn adaptation_nodes(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self
            .clients
            .iter()
            .flat_map(|c| c.adaptation.iter().copied())
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// Human-readable irregularities worth surfacing (not errors).
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.clients {
            if c.support.is_empty() {
                out.push(format!("client {} has an empty support set", c.id));
            }
        }
        out
    }

    /// Check the cross-set invariants against the source graph.
    pub fn validate(&self, g: &GraphDataset) -> Result<()> {
        let fail = |msg: String| {
            Err(Error::Shape {
                op: "ExperimentSplit::validate",
                expected: "well-formed split".into(),
                got: msg,
            })
        };
        let in_range = |ids: &[usize]| ids.iter().all(|&v| v < g.num_nodes);
        if !in_range(&self.test_nodes) {
            return fail("test node id out of range".into());
        }
        let training = self.training_nodes();
        for &t in &self.test_nodes {
            if training.binary_search(&t).is_ok() {
                return fail(format!("test node {t} appears in a training set"));
            }
        }
        let k = g.num_classes;
        let k0 = self.params.k0.unwrap_or(0);
        for c in &self.clients {
            if !(in_range(&c.support) && in_range(&c.query) && in_range(&c.adaptation)) {
                return fail(format!("client {} has an out-of-range node id", c.id));
            }
            for s in &c.support {
                if c.query.binary_search(s).is_ok() {
                    return fail(format!("client {}: node {s} in both support and query", c.id));
                }
            }
            if let ClientNodes::Subset(nodes) = &c.nodes {
                for v in c.support.iter().chain(&c.query) {
                    if nodes.binary_search(v).is_err() {
                        return fail(format!("client {}: labeled node {v} outside its subgraph", c.id));
                    }
                }
            }
            if self.regime == Regime::NewDomain {
                for &v in c.support.iter().chain(&c.query) {
                    // Pseudo-labeled nodes carry their predicted (old-domain)
                    // label regardless of ground truth.
                    if g.labels[v] >= k - k0 && !c.pseudo_labels.contains_key(&v) {
                        return fail(format!("client {}: training node {v} has new-domain label", c.id));
                    }
                }
                for &v in &c.adaptation {
                    if g.labels[v] < k - k0 {
                        return fail(format!("client {}: adaptation node {v} has old-domain label", c.id));
                    }
                }
            }
        }
        if self.regime == Regime::NewDomain {
            for &v in &self.test_nodes {
                if g.labels[v] < k - k0 {
                    return fail(format!("test node {v} has old-domain label"));
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("split serialization");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<ExperimentSplit> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::ingest(path, Some(e.line()), e.to_string()))
    }
}

/// Node ids of each class, ascending.
fn class_members(g: &GraphDataset) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); g.num_classes];
    for (v, &y) in g.labels.iter().enumerate() {
        members[y].push(v);
    }
    members
}

/// Sample `n` items from `pool` without replacement, ascending. Distinct from
/// the shuffle path so sampled sets don't depend on how callers order pools.
fn sample_sorted(pool: &[usize], n: usize, rng: &mut impl rand::Rng) -> Vec<usize> {
    let mut picked: Vec<usize> = rand::seq::index::sample(rng, pool.len(), n)
        .iter()
        .map(|i| pool[i])
        .collect();
    picked.sort_unstable();
    picked
}

/// Non-IID regime: sample `labels_per_class` nodes per class, shuffle the
/// pool, deal round-robin to clients, and split each client's share 50/50
/// into support and query (odd counts favor support). Every client sees the
/// full graph; `test_nodes` is left empty for `sample_test_set` to fill.
pub fn partition_labels_noniid(
    g: &GraphDataset,
    num_clients: usize,
    labels_per_class: usize,
    seed: u64,
) -> Result<ExperimentSplit> {
    if num_clients == 0 {
        return Err(Error::config("num_clients", "must be >= 1"));
    }
    let mut rng = substream(seed, 0, "noniid");
    let pool = sample_label_pool(g, labels_per_class, &mut rng)?;
    let clients = deal_round_robin(&pool, num_clients);
    Ok(ExperimentSplit {
        regime: Regime::NonIid,
        seed,
        clients,
        test_nodes: Vec::new(),
        params: SplitParams {
            num_clients,
            labels_per_class: Some(labels_per_class),
            ..SplitParams::default()
        },
    })
}

/// Sampled and shuffled pool of `labels_per_class` nodes per class.
fn sample_label_pool(
    g: &GraphDataset,
    labels_per_class: usize,
    rng: &mut impl rand::Rng,
) -> Result<Vec<usize>> {
    let members = class_members(g);
    let mut pool = Vec::with_capacity(g.num_classes * labels_per_class);
    for (k, nodes) in members.iter().enumerate() {
        if nodes.len() < labels_per_class {
            return Err(Error::config(
                "labels_per_class",
                format!("class {k} has only {} nodes, need {labels_per_class}", nodes.len()),
            ));
        }
        pool.extend(sample_sorted(nodes, labels_per_class, rng));
    }
    pool.shuffle(rng);
    Ok(pool)
}

/// Deal a shuffled pool round-robin and split each share 50/50 in dealing
/// order (support first).
fn deal_round_robin(pool: &[usize], num_clients: usize) -> Vec<ClientSplit> {
    let mut dealt: Vec<Vec<usize>> = vec![Vec::new(); num_clients];
    for (i, &v) in pool.iter().enumerate() {
        dealt[i % num_clients].push(v);
    }
    dealt
        .into_iter()
        .enumerate()
        .map(|(id, share)| {
            let cut = share.len() - share.len() / 2;
            let mut c = ClientSplit::empty(id);
            c.support = share[..cut].to_vec();
            c.query = share[cut..].to_vec();
            c.support.sort_unstable();
            c.query.sort_unstable();
            c
        })
        .collect()
}

/// Uniform sample of `n` test nodes from the complement of `excluded`.
pub fn sample_test_set(
    g: &GraphDataset,
    excluded: &[usize],
    n: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let mut sorted = excluded.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let available: Vec<usize> = (0..g.num_nodes)
        .filter(|v| sorted.binary_search(v).is_err())
        .collect();
    if available.len() < n {
        return Err(Error::config(
            "test_nodes",
            format!("requested {n} test nodes but only {} are not excluded", available.len()),
        ));
    }
    let mut rng = substream(seed, 0, "test_set");
    Ok(sample_sorted(&available, n, &mut rng))
}

/// New-label-domain regime. Classes 0..K−K0 are the old domain (training);
/// the last K0 classes are the new domain. Per client: K0 old classes are
/// drawn, `n_per_class` nodes sampled from each and split 50/50 per class into
/// support/query; `n_adapt` nodes per new class form the adaptation set.
/// Test nodes (`n_test_per_class` per new class per client, pooled) are drawn
/// from the new domain excluding every client's adaptation nodes.
pub fn partition_new_domain(
    g: &GraphDataset,
    num_clients: usize,
    k0: usize,
    n_per_class: usize,
    n_adapt: usize,
    n_test_per_class: usize,
    seed: u64,
) -> Result<ExperimentSplit> {
    let k = g.num_classes;
    if k0 == 0 || k0 >= k {
        return Err(Error::config("k0", format!("need 0 < K0 < K (= {k}), got {k0}")));
    }
    if k0 > k - k0 {
        return Err(Error::config(
            "k0",
            format!("cannot draw {k0} distinct old-domain classes from {}", k - k0),
        ));
    }
    if num_clients == 0 {
        return Err(Error::config("num_clients", "must be >= 1"));
    }
    let members = class_members(g);
    let need = |class: usize, n: usize| -> Result<()> {
        if members[class].len() < n {
            Err(Error::config(
                "n_per_class",
                format!("class {class} has only {} nodes, need {n}", members[class].len()),
            ))
        } else {
            Ok(())
        }
    };
    let old_classes: Vec<usize> = (0..k - k0).collect();
    let mut rng = substream(seed, 0, "new_domain");
    let mut clients = Vec::with_capacity(num_clients);

    for id in 0..num_clients {
        let mut chosen = sample_sorted(&old_classes, k0, &mut rng);
        chosen.sort_unstable();
        let mut c = ClientSplit::empty(id);
        for &class in &chosen {
            need(class, n_per_class)?;
            // Unsorted draw: the random order decides the support/query split.
            let draw: Vec<usize> = rand::seq::index::sample(&mut rng, members[class].len(), n_per_class)
                .iter()
                .map(|i| members[class][i])
                .collect();
            let cut = draw.len() - draw.len() / 2;
            c.support.extend(&draw[..cut]);
            c.query.extend(&draw[cut..]);
        }
        for class in k - k0..k {
            need(class, n_adapt)?;
            c.adaptation.extend(sample_sorted(&members[class], n_adapt, &mut rng));
        }
        c.support.sort_unstable();
        c.query.sort_unstable();
        c.adaptation.sort_unstable();
        clients.push(c);
    }

    // Test nodes come from the new domain minus every adaptation node, so no
    // client is ever evaluated on a node any client adapted on.
    let mut all_adapt: Vec<usize> = clients.iter().flat_map(|c| c.adaptation.clone()).collect();
    all_adapt.sort_unstable();
    all_adapt.dedup();
    let mut test_nodes = Vec::new();
    for _ in 0..num_clients {
        for class in k - k0..k {
            let available: Vec<usize> = members[class]
                .iter()
                .copied()
                .filter(|v| all_adapt.binary_search(v).is_err())
                .collect();
            if available.len() < n_test_per_class {
                return Err(Error::config(
                    "n_test_per_class",
                    format!(
                        "class {class} has only {} non-adaptation nodes, need {n_test_per_class}",
                        available.len()
                    ),
                ));
            }
            test_nodes.extend(sample_sorted(&available, n_test_per_class, &mut rng));
        }
    }
    test_nodes.sort_unstable();
    test_nodes.dedup();

    Ok(ExperimentSplit {
        regime: Regime::NewDomain,
        seed,
        clients,
        test_nodes,
        params: SplitParams {
            num_clients,
            k0: Some(k0),
            n_per_class: Some(n_per_class),
            n_adapt: Some(n_adapt),
            n_test_per_class: Some(n_test_per_class),
            ..SplitParams::default()
        },
    })
}

/// Overlapped windows: shuffle all node ids, cut `num_clients` windows of
/// width w = ceil(N/(I − γ(I−1))) at stride round((1−γ)·w); the last window
/// runs to the end. Consecutive windows share ≈ γ·w nodes. γ=1 degenerates to
/// every window holding the whole graph. Returns each window as a sorted id
/// set.
pub fn partition_overlap(
    g: &GraphDataset,
    num_clients: usize,
    gamma: f64,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if num_clients == 0 {
        return Err(Error::config("num_clients", "must be >= 1"));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::config(
            "gamma",
            format!("need 0 <= gamma <= 1, got {gamma}"),
        ));
    }
    let n = g.num_nodes;
    let i = num_clients;
    let width = (n as f64 / (i as f64 - gamma * (i as f64 - 1.0))).ceil() as usize;
    let stride = ((1.0 - gamma) * width as f64).round() as usize;
    // At γ=1 the stride is 0 and the width is n: every window is the full
    // graph, which is fine. A zero stride with a *partial* window would leave
    // nodes uncovered, so that stays an error.
    if width == 0 || stride == 0 && i > 1 && width < n {
        return Err(Error::config("gamma", "window or stride collapses to zero"));
    }
    if i > 1 && (i - 1) * stride >= n {
        return Err(Error::config(
            "num_clients",
            format!("window {} would start past the last node ({n})", (i - 1) * stride),
        ));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut substream(seed, 0, "overlap"));
    let mut windows = Vec::with_capacity(i);
    for c in 0..i {
        let start = c * stride;
        let end = if c == i - 1 { n } else { (start + width).min(n) };
        let mut w: Vec<usize> = ids[start..end].to_vec();
        w.sort_unstable();
        windows.push(w);
    }
    Ok(windows)
}

/// Overlap regime composed with non-IID label dealing: windows come from
/// `partition_overlap`; the usual per-class label pool is dealt one node at a
/// time to the eligible client (window contains the node) with the fewest
/// dealt nodes so far (ties to the lower id).
pub fn partition_overlap_noniid(
    g: &GraphDataset,
    num_clients: usize,
    labels_per_class: usize,
    gamma: f64,
    seed: u64,
) -> Result<ExperimentSplit> {
    let windows = partition_overlap(g, num_clients, gamma, seed)?;
    let mut rng = substream(seed, 0, "noniid");
    let pool = sample_label_pool(g, labels_per_class, &mut rng)?;

    let mut dealt: Vec<Vec<usize>> = vec![Vec::new(); num_clients];
    for &v in &pool {
        let target = (0..num_clients)
            .filter(|&c| windows[c].binary_search(&v).is_ok())
            .min_by_key(|&c| (dealt[c].len(), c))
            .expect("windows cover every node");
        dealt[target].push(v);
    }
    let clients = dealt
        .into_iter()
        .zip(windows)
        .enumerate()
        .map(|(id, (share, window))| {
            let cut = share.len() - share.len() / 2;
            let mut c = ClientSplit::empty(id);
            c.support = share[..cut].to_vec();
            c.query = share[cut..].to_vec();
            c.support.sort_unstable();
            c.query.sort_unstable();
            c.nodes = ClientNodes::Subset(window);
            c
        })
        .collect();
    Ok(ExperimentSplit {
        regime: Regime::Overlap,
        seed,
        clients,
        test_nodes: Vec::new(),
        params: SplitParams {
            num_clients,
            labels_per_class: Some(labels_per_class),
            gamma: Some(gamma),
            ..SplitParams::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::sbm::generate_sbm;

    fn cora_like() -> GraphDataset {
        // 7 classes × 40 nodes stands in for the class structure at test scale.
        generate_sbm(7, 40, 0.3, 0.02, 0.2, 100).unwrap()
    }

    fn big_classes() -> GraphDataset {
        // New-domain tests draw adaptation and test nodes per client, so the
        // classes must be deep enough not to exhaust.
        generate_sbm(7, 120, 0.2, 0.01, 0.2, 101).unwrap()
    }

    #[test]
    fn noniid_counts_and_balance() {
        let g = cora_like();
        let split = partition_labels_noniid(&g, 50, 20, 1).unwrap();
        let total: usize = split.clients.iter().map(|c| c.support.len() + c.query.len()).sum();
        assert_eq!(total, 7 * 20);
        for c in &split.clients {
            let n = c.support.len() + c.query.len();
            assert!(n == 2 || n == 3, "client {} got {n} labels", c.id);
            assert!(c.support.len() >= c.query.len());
            assert!(c.support.len() - c.query.len() <= 1);
        }
        split.validate(&g).unwrap();
    }

    #[test]
    fn noniid_single_client_takes_all() {
        let g = cora_like();
        let split = partition_labels_noniid(&g, 1, 5, 2).unwrap();
        assert_eq!(split.clients.len(), 1);
        let c = &split.clients[0];
        assert_eq!(c.support.len() + c.query.len(), 35);
        assert_eq!(c.support.len(), 18);
    }

    #[test]
    fn noniid_is_deterministic() {
        let g = cora_like();
        let a = partition_labels_noniid(&g, 10, 4, 3).unwrap();
        let b = partition_labels_noniid(&g, 10, 4, 3).unwrap();
        assert_eq!(a, b);
        let c = partition_labels_noniid(&g, 10, 4, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noniid_rejects_small_class() {
        let g = generate_sbm(2, 3, 0.9, 0.1, 0.0, 5).unwrap();
        assert!(partition_labels_noniid(&g, 2, 4, 1).is_err());
    }

    #[test]
    fn noniid_is_class_skewed() {
        // The round-robin deal of a shuffled pool should leave most clients
        // without a full class spread — that skew is the point of the regime.
        let g = cora_like();
        let split = partition_labels_noniid(&g, 20, 20, 7).unwrap();
        let skewed = split
            .clients
            .iter()
            .filter(|c| {
                let classes: std::collections::BTreeSet<usize> = c
                    .support
                    .iter()
                    .chain(&c.query)
                    .map(|&v| g.labels[v])
                    .collect();
                classes.len() < g.num_classes
            })
            .count();
        assert!(skewed == 20, "{skewed} of 20 clients are class-skewed");
    }

    #[test]
    fn test_set_complement_when_exhaustive() {
        let g = generate_sbm(2, 5, 0.9, 0.1, 0.0, 6).unwrap();
        let excluded = vec![0, 1, 2];
        let t = sample_test_set(&g, &excluded, 7, 9).unwrap();
        assert_eq!(t, vec![3, 4, 5, 6, 7, 8, 9]);
    }

    #[test]
    fn test_set_disjoint_and_deterministic() {
        let g = cora_like();
        let split = partition_labels_noniid(&g, 10, 20, 3).unwrap();
        let excluded = split.training_nodes();
        let a = sample_test_set(&g, &excluded, 100, 4).unwrap();
        let b = sample_test_set(&g, &excluded, 100, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        for v in &a {
            assert!(excluded.binary_search(v).is_err());
        }
    }

    #[test]
    fn test_set_insufficient_errors() {
        let g = generate_sbm(2, 3, 0.9, 0.1, 0.0, 5).unwrap();
        assert!(sample_test_set(&g, &[0, 1], 5, 1).is_err());
    }

    #[test]
    fn new_domain_label_domains_are_disjoint() {
        let g = big_classes();
        let split = partition_new_domain(&g, 10, 2, 10, 5, 20, 11).unwrap();
        split.validate(&g).unwrap();
        for c in &split.clients {
            for &v in c.support.iter().chain(&c.query) {
                assert!(g.labels[v] < 5);
            }
            for &v in &c.adaptation {
                assert!(g.labels[v] >= 5);
            }
            assert_eq!(c.support.len(), 10);
            assert_eq!(c.query.len(), 10);
            assert_eq!(c.adaptation.len(), 10);
        }
        for &v in &split.test_nodes {
            assert!(g.labels[v] >= 5);
        }
        // Trained label set and test label set never meet.
        let train_labels: std::collections::BTreeSet<usize> = split
            .clients
            .iter()
            .flat_map(|c| c.support.iter().chain(&c.query))
            .map(|&v| g.labels[v])
            .collect();
        let test_labels: std::collections::BTreeSet<usize> =
            split.test_nodes.iter().map(|&v| g.labels[v]).collect();
        assert!(train_labels.is_disjoint(&test_labels));
    }

    #[test]
    fn new_domain_test_avoids_adaptation_nodes() {
        let g = big_classes();
        let split = partition_new_domain(&g, 8, 2, 10, 5, 15, 12).unwrap();
        let adapt = split.adaptation_nodes();
        for v in &split.test_nodes {
            assert!(adapt.binary_search(v).is_err());
        }
    }

    #[test]
    fn new_domain_rejects_bad_k0() {
        let g = cora_like();
        assert!(partition_new_domain(&g, 4, 0, 10, 5, 20, 1).is_err());
        assert!(partition_new_domain(&g, 4, 7, 10, 5, 20, 1).is_err());
        assert!(partition_new_domain(&g, 4, 4, 10, 5, 20, 1).is_err());
    }

    #[test]
    fn new_domain_is_deterministic() {
        let g = big_classes();
        let a = partition_new_domain(&g, 6, 2, 10, 5, 20, 21).unwrap();
        let b = partition_new_domain(&g, 6, 2, 10, 5, 20, 21).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overlap_zero_gamma_partitions() {
        let g = cora_like();
        let windows = partition_overlap(&g, 7, 0.0, 5).unwrap();
        let mut seen = vec![false; g.num_nodes];
        for w in &windows {
            for &v in w {
                assert!(!seen[v], "node {v} in two windows at gamma = 0");
                seen[v] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        let sizes: Vec<usize> = windows.iter().map(|w| w.len()).collect();
        let (mn, mx) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        assert!(mx - mn <= 40, "sizes {sizes:?}");
    }

    #[test]
    fn overlap_fraction_tracks_gamma() {
        let g = cora_like();
        for &gamma in &[0.25, 0.5, 0.75] {
            let windows = partition_overlap(&g, 5, gamma, 8).unwrap();
            let width = windows[0].len();
            for pair in windows.windows(2).take(3) {
                let inter = pair[0].iter().filter(|v| pair[1].binary_search(v).is_ok()).count();
                let want = gamma * width as f64;
                assert!(
                    (inter as f64 - want).abs() <= 1.0,
                    "gamma {gamma}: overlap {inter} vs {want}"
                );
            }
            let mut union: Vec<usize> = windows.iter().flatten().copied().collect();
            union.sort_unstable();
            union.dedup();
            assert_eq!(union.len(), g.num_nodes);
        }
    }

    #[test]
    fn overlap_small_example_matches_stride_arithmetic() {
        // N=10, I=2, γ=0.5: width = ceil(10/1.5) = 7, stride = round(3.5) = 4
        // → windows of 7 and 6 sharing 3 nodes.
        let g = generate_sbm(2, 5, 0.9, 0.1, 0.0, 3).unwrap();
        let windows = partition_overlap(&g, 2, 0.5, 1).unwrap();
        assert_eq!(windows[0].len(), 7);
        assert_eq!(windows[1].len(), 6);
        let inter = windows[0].iter().filter(|v| windows[1].binary_search(v).is_ok()).count();
        assert_eq!(inter, 3);
    }

    #[test]
    fn overlap_gamma_domain() {
        let g = cora_like();
        // Full overlap: every client sees the whole graph.
        let windows = partition_overlap(&g, 3, 1.0, 1).unwrap();
        let all: Vec<usize> = (0..g.num_nodes).collect();
        for w in &windows {
            assert_eq!(w, &all);
        }
        assert!(partition_overlap(&g, 3, -0.1, 1).is_err());
        assert!(partition_overlap(&g, 3, 1.1, 1).is_err());
    }

    #[test]
    fn overlap_noniid_composition_is_consistent() {
        let g = cora_like();
        let split = partition_overlap_noniid(&g, 6, 12, 0.4, 9).unwrap();
        split.validate(&g).unwrap();
        assert_eq!(split.regime, Regime::Overlap);
        let total: usize = split.clients.iter().map(|c| c.support.len() + c.query.len()).sum();
        assert_eq!(total, 7 * 12);
        for c in &split.clients {
            let ClientNodes::Subset(window) = &c.nodes else {
                panic!("overlap client should hold a subset")
            };
            for v in c.support.iter().chain(&c.query) {
                assert!(window.binary_search(v).is_ok());
            }
        }
    }

    #[test]
    fn splits_json_round_trip_byte_identical() {
        let g = big_classes();
        let mut split = partition_new_domain(&g, 5, 2, 10, 5, 20, 31).unwrap();
        let node = split.clients[0].support[0];
        split.clients[0].pseudo_labels.insert(node, 3);
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.json");
        let p2 = dir.path().join("b.json");
        split.save(&p1).unwrap();
        let back = ExperimentSplit::load(&p1).unwrap();
        assert_eq!(back, split);
        back.save(&p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn full_nodes_serialize_as_tag() {
        let g = big_classes();
        let split = partition_labels_noniid(&g, 3, 4, 2).unwrap();
        let text = serde_json::to_string(&split).unwrap();
        // Full-graph clients appear without a nodes array.
        assert!(!text.contains("\"nodes\""), "{text}");
        let with_subset = partition_overlap_noniid(&g, 3, 4, 0.3, 2).unwrap();
        let text2 = serde_json::to_string(&with_subset).unwrap();
        assert!(text2.contains("\"nodes\""));
    }

    #[test]
    fn unlabeled_excludes_labeled_sets() {
        let g = cora_like();
        let split = partition_labels_noniid(&g, 4, 6, 2).unwrap();
        let c = &split.clients[0];
        let unl = c.unlabeled(g.num_nodes);
        assert_eq!(unl.len(), g.num_nodes - c.support.len() - c.query.len());
        for v in c.support.iter().chain(&c.query) {
            assert!(unl.binary_search(v).is_err());
        }
    }
}
