//! Deterministic simulator and library for federated semi-supervised node
//! classification on graphs.
//!
//! The crate implements two meta-learning-based federated training schemes
//! for graph neural networks (GCN and SGC), the standard comparison methods
//! (individual, centralized, federated averaging, and federated averaging
//! with transfer to a new label domain), a self-training augmentation that
//! turns confident predictions on unlabeled nodes into pseudo labels, and an
//! experiment harness that runs everything from a single config file with
//! bit-reproducible results.
//!
//! Start with the runnable examples:
//!
//! ```bash
//! cargo run --release --example noniid_training
//! cargo run --release --example new_label_domain
//! cargo run --release --example gradient_check
//! ```
//!
//! or drive experiments through the thin CLI:
//!
//! ```bash
//! cargo run --release --bin graphfl -- run --config configs/sbm_centralized.toml
//! ```

pub mod algorithms;
pub mod error;
pub mod fed;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod partition;
pub mod rng;

pub use error::{Error, Result};
