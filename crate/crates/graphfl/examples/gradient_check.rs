//! Check the hand-derived gradients and the SGC Hessian-vector product
//! against central finite differences. This is the same oracle the test
//! suite freezes; here it prints the actual error magnitudes.

use graphfl::graph::sbm::generate_sbm;
use graphfl::model::ops::{grad, hvp, init_params, loss, HvpMode};
use graphfl::model::{LabeledNodes, ModelContext, ModelKind, ModelSpec};

fn main() -> Result<(), graphfl::Error> {
    let g = generate_sbm(3, 10, 0.4, 0.05, 0.3, 1)?;
    let nodes = LabeledNodes::from_dataset(&g, &(0..g.num_nodes).step_by(2).collect::<Vec<_>>());

    for kind in [ModelKind::Sgc, ModelKind::Gcn2] {
        let mut spec = ModelSpec::new(kind);
        spec.hidden_dim = 8;
        let ctx = ModelContext::new(spec, &g)?;
        let theta = init_params(&spec, g.num_features, g.num_classes, 42);
        let analytic = grad(&ctx, &theta, &nodes)?;

        // Central differences, h = 1e-5.
        let h = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..theta.len() {
            let mut plus = theta.clone();
            plus.data_mut()[i] += h;
            let mut minus = theta.clone();
            minus.data_mut()[i] -= h;
            let fd = (loss(&ctx, &plus, &nodes)? - loss(&ctx, &minus, &nodes)?) / (2.0 * h);
            let a = analytic.data()[i];
            worst = worst.max((a - fd).abs() / a.abs().max(1.0));
        }
        println!("{kind:?}: {} params, gradcheck max rel err {worst:.3e}", theta.len());
    }

    // SGC has an analytic HVP; compare it with the finite-difference mode.
    let spec = ModelSpec::new(ModelKind::Sgc);
    let ctx = ModelContext::new(spec, &g)?;
    let theta = init_params(&spec, g.num_features, g.num_classes, 42);
    let v = init_params(&spec, g.num_features, g.num_classes, 43);
    let ha = hvp(&ctx, &theta, &nodes, &v, HvpMode::Analytic)?;
    let hf = hvp(&ctx, &theta, &nodes, &v, HvpMode::FiniteDiff)?;
    let mut diff = ha.clone();
    diff.add_scaled(&hf, -1.0);
    let rel = diff.dot(&diff).sqrt() / hf.dot(&hf).sqrt().max(1.0);
    println!("SGC hvp analytic vs finite-diff rel err {rel:.3e}");
    Ok(())
}
