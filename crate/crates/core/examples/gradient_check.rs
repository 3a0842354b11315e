//! Compare the analytic GCN gradients with central finite differences on a
//! small random graph.

use gttt::gnn::{backward, weighted_loss_ce, GcnConfig, GcnModel};
use gttt::graph::{generate_sbm, normalize_adjacency, SbmParams};

pub fn run_example() -> gttt::Result<()> {
    let params = SbmParams {
        block_sizes: vec![6, 6, 6],
        p_intra: 0.5,
        p_inter: 0.1,
        class_means: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        noise_std: 0.5,
        degree_spread: 0.0,
    };
    let g = generate_sbm(&params, 3)?;
    let adj = normalize_adjacency(&g);
    let cfg = GcnConfig {
        hidden: 5,
        layers: 2,
        frozen_prefix: 0,
    };
    let model = GcnModel::new(3, 3, &cfg, 11)?;
    let mask: Vec<bool> = (0..g.num_nodes()).map(|i| i % 3 != 0).collect();
    let weights: Vec<f64> = (0..g.num_nodes()).map(|i| 0.5 + (i % 4) as f64 * 0.25).collect();
    let loss = |m: &GcnModel| -> gttt::Result<f64> {
        weighted_loss_ce(&m.forward(&adj, g.features())?, g.labels(), &mask, Some(&weights))
    };

    let grads = backward(&model, &adj, g.features(), g.labels(), &mask, Some(&weights))?;
    let h = 1e-6;
    let mut worst = 0.0f64;
    for l in 0..model.num_layers() {
        let (rows, cols) = model.layer_weights()[l].dim();
        for r in 0..rows {
            for c in 0..cols {
                let shifted = |delta: f64| {
                    let mut w = model.layer_weights().to_vec();
                    w[l][[r, c]] += delta;
                    GcnModel::from_parts(w, model.layer_biases().to_vec(), 0)
                };
                let numeric = (loss(&shifted(h)?)? - loss(&shifted(-h)?)?) / (2.0 * h);
                let analytic = grads.weights[l][[r, c]];
                let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-8);
                worst = worst.max(rel);
            }
        }
    }
    println!("max relative error over weights: {worst:.2e}");
    Ok(())
}

fn main() -> gttt::Result<()> {
    run_example()
}
