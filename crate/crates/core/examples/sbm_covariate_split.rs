//! Generate a degree-corrected two-block SBM and carve out a covariate-shift
//! split by node degree.

use gttt::graph::{generate_sbm, make_ood_split, DomainCriterion, SbmParams, ShiftKind, SplitRatios, SplitSpec};
use gttt::seed;

fn mean_degree(g: &gttt::graph::Graph, ids: &[usize]) -> f64 {
    ids.iter().map(|&i| g.degree(i) as f64).sum::<f64>() / ids.len() as f64
}

pub fn run_example() -> gttt::Result<()> {
    let params = SbmParams {
        block_sizes: vec![300, 300],
        p_intra: 0.02,
        p_inter: 0.003,
        class_means: vec![vec![2.0, 0.0], vec![3.0, 0.0]],
        noise_std: 1.0,
        degree_spread: 0.5,
    };
    let root = 7;
    let g = generate_sbm(&params, seed::substream(root, seed::DATASET))?;
    println!("{} nodes, {} edges, {} classes", g.num_nodes(), g.num_edges(), g.num_classes());

    for shift in [ShiftKind::Covariate, ShiftKind::Concept] {
        let spec = SplitSpec::new(shift, DomainCriterion::Degree);
        let split = make_ood_split(&g, &spec, SplitRatios::new(0.5, 0.1, 0.3), seed::substream(root, seed::SPLIT))?;
        println!(
            "{shift:?}: train {} (mean degree {:.2}), val {}, test {} (mean degree {:.2})",
            split.train_ids().len(),
            mean_degree(&g, &split.train_ids()),
            split.val_ids().len(),
            split.test_ids().len(),
            mean_degree(&g, &split.test_ids()),
        );
    }
    Ok(())
}

fn main() -> gttt::Result<()> {
    run_example()
}
