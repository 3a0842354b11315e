//! Pre-train a two-layer GCN on the source split, then round-trip it through
//! a JSON checkpoint.

use gttt::gnn::{pretrain, GcnConfig, GcnModel, OptimState};
use gttt::graph::{
    generate_sbm, make_ood_split, normalize_adjacency, DomainCriterion, SbmParams, ShiftKind, SplitRatios, SplitSpec,
};
use gttt::seed;

pub fn run_example() -> gttt::Result<()> {
    let params = SbmParams {
        block_sizes: vec![200, 200],
        p_intra: 0.04,
        p_inter: 0.004,
        class_means: vec![vec![-0.5, 0.0], vec![0.5, 0.0]],
        noise_std: 1.0,
        degree_spread: 0.0,
    };
    let g = generate_sbm(&params, seed::substream(1, seed::DATASET))?;
    let split = make_ood_split(
        &g,
        &SplitSpec::new(ShiftKind::Covariate, DomainCriterion::Degree),
        SplitRatios::new(0.5, 0.2, 0.3),
        seed::substream(1, seed::SPLIT),
    )?;
    let adj = normalize_adjacency(&g);

    let model = GcnModel::new(g.feature_dim(), g.num_classes(), &GcnConfig::default(), seed::substream(1, seed::INIT))?;
    println!("{} parameters, layer dims {:?}", model.num_parameters(), model.layer_dims());
    let (model, report) = pretrain(model, &g, &adj, &split, 100, &mut OptimState::adam(0.01))?;
    let pred = model.forward(&adj, g.features())?;
    println!(
        "best epoch {:?}: train {:.3}, val {:.3?}, test {:.3}",
        report.best_epoch,
        report.train_acc,
        report.val_acc,
        pred.accuracy(g.labels(), &split.test_mask)
    );

    let restored = GcnModel::from_json(&model.to_json()?)?;
    assert_eq!(restored, model);
    Ok(())
}

fn main() -> gttt::Result<()> {
    run_example()
}
