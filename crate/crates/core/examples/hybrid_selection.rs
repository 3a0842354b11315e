//! Pick annotation candidates with the hybrid selector and compare the label
//! mix against single-criterion baselines.

use gttt::gnn::{pretrain, GcnConfig, GcnModel, OptimState};
use gttt::graph::{
    generate_sbm, make_ood_split, normalize_adjacency, DomainCriterion, SbmParams, ShiftKind, SplitRatios, SplitSpec,
};
use gttt::selection::{baseline_select, hybrid_select, BaselineKind, SelectionConfig};
use gttt::seed;

pub fn run_example() -> gttt::Result<()> {
    let params = SbmParams {
        block_sizes: vec![250, 250],
        p_intra: 0.03,
        p_inter: 0.004,
        class_means: vec![vec![2.0, 0.0], vec![3.0, 0.0]],
        noise_std: 1.0,
        degree_spread: 0.5,
    };
    let root = 2;
    let g = generate_sbm(&params, seed::substream(root, seed::DATASET))?;
    let split = make_ood_split(
        &g,
        &SplitSpec::new(ShiftKind::Covariate, DomainCriterion::Degree),
        SplitRatios::new(0.4, 0.0, 0.4),
        seed::substream(root, seed::SPLIT),
    )?;
    let adj = normalize_adjacency(&g);
    let model = GcnModel::new(2, 2, &GcnConfig::default(), seed::substream(root, seed::INIT))?;
    let (model, _) = pretrain(model, &g, &adj, &split, 100, &mut OptimState::adam(0.01))?;
    let pred = model.forward(&adj, g.features())?;

    let cfg = SelectionConfig::with_budget(20);
    let sel_seed = seed::substream(root, seed::SELECTION);
    let hybrid = hybrid_select(&g, &pred, &split.test_mask, &cfg, sel_seed)?;
    println!("pool of {} uncertain nodes, chose {:?}", hybrid.pool.len(), hybrid.chosen);

    let describe = |name: &str, chosen: &[usize]| {
        let wrong = chosen.iter().filter(|&&v| pred.argmax()[v] != g.labels()[v]).count();
        let ones = chosen.iter().filter(|&&v| g.labels()[v] == 1).count();
        println!("{name:>9}: {wrong:2} misclassified, {ones:2}/{} in class 1", chosen.len());
    };
    describe("hybrid", &hybrid.chosen);
    for kind in BaselineKind::ALL {
        describe(kind.name(), &baseline_select(kind, &g, &pred, &split.test_mask, cfg.budget, sel_seed)?);
    }
    Ok(())
}

fn main() -> gttt::Result<()> {
    run_example()
}
