//! End to end: pre-train on low-degree nodes, then adapt to the high-degree
//! test domain with a noisy annotator and two-stage training.

use gttt::annotator::OracleConfig;
use gttt::gnn::{pretrain, GcnConfig, GcnModel, OptimState};
use gttt::graph::{
    generate_sbm, make_ood_split, normalize_adjacency, DomainCriterion, SbmParams, ShiftKind, SplitRatios, SplitSpec,
};
use gttt::selection::SelectionConfig;
use gttt::seed;
use gttt::ttt::{run_llmttt, Annotator, TttConfig};

pub fn run_example() -> gttt::Result<()> {
    let root = 4;
    let params = SbmParams {
        block_sizes: vec![500, 500],
        p_intra: 0.012,
        p_inter: 0.002,
        class_means: vec![vec![2.0, 0.0], vec![3.0, 0.0]],
        noise_std: 1.0,
        degree_spread: 0.5,
    };
    let g = generate_sbm(&params, seed::substream(root, seed::DATASET))?;
    let split = make_ood_split(
        &g,
        &SplitSpec::new(ShiftKind::Covariate, DomainCriterion::Degree),
        SplitRatios::new(0.3, 0.0, 0.4),
        seed::substream(root, seed::SPLIT),
    )?;
    let adj = normalize_adjacency(&g);
    let model = GcnModel::new(2, 2, &GcnConfig::default(), seed::substream(root, seed::INIT))?;
    let (model, _) = pretrain(model, &g, &adj, &split, 200, &mut OptimState::adam(0.01))?;

    let oracle = OracleConfig::new(0.9, seed::substream(root, seed::ORACLE));
    let cfg = TttConfig {
        stage1_epochs: 60,
        stage2_epochs: 30,
        stage2_lr: Some(3e-4),
        seed: root,
        ..TttConfig::default()
    };
    let (_, m) = run_llmttt(model, &g, &adj, &split, &SelectionConfig::with_budget(40), Annotator::Oracle(&oracle), &cfg)?;
    println!(
        "pretrained {:.4} -> stage 1 {:.4?} -> stage 2 {:.4?}",
        m.acc_pretrained, m.acc_stage1, m.acc_stage2
    );
    println!(
        "{} annotated, {} kept after filtering, label agreement {:.2?}",
        m.budget_used,
        m.filtered.len(),
        m.llm_agreement
    );
    Ok(())
}

fn main() -> gttt::Result<()> {
    run_example()
}
