//! Evaluate the weighted-domain bounds and check the concentration step by
//! simulation.

use gttt::bounds::{
    bound_report, empirical_hdh_distance, lemma2_montecarlo, BoundParams, FiniteHypothesisClass, MonteCarloConfig,
};

pub fn run_example() -> gttt::Result<()> {
    // thresholds on a line of 8 points
    let hyps: Vec<Vec<bool>> = (0..=8).map(|t| (0..8).map(|x| x >= t).collect()).collect();
    let hc = FiniteHypothesisClass::new(hyps, 1)?;
    let d = empirical_hdh_distance(&hc, &[0, 1, 2, 3], &[4, 5, 6, 7])?;
    println!("empirical divergence between the two halves: {d:.3}");

    let r = bound_report(&BoundParams::default())?;
    println!("theorem 1 bound: {:.4}", r.theorem1);
    println!(
        "weighted test-domain bound: best {:.4} at omega0 = {:.3}, {:.4} without labeled test nodes",
        r.theorem2.min, r.theorem2.argmin, r.theorem2.ftt
    );
    for (w, b) in r.test_domain_curve.iter().step_by(25) {
        println!("  omega0 {w:.2}: {b:.4}");
    }

    for n in [100, 400, 1600] {
        let mc = lemma2_montecarlo(&MonteCarloConfig {
            omega: [0.7, 0.3],
            lambda: [0.5, 0.5],
            n,
            eps: 0.05,
            trials: 5000,
            true_rates: [0.2, 0.35],
            seed: 1,
        })?;
        println!(
            "N = {n:4}: violation rate {:.4} vs bound {:.4}",
            mc.violation_rate, mc.analytic_bound
        );
    }
    Ok(())
}

fn main() -> gttt::Result<()> {
    run_example()
}
