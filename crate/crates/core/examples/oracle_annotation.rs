//! Simulated annotator: a fixed fraction of labels flipped, with lower
//! confidence on the flipped ones. Requests are charged against a shared
//! budget.

use gttt::annotator::{annotate_oracle, label_agreement, BudgetLedger, OracleConfig};

pub fn run_example() -> gttt::Result<()> {
    let labels: Vec<usize> = (0..200).map(|i| i % 4).collect();
    let nodes: Vec<usize> = (0..200).step_by(5).collect();
    let ledger = BudgetLedger::new(nodes.len());

    let records = annotate_oracle(&nodes, &labels, 4, &OracleConfig::new(0.8, 42), &ledger)?;
    let agreement = label_agreement(&records, &labels).unwrap_or(0.0);
    let mean_conf = |correct: bool| {
        let c: Vec<f64> = records
            .iter()
            .filter(|r| (r.pseudo_label == labels[r.node_id]) == correct)
            .map(|r| r.confidence)
            .collect();
        c.iter().sum::<f64>() / c.len().max(1) as f64
    };
    println!(
        "{} labels, agreement {agreement:.2}, mean confidence {:.1} (correct) vs {:.1} (flipped)",
        records.len(),
        mean_conf(true),
        mean_conf(false)
    );

    // the budget is spent; a second request is refused before any work
    let again = annotate_oracle(&nodes[..1], &labels, 4, &OracleConfig::new(0.8, 42), &ledger);
    println!("second request: {}", again.unwrap_err());
    Ok(())
}

fn main() -> gttt::Result<()> {
    run_example()
}
