//! Rank pseudo-labels by confidence minus the entropy change they cause, and
//! keep the top fraction.

use gttt::annotator::{AnnotationRecord, Provenance};
use gttt::ttt::{coe, filter_annotations, filter_scores, FilterConfig};

fn record(node_id: usize, pseudo_label: usize, confidence: f64) -> AnnotationRecord {
    AnnotationRecord {
        node_id,
        pseudo_label,
        confidence,
        provenance: Provenance::Llm,
        raw_response: None,
        retries: 0,
        fallback: false,
    }
}

pub fn run_example() -> gttt::Result<()> {
    // class 0 dominates; the lone class-2 label raises the entropy most
    let records = vec![
        record(0, 0, 95.0),
        record(1, 0, 90.0),
        record(2, 0, 85.0),
        record(3, 1, 80.0),
        record(4, 1, 92.0),
        record(5, 2, 97.0),
    ];
    let labels: Vec<usize> = records.iter().map(|r| r.pseudo_label).collect();
    for label in 0..3 {
        println!("removing one class-{label} label changes the entropy by {:+.4}", coe(&labels, label)?);
    }

    let cfg = FilterConfig {
        gamma: 0.5,
        keep_ratio: 0.5,
    };
    let scores = filter_scores(&records, cfg.gamma)?;
    for (r, s) in records.iter().zip(&scores) {
        println!("node {} label {} conf {:.0} score {s:.4}", r.node_id, r.pseudo_label, r.confidence);
    }
    let kept = filter_annotations(&records, &cfg)?;
    let ids: Vec<usize> = kept.iter().map(|r| r.node_id).collect();
    println!("kept {} of {}: {ids:?}", cfg.keep_count(records.len()), records.len());
    Ok(())
}

fn main() -> gttt::Result<()> {
    run_example()
}
