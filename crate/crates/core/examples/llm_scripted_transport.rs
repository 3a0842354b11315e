//! Drive the chat annotator with an in-process transport instead of HTTP.
//! Swap in `HttpTransport::from_config` to talk to a real endpoint.

use std::sync::atomic::{AtomicUsize, Ordering};

use gttt::annotator::{annotate_llm, render_response, BudgetLedger, ChatTransport, LlmConfig, LlmContext, PromptKind};
use gttt::graph::Graph;
use ndarray::Array2;

/// Answers from a keyword in the prompt; every fifth call returns prose.
struct Keyword {
    calls: AtomicUsize,
}

impl ChatTransport for Keyword {
    fn complete(&self, prompt: &str) -> gttt::Result<String> {
        if self.calls.fetch_add(1, Ordering::Relaxed) % 5 == 4 {
            return Ok("I am not sure.".into());
        }
        let query = prompt.rsplit("Title:").next().unwrap_or_default();
        let answer = if query.contains("graph") { "Graphs" } else { "Vision" };
        Ok(render_response(answer, 80.0))
    }
}

pub fn run_example() -> gttt::Result<()> {
    let texts: Vec<String> = (0..12)
        .map(|i| if i % 2 == 0 { format!("Title: graph paper {i}") } else { format!("Title: image paper {i}") })
        .collect();
    let labels: Vec<usize> = (0..12).map(|i| i % 2).collect();
    let edges: Vec<(usize, usize)> = (0..10).map(|i| (i, i + 2)).collect();
    let g = Graph::from_edges(Array2::zeros((12, 1)), labels, 2, &edges, Some(texts))?;

    let categories = vec!["Graphs".to_string(), "Vision".to_string()];
    let model_labels = vec![0; 12];
    let model_confidence = vec![0.6; 12];
    let ctx = LlmContext {
        graph: &g,
        categories: &categories,
        shots: &[],
        model_labels: &model_labels,
        model_confidence: &model_confidence,
    };
    let cfg = LlmConfig {
        prompt: PromptKind::ZeroShot,
        workers: 1,
        backoff_ms: 0,
        ..LlmConfig::default()
    };
    let transport = Keyword {
        calls: AtomicUsize::new(0),
    };
    let ledger = BudgetLedger::new(8);
    let nodes: Vec<usize> = (0..12).collect();
    let out = annotate_llm(&nodes, ctx, &cfg, &transport, &ledger)?;

    for r in &out.records {
        println!(
            "node {:2}: {} ({:.0}) retries {} fallback {}",
            r.node_id, categories[r.pseudo_label], r.confidence, r.retries, r.fallback
        );
    }
    println!(
        "{} requests, partial {}, budget {}/{}, ~{} tokens",
        out.requests,
        out.partial,
        ledger.used(),
        ledger.budget(),
        ledger.token_estimate()
    );
    Ok(())
}

fn main() -> gttt::Result<()> {
    run_example()
}
