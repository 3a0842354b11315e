//! Pseudo-label providers and the annotation budget.
//!
//! Two annotators share one record type: a seeded noisy oracle that flips a
//! fixed fraction of ground-truth labels, and a client for OpenAI-compatible
//! chat endpoints that renders a prompt per node and parses the returned
//! `[{"answer": ..., "confidence": ...}]` object.

mod cache;
mod ledger;
mod llm;
mod oracle;
mod parse;
mod prompt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cache::{AnnotationCache, SummaryCache};
pub use ledger::{BudgetLedger, LedgerSnapshot};
pub use llm::{
    annotate_llm, token_estimate, ChatTransport, HttpTransport, LlmConfig, LlmContext, LlmOutcome, NodeError,
    API_KEY_ENV, BASE_URL_ENV, FALLBACK_CONFIDENCE,
};
pub use oracle::{annotate_oracle, perturbed_count, OracleConfig};
pub use parse::{parse_llm_response, render_response};
pub use prompt::{build_prompt, neighbor_summary_prompt, GnnHint, Neighbor, PromptInput, PromptKind, Shot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Oracle,
    Llm,
}

/// One pseudo-label with its confidence on the 0-100 scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub node_id: usize,
    pub pseudo_label: usize,
    pub confidence: f64,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
    /// Re-requests after unparseable responses.
    #[serde(default)]
    pub retries: usize,
    /// Label came from the pretrained model after every attempt failed to parse.
    #[serde(default)]
    pub fallback: bool,
}

impl AnnotationRecord {
    pub fn validate(&self, num_classes: usize) -> Result<()> {
        if self.pseudo_label >= num_classes {
            return Err(Error::Validation(format!(
                "node {}: label {} outside 0..{num_classes}",
                self.node_id, self.pseudo_label
            )));
        }
        if !(0.0..=100.0).contains(&self.confidence) {
            return Err(Error::Validation(format!(
                "node {}: confidence {} outside [0, 100]",
                self.node_id, self.confidence
            )));
        }
        Ok(())
    }
}

/// Ten percent of the test set, rounded down, and at least one.
pub fn default_budget(test_size: usize) -> usize {
    (test_size / 10).max(1)
}

/// Fraction of records whose pseudo-label equals the true label.
pub fn label_agreement(records: &[AnnotationRecord], labels: &[usize]) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let hits = records.iter().filter(|r| labels.get(r.node_id) == Some(&r.pseudo_label)).count();
    Some(hits as f64 / records.len() as f64)
}
