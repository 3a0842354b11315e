//! Prompt templates for chat annotators.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FEW_SHOT_HEADER: &str = "# Information for the first few-shot samples";
const ANSWER_REQUEST: &str = "What's the category of this paper Output your answer together with a confidence \
ranging from 0 to 100, in the form of a list of python dicts like \
[{\"answer\":<answer_here>, \"confidence\": <confidence_here>}]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    ZeroShot,
    FewShot,
    FewShotGnn,
    #[serde(rename = "few_shot_2hop")]
    FewShot2Hop,
}

impl PromptKind {
    pub const ALL: [PromptKind; 4] = [
        PromptKind::ZeroShot,
        PromptKind::FewShot,
        PromptKind::FewShotGnn,
        PromptKind::FewShot2Hop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PromptKind::ZeroShot => "zero_shot",
            PromptKind::FewShot => "few_shot",
            PromptKind::FewShotGnn => "few_shot_gnn",
            PromptKind::FewShot2Hop => "few_shot_2hop",
        }
    }

    fn uses_shots(self) -> bool {
        self != PromptKind::ZeroShot
    }
}

/// A labelled example shown before the query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shot {
    pub text: String,
    pub category: String,
}

/// The pretrained model's guess for the queried node.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnHint {
    pub label: String,
    /// On the 0-100 scale.
    pub confidence: f64,
}

#[derive(Debug, Clone, Default)]
pub struct PromptInput<'a> {
    pub node_text: &'a str,
    pub categories: &'a [String],
    pub shots: &'a [Shot],
    pub gnn_hint: Option<GnnHint>,
    pub neighbor_summary: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Neighbor {
    pub content: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

/// Render the annotation prompt of the given kind.
pub fn build_prompt(kind: PromptKind, input: &PromptInput<'_>) -> Result<String> {
    if input.categories.is_empty() {
        return Err(Error::Validation("prompt needs at least one category".into()));
    }
    if kind.uses_shots() && input.shots.is_empty() {
        return Err(Error::Validation(format!("{} prompt needs few-shot samples", kind.name())));
    }
    let hint = match (kind, &input.gnn_hint) {
        (PromptKind::FewShotGnn, None) => {
            return Err(Error::Validation("few_shot_gnn prompt needs a GNN hint".into()));
        }
        (PromptKind::FewShotGnn, Some(h)) => Some(h),
        _ => None,
    };
    let summary = match (kind, input.neighbor_summary) {
        (PromptKind::FewShot2Hop, None) => {
            return Err(Error::Validation("few_shot_2hop prompt needs a neighbor summary".into()));
        }
        (PromptKind::FewShot2Hop, Some(s)) => Some(s),
        _ => None,
    };

    let mut out = String::new();
    if kind.uses_shots() {
        out.push_str(FEW_SHOT_HEADER);
        out.push('\n');
        for shot in input.shots {
            let _ = write!(out, "Paper:\n{}\nCategory: {}\n", shot.text, shot.category);
        }
        out.push('\n');
    }
    let _ = write!(out, "Paper:\n{}\n", input.node_text);
    if let Some(s) = summary {
        let _ = writeln!(out, "Neighbor Summary: {s}");
    }
    let _ = write!(
        out,
        "Task:\nThere are following categories:\n[{}]\n{ANSWER_REQUEST}",
        input.categories.join(", ")
    );
    if let Some(h) = hint {
        let _ = write!(
            out,
            ".\nThe psuedo label generated by GCN is: {} The confidence of this pseudo-label is {:.0}. \
             Use this information to help your prediction.",
            h.label, h.confidence
        );
    }
    Ok(out)
}

/// Prompt asking for a short summary of a node's neighborhood.
pub fn neighbor_summary_prompt(neighbors: &[Neighbor]) -> String {
    let list = serde_json::to_string(neighbors).expect("neighbor list serializes");
    format!(
        "The following list records some papers related to the current one.\n\
         # Lists of samples neighboring nodes\n\
         {list}\n\
         # Instruction\n\
         Please summarize the information above with a short paragraph, find some common points \
         which can reflect the category of this paper"
    )
}
