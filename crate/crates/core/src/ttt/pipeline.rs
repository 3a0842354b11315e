use serde::{Deserialize, Serialize};

use super::filter::filter_annotations;
use super::stages::{stage1_finetune, stage2_selftrain, StageReport, TttConfig};
use super::weight::GaussianWeightState;
use crate::annotator::{
    annotate_llm, annotate_oracle, label_agreement, AnnotationRecord, BudgetLedger, ChatTransport, LlmConfig,
    LlmContext, NodeError, OracleConfig, Shot,
};
use crate::error::{Error, Result};
use crate::gnn::GcnModel;
use crate::graph::{DataSplit, Graph, NormAdj};
use crate::selection::{select_nodes, SelectionConfig};
use crate::seed;

/// Source of pseudo-labels for one run.
#[derive(Clone, Copy)]
pub enum Annotator<'a> {
    Oracle(&'a OracleConfig),
    Llm {
        cfg: &'a LlmConfig,
        transport: &'a dyn ChatTransport,
        categories: &'a [String],
        shots: &'a [Shot],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageFailure {
    pub stage: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub selection: SelectionConfig,
    pub ttt: TttConfig,
}

/// Outcome of one adaptation run. Accuracies are on the whole test mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub seed: u64,
    pub status: RunStatus,
    pub failure: Option<StageFailure>,
    pub acc_pretrained: f64,
    pub acc_stage1: Option<f64>,
    pub acc_stage2: Option<f64>,
    pub acc_final: f64,
    pub budget: usize,
    pub budget_used: usize,
    pub token_estimate: u64,
    /// Fraction of pseudo-labels equal to the true label.
    pub llm_agreement: Option<f64>,
    pub selected: Vec<usize>,
    pub filtered: Vec<usize>,
    pub annotation_errors: Vec<NodeError>,
    pub annotation_partial: bool,
    pub stage1: Option<StageReport>,
    pub stage2: Option<StageReport>,
    pub weight_state: Option<GaussianWeightState>,
    pub config: RunSettings,
}

impl Metrics {
    fn fail(&mut self, stage: &str, e: &Error) {
        self.status = RunStatus::Failed;
        self.failure = Some(StageFailure {
            stage: stage.into(),
            message: e.to_string(),
        });
    }
}

/// Select, annotate, filter, then adapt in two stages.
///
/// Invalid configuration is an `Err`. Failures inside a stage return the
/// model as it was before that stage, with `status = failed`.
#[allow(clippy::too_many_arguments)]
pub fn run_llmttt(
    model: GcnModel,
    g: &Graph,
    adj: &NormAdj,
    split: &DataSplit,
    sel_cfg: &SelectionConfig,
    annotator: Annotator<'_>,
    cfg: &TttConfig,
) -> Result<(GcnModel, Metrics)> {
    cfg.validate()?;
    let test = &split.test_mask;
    if test.len() != g.num_nodes() {
        return Err(Error::Shape("split does not match graph".into()));
    }
    sel_cfg.validate(test.iter().filter(|&&t| t).count())?;

    let labels = g.labels();
    let pred = model.forward(adj, g.features())?;
    let acc_pretrained = pred.accuracy(labels, test);
    let ledger = BudgetLedger::new(sel_cfg.budget);
    let mut m = Metrics {
        seed: cfg.seed,
        status: RunStatus::Ok,
        failure: None,
        acc_pretrained,
        acc_stage1: None,
        acc_stage2: None,
        acc_final: acc_pretrained,
        budget: sel_cfg.budget,
        budget_used: 0,
        token_estimate: 0,
        llm_agreement: None,
        selected: Vec::new(),
        filtered: Vec::new(),
        annotation_errors: Vec::new(),
        annotation_partial: false,
        stage1: None,
        stage2: None,
        weight_state: None,
        config: RunSettings {
            selection: sel_cfg.clone(),
            ttt: cfg.clone(),
        },
    };

    let chosen = match select_nodes(g, &pred, test, sel_cfg, seed::substream(cfg.seed, seed::SELECTION)) {
        Ok(s) => s,
        Err(e) => {
            m.fail("selection", &e);
            return Ok((model, m));
        }
    };
    m.selected = chosen.clone();

    let annotated: Result<Vec<AnnotationRecord>> = match annotator {
        Annotator::Oracle(oc) => annotate_oracle(&chosen, labels, g.num_classes(), oc, &ledger),
        Annotator::Llm {
            cfg: lc,
            transport,
            categories,
            shots,
        } => {
            let model_labels = pred.argmax();
            let model_confidence = pred.max_probs();
            let ctx = LlmContext {
                graph: g,
                categories,
                shots,
                model_labels: &model_labels,
                model_confidence: &model_confidence,
            };
            annotate_llm(&chosen, ctx, lc, transport, &ledger).map(|out| {
                m.annotation_errors = out.errors;
                m.annotation_partial = out.partial;
                out.records
            })
        }
    };
    m.budget_used = ledger.used();
    m.token_estimate = ledger.token_estimate();
    let records = match annotated {
        Ok(r) => r,
        Err(e) => {
            m.fail("annotation", &e);
            return Ok((model, m));
        }
    };
    m.llm_agreement = label_agreement(&records, labels);

    // the entropy-change score needs at least two labels
    let kept = if records.len() >= 2 {
        match filter_annotations(&records, &cfg.filter) {
            Ok(k) => k,
            Err(e) => {
                m.fail("filter", &e);
                return Ok((model, m));
            }
        }
    } else {
        records
    };
    m.filtered = kept.iter().map(|r| r.node_id).collect();

    let mut model = model;
    if cfg.stage1 && !kept.is_empty() {
        match stage1_finetune(model.clone(), g, adj, &kept, cfg) {
            Ok((tuned, report)) => {
                model = tuned;
                m.stage1 = Some(report);
                let acc = model.forward(adj, g.features())?.accuracy(labels, test);
                m.acc_stage1 = Some(acc);
                m.acc_final = acc;
            }
            Err(e) => {
                m.fail("stage1", &e);
                return Ok((model, m));
            }
        }
    }

    if cfg.stage2 {
        let mut unlabeled = test.clone();
        for r in &kept {
            unlabeled[r.node_id] = false;
        }
        let adapted = GaussianWeightState::new(g.num_classes(), cfg.momentum, cfg.lambda_max)
            .and_then(|st| stage2_selftrain(model.clone(), g, adj, &unlabeled, cfg, st));
        match adapted {
            Ok((tuned, state, report)) => {
                model = tuned;
                m.stage2 = Some(report);
                m.weight_state = Some(state);
                let acc = model.forward(adj, g.features())?.accuracy(labels, test);
                m.acc_stage2 = Some(acc);
                m.acc_final = acc;
            }
            Err(e) => {
                m.fail("stage2", &e);
                return Ok((model, m));
            }
        }
    }
    Ok((model, m))
}
