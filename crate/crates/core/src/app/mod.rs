//! Config-driven commands behind the `gttt` binary.
//!
//! Every command is a pure function of its config and root seed; outputs are
//! rewritten byte for byte on a rerun.

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    AblateSection, AnnotatorSection, Axis, DatasetSection, FileSource, LlmSection, OracleSection, PretrainSection,
    RunConfig, SelectionSection, SplitSection,
};

use crate::annotator::{HttpTransport, PromptKind, Shot};
use crate::bounds::{bound_report, BoundParams, BoundReport};
use crate::error::{Error, Result};
use crate::gnn::{pretrain, GcnConfig, GcnModel, OptimState, PretrainReport};
use crate::graph::{generate_sbm, load_graph, make_ood_split, normalize_adjacency, DataSplit, Graph, NormAdj};
use crate::selection::{SelectionConfig, SelectionStrategy};
use crate::seed;
use crate::ttt::{run_llmttt, Annotator, Metrics, RunStatus, TttConfig};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const PRETRAIN_METRICS_FILE: &str = "pretrain_metrics.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const BOUNDS_FILE: &str = "bounds.json";

/// Process exit status for an error: 2 for bad input, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        2
    } else {
        1
    }
}

/// Dataset, split and normalized adjacency for one seed.
pub struct Prepared {
    pub graph: Graph,
    pub adj: NormAdj,
    pub split: DataSplit,
}

pub fn prepare(cfg: &RunConfig, seed: u64) -> Result<Prepared> {
    let graph = match (&cfg.dataset.sbm, &cfg.dataset.files) {
        (Some(p), None) => generate_sbm(p, seed::substream(seed, seed::DATASET))?,
        (None, Some(f)) => load_graph(&f.nodes, &f.edges, f.num_classes)?,
        _ => return Err(Error::Config("dataset needs exactly one source".into())),
    };
    let split = make_ood_split(&graph, &cfg.split.spec(), cfg.split.ratios(), seed::substream(seed, seed::SPLIT))?;
    let adj = normalize_adjacency(&graph);
    Ok(Prepared { graph, adj, split })
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainMetrics {
    pub seed: u64,
    pub epochs: usize,
    pub best_epoch: Option<usize>,
    pub final_loss: Option<f64>,
    pub acc_train: f64,
    pub acc_val: Option<f64>,
    pub acc_test: f64,
    pub model: GcnConfig,
    pub pretrain: PretrainSection,
}

/// Pre-trains a fresh model for `seed` without writing anything.
pub fn pretrain_model(cfg: &RunConfig, data: &Prepared, seed: u64) -> Result<(GcnModel, PretrainMetrics)> {
    let g = &data.graph;
    let model = GcnModel::new(g.feature_dim(), g.num_classes(), &cfg.model, seed::substream(seed, seed::INIT))?;
    let mut opt = OptimState::adam(cfg.pretrain.lr);
    let (model, report): (GcnModel, PretrainReport) =
        pretrain(model, g, &data.adj, &data.split, cfg.pretrain.epochs, &mut opt)?;
    let acc_test = model.forward(&data.adj, g.features())?.accuracy(g.labels(), &data.split.test_mask);
    let metrics = PretrainMetrics {
        seed,
        epochs: report.epochs,
        best_epoch: report.best_epoch,
        final_loss: report.final_loss,
        acc_train: report.train_acc,
        acc_val: report.val_acc,
        acc_test,
        model: cfg.model.clone(),
        pretrain: cfg.pretrain.clone(),
    };
    Ok((model, metrics))
}

/// Pre-trains on the source split and writes the checkpoint and metrics
/// into `cfg.out`.
pub fn cmd_pretrain(cfg: &RunConfig) -> Result<(GcnModel, PretrainMetrics)> {
    cfg.validate()?;
    let data = prepare(cfg, cfg.seed)?;
    let (model, metrics) = pretrain_model(cfg, &data, cfg.seed)?;
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    model.save(cfg.out.join(CHECKPOINT_FILE))?;
    write_json(&cfg.out, PRETRAIN_METRICS_FILE, &metrics)?;
    Ok((model, metrics))
}

/// Contents of `metrics.json`: the run metrics plus the resolved config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub metrics: Metrics,
    pub run_config: RunConfig,
}

fn default_shots(g: &Graph, split: &DataSplit, categories: &[String], count: usize, seed: u64) -> Result<Vec<Shot>> {
    let texts = g
        .texts()
        .ok_or_else(|| Error::Config("llm annotator needs node texts in the dataset".into()))?;
    let mut pool = split.train_ids();
    pool.shuffle(&mut seed::rng(seed::substream(seed, seed::LLM)));
    Ok(pool
        .into_iter()
        .take(count)
        .map(|i| Shot {
            text: texts[i].clone(),
            category: categories[g.labels()[i]].clone(),
        })
        .collect())
}

/// One adaptation run with everything but the TTT knobs fixed.
struct Cell<'a> {
    model: &'a GcnModel,
    data: &'a Prepared,
    seed: u64,
    selection: SelectionConfig,
    oracle: Option<OracleSection>,
    prompt: Option<PromptKind>,
    ttt: TttConfig,
}

fn run_cell(cfg: &RunConfig, cell: Cell<'_>) -> Result<(GcnModel, Metrics)> {
    let g = &cell.data.graph;
    let mut ttt = cell.ttt;
    ttt.seed = cell.seed;
    match (&cell.oracle, &cfg.annotator.llm) {
        (Some(o), _) => {
            let oc = o.to_config(seed::substream(cell.seed, seed::ORACLE));
            run_llmttt(
                cell.model.clone(),
                g,
                &cell.data.adj,
                &cell.data.split,
                &cell.selection,
                Annotator::Oracle(&oc),
                &ttt,
            )
        }
        (None, Some(l)) => {
            if l.categories.len() != g.num_classes() {
                return Err(Error::Config(format!(
                    "{} categories for {} classes",
                    l.categories.len(),
                    g.num_classes()
                )));
            }
            let mut client = l.client.clone();
            if let Some(p) = cell.prompt {
                client.prompt = p;
            }
            let shots = match &l.shots {
                Some(s) => s.clone(),
                None => default_shots(g, &cell.data.split, &l.categories, client.shots, cell.seed)?,
            };
            let transport = HttpTransport::from_config(&client)?;
            run_llmttt(
                cell.model.clone(),
                g,
                &cell.data.adj,
                &cell.data.split,
                &cell.selection,
                Annotator::Llm {
                    cfg: &client,
                    transport: &transport,
                    categories: &l.categories,
                    shots: &shots,
                },
                &ttt,
            )
        }
        (None, None) => Err(Error::Config("no annotator configured".into())),
    }
}

fn base_cell<'a>(cfg: &RunConfig, model: &'a GcnModel, data: &'a Prepared, seed: u64) -> Cell<'a> {
    let test_size = data.split.test_ids().len();
    Cell {
        model,
        data,
        seed,
        selection: cfg.selection.resolve(test_size),
        oracle: cfg.annotator.oracle.clone(),
        prompt: None,
        ttt: cfg.ttt.clone(),
    }
}

/// Adapts `model` on prepared data with the settings of `cfg` and root
/// `seed`, without writing anything.
pub fn run_prepared(cfg: &RunConfig, model: &GcnModel, data: &Prepared, seed: u64) -> Result<(GcnModel, Metrics)> {
    run_cell(cfg, base_cell(cfg, model, data, seed))
}

/// Runs the full pipeline and writes `metrics.json`. The model comes from
/// `cfg.out/checkpoint.json` unless `pretrain_first` is set.
///
/// A stage failure still writes the metrics; check `metrics.status`.
pub fn cmd_run(cfg: &RunConfig, pretrain_first: bool) -> Result<RunReport> {
    cfg.validate()?;
    let data = prepare(cfg, cfg.seed)?;
    let model = if pretrain_first {
        cmd_pretrain(cfg)?.0
    } else {
        let path = cfg.out.join(CHECKPOINT_FILE);
        if !path.exists() {
            return Err(Error::Config(format!(
                "no checkpoint at {}; run `gttt pretrain` first or pass --pretrain",
                path.display()
            )));
        }
        GcnModel::load(&path)?
    };
    let g = &data.graph;
    if model.in_dim() != g.feature_dim() || model.num_classes() != g.num_classes() {
        return Err(Error::Validation(format!(
            "checkpoint expects {} features / {} classes, dataset has {} / {}",
            model.in_dim(),
            model.num_classes(),
            g.feature_dim(),
            g.num_classes()
        )));
    }
    let (_, metrics) = run_prepared(cfg, &model, &data, cfg.seed)?;
    let report = RunReport {
        metrics,
        run_config: cfg.clone(),
    };
    write_json(&cfg.out, METRICS_FILE, &report)?;
    Ok(report)
}

/// One line of the ablation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub axis: String,
    pub axis_value: String,
    pub seed: u64,
    pub acc_pretrained: Option<f64>,
    pub acc_stage1: Option<f64>,
    pub acc_stage2: Option<f64>,
    /// `ok`, `failed` (a stage failed) or `error` (the cell could not run).
    pub status: String,
}

pub const FILTER_LEVELS: [&str; 3] = ["none", "confidence", "confidence_coe"];
pub const STAGE_LEVELS: [&str; 4] = ["neither", "stage1", "stage2", "both"];
pub const ORACLE_LEVELS: [f64; 3] = [0.6, 0.9, 1.0];

/// Axis values in table order.
pub fn axis_values(cfg: &RunConfig, axis: Axis) -> Result<Vec<String>> {
    let values = match axis {
        Axis::Selection => SelectionStrategy::all().into_iter().map(String::from).collect(),
        Axis::Prompts => {
            if cfg.annotator.llm.is_none() {
                return Err(Error::Config("the prompts axis needs an llm annotator".into()));
            }
            PromptKind::ALL.iter().map(|k| k.name().to_string()).collect()
        }
        Axis::Filter => FILTER_LEVELS.iter().map(|s| s.to_string()).collect(),
        Axis::Stages => STAGE_LEVELS.iter().map(|s| s.to_string()).collect(),
        Axis::OracleAcc => {
            let Some(o) = &cfg.annotator.oracle else {
                return Err(Error::Config("the oracle_acc axis needs the oracle annotator".into()));
            };
            for a in ORACLE_LEVELS {
                OracleSection { accuracy: a, ..o.clone() }.to_config(0).validate()?;
            }
            ORACLE_LEVELS.iter().map(|a| a.to_string()).collect()
        }
    };
    Ok(values)
}

fn apply_level(cell: &mut Cell<'_>, axis: Axis, value: &str) -> Result<()> {
    match axis {
        Axis::Selection => cell.selection.strategy = SelectionStrategy::try_from(value.to_string())?,
        Axis::Prompts => {
            cell.prompt = Some(
                PromptKind::ALL
                    .into_iter()
                    .find(|k| k.name() == value)
                    .ok_or_else(|| Error::Config(format!("unknown prompt {value:?}")))?,
            )
        }
        Axis::Filter => match value {
            "none" => cell.ttt.filter.keep_ratio = 1.0,
            "confidence" => cell.ttt.filter.gamma = 0.0,
            "confidence_coe" => {}
            _ => return Err(Error::Config(format!("unknown filter level {value:?}"))),
        },
        Axis::Stages => {
            let (s1, s2) = match value {
                "neither" => (false, false),
                "stage1" => (true, false),
                "stage2" => (false, true),
                "both" => (true, true),
                _ => return Err(Error::Config(format!("unknown stage level {value:?}"))),
            };
            cell.ttt.stage1 = s1;
            cell.ttt.stage2 = s2;
        }
        Axis::OracleAcc => {
            let a: f64 = value
                .parse()
                .map_err(|_| Error::Config(format!("bad oracle accuracy {value:?}")))?;
            if let Some(o) = cell.oracle.as_mut() {
                o.accuracy = a;
            }
        }
    }
    Ok(())
}

pub fn ablation_csv_name(axis: Axis) -> String {
    format!("ablate_{}.csv", axis.name())
}

/// Sweeps one axis over `cfg.ablate.seeds` seeds and writes
/// `ablate_<axis>.csv`. A failing cell becomes a row with its status; the
/// sweep continues.
pub fn cmd_ablate(cfg: &RunConfig, axis: Axis) -> Result<Vec<AblationRow>> {
    cfg.validate()?;
    let values = axis_values(cfg, axis)?;
    let seeds: Vec<u64> = (0..cfg.ablate.seeds as u64).map(|i| cfg.seed + i).collect();

    let pretrained: Vec<(u64, Result<(Prepared, GcnModel)>)> = seeds
        .par_iter()
        .map(|&s| {
            let out = prepare(cfg, s).and_then(|data| pretrain_model(cfg, &data, s).map(|(m, _)| (data, m)));
            (s, out)
        })
        .collect();

    let cells: Vec<(usize, &str)> = (0..pretrained.len())
        .flat_map(|k| values.iter().map(move |v| (k, v.as_str())))
        .collect();
    let rows = cells
        .par_iter()
        .map(|&(k, value)| {
            let (s, prepared) = &pretrained[k];
            let mut row = AblationRow {
                axis: axis.name().into(),
                axis_value: value.into(),
                seed: *s,
                acc_pretrained: None,
                acc_stage1: None,
                acc_stage2: None,
                status: "error".into(),
            };
            let Ok((data, model)) = prepared else {
                return row;
            };
            let mut cell = base_cell(cfg, model, data, *s);
            let outcome = apply_level(&mut cell, axis, value).and_then(|_| run_cell(cfg, cell));
            if let Ok((_, m)) = outcome {
                row.acc_pretrained = Some(m.acc_pretrained);
                row.acc_stage1 = m.acc_stage1;
                row.acc_stage2 = m.acc_stage2;
                row.status = match m.status {
                    RunStatus::Ok => "ok",
                    RunStatus::Failed => "failed",
                }
                .into();
            }
            row
        })
        .collect::<Vec<_>>();

    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let path = cfg.out.join(ablation_csv_name(axis));
    let mut w = csv::Writer::from_path(&path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

/// Reads bound parameters from TOML; an unreadable file is a config error.
pub fn load_bound_params(path: impl AsRef<Path>) -> Result<BoundParams> {
    config::read_toml(path.as_ref())
}

/// Evaluates the bounds and writes `bounds.json` into `out`.
pub fn cmd_bounds(params: &BoundParams, out: &Path) -> Result<BoundReport> {
    let report = bound_report(params)?;
    write_json(out, BOUNDS_FILE, &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(out: &Path) -> RunConfig {
        let mut cfg = RunConfig::from_toml_str(
            r#"
            [dataset.sbm]
            block_sizes = [40, 40]
            p_intra = 0.15
            p_inter = 0.02
            class_means = [[0.0, 0.0], [1.0, 0.5]]

            [pretrain]
            epochs = 20

            [annotator.oracle]
            accuracy = 0.9

            [ttt]
            stage1_epochs = 3
            stage2_epochs = 3
            "#,
        )
        .unwrap();
        cfg.out = out.to_path_buf();
        cfg
    }

    #[test]
    fn run_without_checkpoint_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = cmd_run(&small(dir.path()), false).unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn pretrain_then_run() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(dir.path());
        cmd_pretrain(&cfg).unwrap();
        let r = cmd_run(&cfg, false).unwrap();
        assert_eq!(r.metrics.status, RunStatus::Ok);
        assert!(r.metrics.budget_used <= r.metrics.budget);
        assert!(dir.path().join(METRICS_FILE).exists());
    }

    #[test]
    fn stages_axis_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(dir.path());
        cfg.ablate.seeds = 2;
        let rows = cmd_ablate(&cfg, Axis::Stages).unwrap();
        assert_eq!(rows.len(), 8);
        let neither = rows.iter().find(|r| r.axis_value == "neither").unwrap();
        assert_eq!((neither.acc_stage1, neither.acc_stage2), (None, None));
        assert!(rows.iter().all(|r| r.status == "ok"));
    }

    #[test]
    fn prompts_axis_needs_llm() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(cmd_ablate(&small(dir.path()), Axis::Prompts), Err(Error::Config(_))));
    }
}
