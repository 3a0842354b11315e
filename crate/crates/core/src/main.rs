use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gttt::app::{self, Axis, RunConfig};
use gttt::ttt::RunStatus;
use gttt::{Error, Result};

#[derive(Parser)]
#[command(name = "gttt", version, about = "Test-time training for graph node classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the root seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Pre-train on the source split and write a checkpoint.
    Pretrain(Common),
    /// Select, annotate and adapt.
    Run {
        #[command(flatten)]
        common: Common,
        /// Pre-train first instead of loading the checkpoint.
        #[arg(long)]
        pretrain: bool,
        /// Overrides the selection budget.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Sweep one axis over several seeds.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// selection, prompts, filter, stages or oracle_acc.
        #[arg(long)]
        axis: Option<String>,
    },
    /// Evaluate the generalization bounds.
    Bounds(Common),
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Pretrain(common) => {
            let cfg = load(&common)?;
            let (_, m) = app::cmd_pretrain(&cfg)?;
            println!("pretrained: test accuracy {:.4} -> {}", m.acc_test, cfg.out.display());
        }
        Command::Run {
            common,
            pretrain,
            budget,
        } => {
            let mut cfg = load(&common)?;
            if let Some(b) = budget {
                cfg.selection.budget = Some(b);
            }
            let r = app::cmd_run(&cfg, pretrain)?;
            let m = &r.metrics;
            println!(
                "accuracy {:.4} -> {:.4} with {}/{} annotations -> {}",
                m.acc_pretrained,
                m.acc_final,
                m.budget_used,
                m.budget,
                cfg.out.join(app::METRICS_FILE).display()
            );
            if m.status == RunStatus::Failed {
                if let Some(f) = &m.failure {
                    eprintln!("error: {} failed: {}", f.stage, f.message);
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::Ablate { common, axis } => {
            let cfg = load(&common)?;
            let axis: Axis = match axis {
                Some(a) => a.parse()?,
                None => cfg
                    .ablate
                    .axis
                    .ok_or_else(|| Error::Config("no ablation axis: pass --axis or set ablate.axis".into()))?,
            };
            let rows = app::cmd_ablate(&cfg, axis)?;
            let bad = rows.iter().filter(|r| r.status != "ok").count();
            println!(
                "{} rows ({bad} not ok) -> {}",
                rows.len(),
                cfg.out.join(app::ablation_csv_name(axis)).display()
            );
        }
        Command::Bounds(common) => {
            let params = app::load_bound_params(&common.config)?;
            let out = common.out.unwrap_or_else(|| PathBuf::from("out"));
            let r = app::cmd_bounds(&params, &out)?;
            println!(
                "theorem 1 bound {:.4}; best weighted bound {:.4} vs {:.4} without labeled test data",
                r.theorem1, r.theorem2.min, r.theorem2.ftt
            );
            if !r.theorem2.holds {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(app::exit_code(&e) as u8)
        }
    }
}
