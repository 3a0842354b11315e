//! The library behind the `gttt` binary: parse a TOML config, pre-train to a
//! checkpoint, then run adaptation from it.

use gttt::app::{self, RunConfig};

const CONFIG: &str = r#"
seed = 3

[dataset.sbm]
block_sizes = [300, 300]
p_intra = 0.02
p_inter = 0.003
class_means = [[2.0, 0.0], [3.0, 0.0]]
noise_std = 1.0
degree_spread = 0.5

[split]
train = 0.4
val = 0.1
test = 0.4

[model]
hidden = 16

[pretrain]
epochs = 100

[annotator.oracle]
accuracy = 0.85

[selection]
budget = 30

[ttt]
stage1_epochs = 20
stage2_epochs = 10
"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut cfg = RunConfig::from_toml_str(CONFIG)?;
    cfg.out = dir.path().to_path_buf();

    let (_, pm) = app::cmd_pretrain(&cfg)?;
    println!("pretrained for {} epochs, test accuracy {:.4}", pm.epochs, pm.acc_test);

    let report = app::cmd_run(&cfg, false)?;
    let m = &report.metrics;
    println!("run: {:.4} -> {:.4} ({:?})", m.acc_pretrained, m.acc_final, m.status);

    let mut files: Vec<String> = std::fs::read_dir(dir.path())?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<std::io::Result<_>>()?;
    files.sort();
    println!("wrote {files:?}");
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
