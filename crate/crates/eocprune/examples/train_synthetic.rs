//! A complete prune-at-init → rescale → train → evaluate run on synthetic
//! blobs, all driven by the same JSON config schema the CLI uses.

use eocprune::config::ExperimentConfig;
use eocprune::runner::run_prune_train;

fn main() -> eocprune::Result<()> {
    let cfg = ExperimentConfig::from_json(
        r#"{
        "arch": {"kind": "ffnn", "act": "tanh", "depth": 4, "width": 32},
        "init": {"phase": "eoc", "sigma_b": 0.3},
        "pruning": {"criterion": "snip", "sparsity": 0.5, "rescale": true},
        "training": {"lr": 0.2, "batch": 25, "iterations": 400, "record_every": 80},
        "dataset": {"kind": "synthetic", "classes": 4, "dim": 16,
                    "train": 400, "test": 200, "margin": 4.0},
        "seed": 3,
        "output_dir": "/tmp/eocprune-example"
    }"#,
    )?;
    let rec = run_prune_train(&cfg)?;
    println!("config {}  status {:?}", rec.config_hash, rec.status);
    for (it, loss) in &rec.losses {
        println!("  iter {it:>4}  loss {loss:.4}");
    }
    let rep = rec.prune_report.as_ref().unwrap();
    println!(
        "kept {}/{} weights, test accuracy {:.3}, {:.2}s",
        rep.kept, rep.total_weights, rec.test_accuracy, rec.wall_secs
    );
    Ok(())
}
