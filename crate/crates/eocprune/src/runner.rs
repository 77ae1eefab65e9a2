//! Experiment runners: single prune-then-train runs and resumable
//! depth × sparsity sweeps with deterministic CSV output.

use crate::config::{DatasetConfig, ExperimentConfig, RunRecord, RunStatus};
use crate::data::{load_mnist, synthetic_split};
use crate::error::{invalid, Result};
use crate::nnet::{
    forward, init_params, loss_and_grads, sgd_step, ArchSpec, Batch, ParamSet, Tensor,
};
use crate::pruning::{
    global_topk_mask, rescale_factors, saliency_magnitude, saliency_snip, Mask, PruneCriterion,
};
use crate::rng::stream_rng;
use rand::Rng;
use rayon::prelude::*;
use std::path::Path;
use std::time::Instant;

/// Resolve the dataset to (train, test). MNIST reads IDX files from the
/// configured dir, else `EOCPRUNE_DATA_DIR`, else `./data`.
pub fn load_dataset(cfg: &ExperimentConfig) -> Result<(Batch, Batch)> {
    match &cfg.dataset {
        DatasetConfig::Mnist { dir } => {
            let dir = dir.clone().unwrap_or_else(|| {
                std::env::var_os("EOCPRUNE_DATA_DIR")
                    .map(Into::into)
                    .unwrap_or_else(|| "data".into())
            });
            load_mnist(&dir)
        }
        DatasetConfig::Synthetic {
            classes,
            dim,
            train,
            test,
            margin,
        } => synthetic_split(*classes, *dim, *train, *test, *margin, cfg.seed),
    }
}

fn batch_shape(arch: &ArchSpec, n: usize) -> Vec<usize> {
    match arch.kind {
        crate::nnet::ArchKind::Cnn1d | crate::nnet::ArchKind::ResnetCnn1d => {
            vec![n, arch.in_channels, arch.spatial]
        }
        _ => vec![n, arch.input_dim],
    }
}

fn take_rows(src: &Batch, idx: &[usize], arch: &ArchSpec) -> Batch {
    let dim = src.inputs.numel() / src.len();
    let mut data = Vec::with_capacity(idx.len() * dim);
    let mut labels = Vec::with_capacity(idx.len());
    for &i in idx {
        data.extend_from_slice(&src.inputs.data[i * dim..(i + 1) * dim]);
        labels.push(src.labels[i]);
    }
    Batch {
        inputs: Tensor {
            shape: batch_shape(arch, idx.len()),
            data,
        },
        labels,
    }
}

/// Fraction of test points whose argmax logit matches the label.
pub fn evaluate_accuracy(
    arch: &ArchSpec,
    params: &ParamSet,
    mask: Option<&Mask>,
    scale: Option<&[Vec<f64>]>,
    test: &Batch,
) -> Result<f64> {
    if test.is_empty() {
        return Err(invalid("empty test set"));
    }
    let mask_layers = mask.map(|m| m.layers.as_slice());
    let chunk = 256;
    let n = test.len();
    let mut hits = 0usize;
    let mut at = 0usize;
    while at < n {
        let hi = (at + chunk).min(n);
        let idx: Vec<usize> = (at..hi).collect();
        let part = take_rows(test, &idx, arch);
        let pass = forward(arch, params, mask_layers, scale, &part)?;
        let logits = pass.logits();
        let classes = arch.classes;
        for (b, &label) in part.labels.iter().enumerate() {
            let row = &logits.data[b * classes..(b + 1) * classes];
            let best = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            if best == label {
                hits += 1;
            }
        }
        at = hi;
    }
    Ok(hits as f64 / n as f64)
}

/// Prune at initialization, optionally rescale back to the EOC, train with
/// SGD, evaluate. Non-finite losses abort with a partial `Failed` record.
pub fn run_prune_train(cfg: &ExperimentConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let init = cfg.init.resolve(cfg.arch.act)?;
    let arch = cfg.arch_spec(cfg.arch.depth)?;
    let (train, test) = load_dataset(cfg)?;
    let params = init_params(&arch, init.sigma_w, init.sigma_b, cfg.seed)?;

    let sal = match cfg.pruning.criterion {
        PruneCriterion::Magnitude => saliency_magnitude(&params),
        PruneCriterion::Snip => {
            let mut rng = stream_rng(cfg.seed, 0x511e);
            let idx: Vec<usize> = (0..cfg.training.batch.min(train.len()))
                .map(|_| rng.random_range(0..train.len()))
                .collect();
            saliency_snip(&arch, &params, &take_rows(&train, &idx, &arch))?
        }
    };
    let (mask, report) = global_topk_mask(&sal, cfg.pruning.sparsity)?;
    let scale = if cfg.pruning.rescale {
        Some(rescale_factors(&params, &mask)?.as_scale(init.sigma_w))
    } else {
        None
    };

    let mut record = RunRecord {
        config_hash: cfg.hash(),
        depth: cfg.arch.depth,
        sparsity: cfg.pruning.sparsity,
        status: RunStatus::Ok,
        error: None,
        losses: Vec::new(),
        test_accuracy: 0.0,
        prune_report: Some(report),
        wall_secs: 0.0,
    };

    let mut params = params;
    let mask_layers = Some(mask.layers.as_slice());
    let mut rng = stream_rng(cfg.seed, 0xba7c);
    for it in 0..cfg.training.iterations {
        let idx: Vec<usize> = (0..cfg.training.batch)
            .map(|_| rng.random_range(0..train.len()))
            .collect();
        let batch = take_rows(&train, &idx, &arch);
        let (loss, grads) =
            match loss_and_grads(&arch, &params, mask_layers, scale.as_deref(), &batch) {
                Ok(out) => out,
                Err(e @ crate::error::Error::NumericOverflow(_)) => {
                    record.status = RunStatus::Failed;
                    record.error = Some(format!("{e} at iteration {it}"));
                    record.wall_secs = start.elapsed().as_secs_f64();
                    return Ok(record);
                }
                Err(e) => return Err(e),
            };
        if !loss.is_finite() {
            record.status = RunStatus::Failed;
            record.error = Some(format!("non-finite loss at iteration {it}"));
            record.wall_secs = start.elapsed().as_secs_f64();
            return Ok(record);
        }
        if it % cfg.training.record_every == 0 || it + 1 == cfg.training.iterations {
            record.losses.push((it, loss));
        }
        sgd_step(&mut params, &grads, cfg.training.lr, mask_layers)?;
    }

    record.test_accuracy = evaluate_accuracy(&arch, &params, Some(&mask), scale.as_deref(), &test)?;
    record.wall_secs = start.elapsed().as_secs_f64();
    Ok(record)
}

fn record_path(dir: &Path, hash: &str) -> std::path::PathBuf {
    dir.join("records").join(format!("{hash}.json"))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// The per-cell config: depth and sparsity overridden, sweep grid dropped
/// so the hash keys exactly one cell.
pub fn cell_config(base: &ExperimentConfig, depth: usize, sparsity: f64) -> ExperimentConfig {
    let mut cfg = base.clone();
    cfg.arch.depth = depth;
    cfg.pruning.sparsity = sparsity;
    cfg.sweep = None;
    cfg
}

/// Run every (depth, sparsity) cell of `cfg.sweep` in parallel. Completed
/// cells (a parseable record file under `output_dir/records/`) are reused;
/// per-cell failures become `Failed` rows and the sweep continues. Rows
/// come back in grid order: depths outer, sparsities inner.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let grid = cfg.sweep.as_ref().ok_or_else(|| invalid("config has no sweep grid"))?;
    let cells: Vec<(usize, f64)> = grid
        .depths
        .iter()
        .flat_map(|&d| grid.sparsities.iter().map(move |&s| (d, s)))
        .collect();
    let records: Vec<RunRecord> = cells
        .par_iter()
        .map(|&(depth, sparsity)| {
            let cell = cell_config(cfg, depth, sparsity);
            let hash = cell.hash();
            let path = record_path(&cfg.output_dir, &hash);
            if let Ok(bytes) = std::fs::read(&path) {
                if let Ok(rec) = serde_json::from_slice::<RunRecord>(&bytes) {
                    return rec;
                }
            }
            let rec = match run_prune_train(&cell) {
                Ok(rec) => rec,
                Err(e) => RunRecord {
                    config_hash: hash,
                    depth,
                    sparsity,
                    status: RunStatus::Failed,
                    error: Some(e.to_string()),
                    losses: Vec::new(),
                    test_accuracy: f64::NAN,
                    prune_report: None,
                    wall_secs: 0.0,
                },
            };
            if let Ok(bytes) = serde_json::to_vec_pretty(&rec) {
                let _ = write_atomic(&path, &bytes);
            }
            rec
        })
        .collect();
    Ok(records)
}

/// Sweep table as CSV. Wall time is deliberately omitted so identical
/// configs and seeds give identical bytes.
pub fn sweep_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("depth,sparsity,status,test_accuracy,kept,config_hash,error\n");
    for r in records {
        let status = match r.status {
            RunStatus::Ok => "ok",
            RunStatus::Failed => "failed",
        };
        let acc = if r.test_accuracy.is_finite() {
            format!("{:.4}", r.test_accuracy)
        } else {
            String::new()
        };
        let kept = r
            .prune_report
            .as_ref()
            .map(|p| p.kept.to_string())
            .unwrap_or_default();
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.depth, r.sparsity, status, acc, kept, r.config_hash, err
        ));
    }
    out
}

/// Accuracy grid aligned to the sweep axes (NaN for missing/failed cells),
/// ready for the heatmap emitter.
pub fn accuracy_grid(
    records: &[RunRecord],
    depths: &[usize],
    sparsities: &[f64],
) -> Vec<Vec<f64>> {
    depths
        .iter()
        .map(|&d| {
            sparsities
                .iter()
                .map(|&s| {
                    records
                        .iter()
                        .find(|r| r.depth == d && (r.sparsity - s).abs() < 1e-12)
                        .map(|r| match r.status {
                            RunStatus::Ok => r.test_accuracy,
                            RunStatus::Failed => f64::NAN,
                        })
                        .unwrap_or(f64::NAN)
                })
                .collect()
        })
        .collect()
}
