//! Command-line surface of the `eocprune` binary. Every subcommand prints
//! JSON (or CSV/SVG files where noted) and exits nonzero with a
//! machine-readable JSON error on failure.

use crate::config::ExperimentConfig;
use crate::data::{parse_idx, MNIST_FILES};
use crate::error::{invalid, Error, Result};
use crate::figures::{accuracy_grid_svg, heatmap_svg, line_plot_svg};
use crate::gaussfield::{eoc_solve, ActivationKind};
use crate::meanfield::{mbp_bound, propagate_ffnn, theorem1_bound, LogBase, QuantileScaling};
use crate::nnet::init_params;
use crate::pruning::{
    estimate_expected_scr, gaussian_batch, global_topk_mask, input_variance_for_q,
    saliency_magnitude, saliency_snip, PruneCriterion,
};
use crate::runner::{accuracy_grid, load_dataset, run_prune_train, sweep, sweep_csv};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write as _;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "eocprune", version, about = "Edge-of-chaos pruning toolkit")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the edge of chaos at a given bias variance.
    Eoc {
        #[command(subcommand)]
        cmd: EocCmd,
    },
    /// Signal-propagation diagnostics.
    Meanfield {
        #[command(subcommand)]
        cmd: MeanfieldCmd,
    },
    /// Pruning reports on a configured network.
    Prune {
        #[command(subcommand)]
        cmd: PruneCmd,
    },
    /// Critical-sparsity estimation.
    Scr {
        #[command(subcommand)]
        cmd: ScrCmd,
    },
    /// Theoretical sparsity bounds.
    Bound {
        #[command(subcommand)]
        cmd: BoundCmd,
    },
    /// Prune at initialization, train, evaluate; write a run record.
    Train(ConfigArg),
    /// Depth × sparsity sweep; writes CSV, a grid JSON, and an SVG.
    Sweep(ConfigArg),
    /// Render a stored table/profile as SVG.
    Plot(PlotArgs),
    /// Fetch/verify the MNIST IDX files (explicit; runs never download).
    FetchMnist {
        #[arg(long, default_value = "data")]
        dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum EocCmd {
    Solve {
        #[arg(long)]
        act: ActivationKind,
        #[arg(long)]
        sigma_b: f64,
    },
}

#[derive(Subcommand)]
enum MeanfieldCmd {
    /// CSV trace of (q^l, c^l, q̃^l) under the configured init.
    Trace {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long, default_value_t = 0.6)]
        c0: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PruneCmd {
    Report {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Also write per-(layer, neuron) kept fractions as JSON rows.
        #[arg(long)]
        rows_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ScrCmd {
    Estimate {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long, default_value_t = 10)]
        trials: usize,
    },
}

#[derive(Subcommand)]
enum BoundCmd {
    /// Depth-driven upper bound on trainable sparsity.
    Thm1 {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        width: usize,
        #[arg(long, value_enum, default_value_t = BaseArg::E)]
        base: BaseArg,
    },
    /// Magnitude-pruning bound on the expected critical sparsity.
    Mbp {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        zeta: f64,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = ScalingArg::Gamma)]
        scaling: ScalingArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BaseArg {
    E,
    Ten,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScalingArg {
    /// Privileged-layer quantile argument scaled by 1/γ (faithful form).
    Gamma,
    /// 1/√γ variant; matches simulated expectations more closely.
    SqrtGamma,
}

#[derive(Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: PlotKind,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value = "eocprune")]
    title: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    /// JSON `[[f64,...],...]` → per-neuron heatmap.
    Heatmap,
    /// JSON `[["name",[f64,...]],...]` → per-layer line plot.
    Layers,
    /// JSON `{depths, sparsities, grid}` → accuracy heatmap.
    Grid,
}

fn write_atomic(path: &std::path::Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json"));
}

fn run_command(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eoc { cmd: EocCmd::Solve { act, sigma_b } } => {
            let edge = eoc_solve(act, sigma_b)?;
            print_json(&serde_json::json!({
                "act": act,
                "sigma_b": edge.sigma_b,
                "sigma_w": edge.sigma_w,
                "q_star": edge.q_star,
                "chi": edge.chi,
                "degenerate": edge.degenerate,
            }));
        }
        Command::Meanfield { cmd: MeanfieldCmd::Trace { cfg, c0, out } } => {
            let cfg = ExperimentConfig::load(&cfg.config)?;
            let init = cfg.init.resolve(cfg.arch.act)?;
            let q0 = init
                .edge
                .as_ref()
                .map(|e| input_variance_for_q(cfg.arch.act, init.sigma_b, init.sigma_w, e.q_star))
                .transpose()?
                .unwrap_or(1.0);
            let trace = propagate_ffnn(cfg.arch.act, init.sigma_b, init.sigma_w, q0, c0, cfg.arch.depth)?;
            let mut csv = String::from("layer,q,c,qtilde\n");
            for l in 0..trace.q.len() {
                csv.push_str(&format!(
                    "{},{:.12},{:.12},{:.12}\n",
                    l, trace.q[l], trace.c[l], trace.qtilde[l]
                ));
            }
            match out {
                Some(path) => {
                    write_atomic(&path, csv.as_bytes())?;
                    print_json(&serde_json::json!({"written": path}));
                }
                None => print!("{csv}"),
            }
        }
        Command::Prune { cmd: PruneCmd::Report { cfg, rows_out } } => {
            let cfg = ExperimentConfig::load(&cfg.config)?;
            let init = cfg.init.resolve(cfg.arch.act)?;
            let arch = cfg.arch_spec(cfg.arch.depth)?;
            let params = init_params(&arch, init.sigma_w, init.sigma_b, cfg.seed)?;
            let sal = match cfg.pruning.criterion {
                PruneCriterion::Magnitude => saliency_magnitude(&params),
                PruneCriterion::Snip => {
                    let (train, _) = load_dataset(&cfg)?;
                    let n = cfg.training.batch.min(train.len());
                    let part = crate::nnet::Batch {
                        inputs: crate::nnet::Tensor::from_vec(
                            &{
                                let mut s = train.inputs.shape.clone();
                                s[0] = n;
                                s
                            },
                            train.inputs.data[..n * (train.inputs.numel() / train.len())].to_vec(),
                        )?,
                        labels: train.labels[..n].to_vec(),
                    };
                    saliency_snip(&arch, &params, &part)?
                }
            };
            let (mask, report) = global_topk_mask(&sal, cfg.pruning.sparsity)?;
            if let Some(path) = rows_out {
                write_atomic(&path, serde_json::to_vec_pretty(&mask.row_kept_fractions())?.as_slice())?;
            }
            print_json(&serde_json::to_value(&report)?);
        }
        Command::Scr { cmd: ScrCmd::Estimate { cfg, trials } } => {
            let cfg = ExperimentConfig::load(&cfg.config)?;
            let init = cfg.init.resolve(cfg.arch.act)?;
            let arch = cfg.arch_spec(cfg.arch.depth)?;
            let q0 = init
                .edge
                .as_ref()
                .map(|e| input_variance_for_q(cfg.arch.act, init.sigma_b, init.sigma_w, e.q_star))
                .transpose()?
                .unwrap_or(1.0);
            let batch = cfg.training.batch;
            let source = move |s: u64| gaussian_batch(&arch, q0, batch, s);
            let arch2 = cfg.arch_spec(cfg.arch.depth)?;
            let est = estimate_expected_scr(
                &arch2,
                init.sigma_w,
                init.sigma_b,
                None,
                cfg.pruning.criterion,
                Some(&source),
                trials,
                cfg.seed,
            )?;
            print_json(&serde_json::to_value(&est)?);
        }
        Command::Bound { cmd } => match cmd {
            BoundCmd::Thm1 { kappa, depth, width, base } => {
                let base = match base {
                    BaseArg::E => LogBase::E,
                    BaseArg::Ten => LogBase::Ten,
                };
                let b = theorem1_bound(kappa, depth, width, base)?;
                print_json(&serde_json::json!({"value": b.value, "vacuous": b.vacuous}));
            }
            BoundCmd::Mbp { gamma, zeta, width, depth, scaling } => {
                let scaling = match scaling {
                    ScalingArg::Gamma => QuantileScaling::Gamma,
                    ScalingArg::SqrtGamma => QuantileScaling::SqrtGamma,
                };
                let v = mbp_bound(
                    gamma,
                    zeta,
                    width,
                    depth,
                    crate::meanfield::MBP_EPS_GRID,
                    crate::meanfield::MBP_X_GRID,
                    scaling,
                )?;
                print_json(&serde_json::json!({"value": v.value, "vacuous": v.vacuous}));
            }
        },
        Command::Train(cfg) => {
            let cfg = ExperimentConfig::load(&cfg.config)?;
            let rec = run_prune_train(&cfg)?;
            let path = cfg
                .output_dir
                .join("records")
                .join(format!("{}.json", rec.config_hash));
            write_atomic(&path, &serde_json::to_vec_pretty(&rec)?)?;
            print_json(&serde_json::to_value(&rec)?);
        }
        Command::Sweep(cfg) => {
            let cfg = ExperimentConfig::load(&cfg.config)?;
            let grid = cfg
                .sweep
                .clone()
                .ok_or_else(|| invalid("config has no sweep grid"))?;
            let records = sweep(&cfg)?;
            let csv = sweep_csv(&records);
            let csv_path = cfg.output_dir.join("sweep.csv");
            write_atomic(&csv_path, csv.as_bytes())?;
            let acc = accuracy_grid(&records, &grid.depths, &grid.sparsities);
            let grid_json = serde_json::json!({
                "depths": grid.depths,
                "sparsities": grid.sparsities,
                "grid": acc,
            });
            let grid_path = cfg.output_dir.join("grid.json");
            write_atomic(&grid_path, serde_json::to_vec_pretty(&grid_json)?.as_slice())?;
            let svg_path = cfg.output_dir.join("accuracy.svg");
            if let Some(svg) =
                accuracy_grid_svg(&grid.depths, &grid.sparsities, &acc, "test accuracy")
            {
                write_atomic(&svg_path, svg.as_bytes())?;
            }
            print_json(&serde_json::json!({
                "rows": records.len(),
                "csv": csv_path,
                "grid": grid_path,
                "svg": svg_path,
            }));
        }
        Command::Plot(args) => {
            let bytes = std::fs::read(&args.input)?;
            let svg = match args.kind {
                PlotKind::Heatmap => {
                    let rows: Vec<Vec<f64>> = serde_json::from_slice(&bytes)?;
                    heatmap_svg(&rows, &args.title)
                }
                PlotKind::Layers => {
                    let series: Vec<(String, Vec<f64>)> = serde_json::from_slice(&bytes)?;
                    line_plot_svg(&series, &args.title)
                }
                PlotKind::Grid => {
                    #[derive(serde::Deserialize)]
                    struct GridIn {
                        depths: Vec<usize>,
                        sparsities: Vec<f64>,
                        grid: Vec<Vec<f64>>,
                    }
                    let g: GridIn = serde_json::from_slice(&bytes)?;
                    accuracy_grid_svg(&g.depths, &g.sparsities, &g.grid, &args.title)
                }
            };
            match svg {
                Some(svg) => {
                    write_atomic(&args.output, svg.as_bytes())?;
                    print_json(&serde_json::json!({"written": args.output}));
                }
                None => {
                    eprintln!("warning: empty input, nothing to plot");
                    print_json(&serde_json::json!({"written": serde_json::Value::Null}));
                }
            }
        }
        Command::FetchMnist { dir } => fetch_mnist(&dir)?,
    }
    Ok(())
}

const MNIST_MIRRORS: [&str; 2] = [
    "https://storage.googleapis.com/cvdf-datasets/mnist",
    "https://ossci-datasets.s3.amazonaws.com/mnist",
];

/// Ensure the four IDX files exist in `dir` and have valid headers. Missing
/// files are recovered from local `.gz` siblings, else downloaded (the only
/// code path that touches the network, and only in this subcommand).
fn fetch_mnist(dir: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut statuses = Vec::new();
    for name in MNIST_FILES {
        let path = dir.join(name);
        let gz = dir.join(format!("{name}.gz"));
        if !path.exists() {
            if !gz.exists() {
                let mut fetched = false;
                for mirror in MNIST_MIRRORS {
                    let url = format!("{mirror}/{name}.gz");
                    let out = std::process::Command::new("curl")
                        .args(["-fsSL", "--max-time", "120", "-o"])
                        .arg(&gz)
                        .arg(&url)
                        .status();
                    if matches!(out, Ok(s) if s.success()) {
                        fetched = true;
                        break;
                    }
                }
                if !fetched {
                    return Err(invalid(format!(
                        "could not fetch {name}.gz; place it (or the raw file) in {}",
                        dir.display()
                    )));
                }
            }
            let mut decoder = flate2::read::GzDecoder::new(std::fs::File::open(&gz)?);
            let tmp = path.with_extension("tmp");
            let mut out = std::fs::File::create(&tmp)?;
            std::io::copy(&mut decoder, &mut out)?;
            out.flush()?;
            std::fs::rename(&tmp, &path)?;
        }
        // Verify by magic and payload size, not just presence.
        let bytes = std::fs::read(&path)?;
        let idx = parse_idx(&bytes)?;
        statuses.push(serde_json::json!({
            "file": name,
            "dims": idx.dims,
            "bytes": bytes.len(),
        }));
    }
    print_json(&serde_json::json!({"dir": dir, "files": statuses}));
    Ok(())
}

fn error_json(e: &Error) -> String {
    let kind = match e {
        Error::InvalidArgument(_) => "invalid_argument",
        Error::Convergence { .. } => "convergence",
        Error::BracketFailure(_) => "bracket_failure",
        Error::ShapeMismatch(_) => "shape_mismatch",
        Error::Format { .. } => "format",
        Error::NumericOverflow(_) => "numeric_overflow",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    };
    serde_json::json!({"error": e.to_string(), "kind": kind}).to_string()
}

/// Binary entry point: parse args, honor `EOCPRUNE_THREADS`, run, and map
/// failures to a JSON error on stderr with a nonzero exit.
pub fn run() -> std::process::ExitCode {
    if let Ok(threads) = std::env::var("EOCPRUNE_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run_command(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            std::process::ExitCode::FAILURE
        }
    }
}
