//! Standard ResNets compound variance exponentially with depth, which
//! makes sensitivity pruning concentrate on late layers; the 1/√L branch
//! scaling keeps the per-layer profile flat.

use eocprune::gaussfield::ActivationKind;
use eocprune::meanfield::resnet_conditioning_theory;
use eocprune::nnet::{init_params, ArchSpec, Batch, Tensor};
use eocprune::pruning::{global_topk_mask, saliency_snip};
use eocprune::rng::{fill_normal, stream_rng};

fn main() -> eocprune::Result<()> {
    println!("theory: conditioning scale vs depth (σ_w = 1)");
    println!("{:>7} {:>14} {:>14}", "L", "standard", "stable");
    for depth in [10, 50, 100] {
        let std = resnet_conditioning_theory(1.0, depth, false)?;
        let stb = resnet_conditioning_theory(1.0, depth, true)?;
        println!("{:>7} {:>14.4e} {:>14.4e}", depth, std.scale, stb.scale);
    }

    // Same seed, same data: prune both variants with SNIP and compare how
    // evenly the kept weights spread across layers.
    let depth = 30;
    let mk = |stable| ArchSpec::resnet_ffnn(ActivationKind::Relu, 32, 64, depth, 10, stable);
    let mut inputs = Tensor::zeros(&[16, 32]);
    fill_normal(&mut stream_rng(5, 0), &mut inputs.data, 0.0, 1.0);
    let batch = Batch {
        inputs,
        labels: (0..16).map(|i| i % 10).collect(),
    };
    println!("\nper-layer kept fraction spread at sparsity 0.5 (SNIP):");
    for stable in [false, true] {
        let arch = mk(stable);
        let params = init_params(&arch, std::f64::consts::SQRT_2, 0.0, 5)?;
        let sal = saliency_snip(&arch, &params, &batch)?;
        let (_, report) = global_topk_mask(&sal, 0.5)?;
        let f = &report.per_layer_kept_fraction;
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        let var = f.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / f.len() as f64;
        println!(
            "  {}: min {:.3}, max {:.3}, std {:.4}",
            if stable { "stable  " } else { "standard" },
            f.iter().cloned().fold(f64::INFINITY, f64::min),
            f.iter().cloned().fold(0.0, f64::max),
            var.sqrt()
        );
    }
    Ok(())
}
