//! Sampling a subnetwork that sits on the edge of chaos at initialization:
//! over-scaled layers (σ_w,l > σ_w*) are thinned with keep probability
//! p_l = σ*²/σ_w,l², which restores the critical effective variance.

use eocprune::gaussfield::{eoc_solve, ActivationKind};
use eocprune::nnet::ArchSpec;
use eocprune::pruning::eoc_subnetwork_mask;

fn main() -> eocprune::Result<()> {
    let act = ActivationKind::Tanh;
    let sigma_b = 0.2;
    let edge = eoc_solve(act, sigma_b)?;
    let depth = 6;
    let arch = ArchSpec::ffnn(act, 64, 64, depth, 10);

    // Give every layer a different over-scale.
    let sigmas: Vec<f64> = (0..=depth)
        .map(|l| edge.sigma_w * (1.0 + 0.3 * l as f64))
        .collect();
    let (mask, probs) = eoc_subnetwork_mask(&arch, &sigmas, sigma_b, 11)?;

    println!("σ_w* = {:.4}", edge.sigma_w);
    println!("{:>6} {:>10} {:>10} {:>12}", "layer", "σ_w,l", "p_l", "kept frac");
    for (l, t) in mask.layers.iter().enumerate() {
        let kept = t.data.iter().filter(|&&v| v != 0.0).count() as f64 / t.numel() as f64;
        println!("{:>6} {:>10.4} {:>10.4} {:>12.4}", l, sigmas[l], probs[l], kept);
    }
    println!("\neffective σ²_eff = p_l·σ_w,l² = {:.4} = σ_w*² for every layer",
        probs[1] * sigmas[1] * sigmas[1]);
    Ok(())
}
