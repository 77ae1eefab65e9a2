//! Trace the edge of chaos in the (σ_b, σ_w) plane for tanh and show how
//! χ splits the plane into ordered and chaotic regions.

use eocprune::gaussfield::{eoc_solve, ActivationKind, EdgePoint};

fn main() -> eocprune::Result<()> {
    println!("{:>6} {:>10} {:>10} {:>12} {:>12}", "σ_b", "σ_w*", "q*", "χ(0.7σ_w*)", "χ(1.3σ_w*)");
    for i in 0..=10 {
        let sigma_b = 0.05 + 0.1 * i as f64;
        let edge = eoc_solve(ActivationKind::Tanh, sigma_b)?;
        let ordered = EdgePoint::resolve(ActivationKind::Tanh, sigma_b, 0.7 * edge.sigma_w)?;
        let chaotic = EdgePoint::resolve(ActivationKind::Tanh, sigma_b, 1.3 * edge.sigma_w)?;
        println!(
            "{:>6.2} {:>10.6} {:>10.6} {:>12.6} {:>12.6}",
            sigma_b, edge.sigma_w, edge.q_star, ordered.chi, chaotic.chi
        );
    }

    // ReLU is special: the edge exists only at σ_b = 0, where σ_w = √2 and
    // the whole line q ↦ σ_w²q/2 is fixed.
    let relu = eoc_solve(ActivationKind::Relu, 0.0)?;
    println!("\nrelu: σ_w* = {:.6} (degenerate fixed line: {})", relu.sigma_w, relu.degenerate);
    Ok(())
}
