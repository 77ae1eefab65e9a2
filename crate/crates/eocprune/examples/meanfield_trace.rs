//! Depth-wise propagation of the variance q^l and correlation c^l in the
//! three phases, plus the polynomial correlation decay exactly on the edge.

use eocprune::gaussfield::{eoc_solve, ActivationKind};
use eocprune::meanfield::propagate_ffnn;

fn main() -> eocprune::Result<()> {
    let act = ActivationKind::Tanh;
    let sigma_b = 0.3;
    let edge = eoc_solve(act, sigma_b)?;

    println!("tanh, σ_b = {sigma_b}: σ_w* = {:.6}\n", edge.sigma_w);
    println!("{:>8} {:>12} {:>12} {:>12}", "layer", "ordered c", "eoc c", "chaotic c");
    let depth = 40;
    let traces: Vec<_> = [0.7, 1.0, 1.3]
        .iter()
        .map(|m| propagate_ffnn(act, sigma_b, m * edge.sigma_w, 0.5, 0.2, depth))
        .collect::<eocprune::Result<_>>()?;
    for l in (0..=depth).step_by(5) {
        println!(
            "{:>8} {:>12.8} {:>12.8} {:>12.8}",
            l, traces[0].c[l], traces[1].c[l], traces[2].c[l]
        );
    }
    println!("\nordered → 1, chaotic → c* < 1, EOC approaches 1 only polynomially.");

    // On the ReLU edge the gap obeys l²(1 − c^l) → 9π²/2 ≈ 44.41.
    let relu = propagate_ffnn(ActivationKind::Relu, 0.0, std::f64::consts::SQRT_2, 1.0, 0.2, 4000)?;
    let l = 4000f64;
    println!(
        "relu EOC: l²(1−c^l) at l=4000: {:.3}  (limit 9π²/2 = {:.3})",
        l * l * (1.0 - relu.c[4000]),
        4.5 * std::f64::consts::PI * std::f64::consts::PI
    );
    Ok(())
}
