//! Monte-Carlo estimates of the critical sparsity s_cr (the sparsity where
//! the first layer disconnects) for uniform and privileged-layer nets.

use eocprune::gaussfield::ActivationKind;
use eocprune::nnet::ArchSpec;
use eocprune::pruning::{estimate_expected_scr, PruneCriterion};

fn main() -> eocprune::Result<()> {
    let arch = ArchSpec::ffnn(ActivationKind::Tanh, 100, 100, 100, 10);

    // Identical layer distributions: maxima grow with layer size only, so
    // the first casualty comes very late and s_cr concentrates near 1.
    let uniform = estimate_expected_scr(
        &arch, 1.0, 0.0, None, PruneCriterion::Magnitude, None, 10, 1,
    )?;
    println!("uniform layers:      E[s_cr] ≈ {:.4} ± {:.4}", uniform.mean, uniform.std);

    // Over-weighting one layer by α₁ = γ (std × 1/√γ) makes its weights
    // systematically small; magnitude pruning kills it much earlier.
    for gamma in [5.0, 10.0] {
        let mut alpha = vec![1.0; 101];
        alpha[0] = gamma;
        let est = estimate_expected_scr(
            &arch,
            1.0,
            0.0,
            Some(&alpha),
            PruneCriterion::Magnitude,
            None,
            10,
            1,
        )?;
        println!("privileged γ = {gamma:>4}: E[s_cr] ≈ {:.4} ± {:.4}", est.mean, est.std);
    }
    Ok(())
}
