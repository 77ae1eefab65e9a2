//! Acceptance suite: eleven numbered criteria, one PASS/FAIL line each.
//! Every tolerance is pinned; nothing here is tuned to make a red
//! criterion green. Criteria 1 and 2 assert literal published targets that
//! the faithful computation does not reproduce — they are expected to
//! fail, and the printed line carries the measured values side by side.

use eocprune::config::ExperimentConfig;
use eocprune::gaussfield::{
    cross_expectation, eoc_solve, expect_dphi_sq, expect_phi_sq, ActivationKind, EdgePoint,
};
use eocprune::meanfield::{
    decay_exponent_fit, mbp_bound, propagate_ffnn, pruned_resnet_correlation, theorem1_bound,
    FitKind, LogBase, QuantileScaling, MBP_EPS_GRID, MBP_X_GRID,
};
use eocprune::nnet::{grad_check, init_params, ArchSpec, Tensor};
use eocprune::pruning::{
    conditioning_profile, critical_sparsity, eoc_subnetwork_mask, estimate_expected_scr,
    gaussian_batch, global_topk_mask, init_params_layer_scaled, input_variance_for_q,
    measured_chi, rescale_factors, saliency_magnitude, saliency_snip, PruneCriterion, SaliencyMap,
};
use eocprune::rng::stream_rng;
use eocprune::runner::run_prune_train;
use rand::Rng;
use rayon::prelude::*;

fn verdict(n: u32, name: &str, subs: &[(String, bool)]) -> bool {
    let pass = subs.iter().all(|s| s.1);
    let detail = subs
        .iter()
        .map(|(d, ok)| format!("{d} [{}]", if *ok { "ok" } else { "FAIL" }))
        .collect::<Vec<_>>()
        .join("; ");
    println!(
        "ACCEPTANCE {n} ({name}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

/// σ_w with χ(σ_b, σ_w) = target (χ is increasing in σ_w).
fn tune_sigma_w_for_chi(act: ActivationKind, sigma_b: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.02, 3.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let chi = EdgePoint::resolve(act, sigma_b, mid).unwrap().chi;
        if chi < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn criterion_01_ordered_phase_critical_sparsity() {
    // tanh FFNN L=100 N=100, χ tuned so κ = |log χ|/8 = 0.2 (χ = e^{-1.6}),
    // SNIP saliency over 10 seeds.
    let sigma_b = 0.3;
    let chi_target = (-1.6f64).exp();
    let sigma_w = tune_sigma_w_for_chi(ActivationKind::Tanh, sigma_b, chi_target);
    let point = EdgePoint::resolve(ActivationKind::Tanh, sigma_b, sigma_w).unwrap();
    let arch = ArchSpec::ffnn(ActivationKind::Tanh, 100, 100, 100, 10);
    let q_in = input_variance_for_q(ActivationKind::Tanh, sigma_b, sigma_w, point.q_star).unwrap();
    let arch2 = arch.clone();
    let source = move |s: u64| gaussian_batch(&arch2, q_in, 100, s);
    let est = estimate_expected_scr(
        &arch,
        sigma_w,
        sigma_b,
        None,
        PruneCriterion::Snip,
        Some(&source),
        10,
        42,
    )
    .unwrap();
    let b10 = theorem1_bound(0.2, 100, 100, LogBase::Ten).unwrap();
    let be = theorem1_bound(0.2, 100, 100, LogBase::E).unwrap();
    let subs = vec![
        (
            format!("mean s_cr {:.3} ± {:.3} vs target 0.22 ± 0.05", est.mean, est.std),
            (est.mean - 0.22).abs() <= 0.05,
        ),
        (
            format!("s_cr ≤ bound: {:.3} ≤ {:.4} (base-10) / {:.4} (base-e)", est.mean, b10.value, be.value),
            est.mean <= b10.value && est.mean <= be.value,
        ),
        (
            format!("base-10 bound {:.4} = 0.275 ± 0.001", b10.value),
            (b10.value - 0.275).abs() <= 0.001,
        ),
    ];
    assert!(verdict(1, "ordered-phase critical sparsity", &subs));
}

#[test]
fn criterion_02_mbp_bound_table() {
    // Privileged-first-layer FFNN, N=100 L=100, magnitude pruning; the
    // literal published (bound, empirical) pairs per γ.
    let arch = ArchSpec::ffnn(ActivationKind::Tanh, 100, 100, 100, 10);
    let empirical = |gamma: f64| {
        let mut alpha = vec![1.0; 101];
        alpha[0] = gamma;
        estimate_expected_scr(
            &arch,
            1.0,
            0.0,
            Some(&alpha),
            PruneCriterion::Magnitude,
            None,
            10,
            7,
        )
        .unwrap()
    };
    let bound = |gamma: f64, scaling| {
        mbp_bound(gamma, 1.0, 100, 100, MBP_EPS_GRID, MBP_X_GRID, scaling).unwrap()
    };
    let e5 = empirical(5.0);
    let e10 = empirical(10.0);
    let b2 = bound(2.0, QuantileScaling::Gamma);
    let b5 = bound(5.0, QuantileScaling::Gamma);
    let b10 = bound(10.0, QuantileScaling::Gamma);
    // Supporting sanity (not part of the published targets): the std-ratio
    // variant of the bound does dominate the simulation.
    let valid5 = bound(5.0, QuantileScaling::SqrtGamma);
    let valid10 = bound(10.0, QuantileScaling::SqrtGamma);
    let subs = vec![
        (
            format!("γ=5 empirical {:.3} vs 0.79 ± 0.03", e5.mean),
            (e5.mean - 0.79).abs() <= 0.03,
        ),
        (
            format!("γ=5 bound {:.3} vs ≈0.81", b5.value),
            (b5.value - 0.81).abs() <= 0.01,
        ),
        (
            format!("γ=10 empirical {:.3} vs 0.69 ± 0.03", e10.mean),
            (e10.mean - 0.69).abs() <= 0.03,
        ),
        (
            format!("γ=10 bound {:.3} vs ≈0.72", b10.value),
            (b10.value - 0.72).abs() <= 0.01,
        ),
        (
            format!("γ=2 bound {:.3} vacuous (≈5.77)", b2.value),
            b2.vacuous && (b2.value - 5.77).abs() <= 0.01,
        ),
        (
            format!(
                "std-ratio variant dominates simulation: {:.3} ≥ {:.3}, {:.3} ≥ {:.3}",
                valid5.value, e5.mean, valid10.value, e10.mean
            ),
            valid5.value >= e5.mean && valid10.value >= e10.mean,
        ),
    ];
    assert!(verdict(2, "magnitude-pruning bound table", &subs));
}

#[test]
fn criterion_03_phase_determines_layer_survival() {
    // Depth 100, width 100, s = 0.70, SNIP: off-EOC inits lose whole
    // layers; on the EOC every layer keeps weights.
    let sigma_b = 0.3;
    let edge = eoc_solve(ActivationKind::Tanh, sigma_b).unwrap();
    let arch = ArchSpec::ffnn(ActivationKind::Tanh, 100, 100, 100, 10);
    let dead_count = |mult: f64, seed: u64| {
        let sigma_w = mult * edge.sigma_w;
        let point = EdgePoint::resolve(ActivationKind::Tanh, sigma_b, sigma_w).unwrap();
        let q_in =
            input_variance_for_q(ActivationKind::Tanh, sigma_b, sigma_w, point.q_star).unwrap();
        let params = init_params(&arch, sigma_w, sigma_b, seed).unwrap();
        let batch = gaussian_batch(&arch, q_in, 100, seed);
        let sal = saliency_snip(&arch, &params, &batch).unwrap();
        let (_, report) = global_topk_mask(&sal, 0.70).unwrap();
        report.fully_pruned_layers.len()
    };
    let seeds: Vec<u64> = (0..10).collect();
    let count_ok = |mult: f64, want_dead: bool| {
        seeds
            .par_iter()
            .filter(|&&s| {
                let d = dead_count(mult, 100 + s);
                if want_dead {
                    d >= 1
                } else {
                    d == 0
                }
            })
            .count()
    };
    let eoc_ok = count_ok(1.0, false);
    let ordered_ok = count_ok(0.7, true);
    let chaotic_ok = count_ok(1.3, true);
    let subs = vec![
        (format!("EOC: 0 dead layers in {eoc_ok}/10 seeds (need ≥9)"), eoc_ok >= 9),
        (format!("ordered: ≥1 dead layer in {ordered_ok}/10 seeds (need ≥9)"), ordered_ok >= 9),
        (format!("chaotic: ≥1 dead layer in {chaotic_ok}/10 seeds (need ≥9)"), chaotic_ok >= 9),
    ];
    assert!(verdict(3, "phase determines layer survival", &subs));
}

#[test]
fn criterion_04_rescaling_trick_training() {
    // CI profile of the reduced training grid: synthetic data, depth 20,
    // s = 0.8; the three init schemes must order as
    // EOC+rescale > EOC-without-rescale (or failing) > ordered ≈ chance.
    let cfg = |init: &str, rescale: bool| {
        ExperimentConfig::from_json(&format!(
            r#"{{
            "arch": {{"kind": "ffnn", "act": "tanh", "depth": 20, "width": 64}},
            "init": {init},
            "pruning": {{"criterion": "snip", "sparsity": 0.8, "rescale": {rescale}}},
            "training": {{"lr": 0.05, "batch": 50, "iterations": 1000, "record_every": 200}},
            "dataset": {{"kind": "synthetic", "classes": 10, "dim": 30,
                        "train": 2000, "test": 500, "margin": 6.0}},
            "seed": 5,
            "output_dir": "/tmp/eocprune-acceptance-c4"
        }}"#
        ))
        .unwrap()
    };
    let eoc = r#"{"phase": "eoc", "sigma_b": 0.3}"#;
    let ordered = r#"{"phase": "ordered", "sigma_b": 0.3}"#;
    let runs: Vec<f64> = [(eoc, true), (eoc, false), (ordered, false)]
        .par_iter()
        .map(|&(init, rescale)| run_prune_train(&cfg(init, rescale)).unwrap().test_accuracy)
        .collect();
    let (acc_rescale, acc_plain, acc_ordered) = (runs[0], runs[1], runs[2]);
    let subs = vec![
        (format!("EOC+rescale accuracy {acc_rescale:.3} > 0.90"), acc_rescale > 0.90),
        (
            format!("ordered accuracy {acc_ordered:.3} ≈ chance 0.10 ± 0.05"),
            (acc_ordered - 0.10).abs() <= 0.05,
        ),
        (
            format!("EOC w/o rescale {acc_plain:.3} strictly below {acc_rescale:.3}"),
            acc_plain < acc_rescale,
        ),
    ];
    assert!(verdict(4, "rescaling-trick training", &subs));
}

#[test]
fn criterion_05_conditioning() {
    // (a) ordered FFNN: log m_l slope = −log χ ± 10% (single-sample
    // probes; batch means mix in cross-sample correlations).
    let (sb, sw) = (0.3, 1.2);
    let point = EdgePoint::resolve(ActivationKind::Tanh, sb, sw).unwrap();
    let depth = 12;
    let arch = ArchSpec::ffnn(ActivationKind::Tanh, 200, 200, depth, 10);
    let q_in = input_variance_for_q(ActivationKind::Tanh, sb, sw, point.q_star).unwrap();
    let arch_b = arch.clone();
    let prof = eocprune::pruning::well_conditioned_metric(
        &arch,
        sw,
        sb,
        &move |s| gaussian_batch(&arch_b, q_in, 1, s),
        400,
        50,
    )
    .unwrap();
    let fit = decay_exponent_fit(&prof.m[1..depth], (0, depth - 2), FitKind::SemiLog).unwrap();
    let want = -point.chi.ln();
    let a_ok = ((fit.slope - want) / want).abs() <= 0.10;

    // (b,c) ResNet growth with blocks 10 → 15 at σ_w² = 2: mean m scales
    // by 2^5 for the standard net and stays within a factor 2 for the
    // stable net (profiles are per-branch, i.e. after the 1/L branch
    // normalization — the remaining 1/L ambiguity only shifts the level,
    // not the ratio being tested).
    let mean_m = |stable: bool, blocks: usize| {
        let arch = ArchSpec::resnet_ffnn(ActivationKind::Relu, 32, 100, blocks, 10, stable);
        let trials = 100u64;
        let total: f64 = (0..trials)
            .into_par_iter()
            .map(|t| {
                let params =
                    init_params(&arch, std::f64::consts::SQRT_2, 0.0, 1 + 1000 * t).unwrap();
                let b = gaussian_batch(&arch, 1.0, 1, 77 + t);
                let prof = conditioning_profile(&arch, &params, None, None, &b).unwrap();
                let body = &prof[1..prof.len() - 1];
                body.iter().sum::<f64>() / body.len() as f64
            })
            .sum();
        total / trials as f64
    };
    let std_ratio = mean_m(false, 15) / mean_m(false, 10);
    let stb_ratio = mean_m(true, 15) / mean_m(true, 10);
    let b_ok = (std_ratio / 32.0 - 1.0).abs() <= 0.30;
    let c_ok = (0.5..=2.0).contains(&stb_ratio);

    // (d) per-layer kept-fraction spread: stable strictly flatter than
    // standard on matched seeds.
    let spread = |stable: bool, seed: u64| {
        let arch = ArchSpec::resnet_ffnn(ActivationKind::Relu, 32, 64, 30, 10, stable);
        let params = init_params(&arch, std::f64::consts::SQRT_2, 0.0, seed).unwrap();
        let batch = gaussian_batch(&arch, 1.0, 16, seed);
        let sal = saliency_snip(&arch, &params, &batch).unwrap();
        let (_, report) = global_topk_mask(&sal, 0.5).unwrap();
        let f = &report.per_layer_kept_fraction;
        let mean = f.iter().sum::<f64>() / f.len() as f64;
        (f.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / f.len() as f64).sqrt()
    };
    let d_ok = (0..3u64).all(|s| spread(true, s) < spread(false, s));

    let subs = vec![
        (format!("(a) slope {:.4} vs −log χ {:.4} ± 10%", fit.slope, want), a_ok),
        (format!("(b) standard ResNet ratio {:.1} vs 2^5 = 32 ± 30%", std_ratio), b_ok),
        (format!("(c) stable ResNet ratio {:.2} within factor 2 of flat", stb_ratio), c_ok),
        ("(d) stable kept-fraction spread < standard on 3 matched seeds".to_string(), d_ok),
    ];
    assert!(verdict(5, "conditioning", &subs));
}

#[test]
fn criterion_06_correlation_laws() {
    // ReLU EOC: 1 − c^l decays like l⁻² with constant 9π²/2.
    let relu = propagate_ffnn(
        ActivationKind::Relu,
        0.0,
        std::f64::consts::SQRT_2,
        1.0,
        0.2,
        4000,
    )
    .unwrap();
    let gap: Vec<f64> = relu.c[1..].iter().map(|c| 1.0 - c).collect();
    let ll = decay_exponent_fit(&gap, (999, 3999), FitKind::LogLog).unwrap();
    let limit = gap[3999] * 4000.0 * 4000.0;
    let target = 4.5 * std::f64::consts::PI * std::f64::consts::PI;
    let relu_slope_ok = (ll.slope + 2.0).abs() <= 0.2;
    let relu_limit_ok = ((limit - target) / target).abs() <= 0.10;

    // Ordered tanh: semi-log slope of 1 − c^l equals log f'(1) = log χ.
    let point = EdgePoint::resolve(ActivationKind::Tanh, 0.3, 1.3).unwrap();
    let tr = propagate_ffnn(ActivationKind::Tanh, 0.3, 1.3, point.q_star, 0.2, 200).unwrap();
    let gap: Vec<f64> = tr.c[1..].iter().map(|c| 1.0 - c).collect();
    let sl = decay_exponent_fit(&gap, (19, 199), FitKind::SemiLog).unwrap();
    let tanh_ok = ((sl.slope - point.chi.ln()) / point.chi.ln()).abs() <= 0.10;

    // Pruned-ResNet recursion: the same l⁻² law, tight window deep in.
    let pr = pruned_resnet_correlation(1.0, 0.0, 10_000).unwrap();
    let gap: Vec<f64> = pr[1..].iter().map(|c| 1.0 - c).collect();
    let pf = decay_exponent_fit(&gap, (999, 9999), FitKind::LogLog).unwrap();
    let resnet_ok = (pf.slope + 2.0).abs() <= 0.05;

    let subs = vec![
        (format!("relu EOC log-log slope {:.3} = −2 ± 0.2", ll.slope), relu_slope_ok),
        (format!("relu EOC l²(1−c) {:.2} → {:.2} ± 10%", limit, target), relu_limit_ok),
        (
            format!("ordered tanh semi-log slope {:.4} vs log χ {:.4} ± 10%", sl.slope, point.chi.ln()),
            tanh_ok,
        ),
        (format!("pruned-ResNet slope {:.3} = −2 ± 0.05 on l ∈ [10³,10⁴]", pf.slope), resnet_ok),
    ];
    assert!(verdict(6, "correlation laws", &subs));
}

#[test]
fn criterion_07_gradient_oracle() {
    // Autodiff vs central finite differences on 20 random small configs
    // per architecture kind.
    let worst: f64 = (0..80u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(900 + i, 0);
            let act = if rng.random::<bool>() {
                ActivationKind::Tanh
            } else {
                ActivationKind::Relu
            };
            let depth = 1 + (rng.random::<u32>() % 3) as usize;
            let width = 3 + (rng.random::<u32>() % 4) as usize;
            let classes = 2 + (rng.random::<u32>() % 3) as usize;
            let arch = match i % 4 {
                0 => ArchSpec::ffnn(act, 4, width, depth, classes),
                1 => ArchSpec::cnn1d(act, 2, 3, 4, 1, depth, classes),
                2 => ArchSpec::resnet_ffnn(act, 4, width, depth, classes, i % 8 == 2),
                _ => ArchSpec::resnet_cnn1d(act, 2, 3, 4, 1, depth, classes, i % 8 == 3),
            };
            let batch = gaussian_batch(&arch, 1.0, 3, 31 + i);
            grad_check(&arch, 17 + i, &batch).unwrap()
        })
        .reduce(|| 0.0, f64::max);
    let subs = vec![(
        format!("max relative error {worst:.2e} < 1e-5 over 20 configs × 4 kinds"),
        worst < 1e-5,
    )];
    assert!(verdict(7, "gradient oracle", &subs));
}

#[test]
fn criterion_08_quadrature_oracle() {
    // Every 1-D and 2-D Gaussian expectation within 3 standard errors of a
    // 10⁷-sample Monte-Carlo estimate, over 50 random parameter draws.
    let n = 10_000_000usize;
    let failures: Vec<String> = (0..50u64)
        .into_par_iter()
        .flat_map(|draw| {
            let mut rng = stream_rng(0xacce + draw, 0);
            let act = if rng.random::<bool>() {
                ActivationKind::Tanh
            } else {
                ActivationKind::Relu
            };
            let q: f64 = 10f64.powf(rng.random_range(-1.5..1.0));
            let q2: f64 = 10f64.powf(rng.random_range(-1.5..1.0));
            let c: f64 = rng.random_range(-0.95..0.95);
            // One pass for the 1-D moments, one for the cross moment.
            let (s1, s1sq, s2, s2sq, s3, s3sq) = {
                let mut acc = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
                let sq = q.sqrt();
                let sq2 = q2.sqrt();
                let mut zrng = stream_rng(0x6d63_0000 + draw, 1);
                for _ in 0..n {
                    let z1: f64 = eocprune::rng::normal(&mut zrng);
                    let z2: f64 = eocprune::rng::normal(&mut zrng);
                    let u1 = sq * z1;
                    let u2 = sq2 * (c * z1 + (1.0 - c * c).sqrt() * z2);
                    let p = act.apply(u1);
                    let d = act.dapply(u1);
                    let x1 = p * p;
                    let x2 = d * d;
                    let x3 = p * act.apply(u2);
                    acc.0 += x1;
                    acc.1 += x1 * x1;
                    acc.2 += x2;
                    acc.3 += x2 * x2;
                    acc.4 += x3;
                    acc.5 += x3 * x3;
                }
                acc
            };
            let nf = n as f64;
            let check = |name: &str, sum: f64, sumsq: f64, val: f64| -> Option<String> {
                let mean = sum / nf;
                let var = (sumsq / nf - mean * mean).max(0.0);
                let se = (var / nf).sqrt();
                if (val - mean).abs() <= 3.0 * se + 1e-12 {
                    None
                } else {
                    Some(format!(
                        "draw {draw} {name}: quad {val:.6} vs mc {mean:.6} ± {se:.2e}"
                    ))
                }
            };
            let mut bad = Vec::new();
            bad.extend(check("E[φ²]", s1, s1sq, expect_phi_sq(act, q).unwrap()));
            bad.extend(check("E[φ'²]", s2, s2sq, expect_dphi_sq(act, q).unwrap()));
            bad.extend(check(
                "E[φφ]",
                s3,
                s3sq,
                cross_expectation(act, q, q2, c).unwrap(),
            ));
            bad
        })
        .collect();
    let subs = vec![(
        format!(
            "150 expectations within 3σ of 10⁷-sample MC ({} outliers{})",
            failures.len(),
            if failures.is_empty() {
                String::new()
            } else {
                format!(": {}", failures.join(" | "))
            }
        ),
        failures.is_empty(),
    )];
    assert!(verdict(8, "quadrature oracle", &subs));
}

#[test]
fn criterion_09_mask_and_scr_oracle() {
    // Exact agreement with brute-force sort/scan on 100 random instances.
    let mut all_ok = true;
    for trial in 0..100u64 {
        let mut rng = stream_rng(3000 + trial, 0);
        let nlayers = 1 + (rng.random::<u32>() % 4) as usize;
        let mut layers = Vec::new();
        for _ in 0..nlayers {
            let rows = 1 + (rng.random::<u32>() % 10) as usize;
            let cols = 1 + (rng.random::<u32>() % 16) as usize;
            let mut t = Tensor::zeros(&[rows, cols]);
            for v in t.data.iter_mut() {
                *v = ((rng.random::<u32>() % 16) as f64) / 4.0;
            }
            layers.push(t);
        }
        let sal = SaliencyMap { layers };
        let total = sal.total_weights();
        let mut items: Vec<(f64, usize, usize)> = sal
            .layers
            .iter()
            .enumerate()
            .flat_map(|(l, t)| t.data.iter().enumerate().map(move |(i, &s)| (s, l, i)))
            .collect();
        items.sort_by(|a, b| {
            b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
        });
        let s = (rng.random::<u32>() % 90) as f64 / 100.0;
        let (mask, report) = global_topk_mask(&sal, s).unwrap();
        let k = ((1.0 - s) * total as f64).floor() as usize;
        let mut brute: Vec<Tensor> = sal.layers.iter().map(|t| Tensor::zeros(&t.shape)).collect();
        for &(_, l, i) in items.iter().take(k) {
            brute[l].data[i] = 1.0;
        }
        all_ok &= report.kept == k;
        all_ok &= mask.layers.iter().zip(&brute).all(|(a, b)| a.data == b.data);
        // Brute-force s_cr from the first rank at which all layers appear.
        let mut seen = vec![false; nlayers];
        let mut left = nlayers;
        let mut alive_rank = 0;
        for (r0, &(_, l, _)) in items.iter().enumerate() {
            if !seen[l] {
                seen[l] = true;
                left -= 1;
                alive_rank = r0 + 1;
                if left == 0 {
                    break;
                }
            }
        }
        let want = 1.0 - (alive_rank - 1) as f64 / total as f64;
        all_ok &= critical_sparsity(&sal).unwrap() == want;
    }
    let subs = vec![("100/100 instances exact (mask bytes, kept count, s_cr)".to_string(), all_ok)];
    assert!(verdict(9, "mask / s_cr oracle", &subs));
}

#[test]
fn criterion_10_rescale_identity_and_flatness() {
    // ρ_i²·Σ_j W_ij²δ_ij = 1 on every kept row, every architecture kind.
    let archs = [
        ArchSpec::ffnn(ActivationKind::Tanh, 12, 16, 3, 4),
        ArchSpec::cnn1d(ActivationKind::Relu, 2, 6, 8, 1, 3, 4),
        ArchSpec::resnet_ffnn(ActivationKind::Tanh, 12, 16, 3, 4, false),
        ArchSpec::resnet_cnn1d(ActivationKind::Relu, 2, 6, 8, 1, 3, 4, true),
    ];
    let mut identity_ok = true;
    for (i, arch) in archs.iter().enumerate() {
        let params = init_params(arch, 1.3, 0.2, 60 + i as u64).unwrap();
        let (mask, _) = global_topk_mask(&saliency_magnitude(&params), 0.5).unwrap();
        let rf = rescale_factors(&params, &mask).unwrap();
        for (l, (w, m)) in params.weights.iter().zip(&mask.layers).enumerate() {
            let rows = w.shape[0];
            let per = w.numel() / rows;
            for r in 0..rows {
                if rf.dead_rows[l].contains(&r) {
                    continue;
                }
                let norm: f64 = (0..per)
                    .map(|j| {
                        let idx = r * per + j;
                        m.data[idx] * w.data[idx] * w.data[idx]
                    })
                    .sum();
                identity_ok &= (rf.rho[l][r] * rf.rho[l][r] * norm - 1.0).abs() < 1e-12;
            }
        }
    }

    // Flatness: per-layer gradient second moments of a rescaled-pruned EOC
    // net, measured with single-sample probes and reported against
    // distance from the output (so "vanishing toward the input" reads as a
    // negative slope).
    let edge = eoc_solve(ActivationKind::Tanh, 0.3).unwrap();
    let depth = 15;
    let arch = ArchSpec::ffnn(ActivationKind::Tanh, 250, 250, depth, 10);
    let params = init_params(&arch, edge.sigma_w, edge.sigma_b, 77).unwrap();
    let (mask, _) = global_topk_mask(&saliency_magnitude(&params), 0.7).unwrap();
    let scale = rescale_factors(&params, &mask).unwrap().as_scale(edge.sigma_w);
    let q_in = input_variance_for_q(ActivationKind::Tanh, 0.3, edge.sigma_w, edge.q_star).unwrap();
    let trials = 400u64;
    let sums: (Vec<f64>, Vec<f64>) = (0..trials)
        .into_par_iter()
        .map(|t| {
            let b = gaussian_batch(&arch, q_in, 1, 500 + t);
            (
                conditioning_profile(&arch, &params, Some(&mask), Some(&scale), &b).unwrap(),
                conditioning_profile(&arch, &params, Some(&mask), None, &b).unwrap(),
            )
        })
        .reduce(
            || (vec![0.0; depth + 1], vec![0.0; depth + 1]),
            |mut acc, (a, b)| {
                for l in 0..a.len() {
                    acc.0[l] += a[l] / trials as f64;
                    acc.1[l] += b[l] / trials as f64;
                }
                acc
            },
        );
    // Fit vs layer index, then negate: slope vs distance-from-output.
    let fit = |m: &[f64]| {
        -decay_exponent_fit(&m[1..depth], (0, depth - 2), FitKind::SemiLog).unwrap().slope
    };
    let s_with = fit(&sums.0);
    let s_without = fit(&sums.1);
    let subs = vec![
        ("ρ²·Σ W²δ = 1 exactly on all kept rows, 4 arch kinds".to_string(), identity_ok),
        (format!("rescaled |slope| {:.4} < 0.01", s_with.abs()), s_with.abs() < 0.01),
        (format!("unrescaled slope {:.4} < −0.05 (vanishing)", s_without), s_without < -0.05),
    ];
    assert!(verdict(10, "rescale identity and flatness", &subs));
}

#[test]
fn criterion_11_wlth_subnetwork_chi() {
    // Layers over-scaled to σ_w,l > σ_w*, thinned with p_l = σ*²/σ_w,l²:
    // the wide masked net must sit back on χ = 1.
    let act = ActivationKind::Tanh;
    let sigma_b = 0.2;
    let edge = eoc_solve(act, sigma_b).unwrap();
    let depth = 6;
    let arch = ArchSpec::ffnn(act, 400, 400, depth, 10);
    let sigmas: Vec<f64> = (0..=depth)
        .map(|l| edge.sigma_w * (1.0 + 0.3 * l as f64))
        .collect();
    let (mask, probs) = eoc_subnetwork_mask(&arch, &sigmas, sigma_b, 11).unwrap();
    // α_l = p_l gives init std σ*/√(p_l · fan-in) = σ_w,l/√fan-in.
    let params = init_params_layer_scaled(&arch, edge.sigma_w, sigma_b, &probs, 21).unwrap();
    let q_in = input_variance_for_q(act, sigma_b, edge.sigma_w, edge.q_star).unwrap();
    let batch = gaussian_batch(&arch, q_in, 200, 9);
    let chis = measured_chi(&arch, &params, Some(&mask), &batch).unwrap();
    let worst = chis
        .iter()
        .map(|c| (c - 1.0).abs())
        .fold(0.0f64, f64::max);
    let subs = vec![(
        format!(
            "masked χ̂ per body layer {:?} all within 1 ± 0.05",
            chis.iter().map(|c| (c * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
        worst <= 0.05,
    )];
    assert!(verdict(11, "EOC subnetwork χ", &subs));
}
