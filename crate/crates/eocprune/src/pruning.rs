//! Pruning at initialization: saliency scores, exact global top-k masks,
//! critical sparsity, Monte-Carlo E[s_cr], row rescaling, Bernoulli EOC
//! subnetworks, and empirical conditioning measurements.

use crate::error::{invalid, Result};
use crate::gaussfield::{eoc_solve, expect_phi_sq, ActivationKind};
use crate::meanfield::ConditioningProfile;
use crate::nnet::{forward, init_params, loss_and_grads, ArchSpec, Batch, ParamSet, Tensor};
use crate::rng::stream_rng;
use rand::Rng;
use rayon::prelude::*;

/// Per-layer nonnegative scores, shape-matched to the weight tensors.
#[derive(Debug, Clone)]
pub struct SaliencyMap {
    pub layers: Vec<Tensor>,
}

impl SaliencyMap {
    pub fn total_weights(&self) -> usize {
        self.layers.iter().map(|t| t.numel()).sum()
    }
}

/// Binary keep masks δ^l.
#[derive(Debug, Clone)]
pub struct Mask {
    pub layers: Vec<Tensor>,
}

impl Mask {
    pub fn all_ones(params: &ParamSet) -> Mask {
        Mask {
            layers: params
                .weights
                .iter()
                .map(|w| Tensor {
                    shape: w.shape.clone(),
                    data: vec![1.0; w.numel()],
                })
                .collect(),
        }
    }

    pub fn kept_count(&self) -> usize {
        self.layers
            .iter()
            .map(|t| t.data.iter().filter(|&&v| v != 0.0).count())
            .sum()
    }

    /// Per-(layer, output-row) kept fractions — the pixel grid of the
    /// neuron-level figures.
    pub fn row_kept_fractions(&self) -> Vec<Vec<f64>> {
        self.layers
            .iter()
            .map(|t| {
                let rows = t.shape[0];
                let per = t.numel() / rows;
                (0..rows)
                    .map(|r| {
                        t.data[r * per..(r + 1) * per]
                            .iter()
                            .filter(|&&v| v != 0.0)
                            .count() as f64
                            / per as f64
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PruneReport {
    pub sparsity: f64,
    pub total_weights: usize,
    pub kept: usize,
    /// Saliency of the weakest kept weight; +inf when nothing is kept.
    pub threshold: f64,
    pub per_layer_kept_fraction: Vec<f64>,
    pub fully_pruned_layers: Vec<usize>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CriticalSparsityEstimate {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
}

impl CriticalSparsityEstimate {
    fn from_values(values: Vec<f64>) -> CriticalSparsityEstimate {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        CriticalSparsityEstimate {
            trials: values.len(),
            mean,
            std: var.sqrt(),
            values,
        }
    }
}

/// Per-layer, per-output-row factors ρ_i = 1/√(Σ_j W_ij² δ_ij); rows whose
/// mask is all zero get ρ = 1 and are listed in `dead_rows`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RescaleFactors {
    pub rho: Vec<Vec<f64>>,
    pub dead_rows: Vec<Vec<usize>>,
    pub fully_pruned_layers: Vec<usize>,
}

impl RescaleFactors {
    /// Row factors multiplied by a common constant — pass σ_w to restore the
    /// kept-row second moment to the initialization scale σ_w² (ρ alone
    /// normalizes rows to 1).
    pub fn as_scale(&self, multiplier: f64) -> Vec<Vec<f64>> {
        self.rho
            .iter()
            .map(|layer| layer.iter().map(|r| r * multiplier).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PruneCriterion {
    Magnitude,
    Snip,
}

impl std::str::FromStr for PruneCriterion {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnitude" | "mbp" => Ok(PruneCriterion::Magnitude),
            "snip" | "sbp" => Ok(PruneCriterion::Snip),
            other => Err(invalid(format!("unknown criterion {other:?}"))),
        }
    }
}

/// |W| elementwise.
pub fn saliency_magnitude(params: &ParamSet) -> SaliencyMap {
    SaliencyMap {
        layers: params
            .weights
            .iter()
            .map(|w| Tensor {
                shape: w.shape.clone(),
                data: w.data.iter().map(|v| v.abs()).collect(),
            })
            .collect(),
    }
}

/// |W · ∂L/∂W| from one forward-backward pass of the dense net.
pub fn saliency_snip(arch: &ArchSpec, params: &ParamSet, batch: &Batch) -> Result<SaliencyMap> {
    if batch.is_empty() {
        return Err(invalid("snip needs a nonempty batch"));
    }
    let (_, grads) = loss_and_grads(arch, params, None, None, batch)?;
    Ok(SaliencyMap {
        layers: params
            .weights
            .iter()
            .zip(&grads.weights)
            .map(|(w, g)| Tensor {
                shape: w.shape.clone(),
                data: w
                    .data
                    .iter()
                    .zip(&g.data)
                    .map(|(wv, gv)| (wv * gv).abs())
                    .collect(),
            })
            .collect(),
    })
}

/// Indices of all entries ordered by descending saliency, ties broken by
/// (layer, flat index) ascending — the fixed total order shared with
/// `critical_sparsity`.
fn global_order(sal: &SaliencyMap) -> Vec<(usize, usize)> {
    let mut order: Vec<(usize, usize)> = sal
        .layers
        .iter()
        .enumerate()
        .flat_map(|(l, t)| (0..t.numel()).map(move |i| (l, i)))
        .collect();
    order.sort_by(|&(la, ia), &(lb, ib)| {
        let sa = sal.layers[la].data[ia];
        let sb = sal.layers[lb].data[ib];
        sb.partial_cmp(&sa)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(la.cmp(&lb))
            .then(ia.cmp(&ib))
    });
    order
}

/// Keep exactly k_s = ⌊(1−s)·ΣM_l⌋ weights of largest saliency.
pub fn global_topk_mask(sal: &SaliencyMap, s: f64) -> Result<(Mask, PruneReport)> {
    if !(0.0..1.0).contains(&s) {
        return Err(invalid("sparsity must lie in [0, 1)"));
    }
    let total = sal.total_weights();
    let k = ((1.0 - s) * total as f64).floor() as usize;
    let order = global_order(sal);
    let mut mask = Mask {
        layers: sal.layers.iter().map(|t| Tensor::zeros(&t.shape)).collect(),
    };
    let mut threshold = f64::INFINITY;
    for &(l, i) in order.iter().take(k) {
        mask.layers[l].data[i] = 1.0;
        threshold = sal.layers[l].data[i];
    }
    let per_layer: Vec<f64> = mask
        .layers
        .iter()
        .map(|t| t.data.iter().filter(|&&v| v != 0.0).count() as f64 / t.numel() as f64)
        .collect();
    let fully: Vec<usize> = per_layer
        .iter()
        .enumerate()
        .filter(|(_, &f)| f == 0.0)
        .map(|(l, _)| l)
        .collect();
    Ok((
        mask,
        PruneReport {
            sparsity: s,
            total_weights: total,
            kept: k,
            threshold,
            per_layer_kept_fraction: per_layer,
            fully_pruned_layers: fully,
        },
    ))
}

/// Exact critical sparsity of this realization: with R the worst global rank
/// among the per-layer top saliencies, s_cr = 1 − (R−1)/ΣM_l (a single-layer
/// net clamps to 1).
pub fn critical_sparsity(sal: &SaliencyMap) -> Result<f64> {
    if sal.layers.is_empty() || sal.layers.iter().any(|t| t.numel() == 0) {
        return Err(invalid("every layer must be nonempty"));
    }
    let order = global_order(sal);
    let total = sal.total_weights();
    let mut seen = vec![false; sal.layers.len()];
    let mut remaining = sal.layers.len();
    let mut worst_rank = 0usize;
    for (rank0, &(l, _)) in order.iter().enumerate() {
        if !seen[l] {
            seen[l] = true;
            worst_rank = rank0 + 1;
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
    }
    Ok(1.0 - (worst_rank - 1) as f64 / total as f64)
}

/// Initialization with per-layer fan-in scale factors: layer l gets
/// W ~ N(0, σ_w²/(α_l·v_l)). α ≡ 1 reduces to the standard rule.
pub fn init_params_layer_scaled(
    arch: &ArchSpec,
    sigma_w: f64,
    sigma_b: f64,
    alpha: &[f64],
    seed: u64,
) -> Result<ParamSet> {
    let mut params = init_params(arch, sigma_w, sigma_b, seed)?;
    if alpha.len() != params.weights.len() {
        return Err(invalid("need one alpha per weight layer"));
    }
    for (w, &a) in params.weights.iter_mut().zip(alpha) {
        if a <= 0.0 {
            return Err(invalid("alpha factors must be positive"));
        }
        if a != 1.0 {
            let f = 1.0 / a.sqrt();
            for v in w.data.iter_mut() {
                *v *= f;
            }
        }
    }
    Ok(params)
}

/// Monte-Carlo E[s_cr] over independent seeds (parallel, order-stable).
/// `batch_source` supplies the saliency batch per trial seed (SNIP only).
pub fn estimate_expected_scr(
    arch: &ArchSpec,
    sigma_w: f64,
    sigma_b: f64,
    alpha: Option<&[f64]>,
    criterion: PruneCriterion,
    batch_source: Option<&(dyn Fn(u64) -> Batch + Sync)>,
    trials: usize,
    seed: u64,
) -> Result<CriticalSparsityEstimate> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    if criterion == PruneCriterion::Snip && batch_source.is_none() {
        return Err(invalid("snip needs a batch source"));
    }
    let values: Result<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial_seed = seed.wrapping_add(t);
            let params = match alpha {
                Some(a) => init_params_layer_scaled(arch, sigma_w, sigma_b, a, trial_seed)?,
                None => init_params(arch, sigma_w, sigma_b, trial_seed)?,
            };
            let sal = match criterion {
                PruneCriterion::Magnitude => saliency_magnitude(&params),
                PruneCriterion::Snip => {
                    let batch = batch_source.unwrap()(trial_seed);
                    saliency_snip(arch, &params, &batch)?
                }
            };
            critical_sparsity(&sal)
        })
        .collect();
    Ok(CriticalSparsityEstimate::from_values(values?))
}

/// Empirical per-row rescaling of the kept weights (ρ = 1/√α with
/// α_i = Σ_j W_ij² δ_ij; conv rows aggregate over input channel and offset).
pub fn rescale_factors(params: &ParamSet, mask: &Mask) -> Result<RescaleFactors> {
    if mask.layers.len() != params.weights.len() {
        return Err(invalid("mask layer count mismatch"));
    }
    let mut rho = Vec::with_capacity(params.weights.len());
    let mut dead_rows = Vec::with_capacity(params.weights.len());
    let mut fully = Vec::new();
    for (l, (w, m)) in params.weights.iter().zip(&mask.layers).enumerate() {
        if !w.same_shape(m) {
            return Err(crate::error::Error::ShapeMismatch(format!(
                "mask shape mismatch at layer {l}"
            )));
        }
        let rows = w.shape[0];
        let per = w.numel() / rows;
        let mut lr = Vec::with_capacity(rows);
        let mut ld = Vec::new();
        for r in 0..rows {
            let mut acc = 0.0;
            for j in 0..per {
                let idx = r * per + j;
                if m.data[idx] != 0.0 {
                    acc += w.data[idx] * w.data[idx];
                }
            }
            if acc > 0.0 {
                lr.push(1.0 / acc.sqrt());
            } else {
                lr.push(1.0);
                ld.push(r);
            }
        }
        if ld.len() == rows {
            fully.push(l);
        }
        rho.push(lr);
        dead_rows.push(ld);
    }
    Ok(RescaleFactors {
        rho,
        dead_rows,
        fully_pruned_layers: fully,
    })
}

/// Bernoulli(p_l) keep masks with p_l = σ²_EOC/σ²_{w,l} — the subnetwork
/// whose effective forward scale sits back on the edge of chaos.
pub fn eoc_subnetwork_mask(
    arch: &ArchSpec,
    sigma_w_per_layer: &[f64],
    sigma_b: f64,
    seed: u64,
) -> Result<(Mask, Vec<f64>)> {
    let layers = arch.layers()?;
    if sigma_w_per_layer.len() != layers.len() {
        return Err(invalid("need one sigma_w per weight layer"));
    }
    let edge = eoc_solve(arch.act, sigma_b)?;
    let eoc2 = edge.sigma_w * edge.sigma_w;
    let mut probs = Vec::with_capacity(layers.len());
    for &sw in sigma_w_per_layer {
        if sw < edge.sigma_w - 1e-12 {
            return Err(invalid(format!(
                "layer sigma_w {sw} below the critical value {}",
                edge.sigma_w
            )));
        }
        probs.push((eoc2 / (sw * sw)).min(1.0));
    }
    let mut masks = Vec::with_capacity(layers.len());
    for (l, layer) in layers.iter().enumerate() {
        let mut t = Tensor::zeros(&layer.op.weight_shape());
        let p = probs[l];
        let mut rng = stream_rng(seed, 0x5eed_0000 + l as u64);
        for v in t.data.iter_mut() {
            *v = if rng.random::<f64>() < p { 1.0 } else { 0.0 };
        }
        masks.push(t);
    }
    Ok((Mask { layers: masks }, probs))
}

/// Per-layer empirical saliency second moment m_l = mean over weights of
/// (W·∂L/∂W)², for the network as wired (mask and scale applied).
pub fn conditioning_profile(
    arch: &ArchSpec,
    params: &ParamSet,
    mask: Option<&Mask>,
    scale: Option<&[Vec<f64>]>,
    batch: &Batch,
) -> Result<Vec<f64>> {
    let mask_layers = mask.map(|m| m.layers.as_slice());
    let (_, grads) = loss_and_grads(arch, params, mask_layers, scale, batch)?;
    let layers = arch.layers()?;
    let mut out = Vec::with_capacity(layers.len());
    for (l, layer) in layers.iter().enumerate() {
        let rows = layer.op.out_rows();
        let per = params.weights[l].numel() / rows;
        let mut acc = 0.0;
        for r in 0..rows {
            let s = scale.map_or(1.0, |sv| sv[l][r]);
            for j in 0..per {
                let idx = r * per + j;
                let m = mask_layers.map_or(1.0, |ml| ml[l].data[idx]);
                let weff = s * m * params.weights[l].data[idx];
                // Gradients are pre-mask; the applied weight is masked.
                let g = m * grads.weights[l].data[idx];
                acc += (weff * g) * (weff * g);
            }
        }
        out.push(acc / params.weights[l].numel() as f64);
    }
    Ok(out)
}

/// Mean conditioning profile over freshly initialized dense nets.
pub fn well_conditioned_metric(
    arch: &ArchSpec,
    sigma_w: f64,
    sigma_b: f64,
    batch_source: &(dyn Fn(u64) -> Batch + Sync),
    trials: usize,
    seed: u64,
) -> Result<ConditioningProfile> {
    if trials == 0 {
        return Err(invalid("need at least one trial"));
    }
    let per_trial: Result<Vec<Vec<f64>>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let ts = seed.wrapping_add(t);
            let params = init_params(arch, sigma_w, sigma_b, ts)?;
            conditioning_profile(arch, &params, None, None, &batch_source(ts))
        })
        .collect();
    let per_trial = per_trial?;
    let layers = per_trial[0].len();
    let mut m = vec![0.0; layers];
    for row in &per_trial {
        for (acc, v) in m.iter_mut().zip(row) {
            *acc += v / trials as f64;
        }
    }
    Ok(ConditioningProfile::from_moments(m))
}

/// Measured per-layer χ̂ of a (possibly masked) net: mean kept-row second
/// moment times the batch mean of φ'(y^{l−1})², for the square body layers.
pub fn measured_chi(
    arch: &ArchSpec,
    params: &ParamSet,
    mask: Option<&Mask>,
    batch: &Batch,
) -> Result<Vec<f64>> {
    let layers = arch.layers()?;
    let mask_layers = mask.map(|m| m.layers.as_slice());
    let pass = forward(arch, params, mask_layers, None, batch)?;
    let mut out = Vec::new();
    for l in 1..layers.len().saturating_sub(1) {
        let w = &params.weights[l];
        let rows = w.shape[0];
        let per = w.numel() / rows;
        let mut row_mean = 0.0;
        for r in 0..rows {
            let mut acc = 0.0;
            for j in 0..per {
                let idx = r * per + j;
                let m = mask_layers.map_or(1.0, |ml| ml[l].data[idx]);
                acc += m * w.data[idx] * w.data[idx];
            }
            row_mean += acc / rows as f64;
        }
        let prev = &pass.preacts[l - 1];
        let dsq = prev
            .data
            .iter()
            .map(|&y| {
                let d = arch.act.dapply(y);
                d * d
            })
            .sum::<f64>()
            / prev.numel() as f64;
        out.push(row_mean * dsq);
    }
    Ok(out)
}

/// Gaussian inputs with per-coordinate variance q0 (the standard probe batch
/// for mean-field measurements), shaped for the given architecture.
pub fn gaussian_batch(arch: &ArchSpec, q0: f64, batch: usize, seed: u64) -> Batch {
    let shape = match arch.kind {
        crate::nnet::ArchKind::Ffnn | crate::nnet::ArchKind::ResnetFfnn => {
            vec![batch, arch.input_dim]
        }
        _ => vec![batch, arch.in_channels, arch.spatial],
    };
    let mut t = Tensor::zeros(&shape);
    crate::rng::fill_normal(&mut stream_rng(seed, 0xda7a), &mut t.data, 0.0, q0.sqrt());
    let mut rng = stream_rng(seed, 0xda7b);
    let labels = (0..batch).map(|_| rng.random_range(0..arch.classes)).collect();
    Batch { inputs: t, labels }
}

/// Input variance that puts the first preactivation exactly at q: solve
/// q = σ_b² + σ_w²·q_in for the linear input layer, i.e. q_in = E[φ(√qZ)²].
pub fn input_variance_for_q(act: ActivationKind, sigma_b: f64, sigma_w: f64, q: f64) -> Result<f64> {
    let _ = (sigma_b, sigma_w);
    expect_phi_sq(act, q)
}
