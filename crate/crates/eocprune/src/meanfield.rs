//! Depth-wise mean-field recursions (variance q^l, correlation c^l, gradient
//! variance q̃^l), theoretical saliency profiles, critical-sparsity bounds,
//! residual conditioning scales, and decay-rate fitting.

use crate::error::{invalid, Result};
use crate::gaussfield::{
    correlation_map, cross_expectation, expect_dphi_sq, folded_quantile,
    folded_quantile_tail_from_ln, relu_correlation_closed_form, variance_map, ActivationKind,
    EdgePoint,
};

/// Per-layer signal-propagation trace. Index 0 is the input layer, so every
/// list has length `L + 1` for a depth-`L` run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct MeanFieldTrace {
    pub q: Vec<f64>,
    pub c: Vec<f64>,
    pub qtilde: Vec<f64>,
}

impl MeanFieldTrace {
    pub fn depth(&self) -> usize {
        self.q.len().saturating_sub(1)
    }
}

/// Iterate the forward variance and correlation maps for a depth-`L` fully
/// connected net at (σ_b, σ_w), then fill q̃ by the backward recursion at
/// constant width with q̃^L = 1.
pub fn propagate_ffnn(
    act: ActivationKind,
    sigma_b: f64,
    sigma_w: f64,
    q0: f64,
    c0: f64,
    depth: usize,
) -> Result<MeanFieldTrace> {
    if q0 <= 0.0 {
        return Err(invalid("q0 must be positive"));
    }
    if c0.abs() > 1.0 {
        return Err(invalid("c0 must lie in [-1, 1]"));
    }
    let sb2 = sigma_b * sigma_b;
    let sw2 = sigma_w * sigma_w;
    let mut q = Vec::with_capacity(depth + 1);
    let mut c = Vec::with_capacity(depth + 1);
    q.push(q0);
    c.push(c0);
    for l in 1..=depth {
        let qp = q[l - 1];
        let qn = variance_map(act, sigma_b, sigma_w, qp)?;
        let cov = sb2 + sw2 * cross_expectation(act, qp, qp, c[l - 1])?;
        q.push(qn);
        // Both inputs share the variance trajectory, so the normalizer is q^l.
        c.push((cov / qn).clamp(-1.0, 1.0));
    }
    let chis: Vec<f64> = (0..depth)
        .map(|l| Ok(sw2 * expect_dphi_sq(act, q[l])?))
        .collect::<Result<_>>()?;
    let widths = vec![1.0; depth + 1];
    let qtilde = backprop_variance(&chis, &widths, 1.0)?;
    Ok(MeanFieldTrace { q, c, qtilde })
}

/// Correlation grids for a 1-D circular CNN: each layer averages the f-map
/// over the kernel window, c^l_{a,a'} = (1/(2k+1)) Σ_β f(c^{l−1}_{a+β,a'+β}).
/// Returns `L + 1` grids of shape n×n (row-major), index 0 being the input.
pub fn propagate_cnn_grid(
    act: ActivationKind,
    edge: &EdgePoint,
    initial: &[f64],
    n: usize,
    k: usize,
    depth: usize,
) -> Result<Vec<Vec<f64>>> {
    if n == 0 || initial.len() != n * n {
        return Err(invalid("initial grid must be n*n with n >= 1"));
    }
    if initial.iter().any(|v| v.abs() > 1.0) {
        return Err(invalid("grid entries must lie in [-1, 1]"));
    }
    let mut grids = Vec::with_capacity(depth + 1);
    grids.push(initial.to_vec());
    let width = (2 * k + 1) as f64;
    let mut fmap = vec![0.0; n * n];
    for _ in 0..depth {
        let prev = grids.last().unwrap();
        for (dst, &v) in fmap.iter_mut().zip(prev.iter()) {
            *dst = correlation_map(act, edge, v)?;
        }
        let mut next = vec![0.0; n * n];
        for a in 0..n {
            for ap in 0..n {
                let mut acc = 0.0;
                for b in 0..=2 * k {
                    let off = (b + n) - k; // shift by β ∈ [−k, k], kept positive
                    let ia = (a + off) % n;
                    let iap = (ap + off) % n;
                    acc += fmap[ia * n + iap];
                }
                next[a * n + ap] = (acc / width).clamp(-1.0, 1.0);
            }
        }
        grids.push(next);
    }
    Ok(grids)
}

/// Backward gradient-variance recursion q̃^l = q̃^{l+1} (N_{l+1}/N_l) χ_l.
/// `chis[l]` is the slope at layer l's variance; output has the same length as
/// `widths`, with the last entry pinned to `qtilde_last`.
pub fn backprop_variance(chis: &[f64], widths: &[f64], qtilde_last: f64) -> Result<Vec<f64>> {
    if qtilde_last <= 0.0 {
        return Err(invalid("qtilde_last must be positive"));
    }
    if widths.iter().any(|&w| w <= 0.0) {
        return Err(invalid("widths must be positive"));
    }
    if chis.len() + 1 != widths.len() {
        return Err(invalid("need one chi per layer transition (len(widths) - 1)"));
    }
    let n = widths.len();
    let mut out = vec![0.0; n];
    out[n - 1] = qtilde_last;
    for l in (0..n - 1).rev() {
        out[l] = out[l + 1] * (widths[l + 1] / widths[l]) * chis[l];
    }
    Ok(out)
}

/// Per-layer saliency second moments m_l with their spread relative to the
/// last layer. A healthy profile has ratio_min ≤ 1 ≤ ratio_max; profiles with
/// a vanished layer are flagged instead.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConditioningProfile {
    pub m: Vec<f64>,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub ill_conditioned: bool,
}

impl ConditioningProfile {
    pub fn from_moments(m: Vec<f64>) -> ConditioningProfile {
        let last = *m.last().unwrap_or(&0.0);
        if last <= 0.0 || m.iter().any(|&v| v <= 0.0) {
            return ConditioningProfile {
                m,
                ratio_min: f64::NAN,
                ratio_max: f64::NAN,
                ill_conditioned: true,
            };
        }
        let ratios: Vec<f64> = m.iter().map(|v| v / last).collect();
        ConditioningProfile {
            ratio_min: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            ratio_max: ratios.iter().cloned().fold(0.0, f64::max),
            m,
            ill_conditioned: false,
        }
    }
}

/// Theoretical saliency second-moment profile m_l = A·χ^{L−l}, l = 1..=L.
pub fn saliency_profile_theory(chi_val: f64, depth: usize, a: f64) -> Result<Vec<f64>> {
    if chi_val <= 0.0 || a <= 0.0 {
        return Err(invalid("chi and A must be positive"));
    }
    Ok((1..=depth)
        .map(|l| a * chi_val.powi((depth - l) as i32))
        .collect())
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ResnetConditioning {
    /// Standard residual nets: (1+σ_w²/2)^L. Stable (1/√L branch) nets:
    /// (1+σ_w²/(2L))^L / L.
    pub scale: f64,
    /// Same quantity without the 1/L normalization, for the stable variant
    /// where both readings are in circulation.
    pub scale_unnormalized: f64,
    /// Residual saliency profiles are layer-independent in both variants.
    pub flat_profile: bool,
}

pub fn resnet_conditioning_theory(sigma_w: f64, depth: usize, stable: bool) -> Result<ResnetConditioning> {
    if sigma_w <= 0.0 || depth == 0 {
        return Err(invalid("sigma_w must be positive and depth >= 1"));
    }
    let l = depth as f64;
    let sw2 = sigma_w * sigma_w;
    let (scale, unnorm) = if stable {
        let base = (1.0 + sw2 / (2.0 * l)).powi(depth as i32);
        (base / l, base)
    } else {
        let base = (1.0 + sw2 / 2.0).powi(depth as i32);
        (base, base)
    };
    Ok(ResnetConditioning {
        scale,
        scale_unnormalized: unnorm,
        flat_profile: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    E,
    Ten,
}

impl std::str::FromStr for LogBase {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e" => Ok(LogBase::E),
            "10" | "ten" => Ok(LogBase::Ten),
            other => Err(invalid(format!("unknown log base {other:?} (want e|10)"))),
        }
    }
}

/// An expected-critical-sparsity upper bound; values above 1 carry no
/// information and are flagged vacuous (the value is still reported raw).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SparsityBound {
    pub value: f64,
    pub vacuous: bool,
}

impl SparsityBound {
    fn new(value: f64) -> SparsityBound {
        SparsityBound {
            value,
            vacuous: !(value <= 1.0),
        }
    }
}

/// E[s_cr] ≤ (1/L)(1 + log(κLN²)/κ) for one-shot sensitivity pruning of a
/// constant-width net off the critical line.
pub fn theorem1_bound(kappa: f64, depth: usize, width: usize, base: LogBase) -> Result<SparsityBound> {
    if kappa <= 0.0 || depth == 0 || width == 0 {
        return Err(invalid("need kappa > 0, L >= 1, N >= 1"));
    }
    let arg = kappa * depth as f64 * (width as f64) * (width as f64);
    let lg = match base {
        LogBase::E => arg.ln(),
        LogBase::Ten => arg.log10(),
    };
    Ok(SparsityBound::new((1.0 + lg / kappa) / depth as f64))
}

/// Which multiplier standardizes the layer-l0 vs layer-l quantile comparison
/// inside the magnitude-pruning bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantileScaling {
    /// Compare γ·Q_x against the tail quantile with exponent γ^{2−ε}
    /// (the bound as stated).
    Gamma,
    /// Standardize by the ratio of weight standard deviations, √γ, with
    /// exponent (√γ)^{2−ε}. Empirically this is the variant that actually
    /// upper-bounds the simulated critical sparsity.
    SqrtGamma,
}

pub const MBP_X_GRID: usize = 2000;
pub const MBP_EPS_GRID: usize = 50;

/// Magnitude-based-pruning bound:
/// inf_ε { x_{ε,γ} + ζ_{l0}N²/(1+γ^{2−ε}) (1−x_{ε,γ})^{1+γ^{2−ε}} } where
/// x_{ε,γ} is the smallest y such that γ·Q_x exceeds Q_{1−(1−x)^{γ^{2−ε}}} for
/// every grid point x > y (Q = folded-normal quantile).
pub fn mbp_bound(
    gamma: f64,
    zeta_l0: f64,
    width: usize,
    _depth: usize,
    eps_grid: usize,
    x_grid: usize,
    scaling: QuantileScaling,
) -> Result<SparsityBound> {
    if gamma <= 1.0 {
        return Err(invalid("gamma must exceed 1"));
    }
    if zeta_l0 <= 0.0 || width == 0 || eps_grid == 0 || x_grid == 0 {
        return Err(invalid("need zeta > 0, N >= 1 and nonempty grids"));
    }
    let mult_base = match scaling {
        QuantileScaling::Gamma => gamma,
        QuantileScaling::SqrtGamma => gamma.sqrt(),
    };
    let n2 = (width * width) as f64;
    let xs: Vec<f64> = (1..=x_grid).map(|i| i as f64 / (x_grid + 1) as f64).collect();
    let qx: Vec<f64> = xs.iter().map(|&x| folded_quantile(x)).collect::<Result<_>>()?;
    let mut best = f64::INFINITY;
    for j in 0..eps_grid {
        let eps = if eps_grid == 1 {
            1.0
        } else {
            0.01 + (1.99 - 0.01) * j as f64 / (eps_grid - 1) as f64
        };
        let g = mult_base.powf(2.0 - eps);
        // Largest grid x violating mult·Q_x > Q_{1−(1−x)^g}; x_{ε,γ} is the
        // next grid point up.
        let mut cutoff = 0usize; // index into xs of x_{ε,γ}; 0 = holds everywhere
        for (i, (&x, &q)) in xs.iter().zip(&qx).enumerate().rev() {
            let rhs = folded_quantile_tail_from_ln(g * (-x).ln_1p());
            if mult_base * q <= rhs {
                cutoff = i + 1;
                break;
            }
        }
        if cutoff >= xs.len() {
            continue; // inequality never stabilizes on this grid
        }
        let x_eg = xs[cutoff];
        let tail = zeta_l0 * n2 / (1.0 + g) * (1.0 - x_eg).powf(1.0 + g);
        let val = x_eg + tail;
        if val < best {
            best = val;
        }
    }
    if !best.is_finite() {
        return Err(crate::error::Error::BracketFailure(
            "no epsilon on the grid yields a stabilized quantile crossing".into(),
        ));
    }
    Ok(SparsityBound::new(best))
}

/// Correlation trajectory of a magnitude-pruned residual ReLU net:
/// ĉ^l = ĉ^{l−1}/(1+λ) + λ·f(ĉ^{l−1})/(1+λ). Returns L+1 values from ĉ⁰ = c0.
pub fn pruned_resnet_correlation(lambda: f64, c0: f64, depth: usize) -> Result<Vec<f64>> {
    if lambda <= 0.0 {
        return Err(invalid("lambda must be positive"));
    }
    if c0.abs() > 1.0 {
        return Err(invalid("c0 must lie in [-1, 1]"));
    }
    let mut out = Vec::with_capacity(depth + 1);
    out.push(c0);
    let w = lambda / (1.0 + lambda);
    for _ in 0..depth {
        let c = *out.last().unwrap();
        let next = c / (1.0 + lambda) + w * relu_correlation_closed_form(c)?;
        out.push(next.clamp(-1.0, 1.0));
    }
    Ok(out)
}

/// The asymptotic 1 − ĉ^l ≈ 4/(η² l²) constant for the pruned-ResNet law,
/// η = λβ/(1+λ) with β = 2√2/(3π).
pub fn pruned_resnet_decay_constant(lambda: f64) -> f64 {
    let beta = 2.0 * std::f64::consts::SQRT_2 / (3.0 * std::f64::consts::PI);
    let eta = lambda * beta / (1.0 + lambda);
    4.0 / (eta * eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitKind {
    /// log y against log l: slope is the polynomial exponent.
    LogLog,
    /// log y against l: slope is the natural-log decay rate.
    SemiLog,
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares fit of a decay law over `series[window.0 ..= window.1]`,
/// where series index i corresponds to l = i + 1.
pub fn decay_exponent_fit(series: &[f64], window: (usize, usize), kind: FitKind) -> Result<DecayFit> {
    let (lo, hi) = window;
    if lo > hi || hi >= series.len() {
        return Err(invalid("window out of range"));
    }
    let mut xs = Vec::with_capacity(hi - lo + 1);
    let mut ys = Vec::with_capacity(hi - lo + 1);
    for i in lo..=hi {
        let y = series[i];
        if y <= 0.0 {
            return Err(invalid(format!("nonpositive value {y} at index {i} in fit window")));
        }
        let l = (i + 1) as f64;
        xs.push(match kind {
            FitKind::LogLog => l.ln(),
            FitKind::SemiLog => l,
        });
        ys.push(y.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(invalid("degenerate fit window (single abscissa)"));
    }
    let slope = sxy / sxx;
    Ok(DecayFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Sub-unit stable fixed point of the correlation map in the chaotic phase,
/// by bisection on f(c) − c over (0, 1).
pub fn correlation_fixed_point(act: ActivationKind, edge: &EdgePoint) -> Result<f64> {
    let g = |c: f64| -> Result<f64> { Ok(correlation_map(act, edge, c)? - c) };
    let mut lo = 0.0;
    let mut hi = 1.0 - 1e-9;
    let glo = g(lo)?;
    let ghi = g(hi)?;
    if glo.signum() == ghi.signum() {
        return Err(crate::error::Error::BracketFailure(
            "f(c) - c does not change sign on (0, 1); not in the chaotic phase?".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm.abs() < 1e-13 || hi - lo < 1e-14 {
            return Ok(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Convenience: χ per layer along a variance trajectory.
pub fn chi_profile(act: ActivationKind, sigma_w: f64, qs: &[f64]) -> Result<Vec<f64>> {
    let sw2 = sigma_w * sigma_w;
    qs.iter().map(|&q| Ok(sw2 * expect_dphi_sq(act, q)?)).collect()
}
