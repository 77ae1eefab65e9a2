//! Gaussian expectation engine: activation moments by Gauss–Hermite
//! quadrature, the correlation map f and its slope χ, fixed-point variances,
//! the edge-of-chaos solver, and folded-normal quantiles.

use crate::error::{invalid, Error, Result};
use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};

/// √2, the ReLU edge-of-chaos weight scale (σ_b = 0).
pub const RELU_EOC_SIGMA_W: f64 = SQRT_2;

pub const DEFAULT_QUAD_ORDER: usize = 160;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    Tanh,
}

impl ActivationKind {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            ActivationKind::Tanh => x.tanh(),
        }
    }

    /// Pointwise derivative. ReLU at exactly 0 uses the a.e. convention ½ so
    /// that pointwise evaluation matches the Gaussian expectation it feeds.
    #[inline]
    pub fn dapply(self, x: f64) -> f64 {
        match self {
            ActivationKind::Relu => {
                if x > 0.0 {
                    1.0
                } else if x == 0.0 {
                    0.5
                } else {
                    0.0
                }
            }
            ActivationKind::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }

    /// Whether all expectations below have closed forms (no quadrature).
    pub fn has_closed_forms(self) -> bool {
        matches!(self, ActivationKind::Relu)
    }
}

impl std::str::FromStr for ActivationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(ActivationKind::Relu),
            "tanh" => Ok(ActivationKind::Tanh),
            other => Err(invalid(format!("unknown activation {other:?}"))),
        }
    }
}

/// Gauss–Hermite rule in the probabilist normalization: Σ w_i g(x_i) ≈ E[g(Z)]
/// for Z ~ N(0,1), with Σ w_i = 1. Exact for polynomials of degree < 2·order.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn expect<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }

    /// E[g(Z₁, Z₂)] over independent standard normals, via the tensor grid.
    pub fn expect2<F: Fn(f64, f64) -> f64>(&self, g: F) -> f64 {
        let mut acc = 0.0;
        for (&x1, &w1) in self.nodes.iter().zip(&self.weights) {
            let mut inner = 0.0;
            for (&x2, &w2) in self.nodes.iter().zip(&self.weights) {
                inner += w2 * g(x1, x2);
            }
            acc += w1 * inner;
        }
        acc
    }
}

pub fn make_quadrature(order: usize) -> Result<QuadratureRule> {
    if order < 2 {
        return Err(invalid("quadrature order must be >= 2"));
    }
    // Roots of the physicists' Hermite polynomial by Newton iteration on the
    // orthonormal recurrence, then rescaled to the probabilist convention.
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let mut x = 0.0f64;
    for i in 0..(n + 1) / 2 {
        x = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => x - 1.14 * nf.powf(0.426) / x,
            2 => 1.86 * x - 0.86 * nodes[0],
            3 => 1.91 * x - 0.91 * nodes[1],
            _ => 2.0 * x - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            // Orthonormal Hermite values at x: p1 = H̃_n, p2 = H̃_{n-1}.
            let mut p1 = PI.powf(-0.25);
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = x * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        nodes[n - 1 - i] = -x;
        let w = 2.0 / (pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    // Physicists' -> probabilist: z = √2·x, w /= √π.
    for i in 0..n {
        nodes[i] *= SQRT_2;
        weights[i] /= PI.sqrt();
    }
    // Nodes come out descending; flip to ascending for readability.
    nodes.reverse();
    weights.reverse();
    // The asymptotic initial guesses stop bracketing the extreme roots
    // somewhere around order 190 and Newton then converges to duplicated
    // roots; reject any rule that fails the first two moment identities
    // instead of returning garbage.
    let wsum: f64 = weights.iter().sum();
    let second: f64 = nodes.iter().zip(&weights).map(|(&x, &w)| w * x * x).sum();
    if (wsum - 1.0).abs() > 1e-10 || (second - 1.0).abs() > 1e-10 {
        return Err(Error::Convergence {
            msg: format!("make_quadrature({order}): node search failed"),
            last: wsum,
        });
    }
    Ok(QuadratureRule {
        order,
        nodes,
        weights,
    })
}

fn default_quad() -> &'static QuadratureRule {
    use std::sync::OnceLock;
    static QUAD: OnceLock<QuadratureRule> = OnceLock::new();
    QUAD.get_or_init(|| make_quadrature(DEFAULT_QUAD_ORDER).expect("default order is valid"))
}

/// Above this input scale √q the tanh moment integrands (powers of sech) are
/// narrow relative to the Hermite node spacing — equivalently, tanh's poles
/// at ±iπ/(2√q) sit close to the real axis and stall Hermite convergence —
/// so switch to direct integration against the density.
const WIDE_SCALE: f64 = 2.0;

/// ∫_{−b}^{b} g(x) N(x; 0, s²) dx by composite Simpson, for integrands g that
/// decay exponentially (effective support inside [−b, b]).
fn simpson_peaked<F: Fn(f64) -> f64>(s: f64, b: f64, g: F) -> f64 {
    let n = 4000usize;
    let h = 2.0 * b / n as f64;
    let dens = |x: f64| (-0.5 * (x / s) * (x / s)).exp() / (s * (2.0 * PI).sqrt());
    let mut acc = g(-b) * dens(-b) + g(b) * dens(b);
    for i in 1..n {
        let x = -b + h * i as f64;
        let coef = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += coef * g(x) * dens(x);
    }
    acc * h / 3.0
}

/// E[φ(√q Z)²].
pub fn expect_phi_sq(act: ActivationKind, q: f64) -> Result<f64> {
    if q < 0.0 {
        return Err(invalid("q must be nonnegative"));
    }
    Ok(match act {
        ActivationKind::Relu => q / 2.0,
        ActivationKind::Tanh => {
            let s = q.sqrt();
            if s > WIDE_SCALE {
                // tanh² = 1 − sech²; the sech² bump (width ~1) is narrower than
                // the Hermite node spacing once s is large.
                1.0 - simpson_peaked(s, 25.0, |x| {
                    let c = x.cosh();
                    1.0 / (c * c)
                })
            } else {
                default_quad().expect(|z| {
                    let t = (s * z).tanh();
                    t * t
                })
            }
        }
    })
}

/// E[φ'(√q Z)²].
pub fn expect_dphi_sq(act: ActivationKind, q: f64) -> Result<f64> {
    if q < 0.0 {
        return Err(invalid("q must be nonnegative"));
    }
    Ok(match act {
        ActivationKind::Relu => 0.5,
        ActivationKind::Tanh => {
            let s = q.sqrt();
            if s > WIDE_SCALE {
                simpson_peaked(s, 25.0, |x| {
                    let c = x.cosh();
                    1.0 / (c * c * c * c)
                })
            } else {
                default_quad().expect(|z| {
                    let t = (s * z).tanh();
                    let d = 1.0 - t * t;
                    d * d
                })
            }
        }
    })
}

/// E[φ(√q1 Z₁) φ(√q2 (c Z₁ + √(1−c²) Z₂))].
pub fn cross_expectation(act: ActivationKind, q1: f64, q2: f64, c: f64) -> Result<f64> {
    if q1 < 0.0 || q2 < 0.0 {
        return Err(invalid("variances must be nonnegative"));
    }
    if c.abs() > 1.0 {
        return Err(invalid("correlation must lie in [-1, 1]"));
    }
    match act {
        ActivationKind::Relu => {
            // E[relu(U)relu(V)] for standard bivariate normals at correlation c
            // is (√(1−c²) + c(π − arccos c)) / (2π); scale by √(q1 q2).
            let base = ((1.0 - c * c).sqrt() + c * (PI - c.acos())) / (2.0 * PI);
            Ok((q1 * q2).sqrt() * base)
        }
        ActivationKind::Tanh => {
            let s1 = q1.sqrt();
            let s2 = q2.sqrt();
            let r = (1.0 - c * c).max(0.0).sqrt();
            let quad = default_quad();
            let raw = quad.expect2(|z1, z2| (s1 * z1).tanh() * (s2 * (c * z1 + r * z2)).tanh());
            if s1.max(s2) <= WIDE_SCALE {
                return Ok(raw);
            }
            // Wide inputs: the Hermite rule is slightly off (same pole issue
            // as the 1-D moments), worst at |c| = 1 where consistency with
            // E[φ²] — and hence f(1) = 1 in the correlation map — matters
            // exactly. Pin the endpoints to a dense direct integration and
            // interpolate the correction linearly in c, which preserves
            // oddness and leaves mid-range values within quadrature noise.
            let hermite_end = quad.expect(|z| (s1 * z).tanh() * (s2 * z).tanh());
            // Equal scales reduce to E[φ²]; evaluating through the same path
            // keeps f(1) = 1 exact in the correlation map.
            let end = if s1 == s2 {
                expect_phi_sq(ActivationKind::Tanh, q1)?
            } else {
                tanh_pair_wide(s1, s2)
            };
            Ok(raw + c * (end - hermite_end))
        }
    }
}

/// E[tanh(s1 Z) tanh(s2 Z)] for wide scales, via 1 − E[1 − tanh·tanh] with a
/// fine composite Simpson grid (the gap decays like e^{−2·min(s1,s2)|z|}).
fn tanh_pair_wide(s1: f64, s2: f64) -> f64 {
    let n = 16_000usize;
    let b = 9.0;
    let h = 2.0 * b / n as f64;
    let dens = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    let g = |z: f64| 1.0 - (s1 * z).tanh() * (s2 * z).tanh();
    let mut acc = g(-b) * dens(-b) + g(b) * dens(b);
    for i in 1..n {
        let z = -b + h * i as f64;
        let coef = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += coef * g(z) * dens(z);
    }
    1.0 - acc * h / 3.0
}

/// V(q) = σ_b² + σ_w² E[φ(√q Z)²].
pub fn variance_map(act: ActivationKind, sigma_b: f64, sigma_w: f64, q: f64) -> Result<f64> {
    Ok(sigma_b * sigma_b + sigma_w * sigma_w * expect_phi_sq(act, q)?)
}

#[derive(Debug, Clone, Copy)]
pub struct FixedPoint {
    pub q: f64,
    /// True for the ReLU (σ_b=0, σ_w=√2) family where every q ≥ 0 is fixed;
    /// the input seed is returned unchanged and downstream code conventionally
    /// uses q* = 1.
    pub degenerate: bool,
    pub iterations: usize,
}

fn dvariance_dq(act: ActivationKind, sigma_w: f64, q: f64) -> f64 {
    let sw2 = sigma_w * sigma_w;
    match act {
        ActivationKind::Relu => sw2 / 2.0,
        ActivationKind::Tanh => {
            if q < 1e-12 {
                // d/dq E[tanh²(√q Z)] -> E[Z²]·φ'(0)² = 1 as q -> 0.
                sw2
            } else {
                let s = q.sqrt();
                if s > WIDE_SCALE {
                    sw2 / (s * s)
                        * simpson_peaked(s, 25.0, |x| {
                            let c = x.cosh();
                            x * x.tanh() / (c * c)
                        })
                } else {
                    sw2 * default_quad().expect(|z| {
                        let t = (s * z).tanh();
                        t * (1.0 - t * t) * z
                    }) / s
                }
            }
        }
    }
}

/// Solve q = V(q) by damped Newton on V(q) − q, from q_init.
pub fn fixed_point_q(
    act: ActivationKind,
    sigma_b: f64,
    sigma_w: f64,
    q_init: f64,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPoint> {
    if q_init <= 0.0 || tol <= 0.0 {
        return Err(invalid("q_init and tol must be positive"));
    }
    if act == ActivationKind::Relu
        && sigma_b == 0.0
        && (sigma_w * sigma_w / 2.0 - 1.0).abs() < 1e-12
    {
        return Ok(FixedPoint {
            q: q_init,
            degenerate: true,
            iterations: 0,
        });
    }
    let mut q = q_init;
    for it in 0..max_iter {
        let r = variance_map(act, sigma_b, sigma_w, q)? - q;
        if r.abs() <= tol {
            return Ok(FixedPoint {
                q,
                degenerate: false,
                iterations: it,
            });
        }
        let slope = dvariance_dq(act, sigma_w, q) - 1.0;
        let newton = if slope.abs() > 1e-14 {
            q - r / slope
        } else {
            f64::NAN
        };
        // Newton is fast near the root but can overshoot below zero when the
        // map is strongly expanding; fall back to the plain iteration q <- V(q),
        // which is globally convergent for these monotone maps.
        q = if newton.is_finite()
            && newton > 0.0
            && (variance_map(act, sigma_b, sigma_w, newton)? - newton).abs() < r.abs()
        {
            newton
        } else {
            r + q
        };
    }
    Err(Error::Convergence {
        msg: format!("fixed_point_q({act:?}, σ_b={sigma_b}, σ_w={sigma_w})"),
        last: q,
    })
}

/// A hyperparameter pair with its limiting variance and correlation slope.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EdgePoint {
    pub sigma_b: f64,
    pub sigma_w: f64,
    pub q_star: f64,
    pub chi: f64,
    pub degenerate: bool,
}

impl EdgePoint {
    /// Build from hyperparameters, resolving q* and χ.
    pub fn resolve(act: ActivationKind, sigma_b: f64, sigma_w: f64) -> Result<EdgePoint> {
        let fp = fixed_point_q(act, sigma_b, sigma_w, 1.0, 1e-13, 500)?;
        let q_star = if fp.degenerate { 1.0 } else { fp.q };
        let chi = sigma_w * sigma_w * expect_dphi_sq(act, q_star)?;
        Ok(EdgePoint {
            sigma_b,
            sigma_w,
            q_star,
            chi,
            degenerate: fp.degenerate,
        })
    }
}

/// f(c) = (σ_b² + σ_w² E[φ(√q* Z₁)φ(√q* Z(c))]) / q*.
pub fn correlation_map(act: ActivationKind, edge: &EdgePoint, c: f64) -> Result<f64> {
    if c.abs() > 1.0 {
        return Err(invalid("correlation must lie in [-1, 1]"));
    }
    if edge.q_star <= 0.0 {
        return Err(invalid("degenerate edge: q_star must be positive"));
    }
    let cross = cross_expectation(act, edge.q_star, edge.q_star, c)?;
    Ok((edge.sigma_b * edge.sigma_b + edge.sigma_w * edge.sigma_w * cross) / edge.q_star)
}

/// ReLU correlation map on the edge of chaos:
/// f(c) = (1/π)(c·arcsin c + √(1−c²)) + c/2.
pub fn relu_correlation_closed_form(c: f64) -> Result<f64> {
    if c.abs() > 1.0 {
        return Err(invalid("correlation must lie in [-1, 1]"));
    }
    Ok((c * c.asin() + (1.0 - c * c).sqrt()) / PI + c / 2.0)
}

/// χ(σ_b, σ_w) = σ_w² E[φ'(√q* Z)²] = f'(1).
pub fn chi(act: ActivationKind, sigma_b: f64, sigma_w: f64) -> Result<f64> {
    match act {
        // Scale-free: χ = σ_w²/2 for every q.
        ActivationKind::Relu => Ok(sigma_w * sigma_w / 2.0),
        ActivationKind::Tanh => {
            let fp = fixed_point_q(act, sigma_b, sigma_w, 1.0, 1e-13, 500)?;
            Ok(sigma_w * sigma_w * expect_dphi_sq(act, fp.q)?)
        }
    }
}

pub const EOC_BRACKET: (f64, f64) = (1e-3, 10.0);

/// Locate the σ_w with χ(σ_b, σ_w) = 1 by bisection over [1e-3, 10].
pub fn eoc_solve(act: ActivationKind, sigma_b: f64) -> Result<EdgePoint> {
    if sigma_b < 0.0 {
        return Err(invalid("sigma_b must be nonnegative"));
    }
    if act == ActivationKind::Relu {
        if sigma_b > 0.0 {
            // V(q) = σ_b² + q at σ_w = √2 has no finite fixed point.
            return Err(invalid(
                "relu admits an edge of chaos only at sigma_b = 0 (no finite q* otherwise)",
            ));
        }
        return Ok(EdgePoint {
            sigma_b: 0.0,
            sigma_w: RELU_EOC_SIGMA_W,
            q_star: 1.0,
            chi: 1.0,
            degenerate: true,
        });
    }
    let (mut lo, mut hi) = EOC_BRACKET;
    let f_lo = chi(act, sigma_b, lo)? - 1.0;
    let f_hi = chi(act, sigma_b, hi)? - 1.0;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::BracketFailure(format!(
            "chi - 1 does not change sign on [{lo}, {hi}] at sigma_b={sigma_b}"
        )));
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let f_mid = chi(act, sigma_b, mid)? - 1.0;
        if f_mid.abs() <= 1e-9 || (hi - lo) < 1e-13 {
            break;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let edge = EdgePoint::resolve(act, sigma_b, mid)?;
    if (edge.chi - 1.0).abs() > 1e-6 {
        return Err(Error::Convergence {
            msg: format!("eoc_solve({act:?}, sigma_b={sigma_b}): |chi-1| > 1e-6"),
            last: edge.chi,
        });
    }
    Ok(edge)
}

// ---------------------------------------------------------------------------
// Normal / folded-normal quantiles
// ---------------------------------------------------------------------------

#[inline]
fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

#[inline]
fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

#[inline]
fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Peter Acklam's rational approximation of Φ⁻¹(p) (|error| < 1.2e-9).
fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -acklam(1.0 - p)
    }
}

/// Φ⁻¹(p), Acklam seed + Newton refinement (tolerance ~1e-10 in probability).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) || p == 0.0 {
        if p == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        return Err(invalid("probability must lie in [0, 1)"));
    }
    // Work in the nearer tail for accuracy.
    if p > 0.5 {
        return Ok(normal_isf(1.0 - p));
    }
    let mut z = acklam(p);
    for _ in 0..4 {
        let e = normal_cdf(z) - p;
        z -= e / normal_pdf(z);
    }
    Ok(z)
}

/// Inverse survival Φ⁻¹(1−u) for u in (0, 0.5], stable deep into the tail.
pub fn normal_isf(u: f64) -> f64 {
    normal_isf_from_ln(u.ln())
}

/// ln Φ̄(z) for large z, via the asymptotic series.
fn ln_sf_asym(z: f64) -> f64 {
    let z2 = z * z;
    -0.5 * z2 - z.ln() - 0.5 * (2.0 * PI).ln() + (-1.0 / z2 + 3.0 / (z2 * z2)).ln_1p()
}

/// Φ⁻¹(1−u) given ln u; handles ln u far below the representable range of u
/// (needed when u = (1−x)^g underflows for large exponents g).
pub fn normal_isf_from_ln(ln_u: f64) -> f64 {
    if ln_u >= -0.6931471805599453 {
        // u >= 1/2: center/left half, plain quantile is accurate.
        let u = ln_u.exp();
        let mut z = acklam(u);
        for _ in 0..4 {
            let e = normal_cdf(z) - u;
            z -= e / normal_pdf(z);
        }
        return -z;
    }
    if ln_u > -600.0 {
        let u = ln_u.exp();
        let mut z = -acklam(u);
        for _ in 0..4 {
            let s = normal_sf(z);
            if s > 0.0 && s.is_finite() {
                z += (s - u) / normal_pdf(z);
            } else {
                z += (ln_sf_asym(z) - ln_u) / (z + 1.0 / z);
            }
        }
        return z;
    }
    // Deep tail: z ≈ sqrt(-2 ln u - ln(-2 ln u) - ln 2π), then log-space Newton.
    let t = -2.0 * ln_u;
    let mut z = (t - t.ln() - (2.0 * PI).ln()).max(1.0).sqrt();
    for _ in 0..4 {
        z += (ln_sf_asym(z) - ln_u) / (z + 1.0 / z);
    }
    z
}

/// Q_x: the x-th quantile of |N(0,1)|, i.e. Φ⁻¹((1+x)/2).
pub fn folded_quantile(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return Err(invalid("folded quantile argument must lie in [0, 1)"));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    normal_quantile((1.0 + x) / 2.0)
}

/// Upper-tail folded quantile Q_{1−u} given ln u, stable for tiny u.
pub fn folded_quantile_tail_from_ln(ln_u: f64) -> f64 {
    // Q_{1-u} of |Z| equals Φ⁻¹(1 - u/2).
    normal_isf_from_ln(ln_u - std::f64::consts::LN_2)
}
