use super::arch::{ArchSpec, Layer, LayerOp};
use super::tensor::Tensor;
use crate::error::{invalid, Error, Result};
use crate::gaussfield::ActivationKind;
use crate::rng::{fill_normal, stream_rng};

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ParamSet {
    pub weights: Vec<Tensor>,
    pub biases: Vec<Tensor>,
    pub sigma_w: f64,
    pub sigma_b: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub weights: Vec<Tensor>,
    pub biases: Vec<Tensor>,
}

#[derive(Debug, Clone)]
pub struct Batch {
    /// FFNN: [batch, d]. CNN: [batch, channels, N].
    pub inputs: Tensor,
    pub labels: Vec<usize>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// All preactivations y^l (one per weight layer; last entry is the logits).
#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub preacts: Vec<Tensor>,
}

impl ForwardPass {
    pub fn logits(&self) -> &Tensor {
        self.preacts.last().expect("non-empty network")
    }
}

/// Draw W^l ~ N(0, σ_w²/v_l), B^l ~ N(0, σ_b²); every layer gets its own RNG
/// stream so the draw is independent of evaluation order.
pub fn init_params(arch: &ArchSpec, sigma_w: f64, sigma_b: f64, seed: u64) -> Result<ParamSet> {
    if sigma_w <= 0.0 || sigma_b < 0.0 {
        return Err(invalid("need sigma_w > 0 and sigma_b >= 0"));
    }
    let layers = arch.layers()?;
    let mut weights = Vec::with_capacity(layers.len());
    let mut biases = Vec::with_capacity(layers.len());
    for (l, layer) in layers.iter().enumerate() {
        let std_w = sigma_w / (layer.op.fan_in() as f64).sqrt();
        let mut w = Tensor::zeros(&layer.op.weight_shape());
        fill_normal(&mut stream_rng(seed, 2 * l as u64), &mut w.data, 0.0, std_w);
        let mut b = Tensor::zeros(&[layer.op.bias_len()]);
        if sigma_b > 0.0 {
            fill_normal(
                &mut stream_rng(seed, 2 * l as u64 + 1),
                &mut b.data,
                0.0,
                sigma_b,
            );
        }
        weights.push(w);
        biases.push(b);
    }
    Ok(ParamSet {
        weights,
        biases,
        sigma_w,
        sigma_b,
        seed,
    })
}

fn check_overlays(
    layers: &[Layer],
    params: &ParamSet,
    mask: Option<&[Tensor]>,
    scale: Option<&[Vec<f64>]>,
) -> Result<()> {
    if params.weights.len() != layers.len() || params.biases.len() != layers.len() {
        return Err(Error::ShapeMismatch("params do not match architecture".into()));
    }
    for (w, l) in params.weights.iter().zip(layers) {
        if w.shape != l.op.weight_shape() {
            return Err(Error::ShapeMismatch(format!(
                "weight shape {:?} vs layer {:?}",
                w.shape,
                l.op.weight_shape()
            )));
        }
    }
    if let Some(m) = mask {
        if m.len() != layers.len() {
            return Err(Error::ShapeMismatch("mask layer count mismatch".into()));
        }
        for (mt, w) in m.iter().zip(&params.weights) {
            if !mt.same_shape(w) {
                return Err(Error::ShapeMismatch("mask shape mismatch".into()));
            }
        }
    }
    if let Some(s) = scale {
        if s.len() != layers.len() {
            return Err(Error::ShapeMismatch("scale layer count mismatch".into()));
        }
        for (sv, l) in s.iter().zip(layers) {
            if sv.len() != l.op.out_rows() {
                return Err(Error::ShapeMismatch(
                    "scale must have one factor per output row".into(),
                ));
            }
        }
    }
    Ok(())
}

#[inline]
fn eff(w: f64, m: Option<f64>, s: f64) -> f64 {
    s * m.unwrap_or(1.0) * w
}

struct LayerCtx<'a> {
    layer: &'a Layer,
    w: &'a Tensor,
    b: &'a Tensor,
    mask: Option<&'a Tensor>,
    scale: Option<&'a [f64]>,
}

/// z = W_eff · a + B for one layer (a row-major [batch, fan] activation).
fn apply_linear(ctx: &LayerCtx, a: &Tensor, batch: usize) -> Tensor {
    match *ctx.layer {
        Layer {
            op: LayerOp::Dense { out, inp },
            ..
        } => {
            let mut z = Tensor::zeros(&[batch, out]);
            for bi in 0..batch {
                let arow = &a.data[bi * inp..(bi + 1) * inp];
                let zrow = &mut z.data[bi * out..(bi + 1) * out];
                for i in 0..out {
                    let s = ctx.scale.map_or(1.0, |sv| sv[i]);
                    let wrow = &ctx.w.data[i * inp..(i + 1) * inp];
                    let mut acc = 0.0;
                    match ctx.mask {
                        None => {
                            for (wv, av) in wrow.iter().zip(arow) {
                                acc += wv * av;
                            }
                            acc *= s;
                        }
                        Some(m) => {
                            let mrow = &m.data[i * inp..(i + 1) * inp];
                            for j in 0..inp {
                                acc += eff(wrow[j], Some(mrow[j]), s) * arow[j];
                            }
                        }
                    }
                    zrow[i] = acc + ctx.b.data[i];
                }
            }
            z
        }
        Layer {
            op: LayerOp::Conv { c_out, c_in, k, n },
            ..
        } => {
            let win = 2 * k + 1;
            let mut z = Tensor::zeros(&[batch, c_out, n]);
            for bi in 0..batch {
                for o in 0..c_out {
                    let s = ctx.scale.map_or(1.0, |sv| sv[o]);
                    for alpha in 0..n {
                        let mut acc = 0.0;
                        for c in 0..c_in {
                            for u in 0..win {
                                let widx = (o * c_in + c) * win + u;
                                let m = ctx.mask.map(|mt| mt.data[widx]);
                                let pos = (alpha + u + n - k) % n;
                                acc += eff(ctx.w.data[widx], m, s)
                                    * a.data[(bi * c_in + c) * n + pos];
                            }
                        }
                        z.data[(bi * c_out + o) * n + alpha] = acc + ctx.b.data[o];
                    }
                }
            }
            z
        }
    }
}

fn activate(act: ActivationKind, y: &Tensor) -> Tensor {
    Tensor {
        shape: y.shape.clone(),
        data: y.data.iter().map(|&v| act.apply(v)).collect(),
    }
}

fn flatten_rows(t: &Tensor, batch: usize) -> Tensor {
    Tensor {
        shape: vec![batch, t.numel() / batch],
        data: t.data.clone(),
    }
}

/// Run the net; `mask` zeroes pruned weights, `scale` multiplies kept rows
/// (constant across the fan-in index). Mask ≡ 1 and scale ≡ 1 reproduce the
/// unmasked net bit-for-bit.
pub fn forward(
    arch: &ArchSpec,
    params: &ParamSet,
    mask: Option<&[Tensor]>,
    scale: Option<&[Vec<f64>]>,
    batch: &Batch,
) -> Result<ForwardPass> {
    let layers = arch.layers()?;
    check_overlays(&layers, params, mask, scale)?;
    let bsz = batch.len();
    if bsz == 0 || batch.inputs.numel() % bsz != 0 {
        return Err(Error::ShapeMismatch("empty batch or ragged inputs".into()));
    }
    let mut preacts: Vec<Tensor> = Vec::with_capacity(layers.len());
    for (l, layer) in layers.iter().enumerate() {
        let a = if l == 0 {
            batch.inputs.clone()
        } else {
            let prev = activate(arch.act, &preacts[l - 1]);
            if matches!(layer.op, LayerOp::Dense { .. }) && prev.shape.len() == 3 {
                flatten_rows(&prev, bsz)
            } else {
                prev
            }
        };
        let ctx = LayerCtx {
            layer,
            w: &params.weights[l],
            b: &params.biases[l],
            mask: mask.map(|m| &m[l]),
            scale: scale.map(|s| s[l].as_slice()),
        };
        let mut z = apply_linear(&ctx, &a, bsz);
        if layer.branch_scale != 1.0 {
            for v in z.data.iter_mut() {
                *v *= layer.branch_scale;
            }
        }
        if layer.residual {
            let prev = &preacts[l - 1];
            if !prev.same_shape(&z) {
                return Err(Error::ShapeMismatch("residual branch shape mismatch".into()));
            }
            for (zv, pv) in z.data.iter_mut().zip(&prev.data) {
                *zv += pv;
            }
        }
        preacts.push(z);
    }
    Ok(ForwardPass { preacts })
}

fn softmax_ce(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let bsz = labels.len();
    let classes = logits.numel() / bsz;
    let mut grad = Tensor::zeros(&logits.shape);
    let mut loss = 0.0;
    for bi in 0..bsz {
        let row = &logits.data[bi * classes..(bi + 1) * classes];
        let y = labels[bi];
        if y >= classes {
            return Err(invalid(format!("label {y} out of range for {classes} classes")));
        }
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
        loss += lse - row[y];
        let grow = &mut grad.data[bi * classes..(bi + 1) * classes];
        for i in 0..classes {
            grow[i] = ((row[i] - lse).exp() - if i == y { 1.0 } else { 0.0 }) / bsz as f64;
        }
    }
    loss /= bsz as f64;
    if !loss.is_finite() {
        return Err(Error::NumericOverflow(format!("softmax CE loss is {loss}")));
    }
    Ok((loss, grad))
}

/// Softmax cross-entropy loss and gradients. Weight gradients are reported
/// pre-mask (the gradient each weight would receive if kept), which is what
/// the W·∂L/∂W saliency of the dense net needs; gradient flow through the
/// network itself does use the masked, scaled weights.
pub fn loss_and_grads(
    arch: &ArchSpec,
    params: &ParamSet,
    mask: Option<&[Tensor]>,
    scale: Option<&[Vec<f64>]>,
    batch: &Batch,
) -> Result<(f64, Gradients)> {
    let layers = arch.layers()?;
    let pass = forward(arch, params, mask, scale, batch)?;
    let bsz = batch.len();
    let (loss, mut g) = softmax_ce(pass.logits(), &batch.labels)?;
    let mut gw: Vec<Tensor> = params.weights.iter().map(|w| Tensor::zeros(&w.shape)).collect();
    let mut gb: Vec<Tensor> = params.biases.iter().map(|b| Tensor::zeros(&b.shape)).collect();
    for l in (0..layers.len()).rev() {
        let layer = &layers[l];
        // Layer input activation, recomputed from the stored preactivations.
        let a = if l == 0 {
            batch.inputs.clone()
        } else {
            let prev = activate(arch.act, &pass.preacts[l - 1]);
            if matches!(layer.op, LayerOp::Dense { .. }) && prev.shape.len() == 3 {
                flatten_rows(&prev, bsz)
            } else {
                prev
            }
        };
        // dz = branch_scale · dy.
        let dz = if layer.branch_scale != 1.0 {
            Tensor {
                shape: g.shape.clone(),
                data: g.data.iter().map(|v| v * layer.branch_scale).collect(),
            }
        } else {
            g.clone()
        };
        let lm = mask.map(|m| &m[l]);
        let ls = scale.map(|s| s[l].as_slice());
        let mut da = Tensor::zeros(&a.shape);
        match layer.op {
            LayerOp::Dense { out, inp } => {
                for bi in 0..bsz {
                    let arow = &a.data[bi * inp..(bi + 1) * inp];
                    let dzrow = &dz.data[bi * out..(bi + 1) * out];
                    let darow = &mut da.data[bi * inp..(bi + 1) * inp];
                    for i in 0..out {
                        let s = ls.map_or(1.0, |sv| sv[i]);
                        let d = dzrow[i];
                        if d == 0.0 {
                            continue;
                        }
                        gb[l].data[i] += d;
                        let gwrow = &mut gw[l].data[i * inp..(i + 1) * inp];
                        let wrow = &params.weights[l].data[i * inp..(i + 1) * inp];
                        for j in 0..inp {
                            gwrow[j] += s * d * arow[j];
                            let m = lm.map(|mt| mt.data[i * inp + j]);
                            darow[j] += eff(wrow[j], m, s) * d;
                        }
                    }
                }
            }
            LayerOp::Conv { c_out, c_in, k, n } => {
                let win = 2 * k + 1;
                for bi in 0..bsz {
                    for o in 0..c_out {
                        let s = ls.map_or(1.0, |sv| sv[o]);
                        for alpha in 0..n {
                            let d = dz.data[(bi * c_out + o) * n + alpha];
                            if d == 0.0 {
                                continue;
                            }
                            gb[l].data[o] += d;
                            for c in 0..c_in {
                                for u in 0..win {
                                    let widx = (o * c_in + c) * win + u;
                                    let pos = (alpha + u + n - k) % n;
                                    let aidx = (bi * c_in + c) * n + pos;
                                    gw[l].data[widx] += s * d * a.data[aidx];
                                    let m = lm.map(|mt| mt.data[widx]);
                                    da.data[aidx] += eff(params.weights[l].data[widx], m, s) * d;
                                }
                            }
                        }
                    }
                }
            }
        }
        if l == 0 {
            break;
        }
        // Through φ' of the previous preactivation (+ the identity path for
        // residual blocks).
        let prev = &pass.preacts[l - 1];
        let mut gprev = Tensor::zeros(&prev.shape);
        for (i, gv) in gprev.data.iter_mut().enumerate() {
            *gv = da.data[i] * arch.act.dapply(prev.data[i]);
        }
        if layer.residual {
            for (gv, &old) in gprev.data.iter_mut().zip(&g.data) {
                *gv += old;
            }
        }
        g = gprev;
    }
    Ok((
        loss,
        Gradients {
            weights: gw,
            biases: gb,
        },
    ))
}

/// In-place SGD step; pruned entries (mask 0) are re-zeroed after the update
/// so they stay exactly 0.
pub fn sgd_step(
    params: &mut ParamSet,
    grads: &Gradients,
    lr: f64,
    mask: Option<&[Tensor]>,
) -> Result<()> {
    if lr <= 0.0 {
        return Err(invalid("learning rate must be positive"));
    }
    for (w, g) in params.weights.iter_mut().zip(&grads.weights) {
        for (wv, gv) in w.data.iter_mut().zip(&g.data) {
            *wv -= lr * gv;
        }
    }
    for (b, g) in params.biases.iter_mut().zip(&grads.biases) {
        for (bv, gv) in b.data.iter_mut().zip(&g.data) {
            *bv -= lr * gv;
        }
    }
    if let Some(m) = mask {
        for (w, mt) in params.weights.iter_mut().zip(m) {
            for (wv, &mv) in w.data.iter_mut().zip(&mt.data) {
                if mv == 0.0 {
                    *wv = 0.0;
                }
            }
        }
    }
    Ok(())
}

/// Max relative error between reverse-mode and central finite-difference
/// (h = 1e-5) gradients on the given batch.
pub fn grad_check(arch: &ArchSpec, seed: u64, batch: &Batch) -> Result<f64> {
    let mut params = init_params(arch, 1.2, 0.2, seed)?;
    let (_, grads) = loss_and_grads(arch, &params, None, None, batch)?;
    let h = 1e-5;
    let mut worst = 0.0f64;
    let nlayers = params.weights.len();
    for l in 0..nlayers {
        for slot in 0..2 {
            let count = if slot == 0 {
                params.weights[l].numel()
            } else {
                params.biases[l].numel()
            };
            for idx in 0..count {
                let read = |p: &ParamSet| {
                    if slot == 0 {
                        p.weights[l].data[idx]
                    } else {
                        p.biases[l].data[idx]
                    }
                };
                let orig = read(&params);
                let write = |p: &mut ParamSet, v: f64| {
                    if slot == 0 {
                        p.weights[l].data[idx] = v;
                    } else {
                        p.biases[l].data[idx] = v;
                    }
                };
                write(&mut params, orig + h);
                let (lp, _) = loss_and_grads(arch, &params, None, None, batch)?;
                write(&mut params, orig - h);
                let (lm, _) = loss_and_grads(arch, &params, None, None, batch)?;
                write(&mut params, orig);
                let fd = (lp - lm) / (2.0 * h);
                let an = if slot == 0 {
                    grads.weights[l].data[idx]
                } else {
                    grads.biases[l].data[idx]
                };
                let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnet::arch::ArchKind;
    use approx::assert_abs_diff_eq;

    fn tiny_batch(inputs: Tensor, labels: Vec<usize>) -> Batch {
        Batch { inputs, labels }
    }

    fn gaussian_inputs(shape: &[usize], seed: u64) -> Tensor {
        let mut t = Tensor::zeros(shape);
        fill_normal(&mut stream_rng(seed, 9000), &mut t.data, 0.0, 1.0);
        t
    }

    #[test]
    fn init_is_deterministic_and_zero_bias() {
        let arch = ArchSpec::ffnn(ActivationKind::Relu, 4, 4, 2, 3);
        let a = init_params(&arch, 2.0f64.sqrt(), 0.0, 11).unwrap();
        let b = init_params(&arch, 2.0f64.sqrt(), 0.0, 11).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert_eq!(x.data, y.data);
        }
        for t in &a.biases {
            assert!(t.data.iter().all(|&v| v == 0.0));
        }
        let c = init_params(&arch, 2.0f64.sqrt(), 0.0, 12).unwrap();
        assert_ne!(a.weights[0].data, c.weights[0].data);
    }

    #[test]
    fn init_variance_statistics() {
        // Fan-in 4, σ_w = √2 → Var(W) = 0.5, checked over 10⁶ draws.
        let arch = ArchSpec::ffnn(ActivationKind::Relu, 4, 250_000, 1, 2);
        let p = init_params(&arch, 2.0f64.sqrt(), 0.0, 5).unwrap();
        let w = &p.weights[0].data;
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let se = 0.5 * (2.0 / n).sqrt();
        assert!((var - 0.5).abs() < 5.0 * se, "var {var} vs 0.5 ± {se}");
    }

    #[test]
    fn forward_hand_cases() {
        // Identity-embedded dense layer.
        let arch = ArchSpec::ffnn(ActivationKind::Relu, 2, 2, 1, 2);
        let mut p = init_params(&arch, 1.0, 0.0, 0).unwrap();
        p.weights[0] = Tensor::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        p.biases[0] = Tensor::zeros(&[2]);
        let batch = tiny_batch(Tensor::from_vec(&[1, 2], vec![1.0, -2.0]).unwrap(), vec![0]);
        let pass = forward(&arch, &p, None, None, &batch).unwrap();
        assert_eq!(pass.preacts[0].data, vec![1.0, -2.0]);
        let phi = activate(ActivationKind::Relu, &pass.preacts[0]);
        assert_eq!(phi.data, vec![1.0, 0.0]);

        // Circular convolution table, N=4, k=1, kernel (a,b,c) = (2,3,5).
        let arch = ArchSpec::cnn1d(ActivationKind::Relu, 1, 1, 4, 1, 1, 2);
        let mut p = init_params(&arch, 1.0, 0.0, 0).unwrap();
        p.weights[0] = Tensor::from_vec(&[1, 1, 3], vec![2.0, 3.0, 5.0]).unwrap();
        p.biases[0] = Tensor::zeros(&[1]);
        let x = [10.0, 20.0, 30.0, 40.0];
        let batch = tiny_batch(Tensor::from_vec(&[1, 1, 4], x.to_vec()).unwrap(), vec![0]);
        let pass = forward(&arch, &p, None, None, &batch).unwrap();
        let y = &pass.preacts[0].data;
        for alpha in 0..4usize {
            let want = 2.0 * x[(alpha + 3) % 4] + 3.0 * x[alpha] + 5.0 * x[(alpha + 1) % 4];
            assert_abs_diff_eq!(y[alpha], want);
        }

        // Zero residual branches: the stream is exactly the embedding output.
        let arch = ArchSpec::resnet_ffnn(ActivationKind::Relu, 3, 3, 4, 2, true);
        let mut p = init_params(&arch, 1.0, 0.0, 3).unwrap();
        for l in 1..=4 {
            p.weights[l] = Tensor::zeros(&p.weights[l].shape);
            p.biases[l] = Tensor::zeros(&p.biases[l].shape);
        }
        let batch = tiny_batch(gaussian_inputs(&[2, 3], 1), vec![0, 1]);
        let pass = forward(&arch, &p, None, None, &batch).unwrap();
        for l in 1..=4 {
            assert_eq!(pass.preacts[l].data, pass.preacts[0].data);
        }
    }

    #[test]
    fn wide_layer_forward_variance() {
        let n = 2000usize;
        let d = 10usize;
        let (sw, sb) = (1.3f64, 0.4f64);
        let arch = ArchSpec::ffnn(ActivationKind::Tanh, d, n, 1, 2);
        let p = init_params(&arch, sw, sb, 21).unwrap();
        let x = gaussian_inputs(&[1, d], 7);
        let batch = tiny_batch(x.clone(), vec![0]);
        let pass = forward(&arch, &p, None, None, &batch).unwrap();
        let y = &pass.preacts[0].data;
        let var = y.iter().map(|v| v * v).sum::<f64>() / n as f64;
        let norm2 = x.data.iter().map(|v| v * v).sum::<f64>();
        let want = sb * sb + sw * sw * norm2 / d as f64;
        let se = want * (2.0 / n as f64).sqrt();
        assert!((var - want).abs() < 5.0 * se, "{var} vs {want} ± {se}");
    }

    #[test]
    fn mask_and_scale_semantics() {
        let arch = ArchSpec::ffnn(ActivationKind::Tanh, 5, 6, 2, 3);
        let p = init_params(&arch, 1.4, 0.3, 2).unwrap();
        let batch = tiny_batch(gaussian_inputs(&[3, 5], 4), vec![0, 1, 2]);
        let layers = arch.layers().unwrap();
        let ones: Vec<Tensor> = p
            .weights
            .iter()
            .map(|w| Tensor {
                shape: w.shape.clone(),
                data: vec![1.0; w.numel()],
            })
            .collect();
        let unit_scale: Vec<Vec<f64>> = layers.iter().map(|l| vec![1.0; l.op.out_rows()]).collect();
        let plain = forward(&arch, &p, None, None, &batch).unwrap();
        let overlaid = forward(&arch, &p, Some(&ones), Some(&unit_scale), &batch).unwrap();
        assert_eq!(plain.logits().data, overlaid.logits().data);

        // Mask idempotence: masked forward == forward of the zeroed net.
        let mut mask = ones.clone();
        let mut rng = stream_rng(77, 0);
        for mt in &mut mask {
            for v in mt.data.iter_mut() {
                if crate::rng::normal(&mut rng) > 0.3 {
                    *v = 0.0;
                }
            }
        }
        let masked = forward(&arch, &p, Some(&mask), None, &batch).unwrap();
        let mut zeroed = p.clone();
        for (w, mt) in zeroed.weights.iter_mut().zip(&mask) {
            for (wv, &mv) in w.data.iter_mut().zip(&mt.data) {
                if mv == 0.0 {
                    *wv = 0.0;
                }
            }
        }
        let direct = forward(&arch, &zeroed, None, None, &batch).unwrap();
        assert_eq!(masked.logits().data, direct.logits().data);

        // Bad shapes are rejected.
        assert!(forward(&arch, &p, Some(&ones[..1]), None, &batch).is_err());
    }

    #[test]
    fn stable_equals_rescaled_standard() {
        let blocks = 9usize;
        let std_arch = ArchSpec::resnet_ffnn(ActivationKind::Relu, 6, 8, blocks, 4, false);
        let stable_arch = ArchSpec::resnet_ffnn(ActivationKind::Relu, 6, 8, blocks, 4, true);
        let p = init_params(&std_arch, 1.0, 0.2, 9).unwrap();
        let mut scaled = p.clone();
        let root_l = (blocks as f64).sqrt();
        for l in 1..=blocks {
            for v in scaled.weights[l].data.iter_mut() {
                *v *= root_l;
            }
            for v in scaled.biases[l].data.iter_mut() {
                *v *= root_l;
            }
        }
        let batch = tiny_batch(gaussian_inputs(&[2, 6], 8), vec![1, 3]);
        let a = forward(&std_arch, &p, None, None, &batch).unwrap();
        let b = forward(&stable_arch, &scaled, None, None, &batch).unwrap();
        for (x, y) in a.logits().data.iter().zip(&b.logits().data) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn loss_closed_forms() {
        // Zero weights, balanced softmax → log(#classes).
        let arch = ArchSpec::ffnn(ActivationKind::Tanh, 3, 4, 1, 5);
        let mut p = init_params(&arch, 1.0, 0.0, 1).unwrap();
        for w in p.weights.iter_mut() {
            w.data.iter_mut().for_each(|v| *v = 0.0);
        }
        let batch = tiny_batch(gaussian_inputs(&[4, 3], 2), vec![0, 1, 2, 3]);
        let (loss, _) = loss_and_grads(&arch, &p, None, None, &batch).unwrap();
        assert_abs_diff_eq!(loss, 5.0f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let b1 = tiny_batch(gaussian_inputs(&[3, 4], 31), vec![0, 2, 1]);
        let ffnn = ArchSpec::ffnn(ActivationKind::Tanh, 4, 5, 3, 3);
        assert!(grad_check(&ffnn, 1, &b1).unwrap() < 1e-5);
        let bc = tiny_batch(gaussian_inputs(&[2, 1, 6], 32), vec![1, 0]);
        let cnn = ArchSpec::cnn1d(ActivationKind::Tanh, 1, 2, 6, 1, 2, 2);
        assert!(grad_check(&cnn, 2, &bc).unwrap() < 1e-5);
        let res = ArchSpec::resnet_ffnn(ActivationKind::Relu, 4, 5, 3, 3, true);
        assert!(grad_check(&res, 3, &b1).unwrap() < 1e-5);
        let resc = ArchSpec::resnet_cnn1d(ActivationKind::Tanh, 1, 2, 6, 1, 2, 2, false);
        assert!(grad_check(&resc, 4, &bc).unwrap() < 1e-5);
    }

    #[test]
    fn gradcheck_sweep_over_random_configs() {
        // Broader sample per architecture kind.
        let mut worst = 0.0f64;
        for seed in 0..5u64 {
            for kind in [
                ArchKind::Ffnn,
                ArchKind::Cnn1d,
                ArchKind::ResnetFfnn,
                ArchKind::ResnetCnn1d,
            ] {
                let depth = 1 + (seed as usize % 3);
                let (arch, batch) = match kind {
                    ArchKind::Ffnn => (
                        ArchSpec::ffnn(ActivationKind::Tanh, 3, 4, depth, 2),
                        tiny_batch(gaussian_inputs(&[2, 3], 40 + seed), vec![0, 1]),
                    ),
                    ArchKind::ResnetFfnn => (
                        ArchSpec::resnet_ffnn(ActivationKind::Relu, 3, 4, depth, 2, seed % 2 == 0),
                        tiny_batch(gaussian_inputs(&[2, 3], 50 + seed), vec![1, 0]),
                    ),
                    ArchKind::Cnn1d => (
                        ArchSpec::cnn1d(ActivationKind::Relu, 1, 2, 5, 1, depth, 2),
                        tiny_batch(gaussian_inputs(&[2, 1, 5], 60 + seed), vec![0, 1]),
                    ),
                    ArchKind::ResnetCnn1d => (
                        ArchSpec::resnet_cnn1d(
                            ActivationKind::Tanh,
                            1,
                            2,
                            5,
                            1,
                            depth,
                            2,
                            seed % 2 == 1,
                        ),
                        tiny_batch(gaussian_inputs(&[2, 1, 5], 70 + seed), vec![1, 1]),
                    ),
                };
                worst = worst.max(grad_check(&arch, 100 + seed, &batch).unwrap());
            }
        }
        assert!(worst < 1e-5, "worst relative error {worst}");
    }

    #[test]
    fn masked_gradients_are_pre_mask() {
        let arch = ArchSpec::ffnn(ActivationKind::Tanh, 3, 4, 1, 2);
        let p = init_params(&arch, 1.0, 0.1, 6).unwrap();
        let batch = tiny_batch(gaussian_inputs(&[2, 3], 6), vec![0, 1]);
        let mut mask: Vec<Tensor> = p
            .weights
            .iter()
            .map(|w| Tensor {
                shape: w.shape.clone(),
                data: vec![1.0; w.numel()],
            })
            .collect();
        mask[0].data[0] = 0.0;
        // Pre-mask contract: the masked net's reported gradient at a pruned
        // entry equals the dense gradient of the net with that weight zeroed
        // (the gradient it would receive if kept).
        let mut zp = p.clone();
        zp.weights[0].data[0] = 0.0;
        let (_, gm) = loss_and_grads(&arch, &p, Some(&mask), None, &batch).unwrap();
        let (_, gd) = loss_and_grads(&arch, &zp, None, None, &batch).unwrap();
        assert_eq!(gm.weights[0].data[0], gd.weights[0].data[0]);
        assert!(gm.weights[0].data[0].abs() > 0.0);
        // And pruned weights stay exactly zero through SGD.
        let (_, g2) = loss_and_grads(&arch, &zp, Some(&mask), None, &batch).unwrap();
        sgd_step(&mut zp, &g2, 1e-3, Some(&mask)).unwrap();
        assert_eq!(zp.weights[0].data[0], 0.0);
    }

    #[test]
    fn sgd_hand_case() {
        let arch = ArchSpec::ffnn(ActivationKind::Tanh, 1, 1, 1, 2);
        let mut p = init_params(&arch, 1.0, 0.0, 0).unwrap();
        p.weights[0].data[0] = 2.0;
        let g = Gradients {
            weights: p
                .weights
                .iter()
                .map(|w| Tensor {
                    shape: w.shape.clone(),
                    data: vec![0.5; w.numel()],
                })
                .collect(),
            biases: p.biases.iter().map(|b| Tensor::zeros(&b.shape)).collect(),
        };
        sgd_step(&mut p, &g, 0.1, None).unwrap();
        assert_abs_diff_eq!(p.weights[0].data[0], 1.95);
        let zero = Gradients {
            weights: p.weights.iter().map(|w| Tensor::zeros(&w.shape)).collect(),
            biases: p.biases.iter().map(|b| Tensor::zeros(&b.shape)).collect(),
        };
        let before = p.clone();
        sgd_step(&mut p, &zero, 0.1, None).unwrap();
        assert_eq!(before.weights[0].data, p.weights[0].data);
    }
}
