//! Layer kernels and their exact gradients.
//!
//! Feature maps are `(H, W, C)`; convolution kernels are `(kh, kw, Cin, Cout)`;
//! dense weights are `(out, in)`.

use rand::{Rng, RngCore};

use super::{NnError, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
}

fn dims3(t: &Tensor, what: &str) -> Result<(usize, usize, usize), NnError> {
    match *t.shape() {
        [h, w, c] => Ok((h, w, c)),
        ref s => Err(NnError::ShapeMismatch(format!("{what} must be (H, W, C), got {s:?}"))),
    }
}

/// Stride-1 cross-correlation with zero "same" padding.
pub fn conv_forward(x: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor, NnError> {
    let (h, w, cin) = dims3(x, "conv input")?;
    let (kh, kw, kcin, cout) = match *kernels.shape() {
        [a, b, c, d] => (a, b, c, d),
        ref s => return Err(NnError::ShapeMismatch(format!("conv kernels must be 4-D, got {s:?}"))),
    };
    if kcin != cin || bias.len() != cout || kh % 2 == 0 || kw % 2 == 0 {
        return Err(NnError::ShapeMismatch(format!(
            "input {:?}, kernels {:?}, bias {:?}",
            x.shape(),
            kernels.shape(),
            bias.shape()
        )));
    }
    let (ph, pw) = (kh / 2, kw / 2);
    let (xd, kd, bd) = (x.data(), kernels.data(), bias.data());
    let mut out = vec![0.0; h * w * cout];
    for y in 0..h {
        for xx in 0..w {
            let o = &mut out[(y * w + xx) * cout..(y * w + xx + 1) * cout];
            o.copy_from_slice(bd);
            for ky in 0..kh {
                let iy = y + ky;
                if iy < ph || iy - ph >= h {
                    continue;
                }
                let iy = iy - ph;
                for kx in 0..kw {
                    let ix = xx + kx;
                    if ix < pw || ix - pw >= w {
                        continue;
                    }
                    let ix = ix - pw;
                    let xin = &xd[(iy * w + ix) * cin..(iy * w + ix + 1) * cin];
                    let kbase = (ky * kw + kx) * cin * cout;
                    for (ci, &v) in xin.iter().enumerate() {
                        if v == 0.0 {
                            continue;
                        }
                        let krow = &kd[kbase + ci * cout..kbase + (ci + 1) * cout];
                        for (acc, &k) in o.iter_mut().zip(krow) {
                            *acc += v * k;
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![h, w, cout], out)
}

/// Gradients of [`conv_forward`]: `(d_input, d_kernels, d_bias)`. The input
/// gradient is skipped when `need_input` is false.
pub fn conv_backward(
    x: &Tensor,
    kernels: &Tensor,
    grad_out: &Tensor,
    need_input: bool,
) -> (Option<Tensor>, Tensor, Tensor) {
    let (h, w, cin) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (kh, kw, cout) = (kernels.shape()[0], kernels.shape()[1], kernels.shape()[3]);
    let (ph, pw) = (kh / 2, kw / 2);
    let (xd, kd, gd) = (x.data(), kernels.data(), grad_out.data());
    let mut dx = if need_input { vec![0.0; xd.len()] } else { Vec::new() };
    let mut dk = vec![0.0; kd.len()];
    let mut db = vec![0.0; cout];
    for y in 0..h {
        for xx in 0..w {
            let g = &gd[(y * w + xx) * cout..(y * w + xx + 1) * cout];
            for (acc, &v) in db.iter_mut().zip(g) {
                *acc += v;
            }
            for ky in 0..kh {
                let iy = y + ky;
                if iy < ph || iy - ph >= h {
                    continue;
                }
                let iy = iy - ph;
                for kx in 0..kw {
                    let ix = xx + kx;
                    if ix < pw || ix - pw >= w {
                        continue;
                    }
                    let ix = ix - pw;
                    let ibase = (iy * w + ix) * cin;
                    let kbase = (ky * kw + kx) * cin * cout;
                    for ci in 0..cin {
                        let v = xd[ibase + ci];
                        let krange = kbase + ci * cout..kbase + (ci + 1) * cout;
                        if v != 0.0 {
                            for (acc, &gv) in dk[krange.clone()].iter_mut().zip(g) {
                                *acc += v * gv;
                            }
                        }
                        if need_input {
                            let s: f64 = kd[krange].iter().zip(g).map(|(k, gv)| k * gv).sum();
                            dx[ibase + ci] += s;
                        }
                    }
                }
            }
        }
    }
    let dx = need_input.then(|| Tensor::new(x.shape().to_vec(), dx).expect("shape"));
    (
        dx,
        Tensor::new(kernels.shape().to_vec(), dk).expect("shape"),
        Tensor::new(vec![cout], db).expect("shape"),
    )
}

/// Output spatial size of a pooling window; trailing rows/columns that do
/// not fill a window are dropped.
pub fn pooled_len(n: usize, window: usize, stride: usize) -> usize {
    if n < window {
        0
    } else {
        (n - window) / stride + 1
    }
}

/// Channel-wise window max. Returns the flat input index chosen for each
/// output element; ties go to the first element in row-major order.
pub fn maxpool_forward(x: &Tensor, window: usize, stride: usize) -> Result<(Tensor, Vec<usize>), NnError> {
    let (h, w, c) = dims3(x, "maxpool input")?;
    let (oh, ow) = (pooled_len(h, window, stride), pooled_len(w, window, stride));
    if oh == 0 || ow == 0 {
        return Err(NnError::ShapeMismatch(format!("maxpool window {window} larger than input {:?}", x.shape())));
    }
    let xd = x.data();
    let mut out = Vec::with_capacity(oh * ow * c);
    let mut arg = Vec::with_capacity(oh * ow * c);
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut best = (oy * stride * w + ox * stride) * c + ch;
                for dy in 0..window {
                    for dx in 0..window {
                        let i = ((oy * stride + dy) * w + ox * stride + dx) * c + ch;
                        if xd[i] > xd[best] {
                            best = i;
                        }
                    }
                }
                out.push(xd[best]);
                arg.push(best);
            }
        }
    }
    Ok((Tensor::new(vec![oh, ow, c], out)?, arg))
}

pub fn maxpool_backward(input_shape: &[usize], argmax: &[usize], grad_out: &Tensor) -> Tensor {
    let mut dx = Tensor::zeros(input_shape);
    let d = dx.data_mut();
    for (&i, &g) in argmax.iter().zip(grad_out.data()) {
        d[i] += g;
    }
    dx
}

/// Inverted dropout. In training each element is zeroed with probability
/// `rate` and survivors are scaled by `1 / (1 - rate)`; the per-element
/// multipliers are returned for the backward pass. Inference is the identity
/// and draws nothing from `rng`.
pub fn dropout_forward(x: &Tensor, rate: f64, mode: Mode, rng: &mut dyn RngCore) -> (Tensor, Option<Vec<f64>>) {
    if mode == Mode::Infer || rate == 0.0 {
        return (x.clone(), None);
    }
    let keep = 1.0 / (1.0 - rate);
    let mask: Vec<f64> = (0..x.len()).map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep }).collect();
    (apply_mask(x, &mask), Some(mask))
}

pub fn apply_mask(x: &Tensor, mask: &[f64]) -> Tensor {
    let data = x.data().iter().zip(mask).map(|(v, m)| v * m).collect();
    Tensor::new(x.shape().to_vec(), data).expect("shape")
}

/// Row-major reshape to a vector.
pub fn flatten(x: &Tensor) -> Tensor {
    Tensor::from_vec(x.data().to_vec())
}

pub fn dense_forward(x: &Tensor, weight: &Tensor, bias: &Tensor, activation: Activation) -> Result<Tensor, NnError> {
    let (out_dim, in_dim) = match *weight.shape() {
        [o, i] => (o, i),
        ref s => return Err(NnError::ShapeMismatch(format!("dense weight must be 2-D, got {s:?}"))),
    };
    if x.len() != in_dim || bias.len() != out_dim {
        return Err(NnError::ShapeMismatch(format!(
            "dense input {:?}, weight {:?}, bias {:?}",
            x.shape(),
            weight.shape(),
            bias.shape()
        )));
    }
    let (xd, wd) = (x.data(), weight.data());
    let out = (0..out_dim)
        .map(|o| {
            let z = bias.data()[o] + wd[o * in_dim..(o + 1) * in_dim].iter().zip(xd).map(|(a, b)| a * b).sum::<f64>();
            match activation {
                Activation::Linear => z,
                Activation::Relu => z.max(0.0),
            }
        })
        .collect();
    Ok(Tensor::from_vec(out))
}

/// Gradients of a linear dense layer: `(d_input, d_weight, d_bias)`.
pub fn dense_backward(x: &Tensor, weight: &Tensor, grad_out: &Tensor, need_input: bool) -> (Option<Tensor>, Tensor, Tensor) {
    let (out_dim, in_dim) = (weight.shape()[0], weight.shape()[1]);
    let (xd, wd, gd) = (x.data(), weight.data(), grad_out.data());
    let mut dw = vec![0.0; out_dim * in_dim];
    let mut dx = if need_input { vec![0.0; in_dim] } else { Vec::new() };
    for o in 0..out_dim {
        let g = gd[o];
        if g == 0.0 {
            continue;
        }
        for (acc, &v) in dw[o * in_dim..(o + 1) * in_dim].iter_mut().zip(xd) {
            *acc += g * v;
        }
        if need_input {
            for (acc, &wv) in dx.iter_mut().zip(&wd[o * in_dim..(o + 1) * in_dim]) {
                *acc += g * wv;
            }
        }
    }
    (
        need_input.then(|| Tensor::new(x.shape().to_vec(), dx).expect("shape")),
        Tensor::new(vec![out_dim, in_dim], dw).expect("shape"),
        Tensor::from_vec(gd.to_vec()),
    )
}

pub fn relu_forward(x: &Tensor) -> Tensor {
    Tensor::new(x.shape().to_vec(), x.data().iter().map(|v| v.max(0.0)).collect()).expect("shape")
}

pub fn relu_backward(x: &Tensor, grad_out: &Tensor) -> Tensor {
    let data = x.data().iter().zip(grad_out.data()).map(|(&v, &g)| if v > 0.0 { g } else { 0.0 }).collect();
    Tensor::new(x.shape().to_vec(), data).expect("shape")
}

/// Numerically stable softmax over all elements.
pub fn softmax(x: &Tensor) -> Tensor {
    let max = x.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.data().iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Tensor::new(x.shape().to_vec(), exps.into_iter().map(|e| e / sum).collect()).expect("shape")
}

/// Vector-Jacobian product of softmax given its output `y`.
pub fn softmax_backward(y: &Tensor, grad_out: &Tensor) -> Tensor {
    let dot: f64 = y.data().iter().zip(grad_out.data()).map(|(a, b)| a * b).sum();
    let data = y.data().iter().zip(grad_out.data()).map(|(&yi, &gi)| yi * (gi - dot)).collect();
    Tensor::new(y.shape().to_vec(), data).expect("shape")
}

pub const PROB_FLOOR: f64 = 1e-12;

/// Returns `-ln(max(probs[label], 1e-12))` and the loss gradient with
/// respect to the softmax logits, `probs - onehot(label)`.
pub fn cross_entropy_loss(probs: &Tensor, label: usize) -> Result<(f64, Tensor), NnError> {
    if label >= probs.len() {
        return Err(NnError::LabelOutOfRange { label, classes: probs.len() });
    }
    let loss = -probs.data()[label].max(PROB_FLOOR).ln();
    let mut grad = probs.clone();
    grad.data_mut()[label] -= 1.0;
    Ok((loss, grad))
}
