//! Shared oracles for the integration tests.
#![allow(dead_code)]

pub mod oracles;

use eglpr::nn::layers::{self, Mode};
use eglpr::nn::{ForwardMode, LayerSpec, Network, NetworkWeights, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FD_EPS: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-4;
const REL_FLOOR: f64 = 1e-7;

pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Central difference of `f` with respect to every element of `x`.
pub fn numeric_grad(x: &Tensor, mut f: impl FnMut(&Tensor) -> f64) -> Vec<f64> {
    let mut probe = x.clone();
    (0..x.len())
        .map(|i| {
            let orig = probe.data()[i];
            probe.data_mut()[i] = orig + FD_EPS;
            let up = f(&probe);
            probe.data_mut()[i] = orig - FD_EPS;
            let down = f(&probe);
            probe.data_mut()[i] = orig;
            (up - down) / (2.0 * FD_EPS)
        })
        .collect()
}

pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic.iter().zip(numeric).map(|(&a, &n)| rel_err(a, n)).fold(0.0, f64::max)
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Max relative error over every parameter for the scalar loss `f(weights)`,
/// whose analytic gradients are `grads`.
fn param_errors(weights: &NetworkWeights, grads: &NetworkWeights, f: impl Fn(&NetworkWeights) -> f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (t, (_, g)) in grads.tensors().iter().enumerate() {
        let mut probe = weights.clone();
        for i in 0..g.len() {
            let orig = probe.tensors()[t].1.data()[i];
            probe.tensors_mut()[t].1.data_mut()[i] = orig + FD_EPS;
            let up = f(&probe);
            probe.tensors_mut()[t].1.data_mut()[i] = orig - FD_EPS;
            let down = f(&probe);
            probe.tensors_mut()[t].1.data_mut()[i] = orig;
            worst = worst.max(rel_err(g.data()[i], (up - down) / (2.0 * FD_EPS)));
        }
    }
    worst
}

/// Gradient check of a single parameterized layer under the loss `r · y`,
/// against both parameters and input.
fn single_layer_check(rng: &mut ChaCha8Rng, input_shape: Vec<usize>, layer: LayerSpec) -> f64 {
    let net = Network::new(input_shape.clone(), vec![layer]).unwrap();
    let mut weights = net.init_weights(rng);
    for (_, t) in weights.tensors_mut() {
        *t = random_tensor(rng, &t.shape().to_vec());
    }
    let x = random_tensor(rng, &input_shape);
    let r = random_tensor(rng, net.output_shape());
    let loss = |w: &NetworkWeights, x: &Tensor| dot(&r, &net.forward(w, x, ForwardMode::Infer).unwrap().output);
    let trace = net.forward(&weights, &x, ForwardMode::Infer).unwrap();
    let grads = net.backward(&weights, &trace, &r).unwrap();
    let p = param_errors(&weights, &grads, |w| loss(w, &x));

    let k = &weights.tensors()[0].1;
    let dx = match layer {
        LayerSpec::Conv { .. } => layers::conv_backward(&x, k, &r, true).0.unwrap(),
        _ => layers::dense_backward(&x, k, &r, true).0.unwrap(),
    };
    let n = numeric_grad(&x, |x| loss(&weights, x));
    p.max(max_rel_err(dx.data(), &n))
}

fn input_check(x: &Tensor, r: &Tensor, fwd: impl Fn(&Tensor) -> Tensor, analytic: &Tensor) -> f64 {
    let n = numeric_grad(x, |x| dot(r, &fwd(x)));
    max_rel_err(analytic.data(), &n)
}

/// Distinct values spaced at least `gap` apart in random order, so that
/// max-pool and ReLU have no ties or kinks within the probe step.
fn spaced_tensor(rng: &mut ChaCha8Rng, shape: &[usize], gap: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let mut vals: Vec<f64> = (0..n).map(|i| (i as f64 - n as f64 / 2.0 + 0.25) * gap).collect();
    for i in (1..n).rev() {
        vals.swap(i, rng.random_range(0..=i));
    }
    Tensor::new(shape.to_vec(), vals).unwrap()
}

pub fn check_conv(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (h, w, cin, cout) = (rng.random_range(2..7), rng.random_range(2..7), rng.random_range(1..4), rng.random_range(1..4));
    let kernel = [1, 3, 5][rng.random_range(0..3)];
    single_layer_check(&mut rng, vec![h, w, cin], LayerSpec::Conv { filters: cout, kernel })
}

pub fn check_dense(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (inp, out) = (rng.random_range(1..12), rng.random_range(1..9));
    single_layer_check(&mut rng, vec![inp], LayerSpec::Dense { units: out })
}

pub fn check_maxpool(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (window, stride) = [(2, 2), (3, 3), (2, 1), (3, 2)][rng.random_range(0..4)];
    let shape = [rng.random_range(window..9), rng.random_range(window..9), rng.random_range(1..4)];
    let x = spaced_tensor(&mut rng, &shape, 0.01);
    let (y, arg) = layers::maxpool_forward(&x, window, stride).unwrap();
    let r = random_tensor(&mut rng, y.shape());
    let dx = layers::maxpool_backward(x.shape(), &arg, &r);
    input_check(&x, &r, |x| layers::maxpool_forward(x, window, stride).unwrap().0, &dx)
}

pub fn check_relu(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..40);
    let x = spaced_tensor(&mut rng, &[n], 0.01);
    let r = random_tensor(&mut rng, x.shape());
    input_check(&x, &r, layers::relu_forward, &layers::relu_backward(&x, &r))
}

pub fn check_dropout(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = [rng.random_range(2..6), rng.random_range(2..6), 2];
    let x = random_tensor(&mut rng, &shape);
    let rate = rng.random_range(0.1..0.9);
    let (_, mask) = layers::dropout_forward(&x, rate, Mode::Train, &mut rng);
    let mask = mask.unwrap();
    let r = random_tensor(&mut rng, x.shape());
    let dx = layers::apply_mask(&r, &mask);
    for (g, m) in dx.data().iter().zip(&mask) {
        if *m == 0.0 {
            assert_eq!(*g, 0.0, "dropped unit carries gradient");
        }
    }
    input_check(&x, &r, |x| layers::apply_mask(x, &mask), &dx)
}

pub fn check_flatten(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = [rng.random_range(1..5), rng.random_range(1..5), rng.random_range(1..4)];
    let x = random_tensor(&mut rng, &shape);
    let r = random_tensor(&mut rng, &[x.len()]);
    let dx = r.clone().reshape(shape.to_vec()).unwrap();
    input_check(&x, &r, layers::flatten, &dx)
}

pub fn check_softmax(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..30);
    let x = random_tensor(&mut rng, &[n]);
    let r = random_tensor(&mut rng, x.shape());
    let dx = layers::softmax_backward(&layers::softmax(&x), &r);
    input_check(&x, &r, layers::softmax, &dx)
}

pub fn check_cross_entropy(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..30);
    let z = random_tensor(&mut rng, &[n]);
    let label = rng.random_range(0..n);
    let (_, g) = layers::cross_entropy_loss(&layers::softmax(&z), label).unwrap();
    let num = numeric_grad(&z, |z| layers::cross_entropy_loss(&layers::softmax(z), label).unwrap().0);
    max_rel_err(g.data(), &num)
}

pub fn tiny_net(rng: &mut ChaCha8Rng) -> Network {
    let side = rng.random_range(4..8);
    Network::new(
        vec![side, side, 1],
        vec![
            LayerSpec::Conv { filters: rng.random_range(1..4), kernel: 3 },
            LayerSpec::Relu,
            LayerSpec::MaxPool { window: 2, stride: 2 },
            LayerSpec::Dropout { rate: 0.3 },
            LayerSpec::Flatten,
            LayerSpec::Dense { units: rng.random_range(3..8) },
            LayerSpec::Relu,
            LayerSpec::Dense { units: 4 },
            LayerSpec::Softmax,
        ],
    )
    .unwrap()
}

/// Whole-network check of the cross-entropy gradients with dropout frozen.
pub fn check_network(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = tiny_net(&mut rng);
    let mut weights = net.init_weights(&mut rng);
    for (_, t) in weights.tensors_mut() {
        *t = random_tensor(&mut rng, &t.shape().to_vec());
    }
    let x = random_tensor(&mut rng, net.input_shape());
    let label = rng.random_range(0..4);
    let trace = net.forward(&weights, &x, ForwardMode::Train(&mut rng)).unwrap();
    let masks = trace.masks.clone();
    let (_, grads) = net.loss_and_gradients(&weights, &trace, label).unwrap();
    param_errors(&weights, &grads, |w| {
        let out = net.forward(w, &x, ForwardMode::Replay(&masks)).unwrap().output;
        layers::cross_entropy_loss(&out, label).unwrap().0
    })
}

/// `(layer kind, check)` for every differentiable piece.
pub fn gradient_checks() -> Vec<(&'static str, fn(u64) -> f64)> {
    vec![
        ("conv", check_conv),
        ("maxpool", check_maxpool),
        ("dropout", check_dropout),
        ("flatten", check_flatten),
        ("dense", check_dense),
        ("relu", check_relu),
        ("softmax", check_softmax),
        ("cross_entropy", check_cross_entropy),
        ("network", check_network),
    ]
}

/// Six-loop convolution used as the reference implementation.
pub fn naive_conv(x: &Tensor, k: &Tensor, b: &Tensor) -> Tensor {
    let (h, w, cin) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (kh, kw, cout) = (k.shape()[0], k.shape()[1], k.shape()[3]);
    let mut out = vec![0.0; h * w * cout];
    for y in 0..h as isize {
        for xx in 0..w as isize {
            for co in 0..cout {
                let mut s = b.data()[co];
                for ky in 0..kh as isize {
                    for kx in 0..kw as isize {
                        for ci in 0..cin {
                            let (iy, ix) = (y + ky - kh as isize / 2, xx + kx - kw as isize / 2);
                            if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                continue;
                            }
                            let xi = ((iy as usize * w) + ix as usize) * cin + ci;
                            let ki = ((ky as usize * kw + kx as usize) * cin + ci) * cout + co;
                            s += x.data()[xi] * k.data()[ki];
                        }
                    }
                }
                out[(y as usize * w + xx as usize) * cout + co] = s;
            }
        }
    }
    Tensor::new(vec![h, w, cout], out).unwrap()
}
