//! Sequential networks: shape inference, initialization, forward traces and
//! reverse-mode gradients.

use rand::RngCore;
use rand_distr::{Distribution, Normal};

use super::layers::{self, Activation, Mode};
use super::{NnError, Tensor};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LayerSpec {
    /// Square `kernel`×`kernel` convolution, stride 1, same padding.
    Conv { filters: usize, kernel: usize },
    MaxPool { window: usize, stride: usize },
    Dropout { rate: f64 },
    Flatten,
    Dense { units: usize },
    Relu,
    Softmax,
}

impl LayerSpec {
    fn validate(&self) -> Result<(), NnError> {
        let ok = match *self {
            LayerSpec::Conv { filters, kernel } => filters > 0 && kernel > 0 && kernel % 2 == 1,
            LayerSpec::MaxPool { window, stride } => window > 0 && stride > 0,
            LayerSpec::Dropout { rate } => (0.0..1.0).contains(&rate),
            LayerSpec::Dense { units } => units > 0,
            LayerSpec::Flatten | LayerSpec::Relu | LayerSpec::Softmax => true,
        };
        if ok {
            Ok(())
        } else {
            Err(NnError::BadSpec(format!("invalid parameters in {self:?}")))
        }
    }

    /// Output shape for a given input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, NnError> {
        self.validate()?;
        let bad = |why: &str| Err(NnError::BadSpec(format!("{self:?} on input {input:?}: {why}")));
        match (*self, input) {
            (LayerSpec::Conv { filters, .. }, &[h, w, _]) => Ok(vec![h, w, filters]),
            (LayerSpec::Conv { .. }, _) => bad("convolution needs an (H, W, C) input"),
            (LayerSpec::MaxPool { window, stride }, &[h, w, c]) => {
                let (oh, ow) = (layers::pooled_len(h, window, stride), layers::pooled_len(w, window, stride));
                if oh == 0 || ow == 0 {
                    bad("window larger than input")
                } else {
                    Ok(vec![oh, ow, c])
                }
            }
            (LayerSpec::MaxPool { .. }, _) => bad("pooling needs an (H, W, C) input"),
            (LayerSpec::Flatten, s) => Ok(vec![s.iter().product()]),
            (LayerSpec::Dense { units }, &[_]) => Ok(vec![units]),
            (LayerSpec::Dense { .. }, _) => bad("dense needs a flat input"),
            (LayerSpec::Softmax, &[_]) => Ok(input.to_vec()),
            (LayerSpec::Softmax, _) => bad("softmax needs a flat input"),
            (LayerSpec::Dropout { .. } | LayerSpec::Relu, s) => Ok(s.to_vec()),
        }
    }

    /// Parameter tensor shapes `(suffix, shape)` for this layer.
    fn param_shapes(&self, input: &[usize]) -> Vec<(&'static str, Vec<usize>)> {
        match *self {
            LayerSpec::Conv { filters, kernel } => {
                vec![("kernel", vec![kernel, kernel, input[2], filters]), ("bias", vec![filters])]
            }
            LayerSpec::Dense { units } => vec![("weight", vec![units, input[0]]), ("bias", vec![units])],
            _ => Vec::new(),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::MaxPool { .. } => "maxpool",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Flatten => "flatten",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Relu => "relu",
            LayerSpec::Softmax => "softmax",
        }
    }
}

/// Total kernel and bias element count of a layer chain.
pub fn param_count(input_shape: &[usize], layers: &[LayerSpec]) -> Result<usize, NnError> {
    let mut shape = input_shape.to_vec();
    let mut total = 0usize;
    for layer in layers {
        let next = layer.output_shape(&shape)?;
        total += layer.param_shapes(&shape).iter().map(|(_, s)| s.iter().product::<usize>()).sum::<usize>();
        shape = next;
    }
    Ok(total)
}

/// Ordered named parameter tensors.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct NetworkWeights {
    tensors: Vec<(String, Tensor)>,
}

impl NetworkWeights {
    pub fn new(tensors: Vec<(String, Tensor)>) -> Self {
        Self { tensors }
    }

    pub fn tensors(&self) -> &[(String, Tensor)] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [(String, Tensor)] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self { tensors: self.tensors.iter().map(|(n, t)| (n.clone(), Tensor::zeros(t.shape()))).collect() }
    }

    /// Element-wise `self += other`; names and shapes must line up.
    pub fn add_assign(&mut self, other: &NetworkWeights) {
        for ((_, a), (_, b)) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for (_, t) in &mut self.tensors {
            t.data_mut().iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// Rounds every value to the nearest `f32`, the precision weights are stored at.
    pub fn quantize_f32(&mut self) {
        for (_, t) in &mut self.tensors {
            t.data_mut().iter_mut().for_each(|v| *v = *v as f32 as f64);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|(_, t)| t.is_finite())
    }
}

/// Per-layer dropout multipliers recorded during a training forward pass.
pub type DropoutMask = Option<Vec<f64>>;

pub enum ForwardMode<'a> {
    Infer,
    Train(&'a mut dyn RngCore),
    /// Training-mode pass that reuses previously drawn dropout masks.
    Replay(&'a [DropoutMask]),
}

/// Everything a forward pass records for the backward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    /// Input to each layer.
    pub inputs: Vec<Tensor>,
    pub output: Tensor,
    pub pool_args: Vec<Option<Vec<usize>>>,
    pub masks: Vec<DropoutMask>,
}

/// A sequential layer chain over a fixed input shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    /// Start index into the weight list for each layer.
    param_offsets: Vec<usize>,
    output_shape: Vec<usize>,
}

impl Network {
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>) -> Result<Self, NnError> {
        let mut shape = input_shape.clone();
        let mut param_offsets = Vec::with_capacity(layers.len());
        let mut offset = 0;
        for layer in &layers {
            param_offsets.push(offset);
            offset += layer.param_shapes(&shape).len();
            shape = layer.output_shape(&shape)?;
        }
        Ok(Self { input_shape, layers, param_offsets, output_shape: shape })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.input_shape, &self.layers).expect("validated at construction")
    }

    fn layer_inputs_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::with_capacity(self.layers.len());
        let mut shape = self.input_shape.clone();
        for layer in &self.layers {
            shapes.push(shape.clone());
            shape = layer.output_shape(&shape).expect("validated at construction");
        }
        shapes
    }

    /// Expected `(name, shape)` of every parameter tensor, in file order.
    pub fn weight_layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for (i, (layer, input)) in self.layers.iter().zip(self.layer_inputs_shapes()).enumerate() {
            for (suffix, shape) in layer.param_shapes(&input) {
                out.push((format!("{}{}.{}", layer.kind(), i, suffix), shape));
            }
        }
        out
    }

    /// He-normal kernels and zero biases.
    pub fn init_weights(&self, rng: &mut dyn RngCore) -> NetworkWeights {
        let tensors = self
            .weight_layout()
            .into_iter()
            .map(|(name, shape)| {
                let n: usize = shape.iter().product();
                let data = if name.ends_with(".bias") {
                    vec![0.0; n]
                } else {
                    let fan_in: usize = if shape.len() == 4 { shape[0] * shape[1] * shape[2] } else { shape[1] };
                    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
                    (0..n).map(|_| normal.sample(rng)).collect()
                };
                (name, Tensor::new(shape, data).expect("shape"))
            })
            .collect();
        let mut w = NetworkWeights::new(tensors);
        w.quantize_f32();
        w
    }

    /// Checks names and shapes against the layer chain.
    pub fn check_weights(&self, weights: &NetworkWeights) -> Result<(), NnError> {
        let layout = self.weight_layout();
        if layout.len() != weights.len() {
            return Err(NnError::ShapeMismatch(format!(
                "network expects {} tensors, weights hold {}",
                layout.len(),
                weights.len()
            )));
        }
        for ((name, shape), (wn, wt)) in layout.iter().zip(weights.tensors()) {
            if name != wn || shape.as_slice() != wt.shape() {
                return Err(NnError::ShapeMismatch(format!("expected {name} {shape:?}, found {wn} {:?}", wt.shape())));
            }
        }
        Ok(())
    }

    pub fn forward(&self, weights: &NetworkWeights, x: &Tensor, mut mode: ForwardMode<'_>) -> Result<Trace, NnError> {
        if x.shape() != self.input_shape.as_slice() {
            return Err(NnError::ShapeMismatch(format!("input {:?}, network expects {:?}", x.shape(), self.input_shape)));
        }
        let params = weights.tensors();
        if params.len() != self.weight_layout().len() {
            return Err(NnError::ShapeMismatch("weight count does not match network".into()));
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pool_args = vec![None; self.layers.len()];
        let mut masks: Vec<DropoutMask> = vec![None; self.layers.len()];
        let mut cur = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let p = self.param_offsets[i];
            let next = match *layer {
                LayerSpec::Conv { .. } => layers::conv_forward(&cur, &params[p].1, &params[p + 1].1)?,
                LayerSpec::MaxPool { window, stride } => {
                    let (y, arg) = layers::maxpool_forward(&cur, window, stride)?;
                    pool_args[i] = Some(arg);
                    y
                }
                LayerSpec::Dropout { rate } => match &mut mode {
                    ForwardMode::Infer => cur.clone(),
                    ForwardMode::Train(rng) => {
                        let (y, mask) = layers::dropout_forward(&cur, rate, Mode::Train, *rng);
                        masks[i] = mask;
                        y
                    }
                    ForwardMode::Replay(saved) => match saved.get(i).and_then(|m| m.as_ref()) {
                        Some(mask) => {
                            masks[i] = Some(mask.clone());
                            layers::apply_mask(&cur, mask)
                        }
                        None => cur.clone(),
                    },
                },
                LayerSpec::Flatten => layers::flatten(&cur),
                LayerSpec::Dense { .. } => layers::dense_forward(&cur, &params[p].1, &params[p + 1].1, Activation::Linear)?,
                LayerSpec::Relu => layers::relu_forward(&cur),
                LayerSpec::Softmax => layers::softmax(&cur),
            };
            inputs.push(cur);
            cur = next;
        }
        Ok(Trace { inputs, output: cur, pool_args, masks })
    }

    /// Class probabilities in inference mode.
    pub fn predict(&self, weights: &NetworkWeights, x: &Tensor) -> Result<Tensor, NnError> {
        Ok(self.forward(weights, x, ForwardMode::Infer)?.output)
    }

    /// Backpropagates `grad` (the gradient at the output of layer `last`)
    /// down to the first layer, adding parameter gradients into `grads`.
    fn backprop_into(&self, weights: &NetworkWeights, trace: &Trace, last: usize, mut grad: Tensor, grads: &mut NetworkWeights) {
        let params = weights.tensors();
        let mut add = |i: usize, t: Tensor| {
            for (a, b) in grads.tensors[i].1.data_mut().iter_mut().zip(t.data()) {
                *a += b;
            }
        };
        for i in (0..=last).rev() {
            let input = &trace.inputs[i];
            let p = self.param_offsets[i];
            let need_input = i > 0;
            grad = match self.layers[i] {
                LayerSpec::Conv { .. } => {
                    let (dx, dk, db) = layers::conv_backward(input, &params[p].1, &grad, need_input);
                    add(p, dk);
                    add(p + 1, db);
                    match dx {
                        Some(dx) => dx,
                        None => break,
                    }
                }
                LayerSpec::MaxPool { .. } => {
                    let arg = trace.pool_args[i].as_ref().expect("recorded in forward");
                    layers::maxpool_backward(input.shape(), arg, &grad)
                }
                LayerSpec::Dropout { .. } => match &trace.masks[i] {
                    Some(mask) => layers::apply_mask(&grad, mask),
                    None => grad,
                },
                LayerSpec::Flatten => grad.reshape(input.shape().to_vec()).expect("same element count"),
                LayerSpec::Dense { .. } => {
                    let (dx, dw, db) = layers::dense_backward(input, &params[p].1, &grad, need_input);
                    add(p, dw);
                    add(p + 1, db);
                    match dx {
                        Some(dx) => dx,
                        None => break,
                    }
                }
                LayerSpec::Relu => layers::relu_backward(input, &grad),
                LayerSpec::Softmax => layers::softmax_backward(&self.layer_output(trace, i), &grad),
            };
        }
    }

    fn layer_output(&self, trace: &Trace, i: usize) -> Tensor {
        trace.inputs.get(i + 1).unwrap_or(&trace.output).clone()
    }

    /// Parameter gradients for an arbitrary upstream gradient at the network output.
    pub fn backward(&self, weights: &NetworkWeights, trace: &Trace, grad_output: &Tensor) -> Result<NetworkWeights, NnError> {
        if grad_output.shape() != trace.output.shape() {
            return Err(NnError::ShapeMismatch("output gradient shape".into()));
        }
        let mut grads = weights.zeros_like();
        self.backprop_into(weights, trace, self.layers.len() - 1, grad_output.clone(), &mut grads);
        Ok(grads)
    }

    /// Cross-entropy loss and parameter gradients for a network ending in
    /// softmax. The softmax and loss are differentiated jointly.
    pub fn loss_and_gradients(&self, weights: &NetworkWeights, trace: &Trace, label: usize) -> Result<(f64, NetworkWeights), NnError> {
        let mut grads = weights.zeros_like();
        let loss = self.accumulate_gradients(weights, trace, label, &mut grads)?;
        Ok((loss, grads))
    }

    /// Like [`Network::loss_and_gradients`] but adds into an existing
    /// gradient buffer, for mini-batch accumulation.
    pub fn accumulate_gradients(
        &self,
        weights: &NetworkWeights,
        trace: &Trace,
        label: usize,
        grads: &mut NetworkWeights,
    ) -> Result<f64, NnError> {
        if self.layers.last() != Some(&LayerSpec::Softmax) {
            return Err(NnError::BadSpec("cross-entropy training needs a final softmax".into()));
        }
        if grads.len() != weights.len() {
            return Err(NnError::ShapeMismatch("gradient buffer does not match weights".into()));
        }
        let (loss, dlogits) = layers::cross_entropy_loss(&trace.output, label)?;
        if self.layers.len() > 1 {
            self.backprop_into(weights, trace, self.layers.len() - 2, dlogits, grads);
        }
        Ok(loss)
    }
}
