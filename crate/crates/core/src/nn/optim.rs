use super::{NetworkWeights, NnError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Clone, Debug)]
pub struct Adam {
    config: AdamConfig,
    m: NetworkWeights,
    v: NetworkWeights,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, weights: &NetworkWeights) -> Self {
        Self { config, m: weights.zeros_like(), v: weights.zeros_like(), t: 0 }
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update. Weights are left untouched when any gradient is
    /// non-finite. Updated weights are rounded to `f32` precision.
    pub fn step(&mut self, weights: &mut NetworkWeights, grads: &NetworkWeights) -> Result<(), NnError> {
        if grads.len() != weights.len() {
            return Err(NnError::ShapeMismatch("gradient and weight lists differ".into()));
        }
        for ((name, g), (_, w)) in grads.tensors().iter().zip(weights.tensors()) {
            if g.shape() != w.shape() {
                return Err(NnError::ShapeMismatch(format!("gradient for {name}")));
            }
            if !g.is_finite() {
                return Err(NnError::NonFinite(format!("gradient for {name}")));
            }
        }
        self.t += 1;
        let AdamConfig { learning_rate, beta1, beta2, epsilon } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let tensors = weights.tensors_mut().iter_mut().zip(grads.tensors());
        let moments = self.m.tensors_mut().iter_mut().zip(self.v.tensors_mut().iter_mut());
        for (((_, w), (_, g)), ((_, m), (_, v))) in tensors.zip(moments) {
            let (w, m, v) = (w.data_mut(), m.data_mut(), v.data_mut());
            for (i, &gi) in g.data().iter().enumerate() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                w[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        weights.quantize_f32();
        Ok(())
    }
}
