use ndarray::Zip;

use super::{Gradients, Mlp};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-7 }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Gradients,
    pub v: Gradients,
    pub t: u64,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        Self { config, m: Gradients::zeros_like(net), v: Gradients::zeros_like(net), t: 0 }
    }
}

/// One bias-corrected Adam update:
///
/// ```text
/// m ← β1 m + (1 - β1) g
/// v ← β2 v + (1 - β2) g²
/// θ ← θ - lr · m̂ / (sqrt(v̂) + ε),   m̂ = m / (1 - β1^t),  v̂ = v / (1 - β2^t)
/// ```
pub fn adam_step(net: &mut Mlp, grads: &Gradients, state: &mut AdamState) {
    state.t += 1;
    let AdamConfig { lr, beta1, beta2, epsilon } = state.config;
    let c1 = 1.0 - beta1.powi(state.t as i32);
    let c2 = 1.0 - beta2.powi(state.t as i32);
    let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: &f64| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
    };
    for (l, layer) in net.layers_mut().iter_mut().enumerate() {
        Zip::from(&mut layer.weights)
            .and(&mut state.m.weights[l])
            .and(&mut state.v.weights[l])
            .and(&grads.weights[l])
            .for_each(update);
        Zip::from(&mut layer.bias)
            .and(&mut state.m.biases[l])
            .and(&mut state.v.biases[l])
            .and(&grads.biases[l])
            .for_each(update);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{Activation, Dense, LayerSpec, MlpSpec};
    use ndarray::{array, Array1, Array2};

    fn scalar_net(w: f64) -> Mlp {
        let spec = MlpSpec { input_width: 1, layers: vec![LayerSpec::linear(1)], seed: 0 };
        Mlp::from_layers(
            spec,
            vec![Dense { weights: array![[w]], bias: Array1::zeros(1), activation: Activation::Linear }],
        )
        .unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut net = scalar_net(1.5);
        let before = net.clone();
        let mut st = AdamState::new(&net, AdamConfig::default());
        let g = Gradients::zeros_like(&net);
        adam_step(&mut net, &g, &mut st);
        assert_eq!(net, before);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let spec = MlpSpec { input_width: 3, layers: vec![LayerSpec::linear(1)], seed: 0 };
        let mut net = Mlp::from_layers(
            spec,
            vec![Dense { weights: Array2::zeros((1, 3)), bias: Array1::zeros(1), activation: Activation::Linear }],
        )
        .unwrap();
        let mut st = AdamState::new(&net, AdamConfig::default());
        let mut g = Gradients::zeros_like(&net);
        g.weights[0] = array![[2.5, -0.7, 40.0]];
        g.biases[0] = array![-3.0];
        adam_step(&mut net, &g, &mut st);
        let lr = st.config.lr;
        let w = &net.layers()[0].weights;
        assert!((w[[0, 0]] + lr).abs() < 1e-9);
        assert!((w[[0, 1]] - lr).abs() < 1e-9);
        assert!((w[[0, 2]] + lr).abs() < 1e-9);
        assert!((net.layers()[0].bias[0] - lr).abs() < 1e-9);
    }

    #[test]
    fn converges_on_scalar_quadratic() {
        // f(w) = (w - 3)², f'(w) = 2(w - 3)
        let mut net = scalar_net(0.0);
        let mut st = AdamState::new(&net, AdamConfig { lr: 0.1, ..AdamConfig::default() });
        let mut g = Gradients::zeros_like(&net);
        for _ in 0..200 {
            let w = net.layers()[0].weights[[0, 0]];
            g.weights[0][[0, 0]] = 2.0 * (w - 3.0);
            adam_step(&mut net, &g, &mut st);
        }
        let w = net.layers()[0].weights[[0, 0]];
        assert!((w - 3.0).abs() < 0.05, "w = {w}");
        assert!(st.v.weights[0].iter().all(|&v| v >= 0.0));
    }
}
