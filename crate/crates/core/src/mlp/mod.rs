//! Dense feed-forward regression network written from scratch.
//!
//! Layer `l` computes `a_l = f(W_l a_{l-1} + b_l)` with `W_l` of shape
//! `(out, in)`. The loss of one sample is `(ŷ - y)²`; batch losses and
//! gradients are means over the batch.
//!
//! Every forward pass, single-sample or batched, goes through the same row-wise
//! matrix kernel, so a row's output does not depend on which batch it sits in.

mod adam;
mod checkpoint;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CheckpointError};
pub use train::{train, validation_mae, EpochStats, TrainConfig, TrainError, TrainHistory};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{linalg::general_mat_mul, s, Array1, Array2, ArrayView2, Axis};
use rand::distributions::{Distribution, Uniform};
use thiserror::Error;

use crate::dataset::{Record, FEATURE_WIDTH};
use crate::rng::{stream, SplitMix64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlpError {
    #[error("input has {found} features, network expects {expected}")]
    Shape { expected: usize, found: usize },
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("{0} targets for {1} inputs")]
    TargetCount(usize, usize),
    #[error("empty sample set")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Linear => 1,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Linear),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn relu(width: usize) -> Self {
        Self { width, activation: Activation::Relu }
    }

    pub fn linear(width: usize) -> Self {
        Self { width, activation: Activation::Linear }
    }
}

/// Named architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// 101 → 256 → 256 → 128 → 64 → 1.
    Desk,
    /// The 14-layer widening/narrowing stack, 101 → … → 1616 → … → 25 → 1.
    Paper,
    /// 101 → 32 → 16 → 1, for smoke tests.
    Tiny,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
            Preset::Tiny => "tiny",
        }
    }

    pub fn hidden_widths(self) -> &'static [usize] {
        match self {
            Preset::Desk => &[256, 256, 128, 64],
            Preset::Paper => &[101, 202, 404, 808, 1212, 1616, 1212, 808, 404, 202, 101, 50, 25],
            Preset::Tiny => &[32, 16],
        }
    }

    pub fn spec(self, seed: u64) -> MlpSpec {
        MlpSpec::regression(FEATURE_WIDTH, self.hidden_widths(), seed)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = MlpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            "tiny" => Ok(Preset::Tiny),
            other => Err(MlpError::Spec(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_width: usize,
    pub layers: Vec<LayerSpec>,
    pub seed: u64,
}

impl MlpSpec {
    /// ReLU hidden layers and one linear output neuron.
    pub fn regression(input_width: usize, hidden: &[usize], seed: u64) -> Self {
        let mut layers: Vec<LayerSpec> = hidden.iter().map(|&w| LayerSpec::relu(w)).collect();
        layers.push(LayerSpec::linear(1));
        Self { input_width, layers, seed }
    }

    pub fn validate(&self) -> Result<(), MlpError> {
        if self.input_width == 0 {
            return Err(MlpError::Spec("input width is zero".into()));
        }
        let Some(last) = self.layers.last() else {
            return Err(MlpError::Spec("no layers".into()));
        };
        if last.width != 1 {
            return Err(MlpError::Spec(format!("output width {} != 1", last.width)));
        }
        if let Some(l) = self.layers.iter().find(|l| l.width == 0) {
            return Err(MlpError::Spec(format!("zero-width layer {l:?}")));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        let mut fan_in = self.input_width;
        self.layers
            .iter()
            .map(|l| {
                let n = l.width * (fan_in + 1);
                fan_in = l.width;
                n
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `(out, in)`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn fan_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn width(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    layers: Vec<Dense>,
}

/// He-uniform bound `sqrt(6 / fan_in)`.
pub fn he_uniform_limit(fan_in: usize) -> f64 {
    (6.0 / fan_in as f64).sqrt()
}

/// Weights i.i.d. uniform on `[-L, L]`, `L = sqrt(6 / fan_in)`; zero biases.
pub fn he_uniform_init(spec: &MlpSpec) -> Result<Mlp, MlpError> {
    spec.validate()?;
    let mut rng = SplitMix64::for_stream(spec.seed, &[stream::INIT]);
    let mut fan_in = spec.input_width;
    let layers = spec
        .layers
        .iter()
        .map(|l| {
            let limit = he_uniform_limit(fan_in);
            let dist = Uniform::new_inclusive(-limit, limit);
            let weights = Array2::from_shape_simple_fn((l.width, fan_in), || dist.sample(&mut rng));
            fan_in = l.width;
            Dense { weights, bias: Array1::zeros(l.width), activation: l.activation }
        })
        .collect();
    Ok(Mlp { spec: spec.clone(), layers })
}

/// Activations `a_0 = x, a_1, …, a_L` of a batch, each `(rows, width)`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn activations(&self) -> &[Array2<f64>] {
        &self.activations
    }

    /// Network outputs, one per row.
    pub fn outputs(&self) -> Vec<f64> {
        self.activations.last().expect("non-empty").column(0).to_vec()
    }
}

/// Parameter-shaped gradient (also used for Adam moments).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            biases: net.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }

    pub fn fill(&mut self, v: f64) {
        self.weights.iter_mut().for_each(|w| w.fill(v));
        self.biases.iter_mut().for_each(|b| b.fill(v));
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.weights
            .iter()
            .flat_map(|w| w.iter())
            .chain(self.biases.iter().flat_map(|b| b.iter()))
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl Mlp {
    /// Builds a network from explicit layers.
    pub fn from_layers(spec: MlpSpec, layers: Vec<Dense>) -> Result<Self, MlpError> {
        spec.validate()?;
        if layers.len() != spec.layers.len() {
            return Err(MlpError::Spec("layer count mismatch".into()));
        }
        let mut fan_in = spec.input_width;
        for (d, l) in layers.iter().zip(&spec.layers) {
            if d.weights.dim() != (l.width, fan_in) || d.bias.len() != l.width || d.activation != l.activation {
                return Err(MlpError::Spec(format!("layer shape mismatch for {l:?}")));
            }
            fan_in = l.width;
        }
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.spec.input_width
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite()))
    }

    fn check_width(&self, found: usize) -> Result<(), MlpError> {
        if found != self.spec.input_width {
            return Err(MlpError::Shape { expected: self.spec.input_width, found });
        }
        Ok(())
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<(f64, ForwardCache), MlpError> {
        self.check_width(x.len())?;
        let view = ArrayView2::from_shape((1, x.len()), x).expect("contiguous row");
        let cache = self.forward_rows(view);
        let y = cache.activations.last().unwrap()[[0, 0]];
        Ok((y, cache))
    }

    /// Batched forward pass over the rows of `x`.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<ForwardCache, MlpError> {
        self.check_width(x.ncols())?;
        Ok(self.forward_rows(x))
    }

    fn forward_rows(&self, x: ArrayView2<f64>) -> ForwardCache {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        for layer in &self.layers {
            let prev = activations.last().unwrap();
            let mut z = Array2::zeros((prev.nrows(), layer.width()));
            general_mat_mul(1.0, prev, &layer.weights.t(), 0.0, &mut z);
            z += &layer.bias;
            if layer.activation == Activation::Relu {
                z.mapv_inplace(|v| if v > 0.0 { v } else { 0.0 });
            }
            activations.push(z);
        }
        ForwardCache { activations }
    }

    /// Gradient of `(ŷ - y)²` for the sample cached by [`Mlp::forward`].
    pub fn backward(&self, cache: &ForwardCache, target: f64) -> Gradients {
        let mut g = Gradients::zeros_like(self);
        self.accumulate_gradients(cache, &[target], 1.0, &mut g);
        g
    }

    /// Mean-over-batch gradient of the squared error.
    pub fn backward_batch(&self, cache: &ForwardCache, targets: &[f64]) -> Result<Gradients, MlpError> {
        let rows = cache.activations[0].nrows();
        if targets.len() != rows {
            return Err(MlpError::TargetCount(targets.len(), rows));
        }
        if rows == 0 {
            return Err(MlpError::Empty);
        }
        let mut g = Gradients::zeros_like(self);
        self.accumulate_gradients(cache, targets, 1.0 / rows as f64, &mut g);
        Ok(g)
    }

    /// Adds `scale · Σ_rows ∂(ŷ - y)²/∂θ` into `grads`.
    pub(crate) fn accumulate_gradients(
        &self,
        cache: &ForwardCache,
        targets: &[f64],
        scale: f64,
        grads: &mut Gradients,
    ) {
        let deltas = self.output_deltas(cache, targets, scale);
        self.accumulate_parameter_grads(cache, &deltas, grads);
    }

    /// Per-layer error signals `δ_l = ∂L/∂z_l`, one row per sample.
    ///
    /// Row-local: the rows of a batch can be processed in any grouping.
    pub(crate) fn output_deltas(&self, cache: &ForwardCache, targets: &[f64], scale: f64) -> Vec<Array2<f64>> {
        let acts = &cache.activations;
        let out = acts.last().unwrap();
        let mut delta = Array2::from_shape_fn((out.nrows(), 1), |(r, _)| 2.0 * (out[[r, 0]] - targets[r]) * scale);
        let mut deltas = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            if layer.activation == Activation::Relu {
                delta.zip_mut_with(&acts[l + 1], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            let next = (l > 0).then(|| {
                let mut next = Array2::zeros((delta.nrows(), layer.fan_in()));
                general_mat_mul(1.0, &delta, &layer.weights, 0.0, &mut next);
                next
            });
            deltas.push(std::mem::replace(&mut delta, next.unwrap_or_default()));
        }
        deltas.reverse();
        deltas
    }

    /// `grad_W_l += δ_lᵀ a_{l-1}`, `grad_b_l += Σ_rows δ_l`.
    pub(crate) fn accumulate_parameter_grads(&self, cache: &ForwardCache, deltas: &[Array2<f64>], grads: &mut Gradients) {
        for (l, delta) in deltas.iter().enumerate() {
            general_mat_mul(1.0, &delta.t(), &cache.activations[l], 1.0, &mut grads.weights[l]);
            grads.biases[l] += &delta.sum_axis(Axis(0));
        }
    }

    /// Predictions for every row of `x`.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>, MlpError> {
        self.check_width(x.ncols())?;
        let mut out = Vec::with_capacity(x.nrows());
        let mut start = 0;
        while start < x.nrows() {
            let end = (start + INFERENCE_CHUNK).min(x.nrows());
            out.extend(self.forward_rows(x.slice(s![start..end, ..])).outputs());
            start = end;
        }
        Ok(out)
    }
}

const INFERENCE_CHUNK: usize = 1024;

/// Feature matrix and targets for training or evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub features: Array2<f64>,
    pub targets: Vec<f64>,
}

impl Samples {
    pub fn new(features: Array2<f64>, targets: Vec<f64>) -> Result<Self, MlpError> {
        if features.nrows() != targets.len() {
            return Err(MlpError::TargetCount(targets.len(), features.nrows()));
        }
        Ok(Self { features, targets })
    }

    /// Gathers the given records (by index) into a sample set.
    pub fn from_records(records: &[Record], indices: &[usize]) -> Self {
        let mut features = Array2::zeros((indices.len(), FEATURE_WIDTH));
        let mut targets = Vec::with_capacity(indices.len());
        for (row, &i) in features.rows_mut().into_iter().zip(indices) {
            records[i].write_features(row.into_slice().expect("standard layout"));
            targets.push(records[i].label);
        }
        Self { features, targets }
    }

    pub fn all(records: &[Record]) -> Self {
        let idx: Vec<usize> = (0..records.len()).collect();
        Self::from_records(records, &idx)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}

/// Order-independent sum: sorts, then Neumaier-compensated accumulation.
pub fn stable_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Mean absolute error of the network over a labeled set.
pub fn evaluate_mae(net: &Mlp, samples: &Samples) -> Result<f64, MlpError> {
    if samples.is_empty() {
        return Err(MlpError::Empty);
    }
    let pred = net.predict(samples.features.view())?;
    Ok(mae(&pred, &samples.targets))
}

/// `mean |p - y|`, independent of element order.
pub fn mae(pred: &[f64], targets: &[f64]) -> f64 {
    let errs: Vec<f64> = pred.iter().zip(targets).map(|(p, y)| (p - y).abs()).collect();
    let n = errs.len();
    stable_sum(errs) / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceTiming {
    pub rows: usize,
    pub total_secs: f64,
    pub per_sample_secs: f64,
}

/// Batched inference with wall-clock timing.
pub fn infer_batch(net: &Mlp, x: ArrayView2<f64>) -> Result<(Vec<f64>, InferenceTiming), MlpError> {
    let start = Instant::now();
    let pred = net.predict(x)?;
    let total_secs = start.elapsed().as_secs_f64();
    let rows = x.nrows();
    Ok((
        pred,
        InferenceTiming { rows, total_secs, per_sample_secs: total_secs / rows.max(1) as f64 },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn single_layer(w: Array2<f64>, b: Array1<f64>, act: Activation) -> Mlp {
        let spec = MlpSpec {
            input_width: w.ncols(),
            layers: vec![LayerSpec { width: 1, activation: act }],
            seed: 0,
        };
        Mlp::from_layers(spec, vec![Dense { weights: w, bias: b, activation: act }]).unwrap()
    }

    #[test]
    fn he_limits() {
        assert_abs_diff_eq!(he_uniform_limit(101), 0.243733, epsilon = 1e-6);
        assert_eq!(he_uniform_limit(6), 1.0);
    }

    #[test]
    fn he_init_statistics() {
        let spec = MlpSpec::regression(101, &[1000], 5);
        let net = he_uniform_init(&spec).unwrap();
        let w = &net.layers()[0].weights;
        assert_eq!(w.len(), 101_000);
        let limit = he_uniform_limit(101);
        assert!(w.iter().all(|v| v.abs() <= limit));
        let mean = w.mean().unwrap();
        // Uniform on [-L, L] has σ = L/√3.
        let sigma = limit / 3f64.sqrt() / (w.len() as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma, "mean {mean} vs 3σ {}", 3.0 * sigma);
        assert!(net.layers().iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(net.layers()[1].weights.dim(), (1, 1000));
    }

    #[test]
    fn spec_validation() {
        assert!(MlpSpec { input_width: 3, layers: vec![LayerSpec::relu(2)], seed: 0 }.validate().is_err());
        assert!(MlpSpec { input_width: 3, layers: vec![], seed: 0 }.validate().is_err());
        assert!(Preset::Paper.spec(0).validate().is_ok());
        assert_eq!(Preset::Paper.spec(0).layers.len(), 14);
        assert_eq!(Preset::Desk.spec(0).layers.len(), 5);
        assert_eq!("Desk".parse::<Preset>().unwrap(), Preset::Desk);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let spec = MlpSpec {
            input_width: 4,
            layers: vec![LayerSpec::relu(3), LayerSpec::relu(1)],
            seed: 0,
        };
        let mut net = he_uniform_init(&spec).unwrap();
        for l in net.layers_mut() {
            l.weights.fill(0.0);
            l.bias.fill(0.0);
        }
        assert_eq!(net.forward(&[1.0, -2.0, 3.0, 4.0]).unwrap().0, 0.0);
    }

    #[test]
    fn linear_sum_of_ones() {
        let n = 7;
        let net = single_layer(Array2::ones((1, n)), Array1::zeros(1), Activation::Linear);
        assert_eq!(net.forward(&vec![1.0; n]).unwrap().0, n as f64);
        assert!(matches!(net.forward(&[1.0; 3]), Err(MlpError::Shape { expected: 7, found: 3 })));
    }

    #[test]
    fn hand_computed_two_two_one() {
        // h = relu(W1 x + b1), y = w2·h + b2
        // W1 = [[1, -1], [0.5, 2]], b1 = [0.1, -3], w2 = [2, -1], b2 = 0.5
        // x = [0.3, 0.2]: z1 = [0.2, -2.45] → h = [0.2, 0] → y = 0.9
        let spec = MlpSpec { input_width: 2, layers: vec![LayerSpec::relu(2), LayerSpec::linear(1)], seed: 0 };
        let net = Mlp::from_layers(
            spec,
            vec![
                Dense { weights: array![[1.0, -1.0], [0.5, 2.0]], bias: array![0.1, -3.0], activation: Activation::Relu },
                Dense { weights: array![[2.0, -1.0]], bias: array![0.5], activation: Activation::Linear },
            ],
        )
        .unwrap();
        let (y, cache) = net.forward(&[0.3, 0.2]).unwrap();
        assert_abs_diff_eq!(y, 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(cache.activations()[1][[0, 0]], 0.2, epsilon = 1e-15);
        assert_eq!(cache.activations()[1][[0, 1]], 0.0);

        // dL/dy = 2(0.9 - 1) = -0.2
        let g = net.backward(&cache, 1.0);
        assert_abs_diff_eq!(g.biases[1][0], -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(g.weights[1][[0, 0]], -0.2 * 0.2, epsilon = 1e-15);
        assert_eq!(g.weights[1][[0, 1]], 0.0);
        // Only the active hidden unit passes gradient: δ_h0 = -0.2 · 2.
        assert_abs_diff_eq!(g.biases[0][0], -0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(g.weights[0][[0, 0]], -0.4 * 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(g.weights[0][[0, 1]], -0.4 * 0.2, epsilon = 1e-15);
        assert_eq!(g.biases[0][1], 0.0);
    }

    #[test]
    fn zero_residual_zero_gradient() {
        let net = he_uniform_init(&MlpSpec::regression(5, &[4, 3], 9)).unwrap();
        let x = [0.1, -0.4, 0.9, 1.0, -1.0];
        let (y, cache) = net.forward(&x).unwrap();
        assert_eq!(net.backward(&cache, y).max_abs(), 0.0);
    }

    #[test]
    fn linear_layer_gradient_closed_form() {
        let net = single_layer(array![[0.5, -1.0, 2.0]], array![0.25], Activation::Linear);
        let x = [1.0, 2.0, -0.5];
        let (y, cache) = net.forward(&x).unwrap();
        let target = 0.3;
        let g = net.backward(&cache, target);
        for k in 0..3 {
            assert_abs_diff_eq!(g.weights[0][[0, k]], 2.0 * (y - target) * x[k], epsilon = 1e-15);
        }
        assert_abs_diff_eq!(g.biases[0][0], 2.0 * (y - target), epsilon = 1e-15);
    }

    #[test]
    fn batch_predictions_match_rows() {
        let net = he_uniform_init(&MlpSpec::regression(101, &[64, 32], 3)).unwrap();
        let mut rng = SplitMix64::new(1);
        let x = Array2::from_shape_simple_fn((50, 101), || rng.next_f64() * 2.0 - 1.0);
        let batch = net.predict(x.view()).unwrap();
        for (r, row) in x.rows().into_iter().enumerate() {
            let (y, _) = net.forward(row.as_slice().unwrap()).unwrap();
            assert!((y - batch[r]).abs() <= 1e-15, "row {r}: {y} vs {}", batch[r]);
        }
        let same = Array2::from_shape_fn((8, 101), |(_, c)| x[[0, c]]);
        let p = net.predict(same.view()).unwrap();
        assert!(p.iter().all(|&v| v == p[0]));
    }

    #[test]
    fn relu_layers_are_non_negative() {
        let net = he_uniform_init(&MlpSpec::regression(10, &[16, 16], 4)).unwrap();
        let mut rng = SplitMix64::new(2);
        let x = Array2::from_shape_simple_fn((20, 10), || rng.next_f64() * 4.0 - 2.0);
        let cache = net.forward_batch(x.view()).unwrap();
        for a in &cache.activations()[1..3] {
            assert!(a.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn mae_arithmetic() {
        let net = single_layer(Array2::zeros((1, 2)), Array1::zeros(1), Activation::Linear);
        let s = Samples::new(Array2::zeros((2, 2)), vec![1.0, 3.0]).unwrap();
        assert_eq!(evaluate_mae(&net, &s).unwrap(), 2.0);
        let perfect = Samples::new(Array2::zeros((3, 2)), vec![0.0; 3]).unwrap();
        assert_eq!(evaluate_mae(&net, &perfect).unwrap(), 0.0);
        let empty = Samples::new(Array2::zeros((0, 2)), vec![]).unwrap();
        assert!(matches!(evaluate_mae(&net, &empty), Err(MlpError::Empty)));
    }

    #[test]
    fn stable_sum_ignores_order() {
        let mut rng = SplitMix64::new(8);
        let v: Vec<f64> = (0..1000).map(|_| rng.next_f64() * 10f64.powi((rng.below(12)) as i32 - 6)).collect();
        let mut w = v.clone();
        rng.shuffle(&mut w);
        assert_eq!(stable_sum(v), stable_sum(w));
    }
}
