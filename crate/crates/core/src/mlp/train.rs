//! Mini-batch training with Adam and early stopping on validation MAE.
//!
//! Each mini-batch is cut into fixed shards of `shard_rows` rows. Shard
//! gradients are computed independently (in parallel when enabled) and summed
//! in shard order, so sequential and parallel runs are bit-identical.

use ndarray::Array2;
use thiserror::Error;

use super::{adam_step, evaluate_mae, mae, stable_sum, AdamConfig, AdamState, ForwardCache, Gradients, Mlp, MlpError, Samples};
use crate::par::{self, ExecMode};
use crate::rng::{stream, SplitMix64};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub validation_fraction: f64,
    /// Non-improving epochs tolerated before stopping.
    pub patience: usize,
    pub restore_best: bool,
    pub seed: u64,
    pub adam: AdamConfig,
    pub shard_rows: usize,
    pub mode: ExecMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            max_epochs: 1000,
            validation_fraction: 0.2,
            patience: 20,
            restore_best: true,
            seed: 0,
            adam: AdamConfig::default(),
            shard_rows: 32,
            mode: ExecMode::Sequential,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size == 0 || self.shard_rows == 0 {
            return Err(TrainError::Config("batch_size and shard_rows must be >= 1".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(TrainError::Config(format!(
                "validation fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        if self.max_epochs == 0 {
            return Err(TrainError::Config("max_epochs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training set too small: {0} samples")]
    TooSmall(usize),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },
    #[error(transparent)]
    Mlp(#[from] MlpError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Sample-weighted mean squared error over the epoch's batches.
    pub train_loss: f64,
    /// Sample-weighted MAE over the epoch's batches.
    pub train_mae: f64,
    pub val_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// 1-based epoch with the lowest validation MAE.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn best(&self) -> Option<&EpochStats> {
        self.epochs.get(self.best_epoch.checked_sub(1)?)
    }

    pub fn last(&self) -> Option<&EpochStats> {
        self.epochs.last()
    }
}

struct ShardPass {
    cache: ForwardCache,
    deltas: Vec<Array2<f64>>,
    sq_err: Vec<f64>,
    abs_err: Vec<f64>,
}

fn shard_pass(net: &Mlp, x: &Array2<f64>, y: &[f64], scale: f64) -> ShardPass {
    let cache = net.forward_rows(x.view());
    let pred = cache.outputs();
    let deltas = net.output_deltas(&cache, y, scale);
    let sq_err = pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).collect();
    let abs_err = pred.iter().zip(y).map(|(p, t)| (p - t).abs()).collect();
    ShardPass { cache, deltas, sq_err, abs_err }
}

fn gather(samples: &Samples, idx: &[usize]) -> (Array2<f64>, Vec<f64>) {
    let width = samples.features.ncols();
    let mut x = Array2::zeros((idx.len(), width));
    for (mut row, &i) in x.rows_mut().into_iter().zip(idx) {
        row.assign(&samples.features.row(i));
    }
    (x, idx.iter().map(|&i| samples.targets[i]).collect())
}

/// Trains `net` on `data`, holding out `validation_fraction` for early stopping.
pub fn train(mut net: Mlp, data: &Samples, config: &TrainConfig) -> Result<(Mlp, TrainHistory), TrainError> {
    config.validate()?;
    let n = data.len();
    let n_val = (n as f64 * config.validation_fraction).round() as usize;
    if n < 2 || n_val == 0 || n_val >= n {
        return Err(TrainError::TooSmall(n));
    }
    if data.features.ncols() != net.input_width() {
        return Err(MlpError::Shape { expected: net.input_width(), found: data.features.ncols() }.into());
    }

    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::for_stream(config.seed, &[stream::VALIDATION]).shuffle(&mut order);
    let val = data.subset(&order[..n_val]);
    let mut train_idx = order[n_val..].to_vec();

    let mut shuffler = SplitMix64::for_stream(config.seed, &[stream::SHUFFLE]);
    let mut adam = AdamState::new(&net, config.adam);
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, Mlp)> = None;
    let mut wait = 0usize;
    let mut grads = Gradients::zeros_like(&net);

    for epoch in 1..=config.max_epochs {
        shuffler.shuffle(&mut train_idx);
        let mut sq = Vec::with_capacity(train_idx.len());
        let mut abs = Vec::with_capacity(train_idx.len());
        for (b, batch) in train_idx.chunks(config.batch_size).enumerate() {
            let scale = 1.0 / batch.len() as f64;
            let shards: Vec<&[usize]> = batch.chunks(config.shard_rows).collect();
            let results = par::map_slice(&shards, config.mode, |idx| {
                let (x, y) = gather(data, idx);
                shard_pass(&net, &x, &y, scale)
            });
            grads.fill(0.0);
            for r in &results {
                net.accumulate_parameter_grads(&r.cache, &r.deltas, &mut grads);
            }
            let batch_sq: f64 = results.iter().flat_map(|r| r.sq_err.iter()).sum();
            if !batch_sq.is_finite() || !grads.is_finite() {
                return Err(TrainError::NonFinite { epoch, batch: b });
            }
            adam_step(&mut net, &grads, &mut adam);
            for r in results {
                sq.extend(r.sq_err);
                abs.extend(r.abs_err);
            }
        }
        let count = sq.len() as f64;
        let train_loss = stable_sum(sq) / count;
        let train_mae = stable_sum(abs) / count;
        let val_mae = evaluate_mae(&net, &val)?;
        if !val_mae.is_finite() {
            return Err(TrainError::NonFinite { epoch, batch: usize::MAX });
        }
        history.epochs.push(EpochStats { epoch, train_loss, train_mae, val_mae });

        let improved = best.as_ref().is_none_or(|(b, _)| val_mae < *b);
        if improved {
            history.best_epoch = epoch;
            best = Some((val_mae, net.clone()));
            wait = 0;
        } else {
            wait += 1;
            if wait >= config.patience.max(1) {
                history.stopped_early = true;
                break;
            }
        }
    }

    if config.restore_best {
        if let Some((_, best_net)) = best {
            net = best_net;
        }
    }
    Ok((net, history))
}

/// Validation MAE of `net` on the split `train` would hold out for `data`.
pub fn validation_mae(net: &Mlp, data: &Samples, config: &TrainConfig) -> Result<f64, MlpError> {
    let n = data.len();
    let n_val = (n as f64 * config.validation_fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::for_stream(config.seed, &[stream::VALIDATION]).shuffle(&mut order);
    let val = data.subset(&order[..n_val]);
    let pred = net.predict(val.features.view())?;
    Ok(mae(&pred, &val.targets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{he_uniform_init, MlpSpec};

    fn synthetic(n: usize, width: usize, seed: u64, f: impl Fn(&[f64]) -> f64) -> Samples {
        let mut rng = SplitMix64::new(seed);
        let x = Array2::from_shape_simple_fn((n, width), || if rng.next_f64() < 0.5 { -1.0 } else { 1.0 });
        let y = x.rows().into_iter().map(|r| f(r.as_slice().unwrap())).collect();
        Samples::new(x, y).unwrap()
    }

    #[test]
    fn learns_constant_target() {
        let data = synthetic(16_384, 8, 1, |_| 0.0);
        let net = he_uniform_init(&MlpSpec::regression(8, &[8], 2)).unwrap();
        let cfg = TrainConfig { max_epochs: 50, patience: 50, seed: 3, batch_size: 32, ..TrainConfig::default() };
        let (_, h) = train(net, &data, &cfg).unwrap();
        let best = h.epochs.iter().map(|e| e.train_mae).fold(f64::INFINITY, f64::min);
        assert!(best < 1e-3, "train MAE {best}");
    }

    #[test]
    fn learns_linear_mean() {
        // y = Σ x_i / 101 on ±1 inputs.
        let data = synthetic(20_000, 101, 4, |x| x.iter().sum::<f64>() / 101.0);
        let net = he_uniform_init(&MlpSpec::regression(101, &[32], 5)).unwrap();
        let cfg = TrainConfig { max_epochs: 100, patience: 100, seed: 6, ..TrainConfig::default() };
        let (net, h) = train(net, &data, &cfg).unwrap();
        let v = validation_mae(&net, &data, &cfg).unwrap();
        assert!(v < 1e-2, "validation MAE {v}");
        assert_eq!(h.best().unwrap().val_mae, v);
    }

    #[test]
    fn patience_zero_stops_at_first_regression() {
        let data = synthetic(600, 6, 7, |x| x[0] * x[1]);
        let net = he_uniform_init(&MlpSpec::regression(6, &[8], 8)).unwrap();
        let cfg = TrainConfig {
            max_epochs: 200,
            patience: 0,
            seed: 9,
            adam: AdamConfig { lr: 0.05, ..AdamConfig::default() },
            ..TrainConfig::default()
        };
        let (_, h) = train(net, &data, &cfg).unwrap();
        let n = h.epochs.len();
        assert!(h.stopped_early);
        assert!(h.epochs[n - 1].val_mae >= h.epochs[n - 2].val_mae);
        for w in h.epochs[..n - 1].windows(2) {
            assert!(w[1].val_mae < w[0].val_mae);
        }
    }

    #[test]
    fn restore_best_returns_best_epoch_weights() {
        let data = synthetic(400, 5, 10, |x| (x[0] + x[1]).abs());
        let net = he_uniform_init(&MlpSpec::regression(5, &[8], 11)).unwrap();
        let cfg = TrainConfig { max_epochs: 40, patience: 3, seed: 12, ..TrainConfig::default() };
        let (trained, h) = train(net, &data, &cfg).unwrap();
        let v = validation_mae(&trained, &data, &cfg).unwrap();
        let best = h.best().unwrap().val_mae;
        assert_eq!(v, best);
        for e in &h.epochs[h.best_epoch..] {
            assert!(v <= e.val_mae);
        }
        for (i, e) in h.epochs.iter().enumerate() {
            assert_eq!(e.epoch, i + 1);
        }
    }

    #[test]
    fn parallel_matches_sequential_bitwise() {
        let data = synthetic(700, 12, 13, |x| x[0] - 0.5 * x[3] * x[4]);
        let net = he_uniform_init(&MlpSpec::regression(12, &[16, 8], 14)).unwrap();
        let seq = TrainConfig { max_epochs: 5, seed: 15, shard_rows: 16, ..TrainConfig::default() };
        let par = TrainConfig { mode: ExecMode::Parallel, ..seq.clone() };
        let (a, ha) = train(net.clone(), &data, &seq).unwrap();
        let (b, hb) = train(net, &data, &par).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
    }

    #[test]
    fn divergence_is_reported() {
        let mut data = synthetic(100, 3, 16, |_| 1.0);
        data.targets[5] = f64::NAN;
        let net = he_uniform_init(&MlpSpec::regression(3, &[4], 17)).unwrap();
        let cfg = TrainConfig { max_epochs: 3, seed: 18, ..TrainConfig::default() };
        let err = train(net, &data, &cfg).unwrap_err();
        assert!(matches!(err, TrainError::NonFinite { epoch: 1, .. }), "{err}");
    }

    #[test]
    fn config_errors() {
        let data = synthetic(10, 3, 1, |_| 0.0);
        let net = he_uniform_init(&MlpSpec::regression(3, &[2], 1)).unwrap();
        let bad = TrainConfig { batch_size: 0, ..TrainConfig::default() };
        assert!(matches!(train(net.clone(), &data, &bad), Err(TrainError::Config(_))));
        let bad = TrainConfig { validation_fraction: 1.0, ..TrainConfig::default() };
        assert!(matches!(train(net.clone(), &data, &bad), Err(TrainError::Config(_))));
        let one = synthetic(1, 3, 1, |_| 0.0);
        assert!(matches!(train(net, &one, &TrainConfig::default()), Err(TrainError::TooSmall(1))));
    }
}
