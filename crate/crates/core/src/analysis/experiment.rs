//! Train/test experiments and dataset-size studies.

use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::dataset::{split, DatasetError, DatasetHeader, DatasetId, Record, Split};
use crate::format::{read_dataset, FormatError};
use crate::mlp::{evaluate_mae, he_uniform_init, train, Mlp, MlpError, Preset, Samples, TrainConfig, TrainError, TrainHistory};

/// Train/test split used by every experiment.
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub split: u64,
    pub init: u64,
    pub train: u64,
}

impl Seeds {
    /// One seed for every stage; stages still draw from distinct streams.
    pub fn uniform(seed: u64) -> Self {
        Self { split: seed, init: seed, train: seed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub seeds: Seeds,
    /// Fraction of the training split actually used, in `(0, 1]`.
    pub fraction: f64,
    /// `seed` is overwritten by `seeds.train`.
    pub train: TrainConfig,
}

impl ExperimentConfig {
    /// Desk defaults: at most 300 epochs.
    pub fn desk(preset: Preset, seed: u64) -> Self {
        Self {
            preset,
            seeds: Seeds::uniform(seed),
            fraction: 1.0,
            train: TrainConfig { max_epochs: 300, ..TrainConfig::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub dataset_id: DatasetId,
    pub dataset_seed: u64,
    pub record_count: u64,
    pub preset: Preset,
    pub seeds: Seeds,
    pub fraction: f64,
    /// Records passed to training, before the validation hold-out.
    pub train_records: usize,
    pub test_records: usize,
    pub max_epochs: usize,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub stopped_early: bool,
    /// Statistics of the epoch whose weights were kept.
    pub final_train_mae: f64,
    pub final_val_mae: f64,
    pub test_vmae: f64,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub net: Mlp,
    pub history: TrainHistory,
    pub split: Split,
}

/// The first `round(n · fraction)` entries (at least one) of an already
/// shuffled index list.
pub fn fraction_prefix(indices: &[usize], fraction: f64) -> &[usize] {
    let n = ((indices.len() as f64 * fraction).round() as usize).clamp(1, indices.len().max(1));
    &indices[..n.min(indices.len())]
}

/// 80/20 split, training on a prefix of the shuffled training indices, and
/// MAE on the full test split.
pub fn run_experiment(
    header: &DatasetHeader,
    records: &[Record],
    config: &ExperimentConfig,
) -> Result<ExperimentOutput, ExperimentError> {
    if !(config.fraction > 0.0 && config.fraction <= 1.0) {
        return Err(ExperimentError::Config(format!("fraction {} outside (0, 1]", config.fraction)));
    }
    if records.len() as u64 != header.record_count {
        return Err(ExperimentError::Config(format!(
            "header declares {} records, got {}",
            header.record_count,
            records.len()
        )));
    }
    let started = Instant::now();
    let sp = split(records.len(), TRAIN_FRACTION, config.seeds.split)?;
    let used = fraction_prefix(&sp.train, config.fraction);
    let train_set = Samples::from_records(records, used);
    let test_set = Samples::from_records(records, &sp.test);

    let net = he_uniform_init(&config.preset.spec(config.seeds.init))?;
    let train_cfg = TrainConfig { seed: config.seeds.train, ..config.train.clone() };
    let (net, history) = train(net, &train_set, &train_cfg)?;
    let kept = if train_cfg.restore_best { history.best() } else { history.last() };
    let kept = *kept.expect("training runs at least one epoch");
    let test_vmae = evaluate_mae(&net, &test_set)?;

    let report = ExperimentReport {
        dataset_id: header.dataset_id,
        dataset_seed: header.master_seed,
        record_count: header.record_count,
        preset: config.preset,
        seeds: config.seeds,
        fraction: config.fraction,
        train_records: used.len(),
        test_records: sp.test.len(),
        max_epochs: train_cfg.max_epochs,
        epochs_run: history.epochs.len(),
        best_epoch: history.best_epoch,
        stopped_early: history.stopped_early,
        final_train_mae: kept.train_mae,
        final_val_mae: kept.val_mae,
        test_vmae,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    Ok(ExperimentOutput { report, net, history, split: sp })
}

pub fn run_experiment_file(path: impl AsRef<Path>, config: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    let (header, records) = read_dataset(path)?;
    run_experiment(&header, &records, config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractionRow {
    pub fraction: f64,
    pub train_records: usize,
    pub test_vmae: f64,
    pub report: ExperimentReport,
}

/// One experiment per fraction, all sharing the split and test set.
pub fn fraction_study(
    header: &DatasetHeader,
    records: &[Record],
    fractions: &[f64],
    config: &ExperimentConfig,
) -> Result<Vec<FractionRow>, ExperimentError> {
    if fractions.is_empty() {
        return Err(ExperimentError::Config("no fractions given".into()));
    }
    fractions
        .iter()
        .map(|&f| {
            let cfg = ExperimentConfig { fraction: f, ..config.clone() };
            let out = run_experiment(header, records, &cfg)?;
            Ok(FractionRow {
                fraction: f,
                train_records: out.report.train_records,
                test_vmae: out.report.test_vmae,
                report: out.report,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::Sign;
    use crate::control::BangControl;
    use crate::dataset::{direct_record, generate_records};
    use crate::par::ExecMode;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            preset: Preset::Tiny,
            seeds: Seeds::uniform(5),
            fraction: 1.0,
            train: TrainConfig { max_epochs: 3, ..TrainConfig::default() },
        }
    }

    #[test]
    fn repeated_runs_are_identical() {
        let (h, recs) = generate_records(DatasetId::Ds1, 100, 9, ExecMode::Parallel).unwrap();
        let a = run_experiment(&h, &recs, &small_config()).unwrap();
        let b = run_experiment(&h, &recs, &small_config()).unwrap();
        let strip = |r: &ExperimentReport| ExperimentReport { wall_clock_secs: 0.0, ..r.clone() };
        assert_eq!(strip(&a.report), strip(&b.report));
        assert_eq!(a.history, b.history);
        assert_eq!(a.report.train_records, 800);
        assert_eq!(a.report.test_records, 200);
        assert!(a.report.epochs_run <= 3);
    }

    #[test]
    fn fraction_one_matches_plain_experiment() {
        let (h, recs) = generate_records(DatasetId::Ds2, 50, 3, ExecMode::Parallel).unwrap();
        let plain = run_experiment(&h, &recs, &small_config()).unwrap();
        let rows = fraction_study(&h, &recs, &[1.0, 0.125], &small_config()).unwrap();
        assert_eq!(rows[0].test_vmae, plain.report.test_vmae);
        assert_eq!(rows[1].train_records, 50);
    }

    #[test]
    fn constant_function_is_learned() {
        // One offset and one repeated control make the label constant.
        let c = BangControl::new(Sign::Plus, [10, 20, 30, 40, 50]).unwrap();
        let rec = direct_record(0.4, &c);
        let mut h = DatasetHeader::new(DatasetId::Ds1, 2000, 0);
        h.offset_count = 1;
        h.record_count = 2000;
        let recs = vec![rec; 2000];
        let cfg = ExperimentConfig {
            train: TrainConfig { max_epochs: 60, batch_size: 32, ..TrainConfig::default() },
            ..small_config()
        };
        let out = run_experiment(&h, &recs, &cfg).unwrap();
        assert!(out.report.test_vmae < 1e-6, "{}", out.report.test_vmae);
    }

    #[test]
    fn bad_fraction_is_rejected() {
        let (h, recs) = generate_records(DatasetId::Ds1, 10, 1, ExecMode::Sequential).unwrap();
        for f in [0.0, 1.5, f64::NAN] {
            let cfg = ExperimentConfig { fraction: f, ..small_config() };
            assert!(matches!(run_experiment(&h, &recs, &cfg), Err(ExperimentError::Config(_))));
        }
    }
}
