//! Plain-text results files.
//!
//! Reports are `key = value` lines. Floats are written in Rust's shortest
//! round-trip form so a report parses back to the identical value.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::experiment::{ExperimentReport, FractionRow, Seeds};
use crate::mlp::TrainHistory;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing key {0:?}")]
    Missing(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `<root>/<dataset_id>/<preset>/<seed>/`.
pub fn report_dir(root: impl AsRef<Path>, report: &ExperimentReport) -> PathBuf {
    root.as_ref()
        .join(report.dataset_id.name())
        .join(report.preset.name())
        .join(report.seeds.train.to_string())
}

const KEYS: [&str; 19] = [
    "dataset_id",
    "dataset_seed",
    "record_count",
    "preset",
    "seed_split",
    "seed_init",
    "seed_train",
    "fraction",
    "train_records",
    "test_records",
    "max_epochs",
    "epochs_run",
    "best_epoch",
    "stopped_early",
    "final_train_mae",
    "final_val_mae",
    "test_vmae",
    "wall_clock_secs",
    "format",
];

impl ExperimentReport {
    /// `canonical` drops the wall-clock line so reruns compare byte-equal.
    pub fn to_text(&self, canonical: bool) -> String {
        let r = self;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("format", "experiment-report 1".into());
        kv("dataset_id", r.dataset_id.name().into());
        kv("dataset_seed", r.dataset_seed.to_string());
        kv("record_count", r.record_count.to_string());
        kv("preset", r.preset.name().into());
        kv("seed_split", r.seeds.split.to_string());
        kv("seed_init", r.seeds.init.to_string());
        kv("seed_train", r.seeds.train.to_string());
        kv("fraction", r.fraction.to_string());
        kv("train_records", r.train_records.to_string());
        kv("test_records", r.test_records.to_string());
        kv("max_epochs", r.max_epochs.to_string());
        kv("epochs_run", r.epochs_run.to_string());
        kv("best_epoch", r.best_epoch.to_string());
        kv("stopped_early", r.stopped_early.to_string());
        kv("final_train_mae", r.final_train_mae.to_string());
        kv("final_val_mae", r.final_val_mae.to_string());
        kv("test_vmae", r.test_vmae.to_string());
        if !canonical {
            kv("wall_clock_secs", r.wall_clock_secs.to_string());
        }
        s
    }

    /// Parses [`ExperimentReport::to_text`] output. A missing wall-clock line
    /// reads as zero.
    pub fn from_text(text: &str) -> Result<Self, ReportError> {
        let mut values: Vec<Option<String>> = vec![None; KEYS.len()];
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| ReportError::Parse { line: n + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let k = k.trim();
            let slot = KEYS.iter().position(|&x| x == k).ok_or_else(|| err(format!("unknown key {k:?}")))?;
            if values[slot].replace(v.trim().to_string()).is_some() {
                return Err(err(format!("duplicate key {k:?}")));
            }
        }
        let get = |k: &'static str| -> Result<&str, ReportError> {
            let i = KEYS.iter().position(|&x| x == k).unwrap();
            values[i].as_deref().ok_or(ReportError::Missing(k))
        };
        fn parse<T: std::str::FromStr>(k: &'static str, v: &str) -> Result<T, ReportError> {
            v.parse().map_err(|_| ReportError::Parse { line: 0, msg: format!("bad value {v:?} for {k}") })
        }
        macro_rules! field {
            ($k:literal) => {
                parse($k, get($k)?)?
            };
        }
        if get("format")? != "experiment-report 1" {
            return Err(ReportError::Parse { line: 0, msg: "unsupported report format".into() });
        }
        let wall_clock_secs = match get("wall_clock_secs") {
            Ok(v) => parse("wall_clock_secs", v)?,
            Err(_) => 0.0,
        };
        Ok(ExperimentReport {
            dataset_id: field!("dataset_id"),
            dataset_seed: field!("dataset_seed"),
            record_count: field!("record_count"),
            preset: field!("preset"),
            seeds: Seeds { split: field!("seed_split"), init: field!("seed_init"), train: field!("seed_train") },
            fraction: field!("fraction"),
            train_records: field!("train_records"),
            test_records: field!("test_records"),
            max_epochs: field!("max_epochs"),
            epochs_run: field!("epochs_run"),
            best_epoch: field!("best_epoch"),
            stopped_early: field!("stopped_early"),
            final_train_mae: field!("final_train_mae"),
            final_val_mae: field!("final_val_mae"),
            test_vmae: field!("test_vmae"),
            wall_clock_secs,
        })
    }
}

/// `epoch,mae,vmae`, one row per epoch.
pub fn write_history_csv<W: Write>(history: &TrainHistory, out: &mut W) -> io::Result<()> {
    writeln!(out, "epoch,mae,vmae")?;
    for e in &history.epochs {
        writeln!(out, "{},{},{}", e.epoch, e.train_mae, e.val_mae)?;
    }
    Ok(())
}

/// `fraction,train_records,vmae`.
pub fn write_fractions_csv<W: Write>(rows: &[FractionRow], out: &mut W) -> io::Result<()> {
    writeln!(out, "fraction,train_records,vmae")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.fraction, r.train_records, r.test_vmae)?;
    }
    Ok(())
}

/// Writes `report.txt` and `history.csv` under [`report_dir`] and returns
/// that directory.
pub fn save_experiment(
    root: impl AsRef<Path>,
    report: &ExperimentReport,
    history: &TrainHistory,
    canonical: bool,
) -> Result<PathBuf, ReportError> {
    let dir = report_dir(root, report);
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("report.txt"), report.to_text(canonical))?;
    let mut csv = Vec::new();
    write_history_csv(history, &mut csv)?;
    fs::write(dir.join("history.csv"), csv)?;
    Ok(dir)
}

pub fn load_report(path: impl AsRef<Path>) -> Result<ExperimentReport, ReportError> {
    ExperimentReport::from_text(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DatasetId;
    use crate::mlp::{EpochStats, Preset};
    use proptest::prelude::*;

    fn sample(vmae: f64, wall: f64) -> ExperimentReport {
        ExperimentReport {
            dataset_id: DatasetId::Ds2,
            dataset_seed: 42,
            record_count: 100_000,
            preset: Preset::Desk,
            seeds: Seeds { split: 1, init: 2, train: 3 },
            fraction: 0.125,
            train_records: 10_000,
            test_records: 20_000,
            max_epochs: 300,
            epochs_run: 87,
            best_epoch: 67,
            stopped_early: true,
            final_train_mae: 0.012_345_678_901_234_5,
            final_val_mae: 1.0 / 3.0,
            test_vmae: vmae,
            wall_clock_secs: wall,
        }
    }

    #[test]
    fn canonical_text_drops_wall_clock() {
        let a = sample(0.1, 12.5).to_text(true);
        let b = sample(0.1, 99.0).to_text(true);
        assert_eq!(a, b);
        assert!(!a.contains("wall_clock"));
        assert_eq!(ExperimentReport::from_text(&a).unwrap().wall_clock_secs, 0.0);
    }

    #[test]
    fn rejects_unknown_and_missing_keys() {
        let text = sample(0.1, 1.0).to_text(false);
        assert!(ExperimentReport::from_text(&format!("{text}bogus = 1\n")).is_err());
        let without: String = text.lines().filter(|l| !l.starts_with("test_vmae")).map(|l| format!("{l}\n")).collect();
        assert!(matches!(ExperimentReport::from_text(&without), Err(ReportError::Missing("test_vmae"))));
    }

    #[test]
    fn files_land_in_layout() {
        let dir = tempfile::tempdir().unwrap();
        let hist = TrainHistory {
            epochs: vec![EpochStats { epoch: 1, train_loss: 0.5, train_mae: 0.4, val_mae: 0.3 }],
            best_epoch: 1,
            stopped_early: false,
        };
        let r = sample(0.2, 3.0);
        let out = save_experiment(dir.path(), &r, &hist, false).unwrap();
        assert_eq!(out, dir.path().join("ds2").join("desk").join("3"));
        assert_eq!(load_report(out.join("report.txt")).unwrap(), r);
        let h = fs::read_to_string(out.join("history.csv")).unwrap();
        assert_eq!(h, "epoch,mae,vmae\n1,0.4,0.3\n");
    }

    proptest! {
        #[test]
        fn text_round_trip(vmae in 0.0f64..10.0, wall in 0.0f64..1e5, bits in any::<u64>()) {
            let mut r = sample(vmae, wall);
            r.final_train_mae = f64::from_bits(bits >> 2);
            prop_assert_eq!(ExperimentReport::from_text(&r.to_text(false)).unwrap(), r);
        }
    }
}
