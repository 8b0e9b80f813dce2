//! Exact and predicted mappings over an offset grid for one fixed control.

use std::io::{self, Write};

use ndarray::Array2;

use super::segments::{ambiguous_points, monotone_segments, SegmentError, Segmentation};
use crate::control::BangControl;
use crate::dataset::{simulate_distance, FEATURE_WIDTH};
use crate::mlp::{Mlp, MlpError};
use crate::par::{self, ExecMode};

/// Tolerance used to segment exact curves.
pub const SEGMENT_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_GRID_POINTS: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Predicts `d(Δ)` from `(Δ, u)`.
    Direct,
    /// Predicts `Δ` from `(d(Δ), u)`.
    Inverse,
}

/// `n` evenly spaced points on `[0, 1]`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

/// Sampled mapping for one control.
///
/// `grid` always holds the offsets Δ and `exact` the simulated distances
/// d(Δ). For direct sweeps `predicted` estimates d; for inverse sweeps it
/// estimates Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub kind: SweepKind,
    pub control: BangControl,
    pub grid: Vec<f64>,
    pub exact: Vec<f64>,
    pub predicted: Option<Vec<f64>>,
    pub segmentation: Segmentation,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("grid must be strictly increasing inside [0, 1]")]
    BadGrid,
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
}

fn check_grid(grid: &[f64]) -> Result<(), SweepError> {
    let inside = grid.iter().all(|&g| (0.0..=1.0).contains(&g));
    let increasing = grid.windows(2).all(|w| w[0] < w[1]);
    if grid.len() < 2 || !inside || !increasing {
        return Err(SweepError::BadGrid);
    }
    Ok(())
}

/// `d(Δ)` for every grid point, by the same simulation that labels datasets.
pub fn exact_distances(control: &BangControl, grid: &[f64], mode: ExecMode) -> Vec<f64> {
    let u = control.expand();
    par::map_slice(grid, mode, |&delta| simulate_distance(delta, &u))
}

fn predict_rows(net: &Mlp, control: &BangControl, leads: &[f64]) -> Result<Vec<f64>, MlpError> {
    let u = control.expand();
    let mut x = Array2::zeros((leads.len(), FEATURE_WIDTH));
    for (mut row, &lead) in x.rows_mut().into_iter().zip(leads) {
        row[0] = lead;
        for (k, &s) in u.iter().enumerate() {
            row[k + 1] = f64::from(s);
        }
    }
    net.predict(x.view())
}

fn build(
    kind: SweepKind,
    control: &BangControl,
    grid: &[f64],
    net: Option<&Mlp>,
    mode: ExecMode,
) -> Result<SweepCurve, SweepError> {
    check_grid(grid)?;
    let exact = exact_distances(control, grid, mode);
    let segmentation = monotone_segments(&exact, SEGMENT_TOLERANCE)?;
    let predicted = match (net, kind) {
        (None, _) => None,
        (Some(n), SweepKind::Direct) => Some(predict_rows(n, control, grid)?),
        (Some(n), SweepKind::Inverse) => Some(predict_rows(n, control, &exact)?),
    };
    Ok(SweepCurve { kind, control: *control, grid: grid.to_vec(), exact, predicted, segmentation })
}

/// Exact `d(Δ)` over the grid and, given a direct network, its predictions.
pub fn sweep_direct(control: &BangControl, grid: &[f64], net: Option<&Mlp>, mode: ExecMode) -> Result<SweepCurve, SweepError> {
    build(SweepKind::Direct, control, grid, net, mode)
}

/// Exact `d(Δ)` over the grid and, given an inverse network, the offsets
/// `Δ̂` it recovers from `(d(Δ), u)`.
pub fn sweep_inverse(control: &BangControl, grid: &[f64], net: Option<&Mlp>, mode: ExecMode) -> Result<SweepCurve, SweepError> {
    build(SweepKind::Inverse, control, grid, net, mode)
}

/// Error summary of a sweep, split by whether the exact map is locally
/// invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepDiagnosis {
    pub injective: bool,
    pub segments: usize,
    pub ambiguous_points: usize,
    pub mean_error: f64,
    pub max_error: f64,
    /// Mean error over points whose distance is shared with another segment.
    pub mean_error_ambiguous: Option<f64>,
    /// Mean error over the remaining points.
    pub mean_error_unique: Option<f64>,
    /// Inverse predictions outside `[0, 1]`.
    pub out_of_range: usize,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl SweepCurve {
    /// Per-point absolute errors: `|d̂ - d|` (direct) or `|Δ̂ - Δ|` (inverse).
    pub fn errors(&self) -> Option<Vec<f64>> {
        let p = self.predicted.as_ref()?;
        let truth = match self.kind {
            SweepKind::Direct => &self.exact,
            SweepKind::Inverse => &self.grid,
        };
        Some(p.iter().zip(truth).map(|(a, b)| (a - b).abs()).collect())
    }

    pub fn ambiguous(&self) -> Vec<bool> {
        ambiguous_points(&self.exact, &self.segmentation)
    }

    pub fn diagnose(&self) -> Option<SweepDiagnosis> {
        let errors = self.errors()?;
        let amb = self.ambiguous();
        let pick = |want: bool| -> Vec<f64> {
            errors.iter().zip(&amb).filter(|(_, &m)| m == want).map(|(&e, _)| e).collect()
        };
        let (a, u) = (pick(true), pick(false));
        let out_of_range = match self.kind {
            SweepKind::Inverse => self.predicted.as_ref()?.iter().filter(|p| !(0.0..=1.0).contains(*p)).count(),
            SweepKind::Direct => 0,
        };
        Some(SweepDiagnosis {
            injective: self.segmentation.is_injective(),
            segments: self.segmentation.segments.len(),
            ambiguous_points: a.len(),
            mean_error: mean(&errors).unwrap_or(0.0),
            max_error: errors.iter().copied().fold(0.0, f64::max),
            mean_error_ambiguous: mean(&a),
            mean_error_unique: mean(&u),
            out_of_range,
        })
    }

    /// CSV with columns `grid,exact,predicted,segment_id`; `predicted` is
    /// empty when no network was supplied.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "grid,exact,predicted,segment_id")?;
        let labels = self.segmentation.labels();
        for i in 0..self.grid.len() {
            let pred = self.predicted.as_ref().map(|p| format!("{:.17e}", p[i])).unwrap_or_default();
            writeln!(out, "{:.17e},{:.17e},{},{}", self.grid[i], self.exact[i], pred, labels[i])?;
        }
        Ok(())
    }
}
