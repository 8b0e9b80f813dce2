//! Desk-scale experiments, mapping sweeps and injectivity diagnostics.

pub mod experiment;
pub mod report;
pub mod segments;
pub mod svg;
pub mod sweep;

pub use experiment::{
    fraction_study, run_experiment, run_experiment_file, ExperimentConfig, ExperimentError, ExperimentOutput,
    ExperimentReport, FractionRow, Seeds, TRAIN_FRACTION,
};
pub use report::{load_report, report_dir, save_experiment, write_fractions_csv, write_history_csv, ReportError};
pub use segments::{ambiguous_points, monotone_segments, Direction, Segment, SegmentError, Segmentation};
pub use svg::render_sweep;
pub use sweep::{
    exact_distances, sweep_direct, sweep_inverse, unit_grid, SweepCurve, SweepDiagnosis, SweepError, SweepKind,
    DEFAULT_GRID_POINTS, SEGMENT_TOLERANCE,
};
