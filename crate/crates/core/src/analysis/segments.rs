//! Monotone segmentation of sampled curves.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Inclusive index range `start..=end` of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub direction: Direction,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, i: usize) -> bool {
        (self.start..=self.end).contains(&i)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentError {
    #[error("need at least 2 grid points, got {0}")]
    TooShort(usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

impl Segmentation {
    /// One monotone piece means the sampled map is injective.
    pub fn is_injective(&self) -> bool {
        self.segments.len() == 1
    }

    /// Indices where one segment ends and the next begins.
    pub fn breakpoints(&self) -> Vec<usize> {
        self.segments[..self.segments.len() - 1].iter().map(|s| s.end).collect()
    }

    /// Segment id of every grid point.
    pub fn labels(&self) -> Vec<usize> {
        let n = self.segments.last().map_or(0, |s| s.end + 1);
        let mut out = vec![0; n];
        for (id, s) in self.segments.iter().enumerate() {
            out[s.start..=s.end].iter_mut().for_each(|v| *v = id);
        }
        out
    }
}

/// Splits `values` into maximal runs whose successive differences are all
/// `>= -tolerance` (increasing) or all `<= tolerance` (decreasing).
///
/// A run's direction is fixed by its first difference exceeding `tolerance`
/// in magnitude; a run with none is reported as increasing. Turning points
/// close the run they end, so segments partition the grid.
pub fn monotone_segments(values: &[f64], tolerance: f64) -> Result<Segmentation, SegmentError> {
    if values.len() < 2 {
        return Err(SegmentError::TooShort(values.len()));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(SegmentError::NonFinite(i));
    }
    let mut segments = Vec::new();
    let mut start = 0;
    let mut direction: Option<Direction> = None;
    let mut i = 0;
    while i + 1 < values.len() {
        let d = values[i + 1] - values[i];
        let fits = match direction {
            None => true,
            Some(Direction::Increasing) => d >= -tolerance,
            Some(Direction::Decreasing) => d <= tolerance,
        };
        if fits {
            if direction.is_none() && d.abs() > tolerance {
                direction = Some(if d > 0.0 { Direction::Increasing } else { Direction::Decreasing });
            }
            i += 1;
            continue;
        }
        segments.push(Segment { start, end: i, direction: direction.unwrap() });
        start = i + 1;
        direction = None;
        // The difference across the turning point belongs to no segment; the
        // next one starts fresh at i + 1.
        i += 1;
    }
    segments.push(Segment {
        start,
        end: values.len() - 1,
        direction: direction.unwrap_or(Direction::Increasing),
    });
    Ok(Segmentation { segments })
}

/// Marks grid points whose value is also attained on another segment, i.e.
/// where the inverse map is multivalued.
///
/// Each segment's range includes the step joining it to its predecessor, so
/// the ranges cover the piecewise-linear interpolant without gaps.
pub fn ambiguous_points(values: &[f64], seg: &Segmentation) -> Vec<bool> {
    let ranges: Vec<(f64, f64)> = seg
        .segments
        .iter()
        .map(|s| {
            let v = &values[s.start.saturating_sub(1)..=s.end];
            (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        })
        .collect();
    let labels = seg.labels();
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            ranges
                .iter()
                .enumerate()
                .any(|(s, &(lo, hi))| s != labels[i] && lo <= v && v <= hi)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn increasing_is_single_segment() {
        let v: Vec<f64> = (0..50).map(|i| (i as f64).powi(2)).collect();
        let s = monotone_segments(&v, 0.0).unwrap();
        assert!(s.is_injective());
        assert_eq!(s.segments[0], Segment { start: 0, end: 49, direction: Direction::Increasing });
    }

    #[test]
    fn sine_has_three_segments() {
        let n = 1001;
        let v: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / (n - 1) as f64).sin()).collect();
        let s = monotone_segments(&v, 0.0).unwrap();
        let dirs: Vec<Direction> = s.segments.iter().map(|s| s.direction).collect();
        assert_eq!(dirs, vec![Direction::Increasing, Direction::Decreasing, Direction::Increasing]);
        assert_eq!(s.breakpoints(), vec![250, 750]);
    }

    #[test]
    fn infinite_tolerance_is_one_segment() {
        let v = [0.0, 5.0, -3.0, 8.0, 1.0];
        assert_eq!(monotone_segments(&v, f64::INFINITY).unwrap().segments.len(), 1);
    }

    #[test]
    fn flat_and_short_inputs() {
        let s = monotone_segments(&[1.0, 1.0, 1.0], 0.0).unwrap();
        assert_eq!(s.segments.len(), 1);
        assert!(matches!(monotone_segments(&[1.0], 0.0), Err(SegmentError::TooShort(1))));
        assert!(matches!(monotone_segments(&[1.0, f64::NAN], 0.0), Err(SegmentError::NonFinite(1))));
    }

    #[test]
    fn segments_partition_grid() {
        let v = [0.0, 1.0, 2.0, 1.0, 0.5, 0.7, 0.9, 0.1];
        let s = monotone_segments(&v, 0.0).unwrap();
        assert_eq!(s.segments[0].start, 0);
        for w in s.segments.windows(2) {
            assert_eq!(w[1].start, w[0].end + 1);
        }
        assert_eq!(s.segments.last().unwrap().end, v.len() - 1);
        assert_eq!(s.labels().len(), v.len());
    }

    #[test]
    fn ambiguity_of_a_bump() {
        // 0 → 1 → 0.5: values in [0.5, 1] are hit twice.
        let v = [0.0, 0.25, 0.5, 0.75, 1.0, 0.75, 0.5];
        let s = monotone_segments(&v, 0.0).unwrap();
        let amb = ambiguous_points(&v, &s);
        assert_eq!(amb, vec![false, false, true, true, true, true, true]);
        let mono = [0.0, 0.1, 0.2];
        let s = monotone_segments(&mono, 0.0).unwrap();
        assert!(ambiguous_points(&mono, &s).iter().all(|a| !a));
    }
}
