//! Labeled datasets for the direct (Δ → d) and inverse (d → Δ) problems.
//!
//! | id  | offsets                     | features[0] | label |
//! |-----|-----------------------------|-------------|-------|
//! | DS1 | 10 i.i.d. uniform in [0, 1] | Δ           | d     |
//! | DS2 | as DS1                      | d           | Δ     |
//! | DS3 | 100 on the grid j/99        | Δ           | d     |
//! | DS4 | as DS3                      | d           | Δ     |
//!
//! DS2 and DS4 reuse the trajectories of DS1 and DS3 under the same master
//! seed; only the roles of the leading feature and the label are exchanged.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::bloch::{propagate_signs, protocol_time, target_distance, BlochState, Offset, CONTROL_STEPS};
use crate::control::{sample_control, BangControl};
use crate::format::{self, FormatError, RECORD_BYTES};
use crate::par::{self, ExecMode};
use crate::rng::{stream, SplitMix64};

/// Inputs per record: one scalar plus 100 control values.
pub const FEATURE_WIDTH: usize = CONTROL_STEPS + 1;

/// Records generated and written per parallel batch.
const GENERATION_CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetId {
    Ds1,
    Ds2,
    Ds3,
    Ds4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    /// `(Δ, u) → d`
    Direct,
    /// `(d, u) → Δ`
    Inverse,
}

impl DatasetId {
    pub const ALL: [DatasetId; 4] = [DatasetId::Ds1, DatasetId::Ds2, DatasetId::Ds3, DatasetId::Ds4];

    pub fn kind(self) -> DatasetKind {
        match self {
            DatasetId::Ds1 | DatasetId::Ds3 => DatasetKind::Direct,
            DatasetId::Ds2 | DatasetId::Ds4 => DatasetKind::Inverse,
        }
    }

    pub fn offset_count(self) -> usize {
        match self {
            DatasetId::Ds1 | DatasetId::Ds2 => 10,
            DatasetId::Ds3 | DatasetId::Ds4 => 100,
        }
    }

    /// The dataset sharing trajectories with this one.
    pub fn partner(self) -> DatasetId {
        match self {
            DatasetId::Ds1 => DatasetId::Ds2,
            DatasetId::Ds2 => DatasetId::Ds1,
            DatasetId::Ds3 => DatasetId::Ds4,
            DatasetId::Ds4 => DatasetId::Ds3,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            DatasetId::Ds1 => 1,
            DatasetId::Ds2 => 2,
            DatasetId::Ds3 => 3,
            DatasetId::Ds4 => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(DatasetId::Ds1),
            2 => Some(DatasetId::Ds2),
            3 => Some(DatasetId::Ds3),
            4 => Some(DatasetId::Ds4),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetId::Ds1 => "ds1",
            DatasetId::Ds2 => "ds2",
            DatasetId::Ds3 => "ds3",
            DatasetId::Ds4 => "ds4",
        }
    }
}

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DatasetId {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ds1" | "1" => Ok(DatasetId::Ds1),
            "ds2" | "2" => Ok(DatasetId::Ds2),
            "ds3" | "3" => Ok(DatasetId::Ds3),
            "ds4" | "4" => Ok(DatasetId::Ds4),
            _ => Err(DatasetError::Usage(format!("unknown dataset id {s:?}"))),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("i/o error after {written} records: {source}")]
    Io {
        written: u64,
        #[source]
        source: std::io::Error,
    },
}

/// One labeled example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    /// `Δ` for direct datasets, `d` for inverse ones.
    pub lead: f64,
    pub controls: [i8; CONTROL_STEPS],
    pub label: f64,
    pub kind: DatasetKind,
}

impl Record {
    /// The 101 network inputs `[lead, u_1, …, u_100]`.
    pub fn features(&self) -> [f64; FEATURE_WIDTH] {
        let mut out = [0.0; FEATURE_WIDTH];
        self.write_features(&mut out);
        out
    }

    pub fn write_features(&self, out: &mut [f64]) {
        out[0] = self.lead;
        for (dst, &u) in out[1..FEATURE_WIDTH].iter_mut().zip(self.controls.iter()) {
            *dst = f64::from(u);
        }
    }

    pub fn offset(&self) -> f64 {
        match self.kind {
            DatasetKind::Direct => self.lead,
            DatasetKind::Inverse => self.label,
        }
    }

    pub fn distance(&self) -> f64 {
        match self.kind {
            DatasetKind::Direct => self.label,
            DatasetKind::Inverse => self.lead,
        }
    }

    /// Swaps the leading feature and the label.
    pub fn exchange_roles(&self) -> Record {
        Record {
            lead: self.label,
            controls: self.controls,
            label: self.lead,
            kind: match self.kind {
                DatasetKind::Direct => DatasetKind::Inverse,
                DatasetKind::Inverse => DatasetKind::Direct,
            },
        }
    }

    pub fn control(&self) -> Option<BangControl> {
        BangControl::from_signs(&self.controls).ok()
    }
}

/// Provenance header of a dataset file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetHeader {
    pub format_version: u32,
    pub dataset_id: DatasetId,
    pub record_count: u64,
    pub offset_count: u64,
    pub per_offset: u64,
    pub master_seed: u64,
    pub generator_version: String,
}

impl DatasetHeader {
    pub fn new(id: DatasetId, per_offset: u64, master_seed: u64) -> Self {
        let offset_count = id.offset_count() as u64;
        Self {
            format_version: format::FORMAT_VERSION,
            dataset_id: id,
            record_count: offset_count * per_offset,
            offset_count,
            per_offset,
            master_seed,
            generator_version: format!("bloch-sl {}", env!("CARGO_PKG_VERSION")),
        }
    }
}

/// Offsets of a dataset: i.i.d. uniform for DS1/DS2, `j/99` for DS3/DS4.
pub fn dataset_offsets(id: DatasetId, master_seed: u64) -> Vec<f64> {
    let n = id.offset_count();
    match id {
        DatasetId::Ds1 | DatasetId::Ds2 => {
            let mut rng = SplitMix64::for_stream(master_seed, &[stream::OFFSETS]);
            (0..n).map(|_| rng.next_f64()).collect()
        }
        DatasetId::Ds3 | DatasetId::Ds4 => (0..n).map(|j| j as f64 / (n - 1) as f64).collect(),
    }
}

/// Final distance to the south pole after the protocol of duration `t*(Δ)`.
pub fn simulate_distance(delta: f64, controls: &[i8; CONTROL_STEPS]) -> f64 {
    let offset = Offset::new(delta).expect("finite offset");
    let s = propagate_signs(BlochState::NORTH, offset, controls, protocol_time(offset))
        .expect("controls are ±1 with 100 steps");
    target_distance(s)
}

/// Control drawn for record `record_index` of offset `offset_index`.
pub fn record_control(master_seed: u64, offset_index: u64, record_index: u64) -> BangControl {
    let mut rng = SplitMix64::for_stream(master_seed, &[stream::RECORD, offset_index, record_index]);
    sample_control(&mut rng)
}

/// Builds the direct record for a given offset and control.
pub fn direct_record(delta: f64, control: &BangControl) -> Record {
    let controls = control.expand();
    Record {
        lead: delta,
        controls,
        label: simulate_distance(delta, &controls),
        kind: DatasetKind::Direct,
    }
}

/// Generates record `index` (offset-major order) of dataset `header`.
pub fn generate_record(header: &DatasetHeader, offsets: &[f64], index: u64) -> Record {
    let offset_index = index / header.per_offset;
    let record_index = index % header.per_offset;
    let control = record_control(header.master_seed, offset_index, record_index);
    let rec = direct_record(offsets[offset_index as usize], &control);
    match header.dataset_id.kind() {
        DatasetKind::Direct => rec,
        DatasetKind::Inverse => rec.exchange_roles(),
    }
}

/// Generates all records in memory.
pub fn generate_records(
    id: DatasetId,
    per_offset: u64,
    master_seed: u64,
    mode: ExecMode,
) -> Result<(DatasetHeader, Vec<Record>), DatasetError> {
    if per_offset == 0 {
        return Err(DatasetError::Usage("per_offset must be at least 1".into()));
    }
    let header = DatasetHeader::new(id, per_offset, master_seed);
    let offsets = dataset_offsets(id, master_seed);
    let records = par::map_indexed(header.record_count as usize, mode, |i| {
        generate_record(&header, &offsets, i as u64)
    });
    Ok((header, records))
}

/// Streams a dataset to `out`: header first, then records in generation order.
pub fn generate_dataset<W: Write>(
    id: DatasetId,
    per_offset: u64,
    master_seed: u64,
    out: &mut W,
    mode: ExecMode,
) -> Result<DatasetHeader, DatasetError> {
    if per_offset == 0 {
        return Err(DatasetError::Usage("per_offset must be at least 1".into()));
    }
    let header = DatasetHeader::new(id, per_offset, master_seed);
    let offsets = dataset_offsets(id, master_seed);
    let io = |written, source| DatasetError::Io { written, source };
    out.write_all(&format::encode_header(&header)).map_err(|e| io(0, e))?;
    let mut written = 0u64;
    let mut buf = Vec::with_capacity(GENERATION_CHUNK * RECORD_BYTES);
    while written < header.record_count {
        let n = (header.record_count - written).min(GENERATION_CHUNK as u64) as usize;
        let chunk = par::map_indexed(n, mode, |i| generate_record(&header, &offsets, written + i as u64));
        buf.clear();
        for rec in &chunk {
            format::encode_record(rec, &mut buf);
        }
        out.write_all(&buf).map_err(|e| io(written, e))?;
        written += n as u64;
    }
    out.flush().map_err(|e| io(written, e))?;
    Ok(header)
}

/// Re-labels a dataset with the partner id (DS1 ↔ DS2, DS3 ↔ DS4).
pub fn exchange_dataset(header: &DatasetHeader, records: &[Record]) -> (DatasetHeader, Vec<Record>) {
    let mut h = header.clone();
    h.dataset_id = header.dataset_id.partner();
    (h, records.iter().map(Record::exchange_roles).collect())
}

/// Recomputes the label of a record from its offset and controls.
pub fn recompute_label(rec: &Record) -> f64 {
    let d = simulate_distance(rec.offset(), &rec.controls);
    match rec.kind {
        DatasetKind::Direct => d,
        DatasetKind::Inverse => rec.offset(),
    }
}

/// Deterministic shuffled train/test partition of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split(n: usize, train_fraction: f64, seed: u64) -> Result<Split, DatasetError> {
    if n == 0 {
        return Err(DatasetError::Usage("cannot split an empty dataset".into()));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DatasetError::Usage(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    SplitMix64::for_stream(seed, &[stream::SPLIT]).shuffle(&mut idx);
    let n_train = ((n as f64 * train_fraction).round() as usize).min(n);
    let test = idx.split_off(n_train);
    Ok(Split { train: idx, test })
}
