//! Binary dataset files and CSV export.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! header (64 bytes)
//!   0..8    magic "BLSLDS01"
//!   8..12   format version (u32)
//!   12      dataset id (u8, 1..=4)
//!   13..16  reserved, zero
//!   16..24  record count (u64)
//!   24..32  offset count (u64)
//!   32..40  records per offset (u64)
//!   40..48  master seed (u64)
//!   48..64  generator version, ASCII, NUL padded
//! records (116 bytes each)
//!   0..8    leading feature Δ or d (f64)
//!   8..108  u_1..u_100 (i8)
//!   108..116 label (f64)
//! ```

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bloch::CONTROL_STEPS;
use crate::dataset::{generate_dataset, DatasetError, DatasetHeader, DatasetId, DatasetKind, Record};
use crate::par::ExecMode;

pub const MAGIC: [u8; 8] = *b"BLSLDS01";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 64;
pub const RECORD_BYTES: usize = 8 + CONTROL_STEPS + 8;

const VERSION_FIELD: Range<usize> = 48..64;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {0:?}, not a dataset file")]
    BadMagic([u8; 8]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("unknown dataset id code {0}")]
    BadId(u8),
    #[error("corrupt file: {0}")]
    Corrupt(String),
    #[error("record range {start}..{end} outside 0..{count}")]
    OutOfRange { start: u64, end: u64, count: u64 },
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn encode_header(h: &DatasetHeader) -> [u8; HEADER_BYTES] {
    let mut b = [0u8; HEADER_BYTES];
    b[0..8].copy_from_slice(&MAGIC);
    b[8..12].copy_from_slice(&h.format_version.to_le_bytes());
    b[12] = h.dataset_id.code();
    b[16..24].copy_from_slice(&h.record_count.to_le_bytes());
    b[24..32].copy_from_slice(&h.offset_count.to_le_bytes());
    b[32..40].copy_from_slice(&h.per_offset.to_le_bytes());
    b[40..48].copy_from_slice(&h.master_seed.to_le_bytes());
    let v = h.generator_version.as_bytes();
    let n = v.len().min(VERSION_FIELD.len());
    b[VERSION_FIELD.start..VERSION_FIELD.start + n].copy_from_slice(&v[..n]);
    b
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn decode_header(b: &[u8; HEADER_BYTES]) -> Result<DatasetHeader, FormatError> {
    let magic: [u8; 8] = b[0..8].try_into().unwrap();
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = u32::from_le_bytes(b[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let dataset_id = DatasetId::from_code(b[12]).ok_or(FormatError::BadId(b[12]))?;
    let raw = &b[VERSION_FIELD];
    let end = raw.iter().position(|&c| c == 0).unwrap_or(raw.len());
    let generator_version = std::str::from_utf8(&raw[..end])
        .map_err(|_| FormatError::Corrupt("generator version is not UTF-8".into()))?
        .to_string();
    let h = DatasetHeader {
        format_version: version,
        dataset_id,
        record_count: u64_at(b, 16),
        offset_count: u64_at(b, 24),
        per_offset: u64_at(b, 32),
        master_seed: u64_at(b, 40),
        generator_version,
    };
    if h.offset_count.checked_mul(h.per_offset) != Some(h.record_count) {
        return Err(FormatError::Corrupt(format!(
            "record count {} != {} offsets x {} per offset",
            h.record_count, h.offset_count, h.per_offset
        )));
    }
    Ok(h)
}

pub fn encode_record(r: &Record, out: &mut Vec<u8>) {
    out.extend_from_slice(&r.lead.to_le_bytes());
    out.extend(r.controls.iter().map(|&u| u as u8));
    out.extend_from_slice(&r.label.to_le_bytes());
}

pub fn decode_record(b: &[u8], kind: DatasetKind) -> Result<Record, FormatError> {
    debug_assert_eq!(b.len(), RECORD_BYTES);
    let mut controls = [0i8; CONTROL_STEPS];
    for (dst, &src) in controls.iter_mut().zip(&b[8..8 + CONTROL_STEPS]) {
        *dst = src as i8;
        if *dst != 1 && *dst != -1 {
            return Err(FormatError::Corrupt(format!("control value {}", *dst)));
        }
    }
    Ok(Record {
        lead: f64::from_le_bytes(b[0..8].try_into().unwrap()),
        controls,
        label: f64::from_le_bytes(b[8 + CONTROL_STEPS..RECORD_BYTES].try_into().unwrap()),
        kind,
    })
}

/// Random-access reader over a dataset file.
pub struct DatasetFile<R> {
    header: DatasetHeader,
    inner: R,
}

impl DatasetFile<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read + Seek> DatasetFile<R> {
    /// Reads and validates the header, and checks the payload length.
    pub fn new(mut inner: R) -> Result<Self, FormatError> {
        let mut hb = [0u8; HEADER_BYTES];
        let len = inner.seek(SeekFrom::End(0))?;
        inner.seek(SeekFrom::Start(0))?;
        if len < HEADER_BYTES as u64 {
            return Err(FormatError::Corrupt(format!("file of {len} bytes has no header")));
        }
        inner.read_exact(&mut hb)?;
        let header = decode_header(&hb)?;
        let expected = HEADER_BYTES as u64 + header.record_count * RECORD_BYTES as u64;
        if len != expected {
            return Err(FormatError::Corrupt(format!(
                "expected {expected} bytes for {} records, found {len}",
                header.record_count
            )));
        }
        Ok(Self { header, inner })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    pub fn len(&self) -> u64 {
        self.header.record_count
    }

    pub fn is_empty(&self) -> bool {
        self.header.record_count == 0
    }

    pub fn read_records(&mut self, range: Range<u64>) -> Result<Vec<Record>, FormatError> {
        if range.start > range.end || range.end > self.header.record_count {
            return Err(FormatError::OutOfRange {
                start: range.start,
                end: range.end,
                count: self.header.record_count,
            });
        }
        let n = (range.end - range.start) as usize;
        self.inner
            .seek(SeekFrom::Start(HEADER_BYTES as u64 + range.start * RECORD_BYTES as u64))?;
        let mut buf = vec![0u8; n * RECORD_BYTES];
        self.inner.read_exact(&mut buf)?;
        let kind = self.header.dataset_id.kind();
        buf.chunks_exact(RECORD_BYTES).map(|c| decode_record(c, kind)).collect()
    }

    pub fn read_all(&mut self) -> Result<Vec<Record>, FormatError> {
        self.read_records(0..self.header.record_count)
    }
}

/// Loads a whole dataset file.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<(DatasetHeader, Vec<Record>), FormatError> {
    let mut f = DatasetFile::open(path)?;
    let recs = f.read_all()?;
    Ok((f.header, recs))
}

/// Serializes a header and records to bytes.
pub fn encode_dataset(header: &DatasetHeader, records: &[Record]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_BYTES + records.len() * RECORD_BYTES);
    out.extend_from_slice(&encode_header(header));
    for r in records {
        encode_record(r, &mut out);
    }
    out
}

fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    path.with_file_name(name)
}

/// Writes through `<path>.partial` and renames on success, so an interrupted
/// write leaves the `.partial` marker instead of a truncated dataset.
fn write_atomically<F>(path: &Path, body: F) -> Result<(), DatasetError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), DatasetError>,
{
    let tmp = partial_path(path);
    let file = File::create(&tmp).map_err(|source| DatasetError::Io { written: 0, source })?;
    let mut w = BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|source| DatasetError::Io { written: 0, source })?;
    drop(w);
    fs::rename(&tmp, path).map_err(|source| DatasetError::Io { written: 0, source })
}

pub fn write_dataset_file(
    path: impl AsRef<Path>,
    header: &DatasetHeader,
    records: &[Record],
) -> Result<(), DatasetError> {
    write_atomically(path.as_ref(), |w| {
        let mut buf = Vec::new();
        buf.extend_from_slice(&encode_header(header));
        w.write_all(&buf).map_err(|source| DatasetError::Io { written: 0, source })?;
        for (i, chunk) in records.chunks(4096).enumerate() {
            buf.clear();
            chunk.iter().for_each(|r| encode_record(r, &mut buf));
            w.write_all(&buf).map_err(|source| DatasetError::Io {
                written: (i * 4096) as u64,
                source,
            })?;
        }
        Ok(())
    })
}

/// Generates a dataset straight into `path`.
pub fn generate_dataset_file(
    path: impl AsRef<Path>,
    id: DatasetId,
    per_offset: u64,
    master_seed: u64,
    mode: ExecMode,
) -> Result<DatasetHeader, DatasetError> {
    let mut header = None;
    write_atomically(path.as_ref(), |w| {
        header = Some(generate_dataset(id, per_offset, master_seed, w, mode)?);
        Ok(())
    })?;
    Ok(header.expect("set on success"))
}

/// Writes records as CSV with 17 significant digits.
pub fn export_csv<W: Write>(records: &[Record], out: &mut W) -> io::Result<()> {
    let mut line = String::with_capacity(512);
    line.push_str("delta_or_distance");
    for k in 1..=CONTROL_STEPS {
        line.push_str(&format!(",u{k}"));
    }
    line.push_str(",label\n");
    out.write_all(line.as_bytes())?;
    for r in records {
        line.clear();
        line.push_str(&format!("{:.16e}", r.lead));
        for &u in &r.controls {
            line.push_str(if u > 0 { ",1" } else { ",-1" });
        }
        line.push_str(&format!(",{:.16e}\n", r.label));
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Parses CSV produced by [`export_csv`].
pub fn import_csv<R: BufRead>(input: R, kind: DatasetKind) -> Result<Vec<Record>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if i == 0 {
            if !line.starts_with("delta_or_distance,") {
                return Err(FormatError::Csv { line: line_no, msg: "missing header".into() });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != CONTROL_STEPS + 2 {
            return Err(FormatError::Csv {
                line: line_no,
                msg: format!("expected {} fields, got {}", CONTROL_STEPS + 2, fields.len()),
            });
        }
        let num = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| FormatError::Csv { line: line_no, msg: e.to_string() })
        };
        let mut controls = [0i8; CONTROL_STEPS];
        for (dst, s) in controls.iter_mut().zip(&fields[1..=CONTROL_STEPS]) {
            *dst = match s.trim() {
                "1" => 1,
                "-1" => -1,
                other => {
                    return Err(FormatError::Csv { line: line_no, msg: format!("bad control {other:?}") })
                }
            };
        }
        out.push(Record {
            lead: num(fields[0])?,
            controls,
            label: num(fields[CONTROL_STEPS + 1])?,
            kind,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_records;
    use std::io::Cursor;

    fn sample() -> (DatasetHeader, Vec<Record>) {
        generate_records(DatasetId::Ds1, 3, 11, ExecMode::Sequential).unwrap()
    }

    #[test]
    fn header_round_trip() {
        let (h, _) = sample();
        let b = encode_header(&h);
        assert_eq!(decode_header(&b).unwrap(), h);
        assert_eq!(encode_header(&decode_header(&b).unwrap()), b);
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let (h, recs) = sample();
        let mut bytes = encode_dataset(&h, &recs);
        bytes[0] = b'X';
        assert!(matches!(DatasetFile::new(Cursor::new(bytes)), Err(FormatError::BadMagic(_))));
    }

    #[test]
    fn wrong_version_is_rejected() {
        let (h, recs) = sample();
        let mut bytes = encode_dataset(&h, &recs);
        bytes[8] = 9;
        assert!(matches!(
            DatasetFile::new(Cursor::new(bytes)),
            Err(FormatError::UnsupportedVersion(9))
        ));
    }

    #[test]
    fn truncation_is_detected() {
        let (h, recs) = sample();
        let mut bytes = encode_dataset(&h, &recs);
        bytes.truncate(bytes.len() - 5);
        assert!(matches!(DatasetFile::new(Cursor::new(bytes)), Err(FormatError::Corrupt(_))));
        assert!(matches!(DatasetFile::new(Cursor::new(vec![0u8; 10])), Err(FormatError::Corrupt(_))));
    }

    #[test]
    fn random_access_reads() {
        let (h, recs) = sample();
        let mut f = DatasetFile::new(Cursor::new(encode_dataset(&h, &recs))).unwrap();
        assert_eq!(f.read_records(7..12).unwrap(), recs[7..12].to_vec());
        assert_eq!(f.read_records(30..30).unwrap(), vec![]);
        assert!(matches!(f.read_records(25..31), Err(FormatError::OutOfRange { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let (_, recs) = sample();
        let mut buf = Vec::new();
        export_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("delta_or_distance,u1,u2,"));
        assert!(text.lines().next().unwrap().ends_with(",u100,label"));
        let back = import_csv(Cursor::new(buf), DatasetKind::Direct).unwrap();
        assert_eq!(back.len(), recs.len());
        for (a, b) in recs.iter().zip(&back) {
            assert!((a.lead - b.lead).abs() <= 1e-15);
            assert!((a.label - b.label).abs() <= 1e-15);
            assert_eq!(a.controls, b.controls);
        }
    }

    #[test]
    fn bad_control_byte_is_corruption() {
        let (h, recs) = sample();
        let mut bytes = encode_dataset(&h, &recs);
        bytes[HEADER_BYTES + 8] = 0;
        let mut f = DatasetFile::new(Cursor::new(bytes)).unwrap();
        assert!(matches!(f.read_all(), Err(FormatError::Corrupt(_))));
    }
}
