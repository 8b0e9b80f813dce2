//! Model checkpoint files.
//!
//! ```text
//! magic "BLSLMLP1" (8) | version u32 | input width u32 | layer count u32 | seed u64
//! per layer: width u32 | activation u8 | 3 zero bytes
//! per layer, in order: weights row-major (out x in) f64, then bias f64
//! ```
//!
//! All integers and floats little-endian.

use std::fs;
use std::io;
use std::path::Path;

use ndarray::{Array1, Array2};
use thiserror::Error;

use super::{Activation, Dense, LayerSpec, Mlp, MlpSpec};

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"BLSLMLP1";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad checkpoint magic")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn encode_checkpoint(net: &Mlp) -> Vec<u8> {
    let spec = net.spec();
    let mut out = Vec::with_capacity(32 + spec.layers.len() * 8 + spec.parameter_count() * 8);
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(spec.input_width as u32).to_le_bytes());
    out.extend_from_slice(&(spec.layers.len() as u32).to_le_bytes());
    out.extend_from_slice(&spec.seed.to_le_bytes());
    for l in &spec.layers {
        out.extend_from_slice(&(l.width as u32).to_le_bytes());
        out.extend_from_slice(&[l.activation.code(), 0, 0, 0]);
    }
    for layer in net.layers() {
        for v in layer.weights.iter().chain(layer.bias.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            CheckpointError::Corrupt(format!("truncated at byte {} (need {n} more)", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Mlp, CheckpointError> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if c.take(8).map_err(|_| CheckpointError::BadMagic)? != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = c.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let input_width = c.u32()? as usize;
    let n_layers = c.u32()? as usize;
    let seed = c.u64()?;
    if n_layers > 1024 {
        return Err(CheckpointError::Corrupt(format!("{n_layers} layers")));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let width = c.u32()? as usize;
        let tag = c.take(4)?;
        let activation = Activation::from_code(tag[0])
            .ok_or_else(|| CheckpointError::Corrupt(format!("activation code {}", tag[0])))?;
        layers.push(LayerSpec { width, activation });
    }
    let spec = MlpSpec { input_width, layers, seed };
    spec.validate().map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    let expected = c.pos + spec.parameter_count() * 8;
    if bytes.len() != expected {
        return Err(CheckpointError::Corrupt(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let mut dense = Vec::with_capacity(spec.layers.len());
    let mut fan_in = input_width;
    for l in &spec.layers {
        let w: Vec<f64> = (0..l.width * fan_in).map(|_| c.f64()).collect::<Result<_, _>>()?;
        let b: Vec<f64> = (0..l.width).map(|_| c.f64()).collect::<Result<_, _>>()?;
        dense.push(Dense {
            weights: Array2::from_shape_vec((l.width, fan_in), w).expect("sized above"),
            bias: Array1::from_vec(b),
            activation: l.activation,
        });
        fan_in = l.width;
    }
    Mlp::from_layers(spec, dense).map_err(|e| CheckpointError::Corrupt(e.to_string()))
}

pub fn save_checkpoint(net: &Mlp, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    fs::write(path, encode_checkpoint(net))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Mlp, CheckpointError> {
    decode_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::{he_uniform_init, Preset};

    #[test]
    fn round_trip_is_byte_exact() {
        let net = he_uniform_init(&Preset::Tiny.spec(77)).unwrap();
        let bytes = encode_checkpoint(&net);
        let back = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back, net);
        assert_eq!(encode_checkpoint(&back), bytes);
    }

    #[test]
    fn corruption_is_detected() {
        let net = he_uniform_init(&Preset::Tiny.spec(1)).unwrap();
        let bytes = encode_checkpoint(&net);
        let mut bad = bytes.clone();
        bad[3] ^= 0xff;
        assert!(matches!(decode_checkpoint(&bad), Err(CheckpointError::BadMagic)));
        assert!(matches!(decode_checkpoint(&bytes[..bytes.len() - 1]), Err(CheckpointError::Corrupt(_))));
        assert!(matches!(decode_checkpoint(&bytes[..4]), Err(CheckpointError::BadMagic)));
        let mut v = bytes.clone();
        v[8] = 2;
        assert!(matches!(decode_checkpoint(&v), Err(CheckpointError::UnsupportedVersion(2))));
    }
}
