//! "ERLW" binary checkpoints.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! magic      4 bytes  "ERLW"
//! version    u8       1
//! flags      u8       bit 0: residual, bit 1: Q-table section present
//! slope      f64      leaky-ReLU slope
//! layers     u32
//! per layer  u32 rows, u32 cols, rows*cols f64 weights (row-major), rows f64 bias
//! [states    u32, then states*3 f64 Q values, state-major]
//! ```

use std::fs;
use std::path::Path;

use crate::agents::QTable;
use crate::env::NUM_ACTIONS;
use crate::error::{Error, Result};
use crate::valuenet::{Layer, NetworkParameters, ParameterSet};

pub const MAGIC: &[u8; 4] = b"ERLW";
pub const VERSION: u8 = 1;

const FLAG_RESIDUAL: u8 = 1;
const FLAG_QTABLE: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: NetworkParameters,
    pub q_table: Option<QTable>,
}

pub fn encode(ck: &Checkpoint) -> Vec<u8> {
    let net = &ck.network;
    let mut out = Vec::with_capacity(16 + 8 * net.tensors.len());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    let mut flags = 0;
    if net.residual {
        flags |= FLAG_RESIDUAL;
    }
    if ck.q_table.is_some() {
        flags |= FLAG_QTABLE;
    }
    out.push(flags);
    out.extend_from_slice(&net.leaky_slope.to_le_bytes());
    out.extend_from_slice(&(net.tensors.layers.len() as u32).to_le_bytes());
    for layer in &net.tensors.layers {
        out.extend_from_slice(&(layer.rows as u32).to_le_bytes());
        out.extend_from_slice(&(layer.cols as u32).to_le_bytes());
        for v in layer.weights.iter().chain(&layer.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    if let Some(q) = &ck.q_table {
        out.extend_from_slice(&(q.num_states() as u32).to_le_bytes());
        for v in q.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        let v = f64::from_le_bytes(self.take(8)?.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::Checkpoint(format!("non-finite value before byte {}", self.pos)));
        }
        Ok(v)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        // Check the length up front so a corrupt count cannot trigger a huge allocation.
        if n.checked_mul(8).map_or(true, |b| self.pos + b > self.buf.len()) {
            return Err(Error::Checkpoint(format!("truncated at byte {}", self.pos)));
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Checkpoint("bad magic, expected ERLW".into()));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let flags = r.u8()?;
    if flags & !(FLAG_RESIDUAL | FLAG_QTABLE) != 0 {
        return Err(Error::Checkpoint(format!("unknown flags {flags:#04x}")));
    }
    let leaky_slope = r.f64()?;
    let n_layers = r.u32()?;
    if n_layers == 0 {
        return Err(Error::Checkpoint("no layers".into()));
    }
    let mut layers = Vec::new();
    for i in 0..n_layers {
        let rows = r.u32()?;
        let cols = r.u32()?;
        if rows == 0 || cols == 0 {
            return Err(Error::Checkpoint(format!("layer {i} has an empty dimension")));
        }
        if let Some(prev) = layers.last().map(|l: &Layer| l.rows) {
            if prev != cols {
                return Err(Error::Checkpoint(format!(
                    "layer {i} expects {cols} inputs, previous layer gives {prev}"
                )));
            }
        }
        let weights = r.f64s(rows * cols)?;
        let bias = r.f64s(rows)?;
        layers.push(Layer { rows, cols, weights, bias });
    }
    let residual = flags & FLAG_RESIDUAL != 0;
    if residual && (layers.len() < 3 || layers[0].rows != layers[layers.len() - 2].rows) {
        return Err(Error::Checkpoint("residual flag set on incompatible layer widths".into()));
    }
    let q_table = if flags & FLAG_QTABLE != 0 {
        let states = r.u32()?;
        let values = r.f64s(states * NUM_ACTIONS)?;
        Some(QTable::from_values(states, values).map_err(|e| Error::Checkpoint(e.to_string()))?)
    } else {
        None
    };
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(Checkpoint {
        network: NetworkParameters {
            leaky_slope,
            residual,
            tensors: ParameterSet { layers },
        },
        q_table,
    })
}

pub fn save(ck: &Checkpoint, path: &Path) -> Result<()> {
    fs::write(path, encode(ck)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
