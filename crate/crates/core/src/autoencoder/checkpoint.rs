//! Binary checkpoint layout (all integers u64 LE, all reals f64 LE):
//!
//! ```text
//! "FCAE1"
//! N  N_h  N_e  alpha  layer_count(=4)
//! per layer: rows cols W[row-major]  len B
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{LayerSpec, NetworkParams, LAYERS};
use crate::error::{Error, Result};
use crate::fractional::FractionalOrder;
use crate::linalg::{Matrix, Vector};
use crate::Scalar;

pub const MAGIC: &[u8; 5] = b"FCAE1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T: Scalar> {
    pub alpha: FractionalOrder,
    pub params: NetworkParams<T>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out)
            .expect("writing to a Vec cannot fail");
        out
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        let spec = self.params.spec;
        w.write_all(MAGIC)?;
        for v in [spec.n_in, spec.n_hidden, spec.n_bottleneck] {
            w.write_all(&(v as u64).to_le_bytes())?;
        }
        w.write_all(&self.alpha.get().to_le_bytes())?;
        w.write_all(&(LAYERS as u64).to_le_bytes())?;
        for (weight, bias) in self.params.weights.iter().zip(&self.params.biases) {
            w.write_all(&(weight.nrows() as u64).to_le_bytes())?;
            w.write_all(&(weight.ncols() as u64).to_le_bytes())?;
            for i in 0..weight.nrows() {
                for j in 0..weight.ncols() {
                    w.write_all(&weight[(i, j)].to_f64_lossless().to_le_bytes())?;
                }
            }
            w.write_all(&(bias.len() as u64).to_le_bytes())?;
            for v in bias.iter() {
                w.write_all(&v.to_f64_lossless().to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = bytes;
        let ck = Self::read_from(&mut cursor)?;
        if !cursor.is_empty() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes",
                cursor.len()
            )));
        }
        Ok(ck)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 5];
        read_exact(r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
        }
        let n_in = read_usize(r)?;
        let n_hidden = read_usize(r)?;
        let n_bottleneck = read_usize(r)?;
        let spec = LayerSpec::new(n_in, n_hidden, n_bottleneck)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        let alpha =
            FractionalOrder::new(read_f64(r)?).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let layers = read_usize(r)?;
        if layers != LAYERS {
            return Err(Error::Checkpoint(format!(
                "expected {LAYERS} layers, found {layers}"
            )));
        }
        let mut params = NetworkParams::<T>::zeros(spec);
        for (l, (rows, cols)) in spec.weight_shapes().into_iter().enumerate() {
            let (r_found, c_found) = (read_usize(r)?, read_usize(r)?);
            if (r_found, c_found) != (rows, cols) {
                return Err(Error::Checkpoint(format!(
                    "layer {} weight is {r_found}×{c_found}, header implies {rows}×{cols}",
                    l + 1
                )));
            }
            let mut w = Matrix::<T>::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    w[(i, j)] = T::lit(read_f64(r)?);
                }
            }
            let len = read_usize(r)?;
            if len != rows {
                return Err(Error::Checkpoint(format!(
                    "layer {} bias has {len} entries, expected {rows}",
                    l + 1
                )));
            }
            let mut b = Vector::<T>::zeros(len);
            for v in b.iter_mut() {
                *v = T::lit(read_f64(r)?);
            }
            params.weights[l] = w;
            params.biases[l] = b;
        }
        Ok(Self { alpha, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Checkpoint(format!("truncated checkpoint: {e}")))
}

fn read_usize(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    usize::try_from(u64::from_le_bytes(b))
        .map_err(|_| Error::Checkpoint("size overflows usize".into()))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}
