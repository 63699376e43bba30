//! Binary model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "SCIONCKP"
//! 8       4     format version (u32, currently 1)
//! 12      8     header length H (u64)
//! 20      H     UTF-8 JSON header: {"layers": [LayerSpec, ...]}
//! 20+H    ...   parameters as f64 LE, in order W_1, b_1, W_2, ...,
//!               each row-major with the shape implied by its layer
//! ```
//!
//! Values are stored bit for bit, so a save/load round trip is exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LayerSpec, MlpModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const MAGIC: &[u8; 8] = b"SCIONCKP";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    layers: Vec<LayerSpec>,
}

pub fn to_bytes(model: &MlpModel) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&Header {
        layers: model.layers.clone(),
    })
    .map_err(|e| Error::Format(e.to_string()))?;
    let params = model.params();
    let count: usize = params.iter().map(Matrix::len).sum();
    let mut out = Vec::with_capacity(20 + header.len() + 8 * count);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for p in &params {
        for v in p.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!(
                "checkpoint truncated while reading {what} at offset {}",
                self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<MlpModel> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(Error::Format("not a checkpoint: bad magic".into()));
    }
    let version = u32::from_le_bytes(r.take(4, "version")?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let hlen = u64::from_le_bytes(r.take(8, "header length")?.try_into().expect("8 bytes"));
    let header: Header = serde_json::from_slice(r.take(hlen as usize, "header")?)
        .map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
    let mut model = MlpModel::init(&header.layers, 0)?;
    let mut params = model.params();
    for p in &mut params {
        let (rows, cols) = p.shape();
        let raw = r.take(8 * rows * cols, "parameters")?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        *p = Matrix::from_vec(rows, cols, data)?;
    }
    if r.pos != buf.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes after parameters",
            buf.len() - r.pos
        )));
    }
    model.set_params(&params)?;
    Ok(model)
}

pub fn save(model: &MlpModel, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(model)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<MlpModel> {
    from_bytes(&std::fs::read(path)?)
}
