//! IDX file ingestion (the big-endian format used by MNIST-style datasets).

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::models::{Batch, Targets};

use super::problems::{Dataset, IdxSpec};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let out = &self.buf[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::Format(format!(
                "unexpected end of file at offset {}",
                self.buf.len()
            ))),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn header(&mut self, expected: u32, fields: &[&str]) -> Result<Vec<usize>> {
        let magic = self.u32()?;
        if magic != expected {
            return Err(Error::Format(format!(
                "field `magic`: expected {expected:#010x}, found {magic:#010x}"
            )));
        }
        let mut dims = Vec::with_capacity(fields.len());
        for &name in fields {
            let v = self.u32()? as usize;
            if v == 0 {
                return Err(Error::Format(format!("field `{name}` is zero")));
            }
            dims.push(v);
        }
        Ok(dims)
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after offset {}",
                self.buf.len() - self.pos,
                self.pos
            )));
        }
        Ok(())
    }
}

/// Images as a sample-major matrix of pixels divided by 255, so every row
/// has RMS at most 1.
pub fn parse_idx_images(buf: &[u8]) -> Result<Matrix> {
    let mut r = Reader { buf, pos: 0 };
    let dims = r.header(IDX_IMAGES_MAGIC, &["count", "rows", "cols"])?;
    let (n, d) = (dims[0], dims[1] * dims[2]);
    let pixels = r.take(n * d)?;
    r.finish()?;
    let data = pixels.iter().map(|&p| f64::from(p) / 255.0).collect();
    Matrix::from_vec(n, d, data)
}

pub fn parse_idx_labels(buf: &[u8]) -> Result<Vec<usize>> {
    let mut r = Reader { buf, pos: 0 };
    let dims = r.header(IDX_LABELS_MAGIC, &["count"])?;
    let labels = r.take(dims[0])?.iter().map(|&l| l as usize).collect();
    r.finish()?;
    Ok(labels)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_pair(images: &Path, labels: &Path) -> Result<Batch> {
    let x = parse_idx_images(&read(images)?)?;
    let y = parse_idx_labels(&read(labels)?)?;
    if x.rows() != y.len() {
        return Err(Error::Format(format!(
            "field `count`: {} images but {} labels",
            x.rows(),
            y.len()
        )));
    }
    Ok(Batch {
        inputs: x,
        targets: Targets::Classes(y),
    })
}

fn classes_of(b: &Batch) -> usize {
    match &b.targets {
        Targets::Classes(c) => c.iter().max().map_or(0, |m| m + 1),
        Targets::Values(v) => v.cols(),
    }
}

pub fn load_idx(images: &Path, labels: &Path) -> Result<Batch> {
    load_pair(images, labels)
}

pub fn load_idx_spec(spec: &IdxSpec) -> Result<Dataset> {
    let all = load_pair(&spec.images, &spec.labels)?;
    let (train, test) = match (&spec.test_images, &spec.test_labels) {
        (Some(ti), Some(tl)) => (all, load_pair(ti, tl)?),
        (None, None) => {
            let n = all.len();
            if n < 2 {
                return Err(Error::Format("field `count`: need at least 2 samples to split".into()));
            }
            let cut = n - (n / 10).max(1);
            let train = all.select(&(0..cut).collect::<Vec<_>>());
            let test = all.select(&(cut..n).collect::<Vec<_>>());
            (train, test)
        }
        _ => {
            return Err(Error::Format(
                "test_images and test_labels must be given together".into(),
            ))
        }
    };
    if train.inputs.cols() != test.inputs.cols() {
        return Err(Error::Format(format!(
            "field `rows`/`cols`: train images have {} pixels, test images {}",
            train.inputs.cols(),
            test.inputs.cols()
        )));
    }
    let classes = classes_of(&train).max(classes_of(&test)).max(2);
    Ok(Dataset {
        train,
        test,
        classes,
    })
}

/// Encode images in IDX format. Values are clamped to `[0, 1]` and rounded.
pub fn encode_idx_images(images: &Matrix, rows: usize, cols: usize) -> Result<Vec<u8>> {
    if rows * cols != images.cols() {
        return Err(Error::InvalidDims(format!(
            "{rows}x{cols} images do not have {} pixels",
            images.cols()
        )));
    }
    let mut out = Vec::with_capacity(16 + images.len());
    for v in [IDX_IMAGES_MAGIC, images.rows() as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend(images.as_slice().iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

pub fn encode_idx_labels(labels: &[usize]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    for &l in labels {
        let b = u8::try_from(l).map_err(|_| Error::Format(format!("label {l} does not fit a byte")))?;
        out.push(b);
    }
    Ok(out)
}
