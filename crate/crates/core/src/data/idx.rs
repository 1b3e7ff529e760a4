//! IDX container format as used by the MNIST distribution: a big-endian
//! `u32` magic (`0x0000_0803` images, `0x0000_0801` labels), big-endian `u32`
//! dimensions, then raw `u8` payload.

use std::path::Path;

use super::Dataset;
use crate::error::{Error, ParseErrorKind, Result};
use crate::nn::Matrix;

pub const IMAGES_MAGIC: u32 = 2051;
pub const LABELS_MAGIC: u32 = 2049;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub rows: usize,
    pub cols: usize,
    /// Image-major pixels, `count × rows × cols`.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn count(&self) -> usize {
        self.pixels.len() / (self.rows * self.cols).max(1)
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(IMAGES_MAGIC)?;
        let count = r.u32()? as usize;
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let pixels = r.take(count * rows * cols)?.to_vec();
        Ok(Self { rows, cols, pixels })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + self.pixels.len());
        for v in [
            IMAGES_MAGIC,
            self.count() as u32,
            self.rows as u32,
            self.cols as u32,
        ] {
            out.extend_from_slice(&v.to_be_bytes());
        }
        out.extend_from_slice(&self.pixels);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxLabels {
    pub labels: Vec<u8>,
}

impl IdxLabels {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.magic(LABELS_MAGIC)?;
        let count = r.u32()? as usize;
        let start = r.offset;
        let labels = r.take(count)?.to_vec();
        if let Some(pos) = labels.iter().position(|&l| l > 9) {
            return Err(Error::Parse {
                offset: start + pos,
                kind: ParseErrorKind::LabelRange(labels[pos]),
            });
        }
        Ok(Self { labels })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.labels.len());
        out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        out.extend_from_slice(&(self.labels.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.labels);
        out
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, offset: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.offset;
        if n > available {
            return Err(Error::Parse {
                offset: self.offset,
                kind: ParseErrorKind::Truncated {
                    needed: n,
                    available,
                },
            });
        }
        let s = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn magic(&mut self, expected: u32) -> Result<()> {
        let found = self.u32()?;
        if found != expected {
            return Err(Error::Parse {
                offset: 0,
                kind: ParseErrorKind::BadMagic { expected, found },
            });
        }
        Ok(())
    }
}

/// Pairs parsed images and labels into a dataset with pixels scaled by 1/255.
pub fn dataset_from_idx(images: &IdxImages, labels: &IdxLabels) -> Result<Dataset> {
    let n = images.count();
    if n != labels.labels.len() {
        return Err(Error::Parse {
            offset: 4,
            kind: ParseErrorKind::CountMismatch {
                images: n,
                labels: labels.labels.len(),
            },
        });
    }
    let dim = images.rows * images.cols;
    let mut m = Matrix::zeros(dim, n);
    for j in 0..n {
        for (i, &p) in images.pixels[j * dim..(j + 1) * dim].iter().enumerate() {
            m[(i, j)] = f64::from(p) / 255.0;
        }
    }
    Dataset::new(m, labels.labels.iter().map(|&l| usize::from(l)).collect())
}

/// Loads an image/label file pair.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let ib = std::fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let lb = std::fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;
    dataset_from_idx(&IdxImages::parse(&ib)?, &IdxLabels::parse(&lb)?)
}

pub const TRAIN_IMAGES: &str = "train-images-idx3-ubyte";
pub const TRAIN_LABELS: &str = "train-labels-idx1-ubyte";
pub const TEST_IMAGES: &str = "t10k-images-idx3-ubyte";
pub const TEST_LABELS: &str = "t10k-labels-idx1-ubyte";

/// `(train, test)` from a directory holding the four standard MNIST files.
pub fn load_mnist_dir(dir: &Path) -> Result<(Dataset, Dataset)> {
    let train = load_idx(&dir.join(TRAIN_IMAGES), &dir.join(TRAIN_LABELS))?;
    let test = load_idx(&dir.join(TEST_IMAGES), &dir.join(TEST_LABELS))?;
    Ok((train, test))
}
