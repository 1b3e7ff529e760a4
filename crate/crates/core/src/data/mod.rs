//! Datasets and deterministic example streams.

mod blobs;
mod idx;
mod stream;

pub use blobs::synthetic_blobs;
pub use idx::{
    dataset_from_idx, load_idx, load_mnist_dir, IdxImages, IdxLabels, IMAGES_MAGIC, LABELS_MAGIC,
    TEST_IMAGES, TEST_LABELS, TRAIN_IMAGES, TRAIN_LABELS,
};
pub use stream::ExampleStream;

use crate::error::{Error, Result};
use crate::nn::{Matrix, Rng};

pub const NUM_CLASSES: usize = 10;

/// Observations as columns of a `dim×N` matrix, values in `[0, 1]`, with
/// labels in `0..10`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    images: Matrix,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(images: Matrix, labels: Vec<usize>) -> Result<Self> {
        if images.cols() != labels.len() {
            return Err(Error::Dimension {
                op: "Dataset::new",
                left: images.shape(),
                right: (labels.len(), 1),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= NUM_CLASSES) {
            return Err(Error::param(format!("label {l} out of range")));
        }
        if images.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::param("pixel values must lie in [0, 1]"));
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.images.rows()
    }

    pub fn images(&self) -> &Matrix {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn example(&self, i: usize) -> (Vec<f64>, usize) {
        (self.images.column(i), self.labels[i])
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: self.images.select_columns(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Seeded subsample of up to `n` distinct examples, in draw order.
    pub fn sample(&self, n: usize, rng: &mut Rng) -> Dataset {
        self.subset(&rng.sample_indices(self.len(), n))
    }

    /// First `n` examples and the rest.
    pub fn split_at(&self, n: usize) -> (Dataset, Dataset) {
        let n = n.min(self.len());
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.len()).collect();
        (self.subset(&head), self.subset(&tail))
    }
}
