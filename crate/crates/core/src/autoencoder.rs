//! Decoder half of the reinstatement autoencoder. It maps embeddings back to
//! observation space and learns only from reconstruction error, so the
//! encoder is never touched from here.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Activation, AdamConfig, Matrix, NetGrads, Rng, TwoLayerNet};

#[derive(Debug, Clone, PartialEq)]
pub struct Decoder {
    pub net: TwoLayerNet,
}

impl Decoder {
    /// `embed_dim → hidden (relu) → obs_dim (sigmoid)`.
    pub fn init(rng: &mut Rng, embed_dim: usize, hidden: usize, obs_dim: usize) -> Result<Self> {
        Ok(Self {
            net: TwoLayerNet::init(
                rng,
                (embed_dim, hidden, obs_dim),
                Activation::Relu,
                Activation::Sigmoid,
            )?,
        })
    }

    pub fn embed_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn obs_dim(&self) -> usize {
        self.net.output_dim()
    }

    /// Reconstructions, one per embedding column; entries in `[0, 1]`.
    pub fn decode(&self, embeddings: &Matrix) -> Result<Matrix> {
        Ok(self.net.forward(embeddings)?.output)
    }

    /// Mean squared reconstruction error of `x` from embedding `e` and its
    /// gradient w.r.t. the decoder parameters.
    pub fn recon_loss_and_grads(&self, e: &[f64], x: &[f64]) -> Result<(f64, NetGrads)> {
        if x.len() != self.obs_dim() {
            return Err(Error::Dimension {
                op: "recon_step",
                left: (self.obs_dim(), 1),
                right: (x.len(), 1),
            });
        }
        let input = Matrix::column_vector(e);
        let acts = self.net.forward(&input)?;
        let n = x.len() as f64;
        let diff: Vec<f64> = acts
            .output
            .as_slice()
            .iter()
            .zip(x)
            .map(|(a, b)| a - b)
            .collect();
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
        let g_out = Matrix::column_vector(&diff.iter().map(|d| 2.0 * d / n).collect::<Vec<_>>());
        let grads = self.net.backward(&input, &acts, &g_out)?;
        Ok((loss, grads))
    }

    /// One online reconstruction update on `(e, x)`; returns the loss before
    /// the update. `e` is a constant here: nothing flows back to the encoder.
    pub fn recon_step(&mut self, e: &[f64], x: &[f64], cfg: &AdamConfig) -> Result<f64> {
        let (loss, grads) = self.recon_loss_and_grads(e, x)?;
        if !loss.is_finite() {
            return Err(Error::Divergence("non-finite reconstruction loss".into()));
        }
        self.net.apply(&grads, cfg)?;
        Ok(loss)
    }
}

/// Writes a binary (P5) greyscale PGM of `pixels` in `[0, 1]`.
pub fn write_pgm(path: &Path, pixels: &[f64], width: usize, height: usize) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::Dimension {
            op: "write_pgm",
            left: (height, width),
            right: (pixels.len(), 1),
        });
    }
    let mut buf = format!("P5\n{width} {height}\n255\n").into_bytes();
    buf.extend(pixels.iter().map(|&p| (p.clamp(0.0, 1.0) * 255.0).round() as u8));
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}
