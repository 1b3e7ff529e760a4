use super::Encoder;
use crate::error::{Error, Result};
use crate::nn::{Activation, Activations, AdamConfig, DenseLayer, Matrix, NetGrads, Rng, TwoLayerNet};

/// Predicts the gradient a memory will eventually receive from its embedding
/// and one-hot label. The output layer starts at exactly zero, so an
/// untrained net predicts a zero gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthNet {
    pub net: TwoLayerNet,
    classes: usize,
}

impl SynthNet {
    pub fn init(rng: &mut Rng, embed_dim: usize, hidden: usize, classes: usize) -> Result<Self> {
        let h = DenseLayer::init(rng, embed_dim + classes, hidden, Activation::Relu)?;
        let out = DenseLayer::zeros(hidden, embed_dim, Activation::Linear);
        Ok(Self {
            net: TwoLayerNet::from_layers(h, out)?,
            classes,
        })
    }

    pub fn embed_dim(&self) -> usize {
        self.net.output_dim()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Columns of `[e; one_hot(label)]`.
    fn inputs(&self, embeddings: &Matrix, labels: &[usize]) -> Result<Matrix> {
        let d = self.embed_dim();
        if embeddings.rows() != d || embeddings.cols() != labels.len() {
            return Err(Error::Dimension {
                op: "synth_predict",
                left: (d, labels.len()),
                right: embeddings.shape(),
            });
        }
        let n = labels.len();
        let mut x = Matrix::zeros(d + self.classes, n);
        for r in 0..d {
            x.as_mut_slice()[r * n..(r + 1) * n].copy_from_slice(embeddings.row(r));
        }
        for (j, &y) in labels.iter().enumerate() {
            if y >= self.classes {
                return Err(Error::param(format!("label {y} >= {} classes", self.classes)));
            }
            x[(d + y, j)] = 1.0;
        }
        Ok(x)
    }

    pub fn predict_batch(&self, embeddings: &Matrix, labels: &[usize]) -> Result<Matrix> {
        Ok(self.net.forward(&self.inputs(embeddings, labels)?)?.output)
    }

    pub fn predict(&self, embedding: &[f64], label: usize) -> Result<Vec<f64>> {
        self.predict_batch(&Matrix::column_vector(embedding), &[label])
            .map(Matrix::into_vec)
    }

    /// Mean over all entries of `(prediction − target)²` and its parameter
    /// gradient.
    pub fn mse_and_grads(
        &self,
        embeddings: &Matrix,
        labels: &[usize],
        targets: &Matrix,
    ) -> Result<(f64, NetGrads)> {
        let x = self.inputs(embeddings, labels)?;
        let acts = self.net.forward(&x)?;
        let mut diff = acts.output.sub(targets)?;
        let n = diff.len() as f64;
        let mse = diff.as_slice().iter().map(|d| d * d).sum::<f64>() / n;
        diff.scale(2.0 / n);
        let grads = self.net.backward(&x, &acts, &diff)?;
        Ok((mse, grads))
    }

    /// One supervised ADAM step towards `targets`; returns the MSE before it.
    pub fn train(
        &mut self,
        embeddings: &Matrix,
        labels: &[usize],
        targets: &Matrix,
        cfg: &AdamConfig,
    ) -> Result<f64> {
        if labels.is_empty() {
            return Err(Error::param("synthetic-gradient batch is empty"));
        }
        let (mse, grads) = self.mse_and_grads(embeddings, labels, targets)?;
        if !mse.is_finite() {
            return Err(Error::Divergence("non-finite synthetic-gradient loss".into()));
        }
        self.net.apply(&grads, cfg)?;
        Ok(mse)
    }
}

/// Pushes a predicted embedding gradient through the activations of the
/// encode that just produced it, then takes one ADAM step on the encoder.
pub fn synth_apply_at_write(
    enc: &mut Encoder,
    x: &Matrix,
    acts: &Activations,
    g_hat: &[f64],
    cfg: &AdamConfig,
) -> Result<()> {
    if g_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence("non-finite synthetic gradient".into()));
    }
    let grads = enc.backward(x, acts, &Matrix::column_vector(g_hat))?;
    enc.apply(&grads, cfg)
}
