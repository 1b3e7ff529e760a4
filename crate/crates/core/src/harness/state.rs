use super::config::{OracleInference, TrainConfig};
use crate::autoencoder::Decoder;
use crate::credit::{
    assign_baseline, assign_reinstate_approx, assign_reinstate_exact, reinstate_forward,
    synth_apply_at_write, Encoder, Mechanism, ObservationOracle, SynthNet,
};
use crate::data::{Dataset, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::memory::{classify_batch, EpisodicMemory, MemorySlot};
use crate::nn::{cross_entropy, AdamConfig, Matrix, Rng};

/// What one training step measured. `train_loss` is `None` on steps that
/// made no prediction (empty memory or decoder warm-up).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    pub train_loss: Option<f64>,
    pub recon_loss: f64,
    pub synth_mse: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOutcome {
    pub accuracy: f64,
    /// Set when there was nothing to attend over.
    pub empty_memory: bool,
}

/// Everything one run owns. Streams of the run seed: 0 initializes the
/// networks (encoder, decoder, synthetic net in that order), 3 drives
/// per-step subsampling.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    pub mechanism: Mechanism,
    pub encoder: Encoder,
    pub decoder: Decoder,
    pub synth: Option<SynthNet>,
    pub memory: EpisodicMemory,
    step: u64,
    tau: f64,
    synth_scale: f64,
    synth_batch: usize,
    subset_fraction: f64,
    decoder_warmup: u64,
    oracle_inference: OracleInference,
    enc_opt: AdamConfig,
    dec_opt: AdamConfig,
    syn_opt: AdamConfig,
    aux_rng: Rng,
}

impl RunState {
    pub fn new(cfg: &TrainConfig, seed: u64, obs_dim: usize) -> Result<Self> {
        let mut init = Rng::with_stream(seed, 0);
        let encoder = Encoder::init(&mut init, obs_dim, cfg.hidden, cfg.embed_dim)?;
        let decoder = Decoder::init(&mut init, cfg.embed_dim, cfg.hidden, obs_dim)?;
        let synth = if cfg.mechanism == Mechanism::Synthetic {
            Some(SynthNet::init(&mut init, cfg.embed_dim, cfg.hidden, NUM_CLASSES)?)
        } else {
            None
        };
        Ok(Self {
            mechanism: cfg.mechanism,
            encoder,
            decoder,
            synth,
            memory: EpisodicMemory::new(cfg.capacity)?,
            step: 0,
            tau: cfg.tau,
            synth_scale: cfg.effective_synth_scale(),
            synth_batch: cfg.synth_batch,
            subset_fraction: cfg.subset_fraction,
            decoder_warmup: cfg.decoder_warmup,
            oracle_inference: cfg.oracle_inference,
            enc_opt: AdamConfig::with_lr(cfg.lr_encoder),
            dec_opt: AdamConfig::with_lr(cfg.lr_decoder),
            syn_opt: AdamConfig::with_lr(cfg.lr_synth),
            aux_rng: Rng::with_stream(seed, 3),
        })
    }

    /// Steps taken so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    fn credit_active(&self) -> bool {
        self.step > self.decoder_warmup
    }

    /// One online step: predict from memory and assign credit, write the new
    /// slot, then the synthetic write-time update and the decoder update.
    /// The example being written never takes part in its own prediction.
    pub fn train_step(&mut self, x: &[f64], y: usize) -> Result<StepMetrics> {
        self.step += 1;
        let xm = Matrix::column_vector(x);
        let acts = self.encoder.encode(&xm)?;
        if !acts.output.is_finite() {
            return Err(Error::Divergence("non-finite embedding".into()));
        }
        let e_q = acts.output.as_slice().to_vec();
        let active = self.credit_active();

        let mut train_loss = None;
        let mut synth_mse = None;
        if active && !self.memory.is_empty() {
            let (loss, mse) = self.credit_step(&e_q, y)?;
            train_loss = Some(loss);
            synth_mse = mse;
        }

        let mut slot = MemorySlot::new(e_q.clone(), y, self.step);
        if self.mechanism.stores_observation() {
            slot.observation = Some(x.to_vec());
        }
        if self.mechanism.stores_hidden() {
            slot.hidden = Some(acts.hidden.as_slice().to_vec());
        }
        self.memory.write(slot)?;

        if active {
            if let Some(syn) = &self.synth {
                let g_hat: Vec<f64> = syn
                    .predict(&e_q, y)?
                    .into_iter()
                    .map(|g| g / self.synth_scale)
                    .collect();
                synth_apply_at_write(&mut self.encoder, &xm, &acts, &g_hat, &self.enc_opt)?;
            }
        }

        let recon_loss = self.decoder.recon_step(&e_q, x, &self.dec_opt)?;
        Ok(StepMetrics {
            train_loss,
            recon_loss,
            synth_mse,
        })
    }

    /// Step (2): read, loss, per-slot gradients, mechanism credit. Returns
    /// the task loss and, for the synthetic mechanism, its pre-update MSE.
    fn credit_step(&mut self, e_q: &[f64], y: usize) -> Result<(f64, Option<f64>)> {
        let tau = self.tau;
        match self.mechanism {
            Mechanism::ReinstateExact => {
                let c = assign_reinstate_exact(
                    &self.memory, &self.decoder, &self.encoder, e_q, y, tau, NUM_CLASSES,
                )?;
                self.encoder.apply(&c.grads, &self.enc_opt)?;
                Ok((c.loss, None))
            }
            Mechanism::Oracle if self.oracle_inference == OracleInference::Recomputed => {
                let c = assign_reinstate_exact(
                    &self.memory, &ObservationOracle, &self.encoder, e_q, y, tau, NUM_CLASSES,
                )?;
                self.encoder.apply(&c.grads, &self.enc_opt)?;
                Ok((c.loss, None))
            }
            _ => {
                let readout = self.memory.read(e_q, tau, NUM_CLASSES)?;
                let (loss, g_p) = cross_entropy(&readout.probs, y)?;
                if !loss.is_finite() {
                    return Err(Error::Divergence("non-finite task loss".into()));
                }
                let g = self.memory.read_backward(e_q, &readout, &g_p, tau)?;
                let mse = self.assign_from_stored(&g)?;
                Ok((loss, mse))
            }
        }
    }

    /// Credit for mechanisms that read over stored embeddings, given the
    /// per-slot gradients `g` (`d×K`).
    fn assign_from_stored(&mut self, g: &Matrix) -> Result<Option<f64>> {
        let k = self.memory.len();
        match self.mechanism {
            Mechanism::Baseline => {
                let grads = assign_baseline(&self.encoder, &self.memory, g)?;
                self.encoder.apply(&grads, &self.enc_opt)?;
                Ok(None)
            }
            Mechanism::Synthetic => {
                let idx = self.aux_rng.sample_indices(k, self.synth_batch.min(k));
                let keys = self.memory.keys()?.select_columns(&idx);
                let labels = self.memory.labels();
                let labels: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
                let targets = g.select_columns(&idx).scaled(self.synth_scale);
                let syn = self.synth.as_mut().ok_or_else(|| {
                    Error::Mechanism("synthetic mechanism without a synthetic net".into())
                })?;
                Ok(Some(syn.train(&keys, &labels, &targets, &self.syn_opt)?))
            }
            Mechanism::ReinstateApprox => {
                let subset = self.approx_subset(k);
                let mut grads =
                    assign_reinstate_approx(&self.memory, &self.decoder, &self.encoder, g, &subset)?;
                if subset.len() < k {
                    grads.scale(1.0 / self.subset_fraction);
                }
                self.encoder.apply(&grads, &self.enc_opt)?;
                Ok(None)
            }
            Mechanism::Oracle => {
                let all: Vec<usize> = (0..k).collect();
                let grads =
                    assign_reinstate_approx(&self.memory, &ObservationOracle, &self.encoder, g, &all)?;
                self.encoder.apply(&grads, &self.enc_opt)?;
                Ok(None)
            }
            Mechanism::ReinstateExact => unreachable!("handled by credit_step"),
        }
    }

    fn approx_subset(&mut self, k: usize) -> Vec<usize> {
        if self.subset_fraction >= 1.0 {
            return (0..k).collect();
        }
        let n = ((self.subset_fraction * k as f64).ceil() as usize).clamp(1, k);
        let mut idx = self.aux_rng.sample_indices(k, n);
        idx.sort_unstable();
        idx
    }

    /// Keys the current mechanism classifies with: recomputed for
    /// `reinstate_exact` and the recomputing oracle, stored otherwise.
    pub fn inference_keys(&self) -> Result<Matrix> {
        let all: Vec<usize> = (0..self.memory.len()).collect();
        match (self.mechanism, self.oracle_inference) {
            (Mechanism::ReinstateExact, _) => {
                Ok(reinstate_forward(&self.memory, &self.decoder, &self.encoder, &all)?.acts.output)
            }
            (Mechanism::Oracle, OracleInference::Recomputed) => {
                Ok(reinstate_forward(&self.memory, &ObservationOracle, &self.encoder, &all)?.acts.output)
            }
            _ => self.memory.keys(),
        }
    }

    /// Accuracy on `val` with frozen parameters and memory.
    pub fn evaluate(&self, val: &Dataset) -> Result<EvalOutcome> {
        if self.memory.is_empty() {
            log::warn!("evaluate called with empty memory; reporting accuracy 0");
            return Ok(EvalOutcome {
                accuracy: 0.0,
                empty_memory: true,
            });
        }
        if val.is_empty() {
            return Err(Error::param("empty validation set"));
        }
        let keys = self.inference_keys()?;
        let queries = self.encoder.encode(val.images())?.output;
        let predicted = classify_batch(&keys, &self.memory.labels(), &queries, self.tau, NUM_CLASSES)?;
        let correct = predicted
            .iter()
            .zip(val.labels())
            .filter(|(p, y)| p == y)
            .count();
        Ok(EvalOutcome {
            accuracy: correct as f64 / val.len() as f64,
            empty_memory: false,
        })
    }
}
