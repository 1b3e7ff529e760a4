use super::Encoder;
use crate::autoencoder::Decoder;
use crate::error::{Error, Result};
use crate::memory::{attend, attend_backward, EpisodicMemory, Readout};
use crate::nn::{cross_entropy, Activations, Matrix, NetGrads};

/// Produces observation-space inputs for a set of slots, from which the
/// encoder pass is recomputed.
pub trait Reinstater {
    /// One column per entry of `slots`.
    fn reinstate(&self, mem: &EpisodicMemory, slots: &[usize]) -> Result<Matrix>;
}

impl Reinstater for Decoder {
    fn reinstate(&self, mem: &EpisodicMemory, slots: &[usize]) -> Result<Matrix> {
        let e = mem.gather(slots, "embedding", |s| Some(&s.embedding))?;
        self.decode(&e)
    }
}

/// Perfect reconstruction: hands back the raw observation stored in each
/// slot. Requires slots written with observations.
#[derive(Debug, Clone, Copy, Default)]
pub struct ObservationOracle;

impl Reinstater for ObservationOracle {
    fn reinstate(&self, mem: &EpisodicMemory, slots: &[usize]) -> Result<Matrix> {
        mem.gather(slots, "observation", |s| s.observation.as_ref())
    }
}

/// A recomputed forward pass for some slots: `inputs` are the reinstated
/// observations, `acts.output` the recomputed embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct Reinstatement {
    pub slots: Vec<usize>,
    pub inputs: Matrix,
    pub acts: Activations,
}

/// Reinstate `slots` and re-encode them. The stored embeddings are inputs
/// only; nothing here is differentiated into the memory or the decoder.
pub fn reinstate_forward(
    mem: &EpisodicMemory,
    source: &impl Reinstater,
    enc: &Encoder,
    slots: &[usize],
) -> Result<Reinstatement> {
    if mem.is_empty() {
        return Err(Error::EmptyMemory);
    }
    let inputs = source.reinstate(mem, slots)?;
    let acts = enc.encode(&inputs)?;
    Ok(Reinstatement {
        slots: slots.to_vec(),
        inputs,
        acts,
    })
}

/// Encoder gradients from per-slot embedding gradients (one column per
/// reinstated slot), backpropagated through the recomputed activations and
/// stopping at the reinstated inputs.
pub fn backprop_reinstated(
    enc: &Encoder,
    re: &Reinstatement,
    slot_grads: &Matrix,
) -> Result<NetGrads> {
    enc.backward(&re.inputs, &re.acts, slot_grads)
}

#[derive(Debug, Clone)]
pub struct ExactCredit {
    pub loss: f64,
    pub grads: NetGrads,
    pub readout: Readout,
    /// Gradient w.r.t. each recomputed embedding.
    pub slot_grads: Matrix,
}

/// Classify with recomputed embeddings and return the exact encoder gradient
/// of the resulting loss through every slot's recomputed pass. The query
/// enters as a constant.
pub fn assign_reinstate_exact(
    mem: &EpisodicMemory,
    source: &impl Reinstater,
    enc: &Encoder,
    query: &[f64],
    label: usize,
    tau: f64,
    classes: usize,
) -> Result<ExactCredit> {
    let all: Vec<usize> = (0..mem.len()).collect();
    let re = reinstate_forward(mem, source, enc, &all)?;
    let labels = mem.labels();
    let readout = attend(&re.acts.output, &labels, query, tau, classes)?;
    let (loss, g_p) = cross_entropy(&readout.probs, label)?;
    if !loss.is_finite() {
        return Err(Error::Divergence("non-finite task loss".into()));
    }
    let slot_grads = attend_backward(&re.acts.output, &labels, query, &readout, &g_p, tau)?.keys;
    let grads = backprop_reinstated(enc, &re, &slot_grads)?;
    Ok(ExactCredit {
        loss,
        grads,
        readout,
        slot_grads,
    })
}

/// Apply gradients computed at the stored embeddings (`slot_grads`, one
/// column per slot in memory) to recomputed forward passes of the `subset`
/// slots, summing their contributions.
pub fn assign_reinstate_approx(
    mem: &EpisodicMemory,
    source: &impl Reinstater,
    enc: &Encoder,
    slot_grads: &Matrix,
    subset: &[usize],
) -> Result<NetGrads> {
    if slot_grads.cols() != mem.len() || slot_grads.rows() != enc.embed_dim() {
        return Err(Error::Dimension {
            op: "assign_reinstate_approx",
            left: (enc.embed_dim(), mem.len()),
            right: slot_grads.shape(),
        });
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= mem.len()) {
        return Err(Error::param(format!(
            "subset index {bad} out of range for {} slots",
            mem.len()
        )));
    }
    if subset.is_empty() {
        return Ok(enc.net.zero_grads());
    }
    let re = reinstate_forward(mem, source, enc, subset)?;
    backprop_reinstated(enc, &re, &slot_grads.select_columns(subset))
}
