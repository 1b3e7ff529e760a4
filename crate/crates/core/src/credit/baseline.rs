use super::Encoder;
use crate::error::{Error, Result};
use crate::memory::EpisodicMemory;
use crate::nn::{Activations, Matrix, NetGrads};

/// Backprop every slot's gradient through the forward pass it stored at
/// write time: the observation and hidden activation, combined with the
/// current weights. Column `i` of `slot_grads` belongs to slot `i`.
///
/// Exact while the weights are unchanged since the slot was written;
/// afterwards the stored activations are stale by however much the encoder
/// has moved.
pub fn assign_baseline(
    enc: &Encoder,
    mem: &EpisodicMemory,
    slot_grads: &Matrix,
) -> Result<NetGrads> {
    if slot_grads.cols() != mem.len() || slot_grads.rows() != enc.embed_dim() {
        return Err(Error::Dimension {
            op: "assign_baseline",
            left: (enc.embed_dim(), mem.len()),
            right: slot_grads.shape(),
        });
    }
    let all: Vec<usize> = (0..mem.len()).collect();
    let x = mem.gather(&all, "observation", |s| s.observation.as_ref())?;
    let hidden = mem.gather(&all, "hidden activation", |s| s.hidden.as_ref())?;
    let output = mem.keys()?;
    enc.backward(&x, &Activations { hidden, output }, slot_grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::MemorySlot;
    use crate::nn::Rng;

    fn filled_memory(enc: &Encoder, rng: &mut Rng, n: usize) -> EpisodicMemory {
        let mut mem = EpisodicMemory::new(n).unwrap();
        for t in 0..n {
            let x: Vec<f64> = (0..enc.obs_dim()).map(|_| rng.uniform()).collect();
            let acts = enc.encode(&Matrix::column_vector(&x)).unwrap();
            let mut slot = MemorySlot::new(acts.output.into_vec(), t % 3, t as u64 + 1);
            slot.observation = Some(x);
            slot.hidden = Some(acts.hidden.into_vec());
            mem.write(slot).unwrap();
        }
        mem
    }

    #[test]
    fn zero_slot_grads_zero_params() {
        let mut rng = Rng::new(3);
        let enc = Encoder::init(&mut rng, 10, 6, 4).unwrap();
        let mem = filled_memory(&enc, &mut rng, 3);
        let g = assign_baseline(&enc, &mem, &Matrix::zeros(4, 3)).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn fresh_slot_equals_recompute() {
        let mut rng = Rng::new(4);
        let enc = Encoder::init(&mut rng, 10, 6, 4).unwrap();
        let mem = filled_memory(&enc, &mut rng, 1);
        let ge = Matrix::from_fn(4, 1, |_, _| rng.normal());
        let stored = assign_baseline(&enc, &mem, &ge).unwrap();
        let x = Matrix::column_vector(mem.slot(0).unwrap().observation.as_ref().unwrap());
        let fresh = enc.backward(&x, &enc.encode(&x).unwrap(), &ge).unwrap();
        assert!(stored.max_abs_diff(&fresh).unwrap() <= 1e-12);
    }

    #[test]
    fn two_slots_sum_of_singles() {
        let mut rng = Rng::new(5);
        let enc = Encoder::init(&mut rng, 10, 6, 4).unwrap();
        let mem = filled_memory(&enc, &mut rng, 2);
        let ge = Matrix::from_fn(4, 2, |_, _| rng.normal());
        let both = assign_baseline(&enc, &mem, &ge).unwrap();
        let mut sum = enc.net.zero_grads();
        for i in 0..2 {
            let mut only = Matrix::zeros(4, 2);
            only.set_column(i, &ge.column(i));
            sum.add_assign(&assign_baseline(&enc, &mem, &only).unwrap()).unwrap();
        }
        assert!(both.max_abs_diff(&sum).unwrap() <= 1e-12);
    }

    #[test]
    fn missing_extras_is_contract_error() {
        let mut rng = Rng::new(6);
        let enc = Encoder::init(&mut rng, 10, 6, 4).unwrap();
        let mut mem = EpisodicMemory::new(2).unwrap();
        mem.write(MemorySlot::new(vec![1.0, 0.0, 0.0, 0.0], 0, 1)).unwrap();
        assert!(matches!(
            assign_baseline(&enc, &mem, &Matrix::zeros(4, 1)),
            Err(Error::Mechanism(_))
        ));
    }
}
