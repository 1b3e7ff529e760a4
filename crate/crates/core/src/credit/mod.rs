//! Credit assignment through stored embeddings.
//!
//! Every mechanism starts from the same thing, the per-slot gradients that
//! [`EpisodicMemory::read_backward`](crate::memory::EpisodicMemory::read_backward)
//! produces, and differs in what it keeps around to turn them into encoder
//! parameter gradients:
//!
//! | mechanism          | stored per slot        | backprop through                  |
//! |--------------------|------------------------|-----------------------------------|
//! | `baseline`         | observation + hidden   | the stored activations            |
//! | `synthetic`        | nothing extra          | fresh activations at write time, using a predicted gradient |
//! | `reinstate_exact`  | nothing extra          | decoder reconstruction re-encoded; used for inference too |
//! | `reinstate_approx` | nothing extra          | decoder reconstruction re-encoded; inference uses stored keys |
//! | `oracle`           | observation            | the observation re-encoded         |

mod baseline;
mod reinstate;
mod synthetic;

use std::fmt;
use std::str::FromStr;

pub use baseline::assign_baseline;
pub use reinstate::{
    assign_reinstate_approx, assign_reinstate_exact, backprop_reinstated, reinstate_forward,
    ExactCredit, ObservationOracle, Reinstatement, Reinstater,
};
pub use synthetic::{synth_apply_at_write, SynthNet};

use crate::error::{Error, Result};
use crate::nn::{Activation, Activations, AdamConfig, Matrix, NetGrads, Rng, TwoLayerNet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mechanism {
    Baseline,
    Synthetic,
    ReinstateExact,
    ReinstateApprox,
    Oracle,
}

impl Mechanism {
    pub const ALL: [Mechanism; 5] = [
        Mechanism::Baseline,
        Mechanism::Synthetic,
        Mechanism::ReinstateExact,
        Mechanism::ReinstateApprox,
        Mechanism::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Baseline => "baseline",
            Mechanism::Synthetic => "synthetic",
            Mechanism::ReinstateExact => "reinstate_exact",
            Mechanism::ReinstateApprox => "reinstate_approx",
            Mechanism::Oracle => "oracle",
        }
    }

    pub fn stores_observation(self) -> bool {
        matches!(self, Mechanism::Baseline | Mechanism::Oracle)
    }

    pub fn stores_hidden(self) -> bool {
        matches!(self, Mechanism::Baseline)
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mechanism `{s}`")))
    }
}

/// The embedding function: `obs → hidden (relu) → embedding (linear)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    pub net: TwoLayerNet,
}

impl Encoder {
    pub fn init(rng: &mut Rng, obs_dim: usize, hidden: usize, embed_dim: usize) -> Result<Self> {
        Ok(Self {
            net: TwoLayerNet::init(
                rng,
                (obs_dim, hidden, embed_dim),
                Activation::Relu,
                Activation::Linear,
            )?,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn embed_dim(&self) -> usize {
        self.net.output_dim()
    }

    /// `acts.hidden` is `h`, `acts.output` is the embedding `e`.
    pub fn encode(&self, x: &Matrix) -> Result<Activations> {
        self.net.forward(x)
    }

    pub fn backward(&self, x: &Matrix, acts: &Activations, g_e: &Matrix) -> Result<NetGrads> {
        self.net.backward(x, acts, g_e)
    }

    pub fn apply(&mut self, grads: &NetGrads, cfg: &AdamConfig) -> Result<()> {
        self.net.apply(grads, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{finite_diff_grad, relative_error, DenseLayer, ParamId};

    #[test]
    fn mechanism_names_round_trip() {
        for m in Mechanism::ALL {
            assert_eq!(m.as_str().parse::<Mechanism>().unwrap(), m);
        }
        assert!("bogus".parse::<Mechanism>().is_err());
    }

    #[test]
    fn zero_weights_give_bias() {
        let mut out = DenseLayer::zeros(6, 3, Activation::Linear);
        out.bias = Matrix::column_vector(&[0.5, -1.0, 2.0]);
        let enc = Encoder {
            net: TwoLayerNet::from_layers(DenseLayer::zeros(10, 6, Activation::Relu), out).unwrap(),
        };
        let e = enc.encode(&Matrix::filled(10, 2, 0.3)).unwrap().output;
        assert_eq!(e.column(0), vec![0.5, -1.0, 2.0]);
        assert_eq!(e.column(1), vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn batched_encode_equals_single() {
        let mut rng = Rng::new(1);
        let enc = Encoder::init(&mut rng, 20, 8, 4).unwrap();
        let x = Matrix::from_fn(20, 6, |_, _| rng.uniform());
        let batch = enc.encode(&x).unwrap();
        for j in 0..6 {
            let one = enc.encode(&Matrix::column_vector(&x.column(j))).unwrap();
            assert_eq!(one.output.as_slice(), batch.output.column(j).as_slice());
            assert_eq!(one.hidden.as_slice(), batch.hidden.column(j).as_slice());
        }
    }

    #[test]
    fn encoder_gradient_matches_finite_differences() {
        let mut rng = Rng::new(2);
        let enc = Encoder::init(&mut rng, 12, 8, 4).unwrap();
        let x = Matrix::from_fn(12, 3, |_, _| rng.uniform());
        let probe = Matrix::from_fn(4, 3, |_, _| rng.normal());
        let acts = enc.encode(&x).unwrap();
        let g = enc.backward(&x, &acts, &probe).unwrap();
        for id in ParamId::ALL {
            let fd = finite_diff_grad(
                |p| {
                    let mut e = enc.clone();
                    *e.net.param_mut(id) = p.clone();
                    e.encode(&x).unwrap().output.hadamard(&probe).unwrap().sum()
                },
                enc.net.param(id),
                1e-5,
            );
            assert!(relative_error(g.get(id), &fd, 1e-12) <= 1e-5, "{id:?}");
        }
    }
}
