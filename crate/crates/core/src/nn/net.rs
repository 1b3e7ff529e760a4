use super::{adam_step, Activation, AdamConfig, AdamState, DenseLayer, Matrix, Rng};
use crate::error::{Error, Result};

/// Addresses one parameter tensor of a [`TwoLayerNet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamId {
    HiddenWeights,
    HiddenBias,
    OutputWeights,
    OutputBias,
}

impl ParamId {
    pub const ALL: [ParamId; 4] = [
        ParamId::HiddenWeights,
        ParamId::HiddenBias,
        ParamId::OutputWeights,
        ParamId::OutputBias,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

/// `output(hidden(x))`: one hidden layer plus an output layer, each with its
/// own ADAM state per tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerNet {
    pub hidden: DenseLayer,
    pub output: DenseLayer,
    opt: [AdamState; 4],
}

/// Activations of a forward pass; enough to run the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub hidden: Matrix,
    pub output: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetGrads {
    pub hidden_weights: Matrix,
    pub hidden_bias: Matrix,
    pub output_weights: Matrix,
    pub output_bias: Matrix,
}

impl TwoLayerNet {
    pub fn from_layers(hidden: DenseLayer, output: DenseLayer) -> Result<Self> {
        if hidden.fan_out() != output.fan_in() {
            return Err(Error::Dimension {
                op: "TwoLayerNet",
                left: hidden.weights.shape(),
                right: output.weights.shape(),
            });
        }
        let opt = [
            AdamState::for_param(&hidden.weights),
            AdamState::for_param(&hidden.bias),
            AdamState::for_param(&output.weights),
            AdamState::for_param(&output.bias),
        ];
        Ok(Self {
            hidden,
            output,
            opt,
        })
    }

    /// Glorot init for both layers (hidden layer drawn first).
    pub fn init(
        rng: &mut Rng,
        dims: (usize, usize, usize),
        hidden_act: Activation,
        output_act: Activation,
    ) -> Result<Self> {
        let (input, hidden, output) = dims;
        let h = DenseLayer::init(rng, input, hidden, hidden_act)?;
        let o = DenseLayer::init(rng, hidden, output, output_act)?;
        Self::from_layers(h, o)
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.fan_in()
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden.fan_out()
    }

    pub fn output_dim(&self) -> usize {
        self.output.fan_out()
    }

    pub fn forward(&self, x: &Matrix) -> Result<Activations> {
        let (_, hidden) = self.hidden.forward(x)?;
        let (_, output) = self.output.forward(&hidden)?;
        Ok(Activations { hidden, output })
    }

    /// Parameter gradients for upstream gradient `g_out`, given the input and
    /// the activations it produced. Activation derivatives are read off the
    /// activations, so stored and freshly computed passes go through the same
    /// arithmetic.
    pub fn backward(&self, x: &Matrix, acts: &Activations, g_out: &Matrix) -> Result<NetGrads> {
        self.backward_inner(x, acts, g_out, false).map(|(g, _)| g)
    }

    /// As [`backward`](Self::backward), also returning the gradient w.r.t. `x`.
    pub fn backward_with_input(
        &self,
        x: &Matrix,
        acts: &Activations,
        g_out: &Matrix,
    ) -> Result<(NetGrads, Matrix)> {
        self.backward_inner(x, acts, g_out, true)
            .map(|(g, gx)| (g, gx.expect("input gradient requested")))
    }

    fn backward_inner(
        &self,
        x: &Matrix,
        acts: &Activations,
        g_out: &Matrix,
        want_input: bool,
    ) -> Result<(NetGrads, Option<Matrix>)> {
        let g_pre_out = self.output.pre_gradient_from_output(&acts.output, g_out)?;
        let (output_weights, output_bias) = self.output.param_gradients(&acts.hidden, &g_pre_out)?;
        let g_hidden = self.output.input_gradient(&g_pre_out)?;
        let g_pre_hidden = self.hidden.pre_gradient_from_output(&acts.hidden, &g_hidden)?;
        let (hidden_weights, hidden_bias) = self.hidden.param_gradients(x, &g_pre_hidden)?;
        let g_x = if want_input {
            Some(self.hidden.input_gradient(&g_pre_hidden)?)
        } else {
            None
        };
        Ok((
            NetGrads {
                hidden_weights,
                hidden_bias,
                output_weights,
                output_bias,
            },
            g_x,
        ))
    }

    /// One ADAM step on every tensor. Gradients are checked before anything
    /// moves; parameters are checked after.
    pub fn apply(&mut self, grads: &NetGrads, cfg: &AdamConfig) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::Divergence("non-finite gradient".into()));
        }
        for id in ParamId::ALL {
            let g = grads.get(id);
            let (param, state) = match id {
                ParamId::HiddenWeights => (&mut self.hidden.weights, &mut self.opt[0]),
                ParamId::HiddenBias => (&mut self.hidden.bias, &mut self.opt[1]),
                ParamId::OutputWeights => (&mut self.output.weights, &mut self.opt[2]),
                ParamId::OutputBias => (&mut self.output.bias, &mut self.opt[3]),
            };
            adam_step(param, g, state, cfg)?;
        }
        if !self.is_finite() {
            return Err(Error::Divergence("non-finite parameter after update".into()));
        }
        Ok(())
    }

    pub fn param(&self, id: ParamId) -> &Matrix {
        match id {
            ParamId::HiddenWeights => &self.hidden.weights,
            ParamId::HiddenBias => &self.hidden.bias,
            ParamId::OutputWeights => &self.output.weights,
            ParamId::OutputBias => &self.output.bias,
        }
    }

    pub fn param_mut(&mut self, id: ParamId) -> &mut Matrix {
        match id {
            ParamId::HiddenWeights => &mut self.hidden.weights,
            ParamId::HiddenBias => &mut self.hidden.bias,
            ParamId::OutputWeights => &mut self.output.weights,
            ParamId::OutputBias => &mut self.output.bias,
        }
    }

    pub fn adam_state(&self, id: ParamId) -> &AdamState {
        &self.opt[id.index()]
    }

    pub fn zero_grads(&self) -> NetGrads {
        NetGrads {
            hidden_weights: Matrix::zeros(self.hidden.weights.rows(), self.hidden.weights.cols()),
            hidden_bias: Matrix::zeros(self.hidden.bias.rows(), 1),
            output_weights: Matrix::zeros(self.output.weights.rows(), self.output.weights.cols()),
            output_bias: Matrix::zeros(self.output.bias.rows(), 1),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.hidden.is_finite() && self.output.is_finite()
    }
}

impl NetGrads {
    pub fn get(&self, id: ParamId) -> &Matrix {
        match id {
            ParamId::HiddenWeights => &self.hidden_weights,
            ParamId::HiddenBias => &self.hidden_bias,
            ParamId::OutputWeights => &self.output_weights,
            ParamId::OutputBias => &self.output_bias,
        }
    }

    fn tensors_mut(&mut self) -> [&mut Matrix; 4] {
        [
            &mut self.hidden_weights,
            &mut self.hidden_bias,
            &mut self.output_weights,
            &mut self.output_bias,
        ]
    }

    pub fn add_assign(&mut self, other: &NetGrads) -> Result<()> {
        for (id, t) in ParamId::ALL.into_iter().zip(self.tensors_mut()) {
            t.add_assign(other.get(id))?;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.scale(s);
        }
    }

    pub fn max_abs(&self) -> f64 {
        ParamId::ALL
            .iter()
            .map(|&id| self.get(id).max_abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &NetGrads) -> Result<f64> {
        let mut worst = 0.0f64;
        for id in ParamId::ALL {
            worst = worst.max(self.get(id).max_abs_diff(other.get(id))?);
        }
        Ok(worst)
    }

    pub fn is_finite(&self) -> bool {
        ParamId::ALL.iter().all(|&id| self.get(id).is_finite())
    }
}
