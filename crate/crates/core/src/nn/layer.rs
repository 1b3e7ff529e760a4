use std::fmt;
use std::str::FromStr;

use super::{Matrix, Rng};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
        }
    }

    /// Derivative evaluated at the pre-activation. Relu uses 0 at the kink.
    #[inline]
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(pre);
                s * (1.0 - s)
            }
        }
    }

    /// Derivative recovered from the activation output alone. Agrees exactly
    /// with [`Activation::derivative`] for every tag, which is what lets stored
    /// outputs stand in for stored pre-activations.
    #[inline]
    pub fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => out * (1.0 - out),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Linear => "linear",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Activation::Linear),
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            other => Err(Error::param(format!("unknown activation `{other}`"))),
        }
    }
}

/// Fully connected layer `act(W·x + b)`, `W` is `out×in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Matrix,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub weights: Matrix,
    pub bias: Matrix,
    pub input: Matrix,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Matrix, activation: Activation) -> Result<Self> {
        if bias.cols() != 1 || bias.rows() != weights.rows() {
            return Err(Error::Dimension {
                op: "DenseLayer::new",
                left: weights.shape(),
                right: bias.shape(),
            });
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(fan_in: usize, fan_out: usize, activation: Activation) -> Self {
        Self {
            weights: Matrix::zeros(fan_out, fan_in),
            bias: Matrix::zeros(fan_out, 1),
            activation,
        }
    }

    /// Glorot-uniform weights in `(-a, a)`, `a = sqrt(6 / (in + out))`, zero bias.
    /// Draws exactly `in·out` uniforms from `rng`, row-major.
    pub fn init(rng: &mut Rng, fan_in: usize, fan_out: usize, activation: Activation) -> Result<Self> {
        if fan_in == 0 || fan_out == 0 {
            return Err(Error::param(format!(
                "layer dims must be >= 1, got {fan_in}->{fan_out}"
            )));
        }
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let weights = Matrix::from_fn(fan_out, fan_in, |_, _| rng.uniform_range(-a, a));
        Ok(Self {
            weights,
            bias: Matrix::zeros(fan_out, 1),
            activation,
        })
    }

    pub fn fan_in(&self) -> usize {
        self.weights.cols()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.rows()
    }

    /// Returns `(pre, act)`.
    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, Matrix)> {
        if x.rows() != self.fan_in() {
            return Err(Error::Dimension {
                op: "dense_forward",
                left: self.weights.shape(),
                right: x.shape(),
            });
        }
        let mut pre = self.weights.matmul(x)?;
        pre.add_column_broadcast(&self.bias)?;
        let act = pre.map(|v| self.activation.apply(v));
        Ok((pre, act))
    }

    /// `g_act ⊙ act'(pre)`
    pub fn pre_gradient(&self, pre: &Matrix, g_act: &Matrix) -> Result<Matrix> {
        if pre.shape() != g_act.shape() || pre.rows() != self.fan_out() {
            return Err(Error::Dimension {
                op: "dense_backward",
                left: pre.shape(),
                right: g_act.shape(),
            });
        }
        let act = self.activation;
        let mut g = g_act.clone();
        for (g, &p) in g.as_mut_slice().iter_mut().zip(pre.as_slice()) {
            *g *= act.derivative(p);
        }
        Ok(g)
    }

    /// Same as [`pre_gradient`](Self::pre_gradient) but reads the derivative
    /// off the stored activation output.
    pub fn pre_gradient_from_output(&self, out: &Matrix, g_act: &Matrix) -> Result<Matrix> {
        if out.shape() != g_act.shape() || out.rows() != self.fan_out() {
            return Err(Error::Dimension {
                op: "dense_backward",
                left: out.shape(),
                right: g_act.shape(),
            });
        }
        let act = self.activation;
        let mut g = g_act.clone();
        for (g, &o) in g.as_mut_slice().iter_mut().zip(out.as_slice()) {
            *g *= act.derivative_from_output(o);
        }
        Ok(g)
    }

    /// `(g_pre·xᵀ, rowsum(g_pre))`
    pub fn param_gradients(&self, x: &Matrix, g_pre: &Matrix) -> Result<(Matrix, Matrix)> {
        if x.rows() != self.fan_in() || g_pre.rows() != self.fan_out() || x.cols() != g_pre.cols()
        {
            return Err(Error::Dimension {
                op: "dense_backward",
                left: x.shape(),
                right: g_pre.shape(),
            });
        }
        Ok((g_pre.matmul_t(x)?, g_pre.sum_columns()))
    }

    /// `Wᵀ·g_pre`
    pub fn input_gradient(&self, g_pre: &Matrix) -> Result<Matrix> {
        self.weights.t_matmul(g_pre)
    }

    pub fn backward(&self, x: &Matrix, pre: &Matrix, g_act: &Matrix) -> Result<DenseGrads> {
        if x.cols() != pre.cols() {
            return Err(Error::Dimension {
                op: "dense_backward",
                left: x.shape(),
                right: pre.shape(),
            });
        }
        let g_pre = self.pre_gradient(pre, g_act)?;
        let (weights, bias) = self.param_gradients(x, &g_pre)?;
        let input = self.input_gradient(&g_pre)?;
        Ok(DenseGrads {
            weights,
            bias,
            input,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::finite_diff_grad;

    fn random_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.uniform_range(-1.0, 1.0))
    }

    fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        let diff = a.sub(b).unwrap().frobenius_norm();
        diff / a.frobenius_norm().max(b.frobenius_norm()).max(1e-12)
    }

    #[test]
    fn identity_linear_forward() {
        let layer = DenseLayer::new(
            Matrix::from_vec(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap(),
            Matrix::zeros(2, 1),
            Activation::Linear,
        )
        .unwrap();
        let (_, act) = layer.forward(&Matrix::column_vector(&[3.0, -1.0])).unwrap();
        assert_eq!(act.as_slice(), &[3.0, -1.0]);
    }

    #[test]
    fn relu_clamps_negative() {
        let layer = DenseLayer::new(
            Matrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap(),
            Matrix::from_vec(1, 1, vec![0.5]).unwrap(),
            Activation::Relu,
        )
        .unwrap();
        let (pre, act) = layer.forward(&Matrix::column_vector(&[-2.0, 1.0])).unwrap();
        assert_eq!(pre.as_slice(), &[-0.5]);
        assert_eq!(act.as_slice(), &[0.0]);
    }

    #[test]
    fn forward_matches_triple_loop() {
        let mut rng = Rng::new(17);
        let layer = DenseLayer::new(
            random_matrix(&mut rng, 3, 2),
            random_matrix(&mut rng, 3, 1),
            Activation::Linear,
        )
        .unwrap();
        let x = random_matrix(&mut rng, 2, 2);
        let (pre, _) = layer.forward(&x).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let mut s = 0.0;
                for k in 0..2 {
                    s += layer.weights[(i, k)] * x[(k, j)];
                }
                s += layer.bias[(i, 0)];
                assert_eq!(pre[(i, j)], s);
            }
        }
    }

    #[test]
    fn forward_shape_error_names_both_shapes() {
        let layer = DenseLayer::zeros(3, 2, Activation::Linear);
        let err = layer.forward(&Matrix::zeros(4, 1)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(2, 3)") && msg.contains("(4, 1)"), "{msg}");
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = Rng::new(1);
        let layer = DenseLayer::init(&mut rng, 3, 2, Activation::Linear).unwrap();
        let x = random_matrix(&mut rng, 3, 4);
        let (pre, _) = layer.forward(&x).unwrap();
        let g = layer.backward(&x, &pre, &Matrix::zeros(2, 4)).unwrap();
        assert_eq!(g.weights.max_abs(), 0.0);
        assert_eq!(g.bias.max_abs(), 0.0);
        assert_eq!(g.input.max_abs(), 0.0);
    }

    #[test]
    fn scalar_chain_rule() {
        let layer = DenseLayer::new(
            Matrix::from_vec(1, 1, vec![2.0]).unwrap(),
            Matrix::zeros(1, 1),
            Activation::Linear,
        )
        .unwrap();
        let x = Matrix::column_vector(&[3.0]);
        let (pre, _) = layer.forward(&x).unwrap();
        let g = layer.backward(&x, &pre, &Matrix::column_vector(&[1.0])).unwrap();
        assert_eq!(g.weights.as_slice(), &[3.0]);
        assert_eq!(g.input.as_slice(), &[2.0]);
        assert_eq!(g.bias.as_slice(), &[1.0]);
    }

    #[test]
    fn backward_matches_finite_differences_each_activation() {
        let mut rng = Rng::new(23);
        for act in [Activation::Linear, Activation::Relu, Activation::Sigmoid] {
            let layer = DenseLayer::new(
                random_matrix(&mut rng, 4, 3),
                random_matrix(&mut rng, 4, 1),
                act,
            )
            .unwrap();
            let x = random_matrix(&mut rng, 3, 2);
            let probe = random_matrix(&mut rng, 4, 2);
            let (pre, _) = layer.forward(&x).unwrap();
            assert!(pre.as_slice().iter().all(|p| p.abs() > 1e-3), "kink too close");
            let g = layer.backward(&x, &pre, &probe).unwrap();

            let loss = |l: &DenseLayer, x: &Matrix| {
                let (_, a) = l.forward(x).unwrap();
                a.hadamard(&probe).unwrap().sum()
            };
            let fd_w = finite_diff_grad(
                |w| {
                    let mut l = layer.clone();
                    l.weights = w.clone();
                    loss(&l, &x)
                },
                &layer.weights,
                1e-5,
            );
            let fd_x = finite_diff_grad(|xx| loss(&layer, xx), &x, 1e-5);
            assert!(rel_err(&g.weights, &fd_w) <= 1e-6, "{act} weights");
            assert!(rel_err(&g.input, &fd_x) <= 1e-6, "{act} input");
        }
    }

    #[test]
    fn output_derivative_agrees_with_pre_derivative() {
        for act in [Activation::Linear, Activation::Relu, Activation::Sigmoid] {
            for &p in &[-3.0, -0.2, 0.0, 0.4, 5.0] {
                assert_eq!(act.derivative(p), act.derivative_from_output(act.apply(p)));
            }
        }
    }

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let a = DenseLayer::init(&mut Rng::new(8), 5, 7, Activation::Relu).unwrap();
        let b = DenseLayer::init(&mut Rng::new(8), 5, 7, Activation::Relu).unwrap();
        assert_eq!(a, b);
        assert!(a.bias.as_slice().iter().all(|&v| v == 0.0));
        assert!(DenseLayer::init(&mut Rng::new(8), 0, 7, Activation::Relu).is_err());
    }

    #[test]
    fn init_range_and_mean() {
        let layer = DenseLayer::init(&mut Rng::new(99), 784, 256, Activation::Relu).unwrap();
        let a = (6.0f64 / 1040.0).sqrt();
        let w = layer.weights.as_slice();
        assert!(layer.weights.max_abs() <= a);
        // Uniform(-a, a) has sd a/sqrt(3); the mean of n draws has sd a/sqrt(3n).
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        assert!(mean.abs() <= 3.0 * a / (3.0 * n).sqrt());
        let var = w.iter().map(|v| v * v).sum::<f64>() / n;
        assert!((var - a * a / 3.0).abs() < 0.02 * a * a);
    }
}
