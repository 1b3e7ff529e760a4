use super::Matrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Matrix,
    pub v: Matrix,
    pub t: u64,
}

impl AdamState {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            m: Matrix::zeros(rows, cols),
            v: Matrix::zeros(rows, cols),
            t: 0,
        }
    }

    pub fn for_param(param: &Matrix) -> Self {
        Self::new(param.rows(), param.cols())
    }
}

/// One bias-corrected ADAM update, in place.
///
/// A non-finite gradient is reported as a divergence before anything is
/// modified.
pub fn adam_step(
    param: &mut Matrix,
    grad: &Matrix,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    if param.shape() != grad.shape() || state.m.shape() != param.shape() {
        return Err(Error::Dimension {
            op: "adam_step",
            left: param.shape(),
            right: grad.shape(),
        });
    }
    if !grad.is_finite() {
        return Err(Error::Divergence("non-finite gradient".into()));
    }
    state.t += 1;
    let t = i32::try_from(state.t).unwrap_or(i32::MAX);
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let p = param.as_mut_slice();
    let m = state.m.as_mut_slice();
    let v = state.v.as_mut_slice();
    for (((p, m), v), &g) in p.iter_mut().zip(m).zip(v).zip(grad.as_slice()) {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}
