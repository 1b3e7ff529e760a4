use crate::error::{Error, Result};

/// Lower clamp inside the log of the cross-entropy.
pub const LOG_FLOOR: f64 = 1e-12;

/// Temperature softmax with max-subtraction.
pub fn softmax(scores: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::param(format!("softmax temperature must be > 0, got {tau}")));
    }
    if scores.is_empty() {
        return Err(Error::param("softmax of an empty sequence"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Divergence("non-finite softmax input".into()));
    }
    let max = scores.iter().fold(f64::NEG_INFINITY, |m, &s| m.max(s / tau));
    let mut out: Vec<f64> = scores.iter().map(|&s| (s / tau - max).exp()).collect();
    let z: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= z);
    Ok(out)
}

/// Pulls `g_w` (gradient w.r.t. softmax outputs `w`) back to the scores:
/// `g_s_i = w_i (g_w_i - Σ_j w_j g_w_j) / tau`.
pub fn softmax_backward(weights: &[f64], g_weights: &[f64], tau: f64) -> Vec<f64> {
    debug_assert_eq!(weights.len(), g_weights.len());
    let dot: f64 = weights.iter().zip(g_weights).map(|(w, g)| w * g).sum();
    weights
        .iter()
        .zip(g_weights)
        .map(|(w, g)| w * (g - dot) / tau)
        .collect()
}

/// `-log(max(p_y, 1e-12))` and its gradient w.r.t. `p`.
///
/// `p` is not re-normalized or checked for unit mass, so the gradient is the
/// plain partial derivative with the other entries held fixed.
pub fn cross_entropy(p: &[f64], y: usize) -> Result<(f64, Vec<f64>)> {
    if y >= p.len() {
        return Err(Error::param(format!(
            "class id {y} out of range for {} classes",
            p.len()
        )));
    }
    let py = p[y].max(LOG_FLOOR);
    let mut grad = vec![0.0; p.len()];
    grad[y] = -1.0 / py;
    Ok((-py.ln(), grad))
}
