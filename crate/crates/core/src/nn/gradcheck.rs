use super::Matrix;

/// Default central-difference step.
pub const FD_EPS: f64 = 1e-5;

/// Central finite differences of `f` at `x`, one entry at a time.
pub fn finite_diff_grad(mut f: impl FnMut(&Matrix) -> f64, x: &Matrix, eps: f64) -> Matrix {
    let mut probe = x.clone();
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    for i in 0..x.len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + eps;
        let up = f(&probe);
        probe.as_mut_slice()[i] = orig - eps;
        let down = f(&probe);
        probe.as_mut_slice()[i] = orig;
        grad.as_mut_slice()[i] = (up - down) / (2.0 * eps);
    }
    grad
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, floor)` with Frobenius norms.
pub fn relative_error(a: &Matrix, b: &Matrix, floor: f64) -> f64 {
    assert_eq!(a.shape(), b.shape(), "relative_error shapes");
    let diff = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    diff / a.frobenius_norm().max(b.frobenius_norm()).max(floor)
}
