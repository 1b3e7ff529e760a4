use super::Dataset;
use crate::error::{Error, Result};
use crate::nn::{Matrix, Rng};

/// Gaussian blobs in `[0, 1]^dim`: one mean per class drawn uniformly, then
/// `mean + spread·N(0, 1)` per coordinate, clamped. Sample `i` has label
/// `i % classes`, so classes are exactly balanced.
pub fn synthetic_blobs(
    rng: &mut Rng,
    classes: usize,
    per_class: usize,
    dim: usize,
    spread: f64,
) -> Result<Dataset> {
    if per_class == 0 || classes == 0 || dim == 0 {
        return Err(Error::param("blob dataset needs classes, per_class, dim >= 1"));
    }
    if classes > super::NUM_CLASSES {
        return Err(Error::param(format!("at most {} classes", super::NUM_CLASSES)));
    }
    let means: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| rng.uniform()).collect())
        .collect();
    let n = classes * per_class;
    let mut images = Matrix::zeros(dim, n);
    let mut labels = Vec::with_capacity(n);
    for j in 0..n {
        let c = j % classes;
        for (i, &mu) in means[c].iter().enumerate() {
            images[(i, j)] = (mu + spread * rng.normal()).clamp(0.0, 1.0);
        }
        labels.push(c);
    }
    Dataset::new(images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_spread_identical_within_class() {
        let d = synthetic_blobs(&mut Rng::new(1), 4, 3, 16, 0.0).unwrap();
        for j in 0..d.len() {
            let base = j % 4;
            assert_eq!(d.example(j).0, d.example(base).0);
        }
    }

    #[test]
    fn balanced_labels() {
        let d = synthetic_blobs(&mut Rng::new(2), 10, 7, 8, 0.1).unwrap();
        for c in 0..10 {
            assert_eq!(d.labels().iter().filter(|&&l| l == c).count(), 7);
        }
    }

    #[test]
    fn nearest_mean_separates() {
        let d = synthetic_blobs(&mut Rng::new(3), 10, 100, 784, 0.3).unwrap();
        let (train, test) = d.split_at(500);
        let mut means = vec![vec![0.0; 784]; 10];
        let mut counts = [0usize; 10];
        for j in 0..train.len() {
            let (x, y) = train.example(j);
            counts[y] += 1;
            for (m, v) in means[y].iter_mut().zip(x) {
                *m += v;
            }
        }
        for (m, &c) in means.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|v| *v /= c as f64);
        }
        let mut correct = 0;
        for j in 0..test.len() {
            let (x, y) = test.example(j);
            let best = (0..10)
                .min_by(|&a, &b| {
                    let da: f64 = means[a].iter().zip(&x).map(|(m, v)| (m - v).powi(2)).sum();
                    let db: f64 = means[b].iter().zip(&x).map(|(m, v)| (m - v).powi(2)).sum();
                    da.total_cmp(&db)
                })
                .unwrap();
            correct += usize::from(best == y);
        }
        assert!(correct as f64 / test.len() as f64 >= 0.99);
    }
}
