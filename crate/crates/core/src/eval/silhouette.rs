use crate::error::{invalid, Result};
use crate::eval::Partition;
use crate::numerics::{DenseMatrix, Scalar};

/// Mean silhouette `(b - a) / max(a, b)` with Euclidean distances. Points in
/// singleton clusters, and points with `a = b = 0`, score 0.
pub fn silhouette<T: Scalar>(z: &DenseMatrix<T>, p: &Partition) -> Result<f64> {
    let x: DenseMatrix<f64> = z.cast();
    let n = x.rows();
    if p.len() != n {
        return Err(invalid(format!(
            "partition has {} items, embeddings {n}",
            p.len()
        )));
    }
    let k = p.k();
    let mut sizes = vec![0usize; k];
    for &a in p.assignments() {
        sizes[a] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(invalid("silhouette needs at least 2 non-empty clusters"));
    }
    let labels = p.assignments();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                let d: f64 = x
                    .row(i)
                    .iter()
                    .zip(x.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                sums[labels[j]] += d;
            }
        }
        let own = labels[i];
        if sizes[own] < 2 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_blobs_score_high() {
        let z = DenseMatrix::from_fn(20, 2, |r, c| {
            let base = if r < 10 { 0.0 } else { 100.0 };
            base + ((r * 3 + c) as f64 * 0.77).sin()
        });
        let p = Partition::new((0..20).map(|r| usize::from(r >= 10)).collect(), 2).unwrap();
        assert!(silhouette(&z, &p).unwrap() > 0.9);
    }

    #[test]
    fn identical_points_score_zero() {
        let z = DenseMatrix::from_fn(6, 3, |_, _| 1.5);
        let p = Partition::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        assert_eq!(silhouette(&z, &p).unwrap(), 0.0);
    }

    #[test]
    fn singleton_contributes_zero() {
        // Two tight points plus one far singleton: each pair point scores
        // (b - a) / b; the singleton adds 0.
        let z = DenseMatrix::from_rows(&[[0.0], [1.0], [10.0]]).unwrap();
        let p = Partition::new(vec![0, 0, 1], 2).unwrap();
        let want = ((10.0 - 1.0) / 10.0 + (9.0 - 1.0) / 9.0) / 3.0;
        assert!((silhouette(&z, &p).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn needs_two_clusters() {
        let z = DenseMatrix::<f64>::zeros(3, 1);
        assert!(silhouette(&z, &Partition::new(vec![0, 0, 0], 1).unwrap()).is_err());
    }
}
