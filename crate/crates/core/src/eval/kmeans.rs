//! Lloyd's k-means with k-means++ seeding and restarts.

use crate::error::{invalid, Result};
use crate::eval::Partition;
use crate::numerics::{DenseMatrix, Rng, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KMeansRun {
    pub partition: Partition,
    pub centroids: DenseMatrix<f64>,
    pub inertia: f64,
    /// Inertia after every assignment step.
    pub inertia_trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_seeds(x: &DenseMatrix<f64>, k: usize, rng: &mut Rng) -> Vec<usize> {
    let n = x.rows();
    let mut chosen = vec![rng.below(n)];
    let mut best: Vec<f64> = (0..n)
        .map(|i| sq_dist(x.row(i), x.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = best.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.uniform() * total;
            let mut pick = n - 1;
            for (i, &d) in best.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            // Guard against rounding landing on an already chosen point.
            if best[pick] == 0.0 {
                pick = (0..n).rev().find(|&i| best[i] > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.below(free.len())]
        };
        chosen.push(next);
        for (i, b) in best.iter_mut().enumerate() {
            *b = b.min(sq_dist(x.row(i), x.row(next)));
        }
    }
    chosen
}

/// One seeded Lloyd run.
pub fn kmeans_single<T: Scalar>(
    z: &DenseMatrix<T>,
    k: usize,
    max_iter: usize,
    rng: &mut Rng,
) -> Result<KMeansRun> {
    let x: DenseMatrix<f64> = z.cast();
    let (n, d) = x.shape();
    if k == 0 {
        return Err(invalid("k-means needs k >= 1"));
    }
    if k > n {
        return Err(invalid(format!("k = {k} exceeds {n} points")));
    }
    let seeds = plus_plus_seeds(&x, k, rng);
    let mut centroids = x.select_rows(&seeds);
    let mut assign = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    let mut trace = Vec::new();

    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for i in 0..n {
            let mut best = (f64::INFINITY, 0);
            for c in 0..k {
                let dd = sq_dist(x.row(i), centroids.row(c));
                if dd < best.0 {
                    best = (dd, c);
                }
            }
            if assign[i] != best.1 {
                assign[i] = best.1;
                changed = true;
            }
            dist[i] = best.0;
        }
        trace.push(dist.iter().sum());
        if !changed {
            break;
        }

        let mut sums = DenseMatrix::<f64>::zeros(k, d);
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assign[i]] += 1;
            for (s, &v) in sums.row_mut(assign[i]).iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, &s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed an empty cluster at the point farthest from its centroid.
                let far = (0..n)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)))
                    .unwrap();
                centroids.row_mut(c).copy_from_slice(x.row(far));
                dist[far] = 0.0;
            }
        }
    }

    let inertia = *trace.last().unwrap();
    Ok(KMeansRun {
        partition: Partition::new(assign, k)?,
        centroids,
        inertia,
        inertia_trace: trace,
    })
}

/// Best of `cfg.restarts` runs by inertia; ties go to the earliest restart.
pub fn kmeans_with<T: Scalar>(
    z: &DenseMatrix<T>,
    k: usize,
    cfg: &KMeansConfig,
    rng: &mut Rng,
) -> Result<KMeansRun> {
    let base = rng.next_u64();
    let mut best: Option<KMeansRun> = None;
    for r in 0..cfg.restarts.max(1) {
        let run = kmeans_single(z, k, cfg.max_iter, &mut Rng::substream(base, r as u64))?;
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

/// k-means with 10 restarts and at most 300 Lloyd iterations each.
pub fn kmeans<T: Scalar>(z: &DenseMatrix<T>, k: usize, rng: &mut Rng) -> Result<Partition> {
    Ok(kmeans_with(z, k, &KMeansConfig::default(), rng)?.partition)
}
