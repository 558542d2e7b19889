//! Planted-partition multiplex graphs.

use crate::error::{invalid, Result};
use crate::graph::{MultiplexGraph, SparseAdjacency};
use crate::numerics::{DenseMatrix, Rng, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct SbmConfig {
    pub n: usize,
    pub k: usize,
    pub v: usize,
    pub d_feat: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Standard deviation of the Gaussian noise added to block means.
    pub feature_noise: f64,
    /// Standard deviation of the block-mean entries.
    pub mean_scale: f64,
    /// Each layer merges one pair of blocks, so no single layer separates all of them.
    pub complementary: bool,
}

impl Default for SbmConfig {
    fn default() -> Self {
        Self {
            n: 300,
            k: 3,
            v: 2,
            d_feat: 16,
            p_in: 0.1,
            p_out: 0.01,
            feature_noise: 1.0,
            mean_scale: 1.0,
            complementary: true,
        }
    }
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n < self.k {
            return Err(invalid(format!(
                "need 1 <= k <= n, got k={} n={}",
                self.k, self.n
            )));
        }
        if self.v == 0 || self.d_feat == 0 {
            return Err(invalid("v and d_feat must be positive"));
        }
        if !(0.0 <= self.p_out && self.p_out < self.p_in && self.p_in <= 1.0) {
            return Err(invalid(format!(
                "need 0 <= p_out < p_in <= 1, got p_in={} p_out={}",
                self.p_in, self.p_out
            )));
        }
        if !(self.feature_noise >= 0.0 && self.mean_scale >= 0.0) {
            return Err(invalid("feature_noise and mean_scale must be nonnegative"));
        }
        Ok(())
    }

    /// Block of node `i`: blocks of size `n / k`, remainder in the last block.
    pub fn block_of(&self, i: usize) -> usize {
        (i / (self.n / self.k)).min(self.k - 1)
    }

    /// Block pair merged in layer `layer`, if any. Pairs `(a, b)` with `a < b`
    /// are enumerated lexicographically and dealt to layers round-robin.
    pub fn merged_pair(&self, layer: usize) -> Option<(usize, usize)> {
        if !self.complementary || self.k < 2 {
            return None;
        }
        let pairs: Vec<(usize, usize)> = (0..self.k)
            .flat_map(|a| (a + 1..self.k).map(move |b| (a, b)))
            .collect();
        Some(pairs[layer % pairs.len()])
    }

    fn connects(&self, layer: usize, a: usize, b: usize) -> bool {
        a == b
            || self
                .merged_pair(layer)
                .is_some_and(|(x, y)| (a.min(b), a.max(b)) == (x, y))
    }
}

#[derive(Clone, Debug)]
pub struct SbmGraph<T> {
    pub graph: MultiplexGraph<T>,
    /// Round-robin assignment table: the block pair merged in each layer.
    pub merged_pairs: Vec<Option<(usize, usize)>>,
    pub block_means: DenseMatrix<T>,
}

pub fn synth_multiplex_sbm<T: Scalar>(cfg: &SbmConfig, rng: &mut Rng) -> Result<SbmGraph<T>> {
    cfg.validate()?;
    let labels: Vec<usize> = (0..cfg.n).map(|i| cfg.block_of(i)).collect();

    let block_means = DenseMatrix::from_fn(cfg.k, cfg.d_feat, |_, _| {
        T::lit(cfg.mean_scale * rng.normal())
    });
    let features = DenseMatrix::from_fn(cfg.n, cfg.d_feat, |i, c| {
        block_means.get(labels[i], c) + T::lit(cfg.feature_noise * rng.normal())
    });

    let mut layers = Vec::with_capacity(cfg.v);
    for layer in 0..cfg.v {
        let mut edges = Vec::new();
        for i in 0..cfg.n {
            for j in i + 1..cfg.n {
                let p = if cfg.connects(layer, labels[i], labels[j]) {
                    cfg.p_in
                } else {
                    cfg.p_out
                };
                if rng.bernoulli(p) {
                    edges.push((i, j, T::one()));
                }
            }
        }
        layers.push(SparseAdjacency::from_edges(cfg.n, edges)?);
    }

    Ok(SbmGraph {
        graph: MultiplexGraph::new(features, layers, Some(labels))?,
        merged_pairs: (0..cfg.v).map(|l| cfg.merged_pair(l)).collect(),
        block_means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_sizes_put_remainder_last() {
        let cfg = SbmConfig {
            n: 11,
            k: 3,
            ..SbmConfig::default()
        };
        let counts = (0..11).fold([0; 3], |mut c, i| {
            c[cfg.block_of(i)] += 1;
            c
        });
        assert_eq!(counts, [3, 3, 5]);
    }

    #[test]
    fn no_cross_block_edges_without_p_out() {
        let cfg = SbmConfig {
            n: 60,
            p_out: 0.0,
            p_in: 0.3,
            complementary: false,
            ..SbmConfig::default()
        };
        let g = synth_multiplex_sbm::<f64>(&cfg, &mut Rng::new(4)).unwrap();
        let y = g.graph.labels().unwrap();
        for layer in g.graph.layers() {
            assert!(layer.nnz() > 0);
            assert!(layer.entries().all(|(i, j, _)| y[i] == y[j]));
        }
    }

    #[test]
    fn round_robin_table() {
        let cfg = SbmConfig::default();
        assert_eq!(cfg.merged_pair(0), Some((0, 1)));
        assert_eq!(cfg.merged_pair(1), Some((0, 2)));
        assert_eq!(cfg.merged_pair(3), Some((0, 1)));
        let plain = SbmConfig {
            complementary: false,
            ..cfg
        };
        assert_eq!(plain.merged_pair(0), None);
    }

    #[test]
    fn invalid_probabilities_rejected() {
        let cfg = SbmConfig {
            p_in: 0.1,
            p_out: 0.2,
            ..SbmConfig::default()
        };
        assert!(synth_multiplex_sbm::<f64>(&cfg, &mut Rng::new(0)).is_err());
    }
}
