use std::collections::HashSet;

use crate::error::{invalid, Result};
use crate::graph::{MultiplexGraph, SparseAdjacency};
use crate::numerics::{Rng, Scalar};

/// Replaces `ceil(eta * |E|)` undirected edges with uniformly random new edges
/// that were not in the original graph. Edge count and symmetry are preserved;
/// each inserted edge takes the weight of one removed edge.
pub fn inject_noise<T: Scalar>(
    a: &SparseAdjacency<T>,
    eta: f64,
    rng: &mut Rng,
) -> Result<SparseAdjacency<T>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid(format!("noise ratio {eta} outside [0, 1]")));
    }
    let edges = a.undirected_edges();
    let m = edges.len();
    if eta > 0.0 && m == 0 {
        return Err(invalid("cannot inject noise into a layer without edges"));
    }
    let replace = ((eta * m as f64) - 1e-9).ceil().max(0.0) as usize;
    if replace == 0 {
        return Ok(a.clone());
    }
    let n = a.n();
    let capacity = n * n.saturating_sub(1) / 2 - m;
    if capacity < replace {
        return Err(invalid(format!(
            "only {capacity} free node pairs for {replace} noisy edges"
        )));
    }

    let removed = rng.sample_indices(m, replace);
    let mut drop = vec![false; m];
    for &k in &removed {
        drop[k] = true;
    }

    let mut added: Vec<(usize, usize)> = Vec::with_capacity(replace);
    if replace * 2 > capacity {
        let mut free = Vec::with_capacity(capacity);
        for i in 0..n {
            for j in i + 1..n {
                if !a.contains(i, j) {
                    free.push((i, j));
                }
            }
        }
        for k in rng.sample_indices(free.len(), replace) {
            added.push(free[k]);
        }
    } else {
        let mut taken = HashSet::with_capacity(replace);
        while added.len() < replace {
            let i = rng.below(n);
            let j = rng.below(n);
            if i == j {
                continue;
            }
            let key = (i.min(j), i.max(j));
            if a.contains(key.0, key.1) || !taken.insert(key) {
                continue;
            }
            added.push(key);
        }
    }

    let kept = edges
        .iter()
        .enumerate()
        .filter(|(k, _)| !drop[*k])
        .map(|(_, &e)| e);
    let inserted = added
        .iter()
        .zip(&removed)
        .map(|(&(i, j), &k)| (i, j, edges[k].2));
    SparseAdjacency::from_edges(n, kept.chain(inserted))
}

/// Applies [`inject_noise`] to every layer, using RNG substream `v` of `seed`
/// for layer `v`.
pub fn inject_noise_multiplex<T: Scalar>(
    g: &MultiplexGraph<T>,
    eta: f64,
    seed: u64,
) -> Result<MultiplexGraph<T>> {
    let layers = g
        .layers()
        .iter()
        .enumerate()
        .map(|(v, layer)| inject_noise(layer, eta, &mut Rng::substream(seed, v as u64)))
        .collect::<Result<Vec<_>>>()?;
    g.with_layers(layers)
}
