use std::collections::BTreeMap;

use crate::error::{invalid, Result};
use crate::numerics::{DenseMatrix, Scalar};

/// Symmetric sparse adjacency without self-loops, stored in CSR form with
/// rows and columns sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseAdjacency<T> {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<T>,
}

impl<T: Scalar> SparseAdjacency<T> {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            offsets: vec![0; n + 1],
            targets: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Builds an undirected adjacency. Every edge is mirrored, self-loops are
    /// dropped and duplicates keep the largest weight.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (s, d, w) in edges {
            if s >= n || d >= n {
                return Err(invalid(format!(
                    "edge ({s}, {d}) out of range for {n} nodes"
                )));
            }
            if !(w >= T::zero()) || !w.is_finite() {
                return Err(invalid(format!("edge ({s}, {d}) has invalid weight {w}")));
            }
            if s == d {
                continue;
            }
            for key in [(s, d), (d, s)] {
                map.entry(key)
                    .and_modify(|old: &mut T| *old = old.max(w))
                    .or_insert(w);
            }
        }
        Ok(Self::from_sorted(
            n,
            map.into_iter().map(|((s, d), w)| (s, d, w)),
        ))
    }

    /// `entries` must be sorted by `(src, dst)`, symmetric and loop-free.
    pub(crate) fn from_sorted(
        n: usize,
        entries: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Self {
        let mut offsets = vec![0usize; n + 1];
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        for (s, d, w) in entries {
            offsets[s + 1] += 1;
            targets.push(d);
            weights.push(w);
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Self {
            n,
            offsets,
            targets,
            weights,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored directed entries (twice the undirected edge count).
    pub fn nnz(&self) -> usize {
        self.targets.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn neighbors(&self, i: usize) -> (&[usize], &[T]) {
        let range = self.offsets[i]..self.offsets[i + 1];
        (&self.targets[range.clone()], &self.weights[range])
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<T> {
        let (t, w) = self.neighbors(i);
        t.binary_search(&j).ok().map(|k| w[k])
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.weight(i, j).is_some()
    }

    /// All stored `(src, dst, weight)` triples in `(src, dst)` order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (t, w) = self.neighbors(i);
            t.iter().zip(w).map(move |(&j, &w)| (i, j, w))
        })
    }

    /// Each undirected edge once, as `(i, j, w)` with `i < j`.
    pub fn undirected_edges(&self) -> Vec<(usize, usize, T)> {
        self.entries().filter(|&(i, j, _)| i < j).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries().all(|(i, j, w)| self.weight(j, i) == Some(w))
    }

    /// Subgraph induced by `nodes`; node `nodes[k]` becomes `k`.
    pub fn induced(&self, nodes: &[usize]) -> Self {
        let mut remap = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            remap[v] = k;
        }
        let mut entries = Vec::new();
        for (k, &v) in nodes.iter().enumerate() {
            let (t, w) = self.neighbors(v);
            for (&j, &wt) in t.iter().zip(w) {
                if remap[j] != usize::MAX {
                    entries.push((k, remap[j], wt));
                }
            }
        }
        entries.sort_by_key(|&(s, d, _)| (s, d));
        Self::from_sorted(nodes.len(), entries)
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for (i, j, w) in self.entries() {
            m.set(i, j, w);
        }
        m
    }
}

/// Node features, one or more adjacency layers over the same nodes and
/// optional class labels.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplexGraph<T> {
    features: DenseMatrix<T>,
    layers: Vec<SparseAdjacency<T>>,
    labels: Option<Vec<usize>>,
}

/// Label-free view of a graph: everything training is allowed to see.
#[derive(Clone, Copy, Debug)]
pub struct GraphView<'a, T> {
    pub features: &'a DenseMatrix<T>,
    pub layers: &'a [SparseAdjacency<T>],
}

impl<T: Scalar> GraphView<'_, T> {
    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }
}

impl<T: Scalar> MultiplexGraph<T> {
    pub fn new(
        features: DenseMatrix<T>,
        layers: Vec<SparseAdjacency<T>>,
        labels: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = features.rows();
        if layers.is_empty() {
            return Err(invalid("a multiplex graph needs at least one layer"));
        }
        if features.cols() == 0 {
            return Err(invalid("feature dimension must be at least 1"));
        }
        if !features.is_finite() {
            return Err(invalid("features contain non-finite values"));
        }
        for (v, layer) in layers.iter().enumerate() {
            if layer.n() != n {
                return Err(invalid(format!(
                    "layer {v} has {} nodes but features have {n} rows",
                    layer.n()
                )));
            }
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(invalid(format!("{} labels for {n} nodes", l.len())));
            }
        }
        Ok(Self {
            features,
            layers,
            labels,
        })
    }

    pub fn features(&self) -> &DenseMatrix<T> {
        &self.features
    }

    pub fn layers(&self) -> &[SparseAdjacency<T>] {
        &self.layers
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().max())
            .map_or(0, |&m| m + 1)
    }

    pub fn view(&self) -> GraphView<'_, T> {
        GraphView {
            features: &self.features,
            layers: &self.layers,
        }
    }

    /// Replaces the layers, keeping features and labels.
    pub fn with_layers(&self, layers: Vec<SparseAdjacency<T>>) -> Result<Self> {
        Self::new(self.features.clone(), layers, self.labels.clone())
    }

    /// Subgraph induced by `nodes` across every layer.
    pub fn induced(&self, nodes: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(nodes),
            layers: self.layers.iter().map(|l| l.induced(nodes)).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| nodes.iter().map(|&i| l[i]).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrizes_and_collapses_duplicates() {
        let a =
            SparseAdjacency::<f64>::from_edges(3, [(0, 1, 1.0), (1, 0, 3.0), (2, 2, 1.0)]).unwrap();
        assert_eq!(
            a.entries().collect::<Vec<_>>(),
            vec![(0, 1, 3.0), (1, 0, 3.0)]
        );
        assert!(a.is_symmetric());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(SparseAdjacency::<f64>::from_edges(2, [(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn induced_reindexes() {
        let a =
            SparseAdjacency::<f64>::from_edges(4, [(0, 1, 1.0), (1, 3, 2.0), (2, 3, 1.0)]).unwrap();
        let s = a.induced(&[1, 3]);
        assert_eq!(
            s.entries().collect::<Vec<_>>(),
            vec![(0, 1, 2.0), (1, 0, 2.0)]
        );
    }

    #[test]
    fn graph_validates_layer_sizes() {
        let x = DenseMatrix::<f64>::zeros(3, 2);
        assert!(MultiplexGraph::new(x.clone(), vec![SparseAdjacency::empty(4)], None).is_err());
        assert!(MultiplexGraph::new(x.clone(), vec![], None).is_err());
        assert!(MultiplexGraph::new(x, vec![SparseAdjacency::empty(3)], Some(vec![0, 1])).is_err());
    }
}
