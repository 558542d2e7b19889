//! Message-passing baseline encoder.

use crate::error::Result;
use crate::graph::SparseAdjacency;
use crate::model::mlp::{ForwardCache, MlpEncoder, MlpGradients};
use crate::numerics::{DenseMatrix, Scalar};

/// Symmetrically normalized propagation matrix `D̃^{-1/2} (A + I) D̃^{-1/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Propagation<T> {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<T>,
}

impl<T: Scalar> Propagation<T> {
    pub fn from_adjacency(a: &SparseAdjacency<T>) -> Self {
        let n = a.n();
        let degree: Vec<T> = (0..n)
            .map(|i| T::one() + a.neighbors(i).1.iter().copied().sum::<T>())
            .collect();
        let inv_sqrt: Vec<T> = degree.iter().map(|d| d.sqrt().recip()).collect();
        let mut offsets = vec![0; n + 1];
        let mut targets = Vec::with_capacity(a.nnz() + n);
        let mut weights = Vec::with_capacity(a.nnz() + n);
        for i in 0..n {
            let (t, w) = a.neighbors(i);
            let mut self_done = false;
            for (&j, &wt) in t.iter().zip(w) {
                if !self_done && j > i {
                    targets.push(i);
                    weights.push(inv_sqrt[i] * inv_sqrt[i]);
                    self_done = true;
                }
                targets.push(j);
                weights.push(inv_sqrt[i] * wt * inv_sqrt[j]);
            }
            if !self_done {
                targets.push(i);
                weights.push(inv_sqrt[i] * inv_sqrt[i]);
            }
            offsets[i + 1] = targets.len();
        }
        Self {
            n,
            offsets,
            targets,
            weights,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `Â · m`.
    pub fn apply(&self, m: &DenseMatrix<T>) -> DenseMatrix<T> {
        assert_eq!(m.rows(), self.n, "propagation: row count");
        let mut out = DenseMatrix::zeros(self.n, m.cols());
        for i in 0..self.n {
            let range = self.offsets[i]..self.offsets[i + 1];
            let row = out.row_mut(i);
            for (&j, &w) in self.targets[range.clone()].iter().zip(&self.weights[range]) {
                for (o, &v) in row.iter_mut().zip(m.row(j)) {
                    *o += w * v;
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for k in self.offsets[i]..self.offsets[i + 1] {
                m.set(i, self.targets[k], self.weights[k]);
            }
        }
        m
    }
}

/// GCN encoder: the MLP parameter layout, with every layer computing
/// `act(Â H W + b)` (last layer linear).
#[derive(Clone, Debug)]
pub struct GcnEncoder<T> {
    pub params: MlpEncoder<T>,
    pub propagation: Propagation<T>,
}

impl<T: Scalar> GcnEncoder<T> {
    pub fn new(params: MlpEncoder<T>, adjacency: &SparseAdjacency<T>) -> Self {
        Self {
            params,
            propagation: Propagation::from_adjacency(adjacency),
        }
    }

    pub fn forward(&self, x: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, ForwardCache<T>)> {
        self.params.forward_with(x, Some(&self.propagation))
    }

    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        dz: &DenseMatrix<T>,
    ) -> Result<MlpGradients<T>> {
        self.params
            .backward_with(cache, dz, Some(&self.propagation))
    }
}

/// Forward pass of a GCN encoder.
pub fn gcn_forward<T: Scalar>(
    enc: &GcnEncoder<T>,
    x: &DenseMatrix<T>,
) -> Result<(DenseMatrix<T>, ForwardCache<T>)> {
    enc.forward(x)
}
