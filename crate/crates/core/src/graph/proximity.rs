use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error};
use crate::graph::SparseAdjacency;
use crate::numerics::{DenseMatrix, Scalar};

/// Which neighborhood the proximity matrix encodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProximityMode {
    /// `W = A`.
    OneHop,
    /// `W = A Aᵀ`.
    #[default]
    TwoHop,
    /// `W = A + A Aᵀ`.
    Combined,
}

impl fmt::Display for ProximityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::OneHop => "one_hop",
            Self::TwoHop => "two_hop",
            Self::Combined => "combined",
        })
    }
}

impl FromStr for ProximityMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one_hop" => Ok(Self::OneHop),
            "two_hop" => Ok(Self::TwoHop),
            "combined" => Ok(Self::Combined),
            other => Err(invalid(format!(
                "unknown proximity mode {other:?} (expected one_hop, two_hop or combined)"
            ))),
        }
    }
}

/// Sparse nonnegative proximity weights with an empty diagonal. Only strictly
/// positive weights are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct ProximityMatrix<T> {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<T>,
}

impl<T: Scalar> ProximityMatrix<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.targets.len()
    }

    /// Neighbors `j` of `i` with `w_ij > 0`, and their weights.
    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.targets[r.clone()], &self.weights[r])
    }

    pub fn row_support(&self, i: usize) -> &[usize] {
        self.row(i).0
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        let (t, w) = self.row(i);
        t.binary_search(&j).map_or(T::zero(), |k| w[k])
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (t, w) = self.row(i);
            t.iter().zip(w).map(move |(&j, &w)| (i, j, w))
        })
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries().all(|(i, j, w)| self.weight(j, i) == w)
    }

    /// Builds from a dense matrix, ignoring the diagonal and non-positive entries.
    pub fn from_dense(m: &DenseMatrix<T>) -> Self {
        assert_eq!(m.rows(), m.cols(), "proximity matrix must be square");
        let n = m.rows();
        let mut offsets = vec![0; n + 1];
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let w = m.get(i, j);
                if i != j && w > T::zero() {
                    targets.push(j);
                    weights.push(w);
                }
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

    pub fn to_dense(&self) -> DenseMatrix<T> {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for (i, j, w) in self.entries() {
            m.set(i, j, w);
        }
        m
    }
}

/// Proximity weights from an adjacency layer. Two-hop weights are walk counts
/// (weighted by edge weights); the diagonal is always dropped.
pub fn high_order<T: Scalar>(a: &SparseAdjacency<T>, mode: ProximityMode) -> ProximityMatrix<T> {
    let n = a.n();
    let mut acc = vec![T::zero(); n];
    let mut touched: Vec<usize> = Vec::new();
    let mut offsets = vec![0; n + 1];
    let mut targets = Vec::new();
    let mut weights = Vec::new();

    for i in 0..n {
        let (ni, wi) = a.neighbors(i);
        let bump = |j: usize, w: T, acc: &mut Vec<T>, touched: &mut Vec<usize>| {
            if acc[j] == T::zero() {
                touched.push(j);
            }
            acc[j] += w;
        };
        if matches!(mode, ProximityMode::OneHop | ProximityMode::Combined) {
            for (&j, &w) in ni.iter().zip(wi) {
                bump(j, w, &mut acc, &mut touched);
            }
        }
        if matches!(mode, ProximityMode::TwoHop | ProximityMode::Combined) {
            for (&k, &w_ik) in ni.iter().zip(wi) {
                let (nk, wk) = a.neighbors(k);
                for (&j, &w_kj) in nk.iter().zip(wk) {
                    bump(j, w_ik * w_kj, &mut acc, &mut touched);
                }
            }
        }
        touched.sort_unstable();
        for &j in &touched {
            if j != i && acc[j] > T::zero() {
                targets.push(j);
                weights.push(acc[j]);
            }
            acc[j] = T::zero();
        }
        touched.clear();
        offsets[i + 1] = targets.len();
    }

    ProximityMatrix {
        n,
        offsets,
        targets,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> SparseAdjacency<f64> {
        SparseAdjacency::from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap()
    }

    #[test]
    fn zero_adjacency_gives_zero_proximity() {
        let w = high_order(&SparseAdjacency::<f64>::empty(4), ProximityMode::TwoHop);
        assert_eq!(w.nnz(), 0);
    }

    #[test]
    fn path_graph_two_hop() {
        let a = path3();
        let dense = a.to_dense();
        let mut want = dense.matmul_nt(&dense).unwrap();
        assert_eq!(
            want.as_slice(),
            &[1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 1.0, 0.0, 1.0]
        );
        for i in 0..3 {
            want.set(i, i, 0.0);
        }
        let w = high_order(&a, ProximityMode::TwoHop);
        assert_eq!(w.to_dense(), want);
        assert!(w.row_support(1).is_empty());
        assert_eq!(w.weight(0, 2), 1.0);
    }

    #[test]
    fn one_hop_and_combined() {
        let a = path3();
        assert_eq!(
            high_order(&a, ProximityMode::OneHop).to_dense(),
            a.to_dense()
        );
        let c = high_order(&a, ProximityMode::Combined);
        assert_eq!(c.row_support(1), &[0, 2]);
        assert_eq!(c.weight(0, 2), 1.0);
        assert_eq!(c.weight(0, 1), 1.0);
    }

    #[test]
    fn mode_parses() {
        assert_eq!(
            "combined".parse::<ProximityMode>().unwrap(),
            ProximityMode::Combined
        );
        assert!("three_hop".parse::<ProximityMode>().is_err());
    }
}
