use crate::error::{invalid, Result};
use crate::graph::ProximityMatrix;
use crate::numerics::{DenseMatrix, Scalar, EPS_NORM};

/// Local-structure loss of one layer and its gradient.
///
/// For every node `i` with proximity support, the row-normalized weights
/// `ŵ_ij` weight the negative log of the softmax `exp(cos(z_i, z_j)) /
/// Σ_{k≠i} exp(cos(z_i, z_k))`. Nodes without support contribute nothing.
pub fn lp_loss<T: Scalar>(
    z: &DenseMatrix<T>,
    w: &ProximityMatrix<T>,
) -> Result<(T, DenseMatrix<T>)> {
    let (n, d) = z.shape();
    if n < 2 {
        return Err(invalid(format!("lp_loss needs at least 2 nodes, got {n}")));
    }
    if w.n() != n {
        return Err(invalid(format!(
            "proximity matrix has {} nodes, embeddings have {n}",
            w.n()
        )));
    }
    if d == 0 {
        return Err(invalid("lp_loss needs embedding dimension >= 1"));
    }
    if w.nnz() == 0 {
        return Ok((T::zero(), DenseMatrix::zeros(n, d)));
    }

    let eps = T::lit(EPS_NORM);
    let norms: Vec<T> = (0..n)
        .map(|i| z.row(i).iter().map(|&v| v * v).sum::<T>().sqrt())
        .collect();
    let unit = DenseMatrix::from_fn(n, d, |i, c| {
        if norms[i] < eps {
            T::zero()
        } else {
            z.get(i, c) / norms[i]
        }
    });
    let cos = unit.matmul_nt(&unit)?;

    // g[i][k] = dL/dcos_ik for the row-i term.
    let mut g = DenseMatrix::zeros(n, n);
    let mut value = T::zero();
    for i in 0..n {
        let (support, weights) = w.row(i);
        if support.is_empty() {
            continue;
        }
        let total: T = weights.iter().copied().sum();
        let crow = cos.row(i);
        let grow = g.row_mut(i);
        let mut denom = T::zero();
        for (k, (&c, gk)) in crow.iter().zip(grow.iter_mut()).enumerate() {
            if k != i {
                let e = c.max(-T::one()).min(T::one()).exp();
                *gk = e;
                denom += e;
            }
        }
        let inv = denom.recip();
        for gk in grow.iter_mut() {
            *gk *= inv;
        }
        let log_denom = denom.ln();
        for (&j, &wij) in support.iter().zip(weights) {
            let wh = wij / total;
            let c = crow[j].max(-T::one()).min(T::one());
            // The denominator contains this pair's own term, so the
            // difference is nonnegative up to rounding.
            value += wh * (log_denom - c).max(T::zero());
            grow[j] -= wh;
        }
    }

    // Symmetrize in place: the gradient through cos_ik reaches both rows.
    let gs = g.as_mut_slice();
    for i in 0..n {
        for k in i + 1..n {
            let s = gs[i * n + k] + gs[k * n + i];
            gs[i * n + k] = s;
            gs[k * n + i] = s;
        }
        gs[i * n + i] += gs[i * n + i];
    }
    let d_unit = g.matmul(&unit)?;
    let mut dz = DenseMatrix::zeros(n, d);
    for i in 0..n {
        if norms[i] < eps {
            continue;
        }
        let u = unit.row(i);
        let du = d_unit.row(i);
        let proj: T = u.iter().zip(du).map(|(&a, &b)| a * b).sum();
        for (c, out) in dz.row_mut(i).iter_mut().enumerate() {
            *out = (du[c] - u[c] * proj) / norms[i];
        }
    }
    Ok((value, dz))
}
