//! Dense kernels, vector similarity, column standardization and the seeded RNG.

mod matrix;
mod rng;
mod scalar;

pub(crate) use matrix::{dot, norm};
pub use matrix::{matmul, DenseMatrix};
pub use rng::{rng_uniform, Rng};
pub use scalar::{naive_gemm, Scalar, Strided};

use crate::error::{invalid, Result};

/// Norms below this are treated as zero vectors.
pub const EPS_NORM: f64 = 1e-12;
/// Floor applied to population standard deviations.
pub const EPS_STD: f64 = 1e-8;

/// Cosine of the angle between `u` and `v`, clamped to `[-1, 1]`.
///
/// Returns 0 when either vector has norm below [`EPS_NORM`].
pub fn cosine_similarity<T: Scalar>(u: &[T], v: &[T]) -> T {
    assert_eq!(u.len(), v.len(), "cosine_similarity: length mismatch");
    let nu = norm(u);
    let nv = norm(v);
    let eps = T::lit(EPS_NORM);
    if nu < eps || nv < eps {
        return T::zero();
    }
    let c = dot(u, v) / (nu * nv);
    c.max(-T::one()).min(T::one())
}

/// Column standardization together with the statistics needed to backpropagate
/// through it.
#[derive(Clone, Debug)]
pub struct Standardized<T> {
    /// Standardized matrix; every non-constant column has zero sum and unit norm.
    pub z: DenseMatrix<T>,
    pub mean: Vec<T>,
    /// Per-column divisor `max(popstd, EPS_STD) * sqrt(rows)`.
    pub scale: Vec<T>,
    /// Whether the floor was active for the column (divisor is then constant).
    pub floored: Vec<bool>,
}

impl<T: Scalar> Standardized<T> {
    /// Maps a gradient with respect to the standardized output back onto the
    /// input, treating mean and standard deviation as functions of the input.
    pub fn backward(&self, grad: &DenseMatrix<T>) -> DenseMatrix<T> {
        let (rows, cols) = self.z.shape();
        assert_eq!(grad.shape(), (rows, cols), "standardize backward: shape");
        let n = T::lit(rows as f64);
        let mut out = DenseMatrix::zeros(rows, cols);
        for c in 0..cols {
            let mut g_mean = T::zero();
            let mut g_dot_u = T::zero();
            for r in 0..rows {
                let g = grad.get(r, c);
                g_mean += g;
                g_dot_u += g * self.z.get(r, c);
            }
            g_mean /= n;
            let s = self.scale[c];
            for r in 0..rows {
                let mut g = grad.get(r, c) - g_mean;
                if !self.floored[c] {
                    g -= self.z.get(r, c) * g_dot_u;
                }
                out.set(r, c, g / s);
            }
        }
        out
    }
}

/// Centers each column and divides by `popstd * sqrt(rows)`, so `Ẑᵀ Ẑ` is the
/// column correlation matrix.
pub fn standardize_columns<T: Scalar>(z: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    Ok(standardize_with_stats(z)?.z)
}

pub fn standardize_with_stats<T: Scalar>(z: &DenseMatrix<T>) -> Result<Standardized<T>> {
    let (rows, cols) = z.shape();
    if rows < 2 {
        return Err(invalid(format!(
            "standardize_columns needs at least 2 rows, got {rows}"
        )));
    }
    let n = T::lit(rows as f64);
    let eps = T::lit(EPS_STD);
    let mean: Vec<T> = z.column_sums().into_iter().map(|s| s / n).collect();
    let mut var = vec![T::zero(); cols];
    for r in 0..rows {
        for (c, v) in var.iter_mut().enumerate() {
            let d = z.get(r, c) - mean[c];
            *v += d * d;
        }
    }
    let mut scale = Vec::with_capacity(cols);
    let mut floored = Vec::with_capacity(cols);
    for v in var {
        let sd = (v / n).sqrt();
        floored.push(sd < eps);
        scale.push(sd.max(eps) * n.sqrt());
    }
    let out = DenseMatrix::from_fn(rows, cols, |r, c| (z.get(r, c) - mean[c]) / scale[c]);
    Ok(Standardized {
        z: out,
        mean,
        scale,
        floored,
    })
}
