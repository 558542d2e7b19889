use crate::error::{invalid, Error, Result};
use crate::numerics::{standardize_with_stats, DenseMatrix, Scalar};

/// Correlation loss terms across views, plus the gradient of
/// `invariance + gamma * decorrelation` for every view.
#[derive(Clone, Debug)]
pub struct CcaOutput<T> {
    /// `-Σ_{a<b} tr(Ẑᵃᵀ Ẑᵇ)`.
    pub invariance: T,
    /// `Σ_v ‖Ẑᵛᵀ Ẑᵛ - I‖_F²`.
    pub decorrelation: T,
    pub grads: Vec<DenseMatrix<T>>,
}

/// Cross-view correlation and within-view decorrelation on column-standardized
/// embeddings. Gradients flow through the standardization.
pub fn cca_loss<T: Scalar>(zs: &[DenseMatrix<T>], gamma: T) -> Result<CcaOutput<T>> {
    let first = zs
        .first()
        .ok_or_else(|| invalid("cca_loss needs at least one view"))?;
    let shape = first.shape();
    for z in zs {
        if z.shape() != shape {
            return Err(Error::ShapeMismatch {
                op: "cca_loss",
                left: shape,
                right: z.shape(),
            });
        }
    }
    let d = shape.1;
    let stats = zs
        .iter()
        .map(standardize_with_stats)
        .collect::<Result<Vec<_>>>()?;

    let mut invariance = T::zero();
    for a in 0..stats.len() {
        for b in a + 1..stats.len() {
            invariance -= stats[a]
                .z
                .as_slice()
                .iter()
                .zip(stats[b].z.as_slice())
                .map(|(&x, &y)| x * y)
                .sum::<T>();
        }
    }

    let mut sum_views = DenseMatrix::zeros(shape.0, d);
    for s in &stats {
        sum_views.axpy(T::one(), &s.z)?;
    }

    let four_gamma = T::lit(4.0) * gamma;
    let mut decorrelation = T::zero();
    let mut grads = Vec::with_capacity(zs.len());
    for s in &stats {
        let mut c = s.z.matmul_tn(&s.z)?;
        for k in 0..d {
            c.set(k, k, c.get(k, k) - T::one());
        }
        decorrelation += c.as_slice().iter().map(|&v| v * v).sum::<T>();
        // d/dẐ of -Σ_{b≠a} ⟨Ẑ, Ẑᵇ⟩ + γ‖ẐᵀẐ - I‖²
        let mut g = s.z.matmul(&c)?.scale(four_gamma);
        g.axpy(T::one(), &s.z)?;
        g.axpy(-T::one(), &sum_views)?;
        grads.push(s.backward(&g));
    }

    Ok(CcaOutput {
        invariance,
        decorrelation,
        grads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Columns of a 4x2 matrix that are centered, unit-norm and orthogonal.
    fn whitened() -> DenseMatrix<f64> {
        DenseMatrix::from_rows(&[[0.5, 0.5], [0.5, -0.5], [-0.5, 0.5], [-0.5, -0.5]]).unwrap()
    }

    #[test]
    fn identical_whitened_views() {
        let z = whitened();
        let out = cca_loss(&[z.clone(), z], 1.0).unwrap();
        assert!((out.invariance + 2.0).abs() < 1e-12);
        assert!(out.decorrelation.abs() < 1e-12);
    }

    #[test]
    fn single_view_has_no_invariance() {
        let z = DenseMatrix::from_fn(5, 3, |r, c| ((r * 3 + c) as f64).sin());
        let out = cca_loss(&[z], 0.5).unwrap();
        assert_eq!(out.invariance, 0.0);
        assert!(out.decorrelation > 0.0);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        assert!(cca_loss::<f64>(&[], 1.0).is_err());
        let a = DenseMatrix::<f64>::zeros(4, 2);
        let b = DenseMatrix::<f64>::zeros(4, 3);
        assert!(cca_loss(&[a, b], 1.0).is_err());
        assert!(cca_loss(&[DenseMatrix::<f64>::zeros(1, 2)], 1.0).is_err());
    }
}
