//! Training objectives: the local-structure loss, the CCA loss and their
//! weighted combination.

mod cca;
mod lp;

pub use cca::{cca_loss, CcaOutput};
pub use lp::lp_loss;

use crate::error::{Error, Result};
use crate::numerics::Scalar;

/// Per-epoch loss breakdown.
///
/// `total = Σ lp_per_layer + beta * (cca_invariance + gamma * cca_decorrelation)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossReport<T> {
    pub lp_per_layer: Vec<T>,
    pub cca_invariance: T,
    pub cca_decorrelation: T,
    pub total: T,
    pub beta: T,
    pub gamma: T,
}

impl<T: Scalar> LossReport<T> {
    pub fn lp_sum(&self) -> T {
        self.lp_per_layer.iter().copied().sum()
    }

    pub fn cca(&self) -> T {
        self.cca_invariance + self.gamma * self.cca_decorrelation
    }
}

/// Combines per-layer LP losses and the CCA terms.
pub fn total_loss<T: Scalar>(
    lp: &[T],
    invariance: T,
    decorrelation: T,
    beta: T,
    gamma: T,
) -> Result<LossReport<T>> {
    let named = [
        ("cca_invariance", invariance),
        ("cca_decorrelation", decorrelation),
        ("beta", beta),
        ("gamma", gamma),
    ];
    for (v, &l) in lp.iter().enumerate() {
        if !l.is_finite() {
            return Err(Error::NonFinite(format!("lp loss of layer {v}")));
        }
    }
    for (name, value) in named {
        if !value.is_finite() {
            return Err(Error::NonFinite(name.into()));
        }
    }
    let lp_sum: T = lp.iter().copied().sum();
    Ok(LossReport {
        lp_per_layer: lp.to_vec(),
        cca_invariance: invariance,
        cca_decorrelation: decorrelation,
        total: lp_sum + beta * (invariance + gamma * decorrelation),
        beta,
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_arithmetic() {
        let r = total_loss::<f64>(&[1.0, 2.0], -3.0, 0.5, 1.0, 2.0).unwrap();
        assert!((r.total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_beta_is_lp_sum() {
        let r = total_loss(&[1.5, 0.25], -7.0, 3.0, 0.0, 1.0).unwrap();
        assert_eq!(r.total, 1.75);
    }

    #[test]
    fn linear_in_beta() {
        let t = |b: f64| total_loss(&[0.7, 1.1], -2.5, 0.9, b, 0.3).unwrap().total;
        let lhs = t(2.0 * 0.8) - t(0.0);
        let rhs = 2.0 * (t(0.8) - t(0.0));
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(total_loss(&[f64::NAN], 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(total_loss(&[0.0], f64::INFINITY, 0.0, 1.0, 1.0).is_err());
    }
}
