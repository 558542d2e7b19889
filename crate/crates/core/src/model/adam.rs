use crate::error::{invalid, Error, Result};
use crate::numerics::Scalar;

/// Adam moments for a list of parameter blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub t: u64,
    names: Vec<String>,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    /// Fresh state for blocks of the given lengths (β₁ = 0.9, β₂ = 0.999, ε = 1e-8).
    pub fn new(lr: f64, names: Vec<String>, lens: &[usize]) -> Self {
        assert_eq!(names.len(), lens.len());
        Self {
            lr: T::lit(lr),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            eps: T::lit(1e-8),
            t: 0,
            names,
            m: lens.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: lens.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }
}

/// One bias-corrected Adam update. Parameters are untouched on error.
pub fn adam_step<T: Scalar>(
    params: &mut [&mut [T]],
    grads: &[&[T]],
    state: &mut AdamState<T>,
) -> Result<()> {
    if params.len() != state.m.len() || grads.len() != state.m.len() {
        return Err(invalid(format!(
            "adam: {} parameter blocks, {} gradient blocks, state has {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (k, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[k].len() {
            return Err(invalid(format!(
                "adam: block {} has mismatched lengths",
                state.names[k]
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "gradient block {}",
                state.names[k]
            )));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = T::one() - state.beta1.powi(t);
    let c2 = T::one() - state.beta2.powi(t);
    let (b1, b2) = (state.beta1, state.beta2);
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.m[k];
        let v = &mut state.v[k];
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (T::one() - b1) * g[i];
            v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(n: usize) -> AdamState<f64> {
        AdamState::new(0.01, vec!["w".into()], &[n])
    }

    #[test]
    fn zero_gradient_is_noop() {
        let mut p = vec![1.0, -2.0, 3.0];
        let mut s = state(3);
        adam_step(&mut [&mut p[..]], &[&[0.0; 3][..]], &mut s).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_is_signed_lr() {
        let mut p = vec![0.0; 3];
        let g = [0.5, -2.0, 1e-3];
        let mut s = state(3);
        adam_step(&mut [&mut p[..]], &[&g[..]], &mut s).unwrap();
        for (pi, gi) in p.iter().zip(g) {
            let want = -0.01 * gi / (gi.abs() + 1e-8);
            assert!((pi - want).abs() < 1e-15, "{pi} vs {want}");
        }
    }

    #[test]
    fn replay_is_deterministic() {
        let run = || {
            let mut p = vec![0.3, 0.1];
            let mut s = state(2);
            for g in [[0.2, -0.1], [0.05, 0.4]] {
                adam_step(&mut [&mut p[..]], &[&g[..]], &mut s).unwrap();
            }
            (p, s)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_names_block() {
        let mut p = vec![0.0; 2];
        let mut s = state(2);
        let err = adam_step(&mut [&mut p[..]], &[&[1.0, f64::NAN][..]], &mut s).unwrap_err();
        assert!(err.to_string().contains("w"));
        assert_eq!(s.t, 0);
    }
}
