use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{invalid, Error, Result};
use crate::model::gcn::Propagation;
use crate::numerics::{DenseMatrix, Rng, Scalar};

static NEXT_ENCODER_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_ENCODER_ID.fetch_add(1, Ordering::Relaxed)
}

/// Fully connected encoder: `tanh` on hidden layers, linear output layer.
///
/// Every encoder owns its parameters; cloning produces an independent copy
/// with its own identity, so caches from one never validate against another.
#[derive(Debug)]
pub struct MlpEncoder<T> {
    id: u64,
    version: u64,
    dims: Vec<usize>,
    weights: Vec<DenseMatrix<T>>,
    biases: Vec<Vec<T>>,
}

impl<T: Clone> Clone for MlpEncoder<T> {
    fn clone(&self) -> Self {
        Self {
            id: fresh_id(),
            version: 0,
            dims: self.dims.clone(),
            weights: self.weights.clone(),
            biases: self.biases.clone(),
        }
    }
}

impl<T: Scalar> PartialEq for MlpEncoder<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.weights == other.weights && self.biases == other.biases
    }
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    encoder_id: u64,
    version: u64,
    pub input: DenseMatrix<T>,
    /// Pre-activation of each layer.
    pub pre: Vec<DenseMatrix<T>>,
    /// Output of each layer; the last one is the embedding.
    pub post: Vec<DenseMatrix<T>>,
}

/// Parameter gradients plus the gradient with respect to the input.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGradients<T> {
    pub d_weights: Vec<DenseMatrix<T>>,
    pub d_biases: Vec<Vec<T>>,
    pub d_input: DenseMatrix<T>,
}

impl<T: Scalar> MlpGradients<T> {
    /// Flat views in the same order as [`MlpEncoder::params`].
    pub fn blocks(&self) -> Vec<&[T]> {
        self.d_weights
            .iter()
            .zip(&self.d_biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    pub fn scale(&mut self, s: T) {
        for w in &mut self.d_weights {
            w.as_mut_slice().iter_mut().for_each(|v| *v *= s);
        }
        for b in &mut self.d_biases {
            b.iter_mut().for_each(|v| *v *= s);
        }
        self.d_input.as_mut_slice().iter_mut().for_each(|v| *v *= s);
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(invalid(format!(
            "encoder needs at least 2 dims, got {dims:?}"
        )));
    }
    if dims.contains(&0) {
        return Err(invalid(format!(
            "encoder dims must be positive, got {dims:?}"
        )));
    }
    Ok(())
}

/// Glorot-uniform weights, zero biases.
pub fn mlp_init<T: Scalar>(dims: &[usize], rng: &mut Rng) -> Result<MlpEncoder<T>> {
    check_dims(dims)?;
    let mut weights = Vec::with_capacity(dims.len() - 1);
    let mut biases = Vec::with_capacity(dims.len() - 1);
    for pair in dims.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        weights.push(DenseMatrix::from_fn(fan_in, fan_out, |_, _| {
            T::lit(rng.uniform_in(-bound, bound))
        }));
        biases.push(vec![T::zero(); fan_out]);
    }
    Ok(MlpEncoder {
        id: fresh_id(),
        version: 0,
        dims: dims.to_vec(),
        weights,
        biases,
    })
}

impl<T: Scalar> MlpEncoder<T> {
    pub fn from_parts(weights: Vec<DenseMatrix<T>>, biases: Vec<Vec<T>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(invalid("need one bias vector per weight matrix"));
        }
        let mut dims = vec![weights[0].rows()];
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.rows() != *dims.last().unwrap() || b.len() != w.cols() {
                return Err(invalid(format!(
                    "layer {l} does not chain with the previous one"
                )));
            }
            dims.push(w.cols());
        }
        check_dims(&dims)?;
        Ok(Self {
            id: fresh_id(),
            version: 0,
            dims,
            weights,
            biases,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[DenseMatrix<T>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Vec<T>] {
        &self.biases
    }

    /// Parameter blocks in order `W0, b0, W1, b1, ...`.
    pub fn params(&self) -> Vec<&[T]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
            .collect()
    }

    /// Mutable parameter blocks. Invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        self.version += 1;
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    pub fn block_names(&self) -> Vec<String> {
        (0..self.weights.len())
            .flat_map(|l| [format!("W{l}"), format!("b{l}")])
            .collect()
    }

    pub fn forward(&self, x: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, ForwardCache<T>)> {
        self.forward_with(x, None)
    }

    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        dz: &DenseMatrix<T>,
    ) -> Result<MlpGradients<T>> {
        self.backward_with(cache, dz, None)
    }

    /// Forward pass; with `prop`, each layer aggregates `Â · (H W)` before the bias.
    pub(crate) fn forward_with(
        &self,
        x: &DenseMatrix<T>,
        prop: Option<&Propagation<T>>,
    ) -> Result<(DenseMatrix<T>, ForwardCache<T>)> {
        if x.cols() != self.dims[0] {
            return Err(Error::ShapeMismatch {
                op: "encoder forward",
                left: x.shape(),
                right: (self.dims[0], self.output_dim()),
            });
        }
        if let Some(p) = prop {
            if p.n() != x.rows() {
                return Err(invalid(format!(
                    "propagation matrix is {0}x{0} but input has {1} rows",
                    p.n(),
                    x.rows()
                )));
            }
        }
        let last = self.weights.len() - 1;
        let mut pre = Vec::with_capacity(self.weights.len());
        let mut post: Vec<DenseMatrix<T>> = Vec::with_capacity(self.weights.len());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let h = if l == 0 { x } else { &post[l - 1] };
            let mut a = h.matmul(w)?;
            if let Some(p) = prop {
                a = p.apply(&a);
            }
            for r in 0..a.rows() {
                for (v, &bias) in a.row_mut(r).iter_mut().zip(b) {
                    *v += bias;
                }
            }
            let out = if l == last {
                a.clone()
            } else {
                a.map(|v| v.tanh())
            };
            pre.push(a);
            post.push(out);
        }
        let z = post[last].clone();
        Ok((
            z,
            ForwardCache {
                encoder_id: self.id,
                version: self.version,
                input: x.clone(),
                pre,
                post,
            },
        ))
    }

    pub(crate) fn backward_with(
        &self,
        cache: &ForwardCache<T>,
        dz: &DenseMatrix<T>,
        prop: Option<&Propagation<T>>,
    ) -> Result<MlpGradients<T>> {
        if cache.encoder_id != self.id || cache.version != self.version {
            return Err(Error::StaleCache(
                "cache was produced by a different encoder or before a parameter update".into(),
            ));
        }
        let last = self.weights.len() - 1;
        if dz.shape() != cache.post[last].shape() {
            return Err(Error::ShapeMismatch {
                op: "encoder backward",
                left: dz.shape(),
                right: cache.post[last].shape(),
            });
        }
        let mut d_weights = vec![DenseMatrix::zeros(0, 0); self.weights.len()];
        let mut d_biases = vec![Vec::new(); self.weights.len()];
        let mut delta = dz.clone();
        for l in (0..=last).rev() {
            if l < last {
                let h = &cache.post[l];
                for (d, &y) in delta.as_mut_slice().iter_mut().zip(h.as_slice()) {
                    *d *= T::one() - y * y;
                }
            }
            d_biases[l] = delta.column_sums();
            let dp = match prop {
                Some(p) => p.apply(&delta),
                None => delta,
            };
            let input = if l == 0 {
                &cache.input
            } else {
                &cache.post[l - 1]
            };
            d_weights[l] = input.matmul_tn(&dp)?;
            delta = dp.matmul_nt(&self.weights[l])?;
        }
        Ok(MlpGradients {
            d_weights,
            d_biases,
            d_input: delta,
        })
    }

    /// FNV-1a over the parameter bit patterns.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for block in self.params() {
            for v in block {
                for byte in v.as_f64().to_bits().to_le_bytes() {
                    h ^= byte as u64;
                    h = h.wrapping_mul(0x100000001b3);
                }
            }
        }
        h
    }
}
