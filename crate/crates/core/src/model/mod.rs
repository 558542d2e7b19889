//! Per-layer encoders (MLP and the GCN baseline), backpropagation and Adam.

mod adam;
mod gcn;
mod mlp;

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

pub use adam::{adam_step, AdamState};
pub use gcn::{gcn_forward, GcnEncoder, Propagation};
pub use mlp::{mlp_init, ForwardCache, MlpEncoder, MlpGradients};

use crate::error::{invalid, io_err, Error, Result};
use crate::numerics::{DenseMatrix, Scalar};

/// Forward pass of an MLP encoder.
pub fn mlp_forward<T: Scalar>(
    enc: &MlpEncoder<T>,
    x: &DenseMatrix<T>,
) -> Result<(DenseMatrix<T>, ForwardCache<T>)> {
    enc.forward(x)
}

/// Gradients of `⟨dz, z⟩` with respect to every parameter and the input.
pub fn mlp_backward<T: Scalar>(
    enc: &MlpEncoder<T>,
    cache: &ForwardCache<T>,
    dz: &DenseMatrix<T>,
) -> Result<MlpGradients<T>> {
    enc.backward(cache, dz)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EncoderKind {
    #[default]
    Mlp,
    GcnBaseline,
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mlp => "mlp",
            Self::GcnBaseline => "gcn-baseline",
        })
    }
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(Self::Mlp),
            "gcn-baseline" | "gcn" => Ok(Self::GcnBaseline),
            other => Err(invalid(format!(
                "unknown encoder kind {other:?} (expected mlp or gcn-baseline)"
            ))),
        }
    }
}

/// Serialized parameter file: header `MLP L d0 .. dL` (or `GCN ...`), then for
/// each layer its weight rows followed by one bias line.
pub fn format_encoder<T: Scalar>(kind: EncoderKind, enc: &MlpEncoder<T>) -> String {
    let tag = match kind {
        EncoderKind::Mlp => "MLP",
        EncoderKind::GcnBaseline => "GCN",
    };
    let mut out = String::new();
    let _ = write!(out, "{tag} {}", enc.num_layers());
    for d in enc.dims() {
        let _ = write!(out, " {d}");
    }
    out.push('\n');
    let push_row = |out: &mut String, row: &[T]| {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.16e}", v.as_f64());
        }
        out.push('\n');
    };
    for (w, b) in enc.weights().iter().zip(enc.biases()) {
        for r in 0..w.rows() {
            push_row(&mut out, w.row(r));
        }
        push_row(&mut out, b);
    }
    out
}

pub fn parse_encoder<T: Scalar>(text: &str) -> Result<(EncoderKind, MlpEncoder<T>)> {
    let bad = |msg: String| invalid(format!("model file: {msg}"));
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("empty".into()))?
        .split_whitespace()
        .collect();
    let kind = match header.first() {
        Some(&"MLP") => EncoderKind::Mlp,
        Some(&"GCN") => EncoderKind::GcnBaseline,
        other => return Err(bad(format!("unknown header tag {other:?}"))),
    };
    let layers: usize = header
        .get(1)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("missing layer count".into()))?;
    let dims: Vec<usize> = header[2..]
        .iter()
        .map(|t| t.parse().map_err(|_| bad(format!("bad dim {t:?}"))))
        .collect::<Result<_>>()?;
    if dims.len() != layers + 1 {
        return Err(bad(format!("{layers} layers need {} dims", layers + 1)));
    }
    let mut parse_row = |len: usize| -> Result<Vec<T>> {
        let line = lines.next().ok_or_else(|| bad("truncated".into()))?;
        let row: Vec<T> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map(T::lit)
                    .map_err(|_| bad(format!("bad number {t:?}")))
            })
            .collect::<Result<_>>()?;
        if row.len() != len {
            return Err(bad(format!("expected {len} values, got {}", row.len())));
        }
        Ok(row)
    };
    let mut weights = Vec::with_capacity(layers);
    let mut biases = Vec::with_capacity(layers);
    for pair in dims.windows(2) {
        let mut values = Vec::with_capacity(pair[0] * pair[1]);
        for _ in 0..pair[0] {
            values.extend(parse_row(pair[1])?);
        }
        weights.push(DenseMatrix::new(pair[0], pair[1], values)?);
        biases.push(parse_row(pair[1])?);
    }
    Ok((kind, MlpEncoder::from_parts(weights, biases)?))
}

pub fn save_encoder<T: Scalar>(
    path: impl AsRef<Path>,
    kind: EncoderKind,
    enc: &MlpEncoder<T>,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_encoder(kind, enc)).map_err(|e| io_err(path, e))
}

pub fn load_encoder<T: Scalar>(path: impl AsRef<Path>) -> Result<(EncoderKind, MlpEncoder<T>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_encoder(&text)
}
