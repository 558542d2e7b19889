//! Plain-text graph files.
//!
//! * features / embeddings: header `N D`, then `N` lines of `D` decimals;
//! * layer edges: `src dst [weight]` per line, 0-indexed, weight defaults to 1;
//! * labels: `node label` per line.
//!
//! `#` starts a comment in every format; blank lines are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{io_err, Error, Result};
use crate::graph::{MultiplexGraph, SparseAdjacency};
use crate::numerics::{DenseMatrix, Scalar};

/// A loaded graph plus the indices of layers that had no edges.
#[derive(Clone, Debug)]
pub struct LoadedGraph<T> {
    pub graph: MultiplexGraph<T>,
    pub empty_layers: Vec<usize>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: PathBuf::from(path),
        line,
        message: message.into(),
    }
}

/// Non-empty lines with comments stripped, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_index(path: &Path, line: usize, tok: &str, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| {
        parse_err(
            path,
            line,
            format!("{what} {tok:?} is not a non-negative integer"),
        )
    })
}

fn parse_real<T: Scalar>(path: &Path, line: usize, tok: &str) -> Result<T> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(path, line, format!("{tok:?} is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("{tok:?} is not finite")));
    }
    Ok(T::lit(v))
}

pub fn read_matrix<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut lines = content_lines(&text);
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "missing \"N D\" header"))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(path, hl, "header must be \"N D\""));
    }
    let rows = parse_index(path, hl, dims[0], "row count")?;
    let cols = parse_index(path, hl, dims[1], "column count")?;
    let mut values = Vec::with_capacity(rows * cols);
    let mut seen = 0;
    for (ln, line) in lines {
        if seen == rows {
            return Err(parse_err(path, ln, format!("more than {rows} data rows")));
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            values.push(parse_real(path, ln, tok)?);
        }
        if values.len() - before != cols {
            return Err(parse_err(
                path,
                ln,
                format!("expected {cols} values, found {}", values.len() - before),
            ));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(parse_err(
            path,
            hl,
            format!("header declares {rows} rows, found {seen}"),
        ));
    }
    DenseMatrix::new(rows, cols, values)
}

pub fn read_layer<T: Scalar>(path: impl AsRef<Path>, n: usize) -> Result<SparseAdjacency<T>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut edges = Vec::new();
    for (ln, line) in content_lines(&text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() < 2 || toks.len() > 3 {
            return Err(parse_err(path, ln, "expected \"src dst [weight]\""));
        }
        let s = parse_index(path, ln, toks[0], "source")?;
        let d = parse_index(path, ln, toks[1], "target")?;
        for idx in [s, d] {
            if idx >= n {
                return Err(parse_err(path, ln, format!("node index {idx} >= N = {n}")));
            }
        }
        let w = match toks.get(2) {
            Some(t) => parse_real(path, ln, t)?,
            None => T::one(),
        };
        if w < T::zero() {
            return Err(parse_err(path, ln, "edge weight must be nonnegative"));
        }
        edges.push((s, d, w));
    }
    SparseAdjacency::from_edges(n, edges)
}

pub fn read_labels(path: impl AsRef<Path>, n: usize) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut labels = vec![None; n];
    for (ln, line) in content_lines(&text) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(path, ln, "expected \"node label\""));
        }
        let node = parse_index(path, ln, toks[0], "node")?;
        let label = parse_index(path, ln, toks[1], "label")?;
        if node >= n {
            return Err(parse_err(path, ln, format!("node index {node} >= N = {n}")));
        }
        if labels[node].replace(label).is_some() {
            return Err(parse_err(path, ln, format!("node {node} labeled twice")));
        }
    }
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| parse_err(path, 0, format!("node {i} has no label"))))
        .collect()
}

/// Loads features, every layer and (optionally) labels into a validated graph.
pub fn load_multiplex<T: Scalar, P: AsRef<Path>>(
    features_path: impl AsRef<Path>,
    layer_paths: &[P],
    labels_path: Option<&Path>,
) -> Result<LoadedGraph<T>> {
    let features = read_matrix::<T>(features_path)?;
    let n = features.rows();
    let mut layers = Vec::with_capacity(layer_paths.len());
    let mut empty_layers = Vec::new();
    for (v, p) in layer_paths.iter().enumerate() {
        let layer = read_layer(p, n)?;
        if layer.nnz() == 0 {
            empty_layers.push(v);
        }
        layers.push(layer);
    }
    let labels = labels_path.map(|p| read_labels(p, n)).transpose()?;
    Ok(LoadedGraph {
        graph: MultiplexGraph::new(features, layers, labels)?,
        empty_layers,
    })
}

/// Serializes a matrix in the `N D` format with round-trip exact decimals.
pub fn format_matrix<T: Scalar>(m: &DenseMatrix<T>) -> String {
    let mut out = String::with_capacity(m.rows() * m.cols() * 20 + 16);
    let _ = writeln!(out, "{} {}", m.rows(), m.cols());
    for r in 0..m.rows() {
        let mut first = true;
        for &v in m.row(r) {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{}", v.as_f64());
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix<T: Scalar>(path: impl AsRef<Path>, m: &DenseMatrix<T>) -> Result<()> {
    write(path.as_ref(), &format_matrix(m))
}

pub fn write_layer<T: Scalar>(path: impl AsRef<Path>, a: &SparseAdjacency<T>) -> Result<()> {
    let mut out = String::new();
    for (i, j, w) in a.undirected_edges() {
        let _ = writeln!(out, "{i} {j} {}", w.as_f64());
    }
    write(path.as_ref(), &out)
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<()> {
    let mut out = String::new();
    for (i, l) in labels.iter().enumerate() {
        let _ = writeln!(out, "{i} {l}");
    }
    write(path.as_ref(), &out)
}
