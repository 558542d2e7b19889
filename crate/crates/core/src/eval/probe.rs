//! Logistic-regression probe on frozen embeddings.

use crate::error::{invalid, Result};
use crate::eval::{f1_scores, Metric, MetricTable};
use crate::numerics::{DenseMatrix, Rng, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeConfig {
    pub l2: f64,
    pub iterations: usize,
    pub lr: f64,
    /// Subsample every training class down to the size of the smallest one.
    pub balance_classes: bool,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            iterations: 200,
            lr: 0.5,
            balance_classes: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProbeOutcome {
    pub table: MetricTable,
    pub predictions: Vec<usize>,
    /// Test classes that never appear in the training labels.
    pub missing_classes: Vec<usize>,
}

/// Trains a multinomial logistic regression (softmax, L2 penalty, zero init,
/// full-batch gradient descent) on `z_train` and reports Macro/Micro-F1 on
/// `z_test`.
///
/// Inputs are standardized with training statistics and scaled by `1/sqrt(d)`
/// so the fixed step size stays stable for any embedding width.
pub fn linear_probe<T: Scalar>(
    z_train: &DenseMatrix<T>,
    y_train: &[usize],
    z_test: &DenseMatrix<T>,
    y_test: &[usize],
    cfg: &ProbeConfig,
    rng: &mut Rng,
) -> Result<ProbeOutcome> {
    if z_train.rows() != y_train.len() || z_test.rows() != y_test.len() {
        return Err(invalid("probe: embeddings and labels differ in length"));
    }
    if z_train.cols() != z_test.cols() {
        return Err(invalid("probe: train and test embeddings differ in width"));
    }
    if y_test.is_empty() {
        return Err(invalid("probe: empty test set"));
    }
    let mut train_classes: Vec<usize> = y_train.to_vec();
    train_classes.sort_unstable();
    train_classes.dedup();
    if train_classes.len() < 2 {
        return Err(invalid(
            "probe: need at least 2 classes in the training labels",
        ));
    }

    let mut rows: Vec<usize> = (0..y_train.len()).collect();
    if cfg.balance_classes {
        let per_class: Vec<Vec<usize>> = train_classes
            .iter()
            .map(|&c| rows.iter().copied().filter(|&i| y_train[i] == c).collect())
            .collect();
        let m = per_class.iter().map(Vec::len).min().unwrap();
        rows = per_class
            .into_iter()
            .flat_map(|idx| {
                let pick = rng.sample_indices(idx.len(), m);
                pick.into_iter().map(move |k| idx[k]).collect::<Vec<_>>()
            })
            .collect();
        rows.sort_unstable();
    }

    let xtr: DenseMatrix<f64> = z_train.select_rows(&rows).cast();
    let ytr: Vec<usize> = rows.iter().map(|&i| y_train[i]).collect();
    let xte: DenseMatrix<f64> = z_test.cast();
    let (n, d) = xtr.shape();
    let classes = ytr.iter().chain(y_test).max().unwrap() + 1;

    let mean: Vec<f64> = xtr.column_sums().iter().map(|s| s / n as f64).collect();
    let mut sd = vec![0.0; d];
    for r in 0..n {
        for c in 0..d {
            sd[c] += (xtr.get(r, c) - mean[c]).powi(2);
        }
    }
    let width = (d as f64).sqrt();
    let scale: Vec<f64> = sd
        .iter()
        .map(|v| {
            let s = (v / n as f64).sqrt();
            1.0 / (if s > 1e-12 { s } else { 1.0 } * width)
        })
        .collect();
    let prep = |m: &DenseMatrix<f64>| {
        DenseMatrix::from_fn(m.rows(), d, |r, c| (m.get(r, c) - mean[c]) * scale[c])
    };
    let xtr = prep(&xtr);
    let xte = prep(&xte);

    let mut w = DenseMatrix::<f64>::zeros(d, classes);
    let mut b = vec![0.0; classes];
    let inv_n = 1.0 / n as f64;
    for _ in 0..cfg.iterations {
        let mut resid = softmax_rows(&logits(&xtr, &w, &b));
        for (r, &y) in ytr.iter().enumerate() {
            let v = resid.get(r, y);
            resid.set(r, y, v - 1.0);
        }
        let gw = xtr.matmul_tn(&resid)?;
        let gb = resid.column_sums();
        for (wv, &g) in w.as_mut_slice().iter_mut().zip(gw.as_slice()) {
            *wv -= cfg.lr * (g * inv_n + cfg.l2 * *wv);
        }
        for (bv, g) in b.iter_mut().zip(gb) {
            *bv -= cfg.lr * g * inv_n;
        }
    }

    let scores = logits(&xte, &w, &b);
    let predictions: Vec<usize> = (0..scores.rows())
        .map(|r| {
            scores
                .row(r)
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (c, &s)| {
                    if s > best.1 {
                        (c, s)
                    } else {
                        best
                    }
                })
                .0
        })
        .collect();
    let (macro_f1, micro_f1) = f1_scores(&predictions, y_test)?;
    let mut missing: Vec<usize> = y_test
        .iter()
        .copied()
        .filter(|c| train_classes.binary_search(c).is_err())
        .collect();
    missing.sort_unstable();
    missing.dedup();

    let mut table = MetricTable::default();
    table.push(Metric::MacroF1, macro_f1);
    table.push(Metric::MicroF1, micro_f1);
    Ok(ProbeOutcome {
        table,
        predictions,
        missing_classes: missing,
    })
}

fn logits(x: &DenseMatrix<f64>, w: &DenseMatrix<f64>, b: &[f64]) -> DenseMatrix<f64> {
    let mut s = x.matmul(w).expect("probe shapes");
    for r in 0..s.rows() {
        for (v, &bb) in s.row_mut(r).iter_mut().zip(b) {
            *v += bb;
        }
    }
    s
}

fn softmax_rows(s: &DenseMatrix<f64>) -> DenseMatrix<f64> {
    let mut out = s.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_one_dimensional() {
        let x = DenseMatrix::from_rows(&[[-1.0], [-1.0], [1.0], [1.0]]).unwrap();
        let y = [0, 0, 1, 1];
        let out = linear_probe(&x, &y, &x, &y, &ProbeConfig::default(), &mut Rng::new(0)).unwrap();
        assert_eq!(out.table.get(Metric::MacroF1), Some(1.0));
        assert_eq!(out.table.get(Metric::MicroF1), Some(1.0));
    }

    #[test]
    fn missing_test_class_scores_zero() {
        let x = DenseMatrix::from_rows(&[[-1.0], [1.0], [-1.0], [1.0]]).unwrap();
        let y = [0, 1, 0, 1];
        let xt = DenseMatrix::from_rows(&[[-1.0], [1.0], [5.0]]).unwrap();
        let yt = [0, 1, 2];
        let out =
            linear_probe(&x, &y, &xt, &yt, &ProbeConfig::default(), &mut Rng::new(0)).unwrap();
        assert_eq!(out.missing_classes, vec![2]);
        let macro_f1 = out.table.get(Metric::MacroF1).unwrap();
        assert!(macro_f1 < 1.0);
    }

    #[test]
    fn needs_two_training_classes() {
        let x = DenseMatrix::from_rows(&[[0.0], [1.0]]).unwrap();
        assert!(linear_probe(
            &x,
            &[0, 0],
            &x,
            &[0, 0],
            &ProbeConfig::default(),
            &mut Rng::new(0)
        )
        .is_err());
    }

    #[test]
    fn balanced_subsampling() {
        let x = DenseMatrix::from_fn(7, 1, |r, _| if r < 5 { -1.0 } else { 1.0 });
        let y = [0, 0, 0, 0, 0, 1, 1];
        let cfg = ProbeConfig {
            balance_classes: true,
            ..ProbeConfig::default()
        };
        let out = linear_probe(&x, &y, &x, &y, &cfg, &mut Rng::new(1)).unwrap();
        assert_eq!(out.table.get(Metric::MicroF1), Some(1.0));
    }
}
