use std::fmt::{self, Write as _};

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;

use crate::error::{invalid, Result};

/// Assignment of `N` items to groups `0..k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    assignments: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(assignments: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = assignments.iter().find(|&&a| a >= k) {
            return Err(invalid(format!("group {bad} out of range for k = {k}")));
        }
        Ok(Self { assignments, k })
    }

    /// Uses `max + 1` as the group count.
    pub fn from_labels(labels: &[usize]) -> Self {
        let k = labels.iter().max().map_or(0, |&m| m + 1);
        Self {
            assignments: labels.to_vec(),
            k,
        }
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    MacroF1,
    MicroF1,
    Accuracy,
    Nmi,
    Silhouette,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Self::MacroF1 => "macro_f1",
            Self::MicroF1 => "micro_f1",
            Self::Accuracy => "accuracy",
            Self::Nmi => "nmi",
            Self::Silhouette => "silhouette",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricTable {
    pub entries: Vec<(Metric, f64)>,
}

impl MetricTable {
    pub fn push(&mut self, metric: Metric, value: f64) {
        self.entries.push((metric, value));
    }

    pub fn get(&self, metric: Metric) -> Option<f64> {
        self.entries
            .iter()
            .find(|(m, _)| *m == metric)
            .map(|&(_, v)| v)
    }

    /// `metric\tvalue` header, one row per metric, 6 decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tvalue\n");
        for (m, v) in &self.entries {
            let _ = writeln!(out, "{m}\t{v:.6}");
        }
        out
    }
}

/// Contingency counts, padded to a square `m x m` matrix where
/// `m = max(groups in a, groups in b)`. Rows index `a`, columns `b`.
pub fn contingency(a: &[usize], b: &[usize]) -> Vec<Vec<i64>> {
    let m = a.iter().chain(b).max().map_or(0, |&x| x + 1);
    let mut table = vec![vec![0i64; m]; m];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    table
}

/// Largest matched count over all one-to-one row→column maps, by enumeration.
pub fn best_matching_exhaustive(table: &[Vec<i64>]) -> i64 {
    fn go(table: &[Vec<i64>], row: usize, used: &mut [bool], acc: i64, best: &mut i64) {
        if row == table.len() {
            *best = (*best).max(acc);
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                go(table, row + 1, used, acc + table[row][c], best);
                used[c] = false;
            }
        }
    }
    let mut best = 0;
    go(table, 0, &mut vec![false; table.len()], 0, &mut best);
    best
}

/// Same quantity as [`best_matching_exhaustive`], via the Hungarian algorithm.
pub fn best_matching_assignment(table: &[Vec<i64>]) -> i64 {
    if table.is_empty() {
        return 0;
    }
    let m = Matrix::from_rows(table.iter().cloned()).expect("square contingency table");
    kuhn_munkres(&m).0
}

/// Fraction of items matched under the best one-to-one cluster→label map.
pub fn clustering_accuracy(p: &Partition, labels: &[usize]) -> Result<f64> {
    if p.len() != labels.len() {
        return Err(invalid(format!(
            "partition has {} items, labels {}",
            p.len(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Err(invalid("clustering accuracy of an empty partition"));
    }
    let table = contingency(p.assignments(), labels);
    let matched = if table.len() <= 8 {
        best_matching_exhaustive(&table)
    } else {
        best_matching_assignment(&table)
    };
    Ok(matched as f64 / labels.len() as f64)
}

fn entropy(counts: impl Iterator<Item = i64>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by the geometric mean of the two entropies.
/// Returns 0 when either side has zero entropy.
pub fn nmi(p: &Partition, labels: &[usize]) -> Result<f64> {
    if p.len() != labels.len() || labels.is_empty() {
        return Err(invalid(
            "nmi needs two non-empty assignments of equal length",
        ));
    }
    let n = labels.len() as f64;
    let table = contingency(p.assignments(), labels);
    let rows: Vec<i64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<i64> = (0..table.len())
        .map(|c| table.iter().map(|r| r[c]).sum())
        .collect();
    let hp = entropy(rows.iter().copied(), n);
    let hl = entropy(cols.iter().copied(), n);
    if hp <= 0.0 || hl <= 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (hp * hl).sqrt()).clamp(0.0, 1.0))
}

/// `(macro_f1, micro_f1)` for single-label predictions. Macro-F1 averages over
/// every class that occurs in either the truth or the predictions.
pub fn f1_scores(pred: &[usize], truth: &[usize]) -> Result<(f64, f64)> {
    if pred.len() != truth.len() || truth.is_empty() {
        return Err(invalid(
            "f1 needs non-empty predictions and labels of equal length",
        ));
    }
    let m = pred.iter().chain(truth).max().map_or(0, |&x| x + 1);
    let mut tp = vec![0usize; m];
    let mut fp = vec![0usize; m];
    let mut fneg = vec![0usize; m];
    let mut present = vec![false; m];
    for (&p, &t) in pred.iter().zip(truth) {
        present[p] = true;
        present[t] = true;
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let mut macro_sum = 0.0;
    let mut classes = 0;
    for c in 0..m {
        if !present[c] {
            continue;
        }
        classes += 1;
        let denom = 2 * tp[c] + fp[c] + fneg[c];
        if denom > 0 {
            macro_sum += 2.0 * tp[c] as f64 / denom as f64;
        }
    }
    let (tp_all, fp_all, fn_all) = (
        tp.iter().sum::<usize>(),
        fp.iter().sum::<usize>(),
        fneg.iter().sum::<usize>(),
    );
    let micro = 2.0 * tp_all as f64 / (2 * tp_all + fp_all + fn_all) as f64;
    Ok((macro_sum / classes as f64, micro))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(a: &[usize]) -> Partition {
        Partition::from_labels(a)
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(
            clustering_accuracy(&part(&[0, 0, 1, 1]), &[1, 1, 0, 0]).unwrap(),
            1.0
        );
        let acc = clustering_accuracy(&part(&[0, 1, 0, 1, 2]), &[0, 0, 1, 1, 2]).unwrap();
        assert!((acc - 0.6).abs() < 1e-12);
    }

    #[test]
    fn accuracy_pads_mismatched_group_counts() {
        let acc = clustering_accuracy(&part(&[0, 0, 0, 0]), &[0, 1, 2, 2]).unwrap();
        assert!((acc - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hungarian_matches_enumeration() {
        let t = vec![vec![3, 1, 0], vec![0, 4, 2], vec![5, 0, 1]];
        assert_eq!(best_matching_exhaustive(&t), best_matching_assignment(&t));
        assert_eq!(best_matching_exhaustive(&t), 9);
    }

    #[test]
    fn nmi_examples() {
        assert!((nmi(&part(&[0, 0, 1, 1, 2]), &[0, 0, 1, 1, 2]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nmi(&part(&[0, 0, 0, 0]), &[0, 1, 0, 1]).unwrap(), 0.0);
        assert!(nmi(&part(&[0, 0, 1, 1]), &[0, 1, 0, 1]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn f1_perfect_and_micro_equals_accuracy() {
        assert_eq!(f1_scores(&[0, 1, 2, 1], &[0, 1, 2, 1]).unwrap(), (1.0, 1.0));
        let (_, micro) = f1_scores(&[0, 1, 1, 2, 0], &[0, 1, 2, 2, 1]).unwrap();
        assert!((micro - 0.6).abs() < 1e-12);
    }

    #[test]
    fn table_tsv_format() {
        let mut t = MetricTable::default();
        t.push(Metric::Nmi, 0.5);
        t.push(Metric::Accuracy, 1.0 / 3.0);
        assert_eq!(
            t.to_tsv(),
            "metric\tvalue\nnmi\t0.500000\naccuracy\t0.333333\n"
        );
    }

    #[test]
    fn partition_rejects_out_of_range() {
        assert!(Partition::new(vec![0, 3], 3).is_err());
    }
}
