use crate::error::{invalid, Result};
use crate::graph::MultiplexGraph;
use crate::numerics::{DenseMatrix, Rng, Scalar};

/// Seen/unseen node partition for out-of-sample evaluation.
#[derive(Clone, Debug)]
pub struct OosSplit<T> {
    /// Subgraph induced by the seen nodes, reindexed to `0..seen`.
    pub train_graph: MultiplexGraph<T>,
    pub unseen_features: DenseMatrix<T>,
    pub unseen_labels: Option<Vec<usize>>,
    /// Original index of each seen node, ascending.
    pub seen_index_map: Vec<usize>,
    /// Original index of each unseen node, ascending.
    pub unseen_index_map: Vec<usize>,
}

/// Draws `ceil(ratio * N)` unseen nodes uniformly; everything else is seen.
pub fn oos_split<T: Scalar>(
    g: &MultiplexGraph<T>,
    ratio: f64,
    rng: &mut Rng,
) -> Result<OosSplit<T>> {
    if !(0.0..1.0).contains(&ratio) {
        return Err(invalid(format!(
            "out-of-sample ratio {ratio} outside [0, 1)"
        )));
    }
    let n = g.num_nodes();
    let unseen_count = ((ratio * n as f64) - 1e-9).ceil().max(0.0) as usize;
    if n - unseen_count.min(n) < 2 {
        return Err(invalid(format!(
            "ratio {ratio} leaves fewer than 2 seen nodes out of {n}"
        )));
    }
    let mut unseen = rng.sample_indices(n, unseen_count);
    unseen.sort_unstable();
    let mut is_unseen = vec![false; n];
    for &i in &unseen {
        is_unseen[i] = true;
    }
    let seen: Vec<usize> = (0..n).filter(|&i| !is_unseen[i]).collect();

    Ok(OosSplit {
        train_graph: g.induced(&seen),
        unseen_features: g.features().select_rows(&unseen),
        unseen_labels: g.labels().map(|l| unseen.iter().map(|&i| l[i]).collect()),
        seen_index_map: seen,
        unseen_index_map: unseen,
    })
}
