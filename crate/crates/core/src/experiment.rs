//! Scaled-down experiment drivers shared by the CLI and the acceptance tests.
//!
//! Every trial is a pure function of its configs and seed. Seeds fan out into
//! independent substreams: graph generation, noise, splits, training and
//! clustering never share a generator.

use std::time::Instant;

use crate::error::{invalid, Result};
use crate::eval::{
    clustering_accuracy, f1_scores, kmeans, linear_probe, nmi, silhouette, Partition, ProbeConfig,
};
use crate::graph::{
    inject_noise_multiplex, oos_split, synth_multiplex_sbm, MultiplexGraph, SbmConfig,
};
use crate::model::EncoderKind;
use crate::numerics::{standardize_columns, DenseMatrix, Rng};
use crate::train::{
    embed, infer_unseen, train, EmbeddingSet, Objective, TrainConfig, TrainedModel,
};

const STREAM_GRAPH: u64 = 1_000;
const STREAM_NOISE: u64 = 2_000;
const STREAM_SPLIT: u64 = 3_000;
const STREAM_CLUSTER: u64 = 4_000;
const STREAM_PROBE: u64 = 5_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterScores {
    pub nmi: f64,
    pub accuracy: f64,
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn synth_for_seed(sbm: &SbmConfig, seed: u64) -> Result<MultiplexGraph<f64>> {
    Ok(synth_multiplex_sbm(sbm, &mut Rng::substream(seed, STREAM_GRAPH))?.graph)
}

/// k-means (k = number of classes) on `z`, scored against `labels`.
pub fn cluster_scores(
    z: &DenseMatrix<f64>,
    labels: &[usize],
    k: usize,
    seed: u64,
) -> Result<ClusterScores> {
    let p = kmeans(z, k, &mut Rng::substream(seed, STREAM_CLUSTER))?;
    Ok(ClusterScores {
        nmi: nmi(&p, labels)?,
        accuracy: clustering_accuracy(&p, labels)?,
    })
}

fn labels_of(g: &MultiplexGraph<f64>) -> Result<&[usize]> {
    g.labels()
        .ok_or_else(|| invalid("experiment graph has no labels"))
}

fn train_and_embed(
    g: &MultiplexGraph<f64>,
    cfg: &TrainConfig,
) -> Result<(TrainedModel<f64>, EmbeddingSet<f64>)> {
    let model = train(g.view(), cfg)?;
    let emb = embed(&model, g.view())?;
    Ok((model, emb))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplementaryTrial {
    pub fused: ClusterScores,
    pub per_layer: Vec<ClusterScores>,
    /// `‖ẐᵀẐ − I‖_F / d` per layer.
    pub decorrelation_gap: Vec<f64>,
    /// Silhouette of the planted partition on the fused embedding.
    pub fused_silhouette: f64,
    /// Silhouette of the planted partition on the raw node features.
    pub feature_silhouette: f64,
}

impl ComplementaryTrial {
    pub fn best_layer_nmi(&self) -> f64 {
        self.per_layer
            .iter()
            .map(|s| s.nmi)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Trains on a fresh SBM and clusters the fused and every per-layer embedding.
pub fn complementary_trial(
    sbm: &SbmConfig,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<ComplementaryTrial> {
    let g = synth_for_seed(sbm, seed)?;
    let labels = labels_of(&g)?;
    let cfg = TrainConfig {
        seed,
        ..cfg.clone()
    };
    let (_, emb) = train_and_embed(&g, &cfg)?;
    let k = g.num_classes();
    let truth = Partition::from_labels(labels);
    Ok(ComplementaryTrial {
        fused: cluster_scores(&emb.fused, labels, k, seed)?,
        per_layer: emb
            .per_layer
            .iter()
            .map(|z| cluster_scores(z, labels, k, seed))
            .collect::<Result<_>>()?,
        decorrelation_gap: emb
            .per_layer
            .iter()
            .map(decorrelation_gap)
            .collect::<Result<_>>()?,
        fused_silhouette: silhouette(&emb.fused, &truth)?,
        feature_silhouette: silhouette(g.features(), &truth)?,
    })
}

/// Frobenius distance of the standardized cross-product from identity, over `d`.
pub fn decorrelation_gap(z: &DenseMatrix<f64>) -> Result<f64> {
    let zh = standardize_columns(z)?;
    let c = zh.matmul_tn(&zh)?;
    let gap = c.sub(&DenseMatrix::identity(c.rows()))?.frobenius_norm();
    Ok(gap / z.cols() as f64)
}

/// Fused-embedding clustering after replacing a fraction `eta` of every
/// layer's edges with random ones.
pub fn noise_trial(
    sbm: &SbmConfig,
    cfg: &TrainConfig,
    objective: Objective,
    eta: f64,
    seed: u64,
) -> Result<ClusterScores> {
    let clean = synth_for_seed(sbm, seed)?;
    let noisy = inject_noise_multiplex(&clean, eta, seed.wrapping_add(STREAM_NOISE))?;
    let cfg = TrainConfig {
        seed,
        objective,
        ..cfg.clone()
    };
    let (_, emb) = train_and_embed(&noisy, &cfg)?;
    cluster_scores(&emb.fused, labels_of(&noisy)?, noisy.num_classes(), seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseRow {
    pub objective: Objective,
    pub eta: f64,
    pub per_seed: Vec<ClusterScores>,
}

impl NoiseRow {
    pub fn nmi(&self) -> (f64, f64) {
        mean_std(&self.per_seed.iter().map(|s| s.nmi).collect::<Vec<_>>())
    }

    pub fn accuracy(&self) -> (f64, f64) {
        mean_std(&self.per_seed.iter().map(|s| s.accuracy).collect::<Vec<_>>())
    }
}

pub fn noise_sweep(
    sbm: &SbmConfig,
    cfg: &TrainConfig,
    objectives: &[Objective],
    etas: &[f64],
    seeds: &[u64],
) -> Result<Vec<NoiseRow>> {
    let mut rows = Vec::new();
    for &objective in objectives {
        for &eta in etas {
            let per_seed = seeds
                .iter()
                .map(|&s| noise_trial(sbm, cfg, objective, eta, s))
                .collect::<Result<_>>()?;
            rows.push(NoiseRow {
                objective,
                eta,
                per_seed,
            });
        }
    }
    Ok(rows)
}

/// Relative drop `(clean − noisy) / clean`.
pub fn relative_drop(clean: f64, noisy: f64) -> f64 {
    if clean <= 0.0 {
        0.0
    } else {
        (clean - noisy) / clean
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OosPhase {
    Training,
    Probing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OosTrial {
    pub ratio: f64,
    pub seed: u64,
    pub seen_micro_f1: f64,
    pub seen_macro_f1: f64,
    /// `None` when the split leaves no unseen nodes.
    pub unseen_micro_f1: Option<f64>,
    pub unseen_macro_f1: Option<f64>,
    pub unseen_count: usize,
    /// Wall time of the unseen-node inference alone, in milliseconds.
    pub inference_ms: f64,
}

/// Out-of-sample protocol: hold out `ratio` of the nodes, train on the rest,
/// embed held-out nodes from features only, then probe.
///
/// The probe trains on `round(train_fraction · N)` seen nodes; the remaining
/// seen nodes form the seen-test set. `hook` runs at phase boundaries outside
/// the inference timer.
pub fn oos_trial(
    sbm: &SbmConfig,
    cfg: &TrainConfig,
    ratio: f64,
    train_fraction: f64,
    probe: &ProbeConfig,
    seed: u64,
    hook: &mut dyn FnMut(OosPhase),
) -> Result<OosTrial> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let g = synth_for_seed(sbm, seed)?;
    let labels = labels_of(&g)?.to_vec();
    let split = oos_split(&g, ratio, &mut Rng::substream(seed, STREAM_SPLIT))?;
    let seen_labels = split
        .train_graph
        .labels()
        .expect("labels carried through split")
        .to_vec();
    let n_seen = seen_labels.len();

    hook(OosPhase::Training);
    let cfg = TrainConfig {
        seed,
        ..cfg.clone()
    };
    let (model, seen_emb) = train_and_embed(&split.train_graph, &cfg)?;

    let unseen_emb = if split.unseen_index_map.is_empty() {
        None
    } else {
        let start = Instant::now();
        let emb = infer_unseen(&model, &split.unseen_features)?;
        let elapsed = start.elapsed();
        Some((emb, elapsed.as_secs_f64() * 1e3))
    };
    hook(OosPhase::Probing);

    let mut probe_rng = Rng::substream(seed, STREAM_PROBE);
    let mut order: Vec<usize> = (0..n_seen).collect();
    probe_rng.shuffle(&mut order);
    let n_train = ((train_fraction * g.num_nodes() as f64).round() as usize).clamp(1, n_seen - 1);
    let (train_idx, test_idx) = order.split_at(n_train);

    let z = &seen_emb.fused;
    let z_train = z.select_rows(train_idx);
    let y_train: Vec<usize> = train_idx.iter().map(|&i| seen_labels[i]).collect();
    let mut test_rows = z.select_rows(test_idx).into_vec();
    let mut y_test: Vec<usize> = test_idx.iter().map(|&i| seen_labels[i]).collect();
    if let Some((emb, _)) = &unseen_emb {
        test_rows.extend_from_slice(emb.fused.as_slice());
        y_test.extend(split.unseen_index_map.iter().map(|&i| labels[i]));
    }
    let z_test = DenseMatrix::new(y_test.len(), z.cols(), test_rows)?;
    let outcome = linear_probe(&z_train, &y_train, &z_test, &y_test, probe, &mut probe_rng)?;

    let n_seen_test = test_idx.len();
    let (pred_seen, pred_unseen) = outcome.predictions.split_at(n_seen_test);
    let (y_seen, y_unseen) = y_test.split_at(n_seen_test);
    let (seen_macro_f1, seen_micro_f1) = f1_scores(pred_seen, y_seen)?;
    let unseen = if y_unseen.is_empty() {
        None
    } else {
        Some(f1_scores(pred_unseen, y_unseen)?)
    };
    Ok(OosTrial {
        ratio,
        seed,
        seen_micro_f1,
        seen_macro_f1,
        unseen_micro_f1: unseen.map(|u| u.1),
        unseen_macro_f1: unseen.map(|u| u.0),
        unseen_count: split.unseen_index_map.len(),
        inference_ms: unseen_emb.map_or(0.0, |(_, ms)| ms),
    })
}

/// Fused-embedding clustering with an encoder of `depth` weight layers.
pub fn depth_trial(
    sbm: &SbmConfig,
    cfg: &TrainConfig,
    kind: EncoderKind,
    depth: usize,
    width: usize,
    seed: u64,
) -> Result<ClusterScores> {
    if depth == 0 {
        return Err(invalid("depth must be at least 1"));
    }
    let g = synth_for_seed(sbm, seed)?;
    let cfg = TrainConfig {
        seed,
        encoder_kind: kind,
        ..cfg.with_depth(depth, width)
    };
    let (_, emb) = train_and_embed(&g, &cfg)?;
    cluster_scores(&emb.fused, labels_of(&g)?, g.num_classes(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (SbmConfig, TrainConfig) {
        let sbm = SbmConfig {
            n: 60,
            d_feat: 6,
            p_in: 0.3,
            p_out: 0.02,
            ..SbmConfig::default()
        };
        let cfg = TrainConfig {
            hidden: vec![16],
            embed_dim: 8,
            epochs: 20,
            ..TrainConfig::default()
        };
        (sbm, cfg)
    }

    #[test]
    fn mean_std_is_population() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }

    #[test]
    fn trials_are_deterministic() {
        let (sbm, cfg) = tiny();
        let a = complementary_trial(&sbm, &cfg, 3).unwrap();
        let b = complementary_trial(&sbm, &cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_layer.len(), 2);
    }

    #[test]
    fn oos_ratio_zero_has_no_unseen_metrics() {
        let (sbm, cfg) = tiny();
        let t = oos_trial(
            &sbm,
            &cfg,
            0.0,
            0.2,
            &ProbeConfig::default(),
            1,
            &mut |_| {},
        )
        .unwrap();
        assert_eq!(t.unseen_micro_f1, None);
        assert_eq!(t.unseen_count, 0);
    }

    #[test]
    fn identity_like_embedding_has_small_gap() {
        let mut rng = Rng::new(5);
        let z = DenseMatrix::from_fn(4000, 4, |_, _| rng.normal());
        assert!(decorrelation_gap(&z).unwrap() < 0.05);
    }
}
