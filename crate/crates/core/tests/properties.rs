use multiplex::eval::{clustering_accuracy, f1_scores, kmeans_single, nmi, Partition};
use multiplex::graph::{
    high_order, inject_noise, oos_split, synth_multiplex_sbm, ProximityMatrix, ProximityMode,
    SbmConfig, SparseAdjacency,
};
use multiplex::loss::{cca_loss, lp_loss, total_loss};
use multiplex::model::{mlp_forward, mlp_init};
use multiplex::numerics::{cosine_similarity, standardize_columns};
use multiplex::{Matrix, Rng};
use proptest::prelude::*;

fn random_matrix(r: usize, c: usize, seed: u64) -> Matrix {
    let mut rng = Rng::new(seed);
    Matrix::from_fn(r, c, |_, _| rng.normal())
}

fn random_graph(n: usize, p: f64, seed: u64) -> SparseAdjacency<f64> {
    let mut rng = Rng::new(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.bernoulli(p) {
                edges.push((i, j, rng.uniform_in(0.5, 2.0)));
            }
        }
    }
    SparseAdjacency::from_edges(n, edges).unwrap()
}

fn proximity(n: usize, seed: u64) -> ProximityMatrix<f64> {
    high_order(&random_graph(n, 0.35, seed), ProximityMode::Combined)
}

fn permuted(labels: &[usize], k: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..k).collect();
    Rng::new(seed).shuffle(&mut perm);
    labels.iter().map(|&l| perm[l]).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn matmul_is_associative(seed in any::<u64>()) {
        let a = random_matrix(5, 5, seed);
        let b = random_matrix(5, 5, seed ^ 1);
        let c = random_matrix(5, 5, seed ^ 2);
        let left = a.matmul(&b).unwrap().matmul(&c).unwrap();
        let right = a.matmul(&b.matmul(&c).unwrap()).unwrap();
        let scale = 1.0 + left.max_abs();
        prop_assert!(left.sub(&right).unwrap().max_abs() <= 1e-9 * scale);
    }

    #[test]
    fn standardize_is_idempotent(seed in any::<u64>(), rows in 2usize..40, cols in 1usize..6) {
        let once = standardize_columns(&random_matrix(rows, cols, seed)).unwrap();
        let twice = standardize_columns(&once).unwrap();
        prop_assert!(once.sub(&twice).unwrap().max_abs() <= 1e-9);
    }

    #[test]
    fn cosine_with_itself_is_one(u in prop::collection::vec(-1e3f64..1e3, 1..12)) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-6));
        prop_assert!((cosine_similarity(&u, &u) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn high_order_keeps_size_and_symmetry(seed in any::<u64>(), n in 1usize..25, p in 0.0f64..0.6) {
        let a = random_graph(n, p, seed);
        for mode in [ProximityMode::OneHop, ProximityMode::TwoHop, ProximityMode::Combined] {
            let w = high_order(&a, mode);
            prop_assert_eq!(w.n(), n);
            prop_assert!(w.is_symmetric());
            prop_assert!(w.entries().all(|(i, j, _)| i != j));
        }
    }

    #[test]
    fn noise_preserves_edge_count_and_symmetry(seed in any::<u64>(), n in 4usize..30, eta in 0.0f64..=1.0) {
        let a = random_graph(n, 0.2, seed);
        prop_assume!(a.edge_count() > 0 && 2 * a.edge_count() <= n * (n - 1) / 2);
        let noisy = inject_noise(&a, eta, &mut Rng::new(seed ^ 7)).unwrap();
        prop_assert_eq!(noisy.edge_count(), a.edge_count());
        prop_assert!(noisy.is_symmetric());
        prop_assert!((0..n).all(|i| !noisy.contains(i, i)));
    }

    #[test]
    fn oos_split_partitions_nodes(seed in any::<u64>(), ratio in 0.0f64..0.9) {
        let cfg = SbmConfig { n: 40, d_feat: 3, p_in: 0.3, ..SbmConfig::default() };
        let g = synth_multiplex_sbm::<f64>(&cfg, &mut Rng::new(seed)).unwrap().graph;
        let split = oos_split(&g, ratio, &mut Rng::new(seed ^ 3)).unwrap();
        let mut all: Vec<usize> = split.seen_index_map.iter().chain(&split.unseen_index_map).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..40).collect::<Vec<_>>());
        prop_assert_eq!(split.train_graph.num_nodes(), split.seen_index_map.len());
        prop_assert_eq!(split.unseen_features.rows(), split.unseen_index_map.len());
    }

    #[test]
    fn accuracy_and_nmi_ignore_relabeling(seed in any::<u64>(), k in 2usize..6, n in 10usize..60) {
        let mut rng = Rng::new(seed);
        let pred: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        let truth: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        let p = Partition::new(pred.clone(), k).unwrap();
        let q = Partition::new(permuted(&pred, k, seed ^ 5), k).unwrap();
        let truth2 = permuted(&truth, k, seed ^ 9);
        let acc = clustering_accuracy(&p, &truth).unwrap();
        let score = nmi(&p, &truth).unwrap();
        for (pp, tt) in [(&q, &truth), (&p, &truth2), (&q, &truth2)] {
            prop_assert!((clustering_accuracy(pp, tt).unwrap() - acc).abs() < 1e-12);
            prop_assert!((nmi(pp, tt).unwrap() - score).abs() < 1e-12);
        }
    }

    #[test]
    fn micro_f1_is_accuracy(seed in any::<u64>(), k in 2usize..7, n in 1usize..80) {
        let mut rng = Rng::new(seed);
        let pred: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        let truth: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        let acc = pred.iter().zip(&truth).filter(|(a, b)| a == b).count() as f64 / n as f64;
        prop_assert!((f1_scores(&pred, &truth).unwrap().1 - acc).abs() < 1e-12);
    }

    #[test]
    fn kmeans_inertia_never_increases(seed in any::<u64>(), k in 1usize..5) {
        let z = random_matrix(50, 3, seed);
        let run = kmeans_single(&z, k, 100, &mut Rng::new(seed ^ 11)).unwrap();
        for w in run.inertia_trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", run.inertia_trace);
        }
    }

    #[test]
    fn lp_is_nonnegative_and_scale_free(seed in any::<u64>(), n in 2usize..14, c in 1e-3f64..1e3) {
        let z = random_matrix(n, 3, seed);
        let w = proximity(n, seed ^ 13);
        let (value, _) = lp_loss(&z, &w).unwrap();
        prop_assert!(value >= 0.0);
        let (scaled, _) = lp_loss(&z.scale(c), &w).unwrap();
        prop_assert!((value - scaled).abs() <= 1e-9);
    }

    #[test]
    fn cca_invariance_is_bounded(seed in any::<u64>(), views in 1usize..4, d in 1usize..5) {
        let zs: Vec<Matrix> = (0..views).map(|v| random_matrix(12, d, seed ^ v as u64)).collect();
        let out = cca_loss(&zs, 1.0).unwrap();
        let bound = -((d * views * (views - 1) / 2) as f64);
        prop_assert!(out.invariance >= bound - 1e-9);
        prop_assert!(out.decorrelation >= 0.0);
    }

    #[test]
    fn total_reconstructs_from_terms(
        lp in prop::collection::vec(0.0f64..10.0, 1..4),
        inv in -5.0f64..0.0,
        dec in 0.0f64..5.0,
        beta in 0.0f64..3.0,
        gamma in 0.0f64..3.0,
    ) {
        let r = total_loss(&lp, inv, dec, beta, gamma).unwrap();
        let expect = lp.iter().sum::<f64>() + beta * (inv + gamma * dec);
        prop_assert!((r.total - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
        let t0 = total_loss(&lp, inv, dec, 0.0, gamma).unwrap().total;
        let t2 = total_loss(&lp, inv, dec, 2.0 * beta, gamma).unwrap().total;
        prop_assert!((t2 - t0 - 2.0 * (r.total - t0)).abs() <= 1e-9);
    }

    #[test]
    fn mlp_forward_is_bitwise_deterministic(seed in any::<u64>()) {
        let enc = mlp_init::<f64>(&[5, 7, 3], &mut Rng::new(seed)).unwrap();
        let x = random_matrix(9, 5, seed ^ 17);
        let a = mlp_forward(&enc, &x).unwrap().0;
        let b = mlp_forward(&enc, &x).unwrap().0;
        prop_assert!(a.as_slice().iter().zip(b.as_slice()).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn lp_single_competitor_is_exactly_zero() {
    for seed in 0..200 {
        let z = random_matrix(2, 3, seed);
        let w = high_order(&random_graph(2, 1.0, seed), ProximityMode::OneHop);
        let (value, _) = lp_loss(&z, &w).unwrap();
        assert!(value >= 0.0 && value < 1e-15, "seed {seed}: {value}");
    }
}
