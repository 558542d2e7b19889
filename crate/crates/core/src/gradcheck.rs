//! Central finite-difference verification of every analytic gradient.

use std::fmt::Write as _;

use crate::error::Result;
use crate::graph::{high_order, ProximityMatrix, ProximityMode, SparseAdjacency};
use crate::loss::{cca_loss, lp_loss};
use crate::model::{mlp_init, GcnEncoder, MlpEncoder};
use crate::numerics::{DenseMatrix, Rng};
use crate::train::{evaluate_objective, Encoder, Objective, TrainConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckConfig {
    pub nodes: usize,
    pub views: usize,
    pub embed_dim: usize,
    pub feature_dim: usize,
    pub hidden: usize,
    pub step: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            nodes: 12,
            views: 2,
            embed_dim: 5,
            feature_dim: 4,
            hidden: 6,
            step: 1e-5,
            tolerance: 1e-4,
            seed: 0,
        }
    }
}

/// Relative errors below this magnitude are measured against it instead.
pub const REL_ERR_FLOOR: f64 = 1e-5;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERR_FLOOR)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentReport {
    pub component: String,
    /// Parameter block holding the worst entry.
    pub worst_block: String,
    pub max_rel_err: f64,
    pub entries: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    pub components: Vec<ComponentReport>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.components.iter().all(|c| c.passed)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("component\tworst_block\tmax_rel_err\tentries\tstatus\n");
        for c in &self.components {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.3e}\t{}\t{}",
                c.component,
                c.worst_block,
                c.max_rel_err,
                c.entries,
                if c.passed { "pass" } else { "FAIL" }
            );
        }
        out
    }
}

struct Block {
    name: String,
    analytic: Vec<f64>,
    numeric: Vec<f64>,
}

fn summarize(
    component: &str,
    blocks: Vec<Block>,
    tol: f64,
    fault: Option<&str>,
) -> ComponentReport {
    let mut worst = (0.0f64, String::new());
    let mut entries = 0;
    for (k, mut b) in blocks.into_iter().enumerate() {
        if k == 0 && fault == Some(component) {
            b.analytic.iter_mut().for_each(|v| *v = -*v);
        }
        for (&a, &n) in b.analytic.iter().zip(&b.numeric) {
            entries += 1;
            let e = relative_error(a, n);
            if e > worst.0 || worst.1.is_empty() {
                worst = (e.max(worst.0), b.name.clone());
            }
        }
    }
    ComponentReport {
        component: component.into(),
        worst_block: worst.1,
        max_rel_err: worst.0,
        entries,
        passed: worst.0 <= tol,
    }
}

fn central_difference(values: &mut [f64], step: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    (0..values.len())
        .map(|i| {
            let orig = values[i];
            values[i] = orig + step;
            let plus = f(values);
            values[i] = orig - step;
            let minus = f(values);
            values[i] = orig;
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix<f64> {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.normal())
}

fn random_proximity(n: usize, rng: &mut Rng) -> ProximityMatrix<f64> {
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push((i, (i + 1) % n, 1.0));
        for j in i + 2..n {
            if rng.bernoulli(0.25) {
                edges.push((i, j, 0.5 + rng.uniform()));
            }
        }
    }
    let a = SparseAdjacency::from_edges(n, edges).expect("valid random graph");
    high_order(&a, ProximityMode::Combined)
}

fn check_lp(cfg: &GradCheckConfig, rng: &mut Rng, fault: Option<&str>) -> Result<ComponentReport> {
    let z = random_matrix(cfg.nodes, cfg.embed_dim, rng);
    let w = random_proximity(cfg.nodes, rng);
    let (_, dz) = lp_loss(&z, &w)?;
    let mut values = z.as_slice().to_vec();
    let numeric = central_difference(&mut values, cfg.step, |v| {
        let m = DenseMatrix::new(cfg.nodes, cfg.embed_dim, v.to_vec()).unwrap();
        lp_loss(&m, &w).unwrap().0
    });
    let block = Block {
        name: "dz".into(),
        analytic: dz.into_vec(),
        numeric,
    };
    Ok(summarize("lp_loss", vec![block], cfg.tolerance, fault))
}

fn check_cca(cfg: &GradCheckConfig, rng: &mut Rng, fault: Option<&str>) -> Result<ComponentReport> {
    let gamma = 0.7;
    let zs: Vec<DenseMatrix<f64>> = (0..cfg.views)
        .map(|_| random_matrix(cfg.nodes, cfg.embed_dim, rng))
        .collect();
    let out = cca_loss(&zs, gamma)?;
    let mut blocks = Vec::new();
    for v in 0..cfg.views {
        let mut values = zs[v].as_slice().to_vec();
        let numeric = central_difference(&mut values, cfg.step, |vals| {
            let mut views = zs.clone();
            views[v] = DenseMatrix::new(cfg.nodes, cfg.embed_dim, vals.to_vec()).unwrap();
            let o = cca_loss(&views, gamma).unwrap();
            o.invariance + gamma * o.decorrelation
        });
        blocks.push(Block {
            name: format!("dz{v}"),
            analytic: out.grads[v].as_slice().to_vec(),
            numeric,
        });
    }
    Ok(summarize("cca_loss", blocks, cfg.tolerance, fault))
}

fn encoder_blocks(
    enc: &Encoder<f64>,
    x: &DenseMatrix<f64>,
    probe: &DenseMatrix<f64>,
    step: f64,
) -> Result<Vec<Block>> {
    let (_, cache) = enc.forward(x)?;
    let grads = enc.backward(&cache, probe)?;
    let objective = |e: &Encoder<f64>, input: &DenseMatrix<f64>| -> f64 {
        let z = e.forward(input).unwrap().0;
        z.as_slice()
            .iter()
            .zip(probe.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    };
    let mut blocks = Vec::new();
    let names = enc.params().block_names();
    let analytic = grads.blocks();
    for (b, name) in names.iter().enumerate() {
        let mut work = enc.clone();
        let mut values = work.params().params()[b].to_vec();
        let numeric = central_difference(&mut values, step, |vals| {
            work.params_mut().params_mut()[b].copy_from_slice(vals);
            objective(&work, x)
        });
        blocks.push(Block {
            name: name.clone(),
            analytic: analytic[b].to_vec(),
            numeric,
        });
    }
    let mut values = x.as_slice().to_vec();
    let numeric = central_difference(&mut values, step, |vals| {
        objective(
            enc,
            &DenseMatrix::new(x.rows(), x.cols(), vals.to_vec()).unwrap(),
        )
    });
    blocks.push(Block {
        name: "dx".into(),
        analytic: grads.d_input.as_slice().to_vec(),
        numeric,
    });
    Ok(blocks)
}

fn dims(cfg: &GradCheckConfig) -> Vec<usize> {
    vec![cfg.feature_dim, cfg.hidden, cfg.hidden, cfg.embed_dim]
}

fn check_mlp(cfg: &GradCheckConfig, rng: &mut Rng, fault: Option<&str>) -> Result<ComponentReport> {
    let enc: MlpEncoder<f64> = mlp_init(&dims(cfg), rng)?;
    let x = random_matrix(cfg.nodes, cfg.feature_dim, rng);
    let probe = random_matrix(cfg.nodes, cfg.embed_dim, rng);
    let blocks = encoder_blocks(&Encoder::Mlp(enc), &x, &probe, cfg.step)?;
    Ok(summarize("mlp_backward", blocks, cfg.tolerance, fault))
}

fn check_gcn(cfg: &GradCheckConfig, rng: &mut Rng, fault: Option<&str>) -> Result<ComponentReport> {
    let params: MlpEncoder<f64> = mlp_init(&dims(cfg), rng)?;
    let mut edges = Vec::new();
    for i in 0..cfg.nodes {
        for j in i + 1..cfg.nodes {
            if rng.bernoulli(0.3) {
                edges.push((i, j, 1.0));
            }
        }
    }
    let a = SparseAdjacency::from_edges(cfg.nodes, edges)?;
    let x = random_matrix(cfg.nodes, cfg.feature_dim, rng);
    let probe = random_matrix(cfg.nodes, cfg.embed_dim, rng);
    let blocks = encoder_blocks(
        &Encoder::Gcn(GcnEncoder::new(params, &a)),
        &x,
        &probe,
        cfg.step,
    )?;
    Ok(summarize("gcn_backward", blocks, cfg.tolerance, fault))
}

fn check_total(
    cfg: &GradCheckConfig,
    rng: &mut Rng,
    fault: Option<&str>,
) -> Result<ComponentReport> {
    let x = random_matrix(cfg.nodes, cfg.feature_dim, rng);
    let proximities: Vec<_> = (0..cfg.views)
        .map(|_| random_proximity(cfg.nodes, rng))
        .collect();
    let mut encoders = (0..cfg.views)
        .map(|_| {
            Ok(Encoder::Mlp(mlp_init(
                &[cfg.feature_dim, cfg.hidden, cfg.embed_dim],
                rng,
            )?))
        })
        .collect::<Result<Vec<_>>>()?;
    let train_cfg = TrainConfig {
        beta: 0.8,
        gamma: 0.6,
        objective: Objective::Full,
        ..TrainConfig::default()
    };
    let eval = evaluate_objective(&encoders, &x, &proximities, &train_cfg)?;
    let mut blocks = Vec::new();
    for v in 0..cfg.views {
        let names = encoders[v].params().block_names();
        let analytic = eval.grads[v]
            .blocks()
            .iter()
            .map(|b| b.to_vec())
            .collect::<Vec<_>>();
        for (b, name) in names.iter().enumerate() {
            let mut values = encoders[v].params().params()[b].to_vec();
            let numeric = central_difference(&mut values, cfg.step, |vals| {
                encoders[v].params_mut().params_mut()[b].copy_from_slice(vals);
                evaluate_objective(&encoders, &x, &proximities, &train_cfg)
                    .unwrap()
                    .report
                    .total
            });
            encoders[v].params_mut().params_mut()[b].copy_from_slice(&values);
            blocks.push(Block {
                name: format!("encoder{v}/{name}"),
                analytic: analytic[b].clone(),
                numeric,
            });
        }
    }
    Ok(summarize("total_loss", blocks, cfg.tolerance, fault))
}

/// Component names accepted by [`run_gradcheck`]'s fault injection.
pub const COMPONENTS: [&str; 5] = [
    "lp_loss",
    "cca_loss",
    "mlp_backward",
    "gcn_backward",
    "total_loss",
];

/// Runs every check. `inject_fault` flips the sign of the first analytic block
/// of the named component, to confirm the harness detects broken gradients.
pub fn run_gradcheck(cfg: &GradCheckConfig, inject_fault: Option<&str>) -> Result<GradCheckReport> {
    let components = vec![
        check_lp(cfg, &mut Rng::substream(cfg.seed, 0), inject_fault)?,
        check_cca(cfg, &mut Rng::substream(cfg.seed, 1), inject_fault)?,
        check_mlp(cfg, &mut Rng::substream(cfg.seed, 2), inject_fault)?,
        check_gcn(cfg, &mut Rng::substream(cfg.seed, 3), inject_fault)?,
        check_total(cfg, &mut Rng::substream(cfg.seed, 4), inject_fault)?,
    ];
    Ok(GradCheckReport { components })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_components_pass() {
        let report = run_gradcheck(&GradCheckConfig::default(), None).unwrap();
        print!("{}", report.to_tsv());
        assert!(report.passed(), "{}", report.to_tsv());
    }

    #[test]
    fn injected_sign_error_is_caught() {
        for name in COMPONENTS {
            let report = run_gradcheck(&GradCheckConfig::default(), Some(name)).unwrap();
            let bad: Vec<_> = report.components.iter().filter(|c| !c.passed).collect();
            assert_eq!(bad.len(), 1, "{name}");
            assert_eq!(bad[0].component, name);
            assert!(!bad[0].worst_block.is_empty());
        }
    }
}
