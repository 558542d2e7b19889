//! Joint training of the per-layer encoders, average fusion and feature-only
//! inference for unseen nodes.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::graph::{high_order, GraphView, ProximityMatrix, ProximityMode};
use crate::loss::{cca_loss, lp_loss, total_loss, LossReport};
use crate::model::{
    adam_step, mlp_init, AdamState, EncoderKind, ForwardCache, GcnEncoder, MlpEncoder, MlpGradients,
};
use crate::numerics::{DenseMatrix, Rng, Scalar};

/// Which terms of the objective are optimized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Objective {
    /// LP on every layer plus the CCA term.
    #[default]
    Full,
    /// LP only (the CCA weight is forced to zero).
    LpOnly,
    /// CCA only (LP terms are not computed and report as zero).
    CcaOnly,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::Full, Objective::LpOnly, Objective::CcaOnly];
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Full => "full",
            Self::LpOnly => "lp_only",
            Self::CcaOnly => "cca_only",
        })
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "lp_only" => Ok(Self::LpOnly),
            "cca_only" => Ok(Self::CcaOnly),
            other => Err(invalid(format!(
                "unknown objective {other:?} (expected full, lp_only or cca_only)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Hidden layer widths; the encoder is `[D, hidden.., embed_dim]`.
    pub hidden: Vec<usize>,
    pub embed_dim: usize,
    pub epochs: usize,
    pub lr: f64,
    pub beta: f64,
    pub gamma: f64,
    pub w_mode: ProximityMode,
    pub seed: u64,
    pub encoder_kind: EncoderKind,
    pub objective: Objective,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: vec![256],
            embed_dim: 64,
            epochs: 500,
            lr: 1e-3,
            beta: 1.0,
            gamma: 1.0,
            w_mode: ProximityMode::TwoHop,
            seed: 0,
            encoder_kind: EncoderKind::Mlp,
            objective: Objective::Full,
        }
    }
}

impl TrainConfig {
    pub fn dims(&self, input_dim: usize) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.hidden.len() + 2);
        dims.push(input_dim);
        dims.extend(&self.hidden);
        dims.push(self.embed_dim);
        dims
    }

    /// Encoder with `depth` weight layers of width `width` (depth 1 is linear).
    pub fn with_depth(&self, depth: usize, width: usize) -> Self {
        Self {
            hidden: vec![width; depth.saturating_sub(1)],
            ..self.clone()
        }
    }

    pub fn effective_beta(&self) -> f64 {
        match self.objective {
            Objective::LpOnly => 0.0,
            _ => self.beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(invalid(format!("lr must be positive, got {}", self.lr)));
        }
        if !(self.beta >= 0.0 && self.gamma >= 0.0) {
            return Err(invalid("beta and gamma must be nonnegative"));
        }
        if self.embed_dim == 0 || self.hidden.contains(&0) {
            return Err(invalid("layer widths must be positive"));
        }
        Ok(())
    }
}

/// One encoder per layer.
#[derive(Clone, Debug)]
pub enum Encoder<T> {
    Mlp(MlpEncoder<T>),
    Gcn(GcnEncoder<T>),
}

impl<T: Scalar> Encoder<T> {
    pub fn kind(&self) -> EncoderKind {
        match self {
            Self::Mlp(_) => EncoderKind::Mlp,
            Self::Gcn(_) => EncoderKind::GcnBaseline,
        }
    }

    /// The parameter set (shared layout for both kinds).
    pub fn params(&self) -> &MlpEncoder<T> {
        match self {
            Self::Mlp(m) => m,
            Self::Gcn(g) => &g.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut MlpEncoder<T> {
        match self {
            Self::Mlp(m) => m,
            Self::Gcn(g) => &mut g.params,
        }
    }

    pub fn forward(&self, x: &DenseMatrix<T>) -> Result<(DenseMatrix<T>, ForwardCache<T>)> {
        match self {
            Self::Mlp(m) => m.forward(x),
            Self::Gcn(g) => g.forward(x),
        }
    }

    pub fn backward(
        &self,
        cache: &ForwardCache<T>,
        dz: &DenseMatrix<T>,
    ) -> Result<MlpGradients<T>> {
        match self {
            Self::Mlp(m) => m.backward(cache, dz),
            Self::Gcn(g) => g.backward(cache, dz),
        }
    }
}

/// Per-layer embeddings and their elementwise mean.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet<T> {
    pub per_layer: Vec<DenseMatrix<T>>,
    pub fused: DenseMatrix<T>,
}

impl<T: Scalar> EmbeddingSet<T> {
    pub fn from_layers(per_layer: Vec<DenseMatrix<T>>) -> Result<Self> {
        let first = per_layer
            .first()
            .ok_or_else(|| invalid("fusion needs at least one embedding"))?;
        let mut fused = DenseMatrix::zeros(first.rows(), first.cols());
        for z in &per_layer {
            fused.axpy(T::one(), z)?;
        }
        let fused = fused.scale(T::one() / T::lit(per_layer.len() as f64));
        Ok(Self { per_layer, fused })
    }
}

#[derive(Clone, Debug)]
pub struct TrainedModel<T> {
    pub encoders: Vec<Encoder<T>>,
    pub config: TrainConfig,
    pub loss_history: Vec<LossReport<T>>,
}

/// Objective value and per-encoder gradients for one full-batch pass.
pub struct ObjectiveEval<T> {
    pub report: LossReport<T>,
    pub grads: Vec<MlpGradients<T>>,
}

/// Forward every encoder, evaluate the configured objective and backpropagate.
pub fn evaluate_objective<T: Scalar>(
    encoders: &[Encoder<T>],
    features: &DenseMatrix<T>,
    proximities: &[ProximityMatrix<T>],
    cfg: &TrainConfig,
) -> Result<ObjectiveEval<T>> {
    let mut zs = Vec::with_capacity(encoders.len());
    let mut caches = Vec::with_capacity(encoders.len());
    for enc in encoders {
        let (z, cache) = enc.forward(features)?;
        zs.push(z);
        caches.push(cache);
    }
    let beta = T::lit(cfg.effective_beta());
    let gamma = T::lit(cfg.gamma);

    let mut lp_values = vec![T::zero(); zs.len()];
    let mut dzs: Vec<DenseMatrix<T>> = zs
        .iter()
        .map(|z| DenseMatrix::zeros(z.rows(), z.cols()))
        .collect();
    if cfg.objective != Objective::CcaOnly {
        for (v, (z, w)) in zs.iter().zip(proximities).enumerate() {
            let (value, dz) = lp_loss(z, w)?;
            lp_values[v] = value;
            dzs[v] = dz;
        }
    }
    let cca = cca_loss(&zs, gamma)?;
    let report = total_loss(&lp_values, cca.invariance, cca.decorrelation, beta, gamma)?;
    if beta != T::zero() {
        for (dz, g) in dzs.iter_mut().zip(&cca.grads) {
            dz.axpy(beta, g)?;
        }
    }
    let grads = encoders
        .iter()
        .zip(&caches)
        .zip(&dzs)
        .map(|((enc, cache), dz)| enc.backward(cache, dz))
        .collect::<Result<Vec<_>>>()?;
    Ok(ObjectiveEval { report, grads })
}

/// Freshly initialized model: encoder `v` draws from RNG substream `v` of the seed.
pub fn init_model<T: Scalar>(g: GraphView<'_, T>, cfg: &TrainConfig) -> Result<TrainedModel<T>> {
    cfg.validate()?;
    let dims = cfg.dims(g.features.cols());
    let encoders = g
        .layers
        .iter()
        .enumerate()
        .map(|(v, layer)| {
            let params = mlp_init(&dims, &mut Rng::substream(cfg.seed, v as u64))?;
            Ok(match cfg.encoder_kind {
                EncoderKind::Mlp => Encoder::Mlp(params),
                EncoderKind::GcnBaseline => Encoder::Gcn(GcnEncoder::new(params, layer)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainedModel {
        encoders,
        config: cfg.clone(),
        loss_history: Vec::new(),
    })
}

/// Full-batch training of all encoders jointly with one Adam step per encoder
/// per epoch. Only features and adjacency are visible here.
pub fn train<T: Scalar>(g: GraphView<'_, T>, cfg: &TrainConfig) -> Result<TrainedModel<T>> {
    let mut model = init_model(g, cfg)?;
    let proximities: Vec<ProximityMatrix<T>> =
        g.layers.iter().map(|a| high_order(a, cfg.w_mode)).collect();
    let mut states: Vec<AdamState<T>> = model
        .encoders
        .iter()
        .map(|e| {
            let p = e.params();
            let lens: Vec<usize> = p.params().iter().map(|b| b.len()).collect();
            AdamState::new(cfg.lr, p.block_names(), &lens)
        })
        .collect();

    for epoch in 0..cfg.epochs {
        let eval = evaluate_objective(&model.encoders, g.features, &proximities, cfg).map_err(
            |e| match e {
                Error::NonFinite(term) => Error::Diverged { epoch, term },
                other => other,
            },
        )?;
        if !eval.report.total.is_finite() {
            return Err(Error::Diverged {
                epoch,
                term: "total loss".into(),
            });
        }
        for (v, ((enc, grads), state)) in model
            .encoders
            .iter_mut()
            .zip(&eval.grads)
            .zip(&mut states)
            .enumerate()
        {
            let blocks = grads.blocks();
            adam_step(&mut enc.params_mut().params_mut(), &blocks, state).map_err(|e| match e {
                Error::NonFinite(term) => Error::Diverged {
                    epoch,
                    term: format!("encoder {v} {term}"),
                },
                other => other,
            })?;
        }
        model.loss_history.push(eval.report);
    }
    Ok(model)
}

/// Embeddings of every node of `g` and their mean. GCN encoders propagate over
/// the layers of `g`.
pub fn embed<T: Scalar>(model: &TrainedModel<T>, g: GraphView<'_, T>) -> Result<EmbeddingSet<T>> {
    if g.layers.len() != model.encoders.len() {
        return Err(invalid(format!(
            "model has {} encoders, graph has {} layers",
            model.encoders.len(),
            g.layers.len()
        )));
    }
    let per_layer = model
        .encoders
        .iter()
        .zip(g.layers)
        .map(|(enc, layer)| match enc {
            Encoder::Mlp(m) => Ok(m.forward(g.features)?.0),
            Encoder::Gcn(gc) => Ok(GcnEncoder::new(gc.params.clone(), layer)
                .forward(g.features)?
                .0),
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingSet::from_layers(per_layer)
}

/// Embeddings for nodes never seen in training, computed from their features
/// alone.
pub fn infer_unseen<T: Scalar>(
    model: &TrainedModel<T>,
    x_un: &DenseMatrix<T>,
) -> Result<EmbeddingSet<T>> {
    let per_layer = model
        .encoders
        .iter()
        .map(|enc| match enc {
            Encoder::Mlp(m) => Ok(m.forward(x_un)?.0),
            Encoder::Gcn(_) => Err(Error::Unsupported(
                "message-passing encoders need the graph rebuilt around unseen nodes; \
                 feature-only inference requires encoder_kind=mlp"
                    .into(),
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    EmbeddingSet::from_layers(per_layer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{synth_multiplex_sbm, SbmConfig};

    fn small() -> crate::graph::MultiplexGraph<f64> {
        let cfg = SbmConfig {
            n: 40,
            d_feat: 6,
            p_in: 0.3,
            p_out: 0.02,
            ..SbmConfig::default()
        };
        synth_multiplex_sbm(&cfg, &mut Rng::new(3)).unwrap().graph
    }

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            hidden: vec![8],
            embed_dim: 4,
            epochs: 5,
            lr: 1e-2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_epochs_keeps_initialization() {
        let g = small();
        let cfg = TrainConfig {
            epochs: 0,
            ..tiny_cfg()
        };
        let trained = train(g.view(), &cfg).unwrap();
        let fresh = init_model(g.view(), &cfg).unwrap();
        for (a, b) in trained.encoders.iter().zip(&fresh.encoders) {
            assert_eq!(a.params(), b.params());
        }
        assert!(trained.loss_history.is_empty());
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let g = small();
        let a = train(g.view(), &tiny_cfg()).unwrap();
        let b = train(g.view(), &tiny_cfg()).unwrap();
        for (x, y) in a.encoders.iter().zip(&b.encoders) {
            assert_eq!(x.params().fingerprint(), y.params().fingerprint());
        }
        assert_eq!(a.loss_history.len(), 5);
    }

    #[test]
    fn fused_is_mean_of_layers() {
        let g = small();
        let model = train(g.view(), &tiny_cfg()).unwrap();
        let e = embed(&model, g.view()).unwrap();
        for i in 0..e.fused.rows() {
            for c in 0..e.fused.cols() {
                let mean = (e.per_layer[0].get(i, c) + e.per_layer[1].get(i, c)) / 2.0;
                assert!((mean - e.fused.get(i, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gcn_cannot_infer_unseen() {
        let g = small();
        let cfg = TrainConfig {
            encoder_kind: EncoderKind::GcnBaseline,
            epochs: 1,
            ..tiny_cfg()
        };
        let model = train(g.view(), &cfg).unwrap();
        let err = infer_unseen(&model, &g.features().select_rows(&[0, 1])).unwrap_err();
        assert!(err.to_string().contains("mlp"));
    }

    #[test]
    fn objective_variants_report_consistently() {
        let g = small();
        for objective in Objective::ALL {
            let cfg = TrainConfig {
                objective,
                epochs: 2,
                ..tiny_cfg()
            };
            let m = train(g.view(), &cfg).unwrap();
            let r = &m.loss_history[1];
            let rebuilt = r.lp_sum() + r.beta * r.cca();
            assert!((rebuilt - r.total).abs() < 1e-12);
            match objective {
                Objective::LpOnly => assert_eq!(r.beta, 0.0),
                Objective::CcaOnly => assert!(r.lp_per_layer.iter().all(|&v| v == 0.0)),
                Objective::Full => assert!(r.lp_sum() > 0.0),
            }
        }
    }
}
