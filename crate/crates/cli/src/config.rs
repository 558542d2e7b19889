//! Flat `key=value` run configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use multiplex::eval::ProbeConfig;
use multiplex::graph::SbmConfig;
use multiplex::train::{Objective, TrainConfig};

use crate::CliError;

/// Every key accepted in a config file, in echo order.
pub const KEYS: &[&str] = &[
    "seed",
    "n",
    "k",
    "v",
    "d_feat",
    "p_in",
    "p_out",
    "feature_noise",
    "mean_scale",
    "complementary",
    "hidden",
    "embed_dim",
    "epochs",
    "lr",
    "beta",
    "gamma",
    "w_mode",
    "encoder_kind",
    "objective",
    "features",
    "layers",
    "labels",
    "embeddings",
    "model_dir",
    "train_fraction",
    "normalize",
    "probe_l2",
    "probe_iterations",
    "probe_lr",
    "probe_balance",
    "seeds",
    "etas",
    "variants",
    "oos_ratios",
    "depths",
    "depth_width",
    "gradcheck_fault",
];

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub sbm: SbmConfig,
    pub train: TrainConfig,
    pub features: Option<PathBuf>,
    pub layers: Vec<PathBuf>,
    pub labels: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub model_dir: Option<PathBuf>,
    pub train_fraction: f64,
    /// L2-normalize embedding rows before evaluation.
    pub normalize: bool,
    pub probe: ProbeConfig,
    pub seeds: Vec<u64>,
    pub etas: Vec<f64>,
    pub variants: Vec<Objective>,
    pub oos_ratios: Vec<f64>,
    pub depths: Vec<usize>,
    pub depth_width: usize,
    pub gradcheck_fault: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sbm: SbmConfig::default(),
            train: TrainConfig::default(),
            features: None,
            layers: Vec::new(),
            labels: None,
            embeddings: None,
            model_dir: None,
            train_fraction: 0.2,
            normalize: false,
            probe: ProbeConfig::default(),
            seeds: vec![0, 1, 2, 3, 4],
            etas: vec![0.0, 0.1, 0.3, 0.5, 0.7, 0.9],
            variants: Objective::ALL.to_vec(),
            oos_ratios: vec![0.4],
            depths: vec![1, 2, 4, 8, 12, 16],
            depth_width: 64,
            gradcheck_fault: None,
        }
    }
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("{key}: cannot parse {value:?}: {e}"))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| scalar(key, s))
        .collect()
}

fn path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

fn show(p: &Option<PathBuf>) -> String {
    p.as_deref()
        .map(|p| p.display().to_string())
        .unwrap_or_default()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| CliError::Config {
                origin: source.to_string(),
                line: ln + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            cfg.set(key.trim(), value.trim()).map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let s = &mut self.sbm;
        let t = &mut self.train;
        match key {
            "seed" => self.set_seed(scalar(key, value)?),
            "n" => s.n = scalar(key, value)?,
            "k" => s.k = scalar(key, value)?,
            "v" => s.v = scalar(key, value)?,
            "d_feat" => s.d_feat = scalar(key, value)?,
            "p_in" => s.p_in = scalar(key, value)?,
            "p_out" => s.p_out = scalar(key, value)?,
            "feature_noise" => s.feature_noise = scalar(key, value)?,
            "mean_scale" => s.mean_scale = scalar(key, value)?,
            "complementary" => s.complementary = scalar(key, value)?,
            "hidden" => t.hidden = list(key, value)?,
            "embed_dim" => t.embed_dim = scalar(key, value)?,
            "epochs" => t.epochs = scalar(key, value)?,
            "lr" => t.lr = scalar(key, value)?,
            "beta" => t.beta = scalar(key, value)?,
            "gamma" => t.gamma = scalar(key, value)?,
            "w_mode" => t.w_mode = scalar(key, value)?,
            "encoder_kind" => t.encoder_kind = scalar(key, value)?,
            "objective" => t.objective = scalar(key, value)?,
            "features" => self.features = path(value),
            "layers" => self.layers = value.split(',').filter_map(|p| path(p.trim())).collect(),
            "labels" => self.labels = path(value),
            "embeddings" => self.embeddings = path(value),
            "model_dir" => self.model_dir = path(value),
            "train_fraction" => self.train_fraction = scalar(key, value)?,
            "normalize" => self.normalize = scalar(key, value)?,
            "probe_l2" => self.probe.l2 = scalar(key, value)?,
            "probe_iterations" => self.probe.iterations = scalar(key, value)?,
            "probe_lr" => self.probe.lr = scalar(key, value)?,
            "probe_balance" => self.probe.balance_classes = scalar(key, value)?,
            "seeds" => self.seeds = list(key, value)?,
            "etas" => self.etas = list(key, value)?,
            "variants" => self.variants = list(key, value)?,
            "oos_ratios" => self.oos_ratios = list(key, value)?,
            "depths" => self.depths = list(key, value)?,
            "depth_width" => self.depth_width = scalar(key, value)?,
            "gradcheck_fault" => {
                self.gradcheck_fault = (!value.is_empty()).then(|| value.to_string())
            }
            _ => {
                return Err(format!(
                    "unknown key {key:?}; valid keys: {}",
                    KEYS.join(", ")
                ));
            }
        }
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.train.seed = seed;
    }

    /// Command-line override: one seed for everything.
    pub fn override_seed(&mut self, seed: u64) {
        self.set_seed(seed);
        self.seeds = vec![seed];
    }

    fn value_of(&self, key: &str) -> String {
        let s = &self.sbm;
        let t = &self.train;
        match key {
            "seed" => self.seed.to_string(),
            "n" => s.n.to_string(),
            "k" => s.k.to_string(),
            "v" => s.v.to_string(),
            "d_feat" => s.d_feat.to_string(),
            "p_in" => s.p_in.to_string(),
            "p_out" => s.p_out.to_string(),
            "feature_noise" => s.feature_noise.to_string(),
            "mean_scale" => s.mean_scale.to_string(),
            "complementary" => s.complementary.to_string(),
            "hidden" => join(&t.hidden),
            "embed_dim" => t.embed_dim.to_string(),
            "epochs" => t.epochs.to_string(),
            "lr" => t.lr.to_string(),
            "beta" => t.beta.to_string(),
            "gamma" => t.gamma.to_string(),
            "w_mode" => t.w_mode.to_string(),
            "encoder_kind" => t.encoder_kind.to_string(),
            "objective" => t.objective.to_string(),
            "features" => show(&self.features),
            "layers" => self
                .layers
                .iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(","),
            "labels" => show(&self.labels),
            "embeddings" => show(&self.embeddings),
            "model_dir" => show(&self.model_dir),
            "train_fraction" => self.train_fraction.to_string(),
            "normalize" => self.normalize.to_string(),
            "probe_l2" => self.probe.l2.to_string(),
            "probe_iterations" => self.probe.iterations.to_string(),
            "probe_lr" => self.probe.lr.to_string(),
            "probe_balance" => self.probe.balance_classes.to_string(),
            "seeds" => join(&self.seeds),
            "etas" => join(&self.etas),
            "variants" => join(&self.variants),
            "oos_ratios" => join(&self.oos_ratios),
            "depths" => join(&self.depths),
            "depth_width" => self.depth_width.to_string(),
            "gradcheck_fault" => self.gradcheck_fault.clone().unwrap_or_default(),
            _ => unreachable!("key list and accessors out of sync: {key}"),
        }
    }

    /// Every key with its resolved value; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key}={}", self.value_of(key));
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.sbm.validate()?;
        self.train.validate()?;
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(CliError::Invalid(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.seeds.is_empty() {
            return Err(CliError::Invalid("seeds must not be empty".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("hidden", "32,16").unwrap();
        cfg.set("layers", "a.txt,b.txt").unwrap();
        cfg.set("variants", "full,cca_only").unwrap();
        let back = RunConfig::parse(&cfg.to_text(), "echo").unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let err = RunConfig::parse("# c\nbogus = 1\n", "x.cfg")
            .unwrap_err()
            .to_string();
        assert!(err.contains("x.cfg:2"), "{err}");
        assert!(err.contains("bogus") && err.contains("embed_dim"), "{err}");
    }

    #[test]
    fn comments_and_blank_lines() {
        let cfg = RunConfig::parse("n = 60 # nodes\n\n  epochs=3\n", "c").unwrap();
        assert_eq!((cfg.sbm.n, cfg.train.epochs), (60, 3));
    }

    #[test]
    fn seed_sets_training_seed() {
        let cfg = RunConfig::parse("seed=9", "c").unwrap();
        assert_eq!(cfg.train.seed, 9);
    }
}
