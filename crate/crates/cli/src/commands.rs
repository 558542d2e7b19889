use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use multiplex::eval::{
    clustering_accuracy, kmeans_with, linear_probe, nmi, silhouette, KMeansConfig, Metric,
    MetricTable, Partition,
};
use multiplex::experiment::{depth_trial, mean_std, noise_sweep, oos_trial, synth_for_seed};
use multiplex::gradcheck::{run_gradcheck, GradCheckConfig, COMPONENTS};
use multiplex::graph::io::{read_labels, read_matrix, write_labels, write_layer, write_matrix};
use multiplex::graph::{load_multiplex, GraphView};
use multiplex::model::{load_encoder, save_encoder, EncoderKind, GcnEncoder};
use multiplex::train::{embed, infer_unseen, train, EmbeddingSet, Encoder, TrainedModel};
use multiplex::{Graph, Matrix, Model, Rng};

use crate::{CliError, RunConfig};

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "mgl", version, about = "Multiplex graph embedding experiments")]
pub struct Cli {
    /// key=value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `seed` and collapses `seeds` to this single value.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a planted-partition multiplex graph.
    Synth,
    /// Train encoders; writes model files, embeddings and the loss log.
    Train,
    /// Embed nodes with a saved model.
    Embed,
    /// Linear-probe classification of saved embeddings.
    EvalClassify,
    /// k-means clustering of saved embeddings.
    EvalCluster,
    /// Clustering quality under random-edge noise for each objective variant.
    NoiseSweep,
    /// Out-of-sample inference quality and latency.
    Oos,
    /// Clustering quality against encoder depth, MLP versus GCN.
    DepthSweep,
    /// Finite-difference check of every analytic gradient.
    Gradcheck,
}

pub fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    cfg.validate()?;
    let resolved = cfg.to_text();
    eprint!("{resolved}");
    create_dir(&cli.out)?;
    write(&cli.out, "config.txt", &resolved)?;

    let out = cli.out.as_path();
    match cli.command {
        Command::Synth => synth(&cfg, out),
        Command::Train => train_cmd(&cfg, out),
        Command::Embed => embed_cmd(&cfg, out),
        Command::EvalClassify => eval_classify(&cfg, out),
        Command::EvalCluster => eval_cluster(&cfg, out),
        Command::NoiseSweep => noise_cmd(&cfg, out),
        Command::Oos => oos_cmd(&cfg, out),
        Command::DepthSweep => depth_cmd(&cfg, out),
        Command::Gradcheck => gradcheck_cmd(&cfg, out),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::Io { path, source: e })
}

/// Prints a table to standard output and stores it under `name`.
fn emit(dir: &Path, name: &str, text: &str) -> Result<()> {
    print!("{text}");
    write(dir, name, text)
}

fn require<'a>(p: &'a Option<PathBuf>, key: &str, cmd: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| CliError::Invalid(format!("{cmd} needs {key}=PATH in the config")))
}

fn write_graph(g: &Graph, out: &Path) -> Result<()> {
    write_matrix(out.join("features.txt"), g.features())?;
    for (v, layer) in g.layers().iter().enumerate() {
        write_layer(out.join(format!("layer_{v}.txt")), layer)?;
    }
    if let Some(labels) = g.labels() {
        write_labels(out.join("labels.txt"), labels)?;
    }
    Ok(())
}

/// Graph from the configured files, or a fresh SBM when `features` is unset.
fn input_graph(cfg: &RunConfig, out: &Path) -> Result<Graph> {
    let Some(features) = &cfg.features else {
        let g = synth_for_seed(&cfg.sbm, cfg.seed)?;
        write_graph(&g, out)?;
        return Ok(g);
    };
    if cfg.layers.is_empty() {
        return Err(CliError::Invalid(
            "layers=PATH[,PATH...] is required with features".into(),
        ));
    }
    let loaded = load_multiplex::<f64, _>(features, &cfg.layers, cfg.labels.as_deref())?;
    for v in &loaded.empty_layers {
        eprintln!(
            "warning: layer {v} ({}) has no edges",
            cfg.layers[*v].display()
        );
    }
    Ok(loaded.graph)
}

fn synth(cfg: &RunConfig, out: &Path) -> Result<()> {
    let g = synth_for_seed(&cfg.sbm, cfg.seed)?;
    write_graph(&g, out)?;
    let mut table = String::from("layer\tmerged_a\tmerged_b\n");
    for v in 0..cfg.sbm.v {
        match cfg.sbm.merged_pair(v) {
            Some((a, b)) => writeln!(table, "{v}\t{a}\t{b}"),
            None => writeln!(table, "{v}\t-\t-"),
        }
        .expect("writing to a String");
    }
    write(out, "merged_blocks.tsv", &table)
}

fn write_embeddings(emb: &EmbeddingSet<f64>, out: &Path) -> Result<()> {
    write_matrix(out.join("embeddings.txt"), &emb.fused)?;
    for (v, z) in emb.per_layer.iter().enumerate() {
        write_matrix(out.join(format!("embeddings_layer_{v}.txt")), z)?;
    }
    Ok(())
}

fn loss_log(model: &Model) -> String {
    let v = model.encoders.len();
    let mut out = String::from("epoch");
    for i in 0..v {
        let _ = write!(out, "\tlp_{i}");
    }
    out.push_str("\tcca_invariance\tcca_decorrelation\ttotal\n");
    for (epoch, r) in model.loss_history.iter().enumerate() {
        let _ = write!(out, "{epoch}");
        for lp in &r.lp_per_layer {
            let _ = write!(out, "\t{lp}");
        }
        let _ = writeln!(
            out,
            "\t{}\t{}\t{}",
            r.cca_invariance, r.cca_decorrelation, r.total
        );
    }
    out
}

fn train_cmd(cfg: &RunConfig, out: &Path) -> Result<()> {
    let g = input_graph(cfg, out)?;
    let model = train(g.view(), &cfg.train)?;
    for (v, enc) in model.encoders.iter().enumerate() {
        save_encoder(
            out.join(format!("encoder_{v}.txt")),
            enc.kind(),
            enc.params(),
        )?;
    }
    write_embeddings(&embed(&model, g.view())?, out)?;
    write(out, "loss.tsv", &loss_log(&model))
}

fn load_model(cfg: &RunConfig, layers: &[multiplex::Adjacency]) -> Result<Model> {
    let dir = require(&cfg.model_dir, "model_dir", "embed")?;
    let mut encoders = Vec::new();
    loop {
        let path = dir.join(format!("encoder_{}.txt", encoders.len()));
        if !path.exists() {
            break;
        }
        let (kind, params) = load_encoder::<f64>(&path)?;
        encoders.push(match kind {
            EncoderKind::Mlp => Encoder::Mlp(params),
            EncoderKind::GcnBaseline => {
                let layer = layers.get(encoders.len()).ok_or_else(|| {
                    CliError::Invalid(format!(
                        "{} is a GCN encoder; layers=PATH,... is required",
                        path.display()
                    ))
                })?;
                Encoder::Gcn(GcnEncoder::new(params, layer))
            }
        });
    }
    if encoders.is_empty() {
        return Err(CliError::Invalid(format!(
            "no encoder_0.txt in {}",
            dir.display()
        )));
    }
    Ok(TrainedModel {
        encoders,
        config: cfg.train.clone(),
        loss_history: Vec::new(),
    })
}

fn embed_cmd(cfg: &RunConfig, out: &Path) -> Result<()> {
    let features = require(&cfg.features, "features", "embed")?;
    let emb = if cfg.layers.is_empty() {
        let model = load_model(cfg, &[])?;
        infer_unseen(&model, &read_matrix(features)?)?
    } else {
        let g = load_multiplex::<f64, _>(features, &cfg.layers, None)?.graph;
        let model = load_model(cfg, g.layers())?;
        embed(
            &model,
            GraphView {
                features: g.features(),
                layers: g.layers(),
            },
        )?
    };
    write_embeddings(&emb, out)
}

fn normalize_rows(z: &mut Matrix) {
    for r in 0..z.rows() {
        let row = z.row_mut(r);
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }
}

fn eval_inputs(cfg: &RunConfig, cmd: &str) -> Result<(Matrix, Vec<usize>)> {
    let mut z = read_matrix::<f64>(require(&cfg.embeddings, "embeddings", cmd)?)?;
    let labels = read_labels(require(&cfg.labels, "labels", cmd)?, z.rows())?;
    if cfg.normalize {
        normalize_rows(&mut z);
    }
    Ok((z, labels))
}

/// One table for a single seed; otherwise mean and std per metric plus a
/// per-seed table.
fn emit_metric_runs(runs: &[(u64, MetricTable)], out: &Path) -> Result<()> {
    if let [(_, table)] = runs {
        return emit(out, "metrics.tsv", &table.to_tsv());
    }
    let mut per_seed = String::from("seed\tmetric\tvalue\n");
    for (seed, table) in runs {
        for (m, v) in &table.entries {
            let _ = writeln!(per_seed, "{seed}\t{m}\t{v:.6}");
        }
    }
    write(out, "metrics_per_seed.tsv", &per_seed)?;
    let mut summary = String::from("metric\tvalue\tstd\n");
    for (m, _) in &runs[0].1.entries {
        let values: Vec<f64> = runs.iter().filter_map(|(_, t)| t.get(*m)).collect();
        let (mean, std) = mean_std(&values);
        let _ = writeln!(summary, "{m}\t{mean:.6}\t{std:.6}");
    }
    emit(out, "metrics.tsv", &summary)
}

fn eval_classify(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (z, labels) = eval_inputs(cfg, "eval-classify")?;
    let n = z.rows();
    if n < 2 {
        return Err(CliError::Invalid("need at least 2 embedded nodes".into()));
    }
    let n_train = ((cfg.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let mut rng = Rng::substream(seed, 0);
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let (tr, te) = order.split_at(n_train);
        let y_tr: Vec<usize> = tr.iter().map(|&i| labels[i]).collect();
        let y_te: Vec<usize> = te.iter().map(|&i| labels[i]).collect();
        let outcome = linear_probe(
            &z.select_rows(tr),
            &y_tr,
            &z.select_rows(te),
            &y_te,
            &cfg.probe,
            &mut rng,
        )?;
        if !outcome.missing_classes.is_empty() {
            eprintln!(
                "warning: seed {seed}: test classes {:?} absent from the probe training split",
                outcome.missing_classes
            );
        }
        runs.push((seed, outcome.table));
    }
    emit_metric_runs(&runs, out)
}

fn eval_cluster(cfg: &RunConfig, out: &Path) -> Result<()> {
    let (z, labels) = eval_inputs(cfg, "eval-cluster")?;
    let truth = Partition::from_labels(&labels);
    let k = truth.k();
    let sil = silhouette(&z, &truth)?;
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let p = kmeans_with(
            &z,
            k,
            &KMeansConfig::default(),
            &mut Rng::substream(seed, 0),
        )?
        .partition;
        let mut table = MetricTable::default();
        table.push(Metric::Accuracy, clustering_accuracy(&p, &labels)?);
        table.push(Metric::Nmi, nmi(&p, &labels)?);
        table.push(Metric::Silhouette, sil);
        runs.push((seed, table));
    }
    emit_metric_runs(&runs, out)
}

fn noise_cmd(cfg: &RunConfig, out: &Path) -> Result<()> {
    let rows = noise_sweep(&cfg.sbm, &cfg.train, &cfg.variants, &cfg.etas, &cfg.seeds)?;
    let mut table = String::from("variant\teta\tnmi\tnmi_std\taccuracy\taccuracy_std\n");
    let mut per_seed = String::from("variant\teta\tseed\tnmi\taccuracy\n");
    for row in &rows {
        let (nmi, nmi_std) = row.nmi();
        let (acc, acc_std) = row.accuracy();
        let _ = writeln!(
            table,
            "{}\t{}\t{nmi:.6}\t{nmi_std:.6}\t{acc:.6}\t{acc_std:.6}",
            row.objective, row.eta
        );
        for (seed, s) in cfg.seeds.iter().zip(&row.per_seed) {
            let _ = writeln!(
                per_seed,
                "{}\t{}\t{seed}\t{:.6}\t{:.6}",
                row.objective, row.eta, s.nmi, s.accuracy
            );
        }
    }
    write(out, "noise_per_seed.tsv", &per_seed)?;
    emit(out, "noise.tsv", &table)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
}

fn mean_cell(values: &[Option<f64>]) -> String {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.is_empty() {
        "-".into()
    } else {
        format!("{:.6}", mean_std(&present).0)
    }
}

fn oos_cmd(cfg: &RunConfig, out: &Path) -> Result<()> {
    let mut table = String::from(
        "seed\tratio\tseen_micro_f1\tseen_macro_f1\tunseen_micro_f1\tunseen_macro_f1\n",
    );
    let mut timing = String::from("seed\tratio\tunseen_nodes\tinference_ms\n");
    for &ratio in &cfg.oos_ratios {
        let trials = cfg
            .seeds
            .iter()
            .map(|&s| {
                oos_trial(
                    &cfg.sbm,
                    &cfg.train,
                    ratio,
                    cfg.train_fraction,
                    &cfg.probe,
                    s,
                    &mut |_| {},
                )
            })
            .collect::<multiplex::Result<Vec<_>>>()?;
        for t in &trials {
            let _ = writeln!(
                table,
                "{}\t{ratio}\t{:.6}\t{:.6}\t{}\t{}",
                t.seed,
                t.seen_micro_f1,
                t.seen_macro_f1,
                cell(t.unseen_micro_f1),
                cell(t.unseen_macro_f1)
            );
            let _ = writeln!(
                timing,
                "{}\t{ratio}\t{}\t{:.3}",
                t.seed, t.unseen_count, t.inference_ms
            );
        }
        let col = |f: fn(&multiplex::experiment::OosTrial) -> Option<f64>| {
            mean_cell(&trials.iter().map(f).collect::<Vec<_>>())
        };
        let _ = writeln!(
            table,
            "mean\t{ratio}\t{}\t{}\t{}\t{}",
            col(|t| Some(t.seen_micro_f1)),
            col(|t| Some(t.seen_macro_f1)),
            col(|t| t.unseen_micro_f1),
            col(|t| t.unseen_macro_f1)
        );
        let ms: Vec<f64> = trials.iter().map(|t| t.inference_ms).collect();
        let _ = writeln!(timing, "mean\t{ratio}\t-\t{:.3}", mean_std(&ms).0);
    }
    write(out, "oos_timing.tsv", &timing)?;
    emit(out, "oos.tsv", &table)
}

fn depth_cmd(cfg: &RunConfig, out: &Path) -> Result<()> {
    let mut table = String::from("depth\tencoder_kind\tnmi\tnmi_std\taccuracy\taccuracy_std\n");
    for &depth in &cfg.depths {
        for kind in [EncoderKind::Mlp, EncoderKind::GcnBaseline] {
            let scores = cfg
                .seeds
                .iter()
                .map(|&s| depth_trial(&cfg.sbm, &cfg.train, kind, depth, cfg.depth_width, s))
                .collect::<multiplex::Result<Vec<_>>>()?;
            let (nmi, nmi_std) = mean_std(&scores.iter().map(|s| s.nmi).collect::<Vec<_>>());
            let (acc, acc_std) = mean_std(&scores.iter().map(|s| s.accuracy).collect::<Vec<_>>());
            let _ = writeln!(
                table,
                "{depth}\t{kind}\t{nmi:.6}\t{nmi_std:.6}\t{acc:.6}\t{acc_std:.6}"
            );
        }
    }
    emit(out, "depth.tsv", &table)
}

fn gradcheck_cmd(cfg: &RunConfig, out: &Path) -> Result<()> {
    let fault = cfg.gradcheck_fault.as_deref();
    if let Some(name) = fault {
        if !COMPONENTS.contains(&name) {
            return Err(CliError::Invalid(format!(
                "gradcheck_fault={name:?} is not one of {}",
                COMPONENTS.join(", ")
            )));
        }
    }
    let check = GradCheckConfig {
        seed: cfg.seed,
        ..GradCheckConfig::default()
    };
    let report = run_gradcheck(&check, fault)?;
    emit(out, "gradcheck.tsv", &report.to_tsv())?;
    let failed: Vec<String> = report
        .components
        .iter()
        .filter(|c| !c.passed)
        .map(|c| {
            format!(
                "{} block {} (max relative error {:.3e} > {:.0e})",
                c.component, c.worst_block, c.max_rel_err, check.tolerance
            )
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::GradCheck(failed.join("; ")))
    }
}
