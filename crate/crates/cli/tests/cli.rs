use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = "n=60\nd_feat=6\np_in=0.3\nhidden=16\nembed_dim=8\nepochs=20\nlr=0.01\n";

fn mgl(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_mgl"))
        .current_dir(dir)
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn read(p: PathBuf) -> String {
    fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn synth_writes_loadable_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(&mgl(
        dir.path(),
        &["synth", "--out", "a"],
        "n=300\nk=3\nv=2\n",
    ));
    ok(&mgl(
        dir.path(),
        &["synth", "--out", "b"],
        "n=300\nk=3\nv=2\n",
    ));
    let a = dir.path().join("a");
    assert_eq!(read(a.join("features.txt")).lines().count(), 301);
    for f in [
        "features.txt",
        "layer_0.txt",
        "layer_1.txt",
        "labels.txt",
        "merged_blocks.tsv",
    ] {
        assert_eq!(read(a.join(f)), read(dir.path().join("b").join(f)), "{f}");
    }
    let g = multiplex::graph::load_multiplex::<f64, _>(
        a.join("features.txt"),
        &[a.join("layer_0.txt"), a.join("layer_1.txt")],
        Some(&a.join("labels.txt")),
    )
    .unwrap()
    .graph;
    assert_eq!(
        (g.num_nodes(), g.num_layers(), g.num_classes()),
        (300, 2, 3)
    );
    assert_eq!(
        read(a.join("merged_blocks.tsv")),
        "layer\tmerged_a\tmerged_b\n0\t0\t1\n1\t0\t2\n"
    );
}

#[test]
fn train_writes_embeddings_and_loss_log() {
    let dir = tempfile::tempdir().unwrap();
    ok(&mgl(dir.path(), &["train", "--out", "t"], SMALL));
    let t = dir.path().join("t");
    let emb = read(t.join("embeddings.txt"));
    assert_eq!(emb.lines().next(), Some("60 8"));
    let log = read(t.join("loss.tsv"));
    assert_eq!(log.lines().count(), 21);
    assert_eq!(
        log.lines().next(),
        Some("epoch\tlp_0\tlp_1\tcca_invariance\tcca_decorrelation\ttotal")
    );
    // Saved encoders reproduce the embeddings from features alone.
    let cfg = "features=t/features.txt\nmodel_dir=t\n";
    ok(&mgl(dir.path(), &["embed", "--out", "e"], cfg));
    assert_eq!(read(dir.path().join("e/embeddings.txt")), emb);
}

#[test]
fn perfect_embeddings_score_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
    let mut emb = String::from("30 3\n");
    let mut lab = String::new();
    for (i, &l) in labels.iter().enumerate() {
        let row: Vec<&str> = (0..3).map(|c| if c == l { "1" } else { "0" }).collect();
        emb.push_str(&format!("{}\n", row.join(" ")));
        lab.push_str(&format!("{i} {l}\n"));
    }
    fs::write(dir.path().join("z.txt"), emb).unwrap();
    fs::write(dir.path().join("y.txt"), lab).unwrap();
    let cfg = "embeddings=z.txt\nlabels=y.txt\nseeds=0\n";
    let out = ok(&mgl(dir.path(), &["eval-cluster", "--out", "c"], cfg));
    assert!(out.starts_with("metric\tvalue\n"), "{out}");
    assert!(
        out.contains("accuracy\t1.000000") && out.contains("nmi\t1.000000"),
        "{out}"
    );
    let out = ok(&mgl(dir.path(), &["eval-classify", "--out", "k"], cfg));
    assert!(out.contains("micro_f1\t1.000000"), "{out}");
}

#[test]
fn seed_list_reports_mean_and_std() {
    let dir = tempfile::tempdir().unwrap();
    ok(&mgl(dir.path(), &["train", "--out", "t"], SMALL));
    let cfg = "embeddings=t/embeddings.txt\nlabels=t/labels.txt\nseeds=0,1,2\n";
    let summary = ok(&mgl(dir.path(), &["eval-classify", "--out", "k"], cfg));
    let per_seed = read(dir.path().join("k/metrics_per_seed.tsv"));
    let micro: Vec<f64> = per_seed
        .lines()
        .skip(1)
        .filter(|l| l.contains("micro_f1"))
        .map(|l| l.split('\t').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(micro.len(), 3);
    let mean = micro.iter().sum::<f64>() / 3.0;
    let std = (micro.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
    let row = summary.lines().find(|l| l.starts_with("micro_f1")).unwrap();
    assert_eq!(row, format!("micro_f1\t{mean:.6}\t{std:.6}"));
}

#[test]
fn missing_labels_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("z.txt"), "2 1\n0\n1\n").unwrap();
    let out = mgl(
        dir.path(),
        &["eval-cluster"],
        "embeddings=z.txt\nlabels=nowhere/labels.txt\n",
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere/labels.txt"));
}

#[test]
fn unknown_config_key_fails_with_key_list() {
    let dir = tempfile::tempdir().unwrap();
    let out = mgl(dir.path(), &["synth"], "epochz=3\n");
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("epochz") && err.contains("epochs"), "{err}");
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("file"), "").unwrap();
    let out = mgl(dir.path(), &["synth", "--out", "file/sub"], "n=30\n");
    assert!(!out.status.success());
}

#[test]
fn gradcheck_passes_and_detects_faults() {
    let dir = tempfile::tempdir().unwrap();
    let report = ok(&mgl(dir.path(), &["gradcheck"], ""));
    for c in ["lp_loss", "cca_loss", "mlp_backward", "total_loss"] {
        assert!(
            report
                .lines()
                .any(|l| l.starts_with(c) && l.ends_with("pass")),
            "{report}"
        );
    }
    let out = mgl(dir.path(), &["gradcheck"], "gradcheck_fault=mlp_backward\n");
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("mlp_backward block W0"), "{err}");
}

#[test]
fn sweep_tables_have_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        format!("{SMALL}epochs=5\nseeds=0\netas=0,0.5,0.9\ndepths=1,2,4,8,12,16\ndepth_width=8\n");
    let noise = ok(&mgl(dir.path(), &["noise-sweep", "--out", "n"], &cfg));
    for v in ["full", "lp_only", "cca_only"] {
        assert_eq!(
            noise
                .lines()
                .filter(|l| l.starts_with(&format!("{v}\t")))
                .count(),
            3
        );
    }
    let depth = ok(&mgl(dir.path(), &["depth-sweep", "--out", "d"], &cfg));
    assert_eq!(depth.lines().count(), 13);
    assert_eq!(
        depth
            .lines()
            .filter(|l| l.contains("\tgcn-baseline\t"))
            .count(),
        6
    );
}

#[test]
fn oos_reports_seeds_and_degenerate_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}epochs=5\noos_ratios=0,0.4\n");
    let table = ok(&mgl(dir.path(), &["oos", "--out", "o"], &cfg));
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 12);
    for r in rows.iter().filter(|r| r.split('\t').nth(1) == Some("0")) {
        assert!(r.ends_with("\t-\t-"), "{r}");
    }
    assert_eq!(rows.iter().filter(|r| r.starts_with("mean\t")).count(), 2);
    let timing = read(dir.path().join("o/oos_timing.tsv"));
    assert!(timing.starts_with("seed\tratio\tunseen_nodes\tinference_ms\n"));
}
