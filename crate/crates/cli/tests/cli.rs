//! End-to-end tests of the `linklda` binary: every subcommand, the exit-code
//! contract, manifest digest enforcement, and rerun determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_linklda"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to launch the binary")
}

/// Runs the command and asserts success, returning stdout.
fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "command {:?} failed with {:?}\nstdout: {}\nstderr: {}",
        args,
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Runs the command and asserts the exact exit code, returning stderr.
fn run_expect(dir: &Path, args: &[&str], code: i32) -> String {
    let out = run(dir, args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "command {:?} exited {:?}, expected {code}\nstdout: {}\nstderr: {}",
        args,
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Small block-topic corpus on disk; returns the temp dir holding it.
fn block_corpus() -> TempDir {
    let dir = TempDir::new().unwrap();
    run_ok(
        dir.path(),
        &[
            "synth", "--kind", "block", "--docs", "30", "--vocab", "50", "--topics", "3",
            "--doc-length", "25", "--seed", "7", "--out-prefix", "corp",
        ],
    );
    dir
}

/// Small homophilous linked+labeled corpus plus a trained linked checkpoint.
fn homophily_with_linked_checkpoint() -> TempDir {
    let dir = TempDir::new().unwrap();
    run_ok(
        dir.path(),
        &["synth", "--kind", "homophily", "--docs", "40", "--seed", "3", "--out-prefix", "homo"],
    );
    run_ok(
        dir.path(),
        &[
            "train", "--docs", "homo.docs", "--vocab", "homo.vocab", "--links", "homo.links",
            "--labels", "homo.labels", "--model", "linked", "--topics", "2", "--iters", "5",
            "--seed", "1", "--checkpoint", "homo.ckpt",
        ],
    );
    dir
}

fn train_block(dir: &Path, checkpoint: &str, topics: &str, iters: &str, extra: &[&str]) {
    let mut args = vec![
        "train", "--docs", "corp.docs", "--vocab", "corp.vocab", "--topics", topics,
        "--iters", iters, "--seed", "5", "--checkpoint", checkpoint,
    ];
    args.extend_from_slice(extra);
    run_ok(dir, &args);
}

#[test]
fn rerun_with_identical_flags_is_byte_identical() {
    let dir = block_corpus();
    train_block(dir.path(), "a.ckpt", "4", "4", &["--eval-every", "2"]);
    train_block(dir.path(), "b.ckpt", "4", "4", &["--eval-every", "2"]);
    let a = fs::read(dir.path().join("a.ckpt")).unwrap();
    let b = fs::read(dir.path().join("b.ckpt")).unwrap();
    assert_eq!(a, b, "identical plain reruns must write identical checkpoints");

    train_block(dir.path(), "ag1.ckpt", "4", "4", &["--strategy", "aggregated"]);
    train_block(dir.path(), "ag2.ckpt", "4", "4", &["--strategy", "aggregated"]);
    let a = fs::read(dir.path().join("ag1.ckpt")).unwrap();
    let b = fs::read(dir.path().join("ag2.ckpt")).unwrap();
    assert_eq!(a, b, "identical aggregated reruns must write identical checkpoints");

    // The iteration log holds one row per iteration with the likelihood
    // filled on evaluation iterations only.
    let log = fs::read_to_string(dir.path().join("a.ckpt.log.csv")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(lines[0], "iteration,wall_ms,likelihood");
    assert_eq!(lines.len(), 5);
    for (idx, line) in lines.iter().enumerate().skip(1) {
        let evaluated = !line.ends_with(',');
        assert_eq!(evaluated, idx % 2 == 0, "likelihood cadence wrong at {line:?}");
    }
    assert!(dir.path().join("a.ckpt.manifest.json").is_file());
}

#[test]
fn ell_flag_conflicts_are_usage_errors() {
    let dir = block_corpus();
    let base = ["--docs", "corp.docs", "--vocab", "corp.vocab", "--checkpoint", "x.ckpt"];

    let mut plain_with_ell = vec!["train", "--strategy", "plain", "--ell", "5"];
    plain_with_ell.extend_from_slice(&base);
    run_expect(dir.path(), &plain_with_ell, 2);

    let mut sparse_without_ell = vec!["train", "--strategy", "sparse"];
    sparse_without_ell.extend_from_slice(&base);
    run_expect(dir.path(), &sparse_without_ell, 2);

    run_expect(
        dir.path(),
        &[
            "bench", "--docs", "corp.docs", "--vocab", "corp.vocab", "--strategies", "plain",
            "--ell", "5", "--out", "t.csv",
        ],
        2,
    );
    run_expect(
        dir.path(),
        &[
            "bench", "--docs", "corp.docs", "--vocab", "corp.vocab", "--strategies", "sparse",
            "--out", "t.csv",
        ],
        2,
    );
}

#[test]
fn export_chi_needs_a_linked_checkpoint() {
    let dir = block_corpus();
    train_block(dir.path(), "lda.ckpt", "4", "4", &[]);
    let stderr = run_expect(
        dir.path(),
        &[
            "export", "--checkpoint", "lda.ckpt", "--docs", "corp.docs", "--vocab",
            "corp.vocab", "--theta", "t.csv", "--chi", "c.csv",
        ],
        2,
    );
    assert!(stderr.contains("linked"), "unexpected message: {stderr}");
}

#[test]
fn single_topic_run_exports_unit_mixtures() {
    let dir = block_corpus();
    train_block(dir.path(), "k1.ckpt", "1", "4", &[]);
    run_ok(
        dir.path(),
        &[
            "export", "--checkpoint", "k1.ckpt", "--docs", "corp.docs", "--vocab",
            "corp.vocab", "--theta", "theta.csv",
        ],
    );
    let theta = fs::read_to_string(dir.path().join("theta.csv")).unwrap();
    let mut rows = theta.lines();
    assert_eq!(rows.next(), Some("doc_id,label,theta_0"));
    for row in rows {
        assert!(row.ends_with(",1.000000"), "single-topic mixture must be 1: {row:?}");
    }
}

#[test]
fn evaluate_scores_are_finite_and_positive() {
    let dir = block_corpus();
    train_block(dir.path(), "m.ckpt", "4", "4", &[]);
    run_ok(
        dir.path(),
        &[
            "evaluate", "--checkpoint", "m.ckpt", "--docs", "corp.docs", "--vocab",
            "corp.vocab", "--out", "score.csv",
        ],
    );
    let text = fs::read_to_string(dir.path().join("score.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("score,positions"));
    let row = lines.next().unwrap();
    let (score, positions) = row.split_once(',').unwrap();
    let score: f64 = score.parse().unwrap();
    assert!(score.is_finite() && score > 0.0, "bad score {score}");
    assert_eq!(positions, "750");

    // Held-out mode: reuse the training documents as an unseen tail.
    run_ok(
        dir.path(),
        &[
            "evaluate", "--checkpoint", "m.ckpt", "--docs", "corp.docs", "--vocab",
            "corp.vocab", "--test-docs", "corp.docs", "--iters", "5", "--out", "ho.csv",
        ],
    );
    let text = fs::read_to_string(dir.path().join("ho.csv")).unwrap();
    let row = text.lines().nth(1).unwrap();
    let score: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert!(score.is_finite() && score > 0.0, "bad held-out score {score}");
}

#[test]
fn changed_inputs_fail_digest_validation() {
    let dir = block_corpus();
    train_block(dir.path(), "m.ckpt", "4", "4", &[]);
    let docs = dir.path().join("corp.docs");
    let mut text = fs::read_to_string(&docs).unwrap();
    text.push_str("0 3 1\n");
    fs::write(&docs, text).unwrap();
    let stderr = run_expect(
        dir.path(),
        &[
            "evaluate", "--checkpoint", "m.ckpt", "--docs", "corp.docs", "--vocab",
            "corp.vocab", "--out", "score.csv",
        ],
        3,
    );
    assert!(stderr.contains("digest"), "unexpected message: {stderr}");
}

#[test]
fn corpus_files_must_match_checkpoint_roles() {
    let dir = homophily_with_linked_checkpoint();
    // The checkpoint was trained with links and labels; omitting them is a
    // mismatch, not a silent fallback.
    run_expect(
        dir.path(),
        &[
            "evaluate", "--checkpoint", "homo.ckpt", "--docs", "homo.docs", "--vocab",
            "homo.vocab", "--out", "score.csv",
        ],
        3,
    );
}

#[test]
fn missing_checkpoint_is_a_usage_error() {
    let dir = block_corpus();
    run_expect(
        dir.path(),
        &[
            "evaluate", "--checkpoint", "nope.ckpt", "--docs", "corp.docs", "--vocab",
            "corp.vocab", "--out", "score.csv",
        ],
        2,
    );
}

#[test]
fn bench_writes_one_row_per_run_and_header_only_when_not_measuring() {
    let dir = block_corpus();
    run_ok(
        dir.path(),
        &[
            "bench", "--docs", "corp.docs", "--vocab", "corp.vocab", "--topics", "3",
            "--strategies", "plain,aggregated,sparse", "--ell", "2,5", "--warmup", "1",
            "--measured", "2", "--out", "bench.csv",
        ],
    );
    let text = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "strategy,ell,iterations,mean_ms,std_ms");
    assert_eq!(lines.len(), 5, "expected plain, aggregated, sparse@2, sparse@5");
    assert!(lines[1].starts_with("plain,,2,"));
    assert!(lines[3].starts_with("sparse,2,2,"));
    assert!(lines[4].starts_with("sparse,5,2,"));
    for line in &lines[1..] {
        let mean: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(mean > 0.0, "non-positive mean in {line:?}");
    }

    run_ok(
        dir.path(),
        &[
            "bench", "--docs", "corp.docs", "--vocab", "corp.vocab", "--topics", "3",
            "--strategies", "plain", "--warmup", "1", "--measured", "0", "--out", "warm.csv",
        ],
    );
    let text = fs::read_to_string(dir.path().join("warm.csv")).unwrap();
    assert_eq!(text, "strategy,ell,iterations,mean_ms,std_ms\n");
}

#[test]
fn stack_reports_auc_table_with_requested_weighting() {
    let dir = homophily_with_linked_checkpoint();
    let corpus_flags = [
        "--docs", "homo.docs", "--vocab", "homo.vocab", "--links", "homo.links", "--labels",
        "homo.labels",
    ];

    let mut reversed_cocit = vec![
        "stack", "--checkpoint", "homo.ckpt", "--weights", "cocit", "--reversed", "--folds",
        "4", "--layers", "1", "--out", "auc.csv",
    ];
    reversed_cocit.extend_from_slice(&corpus_flags);
    let stdout = run_ok(dir.path(), &reversed_cocit);
    assert!(stdout.contains("macro-average AUC"), "missing summary: {stdout}");
    let text = fs::read_to_string(dir.path().join("auc.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "class,fold,layers,weighting,auc");
    assert!(lines.len() > 1, "empty AUC table");
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[3], "rev-coc", "wrong weighting in {line:?}");
        let auc: f64 = fields[4].parse().unwrap();
        assert!((0.0..=1.0).contains(&auc), "AUC out of range in {line:?}");
    }

    let mut chi_weights = vec![
        "stack", "--checkpoint", "homo.ckpt", "--weights", "chi", "--folds", "4", "--layers",
        "1", "--out", "auc2.csv",
    ];
    chi_weights.extend_from_slice(&corpus_flags);
    run_ok(dir.path(), &chi_weights);

    // Influence weights need a linked checkpoint.
    let lda_dir = block_corpus();
    train_block(lda_dir.path(), "lda.ckpt", "4", "4", &[]);
    run_expect(
        lda_dir.path(),
        &[
            "stack", "--checkpoint", "lda.ckpt", "--docs", "corp.docs", "--vocab",
            "corp.vocab", "--weights", "chi", "--out", "auc.csv",
        ],
        2,
    );
}

#[test]
fn multiple_chains_write_suffixed_outputs() {
    let dir = block_corpus();
    train_block(dir.path(), "multi.ckpt", "4", "2", &["--chains", "2"]);
    for name in ["multi.ckpt.chain0", "multi.ckpt.chain1"] {
        assert!(dir.path().join(name).is_file(), "missing {name}");
    }
    let manifest = fs::read_to_string(dir.path().join("multi.ckpt.manifest.json")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([5, 6]));
    assert_eq!(manifest["iteration_timing"].as_array().unwrap().len(), 2);

    // The two chains use different seeds and must not produce equal states.
    let a = fs::read(dir.path().join("multi.ckpt.chain0")).unwrap();
    let b = fs::read(dir.path().join("multi.ckpt.chain1")).unwrap();
    assert_ne!(a, b, "chains with different seeds wrote identical checkpoints");
}

#[test]
fn synth_writes_manifest_and_loadable_files() {
    let dir = TempDir::new().unwrap();
    run_ok(
        dir.path(),
        &["synth", "--kind", "planted", "--hubs", "3", "--followers", "4", "--out-prefix", "pl"],
    );
    for suffix in [".docs", ".vocab", ".links", ".manifest.json"] {
        let path: PathBuf = dir.path().join(format!("pl{suffix}"));
        assert!(path.is_file(), "missing pl{suffix}");
    }
    // The written files round-trip through training.
    run_ok(
        dir.path(),
        &[
            "train", "--docs", "pl.docs", "--vocab", "pl.vocab", "--links", "pl.links",
            "--model", "linked", "--topics", "2", "--iters", "2", "--checkpoint", "pl.ckpt",
        ],
    );
}
