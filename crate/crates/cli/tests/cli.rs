use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cstk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cstk"))
        .args(args)
        .output()
        .expect("failed to launch cstk")
}

fn synth(dir: &Path, n: usize, separation: f64, seed: u64) {
    let out = cstk(&[
        "--quiet",
        "synth",
        "--n",
        &n.to_string(),
        "--separation",
        &separation.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                files.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn config(dir: &Path) -> String {
    dir.join("experiment.json").to_str().unwrap().to_string()
}

#[test]
fn synth_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth(a.path(), 4, 1.0, 9);
    synth(b.path(), 4, 1.0, 9);
    let ta = tree(a.path());
    assert!(ta.contains_key(Path::new("labels.csv")));
    assert_eq!(ta, tree(b.path()));
}

#[test]
fn evaluate_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 10, 2.0, 3);
    let results = dir.path().join("out");
    let out = cstk(&[
        "--jobs",
        "2",
        "evaluate",
        "--config",
        &config(dir.path()),
        "--out",
        results.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("model,"), "{stdout}");
    for name in [
        "report.csv",
        "report.md",
        "predictions.jsonl",
        "fold_plan.json",
        "manifest.json",
    ] {
        assert!(results.join(name).is_file(), "missing {name}");
    }
    let written = std::fs::read_to_string(results.join("report.csv")).unwrap();
    assert_eq!(written, stdout);
}

#[test]
fn report_rerenders_a_saved_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("report.csv");
    std::fs::write(
        &csv,
        "model,fold,accuracy,precision_cn,precision_ad,recall_cn,recall_ad,f1_cn,f1_ad,zero_division\n\
         cnn,0,0.500000,0.000000,0.500000,0.000000,1.000000,0.000000,0.666667,f1_cn;precision_cn\n\
         cnn,mean,0.830000,0.800000,0.900000,0.847059,0.871429,0.760000,0.811905,\n\
         cnn,sd,0.100000,0.100000,0.100000,0.100000,0.100000,0.100000,0.100000,\n",
    )
    .unwrap();
    let out = cstk(&["report", csv.to_str().unwrap(), "--format", "csv"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(out.stdout, std::fs::read(&csv).unwrap());
    let md = cstk(&["report", csv.to_str().unwrap()]);
    assert!(md.status.success());
    assert!(String::from_utf8(md.stdout).unwrap().contains("0.830000"));
}

#[test]
fn train_writes_a_container() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 5, 1.0, 4);
    let models = dir.path().join("models");
    for model in ["lr_comp", "lr_disfl"] {
        let out = cstk(&[
            "--quiet",
            "train",
            "--config",
            &config(dir.path()),
            "--model",
            model,
            "--out",
            models.to_str().unwrap(),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let bytes = std::fs::read(models.join(format!("{model}.cstk"))).unwrap();
        let container = cstk_core::nn::read_container(&bytes).unwrap();
        assert_eq!(container.kind, model);
    }
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let out = cstk(&["evaluate", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));
}

#[test]
fn unknown_override_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 3, 1.0, 5);
    let out = cstk(&[
        "evaluate",
        "--config",
        &config(dir.path()),
        "--set",
        "train.lernrate=0.1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lernrate"));
}

#[test]
fn bad_invocations_exit_with_one() {
    assert_eq!(cstk(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cstk(&["evaluate", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        cstk(&["--jobs", "0", "report", "x.csv"]).status.code(),
        Some(1)
    );
    assert_eq!(
        cstk(&["synth", "--n", "0", "--out", "unused"])
            .status
            .code(),
        Some(1)
    );
}
