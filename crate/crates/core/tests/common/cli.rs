//! Helpers for driving the `aad` command line in-process.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use aadkit::cli::run;
use aadkit::data::{load_dataset, save_raw, synth_generate, SynthConfig};

pub fn env(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

pub fn aad(args: &[&str], vars: &[(&str, &str)]) -> aadkit::Result<()> {
    let mut full = vec!["aad"];
    full.extend_from_slice(args);
    run(full, env(vars))
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Relative path -> bytes for every file below `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

pub fn assert_same_dirs(a: &Path, b: &Path) {
    let (sa, sb) = (snapshot(a), snapshot(b));
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (k, v) in &sa {
        assert!(v == &sb[k], "{} differs", k.display());
    }
}

pub const SMALL: [(&str, &str); 4] = [
    ("AAD_SYNTH__N_SUBJECTS", "3"),
    ("AAD_SYNTH__TRIALS_PER_SUBJECT", "8"),
    ("AAD_SYNTH__N_CHANNELS", "6"),
    ("AAD_FOLDS", "4"),
];

pub fn small_env(extra: &[(&'static str, &'static str)]) -> Vec<(&'static str, &'static str)> {
    let mut v: Vec<_> = SMALL
        .iter()
        .filter(|(k, _)| !extra.iter().any(|e| e.0 == *k))
        .copied()
        .collect();
    v.extend_from_slice(extra);
    v
}

/// Runs `args` into `<root>/w1` and `<root>/w2` with one and two workers
/// and checks the two directories match byte for byte.
pub fn same_for_any_workers(root: &Path, args: &[&str], vars: &[(&str, &str)]) {
    let (a, b) = (root.join("w1"), root.join("w2"));
    for (out, w) in [(&a, "1"), (&b, "2")] {
        let mut full = args.to_vec();
        full.extend_from_slice(&["--out", p(out), "--workers", w]);
        aad(&full, vars).unwrap();
    }
    assert_same_dirs(&a, &b);
}

pub fn pipeline_is_worker_independent(method: &str, extra: &[(&'static str, &'static str)]) {
    let dir = tempfile::tempdir().unwrap();
    let vars = small_env(extra);
    let data = dir.path().join("data");
    same_for_any_workers(&data, &["synth", "--seed", "4"], &vars);
    let data = data.join("w1");
    let d = p(&data);
    let common = ["--method", method, "--windows", "5,10", "--seed", "9"];
    let with = |cmd: &[&'static str]| -> Vec<&str> {
        let mut v: Vec<&str> = cmd.to_vec();
        v.extend_from_slice(&common);
        v
    };

    let mut a = with(&["train"]);
    a.extend_from_slice(&["--data", d]);
    same_for_any_workers(&dir.path().join("train"), &a, &vars);

    let mut a = with(&["eval"]);
    a.extend_from_slice(&["--data", d]);
    same_for_any_workers(&dir.path().join("eval"), &a, &vars);

    // Scoring saved checkpoints reproduces the train-and-score run.
    let models = dir.path().join("train/w1/models");
    let mut a = with(&["eval"]);
    a.extend_from_slice(&["--data", d, "--models", p(&models)]);
    same_for_any_workers(&dir.path().join("eval_saved"), &a, &vars);
    assert_eq!(
        std::fs::read(dir.path().join("eval/w1/eval.csv")).unwrap(),
        std::fs::read(dir.path().join("eval_saved/w1/eval.csv")).unwrap()
    );

    let results = dir.path().join("eval/w1/eval.csv");
    same_for_any_workers(&dir.path().join("mesd"), &["mesd", "--results", p(&results)], &vars);

    let mut a = with(&["loco"]);
    a.extend_from_slice(&["--data", d]);
    same_for_any_workers(&dir.path().join("loco"), &a, &vars);

    let mesd = dir.path().join("mesd/w1/mesd.csv");
    let loco = dir.path().join("loco/w1/loco.csv");
    let rep = [
        "report",
        "--results",
        p(&results),
        "--mesd",
        p(&mesd),
        "--loco",
        p(&loco),
    ];
    same_for_any_workers(&dir.path().join("report"), &rep, &vars);
    let summary = std::fs::read_to_string(dir.path().join("report/w1/summary.csv")).unwrap();
    assert!(summary.starts_with("method,mode,acc_5s,acc_10s,median_mesd_s,censored,mean_loco_drop\n"));
    assert_eq!(summary.lines().count(), 2);
}

/// Settings that keep an AADNet pipeline run to seconds.
pub const AADNET_TINY: [(&str, &str); 6] = [
    ("AAD_SYNTH__TRIAL_SECS", "20"),
    ("AAD_SYNTH__N_CHANNELS", "4"),
    ("AAD_TRAIN__MAX_EPOCHS", "2"),
    ("AAD_TRAIN__FINETUNE_MAX_EPOCHS", "1"),
    ("AAD_TRAIN__WINDOW_S", "5"),
    ("AAD_PRETRAIN", "per-subject"),
];

/// `synth --seed 7 --subjects 4` twice gives byte-identical directories.
pub fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        aad(&["synth", "--seed", "7", "--subjects", "4", "--out", p(out)], &[]).unwrap();
    }
    assert_same_dirs(&a, &b);
    assert_eq!(load_dataset(&a).unwrap().subjects.len(), 4);
    assert!(a.join("config.toml").exists());
    assert!(a.join("trials.csv").exists());
}

/// Preprocesses a raw-layout corpus with one and two workers.
pub fn preprocess_is_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("raw");
    let ds = synth_generate(&SynthConfig {
        n_subjects: 1,
        trials_per_subject: 2,
        trial_secs: 30.0,
        n_channels: 3,
        rate: 128.0,
        ..SynthConfig::default()
    })
    .unwrap();
    save_raw(&ds, &raw).unwrap();
    let root = dir.path().join("pre");
    same_for_any_workers(&root, &["preprocess", "--input", p(&raw)], &[]);
    let pre = load_dataset(&root.join("w1")).unwrap();
    assert_eq!(pre.subjects[0].trials.len(), 2);
    assert_eq!(pre.subjects[0].trials[0].rate(), 64.0);
    assert_eq!(pre.channel_labels, ds.channel_labels);
}
