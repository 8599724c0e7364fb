mod common;

use std::process::Command;

use aadkit::data::load_dataset;
use aadkit::eval::{chance_level, read_csv, EvalRow, MesdRow, SubjectScore};
use aadkit::Error;
use common::cli::{
    aad, p, pipeline_is_worker_independent, preprocess_is_worker_independent, synth_is_reproducible, AADNET_TINY,
};

#[test]
fn synth_twice_gives_identical_directories() {
    synth_is_reproducible();
}

#[test]
fn lsr_eval_beats_chance_at_20s() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    aad(
        &[
            "synth",
            "--seed",
            "3",
            "--subjects",
            "2",
            "--trials",
            "16",
            "--out",
            p(&data),
        ],
        &[],
    )
    .unwrap();
    let out = dir.path().join("eval");
    let args = [
        "eval",
        "--method",
        "lsr",
        "--mode",
        "ss",
        "--windows",
        "5,20",
        "--data",
        p(&data),
        "--out",
        p(&out),
    ];
    aad(&args, &[]).unwrap();
    let scores: Vec<SubjectScore> = read_csv(&out.join("subjects.csv")).unwrap();
    let at20: Vec<&SubjectScore> = scores.iter().filter(|s| s.window_s == 20.0).collect();
    assert_eq!(at20.len(), 2);
    for s in at20 {
        assert!(s.accuracy > s.chance, "{} at {}", s.subject, s.accuracy);
        assert_eq!(s.chance, chance_level(s.n_independent));
    }
}

#[test]
fn mesd_of_coin_flip_report_is_censored() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<EvalRow> = ["s1", "s2", "s3"]
        .iter()
        .flat_map(|s| {
            [1.0, 2.0, 5.0, 10.0, 20.0, 40.0].map(|w| EvalRow {
                method: "lsr".parse().unwrap(),
                regime: "ss".parse().unwrap(),
                subject: s.to_string(),
                fold: 0,
                window_s: w,
                n_windows: 20,
                n_correct: 10,
                n_independent: 10,
                accuracy: 0.5,
            })
        })
        .collect();
    let results = dir.path().join("eval.csv");
    aadkit::eval::write_csv(&rows, &results).unwrap();
    let out = dir.path().join("m");
    aad(&["mesd", "--results", p(&results), "--out", p(&out)], &[]).unwrap();
    let m: Vec<MesdRow> = read_csv(&out.join("mesd.csv")).unwrap();
    assert_eq!(m.len(), 3);
    assert!(m.iter().all(|r| r.censored && r.mesd_s.is_none()));
}

#[test]
fn report_prints_na_for_missing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let row = |subject: &str, w: f64| EvalRow {
        method: "cca".parse().unwrap(),
        regime: "si".parse().unwrap(),
        subject: subject.into(),
        fold: 0,
        window_s: w,
        n_windows: 10,
        n_correct: 8,
        n_independent: 10,
        accuracy: 0.8,
    };
    let (r1, r2) = (dir.path().join("r1.csv"), dir.path().join("r2.csv"));
    aadkit::eval::write_csv(&[row("a", 5.0)], &r1).unwrap();
    aadkit::eval::write_csv(&[row("b", 10.0)], &r2).unwrap();
    let out = dir.path().join("rep");
    aad(&["report", "--results", p(&r1), p(&r2), "--out", p(&out)], &[]).unwrap();
    let grid = std::fs::read_to_string(out.join("subjects_by_window.csv")).unwrap();
    assert_eq!(
        grid,
        "method,mode,subject,acc_5s,acc_10s\ncca,si,a,0.8000,NA\ncca,si,b,NA,0.8000\n"
    );
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().nth(1).unwrap(), "cca,si,0.8000,0.8000,NA,NA,NA");
}

#[test]
fn environment_and_flags_layer_over_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 11\nwindows = [2.0, 4.0]\n[train]\nlr = 0.5\nbatch_size = 8\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let vars = [
        ("AAD_TRAIN__LR", "0.001"),
        ("AAD_WINDOWS", "1,3"),
        ("AAD_SYNTH__N_SUBJECTS", "2"),
        ("AAD_SYNTH__TRIALS_PER_SUBJECT", "2"),
    ];
    aad(&["synth", "--config", p(&cfg), "--seed", "5", "--out", p(&out)], &vars).unwrap();
    let text = std::fs::read_to_string(out.join("config.toml")).unwrap();
    let back: aadkit::cli::RunConfig = toml::from_str(&text).unwrap();
    assert_eq!(back.seed, 5);
    assert_eq!(back.train.lr, 0.001);
    assert_eq!(back.train.batch_size, 8);
    assert_eq!(back.windows, vec![1.0, 3.0]);
    assert_eq!(load_dataset(&out).unwrap().subjects.len(), 2);
}

#[test]
fn invalid_configurations_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = p(&out);
    assert!(matches!(
        aad(&["synth", "--windows", "5,2", "--out", o], &[]),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        aad(&["synth", "--windows", "0,2", "--out", o], &[]),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        aad(&["synth", "--workers", "0", "--out", o], &[]),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        aad(&["synth", "--out", o], &[("AAD_WORKERS", "x")]),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        aad(&["synth", "--out", o], &[("AAD_NOT_A_KEY", "1")]),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        aad(&["eval", "--method", "svm", "--out", o], &[]),
        Err(Error::Usage(_))
    ));
    assert!(matches!(aad(&["frobnicate"], &[]), Err(Error::Usage(_))));
    assert!(aad(&["eval", "--out", o], &[]).is_err());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_aad");
    let dir = tempfile::tempdir().unwrap();
    let ok = Command::new(bin).arg("--help").output().unwrap();
    assert!(ok.status.success());
    let bad = Command::new(bin)
        .args([
            "eval",
            "--data",
            p(&dir.path().join("missing")),
            "--out",
            p(&dir.path().join("o")),
        ])
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("error:"));
    let usage = Command::new(bin).arg("--windows").output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
    let run = Command::new(bin)
        .args([
            "synth",
            "--seed",
            "2",
            "--subjects",
            "1",
            "--trials",
            "2",
            "--out",
            p(&dir.path().join("s")),
        ])
        .output()
        .unwrap();
    assert!(run.status.success());
    let log = String::from_utf8_lossy(&run.stderr);
    assert!(log.contains("aad synth seed=2 workers=1"));
    assert!(log.contains("[synth]"));
}

#[test]
fn preprocess_is_deterministic_and_reads_raw_layout() {
    preprocess_is_worker_independent();
}

#[test]
fn lsr_pipeline_is_worker_independent() {
    pipeline_is_worker_independent("lsr", &[]);
}

#[test]
fn cca_pipeline_is_worker_independent() {
    pipeline_is_worker_independent("cca", &[]);
}

#[test]
fn aadnet_pipeline_is_worker_independent() {
    pipeline_is_worker_independent("aadnet", &AADNET_TINY);
}
