use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cof(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cof"))
        .args(args)
        .output()
        .expect("run cof")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.trim().lines().count(), 1, "stderr: {text}");
    serde_json::from_str(text.trim()).expect("stderr is JSON")
}

/// Small corpus with extracted features.
fn corpus(dir: &Path) {
    let root = dir.join("corpus");
    assert!(cof(&[
        "synth",
        "--cases",
        "6",
        "--seed",
        "3",
        "--frames-min",
        "6",
        "--frames-max",
        "9",
        "--size",
        "16",
        "--out",
        s(&root)
    ])
    .status
    .success());
    assert!(cof(&[
        "extract",
        "--frames-dir",
        s(&root.join("frames")),
        "--out",
        s(&dir.join("features"))
    ])
    .status
    .success());
}

#[test]
fn help_lists_every_flag() {
    let expected: &[(&str, &[&str])] = &[
        ("synth", &["--cases", "--seed", "--out"]),
        ("extract", &["--frames-dir", "--out", "--semantic-dir", "--bins"]),
        (
            "train",
            &[
                "--features-dir",
                "--annotations",
                "--target-metric",
                "--epochs",
                "--lr",
                "--lambda-rank",
                "--seed",
                "--out",
            ],
        ),
        (
            "eval",
            &[
                "--protocol",
                "--train-target",
                "--eval-targets",
                "--baseline",
                "--seed",
                "--report",
            ],
        ),
        ("analyze", &["--annotations", "--out"]),
        ("feedback", &["--checkpoint", "--features", "--out"]),
    ];
    for (cmd, flags) in expected {
        let out = cof(&[cmd, "--help"]);
        assert!(out.status.success());
        let text = String::from_utf8_lossy(&out.stdout);
        for flag in *flags {
            assert!(text.contains(flag), "`{cmd} --help` lacks {flag}");
        }
        assert!(text.contains("--threads") && text.contains("--config"));
    }
    let v = cof(&["--version"]);
    assert!(v.status.success());
    assert!(String::from_utf8_lossy(&v.stdout).starts_with("cof "));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let features = dir.path().join("features");

    let out = cof(&[
        "train",
        "--features-dir",
        s(&features),
        "--annotations",
        "missing.csv",
        "--out",
        "m",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "data");

    let ann = dir.path().join("corpus/annotations.csv");
    let out = cof(&[
        "train",
        "--features-dir",
        s(&features),
        "--annotations",
        s(&ann),
        "--target-metric",
        "99",
        "--out",
        "m",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "usage");

    let out = cof(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    // corrupt feature file
    fs::write(features.join("case_002.cofx"), b"COFX\x01").unwrap();
    let out = cof(&[
        "train",
        "--features-dir",
        s(&features),
        "--annotations",
        s(&ann),
        "--out",
        s(&dir.path().join("m")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("case_002"));
}

#[test]
fn diverging_training_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let out = cof(&[
        "train",
        "--features-dir",
        s(&dir.path().join("features")),
        "--annotations",
        s(&dir.path().join("corpus/annotations.csv")),
        "--lr",
        "1e300",
        "--epochs",
        "3",
        "--out",
        s(&dir.path().join("m")),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stderr_json(&out)["error"], "numeric");
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!(
            "# experiment\nfeatures_dir = {}\nannotations = {}\nprotocol = 2,1\nepochs = 4\nshuffle_labels = true\n",
            s(&dir.path().join("features")),
            s(&dir.path().join("corpus/annotations.csv"))
        ),
    )
    .unwrap();
    let report = dir.path().join("r.json");
    let out = cof(&["--config", s(&cfg), "eval", "--epochs", "2", "--report", s(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["config"]["train"]["epochs"], 2);
    assert_eq!(v["config"]["shuffle_labels"], true);
    assert_eq!(v["runs"].as_array().unwrap().len(), 2);

    fs::write(&cfg, "no_such_flag = 1\n").unwrap();
    assert_eq!(cof(&["eval", "--config", s(&cfg)]).status.code(), Some(1));
}

#[test]
fn eval_targets_report_array_and_baselines() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let ann = dir.path().join("corpus/annotations.csv");
    let report = dir.path().join("r.json");
    let out = cof(&[
        "eval",
        "--features-dir",
        s(&dir.path().join("features")),
        "--annotations",
        s(&ann),
        "--protocol",
        "3,1",
        "--epochs",
        "2",
        "--eval-targets",
        "6,13",
        "--report",
        s(&report),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["config"]["eval_target"], 6);
    assert_eq!(reports[1]["config"]["train_target"], 14);

    let out = cof(&[
        "eval",
        "--baseline",
        "mean_saturation",
        "--annotations",
        s(&ann),
        "--protocol",
        "2,2",
    ]);
    assert_eq!(out.status.code(), Some(1), "color baselines need frames");

    let out = cof(&[
        "eval",
        "--baseline",
        "mean_red",
        "--frames-dir",
        s(&dir.path().join("corpus/frames")),
        "--annotations",
        s(&ann),
        "--protocol",
        "2,2",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["config"]["method"], "baseline:mean_red");
    assert_eq!(v["runs"].as_array().unwrap().len(), 4);

    let out = cof(&[
        "eval",
        "--baseline",
        "duration",
        "--features-dir",
        s(&dir.path().join("features")),
        "--annotations",
        s(&ann),
    ]);
    assert!(out.status.success());
}

#[test]
fn analyze_and_feedback_outputs() {
    let dir = tempfile::tempdir().unwrap();
    corpus(dir.path());
    let ann = dir.path().join("corpus/annotations.csv");
    let report = dir.path().join("a.csv");
    let human = dir.path().join("h.csv");
    assert!(cof(&[
        "analyze",
        "--annotations",
        s(&ann),
        "--out",
        s(&report),
        "--human-out",
        s(&human)
    ])
    .status
    .success());
    let text = fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "metric_id,corr_overall,isc,sjc");
    assert!(lines[1].starts_with("6,,"));
    assert!(lines[2].starts_with("13,,"));
    assert!(lines[3].starts_with("14,0."));
    assert!(fs::read_to_string(&human)
        .unwrap()
        .starts_with("group,pred_metric,gt_metric,plcc,srocc,degenerate\n"));

    let model = dir.path().join("m.cofm");
    let out = cof(&[
        "train",
        "--features-dir",
        s(&dir.path().join("features")),
        "--annotations",
        s(&ann),
        "--epochs",
        "2",
        "--out",
        s(&model),
    ]);
    assert!(out.status.success());
    let trace = String::from_utf8_lossy(&out.stdout);
    assert!(trace.starts_with("epoch,mean_loss,mean_reg,mean_rank\n1,"));
    assert_eq!(trace.lines().count(), 3);

    let fb = dir.path().join("fb.csv");
    let features = dir.path().join("features/case_001.cofx");
    assert!(cof(&[
        "feedback",
        "--checkpoint",
        s(&model),
        "--features",
        s(&features),
        "--out",
        s(&fb)
    ])
    .status
    .success());
    let text = fs::read_to_string(&fb).unwrap();
    assert!(text.starts_with("t_seconds,score_raw,score_norm,weight\n"));
    let weights: f64 = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((weights - 1.0).abs() <= 1e-9);
}

/// Writes a semantic-only feature file the way an external exporter would.
fn write_semantic(path: &Path, rows: usize, dim: usize) {
    let mut b = Vec::new();
    b.extend_from_slice(b"COFX");
    b.extend_from_slice(&1u16.to_le_bytes());
    b.extend_from_slice(&(rows as u32).to_le_bytes());
    b.extend_from_slice(&(dim as u32).to_le_bytes());
    b.extend_from_slice(&1u16.to_le_bytes());
    b.push(8);
    b.extend_from_slice(b"semantic");
    b.extend_from_slice(&0u32.to_le_bytes());
    b.extend_from_slice(&(dim as u32).to_le_bytes());
    for i in 0..rows * dim {
        b.extend_from_slice(&((i % 7) as f64 * 0.1).to_le_bytes());
    }
    fs::write(path, b).unwrap();
}

#[test]
fn extract_appends_semantic_embeddings() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("corpus");
    assert!(cof(&[
        "synth",
        "--cases",
        "2",
        "--frames-min",
        "5",
        "--frames-max",
        "5",
        "--size",
        "8",
        "--out",
        s(&root)
    ])
    .status
    .success());
    let sem = dir.path().join("semantic");
    fs::create_dir_all(&sem).unwrap();
    write_semantic(&sem.join("case_000.cofx"), 5, 24);
    write_semantic(&sem.join("case_001.cofx"), 5, 24);
    let out_dir = dir.path().join("features");
    let out = cof(&[
        "extract",
        "--frames-dir",
        s(&root.join("frames")),
        "--semantic-dir",
        s(&sem),
        "--bins",
        "8",
        "--out",
        s(&out_dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let seq = cof_core::features::read_features(out_dir.join("case_000.cofx")).unwrap();
    assert_eq!(seq.dim(), 64 + 24);
    assert_eq!(seq.block("semantic").unwrap().width, 24);

    // frame count mismatch is a data error naming the file
    write_semantic(&sem.join("case_001.cofx"), 4, 24);
    let out = cof(&[
        "extract",
        "--frames-dir",
        s(&root.join("frames")),
        "--semantic-dir",
        s(&sem),
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("case_001"));
}
