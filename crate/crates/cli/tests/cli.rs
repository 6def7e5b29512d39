use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cir-locate"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    cli(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_and_evaluate_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    ok(&[
        "simulate",
        "--scenario",
        "separable",
        "--snapshots",
        "120",
        "--out",
        s(&p("a1.bin")),
    ]);
    ok(&[
        "simulate",
        "--scenario",
        "separable",
        "--snapshots",
        "60",
        "--seed",
        "5",
        "--out",
        s(&p("a2.csv")),
    ]);
    ok(&[
        "preprocess",
        "--in",
        s(&p("a2.csv")),
        "--out",
        s(&p("a2p.bin")),
    ]);
    ok(&[
        "train",
        "--method",
        "1d",
        "--in",
        s(&p("a1.bin")),
        "--out",
        s(&p("one.gmm")),
    ]);
    ok(&[
        "train",
        "--method",
        "md",
        "--in",
        s(&p("a1.bin")),
        "--out",
        s(&p("md.gmm")),
    ]);
    ok(&[
        "train",
        "--method",
        "svc",
        "--in",
        s(&p("a1.bin")),
        "--md-models",
        s(&p("md.gmm")),
        "--vote-window",
        "20",
        "--out",
        s(&p("svc.bin")),
    ]);

    let test = p("a2p.bin");
    let eval = |method: &str, models: &str, extra: &[&str]| {
        let mut args = vec!["eval", "--method", method, "--models", models];
        args.extend_from_slice(&["--in", s(&test), "--vote-window", "20"]);
        args.extend_from_slice(extra);
        ok(&args)
    };
    let one = eval("1d", s(&p("one.gmm")), &[]);
    assert!(one.contains("| 1D-GMM | 1 snapshot |"), "{one}");
    assert!(one.contains("| 1D-GMM | MV20 |"), "{one}");
    let md = eval("md", s(&p("md.gmm")), &[]);
    assert!(md.contains("| MD-GMM | MV20 | 100.0% |"), "{md}");
    let maxsim = eval("maxsim", s(&p("md.gmm")), &[]);
    assert!(
        maxsim.contains("| MD-GMM-MaxSim | 20 snapshots | 100.0% |"),
        "{maxsim}"
    );
    let svc = eval(
        "svc",
        s(&p("svc.bin")),
        &["--md-models", s(&p("md.gmm")), "--format", "csv"],
    );
    assert_eq!(svc.lines().count(), 2, "{svc}");
    assert!(svc.lines().nth(1).unwrap().ends_with(",100.0"), "{svc}");
}

#[test]
fn report_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    ok(&[
        "simulate",
        "--scenario",
        "separable",
        "--snapshots",
        "80",
        "--out",
        s(&p("train.bin")),
    ]);
    ok(&[
        "simulate",
        "--scenario",
        "separable",
        "--snapshots",
        "40",
        "--seed",
        "9",
        "--out",
        s(&p("test.bin")),
    ]);
    let spec = format!(
        r#"{{"train_path": {:?}, "test_paths": [["A2", {:?}]], "methods": ["md", "maxsim"], "vote_window": 20,
            "fit_md": {{"max_components": 5, "max_iter": 10000, "tol": 0.001,
                       "weight_concentration_prior": 0.001, "reg_covar": 1e-6, "n_init": 1, "seed": 0}}}}"#,
        s(&p("train.bin")),
        s(&p("test.bin"))
    );
    std::fs::write(p("spec.json"), spec).unwrap();
    let table = ok(&["report", "--spec", s(&p("spec.json"))]);
    assert_eq!(table.lines().count(), 5, "{table}");
    assert!(table.starts_with("| Method | Window | A2 |"));
    ok(&[
        "report",
        "--spec",
        s(&p("spec.json")),
        "--format",
        "csv",
        "--out",
        s(&p("r.csv")),
    ]);
    assert!(std::fs::read_to_string(p("r.csv"))
        .unwrap()
        .starts_with("method,window,A2"));
}

#[test]
fn simulation_is_reproducible_and_perturbable() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);
    for name in ["x.bin", "y.bin"] {
        ok(&[
            "simulate",
            "--scenario",
            "nlos",
            "--snapshots",
            "10",
            "--out",
            s(&p(name)),
        ]);
    }
    assert_eq!(
        std::fs::read(p("x.bin")).unwrap(),
        std::fs::read(p("y.bin")).unwrap()
    );
    ok(&[
        "simulate",
        "--scenario",
        "nlos",
        "--snapshots",
        "10",
        "--perturb",
        "0.3",
        "--out",
        s(&p("z.bin")),
        "--dump-config",
        s(&p("z.json")),
    ]);
    assert_ne!(
        std::fs::read(p("x.bin")).unwrap(),
        std::fs::read(p("z.bin")).unwrap()
    );
    let cfg = std::fs::read_to_string(p("z.json")).unwrap();
    assert!(cfg.contains("\"layout_perturbation\": 0.3"));
    ok(&[
        "simulate",
        "--config",
        s(&p("z.json")),
        "--out",
        s(&p("w.bin")),
    ]);
    assert_eq!(
        std::fs::read(p("w.bin")).unwrap(),
        std::fs::read(p("z.bin")).unwrap()
    );
}

#[test]
fn bench_prints_ratio() {
    let out = ok(&["bench", "--scenario", "los", "--snapshots", "100"]);
    assert!(out.lines().any(|l| l.starts_with("ratio: ")), "{out}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.bin");
    let missing = dir.path().join("missing.bin");
    assert_eq!(
        code(&["simulate", "--scenario", "office", "--out", s(&out)]),
        2
    );
    assert_eq!(
        code(&[
            "simulate",
            "--scenario",
            "los",
            "--perturb",
            "1.5",
            "--out",
            s(&out)
        ]),
        2
    );
    assert_eq!(
        code(&[
            "train",
            "--method",
            "knn",
            "--in",
            s(&missing),
            "--out",
            s(&out)
        ]),
        2
    );
    assert_eq!(
        code(&[
            "train",
            "--method",
            "svc",
            "--in",
            s(&missing),
            "--out",
            s(&out)
        ]),
        2
    );
    assert_eq!(
        code(&[
            "train",
            "--method",
            "md",
            "--in",
            s(&missing),
            "--out",
            s(&out)
        ]),
        3
    );
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["--help"]), 0);

    std::fs::write(dir.path().join("bad.csv"), "seq,label,re0\n0,1,0.5\n").unwrap();
    let bad = dir.path().join("bad.csv");
    assert_eq!(code(&["preprocess", "--in", s(&bad), "--out", s(&out)]), 3);
    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"train_path": "a", "test_paths": [], "methods": ["md"]}"#,
    )
    .unwrap();
    assert_eq!(code(&["report", "--spec", s(&spec)]), 2);
}
