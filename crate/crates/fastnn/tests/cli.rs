use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fastnn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fastnn"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FASTNN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const QUICK: &[&str] = &["--epochs", "2", "--n-test", "300", "--width", "8"];

fn simulate(dir: &Path, out: &str, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "exp1", "--out", out];
    args.extend_from_slice(QUICK);
    args.extend_from_slice(extra);
    fastnn(&args, dir)
}

/// Metric value printed by `fit` / `eval`.
fn metric(text: &str, name: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{name} ")))
        .unwrap_or_else(|| panic!("no {name} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn simulate_record_count() {
    let dir = TempDir::new().unwrap();
    let o = simulate(dir.path(), "run", &["--p", "100,1000", "--trials", "5", "--seed", "42"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let results = read(&dir.path().join("run"), "results.csv");
    assert_eq!(results.lines().count(), 1 + 2 * 5 * 4);
    assert!(results.lines().skip(1).all(|l| l.contains(",ok,")));
    for f in ["summary.json", "config.resolved.toml", "timings.csv"] {
        assert!(dir.path().join("run").join(f).exists(), "{f}");
    }
    let summary: serde_json::Value = serde_json::from_str(&read(&dir.path().join("run"), "summary.json")).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["rows"].as_array().unwrap().len(), 2 * 4);
}

#[test]
fn simulate_is_byte_identical_across_runs_and_jobs() {
    let dir = TempDir::new().unwrap();
    let args = ["--p", "30,40", "--trials", "2", "--seed", "7"];
    for (out, jobs) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let mut a = args.to_vec();
        a.extend(["--jobs", jobs]);
        assert_eq!(code(&simulate(dir.path(), out, &a)), 0);
    }
    for f in ["results.csv", "summary.json", "config.resolved.toml"] {
        let a = read(&dir.path().join("a"), f);
        assert_eq!(a, read(&dir.path().join("b"), f), "{f}");
        assert_eq!(a, read(&dir.path().join("c"), f), "{f}");
    }
}

#[test]
fn config_echo_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let o = simulate(
        dir.path(),
        "first",
        &[
            "--p",
            "25",
            "--trials",
            "2",
            "--seed",
            "3",
            "--estimators",
            "far-nn,lasso",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = fastnn(
        &[
            "simulate",
            "exp1",
            "--config",
            "first/config.resolved.toml",
            "--out",
            "second",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["results.csv", "summary.json", "config.resolved.toml"] {
        assert_eq!(
            read(&dir.path().join("first"), f),
            read(&dir.path().join("second"), f),
            "{f}"
        );
    }
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "experiment = \"exp1\"\nseed = 5\np = [20]\ntrials = 3\n",
    )
    .unwrap();
    let mut args = vec!["simulate", "exp1", "--config", "c.toml", "--trials", "1", "--out", "o"];
    args.extend_from_slice(QUICK);
    let o = fastnn(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let echo = read(&dir.path().join("o"), "config.resolved.toml");
    assert!(
        echo.contains("trials = 1") && echo.contains("seed = 5") && echo.contains("p = [20]"),
        "{echo}"
    );
}

#[test]
fn missing_required_key_exits_2_naming_it() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("c.toml"), "experiment = \"exp1\"\np = [20]\n").unwrap();
    let o = fastnn(&["simulate", "exp1", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("`seed`"), "{}", stderr(&o));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_key_and_mismatched_experiment_exit_2() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "experiment = \"exp1\"\nseed = 1\nepochs = 3\n",
    )
    .unwrap();
    let o = fastnn(&["simulate", "exp1", "--config", "c.toml"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("epochs"), "{}", stderr(&o));
    fs::write(dir.path().join("d.toml"), "experiment = \"exp2\"\nseed = 1\n").unwrap();
    let o = fastnn(&["simulate", "exp1", "--config", "d.toml"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn missing_config_file_exits_3() {
    let dir = TempDir::new().unwrap();
    let o = fastnn(&["simulate", "exp1", "--config", "nope.toml"], dir.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn out_dir_defaults_to_env_var() {
    let dir = TempDir::new().unwrap();
    let mut args = vec![
        "simulate",
        "null-case",
        "--p",
        "40",
        "--trials",
        "1",
        "--n-train",
        "20",
        "--n-valid",
        "10",
    ];
    args.extend_from_slice(QUICK);
    let o = Command::new(env!("CARGO_BIN_EXE_fastnn"))
        .args(&args)
        .current_dir(dir.path())
        .env("FASTNN_OUT_DIR", dir.path().join("env-out"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("env-out/null-case/results.csv").exists());
}

#[test]
fn data_flag_rejected_for_simulations() {
    let dir = TempDir::new().unwrap();
    let o = fastnn(&["simulate", "exp1", "--data", "x.csv"], dir.path());
    assert_eq!(code(&o), 2);
}

fn constant_toy(dir: &Path) {
    let mut text = String::from("a,b,y\n");
    for i in 0..10 {
        text.push_str(&format!("{},{},2.5\n", i, (i * i) % 7));
    }
    fs::write(dir.join("toy.csv"), text).unwrap();
}

#[test]
fn constant_response_fit_predict_eval() {
    let dir = TempDir::new().unwrap();
    constant_toy(dir.path());
    let o = fastnn(
        &[
            "fit",
            "--data",
            "toy.csv",
            "--response",
            "y",
            "--estimator",
            "lasso",
            "--train-rows",
            "0..6",
            "--valid-rows",
            "6..8",
            "--out",
            "m.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(metric(&stdout(&o), "r2_oos"), 0.0);

    let o = fastnn(
        &["predict", "--model", "m.json", "--data", "toy.csv", "--out", "p.csv"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let pred = read(dir.path(), "p.csv");
    let mut lines = pred.lines();
    assert_eq!(lines.next().unwrap(), "a,b,y,prediction");
    let mut rows = 0;
    for l in lines {
        let v: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!((v - 2.5).abs() < 1e-3, "{v}");
        rows += 1;
    }
    assert_eq!(rows, 10);

    let o = fastnn(
        &["eval", "--model", "m.json", "--data", "toy.csv", "--rows", "8..10"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(metric(&stdout(&o), "r2_oos"), 0.0);
    assert!(metric(&stdout(&o), "mse") < 1e-6);
}

#[test]
fn predict_with_wrong_columns_exits_2() {
    let dir = TempDir::new().unwrap();
    constant_toy(dir.path());
    let fit = [
        "fit",
        "--data",
        "toy.csv",
        "--response",
        "y",
        "--estimator",
        "pcr",
        "--out",
        "m.json",
    ];
    assert_eq!(code(&fastnn(&fit, dir.path())), 0);
    fs::write(dir.path().join("narrow.csv"), "a,y\n1,2\n").unwrap();
    let o = fastnn(&["predict", "--model", "m.json", "--data", "narrow.csv"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("`b`"), "{}", stderr(&o));
    let o = fastnn(&["predict", "--model", "toy.csv", "--data", "toy.csv"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn unparseable_cell_exits_2_with_location() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.csv"), "a,y\n1,2\n2,3\n3,nan\n").unwrap();
    let o = fastnn(
        &["fit", "--data", "bad.csv", "--response", "y", "--estimator", "lasso"],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("row 3") && e.contains("`y`"), "{e}");
}

#[test]
fn fast_nn_beats_pcr_on_nonlinear_factor_data() {
    let dir = TempDir::new().unwrap();
    let gen = [
        "generate",
        "--experiment",
        "fast",
        "--fast-kind",
        "2",
        "--p",
        "60",
        "--n",
        "900",
        "--seed",
        "11",
        "--out",
        "panel.csv",
    ];
    let o = fastnn(&gen, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("panel.truth.csv").exists());
    let mut r2 = Vec::new();
    for est in ["fast-nn", "pcr"] {
        let o = fastnn(
            &[
                "fit",
                "--data",
                "panel.csv",
                "--response",
                "y",
                "--estimator",
                est,
                "--out",
                &format!("{est}.json"),
            ],
            dir.path(),
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        r2.push(metric(&stdout(&o), "r2_oos"));
    }
    assert!(r2[0] > r2[1], "FAST-NN {} vs PCR {}", r2[0], r2[1]);
}

#[test]
fn real_data_simulation_records_r2() {
    let dir = TempDir::new().unwrap();
    let gen = [
        "generate",
        "--experiment",
        "exp1",
        "--p",
        "30",
        "--n",
        "300",
        "--out",
        "d.csv",
    ];
    assert_eq!(code(&fastnn(&gen, dir.path())), 0);
    let o = fastnn(
        &[
            "simulate",
            "real-data",
            "--data",
            "d.csv",
            "--response",
            "y",
            "--trials",
            "3",
            "--epochs",
            "3",
            "--estimators",
            "lasso,pcr,farm-lite,fast-nn",
            "--out",
            "rd",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let results = read(&dir.path().join("rd"), "results.csv");
    assert_eq!(results.lines().count(), 1 + 3 * 4);
    assert!(results
        .lines()
        .skip(1)
        .all(|l| l.contains(",r2_oos,") && l.contains(",ok,")));
    let o = fastnn(
        &[
            "simulate",
            "real-data",
            "--trials",
            "1",
            "--estimators",
            "oracle",
            "--data",
            "d.csv",
            "--response",
            "y",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn netbuild_audit_exit_codes() {
    let dir = TempDir::new().unwrap();
    let o = fastnn(&["netbuild-audit", "--out", "ok.csv"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read(dir.path(), "ok.csv");
    assert!(rows.starts_with("construction,quantity,declared,measured,ok\n"));
    assert!(rows.lines().count() > 20);
    assert!(rows.lines().skip(1).all(|l| l.ends_with(",true")));

    let o = fastnn(&["netbuild-audit", "--faulty-multiply", "--out", "bad.csv"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(read(dir.path(), "bad.csv")
        .lines()
        .any(|l| l.starts_with("\"multiply") && l.ends_with(",false")));

    let o = fastnn(&["netbuild-audit", "--empty"], dir.path());
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "construction,quantity,declared,measured,ok\n");
}

#[test]
fn netbuild_audit_grid_file() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("g.toml"), "faulty_multiply = true\n").unwrap();
    assert_eq!(code(&fastnn(&["netbuild-audit", "--config", "g.toml"], dir.path())), 1);
    fs::write(dir.path().join("h.toml"), "no_such_key = 1\n").unwrap();
    assert_eq!(code(&fastnn(&["netbuild-audit", "--config", "h.toml"], dir.path())), 2);
}

#[test]
fn dpm_writes_one_row_per_covariate() {
    let dir = TempDir::new().unwrap();
    let gen = ["generate", "--p", "25", "--n", "60", "--out", "d.csv"];
    assert_eq!(code(&fastnn(&gen, dir.path())), 0);
    let o = fastnn(
        &[
            "dpm",
            "--data",
            "d.csv",
            "--exclude",
            "y",
            "--rbar",
            "4",
            "--out",
            "w.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let w = read(dir.path(), "w.csv");
    assert_eq!(w.lines().next().unwrap(), "covariate,w1,w2,w3,w4");
    assert_eq!(w.lines().count(), 26);
    assert!(w.lines().nth(1).unwrap().starts_with("x1,"));
    let o = fastnn(&["dpm", "--data", "d.csv", "--exclude", "zzz"], dir.path());
    assert_eq!(code(&o), 2);
}
