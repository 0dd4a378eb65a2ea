//! End-to-end tests of the `itersurv` binary: argument handling, exit
//! codes, file outputs, determinism. Statistical gates live in the
//! acceptance suite; budgets here are smoke-sized.

use std::path::Path;
use std::process::{Command, Output};

fn itersurv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itersurv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn itersurv_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_itersurv"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn unknown_preset_lists_the_presets_on_stderr() {
    let out = itersurv(&["preset", "definitely-not-a-preset"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("unknown preset"), "{err}");
    assert!(err.contains("bm-baseline"), "{err}");
    assert!(err.contains("counterexample"), "{err}");
}

#[test]
fn list_presets_names_every_family() {
    let out = itersurv(&["list-presets"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for name in [
        "bm-baseline",
        "ibm-one-sided",
        "ibm-chain-<k>",
        "integrated-inner-<n>",
        "levy-rw-centered",
        "levy-rw-drift",
        "levy-subordinator",
        "iterated-bm-two-sided",
        "two-sided-levy-rw",
        "fbm-outer-<H>",
        "fbm-one-sided-molchan",
        "counterexample",
    ] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
}

#[test]
fn oracle_values_and_method_tags() {
    let out = itersurv(&["oracle", "srw-max", "--n", "16", "--barrier", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "0.196380615234375 (dp)");

    let out = itersurv(&["oracle", "counterexample", "--t", "10.5"]);
    assert!(stdout(&out).starts_with("0.08333333333333333"));

    let out = itersurv(&["oracle", "srw-iter", "--n", "2", "--barrier", "0"]);
    assert!(stdout(&out).contains("(enumeration)"), "{}", stdout(&out));

    let out = itersurv(&["oracle", "bm-survival", "--t", "4", "--x", "1"]);
    // 2*Phi(1/2) - 1
    assert!(stdout(&out).starts_with("0.38292492"), "{}", stdout(&out));

    let out = itersurv(&["oracle", "bm-smalldev", "--eps", "1.0"]);
    assert!(stdout(&out).starts_with("0.37077742"), "{}", stdout(&out));
}

#[test]
fn oracle_rejects_out_of_range_enumeration() {
    let out = itersurv(&["oracle", "srw-iter", "--n", "30", "--barrier", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_rejects_unknown_keys_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        r#"
            seed = 1
            mystery-knob = 3

            [scenario.bare]
            process = "counterexample"
            sup = "discrete"

            [grid]
            t0 = 1.5
            ratio = 3.0
            count = 3

            [budget]
            uniform = 500
        "#,
    )
    .unwrap();
    let out = itersurv(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("mystery-knob"), "{}", stderr(&out));
}

#[test]
fn experiment_rejects_flat_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("flat.toml");
    std::fs::write(
        &cfg,
        r#"
            seed = 1

            [scenario.bare]
            process = "counterexample"
            sup = "discrete"

            [grid]
            t0 = 1.5
            ratio = 1.0
            count = 3

            [budget]
            uniform = 500
        "#,
    )
    .unwrap();
    let out = itersurv(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ratio"), "{}", stderr(&out));
}

#[test]
fn experiment_rejects_tolerance_without_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ungateable.toml");
    // A bare integrated path has no predicted exponent to gate against.
    std::fs::write(
        &cfg,
        r#"
            seed = 1
            tolerance = 0.05

            [scenario.bare]
            sup = { endpoint = { step = 0.25 } }
            [scenario.bare.process.integrated-bm]
            order = 1

            [grid]
            t0 = 4.0
            ratio = 2.0
            count = 3

            [budget]
            uniform = 200
        "#,
    )
    .unwrap();
    let out = itersurv(&["experiment", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no predicted exponent"), "{}", stderr(&out));
}

#[test]
fn experiment_runs_a_valid_config_and_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        r#"
            seed = 3

            [scenario.bare]
            process = "counterexample"
            sup = "discrete"

            [grid]
            t0 = 1.5
            ratio = 3.0
            count = 3

            [budget]
            uniform = 4000
        "#,
    )
    .unwrap();
    let out_dir = dir.path().join("res");
    let out = itersurv(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let survival = std::fs::read_to_string(out_dir.join("survival.csv")).unwrap();
    assert!(survival.starts_with("T,p_hat,ci_low,ci_high,n_samples,n_survived\n"));
    assert_eq!(survival.lines().count(), 4);
    let fit = std::fs::read_to_string(out_dir.join("fit.csv")).unwrap();
    assert!(fit.starts_with("slope,slope_stderr,intercept,r_squared,theta_pred,theorem\n"));
    let manifest = std::fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 3"), "{manifest}");
    assert!(manifest.contains("\"tool_version\""));
}

#[test]
fn preset_rerun_is_bit_identical_and_seed_override_moves_it() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str, seed: Option<&str>| {
        let mut args = vec![
            "preset",
            "counterexample",
            "--budget-scale",
            "0.01",
            "--tolerance",
            "0.5",
            "--out",
            out,
        ];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        itersurv_in(dir.path(), &args)
    };
    let a = run("a", None);
    assert_eq!(a.status.code(), Some(0), "{}\n{}", stdout(&a), stderr(&a));
    let b = run("b", None);
    assert_eq!(b.status.code(), Some(0));
    let read = |sub: &str, name: &str| std::fs::read(dir.path().join(sub).join(name)).unwrap();
    assert_eq!(read("a", "survival.csv"), read("b", "survival.csv"));
    assert_eq!(read("a", "fit.csv"), read("b", "fit.csv"));

    let c = run("c", Some("12345"));
    assert_eq!(c.status.code(), Some(0));
    assert_ne!(read("a", "survival.csv"), read("c", "survival.csv"));

    // Same plan, same digest; different seed, different digest.
    let digest = |sub: &str| {
        let m = std::fs::read_to_string(dir.path().join(sub).join("manifest.json")).unwrap();
        m.lines().find(|l| l.contains("config_digest")).unwrap().to_string()
    };
    assert_eq!(digest("a"), digest("b"));
    assert_ne!(digest("a"), digest("c"));
}

#[test]
fn fit_command_round_trips_a_survival_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = itersurv_in(
        dir.path(),
        &[
            "preset",
            "counterexample",
            "--budget-scale",
            "0.01",
            "--tolerance",
            "0.5",
            "--out",
            "r",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = dir.path().join("r").join("survival.csv");
    let out = itersurv(&["fit", "--input", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("slope,slope_stderr,intercept,r_squared,theta_pred,theorem\n"));
    // A raw table carries no scenario, so no prediction column values.
    assert!(text.trim_end().ends_with(",none"), "{text}");
}

#[test]
fn fit_command_rejects_a_wrong_header() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "time,prob\n1,0.5\n").unwrap();
    let out = itersurv(&["fit", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("expected header"), "{}", stderr(&out));
}

#[test]
fn paths_prints_walk_and_counterexample_shapes() {
    let out = itersurv(&["paths", "--process", "walk", "--horizon", "8", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "path,t,x");
    assert_eq!(lines.len(), 10); // header + S_0..S_8
    assert!(lines[1].starts_with("0,0,0"));

    let out = itersurv(&["paths", "--process", "counterexample", "--horizon", "4.5"]);
    let text = stdout(&out);
    // Spikes at 0.5, 1.5, 2.5, 3.5 (4.5 excluded: strictly past the horizon
    // is kept out by the t <= horizon cut, 4.5 itself is kept).
    assert!(text.lines().count() >= 5, "{text}");
    for line in text.lines().skip(1) {
        let t: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(t.fract().abs(), 0.5, "{line}");
    }

    let out = itersurv(&["paths", "--process", "nonsense", "--horizon", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn survival_command_emits_one_row() {
    let out = itersurv(&[
        "survival",
        "counterexample",
        "--horizon",
        "4.5",
        "--samples",
        "2000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "T,p_hat,ci_low,ci_high,n_samples,n_survived");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("4.5,"));
}

#[test]
fn probe_barrier_ratio_reports_the_target() {
    let out = itersurv(&[
        "probe",
        "barrier-ratio",
        "--law",
        "rademacher",
        "--n",
        "10000",
        "--a",
        "0.4",
        "--samples",
        "2000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("ratio,ci_low,ci_high,target,"), "{text}");
    let target: f64 = text.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!((target - 0.7978845608028654).abs() < 1e-12);
}

#[test]
fn probe_small_dev_includes_exact_column_for_bm() {
    let out = itersurv(&[
        "probe",
        "small-dev",
        "--eps",
        "1.0",
        "--samples",
        "2000",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("eps,p_hat,ci_low,ci_high,exact\n"));
    let exact: f64 = text.lines().nth(1).unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!((exact - 0.3707774297995239).abs() < 1e-12);
}

#[test]
fn thread_cap_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_itersurv"))
        .env("ITERSURV_THREADS", "zero")
        .args(["oracle", "srw-max", "--n", "4", "--barrier", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("ITERSURV_THREADS"), "{}", stderr(&out));

    let out = Command::new(env!("CARGO_BIN_EXE_itersurv"))
        .env("ITERSURV_THREADS", "1")
        .args(["oracle", "srw-max", "--n", "4", "--barrier", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}
