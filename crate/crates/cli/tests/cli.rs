//! End-to-end CLI checks through the compiled binary. Training sizes are kept
//! tiny; these exercise plumbing, not convergence.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn caml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_caml")).args(args).output().expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("caml_cli_tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

/// CSV payload with the timestamped comment line stripped.
fn payload(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    assert!(first.starts_with("# generated_unix="), "missing stamp in {path:?}");
    lines.collect::<Vec<_>>().join("\n")
}

const TINY: &[&str] =
    &["--t-min", "50", "--t-max", "75", "--n-interior", "32", "--n-per-edge", "8", "--eval-grid", "21"];

#[test]
fn run_writes_logs_summary_and_checkpoints() {
    let out = tmp("run_basic");
    let mut args = vec![
        "run",
        "--benchmark",
        "toy_poisson",
        "--mode",
        "caml",
        "--seeds",
        "1,2",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(TINY);
    let res = caml(&args);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for name in [
        "manifest.json",
        "run_toy_poisson_caml_seed1.csv",
        "run_toy_poisson_caml_seed2.csv",
        "model_toy_poisson_caml_seed1.ckpt",
        "summary_toy_poisson_caml.csv",
        "aggregate.csv",
    ] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let log = payload(&out.join("run_toy_poisson_caml_seed1.csv"));
    assert!(log.starts_with(
        "step,loss_res,loss_bc,loss_total,lambda,c,cos_phi,grad_norm_ratio,rel_l2,cum_param_dist"
    ));
    // 75-step run without early crossing
    assert_eq!(log.lines().count(), 1 + 75);
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"t_min\": 50"));
    assert!(manifest.contains("\"benchmark\": \"toy_poisson\""));
}

#[test]
fn rerun_is_byte_identical_modulo_stamp() {
    let (a, b) = (tmp("repeat_a"), tmp("repeat_b"));
    for out in [&a, &b] {
        let mut args = vec![
            "run",
            "--benchmark",
            "heat",
            "--mode",
            "vanilla",
            "--seeds",
            "3",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(TINY);
        assert!(caml(&args).status.success());
    }
    for name in ["run_heat_vanilla_seed3.csv", "summary_heat_vanilla.csv", "aggregate.csv"] {
        assert_eq!(payload(&a.join(name)), payload(&b.join(name)), "{name} differs");
    }
    // checkpoints are raw binary, bitwise equal
    assert_eq!(
        std::fs::read(a.join("model_heat_vanilla_seed3.ckpt")).unwrap(),
        std::fs::read(b.join("model_heat_vanilla_seed3.ckpt")).unwrap()
    );
}

#[test]
fn usage_errors_exit_2() {
    let out = tmp("usage");
    let res = caml(&["run", "--benchmark", "wave", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let res = caml(&["run", "--benchmark", "heat", "--seeds", "", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    // clap-level parse failure
    let res = caml(&["run", "--no-such-flag"]);
    assert_eq!(res.status.code(), Some(2));
    // sweep with an empty values list
    let res = caml(&[
        "sweep",
        "--benchmark",
        "poisson",
        "--param",
        "delay",
        "--values",
        "",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(2));
    // hessian with k exceeding the dimension
    let res = caml(&["hessian", "--space", "func", "--k", "101", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn config_file_applies_with_flag_override() {
    let out = tmp("config");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("run.cfg");
    std::fs::write(&cfg, "# tiny run\nt_min = 40\nt_max = 60\nn_interior = 32\nn_per_edge = 8\neval_grid = 21\nw_bc = 7.5\n").unwrap();
    let res = caml(&[
        "run",
        "--benchmark",
        "toy_poisson",
        "--seeds",
        "1",
        "--config",
        cfg.to_str().unwrap(),
        "--t-max",
        "45", // flag overrides file
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"t_max\": 45"));
    assert!(manifest.contains("\"w_bc\": 7.5"));

    let bad = out.join("bad.cfg");
    std::fs::write(&bad, "nonsense = 3\n").unwrap();
    let res = caml(&[
        "run",
        "--benchmark",
        "toy_poisson",
        "--seeds",
        "1",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn ablate_emits_four_mode_rows_with_shared_collocation() {
    let out = tmp("ablate");
    let mut args = vec![
        "ablate",
        "--benchmark",
        "heat",
        "--seeds",
        "1",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(TINY);
    let res = caml(&args);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let agg = payload(&out.join("aggregate.csv"));
    let modes: Vec<&str> =
        agg.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(modes, vec!["vanilla", "ac_only", "dr_only", "caml"]);
    // identical collocation per seed: vanilla and caml logs share the exact
    // boundary loss at step 1 (the zero-offset losses coincide at init)
    let v = payload(&out.join("run_heat_vanilla_seed1.csv"));
    let c = payload(&out.join("run_heat_caml_seed1.csv"));
    let first = |s: &str| s.lines().nth(1).unwrap().split(',').nth(2).unwrap().to_string();
    assert_eq!(first(&v), first(&c), "collocation sets differ between arms");
}

#[test]
fn sweep_writes_one_row_per_value() {
    let out = tmp("sweep");
    let mut args = vec![
        "sweep",
        "--benchmark",
        "toy_poisson",
        "--param",
        "delay",
        "--values",
        "0/0,10/20",
        "--seeds",
        "1",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(TINY);
    let res = caml(&args);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = payload(&out.join("sweep.csv"));
    assert_eq!(rows.lines().count(), 3, "{rows}");
    assert!(out.join("summary_delay_0_0.csv").exists());
    assert!(out.join("summary_delay_10_20.csv").exists());
}

#[test]
fn landscape_and_hessian_function_space() {
    let out = tmp("landscape");
    let res = caml(&["landscape", "--space", "func", "--grid", "9", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let grid = payload(&out.join("landscape_func.csv"));
    assert!(grid.starts_with("alpha,beta,loss,log10_loss"));
    assert_eq!(grid.lines().count(), 1 + 81);

    let res = caml(&["hessian", "--space", "func", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let stdout = String::from_utf8_lossy(&res.stdout).to_string();
    assert!(stdout.contains("kappa=inf"), "{stdout}");
    let sims = payload(&out.join("subspace_similarity_func.csv"));
    for line in sims.lines().skip(1) {
        let sim: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((sim - 1.0).abs() < 1e-6);
    }
}
