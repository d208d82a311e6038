use std::path::Path;
use std::process::{Command, Output};

fn wildsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wildsim")).args(args).env_remove("WILDSIM_WORKERS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_at_time_zero_draws_from_the_datum() {
    let o = wildsim(&["simulate", "--t", "0", "--mu0", "gaussian", "--samples", "10"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,vx,vy,vz");
    assert_eq!(lines.len(), 11);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 4 && l.starts_with("0,")));
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let path = dir.path().join(name);
        let o = wildsim(&[
            "simulate",
            "--t",
            "0.5,2",
            "--samples",
            "3000",
            "--seed",
            "17",
            "--workers",
            workers,
            "--csv",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        std::fs::read(path).unwrap()
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 6001);
}

#[test]
fn identities_report_has_every_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let o = wildsim(&[
        "identities",
        "--kernel",
        "xabs",
        "--t",
        "1,2,3",
        "--samples",
        "20000",
        "--seed",
        "42",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&out);
    assert_eq!(r["suite"], "identities");
    assert_eq!(r["run_id"].as_str().unwrap().len(), 12);
    assert_eq!(r["config"]["seed"], 42);
    let ids: Vec<&str> = r["entries"].as_array().unwrap().iter().map(|e| e["identity"].as_str().unwrap()).collect();
    for name in ["sum_abs_pi_pow", "sum_pi2_abs_zeta", "sum_abs_pi3_eta", "mean_w", "markov_w"] {
        assert!(ids.contains(&name), "{name}");
    }
    let s4 = r["entries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["identity"] == "sum_abs_pi_pow" && e["t"] == 3.0 && e["parameters"]["s"] == 4.0)
        .unwrap();
    assert!((s4["closed_form"].as_f64().unwrap() - (-1.0f64).exp()).abs() < 1e-9);
    let header = std::fs::read_to_string(csv).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header, "identity,t,parameters,n,mc_mean,mc_se,closed_form,reference_source,z_score,pass");
}

#[test]
fn flags_override_file_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 5\nn_samples = 1000\nkernel = { preset = \"cubic\" }\nmu0 = \"gaussian\"\nxi_grid = [[0.5, 0.0, 0.0]]\n",
    )
    .unwrap();
    let out = dir.path().join("r.json");
    let o = wildsim(&[
        "cf",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "2000",
        "--t",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let c = &json(&out)["config"];
    assert_eq!(c["n_samples"], 2000);
    assert_eq!(c["seed"], 5);
    assert_eq!(c["kernel"]["preset"], "cubic");
    assert_eq!(c["mu0"]["kind"], "gaussian");
    assert_eq!(c["z_threshold"], 4.0);
    assert_eq!(c["workers"], 0);
}

#[test]
fn workers_default_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = Command::new(env!("CARGO_BIN_EXE_wildsim"))
        .args(["cf", "--samples", "100", "--t", "1", "--out", out.to_str().unwrap()])
        .env("WILDSIM_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(json(&out)["config"]["workers"], 2);
}

#[test]
fn configuration_errors_exit_with_two() {
    assert_eq!(code(&wildsim(&["identities", "--kernel", "bogus"])), 2);
    assert_eq!(code(&wildsim(&["identities", "--kernel", "power:1.2"])), 2);
    assert_eq!(code(&wildsim(&["identities", "--t", "40"])), 2);
    assert_eq!(code(&wildsim(&["identities", "--samples", "0"])), 2);
    assert_eq!(code(&wildsim(&["nonsense"])), 2);
    assert_eq!(code(&wildsim(&["envelope", "--mu0", "gaussian", "--q", "0.5", "--samples", "10"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "unknown_key = 1\n").unwrap();
    assert_eq!(code(&wildsim(&["identities", "--config", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&wildsim(&["identities", "--config", "/nonexistent/run.toml"])), 2);
}

#[test]
fn runtime_failures_exit_with_one() {
    let o = wildsim(&["envelope", "--mu0", "heavy-tail:3.5", "--samples", "10"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("m4"));
}

#[test]
fn failed_checks_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = wildsim(&[
        "identities",
        "--t",
        "1",
        "--samples",
        "2000",
        "--z-threshold",
        "1e-6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&out)["pass"], false);
    let o =
        wildsim(&["decay", "--mu0", "gaussian", "--t", "1,2,3,4", "--samples", "2000", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn every_diagnostic_runs() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, extra) in [
        ("conserve", vec!["--t", "0.5,1"]),
        ("legendre", vec!["--max-leaves", "3"]),
        ("crosscheck", vec!["--t", "0,1"]),
        ("cfcurve", vec!["--t", "1,2,3"]),
        ("envelope", vec!["--mu0", "gaussian"]),
    ] {
        let out = dir.path().join(format!("{cmd}.json"));
        let csv = dir.path().join(format!("{cmd}.csv"));
        let mut args = vec![cmd, "--samples", "4000", "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap()];
        args.extend(extra);
        let o = wildsim(&args);
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(json(&out)["suite"], cmd);
        assert!(std::fs::read_to_string(csv).unwrap().lines().count() >= 2);
    }
}
