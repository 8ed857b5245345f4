use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ldfront::config::{load_config, ExperimentConfig, TimeStep};
use tempfile::TempDir;

const HOST: &str = r#"
[model]
name = "host_vector"
params = { a = 0.5, b = 1.0 }

[problem]
d = 1.0
tau = 1.0
"#;

fn ldfront(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ldfront")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_cfg(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ldfront(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// `Δ(c,λ)` for host_vector with a point-mass kernel, written out by hand.
fn host_delta(a: f64, b: f64, d: f64, tau: f64, c: f64, l: f64) -> f64 {
    c * l - d * (l.exp() + (-l).exp() - 2.0) + a - b * (-l * c * tau).exp()
}

/// `c(λ)` by bisection in `c`, where `Δ` increases.
fn host_c_of_lambda(l: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if host_delta(0.5, 1.0, 1.0, 1.0, mid, l) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn selfcheck_passes() {
    let o = ldfront(&["selfcheck"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 20);
    assert!(!text.contains("FAIL"));
}

#[test]
fn analyze_matches_a_scan_of_the_characteristic_function() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "host.cfg", &format!("{HOST}\n[analyze]\nc_offsets = [0.0, 0.5]\n"));
    let out = dir.path().join("out");
    let o = run_cfg("analyze", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = json(&out.join("dispersion_report.json"));

    let (mut c_star, mut l_star) = (f64::INFINITY, 0.0);
    for i in 1..3000 {
        let l = 1e-3 * i as f64;
        let c = host_c_of_lambda(l);
        if c < c_star {
            (c_star, l_star) = (c, l);
        }
    }
    let got_c = report["c_star"].as_f64().unwrap();
    let got_l = report["lambda_star"].as_f64().unwrap();
    assert!((got_c - c_star).abs() < 1e-6, "{got_c} vs {c_star}");
    assert!((got_l - l_star).abs() < 2e-3, "{got_l} vs {l_star}");

    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0]["decay"].is_null());
    let row = &rows[1];
    let c = row["c"].as_f64().unwrap();
    for key in ["lambda1", "lambda2"] {
        let l = row[key].as_f64().unwrap();
        assert!(host_delta(0.5, 1.0, 1.0, 1.0, c, l).abs() < 1e-9, "{key}");
    }
    assert!(row["decay"]["mu"].as_f64().unwrap() > 0.0);
    let speeds = fs::read_to_string(out.join("speeds.csv")).unwrap();
    assert!(speeds.starts_with("# "));
    assert!(speeds.lines().any(|l| l.starts_with("c,lambda1,lambda2")));
}

#[test]
fn unknown_keys_are_rejected_with_their_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.cfg", &format!("{HOST}\n[numerics]\nm = 10\nstep = 0.1\n"));
    let o = run_cfg("analyze", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("step") && e.contains("line 12"), "{e}");

    let cfg = write(&dir, "bad2.cfg", "[model]\nname = \"host_vector\"\nparams = { a = 0.5, b = 1.0 }\ncolour = 1\n");
    assert_eq!(run_cfg("analyze", &cfg, &dir.path().join("out2"), &[]).status.code(), Some(2));
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.cfg", "[model]\nname = \"host_vector\"\nparams = { a = 0.5, b = }\n");
    let o = run_cfg("analyze", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn invalid_inputs_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("model", "[model]\nname = \"host_vector\"\nparams = { a = 2.0, b = 1.0 }\n".to_string()),
        ("param", "[model]\nname = \"host_vector\"\nparams = { a = 0.5, b = 1.0, z = 1.0 }\n".to_string()),
        ("kernel", format!("{HOST}\n[kernel]\ntype = \"dirac\"\nalpha = 0.3\n")),
        ("gaussian", format!("{HOST}\n[kernel]\ntype = \"gaussian\"\n")),
        ("dt", format!("{HOST}\n[numerics]\ndt = 5.0\n")),
        ("dt_text", format!("{HOST}\n[numerics]\ndt = \"fast\"\n")),
        ("speeds", format!("{HOST}\n[analyze]\nc = 1.0\nc_offsets = [0.5]\n")),
    ];
    for (name, text) in cases {
        let cfg = write(&dir, &format!("{name}.cfg"), &text);
        let cmd = if name == "dt" { "simulate" } else { "analyze" };
        let o = run_cfg(cmd, &cfg, &dir.path().join(name), &[]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", stderr(&o));
    }
    assert_eq!(ldfront(&["analyze"]).status.code(), Some(2));
    assert_eq!(ldfront(&["analyze", "--bogus"]).status.code(), Some(2));
    assert_eq!(ldfront(&["selfcheck", "--jobs", "0"]).status.code(), Some(2));
}

#[test]
fn stability_below_the_minimal_speed_is_a_validation_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "critical.cfg", &format!("{HOST}\n[stability]\nc_offsets = [-0.2]\n"));
    let o = run_cfg("stability", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("below the minimal wave speed c*"), "{e}");
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "short.cfg", &format!("{HOST}\n[profile]\nt_relax = 1.0\npolish = false\n"));
    let o = run_cfg("profile", &cfg, &dir.path().join("a"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let cfg = write(&dir, "margin.cfg", &format!("{HOST}\n[stability]\nmargin = 10000.0\nt_end = 20.0\n"));
    let o = run_cfg("stability", &cfg, &dir.path().join("b"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let meta = json(&dir.path().join("b/metadata.json"));
    assert_eq!(meta["status"], "failed");
}

#[test]
fn output_collision_needs_force() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "host.cfg", HOST);
    let out = dir.path().join("out");
    assert_eq!(run_cfg("analyze", &cfg, &out, &[]).status.code(), Some(0));
    let o = run_cfg("analyze", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--force"));
    assert_eq!(run_cfg("analyze", &cfg, &out, &["--force"]).status.code(), Some(0));
}

fn csv_files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut acc = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                acc.push((p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    acc.sort();
    acc
}

#[test]
fn identical_configs_give_identical_csvs() {
    let dir = TempDir::new().unwrap();
    let text = format!(
        "seed = 7\n{HOST}\n[numerics]\nx_min = -40.0\nx_max = 10.0\nt_end = 5.0\n[simulate]\ninitial = \"random\"\nsnapshot_every = 1.0\n\
         [stability]\nc_offsets = [0.5, 1.0]\nt_end = 20.0\nfit_window = [5.0, 20.0]\n"
    );
    let cfg = write(&dir, "det.cfg", &text);
    for (cmd, extra_a, extra_b) in [("simulate", "1", "1"), ("stability", "1", "2"), ("analyze", "1", "1")] {
        let (a, b) = (dir.path().join(format!("{cmd}_a")), dir.path().join(format!("{cmd}_b")));
        assert_eq!(run_cfg(cmd, &cfg, &a, &["--jobs", extra_a]).status.code(), Some(0), "{cmd}");
        assert_eq!(run_cfg(cmd, &cfg, &b, &["--jobs", extra_b]).status.code(), Some(0), "{cmd}");
        let (fa, fb) = (csv_files(&a), csv_files(&b));
        assert!(!fa.is_empty());
        assert!(fa == fb, "{cmd}: CSV outputs differ");
    }
    // another seed changes the random initial data
    let other = write(&dir, "other.cfg", &text.replacen("seed = 7", "seed = 8", 1));
    let c = dir.path().join("simulate_c");
    assert_eq!(run_cfg("simulate", &other, &c, &[]).status.code(), Some(0));
    assert!(csv_files(&c) != csv_files(&dir.path().join("simulate_a")));
}

#[test]
fn metadata_echoes_the_effective_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "host.cfg", &format!("{HOST}\n[numerics]\ndt = \"auto\"\n[analyze]\nc_offsets = [0.5]\n"));
    let out = dir.path().join("out");
    assert_eq!(run_cfg("analyze", &cfg, &out, &[]).status.code(), Some(0));
    let meta = json(&out.join("metadata.json"));
    let echoed: ExperimentConfig = serde_json::from_value(meta["config"].clone()).unwrap();
    let loaded = load_config(&cfg).unwrap().config;
    assert_eq!(echoed, loaded);
    assert_eq!(echoed.numerics.m, 10);
    assert_eq!(echoed.numerics.dt, TimeStep::Auto);
    assert_eq!(meta["command"], "analyze");
    assert!(meta["timings"].as_array().is_some_and(|t| !t.is_empty()));
    let outputs: Vec<&str> = meta["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(outputs.contains(&"dispersion_report.json") && outputs.contains(&"summary.txt"));
    // the echo is itself a valid config that loads to the same thing
    let again = write(&dir, "echo.cfg", &toml::to_string(&echoed).unwrap());
    assert_eq!(load_config(&again).unwrap().config, loaded);
}

#[test]
fn tabulated_kernel_is_read_relative_to_the_config() {
    let dir = TempDir::new().unwrap();
    fs::create_dir(dir.path().join("k")).unwrap();
    // a three-point table with unit trapezoid mass at spacing 0.5
    write(&dir, "k/table.csv", "# y, h(y)\ny,h\n-0.5,0.5\n0,1.0\n0.5,0.5\n");
    let text = "[model]\nname = \"fisher_kpp\"\n[kernel]\ntype = \"tabulated\"\nfile = \"table.csv\"\n[problem]\ntau = 0.5\n";
    let cfg = write(&dir, "k/tab.cfg", text);
    let out = dir.path().join("out");
    let o = run_cfg("analyze", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(json(&out.join("dispersion_report.json"))["c_star"].as_f64().unwrap() > 0.0);

    write(&dir, "k/uneven.csv", "-0.5,0.2\n0,1.0\n0.5,0.8\n");
    let bad = write(&dir, "k/bad.cfg", &text.replace("table.csv", "uneven.csv"));
    assert_eq!(run_cfg("analyze", &bad, &dir.path().join("bad"), &[]).status.code(), Some(2));
    let missing = write(&dir, "k/missing.cfg", &text.replace("table.csv", "nope.csv"));
    assert_eq!(run_cfg("analyze", &missing, &dir.path().join("missing"), &[]).status.code(), Some(2));
}

#[test]
fn stability_sweep_writes_one_directory_per_job() {
    let dir = TempDir::new().unwrap();
    let text = "[model]\nname = \"host_vector\"\nparams = { a = 0.5, b = 1.0 }\n\
                [stability]\ntaus = [0.0, 1.0]\nc_offsets = [0.5]\nt_end = 30.0\nfit_window = [10.0, 30.0]\n";
    let cfg = write(&dir, "sweep.cfg", text);
    let out = dir.path().join("out");
    let o = run_cfg("stability", &cfg, &out, &["--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 2);
    let mu_hat = |row: &str| row.split(',').nth(5).unwrap().parse::<f64>().unwrap();
    // the delay slows the decay
    assert!(mu_hat(rows[0]) > mu_hat(rows[1]), "{rows:?}");
    for run in ["run_t00_c00", "run_t01_c00"] {
        let fit = json(&out.join(run).join("fit.json"));
        assert_eq!(fit["fit"]["kind"], "exponential");
        assert!(fit["fit"]["rate"].as_f64().unwrap() >= fit["mu_pred"].as_f64().unwrap());
        assert!(out.join(run).join("norms.csv").exists());
    }
}

#[test]
fn green_tables() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "g.cfg", &format!("{HOST}\n[green]\neps = 0.5\ntimes = [1.0, 10.0]\nrates = [1.0]\ntable_t_max = 2.0\ntable_samples = 9\n"));
    let out = dir.path().join("out");
    let o = run_cfg("green", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = fs::read_to_string(out.join("delayed_exp.csv")).unwrap();
    let rows: Vec<Vec<f64>> = table
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 9);
    // y' = y(t − 1), y = 1 on [−1, 0]: y = 1 + t on [0, 1], 1 + t + (t−1)²/2 on [1, 2]
    for r in &rows {
        let t = r[1];
        let want = if t < 0.0 { 1.0 } else if t < 1.0 { 1.0 + t } else { 1.0 + t + 0.5 * (t - 1.0) * (t - 1.0) };
        assert!((r[2] - want).abs() < 1e-12 && (r[3] - want).abs() < 1e-12, "t = {t}");
    }
    let heat = json(&out.join("green_report.json"));
    assert_eq!(heat["all_within_bound"], true);
    assert!(heat["heat_kernel"].as_array().unwrap().iter().all(|r| (r["mass"].as_f64().unwrap() - 1.0).abs() < 1e-12));
    let eps = write(&dir, "eps.cfg", &format!("{HOST}\n[green]\neps = 1.5\n"));
    assert_eq!(run_cfg("green", &eps, &dir.path().join("eps"), &[]).status.code(), Some(2));
}
