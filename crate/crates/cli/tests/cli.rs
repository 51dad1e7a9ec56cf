use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use epscrm::data::ingest_csv;
use epscrm::Error;
use epscrm_cli::config::RunConfig;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn epscrm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epscrm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn three_row_fixture() {
    let d = ingest_csv(fixture("three_rows.csv"), "y", &strings(&["x"])).unwrap();
    assert_eq!(d.len(), 3);
    assert_eq!(d.y, vec![1.5, -0.25, 3.0]);
    assert_eq!(d.x[2], vec![2.5]);
}

#[test]
fn missing_response_column_is_named() {
    let err = ingest_csv(fixture("three_rows.csv"), "lbm", &[]).unwrap_err();
    match &err {
        Error::Parse { line, msg, .. } => {
            assert_eq!(*line, 1);
            assert!(msg.contains("'lbm'"), "{msg}");
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn missing_values_report_every_line() {
    let err = ingest_csv(fixture("with_na.csv"), "y", &strings(&["x"])).unwrap_err();
    let text = err.to_string();
    assert!(text.contains("[3, 4]"), "{text}");
}

#[test]
fn ais_shaped_fixture() {
    let d = ingest_csv(fixture("ais_synthetic.csv"), "lbm", &strings(&["rcc", "Ht", "Wt"])).unwrap();
    assert_eq!(d.len(), 202);
    assert_eq!(d.p(), 3);
    assert_eq!(d.covariate_names, strings(&["rcc", "Ht", "Wt"]));
}

#[test]
fn bundled_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["a5.txt", "ais.txt"] {
        RunConfig::load(&root.join(name), &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn config_errors_are_all_listed_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.txt");
    std::fs::write(&cfg, "epsilon = -1\nburnin = many\nfrobnicate = 3\n").unwrap();
    let o = epscrm(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("r").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    for key in ["epsilon", "burnin", "frobnicate"] {
        assert!(err.contains(key), "{key} missing from: {err}");
    }
    assert!(!dir.path().join("r").exists());
}

#[test]
fn run_then_diagnose_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.txt");
    std::fs::write(
        &cfg,
        "simulate_n = 150\nburnin = 100\nsamples = 60\nthin = 2\ngrid = 0:60:61\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = epscrm(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
    ]);
    let printed = stdout(&o);
    for f in [
        "config.txt",
        "sweeps.csv",
        "atoms.csv",
        "allocations.csv",
        "fit_report.txt",
        "cpo.csv",
        "kn_posterior.csv",
        "binder_partition.csv",
        "coclustering.csv",
        "density.csv",
        "run_summary.txt",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let echo = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert!(echo.lines().any(|l| l == "seed = 9"), "{echo}");
    assert!(echo.lines().any(|l| l.starts_with("m0 = ") && l != "m0 = data"));

    let report = std::fs::read_to_string(out.join("fit_report.txt")).unwrap();
    assert!(printed.contains(&report));
    let again = stdout(&epscrm(&["diagnose", "--archive", out.to_str().unwrap()]));
    assert_eq!(again, report);

    let density = std::fs::read_to_string(out.join("density.csv")).unwrap();
    assert_eq!(density.lines().next(), Some("y,mean,q05,q95"));
    assert_eq!(density.lines().count(), 62);
}

#[test]
fn same_seed_same_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.txt");
    std::fs::write(
        &cfg,
        "simulate_n = 80\nburnin = 50\nsamples = 30\nthin = 1\ngrid = 0:60:31\n",
    )
    .unwrap();
    let mut runs = Vec::new();
    for tag in ["a", "b"] {
        let out = dir.path().join(tag);
        stdout(&epscrm(&[
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]));
        runs.push(out);
    }
    for f in [
        "sweeps.csv",
        "atoms.csv",
        "allocations.csv",
        "fit_report.txt",
        "density.csv",
    ] {
        let a = std::fs::read(runs[0].join(f)).unwrap();
        let b = std::fs::read(runs[1].join(f)).unwrap();
        assert!(a == b, "{f} differs");
    }
}

#[test]
fn parallel_chains_get_their_own_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.txt");
    std::fs::write(
        &cfg,
        "simulate_n = 80\nburnin = 30\nsamples = 20\nthin = 1\nchains = 2\ngrid = 0:60:11\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    stdout(&epscrm(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    let a = std::fs::read_to_string(out.join("chain1/sweeps.csv")).unwrap();
    let b = std::fs::read_to_string(out.join("chain2/sweeps.csv")).unwrap();
    assert_ne!(a, b);
    let echo = std::fs::read_to_string(out.join("chain2/config.txt")).unwrap();
    assert!(echo.lines().any(|l| l == "stream = 1"), "{echo}");
    let again = stdout(&epscrm(&[
        "diagnose",
        "--archive",
        out.join("chain2").to_str().unwrap(),
    ]));
    assert_eq!(
        again,
        std::fs::read_to_string(out.join("chain2/fit_report.txt")).unwrap()
    );
}

#[test]
fn lindep_run_writes_one_grid_per_covariate_vector() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ais.txt");
    let body = format!(
        "intensity = ngg\nsigma = 0.125\nomega = 1\nkappa = 0.4\nmodel = lindep\nb0 = -50, 5, 0, 0\n\
         sigma0 = 100, 10, 10, 10\ndata = {}\nresponse = lbm\ncovariates = rcc, Ht, Wt\n\
         burnin = 100\nsamples = 50\nthin = 1\ngrid = 20:110:46\n\
         grid_x = 3.9, 176, 60; 5.34, 178.6, 67.1; 5.17, 209.4, 113.7\n",
        fixture("ais_synthetic.csv").display()
    );
    std::fs::write(&cfg, body).unwrap();
    let out = dir.path().join("run");
    stdout(&epscrm(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    for j in 1..=3 {
        assert!(out.join(format!("density_x{j}.csv")).is_file());
    }
    let gx = std::fs::read_to_string(out.join("grid_x.csv")).unwrap();
    assert_eq!(gx.lines().next(), Some("j,rcc,Ht,Wt"));
    assert_eq!(gx.lines().count(), 4);
    let again = stdout(&epscrm(&["diagnose", "--archive", out.to_str().unwrap()]));
    assert_eq!(again, std::fs::read_to_string(out.join("fit_report.txt")).unwrap());
}

#[test]
fn eppf_check_gamma_normalizes() {
    let text = stdout(&epscrm(&[
        "eppf-check",
        "--intensity",
        "gamma",
        "--omega",
        "1",
        "--kappa",
        "1",
        "--eps",
        "1e-8",
        "--nmax",
        "4",
    ]));
    let section = text.split("n,normalization_residual\n").nth(1).expect("residual table");
    let mut seen = 0;
    for line in section.lines().take_while(|l| !l.is_empty()) {
        let r: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(r.abs() < 1e-4, "{line}");
        seen += 1;
    }
    assert_eq!(seen, 4);
    assert!(text.contains("(2,1,1)"));
}

#[test]
fn eppf_check_bessel_prints_bounds() {
    let text = stdout(&epscrm(&[
        "eppf-check",
        "--intensity",
        "bessel",
        "--omega",
        "2",
        "--kappa",
        "1",
        "--nmax",
        "3",
    ]));
    assert!(text.contains("composition,lower,p_bessel,upper,p_dirichlet"));
}

#[test]
fn calibrate_tie_probability() {
    let text = stdout(&epscrm(&[
        "calibrate",
        "--intensity",
        "bessel",
        "--omega",
        "1.05",
        "--target-p2",
        "0.5",
    ]));
    let kappa: f64 = text
        .lines()
        .next()
        .unwrap()
        .trim_start_matches("kappa = ")
        .parse()
        .unwrap();
    assert!((kappa - 1.2137).abs() < 2e-3, "{text}");
}

#[test]
fn calibrate_needs_a_target() {
    let o = epscrm(&["calibrate", "--intensity", "bessel"]);
    assert!(!o.status.success());
}

#[test]
fn prior_simulate_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("prior");
    stdout(&epscrm(&[
        "prior-simulate",
        "--intensity",
        "bessel",
        "--omega",
        "1.05",
        "--kappa",
        "0.11",
        "--n",
        "50",
        "--reps",
        "2000",
        "--out",
        out.to_str().unwrap(),
    ]));
    let kn = std::fs::read_to_string(out.join("kn_prior.csv")).unwrap();
    let total: f64 = kn
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
    let moments = std::fs::read_to_string(out.join("moments.csv")).unwrap();
    assert!(moments.contains("p0_b1,p0_b2,p0_b1b2,mean,var,cov"));
}

#[test]
fn prior_simulate_exact_matches_monte_carlo() {
    let args = |exact: bool| {
        let mut a = vec![
            "prior-simulate",
            "--intensity",
            "gamma",
            "--omega",
            "1",
            "--kappa",
            "1",
            "--n",
            "5",
            "--reps",
            "40000",
        ];
        if exact {
            a.push("--exact");
        }
        stdout(&epscrm(&a))
    };
    let parse = |t: &str| -> Vec<f64> {
        t.lines()
            .skip(1)
            .take(5)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let exact = parse(&args(true));
    let mc = parse(&args(false));
    for (e, m) in exact.iter().zip(&mc) {
        assert!((e - m).abs() < 0.015, "{exact:?} vs {mc:?}");
    }
}
