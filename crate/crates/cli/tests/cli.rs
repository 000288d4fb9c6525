use std::fs;
use std::path::Path;
use std::process::Command;

use fraccgls::tsfs::SpectralGrid;
use fraccgls::{CglsParams, GridSpec};
use fraccgls_cli::commands::{cmd_compare, cmd_convergence, cmd_run, cmd_stability};
use fraccgls_cli::{CompareOptions, ConvergenceOptions, Method, RunConfig, StabilityOptions};
use num_complex::Complex64;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fraccgls"))
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn alpha_out_of_range_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--alpha", "2.5", "--output"])
        .arg(dir.path())
        .arg("run")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(1, 2]"));
}

#[test]
fn bad_flags_and_step_counts_exit_with_validation_code() {
    let out = bin().args(["run", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["--t-final", "0.55", "run"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["--tau", "-0.1", "run"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = bin()
        .args(["--method", "tsfs", "--output"])
        .arg(blocker.join("sub"))
        .arg("run")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn run_writes_every_time_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--method", "tsfs", "--output"])
        .arg(dir.path())
        .arg("run")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let tsfs = dir.path().join("tsfs");
    for n in 0..=5 {
        for q in ["abs2", "re", "im"] {
            let (header, rows) = read_csv(&tsfs.join(format!("{q}_n{n:05}.csv")));
            assert_eq!(header, ["x", "value"]);
            assert_eq!(rows.len(), 50);
        }
    }
    assert!(!tsfs.join("abs2_n00006.csv").exists());
    let (_, levels) = read_csv(&tsfs.join("levels.csv"));
    let t = column(&levels, 1);
    assert_eq!(t.len(), 6);
    for (n, t) in t.iter().enumerate() {
        assert!((t - 0.1 * n as f64).abs() < 1e-12);
    }
    assert!(!dir.path().join("ifdm").exists());
}

#[test]
fn record_every_skips_levels_but_keeps_the_last() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        method: Method::Ifdm,
        record_every: 2,
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let s = cmd_run(&cfg).unwrap();
    assert_eq!(s.runs[0].steps, vec![0, 2, 4, 5]);
    assert!(dir.path().join("ifdm/re_n00005.csv").exists());
    assert!(!dir.path().join("ifdm/re_n00003.csv").exists());
}

#[test]
fn metadata_round_trips_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let mut cfg = RunConfig {
        method: Method::Both,
        output_dir: dir.path().join("out"),
        ..RunConfig::default()
    };
    cfg.params.alpha = 1.75;
    cfg.quantities.remove(&fraccgls::Quantity::ImagPart);
    fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();

    let out = bin()
        .arg("--config")
        .arg(&cfg_path)
        .arg("run")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/metadata.json")).unwrap())
            .unwrap();
    let back: RunConfig = serde_json::from_value(meta["config"].clone()).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(meta["command"], "run");
    assert_eq!(meta["input_hash"].as_str().unwrap().len(), 64);
    assert!(meta["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert!(!dir.path().join("out/ifdm/im_n00000.csv").exists());
    assert!(dir.path().join("out/ifdm/re_n00000.csv").exists());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let cfg = RunConfig {
        output_dir: dir.path().join("ignored"),
        ..RunConfig::default()
    };
    fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = bin()
        .arg("--config")
        .arg(&cfg_path)
        .args([
            "--alpha", "1.25", "--a", "-6", "--b", "6", "--m", "60", "--method", "ifdm",
        ])
        .arg("--output")
        .arg(dir.path().join("used"))
        .arg("run")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("used/metadata.json")).unwrap())
            .unwrap();
    let back: RunConfig = serde_json::from_value(meta["config"].clone()).unwrap();
    assert_eq!(back.params.alpha, 1.25);
    assert_eq!((back.grid.a, back.grid.b, back.grid.m), (-6.0, 6.0, 60));
    assert_eq!(back.method, Method::Ifdm);
    assert!(!dir.path().join("ignored").exists());
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let mut v = serde_json::to_value(RunConfig::default()).unwrap();
    v["extra"] = Value::from(1);
    fs::write(&cfg_path, v.to_string()).unwrap();
    let out = bin()
        .arg("--config")
        .arg(&cfg_path)
        .arg("run")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn linear_free_run_matches_the_spectral_propagator() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "--method",
            "tsfs",
            "--no-nonlinear",
            "--no-potential",
            "--t-final",
            "1.0",
            "--output",
        ])
        .arg(dir.path())
        .arg("run")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // Expand the initial data in the DFT basis and evolve each mode exactly.
    let p = CglsParams::example_one(1.5);
    let grid = GridSpec::new(-5.0, 5.0, 50).unwrap();
    let spectral = SpectralGrid::new(&grid);
    let m = grid.m() as f64;
    let amp = (1.0 - p.initial_wavenumber().powi(2)).sqrt();
    let psi0: Vec<Complex64> = grid
        .nodes()
        .iter()
        .map(|&x| Complex64::from_polar(amp, p.initial_wavenumber() * x))
        .collect();
    let t = 1.0;
    let exact: Vec<Complex64> = grid
        .nodes()
        .iter()
        .map(|&x| {
            spectral
                .mu()
                .iter()
                .map(|&mu| {
                    let c: Complex64 = grid
                        .nodes()
                        .iter()
                        .zip(&psi0)
                        .map(|(&y, f)| f * Complex64::from_polar(1.0, -mu * (y - grid.a())))
                        .sum::<Complex64>()
                        / m;
                    let decay = (-(mu.abs().powf(p.alpha) * t) / p.time_coefficient()).exp();
                    c * decay * Complex64::from_polar(1.0, mu * (x - grid.a()))
                })
                .sum()
        })
        .collect();

    let (_, re) = read_csv(&dir.path().join("tsfs/re_n00010.csv"));
    let (_, im) = read_csv(&dir.path().join("tsfs/im_n00010.csv"));
    let (re, im) = (column(&re, 1), column(&im, 1));
    for j in 0..50 {
        let got = Complex64::new(re[j], im[j]);
        assert!(
            (got - exact[j]).norm() < 1e-12,
            "node {j}: {got} vs {}",
            exact[j]
        );
    }
}

#[test]
fn self_check_compare_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--output"])
        .arg(dir.path())
        .args(["compare", "--alphas", "1.5,1.75", "--self-check", "ifdm"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&dir.path().join("table2.csv"));
    assert_eq!(header, ["alpha", "t", "quantity", "l2", "linf"]);
    assert_eq!(rows.len(), 2 * 2 * 3);
    assert!(column(&rows, 3)
        .iter()
        .chain(&column(&rows, 4))
        .all(|&v| v == 0.0));
    for alpha in ["1.5", "1.75"] {
        for t in ["0.5", "1"] {
            let (header, rows) =
                read_csv(&dir.path().join(format!("table1_alpha{alpha}_t{t}.csv")));
            assert_eq!(header, ["x", "abs_err_abs2", "abs_err_re", "abs_err_im"]);
            assert_eq!(rows.len(), 50);
            for c in 1..4 {
                assert!(column(&rows, c).iter().all(|&v| v == 0.0));
            }
        }
    }
}

#[test]
fn compare_reports_both_default_times() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let s = cmd_compare(&cfg, &CompareOptions::default()).unwrap();
    let times: Vec<f64> = s.norms.iter().map(|r| r.t).collect();
    assert_eq!(times, [0.5, 0.5, 0.5, 1.0, 1.0, 1.0]);
    for r in &s.norms {
        assert!(r.l2 <= r.linf && r.l2 > 0.0);
    }
    let (header, rows) = read_csv(&dir.path().join("fields_alpha1.5_t1.csv"));
    assert_eq!(header[0], "x");
    assert_eq!(header.len(), 7);
    assert_eq!(rows.len(), 50);
    assert!(cmd_compare(
        &cfg,
        &CompareOptions {
            times: vec![0.55],
            ..CompareOptions::default()
        }
    )
    .is_err());
}

#[test]
fn convergence_reports_three_studies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let s = cmd_convergence(&cfg, &ConvergenceOptions::default()).unwrap();
    let names: Vec<_> = s.studies.iter().map(|st| st.name.as_str()).collect();
    assert_eq!(names, ["riesz_spatial", "tsfs_temporal", "ifdm_temporal"]);
    assert!(s.studies[0].order >= 1.9);
    assert!(s.studies.iter().skip(1).all(|st| st.order >= 1.8));
    let (header, rows) = read_csv(&dir.path().join("convergence.csv"));
    assert_eq!(header, ["study", "step", "error", "fitted_order"]);
    assert_eq!(rows.len(), 9);
    let low = ConvergenceOptions {
        levels: 2,
        ..Default::default()
    };
    assert_eq!(cmd_convergence(&cfg, &low).unwrap_err().exit_code(), 2);
}

#[test]
fn stability_flags_only_the_unbounded_regime() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let bounded = cmd_stability(
        &cfg,
        &StabilityOptions {
            omega_count: 64,
            v_frozen: Some(1.0),
            psi_max: Some(1.0),
        },
    )
    .unwrap();
    assert_eq!(bounded.flagged, 0);
    let (header, rows) = read_csv(&dir.path().join("stability.csv"));
    assert_eq!(header, ["omega", "xi_abs", "flagged"]);
    assert_eq!(rows.len(), 64);
    let summary: Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("stability_summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["regime"], "bounded");

    // psi_max below the frozen potential amplifies the lowest frequencies.
    let loose = cmd_stability(
        &cfg,
        &StabilityOptions {
            omega_count: 64,
            v_frozen: Some(1.0),
            psi_max: Some(0.0),
        },
    )
    .unwrap();
    assert!(loose.flagged > 0 && loose.max_modulus > 1.0);
    let too_few = StabilityOptions {
        omega_count: 8,
        ..Default::default()
    };
    assert_eq!(cmd_stability(&cfg, &too_few).unwrap_err().exit_code(), 2);
}

#[test]
fn negative_numbers_are_accepted_as_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--a", "-4", "--b", "4", "--m", "40", "--output"])
        .arg(dir.path())
        .args(["stability", "--omega-count", "16", "--v-frozen", "-0.5"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
