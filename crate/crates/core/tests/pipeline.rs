use std::path::Path;
use std::process::Command;

use cvpnd::pipeline::*;
use cvpnd::Error;

fn small(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::parse(
        "samples_per_angle = 20000\n\
         shards_per_angle = 4\n\
         grid_points = 61\n\
         polynomials = n, n(n-1)\n",
    )
    .unwrap();
    cfg.out_dir = out.to_path_buf();
    cfg
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn config_defaults_and_round_trip() {
    let cfg = RunConfig::default();
    assert_eq!(cfg.params.tomography_angles.len(), 12);
    assert_eq!(cfg.params.samples_per_angle, 10_000_000);
    assert_eq!((cfg.histogram.x_max, cfg.histogram.n_bins), (8.0, 401));
    assert_eq!(cfg.polynomials.len(), 4);
    let text = "# comment\nsqueezed_variance_db = -3\nantisqueezed_variance_db = 5 # trailing\n\
                tomography_angles_deg = 0, 30, 60, 90, 120, 150\npolynomials = n(n-1)\n\
                dark_noise_db = none\nthreads = 3\nmode = oracle\n";
    let cfg = RunConfig::parse(text).unwrap();
    assert_eq!(cfg.params.squeezed_variance_db, -3.0);
    assert_eq!(cfg.params.tomography_angles.len(), 6);
    assert!((cfg.params.tomography_angles[2] - std::f64::consts::PI / 3.0).abs() < 1e-15);
    assert_eq!(cfg.params.dark_noise_db, f64::NEG_INFINITY);
    assert_eq!(cfg.threads, Some(3));
    assert_eq!(cfg.mode, RunMode::Oracle);
    assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
}

#[test]
fn config_errors_carry_line_numbers() {
    for (text, line) in [
        ("samples_per_angle = 10\nbogus = 1\n", 2),
        ("hist_bins = many\n", 1),
        ("\n\npolynomials = n(n-1.5)\n", 3),
        ("rng_seed\n", 1),
    ] {
        match RunConfig::parse(text) {
            Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
    let mut cfg = RunConfig::default();
    cfg.params.tap_reflectivity = 2.0;
    assert!(cfg.validate().is_err());
    let mut cfg = RunConfig::default();
    cfg.params.tomography_angles = vec![0.0, 0.0];
    assert!(cfg.validate().is_err());
}

#[test]
fn report_round_trip() {
    let mut r = MetricsReport::new();
    r.number("a.b", 0.1 + 0.2);
    r.text("hash", "beef");
    r.number("bad", f64::NAN);
    let back = MetricsReport::parse(&r.to_text());
    assert_eq!(back.get_f64("a.b"), Some(0.1 + 0.2));
    assert_eq!(back.get("hash"), Some("beef"));
    assert_eq!(r.non_finite(), vec!["bad"]);
}

#[test]
fn shards_partition_samples() {
    assert_eq!(
        (0..3).map(|s| shard_count(10, 3, s)).collect::<Vec<_>>(),
        vec![4, 3, 3]
    );
    assert_eq!(jackknife_se(&[1.0, 1.0, 1.0]), 0.0);
}

#[test]
fn run_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for threads in [1, 8] {
        let mut cfg = small(&dir.path().join(format!("t{threads}")));
        cfg.threads = Some(threads);
        run(&cfg).unwrap();
        outs.push(cfg.out_dir);
    }
    assert_eq!(
        read(outs[0].join("metrics.txt")),
        read(outs[1].join("metrics.txt"))
    );
    for f in [
        "marginals/n/theta_05.csv",
        "wigner/n_n-1.csv",
        "wigner/n.pgm",
    ] {
        assert_eq!(read(outs[0].join(f)), read(outs[1].join(f)), "{f}");
    }
}

#[test]
fn run_report_contents() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let out = run(&cfg).unwrap();
    let r = &out.report;
    assert!(r.non_finite().is_empty());
    assert_eq!(r.get("dataset_sha256").unwrap().len(), 64);
    for key in [
        "n.wigner.min",
        "n.wigner.min_se",
        "n.mean_weight",
        "n.l1.theta_11",
        "n.l1_compare.theta_00",
        "n_n-1.wigner.central_fringe",
        "n_n-1.wigner.first_negative_fringe",
        "n_n-1.oracle.exact.origin",
        "n.oracle.fbp.min",
        "herald_probability.k1",
    ] {
        assert!(r.get_f64(key).is_some(), "{key}");
    }
    assert!(out.timing.get_f64("total_seconds").is_some());
    assert!(r.entries().iter().all(|(k, _)| !k.contains("seconds")));
    let parsed =
        MetricsReport::parse(&String::from_utf8(read(dir.path().join("metrics.txt"))).unwrap());
    assert_eq!(parsed.entries(), r.entries());
    assert!(dir.path().join("oracle/n_wigner.csv").exists());
}

#[test]
fn staged_verbs_reproduce_the_single_pass() {
    let dir = tempfile::tempdir().unwrap();
    let base = small(&dir.path().join("direct"));
    let direct = run(&base).unwrap().report;

    let staged = dir.path().join("staged");
    let sim = RunConfig {
        out_dir: staged.clone(),
        mode: RunMode::Simulate,
        ..base.clone()
    };
    execute(&sim).unwrap();
    assert_eq!(
        std::fs::read_dir(staged.join("samples")).unwrap().count(),
        12 * 4
    );
    let cond = RunConfig {
        input_dir: Some(staged.clone()),
        mode: RunMode::Condition,
        ..sim.clone()
    };
    let c = execute(&cond).unwrap().report;
    assert_eq!(c.get("dataset_sha256"), direct.get("dataset_sha256"));
    let rec = RunConfig {
        mode: RunMode::Reconstruct,
        ..cond.clone()
    };
    let w = execute(&rec).unwrap().report;
    // CSV round trip of the marginals is exact, so the grids agree bit for bit.
    for key in ["n.wigner.min", "n_n-1.wigner.central_fringe"] {
        assert_eq!(w.get(key), direct.get(key), "{key}");
    }
    assert_eq!(
        read(staged.join("wigner/n.csv")),
        read(dir.path().join("direct/wigner/n.csv"))
    );
}

#[test]
fn ingest_detects_damaged_samples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        mode: RunMode::Simulate,
        ..small(dir.path())
    };
    execute(&cfg).unwrap();
    let victim = sample_path(&dir.path().join("samples"), 3, 1);
    let bytes = read(&victim);
    std::fs::write(&victim, &bytes[..bytes.len() - 7]).unwrap();
    let err = execute(&RunConfig {
        mode: RunMode::Condition,
        input_dir: Some(dir.path().to_path_buf()),
        out_dir: dir.path().join("c"),
        ..cfg
    })
    .unwrap_err()
    .to_string();
    assert!(err.contains("ingest") && err.contains("offset"), "{err}");
}

#[test]
fn verify_passes_at_small_scale() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.params.samples_per_angle = 100_000;
    cfg.polynomials = cvpnd::conditioning::reference_polynomials();
    let (checks, out) = verify(&cfg).unwrap();
    let failed: Vec<_> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: {}", c.name, c.detail))
        .collect();
    assert!(failed.is_empty(), "{failed:?}");
    assert_eq!(out.report.get("check.determinism"), Some("pass"));
}

#[test]
fn oracle_verb_writes_references() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        mode: RunMode::Oracle,
        ..small(dir.path())
    };
    let r = execute(&cfg).unwrap().report;
    let p1 = r.get_f64("herald_probability.k1").unwrap();
    assert!(p1 > 0.0 && p1 < 0.2);
    assert!(dir.path().join("oracle/source_rho.csv").exists());
    assert!(dir.path().join("oracle/n/theta_00.csv").exists());
}

#[test]
fn cli_runs_and_reports_errors() {
    let exe = env!("CARGO_BIN_EXE_cvpnd");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("small.cfg");
    std::fs::write(
        &cfg_path,
        "samples_per_angle = 5000\nshards_per_angle = 2\ngrid_points = 41\npolynomials = n\n",
    )
    .unwrap();
    let out = Command::new(exe)
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--seed", "7", "--threads", "2", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("rng_seed=7") && stdout.contains("n.wigner.min="));

    let bad = Command::new(exe)
        .args(["run", "--set", "tap_reflectivity=3", "--out"])
        .arg(dir.path().join("bad"))
        .output()
        .unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));

    let missing = Command::new(exe)
        .args(["reconstruct", "--set", "polynomials=n", "--input"])
        .arg(dir.path().join("nowhere"))
        .arg("--out")
        .arg(dir.path().join("r"))
        .output()
        .unwrap();
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("does not exist"));
}
