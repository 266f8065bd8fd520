use std::path::{Path, PathBuf};
use std::time::Instant;

use super::config::RunConfig;
use super::engine::{condition_all, simulate_to_files, ConditionedData, SampleSource};
use super::report::MetricsReport;
use crate::conditioning::{build_q_polynomial, HistogramSpec, Marginal, NumberPolynomial};
use crate::error::{Error, Result};
use crate::fock::{
    binned_marginal, herald_distribution, measured_conditional_state, source_state, tap_setup,
    ConditionalState, FockDensityMatrix,
};
use crate::gaussian::{analytic_weighted_moment, build_covariance};
use crate::tomography::{inverse_radon, wigner_metrics, MarginalSet, WignerGrid, WignerMetrics};

/// Result of a pipeline verb: the deterministic report plus wall-clock timing
/// kept apart so it never perturbs the report bytes.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: MetricsReport,
    pub timing: MetricsReport,
}

fn mkdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn angle_file(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("theta_{i:02}.csv"))
}

fn source_of(cfg: &RunConfig) -> SampleSource {
    match &cfg.input_dir {
        Some(d) if d.join("samples").is_dir() => SampleSource::Files(d.join("samples")),
        Some(d) => SampleSource::Files(d.clone()),
        None => SampleSource::Simulate,
    }
}

fn write_grid(w: &WignerGrid, dir: &Path, stem: &str) -> Result<()> {
    w.write_csv(&dir.join(format!("{stem}.csv")))?;
    w.write_pgm(&dir.join(format!("{stem}.pgm")))
}

fn push_metrics(report: &mut MetricsReport, prefix: &str, m: &WignerMetrics) {
    for (k, v) in m.entries() {
        report.number(format!("{prefix}.{k}"), v);
    }
}

/// Jackknife standard error from leave-one-out estimates.
pub fn jackknife_se(leave_one_out: &[f64]) -> f64 {
    let n = leave_one_out.len() as f64;
    let mean = leave_one_out.iter().sum::<f64>() / n;
    ((n - 1.0) / n
        * leave_one_out
            .iter()
            .map(|x| (x - mean).powi(2))
            .sum::<f64>())
    .sqrt()
}

/// Exact conditional reference for each polynomial.
pub fn oracle_states(cfg: &RunConfig) -> Result<(FockDensityMatrix, Vec<ConditionalState>)> {
    let stage = |e: Error| e.in_stage("oracle", None);
    let src = source_state(&cfg.params, cfg.n_max).map_err(stage)?;
    let setup = tap_setup(&cfg.params);
    let states = cfg
        .polynomials
        .iter()
        .map(|p| measured_conditional_state(&src, setup, p).map_err(stage))
        .collect::<Result<Vec<_>>>()?;
    Ok((src, states))
}

fn oracle_marginals(
    state: &ConditionalState,
    angles: &[f64],
    spec: HistogramSpec,
) -> Vec<Marginal> {
    angles
        .iter()
        .map(|&t| Marginal::from_density(t, spec, state.binned_marginal(t, spec)))
        .collect()
}

fn reconstruct(cfg: &RunConfig, set: &MarginalSet, label: &str) -> Result<WignerGrid> {
    let mut w =
        inverse_radon(set, cfg.grid, cfg.cutoff).map_err(|e| e.in_stage("reconstruct", None))?;
    w.label = label.to_string();
    Ok(w)
}

fn describe_run(cfg: &RunConfig, report: &mut MetricsReport) {
    report.text("mode", cfg.mode.as_str());
    report.number("rng_seed", cfg.params.rng_seed as f64);
    report.number("samples_per_angle", cfg.params.samples_per_angle as f64);
    report.number("angles", cfg.params.tomography_angles.len() as f64);
    report.number("shards_per_angle", cfg.shards_per_angle as f64);
    report.number("cutoff", cfg.cutoff);
    report.number("hist_bins", cfg.histogram.n_bins as f64);
    report.number("compare_bins", cfg.compare_histogram.n_bins as f64);
}

fn write_marginals(
    data: &ConditionedData,
    cfg: &RunConfig,
    report: &mut MetricsReport,
) -> Result<()> {
    for (j, p) in cfg.polynomials.iter().enumerate() {
        let dir = cfg.out_dir.join("marginals").join(p.slug());
        mkdir(&dir)?;
        for a in 0..data.angles.len() {
            let h = data.merged(j, a, false, None)?;
            let m = h
                .normalize()
                .map_err(|e| e.in_stage("condition", Some(data.angles[a])))?;
            m.write_csv(&angle_file(&dir, a))?;
            report.number(
                format!("{}.overflow.theta_{a:02}", p.slug()),
                h.overflow as f64,
            );
        }
        let (mw, se) = data.mean_weight(j)?;
        report.number(format!("{}.mean_weight", p.slug()), mw);
        report.number(format!("{}.mean_weight_se", p.slug()), se);
    }
    Ok(())
}

/// `simulate`: writes the dataset as CVQS files under `<out>/samples`.
pub fn simulate(cfg: &RunConfig) -> Result<Outcome> {
    let t0 = Instant::now();
    let dir = cfg.out_dir.join("samples");
    let files = simulate_to_files(cfg, &dir)?;
    let mut report = MetricsReport::new();
    describe_run(cfg, &mut report);
    report.number("files", files.len() as f64);
    let mut timing = MetricsReport::new();
    timing.number("simulate_seconds", t0.elapsed().as_secs_f64());
    report.write(&cfg.out_dir.join("simulate.txt"))?;
    Ok(Outcome { report, timing })
}

/// `condition`: weighted histograms from `input` CVQS files (or a fresh
/// simulation), written as marginal CSVs.
pub fn condition(cfg: &RunConfig) -> Result<Outcome> {
    let t0 = Instant::now();
    mkdir(&cfg.out_dir)?;
    let data = condition_all(cfg, &source_of(cfg))?;
    let mut report = MetricsReport::new();
    describe_run(cfg, &mut report);
    report.text("dataset_sha256", data.dataset_sha256());
    report.number("total_samples", data.total_samples() as f64);
    write_marginals(&data, cfg, &mut report)?;
    report.write(&cfg.out_dir.join("condition.txt"))?;
    let mut timing = MetricsReport::new();
    timing.number("condition_seconds", t0.elapsed().as_secs_f64());
    Ok(Outcome { report, timing })
}

/// `reconstruct`: reads `<input>/marginals/<poly>/theta_XX.csv` and writes
/// Wigner grids and their metrics.
pub fn reconstruct_from_files(cfg: &RunConfig) -> Result<Outcome> {
    let t0 = Instant::now();
    let input = cfg.input_dir.clone().unwrap_or_else(|| cfg.out_dir.clone());
    let wdir = cfg.out_dir.join("wigner");
    mkdir(&wdir)?;
    let mut report = MetricsReport::new();
    describe_run(cfg, &mut report);
    for p in &cfg.polynomials {
        let dir = input.join("marginals").join(p.slug());
        let ms = cfg
            .params
            .tomography_angles
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                Marginal::read_csv(&angle_file(&dir, i), t)
                    .map_err(|e| e.in_stage("reconstruct", Some(t)))
            })
            .collect::<Result<Vec<_>>>()?;
        let set = MarginalSet::new(ms).map_err(|e| e.in_stage("reconstruct", None))?;
        let w = reconstruct(cfg, &set, &p.to_string())?;
        write_grid(&w, &wdir, &p.slug())?;
        push_metrics(
            &mut report,
            &format!("{}.wigner", p.slug()),
            &wigner_metrics(&w),
        );
    }
    report.write(&cfg.out_dir.join("reconstruct.txt"))?;
    let mut timing = MetricsReport::new();
    timing.number("reconstruct_seconds", t0.elapsed().as_secs_f64());
    Ok(Outcome { report, timing })
}

/// `oracle`: exact conditional states, marginals and Wigner functions.
pub fn oracle(cfg: &RunConfig) -> Result<Outcome> {
    let t0 = Instant::now();
    let (src, states) = oracle_states(cfg)?;
    let odir = cfg.out_dir.join("oracle");
    mkdir(&odir)?;
    let mut report = MetricsReport::new();
    describe_run(cfg, &mut report);
    src.write_csv(&odir.join("source_rho.csv"))?;
    let heralds = herald_distribution(
        &src,
        cfg.params.tap_reflectivity * cfg.params.homodyne_efficiency,
    )
    .map_err(|e| e.in_stage("oracle", None))?;
    for (k, pk) in heralds.iter().enumerate().take(6) {
        report.number(format!("herald_probability.k{k}"), *pk);
    }
    for (p, st) in cfg.polynomials.iter().zip(&states) {
        write_oracle_artifacts(cfg, p, st, &odir, &mut report)?;
    }
    report.write(&cfg.out_dir.join("oracle.txt"))?;
    let mut timing = MetricsReport::new();
    timing.number("oracle_seconds", t0.elapsed().as_secs_f64());
    Ok(Outcome { report, timing })
}

fn write_oracle_artifacts(
    cfg: &RunConfig,
    p: &NumberPolynomial,
    st: &ConditionalState,
    odir: &Path,
    report: &mut MetricsReport,
) -> Result<()> {
    let slug = p.slug();
    let mdir = odir.join(&slug);
    mkdir(&mdir)?;
    let ms = oracle_marginals(st, &cfg.params.tomography_angles, cfg.histogram);
    for (i, m) in ms.iter().enumerate() {
        m.write_csv(&angle_file(&mdir, i))?;
    }
    st.write_csv(&odir.join(format!("{slug}_rho.csv")))?;
    let exact = st.wigner(cfg.grid);
    write_grid(&exact, odir, &format!("{slug}_wigner"))?;
    report.number(format!("{slug}.oracle.mean_weight"), st.denominator);
    push_metrics(
        report,
        &format!("{slug}.oracle.exact"),
        &wigner_metrics(&exact),
    );
    let set = MarginalSet::new(ms).map_err(|e| e.in_stage("oracle", None))?;
    let fbp = reconstruct(cfg, &set, &format!("{p} oracle"))?;
    push_metrics(report, &format!("{slug}.oracle.fbp"), &wigner_metrics(&fbp));
    Ok(())
}

/// `run`: simulate, condition every polynomial over the same samples,
/// reconstruct, compare with the exact reference and write all artifacts.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let t0 = Instant::now();
    mkdir(&cfg.out_dir)?;
    // Thread count and output location say nothing about the result, so the
    // echo leaves them out and two runs into different directories match.
    let echoed = RunConfig {
        threads: None,
        out_dir: PathBuf::from("."),
        ..cfg.clone()
    };
    std::fs::write(cfg.out_dir.join("config.txt"), echoed.to_text())
        .map_err(|e| Error::io(&cfg.out_dir, e))?;
    let data = condition_all(cfg, &source_of(cfg))?;
    let t_condition = t0.elapsed().as_secs_f64();

    let mut report = MetricsReport::new();
    describe_run(cfg, &mut report);
    report.text("dataset_sha256", data.dataset_sha256());
    report.number("total_samples", data.total_samples() as f64);
    write_marginals(&data, cfg, &mut report)?;

    let wdir = cfg.out_dir.join("wigner");
    mkdir(&wdir)?;
    let oracle = if cfg.oracle {
        Some(oracle_states(cfg)?)
    } else {
        None
    };
    if let Some((src, _)) = &oracle {
        let heralds = herald_distribution(
            src,
            cfg.params.tap_reflectivity * cfg.params.homodyne_efficiency,
        )
        .map_err(|e| e.in_stage("oracle", None))?;
        for (k, pk) in heralds.iter().enumerate().take(6) {
            report.number(format!("herald_probability.k{k}"), *pk);
        }
    }

    for (j, p) in cfg.polynomials.iter().enumerate() {
        let slug = p.slug();
        let set = data.marginal_set(j, false, None)?;
        let w = reconstruct(cfg, &set, &p.to_string())?;
        write_grid(&w, &wdir, &slug)?;
        let m = wigner_metrics(&w);
        push_metrics(&mut report, &format!("{slug}.wigner"), &m);
        report.number(format!("{slug}.wigner.parity_error"), w.parity_error());

        if data.shards() >= 2 {
            let loo = (0..data.shards())
                .map(|s| {
                    Ok(wigner_metrics(&reconstruct(
                        cfg,
                        &data.marginal_set(j, false, Some(s))?,
                        "",
                    )?))
                })
                .collect::<Result<Vec<_>>>()?;
            for (i, (k, _)) in m.entries().iter().enumerate() {
                let vals: Vec<f64> = loo.iter().map(|x| x.entries()[i].1).collect();
                report.number(format!("{slug}.wigner.{k}_se"), jackknife_se(&vals));
            }
        }

        if let Some((_, states)) = &oracle {
            let st = &states[j];
            let compare = data.marginal_set(j, true, None)?;
            for (a, &theta) in data.angles.iter().enumerate() {
                let native = &set.marginals()[a];
                let exact = st.binned_marginal(theta, cfg.histogram);
                report.number(
                    format!("{slug}.l1.theta_{a:02}"),
                    native.l1_distance(&exact),
                );
                let coarse = &compare.marginals()[a];
                let exact = st.binned_marginal(theta, cfg.compare_histogram);
                report.number(
                    format!("{slug}.l1_compare.theta_{a:02}"),
                    coarse.l1_distance(&exact),
                );
            }
            write_oracle_artifacts(cfg, p, st, &cfg.out_dir.join("oracle"), &mut report)?;
        }
    }

    let bad = report.non_finite();
    if !bad.is_empty() {
        return Err(
            Error::InvalidParams(format!("non-finite metrics: {}", bad.join(", ")))
                .in_stage("report", None),
        );
    }
    report.write(&cfg.out_dir.join("metrics.txt"))?;
    let mut timing = MetricsReport::new();
    timing.number("condition_seconds", t_condition);
    timing.number("total_seconds", t0.elapsed().as_secs_f64());
    timing.write(&cfg.out_dir.join("timing.txt"))?;
    Ok(Outcome { report, timing })
}

/// One named invariant check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

/// `verify`: runs the invariant suites at this configuration and writes
/// `verify.txt`.
pub fn verify(cfg: &RunConfig) -> Result<(Vec<Check>, Outcome)> {
    let t0 = Instant::now();
    mkdir(&cfg.out_dir)?;
    let mut checks = Vec::new();
    let params = &cfg.params;

    let mut worst = f64::INFINITY;
    for &t in &params.tomography_angles {
        worst = worst.min(build_covariance(params, t)?.min_eigenvalue());
    }
    checks.push(check(
        "covariance_psd",
        worst >= -1e-10,
        format!("min eigenvalue {worst:e}"),
    ));

    let (src, states) = oracle_states(cfg)?;
    let cov = build_covariance(params, 0.0)?;
    let data = condition_all(cfg, &SampleSource::Simulate)?;
    for (j, (p, st)) in cfg.polynomials.iter().zip(&states).enumerate() {
        let q = build_q_polynomial(p);
        let analytic = analytic_weighted_moment(&cov, &q, 0)?;
        let err = (analytic - st.denominator).abs();
        checks.push(check(
            format!("q_identity.{}", p.slug()),
            err <= 1e-9 * st.denominator.abs().max(1.0),
            format!("isserlis {analytic} vs fock {}", st.denominator),
        ));
        let expected = analytic;
        let (mc, se) = data.mean_weight(j)?;
        let z = (mc - expected) / se;
        checks.push(check(
            format!("mc_mean_weight.{}", p.slug()),
            z.abs() <= 5.0,
            format!("monte carlo {mc} +- {se} vs {expected} ({z:.2} se)"),
        ));
        let set = data.marginal_set(j, false, None);
        checks.push(check(
            format!("marginal_set.{}", p.slug()),
            set.is_ok(),
            set.err()
                .map(|e| e.to_string())
                .unwrap_or_else(|| "valid".into()),
        ));
        let xs = cfg.histogram.centers();
        let mut parity: f64 = 0.0;
        for &t in &params.tomography_angles {
            let m = st.marginal(t, &xs);
            for i in 0..m.len() {
                parity = parity.max((m[i] - m[m.len() - 1 - i]).abs());
            }
        }
        checks.push(check(
            format!("oracle_parity.{}", p.slug()),
            parity <= 1e-12,
            format!("max asymmetry {parity:e}"),
        ));
    }

    let tr = src.trace();
    let min_eig = src.min_eigenvalue();
    let tail = src.tail_population(0.9);
    checks.push(check(
        "fock_source_state",
        (tr - 1.0).abs() <= 1e-10 && min_eig >= -1e-10 && tail < 1e-6,
        format!("trace {tr}, min eigenvalue {min_eig:e}, tail {tail:e}"),
    ));
    let heralds = herald_distribution(&src, params.tap_reflectivity)?;
    let total: f64 = heralds.iter().sum();
    checks.push(check(
        "herald_sum",
        (total - 1.0).abs() <= 1e-8,
        format!("sum {total}"),
    ));

    let doubled = oracle_states(&RunConfig {
        n_max: 2 * cfg.n_max,
        ..cfg.clone()
    })?
    .1;
    let xs = cfg.histogram.centers();
    let mut drift: f64 = 0.0;
    for (a, b) in states.iter().zip(&doubled) {
        let (ma, mb) = (a.marginal(0.0, &xs), b.marginal(0.0, &xs));
        drift = drift.max(
            ma.iter()
                .zip(&mb)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        );
    }
    checks.push(check(
        "truncation",
        drift < 1e-6,
        format!("max marginal change {drift:e} on doubling n_max"),
    ));

    let vac = FockDensityMatrix::vacuum(2);
    let vset = MarginalSet::new(oracle_angles_marginals(
        &vac,
        &params.tomography_angles,
        cfg.histogram,
    ))?;
    let peak = wigner_metrics(&inverse_radon(&vset, cfg.grid, cfg.cutoff)?).origin;
    checks.push(check(
        "vacuum_convention",
        (peak - 0.1592).abs() <= 0.002,
        format!("origin {peak}"),
    ));

    let again = condition_all(
        &RunConfig {
            threads: Some(1),
            ..cfg.clone()
        },
        &SampleSource::Simulate,
    )?;
    checks.push(check(
        "determinism",
        again.dataset_sha256() == data.dataset_sha256(),
        format!("dataset {}", data.dataset_sha256()),
    ));

    let mut report = MetricsReport::new();
    describe_run(cfg, &mut report);
    for c in &checks {
        report.text(
            format!("check.{}", c.name),
            if c.passed { "pass" } else { "fail" },
        );
        report.text(format!("detail.{}", c.name), c.detail.clone());
    }
    report.write(&cfg.out_dir.join("verify.txt"))?;
    let mut timing = MetricsReport::new();
    timing.number("verify_seconds", t0.elapsed().as_secs_f64());
    Ok((checks, Outcome { report, timing }))
}

fn oracle_angles_marginals(
    rho: &FockDensityMatrix,
    angles: &[f64],
    spec: HistogramSpec,
) -> Vec<Marginal> {
    angles
        .iter()
        .map(|&t| Marginal::from_density(t, spec, binned_marginal(rho.matrix(), t, spec)))
        .collect()
}
