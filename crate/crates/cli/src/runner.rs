//! Experiment dispatch: run one validated config, collect checks and files.
//!
//! `execute` is pure with respect to the filesystem — it returns the report
//! plus named data-file payloads as bytes, and `write_output` persists them.
//! Data files never contain timestamps or machine state, so a config and
//! seed determine them byte for byte; wall time is recorded only in the
//! report.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use steklov_core::{
    assemble_dtn_with_tol, build_curve, cluster_report, criticality_scan,
    fd_eigenvalue_derivative, l2_inner, random_split_experiment, steklov_spectrum,
    unique_continuation_check, BoundaryCurve, BoundaryField, Result as CoreResult,
    SteklovSpectrum,
};

use crate::config::{split_params, Experiment, ExperimentConfig, OutputFormat};
use crate::report::{to_json_bytes, to_jsonl_bytes, CheckResult, RunReport, Warning};

/// Bound on |lambda_0| for the zero eigenvalue check.
const TOL_ZERO_EIGENVALUE: f64 = 1e-8;
/// Bound on boundary means of nonconstant eigenfields.
const TOL_MEAN_ZERO: f64 = 1e-8;
/// Bound on Gram-matrix departure from the identity.
const TOL_ORTHONORMAL: f64 = 1e-8;
/// Residual warning threshold, scaled by `(1 + lambda)`.
const WARN_RESIDUAL: f64 = 1e-7;
/// Asymmetry warning threshold for the reduced operator.
const WARN_ASYMMETRY: f64 = 1e-6;
/// Normalized disagreement allowed between finite-difference branch rates
/// and the splitting-matrix prediction.
const TOL_RATE_CONSISTENCY: f64 = 1e-3;

/// Report plus data files, before anything touches the disk.
#[derive(Debug)]
pub struct RunOutput {
    pub report: RunReport,
    /// `(file name, bytes)` pairs, deterministic given the config.
    pub data_files: Vec<(String, Vec<u8>)>,
}

/// Run the configured experiment.
pub fn execute(config: &ExperimentConfig) -> RunOutput {
    let started = Instant::now();
    let mut checks = Vec::new();
    let mut warnings = Vec::new();
    let mut data_files = Vec::new();

    let outcome = with_thread_cap(|| {
        run_experiment(config, &mut checks, &mut warnings, &mut data_files)
    });

    let (outcome, error) = match outcome {
        Ok(v) => (v, None),
        Err(e) => (Value::Null, Some(e.to_string())),
    };

    RunOutput {
        report: RunReport {
            toolkit_version: env!("CARGO_PKG_VERSION"),
            experiment: config.experiment.kind().to_string(),
            config: config.to_value(),
            wall_time_ms: started.elapsed().as_millis() as u64,
            checks,
            warnings,
            error,
            outcome,
        },
        data_files,
    }
}

/// Write the data files and the report into `dir`, returning written paths.
pub fn write_output(out: &RunOutput, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, bytes) in &out.data_files {
        let path = dir.join(name);
        let mut file = std::fs::File::create(&path)?;
        file.write_all(bytes)?;
        written.push(path);
    }
    let report_path = dir.join("report.json");
    let mut file = std::fs::File::create(&report_path)?;
    file.write_all(&to_json_bytes(&out.report))?;
    written.push(report_path);
    Ok(written)
}

/// Run `f`, capped to `STEKLOV_THREADS` rayon workers when the variable is
/// set; otherwise the default global pool applies. Results do not depend on
/// the cap — trial seeds are drawn before dispatch.
fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let cap = std::env::var("STEKLOV_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1);
    match cap {
        None => f(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
    }
}

fn run_experiment(
    config: &ExperimentConfig,
    checks: &mut Vec<CheckResult>,
    warnings: &mut Vec<Warning>,
    data_files: &mut Vec<(String, Vec<u8>)>,
) -> CoreResult<Value> {
    match &config.experiment {
        Experiment::Spectrum { .. } => run_spectrum(config, checks, warnings, data_files),
        Experiment::DerivativeCheck {
            cluster,
            sigma,
            t_step,
            ..
        } => run_derivative_check(config, *cluster, sigma, *t_step, checks, data_files),
        Experiment::Split { .. } => run_split(config, checks, warnings, data_files),
        Experiment::CriticalScan {
            cluster, n_samples, eps_crit, ..
        } => run_scan(config, *cluster, *n_samples, *eps_crit, checks, data_files),
        Experiment::UcCheck {
            n_fields,
            window_fraction,
            tol,
            ..
        } => run_uc_check(config, *n_fields, *window_fraction, *tol, checks, data_files),
    }
}

fn solve_spectrum(config: &ExperimentConfig) -> CoreResult<(BoundaryCurve, f64, SteklovSpectrum)> {
    let curve = build_curve(&config.curve)?;
    let dtn = assemble_dtn_with_tol(&curve, config.basis_order, config.svd_tol)?;
    let spectrum = steklov_spectrum(
        &curve,
        &dtn,
        config.experiment.k_max(),
        config.experiment.delta_cluster(),
    )?;
    Ok((curve, dtn.asymmetry(), spectrum))
}

fn run_spectrum(
    config: &ExperimentConfig,
    checks: &mut Vec<CheckResult>,
    warnings: &mut Vec<Warning>,
    data_files: &mut Vec<(String, Vec<u8>)>,
) -> CoreResult<Value> {
    let (curve, asymmetry, spectrum) = solve_spectrum(config)?;

    checks.push(CheckResult::bound(
        "zero-eigenvalue",
        spectrum.eigenvalues()[0].abs(),
        TOL_ZERO_EIGENVALUE,
    ));

    // Nonconstant eigenfields must integrate to zero against arc length.
    let constant = BoundaryField::constant(&curve, 1.0);
    let worst_mean = spectrum.eigenfields()[1..]
        .iter()
        .map(|f| l2_inner(&curve, f, &constant).map(f64::abs))
        .collect::<CoreResult<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(CheckResult::bound(
        "eigenfield-mean-zero",
        worst_mean,
        TOL_MEAN_ZERO,
    ));

    let mut worst_gram: f64 = 0.0;
    for i in 0..spectrum.len() {
        for j in i..spectrum.len() {
            let inner = l2_inner(&curve, &spectrum.eigenfields()[i], &spectrum.eigenfields()[j])?;
            let expected = if i == j { 1.0 } else { 0.0 };
            worst_gram = worst_gram.max((inner - expected).abs());
        }
    }
    checks.push(CheckResult::bound(
        "eigenfield-orthonormality",
        worst_gram,
        TOL_ORTHONORMAL,
    ));

    push_resolution_warnings(&spectrum, asymmetry, warnings);

    let spectrum_json = json!({
        "eigenvalues": spectrum.eigenvalues(),
        "clusters": spectrum.clusters(),
        "residuals": spectrum.residuals(),
    });
    data_files.push(("spectrum.json".to_string(), to_json_bytes(&spectrum_json)));
    if config.output.format == OutputFormat::JsonCsv {
        data_files.push((
            "eigenfields.csv".to_string(),
            eigenfields_csv(&curve, &spectrum),
        ));
    }

    Ok(json!({
        "eigenvalues": spectrum.eigenvalues(),
        "clusters": spectrum.clusters(),
        "residuals": spectrum.residuals(),
        "asymmetry": asymmetry,
        "cluster_table": cluster_report(&spectrum),
    }))
}

/// Residual and asymmetry diagnostics shared by spectrum-bearing runs.
fn push_resolution_warnings(
    spectrum: &SteklovSpectrum,
    asymmetry: f64,
    warnings: &mut Vec<Warning>,
) {
    let worst = spectrum
        .eigenvalues()
        .iter()
        .zip(spectrum.residuals())
        .map(|(&l, &r)| (r / (1.0 + l.abs()), r, WARN_RESIDUAL * (1.0 + l.abs())))
        .max_by(|a, b| a.0.partial_cmp(&b.0).expect("residuals are finite"));
    if let Some((_, residual, bound)) = worst {
        if residual > bound {
            warnings.push(Warning {
                name: "eigenpair-residual".to_string(),
                message: "largest eigenpair residual exceeds the resolution target; raise basis_order"
                    .to_string(),
                value: residual,
                threshold: bound,
            });
        }
    }
    if asymmetry > WARN_ASYMMETRY {
        warnings.push(Warning {
            name: "asymmetry".to_string(),
            message: "reduced operator departs from symmetry beyond the resolution target"
                .to_string(),
            value: asymmetry,
            threshold: WARN_ASYMMETRY,
        });
    }
}

fn eigenfields_csv(curve: &BoundaryCurve, spectrum: &SteklovSpectrum) -> Vec<u8> {
    let mut text = String::from("theta");
    for i in 0..spectrum.len() {
        text.push_str(&format!(",f{i}"));
    }
    text.push('\n');
    for j in 0..curve.n_nodes() {
        text.push_str(&format!("{}", curve.theta()[j]));
        for field in spectrum.eigenfields() {
            text.push_str(&format!(",{}", field.values()[j]));
        }
        text.push('\n');
    }
    text.into_bytes()
}

fn run_derivative_check(
    config: &ExperimentConfig,
    cluster: usize,
    sigma: &steklov_core::TrigSeries,
    t_step: f64,
    checks: &mut Vec<CheckResult>,
    data_files: &mut Vec<(String, Vec<u8>)>,
) -> CoreResult<Value> {
    let opts = config.solver_options();
    let report = fd_eigenvalue_derivative(&config.curve, &opts, cluster, sigma, t_step)?;

    // One check per branch: finite differences through the actual curve
    // family must confirm the first-order prediction.
    for (m, (&formula, &fd)) in report
        .formula_rates
        .iter()
        .zip(&report.fd_rates)
        .enumerate()
    {
        checks.push(CheckResult::bound(
            format!("fd-branch-{m}"),
            (fd - formula).abs(),
            TOL_RATE_CONSISTENCY.max(1e-2 * formula.abs()),
        ));
    }

    let payload = json!({
        "curve": config.curve,
        "sigma": {"mean": sigma.mean, "cos": sigma.cos, "sin": sigma.sin},
        "t_step": t_step,
        "cluster": cluster,
        "report": report,
    });
    data_files.push(("derivative.json".to_string(), to_json_bytes(&payload)));
    Ok(serde_json::to_value(&report).expect("report serializes"))
}

fn run_split(
    config: &ExperimentConfig,
    checks: &mut Vec<CheckResult>,
    warnings: &mut Vec<Warning>,
    data_files: &mut Vec<(String, Vec<u8>)>,
) -> CoreResult<Value> {
    let params = split_params(&config.experiment).expect("dispatch matched Split");
    let opts = config.solver_options();
    let experiment = random_split_experiment(&config.curve, &opts, &params)?;

    checks.push(CheckResult::bound(
        "splitting-rate-consistency",
        experiment.summary.max_rate_error,
        TOL_RATE_CONSISTENCY,
    ));
    if experiment.summary.n_skipped > 0 {
        warnings.push(Warning {
            name: "skipped-trials".to_string(),
            message: "some perturbed curves were invalid and their trials were skipped"
                .to_string(),
            value: experiment.summary.n_skipped as f64,
            threshold: 0.0,
        });
    }

    data_files.push(("trials.jsonl".to_string(), to_jsonl_bytes(&experiment.trials)));
    data_files.push((
        "summary.json".to_string(),
        to_json_bytes(&experiment.summary),
    ));
    Ok(json!({
        "params": experiment.params,
        "summary": experiment.summary,
    }))
}

fn run_scan(
    config: &ExperimentConfig,
    cluster: usize,
    n_samples: usize,
    eps_crit: f64,
    checks: &mut Vec<CheckResult>,
    data_files: &mut Vec<(String, Vec<u8>)>,
) -> CoreResult<Value> {
    let (curve, _, spectrum) = solve_spectrum(config)?;
    let result = criticality_scan(&curve, &spectrum, cluster, n_samples, eps_crit)?;

    let shortfall = n_samples.saturating_sub(result.n_samples) as f64;
    checks.push(CheckResult::bound("scan-sample-count", shortfall, 0.0));

    data_files.push(("scan.json".to_string(), to_json_bytes(&result)));
    Ok(serde_json::to_value(&result).expect("scan result serializes"))
}

fn run_uc_check(
    config: &ExperimentConfig,
    n_fields: usize,
    window_fraction: f64,
    tol: f64,
    checks: &mut Vec<CheckResult>,
    data_files: &mut Vec<(String, Vec<u8>)>,
) -> CoreResult<Value> {
    let (curve, _, spectrum) = solve_spectrum(config)?;
    let delta = config.experiment.delta_cluster();

    // The window check applies to genuinely nonzero eigenvalues only; the
    // constant zero-mode field has no vanishing set to probe.
    let candidates: Vec<usize> = (0..spectrum.len())
        .filter(|&i| spectrum.eigenvalues()[i] > delta)
        .take(n_fields)
        .collect();
    checks.push(CheckResult::bound(
        "uc-fields-available",
        (n_fields.saturating_sub(candidates.len())) as f64,
        0.0,
    ));

    let mut rows = Vec::new();
    for &i in &candidates {
        let report = unique_continuation_check(
            &curve,
            &spectrum.eigenfields()[i],
            window_fraction,
            tol,
        )?;
        checks.push(CheckResult::floor(
            format!("uc-window-field-{i}"),
            report.min_window_max,
            tol,
        ));
        rows.push(json!({
            "field_index": i,
            "eigenvalue": spectrum.eigenvalues()[i],
            "report": report,
        }));
    }

    let payload = json!({
        "window_fraction": window_fraction,
        "tol": tol,
        "fields": rows,
    });
    data_files.push(("uc.json".to_string(), to_json_bytes(&payload)));
    Ok(payload)
}
