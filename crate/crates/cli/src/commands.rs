//! Subcommand implementations. Each handler prints a key/value document to
//! stdout and returns the process exit code.

use std::path::Path;
use std::process::ExitCode;

use sketchmul::bounds::{
    certificate, competing_bounds, required_samples, tail_bound, verify_estimator,
    UNBIASEDNESS_TOL,
};
use sketchmul::harness::{
    compare_schemes, render_exceedance_csv, render_quantile_csv, render_report_json,
    run_experiment, ExperimentConfig, ExperimentMode,
};
use sketchmul::sampler::{build_distribution, relative_spectral_error, sketch_product};
use sketchmul::synth::{generate_matrix, spectrum_for_target_sr};
use sketchmul::{DenseMatrix, Error, PairedMatrices, Result, SamplingScheme};

use crate::Command;

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Gen { rows, cols, target_sr, seed, out } => gen(rows, cols, target_sr, seed, &out),
        Command::Dist { a, b, scheme } => dist(&a, &b, scheme),
        Command::Sketch { a, b, scheme, m, seed, out } => sketch(&a, &b, scheme, m, seed, &out),
        Command::Bounds { sr_a, sr_b, epsilon, c, n } => bounds(sr_a, sr_b, epsilon, c, n),
        Command::Verify { a, b, dist } => verify(&a, &b, dist.as_deref()),
        Command::Bench { config, out_dir } => bench(&config, &out_dir),
    }
}

fn gen(rows: usize, cols: usize, target_sr: f64, seed: u64, out: &Path) -> Result<ExitCode> {
    let spectrum = spectrum_for_target_sr(target_sr, rows.min(cols))?;
    let matrix = generate_matrix(rows, cols, &spectrum, seed)?;
    let stats = matrix.spectral_stats(1e-10, 100_000)?;
    std::fs::write(out, matrix.to_csv())?;
    println!("rows: {rows}");
    println!("cols: {cols}");
    println!("target_sr: {target_sr}");
    println!("seed: {seed}");
    println!("spectral_norm: {}", stats.spectral_norm);
    println!("frobenius_norm: {}", stats.frobenius_norm);
    println!("stable_rank: {}", stats.stable_rank);
    println!("out: {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn dist(a_path: &Path, b_path: &Path, scheme: SamplingScheme) -> Result<ExitCode> {
    let pair = load_pair(a_path, b_path)?;
    let dist = build_distribution(&pair, scheme)?;
    let probs = dist.probabilities();
    let rendered: Vec<String> = probs.iter().map(|p| format!("{p}")).collect();
    println!("n: {}", dist.n());
    println!("scheme: {scheme}");
    println!("probabilities: {}", rendered.join(","));
    println!("sum: {}", probs.iter().sum::<f64>());
    let min_p = probs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_p = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    println!("min_p: {min_p}");
    println!("max_p: {max_p}");
    println!("support_size: {}", dist.support().len());
    if scheme == SamplingScheme::Proposed {
        println!("amgm_margin: {}", amgm_margin(&pair, probs));
    }
    Ok(ExitCode::SUCCESS)
}

/// `min_i (p_i - ||a_i|| ||b_i|| / (||A||_F ||B||_F))`; nonnegative up to
/// round-off for the proposed scheme.
fn amgm_margin(pair: &PairedMatrices, probs: &[f64]) -> f64 {
    let scale = pair.a().frobenius_norm() * pair.b().frobenius_norm();
    (0..pair.n())
        .map(|i| {
            let geo =
                (pair.a().column_norm_sq(i) * pair.b().column_norm_sq(i)).sqrt() / scale;
            probs[i] - geo
        })
        .fold(f64::INFINITY, f64::min)
}

fn sketch(
    a_path: &Path,
    b_path: &Path,
    scheme: SamplingScheme,
    m: usize,
    seed: u64,
    out: &Path,
) -> Result<ExitCode> {
    if m == 0 {
        return Err(Error::OutOfRange("m must be at least 1".into()));
    }
    let pair = load_pair(a_path, b_path)?;
    let dist = build_distribution(&pair, scheme)?;
    let est = sketch_product(&pair, &dist, m, seed)?;
    let error = relative_spectral_error(&est, &pair)?;
    let cert = certificate(&pair)?;
    std::fs::write(out, est.estimate().to_csv())?;
    println!("scheme: {scheme}");
    println!("m: {m}");
    println!("seed: {seed}");
    println!("relative_spectral_error: {error}");
    println!("b_bar: {}", cert.b_bar);
    println!("sigma2_bar: {}", cert.sigma2_bar);
    println!("k_bar: {}", cert.k_bar);
    println!("sr_a: {}", cert.sr_a);
    println!("sr_b: {}", cert.sr_b);
    println!("norm_a: {}", cert.norm_a);
    println!("norm_b: {}", cert.norm_b);
    for t in [1.0, 3.0, 5.0] {
        let tail = tail_bound(&cert, m, t)?;
        println!("deviation_t{t}: {}", tail.deviation);
        println!("failure_t{t}: {}", tail.failure_prob);
    }
    println!("out: {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn bounds(sr_a: f64, sr_b: f64, epsilon: f64, c: f64, n: usize) -> Result<ExitCode> {
    let plan = required_samples(sr_a, sr_b, epsilon, c)?;
    let competing = competing_bounds(sr_a, sr_b, epsilon, n)?;
    println!("sr_a: {sr_a}");
    println!("sr_b: {sr_b}");
    println!("epsilon: {epsilon}");
    println!("c: {c}");
    println!("n: {n}");
    println!("m_required: {}", plan.m_required);
    println!("bound_proposed: {}", competing.proposed);
    println!("bound_dkm: {}", competing.dkm);
    println!("bound_rotation: {}", competing.rotation);
    Ok(ExitCode::SUCCESS)
}

fn verify(a_path: &Path, b_path: &Path, dist_path: Option<&Path>) -> Result<ExitCode> {
    let pair = load_pair(a_path, b_path)?;
    let report = verify_estimator(&pair)?;
    let mut failures = report.failures();
    println!("n: {}", pair.n());
    println!("b_bar: {}", report.atom_bound.b_bar);
    println!("atom_count: {}", report.atom_bound.margins.len());
    println!(
        "atom_worst_margin: {}",
        report.atom_bound.worst_margin().unwrap_or(f64::INFINITY)
    );
    println!("min_eigenvalue_top: {}", report.second_moment.min_eig_top);
    println!("min_eigenvalue_bottom: {}", report.second_moment.min_eig_bottom);
    println!("second_moment_norm: {}", report.second_moment.operator_norm);
    println!("variance_bound: {}", report.second_moment.variance_bound);
    println!("trace_total: {}", report.second_moment.trace_total);
    println!("trace_bound: {}", report.second_moment.trace_bound);
    for (scheme, err) in &report.unbiasedness {
        println!("unbiasedness_{scheme}: {err}");
    }
    println!("unbiasedness_tolerance: {UNBIASEDNESS_TOL}");

    if let Some(path) = dist_path {
        failures.extend(check_probability_file(&pair, path)?);
    }

    if failures.is_empty() {
        println!("result: pass");
        Ok(ExitCode::SUCCESS)
    } else {
        for failure in &failures {
            println!("violation: {failure}");
        }
        println!("result: fail");
        Ok(ExitCode::from(3))
    }
}

/// Validate an externally supplied probability vector against the pair:
/// length n, nonnegative, summing to one, covering every nonzero outer
/// product. Returns the list of violations.
fn check_probability_file(pair: &PairedMatrices, path: &Path) -> Result<Vec<String>> {
    let matrix = DenseMatrix::from_csv(&std::fs::read_to_string(path)?)?;
    if matrix.rows() != 1 && matrix.cols() != 1 {
        return Err(Error::Parse(format!(
            "probability file must be a single row or column, got {}x{}",
            matrix.rows(),
            matrix.cols()
        )));
    }
    let probs = matrix.entries();
    let mut failures = Vec::new();
    if probs.len() != pair.n() {
        failures.push(format!(
            "probability file has {} entries for {} columns",
            probs.len(),
            pair.n()
        ));
        return Ok(failures);
    }
    if let Some((i, &p)) = probs.iter().enumerate().find(|(_, &p)| p < 0.0) {
        failures.push(format!("probability {i} is negative ({p})"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        failures.push(format!("probabilities sum to {sum}, not 1"));
    }
    for (i, &p) in probs.iter().enumerate() {
        let nonzero_atom =
            pair.a().column_norm_sq(i) > 0.0 && pair.b().column_norm_sq(i) > 0.0;
        if nonzero_atom && p <= 0.0 {
            failures.push(format!("column {i} has a nonzero outer product but probability 0"));
        }
    }
    Ok(failures)
}

fn bench(config_path: &Path, out_dir: &Path) -> Result<ExitCode> {
    let text = std::fs::read_to_string(config_path)?;
    let config = ExperimentConfig::from_json(&text)?;
    let report = match config.mode {
        ExperimentMode::Sweep => run_experiment(&config)?,
        ExperimentMode::Compare => compare_schemes(&config)?,
    };
    std::fs::create_dir_all(out_dir)?;
    let report_path = out_dir.join("report.json");
    let quantile_path = out_dir.join("quantiles.csv");
    let exceedance_path = out_dir.join("exceedance.csv");
    std::fs::write(&report_path, render_report_json(&report))?;
    std::fs::write(&quantile_path, render_quantile_csv(&report))?;
    std::fs::write(&exceedance_path, render_exceedance_csv(&report))?;
    println!("report: {}", report_path.display());
    println!("quantile_curves: {}", quantile_path.display());
    println!("exceedance_curves: {}", exceedance_path.display());
    println!("cells: {}", report.cells.len());
    Ok(ExitCode::SUCCESS)
}

fn load_pair(a_path: &Path, b_path: &Path) -> Result<PairedMatrices> {
    let a = load_matrix(a_path)?;
    let b = load_matrix(b_path)?;
    PairedMatrices::new(a, b)
}

fn load_matrix(path: &Path) -> Result<DenseMatrix> {
    DenseMatrix::from_csv(&std::fs::read_to_string(path)?)
}
