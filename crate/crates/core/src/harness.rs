//! Seeded Monte Carlo experiment runner.
//!
//! An [`ExperimentConfig`] names a matrix pair (generated or loaded from
//! CSV), a set of sampling schemes, a grid of sample counts, and a grid of
//! tail parameters. [`run_experiment`] draws `trials` independent estimates
//! per `(scheme, m)` cell, measures relative spectral errors, and records
//! error quantiles plus the fraction of trials exceeding the theoretical
//! deviation at each `t`, next to the deviation and failure probability
//! themselves.
//!
//! Reports are deterministic: per-trial seeds are a stable 64-bit mix of
//! `(master_seed, stream, m, trial)`, trials may run in parallel but are
//! reduced in trial order, and serialized reports are byte-identical across
//! reruns of the same config. [`compare_schemes`] additionally shares the
//! per-trial seeds across schemes (common random numbers), so schemes with
//! identical probabilities produce identical error sequences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{certificate, tail_for, BernsteinCertificate, BoundForm};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, PairedMatrices, MEASURE_MAX_ITER, MEASURE_TOL};
use crate::prng::mix64;
use crate::sampler::{build_distribution, estimate_product, sample_indices, SamplingScheme};
use crate::synth::{generate_matrix, spectrum_for_target_sr};

/// Report and config schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Where the experiment's matrix pair comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixSpec {
    /// Generate both factors with prescribed stable ranks.
    Generate {
        rows_a: usize,
        rows_b: usize,
        cols: usize,
        sr_a: f64,
        sr_b: f64,
        seed: u64,
    },
    /// Load both factors from matrix CSV files.
    Files { a: String, b: String },
}

/// Whether each scheme gets its own seed stream or all schemes share one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentMode {
    /// Independent per-scheme streams.
    #[default]
    Sweep,
    /// Common random numbers across schemes, for paired comparison.
    Compare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub matrices: MatrixSpec,
    pub schemes: Vec<SamplingScheme>,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub t_grid: Vec<f64>,
    pub bound_form: BoundForm,
    #[serde(default)]
    pub mode: ExperimentMode,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("schemes must be nonempty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if !self.schemes.iter().all(|s| seen.insert(*s)) {
            return Err(Error::Config("schemes must be distinct".into()));
        }
        if self.m_grid.is_empty() {
            return Err(Error::Config("m_grid must be nonempty".into()));
        }
        if !self.m_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config("m_grid must be strictly ascending".into()));
        }
        if self.m_grid[0] == 0 {
            return Err(Error::Config("sample counts must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.t_grid.is_empty() || !self.t_grid.iter().all(|&t| t > 0.0 && t.is_finite()) {
            return Err(Error::Config("t_grid must be nonempty and positive".into()));
        }
        if let MatrixSpec::Generate { rows_a, rows_b, cols, sr_a, sr_b, .. } = &self.matrices {
            let limit_a = (*rows_a).min(*cols) as f64;
            let limit_b = (*rows_b).min(*cols) as f64;
            if !(1.0..=limit_a).contains(sr_a) || !(1.0..=limit_b).contains(sr_b) {
                return Err(Error::Config(format!(
                    "target stable ranks ({sr_a}, {sr_b}) outside the feasible ranges"
                )));
            }
        }
        Ok(())
    }

    /// Materialize the matrix pair this config describes.
    pub fn load_pair(&self) -> Result<PairedMatrices> {
        match &self.matrices {
            MatrixSpec::Generate { rows_a, rows_b, cols, sr_a, sr_b, seed } => {
                let spec_a = spectrum_for_target_sr(*sr_a, (*rows_a).min(*cols))?;
                let spec_b = spectrum_for_target_sr(*sr_b, (*rows_b).min(*cols))?;
                let a = generate_matrix(*rows_a, *cols, &spec_a, *seed)?;
                let b = generate_matrix(*rows_b, *cols, &spec_b, seed.wrapping_add(0x9e37))?;
                PairedMatrices::new(a, b)
            }
            MatrixSpec::Files { a, b } => {
                let a = DenseMatrix::from_csv(&std::fs::read_to_string(a)?)?;
                let b = DenseMatrix::from_csv(&std::fs::read_to_string(b)?)?;
                PairedMatrices::new(a, b)
            }
        }
    }
}

/// Nearest-rank quantiles of the per-trial relative errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorQuantiles {
    pub min: f64,
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
    pub p95: f64,
    pub max: f64,
}

/// Empirical exceedance next to the theoretical curve at one `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailCell {
    pub t: f64,
    pub exceed_fraction: f64,
    pub bound_deviation: f64,
    pub bound_failure: f64,
}

/// Results for one `(scheme, m)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeCell {
    pub scheme: SamplingScheme,
    pub m: usize,
    pub quantiles: ErrorQuantiles,
    pub tail: Vec<TailCell>,
}

/// Full experiment output: one cell per `(scheme, m)` in config order, plus
/// the certificate of the instance the cells were measured on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub schema_version: u32,
    pub bound_form: BoundForm,
    pub mode: ExperimentMode,
    pub trials: usize,
    pub master_seed: u64,
    pub certificate: BernsteinCertificate,
    pub cells: Vec<SchemeCell>,
}

/// Run the experiment with an independent seed stream per scheme.
pub fn run_experiment(config: &ExperimentConfig) -> Result<TrialReport> {
    config.validate()?;
    execute(config, config.mode)
}

/// Run the experiment with common random numbers across schemes. Requires at
/// least two schemes; cells are aligned per-trial for paired comparison.
pub fn compare_schemes(config: &ExperimentConfig) -> Result<TrialReport> {
    config.validate()?;
    if config.schemes.len() < 2 {
        return Err(Error::Config("scheme comparison needs at least two schemes".into()));
    }
    execute(config, ExperimentMode::Compare)
}

fn execute(config: &ExperimentConfig, mode: ExperimentMode) -> Result<TrialReport> {
    let pair = config.load_pair()?;
    let cert = certificate(&pair)?;
    let exact = pair.exact_product();
    let norm_scale = cert.norm_a * cert.norm_b;

    let mut cells = Vec::with_capacity(config.schemes.len() * config.m_grid.len());
    for &scheme in &config.schemes {
        let dist = build_distribution(&pair, scheme)?;
        let stream = match mode {
            ExperimentMode::Sweep => scheme_stream(scheme),
            ExperimentMode::Compare => 0,
        };
        for &m in &config.m_grid {
            let mut errors = (0..config.trials)
                .into_par_iter()
                .map(|trial| {
                    let seed = trial_seed(config.master_seed, stream, m, trial as u64);
                    let indices = sample_indices(&dist, m, seed);
                    let est = estimate_product(&pair, &dist, &indices)?;
                    let diff = est.estimate().sub(&exact)?;
                    Ok(diff.spectral_norm(MEASURE_TOL, MEASURE_MAX_ITER)? / norm_scale)
                })
                .collect::<Result<Vec<f64>>>()?;
            errors.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));

            let mut tail = Vec::with_capacity(config.t_grid.len());
            for &t in &config.t_grid {
                let bound = tail_for(config.bound_form, &cert, m, t)?;
                let exceed =
                    errors.iter().filter(|&&e| e > bound.deviation).count() as f64
                        / errors.len() as f64;
                tail.push(TailCell {
                    t,
                    exceed_fraction: exceed,
                    bound_deviation: bound.deviation,
                    bound_failure: bound.failure_prob,
                });
            }
            cells.push(SchemeCell { scheme, m, quantiles: quantiles_of_sorted(&errors), tail });
        }
    }

    Ok(TrialReport {
        schema_version: SCHEMA_VERSION,
        bound_form: config.bound_form,
        mode,
        trials: config.trials,
        master_seed: config.master_seed,
        certificate: cert,
        cells,
    })
}

fn scheme_stream(scheme: SamplingScheme) -> u64 {
    match scheme {
        SamplingScheme::Proposed => 1,
        SamplingScheme::Dkm => 2,
        SamplingScheme::Uniform => 3,
    }
}

/// Stable 64-bit mix of `(master_seed, stream, m, trial)`; the value feeding
/// each trial's sampling RNG. Independent of scheduling and config order.
pub fn trial_seed(master_seed: u64, stream: u64, m: usize, trial: u64) -> u64 {
    let mut z = mix64(master_seed);
    z = mix64(z ^ stream.wrapping_mul(0xa076_1d64_78bd_642f));
    z = mix64(z ^ (m as u64).wrapping_mul(0xe703_7ed1_a0b4_28db));
    mix64(z ^ trial.wrapping_mul(0x8ebc_6af0_9c88_c6e3))
}

/// Nearest-rank quantile of an ascending slice: the smallest element whose
/// rank is at least `q * len`.
pub fn nearest_rank_quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    assert!((0.0..=1.0).contains(&q), "quantile level out of range");
    if q == 0.0 {
        return sorted[0];
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn quantiles_of_sorted(sorted: &[f64]) -> ErrorQuantiles {
    ErrorQuantiles {
        min: sorted[0],
        p25: nearest_rank_quantile(sorted, 0.25),
        median: nearest_rank_quantile(sorted, 0.50),
        p75: nearest_rank_quantile(sorted, 0.75),
        p95: nearest_rank_quantile(sorted, 0.95),
        max: sorted[sorted.len() - 1],
    }
}

/// Serialize a report as pretty JSON. Field order is fixed by the struct
/// definitions and floats print in shortest round-trippable form, so equal
/// reports render to identical bytes.
pub fn render_report_json(report: &TrialReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

/// Parse a report back from its JSON rendering.
pub fn parse_report_json(text: &str) -> Result<TrialReport> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// Error-quantile curves as CSV with header `scheme,m,quantile,value`.
pub fn render_quantile_csv(report: &TrialReport) -> String {
    let mut out = String::from("scheme,m,quantile,value\n");
    for cell in &report.cells {
        let q = &cell.quantiles;
        for (name, value) in [
            ("min", q.min),
            ("p25", q.p25),
            ("median", q.median),
            ("p75", q.p75),
            ("p95", q.p95),
            ("max", q.max),
        ] {
            out.push_str(&format!("{},{},{},{}\n", cell.scheme, cell.m, name, value));
        }
    }
    out
}

/// Exceedance curves as CSV with header
/// `scheme,m,t,exceed_fraction,bound_deviation,bound_failure`.
pub fn render_exceedance_csv(report: &TrialReport) -> String {
    let mut out = String::from("scheme,m,t,exceed_fraction,bound_deviation,bound_failure\n");
    for cell in &report.cells {
        for tail in &cell.tail {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                cell.scheme, cell.m, tail.t, tail.exceed_fraction, tail.bound_deviation,
                tail.bound_failure
            ));
        }
    }
    out
}
