//! T² and SPE statistics, Gaussian kernel density control limits and the
//! online alarm decision.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::dataset::DataMatrix;
use crate::detector::Detector;
use crate::encoder::FeatureMatrix;
use crate::error::{Error, Result};
use crate::{linalg, par};

/// Covariance matrices with a condition number above this get a ridge.
pub const MAX_CONDITION: f64 = 1e12;
/// Ridge size relative to the mean feature variance.
pub const RIDGE_FRACTION: f64 = 1e-8;

/// Inverse feature covariance and centering vector for T².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    #[serde(with = "crate::serde_mat")]
    pub covariance_inverse: DMatrix<f64>,
    #[serde(with = "crate::serde_mat::vector")]
    pub feature_mean: DVector<f64>,
    pub ridge_used: f64,
}

/// Whether T² subtracts the training feature mean before the quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum T2Centering {
    #[default]
    Centered,
    /// Quadratic form on the raw features, as `g·Σ⁻¹·gᵀ`.
    Raw,
}

/// Empirical covariance (divisor N−1) of centered features, ridged if
/// ill-conditioned, then inverted.
pub fn fit_feature_stats(g: &FeatureMatrix) -> Result<FeatureStats> {
    fit_feature_stats_with(g, T2Centering::Centered)
}

pub fn fit_feature_stats_with(g: &FeatureMatrix, centering: T2Centering) -> Result<FeatureStats> {
    let (rows, p) = g.shape();
    if rows <= p {
        return Err(Error::InsufficientSamples { needed: p, got: rows });
    }
    let (cov, mean) = linalg::covariance(g);
    let (covariance_inverse, ridge_used) = regularized_inverse(cov)?;
    let feature_mean = match centering {
        T2Centering::Centered => mean,
        T2Centering::Raw => DVector::zeros(p),
    };
    Ok(FeatureStats {
        covariance_inverse,
        feature_mean,
        ridge_used,
    })
}

impl FeatureStats {
    /// Diagonal covariance from known per-feature variances (PCA
    /// eigenvalues); the mean still comes from the training features.
    pub fn from_variances(variances: &[f64], train_features: &FeatureMatrix) -> Result<Self> {
        if train_features.ncols() != variances.len() {
            return Err(Error::Shape(format!(
                "{} variances for {} features",
                variances.len(),
                train_features.ncols()
            )));
        }
        let cov = DMatrix::from_diagonal(&DVector::from_column_slice(variances));
        let (covariance_inverse, ridge_used) = regularized_inverse(cov)?;
        Ok(Self {
            covariance_inverse,
            feature_mean: train_features.row_mean().transpose(),
            ridge_used,
        })
    }

    pub fn dim(&self) -> usize {
        self.feature_mean.len()
    }
}

fn regularized_inverse(mut cov: DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let p = cov.nrows();
    let (values, _) = linalg::sym_eigen_desc(&cov);
    let (max, min) = (values[0], values[p - 1]);
    let mut ridge = 0.0;
    if !(min > 0.0 && max / min <= MAX_CONDITION) {
        ridge = RIDGE_FRACTION * cov.trace() / p as f64;
        if ridge.is_nan() || ridge <= 0.0 {
            return Err(Error::Degenerate("feature covariance is zero".into()));
        }
        log::warn!("feature covariance is ill-conditioned; adding ridge {ridge:.3e}");
        for i in 0..p {
            cov[(i, i)] += ridge;
        }
    }
    let (values, vectors) = linalg::sym_eigen_desc(&cov);
    if values.iter().any(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::Numeric("feature covariance is not positive definite".into()));
    }
    let inv_diag = DMatrix::from_diagonal(&values.map(|v| 1.0 / v));
    let inv = &vectors * inv_diag * vectors.transpose();
    Ok(((&inv + inv.transpose()) * 0.5, ridge))
}

/// `(g − μ)·Σ⁻¹·(g − μ)ᵀ`
pub fn t2_statistic(g: &[f64], stats: &FeatureStats) -> Result<f64> {
    if g.len() != stats.dim() {
        return Err(Error::Shape(format!("T² expects {} features, got {}", stats.dim(), g.len())));
    }
    Ok(t2_unchecked(g.iter().copied(), stats))
}

fn t2_unchecked(g: impl Iterator<Item = f64>, stats: &FeatureStats) -> f64 {
    let d = DVector::from_iterator(stats.dim(), g.zip(stats.feature_mean.iter()).map(|(a, m)| a - m));
    d.dot(&(&stats.covariance_inverse * &d)).max(0.0)
}

/// Squared Euclidean norm of the residual.
pub fn spe_statistic(x: impl Iterator<Item = f64>, reconstructed: impl Iterator<Item = f64>) -> f64 {
    x.zip(reconstructed).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// [`spe_statistic`] with a length check.
pub fn spe_checked(x: &[f64], reconstructed: &[f64]) -> Result<f64> {
    if x.len() != reconstructed.len() {
        return Err(Error::Shape(format!("SPE of {} vs {} values", x.len(), reconstructed.len())));
    }
    Ok(spe_statistic(x.iter().copied(), reconstructed.iter().copied()))
}

fn sample_std(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Silverman's rule, `1.06 · σ̂ · N^(−1/5)`.
pub fn kde_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 1,
            got: samples.len(),
        });
    }
    let sd = sample_std(samples);
    if sd.is_nan() || sd <= 0.0 {
        return Err(Error::Degenerate("all KDE samples are equal".into()));
    }
    Ok(silverman(sd, samples.len()))
}

pub fn silverman(std: f64, n: usize) -> f64 {
    1.06 * std * (n as f64).powf(-0.2)
}

/// Bandwidth for a set of training statistics, falling back to
/// `max(1e−6, 1e−3·|value|)` when they are all equal.
pub fn kde_bandwidth_or_fallback(samples: &[f64]) -> Result<f64> {
    match kde_bandwidth(samples) {
        Err(Error::Degenerate(_)) => Ok((1e-3 * samples[0].abs()).max(1e-6)),
        other => other,
    }
}

/// Gaussian KDE, `(1/(√(2π)·h·N)) · Σ exp(−(q − sᵢ)²/(2h²))`.
pub fn kde_density(samples: &[f64], h: f64, query: f64) -> f64 {
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * h * samples.len() as f64);
    norm * par::sum_indices(samples.len(), |i| {
        let z = (query - samples[i]) / h;
        (-0.5 * z * z).exp()
    })
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Exact cumulative of the Gaussian KDE, `(1/N) · Σ Φ((t − sᵢ)/h)`.
pub fn kde_cdf(samples: &[f64], h: f64, t: f64) -> f64 {
    par::sum_indices(samples.len(), |i| normal_cdf((t - samples[i]) / h)) / samples.len() as f64
}

/// Solves `F̂(L) = confidence` by bisection on `[min − 8h, max + 8h]`,
/// stopping once `|F̂(L) − confidence| ≤ 1e−10` or the bracket collapses.
pub fn control_limit(samples: &[f64], h: f64, confidence: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("no samples for control limit".into()));
    }
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Config(format!("bandwidth must be positive, got {h}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Config(format!("confidence must be in (0, 1), got {confidence}")));
    }
    let (min, max) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let (mut lo, mut hi) = (min - 8.0 * h, max + 8.0 * h);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let f = kde_cdf(samples, h, mid);
        if (f - confidence).abs() <= 1e-10 {
            break;
        }
        if f < confidence {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
    }
    Ok(mid)
}

/// Upper control limits for both statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlLimits {
    pub t2_limit: f64,
    pub spe_limit: f64,
    pub h_t2: f64,
    pub h_spe: f64,
    pub confidence: f64,
}

impl ControlLimits {
    /// KDE quantiles of the training statistics at `confidence`.
    pub fn fit(t2_train: &[f64], spe_train: &[f64], confidence: f64) -> Result<Self> {
        let h_t2 = kde_bandwidth_or_fallback(t2_train)?;
        let h_spe = kde_bandwidth_or_fallback(spe_train)?;
        let (t2_limit, spe_limit) = par::join(
            || control_limit(t2_train, h_t2, confidence),
            || control_limit(spe_train, h_spe, confidence),
        );
        Ok(Self {
            t2_limit: t2_limit?,
            spe_limit: spe_limit?,
            h_t2,
            h_spe,
            confidence,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub sample_index: usize,
    pub t2: f64,
    pub spe: f64,
    pub t2_alarm: bool,
    pub spe_alarm: bool,
}

/// Training-set statistics of a detector.
pub fn statistics(detector: &Detector, stats: &FeatureStats, x: &DataMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let (g, spe) = detector.evaluate(x)?;
    if g.ncols() != stats.dim() {
        return Err(Error::Shape(format!(
            "detector yields {} features, statistics expect {}",
            g.ncols(),
            stats.dim()
        )));
    }
    let t2 = par::map_indices(g.nrows(), |i| t2_unchecked(g.row(i).iter().copied(), stats));
    Ok((t2, spe))
}

/// Scores every row of scaled data. An alarm is raised only when a statistic
/// strictly exceeds its limit.
pub fn monitor(detector: &Detector, stats: &FeatureStats, limits: &ControlLimits, x: &DataMatrix) -> Result<Vec<MonitorRecord>> {
    let (t2, spe) = statistics(detector, stats, x)?;
    Ok(t2
        .into_iter()
        .zip(spe)
        .enumerate()
        .map(|(i, (t2, spe))| MonitorRecord {
            sample_index: i,
            t2,
            spe,
            t2_alarm: t2 > limits.t2_limit,
            spe_alarm: spe > limits.spe_limit,
        })
        .collect())
}

pub const RECORDS_HEADER: &str = "sample_index,t2,spe,t2_alarm,spe_alarm";

/// Records as CSV: a `#` comment carrying both limits, the column header,
/// then one row per sample with alarms as 0/1.
pub fn write_records<W: Write>(mut out: W, records: &[MonitorRecord], limits: &ControlLimits) -> Result<()> {
    writeln!(
        out,
        "# t2_limit={},spe_limit={},confidence={}",
        limits.t2_limit, limits.spe_limit, limits.confidence
    )?;
    writeln!(out, "{RECORDS_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.sample_index, r.t2, r.spe, r.t2_alarm as u8, r.spe_alarm as u8
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Parses the output of [`write_records`].
pub fn read_records<R: BufRead>(input: R) -> Result<Vec<MonitorRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line == RECORDS_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = |column: usize| Error::Parse {
            row: i + 1,
            column: column + 1,
            value: f.get(column).unwrap_or(&"").to_string(),
        };
        if f.len() != 5 {
            return Err(Error::RaggedRow {
                row: i + 1,
                expected: 5,
                found: f.len(),
            });
        }
        let flag = |c: usize| match f[c] {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(bad(c)),
        };
        out.push(MonitorRecord {
            sample_index: f[0].parse().map_err(|_| bad(0))?,
            t2: f[1].parse().map_err(|_| bad(1))?,
            spe: f[2].parse().map_err(|_| bad(2))?,
            t2_alarm: flag(3)?,
            spe_alarm: flag(4)?,
        });
    }
    Ok(out)
}
