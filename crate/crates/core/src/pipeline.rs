//! Offline modeling end to end (scale, fit, feature statistics, KDE limits)
//! and the versioned JSON envelope a fitted monitor is saved as.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{fit_pca, select_dimension_cpv};
use crate::dataset::{apply_scaler, fit_scaler, DataMatrix, Scaler};
use crate::detector::{Detector, FitSettings, Method};
use crate::error::{Error, Result};
use crate::monitoring::{self, ControlLimits, FeatureStats, MonitorRecord};

pub const FORMAT_VERSION: u32 = 1;
pub const DEFAULT_CONFIDENCE: f64 = 0.99;
pub const DEFAULT_CPV_ENERGY: f64 = 0.85;

/// Number of retained features: fixed, or chosen by the CPV rule on the PCA
/// spectrum of the scaled training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimSpec {
    Fixed(usize),
    Cpv(f64),
}

impl DimSpec {
    pub fn resolve(&self, scaled_train: &DataMatrix) -> Result<usize> {
        match *self {
            DimSpec::Fixed(p) => Ok(p),
            DimSpec::Cpv(energy) => {
                let pca = fit_pca(scaled_train, scaled_train.n_vars())?;
                select_dimension_cpv(pca.all_eigenvalues.as_slice(), energy)
            }
        }
    }
}

impl FromStr for DimSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(frac) = s.strip_prefix("cpv:") {
            let energy: f64 = frac
                .parse()
                .map_err(|_| Error::Config(format!("bad CPV fraction {frac:?}")))?;
            if !(energy > 0.0 && energy <= 1.0) {
                return Err(Error::Config(format!("CPV fraction must be in (0, 1], got {energy}")));
            }
            return Ok(DimSpec::Cpv(energy));
        }
        let p: usize = s
            .parse()
            .map_err(|_| Error::Config(format!("dimension must be an integer or cpv:<fraction>, got {s:?}")))?;
        if p == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        Ok(DimSpec::Fixed(p))
    }
}

impl fmt::Display for DimSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DimSpec::Fixed(p) => write!(f, "{p}"),
            DimSpec::Cpv(e) => write!(f, "cpv:{e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub format_version: u32,
    pub seed: u64,
    pub dim: usize,
    pub dim_rule: DimSpec,
    pub settings: FitSettings,
}

/// A fitted monitor: everything needed to score raw samples online.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEnvelope {
    pub format_version: u32,
    #[serde(flatten)]
    pub detector: Detector,
    pub scaler: Scaler,
    pub feature_stats: FeatureStats,
    pub control_limits: ControlLimits,
    pub metadata: Metadata,
}

impl ModelEnvelope {
    /// Scales `raw_train`, fits `method`, and derives T²/SPE limits from the
    /// training statistics.
    pub fn train(method: Method, raw_train: &DataMatrix, dim: DimSpec, settings: &FitSettings, confidence: f64) -> Result<Self> {
        let scaler = fit_scaler(raw_train)?;
        let scaled = apply_scaler(&scaler, raw_train)?;
        let p = dim.resolve(&scaled)?;
        Self::train_scaled(method, scaler, &scaled, p, dim, settings, confidence)
    }

    pub(crate) fn train_scaled(
        method: Method,
        scaler: Scaler,
        scaled: &DataMatrix,
        p: usize,
        dim_rule: DimSpec,
        settings: &FitSettings,
        confidence: f64,
    ) -> Result<Self> {
        let detector = Detector::fit(method, scaled, p, settings)?;
        let (g, spe) = detector.evaluate(scaled)?;
        let feature_stats = detector.feature_stats(&g)?;
        let (t2, _) = monitoring::statistics(&detector, &feature_stats, scaled)?;
        let control_limits = ControlLimits::fit(&t2, &spe, confidence)?;
        Ok(Self {
            format_version: FORMAT_VERSION,
            detector,
            scaler,
            feature_stats,
            control_limits,
            metadata: Metadata {
                format_version: FORMAT_VERSION,
                seed: settings.train.seed,
                dim: p,
                dim_rule,
                settings: settings.clone(),
            },
        })
    }

    pub fn method(&self) -> Method {
        self.detector.method()
    }

    /// Scales raw samples and scores them.
    pub fn monitor(&self, raw: &DataMatrix) -> Result<Vec<MonitorRecord>> {
        let scaled = apply_scaler(&self.scaler, raw)?;
        monitoring::monitor(&self.detector, &self.feature_stats, &self.control_limits, &scaled)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let env: Self = serde_json::from_str(s)?;
        if env.format_version != FORMAT_VERSION {
            return Err(Error::Model(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                env.format_version
            )));
        }
        if env.scaler.dim() != env.detector.n_vars() || env.feature_stats.dim() != env.detector.dim() {
            return Err(Error::Model("scaler, detector and feature statistics disagree on dimensions".into()));
        }
        Ok(env)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut json = self.to_json()?;
        json.push('\n');
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
