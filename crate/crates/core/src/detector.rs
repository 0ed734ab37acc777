//! One interface over the four feature extractors so monitoring and
//! benchmarking never branch on the method.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_autoencoder, fit_kpca, fit_pca, AutoencoderModel, KernelWidth, KpcaModel, PcaModel};
use crate::dataset::DataMatrix;
use crate::encoder::{FeatureMatrix, TrainConfig};
use crate::error::{Error, Result};
use crate::monitoring::{fit_feature_stats, spe_statistic, FeatureStats};
use crate::nca::{fit_nca, nca_extract, nca_reconstruct, NcaFitConfig, NcaModel};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Kpca,
    Autoencoder,
    Nca,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pca, Method::Kpca, Method::Autoencoder, Method::Nca];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Kpca => "kpca",
            Method::Autoencoder => "autoencoder",
            Method::Nca => "nca",
        }
    }

    /// Parses a comma-separated list; `all` expands to every method.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let methods = if part.eq_ignore_ascii_case("all") {
                Method::ALL.to_vec()
            } else {
                vec![part.parse()?]
            };
            for m in methods {
                if !out.contains(&m) {
                    out.push(m);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config("no methods given".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pca" => Ok(Method::Pca),
            "kpca" => Ok(Method::Kpca),
            "autoencoder" | "ae" => Ok(Method::Autoencoder),
            "nca" => Ok(Method::Nca),
            other => Err(Error::Config(format!("unknown method {other:?}"))),
        }
    }
}

/// Settings shared by every fit; each method reads what it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    /// NCA encoder optimizer; `epochs_per_outer` is per outer iteration.
    pub train: TrainConfig,
    pub nca_epsilon: f64,
    pub nca_max_outer: usize,
    /// Total epochs for the autoencoder baseline.
    pub autoencoder_epochs: usize,
    pub kernel_width: KernelWidth,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            nca_epsilon: 1e-4,
            nca_max_outer: 50,
            autoencoder_epochs: 2000,
            kernel_width: KernelWidth::Auto,
        }
    }
}

impl FitSettings {
    pub fn nca_config(&self, p: usize) -> NcaFitConfig {
        NcaFitConfig {
            epsilon: self.nca_epsilon,
            max_outer: self.nca_max_outer,
            train: self.train,
            ..NcaFitConfig::new(p)
        }
    }
}

/// A fitted detector of any kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "lowercase")]
pub enum Detector {
    Pca(PcaModel),
    Kpca(KpcaModel),
    Autoencoder(AutoencoderModel),
    Nca(NcaModel),
}

impl Detector {
    /// Fits `method` with `p` features on already-scaled training data.
    pub fn fit(method: Method, x: &DataMatrix, p: usize, settings: &FitSettings) -> Result<Self> {
        Ok(match method {
            Method::Pca => Detector::Pca(fit_pca(x, p)?),
            Method::Kpca => Detector::Kpca(fit_kpca(x, p, settings.kernel_width)?),
            Method::Autoencoder => {
                let cfg = TrainConfig {
                    epochs_per_outer: settings.autoencoder_epochs,
                    ..settings.train
                };
                Detector::Autoencoder(fit_autoencoder(x, p, &cfg)?)
            }
            Method::Nca => Detector::Nca(fit_nca(x, &settings.nca_config(p))?),
        })
    }

    pub fn method(&self) -> Method {
        match self {
            Detector::Pca(_) => Method::Pca,
            Detector::Kpca(_) => Method::Kpca,
            Detector::Autoencoder(_) => Method::Autoencoder,
            Detector::Nca(_) => Method::Nca,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Detector::Pca(m) => m.dim(),
            Detector::Kpca(m) => m.dim(),
            Detector::Autoencoder(m) => m.dim(),
            Detector::Nca(m) => m.dim(),
        }
    }

    pub fn n_vars(&self) -> usize {
        match self {
            Detector::Pca(m) => m.loadings.nrows(),
            Detector::Kpca(m) => m.train_data.ncols(),
            Detector::Autoencoder(m) => m.encoder.input_dim(),
            Detector::Nca(m) => m.b.nrows(),
        }
    }

    pub fn extract(&self, x: &DataMatrix) -> Result<FeatureMatrix> {
        self.check(x)?;
        match self {
            Detector::Pca(m) => m.extract(x),
            Detector::Kpca(m) => Ok(m.extract_with_spe(x)?.0),
            Detector::Autoencoder(m) => m.extract(x),
            Detector::Nca(m) => nca_extract(m, x),
        }
    }

    /// Input-space reconstruction of features. KPCA has no pre-image and
    /// returns `None`.
    pub fn reconstruct(&self, g: &FeatureMatrix) -> Option<Result<DMatrix<f64>>> {
        match self {
            Detector::Pca(m) => Some(m.reconstruct(g)),
            Detector::Kpca(_) => None,
            Detector::Autoencoder(m) => Some(m.reconstruct(g)),
            Detector::Nca(m) => Some(nca_reconstruct(m, g)),
        }
    }

    /// Features and SPE of every row. SPE is the input-space residual, except
    /// for KPCA where it is the feature-space residual.
    pub fn evaluate(&self, x: &DataMatrix) -> Result<(FeatureMatrix, Vec<f64>)> {
        self.check(x)?;
        if let Detector::Kpca(m) = self {
            return m.extract_with_spe(x);
        }
        let g = self.extract(x)?;
        let rec = self.reconstruct(&g).expect("input-space model")?;
        let spe = par::map_indices(x.n_samples(), |i| {
            let row = x.values().row(i);
            spe_statistic(row.iter().copied(), rec.row(i).iter().copied())
        });
        Ok((g, spe))
    }

    /// Covariance model for T². PCA uses its eigenvalues directly; the others
    /// use the empirical covariance of the training features.
    pub fn feature_stats(&self, train_features: &FeatureMatrix) -> Result<FeatureStats> {
        match self {
            Detector::Pca(m) => FeatureStats::from_variances(m.eigenvalues.as_slice(), train_features),
            _ => fit_feature_stats(train_features),
        }
    }

    fn check(&self, x: &DataMatrix) -> Result<()> {
        if x.n_vars() != self.n_vars() {
            return Err(Error::Shape(format!(
                "{} model expects {} variables, data has {}",
                self.method(),
                self.n_vars(),
                x.n_vars()
            )));
        }
        Ok(())
    }
}
