//! Neural component analysis: a nonlinear encoder paired with an orthonormal
//! linear decoder, fitted by alternating encoder gradient descent with a
//! closed-form reduced-rank Procrustes update of the decoder frame.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::baselines::pca::fit_pca;
use crate::dataset::DataMatrix;
use crate::encoder::{self, default_encoder_dims, init_encoder, nca_loss_matrix, FeatureMatrix, FeedforwardEncoder, TrainConfig};
use crate::error::{Error, Result};
use crate::linalg;

/// Orthonormal-column minimizer of `‖M − T·Hᵀ‖²_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct Procrustes {
    /// `n × p`
    pub rotation: DMatrix<f64>,
    /// `MᵀT` was rank deficient; the null directions were filled with an
    /// arbitrary orthonormal completion (every completion is optimal).
    pub rank_deficient: bool,
}

/// With `MᵀT = U·D·Vᵀ` (thin SVD), the minimizer is `H = U·Vᵀ`.
pub fn procrustes_rotation(m: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<Procrustes> {
    let (n, p) = (m.ncols(), t.ncols());
    if m.nrows() != t.nrows() {
        return Err(Error::Shape(format!("M has {} rows, T has {}", m.nrows(), t.nrows())));
    }
    if p == 0 || p > n {
        return Err(Error::Dimension(format!("target width {p} must be in 1..={n}")));
    }
    let cross = m.transpose() * t;
    if cross.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite cross product in Procrustes step".into()));
    }
    let svd = cross.clone().svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Numeric("SVD did not return U".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Numeric("SVD did not return Vᵀ".into()))?;
    let sigma = &svd.singular_values;
    let tol = sigma.max() * (n.max(p) as f64) * f64::EPSILON;
    let strong: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] > tol && sigma[i] > 0.0).collect();

    if strong.len() == p {
        let rotation = &u * &v_t;
        return Ok(Procrustes {
            rotation,
            rank_deficient: false,
        });
    }

    log::warn!("Procrustes: cross product has rank {} < {p}; completing the basis", strong.len());
    let weak: Vec<usize> = (0..sigma.len()).filter(|i| !strong.contains(i)).collect();
    let u_cols = |idx: &[usize]| idx.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>();
    let v_cols = |idx: &[usize]| idx.iter().map(|&i| v_t.row(i).transpose()).collect::<Vec<_>>();
    let u_full = linalg::complete_orthonormal(u_cols(&strong), &u_cols(&weak), n, p);
    let v_full = linalg::complete_orthonormal(v_cols(&strong), &v_cols(&weak), p, p);
    Ok(Procrustes {
        rotation: u_full * v_full.transpose(),
        rank_deficient: true,
    })
}

/// Settings for [`fit_nca`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcaFitConfig {
    pub p: usize,
    /// Stop once `‖B − B̂‖_F` falls below this.
    pub epsilon: f64,
    pub max_outer: usize,
    /// Hidden layer widths; `None` means one layer of `⌈(n+p)/2⌉`.
    pub hidden: Option<Vec<usize>>,
    pub train: TrainConfig,
}

impl NcaFitConfig {
    pub fn new(p: usize) -> Self {
        Self {
            p,
            epsilon: 1e-4,
            max_outer: 50,
            hidden: None,
            train: TrainConfig::default(),
        }
    }

    fn validate(&self, n: usize, rows: usize) -> Result<()> {
        if self.p == 0 || self.p >= n {
            return Err(Error::Dimension(format!("NCA dimension must be in 1..{n}, got {}", self.p)));
        }
        if rows <= self.p {
            return Err(Error::InsufficientSamples {
                needed: self.p,
                got: rows,
            });
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_outer == 0 {
            return Err(Error::Config("max_outer must be at least 1".into()));
        }
        self.train.validate()
    }

    fn layer_dims(&self, n: usize) -> Vec<usize> {
        match &self.hidden {
            None => default_encoder_dims(n, self.p),
            Some(h) => std::iter::once(n).chain(h.iter().copied()).chain(std::iter::once(self.p)).collect(),
        }
    }
}

/// Diagnostics of one outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterStep {
    /// Encoder loss at the first and last epoch of this iteration.
    pub encoder_loss_start: f64,
    pub encoder_loss_end: f64,
    /// `‖X − G·Bᵀ‖²` with the new `G` and the previous frame.
    pub loss_before_rotation: f64,
    /// Same, after the Procrustes update.
    pub loss_after_rotation: f64,
    /// `‖B − B̂‖_F`
    pub frame_change: f64,
    /// `‖B̂ᵀB̂ − I‖_F`
    pub orthonormality_error: f64,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcaModel {
    pub encoder: FeedforwardEncoder,
    /// Decoder frame, `n × p` with orthonormal columns.
    #[serde(with = "crate::serde_mat")]
    pub b: DMatrix<f64>,
    /// Column mean of the training features.
    #[serde(with = "crate::serde_mat::vector")]
    pub feature_mean: DVector<f64>,
    /// Reconstruction loss after each outer iteration's frame update.
    pub loss_trace: Vec<f64>,
    pub history: Vec<OuterStep>,
    pub converged: bool,
}

impl NcaModel {
    pub fn dim(&self) -> usize {
        self.b.ncols()
    }
}

/// Alternating fit on scaled data:
///
/// 1. `B ←` top-`p` PCA loadings of `X`;
/// 2. train the encoder against the fixed `B`, warm-starting from the
///    previous iteration's parameters;
/// 3. `G ← g(X)`, `B̂ ←` Procrustes rotation of `G` onto `X`;
/// 4. `B ← B̂`; stop when `‖B − B̂‖_F < ε` or after `max_outer` iterations.
pub fn fit_nca(x: &DataMatrix, cfg: &NcaFitConfig) -> Result<NcaModel> {
    let n = x.n_vars();
    cfg.validate(n, x.n_samples())?;
    let mut b = fit_pca(x, cfg.p)?.loadings;
    let mut enc = init_encoder(&cfg.layer_dims(n), cfg.train.seed)?;
    let mut loss_trace = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut g = FeatureMatrix::zeros(0, 0);

    for outer in 0..cfg.max_outer {
        let (trained, trace) = encoder::train_encoder(&enc, x, &b, &cfg.train)?;
        enc = trained;
        g = encoder::forward(&enc, x)?;
        let before = nca_loss_matrix(x.values(), &g, &b)?;
        let step = procrustes_rotation(x.values(), &g)?;
        let after = nca_loss_matrix(x.values(), &g, &step.rotation)?;
        let change = (&b - &step.rotation).norm();
        let record = OuterStep {
            encoder_loss_start: trace.first().copied().unwrap_or(before),
            encoder_loss_end: trace.last().copied().unwrap_or(before),
            loss_before_rotation: before,
            loss_after_rotation: after,
            frame_change: change,
            orthonormality_error: linalg::orthonormality_error(&step.rotation),
            rank_deficient: step.rank_deficient,
        };
        log::debug!("NCA outer {outer}: loss {after:.6e}, ‖B−B̂‖ {change:.3e}");
        history.push(record);
        loss_trace.push(after);
        b = step.rotation;
        if change < cfg.epsilon {
            converged = true;
            break;
        }
    }

    let feature_mean = g.row_mean().transpose();
    Ok(NcaModel {
        encoder: enc,
        b,
        feature_mean,
        loss_trace,
        history,
        converged,
    })
}

/// Raw (uncentered) features `g(X)`.
pub fn nca_extract(model: &NcaModel, x: &DataMatrix) -> Result<FeatureMatrix> {
    encoder::forward(&model.encoder, x)
}

/// `G·Bᵀ`
pub fn nca_reconstruct(model: &NcaModel, g: &FeatureMatrix) -> Result<DMatrix<f64>> {
    if g.ncols() != model.dim() {
        return Err(Error::Shape(format!("NCA model has {} features, got {}", model.dim(), g.ncols())));
    }
    Ok(g * model.b.transpose())
}
