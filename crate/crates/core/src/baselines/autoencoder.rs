use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dataset::DataMatrix;
use crate::encoder::{descend, reduce_chunks, FeatureMatrix, Gradients, Mlp, TrainConfig};
use crate::error::{Error, Result};

/// Symmetric bottleneck network `n → h → p → h → n` with
/// `h = ⌈(n+p)/2⌉`. Both halves use tanh hidden units and an identity
/// output, so the code layer is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderModel {
    pub encoder: Mlp,
    pub decoder: Mlp,
    pub loss_trace: Vec<f64>,
}

impl AutoencoderModel {
    /// Glorot-initialized, untrained. Encoder draws from `seed`, decoder from
    /// `seed + 1`.
    pub fn init(n: usize, p: usize, seed: u64) -> Result<Self> {
        if p == 0 || p >= n {
            return Err(Error::Dimension(format!("autoencoder code size must be in 1..{n}, got {p}")));
        }
        let h = (n + p).div_ceil(2);
        Ok(Self {
            encoder: Mlp::init(&[n, h, p], seed)?,
            decoder: Mlp::init(&[p, h, n], seed.wrapping_add(1))?,
            loss_trace: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.encoder.output_dim()
    }

    pub fn extract(&self, x: &DataMatrix) -> Result<FeatureMatrix> {
        self.encoder.forward_matrix(x.values())
    }

    pub fn reconstruct(&self, g: &FeatureMatrix) -> Result<DMatrix<f64>> {
        self.decoder.forward_matrix(g)
    }
}

/// `‖X − dec(enc(X))‖²_F` and its gradients for `[encoder, decoder]`.
pub fn reconstruction_gradients(encoder: &Mlp, decoder: &Mlp, x: &DataMatrix) -> Result<(f64, Vec<Gradients>)> {
    let x = x.values();
    if x.ncols() != encoder.input_dim() || decoder.output_dim() != x.ncols() || decoder.input_dim() != encoder.output_dim() {
        return Err(Error::Shape(format!(
            "autoencoder {:?}/{:?} does not fit {} variables",
            encoder.layer_dims(),
            decoder.layer_dims(),
            x.ncols()
        )));
    }
    Ok(reduce_chunks(&[encoder, decoder], x.nrows(), |r| {
        let xc = x.rows(r.start, r.len()).into_owned();
        let enc_acts = encoder.activations(&xc);
        let code = enc_acts.last().expect("code layer");
        let dec_acts = decoder.activations(code);
        let resid = dec_acts.last().expect("output layer") - &xc;
        let loss = resid.norm_squared();
        let (dec_grads, code_grad) = decoder.backward(&dec_acts, resid * 2.0);
        let (enc_grads, _) = encoder.backward(&enc_acts, code_grad);
        (loss, vec![enc_grads, dec_grads])
    }))
}

/// Full-batch gradient descent with momentum for `cfg.epochs_per_outer`
/// epochs.
pub fn fit_autoencoder(x: &DataMatrix, p: usize, cfg: &TrainConfig) -> Result<AutoencoderModel> {
    cfg.validate()?;
    let init = AutoencoderModel::init(x.n_vars(), p, cfg.seed)?;
    let mut nets = [init.encoder, init.decoder];
    let loss_trace = descend(&mut nets, cfg, |n| {
        reconstruction_gradients(&n[0], &n[1], x).expect("shapes fixed at init")
    })?;
    let [encoder, decoder] = nets;
    Ok(AutoencoderModel {
        encoder,
        decoder,
        loss_trace,
    })
}
