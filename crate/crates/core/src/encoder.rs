//! Feedforward networks (tanh hidden layers, identity output) with batched
//! backpropagation, and the encoder half of the NCA alternation: gradient
//! descent on `‖X − G·Bᵀ‖²_F` with the decoder frame `B` held fixed.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::dataset::DataMatrix;
use crate::error::{Error, Result};
use crate::par;

/// Encoder outputs, one row per sample.
pub type FeatureMatrix = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out × in`
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

/// Multilayer perceptron: tanh on every hidden layer, identity on the last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MlpRepr", try_from = "MlpRepr")]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// The NCA encoder `g(x; W, b)`. Same machinery as any [`Mlp`]; the `p < n`
/// bottleneck is enforced by [`init_encoder`].
pub type FeedforwardEncoder = Mlp;

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        check_dims(layer_dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let dist = Uniform::new_inclusive(-limit, limit).expect("glorot range");
                let mut weights = DMatrix::zeros(fan_out, fan_in);
                for r in 0..fan_out {
                    for c in 0..fan_in {
                        weights[(r, c)] = dist.sample(&mut rng);
                    }
                }
                Layer {
                    weights,
                    bias: DVector::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self { layers })
    }

    /// Builds a network from explicit parameters, checking only that the
    /// layers conform. No bottleneck requirement.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Dimension("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weights.nrows() {
                return Err(Error::Shape(format!("layer {i}: bias length does not match weights")));
            }
            if i > 0 && layers[i - 1].weights.nrows() != l.weights.ncols() {
                return Err(Error::Shape(format!("layer {i} does not conform to layer {}", i - 1)));
            }
            if l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.weights.nrows()));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").weights.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, data has {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Activations of every layer, input first.
    pub(crate) fn activations(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.clone());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = acts[i].clone() * layer.weights.transpose();
            for mut row in z.row_iter_mut() {
                row += layer.bias.transpose();
            }
            if i < last {
                z.apply(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        acts
    }

    /// Backpropagates `upstream = ∂L/∂output` through cached activations.
    /// Returns parameter gradients and `∂L/∂input`.
    pub(crate) fn backward(&self, acts: &[DMatrix<f64>], upstream: DMatrix<f64>) -> (Gradients, DMatrix<f64>) {
        let n_layers = self.layers.len();
        let mut weights = vec![DMatrix::zeros(0, 0); n_layers];
        let mut biases = vec![DVector::zeros(0); n_layers];
        let mut delta = upstream;
        for l in (0..n_layers).rev() {
            if l < n_layers - 1 {
                // tanh'(z) = 1 − tanh(z)²
                delta.zip_apply(&acts[l + 1], |d, a| *d *= 1.0 - a * a);
            }
            weights[l] = delta.transpose() * &acts[l];
            biases[l] = delta.row_sum().transpose();
            delta = &delta * &self.layers[l].weights;
        }
        (Gradients { weights, biases }, delta)
    }

    pub fn forward_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        let chunks = par::map_chunks(x.nrows(), |r| {
            let xc = x.rows(r.start, r.len()).into_owned();
            self.activations(&xc).pop().expect("output layer")
        });
        Ok(stack_rows(chunks, x.nrows(), self.output_dim()))
    }

    fn apply_step(&mut self, step: &Gradients) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            layer.weights += &step.weights[l];
            layer.bias += &step.biases[l];
        }
    }
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::Dimension(format!("need at least input and output sizes, got {dims:?}")));
    }
    if dims.contains(&0) {
        return Err(Error::Dimension(format!("layer sizes must be positive, got {dims:?}")));
    }
    Ok(())
}

pub(crate) fn stack_rows(chunks: Vec<DMatrix<f64>>, rows: usize, cols: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for c in chunks {
        out.rows_mut(at, c.nrows()).copy_from(&c);
        at += c.nrows();
    }
    out
}

/// Per-layer parameter gradients (or steps) in the network's own shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| DMatrix::zeros(l.weights.nrows(), l.weights.ncols())).collect(),
            biases: net.layers.iter().map(|l| DVector::zeros(l.bias.len())).collect(),
        }
    }

    fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }

    /// `self ← momentum·self − lr·grad`
    fn momentum_update(&mut self, grad: &Gradients, momentum: f64, lr: f64) {
        for (v, g) in self.weights.iter_mut().zip(&grad.weights) {
            v.zip_apply(g, |a, b| *a = momentum * *a - lr * b);
        }
        for (v, g) in self.biases.iter_mut().zip(&grad.biases) {
            v.zip_apply(g, |a, b| *a = momentum * *a - lr * b);
        }
    }

    /// All components, layer by layer: weights row-major, then bias.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for r in 0..w.nrows() {
                out.extend(w.row(r).iter());
            }
            out.extend(b.iter());
        }
        out
    }
}

/// Weights and biases in the same order as [`Gradients::flatten`].
pub fn flatten_params(net: &Mlp) -> Vec<f64> {
    Gradients {
        weights: net.layers.iter().map(|l| l.weights.clone()).collect(),
        biases: net.layers.iter().map(|l| l.bias.clone()).collect(),
    }
    .flatten()
}

/// Inverse of [`flatten_params`] for a network with the same shapes.
pub fn with_params(net: &Mlp, params: &[f64]) -> Mlp {
    let mut out = net.clone();
    let mut it = params.iter().copied();
    for layer in &mut out.layers {
        for r in 0..layer.weights.nrows() {
            for c in 0..layer.weights.ncols() {
                layer.weights[(r, c)] = it.next().expect("parameter count");
            }
        }
        for v in layer.bias.iter_mut() {
            *v = it.next().expect("parameter count");
        }
    }
    out
}

/// Optimizer settings for full-batch gradient descent with momentum.
///
/// The loss is a sum over samples, so its curvature grows with the number of
/// training rows; the default step is stable for a few hundred rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs_per_outer: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            momentum: 0.9,
            epochs_per_outer: 200,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        Ok(())
    }
}

/// Default encoder shape: one tanh hidden layer of `⌈(n+p)/2⌉` units.
pub fn default_encoder_dims(n: usize, p: usize) -> Vec<usize> {
    vec![n, (n + p).div_ceil(2), p]
}

/// Glorot-initialized encoder; the output must be narrower than the input.
pub fn init_encoder(layer_dims: &[usize], seed: u64) -> Result<FeedforwardEncoder> {
    check_dims(layer_dims)?;
    let (n, p) = (layer_dims[0], *layer_dims.last().expect("len >= 2"));
    if p >= n {
        return Err(Error::Dimension(format!("encoder output {p} must be smaller than input {n}")));
    }
    Mlp::init(layer_dims, seed)
}

pub fn forward(enc: &FeedforwardEncoder, x: &DataMatrix) -> Result<FeatureMatrix> {
    enc.forward_matrix(x.values())
}

fn check_frame(x: &DMatrix<f64>, g: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != g.nrows() || b.nrows() != x.ncols() || b.ncols() != g.ncols() {
        return Err(Error::Shape(format!(
            "X is {}×{}, G is {}×{}, B is {}×{}",
            x.nrows(),
            x.ncols(),
            g.nrows(),
            g.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(())
}

/// `‖X − G·Bᵀ‖²_F`
pub fn nca_loss(x: &DataMatrix, g: &FeatureMatrix, b: &DMatrix<f64>) -> Result<f64> {
    nca_loss_matrix(x.values(), g, b)
}

pub(crate) fn nca_loss_matrix(x: &DMatrix<f64>, g: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    check_frame(x, g, b)?;
    Ok(par::sum_indices(x.nrows(), |i| {
        let rec = g.row(i) * b.transpose();
        (x.row(i) - rec).norm_squared()
    }))
}

/// Loss and exact parameter gradients of `‖X − g(X)·Bᵀ‖²_F`.
pub fn loss_gradients(enc: &FeedforwardEncoder, x: &DataMatrix, b: &DMatrix<f64>) -> Result<(f64, Gradients)> {
    let x = x.values();
    enc.check_input(x)?;
    if b.nrows() != x.ncols() || b.ncols() != enc.output_dim() {
        return Err(Error::Shape(format!(
            "B must be {}×{}, got {}×{}",
            x.ncols(),
            enc.output_dim(),
            b.nrows(),
            b.ncols()
        )));
    }
    let (loss, mut grads) = reduce_chunks(&[enc], x.nrows(), |r| {
        let xc = x.rows(r.start, r.len()).into_owned();
        let acts = enc.activations(&xc);
        let g = acts.last().expect("output layer");
        let resid = g * b.transpose() - &xc;
        let loss = resid.norm_squared();
        // ∂L/∂G = 2(GBᵀ − X)B
        let upstream = resid * b * 2.0;
        let (grads, _) = enc.backward(&acts, upstream);
        (loss, vec![grads])
    });
    Ok((loss, grads.pop().expect("one network")))
}

/// Evaluates `f` on fixed row chunks (possibly in parallel) and sums the
/// results in chunk order.
pub(crate) fn reduce_chunks<F>(nets: &[&Mlp], rows: usize, f: F) -> (f64, Vec<Gradients>)
where
    F: Fn(std::ops::Range<usize>) -> (f64, Vec<Gradients>) + Sync + Send,
{
    let parts = par::map_chunks(rows, f);
    let mut loss = 0.0;
    let mut total: Vec<Gradients> = nets.iter().map(|n| Gradients::zeros_like(n)).collect();
    for (l, gs) in parts {
        loss += l;
        for (t, g) in total.iter_mut().zip(&gs) {
            t.add_assign(g);
        }
    }
    (loss, total)
}

/// Shared gradient-descent loop over one or more jointly trained networks.
/// `objective` returns the loss and per-network gradients at the current
/// parameters; the trace records the loss before each update.
pub(crate) fn descend<F>(nets: &mut [Mlp], cfg: &TrainConfig, mut objective: F) -> Result<Vec<f64>>
where
    F: FnMut(&[Mlp]) -> (f64, Vec<Gradients>),
{
    cfg.validate()?;
    let mut velocity: Vec<Gradients> = nets.iter().map(Gradients::zeros_like).collect();
    let mut trace = Vec::with_capacity(cfg.epochs_per_outer);
    for epoch in 0..cfg.epochs_per_outer {
        let (loss, grads) = objective(nets);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        trace.push(loss);
        for ((net, v), g) in nets.iter_mut().zip(&mut velocity).zip(&grads) {
            v.momentum_update(g, cfg.momentum, cfg.learning_rate);
            net.apply_step(v);
        }
    }
    let finite = nets
        .iter()
        .flat_map(|n| n.layers.iter())
        .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()));
    if !finite {
        return Err(Error::Divergence {
            epoch: cfg.epochs_per_outer,
            loss: f64::NAN,
        });
    }
    Ok(trace)
}

/// Full-batch gradient descent with momentum on the NCA loss, `B` fixed.
/// Velocity starts at zero on every call.
pub fn train_encoder(
    enc: &FeedforwardEncoder,
    x: &DataMatrix,
    b: &DMatrix<f64>,
    cfg: &TrainConfig,
) -> Result<(FeedforwardEncoder, Vec<f64>)> {
    // shape errors surface here rather than mid-loop
    loss_gradients(enc, &x.rows(0..x.n_samples().min(1)), b)?;
    let mut nets = [enc.clone()];
    let trace = descend(&mut nets, cfg, |n| {
        let (loss, g) = loss_gradients(&n[0], x, b).expect("shapes checked");
        (loss, vec![g])
    })?;
    let [net] = nets;
    Ok((net, trace))
}

#[derive(Serialize, Deserialize)]
struct MlpRepr {
    layer_dims: Vec<usize>,
    /// Row-major `out × in` per layer.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
    hidden_activation: String,
    output_activation: String,
}

impl From<Mlp> for MlpRepr {
    fn from(net: Mlp) -> Self {
        Self {
            layer_dims: net.layer_dims(),
            weights: net
                .layers
                .iter()
                .map(|l| l.weights.transpose().iter().copied().collect())
                .collect(),
            biases: net.layers.iter().map(|l| l.bias.iter().copied().collect()).collect(),
            hidden_activation: "tanh".into(),
            output_activation: "identity".into(),
        }
    }
}

impl TryFrom<MlpRepr> for Mlp {
    type Error = Error;

    fn try_from(r: MlpRepr) -> Result<Self> {
        if r.hidden_activation != "tanh" || r.output_activation != "identity" {
            return Err(Error::Model(format!(
                "unsupported activations {}/{}",
                r.hidden_activation, r.output_activation
            )));
        }
        check_dims(&r.layer_dims)?;
        let n_layers = r.layer_dims.len() - 1;
        if r.weights.len() != n_layers || r.biases.len() != n_layers {
            return Err(Error::Model("layer count does not match layer_dims".into()));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for (l, dims) in r.layer_dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (dims[0], dims[1]);
            if r.weights[l].len() != fan_in * fan_out || r.biases[l].len() != fan_out {
                return Err(Error::Model(format!("layer {l} has the wrong number of parameters")));
            }
            layers.push(Layer {
                weights: DMatrix::from_row_slice(fan_out, fan_in, &r.weights[l]),
                bias: DVector::from_column_slice(&r.biases[l]),
            });
        }
        Mlp::from_layers(layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_data(rows: usize, cols: usize, seed: u64) -> DataMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DataMatrix::new(DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.5..1.5))).unwrap()
    }

    fn random_frame(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
        m.qr().q().columns(0, p).into_owned()
    }

    #[test]
    fn init_is_deterministic_with_zero_biases() {
        let a = init_encoder(&[4, 3, 2], 7).unwrap();
        let b = init_encoder(&[4, 3, 2], 7).unwrap();
        assert_eq!(a, b);
        assert!(a.layers().iter().all(|l| l.bias.iter().all(|&v| v == 0.0)));
        let limit = (6.0f64 / 7.0).sqrt();
        assert!(a.layers()[0].weights.iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn init_rejects_wide_output() {
        assert!(matches!(init_encoder(&[4, 2, 4], 1), Err(Error::Dimension(_))));
        assert!(matches!(init_encoder(&[4], 1), Err(Error::Dimension(_))));
    }

    #[test]
    fn zero_network_maps_to_zero() {
        let mut net = init_encoder(&[4, 3, 2], 1).unwrap();
        for l in &mut net.layers {
            l.weights.fill(0.0);
        }
        let g = forward(&net, &random_data(5, 4, 2)).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_layer_is_identity() {
        let net = Mlp::from_layers(vec![Layer {
            weights: DMatrix::identity(3, 3),
            bias: DVector::zeros(3),
        }])
        .unwrap();
        let x = random_data(6, 3, 3);
        assert_eq!(forward(&net, &x).unwrap(), *x.values());
    }

    #[test]
    fn hidden_layer_is_bounded() {
        let mut net = init_encoder(&[4, 3, 2], 5).unwrap();
        for w in net.layers[0].weights.iter_mut() {
            *w *= 50.0;
        }
        let hidden = Mlp::from_layers(vec![net.layers[0].clone(), Layer {
            weights: DMatrix::identity(3, 3),
            bias: DVector::zeros(3),
        }])
        .unwrap();
        let h = forward(&hidden, &random_data(20, 4, 1)).unwrap();
        assert!(h.iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn forward_shape_error() {
        let net = init_encoder(&[4, 3, 2], 1).unwrap();
        assert!(matches!(forward(&net, &random_data(3, 5, 1)), Err(Error::Shape(_))));
    }

    #[test]
    fn forward_commutes_with_row_permutation() {
        let net = init_encoder(&[5, 4, 2], 11).unwrap();
        let x = random_data(9, 5, 4);
        let g = forward(&net, &x).unwrap();
        let perm = [3usize, 0, 8, 1, 7, 2, 6, 4, 5];
        let xp = DataMatrix::new(DMatrix::from_fn(9, 5, |i, j| x.values()[(perm[i], j)])).unwrap();
        let gp = forward(&net, &xp).unwrap();
        for (i, &src) in perm.iter().enumerate() {
            assert_eq!(gp.row(i), g.row(src));
        }
    }

    #[test]
    fn loss_examples() {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let g = DMatrix::from_row_slice(1, 1, &[0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert_eq!(nca_loss(&x, &g, &b).unwrap(), 1.0);

        let x = random_data(7, 4, 9);
        let b = random_frame(4, 2, 3);
        let g = DMatrix::from_fn(7, 2, |i, j| (i + j) as f64 * 0.1);
        let exact = DataMatrix::new(&g * b.transpose()).unwrap();
        assert!(nca_loss(&exact, &g, &b).unwrap() < 1e-24);
        let zero = DMatrix::zeros(7, 2);
        assert!((nca_loss(&x, &zero, &b).unwrap() - x.values().norm_squared()).abs() < 1e-12);
        assert!(matches!(nca_loss(&x, &DMatrix::zeros(6, 2), &b), Err(Error::Shape(_))));
    }

    #[test]
    fn gradients_vanish_at_global_minimum() {
        let net = init_encoder(&[4, 3, 2], 3).unwrap();
        let inputs = random_data(6, 4, 8);
        let b = random_frame(4, 2, 5);
        let g = forward(&net, &inputs).unwrap();
        let x = DataMatrix::new(&g * b.transpose()).unwrap();
        // feed the same inputs, but demand the reconstruction it already produces
        let (loss, grads) = reduce_chunks(&[&net], 6, |r| {
            let xi = inputs.values().rows(r.start, r.len()).into_owned();
            let xt = x.values().rows(r.start, r.len()).into_owned();
            let acts = net.activations(&xi);
            let resid = acts.last().unwrap() * b.transpose() - &xt;
            let up = &resid * &b * 2.0;
            (resid.norm_squared(), vec![net.backward(&acts, up).0])
        });
        assert!(loss < 1e-24);
        assert!(grads[0].flatten().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn zero_epochs_is_a_no_op() {
        let net = init_encoder(&[4, 3, 2], 3).unwrap();
        let x = random_data(6, 4, 8);
        let b = random_frame(4, 2, 5);
        let cfg = TrainConfig {
            epochs_per_outer: 0,
            ..TrainConfig::default()
        };
        let (out, trace) = train_encoder(&net, &x, &b, &cfg).unwrap();
        assert_eq!(out, net);
        assert!(trace.is_empty());
    }

    #[test]
    fn training_decreases_loss_deterministically() {
        let net = init_encoder(&[5, 4, 2], 3).unwrap();
        let x = random_data(10, 5, 8);
        let b = random_frame(5, 2, 5);
        let cfg = TrainConfig {
            learning_rate: 1e-3,
            epochs_per_outer: 50,
            ..TrainConfig::default()
        };
        let (_, t1) = train_encoder(&net, &x, &b, &cfg).unwrap();
        let (_, t2) = train_encoder(&net, &x, &b, &cfg).unwrap();
        assert_eq!(t1, t2);
        assert!(t1.last().unwrap() <= t1.first().unwrap());
    }

    #[test]
    fn huge_step_reports_divergence() {
        let net = init_encoder(&[5, 4, 2], 3).unwrap();
        let x = DataMatrix::new(random_data(10, 5, 8).into_inner() * 1e3).unwrap();
        let b = random_frame(5, 2, 5);
        let cfg = TrainConfig {
            learning_rate: 10.0,
            epochs_per_outer: 500,
            ..TrainConfig::default()
        };
        assert!(matches!(train_encoder(&net, &x, &b, &cfg), Err(Error::Divergence { .. })));
    }

    #[test]
    fn serde_round_trip() {
        let net = init_encoder(&[6, 4, 3], 2).unwrap();
        let json = serde_json::to_string(&net).unwrap();
        assert!(json.contains("\"tanh\""));
        let back: Mlp = serde_json::from_str(&json).unwrap();
        assert_eq!(back, net);
    }
}
