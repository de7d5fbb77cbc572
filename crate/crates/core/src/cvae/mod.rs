//! Conditional variational autoencoder over 66-value frames (65 normalized
//! frame values plus the valence label).
//!
//! The encoder sees `[x, c]` and produces a diagonal Gaussian over a 3-D latent
//! code; the decoder sees `[z, c]` and reconstructs all 66 inputs through a
//! sigmoid. Hidden layers are `dense -> ReLU -> dropout`; the latent heads are
//! linear. The training objective is
//! `MSE(reconstruction, input) + beta * mean_batch(KL(q(z|x,c) || N(0, I)))`.

mod checkpoint;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, FORMAT_VERSION};
pub use train::{train, train_with, EpochStats, TrainReport};

use serde::{Deserialize, Serialize};

use crate::anim::FRAME_DIM;
use crate::error::{Error, Result};
use crate::nn::{
    mse, relu, relu_backward, sigmoid, sigmoid_backward, DenseGrads, DenseLayer, DropoutMask,
    Matrix, RngStream,
};
use crate::preprocess::NormalizationTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvaeConfig {
    pub input_dim: usize,
    pub feature_dim: usize,
    pub cond_dim: usize,
    pub latent_dim: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    pub recon_dim: usize,
    pub dropout_p: f64,
    pub beta: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for CvaeConfig {
    fn default() -> Self {
        CvaeConfig {
            input_dim: FRAME_DIM + 1,
            feature_dim: FRAME_DIM,
            cond_dim: 1,
            latent_dim: 3,
            encoder_hidden: vec![128, 512, 512, 128],
            decoder_hidden: vec![128, 512, 128],
            recon_dim: FRAME_DIM + 1,
            dropout_p: 0.5,
            beta: 0.001,
            lr: 1e-4,
            epochs: 250,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl CvaeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("cvae config: {m}")));
        if self.latent_dim != 3 {
            return bad("latent_dim must be 3");
        }
        if self.cond_dim != 1 {
            return bad("cond_dim must be 1");
        }
        if self.feature_dim != FRAME_DIM || self.input_dim != self.feature_dim + self.cond_dim {
            return bad("input_dim must be feature_dim + cond_dim = 66");
        }
        if self.recon_dim != self.input_dim {
            return bad("recon_dim must equal input_dim");
        }
        if self.encoder_hidden.is_empty() || self.decoder_hidden.is_empty() {
            return bad("hidden stacks must be non-empty");
        }
        if self.encoder_hidden.iter().chain(&self.decoder_hidden).any(|&w| w == 0) {
            return bad("hidden widths must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad("dropout_p must be in [0, 1)");
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("beta must be a non-negative number");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        Ok(())
    }
}

/// Parameters of the diagonal Gaussian posterior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentParams {
    pub mu: [f64; 3],
    pub log_var: [f64; 3],
}

impl LatentParams {
    pub fn sigma(&self) -> [f64; 3] {
        self.log_var.map(|lv| (lv / 2.0).exp())
    }
}

/// `z = mu + exp(log_var / 2) * noise`.
pub fn reparameterize(params: &LatentParams, noise: &[f64; 3]) -> [f64; 3] {
    let mut z = [0.0; 3];
    for d in 0..3 {
        z[d] = params.mu[d] + (params.log_var[d] / 2.0).exp() * noise[d];
    }
    z
}

/// Gradients of a loss w.r.t. `mu` and `log_var` given its gradient w.r.t. `z`.
pub fn reparameterize_backward(
    params: &LatentParams,
    noise: &[f64; 3],
    grad_z: &[f64; 3],
) -> ([f64; 3], [f64; 3]) {
    let mut g_lv = [0.0; 3];
    for d in 0..3 {
        g_lv[d] = grad_z[d] * 0.5 * (params.log_var[d] / 2.0).exp() * noise[d];
    }
    (*grad_z, g_lv)
}

/// Closed-form KL divergence from `N(mu, sigma^2)` to `N(0, I)`, in nats.
pub fn kl_divergence(params: &LatentParams) -> f64 {
    kl_terms(&params.mu, &params.log_var)
}

fn kl_terms(mu: &[f64], log_var: &[f64]) -> f64 {
    -0.5 * mu
        .iter()
        .zip(log_var)
        .map(|(m, lv)| 1.0 + lv - m * m - lv.exp())
        .sum::<f64>()
}

/// Stochastic inputs of one training forward pass: reparameterization noise
/// and one dropout mask per hidden layer (`None` = no dropout).
#[derive(Debug, Clone)]
pub struct Noise {
    pub eps: Matrix,
    pub encoder_masks: Vec<Option<DropoutMask>>,
    pub decoder_masks: Vec<Option<DropoutMask>>,
}

impl Noise {
    pub fn sample(config: &CvaeConfig, batch: usize, rng: &mut RngStream) -> Self {
        let masks = |widths: &[usize], rng: &mut RngStream| -> Vec<Option<DropoutMask>> {
            widths
                .iter()
                .map(|&w| {
                    (config.dropout_p > 0.0)
                        .then(|| DropoutMask::sample(batch, w, config.dropout_p, rng))
                })
                .collect()
        };
        let encoder_masks = masks(&config.encoder_hidden, rng);
        let decoder_masks = masks(&config.decoder_hidden, rng);
        let eps = Matrix::from_vec(
            batch,
            config.latent_dim,
            (0..batch * config.latent_dim).map(|_| rng.normal()).collect(),
        )
        .expect("sized");
        Noise {
            eps,
            encoder_masks,
            decoder_masks,
        }
    }

    /// Eval-mode inputs: `z = mu`, no dropout.
    pub fn none(config: &CvaeConfig, batch: usize) -> Self {
        Noise {
            eps: Matrix::zeros(batch, config.latent_dim),
            encoder_masks: vec![None; config.encoder_hidden.len()],
            decoder_masks: vec![None; config.decoder_hidden.len()],
        }
    }
}

/// Reconstruction, KL (mean over batch, unweighted) and `recon + beta * kl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

/// Gradients for every parameter of a [`CvaeModel`].
#[derive(Debug, Clone)]
pub struct CvaeGrads {
    pub encoder: Vec<DenseGrads>,
    pub mu_head: DenseGrads,
    pub logvar_head: DenseGrads,
    pub decoder: Vec<DenseGrads>,
    pub recon: DenseGrads,
}

impl CvaeGrads {
    /// Flat views in [`CvaeModel::parameters_mut`] order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for g in self
            .encoder
            .iter()
            .chain([&self.mu_head, &self.logvar_head])
            .chain(&self.decoder)
            .chain([&self.recon])
        {
            out.push(g.weights.data());
            out.push(&g.bias[..]);
        }
        out
    }
}

struct HiddenTrace {
    input: Matrix,
    pre: Matrix,
}

struct Trace {
    encoder: Vec<HiddenTrace>,
    hidden: Matrix,
    mu: Matrix,
    log_var: Matrix,
    decoder: Vec<HiddenTrace>,
    recon_input: Matrix,
    output: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvaeModel {
    pub config: CvaeConfig,
    pub encoder: Vec<DenseLayer>,
    pub mu_head: DenseLayer,
    pub logvar_head: DenseLayer,
    pub decoder: Vec<DenseLayer>,
    /// Sigmoid reconstruction layer.
    pub recon: DenseLayer,
    pub normalization: NormalizationTable,
}

impl CvaeModel {
    /// Xavier-uniform weights and zero biases, drawn from `rng`.
    pub fn new(
        config: CvaeConfig,
        normalization: NormalizationTable,
        rng: &mut RngStream,
    ) -> Result<Self> {
        config.validate()?;
        let mut encoder = Vec::new();
        let mut fan_in = config.input_dim;
        for &w in &config.encoder_hidden {
            encoder.push(DenseLayer::xavier_uniform(fan_in, w, rng));
            fan_in = w;
        }
        let mu_head = DenseLayer::xavier_uniform(fan_in, config.latent_dim, rng);
        let logvar_head = DenseLayer::xavier_uniform(fan_in, config.latent_dim, rng);
        let mut decoder = Vec::new();
        let mut fan_in = config.latent_dim + config.cond_dim;
        for &w in &config.decoder_hidden {
            decoder.push(DenseLayer::xavier_uniform(fan_in, w, rng));
            fan_in = w;
        }
        let recon = DenseLayer::xavier_uniform(fan_in, config.recon_dim, rng);
        Ok(CvaeModel {
            config,
            encoder,
            mu_head,
            logvar_head,
            decoder,
            recon,
            normalization,
        })
    }

    /// Model seeded from `config.seed` (initialization stream).
    pub fn from_seed(config: CvaeConfig, normalization: NormalizationTable) -> Result<Self> {
        let mut rng = RngStream::new(config.seed).fork(INIT_STREAM);
        Self::new(config, normalization, &mut rng)
    }

    pub fn layers(&self) -> impl Iterator<Item = &DenseLayer> {
        self.encoder
            .iter()
            .chain([&self.mu_head, &self.logvar_head])
            .chain(&self.decoder)
            .chain([&self.recon])
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut DenseLayer> {
        self.encoder
            .iter_mut()
            .chain([&mut self.mu_head, &mut self.logvar_head])
            .chain(self.decoder.iter_mut())
            .chain([&mut self.recon])
    }

    /// Weights and bias of each layer, flattened, in a fixed order.
    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for l in self.layers_mut() {
            out.push(l.weights.data_mut());
            out.push(&mut l.bias[..]);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.layers()
            .map(|l| l.weights.data().len() + l.bias.len())
            .sum()
    }

    /// Zeroes the weights that read the valence label in both encoder and decoder.
    pub fn ablate_label(&mut self) {
        let enc_row = self.config.feature_dim;
        self.encoder[0].weights.row_mut(enc_row).fill(0.0);
        let dec_row = self.config.latent_dim;
        self.decoder[0].weights.row_mut(dec_row).fill(0.0);
    }

    fn hidden_stack(
        layers: &[DenseLayer],
        masks: &[Option<DropoutMask>],
        mut x: Matrix,
        traces: &mut Vec<HiddenTrace>,
    ) -> Result<Matrix> {
        for (layer, mask) in layers.iter().zip(masks) {
            let pre = layer.forward(&x)?;
            let mut act = relu(&pre);
            if let Some(m) = mask {
                act = m.forward(&act)?;
            }
            traces.push(HiddenTrace { input: x, pre });
            x = act;
        }
        Ok(x)
    }

    fn hidden_backward(
        layers: &[DenseLayer],
        masks: &[Option<DropoutMask>],
        traces: &[HiddenTrace],
        mut grad: Matrix,
    ) -> Result<(Matrix, Vec<DenseGrads>)> {
        let mut grads = Vec::with_capacity(layers.len());
        for ((layer, mask), t) in layers.iter().zip(masks).zip(traces).rev() {
            if let Some(m) = mask {
                grad = m.backward(&grad)?;
            }
            grad = relu_backward(&t.pre, &grad)?;
            let (g_in, g) = layer.backward(&t.input, &grad)?;
            grads.push(g);
            grad = g_in;
        }
        grads.reverse();
        Ok((grad, grads))
    }

    fn forward_trace(&self, batch: &Matrix, noise: &Noise) -> Result<Trace> {
        let cfg = &self.config;
        if batch.cols() != cfg.input_dim {
            return Err(Error::Shape(format!(
                "batch has {} columns, model expects {}",
                batch.cols(),
                cfg.input_dim
            )));
        }
        if noise.eps.shape() != (batch.rows(), cfg.latent_dim) {
            return Err(Error::Shape("noise does not match batch".into()));
        }
        let mut enc_traces = Vec::with_capacity(self.encoder.len());
        let hidden =
            Self::hidden_stack(&self.encoder, &noise.encoder_masks, batch.clone(), &mut enc_traces)?;
        let mu = self.mu_head.forward(&hidden)?;
        let log_var = self.logvar_head.forward(&hidden)?;
        let mut z = mu.clone();
        for r in 0..z.rows() {
            for d in 0..cfg.latent_dim {
                let sd = (log_var.get(r, d) / 2.0).exp();
                z.set(r, d, mu.get(r, d) + sd * noise.eps.get(r, d));
            }
        }
        let cond = batch.columns(cfg.feature_dim, cfg.input_dim);
        let dec_in = z.hstack(&cond)?;
        let mut dec_traces = Vec::with_capacity(self.decoder.len());
        let recon_input =
            Self::hidden_stack(&self.decoder, &noise.decoder_masks, dec_in, &mut dec_traces)?;
        let output = sigmoid(&self.recon.forward(&recon_input)?);
        Ok(Trace {
            encoder: enc_traces,
            hidden,
            mu,
            log_var,
            decoder: dec_traces,
            recon_input,
            output,
        })
    }

    fn kl_mean(&self, mu: &Matrix, log_var: &Matrix) -> f64 {
        let b = mu.rows();
        (0..b).map(|r| kl_terms(mu.row(r), log_var.row(r))).sum::<f64>() / b as f64
    }

    /// Loss of a batch of 66-value rows under the given stochastic inputs.
    pub fn loss(&self, batch: &Matrix, noise: &Noise) -> Result<LossParts> {
        let t = self.forward_trace(batch, noise)?;
        let (recon, _) = mse(&t.output, batch)?;
        let kl = self.kl_mean(&t.mu, &t.log_var);
        Ok(LossParts {
            total: recon + self.config.beta * kl,
            recon,
            kl,
        })
    }

    /// Loss and exact gradients for every parameter.
    pub fn loss_and_grads(&self, batch: &Matrix, noise: &Noise) -> Result<(LossParts, CvaeGrads)> {
        let cfg = &self.config;
        let t = self.forward_trace(batch, noise)?;
        let (recon, g_out) = mse(&t.output, batch)?;
        let kl = self.kl_mean(&t.mu, &t.log_var);
        let parts = LossParts {
            total: recon + cfg.beta * kl,
            recon,
            kl,
        };

        let g_pre = sigmoid_backward(&t.output, &g_out)?;
        let (g_h, recon_g) = self.recon.backward(&t.recon_input, &g_pre)?;
        let (g_dec_in, decoder_g) =
            Self::hidden_backward(&self.decoder, &noise.decoder_masks, &t.decoder, g_h)?;

        let b = batch.rows() as f64;
        let mut g_mu = Matrix::zeros(batch.rows(), cfg.latent_dim);
        let mut g_lv = Matrix::zeros(batch.rows(), cfg.latent_dim);
        for r in 0..batch.rows() {
            let params = LatentParams {
                mu: [t.mu.get(r, 0), t.mu.get(r, 1), t.mu.get(r, 2)],
                log_var: [t.log_var.get(r, 0), t.log_var.get(r, 1), t.log_var.get(r, 2)],
            };
            let eps = [noise.eps.get(r, 0), noise.eps.get(r, 1), noise.eps.get(r, 2)];
            let g_z = [g_dec_in.get(r, 0), g_dec_in.get(r, 1), g_dec_in.get(r, 2)];
            let (gm, gl) = reparameterize_backward(&params, &eps, &g_z);
            for d in 0..cfg.latent_dim {
                let kl_mu = params.mu[d] / b;
                let kl_lv = 0.5 * (params.log_var[d].exp() - 1.0) / b;
                g_mu.set(r, d, gm[d] + cfg.beta * kl_mu);
                g_lv.set(r, d, gl[d] + cfg.beta * kl_lv);
            }
        }
        let (g_h_mu, mu_g) = self.mu_head.backward(&t.hidden, &g_mu)?;
        let (g_h_lv, lv_g) = self.logvar_head.backward(&t.hidden, &g_lv)?;
        let mut g_hidden = g_h_mu;
        for (a, b) in g_hidden.data_mut().iter_mut().zip(g_h_lv.data()) {
            *a += b;
        }
        let (_, encoder_g) =
            Self::hidden_backward(&self.encoder, &noise.encoder_masks, &t.encoder, g_hidden)?;

        Ok((
            parts,
            CvaeGrads {
                encoder: encoder_g,
                mu_head: mu_g,
                logvar_head: lv_g,
                decoder: decoder_g,
                recon: recon_g,
            },
        ))
    }

    /// Eval-mode posterior parameters for a batch of 66-value rows.
    pub fn encode_batch(&self, batch: &Matrix) -> Result<(Matrix, Matrix)> {
        let noise = Noise::none(&self.config, batch.rows());
        let mut traces = Vec::new();
        let hidden =
            Self::hidden_stack(&self.encoder, &noise.encoder_masks, batch.clone(), &mut traces)?;
        let mu = self.mu_head.forward(&hidden)?;
        let log_var = self.logvar_head.forward(&hidden)?;
        if !(mu.is_finite() && log_var.is_finite()) {
            return Err(Error::NonFinite("encoder"));
        }
        Ok((mu, log_var))
    }

    /// Eval-mode encoding of one normalized frame `x` with label `c`.
    pub fn encode(&self, x: &[f64], c: f64) -> Result<LatentParams> {
        if x.len() != self.config.feature_dim {
            return Err(Error::Shape(format!(
                "encode expects {} features, got {}",
                self.config.feature_dim,
                x.len()
            )));
        }
        let mut row = x.to_vec();
        row.push(c);
        let (mu, lv) = self.encode_batch(&Matrix::row_vector(&row))?;
        Ok(LatentParams {
            mu: [mu.get(0, 0), mu.get(0, 1), mu.get(0, 2)],
            log_var: [lv.get(0, 0), lv.get(0, 1), lv.get(0, 2)],
        })
    }

    /// Eval-mode decoding of `[z, c]` rows into 66 values in (0, 1).
    pub fn decode_batch(&self, zc: &Matrix) -> Result<Matrix> {
        let expected = self.config.latent_dim + self.config.cond_dim;
        if zc.cols() != expected {
            return Err(Error::Shape(format!(
                "decoder expects {expected} inputs, got {}",
                zc.cols()
            )));
        }
        let noise = Noise::none(&self.config, zc.rows());
        let mut traces = Vec::new();
        let h = Self::hidden_stack(&self.decoder, &noise.decoder_masks, zc.clone(), &mut traces)?;
        let out = sigmoid(&self.recon.forward(&h)?);
        if !out.is_finite() {
            return Err(Error::NonFinite("decoder"));
        }
        Ok(out)
    }

    pub fn decode(&self, z: &[f64; 3], c: f64) -> Result<Vec<f64>> {
        let row = [z[0], z[1], z[2], c];
        Ok(self.decode_batch(&Matrix::row_vector(&row))?.into_vec())
    }
}

pub(crate) const INIT_STREAM: u64 = 1;
pub(crate) const TRAIN_STREAM: u64 = 2;
