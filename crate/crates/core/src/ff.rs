//! Shallow forward-forward models and greedy layer-wise pretraining.
//!
//! A shallow model is one weight matrix followed by ReLU. Its goodness on a
//! sample is the sum of squared hidden activities, and training pushes the
//! goodness above `theta` for positive rows and below it for negative rows
//! by minimising `softplus(theta - g)` (positive) or `softplus(g - theta)`
//! (negative), averaged over the batch.

use rand::seq::SliceRandom;

use crate::dataset::{EncodedMatrix, Polarity};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, fill_normal, matmul, matmul_tn, seeded_rng, sigmoid, Matrix};
use crate::train::{AdamConfig, AdamState};

pub const DEFAULT_THETA: f64 = 2.0;
const NORM_EPS: f64 = 1e-8;
const INIT_STD: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FFOptimizer {
    Adam,
    Sgd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FFLayerConfig {
    pub theta: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Divide each hidden vector by its length before it feeds the next
    /// shallow model. Off by default: the stack passes plain ReLU outputs.
    pub normalize_between: bool,
    pub optimizer: FFOptimizer,
}

impl Default for FFLayerConfig {
    fn default() -> Self {
        FFLayerConfig {
            theta: DEFAULT_THETA,
            epochs: 10,
            learning_rate: 1e-3,
            batch_size: 64,
            normalize_between: false,
            optimizer: FFOptimizer::Adam,
        }
    }
}

impl FFLayerConfig {
    pub fn new(theta: f64, epochs: usize, learning_rate: f64, batch_size: usize) -> Result<Self> {
        let cfg = FFLayerConfig {
            theta,
            epochs,
            learning_rate,
            batch_size,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("FF epochs must be at least 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("FF learning rate must be positive".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("FF batch size must be at least 1".into()));
        }
        if !self.theta.is_finite() {
            return Err(Error::Config("FF threshold must be finite".into()));
        }
        Ok(())
    }
}

/// One trained (or training) shallow FF model.
#[derive(Clone, Debug)]
pub struct FFLayer {
    pub weights: Matrix,
    pub config: FFLayerConfig,
    adam: AdamState,
}

impl FFLayer {
    pub fn new(weights: Matrix, config: FFLayerConfig) -> Result<Self> {
        config.validate()?;
        let adam = AdamState::new(
            &[weights.as_slice().len()],
            AdamConfig {
                learning_rate: config.learning_rate,
                ..Default::default()
            },
        )?;
        Ok(FFLayer {
            weights,
            config,
            adam,
        })
    }

    /// Normal(0, 0.1) weights drawn from `seed`.
    pub fn random(fan_in: usize, fan_out: usize, config: FFLayerConfig, seed: u64) -> Result<Self> {
        let w = fill_normal(fan_in, fan_out, 0.0, INIT_STD, &mut seeded_rng(seed));
        Self::new(w, config)
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        Ok(matmul(x, &self.weights)?.map(|v| v.max(0.0)))
    }
}

/// Per-row sum of squares.
pub fn goodness(hidden: &Matrix) -> Vec<f64> {
    hidden
        .row_iter()
        .map(|r| r.iter().map(|v| v * v).sum())
        .collect()
}

/// Probability that a row with goodness `g` is positive.
pub fn p_positive(g: f64, theta: f64) -> f64 {
    sigmoid(g - theta)
}

pub fn layer_normalize(hidden: &Matrix) -> Matrix {
    let mut out = hidden.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt() + NORM_EPS;
        row.iter_mut().for_each(|v| *v /= norm);
    }
    out
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Batch-mean FF loss and its gradient with respect to `weights`.
pub fn ff_loss_and_grad(
    weights: &Matrix,
    batch: &Matrix,
    polarity: &[Polarity],
    theta: f64,
) -> Result<(f64, Matrix)> {
    if batch.cols() != weights.rows() {
        return Err(Error::shape(
            "ff_layer_step",
            batch.shape(),
            weights.shape(),
        ));
    }
    if polarity.len() != batch.rows() {
        return Err(Error::shape(
            "ff_layer_step",
            batch.shape(),
            (polarity.len(), 1),
        ));
    }
    let b = batch.rows().max(1) as f64;
    let pre = matmul(batch, weights)?;
    let hidden = pre.map(|v| v.max(0.0));
    let g = goodness(&hidden);

    let mut loss = 0.0;
    let mut dz = hidden;
    for (i, (&gi, &pol)) in g.iter().zip(polarity).enumerate() {
        let (margin, target) = match pol {
            Polarity::Positive => (theta - gi, 1.0),
            Polarity::Negative => (gi - theta, 0.0),
        };
        loss += softplus(margin);
        let dg = (p_positive(gi, theta) - target) / b;
        // hidden is zero wherever the ReLU is inactive, so 2h already
        // carries the ReLU mask
        dz.row_mut(i).iter_mut().for_each(|h| *h *= 2.0 * dg);
    }
    Ok((loss / b, matmul_tn(batch, &dz)?))
}

/// One optimiser step on `batch`. Returns the loss before the step.
pub fn ff_layer_step(layer: &mut FFLayer, batch: &Matrix, polarity: &[Polarity]) -> Result<f64> {
    let (loss, grad) = ff_loss_and_grad(&layer.weights, batch, polarity, layer.config.theta)?;
    match layer.config.optimizer {
        FFOptimizer::Adam => {
            layer
                .adam
                .step(&mut [layer.weights.as_mut_slice()], &[grad.as_slice()])?;
        }
        FFOptimizer::Sgd => {
            let lr = layer.config.learning_rate;
            for (w, g) in layer.weights.as_mut_slice().iter_mut().zip(grad.as_slice()) {
                *w -= lr * g;
            }
        }
    }
    Ok(loss)
}

/// Trains `layer` for its configured number of epochs on shuffled
/// mini-batches. Returns the mean pre-step loss of each epoch.
pub fn train_ff_layer(
    layer: &mut FFLayer,
    input: &Matrix,
    polarity: &[Polarity],
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = seeded_rng(seed);
    let mut order: Vec<usize> = (0..input.rows()).collect();
    let mut losses = Vec::with_capacity(layer.config.epochs);
    for epoch in 0..layer.config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0;
        for (bi, idx) in order.chunks(layer.config.batch_size).enumerate() {
            let batch = input.select_rows(idx);
            let pol: Vec<Polarity> = idx.iter().map(|&i| polarity[i]).collect();
            let loss = ff_layer_step(layer, &batch, &pol)?;
            if !loss.is_finite() || !layer.weights.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    batch: bi,
                    what: "forward-forward loss",
                });
            }
            total += loss;
            batches += 1;
        }
        losses.push(total / batches.max(1) as f64);
    }
    Ok(losses)
}

/// Trained weights of a greedy FF stack plus each layer's epoch losses.
#[derive(Clone, Debug)]
pub struct PretrainedStack {
    pub weights: Vec<Matrix>,
    pub epoch_losses: Vec<Vec<f64>>,
}

/// Trains one shallow FF model per consecutive pair in `widths`. Model
/// `k + 1` sees the ReLU output of model `k` computed with its freshly
/// trained weights.
pub fn pretrain_stack(
    training: &EncodedMatrix,
    widths: &[usize],
    cfg: &FFLayerConfig,
    seed: u64,
) -> Result<Vec<Matrix>> {
    Ok(pretrain_stack_logged(training, widths, cfg, seed)?.weights)
}

pub fn pretrain_stack_logged(
    training: &EncodedMatrix,
    widths: &[usize],
    cfg: &FFLayerConfig,
    seed: u64,
) -> Result<PretrainedStack> {
    cfg.validate()?;
    if widths.first() != Some(&training.data.cols()) {
        return Err(Error::Config(format!(
            "FF stack input width {:?} does not match {} data columns",
            widths.first(),
            training.data.cols()
        )));
    }
    if widths.contains(&0) {
        return Err(Error::Config("FF widths must be positive".into()));
    }
    let mut input = training.data.clone();
    let mut weights = Vec::with_capacity(widths.len().saturating_sub(1));
    let mut epoch_losses = Vec::with_capacity(weights.capacity());
    for (k, pair) in widths.windows(2).enumerate() {
        let mut layer = FFLayer::random(
            pair[0],
            pair[1],
            cfg.clone(),
            derive_seed(seed, 2 * k as u64),
        )?;
        let losses = train_ff_layer(
            &mut layer,
            &input,
            &training.polarity,
            derive_seed(seed, 2 * k as u64 + 1),
        )?;
        input = layer.forward(&input)?;
        if cfg.normalize_between {
            input = layer_normalize(&input);
        }
        weights.push(layer.weights);
        epoch_losses.push(losses);
    }
    Ok(PretrainedStack {
        weights,
        epoch_losses,
    })
}
