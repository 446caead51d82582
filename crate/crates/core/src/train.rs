//! Reconstruction cost, ADAM and the mini-batch epoch loop.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;

use crate::dataset::EncodedMatrix;
use crate::error::{Error, Result};
use crate::meud::{backward, forward, Gradients, ModelParams};
use crate::numerics::{seeded_rng, Matrix};

/// `1/(2mn) · Σ (x - x̂)²`.
pub fn mse_cost(x: &Matrix, xhat: &Matrix) -> Result<f64> {
    x.same_shape("mse_cost", xhat)?;
    let denom = 2.0 * (x.rows() * x.cols()).max(1) as f64;
    let sum: f64 = x
        .as_slice()
        .iter()
        .zip(xhat.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / denom)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Bias-corrected first and second moment estimates, one buffer per
/// parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(lengths: &[usize], config: AdamConfig) -> Result<Self> {
        let ok = (0.0..1.0).contains(&config.beta1)
            && (0.0..1.0).contains(&config.beta2)
            && config.epsilon > 0.0
            && config.learning_rate > 0.0;
        if !ok {
            return Err(Error::Config(format!("invalid ADAM settings {config:?}")));
        }
        Ok(AdamState {
            first_moment: lengths.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: lengths.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
            config,
        })
    }

    pub fn for_params(params: &ModelParams, config: AdamConfig) -> Result<Self> {
        let lengths: Vec<usize> = params.slices().iter().map(|s| s.len()).collect();
        Self::new(&lengths, config)
    }

    /// One update of every tensor in `params` with the matching `grads`.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        let shapes_ok = params.len() == self.first_moment.len()
            && grads.len() == params.len()
            && params
                .iter()
                .zip(grads)
                .zip(&self.first_moment)
                .all(|((p, g), m)| p.len() == g.len() && p.len() == m.len());
        if !shapes_ok {
            return Err(Error::Config(
                "ADAM state does not match parameter shapes".into(),
            ));
        }
        self.t += 1;
        let AdamConfig {
            learning_rate: lr,
            beta1: b1,
            beta2: b2,
            epsilon: eps,
        } = self.config;
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for (((w, &gi), mi), vi) in p
                .iter_mut()
                .zip(g.iter())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mi = b1 * *mi + (1.0 - b1) * gi;
                *vi = b2 * *vi + (1.0 - b2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *w -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

pub fn adam_step(state: &mut AdamState, params: &mut ModelParams, grads: &Gradients) -> Result<()> {
    let g = grads.slices();
    state.step(&mut params.slices_mut(), &g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    /// Zero-based.
    pub epoch: usize,
    pub loss: f64,
    pub elapsed: Duration,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub epoch_loss: Vec<f64>,
    pub epoch_time: Vec<Duration>,
    pub steps: u64,
    pub params: ModelParams,
}

impl TrainReport {
    pub fn first_loss(&self) -> f64 {
        self.epoch_loss[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.epoch_loss.last().expect("at least one epoch")
    }
}

pub fn train(
    params: ModelParams,
    training: &EncodedMatrix,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    train_with(params, &training.data, cfg, |_| {})
}

/// Mini-batch ADAM on the reconstruction cost of `data`. The recorded
/// epoch loss is the row-weighted mean of the pre-step batch costs.
/// `on_epoch` is called after every epoch.
pub fn train_with(
    mut params: ModelParams,
    data: &Matrix,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainReport> {
    cfg.validate()?;
    if data.cols() != params.config.input_dim() {
        return Err(Error::shape(
            "train",
            data.shape(),
            (params.config.input_dim(), 0),
        ));
    }
    if data.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut adam = AdamState::for_params(
        &params,
        AdamConfig {
            learning_rate: cfg.learning_rate,
            ..Default::default()
        },
    )?;
    let mut rng = seeded_rng(cfg.seed);
    let mut order: Vec<usize> = (0..data.rows()).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    let mut epoch_time = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        if cfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut weighted = 0.0;
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch = if idx.len() == data.rows() && !cfg.shuffle {
                data.clone()
            } else {
                data.select_rows(idx)
            };
            let cache = forward(&params, &batch)?;
            let loss = mse_cost(&batch, cache.output())?;
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    batch: bi,
                    what: "reconstruction loss",
                });
            }
            let grads = backward(&params, &cache, &batch)?;
            adam_step(&mut adam, &mut params, &grads)?;
            if !params.is_finite() {
                return Err(Error::NonFinite {
                    epoch,
                    batch: bi,
                    what: "weights after update",
                });
            }
            weighted += loss * idx.len() as f64;
        }
        let stats = EpochStats {
            epoch,
            loss: weighted / data.rows() as f64,
            elapsed: start.elapsed(),
        };
        on_epoch(&stats);
        epoch_loss.push(stats.loss);
        epoch_time.push(stats.elapsed);
    }
    Ok(TrainReport {
        epoch_loss,
        epoch_time,
        steps: adam.t,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_training_matrix, synth_blobs};
    use crate::meud::{init_params, NetworkConfig, Variant};
    use crate::numerics::randn_matrix;

    #[test]
    fn cost_values() {
        let x = randn_matrix(5, 7, 0.0, 1.0, 1);
        assert_eq!(mse_cost(&x, &x).unwrap(), 0.0);
        let one = Matrix::filled(1, 1, 1.0);
        assert_eq!(mse_cost(&one, &Matrix::zeros(1, 1)).unwrap(), 0.5);
        let y = randn_matrix(5, 7, 0.0, 1.0, 2);
        let mut acc = 0.0;
        for i in 0..5 {
            for j in 0..7 {
                acc += (x.get(i, j) - y.get(i, j)).powi(2);
            }
        }
        assert!((mse_cost(&x, &y).unwrap() - acc / 70.0).abs() <= 1e-12);
        assert!(mse_cost(&x, &Matrix::zeros(5, 6)).is_err());
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut w = vec![0.3, -0.2];
        let mut st = AdamState::new(&[2], AdamConfig::default()).unwrap();
        st.step(&mut [&mut w], &[&[0.0, 0.0]]).unwrap();
        assert_eq!(w, vec![0.3, -0.2]);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn adam_first_step_is_lr_sized() {
        let cfg = AdamConfig::default();
        let mut w = vec![0.0, 0.0, 0.0];
        let g = [2.5, -1e-3, 40.0];
        let mut st = AdamState::new(&[3], cfg).unwrap();
        st.step(&mut [&mut w], &[&g]).unwrap();
        for (wi, gi) in w.iter().zip(g) {
            let expect = -cfg.learning_rate * gi / (gi.abs() + cfg.epsilon);
            assert!((wi - expect).abs() < 1e-12, "{wi} vs {expect}");
        }
    }

    #[test]
    fn adam_solves_quadratic() {
        // c (w - 3)^2 from w = 0, lr = 0.05; reference values come from an
        // independent scalar run of the textbook update
        let c = 2.0;
        let mut w = vec![0.0];
        let mut st = AdamState::new(
            &[1],
            AdamConfig {
                learning_rate: 0.05,
                ..Default::default()
            },
        )
        .unwrap();
        let mut at = Vec::new();
        for _ in 0..120 {
            let g = 2.0 * c * (w[0] - 3.0);
            st.step(&mut [&mut w], &[&[g]]).unwrap();
            at.push(w[0]);
        }
        assert!(
            (at[99] - 2.943_400_667_009_569_4).abs() <= 1e-12,
            "{}",
            at[99]
        );
        assert!(
            (at[119] - 2.998_250_871_777_77).abs() <= 1e-12,
            "{}",
            at[119]
        );
        assert!((at[119] - 3.0).abs() < 0.05);
    }

    #[test]
    fn adam_shape_mismatch() {
        let mut st = AdamState::new(&[2], AdamConfig::default()).unwrap();
        let mut w = vec![0.0; 3];
        assert!(st.step(&mut [&mut w], &[&[0.0; 3]]).is_err());
        assert!(AdamState::new(
            &[1],
            AdamConfig {
                beta1: 1.0,
                ..Default::default()
            }
        )
        .is_err());
    }

    fn setup(variant: Variant) -> (ModelParams, EncodedMatrix) {
        let ds = synth_blobs(4, 10, 16, 0.1, 3).unwrap();
        let enc = build_training_matrix(&ds, 3).unwrap();
        let cfg = NetworkConfig::from_meud_widths(&[16, 10, 6, 6, 16], variant, 3).unwrap();
        let ff = [Matrix::filled(16, 10, 0.05)];
        (init_params(&cfg, Some(&ff)).unwrap(), enc)
    }

    #[test]
    fn full_batch_single_step() {
        let (p, enc) = setup(Variant::Meud);
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: enc.rows(),
            ..Default::default()
        };
        let rep = train(p, &enc, &cfg).unwrap();
        assert_eq!(rep.steps, 1);
        assert_eq!(rep.epoch_loss.len(), 1);
        assert_eq!(rep.epoch_time.len(), 1);
    }

    #[test]
    fn reproducible_and_input_untouched() {
        let (p, enc) = setup(Variant::MeudFfCoop);
        let before = enc.clone();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 8,
            ..Default::default()
        };
        let a = train(p.clone(), &enc, &cfg).unwrap();
        let b = train(p, &enc, &cfg).unwrap();
        assert_eq!(a.epoch_loss, b.epoch_loss);
        assert_eq!(a.params, b.params);
        assert_eq!(enc, before);
    }

    #[test]
    fn diverging_run_reports_non_finite() {
        let (mut p, enc) = setup(Variant::Meud);
        if let crate::meud::Connection::Dense(w) = &mut p.connections[0] {
            w.as_mut_slice()[0] = f64::INFINITY;
        }
        let err = train(
            p,
            &enc,
            &TrainConfig {
                epochs: 1,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(
            matches!(
                err,
                Error::NonFinite {
                    epoch: 0,
                    batch: 0,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn config_violations() {
        let (p, enc) = setup(Variant::Meud);
        assert!(train(
            p.clone(),
            &enc,
            &TrainConfig {
                epochs: 0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(train(
            p,
            &enc,
            &TrainConfig {
                batch_size: 0,
                ..Default::default()
            }
        )
        .is_err());
    }
}
