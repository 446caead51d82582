use super::band::BandWeights;
use super::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::numerics::{fill_normal, matmul, matmul_nt, matmul_tn, seeded_rng, Matrix};

/// Standard deviation of every randomly initialized weight.
pub const INIT_STD: f64 = 0.1;

/// Weights between two consecutive layers.
#[derive(Clone, Debug, PartialEq)]
pub enum Connection {
    Dense(Matrix),
    Band(BandWeights),
}

impl Connection {
    pub fn in_dim(&self) -> usize {
        match self {
            Connection::Dense(w) => w.rows(),
            Connection::Band(b) => b.size(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Connection::Dense(w) => w.cols(),
            Connection::Band(b) => b.size(),
        }
    }

    pub fn num_params(&self) -> usize {
        match self {
            Connection::Dense(w) => w.as_slice().len(),
            Connection::Band(b) => b.num_params(),
        }
    }

    /// `y · W`.
    pub fn apply(&self, y: &Matrix) -> Result<Matrix> {
        match self {
            Connection::Dense(w) => matmul(y, w),
            Connection::Band(b) => b.apply(y),
        }
    }

    /// `delta · Wᵀ`.
    pub fn apply_transpose(&self, delta: &Matrix) -> Result<Matrix> {
        match self {
            Connection::Dense(w) => matmul_nt(delta, w),
            Connection::Band(b) => b.apply_transpose(delta),
        }
    }

    /// Weight gradient for input `y` and pre-activation gradient `delta`.
    pub fn gradient(&self, y: &Matrix, delta: &Matrix) -> Result<Connection> {
        Ok(match self {
            Connection::Dense(_) => Connection::Dense(matmul_tn(y, delta)?),
            Connection::Band(b) => Connection::Band(b.gradient(y, delta)?),
        })
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            Connection::Dense(w) => w.clone(),
            Connection::Band(b) => b.to_dense(),
        }
    }

    pub fn zeros_like(&self) -> Connection {
        match self {
            Connection::Dense(w) => Connection::Dense(Matrix::zeros(w.rows(), w.cols())),
            Connection::Band(b) => Connection::Band(b.zeros_like()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        match self {
            Connection::Dense(w) => vec![w.as_slice()],
            Connection::Band(b) => b.slices().to_vec(),
        }
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Connection::Dense(w) => vec![w.as_mut_slice()],
            Connection::Band(b) => b.slices_mut().into_iter().collect(),
        }
    }
}

/// All weights of one network, connection `k` joining layers `k` and
/// `k + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub config: NetworkConfig,
    pub connections: Vec<Connection>,
}

/// Same layout as [`ModelParams`], holding derivatives of the cost.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub connections: Vec<Connection>,
}

impl ModelParams {
    /// Checks that connection shapes chain through the configured widths.
    pub fn new(config: NetworkConfig, connections: Vec<Connection>) -> Result<Self> {
        config.validate()?;
        let w = &config.widths;
        if connections.len() + 1 != w.len() {
            return Err(Error::Config(format!(
                "{} connections for {} layers",
                connections.len(),
                w.len()
            )));
        }
        for (k, c) in connections.iter().enumerate() {
            if c.in_dim() != w[k] || c.out_dim() != w[k + 1] {
                return Err(Error::shape(
                    "ModelParams",
                    (w[k], w[k + 1]),
                    (c.in_dim(), c.out_dim()),
                ));
            }
            let is_coop = config.coop_connection() == Some(k);
            match c {
                Connection::Band(b) if !is_coop || b.ring != config.ring => {
                    return Err(Error::Config(format!("unexpected band at connection {k}")))
                }
                Connection::Dense(_) if is_coop => {
                    return Err(Error::Config(format!("connection {k} must be a band")))
                }
                _ => {}
            }
        }
        Ok(ModelParams {
            config,
            connections,
        })
    }

    /// Dense matrices in order, skipping the cooperation band.
    pub fn dense_weights(&self) -> impl Iterator<Item = &Matrix> {
        self.connections.iter().filter_map(|c| match c {
            Connection::Dense(w) => Some(w),
            Connection::Band(_) => None,
        })
    }

    /// The cooperation band, for the `*_Coop` variants.
    pub fn coop(&self) -> Option<&BandWeights> {
        self.connections.iter().find_map(|c| match c {
            Connection::Band(b) => Some(b),
            Connection::Dense(_) => None,
        })
    }

    pub fn num_params(&self) -> usize {
        self.connections.iter().map(Connection::num_params).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.connections.iter().all(Connection::is_finite)
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            connections: self
                .connections
                .iter()
                .map(Connection::zeros_like)
                .collect(),
        }
    }

    /// Flat views of every weight. [`Gradients::slices`] yields the
    /// matching views in the same order.
    pub fn slices(&self) -> Vec<&[f64]> {
        self.connections
            .iter()
            .flat_map(Connection::slices)
            .collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.connections
            .iter_mut()
            .flat_map(Connection::slices_mut)
            .collect()
    }
}

impl Gradients {
    pub fn slices(&self) -> Vec<&[f64]> {
        self.connections
            .iter()
            .flat_map(Connection::slices)
            .collect()
    }
}

/// Initial weights for `cfg`.
///
/// Every matrix is drawn from Normal(0, 0.1) in connection order from a
/// generator seeded with `cfg.seed`. For the FF variants the leading
/// connections are replaced by `ff_weights` (one matrix per pretrained
/// connection, at most up to the bottleneck); the bottleneck-to-latent and
/// latent-to-output weights are always random.
pub fn init_params(cfg: &NetworkConfig, ff_weights: Option<&[Matrix]>) -> Result<ModelParams> {
    cfg.validate()?;
    let pretrained = match (cfg.variant.uses_ff(), ff_weights) {
        (true, Some(w)) => w,
        (true, None) => {
            return Err(Error::Config(format!(
                "{} needs forward-forward pretrained weights",
                cfg.variant
            )))
        }
        (false, _) => &[],
    };
    let encoder = cfg.encoder_widths();
    if pretrained.len() >= encoder.len() {
        return Err(Error::Config(format!(
            "{} pretrained matrices but only {} encoder connections",
            pretrained.len(),
            encoder.len() - 1
        )));
    }
    for (k, w) in pretrained.iter().enumerate() {
        if w.shape() != (encoder[k], encoder[k + 1]) {
            return Err(Error::shape(
                "init_params",
                (encoder[k], encoder[k + 1]),
                w.shape(),
            ));
        }
    }

    let mut rng = seeded_rng(cfg.seed);
    let coop = cfg.coop_connection();
    let connections = cfg
        .widths
        .windows(2)
        .enumerate()
        .map(|(k, pair)| {
            let conn = if coop == Some(k) {
                Connection::Band(BandWeights::random(pair[0], cfg.ring, INIT_STD, &mut rng))
            } else {
                Connection::Dense(fill_normal(pair[0], pair[1], 0.0, INIT_STD, &mut rng))
            };
            match pretrained.get(k) {
                Some(w) => Connection::Dense(w.clone()),
                None => conn,
            }
        })
        .collect();
    ModelParams::new(cfg.clone(), connections)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meud::Variant;

    fn cfg(variant: Variant) -> NetworkConfig {
        NetworkConfig::from_meud_widths(&[12, 8, 4, 4, 12], variant, 17).unwrap()
    }

    #[test]
    fn plain_meud_is_random_and_deterministic() {
        let a = init_params(&cfg(Variant::Meud), None).unwrap();
        assert_eq!(a, init_params(&cfg(Variant::Meud), None).unwrap());
        assert!(a.coop().is_none());
        assert_eq!(a.dense_weights().count(), 4);
        let all: Vec<f64> = a.slices().concat();
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        assert!(mean.abs() < 0.05);
    }

    #[test]
    fn ff_coop_keeps_tail_random() {
        let ff = vec![Matrix::filled(12, 8, 0.5), Matrix::filled(8, 4, 0.25)];
        let p = init_params(&cfg(Variant::MeudFfCoop), Some(&ff)).unwrap();
        assert_eq!(p.connections[0], Connection::Dense(ff[0].clone()));
        assert_eq!(p.connections[1], Connection::Dense(ff[1].clone()));
        let coop = init_params(&cfg(Variant::MeudCoop), None).unwrap();
        // the random tail uses the same stream positions as the plain init
        assert_eq!(p.connections[2], coop.connections[2]);
        assert_eq!(p.connections[3], coop.connections[3]);
        assert!(matches!(p.connections[2], Connection::Band(_)));
    }

    #[test]
    fn ff_shape_errors() {
        let wrong = vec![Matrix::zeros(12, 7)];
        assert!(init_params(&cfg(Variant::MeudFf), Some(&wrong)).is_err());
        assert!(init_params(&cfg(Variant::MeudFf), None).is_err());
        let too_many = vec![
            Matrix::zeros(12, 8),
            Matrix::zeros(8, 4),
            Matrix::zeros(4, 4),
        ];
        assert!(init_params(&cfg(Variant::MeudFf), Some(&too_many)).is_err());
        let partial = vec![Matrix::zeros(12, 8)];
        assert!(init_params(&cfg(Variant::MeudFf), Some(&partial)).is_ok());
    }

    #[test]
    fn baseline_is_dense_palindrome() {
        let p = init_params(&cfg(Variant::BaselineAE), None).unwrap();
        assert_eq!(p.connections.len(), 4);
        assert_eq!(p.connections[2].to_dense().shape(), (4, 8));
    }
}
