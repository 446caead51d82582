use super::params::{Connection, Gradients, ModelParams};
use crate::error::{Error, Result};
use crate::numerics::{Activation, Matrix};

/// Pre-activations `X(k)` and outputs `Y(k)` of every layer.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationCache {
    pub pre: Vec<Matrix>,
    pub post: Vec<Matrix>,
}

impl ActivationCache {
    pub fn output(&self) -> &Matrix {
        self.post
            .last()
            .expect("cache has at least the input layer")
    }
}

pub fn forward(params: &ModelParams, x: &Matrix) -> Result<ActivationCache> {
    let cfg = &params.config;
    if x.cols() != cfg.input_dim() {
        return Err(Error::shape("forward", x.shape(), (cfg.input_dim(), 0)));
    }
    let mut pre = Vec::with_capacity(cfg.num_layers());
    let mut post = Vec::with_capacity(cfg.num_layers());
    pre.push(x.clone());
    post.push(x.clone());
    for (k, conn) in params.connections.iter().enumerate() {
        let z = conn.apply(&post[k])?;
        let act = cfg.activation(k + 1);
        post.push(z.map(|v| act.apply(v)));
        pre.push(z);
    }
    Ok(ActivationCache { pre, post })
}

/// Latent-layer output: the `m x r` embedding, entries in (0, 1).
pub fn extract_embedding(params: &ModelParams, x: &Matrix) -> Result<Matrix> {
    let latent = params.config.latent_index();
    let cfg = &params.config;
    if x.cols() != cfg.input_dim() {
        return Err(Error::shape(
            "extract_embedding",
            x.shape(),
            (cfg.input_dim(), 0),
        ));
    }
    let mut y = x.clone();
    for (k, conn) in params.connections[..latent].iter().enumerate() {
        let act = cfg.activation(k + 1);
        y = conn.apply(&y)?.map(|v| act.apply(v));
    }
    Ok(y)
}

pub fn reconstruct(params: &ModelParams, x: &Matrix) -> Result<Matrix> {
    Ok(forward(params, x)?.post.pop().expect("non-empty cache"))
}

/// Exact gradient of `C = 1/(2mn) · Σ (x - x̂)²` with respect to every
/// weight, given the cache produced by `forward(params, x)`.
pub fn backward(params: &ModelParams, cache: &ActivationCache, x: &Matrix) -> Result<Gradients> {
    let cfg = &params.config;
    let layers = cfg.num_layers();
    if cache.pre.len() != layers || cache.post.len() != layers {
        return Err(Error::Config(
            "stale activation cache: wrong layer count".into(),
        ));
    }
    for (k, &w) in cfg.widths.iter().enumerate() {
        let expect = (x.rows(), w);
        if cache.pre[k].shape() != expect || cache.post[k].shape() != expect {
            return Err(Error::shape("backward", expect, cache.post[k].shape()));
        }
    }
    let out = cache.output();
    let scale = 1.0 / (x.rows() * x.cols()).max(1) as f64;
    let dy = out.zip_map(x, |xh, xv| (xh - xv) * scale)?;
    let mut delta =
        activation_backward(cfg.activation(layers - 1), &dy, &cache.pre[layers - 1], out)?;

    let mut grads: Vec<Option<Connection>> = vec![None; params.connections.len()];
    for k in (0..params.connections.len()).rev() {
        let conn = &params.connections[k];
        grads[k] = Some(conn.gradient(&cache.post[k], &delta)?);
        if k > 0 {
            let dy = conn.apply_transpose(&delta)?;
            delta = activation_backward(cfg.activation(k), &dy, &cache.pre[k], &cache.post[k])?;
        }
    }
    Ok(Gradients {
        connections: grads.into_iter().map(|g| g.expect("filled")).collect(),
    })
}

fn activation_backward(
    act: Activation,
    dy: &Matrix,
    pre: &Matrix,
    post: &Matrix,
) -> Result<Matrix> {
    match act {
        Activation::Identity => Ok(dy.clone()),
        Activation::Relu => dy.zip_map(pre, |d, z| if z > 0.0 { d } else { 0.0 }),
        Activation::Sigmoid => dy.zip_map(post, |d, s| d * s * (1.0 - s)),
        Activation::ReluGrad | Activation::SigmoidGrad => {
            unreachable!("layers only use identity, ReLU and sigmoid")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meud::{init_params, NetworkConfig, Variant};
    use crate::numerics::sigmoid;

    #[test]
    fn zero_input_propagation() {
        for v in Variant::ALL {
            let cfg = NetworkConfig::from_meud_widths(&[12, 8, 4, 4, 12], v, 1).unwrap();
            let ff = [Matrix::filled(12, 8, 0.1)];
            let p = init_params(&cfg, Some(&ff)).unwrap();
            let c = forward(&p, &Matrix::zeros(3, 12)).unwrap();
            let latent = &c.post[cfg.latent_index()];
            assert!(latent.as_slice().iter().all(|&v| v == 0.5));
            for (k, m) in c.post.iter().enumerate() {
                assert_eq!(m.shape(), (3, cfg.widths[k]));
            }
            // 0.5-valued latent feeds the decoder, so only the pure chain
            // from a zero input stays zero before the latent layer
            assert!(c.post[1].as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn hand_computed_two_layer_pass() {
        // 2-2-2-2 MEUD: input -> bottleneck (relu) -> latent (sigmoid) -> output (relu)
        let cfg = NetworkConfig {
            widths: vec![3, 2, 2, 3],
            variant: Variant::Meud,
            seed: 0,
            ring: false,
        };
        let w0 = Matrix::from_rows(&[[1.0, -1.0], [0.5, 2.0], [0.0, 1.0]]).unwrap();
        let w1 = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 2.0]]).unwrap();
        let w2 = Matrix::from_rows(&[[1.0, -2.0, 0.5], [2.0, 1.0, -1.0]]).unwrap();
        let p = ModelParams::new(
            cfg,
            vec![
                Connection::Dense(w0),
                Connection::Dense(w1),
                Connection::Dense(w2),
            ],
        )
        .unwrap();
        let x = Matrix::from_rows(&[[1.0, 1.0, 1.0]]).unwrap();
        let c = forward(&p, &x).unwrap();
        // X1 = [1.5, 2] ; Y1 = relu -> [1.5, 2]
        assert_eq!(c.post[1].row(0), &[1.5, 2.0]);
        // X2 = [1.5 - 2, 4] = [-0.5, 4]
        assert_eq!(c.pre[2].row(0), &[-0.5, 4.0]);
        let (s0, s1) = (sigmoid(-0.5), sigmoid(4.0));
        let expected = [s0 + 2.0 * s1, -2.0 * s0 + s1, 0.5 * s0 - s1];
        for (got, want) in c.post[3].row(0).iter().zip(expected) {
            assert!((got - want.max(0.0)).abs() <= 1e-12);
        }
        assert_eq!(extract_embedding(&p, &x).unwrap(), c.post[2]);
    }

    #[test]
    fn stale_cache_rejected() {
        let cfg = NetworkConfig::from_meud_widths(&[12, 8, 4, 4, 12], Variant::Meud, 1).unwrap();
        let p = init_params(&cfg, None).unwrap();
        let x = Matrix::filled(4, 12, 0.3);
        let c = forward(&p, &x).unwrap();
        assert!(backward(&p, &c, &Matrix::filled(5, 12, 0.3)).is_err());
        let mut short = c.clone();
        short.pre.pop();
        assert!(backward(&p, &short, &x).is_err());
    }
}
