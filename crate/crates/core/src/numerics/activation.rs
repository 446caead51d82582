use super::Matrix;

/// Elementwise maps used by the networks. The `*Grad` kinds evaluate the
/// derivative at a pre-activation value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
    ReluGrad,
    SigmoidGrad,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Sigmoid => sigmoid(x),
            Activation::ReluGrad => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::SigmoidGrad => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
        }
    }
}

pub fn activate(m: &Matrix, kind: Activation) -> Matrix {
    m.map(|x| kind.apply(x))
}

const SIGMOID_MAX: f64 = 1.0 - f64::EPSILON / 2.0;

/// Logistic function, clamped so the result is strictly inside (0, 1)
/// even where the exact value rounds to an endpoint.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    let s = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    s.clamp(f64::MIN_POSITIVE, SIGMOID_MAX)
}
