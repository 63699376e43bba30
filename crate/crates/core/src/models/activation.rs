use serde::{Deserialize, Serialize};

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_CUBIC: f64 = 0.044_715;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    /// `2 ReLU(x)²`.
    ScaledRelu2,
    /// `√2 GELU(x)` with the tanh approximation of GELU.
    ScaledGelu,
    Tanh,
    Identity,
}

impl Activation {
    pub const ALL: [Activation; 5] = [
        Activation::Relu,
        Activation::ScaledRelu2,
        Activation::ScaledGelu,
        Activation::Tanh,
        Activation::Identity,
    ];

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::ScaledRelu2 => {
                let r = x.max(0.0);
                2.0 * r * r
            }
            Activation::ScaledGelu => std::f64::consts::SQRT_2 * gelu(x),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::ScaledRelu2 => 4.0 * x.max(0.0),
            Activation::ScaledGelu => std::f64::consts::SQRT_2 * gelu_derivative(x),
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Identity => 1.0,
        }
    }
}

fn gelu(x: f64) -> f64 {
    let u = SQRT_2_OVER_PI * (x + GELU_CUBIC * x * x * x);
    0.5 * x * (1.0 + u.tanh())
}

fn gelu_derivative(x: f64) -> f64 {
    let u = SQRT_2_OVER_PI * (x + GELU_CUBIC * x * x * x);
    let t = u.tanh();
    let du = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_CUBIC * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_relu2_value() {
        assert_eq!(Activation::ScaledRelu2.apply(2.0), 8.0);
        assert_eq!(Activation::ScaledRelu2.apply(-2.0), 0.0);
    }

    #[test]
    fn derivatives_match_differences() {
        for act in Activation::ALL {
            for &x in &[-1.7, -0.3, 0.4, 1.3, 2.5] {
                let h = 1e-6;
                let fd = (act.apply(x + h) - act.apply(x - h)) / (2.0 * h);
                assert!((fd - act.derivative(x)).abs() < 1e-7, "{act:?} at {x}");
            }
        }
    }

    #[test]
    fn gelu_reference_points() {
        assert_eq!(gelu(0.0), 0.0);
        assert!((gelu(1.0) - 0.841_191_990_607_477).abs() < 1e-12);
    }
}
