//! Piecewise-linear activations shared by the sketched and hashed networks.

/// Supported activations. All are piecewise linear, which the Hessian
/// computations rely on (second derivative vanishes almost everywhere).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Linear,
}

impl Activation {
    #[inline]
    pub fn eval(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    z
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(alpha) => {
                if z > 0.0 {
                    z
                } else {
                    alpha * z
                }
            }
            Activation::Linear => z,
        }
    }

    /// Derivative with the convention that the kink at zero takes the left
    /// branch (ReLU' (0) = 0). Measure-zero under Gaussian inputs.
    #[inline]
    pub fn deriv(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(alpha) => {
                if z > 0.0 {
                    1.0
                } else {
                    alpha
                }
            }
            Activation::Linear => 1.0,
        }
    }

    pub fn lipschitz(self) -> f64 {
        match self {
            Activation::Relu | Activation::Linear => 1.0,
            Activation::LeakyRelu(alpha) => alpha.abs().max(1.0),
        }
    }

    /// Points where the derivative jumps (needed by quadrature and the
    /// finite-difference tests).
    pub fn breakpoints(self) -> &'static [f64] {
        match self {
            Activation::Linear => &[],
            _ => &[0.0],
        }
    }

    pub fn is_piecewise_linear(self) -> bool {
        true
    }
}
