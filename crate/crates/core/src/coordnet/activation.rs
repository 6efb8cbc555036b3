use std::fmt;
use std::str::FromStr;

use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ActivationKind {
    Sinc,
    Gaussian,
    Sine,
    Relu,
}

impl ActivationKind {
    pub const ALL: [ActivationKind; 4] = [Self::Sinc, Self::Gaussian, Self::Sine, Self::Relu];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sinc => "sinc",
            Self::Gaussian => "gaussian",
            Self::Sine => "sine",
            Self::Relu => "relu",
        }
    }

    /// Bandwidth used when none is given.
    pub fn default_omega(self) -> f64 {
        match self {
            Self::Sinc => 30.0,
            Self::Gaussian => 0.1,
            Self::Sine => 30.0,
            Self::Relu => 1.0,
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Self::Sinc => 0,
            Self::Gaussian => 1,
            Self::Sine => 2,
            Self::Relu => 3,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown activation `{s}` (sinc, gaussian, sine, relu)")))
    }
}

/// Pointwise nonlinearity `φ` with bandwidth `ω`.
///
/// * sinc: `sin(ωx) / (ωx)`, with a Taylor branch near zero
/// * gaussian: `exp(-x² / ω²)`
/// * sine: `sin(ωx)`
/// * relu: `max(x, 0)` (ω ignored, derivative 0 at the kink)
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Activation {
    pub kind: ActivationKind,
    pub omega: f64,
}

/// Below this `|ωx|` the sinc branch switches to its Taylor expansion.
const SINC_TAYLOR: f64 = 1e-4;

/// `max_u |d/du sin(u)/u|`, attained near `u ≈ 2.0816`.
pub const SINC_DERIVATIVE_SUP: f64 = 0.436_181_817_271_458;

impl Activation {
    pub fn new(kind: ActivationKind, omega: f64) -> Self {
        assert!(omega > 0.0 && omega.is_finite(), "bandwidth must be positive");
        Self { kind, omega }
    }

    pub fn sinc(omega: f64) -> Self {
        Self::new(ActivationKind::Sinc, omega)
    }

    pub fn gaussian(omega: f64) -> Self {
        Self::new(ActivationKind::Gaussian, omega)
    }

    pub fn sine(omega: f64) -> Self {
        Self::new(ActivationKind::Sine, omega)
    }

    pub fn relu() -> Self {
        Self::new(ActivationKind::Relu, 1.0)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.value_and_derivative(x).0
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        self.value_and_derivative(x).1
    }

    #[inline]
    pub fn value_and_derivative(&self, x: f64) -> (f64, f64) {
        let w = self.omega;
        match self.kind {
            ActivationKind::Sinc => {
                let u = w * x;
                if u.abs() < SINC_TAYLOR {
                    (1.0 - u * u / 6.0, -w * w * x / 3.0)
                } else {
                    let (s, c) = u.sin_cos();
                    let v = s / u;
                    (v, w * (c - v) / u)
                }
            }
            ActivationKind::Gaussian => {
                let e = (-(x * x) / (w * w)).exp();
                (e, -2.0 * x / (w * w) * e)
            }
            ActivationKind::Sine => {
                let (s, c) = (w * x).sin_cos();
                (s, w * c)
            }
            ActivationKind::Relu => {
                if x > 0.0 {
                    (x, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }

    /// `sup_x |φ'(x)|`.
    pub fn sup_derivative(&self) -> f64 {
        match self.kind {
            ActivationKind::Sinc => self.omega * SINC_DERIVATIVE_SUP,
            ActivationKind::Gaussian => std::f64::consts::SQRT_2 * (-0.5f64).exp() / self.omega,
            ActivationKind::Sine => self.omega,
            ActivationKind::Relu => 1.0,
        }
    }
}
