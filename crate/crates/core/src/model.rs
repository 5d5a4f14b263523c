//! Problem data: viscosity, horizon, box size, initial velocity, forcing
//! and noise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Euler-Maruyama with the noise applied as is.
    Standard,
    /// Helmholtz-projected noise, pseudo-pressure and recovered pressure.
    Modified,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Standard => "standard",
            SchemeKind::Modified => "modified",
        }
    }
}

/// Mean-zero, divergence-free initial velocities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialData {
    Zero,
    /// `(a sin 2πy/L, 0)`
    Shear { amplitude: f64 },
    /// `a (sin 2πx/L cos 2πy/L, -cos 2πx/L sin 2πy/L)`
    TaylorGreen { amplitude: f64 },
}

impl InitialData {
    pub fn eval(&self, x: [f64; 2], l: f64) -> [f64; 2] {
        let w = 2.0 * PI / l;
        match *self {
            InitialData::Zero => [0.0, 0.0],
            InitialData::Shear { amplitude } => [amplitude * (w * x[1]).sin(), 0.0],
            InitialData::TaylorGreen { amplitude } => [
                amplitude * (w * x[0]).sin() * (w * x[1]).cos(),
                -amplitude * (w * x[0]).cos() * (w * x[1]).sin(),
            ],
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (name, amp) = split_amplitude(s)?;
        match name {
            "zero" => Ok(InitialData::Zero),
            "shear" => Ok(InitialData::Shear { amplitude: amp }),
            "taylor-green" => Ok(InitialData::TaylorGreen { amplitude: amp }),
            _ => Err(Error::Config(format!(
                "unknown initial velocity '{s}' (expected zero, shear, taylor-green)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForcingShape {
    Zero,
    /// `(sin 2πy/L, 0)`, divergence-free
    Shear,
    /// `∇ζ` with `ζ` the noise potential, a pure gradient
    Gradient,
}

/// `f(t, x) = a cos(2π ω t) shape(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forcing {
    pub shape: ForcingShape,
    pub amplitude: f64,
    pub frequency: f64,
}

impl Forcing {
    pub fn zero() -> Self {
        Self {
            shape: ForcingShape::Zero,
            amplitude: 0.0,
            frequency: 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.shape == ForcingShape::Zero || self.amplitude == 0.0
    }

    pub fn time_factor(&self, t: f64) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.amplitude * (2.0 * PI * self.frequency * t).cos()
        }
    }

    pub fn shape_at(&self, x: [f64; 2], l: f64) -> [f64; 2] {
        match self.shape {
            ForcingShape::Zero => [0.0, 0.0],
            ForcingShape::Shear => [(2.0 * PI * x[1] / l).sin(), 0.0],
            ForcingShape::Gradient => NoiseModel::potential_gradient(x, l),
        }
    }

    pub fn eval(&self, t: f64, x: [f64; 2], l: f64) -> [f64; 2] {
        let a = self.time_factor(t);
        let s = self.shape_at(x, l);
        [a * s[0], a * s[1]]
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (name, amp) = split_amplitude(s)?;
        let shape = match name {
            "zero" => ForcingShape::Zero,
            "shear" => ForcingShape::Shear,
            "gradient" => ForcingShape::Gradient,
            _ => {
                return Err(Error::Config(format!(
                    "unknown forcing '{s}' (expected zero, shear, gradient)"
                )))
            }
        };
        Ok(Self {
            shape,
            amplitude: if shape == ForcingShape::Zero { 0.0 } else { amp },
            frequency: 0.0,
        })
    }
}

/// `name` or `name:amplitude`, amplitude defaulting to 1.
fn split_amplitude(s: &str) -> Result<(&str, f64)> {
    match s.split_once(':') {
        None => Ok((s.trim(), 1.0)),
        Some((n, a)) => {
            let amp = a
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad amplitude in '{s}'")))?;
            Ok((n.trim(), amp))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub nu: f64,
    pub t: f64,
    pub l: f64,
    pub u0: InitialData,
    pub forcing: Forcing,
    pub noise: NoiseModel,
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("nu", self.nu), ("T", self.t), ("L", self.l)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}
