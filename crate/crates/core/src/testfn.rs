//! Named analytic test functions accepted on the CLI.

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};
use nalgebra::ComplexField;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    X,
    X2,
    X3,
    Log,
}

impl TestFunction {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "x" => Ok(Self::X),
            "x^2" | "x2" => Ok(Self::X2),
            "x^3" | "x3" => Ok(Self::X3),
            "log" | "ln" => Ok(Self::Log),
            other => Err(Error::Parse(format!(
                "unknown test function '{other}' (expected x, x^2, x^3, log)"
            ))),
        }
    }

    pub fn eval_real<T: Real>(&self, x: T) -> T {
        match self {
            Self::X => x,
            Self::X2 => x * x,
            Self::X3 => x * x * x,
            Self::Log => x.ln(),
        }
    }

    pub fn eval_complex<T: Real>(&self, z: Cplx<T>) -> Cplx<T> {
        match self {
            Self::X => z,
            Self::X2 => z * z,
            Self::X3 => z * z * z,
            Self::Log => z.ln(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::X => "x",
            Self::X2 => "x^2",
            Self::X3 => "x^3",
            Self::Log => "log",
        }
    }
}
