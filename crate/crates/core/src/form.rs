//! The spectral fractional quadratic form `Σ λ_j^s c_j²` and the H^s norm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::CoefficientVector;
use crate::spectral::SpectralData;

/// Fractional order `s ∈ (0, 1]`; `s = 1` is the local case.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(s: f64) -> Result<Self> {
        if s > 0.0 && s <= 1.0 {
            Ok(FracOrder(s))
        } else {
            Err(Error::InvalidParameter {
                name: "s",
                value: s,
                reason: "fractional order must lie in (0, 1]",
            })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FracOrder {
    type Error = Error;
    fn try_from(s: f64) -> Result<Self> {
        FracOrder::new(s)
    }
}

impl From<FracOrder> for f64 {
    fn from(s: FracOrder) -> f64 {
        s.0
    }
}

/// λ^s, with the zero eigenvalue contributing exactly 0.
pub fn eigen_power(lambda: f64, s: FracOrder) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        (s.get() * lambda.ln()).exp()
    }
}

/// λ_j^s for every retained mode.
pub fn eigen_powers(data: &SpectralData, s: FracOrder) -> Vec<f64> {
    data.eigenvalues().iter().map(|&l| eigen_power(l, s)).collect()
}

fn check_len(c: &CoefficientVector, data: &SpectralData) -> Result<()> {
    if c.len() == data.num_modes() {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: data.num_modes(),
            found: c.len(),
        })
    }
}

/// `⟨(−Δ)^s u, u⟩ = Σ_{j≥1} λ_j^s c_j²`.
pub fn quadratic_form(c: &CoefficientVector, s: FracOrder, data: &SpectralData) -> Result<f64> {
    check_len(c, data)?;
    Ok(data
        .eigenvalues()
        .iter()
        .zip(c.as_slice())
        .map(|(&l, &c)| eigen_power(l, s) * c * c)
        .sum())
}

/// `‖u‖²_{H^s} = ⟨(−Δ)^s u, u⟩ + ‖u‖²_{L₂}`.
pub fn hs_norm_sq(c: &CoefficientVector, s: FracOrder, data: &SpectralData) -> Result<f64> {
    Ok(quadratic_form(c, s, data)? + c.norm_sq())
}
