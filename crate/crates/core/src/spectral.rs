//! Eigenvalues of the negative fractional Laplacian and the spectral sums
//! built from them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numeric::compensated_sum;

/// Closed-form square roots λ_k of the Laplacian eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EigenvalueModel {
    /// Dirichlet Laplacian on (0, length): λ_k = kπ/length.
    ExactInterval1D { length: f64 },
    /// λ_k = √ϖ · k^{1/d}.
    PowerLaw { varpi: f64, dim: u32 },
}

impl Default for EigenvalueModel {
    fn default() -> Self {
        EigenvalueModel::ExactInterval1D { length: PI }
    }
}

impl EigenvalueModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EigenvalueModel::ExactInterval1D { length } => {
                if !(length > 0.0 && length.is_finite()) {
                    return domain(format!("interval length must be positive, got {length}"));
                }
            }
            EigenvalueModel::PowerLaw { varpi, dim } => {
                if !(varpi > 0.0 && varpi.is_finite()) {
                    return domain(format!("varpi must be positive, got {varpi}"));
                }
                if dim == 0 {
                    return domain("dimension d must be at least 1");
                }
            }
        }
        Ok(())
    }

    /// λ_k for a 1-based index k.
    pub fn lambda(&self, k: usize) -> f64 {
        let k = k as f64;
        match *self {
            EigenvalueModel::ExactInterval1D { length } => k * (PI / length),
            EigenvalueModel::PowerLaw { varpi, dim } => {
                if dim == 1 {
                    varpi.sqrt() * k
                } else {
                    varpi.sqrt() * k.powf(1.0 / dim as f64)
                }
            }
        }
    }

    pub fn dim(&self) -> u32 {
        match *self {
            EigenvalueModel::ExactInterval1D { .. } => 1,
            EigenvalueModel::PowerLaw { dim, .. } => dim,
        }
    }

    /// The constant ϖ in λ_k² ~ ϖ k^{2/d}.
    pub fn varpi(&self) -> f64 {
        match *self {
            EigenvalueModel::ExactInterval1D { length } => (PI / length).powi(2),
            EigenvalueModel::PowerLaw { varpi, .. } => varpi,
        }
    }
}

pub fn eigenvalues(model: EigenvalueModel, n: usize) -> Result<Vec<f64>> {
    model.validate()?;
    if n == 0 {
        return domain("number of modes must be at least 1");
    }
    Ok((1..=n).map(|k| model.lambda(k)).collect())
}

/// The first N eigenvalues together with the exponents β and γ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralBasis {
    model: EigenvalueModel,
    lambdas: Vec<f64>,
    beta: f64,
    gamma: f64,
}

impl SpectralBasis {
    pub fn new(model: EigenvalueModel, n: usize, beta: f64, gamma: f64) -> Result<Self> {
        let lambdas = eigenvalues(model, n)?;
        if !(beta > 0.0 && beta.is_finite()) {
            return domain(format!("beta must be positive, got {beta}"));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return domain(format!("gamma must be nonnegative, got {gamma}"));
        }
        let d = model.dim() as f64;
        if 2.0 * gamma <= d {
            return domain(format!("need 2*gamma > d, got gamma={gamma}, d={d}"));
        }
        Ok(Self { model, lambdas, beta, gamma })
    }

    pub fn model(&self) -> EigenvalueModel {
        self.model
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn n_modes(&self) -> usize {
        self.lambdas.len()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> u32 {
        self.model.dim()
    }

    pub fn varpi(&self) -> f64 {
        self.model.varpi()
    }

    /// Same model and exponents, different number of modes.
    pub fn with_modes(&self, n: usize) -> Result<Self> {
        Self::new(self.model, n, self.beta, self.gamma)
    }

    /// λ_k^p for every retained mode.
    pub fn powers(&self, p: f64) -> Vec<f64> {
        self.lambdas.iter().map(|&l| l.powf(p)).collect()
    }

    /// M = Σ λ_k^{2β}.
    pub fn spectral_sum_m(&self) -> f64 {
        compensated_sum(self.lambdas.iter().map(|&l| l.powf(2.0 * self.beta)))
    }
}

pub fn spectral_sum_m(basis: &SpectralBasis) -> f64 {
    basis.spectral_sum_m()
}
