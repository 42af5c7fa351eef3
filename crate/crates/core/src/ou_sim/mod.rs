//! Simulation of the Fourier modes u_k, independent Ornstein-Uhlenbeck
//! processes du_k = -θ λ_k^{2β} u_k dt + σ λ_k^{-γ} dw_k started at zero.

mod exact;

use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numeric::fmt_g17;
use crate::rng::CounterRng;
use crate::spectral::SpectralBasis;

pub use exact::{ExactStatsSampler, ModeExpansion};

pub const DEFAULT_STEPS_PER_UNIT: u32 = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub theta: f64,
    pub sigma: f64,
    pub basis: SpectralBasis,
    pub horizon: f64,
    pub steps_per_unit: u32,
}

impl ModelSpec {
    pub fn new(theta: f64, sigma: f64, basis: SpectralBasis, horizon: f64, steps_per_unit: u32) -> Result<Self> {
        let spec = Self { theta, sigma, basis, horizon, steps_per_unit };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return domain(format!("theta must be positive, got {}", self.theta));
        }
        if self.sigma == 0.0 || !self.sigma.is_finite() {
            return domain(format!("sigma must be nonzero and finite, got {}", self.sigma));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return domain(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.steps_per_unit == 0 {
            return domain("steps_per_unit must be at least 1");
        }
        Ok(())
    }

    /// Number of grid intervals m; the grid is t_j = jT/m.
    pub fn n_steps(&self) -> usize {
        ((self.horizon * self.steps_per_unit as f64).round() as usize).max(1)
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps() as f64
    }
}

/// Exact one-step transition of a mode: u(t+dt) = decay*u(t) + N(0, step_variance).
pub fn ou_step_moments(theta: f64, lambda: f64, beta: f64, gamma: f64, sigma: f64, dt: f64) -> (f64, f64) {
    let kappa = theta * lambda.powf(2.0 * beta);
    let decay = (-kappa * dt).exp();
    let variance = sigma * sigma * lambda.powf(-2.0 * gamma) * -(-2.0 * kappa * dt).exp_m1() / (2.0 * kappa);
    (decay, variance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeTrajectories {
    pub grid: Vec<f64>,
    /// values[k][j] = u_{k+1}(t_j).
    pub values: Vec<Vec<f64>>,
    pub spec: ModelSpec,
    pub seed: u64,
}

impl ModeTrajectories {
    /// Wraps arbitrary path values on the spec's grid. Intended for tests;
    /// the zero initial condition is not enforced.
    pub fn from_raw(spec: ModelSpec, values: Vec<Vec<f64>>) -> Result<Self> {
        spec.validate()?;
        let m = spec.n_steps();
        if values.len() != spec.basis.n_modes() {
            return domain(format!("expected {} modes, got {}", spec.basis.n_modes(), values.len()));
        }
        if values.iter().any(|row| row.len() != m + 1) {
            return domain(format!("every mode needs {} grid values", m + 1));
        }
        Ok(Self { grid: grid(&spec), values, spec, seed: 0 })
    }

    pub fn n_modes(&self) -> usize {
        self.values.len()
    }

    /// Writes `t,u_1,...,u_N` with one row per grid point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "t")?;
        for k in 1..=self.n_modes() {
            write!(out, ",u_{k}")?;
        }
        writeln!(out)?;
        for (j, t) in self.grid.iter().enumerate() {
            write!(out, "{}", fmt_g17(*t))?;
            for row in &self.values {
                write!(out, ",{}", fmt_g17(row[j]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn grid(spec: &ModelSpec) -> Vec<f64> {
    let m = spec.n_steps();
    let dt = spec.dt();
    (0..=m).map(|j| if j == m { spec.horizon } else { j as f64 * dt }).collect()
}

pub fn simulate(spec: &ModelSpec, seed: u64) -> Result<ModeTrajectories> {
    simulate_replicate(spec, seed, 0)
}

/// Replicate `replicate` of the experiment keyed by `seed`. Mode k draws its
/// standard normals, one per step and in step order, from
/// `CounterRng::for_stream(seed, replicate, k)`.
pub fn simulate_replicate(spec: &ModelSpec, seed: u64, replicate: u64) -> Result<ModeTrajectories> {
    let mut streams: Vec<CounterRng> =
        (0..spec.basis.n_modes()).map(|k| CounterRng::for_stream(seed, replicate, k as u64)).collect();
    let mut traj = simulate_with(spec, |k, _| streams[k].sample(StandardNormal))?;
    traj.seed = seed;
    Ok(traj)
}

/// Drives the exact recursion with caller-supplied innovations `noise(k, j)`
/// for mode k and step j.
pub fn simulate_with(spec: &ModelSpec, mut noise: impl FnMut(usize, usize) -> f64) -> Result<ModeTrajectories> {
    spec.validate()?;
    let m = spec.n_steps();
    let dt = spec.dt();
    let basis = &spec.basis;
    let mut values = Vec::with_capacity(basis.n_modes());
    for (k, &lambda) in basis.lambdas().iter().enumerate() {
        let (decay, var) = ou_step_moments(spec.theta, lambda, basis.beta(), basis.gamma(), spec.sigma, dt);
        let sd = var.sqrt();
        let mut row = Vec::with_capacity(m + 1);
        let mut u = 0.0;
        row.push(u);
        for j in 0..m {
            u = decay * u + sd * noise(k, j);
            row.push(u);
        }
        values.push(row);
    }
    Ok(ModeTrajectories { grid: grid(spec), values, spec: spec.clone(), seed: 0 })
}
