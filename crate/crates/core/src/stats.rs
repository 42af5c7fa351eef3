//! Sufficient statistics, the maximum likelihood estimator of θ and the
//! log-likelihood ratio between two simple hypotheses.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numeric::KahanSum;
use crate::ou_sim::ModeTrajectories;
use crate::spectral::SpectralBasis;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    /// u_k(T)².
    pub terminal_sq: Vec<f64>,
    /// ∫₀ᵀ u_k(t)² dt.
    pub int_u_sq: Vec<f64>,
    pub basis: SpectralBasis,
    pub sigma: f64,
    pub horizon: f64,
}

impl SufficientStats {
    pub fn new(terminal_sq: Vec<f64>, int_u_sq: Vec<f64>, basis: SpectralBasis, sigma: f64, horizon: f64) -> Result<Self> {
        let n = basis.n_modes();
        if terminal_sq.len() != n || int_u_sq.len() != n {
            return domain(format!("expected {n} modes of statistics"));
        }
        if terminal_sq.iter().chain(&int_u_sq).any(|&x| !(x >= 0.0)) {
            return domain("statistics must be nonnegative");
        }
        if sigma == 0.0 || !(horizon > 0.0) {
            return domain("sigma must be nonzero and the horizon positive");
        }
        Ok(Self { terminal_sq, int_u_sq, basis, sigma, horizon })
    }

    /// (Σ λ^{2β+2γ} u_T², Σ λ^{4β+2γ} ∫u²).
    pub fn weighted_sums(&self) -> (f64, f64) {
        let (beta, gamma) = (self.basis.beta(), self.basis.gamma());
        let mut terminal = KahanSum::new();
        let mut integral = KahanSum::new();
        for (k, &l) in self.basis.lambdas().iter().enumerate() {
            let w = l.powf(2.0 * beta + 2.0 * gamma);
            terminal.add(w * self.terminal_sq[k]);
            integral.add(w * l.powf(2.0 * beta) * self.int_u_sq[k]);
        }
        (terminal.value(), integral.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisPair {
    pub theta0: f64,
    pub theta1: f64,
}

impl HypothesisPair {
    pub fn new(theta0: f64, theta1: f64) -> Result<Self> {
        if !(theta0 > 0.0 && theta1 > theta0 && theta1.is_finite()) {
            return domain(format!("need theta1 > theta0 > 0, got theta0={theta0}, theta1={theta1}"));
        }
        Ok(Self { theta0, theta1 })
    }

    pub fn diff(&self) -> f64 {
        self.theta1 - self.theta0
    }

    /// θ₁² - θ₀².
    pub fn diff_sq(&self) -> f64 {
        (self.theta1 - self.theta0) * (self.theta1 + self.theta0)
    }

    /// Left end ε₋ = -θ₁²/(θ₁²-θ₀²) of the domain of the CGF.
    pub fn eps_minus(&self) -> f64 {
        -self.theta1 * self.theta1 / self.diff_sq()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    LargeT,
    LargeN,
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "larget" | "t" => Ok(Regime::LargeT),
            "largen" | "n" => Ok(Regime::LargeN),
            _ => Err(Error::Usage(format!("unknown regime '{s}' (expected large-t or large-n)"))),
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::LargeT => "large-t",
            Regime::LargeN => "large-n",
        })
    }
}

/// Terminal squares from the last grid column, time integrals by the
/// trapezoidal rule.
pub fn sufficient_stats(traj: &ModeTrajectories) -> SufficientStats {
    let dt = traj.spec.dt();
    let (terminal_sq, int_u_sq) = traj
        .values
        .iter()
        .map(|row| {
            let last = *row.last().expect("nonempty grid");
            let mut acc = KahanSum::new();
            for w in row.windows(2) {
                acc.add(0.5 * (w[0] * w[0] + w[1] * w[1]));
            }
            (last * last, acc.value() * dt)
        })
        .unzip();
    SufficientStats {
        terminal_sq,
        int_u_sq,
        basis: traj.spec.basis.clone(),
        sigma: traj.spec.sigma,
        horizon: traj.spec.horizon,
    }
}

/// θ̂ with ∫u du replaced by the Itô identity (u(T)² - σ²λ^{-2γ}T)/2.
pub fn mle(stats: &SufficientStats) -> Result<f64> {
    let (beta, gamma) = (stats.basis.beta(), stats.basis.gamma());
    let s2 = stats.sigma * stats.sigma;
    let mut num = KahanSum::new();
    let mut den = KahanSum::new();
    for (k, &l) in stats.basis.lambdas().iter().enumerate() {
        let w = l.powf(2.0 * beta + 2.0 * gamma);
        let ito = 0.5 * (stats.terminal_sq[k] - s2 * l.powf(-2.0 * gamma) * stats.horizon);
        num.add(-w * ito);
        den.add(w * l.powf(2.0 * beta) * stats.int_u_sq[k]);
    }
    let den = den.value();
    if !(den > 0.0 && den.is_finite()) {
        return Err(Error::Degenerate("Σ λ^{4β+2γ} ∫u² dt vanishes".into()));
    }
    Ok(num.value() / den)
}

/// ln L(θ₀, θ₁; U_T^N).
pub fn log_likelihood_ratio(stats: &SufficientStats, hyp: &HypothesisPair) -> f64 {
    let (terminal, integral) = stats.weighted_sums();
    log_likelihood_from_sums(terminal, integral, stats.basis.spectral_sum_m(), stats.sigma, stats.horizon, hyp)
}

pub(crate) fn log_likelihood_from_sums(
    terminal: f64,
    integral: f64,
    m: f64,
    sigma: f64,
    horizon: f64,
    hyp: &HypothesisPair,
) -> f64 {
    let s2 = sigma * sigma;
    -hyp.diff() / (2.0 * s2) * terminal + hyp.diff() * m * horizon / 2.0 - hyp.diff_sq() / (2.0 * s2) * integral
}

/// (θ̂ - θ) scaled to be asymptotically standard normal in the given regime.
pub fn estimator_error_standardized(stats: &SufficientStats, true_theta: f64, regime: Regime) -> Result<f64> {
    let err = mle(stats)? - true_theta;
    Ok(err * error_scale(&stats.basis, stats.horizon, true_theta, regime))
}

pub(crate) fn error_scale(basis: &SpectralBasis, horizon: f64, theta: f64, regime: Regime) -> f64 {
    match regime {
        Regime::LargeT => (horizon * basis.spectral_sum_m() / (2.0 * theta)).sqrt(),
        Regime::LargeN => {
            let bd = basis.beta() / basis.dim() as f64;
            let n = basis.n_modes() as f64;
            n.powf(bd + 0.5) * (basis.varpi().powf(basis.beta()) * horizon / ((4.0 * bd + 2.0) * theta)).sqrt()
        }
    }
}
