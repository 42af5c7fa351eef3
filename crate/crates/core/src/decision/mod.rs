//! Likelihood-ratio decision rules for H₀: θ = θ₀ against H₁: θ = θ₁ in the
//! large-time and large-mode-count regimes.
//!
//! Every rule is available in two equivalent forms: a threshold on ln L
//! (reject when ln L ≥ ln c) and a threshold on a standardized statistic that
//! is a decreasing affine function of ln L (reject when statistic ≤ q_α + ...).

mod normal;

use serde::{Deserialize, Serialize};

pub use normal::{normal_cdf, normal_pdf, normal_quantile};

use crate::error::{domain, Error, Result};
use crate::stats::{log_likelihood_ratio, HypothesisPair, Regime, SufficientStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestSpec {
    pub regime: Regime,
    pub alpha: f64,
    pub delta: f64,
    pub hyp: HypothesisPair,
    /// Additive offset on the log threshold; zero gives the standard family.
    #[serde(default)]
    pub shift: f64,
}

impl TestSpec {
    pub fn new(regime: Regime, alpha: f64, delta: f64, hyp: HypothesisPair) -> Result<Self> {
        let spec = Self { regime, alpha, delta, hyp, shift: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return domain(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !self.delta.is_finite() || !self.shift.is_finite() {
            return domain("delta and shift must be finite");
        }
        HypothesisPair::new(self.hyp.theta0, self.hyp.theta1).map(|_| ())
    }

    pub fn q_alpha(&self) -> f64 {
        normal_quantile(self.alpha).expect("alpha validated")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub reject: bool,
    pub log_lr: f64,
    pub log_threshold_lr: f64,
}

impl TestOutcome {
    /// Decision read off the statistic form.
    pub fn reject_by_statistic(&self) -> bool {
        self.statistic <= self.threshold
    }
}

fn require(spec: &TestSpec, regime: Regime) -> Result<()> {
    if spec.regime != regime {
        return Err(Error::Usage(format!("test is configured for {}, not {}", spec.regime, regime)));
    }
    Ok(())
}

/// √(8θ₀³)/((θ₁²-θ₀²)√(TM)), minus the slope of both statistics in ln L.
fn statistic_slope(hyp: &HypothesisPair, m: f64, t: f64) -> f64 {
    (8.0 * hyp.theta0.powi(3)).sqrt() / (hyp.diff_sq() * (t * m).sqrt())
}

/// ln c_α^δ(T).
pub fn log_threshold_t(spec: &TestSpec, m: f64, t: f64) -> Result<f64> {
    require(spec, Regime::LargeT)?;
    let h = &spec.hyp;
    let th0 = h.theta0;
    Ok(-h.diff() * h.diff() * m * t / (4.0 * th0)
        - h.diff_sq() / (2.0 * th0) * (m * t / (2.0 * th0)).sqrt() * spec.q_alpha()
        - spec.delta * h.diff_sq() * m.sqrt() / (8.0 * th0.powi(3)).sqrt()
        + spec.shift)
}

/// I_T, an affine function of ln L with negative slope.
pub fn statistic_i_t(log_lr: f64, hyp: &HypothesisPair, m: f64, t: f64) -> f64 {
    -statistic_slope(hyp, m, t) * log_lr - hyp.diff() * (hyp.theta0 * t * m / 2.0).sqrt() / (hyp.theta1 + hyp.theta0)
}

/// ln ĉ_α^δ(N).
pub fn log_threshold_n(spec: &TestSpec, m: f64, n: usize, t: f64) -> Result<f64> {
    require(spec, Regime::LargeN)?;
    let h = &spec.hyp;
    let th0 = h.theta0;
    let root = (8.0 * th0.powi(3)).sqrt();
    Ok(-h.diff() * h.diff() * t * m / (4.0 * th0) + h.diff() * h.diff() * n as f64 / (8.0 * th0 * th0)
        - (t * m).sqrt() * h.diff_sq() / root * spec.q_alpha()
        - t.sqrt() * h.diff_sq() / root * spec.delta
        + spec.shift)
}

/// S_N = Y^N - X^N written through ln L.
pub fn statistic_s_n(log_lr: f64, hyp: &HypothesisPair, m: f64, n: usize, t: f64) -> f64 {
    let th0 = hyp.theta0;
    let sum = hyp.theta1 + hyp.theta0;
    -statistic_slope(hyp, m, t) * log_lr - (2.0 * th0 * t * m).sqrt() * hyp.diff() / (2.0 * sum)
        + hyp.diff() * n as f64 / ((8.0 * th0 * t * m).sqrt() * sum)
}

/// Decision for a known ln L; `m`, `n`, `t` are M, N and T of the observation.
pub fn decide_log_lr(spec: &TestSpec, log_lr: f64, m: f64, n: usize, t: f64) -> Result<TestOutcome> {
    let slope = statistic_slope(&spec.hyp, m, t);
    let (statistic, threshold, log_threshold_lr) = match spec.regime {
        Regime::LargeT => (
            statistic_i_t(log_lr, &spec.hyp, m, t),
            spec.q_alpha() + spec.delta / t.sqrt() - slope * spec.shift,
            log_threshold_t(spec, m, t)?,
        ),
        Regime::LargeN => (
            statistic_s_n(log_lr, &spec.hyp, m, n, t),
            spec.q_alpha() + spec.delta / m.sqrt() - slope * spec.shift,
            log_threshold_n(spec, m, n, t)?,
        ),
    };
    Ok(TestOutcome { statistic, threshold, reject: log_lr >= log_threshold_lr, log_lr, log_threshold_lr })
}

pub fn decide(spec: &TestSpec, stats: &SufficientStats) -> Result<TestOutcome> {
    spec.validate()?;
    let log_lr = log_likelihood_ratio(stats, &spec.hyp);
    decide_log_lr(spec, log_lr, stats.basis.spectral_sum_m(), stats.basis.n_modes(), stats.horizon)
}
