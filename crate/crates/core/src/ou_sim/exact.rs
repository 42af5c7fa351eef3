//! Exact sampling of the per-mode sufficient statistics (u(T), ∫₀ᵀ u² dt)
//! without a time grid.
//!
//! On [0, T] an OU mode started at zero has the Karhunen-Loève expansion
//! u(t) = Σ_j √μ_j ξ_j φ_j(t) with φ_j ∝ sin(ω_j t), where x_j = ω_j T solves
//! x cos x + κT sin x = 0 and μ_j = s²/(ω_j² + κ²). Hence ∫u² = Σ μ_j ξ_j² and
//! u(T) = Σ √μ_j φ_j(T) ξ_j with the same ξ_j. The first J terms are drawn
//! exactly. The remainder of ∫u² is replaced by a gamma variable with its
//! exact mean and variance, the remainder of u(T) by an independent normal
//! with its exact variance.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::ModelSpec;
use crate::error::{domain, Result};
use crate::numeric::KahanSum;
use crate::rng::CounterRng;
use crate::spectral::SpectralBasis;
use crate::stats::SufficientStats;

const MIN_TERMS: usize = 32;
const MAX_TERMS: usize = 1024;

#[derive(Debug, Clone)]
pub struct ModeExpansion {
    mu: Vec<f64>,
    terminal_coef: Vec<f64>,
    tail_mean: f64,
    tail_gamma: Option<Gamma<f64>>,
    terminal_tail_sd: f64,
    integral_mean: f64,
    integral_var: f64,
    terminal_var: f64,
}

/// Root of x cos x + c sin x = 0 in ((j-1/2)π, jπ).
fn kl_root(j: usize, c: f64) -> f64 {
    let base = (j as f64 - 0.5) * std::f64::consts::PI;
    let mut x = base;
    for _ in 0..60 {
        let h = x - base - (c / x).atan();
        let dh = 1.0 + c / (x * x + c * c);
        let step = h / dh;
        x -= step;
        if step.abs() <= 4e-16 * x {
            break;
        }
    }
    x
}

/// 1 - (1 - e^{-2c})/(2c).
fn mean_factor(c: f64) -> f64 {
    if c >= 1.0 {
        return 1.0 + (-2.0 * c).exp_m1() / (2.0 * c);
    }
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 1..60 {
        term *= -2.0 * c / (n + 1) as f64;
        sum -= term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// c/2 - (1 - e^{-4c})/8 - (1 - e^{-2c}(1 + 2c))/2, which is c⁴/3 + O(c⁵).
fn square_factor(c: f64) -> f64 {
    if c >= 1.0 {
        return c / 2.0 + (-4.0 * c).exp_m1() / 8.0 - (1.0 - (-2.0 * c).exp() * (1.0 + 2.0 * c)) / 2.0;
    }
    // Σ_{n≥4} (-2c)^n (2^n/8 - (n-1)/2) / n!
    let mut pow = 1.0;
    let mut sum = 0.0;
    for n in 1..80 {
        pow *= -2.0 * c / n as f64;
        if n < 4 {
            continue;
        }
        let t = pow * (2f64.powi(n) / 8.0 - (n as f64 - 1.0) / 2.0);
        sum += t;
        if t.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

impl ModeExpansion {
    /// Mode with drift rate kappa = θλ^{2β} and noise scale s = σλ^{-γ}.
    pub fn new(kappa: f64, s: f64, horizon: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite() && horizon > 0.0 && horizon.is_finite()) {
            return domain(format!("invalid mode parameters kappa={kappa}, T={horizon}"));
        }
        let t = horizon;
        let c = kappa * t;
        let s2 = s * s;
        let terms = MAX_TERMS.min((4.0 * c / std::f64::consts::PI).ceil() as usize + MIN_TERMS);

        let mut mu = Vec::with_capacity(terms);
        let mut terminal_coef = Vec::with_capacity(terms);
        let (mut mu_sum, mut mu_sq_sum, mut coef_sq_sum) = (KahanSum::new(), KahanSum::new(), KahanSum::new());
        for j in 1..=terms {
            let x = kl_root(j, c);
            let m = s2 * t * t / (x * x + c * c);
            let norm_sq = t * (0.5 - (2.0 * x).sin() / (4.0 * x));
            let coef = m.sqrt() * x.sin() / norm_sq.sqrt();
            mu_sum.add(m);
            mu_sq_sum.add(m * m);
            coef_sq_sum.add(coef * coef);
            mu.push(m);
            terminal_coef.push(coef);
        }

        let integral_mean = s2 * t * t / (2.0 * c) * mean_factor(c);
        let mu_sq_total = s2 * s2 * t.powi(4) / (2.0 * c.powi(4)) * square_factor(c);
        let terminal_var = s2 * t / (2.0 * c) * -(-2.0 * c).exp_m1();

        let tail_mean = (integral_mean - mu_sum.value()).max(0.0);
        let tail_var = 2.0 * (mu_sq_total - mu_sq_sum.value()).max(0.0);
        let tail_gamma = if tail_mean > 0.0 && tail_var > 1e-14 * 2.0 * mu_sq_total {
            Gamma::new(tail_mean * tail_mean / tail_var, tail_var / tail_mean).ok()
        } else {
            None
        };
        let terminal_tail_sd = (terminal_var - coef_sq_sum.value()).max(0.0).sqrt();

        Ok(Self {
            mu,
            terminal_coef,
            tail_mean,
            tail_gamma,
            terminal_tail_sd,
            integral_mean,
            integral_var: 2.0 * mu_sq_total,
            terminal_var,
        })
    }

    pub fn n_terms(&self) -> usize {
        self.mu.len()
    }

    /// Exact E∫u², Var∫u² and Var u(T) of the mode.
    pub fn moments(&self) -> (f64, f64, f64) {
        (self.integral_mean, self.integral_var, self.terminal_var)
    }

    /// Draws (u(T), ∫₀ᵀ u² dt).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let mut terminal = 0.0;
        let mut integral = 0.0;
        for (m, c) in self.mu.iter().zip(&self.terminal_coef) {
            let z: f64 = rng.sample(StandardNormal);
            integral += m * z * z;
            terminal += c * z;
        }
        integral += match &self.tail_gamma {
            Some(g) => g.sample(rng),
            None => self.tail_mean,
        };
        if self.terminal_tail_sd > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            terminal += self.terminal_tail_sd * z;
        }
        (terminal, integral)
    }
}

/// Samples sufficient statistics of all N modes directly, with no
/// quadrature error.
#[derive(Debug, Clone)]
pub struct ExactStatsSampler {
    spec: ModelSpec,
    modes: Vec<ModeExpansion>,
}

impl ExactStatsSampler {
    pub fn new(spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let basis: &SpectralBasis = &spec.basis;
        let modes = basis
            .lambdas()
            .iter()
            .map(|&l| {
                let kappa = spec.theta * l.powf(2.0 * basis.beta());
                let s = spec.sigma.abs() * l.powf(-basis.gamma());
                ModeExpansion::new(kappa, s, spec.horizon)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec: spec.clone(), modes })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn modes(&self) -> &[ModeExpansion] {
        &self.modes
    }

    /// Replicate `replicate`; mode k reads `CounterRng::for_stream(seed, replicate, k)`.
    pub fn sample(&self, seed: u64, replicate: u64) -> SufficientStats {
        let n = self.modes.len();
        let mut terminal_sq = Vec::with_capacity(n);
        let mut int_u_sq = Vec::with_capacity(n);
        for (k, mode) in self.modes.iter().enumerate() {
            let mut rng = CounterRng::for_stream(seed, replicate, k as u64);
            let (u, i) = mode.sample(&mut rng);
            terminal_sq.push(u * u);
            int_u_sq.push(i);
        }
        SufficientStats {
            terminal_sq,
            int_u_sq,
            basis: self.spec.basis.clone(),
            sigma: self.spec.sigma,
            horizon: self.spec.horizon,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// E∫u² by direct quadrature of Var u(t) = s²(1-e^{-2κt})/(2κ).
    fn mean_oracle(kappa: f64, s: f64, t: f64) -> f64 {
        let n = 200_000;
        let h = t / n as f64;
        let f = |x: f64| s * s * (1.0 - (-2.0 * kappa * x).exp()) / (2.0 * kappa);
        let mut acc = f(0.0) + f(t);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        acc * h / 3.0
    }

    /// ∫∫ Cov(u_s,u_t)² by a 2-d midpoint rule.
    fn square_oracle(kappa: f64, s: f64, t: f64) -> f64 {
        let n = 1500;
        let h = t / n as f64;
        let cov = |a: f64, b: f64| {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            s * s / (2.0 * kappa) * ((-kappa * (hi - lo)).exp() - (-kappa * (hi + lo)).exp())
        };
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let c = cov((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                acc += c * c;
            }
        }
        acc * h * h
    }

    #[test]
    fn roots_solve_the_transcendental_equation() {
        for &c in &[1e-6, 0.3, 1.0, 17.0, 4e4] {
            for j in [1usize, 2, 10, 500] {
                let x = kl_root(j, c);
                let lo = (j as f64 - 0.5) * std::f64::consts::PI;
                assert!(x > lo && x < j as f64 * std::f64::consts::PI);
                assert!((x * x.cos() + c * x.sin()).abs() < 1e-9 * (x + c), "j={j} c={c}");
            }
        }
    }

    #[test]
    fn series_and_closed_forms_agree_near_the_switch() {
        let c = 1.0 - 1e-12;
        assert_relative_eq!(mean_factor(c), mean_factor(1.0), max_relative = 1e-10);
        assert_relative_eq!(square_factor(c), square_factor(1.0), max_relative = 1e-9);
        assert_relative_eq!(square_factor(1e-3), 1e-12 / 3.0, max_relative = 1e-2);
    }

    #[test]
    fn closed_form_moments_match_quadrature() {
        for &(kappa, s, t) in &[(1.0, 1.0, 2.0), (0.05, 0.7, 3.0), (9.0, 1.3, 1.0)] {
            let mode = ModeExpansion::new(kappa, s, t).unwrap();
            let (mean, var, tvar) = mode.moments();
            assert_relative_eq!(mean, mean_oracle(kappa, s, t), max_relative = 1e-9);
            assert_relative_eq!(var, 2.0 * square_oracle(kappa, s, t), max_relative = 5e-4);
            assert_relative_eq!(tvar, s * s * (1.0 - (-2.0 * kappa * t).exp()) / (2.0 * kappa), max_relative = 1e-12);
        }
    }

    #[test]
    fn retained_terms_carry_most_of_the_mass() {
        let mode = ModeExpansion::new(2.0, 1.0, 1.0).unwrap();
        let (mean, _, tvar) = mode.moments();
        let kept: f64 = mode.mu.iter().sum();
        assert!(kept < mean && kept > 0.97 * mean);
        let kept_t: f64 = mode.terminal_coef.iter().map(|c| c * c).sum();
        assert!(kept_t <= tvar * (1.0 + 1e-12) && kept_t > 0.9 * tvar);
    }

    #[test]
    fn monte_carlo_moments_match() {
        let mode = ModeExpansion::new(3.0, 1.0, 2.0).unwrap();
        let (mean, var, tvar) = mode.moments();
        let mut rng = CounterRng::new(11);
        let n = 40_000;
        let (mut s1, mut s2, mut t2) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let (u, i) = mode.sample(&mut rng);
            s1 += i;
            s2 += i * i;
            t2 += u * u;
        }
        let nf = n as f64;
        let m = s1 / nf;
        let v = s2 / nf - m * m;
        assert!((m - mean).abs() < 4.0 * (var / nf).sqrt());
        assert_relative_eq!(v, var, max_relative = 0.05);
        assert!((t2 / nf - tvar).abs() < 4.0 * (2.0 * tvar * tvar / nf).sqrt());
    }

    #[test]
    fn sampler_is_deterministic_per_replicate() {
        let basis = SpectralBasis::new(crate::spectral::EigenvalueModel::default(), 3, 1.0, 1.0).unwrap();
        let spec = ModelSpec::new(1.0, 1.0, basis, 1.0, 100).unwrap();
        let sampler = ExactStatsSampler::new(&spec).unwrap();
        assert_eq!(sampler.sample(5, 9), sampler.sample(5, 9));
        assert_ne!(sampler.sample(5, 9), sampler.sample(5, 10));
    }
}
