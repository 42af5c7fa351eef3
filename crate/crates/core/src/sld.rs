//! Cumulant generating function of ln L, its large-deviation limit, the
//! sharp large-deviation pieces and the first-order Type I corrections.
//!
//! Throughout, s(ε) = θ₁² + (θ₁²-θ₀²)ε, a(ε) = θ₁ + (θ₁-θ₀)ε and
//! 𝒟(ε) = a(ε)/√s(ε). Everything is in log space.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::decision::normal_quantile;
use crate::error::{domain, Error, Result};
use crate::numeric::KahanSum;
use crate::spectral::SpectralBasis;
use crate::stats::HypothesisPair;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SldContext {
    pub hyp: HypothesisPair,
    pub basis: SpectralBasis,
    pub sigma: f64,
    pub horizon: f64,
    pub m: f64,
}

impl SldContext {
    pub fn new(hyp: HypothesisPair, basis: SpectralBasis, sigma: f64, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) {
            return domain(format!("horizon must be positive, got {horizon}"));
        }
        let m = basis.spectral_sum_m();
        Ok(Self { hyp, basis, sigma, horizon, m })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddlePoint {
    pub eta: f64,
    pub epsilon: f64,
    pub variance: f64,
}

/// Pieces of the CGF at ε that are reused by several formulas.
struct Tilt {
    root_s: f64,
    /// 𝒟(ε) - 1, computed without cancellation.
    d_minus_one: f64,
    /// a(ε) - √s(ε).
    gap: f64,
}

fn tilt(hyp: &HypothesisPair, eps: f64) -> Result<Tilt> {
    let s = eps * hyp.diff_sq() + hyp.theta1 * hyp.theta1;
    if !(s > 0.0) || !eps.is_finite() {
        return domain(format!("epsilon {eps} is not above eps_minus = {}", hyp.eps_minus()));
    }
    let root_s = s.sqrt();
    let a = hyp.theta1 + hyp.diff() * eps;
    // a² - s = (θ₁-θ₀)² ε (ε+1), so the gap vanishes exactly at ε = 0 and -1.
    let gap = hyp.diff() * hyp.diff() * eps * (eps + 1.0) / (a + root_s);
    Ok(Tilt { root_s, d_minus_one: gap / root_s, gap })
}

impl Tilt {
    /// -½ ln(½ + ½𝒟).
    fn h(&self) -> f64 {
        -0.5 * (0.5 * self.d_minus_one).ln_1p()
    }

    /// -½ log1p(((1-𝒟)/(1+𝒟)) e^{-2x}).
    fn r(&self, x: f64) -> f64 {
        let g = -self.d_minus_one / (2.0 + self.d_minus_one);
        -0.5 * (g * (-2.0 * x).exp()).ln_1p()
    }
}

/// 𝒟(ε) = (θ₁+(θ₁-θ₀)ε)/√(θ₁²+(θ₁²-θ₀²)ε).
pub fn d_factor(hyp: &HypothesisPair, eps: f64) -> Result<f64> {
    Ok(1.0 + tilt(hyp, eps)?.d_minus_one)
}

/// ln E_{θ₁}[exp(ε ln L)].
pub fn cgf_log_l(ctx: &SldContext, eps: f64) -> Result<f64> {
    let tl = tilt(&ctx.hyp, eps)?;
    let t = ctx.horizon;
    let n = ctx.basis.n_modes() as f64;
    let mut rest = KahanSum::new();
    for &l in ctx.basis.lambdas() {
        rest.add(tl.r(l.powf(2.0 * ctx.basis.beta()) * t * tl.root_s));
    }
    Ok(ctx.m * t / 2.0 * tl.gap + n * tl.h() + rest.value())
}

/// c(ε) = lim T⁻¹ ln m_T(ε).
pub fn c_limit(hyp: &HypothesisPair, m: f64, eps: f64) -> Result<f64> {
    Ok(tilt(hyp, eps)?.gap * m / 2.0)
}

/// Legendre transform I(η) of c; +∞ for η ≥ (θ₁-θ₀)M/2.
pub fn rate_i(hyp: &HypothesisPair, m: f64, eta: f64) -> f64 {
    let edge = 2.0 * eta - hyp.diff() * m;
    if edge >= 0.0 {
        return f64::INFINITY;
    }
    let num = 4.0 * hyp.theta1 * eta - hyp.diff() * hyp.diff() * m;
    -num * num / (8.0 * edge * hyp.diff_sq())
}

/// (𝓛, 𝓗, 𝓡_T) for Z_T = a∫X dX + b∫X² dt of dX = θX dt + σ dW, X₀ = 0.
pub fn ou_decomposition(a: f64, b: f64, theta: f64, sigma: f64, t: f64) -> Result<(f64, f64, f64)> {
    if !(theta < 0.0) || !(t > 0.0) {
        return domain("need theta < 0 and T > 0");
    }
    let s2 = sigma * sigma;
    let rho_sq = theta * theta - 2.0 * b * s2;
    if !(rho_sq > 0.0) {
        return domain(format!("(a, b) = ({a}, {b}) violates theta^2 - 2 b sigma^2 > 0"));
    }
    let rho = rho_sq.sqrt();
    let u = a * s2 + theta;
    if !(u < rho) {
        return domain(format!("(a, b) = ({a}, {b}) violates theta + a sigma^2 < rho(b)"));
    }
    let r = u / rho;
    let l = -0.5 * (u + rho);
    let h = -0.5 * (0.5 * (1.0 - r)).ln();
    let rt = -0.5 * ((1.0 + r) / (1.0 - r) * (-2.0 * t * rho).exp()).ln_1p();
    Ok((l, h, rt))
}

fn saddle(hyp: &HypothesisPair, scale: f64, eta: f64) -> Result<SaddlePoint> {
    let upper = hyp.diff() * hyp.diff() * scale / (4.0 * hyp.theta1);
    if !(eta < upper) {
        return domain(format!("eta = {eta} must be below {upper}"));
    }
    let gap = -2.0 * eta + hyp.diff() * scale;
    // The tilt solves √s(ε) = (θ₁²-θ₀²)·scale/(2·gap).
    let root = hyp.diff_sq() * scale / (2.0 * gap);
    let epsilon = (root - hyp.theta1) * (root + hyp.theta1) / hyp.diff_sq();
    let variance = gap.powi(3) / (hyp.diff_sq() * scale * scale);
    Ok(SaddlePoint { eta, epsilon, variance })
}

/// Saddle point of the large-time rate: 𝓛'(ε_η) = η.
pub fn saddle_t(ctx: &SldContext, eta: f64) -> Result<SaddlePoint> {
    saddle(&ctx.hyp, ctx.m, eta)
}

/// Saddle point of the large-N rate: 𝓛̃'(ε̃_η) = η.
pub fn saddle_n(hyp: &HypothesisPair, t: f64, eta: f64) -> Result<SaddlePoint> {
    saddle(hyp, t, eta)
}

/// -(N/2) ln(½+½𝒟(ε)) - ½ Σ log1p(((1-𝒟)/(1+𝒟)) e^{-2λ^{2β}T√s}).
fn finite_corrections(hyp: &HypothesisPair, basis: &SpectralBasis, t: f64, eps: f64) -> Result<f64> {
    let s = hyp.theta1 * hyp.theta1 + hyp.diff_sq() * eps;
    let d = (hyp.theta1 + hyp.diff() * eps) / s.sqrt();
    let mut acc = KahanSum::new();
    acc.add(-(basis.n_modes() as f64) / 2.0 * (0.5 + 0.5 * d).ln());
    for &l in basis.lambdas() {
        let x = l.powf(2.0 * basis.beta()) * t * s.sqrt();
        acc.add(-0.5 * ((1.0 - d) / (1.0 + d) * (-2.0 * x).exp()).ln_1p());
    }
    Ok(acc.value())
}

/// ln A_T = T(𝓛_T(ε_η) - ηε_η).
pub fn a_t(ctx: &SldContext, eta: f64) -> Result<f64> {
    let sp = saddle_t(ctx, eta)?;
    Ok(-rate_i(&ctx.hyp, ctx.m, eta) * ctx.horizon + finite_corrections(&ctx.hyp, &ctx.basis, ctx.horizon, sp.epsilon)?)
}

/// ln Ã_N = M(𝓛_N(ε̃_η) - ηε̃_η).
pub fn a_n(hyp: &HypothesisPair, basis: &SpectralBasis, t: f64, eta: f64) -> Result<f64> {
    let sp = saddle_n(hyp, t, eta)?;
    Ok(-rate_i(hyp, t, eta) * basis.spectral_sum_m() + finite_corrections(hyp, basis, t, sp.epsilon)?)
}

/// (𝓛̃(ε), 𝓗̃(ε), 𝓡̃_N(ε)), with M𝓛̃ + N𝓗̃ + 𝓡̃_N = ln m_T(ε).
pub fn ntilde_decomposition(hyp: &HypothesisPair, basis: &SpectralBasis, t: f64, eps: f64) -> Result<(f64, f64, f64)> {
    let tl = tilt(hyp, eps)?;
    let mut rest = KahanSum::new();
    for &l in basis.lambdas() {
        rest.add(tl.r(l.powf(2.0 * basis.beta()) * t * tl.root_s));
    }
    Ok((t / 2.0 * tl.gap, tl.h(), rest.value()))
}

/// α₁(δ): first-order Type I correction of the large-time test.
pub fn alpha1_t(hyp: &HypothesisPair, n: usize, m: f64, alpha: f64, delta: f64) -> Result<f64> {
    let q = normal_quantile(alpha)?;
    let g = (-q * q / 2.0).exp();
    Ok(g * delta / (2.0 * PI).sqrt()
        + g / (2.0 * (PI * m * hyp.theta0).sqrt())
            * (hyp.diff() * n as f64 / (2.0 * (hyp.theta1 + hyp.theta0)) + 1.0 - q * q))
}

/// Σ_{k≥1} exp(-2θ₀Tλ_k^{2β}) over the full eigenvalue sequence, stopped once
/// the next term drops below 1e-12 of the partial sum.
pub fn boundary_series(theta0: f64, basis: &SpectralBasis, t: f64) -> f64 {
    const MAX_TERMS: usize = 50_000_000;
    let model = basis.model();
    let term = |k: usize| (-2.0 * theta0 * t * model.lambda(k).powf(2.0 * basis.beta())).exp();
    let mut acc = KahanSum::new();
    let mut k = 1;
    let mut next = term(1);
    while k <= MAX_TERMS {
        acc.add(next);
        k += 1;
        next = term(k);
        if next < 1e-12 * (acc.value() + 1e-300) {
            break;
        }
    }
    acc.value()
}

/// (Φ₁^δ(x), Φ₂^δ(x)) of the large-N Type I expansion.
pub fn phi1_phi2(hyp: &HypothesisPair, basis: &SpectralBasis, t: f64, delta: f64, x: f64) -> (f64, f64) {
    let (th0, th1) = (hyp.theta0, hyp.theta1);
    let g = (-x * x / 2.0).exp();
    let root = (PI * th0 * t).sqrt();
    let series = boundary_series(th0, basis, t);
    let phi1 = (hyp.diff() / (4.0 * root * (th1 + th0)) * series
        + (1.0 - x * x) / (2.0 * root)
        + delta / (2.0 * PI).sqrt())
        * g;
    let phi2 = hyp.diff() * (5.0 * th1 * th1 + 6.0 * th1 * th0 - 3.0 * th0 * th0)
        / (8.0 * (2.0 * PI).sqrt() * th0 * (th1 + th0) * hyp.diff_sq() * t)
        * x
        * g;
    (phi1, phi2)
}

/// α̂₁(δ): first-order Type I correction of the large-N test. Needs β/d ≥ 1/2.
pub fn alpha1_n(hyp: &HypothesisPair, basis: &SpectralBasis, t: f64, alpha: f64, delta: f64) -> Result<f64> {
    let (beta, d) = (basis.beta(), basis.dim() as f64);
    if 2.0 * beta < d {
        return Err(Error::UnsupportedRegime(format!("beta/d = {} is below 1/2", beta / d)));
    }
    let q = normal_quantile(alpha)?;
    let (phi1, phi2) = phi1_phi2(hyp, basis, t, delta, q);
    if 2.0 * beta == d {
        Ok(phi1 + ((2.0 * beta / d + 1.0) / basis.varpi().powf(beta)).sqrt() * phi2)
    } else {
        Ok(phi1)
    }
}
