//! Replicated experiments: error rates, estimator normality, CGF values,
//! large-deviation slopes and paired test comparisons.
//!
//! Replicate r of an experiment with base seed s draws mode k from
//! `CounterRng::for_stream(s, r, k)`. Replicates run in parallel and results
//! are collected in replicate order, so every report is bit-identical for a
//! given seed regardless of the thread count.

mod report;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use report::{McPoint, McReport, Proportion};

use crate::decision::{decide_log_lr, normal_cdf, normal_quantile, TestSpec};
use crate::error::{domain, Error, Result};
use crate::ou_sim::{simulate_replicate, ExactStatsSampler, ModelSpec, DEFAULT_STEPS_PER_UNIT};
use crate::sld::{a_t, alpha1_n, alpha1_t, cgf_log_l, SldContext};
use crate::stats::{
    error_scale, log_likelihood_ratio, mle, sufficient_stats, HypothesisPair, Regime, SufficientStats,
};

/// How sufficient statistics are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Sampler {
    /// Exact draws of (u(T), ∫u²) per mode; no time grid.
    #[default]
    Exact,
    /// Exact transitions on the spec's grid, trapezoidal ∫u².
    Grid,
}

impl std::str::FromStr for Sampler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Sampler::Exact),
            "grid" => Ok(Sampler::Grid),
            _ => Err(Error::Usage(format!("unknown sampler '{s}' (expected exact or grid)"))),
        }
    }
}

impl std::fmt::Display for Sampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sampler::Exact => "exact",
            Sampler::Grid => "grid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    Null,
    Alternative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McPlan {
    /// Model template; θ is replaced by θ₀ or θ₁ as needed.
    pub spec: ModelSpec,
    pub test: TestSpec,
    pub replicates: u64,
    pub base_seed: u64,
    /// Values of T (large-T tests) or N (large-N tests).
    pub sweep: Option<Vec<f64>>,
    #[serde(default)]
    pub sampler: Sampler,
}

impl McPlan {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.test.validate()?;
        if self.replicates == 0 {
            return domain("replicates must be at least 1");
        }
        if let Some(sweep) = &self.sweep {
            if sweep.is_empty() || sweep.windows(2).any(|w| !(w[0] < w[1])) {
                return domain("sweep values must be nonempty and strictly increasing");
            }
            if self.test.regime == Regime::LargeN && sweep.iter().any(|&n| !(n >= 1.0 && n.fract() == 0.0)) {
                return domain("large-N sweeps need integer mode counts");
            }
        }
        Ok(())
    }

    pub fn param_name(&self) -> &'static str {
        match self.test.regime {
            Regime::LargeT => "T",
            Regime::LargeN => "N",
        }
    }

    /// (swept value, model spec) for every point of the plan.
    pub fn points(&self) -> Result<Vec<(f64, ModelSpec)>> {
        self.validate()?;
        let current = match self.test.regime {
            Regime::LargeT => self.spec.horizon,
            Regime::LargeN => self.spec.basis.n_modes() as f64,
        };
        let values = self.sweep.clone().unwrap_or_else(|| vec![current]);
        values
            .into_iter()
            .map(|v| {
                let mut spec = self.spec.clone();
                match self.test.regime {
                    Regime::LargeT => spec.horizon = v,
                    Regime::LargeN => spec.basis = spec.basis.with_modes(v as usize)?,
                }
                spec.validate()?;
                Ok((v, spec))
            })
            .collect()
    }
}

/// Applies `f` to the sufficient statistics of replicates 0..reps, in order.
pub fn map_replicates<T, F>(spec: &ModelSpec, sampler: Sampler, seed: u64, reps: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&SufficientStats) -> T + Sync,
{
    spec.validate()?;
    match sampler {
        Sampler::Exact => {
            let exact = ExactStatsSampler::new(spec)?;
            Ok((0..reps).into_par_iter().map(|r| f(&exact.sample(seed, r))).collect())
        }
        Sampler::Grid => (0..reps)
            .into_par_iter()
            .map(|r| simulate_replicate(spec, seed, r).map(|traj| f(&sufficient_stats(&traj))))
            .collect(),
    }
}

fn with_theta(spec: &ModelSpec, theta: f64) -> ModelSpec {
    ModelSpec { theta, ..spec.clone() }
}

/// ln L for every replicate with the true drift set to `theta`.
pub fn log_lr_samples(
    spec: &ModelSpec,
    sampler: Sampler,
    hyp: &HypothesisPair,
    theta: f64,
    seed: u64,
    reps: u64,
) -> Result<Vec<f64>> {
    map_replicates(&with_theta(spec, theta), sampler, seed, reps, |s| log_likelihood_ratio(s, hyp))
}

fn true_theta(test: &TestSpec, under: Hypothesis) -> f64 {
    match under {
        Hypothesis::Null => test.hyp.theta0,
        Hypothesis::Alternative => test.hyp.theta1,
    }
}

fn count_rejections(test: &TestSpec, spec: &ModelSpec, log_lrs: &[f64]) -> Result<Proportion> {
    let m = spec.basis.spectral_sum_m();
    let n = spec.basis.n_modes();
    let mut count = 0;
    for &l in log_lrs {
        if decide_log_lr(test, l, m, n, spec.horizon)?.reject {
            count += 1;
        }
    }
    Ok(Proportion { count, n: log_lrs.len() as u64 })
}

/// First-order prediction α + α₁/√T (large T) or α + α̂₁/√M (large N).
pub fn predicted_type_one(test: &TestSpec, spec: &ModelSpec) -> Result<f64> {
    let m = spec.basis.spectral_sum_m();
    match test.regime {
        Regime::LargeT => {
            let a1 = alpha1_t(&test.hyp, spec.basis.n_modes(), m, test.alpha, test.delta)?;
            Ok(test.alpha + a1 / spec.horizon.sqrt())
        }
        Regime::LargeN => {
            let a1 = alpha1_n(&test.hyp, &spec.basis, spec.horizon, test.alpha, test.delta)?;
            Ok(test.alpha + a1 / m.sqrt())
        }
    }
}

/// Rejection frequency under θ₀ (Type I) or θ₁ (power).
pub fn estimate_error_rate(plan: &McPlan, under: Hypothesis) -> Result<McReport> {
    let kind = match under {
        Hypothesis::Null => "type1",
        Hypothesis::Alternative => "power",
    };
    let mut report = McReport::new(kind, plan.param_name());
    let theta = true_theta(&plan.test, under);
    for (value, spec) in plan.points()? {
        let lrs = log_lr_samples(&spec, plan.sampler, &plan.test.hyp, theta, plan.base_seed, plan.replicates)?;
        let rate = count_rejections(&plan.test, &spec, &lrs)?;
        let m = spec.basis.spectral_sum_m();
        let log_c = decide_log_lr(&plan.test, 0.0, m, spec.basis.n_modes(), spec.horizon)?.log_threshold_lr;
        let mut point = McPoint::new(value, rate.p(), rate.se())
            .with("rejections", rate.count as f64)
            .with("replicates", rate.n as f64)
            .with("M", m)
            .with("log_threshold", log_c);
        match under {
            Hypothesis::Null => match predicted_type_one(&plan.test, &spec) {
                Ok(pred) => {
                    point = point.with("predicted", pred);
                    if rate.se() > 0.0 {
                        point = point.with("z", (rate.p() - pred) / rate.se());
                    }
                }
                Err(e) => report.notes.push(format!("{}={value}: no first-order prediction: {e}", plan.param_name())),
            },
            Hypothesis::Alternative => {
                point = point.with("type_ii", 1.0 - rate.p());
            }
        }
        report.points.push(point);
    }
    Ok(report)
}

/// Kolmogorov-Smirnov distance sup|F_n - F| of a sample to a continuous CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

/// Standardized MLE errors under θ₀: sample mean (the estimate), variance and
/// KS distance to 𝒩(0,1).
pub fn normality_check(plan: &McPlan, regime: Regime) -> Result<McReport> {
    const LOW_POWER: u64 = 50;
    let mut report = McReport::new("normality", plan.param_name());
    let theta = plan.test.hyp.theta0;
    for (value, spec) in plan.points()? {
        let spec = with_theta(&spec, theta);
        let scale = error_scale(&spec.basis, spec.horizon, theta, regime);
        let est: Vec<f64> = map_replicates(&spec, plan.sampler, plan.base_seed, plan.replicates, mle)?
            .into_iter()
            .collect::<Result<_>>()?;
        let z: Vec<f64> = est.iter().map(|t| (t - theta) * scale).collect();
        let (zm, zv) = mean_var(&z);
        let (tm, tv) = mean_var(&est);
        let n = z.len() as f64;
        let ks = ks_distance(&z, normal_cdf);
        let low = plan.replicates < LOW_POWER;
        if low {
            report.notes.push(format!("{}={value}: only {} replicates, KS distance has low power", plan.param_name(), plan.replicates));
        }
        report.points.push(
            McPoint::new(value, zm, (zv / n).sqrt())
                .with("variance", zv)
                .with("ks_distance", ks)
                .with("ks_critical_95", 1.358 / n.sqrt())
                .with("mle_mean", tm)
                .with("mle_se", (tv / n).sqrt())
                .with("low_power", if low { 1.0 } else { 0.0 }),
        );
    }
    Ok(report)
}

/// log of the sample mean of exp(x) and its delta-method standard error.
pub fn log_mean_exp(x: &[f64]) -> (f64, f64) {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = x.len() as f64;
    let scaled: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let (mean, var) = mean_var(&scaled);
    (max + mean.ln(), (var / n).sqrt() / mean)
}

/// Compares ln of the Monte Carlo mean of exp(ε ln L) under θ₁ with ln m_T(ε).
pub fn cgf_check(ctx: &SldContext, eps_list: &[f64], replicates: u64, seed: u64, sampler: Sampler) -> Result<McReport> {
    let spec = ModelSpec::new(ctx.hyp.theta1, ctx.sigma, ctx.basis.clone(), ctx.horizon, DEFAULT_STEPS_PER_UNIT)?;
    let lrs = log_lr_samples(&spec, sampler, &ctx.hyp, ctx.hyp.theta1, seed, replicates)?;
    let mut report = McReport::new("cgf", "epsilon");
    for &eps in eps_list {
        let analytic = cgf_log_l(ctx, eps)?;
        let tilted: Vec<f64> = lrs.iter().map(|l| eps * l).collect();
        let (est, se) = if eps == 0.0 { (0.0, 0.0) } else { log_mean_exp(&tilted) };
        let z = if est == analytic { 0.0 } else { (est - analytic) / se };
        if 2.0 * eps <= ctx.hyp.eps_minus() {
            report.notes.push(format!("epsilon={eps}: exp(epsilon ln L) has infinite variance, the SE is unreliable"));
        }
        report.points.push(McPoint::new(eps, est, se).with("analytic", analytic).with("z", z));
    }
    Ok(report)
}

/// Least-squares slope and intercept of ln p against x.
pub fn fit_log_linear(x: &[f64], p: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = x.iter().zip(p).filter(|(_, &p)| p > 0.0).map(|(&x, &p)| (x, p.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

type SweepRows = Vec<(f64, ModelSpec, Proportion)>;

fn type_two_sweep(plan: &McPlan, kind: &str) -> Result<(McReport, SweepRows)> {
    if plan.test.regime != Regime::LargeT {
        return Err(Error::UnsupportedRegime(format!("{kind} needs a large-T test")));
    }
    let mut report = McReport::new(kind, "T");
    let mut rows = Vec::new();
    for (value, spec) in plan.points()? {
        let lrs = log_lr_samples(&spec, plan.sampler, &plan.test.hyp, plan.test.hyp.theta1, plan.base_seed, plan.replicates)?;
        let power = count_rejections(&plan.test, &spec, &lrs)?;
        let miss = Proportion { count: power.n - power.count, n: power.n };
        if miss.count == 0 {
            report.notes.push(format!("T={value}: no Type II events, point dropped"));
        }
        rows.push((value, spec, miss));
    }
    Ok((report, rows))
}

/// Regresses ln(Type II) on T and compares the slope with -(θ₁-θ₀)²M/(4θ₀).
pub fn type_two_slope_check(plan: &McPlan) -> Result<McReport> {
    let (mut report, rows) = type_two_sweep(plan, "type2_slope")?;
    let h = &plan.test.hyp;
    let m = plan.spec.basis.spectral_sum_m();
    let target = -h.diff() * h.diff() * m / (4.0 * h.theta0);
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let ps: Vec<f64> = rows.iter().map(|r| r.2.p()).collect();
    for (value, _, miss) in &rows {
        if miss.count > 0 {
            report.points.push(
                McPoint::new(*value, miss.p(), miss.se())
                    .with("log_type_ii", miss.p().ln())
                    .with("events", miss.count as f64),
            );
        }
    }
    report.summary.insert("target_slope".into(), target);
    report.summary.insert("points_used".into(), report.points.len() as f64);
    match fit_log_linear(&xs, &ps) {
        Some((slope, intercept)) => {
            report.summary.insert("slope".into(), slope);
            report.summary.insert("intercept".into(), intercept);
            report.summary.insert("relative_error".into(), (slope - target).abs() / target.abs());
        }
        None => report.notes.push("fewer than two usable points, no slope".into()),
    }
    Ok(report)
}

/// Sign given to the q_α term when normalizing Type II by its predicted
/// prefactor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EtaStarRule {
    Standard,
    /// Negative control: flipped sign on the q_α term.
    WrongSign,
}

/// r(T) = TypeII · exp(-ln A_T) · √T · exp(±((θ₁²-θ₀²)/(2θ₀))√(MT/(2θ₀)) q_α).
pub fn sld_ratio(type_ii: f64, log_a: f64, t: f64, m: f64, hyp: &HypothesisPair, q: f64, rule: EtaStarRule) -> f64 {
    let sign = match rule {
        EtaStarRule::Standard => 1.0,
        EtaStarRule::WrongSign => -1.0,
    };
    let expo = sign * hyp.diff_sq() / (2.0 * hyp.theta0) * (m * t / (2.0 * hyp.theta0)).sqrt() * q;
    (type_ii.ln() - log_a + expo).exp() * t.sqrt()
}

/// Type II normalized by the sharp large-deviation prefactor at
/// η = -(θ₁-θ₀)²M/(4θ₀); the ratio should settle to a constant.
pub fn sld_type_two_check(plan: &McPlan, rule: EtaStarRule) -> Result<McReport> {
    let (mut report, rows) = type_two_sweep(plan, "sld_type2")?;
    let h = plan.test.hyp;
    let q = normal_quantile(plan.test.alpha)?;
    for (value, spec, miss) in &rows {
        if miss.count == 0 {
            continue;
        }
        let ctx = SldContext::new(h, spec.basis.clone(), spec.sigma, spec.horizon)?;
        let eta = -h.diff() * h.diff() * ctx.m / (4.0 * h.theta0);
        let log_a = a_t(&ctx, eta)?;
        let ratio = sld_ratio(miss.p(), log_a, *value, ctx.m, &h, q, rule);
        report.points.push(
            McPoint::new(*value, ratio, ratio * miss.se() / miss.p())
                .with("type_ii", miss.p())
                .with("log_a_t", log_a)
                .with("events", miss.count as f64),
        );
    }
    if report.points.len() >= 2 {
        let last: Vec<f64> = report.points.iter().rev().take(2).map(|p| p.estimate).collect();
        let spread = last[0].max(last[1]) / last[0].min(last[1]);
        report.summary.insert("last_two_spread".into(), spread);
        report.summary.insert("stabilized".into(), if spread < 2.0 { 1.0 } else { 0.0 });
    } else {
        report.notes.push("fewer than two usable points, stabilization not assessed".into());
    }
    Ok(report)
}

/// Paired comparison of two tests on common paths. Rows are sweep points;
/// the estimate is power(B) - power(A) with a McNemar standard error.
pub fn compare_tests(plan_a: &McPlan, plan_b: &McPlan) -> Result<McReport> {
    if plan_a.spec != plan_b.spec
        || plan_a.base_seed != plan_b.base_seed
        || plan_a.replicates != plan_b.replicates
        || plan_a.sweep != plan_b.sweep
        || plan_a.sampler != plan_b.sampler
        || plan_a.test.regime != plan_b.test.regime
        || plan_a.test.hyp != plan_b.test.hyp
    {
        return Err(Error::Usage("compared plans must share model, hypotheses, seed, replicates and sweep".into()));
    }
    let mut report = McReport::new("compare", plan_a.param_name());
    let mut violations_total = 0u64;
    for (value, spec) in plan_a.points()? {
        let m = spec.basis.spectral_sum_m();
        let n_modes = spec.basis.n_modes();
        let c_a = decide_log_lr(&plan_a.test, 0.0, m, n_modes, spec.horizon)?.log_threshold_lr;
        let c_b = decide_log_lr(&plan_b.test, 0.0, m, n_modes, spec.horizon)?.log_threshold_lr;
        let mut point = McPoint::new(value, 0.0, 0.0).with("log_threshold_a", c_a).with("log_threshold_b", c_b);
        for (under, label) in [(Hypothesis::Null, "type1"), (Hypothesis::Alternative, "power")] {
            let theta = true_theta(&plan_a.test, under);
            let lrs = log_lr_samples(&spec, plan_a.sampler, &plan_a.test.hyp, theta, plan_a.base_seed, plan_a.replicates)?;
            let (mut ra, mut rb, mut only_a, mut only_b, mut violations) = (0u64, 0u64, 0u64, 0u64, 0u64);
            for &l in &lrs {
                let a = decide_log_lr(&plan_a.test, l, m, n_modes, spec.horizon)?.reject;
                let b = decide_log_lr(&plan_b.test, l, m, n_modes, spec.horizon)?.reject;
                ra += a as u64;
                rb += b as u64;
                only_a += (a && !b) as u64;
                only_b += (b && !a) as u64;
                // Ordered thresholds imply nested rejection regions.
                if (c_b <= c_a && a && !b) || (c_a <= c_b && b && !a) {
                    violations += 1;
                }
            }
            let n = lrs.len() as f64;
            let diff = (rb as f64 - ra as f64) / n;
            let disc = (only_a + only_b) as f64;
            let se = ((disc - n * diff * diff).max(0.0)).sqrt() / n;
            violations_total += violations;
            point = point
                .with(&format!("{label}_a"), ra as f64 / n)
                .with(&format!("{label}_b"), rb as f64 / n)
                .with(&format!("{label}_diff"), diff)
                .with(&format!("{label}_diff_se"), se)
                .with(&format!("{label}_only_a"), only_a as f64)
                .with(&format!("{label}_only_b"), only_b as f64)
                .with(&format!("{label}_nesting_violations"), violations as f64);
            if under == Hypothesis::Alternative {
                point.estimate = diff;
                point.standard_error = se;
            }
        }
        report.points.push(point);
    }
    report.summary.insert("nesting_violations".into(), violations_total as f64);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{EigenvalueModel, SpectralBasis};
    use approx::assert_relative_eq;

    fn plan(n: usize, t: f64, theta1: f64, reps: u64) -> McPlan {
        let basis = SpectralBasis::new(EigenvalueModel::default(), n, 1.0, 1.0).unwrap();
        let hyp = HypothesisPair::new(1.0, theta1).unwrap();
        McPlan {
            spec: ModelSpec::new(1.0, 1.0, basis, t, 100).unwrap(),
            test: TestSpec::new(Regime::LargeT, 0.05, 0.0, hyp).unwrap(),
            replicates: reps,
            base_seed: 77,
            sweep: None,
            sampler: Sampler::Exact,
        }
    }

    #[test]
    fn plans_and_reports_round_trip_through_json() {
        let mut p = plan(2, 3.0, 2.0, 50);
        p.sweep = Some(vec![3.0, 4.5]);
        p.test = p.test.with_shift(-0.5);
        let back: McPlan = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        let report = estimate_error_rate(&p, Hypothesis::Alternative).unwrap();
        let back: McReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn reports_are_deterministic_across_thread_counts() {
        let p = plan(3, 5.0, 1.5, 400);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| estimate_error_rate(&p, Hypothesis::Null)).unwrap();
        let b = four.install(|| estimate_error_rate(&p, Hypothesis::Null)).unwrap();
        assert_eq!(a, b);
        let g = McPlan { sampler: Sampler::Grid, replicates: 50, ..p };
        let a = one.install(|| normality_check(&g, Regime::LargeT)).unwrap();
        let b = four.install(|| normality_check(&g, Regime::LargeT)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn alpha_near_one_rejects_almost_always() {
        let mut p = plan(2, 10.0, 1.5, 2000);
        p.test.alpha = 0.99;
        let r = estimate_error_rate(&p, Hypothesis::Null).unwrap();
        let pt = &r.points[0];
        assert!((pt.estimate - 0.99).abs() < 0.02, "{}", pt.estimate);
        assert_relative_eq!(pt.standard_error, (pt.estimate * (1.0 - pt.estimate) / 2000.0).sqrt());
    }

    #[test]
    fn power_is_near_one_when_mt_is_large() {
        let p = plan(5, 50.0, 2.0, 2000);
        let r = estimate_error_rate(&p, Hypothesis::Alternative).unwrap();
        assert!(r.points[0].estimate >= 0.999);
    }

    #[test]
    fn sweep_produces_one_point_per_value() {
        let mut p = plan(2, 1.0, 1.5, 20);
        p.sweep = Some(vec![10.0, 20.0]);
        let r = estimate_error_rate(&p, Hypothesis::Null).unwrap();
        assert_eq!(r.points.iter().map(|x| x.param).collect::<Vec<_>>(), vec![10.0, 20.0]);
        p.sweep = Some(vec![20.0, 10.0]);
        assert!(p.validate().is_err());
        p.sweep = None;
        p.replicates = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn single_replicate_normality_is_flagged() {
        let p = plan(2, 5.0, 1.5, 1);
        let r = normality_check(&p, Regime::LargeT).unwrap();
        assert_eq!(r.points[0].get("low_power"), Some(1.0));
        assert!(r.points[0].get("ks_distance").unwrap() > 0.0);
        assert!(!r.notes.is_empty());
    }

    #[test]
    fn ks_distance_examples() {
        assert_relative_eq!(ks_distance(&[0.0], normal_cdf), 0.5);
        let n = 1000;
        let grid: Vec<f64> = (0..n).map(|i| normal_quantile((i as f64 + 0.5) / n as f64).unwrap()).collect();
        assert!(ks_distance(&grid, normal_cdf) <= 0.5 / n as f64 + 1e-9);
    }

    #[test]
    fn log_mean_exp_is_stable() {
        let (m, _) = log_mean_exp(&[1000.0, 1000.0]);
        assert_eq!(m, 1000.0);
        let (m, se) = log_mean_exp(&[0.0, 2f64.ln()]);
        assert_relative_eq!(m, 1.5f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(se, (0.5f64 / 2.0).sqrt() / 1.5, max_relative = 1e-12);
    }

    #[test]
    fn cgf_check_examples() {
        let h = HypothesisPair::new(1.0, 2.0).unwrap();
        let basis = SpectralBasis::new(EigenvalueModel::default(), 1, 1.0, 1.0).unwrap();
        let ctx = SldContext::new(h, basis, 1.0, 2.0).unwrap();
        let r = cgf_check(&ctx, &[0.0, -1.0, 1.0], 100_000, 5, Sampler::Exact).unwrap();
        assert_eq!(r.points[0].estimate, 0.0);
        assert_eq!(r.points[0].get("z"), Some(0.0));
        for p in &r.points[1..] {
            assert!(p.get("z").unwrap().abs() < 3.0, "eps {} z {:?}", p.param, p.get("z"));
        }
    }

    #[test]
    fn log_linear_fit_recovers_exact_exponentials() {
        let x = [10.0f64, 20.0, 30.0, 40.0];
        let p: Vec<f64> = x.iter().map(|t| 0.7 * (-0.01 * t).exp()).collect();
        let (slope, intercept) = fit_log_linear(&x, &p).unwrap();
        assert_relative_eq!(slope, -0.01, max_relative = 1e-12);
        assert_relative_eq!(intercept, 0.7f64.ln(), max_relative = 1e-12);
        assert!(fit_log_linear(&x[..1], &p[..1]).is_none());
        let with_zero = [p[0], 0.0, p[2], p[3]];
        assert_relative_eq!(fit_log_linear(&x, &with_zero).unwrap().0, -0.01, max_relative = 1e-12);
    }

    #[test]
    fn sld_ratio_is_constant_on_synthetic_input() {
        let h = HypothesisPair::new(1.0, 1.3).unwrap();
        let (m, q, c): (f64, f64, f64) = (1.0, -1.6448536269514722, 0.37);
        let k = h.diff_sq() / (2.0 * h.theta0) * (m / (2.0 * h.theta0)).sqrt();
        let ratios: Vec<f64> = [20.0f64, 40.0, 60.0]
            .iter()
            .map(|&t| {
                let log_a = -0.02 * t;
                let p = (log_a + c.ln() - k * t.sqrt() * q).exp() / t.sqrt();
                sld_ratio(p, log_a, t, m, &h, q, EtaStarRule::Standard)
            })
            .collect();
        for r in &ratios {
            assert_relative_eq!(*r, c, max_relative = 1e-12);
        }
        let wrong: Vec<f64> = [20.0f64, 40.0, 60.0]
            .iter()
            .map(|&t| {
                let log_a = -0.02 * t;
                let p = (log_a + c.ln() - k * t.sqrt() * q).exp() / t.sqrt();
                sld_ratio(p, log_a, t, m, &h, q, EtaStarRule::WrongSign)
            })
            .collect();
        assert!(wrong[2] / wrong[1] > 2.0 && wrong[1] / wrong[0] > 2.0);
    }

    #[test]
    fn identical_plans_compare_to_zero() {
        let p = plan(2, 5.0, 1.5, 500);
        let r = compare_tests(&p, &p).unwrap();
        let pt = &r.points[0];
        assert_eq!(pt.estimate, 0.0);
        assert_eq!(pt.get("type1_diff"), Some(0.0));
        assert_eq!(pt.get("power_diff"), Some(0.0));
        assert_eq!(r.summary_value("nesting_violations"), Some(0.0));

        let mut other = p.clone();
        other.base_seed += 1;
        assert!(compare_tests(&p, &other).is_err());
    }

    #[test]
    fn lowered_threshold_is_nested_and_inflates_type_one() {
        let a = plan(2, 10.0, 1.5, 3000);
        let b = McPlan { test: a.test.with_shift(-1.0), ..a.clone() };
        let r = compare_tests(&a, &b).unwrap();
        let pt = &r.points[0];
        assert_eq!(r.summary_value("nesting_violations"), Some(0.0));
        assert_eq!(pt.get("power_only_a"), Some(0.0));
        assert!(pt.get("type1_diff").unwrap() > 0.0);
        assert!(pt.estimate >= 0.0);

        let raised = McPlan { test: a.test.with_shift(1.0), ..a.clone() };
        let r = compare_tests(&a, &raised).unwrap();
        assert!(r.points[0].get("type1_diff").unwrap() < 0.0);
    }
}
