//! Flat `key = value` run configuration.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use spde_hypotest::montecarlo::{McPlan, Sampler};
use spde_hypotest::numeric::fmt_g17;
use spde_hypotest::ou_sim::{ModelSpec, DEFAULT_STEPS_PER_UNIT};
use spde_hypotest::sld::SldContext;
use spde_hypotest::stats::{HypothesisPair, Regime};
use spde_hypotest::{EigenvalueModel, SpectralBasis, TestSpec};

/// A configuration problem; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenKind {
    Interval,
    PowerLaw,
}

impl FromStr for EigenKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "interval" => Ok(Self::Interval),
            "power-law" | "powerlaw" => Ok(Self::PowerLaw),
            _ => Err(format!("unknown eigenvalue model `{s}` (expected interval or power-law)")),
        }
    }
}

impl fmt::Display for EigenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Interval => "interval",
            Self::PowerLaw => "power-law",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

/// Which `sld-table` to print.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Table {
    Cgf,
    Rate,
}

impl FromStr for Table {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cgf" => Ok(Self::Cgf),
            "rate" => Ok(Self::Rate),
            _ => Err(format!("unknown table `{s}` (expected cgf or rate)")),
        }
    }
}

impl fmt::Display for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Cgf => "cgf",
            Self::Rate => "rate",
        })
    }
}

/// Every setting a command can use. Unset optional fields are omitted from
/// report headers.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub theta: Option<f64>,
    pub theta0: Option<f64>,
    pub theta1: Option<f64>,
    pub sigma: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eigen_model: EigenKind,
    pub length: f64,
    pub dim: u32,
    pub varpi: f64,
    pub n_modes: usize,
    pub horizon: f64,
    pub steps_per_unit: u32,
    pub alpha: f64,
    pub delta: f64,
    pub shift: f64,
    pub compare_shift: f64,
    pub regime: Regime,
    pub reps: u64,
    pub seed: u64,
    pub sweep: Option<Vec<f64>>,
    pub grid: Option<Vec<f64>>,
    pub table: Table,
    pub sampler: Sampler,
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            theta: None,
            theta0: None,
            theta1: None,
            sigma: 1.0,
            beta: 1.0,
            gamma: 1.0,
            eigen_model: EigenKind::Interval,
            length: PI,
            dim: 1,
            varpi: 1.0,
            n_modes: 1,
            horizon: 1.0,
            steps_per_unit: DEFAULT_STEPS_PER_UNIT,
            alpha: 0.05,
            delta: 0.0,
            shift: 0.0,
            compare_shift: -1.0,
            regime: Regime::LargeT,
            reps: 1000,
            seed: 0,
            sweep: None,
            grid: None,
            table: Table::Cgf,
            sampler: Sampler::Exact,
            out: None,
            format: Format::Csv,
        }
    }
}

/// All recognised keys, in header order.
pub const KEYS: &[&str] = &[
    "theta",
    "theta0",
    "theta1",
    "sigma",
    "beta",
    "gamma",
    "eigen_model",
    "length",
    "dim",
    "varpi",
    "n_modes",
    "horizon",
    "steps_per_unit",
    "alpha",
    "delta",
    "shift",
    "compare_shift",
    "regime",
    "reps",
    "seed",
    "sweep",
    "grid",
    "table",
    "sampler",
    "out",
    "format",
];

fn parse<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("cannot parse `{value}`: {e}"))
}

fn parse_list(value: &str) -> Result<Vec<f64>, String> {
    value.split(',').map(|v| parse::<f64>(v.trim())).collect()
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_g17(v)).collect::<Vec<_>>().join(",")
}

/// Accepts `n-modes`, `n_modes` and `--n-modes` alike.
pub fn normalize_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

impl RunConfig {
    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let key = normalize_key(key);
        let value = value.trim();
        match key.as_str() {
            "theta" => self.theta = Some(parse(value)?),
            "theta0" => self.theta0 = Some(parse(value)?),
            "theta1" => self.theta1 = Some(parse(value)?),
            "sigma" => self.sigma = parse(value)?,
            "beta" => self.beta = parse(value)?,
            "gamma" => self.gamma = parse(value)?,
            "eigen_model" => self.eigen_model = parse(value)?,
            "length" => self.length = parse(value)?,
            "dim" => self.dim = parse(value)?,
            "varpi" => self.varpi = parse(value)?,
            "n_modes" => self.n_modes = parse(value)?,
            "horizon" => self.horizon = parse(value)?,
            "steps_per_unit" => self.steps_per_unit = parse(value)?,
            "alpha" => self.alpha = parse(value)?,
            "delta" => self.delta = parse(value)?,
            "shift" => self.shift = parse(value)?,
            "compare_shift" => self.compare_shift = parse(value)?,
            "regime" => self.regime = parse(value)?,
            "reps" => self.reps = parse(value)?,
            "seed" => self.seed = parse(value)?,
            "sweep" => self.sweep = Some(parse_list(value)?),
            "grid" => self.grid = Some(parse_list(value)?),
            "table" => self.table = parse(value)?,
            "sampler" => self.sampler = parse(value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = parse(value)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped;
    /// errors name the line and field.
    pub fn apply_text(&mut self, text: &str, source: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("{source}:{}: expected `key = value`, got `{line}`", i + 1));
            };
            self.set(key, value)
                .map_err(|e| ConfigError(format!("{source}:{}: field `{}`: {e}", i + 1, normalize_key(key))))?;
        }
        Ok(())
    }

    /// Rebuilds a config from the `# key=value` header of a report; parsing
    /// stops at the first line without that prefix (`## ` notes included).
    pub fn from_header(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let body: String = text
            .lines()
            .map_while(|l| l.strip_prefix("# "))
            .filter(|l| l.contains('='))
            .map(|l| format!("{l}\n"))
            .collect();
        cfg.apply_text(&body, "header")?;
        Ok(cfg)
    }

    /// Every set field as (key, value), in `KEYS` order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: String| out.push((k, v));
        if let Some(v) = self.theta {
            push("theta", fmt_g17(v));
        }
        if let Some(v) = self.theta0 {
            push("theta0", fmt_g17(v));
        }
        if let Some(v) = self.theta1 {
            push("theta1", fmt_g17(v));
        }
        push("sigma", fmt_g17(self.sigma));
        push("beta", fmt_g17(self.beta));
        push("gamma", fmt_g17(self.gamma));
        push("eigen_model", self.eigen_model.to_string());
        push("length", fmt_g17(self.length));
        push("dim", self.dim.to_string());
        push("varpi", fmt_g17(self.varpi));
        push("n_modes", self.n_modes.to_string());
        push("horizon", fmt_g17(self.horizon));
        push("steps_per_unit", self.steps_per_unit.to_string());
        push("alpha", fmt_g17(self.alpha));
        push("delta", fmt_g17(self.delta));
        push("shift", fmt_g17(self.shift));
        push("compare_shift", fmt_g17(self.compare_shift));
        push("regime", self.regime.to_string());
        push("reps", self.reps.to_string());
        push("seed", self.seed.to_string());
        if let Some(v) = &self.sweep {
            push("sweep", fmt_list(v));
        }
        if let Some(v) = &self.grid {
            push("grid", fmt_list(v));
        }
        push("table", self.table.to_string());
        push("sampler", self.sampler.to_string());
        if let Some(p) = &self.out {
            push("out", p.display().to_string());
        }
        push("format", self.format.to_string());
        out
    }

    /// `# key=value` lines describing this config.
    pub fn header(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("# {k}={v}\n")).collect()
    }

    fn require(&self, field: Option<f64>, name: &str) -> Result<f64, ConfigError> {
        field.ok_or_else(|| ConfigError(format!("missing required field `{name}`")))
    }

    pub fn eigenvalue_model(&self) -> Result<EigenvalueModel, ConfigError> {
        let model = match self.eigen_model {
            EigenKind::Interval => EigenvalueModel::ExactInterval1D { length: self.length },
            EigenKind::PowerLaw => EigenvalueModel::PowerLaw { varpi: self.varpi, dim: self.dim },
        };
        model.validate().map_err(|e| ConfigError(format!("eigenvalue model: {e}")))?;
        Ok(model)
    }

    pub fn basis(&self) -> Result<SpectralBasis, ConfigError> {
        SpectralBasis::new(self.eigenvalue_model()?, self.n_modes, self.beta, self.gamma)
            .map_err(|e| ConfigError(format!("spectral basis: {e}")))
    }

    /// Model spec with the true drift taken from `theta`.
    pub fn model_spec(&self) -> Result<ModelSpec, ConfigError> {
        let theta = self.require(self.theta, "theta")?;
        self.model_spec_at(theta)
    }

    fn model_spec_at(&self, theta: f64) -> Result<ModelSpec, ConfigError> {
        ModelSpec::new(theta, self.sigma, self.basis()?, self.horizon, self.steps_per_unit)
            .map_err(|e| ConfigError(format!("model: {e}")))
    }

    pub fn hypotheses(&self) -> Result<HypothesisPair, ConfigError> {
        let t0 = self.require(self.theta0, "theta0")?;
        let t1 = self.require(self.theta1, "theta1")?;
        HypothesisPair::new(t0, t1).map_err(|e| ConfigError(format!("hypotheses: {e}")))
    }

    pub fn test_spec(&self) -> Result<TestSpec, ConfigError> {
        TestSpec::new(self.regime, self.alpha, self.delta, self.hypotheses()?)
            .map(|t| t.with_shift(self.shift))
            .and_then(|t| t.validate().map(|_| t))
            .map_err(|e| ConfigError(format!("test: {e}")))
    }

    pub fn plan(&self) -> Result<McPlan, ConfigError> {
        let test = self.test_spec()?;
        let plan = McPlan {
            spec: self.model_spec_at(test.hyp.theta0)?,
            test,
            replicates: self.reps,
            base_seed: self.seed,
            sweep: self.sweep.clone(),
            sampler: self.sampler,
        };
        plan.validate().map_err(|e| ConfigError(format!("plan: {e}")))?;
        plan.points().map_err(|e| ConfigError(format!("sweep: {e}")))?;
        Ok(plan)
    }

    pub fn sld_context(&self) -> Result<SldContext, ConfigError> {
        SldContext::new(self.hypotheses()?, self.basis()?, self.sigma, self.horizon)
            .map_err(|e| ConfigError(format!("sld: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn errors_name_line_and_field() {
        let mut cfg = RunConfig::default();
        let e = cfg.apply_text("theta0 = 1\n\n# note\nn-modes = two\n", "run.cfg").unwrap_err();
        assert!(e.0.contains("run.cfg:4"), "{e}");
        assert!(e.0.contains("`n_modes`"), "{e}");
        let e = cfg.apply_text("bogus = 1", "run.cfg").unwrap_err();
        assert!(e.0.contains("unknown key"), "{e}");
    }

    #[test]
    fn missing_theta_is_named() {
        let e = RunConfig::default().model_spec().unwrap_err();
        assert!(e.0.contains("`theta`"), "{e}");
    }

    #[test]
    fn invariants_are_checked_when_building() {
        let mut cfg = RunConfig { theta0: Some(2.0), theta1: Some(1.0), ..Default::default() };
        assert!(cfg.test_spec().is_err());
        cfg.theta0 = Some(1.0);
        cfg.theta1 = Some(2.0);
        cfg.gamma = 0.4;
        assert!(cfg.basis().is_err());
    }

    proptest! {
        #[test]
        fn header_round_trips(
            theta in proptest::option::of(0.01f64..10.0),
            sigma in 0.1f64..5.0,
            n in 1usize..300,
            t in 0.01f64..1e3,
            shift in -3.0f64..3.0,
            seed in any::<u64>(),
            sweep in proptest::option::of(proptest::collection::vec(0.1f64..100.0, 1..5)),
            large_n in any::<bool>(),
            json in any::<bool>(),
        ) {
            let cfg = RunConfig {
                theta,
                theta0: Some(1.0 / 3.0),
                theta1: Some(2.0),
                sigma,
                n_modes: n,
                horizon: t,
                shift,
                seed,
                sweep,
                regime: if large_n { Regime::LargeN } else { Regime::LargeT },
                format: if json { Format::Json } else { Format::Csv },
                sampler: if json { Sampler::Grid } else { Sampler::Exact },
                out: Some(PathBuf::from("out dir/report.csv")),
                ..Default::default()
            };
            prop_assert_eq!(RunConfig::from_header(&cfg.header()).unwrap(), cfg);
        }
    }
}
