//! Command runners. Each reads a validated `RunConfig` and writes its result
//! to `out` (or stdout).

use std::fs::File;
use std::io::{self, BufWriter, Write};

use serde_json::{json, Map, Value};
use spde_hypotest::montecarlo::{compare_tests, estimate_error_rate, Hypothesis, McPlan, McPoint, McReport, Sampler};
use spde_hypotest::numeric::fmt_g17;
use spde_hypotest::ou_sim::{simulate, ExactStatsSampler};
use spde_hypotest::sld::{c_limit, cgf_log_l, ntilde_decomposition, rate_i, saddle_t};
use spde_hypotest::stats::{mle, sufficient_stats};
use spde_hypotest::decide;

use crate::config::{Format, RunConfig, Table};
use crate::CliError;

/// The subcommands, by CLI name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Test,
    Type1,
    Power,
    Sweep,
    SldTable,
    Compare,
}

pub fn run(command: Command, cfg: &RunConfig) -> Result<(), CliError> {
    match command {
        Command::Simulate => cmd_simulate(cfg),
        Command::Test => cmd_test(cfg),
        Command::Type1 => cmd_rate(cfg, Hypothesis::Null),
        Command::Power => cmd_rate(cfg, Hypothesis::Alternative),
        Command::Sweep => cmd_sweep(cfg),
        Command::SldTable => cmd_sld_table(cfg),
        Command::Compare => cmd_compare(cfg),
    }
}

fn open_output(cfg: &RunConfig) -> Result<Box<dyn Write>, CliError> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            CliError::Runtime(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn config_json(cfg: &RunConfig) -> Value {
    let mut map = Map::new();
    for (k, v) in cfg.to_pairs() {
        let value = if let Ok(n) = v.parse::<u64>() {
            Value::from(n)
        } else if let Some(x) = v.parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
            Value::Number(x)
        } else {
            Value::String(v)
        };
        map.insert(k.to_string(), value);
    }
    Value::Object(map)
}

fn write_report(cfg: &RunConfig, report: &McReport) -> Result<(), CliError> {
    let mut out = open_output(cfg)?;
    match cfg.format {
        Format::Csv => {
            out.write_all(cfg.header().as_bytes())?;
            for note in &report.notes {
                writeln!(out, "## note: {note}")?;
            }
            for (k, v) in &report.summary {
                writeln!(out, "## summary: {k}={}", fmt_g17(*v))?;
            }
            report.write_csv(&mut out)?;
        }
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &json!({ "config": config_json(cfg), "report": report }))?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes a trajectory CSV (`t,u_1,...,u_N`).
pub fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.model_spec()?;
    let traj = simulate(&spec, cfg.seed)?;
    let mut out = open_output(cfg)?;
    traj.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

/// One path under `theta`, then the test decision as a JSON line.
pub fn cmd_test(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.model_spec()?;
    let test = cfg.test_spec()?;
    let stats = match cfg.sampler {
        Sampler::Exact => ExactStatsSampler::new(&spec)?.sample(cfg.seed, 0),
        Sampler::Grid => sufficient_stats(&simulate(&spec, cfg.seed)?),
    };
    let outcome = decide(&test, &stats)?;
    let mut value = serde_json::to_value(outcome)?;
    if let (Value::Object(map), Ok(theta_hat)) = (&mut value, mle(&stats)) {
        map.insert("theta_hat".into(), json!(theta_hat));
    }
    let mut out = open_output(cfg)?;
    writeln!(out, "{}", serde_json::to_string(&value)?)?;
    out.flush()?;
    Ok(())
}

fn cmd_rate(cfg: &RunConfig, under: Hypothesis) -> Result<(), CliError> {
    let report = estimate_error_rate(&cfg.plan()?, under)?;
    write_report(cfg, &report)
}

/// Type I and power side by side, one row per sweep point.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.sweep.is_none() {
        return Err(CliError::Config(crate::ConfigError("sweep needs a `sweep` list".into())));
    }
    let plan = cfg.plan()?;
    let null = estimate_error_rate(&plan, Hypothesis::Null)?;
    let alt = estimate_error_rate(&plan, Hypothesis::Alternative)?;
    let mut report = McReport::new("sweep", plan.param_name());
    report.notes = null.notes.clone();
    for (a, b) in null.points.iter().zip(&alt.points) {
        let mut p = McPoint::new(a.param, b.estimate, b.standard_error)
            .with("type1", a.estimate)
            .with("type1_se", a.standard_error)
            .with("type_ii", 1.0 - b.estimate)
            .with("M", a.get("M").unwrap_or(f64::NAN))
            .with("log_threshold", a.get("log_threshold").unwrap_or(f64::NAN));
        if let Some(pred) = a.get("predicted") {
            p = p.with("predicted_type1", pred);
        }
        report.points.push(p);
    }
    write_report(cfg, &report)
}

/// Baseline test against the same test with `shift = compare_shift`.
pub fn cmd_compare(cfg: &RunConfig) -> Result<(), CliError> {
    let base: McPlan = cfg.plan()?;
    let mut other = base.clone();
    other.test = other.test.with_shift(cfg.compare_shift);
    let report = compare_tests(&base, &other)?;
    write_report(cfg, &report)
}

fn default_grid(cfg: &RunConfig) -> Result<Vec<f64>, CliError> {
    let hyp = cfg.hypotheses()?;
    Ok(match cfg.table {
        Table::Cgf => {
            let lo = hyp.eps_minus();
            let mut g: Vec<f64> = (1..=20).map(|i| lo + (3.0 - lo) * i as f64 / 20.0).collect();
            g.extend([0.0, -1.0]);
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        }
        Table::Rate => {
            let m = cfg.basis()?.spectral_sum_m();
            let (lo, hi) = (-0.95 * hyp.diff() * m, 0.95 * hyp.diff() * hyp.diff() * m / (4.0 * hyp.theta1));
            (0..=20).map(|i| lo + (hi - lo) * i as f64 / 20.0).collect()
        }
    })
}

/// Plot-ready CGF or rate-function table.
pub fn cmd_sld_table(cfg: &RunConfig) -> Result<(), CliError> {
    let ctx = cfg.sld_context()?;
    let grid = match &cfg.grid {
        Some(g) => g.clone(),
        None => default_grid(cfg)?,
    };
    let (columns, rows): (&[&str], Vec<Vec<f64>>) = match cfg.table {
        Table::Cgf => (
            &["eps", "ln_m_t", "c", "l_tilde", "h_tilde", "r_tilde"],
            grid.iter()
                .map(|&e| {
                    let (l, h, r) = ntilde_decomposition(&ctx.hyp, &ctx.basis, ctx.horizon, e)?;
                    Ok(vec![e, cgf_log_l(&ctx, e)?, c_limit(&ctx.hyp, ctx.m, e)?, l, h, r])
                })
                .collect::<Result<_, spde_hypotest::Error>>()?,
        ),
        Table::Rate => (
            &["eta", "rate", "eps_eta", "varsigma_sq"],
            grid.iter()
                .map(|&eta| {
                    let sp = saddle_t(&ctx, eta)?;
                    Ok(vec![eta, rate_i(&ctx.hyp, ctx.m, eta), sp.epsilon, sp.variance])
                })
                .collect::<Result<_, spde_hypotest::Error>>()?,
        ),
    };
    let mut out = open_output(cfg)?;
    match cfg.format {
        Format::Csv => {
            out.write_all(cfg.header().as_bytes())?;
            writeln!(out, "{}", columns.join(","))?;
            for row in &rows {
                writeln!(out, "{}", row.iter().map(|&v| fmt_g17(v + 0.0)).collect::<Vec<_>>().join(","))?;
            }
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| Value::Object(columns.iter().zip(r).map(|(c, &v)| (c.to_string(), json!(v))).collect()))
                .collect();
            serde_json::to_writer_pretty(&mut out, &json!({ "config": config_json(cfg), "rows": rows }))?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}
