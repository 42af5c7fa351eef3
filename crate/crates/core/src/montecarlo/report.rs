use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::numeric::fmt_g17;

/// One sweep point: a parameter value, an estimate and its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McPoint {
    pub param: f64,
    pub estimate: f64,
    pub standard_error: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl McPoint {
    pub fn new(param: f64, estimate: f64, standard_error: f64) -> Self {
        Self { param, estimate, standard_error, diagnostics: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub kind: String,
    /// Name of the swept parameter.
    pub param_name: String,
    pub points: Vec<McPoint>,
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl McReport {
    pub fn new(kind: &str, param_name: &str) -> Self {
        Self {
            kind: kind.to_string(),
            param_name: param_name.to_string(),
            points: Vec::new(),
            summary: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.get(key).copied()
    }

    fn diagnostic_keys(&self) -> Vec<String> {
        let keys: BTreeSet<&String> = self.points.iter().flat_map(|p| p.diagnostics.keys()).collect();
        keys.into_iter().cloned().collect()
    }

    /// One row per point; missing diagnostics are left empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let keys = self.diagnostic_keys();
        write!(out, "{},estimate,standard_error", self.param_name)?;
        for k in &keys {
            write!(out, ",{k}")?;
        }
        writeln!(out)?;
        for p in &self.points {
            write!(out, "{},{},{}", fmt_g17(p.param), fmt_g17(p.estimate), fmt_g17(p.standard_error))?;
            for k in &keys {
                match p.get(k) {
                    Some(v) => write!(out, ",{}", fmt_g17(v))?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// A binomial proportion k/n with its standard error √(p(1-p)/n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub count: u64,
    pub n: u64,
}

impl Proportion {
    pub fn p(&self) -> f64 {
        self.count as f64 / self.n as f64
    }

    pub fn se(&self) -> f64 {
        let p = self.p();
        (p * (1.0 - p) / self.n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_a_column_per_diagnostic() {
        let mut r = McReport::new("demo", "T");
        r.points.push(McPoint::new(10.0, 0.5, 0.1).with("z", 1.0));
        r.points.push(McPoint::new(20.0, 0.25, 0.05).with("alpha", 0.05));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "T,estimate,standard_error,alpha,z\n10,0.5,0.10000000000000001,,1\n20,0.25,0.050000000000000003,0.050000000000000003,\n");
    }

    #[test]
    fn proportion_se_is_binomial() {
        let p = Proportion { count: 30, n: 100 };
        assert_eq!(p.p(), 0.3);
        assert!((p.se() - (0.3f64 * 0.7 / 100.0).sqrt()).abs() < 1e-16);
    }
}
