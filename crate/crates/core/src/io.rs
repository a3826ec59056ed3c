//! Run configuration, manifests, reports and emitters.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const PRECISION_ENV: &str = "ZETAHESS_PRECISION";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Latex,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Format::Text),
            "latex" => Ok(Format::Latex),
            "json" => Ok(Format::Json),
            _ => Err(Error::Parse(format!("unknown format '{s}' (text, latex, json)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Double,
    Extended,
}

impl FromStr for Precision {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "double" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            _ => Err(Error::Parse(format!("unknown precision '{s}' (double, extended)"))),
        }
    }
}

impl Precision {
    /// Explicit flag, else the environment, else double.
    pub fn resolve(flag: Option<&str>) -> Result<Precision> {
        match flag {
            Some(f) => f.parse(),
            None => match std::env::var(PRECISION_ENV) {
                Ok(v) if !v.trim().is_empty() => v.parse().map_err(|e| Error::Parse(format!("{PRECISION_ENV}: {e}"))),
                _ => Ok(Precision::Double),
            },
        }
    }
}

/// "re,im" or a bare real. Decimal points only; no locale handling.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| -> Result<f64> {
        let v: f64 = x.parse().map_err(|_| Error::Parse(format!("'{x}' is not a number")))?;
        if !v.is_finite() {
            return Err(Error::Parse(format!("'{x}' is not finite")));
        }
        Ok(v)
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(Error::Parse(format!("complex '{s}': expected \"re,im\""))),
    }
}

/// Comma-separated reals.
pub fn parse_vector(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            let x = x.trim();
            x.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse(format!("'{x}' is not a finite number")))
        })
        .collect()
}

/// Rows separated by ';', entries by ','; entries are exact rationals "p/q".
pub fn parse_rational_matrix(s: &str) -> Result<Vec<Vec<num_rational::BigRational>>> {
    s.split(';').map(|row| row.split(',').map(|x| crate::poly::parse_rational(x.trim())).collect()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: Value,
    pub seeds: Vec<u64>,
    pub threads: Option<usize>,
    pub precision: Precision,
    pub parallel: bool,
}

impl Manifest {
    pub fn new(command: &str, config: Value, seeds: Vec<u64>, threads: Option<usize>, precision: Precision) -> Self {
        Manifest {
            tool: "zetahess".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config,
            seeds,
            threads,
            precision,
            parallel: cfg!(feature = "parallel"),
        }
    }
}

/// One measured comparison: what was computed, against what, and the budget.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CheckRow {
    pub criterion: Option<u32>,
    pub name: String,
    pub parameters: Value,
    pub lhs: Value,
    pub rhs: Value,
    pub error: f64,
    pub budget: f64,
    pub pass: bool,
    pub runtime_s: f64,
}

impl CheckRow {
    /// Passes when error ≤ budget (NaN never passes).
    pub fn measured(criterion: Option<u32>, name: &str, parameters: Value, lhs: Value, rhs: Value, error: f64, budget: f64, runtime_s: f64) -> Self {
        CheckRow { criterion, name: name.into(), parameters, lhs, rhs, error, budget, pass: error <= budget, runtime_s }
    }

    pub fn failed(criterion: Option<u32>, name: &str, parameters: Value, why: &str, runtime_s: f64) -> Self {
        CheckRow {
            criterion,
            name: name.into(),
            parameters,
            lhs: Value::String(why.into()),
            rhs: Value::Null,
            error: f64::INFINITY,
            budget: 0.0,
            pass: false,
            runtime_s,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub manifest: Manifest,
    pub suite: String,
    pub rows: Vec<CheckRow>,
    pub failures: usize,
}

impl Report {
    pub fn new(manifest: Manifest, suite: &str, rows: Vec<CheckRow>) -> Self {
        let failures = rows.iter().filter(|r| !r.pass).count();
        Report { manifest, suite: suite.into(), rows, failures }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let tag = if r.pass { "PASS" } else { "FAIL" };
            let crit = r.criterion.map(|c| format!("[{c}] ")).unwrap_or_default();
            s += &format!("{tag} {crit}{}: error {:.3e} (budget {:.1e}, {:.2} s)\n", r.name, r.error, r.budget, r.runtime_s);
        }
        s += &format!("{} checks, {} failed\n", self.rows.len(), self.failures);
        s
    }
}

/// Wall-clock timer for report rows.
pub struct Timer(Instant);

impl Timer {
    pub fn start() -> Self {
        Timer(Instant::now())
    }
    pub fn secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// A CSV table: header plus rows of cells.
pub fn write_csv<W: Write>(w: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    wr.write_record(header).map_err(io)?;
    for r in rows {
        wr.write_record(r).map_err(io)?;
    }
    wr.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    Ok(())
}

pub fn report_csv(r: &Report) -> Result<String> {
    let rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|c| {
            vec![
                c.criterion.map(|x| x.to_string()).unwrap_or_default(),
                c.name.clone(),
                c.parameters.to_string(),
                c.lhs.to_string(),
                c.rhs.to_string(),
                format!("{:e}", c.error),
                format!("{:e}", c.budget),
                c.pass.to_string(),
                format!("{:.4}", c.runtime_s),
            ]
        })
        .collect();
    let mut buf = Vec::new();
    write_csv(&mut buf, &["criterion", "name", "parameters", "lhs", "rhs", "error", "budget", "pass", "runtime_s"], &rows)?;
    Ok(String::from_utf8(buf).expect("utf-8"))
}

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

/// JSON number, or a string for non-finite values (JSON has no NaN).
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(x.to_string()))
}

pub fn cnum(z: Complex64) -> Value {
    serde_json::json!([num(z.re), num(z.im)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("0.5,-1").unwrap(), Complex64::new(0.5, -1.0));
        assert_eq!(parse_complex(" 2 ").unwrap(), Complex64::new(2.0, 0.0));
        assert!(parse_complex("1,2,3").is_err());
        assert!(parse_complex("0,5;1").is_err());
        assert!(parse_complex("nan").is_err());
    }

    #[test]
    fn rational_matrix() {
        let m = parse_rational_matrix("1,0;0,-1/2").unwrap();
        assert_eq!(m[1][1], crate::poly::rat(-1, 2));
        assert!(parse_rational_matrix("1,x").is_err());
    }

    #[test]
    fn csv_quotes_fields() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["a", "b"], &[vec!["1,2".into(), "x".into()]]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n\"1,2\",x\n");
    }

    #[test]
    fn nan_is_a_string() {
        assert_eq!(num(f64::NAN), Value::String("NaN".into()));
    }
}
