//! Column-wise comparison of two series files and convergence-order helpers.
//!
//! Tolerance spec grammar: comma-separated items, each either a bare number
//! (default tolerance for every column), `column=number`, or the flag
//! `interp` which allows linear interpolation of the second series onto the
//! time stamps of the first.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::output::{read_series, Series};

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerance {
    pub default: f64,
    pub per_column: BTreeMap<String, f64>,
    pub interpolate: bool,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { default: 1e-12, per_column: BTreeMap::new(), interpolate: false }
    }
}

impl Tolerance {
    pub fn parse(spec: &str) -> Result<Self> {
        let mut t = Self::default();
        let num = |s: &str| -> Result<f64> {
            let x: f64 = s.trim().parse().map_err(|_| invalid(format!("bad tolerance `{s}`")))?;
            if !(x >= 0.0) {
                return Err(invalid(format!("tolerance must be non-negative, got {x}")));
            }
            Ok(x)
        };
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if item == "interp" {
                t.interpolate = true;
            } else if let Some((k, v)) = item.split_once('=') {
                let k = k.trim();
                if k == "default" {
                    t.default = num(v)?;
                } else {
                    t.per_column.insert(k.to_string(), num(v)?);
                }
            } else {
                t.default = num(item)?;
            }
        }
        Ok(t)
    }

    pub fn for_column(&self, name: &str) -> f64 {
        self.per_column.get(name).copied().unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnReport {
    pub name: String,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub columns: Vec<ColumnReport>,
}

impl CompareReport {
    pub fn pass(&self) -> bool {
        self.columns.iter().all(|c| c.pass)
    }

    pub fn max_error(&self, column: &str) -> Option<f64> {
        self.columns.iter().find(|c| c.name == column).map(|c| c.max_rel_err)
    }

    /// Machine-readable CSV form.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("column,max_rel_err,tolerance,pass\n");
        for c in &self.columns {
            let _ = writeln!(s, "{},{:e},{:e},{}", c.name, c.max_rel_err, c.tolerance, c.pass);
        }
        s
    }
}

fn interp(ts: &[f64], ys: &[f64], t: f64) -> Option<f64> {
    let tol = 1e-12 * ts.last().copied().unwrap_or(1.0).abs().max(1.0);
    if ts.is_empty() || t < ts[0] - tol || t > ts[ts.len() - 1] + tol {
        return None;
    }
    let j = ts.partition_point(|x| *x < t);
    if j == 0 {
        return Some(ys[0]);
    }
    if j == ts.len() {
        return Some(ys[ts.len() - 1]);
    }
    let (t0, t1) = (ts[j - 1], ts[j]);
    let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    Some(ys[j - 1] + w * (ys[j] - ys[j - 1]))
}

fn same_times(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0))
}

/// Max over samples of `|a - b| / scale`, where `scale` is the largest
/// magnitude found in either column; identical zero columns give 0.
pub fn compare_series(a: &Series, b: &Series, tol: &Tolerance) -> Result<CompareReport> {
    if a.truncated || b.truncated {
        return Err(Error::MismatchedSeries("a series is truncated".into()));
    }
    if a.header != b.header {
        return Err(Error::MismatchedSeries("headers differ".into()));
    }
    let (ta, tb) = match (a.column("t"), b.column("t")) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::MismatchedSeries("missing `t` column".into())),
    };
    let aligned = same_times(&ta, &tb);
    if !aligned && !tol.interpolate {
        return Err(Error::MismatchedSeries(format!(
            "time stamps differ ({} vs {} samples); pass `interp` to interpolate",
            ta.len(),
            tb.len()
        )));
    }
    let mut columns = Vec::new();
    for name in a.header.iter().filter(|h| *h != "t") {
        let ya = a.column(name).expect("header checked");
        let yb_raw = b.column(name).expect("header checked");
        let yb: Vec<f64> = if aligned {
            yb_raw
        } else {
            ta.iter()
                .map(|t| interp(&tb, &yb_raw, *t).ok_or_else(|| Error::MismatchedSeries(format!("t = {t} outside second series"))))
                .collect::<Result<_>>()?
        };
        let scale = ya.iter().chain(&yb).fold(0.0f64, |m, x| m.max(x.abs()));
        let err = if scale == 0.0 {
            0.0
        } else {
            ya.iter().zip(&yb).fold(0.0f64, |m, (x, y)| m.max((x - y).abs() / scale))
        };
        let tolerance = tol.for_column(name);
        columns.push(ColumnReport { name: name.clone(), max_rel_err: err, tolerance, pass: err <= tolerance });
    }
    Ok(CompareReport { columns })
}

pub fn compare_runs(a: &Path, b: &Path, tol: &Tolerance) -> Result<CompareReport> {
    compare_series(&read_series(a)?, &read_series(b)?, tol)
}

/// `log(e_i / e_{i+1}) / log(ratio)` for consecutive ladder entries.
pub fn observed_orders(errors: &[f64], ratio: f64) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).ln() / ratio.ln()).collect()
}

pub fn is_non_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0])
}
