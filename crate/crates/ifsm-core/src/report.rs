//! Run reports: canonical JSON (deterministic for a fixed config and seed),
//! plot-ready CSV outputs, and re-derivation of pass/fail verdicts from the
//! CSVs alone.

use crate::config::{Experiment, RunConfig, Tolerances};
use crate::diagnostics::{ConservativitySum, MixingCurve};
use crate::error::{Error, Result};
use crate::integral::ProcessSample;
use crate::subordinator::SubordinatorEnsemble;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub experiment: Experiment,
    pub pass: bool,
    pub metrics: serde_json::Value,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridEcho {
    pub half_width: f64,
    pub dx: f64,
    pub n_cells: usize,
}

/// Exact L1 kernel mass lost to spatial truncation at each requested time.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TruncationEntry {
    pub t: f64,
    pub mass: f64,
}

/// The canonical run report. Volatile quantities (wall time, cache hits,
/// thread count) are not serialized here so that identical config + seed
/// produce byte-identical files across thread counts; they go to the
/// side-car meta file instead.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub grid: Option<GridEcho>,
    pub results: Vec<ExperimentResult>,
    pub truncation: Vec<TruncationEntry>,
    pub notices: Vec<String>,
    pub all_pass: bool,
    #[serde(skip)]
    pub wall_time_secs: f64,
    #[serde(skip)]
    pub cache_hits: u32,
}

impl RunReport {
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }

    pub fn result(&self, experiment: Experiment) -> Option<&ExperimentResult> {
        self.results.iter().find(|r| r.experiment == experiment)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMeta {
    pub wall_time_secs: f64,
    pub cache_hits: u32,
    pub threads: usize,
}

// ---- CSV writers -----------------------------------------------------

pub fn mixing_csv(curve: &MixingCurve) -> String {
    let mut s = String::from("n,mu,stderr,bound\n");
    for i in 0..curve.n.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            curve.n[i], curve.mu[i], curve.stderr[i], curve.bound[i]
        );
    }
    s
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExponentCsvRow {
    pub config: String,
    pub alpha: f64,
    pub h_prime: f64,
    pub quantile: f64,
    pub h_hat: f64,
    pub stderr: f64,
    pub r_squared: f64,
    pub h_theory: f64,
}

pub fn exponents_csv(rows: &[ExponentCsvRow]) -> String {
    let mut s = String::from("config,alpha,h_prime,quantile,h_hat,stderr,r_squared,h_theory\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.config, r.alpha, r.h_prime, r.quantile, r.h_hat, r.stderr, r.r_squared, r.h_theory
        );
    }
    s
}

pub fn conservativity_csv(cons: &ConservativitySum) -> String {
    let mut s = String::from("x,n,s\n");
    for (p, &x) in cons.probes.iter().enumerate() {
        for (n, v) in cons.s[p].iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", x, n + 1, v);
        }
    }
    s
}

pub fn samples_csv(samples: &[ProcessSample], alpha: f64, h_prime: f64) -> String {
    let mut s = String::from("replicate_id,t,value,kernel,alpha,h_prime\n");
    for sample in samples {
        for (t, v) in sample.times.iter().zip(&sample.values) {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                sample.replicate_id,
                t,
                v,
                sample.kernel.name(),
                alpha,
                h_prime
            );
        }
    }
    s
}

pub fn paths_csv(ensemble: &SubordinatorEnsemble) -> String {
    let mut s = String::from("path_id,t,A\n");
    for i in 0..ensemble.n_paths {
        let path = ensemble.path(i);
        for (k, a) in path.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", i, ensemble.grid.point(k), a);
        }
    }
    s
}

// ---- verdict re-derivation from CSVs ----------------------------------

/// Re-derive the mixing verdict from mixing.csv content.
pub fn rederive_mixing(csv: &str, tol: &Tolerances) -> Result<bool> {
    let mut mu = Vec::new();
    let mut bound = Vec::new();
    for line in csv.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(Error::InvalidArgument(format!("bad mixing.csv row: {line}")));
        }
        mu.push(parse_f64(cols[1])?);
        bound.push(parse_f64(cols[3])?);
    }
    if mu.is_empty() {
        return Err(Error::InvalidArgument("empty mixing.csv".into()));
    }
    let decays = *mu.last().unwrap() <= tol.mixing_ratio * mu[0];
    let bounded = mu.iter().zip(&bound).all(|(m, b)| m <= b);
    Ok(decays && bounded)
}

/// Re-derive the exponent-fit verdict from exponents.csv content.
pub fn rederive_exponents(csv: &str, tol: &Tolerances) -> Result<bool> {
    let mut ok = true;
    let mut any = false;
    for line in csv.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(Error::InvalidArgument(format!("bad exponents.csv row: {line}")));
        }
        let alpha = parse_f64(cols[1])?;
        let h_hat = parse_f64(cols[4])?;
        let r2 = parse_f64(cols[6])?;
        let h_theory = parse_f64(cols[7])?;
        let tol_h = if alpha == 2.0 { tol.exponent_tol_gauss } else { tol.exponent_tol };
        ok &= (h_hat - h_theory).abs() <= tol_h && r2 > tol.r2_min;
        any = true;
    }
    if !any {
        return Err(Error::InvalidArgument("empty exponents.csv".into()));
    }
    Ok(ok)
}

/// Re-derive the conservativity verdict from conservativity.csv content.
pub fn rederive_conservativity(csv: &str, tol: &Tolerances) -> Result<bool> {
    use std::collections::BTreeMap;
    let mut by_probe: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
    for line in csv.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::InvalidArgument(format!("bad conservativity.csv row: {line}")));
        }
        let n: usize = cols[1]
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad n in row: {line}")))?;
        by_probe.entry(cols[0].to_string()).or_default().push((n, parse_f64(cols[2])?));
    }
    if by_probe.is_empty() {
        return Err(Error::InvalidArgument("empty conservativity.csv".into()));
    }
    let mut ok = true;
    for rows in by_probe.values() {
        let mut rows = rows.clone();
        rows.sort_by_key(|r| r.0);
        ok &= rows.windows(2).all(|w| w[1].1 >= w[0].1);
        ok &= rows.last().unwrap().1 >= tol.cons_min_s;
        // growth refit over the upper decades
        let n_lo = rows.last().unwrap().0 / 100;
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|(n, s)| *n >= n_lo.max(10) && *s > 0.0)
            .map(|(n, s)| ((*n as f64).ln(), s.ln()))
            .collect();
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let fit = crate::stats::ols(&xs, &ys)?;
        ok &= fit.slope > tol.growth_lo && fit.slope < tol.growth_hi;
    }
    Ok(ok)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad float in CSV: '{s}'")))
}

pub fn write_out(dir: &Path, name: &str, content: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), content)?;
    Ok(())
}
