//! Small statistical helpers shared by the estimators and the test suite.

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    v
}

/// Linear-interpolation quantile (type 7) of an ascending-sorted sample.
pub fn quantile_sorted(xs: &[f64], p: f64) -> f64 {
    assert!(!xs.is_empty() && (0.0..=1.0).contains(&p));
    let h = p * (xs.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    xs[lo] + (h - lo as f64) * (xs[hi] - xs[lo])
}

pub fn quantile(xs: &[f64], p: f64) -> f64 {
    quantile_sorted(&sorted(xs), p)
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Two-sample Kolmogorov-Smirnov distance `sup |F_a - F_b|`.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level `p`:
/// `c(p) * sqrt((n+m)/(n*m))` with `c(p) = sqrt(-ln(p/2)/2)`.
pub fn ks_critical(n: usize, m: usize, p: f64) -> f64 {
    let c = (-(p / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Ordinary least squares of `y` on `x`.
#[derive(Clone, Debug)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope from the residual variance.
    pub slope_se: f64,
    pub r_squared: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::InvalidArgument("ols needs >= 3 paired points".into()));
    }
    let n = x.len() as f64;
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateSample("zero variance in regressor".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(u, v)| {
            let e = v - (intercept + slope * u);
            e * e
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    let slope_se = (ss_res / (n - 2.0) / sxx).sqrt();
    Ok(OlsFit { slope, intercept, slope_se, r_squared })
}

/// Mean of `exp(i * x)` over a sample, with per-component standard errors.
#[derive(Clone, Copy, Debug)]
pub struct ComplexMean {
    pub re: f64,
    pub im: f64,
    pub se_re: f64,
    pub se_im: f64,
    pub n: usize,
}

impl ComplexMean {
    pub fn modulus(&self) -> f64 {
        (self.re * self.re + self.im * self.im).sqrt()
    }
}

pub fn phase_mean(xs: &[f64]) -> ComplexMean {
    let cos: Vec<f64> = xs.iter().map(|x| x.cos()).collect();
    let sin: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
    ComplexMean {
        re: mean(&cos),
        im: mean(&sin),
        se_re: std_error(&cos),
        se_im: std_error(&sin),
        n: xs.len(),
    }
}

/// Ljung-Box statistic over the first `m` autocorrelation lags.
/// Under i.i.d. data it is asymptotically chi-squared with `m` dof.
pub fn ljung_box(xs: &[f64], m: usize) -> f64 {
    let n = xs.len() as f64;
    let mu = mean(xs);
    let denom: f64 = xs.iter().map(|x| (x - mu) * (x - mu)).sum();
    let mut q = 0.0;
    for k in 1..=m {
        let num: f64 = xs
            .windows(k + 1)
            .map(|w| (w[0] - mu) * (w[k] - mu))
            .sum();
        let rho = num / denom;
        q += rho * rho / (n - k as f64);
    }
    n * (n + 2.0) * q
}

/// 1% upper quantiles of the chi-squared distribution, indexed by dof.
pub fn chi2_crit_1pct(dof: usize) -> f64 {
    // Values from standard tables for the dofs used by the diagnostics.
    match dof {
        5 => 15.086,
        10 => 23.209,
        15 => 30.578,
        20 => 37.566,
        _ => panic!("chi-squared 1% critical value not tabulated for dof={dof}"),
    }
}

/// Standard normal upper-tail probability, via `erfc`.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Abramowitz-Stegun 7.1.26-style erfc, accurate to ~1.5e-7.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    poly * (-x * x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_and_median() {
        let xs = [3.0, 1.0, 2.0, 4.0];
        assert!((median(&xs) - 2.5).abs() < 1e-12);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
    }

    #[test]
    fn ks_distance_of_identical_samples_is_zero() {
        let xs = [0.3, -1.0, 2.0, 0.7];
        assert_eq!(ks_distance(&xs, &xs), 0.0);
    }

    #[test]
    fn ks_distance_of_disjoint_samples_is_one() {
        let a = [0.0, 1.0, 2.0];
        let b = [10.0, 11.0];
        assert_eq!(ks_distance(&a, &b), 1.0);
    }

    #[test]
    fn ks_critical_matches_tabulated_form() {
        // 1% level at n = m = 10^4: 1.628 * sqrt(2/10^4)
        let c = ks_critical(10_000, 10_000, 0.01);
        assert!((c - 1.628 * (2.0f64 / 1e4).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn ols_recovers_exact_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert!(fit.slope_se < 1e-9);
    }

    #[test]
    fn erfc_reference_values() {
        assert!((erfc(0.0) - 1.0).abs() < 1e-7);
        assert!((erfc(1.0) - 0.157299).abs() < 1e-5);
        assert!((normal_upper_tail(1.6448536) - 0.05).abs() < 1e-5);
    }
}
