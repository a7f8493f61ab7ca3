//! Statistical verification of the theorem-level claims: self-similarity
//! exponents, stationarity of increments, mixing of the stationary noise
//! with its analytic bound, conservativity sums, and the extreme-value
//! statistic.

use crate::error::{Error, Result};
use crate::integral::{NoiseSample, ProcessSample};
use crate::stats;
use crate::subordinator::SubordinatorEnsemble;
use serde::Serialize;

/// Quantile-regression estimate of the self-similarity exponent.
#[derive(Clone, Debug, Serialize)]
pub struct ExponentFit {
    pub h_hat: f64,
    pub stderr: f64,
    pub quantile: f64,
    pub times: Vec<f64>,
    pub r_squared: f64,
}

/// Least-squares slope of `log q_p(|Y(t)|)` against `log t`.
///
/// Heavy tails rule out moment-based estimators for alpha < 2, so the fit
/// uses quantiles; any p in (0,1) works.
pub fn estimate_selfsim_exponent(samples: &[ProcessSample], p: f64) -> Result<ExponentFit> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("quantile must lie in (0,1), got {p}")));
    }
    if samples.len() < 1000 {
        return Err(Error::InsufficientReplicates { got: samples.len(), need: 1000 });
    }
    let times: Vec<f64> =
        samples[0].times.iter().copied().filter(|&t| t > 0.0).collect();
    if times.len() < 5 {
        return Err(Error::InvalidArgument("exponent fit needs at least 5 positive times".into()));
    }
    let span = times.iter().cloned().fold(f64::MIN, f64::max)
        / times.iter().cloned().fold(f64::MAX, f64::min);
    if span < 100.0 * (1.0 - 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "exponent fit times must span at least two decades, got ratio {span:.3}"
        )));
    }
    let mut xs = Vec::with_capacity(times.len());
    let mut ys = Vec::with_capacity(times.len());
    for &t in &times {
        let abs: Vec<f64> = samples
            .iter()
            .map(|s| s.value_at(t).ok_or(Error::TimeNotOnGrid(t)).map(f64::abs))
            .collect::<Result<_>>()?;
        let q = stats::quantile(&abs, p);
        if q <= 0.0 {
            return Err(Error::DegenerateSample(format!("zero {p}-quantile of |Y({t})|")));
        }
        xs.push(t.ln());
        ys.push(q.ln());
    }
    let fit = stats::ols(&xs, &ys)?;
    Ok(ExponentFit {
        h_hat: fit.slope,
        stderr: fit.slope_se,
        quantile: p,
        times,
        r_squared: fit.r_squared,
    })
}

/// Max two-sample KS distance between shifted increments and the base
/// sample, with the 1% asymptotic critical value.
#[derive(Clone, Debug, Serialize)]
pub struct StationarityReport {
    pub shifts: Vec<f64>,
    pub distances: Vec<f64>,
    pub max_distance: f64,
    pub critical_1pct: f64,
}

pub fn stationarity_distance(
    base: &[f64],
    shifted: &[(f64, Vec<f64>)],
) -> Result<StationarityReport> {
    if base.is_empty() || shifted.is_empty() {
        return Err(Error::InvalidArgument("stationarity check needs nonempty samples".into()));
    }
    let mut shifts = Vec::with_capacity(shifted.len());
    let mut distances = Vec::with_capacity(shifted.len());
    let mut critical: f64 = 0.0;
    for (h, sample) in shifted {
        shifts.push(*h);
        distances.push(stats::ks_distance(base, sample));
        critical = critical.max(stats::ks_critical(base.len(), sample.len(), 0.01));
    }
    let max_distance = distances.iter().cloned().fold(0.0, f64::max);
    Ok(StationarityReport { shifts, distances, max_distance, critical_1pct: critical })
}

/// Length of the intersection of two unordered closed intervals.
pub fn interval_overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a0.max(a1).min(b0.max(b1)) - a0.min(a1).max(b0.min(b1))).max(0.0)
}

/// Estimated overlap measure `mu_n = E' lambda([0, A_1] cap [A_n, A_{n+1}])`
/// per lag, with Monte Carlo standard errors and (once attached) the
/// analytic bound values.
#[derive(Clone, Debug, Serialize)]
pub struct MixingCurve {
    pub n: Vec<usize>,
    pub mu: Vec<f64>,
    pub stderr: Vec<f64>,
    pub bound: Vec<f64>,
}

/// Pathwise estimator of the mixing curve: exact interval intersection per
/// path, no spatial binning. Needs integer times `0..=n_max+1` on the grid.
pub fn mixing_curve(ensemble: &SubordinatorEnsemble, n_max: usize) -> Result<MixingCurve> {
    let idx: Vec<usize> = (0..=n_max + 1)
        .map(|n| ensemble.grid.index_of(n as f64))
        .collect::<Result<_>>()?;
    let n_paths = ensemble.n_paths;
    let mut mu = Vec::with_capacity(n_max);
    let mut stderr = Vec::with_capacity(n_max);
    let mut overlaps = vec![0.0f64; n_paths];
    for n in 1..=n_max {
        for (i, o) in overlaps.iter_mut().enumerate() {
            let a1 = ensemble.value(i, idx[1]);
            let an = ensemble.value(i, idx[n]);
            let an1 = ensemble.value(i, idx[n + 1]);
            *o = interval_overlap(0.0, a1, an, an1);
        }
        mu.push(stats::mean(&overlaps));
        stderr.push(stats::std_error(&overlaps));
    }
    Ok(MixingCurve { n: (1..=n_max).collect(), mu, stderr, bound: vec![f64::NAN; n_max] })
}

/// Tail constants for the mixing bound, fitted on the ensemble's `A_1`
/// sample: the smallest `c1, c2` satisfying
/// `P(A_1 > M) <= c1 M^{-beta}` and `E (A_1 - M)_+ <= c2 M^{-beta+1}`
/// on a log-spaced M-grid, times a 1.1 safety factor.
#[derive(Clone, Debug, Serialize)]
pub struct TailModel {
    pub c1: f64,
    pub c2: f64,
    pub beta: f64,
    pub m_grid: Vec<f64>,
    #[serde(skip)]
    sorted_abs_a1: Vec<f64>,
    #[serde(skip)]
    sorted_a1: Vec<f64>,
}

pub fn default_m_grid() -> Vec<f64> {
    let (lo, hi, k) = (0.1f64, 100.0f64, 50usize);
    (0..k)
        .map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64))
        .collect()
}

impl TailModel {
    pub fn fit(ensemble: &SubordinatorEnsemble) -> Result<TailModel> {
        let beta = ensemble.spec.tail_index();
        let idx1 = ensemble.grid.index_of(1.0)?;
        let a1 = ensemble.column(idx1);
        let sorted_a1 = stats::sorted(&a1);
        let sorted_abs_a1 = stats::sorted(&a1.iter().map(|v| v.abs()).collect::<Vec<_>>());
        let m_grid = default_m_grid();
        let mut c1 = 0.0f64;
        let mut c2 = 0.0f64;
        for &m in &m_grid {
            c1 = c1.max(upper_tail(&sorted_a1, m) * m.powf(beta));
            c2 = c2.max(integrated_tail(&sorted_a1, m) * m.powf(beta - 1.0));
        }
        let model = TailModel {
            c1: 1.1 * c1,
            c2: 1.1 * c2,
            beta,
            m_grid,
            sorted_abs_a1,
            sorted_a1,
        };
        model.validate()?;
        Ok(model)
    }

    /// Re-check the defining inequalities on the probed grid.
    pub fn validate(&self) -> Result<()> {
        for &m in &self.m_grid {
            let t1 = upper_tail(&self.sorted_a1, m);
            if t1 > self.c1 * m.powf(-self.beta) + 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "tail constant c1 violated at M={m}: {t1} > {}",
                    self.c1 * m.powf(-self.beta)
                )));
            }
            let t2 = integrated_tail(&self.sorted_a1, m);
            if t2 > self.c2 * m.powf(1.0 - self.beta) + 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "tail constant c2 violated at M={m}"
                )));
            }
        }
        Ok(())
    }

    /// Empirical `P(|A_1| <= x)`.
    pub fn cdf_abs(&self, x: f64) -> f64 {
        let k = self.sorted_abs_a1.partition_point(|&v| v <= x);
        k as f64 / self.sorted_abs_a1.len() as f64
    }

    /// The three-term overlap bound at lag `n`, minimized over the M-grid:
    /// `2 c2 M^{1-beta} + 4 M P(|A_1| <= M / n^{H'}) + 4 c1 M^{1-beta}`.
    pub fn bound(&self, n: usize, hurst: f64) -> f64 {
        let nh = (n as f64).powf(hurst);
        self.m_grid
            .iter()
            .map(|&m| {
                2.0 * self.c2 * m.powf(1.0 - self.beta)
                    + 4.0 * m * self.cdf_abs(m / nh)
                    + 4.0 * self.c1 * m.powf(1.0 - self.beta)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Same bound at one explicit `M` (no minimization).
    pub fn bound_at(&self, n: usize, hurst: f64, m: f64) -> f64 {
        let nh = (n as f64).powf(hurst);
        2.0 * self.c2 * m.powf(1.0 - self.beta)
            + 4.0 * m * self.cdf_abs(m / nh)
            + 4.0 * self.c1 * m.powf(1.0 - self.beta)
    }
}

fn upper_tail(sorted: &[f64], m: f64) -> f64 {
    let k = sorted.partition_point(|&v| v <= m);
    (sorted.len() - k) as f64 / sorted.len() as f64
}

fn integrated_tail(sorted: &[f64], m: f64) -> f64 {
    // int_M^inf P(A_1 > x) dx = E (A_1 - M)_+
    let k = sorted.partition_point(|&v| v <= m);
    sorted[k..].iter().map(|v| v - m).sum::<f64>() / sorted.len() as f64
}

/// Attach bound values to a mixing curve.
pub fn attach_bound(curve: &mut MixingCurve, tails: &TailModel, hurst: f64) {
    curve.bound = curve.n.iter().map(|&n| tails.bound(n, hurst)).collect();
}

/// Occupation counts `S_N(x) = sum_{n=0}^{N-1} mean_paths 1_{[A_n, A_{n+1}]}(x)`
/// per probe point, for `N = 1..=n_max`.
#[derive(Clone, Debug, Serialize)]
pub struct ConservativitySum {
    pub probes: Vec<f64>,
    pub n_max: usize,
    /// `s[p][N-1]` holds `S_N(probes[p])`.
    pub s: Vec<Vec<f64>>,
}

impl ConservativitySum {
    /// Log-log growth fit of `S_N` over `N in [n_lo, n_max]` at log-spaced
    /// checkpoints.
    pub fn growth_exponent(&self, probe_idx: usize, n_lo: usize) -> Result<stats::OlsFit> {
        let seq = &self.s[probe_idx];
        let n_max = seq.len();
        let k = 24;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..k {
            let n = (n_lo as f64 * (n_max as f64 / n_lo as f64).powf(i as f64 / (k - 1) as f64))
                .round() as usize;
            let n = n.clamp(n_lo, n_max);
            if xs.last() == Some(&((n as f64).ln())) {
                continue;
            }
            if seq[n - 1] <= 0.0 {
                continue;
            }
            xs.push((n as f64).ln());
            ys.push(seq[n - 1].ln());
        }
        stats::ols(&xs, &ys)
    }
}

pub fn conservativity_sum(
    ensemble: &SubordinatorEnsemble,
    probes: &[f64],
    n_max: usize,
) -> Result<ConservativitySum> {
    if probes.is_empty() {
        return Err(Error::InvalidArgument("need at least one probe point".into()));
    }
    let idx: Vec<usize> = (0..=n_max)
        .map(|n| ensemble.grid.index_of(n as f64))
        .collect::<Result<_>>()?;
    let n_paths = ensemble.n_paths as f64;
    let mut s = vec![Vec::with_capacity(n_max); probes.len()];
    for (p, &x) in probes.iter().enumerate() {
        let mut acc = 0.0f64;
        for n in 0..n_max {
            let mut hits = 0usize;
            for i in 0..ensemble.n_paths {
                let a = ensemble.value(i, idx[n]);
                let b = ensemble.value(i, idx[n + 1]);
                if a.min(b) <= x && x <= a.max(b) {
                    hits += 1;
                }
            }
            acc += hits as f64 / n_paths;
            s[p].push(acc);
        }
    }
    Ok(ConservativitySum { probes: probes.to_vec(), n_max, s })
}

/// Medians over replicates of `n^{-1/alpha} max_{j<=n} Z(j)` per requested n.
#[derive(Clone, Debug, Serialize)]
pub struct ExtremeValueStat {
    pub n: Vec<usize>,
    pub median: Vec<f64>,
}

pub fn extreme_value_stat(
    noise: &[NoiseSample],
    n_list: &[usize],
    alpha: f64,
) -> Result<ExtremeValueStat> {
    if noise.is_empty() {
        return Err(Error::InvalidArgument("no noise replicates".into()));
    }
    let n_max = noise[0].z.len();
    if n_list.iter().any(|&n| n == 0 || n > n_max) {
        return Err(Error::InvalidArgument(format!(
            "extreme-value n must lie in 1..={n_max}"
        )));
    }
    let mut medians = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let stats_per_rep: Vec<f64> = noise
            .iter()
            .map(|s| {
                let max = s.z[..n].iter().cloned().fold(f64::MIN, f64::max);
                (n as f64).powf(-1.0 / alpha) * max
            })
            .collect();
        medians.push(stats::median(&stats_per_rep));
    }
    Ok(ExtremeValueStat { n: n_list.to_vec(), median: medians })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::integral::Kernel;
    use crate::rng::{SeededRng, StreamDomain};
    use crate::stable::{sample_sas_vec, StableSpec};
    use crate::subordinator::{sample_ensemble, SubordinatorSpec};

    /// Synthetic replicates with exact law |Y(t)| ~ scale(t) |S_alpha(1)|,
    /// scale(t) = t^H, independent of the integral engine.
    fn synthetic_samples(h: f64, alpha: f64, times: &[f64], n_reps: usize) -> Vec<ProcessSample> {
        let spec = StableSpec::new(alpha).unwrap();
        let mut samples = Vec::with_capacity(n_reps);
        let draws: Vec<Vec<f64>> = times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                sample_sas_vec(spec, t.powf(h), SeededRng::new(900 + k as u64), n_reps).unwrap()
            })
            .collect();
        for r in 0..n_reps {
            samples.push(ProcessSample {
                times: times.to_vec(),
                values: draws.iter().map(|col| col[r]).collect(),
                kernel: Kernel::Indicator,
                replicate_id: r as u64,
            });
        }
        samples
    }

    #[test]
    fn exponent_fit_recovers_synthetic_scaling() {
        let times = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0];
        for (h, alpha) in [(0.3, 2.0), (0.5, 1.5), (0.4, 1.2)] {
            let samples = synthetic_samples(h, alpha, &times, 4000);
            let fit = estimate_selfsim_exponent(&samples, 0.5).unwrap();
            assert!(
                (fit.h_hat - h).abs() < 0.03,
                "h_hat {} vs {h} (alpha {alpha})",
                fit.h_hat
            );
            assert!(fit.r_squared > 0.99);
        }
    }

    #[test]
    fn exponent_fit_rejects_bad_input() {
        let times = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0];
        let samples = synthetic_samples(0.5, 1.5, &times, 400);
        assert!(matches!(
            estimate_selfsim_exponent(&samples, 0.5),
            Err(Error::InsufficientReplicates { .. })
        ));
        // narrow time span rejected
        let narrow = synthetic_samples(0.5, 1.5, &[1.0, 2.0, 3.0, 4.0, 5.0], 2000);
        assert!(estimate_selfsim_exponent(&narrow, 0.5).is_err());
        // degenerate all-zero sample rejected
        let mut zeros = synthetic_samples(0.5, 1.5, &times, 2000);
        for s in &mut zeros {
            s.values.iter_mut().for_each(|v| *v = 0.0);
        }
        assert!(matches!(
            estimate_selfsim_exponent(&zeros, 0.5),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn stationarity_distance_is_zero_on_identical_samples() {
        let xs: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin()).collect();
        let rep = stationarity_distance(&xs, &[(0.0, xs.clone())]).unwrap();
        assert_eq!(rep.max_distance, 0.0);
    }

    #[test]
    fn stationarity_detects_scale_shift() {
        // test power: a doubled-scale sample must exceed the critical value
        let spec = StableSpec::new(1.5).unwrap();
        let a = sample_sas_vec(spec, 1.0, SeededRng::new(1), 5000).unwrap();
        let b = sample_sas_vec(spec, 2.0, SeededRng::new(2), 5000).unwrap();
        let rep = stationarity_distance(&a, &[(1.0, b)]).unwrap();
        assert!(rep.max_distance > rep.critical_1pct);
    }

    #[test]
    fn interval_overlap_cases() {
        assert_eq!(interval_overlap(0.0, 1.0, 2.0, 3.0), 0.0);
        assert_eq!(interval_overlap(0.0, 2.0, 1.0, 3.0), 1.0);
        assert_eq!(interval_overlap(0.0, 1.0, -2.0, -1.0), 0.0);
        // unordered endpoints
        assert_eq!(interval_overlap(2.0, 0.0, 3.0, 1.0), 1.0);
        // overlap of [0, A_1] with both A_n, A_{n+1} negative is zero
        assert_eq!(interval_overlap(0.0, 1.5, -0.3, -2.0), 0.0);
    }

    fn brownian_integer_ensemble(n_max: usize, n_paths: usize, seed: u64) -> SubordinatorEnsemble {
        let spec = SubordinatorSpec::fbm(0.5, 1.0).unwrap();
        let grid = TimeGrid::new((n_max + 1) as f64, n_max + 1).unwrap();
        sample_ensemble(&spec, &grid, n_paths, SeededRng::new(seed)).unwrap()
    }

    #[test]
    fn mixing_curve_decays_and_obeys_bound() {
        let ens = brownian_integer_ensemble(60, 20_000, 61);
        let mut curve = mixing_curve(&ens, 60).unwrap();
        let tails = TailModel::fit(&ens).unwrap();
        attach_bound(&mut curve, &tails, 0.5);
        assert!(curve.mu.iter().all(|&m| m >= 0.0));
        // decay: tail below the head
        assert!(curve.mu[59] < 0.5 * curve.mu[0]);
        // bound dominates everywhere
        for ((&mu, &bound), &n) in curve.mu.iter().zip(&curve.bound).zip(&curve.n) {
            assert!(mu <= bound, "mu_{n} = {mu} > bound {bound}");
        }
    }

    #[test]
    fn mixing_curve_matches_binned_estimate() {
        // the pathwise overlap equals the x-binned coverage product up to
        // one boundary cell per interval end
        let ens = brownian_integer_ensemble(10, 400, 67);
        let curve = mixing_curve(&ens, 10).unwrap();
        let grid = crate::grid::SpatialGrid::new(10.0, 0.02).unwrap();
        for (slot, &n) in curve.n.iter().enumerate().step_by(3) {
            let i1 = ens.grid.index_of(1.0).unwrap();
            let i_n = ens.grid.index_of(n as f64).unwrap();
            let i_n1 = ens.grid.index_of((n + 1) as f64).unwrap();
            let mut acc = 0.0;
            for i in 0..ens.n_paths {
                let a1 = ens.value(i, i1);
                let an = ens.value(i, i_n);
                let an1 = ens.value(i, i_n1);
                // binned product of coverages
                let j_lo = grid.cell_of(an.min(an1).min(0.0).min(a1).max(-grid.half_width));
                let j_hi = grid.cell_of(an.max(an1).max(0.0).max(a1).min(grid.half_width));
                for j in j_lo..=j_hi {
                    acc += grid.dx * grid.coverage(0.0, a1, j) * grid.coverage(an, an1, j);
                }
            }
            let binned = acc / ens.n_paths as f64;
            let tol = grid.dx * 2.0; // one boundary cell per interval end
            assert!(
                (curve.mu[slot] - binned).abs() <= tol,
                "n={n}: pathwise {} vs binned {binned}",
                curve.mu[slot]
            );
        }
    }

    #[test]
    fn mixing_curve_is_independent_of_alpha_by_construction() {
        // mu depends only on the ensemble; two calls on the same ensemble
        // are identical regardless of any alpha used downstream
        let ens = brownian_integer_ensemble(5, 200, 71);
        let a = mixing_curve(&ens, 5).unwrap();
        let b = mixing_curve(&ens, 5).unwrap();
        assert_eq!(a.mu, b.mu);
    }

    #[test]
    fn tail_model_concrete_evaluation() {
        let ens = brownian_integer_ensemble(3, 50_000, 73);
        let tails = TailModel::fit(&ens).unwrap();
        assert!(tails.beta == 2.0);
        assert!(tails.c1 > 0.0 && tails.c2 > 0.0);
        // bound at M=1, n=1: 2 c2 + 4 P(|A_1| <= 1) + 4 c1, by hand
        let by_hand = 2.0 * tails.c2 + 4.0 * tails.cdf_abs(1.0) + 4.0 * tails.c1;
        let got = tails.bound_at(1, 0.5, 1.0);
        assert!((got - by_hand).abs() < 1e-12);
        // Gaussian sanity: P(|A_1| <= 1) ~ 0.683
        assert!((tails.cdf_abs(1.0) - 0.683).abs() < 0.02);
        // iterated limit "choose M and then n": with M fixed and large, the
        // probability term dies and only (2 c2 + 4 c1) M^{1-beta} remains,
        // which is arbitrarily small in M
        let m: f64 = 100.0;
        let limit = (2.0 * tails.c2 + 4.0 * tails.c1) * m.powf(1.0 - tails.beta);
        let far = tails.bound_at(1_000_000_000_000_000_000, 0.5, m);
        assert!(far <= limit + 1e-12, "bound {far} above its M-limit {limit}");
        assert!(limit < 0.02, "tail-term limit not small: {limit}");
        // the grid-minimized bound decreases toward zero in n
        let (b1, b2, b3) =
            (tails.bound(1, 0.5), tails.bound(1_000, 0.5), tails.bound(1_000_000, 0.5));
        assert!(b2 < b1 && b3 < b2, "bound not decreasing: {b1}, {b2}, {b3}");
        assert!(b3 < 0.5, "bound at n = 10^6 still large: {b3}");
    }

    #[test]
    fn conservativity_sum_properties() {
        let ens = brownian_integer_ensemble(400, 2000, 79);
        let cons = conservativity_sum(&ens, &[0.0, 0.5, -0.5], 400).unwrap();
        for p in 0..3 {
            // monotone nondecreasing, exactly
            assert!(cons.s[p].windows(2).all(|w| w[1] >= w[0]));
        }
        // x = 0 in [A_0, A_1] always (A_0 = 0), so S_1(0) = 1
        assert_eq!(cons.s[0][0], 1.0);
        // Brownian crossing counts grow like sqrt(N)
        let fit = cons.growth_exponent(0, 20).unwrap();
        assert!(
            fit.slope > 0.4 && fit.slope < 0.6,
            "growth exponent {} outside (0.4, 0.6)",
            fit.slope
        );
    }

    #[test]
    fn extreme_value_statistic_trivial_n1() {
        // n = 1: statistic is Z(1) itself, so the median over replicates is
        // the median of Z(1)
        let noise: Vec<NoiseSample> = (0..501)
            .map(|r| {
                let z = sample_sas_vec(
                    StableSpec::new(1.5).unwrap(),
                    1.0,
                    SeededRng::new(83).substream(StreamDomain::Control, r),
                    16,
                )
                .unwrap();
                NoiseSample { z, y: vec![], replicate_id: r }
            })
            .collect();
        let stat = extreme_value_stat(&noise, &[1], 1.5).unwrap();
        let z1: Vec<f64> = noise.iter().map(|s| s.z[0]).collect();
        assert_eq!(stat.median[0], stats::median(&z1));
    }

    #[test]
    fn iid_noise_statistic_does_not_vanish() {
        // max-stability: n^{-1/alpha} max of i.i.d. SaS converges to a
        // Frechet-type limit, so the medians stay of one order
        let alpha = 1.5;
        let noise: Vec<NoiseSample> = (0..400)
            .map(|r| {
                let z = sample_sas_vec(
                    StableSpec::new(alpha).unwrap(),
                    1.0,
                    SeededRng::new(89).substream(StreamDomain::Control, r),
                    1000,
                )
                .unwrap();
                NoiseSample { z, y: vec![], replicate_id: r }
            })
            .collect();
        let stat = extreme_value_stat(&noise, &[10, 1000], alpha).unwrap();
        assert!(
            stat.median[1] > 0.5 * stat.median[0],
            "iid control decayed: {} vs {}",
            stat.median[1],
            stat.median[0]
        );
    }
}
