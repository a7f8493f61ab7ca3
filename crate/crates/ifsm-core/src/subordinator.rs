//! Subordinating self-similar stationary-increment processes.
//!
//! The integrand kernels are driven by sampled paths of `A_t`, either
//! fractional Brownian motion with exponent H' or a symmetric beta-stable
//! Levy motion with beta in (1, 2]. Paths start at 0 and are mutually
//! independent, with one RNG substream per path index.

use crate::error::{Error, Result};
use crate::fbm::{FbmMethod, FbmSampler};
use crate::grid::{SpatialGrid, TimeGrid};
use crate::rng::{SeededRng, StreamDomain};
use crate::stable::StableSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubordinatorKind {
    Fbm,
    StableLevy,
}

/// Parameters of the subordinating process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorSpec {
    pub kind: SubordinatorKind,
    /// H' for FBM; 1/beta is reported for the Levy case.
    pub hurst: f64,
    /// Stability index of the Levy subordinator; 2.0 placeholder for FBM.
    pub beta: f64,
    /// Scale of A_1 under each family's own convention.
    pub sigma: f64,
}

impl SubordinatorSpec {
    pub fn fbm(hurst: f64, sigma: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidHurst(hurst));
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidSigma(sigma));
        }
        Ok(Self { kind: SubordinatorKind::Fbm, hurst, beta: 2.0, sigma })
    }

    pub fn stable_levy(beta: f64, sigma: f64) -> Result<Self> {
        if !(beta > 1.0 && beta <= 2.0) {
            return Err(Error::InvalidBeta(beta));
        }
        if !(sigma > 0.0) {
            return Err(Error::InvalidSigma(sigma));
        }
        Ok(Self { kind: SubordinatorKind::StableLevy, hurst: 1.0 / beta, beta, sigma })
    }

    /// Self-similarity exponent H' of the process.
    pub fn self_similarity_exponent(&self) -> f64 {
        match self.kind {
            SubordinatorKind::Fbm => self.hurst,
            SubordinatorKind::StableLevy => 1.0 / self.beta,
        }
    }

    /// Tail index used by the mixing bound: polynomial order beta such that
    /// `P(A_1 > M) <~ M^{-beta}`. Gaussian tails satisfy any polynomial
    /// order; the bound machinery uses beta = 2 there.
    pub fn tail_index(&self) -> f64 {
        match self.kind {
            SubordinatorKind::Fbm => 2.0,
            SubordinatorKind::StableLevy => self.beta,
        }
    }
}

/// Independent discretized sample paths of `A_t` on a shared time grid.
#[derive(Clone, Debug)]
pub struct SubordinatorEnsemble {
    pub spec: SubordinatorSpec,
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub seed: SeededRng,
    /// Row-major `[path][time]`, `n_steps + 1` columns, first column 0.
    pub values: Vec<f64>,
    /// True when FBM synthesis used the dense fallback.
    pub used_fallback: bool,
}

impl SubordinatorEnsemble {
    pub fn path(&self, i: usize) -> &[f64] {
        let w = self.grid.n_points();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn value(&self, path: usize, time_idx: usize) -> f64 {
        self.values[path * self.grid.n_points() + time_idx]
    }

    /// Values of all paths at one grid index.
    pub fn column(&self, time_idx: usize) -> Vec<f64> {
        (0..self.n_paths).map(|i| self.value(i, time_idx)).collect()
    }

    /// Mean over paths of `(|A_t| - x_limit)_+`: the exact L1 kernel mass
    /// an indicator kernel loses to spatial truncation at `x_limit`.
    pub fn truncation_mass(&self, time_idx: usize, x_limit: f64) -> f64 {
        let s: f64 = (0..self.n_paths)
            .map(|i| (self.value(i, time_idx).abs() - x_limit).max(0.0))
            .sum();
        s / self.n_paths as f64
    }
}

/// Draw an ensemble of either subordinator family.
pub fn sample_ensemble(
    spec: &SubordinatorSpec,
    grid: &TimeGrid,
    n_paths: usize,
    rng: SeededRng,
) -> Result<SubordinatorEnsemble> {
    sample_ensemble_with(spec, grid, n_paths, rng, FbmMethod::Auto, StreamDomain::Ensemble)
}

pub fn sample_ensemble_with(
    spec: &SubordinatorSpec,
    grid: &TimeGrid,
    n_paths: usize,
    rng: SeededRng,
    method: FbmMethod,
    domain: StreamDomain,
) -> Result<SubordinatorEnsemble> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    let n = grid.n_steps;
    let w = grid.n_points();
    let mut values = vec![0.0f64; n_paths * w];
    let used_fallback;
    match spec.kind {
        SubordinatorKind::Fbm => {
            let sampler = FbmSampler::new(spec.hurst, spec.sigma, grid.dt(), n, method)?;
            used_fallback = sampler.used_fallback;
            values.par_chunks_mut(w).enumerate().for_each(|(i, path)| {
                let mut stream = rng.substream(domain, i as u64).stream();
                let mut inc = vec![0.0f64; n];
                sampler.sample_increments(&mut stream, &mut inc);
                for (k, d) in inc.iter().enumerate() {
                    path[k + 1] = path[k] + d;
                }
            });
        }
        SubordinatorKind::StableLevy => {
            used_fallback = false;
            let stable = StableSpec::new(spec.beta)?;
            let step_scale = spec.sigma * grid.dt().powf(1.0 / spec.beta);
            let sampler = stable.sampler();
            values.par_chunks_mut(w).enumerate().for_each(|(i, path)| {
                let mut stream = rng.substream(domain, i as u64).stream();
                for k in 0..n {
                    path[k + 1] = path[k] + step_scale * sampler.standard(&mut stream);
                }
            });
        }
    }
    Ok(SubordinatorEnsemble {
        spec: *spec,
        grid: grid.clone(),
        n_paths,
        seed: rng,
        values,
        used_fallback,
    })
}

/// Fractions of paths whose running extrema reach `+level` / `-level`
/// by the end of the grid (non-strict, so level 0 is hit at t = 0).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RecurrenceReport {
    pub frac_exceed_up: f64,
    pub frac_exceed_down: f64,
}

pub fn recurrence_check(ensemble: &SubordinatorEnsemble, level: f64) -> Result<RecurrenceReport> {
    if !(level >= 0.0) {
        return Err(Error::InvalidArgument(format!("level must be nonnegative, got {level}")));
    }
    let mut up = 0usize;
    let mut down = 0usize;
    for i in 0..ensemble.n_paths {
        let path = ensemble.path(i);
        let max = path.iter().cloned().fold(f64::MIN, f64::max);
        let min = path.iter().cloned().fold(f64::MAX, f64::min);
        if max >= level {
            up += 1;
        }
        if min <= -level {
            down += 1;
        }
    }
    let n = ensemble.n_paths as f64;
    Ok(RecurrenceReport { frac_exceed_up: up as f64 / n, frac_exceed_down: down as f64 / n })
}

/// Binned occupation densities `L[path][time][cell]` at selected snapshot
/// times, in units of time per unit length.
#[derive(Clone, Debug)]
pub struct LocalTimeField {
    pub x_grid: SpatialGrid,
    /// Grid indices of the snapshot times, ascending.
    pub time_indices: Vec<usize>,
    pub n_paths: usize,
    values: Vec<f64>,
    /// Occupation time that fell outside the grid, per `[path][time]`.
    truncated: Vec<f64>,
    /// Nonzero cell span per `[path][time]`, half-open.
    spans: Vec<(usize, usize)>,
    pub truncation_warning: bool,
}

impl LocalTimeField {
    pub fn row(&self, path: usize, time_slot: usize) -> &[f64] {
        let w = self.x_grid.n_cells();
        let base = (path * self.time_indices.len() + time_slot) * w;
        &self.values[base..base + w]
    }

    pub fn truncated_mass(&self, path: usize, time_slot: usize) -> f64 {
        self.truncated[path * self.time_indices.len() + time_slot]
    }

    pub fn span(&self, path: usize, time_slot: usize) -> (usize, usize) {
        self.spans[path * self.time_indices.len() + time_slot]
    }

    pub fn slot_of(&self, time_idx: usize) -> Option<usize> {
        self.time_indices.iter().position(|&k| k == time_idx)
    }
}

/// Occupation-density estimator with piecewise-linear path interpolation:
/// a step from `a` to `b` deposits its time across every cell between them
/// in proportion to overlap length, conserving time mass exactly.
pub fn compute_local_time(
    ensemble: &SubordinatorEnsemble,
    x_grid: &SpatialGrid,
    time_indices: &[usize],
) -> Result<LocalTimeField> {
    if time_indices.is_empty() {
        return Err(Error::InvalidArgument("no snapshot times requested".into()));
    }
    if time_indices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("snapshot times must be strictly increasing".into()));
    }
    if *time_indices.last().unwrap() > ensemble.grid.n_steps {
        return Err(Error::DimensionMismatch("snapshot time beyond the grid".into()));
    }
    let n_cells = x_grid.n_cells();
    let n_slots = time_indices.len();
    let n_paths = ensemble.n_paths;
    let dt = ensemble.grid.dt();
    let dx = x_grid.dx;

    let mut values = vec![0.0f64; n_paths * n_slots * n_cells];
    let mut truncated = vec![0.0f64; n_paths * n_slots];
    let mut spans = vec![(0usize, 0usize); n_paths * n_slots];

    values
        .par_chunks_mut(n_slots * n_cells)
        .zip(truncated.par_chunks_mut(n_slots))
        .zip(spans.par_chunks_mut(n_slots))
        .enumerate()
        .for_each(|(i, ((rows, trunc), span_row))| {
            let path = ensemble.path(i);
            let mut occ = vec![0.0f64; n_cells];
            let mut lost = 0.0f64;
            let mut lo = usize::MAX;
            let mut hi = 0usize;
            let mut slot = 0usize;
            // snapshot at t = 0 if requested
            if time_indices[slot] == 0 {
                trunc[slot] = 0.0;
                span_row[slot] = (0, 0);
                slot += 1;
            }
            for k in 0..ensemble.grid.n_steps {
                let a = path[k];
                let b = path[k + 1];
                if a == b {
                    if x_grid.contains(a) {
                        let j = x_grid.cell_of(a);
                        occ[j] += dt;
                        lo = lo.min(j);
                        hi = hi.max(j + 1);
                    } else {
                        lost += dt;
                    }
                } else {
                    let (left, right) = if a < b { (a, b) } else { (b, a) };
                    let len = right - left;
                    let cl = left.max(-x_grid.half_width);
                    let cr = right.min(x_grid.half_width);
                    if cr > cl {
                        let j0 = x_grid.cell_of(cl);
                        let j1 = x_grid.cell_of(cr.min(x_grid.half_width - 1e-12 * dx));
                        let mut covered = 0.0;
                        for j in j0..=j1 {
                            let seg =
                                (cr.min(x_grid.cell_right(j)) - cl.max(x_grid.cell_left(j))).max(0.0);
                            occ[j] += dt * seg / len;
                            covered += seg;
                        }
                        lost += dt * (len - covered) / len;
                        lo = lo.min(j0);
                        hi = hi.max(j1 + 1);
                    } else {
                        lost += dt;
                    }
                }
                if slot < n_slots && time_indices[slot] == k + 1 {
                    let base = slot * n_cells;
                    if lo < hi {
                        for j in lo..hi {
                            rows[base + j] = occ[j] / dx;
                        }
                        span_row[slot] = (lo, hi);
                    } else {
                        span_row[slot] = (0, 0);
                    }
                    trunc[slot] = lost;
                    slot += 1;
                }
            }
        });

    // Warn when more than 0.1% of the occupation mass at the final
    // snapshot fell outside the grid.
    let t_last = ensemble.grid.point(*time_indices.last().unwrap());
    let total_lost: f64 = (0..n_paths).map(|i| truncated[i * n_slots + n_slots - 1]).sum();
    let truncation_warning = total_lost > 1e-3 * t_last * n_paths as f64;
    if truncation_warning {
        log::warn!(
            "local time: {:.3}% of occupation mass fell outside the spatial grid",
            100.0 * total_lost / (t_last * n_paths as f64)
        );
    }

    Ok(LocalTimeField {
        x_grid: x_grid.clone(),
        time_indices: time_indices.to_vec(),
        n_paths,
        values,
        truncated,
        spans,
        truncation_warning,
    })
}
