//! Discretized doubly-stochastic stable integral.
//!
//! A process value is the integral of a kernel row against one realization
//! of the scattered measure: `Y(t) = sum_{i,j} f_t(path_i, x_j) * M_{ij}`.
//! One field is drawn per replicate and reused across every requested time,
//! matching the fixed-measure structure of the representation; replicates
//! are independent by construction.

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::rng::{SeededRng, StreamDomain};
use crate::stable::{fill_field_row, StableNoiseField, StableSpec};
use crate::subordinator::{LocalTimeField, SubordinatorEnsemble, SubordinatorSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Integrand families. Intervals `[a, b]` are read as `[b, a]` when `b < a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kernel {
    /// `1_{[0, A_t]}(x)`
    Indicator,
    /// `sign(A_t) 1_{[0, A_t]}(x) = (A_t - x)_+^0 - (-x)_+^0`
    SignedIndicator,
    /// `L_A(t, x)`
    LocalTime,
    /// `1_{[0, t]}(x)`, no path dependence (the degenerate H' = 1 route)
    LevyDeterministic,
}

impl Kernel {
    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Indicator => "indicator",
            Kernel::SignedIndicator => "signed-indicator",
            Kernel::LocalTime => "local-time",
            Kernel::LevyDeterministic => "levy",
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "indicator" => Ok(Kernel::Indicator),
            "signed-indicator" => Ok(Kernel::SignedIndicator),
            "local-time" => Ok(Kernel::LocalTime),
            "levy" => Ok(Kernel::LevyDeterministic),
            other => Err(Error::InvalidArgument(format!("unknown kernel '{other}'"))),
        }
    }
}

/// Everything a kernel needs to be evaluated on the product grid.
#[derive(Clone, Copy)]
pub struct KernelContext<'a> {
    pub kernel: Kernel,
    pub ensemble: Option<&'a SubordinatorEnsemble>,
    pub local_time: Option<&'a LocalTimeField>,
    pub grid: &'a SpatialGrid,
    /// Time semantics for the deterministic kernel when no ensemble is
    /// attached; with an ensemble its grid is authoritative.
    time_grid: Option<&'a crate::grid::TimeGrid>,
}

impl<'a> KernelContext<'a> {
    pub fn new(
        kernel: Kernel,
        ensemble: Option<&'a SubordinatorEnsemble>,
        local_time: Option<&'a LocalTimeField>,
        grid: &'a SpatialGrid,
    ) -> Result<Self> {
        match kernel {
            Kernel::LevyDeterministic => {}
            Kernel::LocalTime => {
                if local_time.is_none() {
                    return Err(Error::InvalidArgument(
                        "local-time kernel needs a precomputed local time field".into(),
                    ));
                }
                if ensemble.is_none() {
                    return Err(Error::InvalidArgument("local-time kernel needs an ensemble".into()));
                }
            }
            _ => {
                if ensemble.is_none() {
                    return Err(Error::InvalidArgument(format!(
                        "{} kernel needs an ensemble",
                        kernel.name()
                    )));
                }
            }
        }
        Ok(Self { kernel, ensemble, local_time, grid, time_grid: None })
    }

    /// Deterministic kernel on an explicit time grid, no path ensemble.
    pub fn deterministic(
        time_grid: &'a crate::grid::TimeGrid,
        grid: &'a SpatialGrid,
    ) -> Result<Self> {
        Ok(Self {
            kernel: Kernel::LevyDeterministic,
            ensemble: None,
            local_time: None,
            grid,
            time_grid: Some(time_grid),
        })
    }

    pub fn n_paths(&self) -> usize {
        self.ensemble.map_or(1, |e| e.n_paths)
    }

    /// Value of grid index `t_idx` in time units.
    pub fn time_value(&self, t_idx: usize) -> f64 {
        match (self.ensemble, self.time_grid) {
            (Some(e), _) => e.grid.point(t_idx),
            (None, Some(tg)) => tg.point(t_idx),
            (None, None) => t_idx as f64,
        }
    }

    /// Grid index of time `t`.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        match (self.ensemble, self.time_grid) {
            (Some(e), _) => e.grid.index_of(t),
            (None, Some(tg)) => tg.index_of(t),
            (None, None) => {
                let k = t.round();
                if (k - t).abs() > 1e-9 || k < 0.0 {
                    return Err(Error::TimeNotOnGrid(t));
                }
                Ok(k as usize)
            }
        }
    }

    fn max_time_index(&self) -> Option<usize> {
        match (self.ensemble, self.time_grid) {
            (Some(e), _) => Some(e.grid.n_steps),
            (None, Some(tg)) => Some(tg.n_steps),
            (None, None) => None,
        }
    }

    /// Signed interval of the kernel at `(path, t)`: endpoints plus the sign
    /// multiplying the covered cells. Empty for the local-time kernel.
    fn interval(&self, path: usize, t_idx: usize) -> (f64, f64, f64) {
        match self.kernel {
            Kernel::Indicator => {
                let a = self.ensemble.unwrap().value(path, t_idx);
                (0.0, a, 1.0)
            }
            Kernel::SignedIndicator => {
                let a = self.ensemble.unwrap().value(path, t_idx);
                (0.0, a, a.signum())
            }
            Kernel::LevyDeterministic => (0.0, self.time_value(t_idx), 1.0),
            Kernel::LocalTime => unreachable!("local-time kernel has no interval form"),
        }
    }

    /// Exact cell-averaged kernel value at `(path, t, cell)`: the coverage
    /// fraction for indicator kernels (signed), the stored density for the
    /// local-time kernel.
    pub fn evaluate(&self, path: usize, t_idx: usize, cell: usize) -> Result<f64> {
        match self.kernel {
            Kernel::LocalTime => {
                let lt = self.local_time.unwrap();
                let slot = lt
                    .slot_of(t_idx)
                    .ok_or_else(|| Error::TimeNotOnGrid(t_idx as f64))?;
                Ok(lt.row(path, slot)[cell])
            }
            _ => {
                let (a, b, sign) = self.interval(path, t_idx);
                Ok(sign * self.grid.coverage(a, b, cell))
            }
        }
    }
}

/// Values of one simulated realization at the requested times.
#[derive(Clone, Debug, Serialize)]
pub struct ProcessSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub kernel: Kernel,
    pub replicate_id: u64,
}

impl ProcessSample {
    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.times
            .iter()
            .position(|&u| (u - t).abs() < 1e-9 * t.abs().max(1.0))
            .map(|k| self.values[k])
    }
}

/// Precomputed per-(path, time) geometry, fixed across replicates.
enum Plan {
    /// Cells `j0..=j1` with fractional end weights, scaled by `sign`.
    Interval { j0: usize, j1: usize, left_frac: f64, right_frac: f64, sign: f64 },
    Empty,
    /// Dense dot against the local-time row at this slot.
    Dense { slot: usize },
}

fn build_plans(ctx: &KernelContext, times_idx: &[usize]) -> Result<Vec<Plan>> {
    let n_paths = ctx.n_paths();
    let grid = ctx.grid;
    let mut plans = Vec::with_capacity(n_paths * times_idx.len());
    for path in 0..n_paths {
        for &t_idx in times_idx {
            let plan = match ctx.kernel {
                Kernel::LocalTime => {
                    let lt = ctx.local_time.unwrap();
                    let slot = lt
                        .slot_of(t_idx)
                        .ok_or_else(|| Error::TimeNotOnGrid(t_idx as f64))?;
                    Plan::Dense { slot }
                }
                _ => {
                    let (a, b, sign) = ctx.interval(path, t_idx);
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    let lo = lo.max(-grid.half_width);
                    let hi = hi.min(grid.half_width);
                    if hi <= lo || sign == 0.0 {
                        Plan::Empty
                    } else {
                        let j0 = grid.cell_of(lo);
                        let j1 = grid.cell_of(hi).min(grid.n_cells() - 1);
                        // hi exactly on the left edge of j1 contributes nothing
                        let j1 = if j1 > j0 && hi <= grid.cell_left(j1) { j1 - 1 } else { j1 };
                        let left_frac = ((grid.cell_right(j0).min(hi) - lo) / grid.dx).min(1.0);
                        let right_frac = ((hi - grid.cell_left(j1).max(lo)) / grid.dx).min(1.0);
                        Plan::Interval { j0, j1, left_frac, right_frac, sign }
                    }
                }
            };
            plans.push(plan);
        }
    }
    Ok(plans)
}

/// Evaluate one plan against a field row restricted to the cell window
/// starting at `off`. For interval kernels `row` holds prefix sums of the
/// window; for the local-time kernel it holds the raw window.
fn accumulate_path(
    plan: &Plan,
    row: &[f64],
    off: usize,
    lt: Option<&LocalTimeField>,
    path: usize,
) -> f64 {
    match *plan {
        Plan::Empty => 0.0,
        Plan::Interval { j0, j1, left_frac, right_frac, sign } => {
            let m = |j: usize| row[j - off] - if j > off { row[j - off - 1] } else { 0.0 };
            if j0 == j1 {
                // single cell: left_frac is the covered fraction itself
                sign * left_frac * m(j0)
            } else {
                let full = if j1 > j0 + 1 { row[j1 - 1 - off] - row[j0 - off] } else { 0.0 };
                sign * (left_frac * m(j0) + full + right_frac * m(j1))
            }
        }
        Plan::Dense { slot } => {
            let lt = lt.unwrap();
            let (lo, hi) = lt.span(path, slot);
            let l_row = lt.row(path, slot);
            let mut acc = 0.0;
            for j in lo..hi {
                acc += l_row[j] * row[j - off];
            }
            acc
        }
    }
}

fn is_dense(kernel: Kernel) -> bool {
    kernel == Kernel::LocalTime
}

/// Per-path union of the cells any plan can touch; None when every plan is
/// empty and the path contributes nothing.
fn path_window(
    plans: &[Plan],
    lt: Option<&LocalTimeField>,
    path: usize,
) -> Option<(usize, usize)> {
    let mut lo = usize::MAX;
    let mut hi = 0usize;
    for plan in plans {
        match *plan {
            Plan::Empty => {}
            Plan::Interval { j0, j1, .. } => {
                lo = lo.min(j0);
                hi = hi.max(j1 + 1);
            }
            Plan::Dense { slot } => {
                let (a, b) = lt.unwrap().span(path, slot);
                if b > a {
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
            }
        }
    }
    (lo < hi).then_some((lo, hi))
}

/// Simulate `n_replicates` independent realizations of the process at the
/// requested grid times. The same noise field is reused across times within
/// a replicate; fields are independent across replicates, with substreams
/// derived by counter so parallel and serial schedules agree bit-exactly.
pub fn simulate_process(
    ctx: &KernelContext,
    times_idx: &[usize],
    spec: StableSpec,
    rng: SeededRng,
    n_replicates: usize,
    budget_bytes: u64,
) -> Result<Vec<ProcessSample>> {
    let n_paths = ctx.n_paths();
    let n_cells = ctx.grid.n_cells();
    let bytes = (n_paths as u64) * (n_cells as u64) * 8;
    if bytes > budget_bytes {
        return Err(Error::FieldTooLarge { requested: bytes, budget: budget_bytes });
    }
    if let Some(max_idx) = ctx.max_time_index() {
        if times_idx.iter().any(|&k| k > max_idx) {
            return Err(Error::DimensionMismatch("requested time beyond the time grid".into()));
        }
    }
    let plans = build_plans(ctx, times_idx)?;
    let times: Vec<f64> = times_idx.iter().map(|&k| ctx.time_value(k)).collect();
    let sampler = spec.sampler();
    let cell_scale = spec.cell_scale(ctx.grid.dx / n_paths as f64)?;
    let dense = is_dense(ctx.kernel);
    let n_times = times_idx.len();
    // cells outside a path's window multiply zero kernel mass for every
    // requested time; fixed words-per-draw lets the stream jump there
    let windows: Vec<Option<(usize, usize)>> = (0..n_paths)
        .map(|path| path_window(&plans[path * n_times..(path + 1) * n_times], ctx.local_time, path))
        .collect();

    let samples: Vec<ProcessSample> = (0..n_replicates as u64)
        .into_par_iter()
        .map_init(
            || vec![0.0f64; n_cells],
            |row, r| {
                let mut values = vec![0.0f64; n_times];
                for path in 0..n_paths {
                    let Some((w_lo, w_hi)) = windows[path] else { continue };
                    let mut stream = rng
                        .substream(StreamDomain::NoiseField, r * n_paths as u64 + path as u64)
                        .stream();
                    stream.set_word_pos(w_lo as u128 * crate::stable::WORDS_PER_DRAW);
                    let window = &mut row[..w_hi - w_lo];
                    fill_field_row(&sampler, cell_scale, window, &mut stream);
                    if !dense {
                        for j in 1..window.len() {
                            window[j] += window[j - 1];
                        }
                    }
                    let base = path * n_times;
                    for (slot, v) in values.iter_mut().enumerate() {
                        *v += accumulate_path(&plans[base + slot], window, w_lo, ctx.local_time, path);
                    }
                }
                ProcessSample {
                    times: times.clone(),
                    values,
                    kernel: ctx.kernel,
                    replicate_id: r,
                }
            },
        )
        .collect();
    Ok(samples)
}

/// Evaluate the process against an already-materialized field (used by the
/// refinement-coupling diagnostics and serialization round-trips). Agrees
/// exactly with `simulate_process` when the field comes from the same
/// substreams.
pub fn process_value_from_field(
    ctx: &KernelContext,
    field: &StableNoiseField,
    times_idx: &[usize],
) -> Result<Vec<f64>> {
    if field.n_paths != ctx.n_paths() {
        return Err(Error::DimensionMismatch("field/ensemble path counts differ".into()));
    }
    if field.grid != *ctx.grid {
        return Err(Error::DimensionMismatch("field grid differs from context grid".into()));
    }
    let plans = build_plans(ctx, times_idx)?;
    let dense = is_dense(ctx.kernel);
    let n_times = times_idx.len();
    let mut values = vec![0.0f64; n_times];
    let mut row = vec![0.0f64; field.grid.n_cells()];
    for path in 0..field.n_paths {
        row.copy_from_slice(field.row(path));
        if !dense {
            for j in 1..row.len() {
                row[j] += row[j - 1];
            }
        }
        let base = path * n_times;
        for (slot, v) in values.iter_mut().enumerate() {
            *v += accumulate_path(&plans[base + slot], &row, 0, ctx.local_time, path);
        }
    }
    Ok(values)
}

/// One replicate of the unit-increment noise `Z(n) = Y(n) - Y(n-1)` for
/// `n = 1..=n_max`, plus the underlying `Y` values at `0..=n_max`.
#[derive(Clone, Debug)]
pub struct NoiseSample {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub replicate_id: u64,
}

/// Simulate the stationary noise at integer times from a common field per
/// replicate.
pub fn simulate_noise(
    ctx: &KernelContext,
    n_max: usize,
    spec: StableSpec,
    rng: SeededRng,
    n_replicates: usize,
    budget_bytes: u64,
) -> Result<Vec<NoiseSample>> {
    let times_idx: Vec<usize> =
        (0..=n_max).map(|n| ctx.time_index(n as f64)).collect::<Result<_>>()?;
    let samples = simulate_process(ctx, &times_idx, spec, rng, n_replicates, budget_bytes)?;
    Ok(samples
        .into_iter()
        .map(|s| NoiseSample {
            z: s.values.windows(2).map(|w| w[1] - w[0]).collect(),
            y: s.values,
            replicate_id: s.replicate_id,
        })
        .collect())
}

/// Exponent range report for one process family.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExponentRange {
    pub h: f64,
    pub lo: f64,
    pub hi: f64,
    pub range_ok: bool,
}

/// Feasibility of the self-similarity exponents implied by `(alpha, H')`.
/// Reports, never blocks.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FeasibilityReport {
    pub alpha: f64,
    pub h_prime: f64,
    pub ifsm: ExponentRange,
    pub ltfsm: ExponentRange,
}

pub fn feasibility_check(spec: StableSpec, subordinator: &SubordinatorSpec) -> FeasibilityReport {
    let alpha = spec.alpha();
    let hp = subordinator.self_similarity_exponent();
    let ifsm_h = hp / alpha;
    let ifsm = ExponentRange {
        h: ifsm_h,
        lo: 0.0,
        hi: 1.0 / alpha,
        range_ok: ifsm_h > 0.0 && ifsm_h < 1.0 / alpha,
    };
    let ltfsm_h = 1.0 - hp + hp / alpha;
    let (lo, hi) = if alpha > 1.0 {
        (1.0 / alpha, 1.0)
    } else if alpha < 1.0 {
        (1.0, 1.0 / alpha)
    } else {
        (1.0, 1.0)
    };
    let ltfsm = ExponentRange {
        h: ltfsm_h,
        lo,
        hi,
        range_ok: if alpha == 1.0 { ltfsm_h == 1.0 } else { ltfsm_h > lo && ltfsm_h < hi },
    };
    FeasibilityReport { alpha, h_prime: hp, ifsm, ltfsm }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::stable::{sample_noise_field, DEFAULT_FIELD_BUDGET};
    use crate::stats;
    use crate::subordinator::{compute_local_time, sample_ensemble};

    fn fbm_ensemble(hp: f64, t_max: f64, n_steps: usize, n_paths: usize, seed: u64) -> SubordinatorEnsemble {
        let spec = SubordinatorSpec::fbm(hp, 1.0).unwrap();
        let grid = TimeGrid::new(t_max, n_steps).unwrap();
        sample_ensemble(&spec, &grid, n_paths, SeededRng::new(seed)).unwrap()
    }

    #[test]
    fn kernel_evaluation_geometry() {
        let grid = SpatialGrid::new(5.0, 0.2).unwrap();
        let mut ens = fbm_ensemble(0.5, 1.0, 4, 1, 1);
        // pin the path to chosen values
        ens.values.copy_from_slice(&[0.0, 2.5, -1.0, 0.0, 2.5]);
        let ctx = KernelContext::new(Kernel::Indicator, Some(&ens), None, &grid).unwrap();
        // A_t = 0 at t index 0 and 3: zero kernel everywhere
        for j in 0..grid.n_cells() {
            assert_eq!(ctx.evaluate(0, 0, j).unwrap(), 0.0);
            assert_eq!(ctx.evaluate(0, 3, j).unwrap(), 0.0);
        }
        // A_t = 2.5: cell [2.4, 2.6) half covered
        let j = grid.cell_of(2.5);
        assert!((ctx.evaluate(0, 1, j).unwrap() - 0.5).abs() < 1e-12);
        // signed kernel at A_t = -1 on cell [-0.6, -0.4): value -1
        let ctx_s =
            KernelContext::new(Kernel::SignedIndicator, Some(&ens), None, &grid).unwrap();
        let j = grid.cell_of(-0.5);
        assert!((ctx_s.evaluate(0, 2, j).unwrap() + 1.0).abs() < 1e-12);
        // indicator kernel of the same cell is +1 (unsigned)
        assert!((ctx.evaluate(0, 2, j).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn levy_kernel_covers_zero_t() {
        let grid = SpatialGrid::new(8.0, 0.5).unwrap();
        let ens = fbm_ensemble(0.5, 4.0, 4, 1, 2);
        let ctx = KernelContext::new(Kernel::LevyDeterministic, Some(&ens), None, &grid).unwrap();
        // t = 3.0 covers [0, 3): 6 cells fully
        let t_idx = ens.grid.index_of(3.0).unwrap();
        let mut total = 0.0;
        for j in 0..grid.n_cells() {
            total += ctx.evaluate(0, t_idx, j).unwrap() * grid.dx;
        }
        assert!((total - 3.0).abs() < 1e-12);
    }

    #[test]
    fn value_at_time_zero_is_zero() {
        let grid = SpatialGrid::new(6.0, 0.05).unwrap();
        let ens = fbm_ensemble(0.5, 2.0, 64, 32, 3);
        let spec = StableSpec::new(1.5).unwrap();
        for kernel in [Kernel::Indicator, Kernel::SignedIndicator, Kernel::LevyDeterministic] {
            let ctx = KernelContext::new(kernel, Some(&ens), None, &grid).unwrap();
            let samples =
                simulate_process(&ctx, &[0, 32, 64], spec, SeededRng::new(4), 50, DEFAULT_FIELD_BUDGET)
                    .unwrap();
            for s in &samples {
                assert_eq!(s.values[0], 0.0, "{:?}", kernel);
            }
        }
        let lt = compute_local_time(&ens, &grid, &[0, 32, 64]).unwrap();
        let ctx = KernelContext::new(Kernel::LocalTime, Some(&ens), Some(&lt), &grid).unwrap();
        let samples =
            simulate_process(&ctx, &[0, 32, 64], spec, SeededRng::new(4), 20, DEFAULT_FIELD_BUDGET)
                .unwrap();
        for s in &samples {
            assert_eq!(s.values[0], 0.0);
        }
    }

    #[test]
    fn simulate_agrees_with_field_evaluation() {
        let grid = SpatialGrid::new(6.0, 0.1).unwrap();
        let ens = fbm_ensemble(0.6, 2.0, 32, 24, 5);
        let spec = StableSpec::new(1.4).unwrap();
        let ctx = KernelContext::new(Kernel::Indicator, Some(&ens), None, &grid).unwrap();
        let rng = SeededRng::new(11);
        let times = [8usize, 16, 32];
        let samples =
            simulate_process(&ctx, &times, spec, rng, 3, DEFAULT_FIELD_BUDGET).unwrap();
        for r in 0..3u64 {
            let field =
                sample_noise_field(&grid, ens.n_paths, spec, rng, r, DEFAULT_FIELD_BUDGET).unwrap();
            let direct = process_value_from_field(&ctx, &field, &times).unwrap();
            for (a, b) in samples[r as usize].values.iter().zip(&direct) {
                assert!((a - b).abs() < 1e-10, "replicate {r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn fractional_coverage_matches_direct_cell_sum() {
        // prefix-sum path equals the naive sum over evaluate() * M
        let grid = SpatialGrid::new(4.0, 0.25).unwrap();
        let ens = fbm_ensemble(0.7, 1.0, 16, 8, 7);
        let spec = StableSpec::new(1.8).unwrap();
        let rng = SeededRng::new(13);
        for kernel in [Kernel::Indicator, Kernel::SignedIndicator] {
            let ctx = KernelContext::new(kernel, Some(&ens), None, &grid).unwrap();
            let samples =
                simulate_process(&ctx, &[16], spec, rng, 2, DEFAULT_FIELD_BUDGET).unwrap();
            for r in 0..2u64 {
                let field =
                    sample_noise_field(&grid, ens.n_paths, spec, rng, r, DEFAULT_FIELD_BUDGET)
                        .unwrap();
                let mut naive = 0.0;
                for i in 0..ens.n_paths {
                    for j in 0..grid.n_cells() {
                        naive += ctx.evaluate(i, 16, j).unwrap() * field.row(i)[j];
                    }
                }
                let got = samples[r as usize].values[0];
                assert!(
                    (got - naive).abs() < 1e-9 * naive.abs().max(1.0),
                    "{kernel:?} replicate {r}: {got} vs {naive}"
                );
            }
        }
    }

    #[test]
    fn parallel_and_serial_replicates_agree() {
        let grid = SpatialGrid::new(5.0, 0.1).unwrap();
        let ens = fbm_ensemble(0.5, 2.0, 32, 16, 9);
        let spec = StableSpec::new(1.5).unwrap();
        let ctx = KernelContext::new(Kernel::Indicator, Some(&ens), None, &grid).unwrap();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                simulate_process(&ctx, &[16, 32], spec, SeededRng::new(17), 64, DEFAULT_FIELD_BUDGET)
                    .unwrap()
            })
        };
        let a = run(1);
        let b = run(2);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.values, y.values);
        }
    }

    #[test]
    fn memory_budget_guard() {
        let grid = SpatialGrid::new(5.0, 0.001).unwrap();
        let ens = fbm_ensemble(0.5, 1.0, 8, 512, 21);
        let spec = StableSpec::new(1.5).unwrap();
        let ctx = KernelContext::new(Kernel::Indicator, Some(&ens), None, &grid).unwrap();
        let err = simulate_process(&ctx, &[8], spec, SeededRng::new(1), 2, 1 << 20);
        assert!(matches!(err, Err(Error::FieldTooLarge { .. })));
    }

    #[test]
    fn stable_scale_of_y_matches_ensemble_mean() {
        // scale of Y(1) is (mean |A_1|)^{1/alpha} over the ensemble; read the
        // empirical scale off the characteristic function at a moderate theta
        let alpha = 1.5;
        let spec = StableSpec::new(alpha).unwrap();
        let ens = fbm_ensemble(0.5, 1.0, 50, 400, 23);
        let grid = SpatialGrid::new(6.0, 0.02).unwrap();
        let ctx = KernelContext::new(Kernel::Indicator, Some(&ens), None, &grid).unwrap();
        let t_idx = 50;
        let samples = simulate_process(
            &ctx,
            &[t_idx],
            spec,
            SeededRng::new(29),
            12_000,
            DEFAULT_FIELD_BUDGET,
        )
        .unwrap();
        let a1_mean = ens
            .column(t_idx)
            .iter()
            .map(|a| a.abs().min(grid.half_width))
            .sum::<f64>()
            / ens.n_paths as f64;
        let scale_expect = a1_mean.powf(1.0 / alpha);
        let theta = 1.2;
        let phases: Vec<f64> = samples.iter().map(|s| theta * s.values[0]).collect();
        let c = stats::phase_mean(&phases);
        let scale_emp = (-c.re.ln()).powf(1.0 / alpha) / theta;
        assert!(
            (scale_emp / scale_expect - 1.0).abs() < 0.03,
            "scale {scale_emp} vs {scale_expect}"
        );
    }

    #[test]
    fn levy_route_has_iid_stable_increments() {
        let alpha = 1.5;
        let spec = StableSpec::new(alpha).unwrap();
        let tg = TimeGrid::new(8.0, 8).unwrap();
        let sub = SubordinatorSpec::fbm(0.5, 1.0).unwrap();
        let ens = sample_ensemble(&sub, &tg, 1, SeededRng::new(31)).unwrap();
        let grid = SpatialGrid::new(8.0, 0.01).unwrap();
        let ctx = KernelContext::new(Kernel::LevyDeterministic, Some(&ens), None, &grid).unwrap();
        let noise =
            simulate_noise(&ctx, 8, spec, SeededRng::new(37), 8000, DEFAULT_FIELD_BUDGET).unwrap();
        // increments pooled across n: match exp(-|theta|^alpha) (dt = 1)
        for &theta in &[0.5, 1.0, 2.0] {
            let phases: Vec<f64> =
                noise.iter().flat_map(|s| s.z.iter().map(move |z| theta * z)).collect();
            let c = stats::phase_mean(&phases);
            let expect = (-theta.abs().powf(alpha)).exp();
            assert!(
                (c.re - expect).abs() < 3.0 * c.se_re.max(1e-4),
                "theta={theta}: {} vs {expect}",
                c.re
            );
        }
    }

    #[test]
    fn noise_telescopes_to_process_value() {
        let spec = StableSpec::new(1.3).unwrap();
        let ens = fbm_ensemble(0.5, 10.0, 100, 64, 41);
        let grid = SpatialGrid::new(8.0, 0.05).unwrap();
        let ctx = KernelContext::new(Kernel::Indicator, Some(&ens), None, &grid).unwrap();
        let noise =
            simulate_noise(&ctx, 10, spec, SeededRng::new(43), 40, DEFAULT_FIELD_BUDGET).unwrap();
        for s in &noise {
            let sum: f64 = s.z.iter().sum();
            let y_n = *s.y.last().unwrap();
            assert!((sum - y_n).abs() < 1e-9 * y_n.abs().max(1.0));
            // Z(1) = Y(1) - Y(0) = Y(1) exactly
            assert_eq!(s.z[0], s.y[1]);
        }
    }

    #[test]
    fn noise_is_stationary_in_n() {
        let spec = StableSpec::new(1.5).unwrap();
        let ens = fbm_ensemble(0.5, 12.0, 120, 300, 47);
        let grid = SpatialGrid::new(10.0, 0.04).unwrap();
        let ctx = KernelContext::new(Kernel::Indicator, Some(&ens), None, &grid).unwrap();
        let n_reps = 8000;
        let noise =
            simulate_noise(&ctx, 10, spec, SeededRng::new(53), n_reps, DEFAULT_FIELD_BUDGET)
                .unwrap();
        // split replicates so the two samples are independent
        let half = n_reps / 2;
        let z1: Vec<f64> = noise[..half].iter().map(|s| s.z[0]).collect();
        let z10: Vec<f64> = noise[half..].iter().map(|s| s.z[9]).collect();
        let d = stats::ks_distance(&z1, &z10);
        let crit = stats::ks_critical(z1.len(), z10.len(), 0.01);
        assert!(d < crit, "KS {d} >= critical {crit}");
    }

    #[test]
    fn feasibility_examples() {
        let sub = SubordinatorSpec::fbm(0.8, 1.0).unwrap();
        let rep = feasibility_check(StableSpec::new(1.6).unwrap(), &sub);
        assert!((rep.ifsm.h - 0.5).abs() < 1e-12);
        assert!((rep.ifsm.hi - 0.625).abs() < 1e-12);
        assert!(rep.ifsm.range_ok);
        assert!((rep.ltfsm.h - 0.7).abs() < 1e-12);
        assert!(rep.ltfsm.range_ok);

        let sub2 = SubordinatorSpec::fbm(0.6, 1.0).unwrap();
        let rep2 = feasibility_check(StableSpec::new(2.0).unwrap(), &sub2);
        assert!((rep2.ifsm.h - 0.3).abs() < 1e-12);
        assert!(rep2.ifsm.h < 0.5, "alpha = 2 lands in the H < 1/2 FBM regime");
    }

    #[test]
    fn levy_context_without_ensemble() {
        let grid = SpatialGrid::new(4.0, 0.5).unwrap();
        let ctx = KernelContext::new(Kernel::LevyDeterministic, None, None, &grid).unwrap();
        assert_eq!(ctx.n_paths(), 1);
        let spec = StableSpec::new(1.2).unwrap();
        // times interpreted as integers when no ensemble is attached
        let samples =
            simulate_process(&ctx, &[0, 1, 2], spec, SeededRng::new(3), 10, DEFAULT_FIELD_BUDGET)
                .unwrap();
        for s in &samples {
            assert_eq!(s.values[0], 0.0);
        }
    }
}
