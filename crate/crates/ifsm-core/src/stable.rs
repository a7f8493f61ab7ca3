//! Symmetric alpha-stable sampling and the discretized independently
//! scattered random measure.
//!
//! A cell of control mass `m` receives one draw distributed `S_alpha(m^{1/alpha})`,
//! and disjoint cells receive independent draws. The scale convention is
//! `S_2(sigma) = N(0, 2 sigma^2)` and `S_1(sigma)` is Cauchy with scale
//! `sigma`, i.e. the characteristic function is `exp(-sigma^alpha |theta|^alpha)`.

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::rng::{SeededRng, StreamDomain};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

/// Default memory budget for a single noise field (1 GiB).
pub const DEFAULT_FIELD_BUDGET: u64 = 1 << 30;

/// Width of the removable singularity guard around alpha = 1.
const CAUCHY_GUARD: f64 = 1e-6;

/// Stability index, validated to (0, 2].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableSpec {
    alpha: f64,
}

impl StableSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Scale of the measure value on a cell of the given control mass:
    /// `mass^{1/alpha}`.
    pub fn cell_scale(&self, control_mass: f64) -> Result<f64> {
        if !(control_mass >= 0.0) {
            return Err(Error::NegativeScale(control_mass));
        }
        Ok(control_mass.powf(1.0 / self.alpha))
    }

    pub(crate) fn sampler(&self) -> StableSampler {
        if self.alpha == 2.0 {
            StableSampler::Gaussian
        } else if (self.alpha - 1.0).abs() < CAUCHY_GUARD {
            StableSampler::Cauchy
        } else {
            StableSampler::Cms {
                alpha: self.alpha,
                inv_alpha: 1.0 / self.alpha,
                exp_ratio: (1.0 - self.alpha) / self.alpha,
            }
        }
    }
}

/// Precomputed branch for repeated standard draws.
///
/// Every branch consumes exactly two 64-bit uniforms per variate, so the
/// k-th variate of a stream always starts at word position `4k`; field
/// generation exploits this to skip straight to a cell range.
#[derive(Clone, Copy, Debug)]
pub(crate) enum StableSampler {
    Gaussian,
    Cauchy,
    Cms { alpha: f64, inv_alpha: f64, exp_ratio: f64 },
}

/// ChaCha 32-bit words consumed per variate (two f64 draws).
pub(crate) const WORDS_PER_DRAW: u128 = 4;

impl StableSampler {
    /// One draw from `S_alpha(1)`.
    #[inline]
    pub fn standard<R: Rng>(&self, rng: &mut R) -> f64 {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        match *self {
            // S_2(1) = N(0, 2); Box-Muller keeps the draw count fixed
            StableSampler::Gaussian => {
                let r = (-2.0 * u1.max(1e-300).ln()).sqrt();
                SQRT_2 * r * (std::f64::consts::TAU * u2).cos()
            }
            StableSampler::Cauchy => ((u1 - 0.5) * std::f64::consts::PI).tan(),
            StableSampler::Cms { alpha, inv_alpha, exp_ratio } => {
                let u = (u1 - 0.5) * std::f64::consts::PI;
                let w = (-(1.0 - u2).ln()).max(1e-300);
                let s = (alpha * u).sin() / u.cos().powf(inv_alpha);
                s * (((1.0 - alpha) * u).cos() / w).powf(exp_ratio)
            }
        }
    }
}

/// One draw from the symmetric alpha-stable law with the given scale.
pub fn sample_sas<R: Rng>(spec: StableSpec, scale: f64, rng: &mut R) -> Result<f64> {
    if !(scale >= 0.0) {
        return Err(Error::NegativeScale(scale));
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(scale * spec.sampler().standard(rng))
}

/// Convenience: a vector of i.i.d. draws from one substream.
pub fn sample_sas_vec(spec: StableSpec, scale: f64, rng: SeededRng, n: usize) -> Result<Vec<f64>> {
    if !(scale >= 0.0) {
        return Err(Error::NegativeScale(scale));
    }
    let sampler = spec.sampler();
    let mut stream = rng.stream();
    Ok((0..n).map(|_| scale * sampler.standard(&mut stream)).collect())
}

/// Sampled values of the scattered measure on the product grid
/// (one row per subordinator path, one column per x-cell). Cell mass is
/// `dx / n_paths`, the empirical-product discretization of `P' x lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct StableNoiseField {
    pub alpha: f64,
    pub seed: SeededRng,
    pub grid: SpatialGrid,
    pub n_paths: usize,
    /// Row-major `[path][cell]`.
    pub values: Vec<f64>,
}

impl StableNoiseField {
    pub fn row(&self, path: usize) -> &[f64] {
        let w = self.grid.n_cells();
        &self.values[path * w..(path + 1) * w]
    }

    /// Scale applied to every cell draw.
    pub fn cell_scale(&self) -> f64 {
        (self.grid.dx / self.n_paths as f64).powf(1.0 / self.alpha)
    }

    /// Halve the spatial resolution by summing adjacent cells. By
    /// sigma-additivity of the control measure the result is distributed
    /// exactly as a field generated directly on the coarse grid, and it is
    /// pathwise coupled to this one.
    pub fn coarsen_pairwise(&self) -> Result<StableNoiseField> {
        let w = self.grid.n_cells();
        if w % 4 != 0 {
            return Err(Error::InvalidGrid(
                "pairwise coarsening needs a cell count divisible by 4".into(),
            ));
        }
        let coarse_grid = SpatialGrid::new(self.grid.half_width, 2.0 * self.grid.dx)?;
        let cw = coarse_grid.n_cells();
        let mut values = Vec::with_capacity(self.n_paths * cw);
        for i in 0..self.n_paths {
            let row = self.row(i);
            for j in 0..cw {
                values.push(row[2 * j] + row[2 * j + 1]);
            }
        }
        Ok(StableNoiseField {
            alpha: self.alpha,
            seed: self.seed,
            grid: coarse_grid,
            n_paths: self.n_paths,
            values,
        })
    }
}

/// Fill one field row (all cells of one path) from its own substream.
pub(crate) fn fill_field_row<R: Rng>(
    sampler: &StableSampler,
    cell_scale: f64,
    row: &mut [f64],
    rng: &mut R,
) {
    for v in row.iter_mut() {
        *v = cell_scale * sampler.standard(rng);
    }
}

/// Draw the full noise field for one realization of the random measure.
///
/// `replicate` selects the block of substreams, so distinct replicates are
/// independent and a field is reproducible from `(rng, replicate)` alone.
pub fn sample_noise_field(
    grid: &SpatialGrid,
    n_paths: usize,
    spec: StableSpec,
    rng: SeededRng,
    replicate: u64,
    budget_bytes: u64,
) -> Result<StableNoiseField> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    let n_cells = grid.n_cells();
    let bytes = (n_paths as u64) * (n_cells as u64) * 8;
    if bytes > budget_bytes {
        return Err(Error::FieldTooLarge { requested: bytes, budget: budget_bytes });
    }
    let sampler = spec.sampler();
    let cell_scale = spec.cell_scale(grid.dx / n_paths as f64)?;
    let mut values = vec![0.0f64; n_paths * n_cells];
    values
        .par_chunks_mut(n_cells)
        .enumerate()
        .for_each(|(i, row)| {
            let mut stream = rng
                .substream(StreamDomain::NoiseField, replicate * n_paths as u64 + i as u64)
                .stream();
            fill_field_row(&sampler, cell_scale, row, &mut stream);
        });
    Ok(StableNoiseField { alpha: spec.alpha(), seed: rng, grid: grid.clone(), n_paths, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;
    use rand_distr::StandardNormal;

    fn scalar_rng(seed: u64, idx: u64) -> rand_chacha::ChaCha8Rng {
        SeededRng::new(seed).substream(StreamDomain::Scalar, idx).stream()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(StableSpec::new(0.0).is_err());
        assert!(StableSpec::new(2.5).is_err());
        assert!(StableSpec::new(-1.0).is_err());
        let spec = StableSpec::new(1.5).unwrap();
        assert!(sample_sas(spec, -0.1, &mut scalar_rng(0, 0)).is_err());
        assert!(spec.cell_scale(-1.0).is_err());
    }

    #[test]
    fn zero_scale_is_exactly_zero() {
        let spec = StableSpec::new(1.5).unwrap();
        let x = sample_sas(spec, 0.0, &mut scalar_rng(1, 0)).unwrap();
        assert_eq!(x, 0.0);
    }

    #[test]
    fn cell_scale_examples() {
        let a2 = StableSpec::new(2.0).unwrap();
        let a07 = StableSpec::new(0.7).unwrap();
        assert_eq!(a2.cell_scale(1.0).unwrap(), 1.0);
        assert_eq!(a07.cell_scale(1.0).unwrap(), 1.0);
        assert_eq!(a2.cell_scale(0.0).unwrap(), 0.0);
        assert!((a2.cell_scale(0.25).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gaussian_branch_variance_is_two_sigma_squared() {
        // oracle: direct N(0, 2 sigma^2) sampler
        let sigma = 0.7;
        let spec = StableSpec::new(2.0).unwrap();
        let n = 1_000_000;
        let draws = sample_sas_vec(spec, sigma, SeededRng::new(42), n).unwrap();
        let var = stats::variance(&draws);
        let mut oracle_rng = scalar_rng(43, 1);
        let oracle: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = oracle_rng.sample(StandardNormal);
                sigma * SQRT_2 * z
            })
            .collect();
        let var_oracle = stats::variance(&oracle);
        assert!(
            (var / (2.0 * sigma * sigma) - 1.0).abs() < 0.01,
            "variance {var} vs 2 sigma^2 {}",
            2.0 * sigma * sigma
        );
        assert!((var / var_oracle - 1.0).abs() < 0.01);
    }

    #[test]
    fn cauchy_branch_median_abs_is_scale() {
        // oracle: median |Cauchy(1)| = tan(pi/4) = 1
        let spec = StableSpec::new(1.0).unwrap();
        let n = 1_000_000;
        let draws = sample_sas_vec(spec, 1.0, SeededRng::new(7), n).unwrap();
        let abs: Vec<f64> = draws.iter().map(|x| x.abs()).collect();
        let med = stats::median(&abs);
        assert!((med - 1.0).abs() < 0.01, "median |X| = {med}");
    }

    #[test]
    fn cms_characteristic_function_matches_closed_form() {
        // E cos(theta X) = exp(-|theta|^alpha) for S_alpha(1)
        for &alpha in &[0.8, 1.3, 1.5, 1.9] {
            let spec = StableSpec::new(alpha).unwrap();
            let n = 400_000;
            let draws = sample_sas_vec(spec, 1.0, SeededRng::new(1234), n).unwrap();
            for &theta in &[0.5, 1.0, 2.0] {
                let phase: Vec<f64> = draws.iter().map(|x| theta * x).collect();
                let c = stats::phase_mean(&phase);
                let expect = (-theta.abs().powf(alpha)).exp();
                assert!(
                    (c.re - expect).abs() < 3.0 * c.se_re,
                    "alpha={alpha} theta={theta}: re={} expect={expect} se={}",
                    c.re,
                    c.se_re
                );
                assert!(c.im.abs() < 3.0 * c.se_im);
            }
        }
    }

    #[test]
    fn symmetry_of_signs() {
        let spec = StableSpec::new(1.5).unwrap();
        let n = 200_000;
        let draws = sample_sas_vec(spec, 1.0, SeededRng::new(99), n).unwrap();
        let mean_sign =
            draws.iter().map(|x| x.signum()).sum::<f64>() / n as f64;
        assert!(mean_sign.abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn scale_additivity_for_disjoint_cells() {
        // sum of S_alpha(m1^{1/a}) + S_alpha(m2^{1/a}) ~ S_alpha((m1+m2)^{1/a})
        let alpha = 1.4;
        let spec = StableSpec::new(alpha).unwrap();
        let (m1, m2) = (0.6, 1.1);
        let n = 300_000;
        let s1 = spec.cell_scale(m1).unwrap();
        let s2 = spec.cell_scale(m2).unwrap();
        let a = sample_sas_vec(spec, s1, SeededRng::new(5), n).unwrap();
        let b = sample_sas_vec(spec, s2, SeededRng::new(6), n).unwrap();
        for &theta in &[0.5, 1.0, 2.0] {
            let phase: Vec<f64> =
                a.iter().zip(&b).map(|(x, y)| theta * (x + y)).collect();
            let c = stats::phase_mean(&phase);
            let expect = (-((m1 + m2) * theta.abs().powf(alpha))).exp();
            assert!(
                (c.re - expect).abs() < 3.0 * c.se_re,
                "theta={theta}: re={} expect={expect}",
                c.re
            );
        }
    }

    #[test]
    fn field_is_deterministic_and_reusable() {
        let grid = SpatialGrid::new(1.0, 0.05).unwrap();
        let spec = StableSpec::new(1.7).unwrap();
        let f1 =
            sample_noise_field(&grid, 16, spec, SeededRng::new(3), 4, DEFAULT_FIELD_BUDGET).unwrap();
        let f2 =
            sample_noise_field(&grid, 16, spec, SeededRng::new(3), 4, DEFAULT_FIELD_BUDGET).unwrap();
        assert_eq!(f1.values, f2.values);
        let f3 =
            sample_noise_field(&grid, 16, spec, SeededRng::new(3), 5, DEFAULT_FIELD_BUDGET).unwrap();
        assert_ne!(f1.values, f3.values);
    }

    #[test]
    fn field_respects_memory_budget() {
        let grid = SpatialGrid::new(1.0, 0.001).unwrap();
        let spec = StableSpec::new(1.5).unwrap();
        let err = sample_noise_field(&grid, 1000, spec, SeededRng::new(0), 0, 1 << 20);
        assert!(matches!(err, Err(Error::FieldTooLarge { .. })));
    }

    #[test]
    fn field_total_scale_is_sigma_additive() {
        // (sum over cells of scale^alpha)^{1/alpha} = (2X)^{1/alpha}
        let grid = SpatialGrid::new(1.5, 0.01).unwrap();
        let spec = StableSpec::new(1.3).unwrap();
        let n_paths = 8;
        let field =
            sample_noise_field(&grid, n_paths, spec, SeededRng::new(1), 0, DEFAULT_FIELD_BUDGET)
                .unwrap();
        let per_cell = field.cell_scale();
        let total_mass = per_cell.powf(spec.alpha()) * (n_paths * grid.n_cells()) as f64;
        assert!(
            (total_mass.powf(1.0 / spec.alpha()) - (2.0 * grid.half_width).powf(1.0 / spec.alpha()))
                .abs()
                < 1e-9
        );
    }

    #[test]
    fn field_entries_have_uncorrelated_signs() {
        // pairwise independence proxy across disjoint cells
        let grid = SpatialGrid::new(0.2, 0.1).unwrap();
        let spec = StableSpec::new(1.5).unwrap();
        let n = 100_000;
        let mut s00 = Vec::with_capacity(n);
        let mut s01 = Vec::with_capacity(n);
        let mut s10 = Vec::with_capacity(n);
        for r in 0..n {
            let f = sample_noise_field(&grid, 2, spec, SeededRng::new(21), r as u64, 1 << 24)
                .unwrap();
            s00.push(f.row(0)[0].signum());
            s01.push(f.row(0)[1].signum());
            s10.push(f.row(1)[0].signum());
        }
        for (a, b) in [(&s00, &s01), (&s00, &s10), (&s01, &s10)] {
            let corr: f64 =
                a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>() / n as f64;
            assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "sign corr {corr}");
        }
    }

    #[test]
    fn gaussian_field_sum_variance_matches_additivity_oracle() {
        // alpha=2, X=1: Var(sum of all cells) = 2 * (2X) = 4
        let grid = SpatialGrid::new(1.0, 0.01).unwrap();
        let spec = StableSpec::new(2.0).unwrap();
        let n_paths = 100;
        let n_reps = 12_000;
        let sums: Vec<f64> = (0..n_reps)
            .map(|r| {
                sample_noise_field(&grid, n_paths, spec, SeededRng::new(77), r as u64, 1 << 30)
                    .unwrap()
                    .values
                    .iter()
                    .sum()
            })
            .collect();
        let var = stats::variance(&sums);
        assert!((var / 4.0 - 1.0).abs() < 0.02, "field sum variance {var}, oracle 4");
    }

    #[test]
    fn coarsened_field_sums_children() {
        let grid = SpatialGrid::new(1.0, 0.25).unwrap();
        let spec = StableSpec::new(1.5).unwrap();
        let fine =
            sample_noise_field(&grid, 3, spec, SeededRng::new(2), 0, DEFAULT_FIELD_BUDGET).unwrap();
        let coarse = fine.coarsen_pairwise().unwrap();
        assert_eq!(coarse.grid.n_cells(), fine.grid.n_cells() / 2);
        for i in 0..3 {
            for j in 0..coarse.grid.n_cells() {
                let expect = fine.row(i)[2 * j] + fine.row(i)[2 * j + 1];
                assert_eq!(coarse.row(i)[j], expect);
            }
        }
    }
}
