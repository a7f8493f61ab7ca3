//! Characteristic-functional oracle.
//!
//! For a finite linear form `sum_j theta_j (Y(t_j) - Y(s_j))` the joint law
//! satisfies `E exp(i sum_j ...) = exp(-I)` with
//! `I = int E' | sum_j theta_j g_j(omega', x) |^alpha dx`, where `g_j` is the
//! increment kernel. The oracle evaluates `I` by Monte Carlo over paths
//! only: per path the integrand is a step function of `x`, so the x-integral
//! is a finite sum of interval lengths in closed form. The estimate is
//! independent of the noise fields used by the simulator.

use crate::error::{Error, Result};
use crate::integral::{Kernel, KernelContext, ProcessSample};
use crate::stable::StableSpec;
use crate::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One term of a linear form: `theta * (Y(t) - Y(s))`; `s = 0` is plain
/// evaluation since `Y(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormTerm {
    pub theta: f64,
    pub t: f64,
    pub s: f64,
}

/// A finite linear form over process values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearForm {
    pub terms: Vec<FormTerm>,
}

impl LinearForm {
    pub fn new(terms: Vec<FormTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidArgument("a linear form needs at least one term".into()));
        }
        for term in &terms {
            if term.t < 0.0 || term.s < 0.0 {
                return Err(Error::InvalidArgument("form times must be nonnegative".into()));
            }
        }
        Ok(Self { terms })
    }

    /// Plain evaluation form `theta * Y(t)`.
    pub fn eval(theta: f64, t: f64) -> Self {
        Self { terms: vec![FormTerm { theta, t, s: 0.0 }] }
    }

    /// Shift every term by `h`: `(theta, t + h, s + h)`.
    pub fn shifted(&self, h: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|w| FormTerm { theta: w.theta, t: w.t + h, s: w.s + h })
                .collect(),
        }
    }

    /// Scale every time by `c`.
    pub fn time_scaled(&self, c: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|w| FormTerm { theta: w.theta, t: c * w.t, s: c * w.s })
                .collect(),
        }
    }

    pub fn times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.terms.iter().flat_map(|w| [w.t, w.s]).collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        ts
    }
}

/// Result of the exponent integral.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CharFunctionalEstimate {
    /// The exponent `I >= 0`.
    pub exponent: f64,
    /// Monte Carlo standard error of `I` over paths.
    pub stderr: f64,
    /// `exp(-I)`, in (0, 1].
    pub value: f64,
    /// Fraction of kernel interval length clipped by the spatial grid.
    pub truncated_fraction: f64,
}

/// A signed elementary interval contributing `weight` on `[lo, hi]`.
#[derive(Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    weight: f64,
}

/// Elementary signed intervals of the increment kernel
/// `g(x) = K(t, x) - K(s, x)` for one path.
fn increment_pieces(kernel: Kernel, a_s: f64, a_t: f64) -> Vec<Piece> {
    match kernel {
        Kernel::SignedIndicator => {
            // sign(A_t - A_s) on [A_s, A_t]
            let w = (a_t - a_s).signum();
            if a_t == a_s {
                vec![]
            } else {
                vec![Piece { lo: a_s.min(a_t), hi: a_s.max(a_t), weight: w }]
            }
        }
        // 1_{[0, A_t]} - 1_{[0, A_s]} with the unordered bracket convention
        Kernel::Indicator | Kernel::LevyDeterministic => {
            let mut v = Vec::with_capacity(2);
            if a_t != 0.0 {
                v.push(Piece { lo: a_t.min(0.0), hi: a_t.max(0.0), weight: 1.0 });
            }
            if a_s != 0.0 {
                v.push(Piece { lo: a_s.min(0.0), hi: a_s.max(0.0), weight: -1.0 });
            }
            v
        }
        Kernel::LocalTime => unreachable!("local-time increments are handled on the cell grid"),
    }
}

/// Exact x-integral of `|sum_j theta_j g_j|^alpha` for one path, clipped to
/// `[-x_limit, x_limit]`. Returns the integral and the clipped length.
fn path_integral(pieces: &[(f64, Vec<Piece>)], alpha: f64, x_limit: f64) -> (f64, f64) {
    let mut cuts: Vec<f64> = Vec::with_capacity(4 * pieces.len() + 2);
    let mut outside = 0.0f64;
    for (_, ps) in pieces {
        for p in ps {
            cuts.push(p.lo.max(-x_limit));
            cuts.push(p.hi.min(x_limit));
            outside += (p.hi - p.lo) - (p.hi.min(x_limit) - p.lo.max(-x_limit)).max(0.0);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut integral = 0.0f64;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let mut val = 0.0f64;
        for (theta, ps) in pieces {
            for p in ps {
                if p.lo <= mid && mid <= p.hi {
                    val += theta * p.weight;
                }
            }
        }
        if val != 0.0 {
            integral += (hi - lo) * val.abs().powf(alpha);
        }
    }
    (integral, outside)
}

/// Evaluate the characteristic-functional exponent of a form.
///
/// The spatial grid in `ctx` fixes the truncation window so the oracle
/// measures the same object as the simulator; within the window the
/// x-integration is exact.
pub fn exponent_integral(
    ctx: &KernelContext,
    form: &LinearForm,
    spec: StableSpec,
) -> Result<CharFunctionalEstimate> {
    let alpha = spec.alpha();
    let x_limit = ctx.grid.half_width;
    let per_path: Vec<(f64, f64)> = match ctx.kernel {
        Kernel::LocalTime => {
            let ensemble = ctx
                .ensemble
                .ok_or_else(|| Error::InvalidArgument("oracle needs an ensemble".into()))?;
            let lt = ctx.local_time.unwrap();
            let slots: Vec<(usize, Option<usize>)> = form
                .terms
                .iter()
                .map(|term| -> Result<(usize, Option<usize>)> {
                    let t_idx = ensemble.grid.index_of(term.t)?;
                    let t_slot = lt
                        .slot_of(t_idx)
                        .ok_or_else(|| Error::TimeNotOnGrid(term.t))?;
                    let s_slot = if term.s == 0.0 {
                        None
                    } else {
                        let s_idx = ensemble.grid.index_of(term.s)?;
                        Some(lt.slot_of(s_idx).ok_or_else(|| Error::TimeNotOnGrid(term.s))?)
                    };
                    Ok((t_slot, s_slot))
                })
                .collect::<Result<_>>()?;
            let dx = ctx.grid.dx;
            let n_cells = ctx.grid.n_cells();
            (0..ensemble.n_paths)
                .into_par_iter()
                .map(|i| {
                    let mut integral = 0.0f64;
                    for j in 0..n_cells {
                        let mut val = 0.0f64;
                        for (term, (t_slot, s_slot)) in form.terms.iter().zip(&slots) {
                            let mut g = lt.row(i, *t_slot)[j];
                            if let Some(s_slot) = s_slot {
                                g -= lt.row(i, *s_slot)[j];
                            }
                            val += term.theta * g;
                        }
                        if val != 0.0 {
                            integral += dx * val.abs().powf(alpha);
                        }
                    }
                    (integral, 0.0)
                })
                .collect()
        }
        Kernel::LevyDeterministic => {
            let pieces: Vec<(f64, Vec<Piece>)> = form
                .terms
                .iter()
                .map(|w| (w.theta, increment_pieces(ctx.kernel, w.s, w.t)))
                .collect();
            vec![path_integral(&pieces, alpha, x_limit)]
        }
        _ => {
            let ensemble = ctx
                .ensemble
                .ok_or_else(|| Error::InvalidArgument("oracle needs an ensemble".into()))?;
            let idx: Vec<(usize, usize)> = form
                .terms
                .iter()
                .map(|w| Ok((ensemble.grid.index_of(w.t)?, ensemble.grid.index_of(w.s)?)))
                .collect::<Result<_>>()?;
            (0..ensemble.n_paths)
                .into_par_iter()
                .map(|i| {
                    let pieces: Vec<(f64, Vec<Piece>)> = form
                        .terms
                        .iter()
                        .zip(&idx)
                        .map(|(w, &(kt, ks))| {
                            let a_t = ensemble.value(i, kt);
                            let a_s = ensemble.value(i, ks);
                            (w.theta, increment_pieces(ctx.kernel, a_s, a_t))
                        })
                        .collect();
                    path_integral(&pieces, alpha, x_limit)
                })
                .collect()
        }
    };

    let values: Vec<f64> = per_path.iter().map(|p| p.0).collect();
    let exponent = stats::mean(&values);
    let stderr = if values.len() > 1 { stats::std_error(&values) } else { 0.0 };
    let clipped: f64 = per_path.iter().map(|p| p.1).sum();
    let total: f64 = values.iter().sum::<f64>() + clipped;
    let truncated_fraction = if total > 0.0 { clipped / total } else { 0.0 };
    if truncated_fraction > 1e-3 {
        log::warn!(
            "oracle: {:.3}% of kernel mass clipped by the spatial grid",
            100.0 * truncated_fraction
        );
    }
    Ok(CharFunctionalEstimate { exponent, stderr, value: (-exponent).exp(), truncated_fraction })
}

/// Empirical characteristic function of a form over i.i.d. replicates.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EmpiricalChar {
    pub re: f64,
    pub im: f64,
    pub se_re: f64,
    pub se_im: f64,
    pub n: usize,
}

impl EmpiricalChar {
    /// `|emp - exp(-I)|` and the combined standard error of that distance.
    pub fn distance_to(&self, oracle: &CharFunctionalEstimate) -> (f64, f64) {
        let d = ((self.re - oracle.value).powi(2) + self.im.powi(2)).sqrt();
        let se_oracle = oracle.value * oracle.stderr;
        let se = (self.se_re.powi(2) + self.se_im.powi(2) + se_oracle.powi(2)).sqrt();
        (d, se)
    }
}

/// Sample mean of `exp(i sum_j theta_j (Y(t_j) - Y(s_j)))`.
pub fn empirical_char(samples: &[ProcessSample], form: &LinearForm) -> Result<EmpiricalChar> {
    if samples.len() < 100 {
        return Err(Error::InsufficientReplicates { got: samples.len(), need: 100 });
    }
    let phases: Vec<f64> = samples
        .iter()
        .map(|s| {
            let mut phase = 0.0f64;
            for term in &form.terms {
                let y_t = lookup(s, term.t)?;
                let y_s = lookup(s, term.s)?;
                phase += term.theta * (y_t - y_s);
            }
            Ok(phase)
        })
        .collect::<Result<_>>()?;
    let c = stats::phase_mean(&phases);
    Ok(EmpiricalChar { re: c.re, im: c.im, se_re: c.se_re, se_im: c.se_im, n: c.n })
}

fn lookup(sample: &ProcessSample, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    sample.value_at(t).ok_or(Error::TimeNotOnGrid(t))
}
