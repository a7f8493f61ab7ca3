//! Configuration-driven experiment runner: ensemble generation, grid
//! auto-fitting, experiment orchestration, cache management, and report
//! emission. Deterministic for a fixed config and seed regardless of the
//! worker count.

use crate::cache::Cache;
use crate::config::{Experiment, ProcessClass, RunConfig};
use crate::diagnostics::{
    attach_bound, conservativity_sum, estimate_selfsim_exponent, extreme_value_stat, mixing_curve,
    stationarity_distance, TailModel,
};
use crate::error::{Error, Result};
use crate::grid::{SpatialGrid, TimeGrid};
use crate::integral::{
    feasibility_check, simulate_noise, simulate_process, Kernel, KernelContext, NoiseSample,
    ProcessSample,
};
use crate::oracle::{empirical_char, exponent_integral, FormTerm, LinearForm};
use crate::report::{
    conservativity_csv, exponents_csv, mixing_csv, write_out, ExperimentResult, ExponentCsvRow,
    GridEcho, RunMeta, RunReport, TruncationEntry, SCHEMA_VERSION,
};
use crate::rng::{SeededRng, StreamDomain};
use crate::stable::{sample_sas_vec, StableSpec};
use crate::stats;
use crate::subordinator::{
    compute_local_time, sample_ensemble, LocalTimeField, SubordinatorEnsemble, SubordinatorSpec,
};
use serde_json::json;
use std::path::Path;
use std::time::Instant;

/// Pilot-ensemble size used to auto-fit the spatial truncation.
const PILOT_PATHS: usize = 512;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Independent master seed per experiment, so experiments never share
/// random-number streams.
fn experiment_seed(seed: u64, salt: u64) -> SeededRng {
    SeededRng::new(splitmix64(seed ^ salt))
}

const SALT_SELFSIM: u64 = 1;
const SALT_STATIONARITY: u64 = 2;
const SALT_SIGNKERNEL: u64 = 3;
const SALT_CHARMATCH: u64 = 4;
const SALT_MIXING: u64 = 5;
const SALT_CONSERVATIVITY: u64 = 6;
const SALT_EXTREME: u64 = 7;

/// The 10-form panel (k <= 3) used by the characteristic-functional and
/// sign-kernel experiments. Times lie on the default grids.
pub fn standard_panel() -> Vec<LinearForm> {
    let t = |theta: f64, t: f64, s: f64| FormTerm { theta, t, s };
    vec![
        LinearForm::eval(1.0, 1.0),
        LinearForm::eval(0.5, 2.0),
        LinearForm::eval(2.0, 0.5),
        LinearForm { terms: vec![t(1.0, 1.0, 0.0), t(-1.0, 2.0, 0.0)] },
        LinearForm { terms: vec![t(1.0, 2.0, 1.0)] },
        LinearForm { terms: vec![t(0.7, 1.0, 0.0), t(0.7, 3.0, 2.0)] },
        LinearForm { terms: vec![t(1.0, 0.5, 0.0), t(1.0, 1.0, 0.5), t(1.0, 2.0, 1.0)] },
        LinearForm { terms: vec![t(1.5, 1.0, 0.0), t(-0.5, 3.0, 0.0)] },
        LinearForm { terms: vec![t(0.8, 4.0, 0.0), t(0.4, 2.0, 0.0), t(-0.6, 1.0, 0.0)] },
        LinearForm::eval(1.0, 5.0),
    ]
}

/// Increment panel for the degenerate Levy route: single increments at
/// theta in {0.5, 1, 2} plus two joint forms testing independence.
pub fn levy_panel() -> Vec<LinearForm> {
    let t = |theta: f64, t: f64, s: f64| FormTerm { theta, t, s };
    let mut forms = Vec::new();
    for &theta in &[0.5, 1.0, 2.0] {
        forms.push(LinearForm { terms: vec![t(theta, 1.0, 0.0)] });
        forms.push(LinearForm { terms: vec![t(theta, 2.0, 1.0)] });
    }
    forms.push(LinearForm { terms: vec![t(1.0, 1.0, 0.0), t(1.0, 2.0, 1.0)] });
    forms.push(LinearForm { terms: vec![t(0.5, 1.0, 0.0), t(-1.0, 2.0, 1.0)] });
    forms
}

/// (s, t) pairs for the alpha = 2 covariance reduction.
fn covariance_pairs() -> Vec<(f64, f64)> {
    vec![
        (0.5, 0.5),
        (0.5, 1.0),
        (0.5, 2.0),
        (0.5, 4.0),
        (1.0, 1.0),
        (1.0, 2.0),
        (1.0, 4.0),
        (2.0, 2.0),
        (2.0, 4.0),
        (4.0, 4.0),
    ]
}

struct Orchestrator<'a> {
    cfg: &'a RunConfig,
    stable: StableSpec,
    sub_spec: Option<SubordinatorSpec>,
    time_grid: TimeGrid,
    ensemble: Option<SubordinatorEnsemble>,
    grid: Option<SpatialGrid>,
    local_time: Option<LocalTimeField>,
    notices: Vec<String>,
    truncation: Vec<TruncationEntry>,
    exponent_rows: Vec<ExponentCsvRow>,
    mixing_csv: Option<String>,
    conservativity_csv: Option<String>,
    cache_hits: u32,
}

/// Execute the configured experiments and, when `out` is given, write the
/// canonical report, side-car meta, and CSV outputs there.
pub fn run(cfg: &RunConfig, out: Option<&Path>) -> Result<RunReport> {
    let start = Instant::now();
    let stable = StableSpec::new(cfg.run.alpha)?;
    let sub_spec = match cfg.run.process {
        ProcessClass::Levy => None,
        _ => Some(match cfg.subordinator.kind {
            crate::subordinator::SubordinatorKind::Fbm => {
                SubordinatorSpec::fbm(cfg.subordinator.hurst, cfg.subordinator.sigma)?
            }
            crate::subordinator::SubordinatorKind::StableLevy => {
                SubordinatorSpec::stable_levy(cfg.subordinator.beta, cfg.subordinator.sigma)?
            }
        }),
    };
    let time_grid = TimeGrid::new(cfg.time.t_max, cfg.time.n_steps)?;

    let mut orch = Orchestrator {
        cfg,
        stable,
        sub_spec,
        time_grid,
        ensemble: None,
        grid: None,
        local_time: None,
        notices: cfg.notices.clone(),
        truncation: Vec::new(),
        exponent_rows: Vec::new(),
        mixing_csv: None,
        conservativity_csv: None,
        cache_hits: 0,
    };

    let cache = match out {
        Some(dir) => Some(Cache::new(&dir.join("cache"))?),
        None => None,
    };

    let mut results = Vec::new();
    for &experiment in &cfg.run.experiments {
        let result = match experiment {
            Experiment::Feasibility => orch.feasibility(),
            Experiment::Selfsim => orch.selfsim(cache.as_ref()),
            Experiment::Stationarity => orch.stationarity(cache.as_ref()),
            Experiment::Signkernel => orch.signkernel(cache.as_ref()),
            Experiment::Charmatch => orch.charmatch(cache.as_ref()),
            Experiment::Mixing => orch.mixing(),
            Experiment::Conservativity => orch.conservativity(),
            Experiment::Extreme => orch.extreme(),
        }
        .map_err(|e| {
            Error::InvalidArgument(format!("experiment '{}': {e}", experiment.name()))
        })?;
        results.push(result);
    }

    let all_pass = results.iter().all(|r| r.pass);
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        grid: orch.grid.as_ref().map(|g| GridEcho {
            half_width: g.half_width,
            dx: g.dx,
            n_cells: g.n_cells(),
        }),
        results,
        truncation: orch.truncation.clone(),
        notices: orch.notices.clone(),
        all_pass,
        wall_time_secs: start.elapsed().as_secs_f64(),
        cache_hits: orch.cache_hits + cache.as_ref().map_or(0, |c| c.hits.get()),
    };

    if let Some(dir) = out {
        write_out(dir, "report.json", &report.to_canonical_json())?;
        let meta = RunMeta {
            wall_time_secs: report.wall_time_secs,
            cache_hits: report.cache_hits,
            threads: rayon::current_num_threads(),
        };
        write_out(
            dir,
            "meta.json",
            &(serde_json::to_string_pretty(&meta).expect("meta serialization") + "\n"),
        )?;
        if !orch.exponent_rows.is_empty() {
            write_out(dir, "exponents.csv", &exponents_csv(&orch.exponent_rows))?;
        }
        if let Some(csv) = &orch.mixing_csv {
            write_out(dir, "mixing.csv", csv)?;
        }
        if let Some(csv) = &orch.conservativity_csv {
            write_out(dir, "conservativity.csv", csv)?;
        }
    }
    Ok(report)
}

impl<'a> Orchestrator<'a> {
    fn sub_spec(&self) -> Result<&SubordinatorSpec> {
        self.sub_spec
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("the levy process has no subordinator".into()))
    }

    fn h_prime(&self) -> f64 {
        self.sub_spec.as_ref().map_or(1.0, |s| s.self_similarity_exponent())
    }

    /// Theoretical self-similarity exponent of the configured process.
    fn h_theory(&self) -> f64 {
        let alpha = self.stable.alpha();
        match self.cfg.run.process {
            ProcessClass::Ifsm => self.h_prime() / alpha,
            ProcessClass::Ltfsm => 1.0 - self.h_prime() + self.h_prime() / alpha,
            ProcessClass::Levy => 1.0 / alpha,
        }
    }

    fn kernel(&self) -> Kernel {
        match self.cfg.run.process {
            ProcessClass::Ifsm => Kernel::Indicator,
            ProcessClass::Ltfsm => Kernel::LocalTime,
            ProcessClass::Levy => Kernel::LevyDeterministic,
        }
    }

    /// All main-grid times any simulation experiment can request.
    fn needed_times(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = Vec::new();
        let exps = &self.cfg.run.experiments;
        if exps.contains(&Experiment::Selfsim) {
            ts.extend(&self.cfg.experiments.selfsim.times);
        }
        if exps.contains(&Experiment::Stationarity) {
            let p = &self.cfg.experiments.stationarity;
            ts.push(p.t);
            for &h in &p.shifts {
                ts.push(h);
                ts.push(p.t + h);
            }
        }
        if exps.contains(&Experiment::Signkernel) || exps.contains(&Experiment::Charmatch) {
            let panel = if self.cfg.run.process == ProcessClass::Levy {
                levy_panel()
            } else {
                standard_panel()
            };
            for form in &panel {
                ts.extend(form.times());
            }
            if self.stable.alpha() == 2.0 {
                for (s, t) in covariance_pairs() {
                    ts.push(s);
                    ts.push(t);
                }
            }
        }
        let mut ts: Vec<f64> = ts.into_iter().filter(|&t| t > 0.0).collect();
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        ts
    }

    /// Build (once) the main ensemble, auto-fitted spatial grid, and the
    /// local-time field when the process needs one.
    fn ensure_main(&mut self, cache: Option<&Cache>) -> Result<()> {
        if self.grid.is_some() {
            return Ok(());
        }
        let needed = self.needed_times();
        for &t in &needed {
            self.time_grid.index_of(t).map_err(|_| {
                Error::InvalidArgument(format!(
                    "experiment time {t} is not on the run grid (t_max = {}, n_steps = {})",
                    self.time_grid.t_max, self.time_grid.n_steps
                ))
            })?;
        }

        let seed = SeededRng::new(self.cfg.run.seed);
        if self.cfg.run.process != ProcessClass::Levy {
            let spec = *self.sub_spec()?;
            let (ensemble, hit) = match cache {
                Some(c) => c.ensemble(&spec, &self.time_grid, self.cfg.monte_carlo.n_paths, seed)?,
                None => (
                    sample_ensemble(&spec, &self.time_grid, self.cfg.monte_carlo.n_paths, seed)?,
                    false,
                ),
            };
            if hit {
                // logged by the cache; kept out of the canonical report so
                // identical config + seed stays byte-identical across runs
                self.cache_hits += 1;
            }
            if ensemble.used_fallback {
                self.notices.push("fbm synthesis used the dense fallback".into());
            }
            self.ensemble = Some(ensemble);
        }

        let grid = self.fit_grid(&self.time_grid, self.sub_spec.as_ref(), seed)?;
        self.notices.push(format!(
            "spatial grid fixed at half_width = {}, dx = {}",
            grid.half_width, grid.dx
        ));

        // truncation ledger: exact L1 kernel mass lost at each needed time
        if let Some(ens) = &self.ensemble {
            for &t in &needed {
                let k = ens.grid.index_of(t)?;
                let mass = ens.truncation_mass(k, grid.half_width);
                self.truncation.push(TruncationEntry { t, mass });
            }
        }

        if self.cfg.run.process == ProcessClass::Ltfsm {
            let ens = self.ensemble.as_ref().unwrap();
            let mut slots: Vec<usize> =
                needed.iter().map(|&t| ens.grid.index_of(t)).collect::<Result<_>>()?;
            slots.sort_unstable();
            slots.dedup();
            let lt = compute_local_time(ens, &grid, &slots)?;
            if lt.truncation_warning {
                self.notices.push("local time: > 0.1% occupation mass truncated".into());
            }
            self.local_time = Some(lt);
        }
        self.grid = Some(grid);
        Ok(())
    }

    /// Auto-fit the spatial half-width: the 99.9% pilot quantile of
    /// `max_t |A_t|` (the deterministic kernel instead needs `[0, t_max]`).
    fn fit_grid(
        &self,
        time_grid: &TimeGrid,
        spec: Option<&SubordinatorSpec>,
        seed: SeededRng,
    ) -> Result<SpatialGrid> {
        let half_width = if self.cfg.space.half_width > 0.0 {
            self.cfg.space.half_width
        } else {
            match spec {
                None => time_grid.t_max,
                Some(spec) => {
                    let pilot = crate::subordinator::sample_ensemble_with(
                        spec,
                        time_grid,
                        PILOT_PATHS,
                        seed,
                        crate::fbm::FbmMethod::Auto,
                        StreamDomain::Pilot,
                    )?;
                    let maxima: Vec<f64> = (0..pilot.n_paths)
                        .map(|i| pilot.path(i).iter().fold(0.0f64, |m, v| m.max(v.abs())))
                        .collect();
                    stats::quantile(&maxima, 0.999)
                }
            }
        };
        let dx = if self.cfg.space.dx > 0.0 { self.cfg.space.dx } else { half_width / 500.0 };
        SpatialGrid::new(half_width, dx)
    }

    fn kernel_ctx<'b>(&'b self, grid: &'b SpatialGrid) -> Result<KernelContext<'b>> {
        if self.cfg.run.process == ProcessClass::Levy {
            KernelContext::deterministic(&self.time_grid, grid)
        } else {
            KernelContext::new(self.kernel(), self.ensemble.as_ref(), self.local_time.as_ref(), grid)
        }
    }

    fn feasibility(&mut self) -> Result<ExperimentResult> {
        let alpha = self.stable.alpha();
        let (metrics, pass) = match (&self.sub_spec, self.cfg.run.process) {
            (Some(spec), process) => {
                let rep = feasibility_check(self.stable, spec);
                let own = match process {
                    ProcessClass::Ifsm => rep.ifsm,
                    ProcessClass::Ltfsm => rep.ltfsm,
                    ProcessClass::Levy => unreachable!(),
                };
                (
                    json!({
                        "alpha": alpha,
                        "h_prime": rep.h_prime,
                        "process": process.name(),
                        "h": own.h,
                        "range": [own.lo, own.hi],
                        "range_ok": own.range_ok,
                        "ifsm": {"h": rep.ifsm.h, "range": [rep.ifsm.lo, rep.ifsm.hi], "range_ok": rep.ifsm.range_ok},
                        "ltfsm": {"h": rep.ltfsm.h, "range": [rep.ltfsm.lo, rep.ltfsm.hi], "range_ok": rep.ltfsm.range_ok},
                    }),
                    own.range_ok,
                )
            }
            (None, _) => (
                json!({
                    "alpha": alpha,
                    "process": "levy",
                    "h": 1.0 / alpha,
                    "note": "degenerate kernel 1_{[0,t]}; exponent H = 1/alpha",
                }),
                true,
            ),
        };
        Ok(ExperimentResult { experiment: Experiment::Feasibility, pass, metrics })
    }

    fn selfsim(&mut self, cache: Option<&Cache>) -> Result<ExperimentResult> {
        self.ensure_main(cache)?;
        let grid = self.grid.clone().unwrap();
        let ctx = self.kernel_ctx(&grid)?;
        let params = &self.cfg.experiments.selfsim;
        let times_idx: Vec<usize> =
            params.times.iter().map(|&t| self.time_grid.index_of(t)).collect::<Result<_>>()?;
        let samples = simulate_process(
            &ctx,
            &times_idx,
            self.stable,
            experiment_seed(self.cfg.run.seed, SALT_SELFSIM),
            self.cfg.monte_carlo.n_replicates,
            self.cfg.budget_bytes(),
        )?;
        let fit = estimate_selfsim_exponent(&samples, params.quantile)?;
        let h_theory = self.h_theory();
        let tol = if self.stable.alpha() == 2.0 {
            self.cfg.tolerances.exponent_tol_gauss
        } else {
            self.cfg.tolerances.exponent_tol
        };
        let pass = (fit.h_hat - h_theory).abs() <= tol && fit.r_squared > self.cfg.tolerances.r2_min;
        self.exponent_rows.push(ExponentCsvRow {
            config: format!("{}-a{}-hp{}", self.cfg.run.process.name(), self.stable.alpha(), self.h_prime()),
            alpha: self.stable.alpha(),
            h_prime: self.h_prime(),
            quantile: fit.quantile,
            h_hat: fit.h_hat,
            stderr: fit.stderr,
            r_squared: fit.r_squared,
            h_theory,
        });
        Ok(ExperimentResult {
            experiment: Experiment::Selfsim,
            pass,
            metrics: json!({
                "h_hat": fit.h_hat,
                "stderr": fit.stderr,
                "r_squared": fit.r_squared,
                "h_theory": h_theory,
                "tolerance": tol,
                "quantile": fit.quantile,
                "times": fit.times,
            }),
        })
    }

    fn stationarity(&mut self, cache: Option<&Cache>) -> Result<ExperimentResult> {
        self.ensure_main(cache)?;
        let grid = self.grid.clone().unwrap();
        let ctx = self.kernel_ctx(&grid)?;
        let params = self.cfg.experiments.stationarity.clone();
        let r = self.cfg.monte_carlo.n_replicates;

        let mut times = vec![params.t];
        for &h in &params.shifts {
            times.push(h);
            times.push(params.t + h);
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let times_idx: Vec<usize> =
            times.iter().map(|&t| self.time_grid.index_of(t)).collect::<Result<_>>()?;

        let samples = simulate_process(
            &ctx,
            &times_idx,
            self.stable,
            experiment_seed(self.cfg.run.seed, SALT_STATIONARITY),
            2 * r,
            self.cfg.budget_bytes(),
        )?;
        let value = |s: &ProcessSample, t: f64| s.value_at(t).ok_or(Error::TimeNotOnGrid(t));
        // independent halves: base from the first, shifted from the second
        let base: Vec<f64> =
            samples[..r].iter().map(|s| value(s, params.t)).collect::<Result<_>>()?;
        let mut shifted = Vec::new();
        for &h in &params.shifts {
            let inc: Vec<f64> = samples[r..]
                .iter()
                .map(|s| Ok(value(s, params.t + h)? - value(s, h)?))
                .collect::<Result<_>>()?;
            shifted.push((h, inc));
        }
        let rep = stationarity_distance(&base, &shifted)?;

        // broken control: "forgets" to subtract Y(h) (the ensemble pinned
        // at A_h = 0), which scales the law and must be detected
        let h_max = params.shifts.iter().cloned().fold(0.0, f64::max);
        let broken: Vec<f64> =
            samples[r..].iter().map(|s| value(s, params.t + h_max)).collect::<Result<_>>()?;
        let broken_d = stats::ks_distance(&base, &broken);

        let crit = stats::ks_critical(base.len(), r, self.cfg.tolerances.ks_level);
        let pass = rep.max_distance < crit && broken_d > crit;
        Ok(ExperimentResult {
            experiment: Experiment::Stationarity,
            pass,
            metrics: json!({
                "t": params.t,
                "shifts": rep.shifts,
                "distances": rep.distances,
                "max_distance": rep.max_distance,
                "critical": crit,
                "broken_control_distance": broken_d,
                "n_per_sample": r,
            }),
        })
    }

    fn signkernel(&mut self, cache: Option<&Cache>) -> Result<ExperimentResult> {
        self.ensure_main(cache)?;
        let grid = self.grid.clone().unwrap();
        if self.cfg.run.process != ProcessClass::Ifsm {
            self.notices.push(
                "signkernel compares the indicator and signed-indicator kernels; \
                 running it on the indicator pair regardless of the configured process"
                    .into(),
            );
        }
        let panel = standard_panel();
        let mut times: Vec<f64> = panel.iter().flat_map(|f| f.times()).filter(|&t| t > 0.0).collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let times_idx: Vec<usize> =
            times.iter().map(|&t| self.time_grid.index_of(t)).collect::<Result<_>>()?;

        let seed = experiment_seed(self.cfg.run.seed, SALT_SIGNKERNEL);
        let r = self.cfg.monte_carlo.n_replicates;
        let ens = self.ensemble.as_ref();
        let ctx_ind = KernelContext::new(Kernel::Indicator, ens, None, &grid)?;
        let ctx_sgn = KernelContext::new(Kernel::SignedIndicator, ens, None, &grid)?;
        // same seed: the two kernels integrate the same fields, so the
        // difference of phases isolates the kernel change
        let sam_ind =
            simulate_process(&ctx_ind, &times_idx, self.stable, seed, r, self.cfg.budget_bytes())?;
        let sam_sgn =
            simulate_process(&ctx_sgn, &times_idx, self.stable, seed, r, self.cfg.budget_bytes())?;

        let k_sigma = self.cfg.tolerances.char_k_sigma;
        let mut rows = Vec::new();
        let mut pass = true;
        for (fi, form) in panel.iter().enumerate() {
            let phase = |s: &ProcessSample| -> Result<f64> {
                let mut p = 0.0;
                for term in &form.terms {
                    let y_t =
                        if term.t == 0.0 { 0.0 } else { s.value_at(term.t).ok_or(Error::TimeNotOnGrid(term.t))? };
                    let y_s =
                        if term.s == 0.0 { 0.0 } else { s.value_at(term.s).ok_or(Error::TimeNotOnGrid(term.s))? };
                    p += term.theta * (y_t - y_s);
                }
                Ok(p)
            };
            let mut d_re = Vec::with_capacity(r);
            let mut d_im = Vec::with_capacity(r);
            for (a, b) in sam_ind.iter().zip(&sam_sgn) {
                let pa = phase(a)?;
                let pb = phase(b)?;
                d_re.push(pa.cos() - pb.cos());
                d_im.push(pa.sin() - pb.sin());
            }
            let mean_d = (stats::mean(&d_re), stats::mean(&d_im));
            let se = (stats::std_error(&d_re).powi(2) + stats::std_error(&d_im).powi(2)).sqrt();
            let dist = (mean_d.0.powi(2) + mean_d.1.powi(2)).sqrt();
            let ok = dist <= k_sigma * se.max(1e-12);
            pass &= ok;
            rows.push(json!({
                "form": fi,
                "distance": dist,
                "combined_se": se,
                "pass": ok,
            }));
        }
        Ok(ExperimentResult {
            experiment: Experiment::Signkernel,
            pass,
            metrics: json!({ "k_sigma": k_sigma, "forms": rows }),
        })
    }

    fn charmatch(&mut self, cache: Option<&Cache>) -> Result<ExperimentResult> {
        self.ensure_main(cache)?;
        let grid = self.grid.clone().unwrap();
        let ctx = self.kernel_ctx(&grid)?;
        let panel = if self.cfg.run.process == ProcessClass::Levy {
            levy_panel()
        } else {
            standard_panel()
        };
        let mut times: Vec<f64> = panel.iter().flat_map(|f| f.times()).filter(|&t| t > 0.0).collect();
        if self.stable.alpha() == 2.0 {
            for (s, t) in covariance_pairs() {
                times.push(s);
                times.push(t);
            }
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        let times_idx: Vec<usize> =
            times.iter().map(|&t| self.time_grid.index_of(t)).collect::<Result<_>>()?;

        let samples = simulate_process(
            &ctx,
            &times_idx,
            self.stable,
            experiment_seed(self.cfg.run.seed, SALT_CHARMATCH),
            self.cfg.monte_carlo.n_replicates,
            self.cfg.budget_bytes(),
        )?;

        let k_sigma = self.cfg.tolerances.char_k_sigma;
        let mut rows = Vec::new();
        let mut pass = true;
        for (fi, form) in panel.iter().enumerate() {
            let oracle = exponent_integral(&ctx, form, self.stable)?;
            let emp = empirical_char(&samples, form)?;
            let (dist, se) = emp.distance_to(&oracle);
            let ok = dist <= k_sigma * se.max(1e-12);
            pass &= ok;
            rows.push(json!({
                "form": fi,
                "exponent": oracle.exponent,
                "oracle_value": oracle.value,
                "oracle_se": oracle.stderr,
                "empirical_re": emp.re,
                "empirical_im": emp.im,
                "distance": dist,
                "combined_se": se,
                "pass": ok,
            }));
        }

        // alpha = 2 reduction: Cov(Y(s), Y(t)) = 2 E' lambda([0,A_s] cap [0,A_t])
        let mut cov_rows = Vec::new();
        if self.stable.alpha() == 2.0 && self.cfg.run.process == ProcessClass::Ifsm {
            let ens = self.ensemble.as_ref().unwrap();
            for (s, t) in covariance_pairs() {
                let ks = ens.grid.index_of(s)?;
                let kt = ens.grid.index_of(t)?;
                let x = grid.half_width;
                let oracle: f64 = (0..ens.n_paths)
                    .map(|i| {
                        let a = ens.value(i, ks).clamp(-x, x);
                        let b = ens.value(i, kt).clamp(-x, x);
                        crate::diagnostics::interval_overlap(0.0, a, 0.0, b)
                    })
                    .sum::<f64>()
                    / ens.n_paths as f64
                    * 2.0;
                let prods: Vec<f64> = samples
                    .iter()
                    .map(|sam| {
                        Ok(sam.value_at(s).ok_or(Error::TimeNotOnGrid(s))?
                            * sam.value_at(t).ok_or(Error::TimeNotOnGrid(t))?)
                    })
                    .collect::<Result<_>>()?;
                let emp = stats::mean(&prods);
                let rel = (emp - oracle).abs() / oracle;
                let ok = rel <= self.cfg.tolerances.cov_rel_tol;
                pass &= ok;
                cov_rows.push(json!({
                    "s": s, "t": t,
                    "empirical": emp,
                    "oracle": oracle,
                    "rel_err": rel,
                    "pass": ok,
                }));
            }
        }

        Ok(ExperimentResult {
            experiment: Experiment::Charmatch,
            pass,
            metrics: json!({
                "k_sigma": k_sigma,
                "forms": rows,
                "covariance": cov_rows,
            }),
        })
    }

    fn mixing(&mut self) -> Result<ExperimentResult> {
        let spec = *self.sub_spec()?;
        let params = &self.cfg.experiments.mixing;
        let grid = TimeGrid::new((params.n_max + 1) as f64, params.n_max + 1)?;
        let ensemble = sample_ensemble(
            &spec,
            &grid,
            params.n_paths,
            experiment_seed(self.cfg.run.seed, SALT_MIXING),
        )?;
        let mut curve = mixing_curve(&ensemble, params.n_max)?;
        let tails = TailModel::fit(&ensemble)?;
        attach_bound(&mut curve, &tails, spec.self_similarity_exponent());

        let ratio = self.cfg.tolerances.mixing_ratio;
        let decays = *curve.mu.last().unwrap() <= ratio * curve.mu[0];
        let bounded = curve.mu.iter().zip(&curve.bound).all(|(m, b)| m <= b);
        let pass = decays && bounded;
        self.mixing_csv = Some(mixing_csv(&curve));
        Ok(ExperimentResult {
            experiment: Experiment::Mixing,
            pass,
            metrics: json!({
                "n_max": params.n_max,
                "n_paths": params.n_paths,
                "mu_1": curve.mu[0],
                "mu_last": *curve.mu.last().unwrap(),
                "decay_ratio": *curve.mu.last().unwrap() / curve.mu[0],
                "required_ratio": ratio,
                "bound_holds": bounded,
                "tail_constants": {"c1": tails.c1, "c2": tails.c2, "beta": tails.beta},
            }),
        })
    }

    fn conservativity(&mut self) -> Result<ExperimentResult> {
        let spec = *self.sub_spec()?;
        let params = &self.cfg.experiments.conservativity;
        let grid = TimeGrid::new(params.n_max as f64, params.n_max)?;
        let ensemble = sample_ensemble(
            &spec,
            &grid,
            params.n_paths,
            experiment_seed(self.cfg.run.seed, SALT_CONSERVATIVITY),
        )?;
        let cons = conservativity_sum(&ensemble, &params.probes, params.n_max)?;
        let tol = &self.cfg.tolerances;
        let mut pass = true;
        let mut rows = Vec::new();
        for (p, &x) in cons.probes.iter().enumerate() {
            let monotone = cons.s[p].windows(2).all(|w| w[1] >= w[0]);
            let s_final = *cons.s[p].last().unwrap();
            let fit = cons.growth_exponent(p, (params.n_max / 100).max(10))?;
            let ok = monotone
                && s_final >= tol.cons_min_s
                && fit.slope > tol.growth_lo
                && fit.slope < tol.growth_hi;
            pass &= ok;
            rows.push(json!({
                "x": x,
                "monotone": monotone,
                "s_final": s_final,
                "growth_exponent": fit.slope,
                "growth_r2": fit.r_squared,
                "pass": ok,
            }));
        }
        self.conservativity_csv = Some(conservativity_csv(&cons));
        Ok(ExperimentResult {
            experiment: Experiment::Conservativity,
            pass,
            metrics: json!({
                "n_max": params.n_max,
                "n_paths": params.n_paths,
                "probes": rows,
            }),
        })
    }

    fn extreme(&mut self) -> Result<ExperimentResult> {
        let params = self.cfg.experiments.extreme.clone();
        let n_max = params.n_list.iter().copied().max().unwrap_or(1000);
        let seed = experiment_seed(self.cfg.run.seed, SALT_EXTREME);
        let alpha = self.stable.alpha();

        let spec = *self.sub_spec()?;
        let grid = TimeGrid::new(n_max as f64, n_max)?;
        let ensemble = sample_ensemble(&spec, &grid, params.n_paths, seed)?;
        // grid sized from this ensemble's own maxima
        let maxima: Vec<f64> = (0..ensemble.n_paths)
            .map(|i| ensemble.path(i).iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect();
        let x = stats::quantile(&maxima, 0.999);
        let sgrid = SpatialGrid::new(x, x / 500.0)?;
        let ctx = KernelContext::new(Kernel::Indicator, Some(&ensemble), None, &sgrid)?;
        let noise = simulate_noise(
            &ctx,
            n_max,
            self.stable,
            seed,
            params.n_replicates,
            self.cfg.budget_bytes(),
        )?;
        let stat = extreme_value_stat(&noise, &params.n_list, alpha)?;

        // i.i.d. control: the same statistic on independent SaS noise does
        // not decay (max-stability)
        let control: Vec<NoiseSample> = (0..params.n_replicates as u64)
            .map(|rep| {
                let z = sample_sas_vec(
                    self.stable,
                    1.0,
                    seed.substream(StreamDomain::Control, rep),
                    n_max,
                )?;
                Ok(NoiseSample { z, y: vec![], replicate_id: rep })
            })
            .collect::<Result<_>>()?;
        let ctrl = extreme_value_stat(&control, &params.n_list, alpha)?;

        let ratio_target = self.cfg.tolerances.extreme_ratio;
        let first = stat.median[0];
        let last = *stat.median.last().unwrap();
        let ctrl_ratio = *ctrl.median.last().unwrap() / ctrl.median[0];
        let decays = last < ratio_target * first;
        let control_holds = ctrl_ratio > ratio_target;
        let pass = decays && control_holds;
        Ok(ExperimentResult {
            experiment: Experiment::Extreme,
            pass,
            metrics: json!({
                "n_list": stat.n,
                "medians": stat.median,
                "decay_ratio": last / first,
                "required_ratio": ratio_target,
                "control_medians": ctrl.median,
                "control_ratio": ctrl_ratio,
            }),
        })
    }
}

/// Simulate the configured process at the selfsim times and render the
/// samples CSV (`replicate_id, t, value, kernel, alpha, h_prime`).
pub fn simulate_csv(cfg: &RunConfig) -> Result<String> {
    let (orch, samples) = simulate_for_cli(cfg)?;
    Ok(crate::report::samples_csv(&samples, orch.stable.alpha(), orch.h_prime()))
}

fn simulate_for_cli(cfg: &RunConfig) -> Result<(Orchestrator<'_>, Vec<ProcessSample>)> {
    let mut orch = build_orchestrator(cfg)?;
    orch.ensure_main(None)?;
    let grid = orch.grid.clone().unwrap();
    let ctx = orch.kernel_ctx(&grid)?;
    let times_idx: Vec<usize> = cfg
        .experiments
        .selfsim
        .times
        .iter()
        .map(|&t| orch.time_grid.index_of(t))
        .collect::<Result<_>>()?;
    let samples = simulate_process(
        &ctx,
        &times_idx,
        orch.stable,
        experiment_seed(cfg.run.seed, SALT_SELFSIM),
        cfg.monte_carlo.n_replicates,
        cfg.budget_bytes(),
    )?;
    drop(ctx);
    Ok((orch, samples))
}

/// Evaluate the exponent integral of one form and render the oracle JSON.
pub fn oracle_json(cfg: &RunConfig, form: &LinearForm) -> Result<String> {
    let mut orch = build_orchestrator(cfg)?;
    // the oracle needs the ensemble/grid but no replicates
    orch.ensure_main(None)?;
    let grid = orch.grid.clone().unwrap();
    let ctx = orch.kernel_ctx(&grid)?;
    let est = exponent_integral(&ctx, form, orch.stable)?;
    let json = serde_json::to_string_pretty(&json!({
        "form": form,
        "exponent": est.exponent,
        "stderr": est.stderr,
        "value": est.value,
        "truncated_fraction": est.truncated_fraction,
    }))
    .expect("oracle serialization");
    Ok(json + "\n")
}

/// Render the main ensemble as CSV (`path_id, t, A`).
pub fn export_paths_csv(cfg: &RunConfig) -> Result<String> {
    let mut orch = build_orchestrator(cfg)?;
    orch.ensure_main(None)?;
    let ensemble = orch
        .ensemble
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("the levy process has no ensemble to export".into()))?;
    Ok(crate::report::paths_csv(ensemble))
}

fn build_orchestrator(cfg: &RunConfig) -> Result<Orchestrator<'_>> {
    let stable = StableSpec::new(cfg.run.alpha)?;
    let sub_spec = match cfg.run.process {
        ProcessClass::Levy => None,
        _ => Some(match cfg.subordinator.kind {
            crate::subordinator::SubordinatorKind::Fbm => {
                SubordinatorSpec::fbm(cfg.subordinator.hurst, cfg.subordinator.sigma)?
            }
            crate::subordinator::SubordinatorKind::StableLevy => {
                SubordinatorSpec::stable_levy(cfg.subordinator.beta, cfg.subordinator.sigma)?
            }
        }),
    };
    Ok(Orchestrator {
        cfg,
        stable,
        sub_spec,
        time_grid: TimeGrid::new(cfg.time.t_max, cfg.time.n_steps)?,
        ensemble: None,
        grid: None,
        local_time: None,
        notices: cfg.notices.clone(),
        truncation: Vec::new(),
        exponent_rows: Vec::new(),
        mixing_csv: None,
        conservativity_csv: None,
        cache_hits: 0,
    })
}

/// Load report.json from an output directory, re-derive the verdicts that
/// are recoverable from the CSVs, and compare. Returns the rendered table,
/// whether the CSVs agree with the JSON, and whether everything passed.
pub fn rederive_report(dir: &Path) -> Result<(String, bool, bool)> {
    use std::fmt::Write as _;
    let text = std::fs::read_to_string(dir.join("report.json"))?;
    let report: RunReport =
        serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let tol = &report.config.tolerances;
    let mut table = String::from("experiment        verdict   csv-check\n");
    let mut consistent = true;
    for result in &report.results {
        let csv_check = match result.experiment {
            Experiment::Mixing => {
                let csv = std::fs::read_to_string(dir.join("mixing.csv"))?;
                let rederived = crate::report::rederive_mixing(&csv, tol)?;
                Some(rederived == result.pass)
            }
            Experiment::Selfsim => {
                let csv = std::fs::read_to_string(dir.join("exponents.csv"))?;
                let rederived = crate::report::rederive_exponents(&csv, tol)?;
                Some(rederived == result.pass)
            }
            Experiment::Conservativity => {
                let csv = std::fs::read_to_string(dir.join("conservativity.csv"))?;
                let rederived = crate::report::rederive_conservativity(&csv, tol)?;
                Some(rederived == result.pass)
            }
            _ => None,
        };
        if csv_check == Some(false) {
            consistent = false;
        }
        let _ = writeln!(
            table,
            "{:<18}{:<10}{}",
            result.experiment.name(),
            if result.pass { "PASS" } else { "FAIL" },
            match csv_check {
                Some(true) => "consistent",
                Some(false) => "MISMATCH",
                None => "-",
            }
        );
    }
    Ok((table, consistent, report.all_pass))
}
