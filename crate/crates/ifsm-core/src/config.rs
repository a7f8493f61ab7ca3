//! Run configuration: a flat-sectioned TOML grammar with typed scalars and
//! lists. Validation collects every violation instead of stopping at the
//! first, names the constraint each value breaks, and (in strict mode)
//! rejects unknown keys.

use crate::error::Error;
use crate::subordinator::SubordinatorKind;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessClass {
    Ifsm,
    Ltfsm,
    Levy,
}

impl ProcessClass {
    pub fn name(&self) -> &'static str {
        match self {
            ProcessClass::Ifsm => "ifsm",
            ProcessClass::Ltfsm => "ltfsm",
            ProcessClass::Levy => "levy",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Selfsim,
    Stationarity,
    Signkernel,
    Charmatch,
    Mixing,
    Conservativity,
    Extreme,
    Feasibility,
}

pub const ALL_EXPERIMENTS: [Experiment; 8] = [
    Experiment::Feasibility,
    Experiment::Selfsim,
    Experiment::Stationarity,
    Experiment::Signkernel,
    Experiment::Charmatch,
    Experiment::Mixing,
    Experiment::Conservativity,
    Experiment::Extreme,
];

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Selfsim => "selfsim",
            Experiment::Stationarity => "stationarity",
            Experiment::Signkernel => "signkernel",
            Experiment::Charmatch => "charmatch",
            Experiment::Mixing => "mixing",
            Experiment::Conservativity => "conservativity",
            Experiment::Extreme => "extreme",
            Experiment::Feasibility => "feasibility",
        }
    }

    fn parse(s: &str) -> Option<Experiment> {
        ALL_EXPERIMENTS.iter().copied().find(|e| e.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSection {
    pub process: ProcessClass,
    pub alpha: f64,
    pub seed: u64,
    pub experiments: Vec<Experiment>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorSection {
    pub kind: SubordinatorKind,
    pub hurst: f64,
    pub beta: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSection {
    pub t_max: f64,
    pub n_steps: usize,
}

/// `half_width = 0` and `dx = 0` request the auto-fit (pilot 99.9% quantile
/// of `max_t |A_t|`, and `half_width / 500`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceSection {
    pub half_width: f64,
    pub dx: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSection {
    pub n_paths: usize,
    pub n_replicates: usize,
    pub memory_budget_mb: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfsimParams {
    pub times: Vec<f64>,
    pub quantile: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationarityParams {
    pub t: f64,
    pub shifts: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingParams {
    pub n_max: usize,
    pub n_paths: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConservativityParams {
    pub n_max: usize,
    pub n_paths: usize,
    pub probes: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremeParams {
    pub n_list: Vec<usize>,
    pub n_paths: usize,
    pub n_replicates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentParams {
    pub selfsim: SelfsimParams,
    pub stationarity: StationarityParams,
    pub mixing: MixingParams,
    pub conservativity: ConservativityParams,
    pub extreme: ExtremeParams,
}

/// Pass/fail thresholds, defaulting to the acceptance-criteria values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// |H_hat - H| tolerance for exponent fits.
    pub exponent_tol: f64,
    /// Tighter exponent tolerance in the Gaussian (alpha = 2) reduction.
    pub exponent_tol_gauss: f64,
    /// Minimum R^2 of the exponent regression.
    pub r2_min: f64,
    /// Characteristic-function agreement in combined standard errors.
    pub char_k_sigma: f64,
    /// KS test level for stationarity.
    pub ks_level: f64,
    /// mu_{n_max} must fall below `mixing_ratio * mu_1`.
    pub mixing_ratio: f64,
    /// Conservativity sums must exceed this by N = n_max.
    pub cons_min_s: f64,
    /// Admissible conservativity growth-exponent window.
    pub growth_lo: f64,
    pub growth_hi: f64,
    /// Extreme-value medians must decay below this ratio.
    pub extreme_ratio: f64,
    /// Relative tolerance of the alpha = 2 covariance reduction.
    pub cov_rel_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exponent_tol: 0.05,
            exponent_tol_gauss: 0.03,
            r2_min: 0.99,
            char_k_sigma: 3.0,
            ks_level: 0.01,
            mixing_ratio: 0.1,
            cons_min_s: 10.0,
            growth_lo: 0.4,
            growth_hi: 0.6,
            extreme_ratio: 0.5,
            cov_rel_tol: 0.03,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub run: RunSection,
    pub subordinator: SubordinatorSection,
    pub time: TimeSection,
    pub space: SpaceSection,
    pub monte_carlo: MonteCarloSection,
    pub experiments: ExperimentParams,
    pub tolerances: Tolerances,
    /// Non-fatal validation notes (degenerate routes, unknown keys outside
    /// strict mode).
    #[serde(skip)]
    pub notices: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            run: RunSection {
                process: ProcessClass::Ifsm,
                alpha: 1.5,
                seed: 42,
                experiments: vec![Experiment::Feasibility],
            },
            subordinator: SubordinatorSection {
                kind: SubordinatorKind::Fbm,
                hurst: 0.5,
                beta: 1.5,
                sigma: 1.0,
            },
            time: TimeSection { t_max: 10.0, n_steps: 1000 },
            space: SpaceSection { half_width: 0.0, dx: 0.0 },
            monte_carlo: MonteCarloSection {
                n_paths: 1000,
                n_replicates: 10_000,
                memory_budget_mb: 1024,
            },
            experiments: ExperimentParams {
                selfsim: SelfsimParams {
                    times: vec![0.1, 0.2, 0.5, 1.0, 2.0, 4.0, 8.0, 10.0],
                    quantile: 0.5,
                },
                stationarity: StationarityParams { t: 1.0, shifts: vec![1.0, 5.0, 10.0] },
                mixing: MixingParams { n_max: 200, n_paths: 100_000 },
                conservativity: ConservativityParams {
                    n_max: 10_000,
                    n_paths: 1000,
                    probes: vec![0.0, 0.5, -0.5],
                },
                extreme: ExtremeParams {
                    n_list: vec![10, 100, 1000],
                    n_paths: 200,
                    n_replicates: 500,
                },
            },
            tolerances: Tolerances::default(),
            notices: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialization cannot fail")
    }

    pub fn budget_bytes(&self) -> u64 {
        self.monte_carlo.memory_budget_mb << 20
    }
}

/// All violations found in a config, with the constraint each one breaks.
#[derive(Debug)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} violations):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::InvalidArgument(e.to_string())
    }
}

struct Checker<'a> {
    table: &'a toml::Table,
    strict: bool,
    violations: Vec<String>,
    notices: Vec<String>,
}

impl<'a> Checker<'a> {
    fn section(&mut self, name: &str) -> Option<&'a toml::Table> {
        match self.table.get(name) {
            None => None,
            Some(toml::Value::Table(t)) => Some(t),
            Some(_) => {
                self.violations.push(format!("section '{name}' must be a table"));
                None
            }
        }
    }

    fn unknown_keys(&mut self, section: &str, table: &toml::Table, known: &[&str]) {
        for key in table.keys() {
            if !known.contains(&key.as_str()) {
                let msg = format!("unknown key '{section}.{key}'");
                if self.strict {
                    self.violations.push(msg);
                } else {
                    self.notices.push(msg);
                }
            }
        }
    }

    fn f64(&mut self, section: &str, table: &toml::Table, key: &str, default: f64) -> f64 {
        match table.get(key) {
            None => default,
            Some(v) => match v.as_float().or_else(|| v.as_integer().map(|i| i as f64)) {
                Some(x) => x,
                None => {
                    self.violations.push(format!("'{section}.{key}' must be a number"));
                    default
                }
            },
        }
    }

    fn usize(&mut self, section: &str, table: &toml::Table, key: &str, default: usize) -> usize {
        match table.get(key) {
            None => default,
            Some(v) => match v.as_integer() {
                Some(x) if x >= 0 => x as usize,
                _ => {
                    self.violations
                        .push(format!("'{section}.{key}' must be a nonnegative integer"));
                    default
                }
            },
        }
    }

    fn u64(&mut self, section: &str, table: &toml::Table, key: &str, default: u64) -> u64 {
        match table.get(key) {
            None => default,
            Some(v) => match v.as_integer() {
                Some(x) if x >= 0 => x as u64,
                _ => {
                    self.violations
                        .push(format!("'{section}.{key}' must be a nonnegative integer"));
                    default
                }
            },
        }
    }

    fn str_enum<T: Copy>(
        &mut self,
        section: &str,
        table: &toml::Table,
        key: &str,
        options: &[(&str, T)],
        default: T,
    ) -> T {
        match table.get(key) {
            None => default,
            Some(v) => match v.as_str() {
                Some(s) => match options.iter().find(|(name, _)| *name == s) {
                    Some((_, val)) => *val,
                    None => {
                        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                        self.violations.push(format!(
                            "'{section}.{key}' must be one of {names:?}, got '{s}'"
                        ));
                        default
                    }
                },
                None => {
                    self.violations.push(format!("'{section}.{key}' must be a string"));
                    default
                }
            },
        }
    }

    fn f64_list(
        &mut self,
        section: &str,
        table: &toml::Table,
        key: &str,
        default: &[f64],
    ) -> Vec<f64> {
        match table.get(key) {
            None => default.to_vec(),
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for v in items {
                    match v.as_float().or_else(|| v.as_integer().map(|i| i as f64)) {
                        Some(x) => out.push(x),
                        None => {
                            self.violations
                                .push(format!("'{section}.{key}' must be a list of numbers"));
                            return default.to_vec();
                        }
                    }
                }
                out
            }
            Some(_) => {
                self.violations.push(format!("'{section}.{key}' must be a list of numbers"));
                default.to_vec()
            }
        }
    }

    fn usize_list(
        &mut self,
        section: &str,
        table: &toml::Table,
        key: &str,
        default: &[usize],
    ) -> Vec<usize> {
        match table.get(key) {
            None => default.to_vec(),
            Some(toml::Value::Array(items)) => {
                let mut out = Vec::with_capacity(items.len());
                for v in items {
                    match v.as_integer() {
                        Some(x) if x > 0 => out.push(x as usize),
                        _ => {
                            self.violations.push(format!(
                                "'{section}.{key}' must be a list of positive integers"
                            ));
                            return default.to_vec();
                        }
                    }
                }
                out
            }
            Some(_) => {
                self.violations
                    .push(format!("'{section}.{key}' must be a list of positive integers"));
                default.to_vec()
            }
        }
    }
}

/// Parse and validate a config. Returns the validated config or the full
/// list of violations; non-fatal notes land in `config.notices`.
pub fn parse_config(text: &str, strict: bool) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = match text.parse() {
        Ok(t) => t,
        Err(e) => return Err(ConfigError { violations: vec![format!("TOML syntax: {e}")] }),
    };
    let mut cfg = RunConfig::default();
    let mut ck = Checker { table: &table, strict, violations: Vec::new(), notices: Vec::new() };

    ck.unknown_keys(
        "",
        ck.table,
        &["run", "subordinator", "time", "space", "monte_carlo", "experiments", "tolerances"],
    );

    if let Some(run) = ck.section("run") {
        ck.unknown_keys("run", run, &["process", "alpha", "seed", "experiments"]);
        cfg.run.process = ck.str_enum(
            "run",
            run,
            "process",
            &[
                ("ifsm", ProcessClass::Ifsm),
                ("ltfsm", ProcessClass::Ltfsm),
                ("levy", ProcessClass::Levy),
            ],
            cfg.run.process,
        );
        cfg.run.alpha = ck.f64("run", run, "alpha", cfg.run.alpha);
        cfg.run.seed = ck.u64("run", run, "seed", cfg.run.seed);
        if let Some(v) = run.get("experiments") {
            match v.as_array() {
                Some(items) => {
                    let mut list = Vec::new();
                    for item in items {
                        match item.as_str().and_then(Experiment::parse) {
                            Some(e) => list.push(e),
                            None => ck.violations.push(format!(
                                "'run.experiments' entry {item} is not a known experiment"
                            )),
                        }
                    }
                    if !list.is_empty() {
                        cfg.run.experiments = list;
                    }
                }
                None => ck.violations.push("'run.experiments' must be a list".into()),
            }
        }
    }

    if let Some(sub) = ck.section("subordinator") {
        ck.unknown_keys("subordinator", sub, &["kind", "hurst", "beta", "sigma"]);
        cfg.subordinator.kind = ck.str_enum(
            "subordinator",
            sub,
            "kind",
            &[("fbm", SubordinatorKind::Fbm), ("stable-levy", SubordinatorKind::StableLevy)],
            cfg.subordinator.kind,
        );
        cfg.subordinator.hurst = ck.f64("subordinator", sub, "hurst", cfg.subordinator.hurst);
        cfg.subordinator.beta = ck.f64("subordinator", sub, "beta", cfg.subordinator.beta);
        cfg.subordinator.sigma = ck.f64("subordinator", sub, "sigma", cfg.subordinator.sigma);
    }

    if let Some(time) = ck.section("time") {
        ck.unknown_keys("time", time, &["t_max", "n_steps"]);
        cfg.time.t_max = ck.f64("time", time, "t_max", cfg.time.t_max);
        cfg.time.n_steps = ck.usize("time", time, "n_steps", cfg.time.n_steps);
    }

    if let Some(space) = ck.section("space") {
        ck.unknown_keys("space", space, &["half_width", "dx"]);
        cfg.space.half_width = ck.f64("space", space, "half_width", cfg.space.half_width);
        cfg.space.dx = ck.f64("space", space, "dx", cfg.space.dx);
    }

    if let Some(mc) = ck.section("monte_carlo") {
        ck.unknown_keys("monte_carlo", mc, &["n_paths", "n_replicates", "memory_budget_mb"]);
        cfg.monte_carlo.n_paths = ck.usize("monte_carlo", mc, "n_paths", cfg.monte_carlo.n_paths);
        cfg.monte_carlo.n_replicates =
            ck.usize("monte_carlo", mc, "n_replicates", cfg.monte_carlo.n_replicates);
        cfg.monte_carlo.memory_budget_mb =
            ck.u64("monte_carlo", mc, "memory_budget_mb", cfg.monte_carlo.memory_budget_mb);
    }

    if let Some(exps) = ck.section("experiments") {
        ck.unknown_keys(
            "experiments",
            exps,
            &["selfsim", "stationarity", "mixing", "conservativity", "extreme"],
        );
        if let Some(toml::Value::Table(t)) = exps.get("selfsim") {
            ck.unknown_keys("experiments.selfsim", t, &["times", "quantile"]);
            cfg.experiments.selfsim.times =
                ck.f64_list("experiments.selfsim", t, "times", &cfg.experiments.selfsim.times);
            cfg.experiments.selfsim.quantile =
                ck.f64("experiments.selfsim", t, "quantile", cfg.experiments.selfsim.quantile);
        }
        if let Some(toml::Value::Table(t)) = exps.get("stationarity") {
            ck.unknown_keys("experiments.stationarity", t, &["t", "shifts"]);
            cfg.experiments.stationarity.t =
                ck.f64("experiments.stationarity", t, "t", cfg.experiments.stationarity.t);
            cfg.experiments.stationarity.shifts = ck.f64_list(
                "experiments.stationarity",
                t,
                "shifts",
                &cfg.experiments.stationarity.shifts,
            );
        }
        if let Some(toml::Value::Table(t)) = exps.get("mixing") {
            ck.unknown_keys("experiments.mixing", t, &["n_max", "n_paths"]);
            cfg.experiments.mixing.n_max =
                ck.usize("experiments.mixing", t, "n_max", cfg.experiments.mixing.n_max);
            cfg.experiments.mixing.n_paths =
                ck.usize("experiments.mixing", t, "n_paths", cfg.experiments.mixing.n_paths);
        }
        if let Some(toml::Value::Table(t)) = exps.get("conservativity") {
            ck.unknown_keys("experiments.conservativity", t, &["n_max", "n_paths", "probes"]);
            cfg.experiments.conservativity.n_max = ck.usize(
                "experiments.conservativity",
                t,
                "n_max",
                cfg.experiments.conservativity.n_max,
            );
            cfg.experiments.conservativity.n_paths = ck.usize(
                "experiments.conservativity",
                t,
                "n_paths",
                cfg.experiments.conservativity.n_paths,
            );
            cfg.experiments.conservativity.probes = ck.f64_list(
                "experiments.conservativity",
                t,
                "probes",
                &cfg.experiments.conservativity.probes,
            );
        }
        if let Some(toml::Value::Table(t)) = exps.get("extreme") {
            ck.unknown_keys("experiments.extreme", t, &["n_list", "n_paths", "n_replicates"]);
            cfg.experiments.extreme.n_list =
                ck.usize_list("experiments.extreme", t, "n_list", &cfg.experiments.extreme.n_list);
            cfg.experiments.extreme.n_paths =
                ck.usize("experiments.extreme", t, "n_paths", cfg.experiments.extreme.n_paths);
            cfg.experiments.extreme.n_replicates = ck.usize(
                "experiments.extreme",
                t,
                "n_replicates",
                cfg.experiments.extreme.n_replicates,
            );
        }
    }

    if let Some(tol) = ck.section("tolerances") {
        let keys = [
            "exponent_tol",
            "exponent_tol_gauss",
            "r2_min",
            "char_k_sigma",
            "ks_level",
            "mixing_ratio",
            "cons_min_s",
            "growth_lo",
            "growth_hi",
            "extreme_ratio",
            "cov_rel_tol",
        ];
        ck.unknown_keys("tolerances", tol, &keys);
        let t = &mut cfg.tolerances;
        t.exponent_tol = ck.f64("tolerances", tol, "exponent_tol", t.exponent_tol);
        t.exponent_tol_gauss = ck.f64("tolerances", tol, "exponent_tol_gauss", t.exponent_tol_gauss);
        t.r2_min = ck.f64("tolerances", tol, "r2_min", t.r2_min);
        t.char_k_sigma = ck.f64("tolerances", tol, "char_k_sigma", t.char_k_sigma);
        t.ks_level = ck.f64("tolerances", tol, "ks_level", t.ks_level);
        t.mixing_ratio = ck.f64("tolerances", tol, "mixing_ratio", t.mixing_ratio);
        t.cons_min_s = ck.f64("tolerances", tol, "cons_min_s", t.cons_min_s);
        t.growth_lo = ck.f64("tolerances", tol, "growth_lo", t.growth_lo);
        t.growth_hi = ck.f64("tolerances", tol, "growth_hi", t.growth_hi);
        t.extreme_ratio = ck.f64("tolerances", tol, "extreme_ratio", t.extreme_ratio);
        t.cov_rel_tol = ck.f64("tolerances", tol, "cov_rel_tol", t.cov_rel_tol);
    }

    // range validation, citing the constraint each value breaks
    if !(cfg.run.alpha > 0.0 && cfg.run.alpha <= 2.0) {
        ck.violations
            .push(format!("alpha must lie in (0, 2], got {}", cfg.run.alpha));
    }
    match cfg.subordinator.kind {
        SubordinatorKind::Fbm => {
            if cfg.subordinator.hurst == 1.0 && cfg.run.process != ProcessClass::Levy {
                ck.notices.push(
                    "hurst = 1 is the degenerate case: the kernel is the deterministic \
                     family 1_{[0,t]}, routing to the levy process"
                        .into(),
                );
                cfg.run.process = ProcessClass::Levy;
            } else if !(cfg.subordinator.hurst > 0.0 && cfg.subordinator.hurst < 1.0) {
                ck.violations.push(format!(
                    "hurst must lie in (0, 1), got {}",
                    cfg.subordinator.hurst
                ));
            }
        }
        SubordinatorKind::StableLevy => {
            if !(cfg.subordinator.beta > 1.0 && cfg.subordinator.beta <= 2.0) {
                ck.violations.push(format!(
                    "beta must lie in (1, 2], got {}",
                    cfg.subordinator.beta
                ));
            }
        }
    }
    if !(cfg.subordinator.sigma > 0.0) {
        ck.violations
            .push(format!("sigma must be positive, got {}", cfg.subordinator.sigma));
    }
    if !(cfg.time.t_max > 0.0) {
        ck.violations.push(format!("t_max must be positive, got {}", cfg.time.t_max));
    }
    if cfg.time.n_steps == 0 {
        ck.violations.push("n_steps must be at least 1".into());
    }
    if cfg.space.half_width < 0.0 {
        ck.violations
            .push(format!("half_width must be nonnegative (0 = auto), got {}", cfg.space.half_width));
    }
    if cfg.space.dx < 0.0 {
        ck.violations.push(format!("dx must be nonnegative (0 = auto), got {}", cfg.space.dx));
    }
    if cfg.monte_carlo.n_paths == 0 {
        ck.violations.push("n_paths must be at least 1".into());
    }
    if cfg.monte_carlo.n_replicates == 0 {
        ck.violations.push("n_replicates must be at least 1".into());
    }
    if !(cfg.experiments.selfsim.quantile > 0.0 && cfg.experiments.selfsim.quantile < 1.0) {
        ck.violations.push(format!(
            "selfsim quantile must lie in (0, 1), got {}",
            cfg.experiments.selfsim.quantile
        ));
    }
    if cfg.run.process == ProcessClass::Ltfsm && cfg.run.alpha <= 1.0 {
        ck.notices.push(
            "ltfsm with alpha <= 1 has exponent H >= 1; the feasibility report flags the range"
                .into(),
        );
    }

    if ck.violations.is_empty() {
        cfg.notices = ck.notices;
        Ok(cfg)
    } else {
        Err(ConfigError { violations: ck.violations })
    }
}
