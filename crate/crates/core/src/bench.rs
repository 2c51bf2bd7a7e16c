//! Synthetic unmixing benchmarks: matrix ensembles, signal and noise models, trials and sweeps.
//!
//! Every trial draws from its own ChaCha8 stream seeded by `seed + trial·φ64`, so results do not
//! depend on the worker count or on which sweep value is being run. The same trial index sees the
//! same random draws for every sweep value.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::Serialize;

use crate::decoders::{iht_warm, lasso_supports, omp, plasso_supports};
use crate::error::{Error, Result};
use crate::lasso_path::{path, Variant};
use crate::selection::{largest_supports, oracle_closest, rank_supports, symmetric_difference};
use crate::tiling::{build, TilingGraph};
use crate::transform::{BetaTransform, GroundTruth, Problem};

/// 2⁶⁴/φ, spacing the per-trial seeds.
const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    Gaussian,
    Circulant,
    GammaGaussian,
}

impl FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "gaussian" => Ok(Ensemble::Gaussian),
            "circulant" => Ok(Ensemble::Circulant),
            "gamma_gaussian" | "gamma" => Ok(Ensemble::GammaGaussian),
            _ => Err(Error::Parse(format!("unknown ensemble '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Method {
    Omp,
    L1Iht,
    Lasso,
    PLasso,
    MpAll,
    MpRank,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Omp,
        Method::L1Iht,
        Method::Lasso,
        Method::PLasso,
        Method::MpAll,
        Method::MpRank,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Omp => "OMP",
            Method::L1Iht => "L1IHT",
            Method::Lasso => "LASSO",
            Method::PLasso => "pLASSO",
            Method::MpAll => "MPLASSO(All)",
            Method::MpRank => "MPLASSO(Rank)",
        }
    }

    fn uses_tiling(self) -> bool {
        matches!(self, Method::MpAll | Method::MpRank)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts the display labels and the short names `omp`, `iht`, `lasso`, `plasso`, `mp-all`, `mp-rank`.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .to_ascii_lowercase()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        match key.as_str() {
            "omp" => Ok(Method::Omp),
            "iht" | "l1iht" => Ok(Method::L1Iht),
            "lasso" => Ok(Method::Lasso),
            "plasso" => Ok(Method::PLasso),
            "mpall" | "mplassoall" => Ok(Method::MpAll),
            "mprank" | "mplassorank" => Ok(Method::MpRank),
            _ => Err(Error::Parse(format!("unknown method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub ensemble: Ensemble,
    pub m: usize,
    pub n: usize,
    pub s: usize,
    pub c_min: f64,
    pub c_max: f64,
    pub v_amplitude: f64,
    pub sigma: f64,
    pub trials: usize,
    pub seed: u64,
    pub beta_range: (f64, f64),
    pub methods: Vec<Method>,
    pub fixed_beta: Option<f64>,
    /// 0 uses rayon's default.
    #[serde(skip)]
    pub workers: usize,
    /// Wall times make outputs non-reproducible, so they are off by default.
    pub include_timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ensemble: Ensemble::Gaussian,
            m: 60,
            n: 250,
            s: 6,
            c_min: 1.5,
            c_max: 5.0,
            v_amplitude: 0.2,
            sigma: 0.02,
            trials: 20,
            seed: 0,
            beta_range: (1e-6, 100.0),
            methods: Method::ALL.to_vec(),
            fixed_beta: None,
            workers: 0,
            include_timings: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Precondition(msg));
        if self.m == 0 || self.n == 0 || self.trials == 0 {
            return fail("m, n and trials must be positive".into());
        }
        if self.s > self.m || self.m > self.n {
            return fail(format!(
                "need s <= m <= n, got s={} m={} n={}",
                self.s, self.m, self.n
            ));
        }
        if !(self.c_min > 0.0 && self.c_min <= self.c_max && self.c_max.is_finite()) {
            return fail(format!(
                "need 0 < c_min <= c_max, got {} and {}",
                self.c_min, self.c_max
            ));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return fail(format!("sigma must be non-negative, got {}", self.sigma));
        }
        if !(self.v_amplitude >= 0.0 && self.v_amplitude.is_finite()) {
            return fail(format!(
                "v_amplitude must be non-negative, got {}",
                self.v_amplitude
            ));
        }
        let (lo, hi) = self.beta_range;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return fail(format!("invalid beta range ({lo}, {hi})"));
        }
        if let Some(b) = self.fixed_beta {
            if !(b > 0.0 && b.is_finite()) {
                return fail(format!("fixed beta must be positive, got {b}"));
            }
        }
        Ok(())
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        self.seed
            .wrapping_add((trial as u64).wrapping_mul(SEED_STRIDE))
    }
}

pub fn gen_matrix(config: &ExperimentConfig, rng: &mut impl Rng) -> DMatrix<f64> {
    let (m, n) = (config.m, config.n);
    let scale = 1.0 / (m as f64).sqrt();
    match config.ensemble {
        Ensemble::Gaussian => {
            DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal) * scale)
        }
        Ensemble::Circulant => {
            let b: Vec<f64> = (0..n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let cols = sample(rng, n, m).into_vec();
            // Row r is column cols[r] of the circulant b_{(j-i) mod n}.
            DMatrix::from_fn(m, n, |r, i| b[(cols[r] + n - i) % n] * scale)
        }
        Ensemble::GammaGaussian => {
            let gamma = Gamma::new(1.0, 1.0).expect("valid gamma parameters");
            let g: Vec<f64> = (0..m).map(|_| gamma.sample(rng)).collect();
            let z = DMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            DMatrix::from_fn(m, n, |i, j| z[(i, j)] / g[i])
        }
    }
}

/// `(u†, v†, δ, y)` with `y = A(u† + v†) + δ` and `‖δ‖₂ = σ‖A(u† + v†)‖₂`.
pub fn gen_signal(
    config: &ExperimentConfig,
    a: &DMatrix<f64>,
    rng: &mut impl Rng,
) -> (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
    let (m, n, s) = (a.nrows(), a.ncols(), config.s);
    let mut u = DVector::zeros(n);
    let positions = sample(rng, n, s).into_vec();
    let magnitude = Uniform::new_inclusive(config.c_min, config.c_max).expect("c_min <= c_max");
    let pinned = if s > 0 { rng.random_range(0..s) } else { 0 };
    for (k, &i) in positions.iter().enumerate() {
        let mag = if k == pinned {
            config.c_min
        } else {
            magnitude.sample(rng)
        };
        u[i] = if rng.random::<bool>() { mag } else { -mag };
    }
    let amp = config.v_amplitude;
    let v = if amp > 0.0 {
        let dist = Uniform::new_inclusive(-amp, amp).expect("positive amplitude");
        DVector::from_fn(n, |_, _| dist.sample(rng))
    } else {
        DVector::zeros(n)
    };
    let clean = a * (&u + &v);
    let mut delta = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let dn = delta.norm();
    if config.sigma == 0.0 || dn == 0.0 {
        delta.fill(0.0);
    } else {
        delta *= config.sigma * clean.norm() / dn;
    }
    let y = &clean + &delta;
    (u, v, delta, y)
}

/// Draws `(A, u†, v†, δ, y)` for one trial.
pub fn gen_problem(config: &ExperimentConfig, rng: &mut impl Rng) -> Result<Problem> {
    let a = gen_matrix(config, rng);
    let (u, v, delta, y) = gen_signal(config, &a, rng);
    Problem::new(a, y)?.with_truth(GroundTruth { u, v, delta })
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodOutcome {
    pub method: String,
    pub support: Option<Vec<usize>>,
    /// Number of supports the method offered for selection.
    pub candidates: usize,
    pub success: bool,
    pub symmetric_difference: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedBetaOutcome {
    pub beta: f64,
    pub support: Option<Vec<usize>>,
    pub success: bool,
    pub symmetric_difference: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub truth: Vec<usize>,
    pub tiles: Option<usize>,
    pub outcomes: Vec<MethodOutcome>,
    pub fixed_beta: Vec<FixedBetaOutcome>,
}

impl TrialResult {
    pub fn outcome(&self, method: Method) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.method == method.label())
    }
}

struct Scored {
    support: Vec<usize>,
    candidates: usize,
}

fn closest_up_to(supports: Vec<Vec<usize>>, s: usize, truth: &[usize]) -> Result<Scored> {
    let eligible: Vec<Vec<usize>> = supports.into_iter().filter(|c| c.len() <= s).collect();
    Ok(Scored {
        support: oracle_closest(&eligible, truth)?,
        candidates: eligible.len(),
    })
}

/// LASSO, pLASSO and MPLASSO(All) report the candidate of size ≤ s closest to the truth;
/// MPLASSO(Rank) ranks the size-s tiling supports.
fn run_method(
    method: Method,
    problem: &Problem,
    s: usize,
    truth: &[usize],
    graph: Option<&std::result::Result<TilingGraph, String>>,
) -> Result<Scored> {
    let single = |sup: Vec<Vec<usize>>| Scored {
        support: sup.into_iter().next().unwrap_or_default(),
        candidates: 1,
    };
    match method {
        Method::Omp => Ok(single(omp(problem, s)?.supports)),
        Method::L1Iht => Ok(single(iht_warm(problem, s)?.supports)),
        Method::Lasso => closest_up_to(lasso_supports(problem, s)?.supports, s, truth),
        Method::PLasso => closest_up_to(plasso_supports(problem, s)?.supports, s, truth),
        Method::MpAll | Method::MpRank => {
            let graph = match graph.expect("tiling requested") {
                Ok(g) => g,
                Err(e) => return Err(Error::Precondition(format!("tiling failed: {e}"))),
            };
            if method == Method::MpAll {
                let all = graph.supports_by_size().into_values().flatten().collect();
                return closest_up_to(all, s, truth);
            }
            let (size, cands) = largest_supports(graph, s)?;
            Ok(Scored {
                support: rank_supports(problem, &cands, size)?.chosen,
                candidates: cands.len(),
            })
        }
    }
}

fn fixed_beta_outcome(
    bt: &BetaTransform,
    beta: f64,
    s: usize,
    truth: &[usize],
) -> FixedBetaOutcome {
    let result =
        path(bt, beta, s, Variant::Lasso).and_then(|lp| closest_up_to(lp.supports(), s, truth));
    match result {
        Ok(sc) => {
            let sd = symmetric_difference(&sc.support, truth);
            FixedBetaOutcome {
                beta,
                support: Some(sc.support),
                success: sd == 0,
                symmetric_difference: Some(sd),
                error: None,
            }
        }
        Err(e) => FixedBetaOutcome {
            beta,
            support: None,
            success: false,
            symmetric_difference: None,
            error: Some(e.to_string()),
        },
    }
}

/// One trial with the configured methods plus single-β paths at each of `betas`.
pub fn run_trial_at(config: &ExperimentConfig, trial: usize, betas: &[f64]) -> Result<TrialResult> {
    config.validate()?;
    let seed = config.trial_seed(trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let problem = gen_problem(config, &mut rng)?;
    let truth = problem.truth().expect("generated with truth").support();
    let s = config.s;

    let needs_transform = !betas.is_empty() || config.methods.iter().any(|m| m.uses_tiling());
    let bt = if needs_transform {
        Some(BetaTransform::new(problem.a(), problem.y()))
    } else {
        None
    };
    let tiling_start = Instant::now();
    let graph = if config.methods.iter().any(|m| m.uses_tiling()) {
        let g = match bt.as_ref().expect("transform built") {
            Ok(bt) => build(bt, config.beta_range, s, Variant::Lasso).map_err(|e| e.to_string()),
            Err(e) => Err(e.to_string()),
        };
        if let Err(e) = &g {
            log::warn!("trial {trial}: tiling failed: {e}");
        }
        Some(g)
    } else {
        None
    };
    let tiling_time = tiling_start.elapsed().as_secs_f64();

    let mut outcomes = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let start = Instant::now();
        let result = run_method(method, &problem, s, &truth, graph.as_ref());
        let mut elapsed = start.elapsed().as_secs_f64();
        if method.uses_tiling() {
            elapsed += tiling_time;
        }
        let wall_time = config.include_timings.then_some(elapsed);
        outcomes.push(match result {
            Ok(sc) => {
                let sd = symmetric_difference(&sc.support, &truth);
                MethodOutcome {
                    method: method.label().into(),
                    support: Some(sc.support),
                    candidates: sc.candidates,
                    success: sd == 0,
                    symmetric_difference: Some(sd),
                    wall_time,
                    error: None,
                }
            }
            Err(e) => {
                log::warn!("trial {trial}: {method} failed: {e}");
                MethodOutcome {
                    method: method.label().into(),
                    support: None,
                    candidates: 0,
                    success: false,
                    symmetric_difference: None,
                    wall_time,
                    error: Some(e.to_string()),
                }
            }
        });
    }

    let fixed_beta = match bt.as_ref() {
        Some(Ok(bt)) => betas
            .iter()
            .map(|&b| fixed_beta_outcome(bt, b, s, &truth))
            .collect(),
        Some(Err(e)) => betas
            .iter()
            .map(|&beta| FixedBetaOutcome {
                beta,
                support: None,
                success: false,
                symmetric_difference: None,
                error: Some(e.to_string()),
            })
            .collect(),
        None => Vec::new(),
    };

    Ok(TrialResult {
        trial,
        seed,
        truth,
        tiles: graph.and_then(|g| g.ok()).map(|g| g.tile_count()),
        outcomes,
        fixed_beta,
    })
}

/// One trial; `config.fixed_beta`, when set, adds a single-β path outcome.
pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<TrialResult> {
    let betas: Vec<f64> = config.fixed_beta.into_iter().collect();
    run_trial_at(config, trial, &betas)
}

fn run_trials(config: &ExperimentConfig, betas: &[f64]) -> Result<Vec<TrialResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Precondition(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial_at(config, t, betas))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    SupportSize,
    Dimension,
    Noise,
    FixedBeta,
}

impl FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "support_size" | "s" | "sparsity" => Ok(Sweep::SupportSize),
            "dimension" | "n" => Ok(Sweep::Dimension),
            "noise" | "sigma" => Ok(Sweep::Noise),
            "fixed_beta" | "beta" => Ok(Sweep::FixedBeta),
            _ => Err(Error::Parse(format!("unknown sweep '{s}'"))),
        }
    }
}

impl Sweep {
    pub fn name(self) -> &'static str {
        match self {
            Sweep::SupportSize => "support_size",
            Sweep::Dimension => "dimension",
            Sweep::Noise => "noise",
            Sweep::FixedBeta => "fixed_beta",
        }
    }
}

/// Row label for single-β path outcomes in fixed-β sweeps.
pub const FIXED_BETA_LABEL: &str = "FixedBeta";

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub method: String,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Over trials without error; NaN when every trial errored.
    pub mean_sd: f64,
    pub errors: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_time: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub trials: Vec<TrialResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub sweep: Sweep,
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    pub points: Vec<SweepPoint>,
}

fn summarize<'a>(
    value: f64,
    label: &str,
    outcomes: impl Iterator<Item = (bool, Option<usize>, Option<f64>)> + 'a,
) -> SweepRow {
    let (mut trials, mut successes, mut errors, mut sd_sum, mut sd_count) =
        (0, 0, 0, 0usize, 0usize);
    let mut times = Vec::new();
    for (success, sd, time) in outcomes {
        trials += 1;
        successes += success as usize;
        match sd {
            Some(d) => {
                sd_sum += d;
                sd_count += 1;
            }
            None => errors += 1,
        }
        times.extend(time);
    }
    let mean_time = (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64);
    let max_time = times.iter().copied().reduce(f64::max);
    SweepRow {
        value,
        method: label.into(),
        trials,
        successes,
        success_rate: successes as f64 / trials.max(1) as f64,
        mean_sd: if sd_count > 0 {
            sd_sum as f64 / sd_count as f64
        } else {
            f64::NAN
        },
        errors,
        mean_time,
        max_time,
    }
}

fn method_rows(value: f64, methods: &[Method], trials: &[TrialResult]) -> Vec<SweepRow> {
    methods
        .iter()
        .map(|&m| {
            summarize(
                value,
                m.label(),
                trials
                    .iter()
                    .filter_map(|t| t.outcome(m))
                    .map(|o| (o.success, o.symmetric_difference, o.wall_time)),
            )
        })
        .collect()
}

fn config_for(base: &ExperimentConfig, sweep: Sweep, value: f64) -> Result<ExperimentConfig> {
    let mut c = base.clone();
    let as_count = |v: f64| -> Result<usize> {
        if v >= 0.0 && v.fract() == 0.0 && v < 1e9 {
            Ok(v as usize)
        } else {
            Err(Error::Precondition(format!(
                "sweep value {v} is not a non-negative integer"
            )))
        }
    };
    match sweep {
        Sweep::SupportSize => c.s = as_count(value)?,
        Sweep::Dimension => c.n = as_count(value)?,
        Sweep::Noise => c.sigma = value,
        Sweep::FixedBeta => {}
    }
    c.validate()?;
    Ok(c)
}

/// Averaged success rate and symmetric difference per (value, method).
///
/// A fixed-β sweep runs every trial once: the tiling is shared across β and each β contributes a
/// `FixedBeta` row next to the configured methods.
pub fn run_sweep(config: &ExperimentConfig, sweep: Sweep, values: &[f64]) -> Result<SweepResult> {
    if values.is_empty() {
        return Err(Error::Precondition("empty sweep".into()));
    }
    config.validate()?;
    let mut rows = Vec::new();
    let mut points = Vec::new();
    if sweep == Sweep::FixedBeta {
        if let Some(bad) = values.iter().find(|b| !(**b > 0.0 && b.is_finite())) {
            return Err(Error::Precondition(format!(
                "fixed beta must be positive, got {bad}"
            )));
        }
        let mut c = config.clone();
        c.fixed_beta = None;
        // The tiling's oracle row is the reference every β is compared against.
        if !c.methods.contains(&Method::MpAll) {
            c.methods.push(Method::MpAll);
        }
        let trials = run_trials(&c, values)?;
        for (k, &beta) in values.iter().enumerate() {
            rows.push(summarize(
                beta,
                FIXED_BETA_LABEL,
                trials.iter().map(|t| {
                    let f = &t.fixed_beta[k];
                    (f.success, f.symmetric_difference, None)
                }),
            ));
            rows.extend(method_rows(beta, &c.methods, &trials));
        }
        points.push(SweepPoint {
            value: f64::NAN,
            trials,
        });
    } else {
        for &value in values {
            let c = config_for(config, sweep, value)?;
            let trials = run_trials(&c, &[])?;
            rows.extend(method_rows(value, &c.methods, &trials));
            points.push(SweepPoint { value, trials });
        }
    }
    Ok(SweepResult {
        sweep,
        config: config.clone(),
        rows,
        points,
    })
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e6 {
        format!("{v}")
    } else {
        format!("{v:.3e}")
    }
}

impl SweepResult {
    pub fn row(&self, value: f64, method: &str) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.value == value && r.method == method)
    }

    pub fn to_csv(&self) -> String {
        let timed = self.rows.iter().any(|r| r.mean_time.is_some());
        let mut out =
            String::from("sweep,value,method,trials,successes,success_rate,mean_sd,errors");
        if timed {
            out.push_str(",mean_time,max_time");
        }
        out.push('\n');
        for r in &self.rows {
            write!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.sweep.name(),
                r.value,
                r.method,
                r.trials,
                r.successes,
                r.success_rate,
                r.mean_sd,
                r.errors
            )
            .unwrap();
            if timed {
                write!(
                    out,
                    ",{},{}",
                    r.mean_time.unwrap_or(f64::NAN),
                    r.max_time.unwrap_or(f64::NAN)
                )
                .unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        // Non-finite values serialize as null.
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Largest per-method fraction of errored trials.
    pub fn max_error_rate(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.errors as f64 / r.trials.max(1) as f64)
            .fold(0.0, f64::max)
    }

    /// Success rates with one line per sweep value and one column per method.
    pub fn pivot_table(&self) -> String {
        let mut methods: Vec<&str> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !methods.contains(&r.method.as_str()) {
                methods.push(&r.method);
            }
            if !values.contains(&r.value) {
                values.push(r.value);
            }
        }
        let mut out = format!("{:>12}", self.sweep.name());
        for m in &methods {
            write!(out, " {m:>14}").unwrap();
        }
        out.push('\n');
        for v in values {
            write!(out, "{:>12}", format_value(v)).unwrap();
            for m in &methods {
                match self.row(v, m) {
                    Some(r) => write!(out, " {:>14.3}", r.success_rate).unwrap(),
                    None => write!(out, " {:>14}", "-").unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Plain-text table, one line per (value, method).
    pub fn summary_table(&self) -> String {
        let mut out = format!(
            "{:>12}  {:<14} {:>8} {:>8} {:>7}\n",
            self.sweep.name(),
            "method",
            "success",
            "mean_sd",
            "errors"
        );
        for r in &self.rows {
            writeln!(
                out,
                "{:>12}  {:<14} {:>8.3} {:>8.3} {:>7}",
                format_value(r.value),
                r.method,
                r.success_rate,
                r.mean_sd,
                r.errors
            )
            .unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(ensemble: Ensemble, m: usize, n: usize, s: usize) -> ExperimentConfig {
        ExperimentConfig {
            ensemble,
            m,
            n,
            s,
            trials: 2,
            ..Default::default()
        }
    }

    #[test]
    fn gaussian_one_by_one_is_unscaled() {
        let c = config(Ensemble::Gaussian, 1, 1, 0);
        let a = gen_matrix(&c, &mut ChaCha8Rng::seed_from_u64(9));
        let z: f64 = ChaCha8Rng::seed_from_u64(9).sample(StandardNormal);
        assert_eq!(a[(0, 0)], z);
    }

    #[test]
    fn circulant_entries_and_structure() {
        let c = config(Ensemble::Circulant, 9, 16, 2);
        let a = gen_matrix(&c, &mut ChaCha8Rng::seed_from_u64(3));
        let v = 1.0 / 3.0;
        assert!(a.iter().all(|x| (x.abs() - v).abs() < 1e-15));
        // Each row is a reversed cyclic shift of the same ±1 sequence.
        let base: Vec<f64> = (0..16).map(|i| a[(0, (16 - i) % 16)]).collect();
        for r in 1..9 {
            let row: Vec<f64> = (0..16).map(|i| a[(r, (16 - i) % 16)]).collect();
            assert!((0..16).any(|k| (0..16).all(|i| row[i] == base[(i + k) % 16])));
        }
    }

    #[test]
    fn gaussian_column_norms_concentrate() {
        let c = config(Ensemble::Gaussian, 200, 300, 1);
        let a = gen_matrix(&c, &mut ChaCha8Rng::seed_from_u64(5));
        let mean = a.column_iter().map(|col| col.norm()).sum::<f64>() / 300.0;
        assert!((0.9..=1.1).contains(&mean), "{mean}");
    }

    #[test]
    fn gamma_rows_share_a_scale() {
        let c = config(Ensemble::GammaGaussian, 5, 400, 1);
        let a = gen_matrix(&c, &mut ChaCha8Rng::seed_from_u64(11));
        let norms: Vec<f64> = a.row_iter().map(|r| r.norm() / 20.0).collect();
        let spread = norms.iter().copied().fold(0.0, f64::max)
            / norms.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(spread > 1.5, "row scales should vary, got {norms:?}");
    }

    #[test]
    fn signal_construction() {
        let c = ExperimentConfig {
            sigma: 0.05,
            ..config(Ensemble::Gaussian, 20, 40, 5)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = gen_matrix(&c, &mut rng);
        let (u, v, delta, y) = gen_signal(&c, &a, &mut rng);
        let mags: Vec<f64> = u.iter().filter(|x| **x != 0.0).map(|x| x.abs()).collect();
        assert_eq!(mags.len(), 5);
        assert_eq!(mags.iter().copied().fold(f64::INFINITY, f64::min), 1.5);
        assert!(mags.iter().all(|&x| (1.5..=5.0).contains(&x)));
        assert!(v.amax() <= 0.2);
        let clean = &a * (&u + &v);
        assert!((delta.norm() / clean.norm() - 0.05).abs() < 1e-12);
        assert!((y - clean - delta).amax() < 1e-14);
    }

    #[test]
    fn zero_noise() {
        let c = ExperimentConfig {
            sigma: 0.0,
            ..config(Ensemble::Gaussian, 10, 20, 2)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = gen_matrix(&c, &mut rng);
        let (u, v, delta, y) = gen_signal(&c, &a, &mut rng);
        assert_eq!(delta.amax(), 0.0);
        assert_eq!(y, &a * (u + v));
    }

    #[test]
    fn easy_instance_all_methods_succeed() {
        let c = ExperimentConfig {
            sigma: 0.0,
            v_amplitude: 0.0,
            c_min: 3.0,
            c_max: 3.0,
            trials: 1,
            seed: 4,
            ..config(Ensemble::Gaussian, 40, 60, 2)
        };
        let r = run_trial(&c, 0).unwrap();
        for o in &r.outcomes {
            assert!(o.success, "{} failed: {o:?}", o.method);
            assert_eq!(o.symmetric_difference, Some(0));
        }
    }

    #[test]
    fn zero_sparsity_trial() {
        let c = ExperimentConfig {
            trials: 1,
            ..config(Ensemble::Gaussian, 8, 12, 0)
        };
        let r = run_trial(&c, 0).unwrap();
        assert!(r.truth.is_empty());
        for o in &r.outcomes {
            assert!(o.success, "{o:?}");
            assert_eq!(o.support.as_deref(), Some(&[][..]));
        }
    }

    #[test]
    fn oracle_dominates_ranking() {
        let c = ExperimentConfig {
            methods: vec![Method::MpAll, Method::MpRank],
            trials: 3,
            ..config(Ensemble::Gaussian, 15, 30, 3)
        };
        for t in 0..3 {
            let r = run_trial(&c, t).unwrap();
            let all = r
                .outcome(Method::MpAll)
                .unwrap()
                .symmetric_difference
                .unwrap();
            let rank = r
                .outcome(Method::MpRank)
                .unwrap()
                .symmetric_difference
                .unwrap();
            assert!(all <= rank);
        }
    }

    #[test]
    fn sweep_shape_and_determinism() {
        let c = ExperimentConfig {
            methods: vec![Method::Omp, Method::Lasso],
            trials: 1,
            ..config(Ensemble::Gaussian, 12, 24, 2)
        };
        let r = run_sweep(&c, Sweep::SupportSize, &[2.0]).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.to_csv().lines().count(), 3);
        let mut c4 = c.clone();
        c4.workers = 4;
        c4.trials = 3;
        let mut c1 = c4.clone();
        c1.workers = 1;
        assert_eq!(
            run_sweep(&c4, Sweep::Noise, &[0.0, 0.1]).unwrap().to_csv(),
            run_sweep(&c1, Sweep::Noise, &[0.0, 0.1]).unwrap().to_csv()
        );
    }

    #[test]
    fn fixed_beta_never_beats_the_tiling() {
        let c = ExperimentConfig {
            methods: vec![Method::MpAll],
            trials: 3,
            ..config(Ensemble::Gaussian, 12, 24, 2)
        };
        let betas = [1e-4, 1e-2, 1.0, 50.0];
        let r = run_sweep(&c, Sweep::FixedBeta, &betas).unwrap();
        for t in &r.points[0].trials {
            let all = t.outcome(Method::MpAll).unwrap();
            for f in &t.fixed_beta {
                assert!(!f.success || all.success);
            }
        }
        for &b in &betas {
            let fixed = r.row(b, FIXED_BETA_LABEL).unwrap().success_rate;
            assert!(fixed <= r.row(b, "MPLASSO(All)").unwrap().success_rate);
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!("mp-rank".parse::<Method>().unwrap(), Method::MpRank);
        assert_eq!("MPLASSO(All)".parse::<Method>().unwrap(), Method::MpAll);
        assert_eq!("iht".parse::<Method>().unwrap(), Method::L1Iht);
        assert!("ista".parse::<Method>().is_err());
        assert_eq!(
            "gamma-gaussian".parse::<Ensemble>().unwrap(),
            Ensemble::GammaGaussian
        );
        assert_eq!("fixed-beta".parse::<Sweep>().unwrap(), Sweep::FixedBeta);
    }

    #[test]
    fn invalid_configs() {
        assert!(config(Ensemble::Gaussian, 10, 5, 2).validate().is_err());
        assert!(config(Ensemble::Gaussian, 5, 10, 6).validate().is_err());
        let c = ExperimentConfig {
            c_min: 6.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
