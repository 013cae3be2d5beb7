//! Monte Carlo experiments for the limit theorems, each producing a
//! [`VerificationReport`].
//!
//! Trial `i` of an experiment always draws from `rng::stream(seed, i)` and
//! results are reduced in trial order, so reports do not depend on the
//! number of worker threads.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::extremal::extremal_fidi_prob;
use crate::maxima::partial_max_process;
use crate::models::ProcessModel;
use crate::parallel::Executor;
use crate::regvar::{frechet_cdf, frechet_quantile, karamata_ratio, normalizer_an, sample_unit_frechet};
use crate::rng::stream;
use crate::skorokhod::{osc_j1, osc_m1};

/// Asymptotic 1% critical value of the one-sample KS statistic times `sqrt(n)`.
pub const KS_CRITICAL_1PCT: f64 = 1.628;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n: usize,
    pub critical_1pct: f64,
    pub pass: bool,
}

/// One-sample KS statistic of `samples` against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// KS test against `exp(-theta x^{-alpha})` at the 1% level.
pub fn ks_against_frechet(samples: &[f64], alpha: f64, theta: f64) -> Result<KsResult> {
    let critical = KS_CRITICAL_1PCT / (samples.len() as f64).sqrt();
    ks_against_frechet_with(samples, alpha, theta, critical)
}

/// KS test against `exp(-theta x^{-alpha})`, passing when the statistic is
/// below `threshold`.
pub fn ks_against_frechet_with(samples: &[f64], alpha: f64, theta: f64, threshold: f64) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::domain("KS test needs at least one sample"));
    }
    if !(alpha > 0.0 && theta > 0.0) {
        return Err(Error::domain(format!("need alpha > 0 and theta > 0, got {alpha}, {theta}")));
    }
    let statistic = ks_statistic(samples, |x| frechet_cdf(alpha, theta, x));
    let n = samples.len();
    Ok(KsResult { statistic, n, critical_1pct: KS_CRITICAL_1PCT / (n as f64).sqrt(), pass: statistic < threshold })
}

/// Default KS pass threshold: twice the asymptotic 1% critical value.
pub fn default_ks_threshold(trials: usize) -> f64 {
    2.0 * KS_CRITICAL_1PCT / (trials as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEstimate {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    /// Reported for inspection only; has no target.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub diagnostic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub value: f64,
    pub provenance: String,
}

/// Interval check `lower <= estimate <= upper` on a named estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub estimate: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub experiment: String,
    pub model: ProcessModel,
    pub params: BTreeMap<String, Value>,
    pub estimates: BTreeMap<String, ReportEstimate>,
    pub targets: BTreeMap<String, Target>,
    pub checks: Vec<Check>,
    pub pass: bool,
    /// Wall-clock time; left empty by the experiments so reports stay
    /// reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

impl VerificationReport {
    fn new(experiment: &str, model: ProcessModel) -> Self {
        VerificationReport {
            experiment: experiment.to_string(),
            model,
            params: BTreeMap::new(),
            estimates: BTreeMap::new(),
            targets: BTreeMap::new(),
            checks: Vec::new(),
            pass: true,
            runtime_seconds: None,
        }
    }

    fn param(&mut self, name: &str, value: impl Serialize) -> &mut Self {
        self.params.insert(name.to_string(), serde_json::to_value(value).expect("serializable parameter"));
        self
    }

    fn estimate(&mut self, name: &str, value: f64, stderr: Option<f64>) -> &mut Self {
        self.estimates.insert(name.to_string(), ReportEstimate { value, stderr, diagnostic: false });
        self
    }

    fn diagnostic(&mut self, name: &str, value: f64, stderr: Option<f64>) -> &mut Self {
        self.estimates.insert(name.to_string(), ReportEstimate { value, stderr, diagnostic: true });
        self
    }

    fn target(&mut self, name: &str, value: f64, provenance: &str) -> &mut Self {
        self.targets.insert(name.to_string(), Target { value, provenance: provenance.to_string() });
        self
    }

    fn check(&mut self, estimate: &str, lower: Option<f64>, upper: Option<f64>) -> &mut Self {
        let v = self.estimates[estimate].value;
        let pass = lower.is_none_or(|l| v >= l) && upper.is_none_or(|u| v <= u);
        self.checks.push(Check { estimate: estimate.to_string(), lower, upper, pass });
        self.pass &= pass;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Flat table `name,estimate,stderr,target,lower,upper,pass`, numbers to
    /// six significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,estimate,stderr,target,lower,upper,pass\n");
        for (name, est) in &self.estimates {
            let check = self.checks.iter().find(|c| &c.estimate == name);
            let opt = |v: Option<f64>| v.map(sig6).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                name,
                sig6(est.value),
                opt(est.stderr),
                opt(self.targets.get(name).map(|t| t.value)),
                opt(check.and_then(|c| c.lower)),
                opt(check.and_then(|c| c.upper)),
                check.map(|c| c.pass.to_string()).unwrap_or_default(),
            );
        }
        out
    }
}

/// `%g`-style formatting with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-4..6).contains(&exp) {
        trim(format!("{:.*}", (5 - exp).max(0) as usize, x))
    } else {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        format!("{}e{}", trim(mantissa.to_string()), e)
    }
}

fn sample_path(model: &ProcessModel, n: usize, seed: u64, trial: usize) -> Vec<f64> {
    let mut xs = Vec::with_capacity(n);
    model.sample_into(&mut stream(seed, trial as u64), n, &mut xs);
    xs
}

fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var)
}

fn binomial_stderr(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

fn count_true(flags: impl Iterator<Item = bool>) -> usize {
    flags.filter(|&b| b).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxLimitConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Defaults to [`default_ks_threshold`].
    pub ks_threshold: Option<f64>,
}

impl Default for MaxLimitConfig {
    fn default() -> Self {
        MaxLimitConfig { n: 10_000, trials: 4000, seed: 0, ks_threshold: None }
    }
}

/// Fréchet limit of `M_n / a_n`: KS distance of `trials` simulated maxima
/// to `exp(-theta x^{-alpha})`, plus deviations at a few quantiles.
pub fn verify_max_limit(model: &ProcessModel, cfg: &MaxLimitConfig, exec: &Executor) -> Result<VerificationReport> {
    if cfg.n < 100 || cfg.trials < 100 {
        return Err(Error::domain("max-limit verification needs n >= 100 and trials >= 100"));
    }
    let law = model.theoretical_law()?;
    let a_n = normalizer_an(model, cfg.n)?;
    let maxima = exec.map_trials(cfg.trials, |i| {
        sample_path(model, cfg.n, cfg.seed, i).into_iter().fold(0.0, f64::max) / a_n
    });
    let threshold = cfg.ks_threshold.unwrap_or_else(|| default_ks_threshold(cfg.trials));
    let ks = ks_against_frechet_with(&maxima, law.alpha, law.theta, threshold)?;

    let mut r = VerificationReport::new("max-limit", model.clone());
    r.param("n", cfg.n).param("trials", cfg.trials).param("seed", cfg.seed).param("ks_threshold", threshold);
    r.param("a_n", a_n);
    r.estimate("ks_statistic", ks.statistic, None)
        .target("ks_statistic", 0.0, "limit law exp(-theta x^-alpha)")
        .check("ks_statistic", None, Some(threshold));
    r.diagnostic("ks_critical_1pct", ks.critical_1pct, None);
    r.target("alpha", law.alpha, "tail index of the model").target("theta", law.theta, "extremal index of the model");
    let mut sorted = maxima;
    sorted.sort_by(f64::total_cmp);
    for p in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let empirical = empirical_quantile(&sorted, p);
        let exact = frechet_quantile(law.alpha, law.theta, p);
        r.diagnostic(&format!("quantile_deviation_{p}"), empirical - exact, None);
    }
    Ok(r.clone())
}

/// `sorted[ceil(p n) - 1]`.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidiConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    pub levels: Vec<f64>,
    pub tolerance: f64,
}

impl Default for FidiConfig {
    fn default() -> Self {
        FidiConfig { n: 10_000, trials: 10_000, seed: 0, times: vec![0.5, 1.0], levels: vec![1.0, 2.0], tolerance: 0.02 }
    }
}

/// Empirical `P(M_n(t_j) <= x_j for all j)` against the extremal-process
/// finite-dimensional law.
pub fn verify_fidi(model: &ProcessModel, cfg: &FidiConfig, exec: &Executor) -> Result<VerificationReport> {
    if cfg.n < 1 || cfg.trials < 1 {
        return Err(Error::domain("fidi verification needs n >= 1 and trials >= 1"));
    }
    let law = model.theoretical_law()?;
    let target = extremal_fidi_prob(law.alpha, law.theta, &cfg.times, &cfg.levels)?;
    let a_n = normalizer_an(model, cfg.n)?;
    let hits = exec.map_trials(cfg.trials, |i| {
        let xs = sample_path(model, cfg.n, cfg.seed, i);
        let path = partial_max_process(&xs, a_n).expect("nonempty path");
        cfg.times.iter().zip(&cfg.levels).all(|(&t, &x)| path.value_at(t) <= x)
    });
    let freq = count_true(hits.into_iter()) as f64 / cfg.trials as f64;

    let mut r = VerificationReport::new("fidi", model.clone());
    r.param("n", cfg.n).param("trials", cfg.trials).param("seed", cfg.seed);
    r.param("times", &cfg.times).param("levels", &cfg.levels).param("tolerance", cfg.tolerance);
    r.estimate("joint_probability", freq, Some(binomial_stderr(freq, cfg.trials)))
        .target("joint_probability", target, "extremal-process product formula")
        .check("joint_probability", Some(target - cfg.tolerance), Some(target + cfg.tolerance));
    Ok(r.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscProbeConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub delta: f64,
    pub eps: f64,
}

/// Empirical exceedance probabilities of the M1 and J1 oscillations of
/// `M_n`. Partial-maxima paths are monotone, so the M1 part must vanish.
pub fn osc_exceedance_probe(model: &ProcessModel, cfg: &OscProbeConfig, exec: &Executor) -> Result<VerificationReport> {
    if !(cfg.delta > 0.0 && cfg.eps > 0.0) {
        return Err(Error::domain("oscillation probe needs delta > 0 and eps > 0"));
    }
    if cfg.n < 2 || cfg.trials < 1 {
        return Err(Error::domain("oscillation probe needs n >= 2 and trials >= 1"));
    }
    let a_n = normalizer_an(model, cfg.n)?;
    let osc = exec.map_trials(cfg.trials, |i| -> Result<(f64, f64)> {
        let path = partial_max_process(&sample_path(model, cfg.n, cfg.seed, i), a_n)?;
        Ok((osc_m1(&path, cfg.delta)?, osc_j1(&path, cfg.delta)?))
    });
    let osc: Vec<(f64, f64)> = osc.into_iter().collect::<Result<_>>()?;
    let frac = |k: usize| k as f64 / cfg.trials as f64;
    let m1_above = frac(count_true(osc.iter().map(|o| o.0 > cfg.eps)));
    let j1_above = frac(count_true(osc.iter().map(|o| o.1 > cfg.eps)));
    let j1_at_least = frac(count_true(osc.iter().map(|o| o.1 >= cfg.eps)));

    let mut r = VerificationReport::new("osc-exceedance", model.clone());
    r.param("n", cfg.n).param("trials", cfg.trials).param("seed", cfg.seed);
    r.param("delta", cfg.delta).param("eps", cfg.eps);
    r.estimate("p_osc_m1_above", m1_above, None)
        .target("p_osc_m1_above", 0.0, "monotone paths have zero M1 oscillation")
        .check("p_osc_m1_above", None, Some(0.0));
    r.diagnostic("p_osc_j1_above", j1_above, Some(binomial_stderr(j1_above, cfg.trials)));
    r.diagnostic("p_osc_j1_at_least", j1_at_least, Some(binomial_stderr(j1_at_least, cfg.trials)));
    Ok(r.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct J1FailureConfig {
    pub c0: f64,
    pub c1: f64,
    pub eps: f64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Allowed deviation of the empirical `P(A)` from its limit.
    pub p_a_tolerance: f64,
}

impl Default for J1FailureConfig {
    fn default() -> Self {
        J1FailureConfig { c0: 0.2, c1: 0.8, eps: 10.0, n: 10_000, trials: 100_000, seed: 0, p_a_tolerance: 0.005 }
    }
}

/// Per-trial outcome of the J1 failure construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct J1Trial {
    pub in_a: bool,
    pub in_b: bool,
    pub osc_j1: f64,
}

/// Events `A`, `B` and `osc_j1(M_n, 2/n)` for `X_j = max(c0 Z_j, c1 Z_{j-1})`,
/// `j = 1..n`, driven by `z = (Z_0, ..., Z_n)`.
pub fn j1_failure_trial(c0: f64, c1: f64, eps: f64, a_n: f64, z: &[f64]) -> Result<J1Trial> {
    let n = z.len() - 1;
    if n < 2 {
        return Err(Error::domain("need at least Z_0, Z_1, Z_2"));
    }
    let xs: Vec<f64> = (1..=n).map(|j| (c0 * z[j]).max(c1 * z[j - 1])).collect();
    let mut i_max = 1;
    for i in 2..n {
        if z[i] > z[i_max] {
            i_max = i;
        }
    }
    let in_a = z[i_max] > eps * a_n;
    let lambda = c0 / (2.0 * c1);
    // l in {-i', ..., 1} \ {0}, i.e. Z_j for j in 0..=i'+1, j != i'.
    let in_b = in_a && (0..=i_max + 1).any(|j| j != i_max && z[j] > lambda * eps * a_n);
    let path = partial_max_process(&xs, a_n)?;
    let osc = osc_j1(&path, 2.0 / n as f64)?;
    Ok(J1Trial { in_a, in_b, osc_j1: osc })
}

/// Limit of `P(A)`, the bound on `limsup P(B)` and the oscillation level
/// guaranteed on `A \ B`.
pub fn j1_failure_targets(c0: f64, c1: f64, eps: f64) -> Result<(f64, f64, f64)> {
    if !(c0 > 0.0 && c1 > c0) {
        return Err(Error::domain(format!("need c1 > c0 > 0, got c0 = {c0}, c1 = {c1}")));
    }
    let lambda = c0 / (2.0 * c1);
    let p_a = -(-1.0 / eps).exp_m1();
    let b_bound = 1.0 / (lambda * eps * eps);
    if !(eps > 0.0 && p_a > b_bound) {
        return Err(Error::domain(format!(
            "need eps^2 (1 - exp(-1/eps)) > 1/lambda: {} <= {}",
            eps * eps * p_a,
            1.0 / lambda
        )));
    }
    Ok((p_a, b_bound, eps * (c0 / 2.0).min(c1 - c0)))
}

/// Counterexample to J1 convergence for the order-one moving maxima
/// `X_j = max(c0 Z_j, c1 Z_{j-1})`.
///
/// The normalizer is the `(1 - 1/n)`-quantile of the unit Fréchet noise.
/// Every trial in `A \ B` must satisfy `osc_j1(M_n, 2/n) >= threshold`; the
/// number of trials where it fails is reported as `violations`.
pub fn j1_failure_experiment(cfg: &J1FailureConfig, exec: &Executor) -> Result<VerificationReport> {
    let (c0, c1, eps) = (cfg.c0, cfg.c1, cfg.eps);
    let (p_a_limit, b_bound, threshold) = j1_failure_targets(c0, c1, eps)?;
    if cfg.n < 2 || cfg.trials < 1 {
        return Err(Error::domain("need n >= 2 and trials >= 1"));
    }
    let a_n = -1.0 / (-1.0 / cfg.n as f64).ln_1p();
    let outcomes = exec.map_trials(cfg.trials, |i| {
        let mut rng = stream(cfg.seed, i as u64);
        let z: Vec<f64> = (0..=cfg.n).map(|_| sample_unit_frechet(&mut rng)).collect();
        j1_failure_trial(c0, c1, eps, a_n, &z)
    });
    let outcomes: Vec<J1Trial> = outcomes.into_iter().collect::<Result<_>>()?;
    let trials = cfg.trials;
    let frac = |k: usize| k as f64 / trials as f64;
    let p_a = frac(count_true(outcomes.iter().map(|o| o.in_a)));
    let p_b = frac(count_true(outcomes.iter().map(|o| o.in_b)));
    let p_a_not_b = frac(count_true(outcomes.iter().map(|o| o.in_a && !o.in_b)));
    let p_osc = frac(count_true(outcomes.iter().map(|o| o.osc_j1 >= threshold)));
    let violations = count_true(outcomes.iter().map(|o| o.in_a && !o.in_b && o.osc_j1 < threshold));

    let model = ProcessModel::MovingMaxima { coeffs: vec![c0, c1] };
    let mut r = VerificationReport::new("j1-failure", model);
    r.param("c0", c0).param("c1", c1).param("eps", eps).param("n", cfg.n).param("trials", trials);
    r.param("seed", cfg.seed).param("p_a_tolerance", cfg.p_a_tolerance).param("a_n", a_n);
    r.param("lambda", c0 / (2.0 * c1)).param("osc_threshold", threshold);
    let se = |p: f64| Some(binomial_stderr(p, trials));
    r.estimate("p_a", p_a, se(p_a))
        .target("p_a", p_a_limit, "limit 1 - exp(-1/eps)")
        .check("p_a", Some(p_a_limit - cfg.p_a_tolerance), Some(p_a_limit + cfg.p_a_tolerance));
    r.estimate("p_b", p_b, se(p_b))
        .target("p_b", b_bound, "asymptotic bound 1/(lambda eps^2)")
        .check("p_b", None, Some(b_bound + 3.0 * binomial_stderr(b_bound.min(1.0), trials)));
    r.estimate("p_a_not_b", p_a_not_b, se(p_a_not_b))
        .target("p_a_not_b", p_a_limit - b_bound, "liminf bound P(A) - P(B)")
        .check("p_a_not_b", Some(p_a_limit - b_bound - 3.0 * binomial_stderr(p_a_limit - b_bound, trials)), None);
    r.estimate("p_osc_j1", p_osc, se(p_osc))
        .target("p_osc_j1", p_a_not_b, "oscillation bound holds on A \\ B")
        .check("p_osc_j1", Some(p_a_not_b), None);
    r.estimate("violations", violations as f64, None)
        .target("violations", 0.0, "per-trial increment inequalities on A \\ B")
        .check("violations", None, Some(0.0));
    Ok(r.clone())
}

/// Conditional extremal-index estimate at one `(r, quantile)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaCell {
    pub r: usize,
    pub quantile: f64,
    pub threshold: f64,
    pub events: u64,
    pub estimate: f64,
    pub stderr: f64,
}

const BLOCK_BATCH: usize = 1024;

/// Minimum number of conditioning events for a conditional estimate.
pub const MIN_CONDITIONING_EVENTS: u64 = 100;

/// Rejection estimates of `P(max(X_1..X_r) <= x | X_0 > x)` with `x` the
/// marginal `quantile`-quantile, for every pair in `rs x quantiles`.
///
/// `trials` blocks `X_0..X_R` (`R = max rs`) are cut from stationary paths,
/// 1024 consecutive blocks per random stream; all cells share the draws.
pub fn theta_conditional_grid(
    model: &ProcessModel,
    rs: &[usize],
    quantiles: &[f64],
    trials: usize,
    seed: u64,
    exec: &Executor,
) -> Result<Vec<ThetaCell>> {
    if rs.is_empty() || quantiles.is_empty() || rs.contains(&0) {
        return Err(Error::domain("need at least one r >= 1 and one quantile"));
    }
    if trials < 1 {
        return Err(Error::domain("need trials >= 1"));
    }
    let thresholds = quantiles
        .iter()
        .map(|&q| model.marginal_quantile(q).map(|e| e.value))
        .collect::<Result<Vec<f64>>>()?;
    let big_r = *rs.iter().max().expect("nonempty");
    let cells = rs.len() * quantiles.len();
    let batches = trials.div_ceil(BLOCK_BATCH);
    let counts = exec.map_trials(batches, |b| {
        let count = BLOCK_BATCH.min(trials - b * BLOCK_BATCH);
        let mut path = Vec::with_capacity(count * (big_r + 1));
        model.sample_into(&mut stream(seed, b as u64), count * (big_r + 1), &mut path);
        let mut events = vec![0u64; quantiles.len()];
        let mut below = vec![0u64; cells];
        let mut prefix = vec![0.0f64; big_r + 1];
        for block in path.chunks_exact(big_r + 1) {
            if !thresholds.iter().any(|&x| block[0] > x) {
                continue;
            }
            for k in 1..=big_r {
                prefix[k] = prefix[k - 1].max(block[k]);
            }
            for (qi, &x) in thresholds.iter().enumerate() {
                if block[0] > x {
                    events[qi] += 1;
                    for (ri, &r) in rs.iter().enumerate() {
                        if prefix[r] <= x {
                            below[qi * rs.len() + ri] += 1;
                        }
                    }
                }
            }
        }
        (events, below)
    });
    let mut events = vec![0u64; quantiles.len()];
    let mut below = vec![0u64; cells];
    for (e, b) in counts {
        events.iter_mut().zip(&e).for_each(|(x, y)| *x += y);
        below.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
    }
    let mut out = Vec::with_capacity(cells);
    for (qi, &q) in quantiles.iter().enumerate() {
        if events[qi] < MIN_CONDITIONING_EVENTS {
            return Err(Error::resource(format!(
                "only {} blocks exceed the {q}-quantile (need {MIN_CONDITIONING_EVENTS}); increase trials",
                events[qi]
            )));
        }
        for (ri, &r) in rs.iter().enumerate() {
            let est = below[qi * rs.len() + ri] as f64 / events[qi] as f64;
            out.push(ThetaCell {
                r,
                quantile: q,
                threshold: thresholds[qi],
                events: events[qi],
                estimate: est,
                stderr: (est * (1.0 - est) / events[qi] as f64).sqrt(),
            });
        }
    }
    Ok(out)
}

/// Single-cell version of [`theta_conditional_grid`].
pub fn estimate_theta_conditional(
    model: &ProcessModel,
    r: usize,
    quantile: f64,
    trials: usize,
    seed: u64,
    exec: &Executor,
) -> Result<ThetaCell> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::domain(format!("quantile must lie in (0, 1), got {quantile}")));
    }
    Ok(theta_conditional_grid(model, &[r], &[quantile], trials, seed, exec)?[0])
}

/// Blocks declustering: blocks whose maximum exceeds `threshold` divided by
/// the number of exceedances. The last block may be short.
pub fn estimate_theta_blocks(sample: &[f64], block_len: usize, threshold: f64) -> Result<f64> {
    if block_len < 1 {
        return Err(Error::domain("block length must be at least 1"));
    }
    if !(threshold > 0.0) {
        return Err(Error::domain(format!("threshold must be positive, got {threshold}")));
    }
    let exceedances = sample.iter().filter(|&&x| x > threshold).count();
    if exceedances == 0 {
        return Err(Error::domain("no exceedances of the threshold"));
    }
    let blocks = sample.chunks(block_len).filter(|b| b.iter().any(|&x| x > threshold)).count();
    Ok(blocks as f64 / exceedances as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaConfig {
    pub seed: u64,
    pub tolerance: f64,
    /// Conditional method: look-ahead `r`, threshold quantile and blocks.
    pub r: usize,
    pub quantile: f64,
    pub trials: usize,
    /// Also report the `r in {10, 50, 200}` x `quantile in {0.99, 0.999}` grid.
    pub grid: bool,
    /// Blocks method: series length and block length; uses `quantile`.
    pub n: usize,
    pub block_len: usize,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        ThetaConfig {
            seed: 0,
            tolerance: 0.05,
            r: 50,
            quantile: 0.999,
            trials: 2_000_000,
            grid: false,
            n: 1_000_000,
            block_len: 100,
        }
    }
}

fn theta_target(model: &ProcessModel) -> Result<f64> {
    Ok(model.theoretical_law()?.theta)
}

/// Report wrapping [`estimate_theta_conditional`] (and optionally the grid).
pub fn theta_conditional_report(model: &ProcessModel, cfg: &ThetaConfig, exec: &Executor) -> Result<VerificationReport> {
    let theta = theta_target(model)?;
    let mut rs = vec![cfg.r];
    let mut qs = vec![cfg.quantile];
    if cfg.grid {
        rs.extend([10, 50, 200]);
        qs.extend([0.99, 0.999]);
        rs.sort_unstable();
        rs.dedup();
        qs.sort_by(f64::total_cmp);
        qs.dedup();
    }
    let cells = theta_conditional_grid(model, &rs, &qs, cfg.trials, cfg.seed, exec)?;
    let main = cells.iter().find(|c| c.r == cfg.r && c.quantile == cfg.quantile).expect("requested cell");
    let mut r = VerificationReport::new("theta-conditional", model.clone());
    r.param("r", cfg.r).param("quantile", cfg.quantile).param("trials", cfg.trials).param("seed", cfg.seed);
    r.param("tolerance", cfg.tolerance).param("events", main.events).param("threshold", main.threshold);
    r.estimate("theta", main.estimate, Some(main.stderr))
        .target("theta", theta, "extremal index of the model")
        .check("theta", Some(theta - cfg.tolerance), Some(theta + cfg.tolerance));
    if cfg.grid {
        for c in &cells {
            r.diagnostic(&format!("theta_r{}_q{}", c.r, c.quantile), c.estimate, Some(c.stderr));
        }
    }
    Ok(r.clone())
}

/// Report wrapping [`estimate_theta_blocks`] on one path of length `n`, with
/// the empirical `quantile`-quantile of that path as threshold.
pub fn theta_blocks_report(model: &ProcessModel, cfg: &ThetaConfig) -> Result<VerificationReport> {
    if !(cfg.quantile > 0.0 && cfg.quantile < 1.0) {
        return Err(Error::domain(format!("quantile must lie in (0, 1), got {}", cfg.quantile)));
    }
    let theta = theta_target(model)?;
    let xs = model.generate(cfg.n, cfg.seed)?;
    let mut sorted = xs.clone();
    sorted.sort_by(f64::total_cmp);
    let threshold = empirical_quantile(&sorted, cfg.quantile);
    let est = estimate_theta_blocks(&xs, cfg.block_len, threshold)?;
    let mut r = VerificationReport::new("theta-blocks", model.clone());
    r.param("n", cfg.n).param("block_len", cfg.block_len).param("quantile", cfg.quantile);
    r.param("seed", cfg.seed).param("tolerance", cfg.tolerance).param("threshold", threshold);
    r.estimate("theta", est, None)
        .target("theta", theta, "extremal index of the model")
        .check("theta", Some(theta - cfg.tolerance), Some(theta + cfg.tolerance));
    Ok(r.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub n: usize,
    pub u: f64,
    pub block_len: usize,
    pub trials: usize,
    pub seed: u64,
    /// Allowed relative deviation of the mean count from `theta u^{-alpha}`.
    pub mean_rel_tolerance: f64,
    pub dispersion_range: (f64, f64),
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            n: 10_000,
            u: 1.0,
            block_len: 100,
            trials: 5000,
            seed: 0,
            mean_rel_tolerance: 0.15,
            dispersion_range: (0.8, 1.2),
        }
    }
}

/// Block-level exceedance counts: per trial, the number of blocks whose
/// maximum exceeds `u a_n`. The limit is Poisson with mean `theta u^{-alpha}`.
pub fn poisson_cluster_check(model: &ProcessModel, cfg: &ClusterConfig, exec: &Executor) -> Result<VerificationReport> {
    if !(cfg.u > 0.0) || cfg.block_len < 1 || cfg.trials < 2 || cfg.n < 1 {
        return Err(Error::domain("need u > 0, block_len >= 1, n >= 1 and trials >= 2"));
    }
    let law = model.theoretical_law()?;
    let a_n = normalizer_an(model, cfg.n)?;
    let level = cfg.u * a_n;
    let counts = exec.map_trials(cfg.trials, |i| {
        let xs = sample_path(model, cfg.n, cfg.seed, i);
        xs.chunks(cfg.block_len).filter(|b| b.iter().any(|&x| x > level)).count() as f64
    });
    let (mean, var) = mean_and_variance(&counts);
    let target = law.theta * cfg.u.powf(-law.alpha);
    let dispersion = if mean > 0.0 { var / mean } else { 0.0 };

    let mut r = VerificationReport::new("cluster-poisson", model.clone());
    r.param("n", cfg.n).param("u", cfg.u).param("block_len", cfg.block_len).param("trials", cfg.trials);
    r.param("seed", cfg.seed).param("mean_rel_tolerance", cfg.mean_rel_tolerance);
    r.param("dispersion_range", [cfg.dispersion_range.0, cfg.dispersion_range.1]);
    r.estimate("mean_count", mean, Some((var / cfg.trials as f64).sqrt()))
        .target("mean_count", target, "Poisson intensity theta u^-alpha")
        .check(
            "mean_count",
            Some(target * (1.0 - cfg.mean_rel_tolerance)),
            Some(target * (1.0 + cfg.mean_rel_tolerance)),
        );
    r.diagnostic("variance_count", var, None);
    r.estimate("dispersion_index", dispersion, None)
        .target("dispersion_index", 1.0, "Poisson variance equals mean")
        .check("dispersion_index", Some(cfg.dispersion_range.0), Some(cfg.dispersion_range.1));
    Ok(r.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KaramataConfig {
    pub alpha: f64,
    pub orders: Vec<f64>,
    pub eps: f64,
    pub n: usize,
    pub rel_tolerance: f64,
}

impl Default for KaramataConfig {
    fn default() -> Self {
        KaramataConfig { alpha: 1.0, orders: vec![2.0, 3.0], eps: 1.0, n: 1_000_000, rel_tolerance: 0.02 }
    }
}

/// Truncated-moment ratios against their limits `alpha / (s - alpha)`.
pub fn karamata_report(cfg: &KaramataConfig) -> Result<VerificationReport> {
    let model = ProcessModel::iid(cfg.alpha, 1.0)?;
    let mut r = VerificationReport::new("karamata", model);
    r.param("alpha", cfg.alpha).param("orders", &cfg.orders).param("eps", cfg.eps).param("n", cfg.n);
    r.param("rel_tolerance", cfg.rel_tolerance);
    for &s in &cfg.orders {
        let value = karamata_ratio(cfg.alpha, s, cfg.eps, cfg.n)?;
        let limit = cfg.alpha / (s - cfg.alpha);
        let name = format!("ratio_s{s}");
        r.estimate(&name, value, None)
            .target(&name, limit, "limit alpha / (s - alpha)")
            .check(&name, Some(limit * (1.0 - cfg.rel_tolerance)), Some(limit * (1.0 + cfg.rel_tolerance)));
    }
    Ok(r.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regvar::frechet_from_uniform;
    use crate::rng::uniform_open;

    fn seq() -> Executor {
        Executor::sequential()
    }

    #[test]
    fn ks_examples() {
        let median = frechet_quantile(1.0, 1.0, 0.5);
        let one = ks_against_frechet(&[median], 1.0, 1.0).unwrap();
        assert!((one.statistic - 0.5).abs() < 1e-12);
        assert_eq!(one.n, 1);

        let mut rng = stream(1, 0);
        let exact: Vec<f64> = (0..100_000).map(|_| frechet_from_uniform(uniform_open(&mut rng), 1.0, 1.0)).collect();
        let ks = ks_against_frechet(&exact, 1.0, 1.0).unwrap();
        assert!(ks.statistic < 0.006, "{}", ks.statistic);
        assert!((ks.critical_1pct - 1.628 / 100_000f64.sqrt()).abs() < 1e-15);

        // Fréchet(theta = 0.5) is Fréchet(1) scaled by 0.5.
        let wrong: Vec<f64> = (0..10_000).map(|_| 0.5 * frechet_from_uniform(uniform_open(&mut rng), 1.0, 1.0)).collect();
        assert!(ks_against_frechet(&wrong, 1.0, 1.0).unwrap().statistic > 0.1);
        assert!(ks_against_frechet(&[], 1.0, 1.0).is_err());
    }

    #[test]
    fn ks_statistic_matches_exhaustive_sup() {
        // Against the uniform CDF the supremum is attained at sample points.
        let xs = [0.1, 0.15, 0.7, 0.71, 0.9];
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        let mut brute = 0.0f64;
        for i in 0..=100_000 {
            let t = i as f64 / 100_000.0;
            let ecdf = xs.iter().filter(|&&x| x <= t).count() as f64 / 5.0;
            brute = brute.max((ecdf - t).abs());
        }
        assert!((d - brute).abs() < 1e-4, "{d} vs {brute}");
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(0.687289), "0.687289");
        assert_eq!(sig6(0.6872892787909722), "0.687289");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(0.00012345678), "0.000123457");
        assert_eq!(sig6(-2.5), "-2.5");
        assert_eq!(sig6(1.5e-7), "1.5e-7");
    }

    #[test]
    fn blocks_estimator_examples() {
        assert_eq!(estimate_theta_blocks(&[0.1, 5.0, 0.2, 0.3], 2, 1.0).unwrap(), 1.0);
        assert_eq!(estimate_theta_blocks(&[5.0, 0.1, 6.0, 0.3, 7.0], 2, 1.0).unwrap(), 1.0);
        assert_eq!(estimate_theta_blocks(&[5.0, 6.0, 0.1, 0.3], 2, 1.0).unwrap(), 0.5);
        assert!(estimate_theta_blocks(&[0.1, 0.2], 2, 1.0).is_err());
        assert!(estimate_theta_blocks(&[5.0], 0, 1.0).is_err());
    }

    #[test]
    fn blocks_estimator_on_armax() {
        let model = ProcessModel::armax(0.5).unwrap();
        let cfg = ThetaConfig { n: 200_000, ..ThetaConfig::default() };
        let r = theta_blocks_report(&model, &cfg).unwrap();
        let est = r.estimates["theta"].value;
        assert!(est > 0.0 && est <= 1.0);
        assert!((est - 0.5).abs() < 0.1, "{est}");
    }

    #[test]
    fn conditional_estimator_examples() {
        let iid = ProcessModel::iid(1.0, 1.0).unwrap();
        let c = estimate_theta_conditional(&iid, 10, 0.999, 300_000, 4, &seq()).unwrap();
        assert!(c.estimate >= 0.95, "{c:?}");
        let too_few = estimate_theta_conditional(&iid, 10, 0.999, 1000, 4, &seq());
        assert!(matches!(too_few, Err(Error::Resource(_))));
        assert!(estimate_theta_conditional(&iid, 0, 0.99, 1000, 4, &seq()).is_err());

        let armax = ProcessModel::armax(0.5).unwrap();
        let c = estimate_theta_conditional(&armax, 50, 0.999, 1_000_000, 5, &seq()).unwrap();
        assert!((c.estimate - 0.5).abs() < 0.06, "{c:?}");
    }

    #[test]
    fn conditional_grid_shares_draws() {
        let model = ProcessModel::moving_maxima(vec![0.2, 0.3, 0.5]).unwrap();
        let grid = theta_conditional_grid(&model, &[10, 50], &[0.99], 100_000, 2, &seq()).unwrap();
        let single = estimate_theta_conditional(&model, 10, 0.99, 100_000, 2, &seq()).unwrap();
        // Different block lengths, so only compare statistically.
        assert!((grid[0].estimate - single.estimate).abs() < 0.05);
        assert!(grid[1].estimate <= grid[0].estimate);
        // Moving maxima is m-dependent: no dependence beyond lag 2.
        assert!((grid[0].estimate - 0.5).abs() < 0.05, "{:?}", grid[0]);
    }

    #[test]
    fn j1_targets_and_preconditions() {
        let (p_a, bound, thr) = j1_failure_targets(0.2, 0.8, 10.0).unwrap();
        assert!((p_a - 0.09516).abs() < 1e-5);
        assert!((bound - 0.08).abs() < 1e-12);
        assert!((thr - 1.0).abs() < 1e-12);
        let err = j1_failure_targets(0.2, 0.8, 3.0).unwrap_err();
        assert!(err.to_string().contains("1/lambda"), "{err}");
        assert!(j1_failure_targets(0.8, 0.2, 10.0).is_err());
    }

    #[test]
    fn j1_trial_on_constructed_noise() {
        // One big Z at i' = 3 with everything else small: in A \ B.
        let a_n = 1.0;
        let z = [0.1, 0.2, 0.1, 20.0, 0.3, 0.1, 0.2];
        let t = j1_failure_trial(0.2, 0.8, 10.0, a_n, &z).unwrap();
        assert!(t.in_a && !t.in_b);
        assert!(t.osc_j1 >= 1.0, "{t:?}");
        // A neighbour above lambda eps a_n = 1.25 puts the trial in B.
        let z = [0.1, 0.2, 0.1, 20.0, 1.3, 0.1, 0.2];
        let t = j1_failure_trial(0.2, 0.8, 10.0, a_n, &z).unwrap();
        assert!(t.in_a && t.in_b);
        // Z_0 counts for B, Z_n does not count for i'.
        let z = [1.3, 0.2, 0.1, 20.0, 0.3, 0.1, 99.0];
        let t = j1_failure_trial(0.2, 0.8, 10.0, a_n, &z).unwrap();
        assert!(t.in_a && t.in_b);
        let z = [0.1, 0.2, 0.1, 5.0, 0.3, 0.1, 99.0];
        assert!(!j1_failure_trial(0.2, 0.8, 10.0, a_n, &z).unwrap().in_a);
    }

    #[test]
    fn j1_experiment_small_scale() {
        let cfg = J1FailureConfig { n: 1000, trials: 20_000, seed: 3, p_a_tolerance: 0.02, ..Default::default() };
        let r = j1_failure_experiment(&cfg, &seq()).unwrap();
        assert_eq!(r.estimates["violations"].value, 0.0);
        assert!(r.estimates["p_a_not_b"].value <= r.estimates["p_a"].value);
        assert!(r.estimates["p_osc_j1"].value >= r.estimates["p_a_not_b"].value);
        assert!(r.pass, "{}", r.to_json());
        let bad = J1FailureConfig { eps: 3.0, ..cfg };
        assert!(j1_failure_experiment(&bad, &seq()).is_err());
    }

    #[test]
    fn max_limit_iid_small() {
        let model = ProcessModel::iid(1.0, 1.0).unwrap();
        let cfg = MaxLimitConfig { n: 1000, trials: 2000, seed: 1, ks_threshold: None };
        let r = verify_max_limit(&model, &cfg, &seq()).unwrap();
        assert!(r.pass, "{}", r.to_json());
        assert!(r.estimates["quantile_deviation_0.5"].diagnostic);
        assert!(verify_max_limit(&model, &MaxLimitConfig { n: 50, ..cfg }, &seq()).is_err());
    }

    #[test]
    fn fidi_levels_to_infinity_and_single_time() {
        let model = ProcessModel::armax(0.5).unwrap();
        let cfg = FidiConfig { n: 500, trials: 500, seed: 2, times: vec![0.5, 1.0], levels: vec![1e12, 1e12], tolerance: 0.01 };
        let r = verify_fidi(&model, &cfg, &seq()).unwrap();
        assert_eq!(r.estimates["joint_probability"].value, 1.0);
        let one = FidiConfig { times: vec![1.0], levels: vec![1.0], trials: 4000, n: 2000, tolerance: 0.05, ..cfg };
        let r = verify_fidi(&model, &one, &seq()).unwrap();
        assert!((r.targets["joint_probability"].value - (-0.5f64).exp()).abs() < 1e-15);
        assert!(r.pass, "{}", r.to_json());
    }

    #[test]
    fn osc_probe_m1_part_vanishes() {
        let model = ProcessModel::moving_maxima(vec![0.2, 0.8]).unwrap();
        let cfg = OscProbeConfig { n: 1000, trials: 2000, seed: 5, delta: 0.002, eps: 1.0 };
        let r = osc_exceedance_probe(&model, &cfg, &seq()).unwrap();
        assert_eq!(r.estimates["p_osc_m1_above"].value, 0.0);
        assert!(r.estimates["p_osc_j1_at_least"].value >= 0.01);
        assert!(r.pass);
    }

    #[test]
    fn cluster_check_limits() {
        let model = ProcessModel::iid(1.0, 1.0).unwrap();
        let cfg = ClusterConfig { n: 2000, trials: 2000, seed: 6, ..Default::default() };
        let r = poisson_cluster_check(&model, &cfg, &seq()).unwrap();
        assert!((r.estimates["mean_count"].value - 1.0).abs() < 0.1);
        let far = ClusterConfig { u: 1e6, ..cfg };
        let r = poisson_cluster_check(&model, &far, &seq()).unwrap();
        assert!(r.estimates["mean_count"].value < 0.01);
    }

    #[test]
    fn karamata_report_passes() {
        let r = karamata_report(&KaramataConfig::default()).unwrap();
        assert!(r.pass, "{}", r.to_json());
    }

    #[test]
    fn reports_round_trip_and_flatten() {
        let model = ProcessModel::armax(0.5).unwrap();
        let cfg = FidiConfig { n: 200, trials: 300, seed: 8, ..Default::default() };
        let r = verify_fidi(&model, &cfg, &seq()).unwrap();
        assert_eq!(VerificationReport::from_json(&r.to_json()).unwrap(), r);
        let csv = r.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("name,estimate,stderr,target,lower,upper,pass"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "joint_probability");
        assert_eq!(row.len(), 7);
        assert!(!r.to_json().contains("runtime_seconds"));
    }

    #[test]
    fn reports_do_not_depend_on_thread_count() {
        let model = ProcessModel::moving_maxima(vec![0.2, 0.3, 0.5]).unwrap();
        let cfg = MaxLimitConfig { n: 500, trials: 300, seed: 12, ks_threshold: None };
        let a = verify_max_limit(&model, &cfg, &seq()).unwrap().to_json();
        let b = verify_max_limit(&model, &cfg, &Executor::with_threads(3).unwrap()).unwrap().to_json();
        assert_eq!(a, b);
    }
}
