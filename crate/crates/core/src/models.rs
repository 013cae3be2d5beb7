//! Stationary generators: i.i.d. Fréchet, finite moving maxima, ARMAX and
//! squared GARCH(1,1), with their tail and extremal indices.

use std::sync::OnceLock;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::Executor;
use crate::quadrature::gauss_hermite;
use crate::regvar::{frechet_quantile, sample_frechet, sample_unit_frechet, LimitLaw};
use crate::rng::{standard_normal, stream};

/// Steps discarded before a squared GARCH path is recorded.
pub const GARCH_BURN_IN: usize = 10_000;
/// Gauss–Hermite order used for GARCH moment equations.
pub const GARCH_QUADRATURE_NODES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub enum ProcessModel {
    /// i.i.d. Fréchet with CDF `exp(-(x/scale)^{-alpha})`.
    Iid { alpha: f64, scale: f64 },
    /// `X_n = max_i c_i Z_{n-i}` with unit Fréchet noise; coefficients sum to one.
    MovingMaxima { coeffs: Vec<f64> },
    /// `X_n = max(c X_{n-1}, Z_n)` with unit Fréchet noise.
    Armax { c: f64 },
    /// `X_n^2` where `X_n = sigma_n Z_n`,
    /// `sigma_n^2 = alpha0 + (alpha1 Z_{n-1}^2 + beta1) sigma_{n-1}^2`.
    SquaredGarch { alpha0: f64, alpha1: f64, beta1: f64 },
}

/// Wire format: `{"model": "mm", "coeffs": [...]}` and friends.
#[derive(Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
enum ModelSpec {
    Iid {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Mm {
        coeffs: Vec<f64>,
    },
    Armax {
        c: f64,
    },
    Garch2 {
        alpha0: f64,
        alpha1: f64,
        beta1: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl TryFrom<ModelSpec> for ProcessModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Iid { alpha, scale } => ProcessModel::iid(alpha, scale),
            ModelSpec::Mm { coeffs } => ProcessModel::moving_maxima(coeffs),
            ModelSpec::Armax { c } => ProcessModel::armax(c),
            ModelSpec::Garch2 { alpha0, alpha1, beta1 } => ProcessModel::squared_garch(alpha0, alpha1, beta1),
        }
    }
}

impl From<ProcessModel> for ModelSpec {
    fn from(m: ProcessModel) -> Self {
        match m {
            ProcessModel::Iid { alpha, scale } => ModelSpec::Iid { alpha, scale },
            ProcessModel::MovingMaxima { coeffs } => ModelSpec::Mm { coeffs },
            ProcessModel::Armax { c } => ModelSpec::Armax { c },
            ProcessModel::SquaredGarch { alpha0, alpha1, beta1 } => ModelSpec::Garch2 { alpha0, alpha1, beta1 },
        }
    }
}

/// A point estimate with an optional standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: Option<f64>,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, stderr: None }
    }
}

impl ProcessModel {
    pub fn iid(alpha: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite() && scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidModel(format!("iid needs alpha > 0 and scale > 0, got {alpha}, {scale}")));
        }
        Ok(ProcessModel::Iid { alpha, scale })
    }

    /// Moving maxima of order `coeffs.len() - 1`. Coefficients are rescaled
    /// to sum to one, which leaves the marginal exactly unit Fréchet.
    pub fn moving_maxima(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidModel("moving maxima needs at least c0 and c1".into()));
        }
        if coeffs.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::InvalidModel("coefficients must be finite and nonnegative".into()));
        }
        if coeffs[0] == 0.0 || coeffs[coeffs.len() - 1] == 0.0 {
            return Err(Error::InvalidModel("c0 and cm must be nonzero".into()));
        }
        let sum: f64 = coeffs.iter().sum();
        let coeffs = if sum == 1.0 { coeffs } else { coeffs.into_iter().map(|c| c / sum).collect() };
        Ok(ProcessModel::MovingMaxima { coeffs })
    }

    pub fn armax(c: f64) -> Result<Self> {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::InvalidModel(format!("ARMAX needs 0 < c < 1, got {c}")));
        }
        Ok(ProcessModel::Armax { c })
    }

    /// Squared GARCH(1,1); requires `E ln(alpha1 Z^2 + beta1) < 0`.
    pub fn squared_garch(alpha0: f64, alpha1: f64, beta1: f64) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha1 > 0.0 && beta1 > 0.0) || ![alpha0, alpha1, beta1].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidModel("GARCH parameters must be positive and finite".into()));
        }
        let lyapunov = garch_log_moment(alpha1, beta1);
        if lyapunov >= 0.0 {
            return Err(Error::InvalidModel(format!(
                "no stationary solution: E ln(alpha1 Z^2 + beta1) = {lyapunov:.6} >= 0"
            )));
        }
        Ok(ProcessModel::SquaredGarch { alpha0, alpha1, beta1 })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProcessModel::Iid { .. } => "iid",
            ProcessModel::MovingMaxima { .. } => "mm",
            ProcessModel::Armax { .. } => "armax",
            ProcessModel::SquaredGarch { .. } => "garch2",
        }
    }

    /// Marginal CDF, where it has a closed form.
    pub fn marginal_cdf(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        match *self {
            ProcessModel::Iid { alpha, scale } => Ok((-(x / scale).powf(-alpha)).exp()),
            ProcessModel::MovingMaxima { .. } => Ok((-1.0 / x).exp()),
            ProcessModel::Armax { c } => Ok((-1.0 / ((1.0 - c) * x)).exp()),
            ProcessModel::SquaredGarch { .. } => Err(Error::domain("squared GARCH marginal has no closed form")),
        }
    }

    /// `p`-quantile of the marginal law.
    ///
    /// Exact for the Fréchet-marginal models. For squared GARCH it is the
    /// empirical quantile of a seeded path of [`GarchQuantileOptions::samples`]
    /// observations, with the standard error of the i.i.d. bootstrap.
    pub fn marginal_quantile(&self, p: f64) -> Result<Estimate> {
        self.marginal_quantile_with(p, &GarchQuantileOptions::default())
    }

    pub fn marginal_quantile_with(&self, p: f64, opts: &GarchQuantileOptions) -> Result<Estimate> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("quantile level must lie in (0, 1), got {p}")));
        }
        match *self {
            ProcessModel::Iid { alpha, scale } => Ok(Estimate::exact(scale * frechet_quantile(alpha, 1.0, p))),
            ProcessModel::MovingMaxima { .. } => Ok(Estimate::exact(-1.0 / p.ln())),
            ProcessModel::Armax { c } => Ok(Estimate::exact(-1.0 / ((1.0 - c) * p.ln()))),
            ProcessModel::SquaredGarch { .. } => {
                let mut xs = self.generate(opts.samples, opts.seed)?;
                xs.sort_by(f64::total_cmp);
                bootstrap_quantile(&xs, p)
            }
        }
    }

    /// Tail and extremal index of the model.
    pub fn theoretical_law(&self) -> Result<LimitLaw> {
        self.theoretical_law_with(&GarchThetaOptions::default())
    }

    pub fn theoretical_law_with(&self, opts: &GarchThetaOptions) -> Result<LimitLaw> {
        match self {
            ProcessModel::Iid { alpha, scale } => LimitLaw::new(*alpha, 1.0, *scale),
            ProcessModel::MovingMaxima { coeffs } => LimitLaw::new(1.0, coeffs.iter().copied().fold(0.0, f64::max), 1.0),
            ProcessModel::Armax { c } => LimitLaw::new(1.0, 1.0 - c, 1.0 / (1.0 - c)),
            ProcessModel::SquaredGarch { alpha1, beta1, .. } => {
                let theta = garch_extremal_index(*alpha1, *beta1, opts, &Executor::sequential())?;
                LimitLaw::new(theta.alpha, theta.estimate, 1.0)
            }
        }
    }

    /// Appends `n` consecutive observations of the stationary process to `out`.
    pub fn sample_into<R: RngCore + ?Sized>(&self, rng: &mut R, n: usize, out: &mut Vec<f64>) {
        out.reserve(n);
        match self {
            &ProcessModel::Iid { alpha, scale } => {
                out.extend((0..n).map(|_| sample_frechet(rng, alpha, scale)));
            }
            ProcessModel::MovingMaxima { coeffs } => {
                let m = coeffs.len() - 1;
                // Ring of the last m + 1 noises, newest at `head`.
                let mut ring = vec![0.0; m + 1];
                for slot in ring.iter_mut().take(m) {
                    *slot = sample_unit_frechet(rng);
                }
                let mut head = m - 1;
                for _ in 0..n {
                    head = (head + 1) % (m + 1);
                    ring[head] = sample_unit_frechet(rng);
                    let mut x = 0.0f64;
                    for (i, &c) in coeffs.iter().enumerate() {
                        x = x.max(c * ring[(head + m + 1 - i) % (m + 1)]);
                    }
                    out.push(x);
                }
            }
            &ProcessModel::Armax { c } => {
                let mut x = armax_stationary_start(rng, c);
                for _ in 0..n {
                    x = (c * x).max(sample_unit_frechet(rng));
                    out.push(x);
                }
            }
            &ProcessModel::SquaredGarch { alpha0, alpha1, beta1 } => {
                let mut sigma2 = if alpha1 + beta1 < 1.0 { alpha0 / (1.0 - alpha1 - beta1) } else { alpha0 };
                let mut step = |sigma2: &mut f64| {
                    let z = standard_normal(rng);
                    let x2 = *sigma2 * z * z;
                    *sigma2 = alpha0 + (alpha1 * z * z + beta1) * *sigma2;
                    x2
                };
                for _ in 0..GARCH_BURN_IN {
                    step(&mut sigma2);
                }
                for _ in 0..n {
                    out.push(step(&mut sigma2));
                }
            }
        }
    }
}

/// Draws `X_1, ..., X_n` from the stationary law on stream 0 of `seed`.
pub fn generate(model: &ProcessModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    model.generate(n, seed)
}

impl ProcessModel {
    pub fn generate(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::domain("cannot generate an empty sequence"));
        }
        let mut out = Vec::with_capacity(n);
        self.sample_into(&mut stream(seed, 0), n, &mut out);
        Ok(out)
    }
}

/// `X_0 = max_{i >= 0} c^i Z_{-i}` is Fréchet with scale `1 / (1 - c)`, so
/// the stationary start is a single draw.
fn armax_stationary_start<R: RngCore + ?Sized>(rng: &mut R, c: f64) -> f64 {
    sample_unit_frechet(rng) / (1.0 - c)
}

/// Moving maxima driven by explicit noise `Z_{1-m}, ..., Z_n`; returns
/// `X_1, ..., X_n`.
pub fn moving_maxima_from_noise(coeffs: &[f64], noise: &[f64]) -> Vec<f64> {
    let m = coeffs.len() - 1;
    (m..noise.len())
        .map(|t| coeffs.iter().enumerate().map(|(i, &c)| c * noise[t - i]).fold(0.0, f64::max))
        .collect()
}

/// ARMAX recursion from `X_0 = x0` driven by `Z_1, ..., Z_n`.
pub fn armax_from_noise(c: f64, x0: f64, noise: &[f64]) -> Vec<f64> {
    noise
        .iter()
        .scan(x0, |x, &z| {
            *x = (c * *x).max(z);
            Some(*x)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchQuantileOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for GarchQuantileOptions {
    fn default() -> Self {
        GarchQuantileOptions { samples: 1_000_000, seed: 0x6172_6368 }
    }
}

/// Empirical quantile of sorted data with its exact i.i.d.-bootstrap
/// standard error. Under resampling, the number of draws at or below the
/// `j`-th order statistic is Binomial(N, j/N), so the law of the bootstrap
/// quantile's rank is explicit.
fn bootstrap_quantile(sorted: &[f64], p: f64) -> Result<Estimate> {
    use statrs::distribution::{Binomial, DiscreteCDF};
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    let value = sorted[rank - 1];
    let width = (8.0 * (rank as f64).sqrt()).ceil() as usize + 8;
    let (lo, hi) = (rank.saturating_sub(width).max(1), (rank + width).min(n));
    // P(rank* <= j) = P(Bin(N, j/N) >= rank)
    let at_most = |j: usize| -> Result<f64> {
        let b = Binomial::new(j as f64 / n as f64, n as u64).map_err(|e| Error::domain(e.to_string()))?;
        Ok(if rank == 0 { 1.0 } else { 1.0 - b.cdf(rank as u64 - 1) })
    };
    let (mut mean, mut second, mut prev) = (0.0, 0.0, if lo > 1 { at_most(lo - 1)? } else { 0.0 });
    for j in lo..=hi {
        let cdf = if j == n { 1.0 } else { at_most(j)? };
        let w = cdf - prev;
        prev = cdf;
        mean += w * sorted[j - 1];
        second += w * sorted[j - 1] * sorted[j - 1];
    }
    let var = (second - mean * mean).max(0.0);
    Ok(Estimate { value, stderr: Some(var.sqrt()) })
}

fn hermite_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_hermite(GARCH_QUADRATURE_NODES);
        let x = x.into_iter().map(|v| v * std::f64::consts::SQRT_2).collect();
        let w = w.into_iter().map(|v| v / std::f64::consts::PI.sqrt()).collect();
        (x, w)
    })
}

fn normal_mean(g: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = hermite_rule();
    x.iter().zip(w).map(|(&z, &wi)| wi * g(z)).sum()
}

/// `E ln(alpha1 Z^2 + beta1)` for standard normal `Z`.
pub fn garch_log_moment(alpha1: f64, beta1: f64) -> f64 {
    if beta1 == 0.0 {
        // E ln Z^2 = -gamma - ln 2
        const EULER: f64 = 0.577_215_664_901_532_9;
        return alpha1.ln() - EULER - std::f64::consts::LN_2;
    }
    normal_mean(|z| (alpha1 * z * z + beta1).ln())
}

/// `E[(alpha1 Z^2 + beta1)^kappa] - 1`.
pub fn garch_moment_gap(alpha1: f64, beta1: f64, kappa: f64) -> f64 {
    normal_mean(|z| (alpha1 * z * z + beta1).powf(kappa)) - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailIndexOptions {
    pub tol: f64,
    pub alpha_max: f64,
}

impl Default for TailIndexOptions {
    fn default() -> Self {
        TailIndexOptions { tol: 1e-6, alpha_max: 50.0 }
    }
}

/// Positive root of `E[(alpha1 Z^2 + beta1)^kappa] = 1`.
pub fn garch_tail_index(alpha1: f64, beta1: f64) -> Result<f64> {
    garch_tail_index_with(alpha1, beta1, &TailIndexOptions::default())
}

pub fn garch_tail_index_with(alpha1: f64, beta1: f64, opts: &TailIndexOptions) -> Result<f64> {
    if !(alpha1 > 0.0 && beta1 >= 0.0) {
        return Err(Error::domain(format!("need alpha1 > 0 and beta1 >= 0, got {alpha1}, {beta1}")));
    }
    let lyapunov = garch_log_moment(alpha1, beta1);
    if lyapunov >= 0.0 {
        return Err(Error::domain(format!("E ln(alpha1 Z^2 + beta1) = {lyapunov} is not negative")));
    }
    // The moment function is convex, zero at the origin and decreasing
    // there, so it is negative exactly on (0, root).
    let h = |k: f64| garch_moment_gap(alpha1, beta1, k);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while h(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > opts.alpha_max {
            return Err(Error::resource(format!("no sign change of the moment equation below {}", opts.alpha_max)));
        }
    }
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchThetaOptions {
    pub k_max: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for GarchThetaOptions {
    fn default() -> Self {
        GarchThetaOptions { k_max: 100, trials: 100_000, seed: 0x7468_6574 }
    }
}

/// Monte Carlo extremal index of squared GARCH at truncation `k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchTheta {
    pub estimate: f64,
    pub stderr: f64,
    /// Tail index plugged into the expectation.
    pub alpha: f64,
    /// Estimates at truncation k = 1, ..., k_max from the same draws.
    pub by_k: Vec<f64>,
}

const THETA_BATCH: usize = 1024;

/// Estimates
/// `E(|Z_1|^{2a} - max_{j=2..k+1} |Z_j^2 prod_{i=1..j}(alpha1 Z_{i-1}^2 + beta1)|^a)_+ / E|Z_1|^{2a}`
/// at `k = k_max`, with `a` the tail index from [`garch_tail_index`].
///
/// Numerator and denominator are averaged over the same draws, so every
/// estimate lies in `[0, 1]`; the standard error is the delta-method one for
/// a ratio of means.
pub fn garch_extremal_index(alpha1: f64, beta1: f64, opts: &GarchThetaOptions, exec: &Executor) -> Result<GarchTheta> {
    if opts.k_max < 1 || opts.trials < 2 {
        return Err(Error::domain("need k_max >= 1 and trials >= 2"));
    }
    let alpha = garch_tail_index(alpha1, beta1)?;
    let k_max = opts.k_max;
    let batches = opts.trials.div_ceil(THETA_BATCH);
    let partial = exec.map_trials(batches, |b| {
        let mut rng = stream(opts.seed, b as u64);
        let count = THETA_BATCH.min(opts.trials - b * THETA_BATCH);
        let mut acc = ThetaSums { by_k: vec![0.0; k_max], ..ThetaSums::default() };
        let mut z = vec![0.0; k_max + 2];
        for _ in 0..count {
            z.iter_mut().for_each(|v| *v = standard_normal(&mut rng));
            let lead = (z[1] * z[1]).powf(alpha);
            let mut prod = alpha1 * z[0] * z[0] + beta1;
            let mut worst = 0.0f64;
            let mut v = 0.0;
            for j in 2..=k_max + 1 {
                prod *= alpha1 * z[j - 1] * z[j - 1] + beta1;
                worst = worst.max((z[j] * z[j] * prod).powf(alpha));
                v = (lead - worst).max(0.0);
                acc.by_k[j - 2] += v;
            }
            acc.lead += lead;
            acc.vv += v * v;
            acc.ll += lead * lead;
            acc.vl += v * lead;
        }
        acc
    });
    let mut total = ThetaSums { by_k: vec![0.0; k_max], ..ThetaSums::default() };
    for acc in partial {
        total.by_k.iter_mut().zip(&acc.by_k).for_each(|(a, b)| *a += b);
        total.lead += acc.lead;
        total.vv += acc.vv;
        total.ll += acc.ll;
        total.vl += acc.vl;
    }
    if total.lead <= 0.0 {
        return Err(Error::resource("all sampled |Z_1| vanished; increase trials"));
    }
    let trials = opts.trials as f64;
    let by_k: Vec<f64> = total.by_k.iter().map(|s| s / total.lead).collect();
    let theta = by_k[k_max - 1];
    // Var(v - theta lead) / (N mean(lead)^2)
    let resid = (total.vv - 2.0 * theta * total.vl + theta * theta * total.ll) / trials;
    let mean_lead = total.lead / trials;
    Ok(GarchTheta {
        estimate: theta,
        stderr: (resid.max(0.0) / trials).sqrt() / mean_lead,
        alpha,
        by_k,
    })
}

#[derive(Default)]
struct ThetaSums {
    by_k: Vec<f64>,
    lead: f64,
    vv: f64,
    ll: f64,
    vl: f64,
}
