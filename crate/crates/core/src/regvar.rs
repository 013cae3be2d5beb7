//! Regularly varying marginals: Fréchet laws, normalizing constants and
//! tail diagnostics.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ProcessModel;
use crate::quadrature::adaptive_simpson;
use crate::rng::uniform_open;

/// Fréchet limit `P(M <= x) = exp(-theta x^{-alpha})`, together with the
/// marginal scale of the generating model where one exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    pub alpha: f64,
    pub theta: f64,
    pub scale: f64,
}

impl LimitLaw {
    pub fn new(alpha: f64, theta: f64, scale: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::domain(format!("tail index must be positive, got {alpha}")));
        }
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::domain(format!("extremal index must lie in (0, 1], got {theta}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!("scale must be positive, got {scale}")));
        }
        Ok(LimitLaw { alpha, theta, scale })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        frechet_cdf(self.alpha, self.theta, x)
    }

    /// Exponent measure of the limiting extremal process, `nu(x, inf)`.
    pub fn exponent_measure(&self, x: f64) -> f64 {
        self.theta * x.powf(-self.alpha)
    }
}

/// `exp(-theta x^{-alpha})` for `x > 0`, zero otherwise.
pub fn frechet_cdf(alpha: f64, theta: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-theta * x.powf(-alpha)).exp()
    }
}

/// Inverse of [`frechet_cdf`] for `p` in (0, 1).
pub fn frechet_quantile(alpha: f64, theta: f64, p: f64) -> f64 {
    (-p.ln() / theta).powf(-1.0 / alpha)
}

/// Inverse transform `scale (-ln u)^{-1/alpha}`.
#[inline]
pub fn frechet_from_uniform(u: f64, alpha: f64, scale: f64) -> f64 {
    let e = -u.ln();
    if alpha == 1.0 {
        scale / e
    } else {
        scale * e.powf(-1.0 / alpha)
    }
}

/// Draws from the Fréchet law with CDF `exp(-(x/scale)^{-alpha})`.
#[inline]
pub fn sample_frechet<R: RngCore + ?Sized>(rng: &mut R, alpha: f64, scale: f64) -> f64 {
    frechet_from_uniform(uniform_open(rng), alpha, scale)
}

/// Unit Fréchet draw, `1 / (-ln U)`.
#[inline]
pub fn sample_unit_frechet<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    1.0 / -uniform_open(rng).ln()
}

/// `a_n`: the `(1 - 1/n)`-quantile of the marginal of `X_1`, so that
/// `n P(X_1 > a_n) = 1`.
///
/// Closed form for the i.i.d., moving maxima and ARMAX models; a Monte Carlo
/// quantile for squared GARCH (see [`ProcessModel::marginal_quantile`]).
pub fn normalizer_an(model: &ProcessModel, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("normalizer needs n >= 2, got {n}")));
    }
    Ok(model.marginal_quantile(1.0 - 1.0 / n as f64)?.value)
}

/// Hill estimator of the tail index from the `k` largest observations.
pub fn hill_estimator(sample: &[f64], k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::domain(format!("Hill estimator needs k >= 2, got {k}")));
    }
    let mut pos: Vec<f64> = sample.iter().copied().filter(|&x| x > 0.0 && x.is_finite()).collect();
    if pos.len() < k + 1 {
        return Err(Error::domain(format!("need at least {} positive values, have {}", k + 1, pos.len())));
    }
    pos.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
    let pivot = pos[k].ln();
    let mean = pos[..k].iter().map(|x| x.ln() - pivot).sum::<f64>() / k as f64;
    if mean <= 0.0 {
        return Err(Error::domain("top order statistics are all equal"));
    }
    Ok(1.0 / mean)
}

/// Truncated-moment ratio `E[X^s 1{X < eps a_n}] / ((eps a_n)^s P(X > eps a_n))`
/// for a Fréchet(`alpha`, scale 1) marginal. Tends to `alpha / (s - alpha)`.
pub fn karamata_ratio(alpha: f64, s: f64, eps: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("tail index must be positive, got {alpha}")));
    }
    if !(s > alpha) {
        return Err(Error::domain(format!("moment order s = {s} must exceed alpha = {alpha}")));
    }
    if !(eps > 0.0) || n < 2 {
        return Err(Error::domain("need eps > 0 and n >= 2"));
    }
    let an = frechet_quantile(alpha, 1.0, 1.0 - 1.0 / n as f64);
    let y = eps * an;
    // w = x^{-alpha}: E[X^s 1{X < y}] = int_{w0}^inf w^{-s/alpha} e^{-w} dw,
    // integrated in v = ln w.
    let w0 = y.powf(-alpha);
    let power = 1.0 - s / alpha;
    let integrand = |v: f64| (power * v - v.exp()).exp();
    let (a, b) = (w0.ln(), 60f64.ln().max(w0.ln() + 1.0));
    let scale = w0.powf(power) / (s / alpha - 1.0);
    let numerator = adaptive_simpson(&integrand, a, b, 1e-11 * scale);
    let denominator = y.powf(s) * -(-w0).exp_m1();
    Ok(numerator / denominator)
}
