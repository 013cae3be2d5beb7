//! The extremal process driven by a Poisson random measure with exponent
//! measure `nu(x, inf) = theta x^{-alpha}`.

use rand::RngCore;
use statrs::distribution::{DiscreteCDF, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::cadlag::StepFunction;
use crate::error::{Error, Result};
use crate::rng::{stream, uniform_open};

/// Marks below this level are not simulated unless a caller asks otherwise.
pub const DEFAULT_FLOOR: f64 = 0.05;

fn check_law(alpha: f64, theta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite() && theta > 0.0 && theta.is_finite()) {
        return Err(Error::domain(format!("need alpha > 0 and theta > 0, got {alpha}, {theta}")));
    }
    Ok(())
}

/// Poisson draw by inverse transform, searching outward from the mode so
/// large means neither underflow nor walk from zero.
pub fn sample_poisson<R: RngCore + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let mode = mean.floor();
    let mut p = (mode * mean.ln() - mean - ln_gamma(mode + 1.0)).exp();
    let mut cdf = Poisson::new(mean).map(|d| d.cdf(mode as u64)).unwrap_or(1.0);
    let mut k = mode as u64;
    let u = uniform_open(rng);
    if u <= cdf {
        while k > 0 && u <= cdf - p {
            cdf -= p;
            p *= k as f64 / mean;
            k -= 1;
        }
    } else {
        loop {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            if u <= cdf || p < f64::MIN_POSITIVE {
                break;
            }
        }
    }
    k
}

/// One path of the extremal process on `[0, 1]`, restricted to marks above
/// `floor`, drawn from `rng`.
pub fn sample_extremal_path<R: RngCore + ?Sized>(rng: &mut R, alpha: f64, theta: f64, floor: f64) -> StepFunction {
    let count = sample_poisson(rng, theta * floor.powf(-alpha));
    let mut atoms: Vec<(f64, f64)> = (0..count)
        .map(|_| {
            let t = uniform_open(rng);
            let x = floor * uniform_open(rng).powf(-1.0 / alpha);
            (t, x)
        })
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut jumps: Vec<(f64, f64)> = Vec::new();
    let mut current = 0.0f64;
    for (t, x) in atoms {
        if x > current {
            current = x;
            match jumps.last_mut() {
                Some(last) if last.0 == t => last.1 = x,
                _ => jumps.push((t, x)),
            }
        }
    }
    StepFunction::from_parts_unchecked(0.0, jumps)
}

/// Extremal process path with initial value 0. For levels `x >= floor`,
/// `P(path(t) <= x) = exp(-t theta x^{-alpha})` exactly.
pub fn simulate_extremal_process(alpha: f64, theta: f64, floor: f64, seed: u64) -> Result<StepFunction> {
    check_law(alpha, theta)?;
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::domain(format!("floor must be positive, got {floor}")));
    }
    Ok(sample_extremal_path(&mut stream(seed, 0), alpha, theta, floor))
}

/// `P(M(t_1) <= x_1, ..., M(t_k) <= x_k)` for the extremal process.
pub fn extremal_fidi_prob(alpha: f64, theta: f64, times: &[f64], levels: &[f64]) -> Result<f64> {
    check_law(alpha, theta)?;
    if times.is_empty() || times.len() != levels.len() {
        return Err(Error::domain(format!(
            "need equally many times and levels (k >= 1), got {} and {}",
            times.len(),
            levels.len()
        )));
    }
    if times.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::domain("times must lie in (0, 1]"));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("times must be strictly increasing"));
    }
    if levels.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::domain("levels must be positive"));
    }
    let mut exponent = 0.0;
    let mut floor_level = f64::INFINITY;
    for j in (0..times.len()).rev() {
        floor_level = floor_level.min(levels[j]);
        let prev = if j == 0 { 0.0 } else { times[j - 1] };
        exponent += (times[j] - prev) * theta * floor_level.powf(-alpha);
    }
    Ok((-exponent).exp())
}
