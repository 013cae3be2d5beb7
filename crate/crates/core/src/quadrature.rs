//! Numerical integration rules.

/// Nodes and weights of the `n`-point Gauss–Hermite rule for the weight
/// `exp(-x^2)`, nodes in increasing order.
///
/// Roots of the orthonormal Hermite polynomial are bracketed on a grid finer
/// than the smallest root spacing and refined by bisection. The polynomial
/// grows like `exp(x^2 / 2)`, which limits `n` to a few hundred.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!((1..=600).contains(&n), "Gauss-Hermite order must lie in 1..=600");
    let nf = n as f64;
    let mut roots = Vec::with_capacity(n.div_ceil(2));
    if n % 2 == 1 {
        roots.push(0.0);
    }
    let upper = (2.0 * nf + 1.0).sqrt() + 1.0;
    let step = 0.05 * std::f64::consts::PI / (2.0 * nf + 1.0).sqrt();
    let mut a = step * 0.5;
    let mut fa = hermite(n, a).0;
    while a < upper && roots.len() < n.div_ceil(2) {
        let b = a + step;
        let fb = hermite(n, b).0;
        if fa == 0.0 || fa.signum() != fb.signum() {
            let (mut lo, mut hi, flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = hermite(n, mid).0;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    assert_eq!(roots.len(), n.div_ceil(2), "missed a Hermite root");
    let weight = |z: f64| {
        let pp = (2.0 * nf).sqrt() * hermite(n, z).1;
        2.0 / (pp * pp)
    };
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for &z in roots.iter().rev() {
        if z > 0.0 {
            x.push(-z);
            w.push(weight(z));
        }
    }
    for &z in &roots {
        x.push(z);
        w.push(weight(z));
    }
    (x, w)
}

/// Orthonormal Hermite polynomials `(p_n(z), p_{n-1}(z))`.
fn hermite(n: usize, z: f64) -> (f64, f64) {
    const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
    let (mut p1, mut p2) = (PIM4, 0.0f64);
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

/// `E[g(Z)]` for standard normal `Z` by an `n`-point Gauss–Hermite rule.
pub fn normal_expectation(n: usize, g: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_hermite(n);
    let s: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * g(std::f64::consts::SQRT_2 * xi)).sum();
    s / std::f64::consts::PI.sqrt()
}

/// Adaptive Simpson quadrature on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}
