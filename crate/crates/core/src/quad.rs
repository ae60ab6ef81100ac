//! Quadrature helpers: periodic trapezoid means, Gauss-Legendre panels, adaptive
//! Simpson, and a low-discrepancy sequence for sampled grids.

/// Mean of f over one period by the n-point uniform rule (the trapezoid rule for
/// periodic integrands, which is spectrally accurate for analytic ones).
pub fn periodic_mean(f: &mut impl FnMut(f64) -> f64, t0: f64, period: f64, n: usize) -> f64 {
    let h = period / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        acc += f(t0 + h * i as f64);
    }
    acc / n as f64
}

/// Doubles the node count until the mean changes by less than tol, starting at n0.
/// Returns (value, nodes_used, converged).
pub fn periodic_mean_adaptive(
    f: &mut impl FnMut(f64) -> f64,
    t0: f64,
    period: f64,
    n0: usize,
    tol: f64,
    n_max: usize,
) -> (f64, usize, bool) {
    let mut n = n0.max(4);
    let mut prev = periodic_mean(f, t0, period, n);
    loop {
        let n2 = n * 2;
        if n2 > n_max {
            return (prev, n, false);
        }
        let next = periodic_mean(f, t0, period, n2);
        if (next - prev).abs() <= tol * next.abs().max(1.0) {
            return (next, n2, true);
        }
        prev = next;
        n = n2;
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// ∫_a^b f by fixed-order Gauss-Legendre on uniform panels.
pub fn integrate_gl_panels(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
    nodes: &[(f64, f64)],
) -> f64 {
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for &(x, w) in nodes {
            acc += w * f(mid + 0.5 * h * x);
        }
    }
    acc * 0.5 * h
}

/// Adaptive Simpson with absolute tolerance; robust on integrands with isolated
/// kinks or jumps (refinement concentrates there).
pub fn adaptive_simpson(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    adaptive_simpson_noisy(f, a, b, tol, 0.0)
}

/// Adaptive Simpson for integrands whose evaluations carry an absolute noise
/// (e.g. values that are themselves inner quadratures). Refinement stops once the
/// Simpson defect is indistinguishable from noise · length, which keeps the
/// recursion from chasing noise into a full tree.
pub fn adaptive_simpson_noisy(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    eval_noise: f64,
) -> f64 {
    let fa = f(a);
    let fm = f(0.5 * (a + b));
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, eval_noise, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    noise: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let floor = 15.0 * tol.max(noise * (b - a));
    if depth == 0 || delta.abs() <= floor {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, noise, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, noise, depth - 1)
    }
}

/// Halton low-discrepancy value of rank i in the given base, in (0, 1).
pub fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}
