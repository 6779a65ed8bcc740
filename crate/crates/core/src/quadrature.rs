//! Adaptive composite Gauss–Legendre quadrature.

use std::sync::OnceLock;

const ORDER: usize = 20;
const MAX_DEPTH: u32 = 40;

fn rule() -> &'static [(f64, f64); ORDER] {
    static RULE: OnceLock<[(f64, f64); ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut out = [(0.0, 0.0); ORDER];
        for i in 0..n {
            // Newton on P_n starting from the Chebyshev-like guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            out[i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

fn panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    rule().iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

fn refine(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = panel(f, a, m);
    let right = panel(f, m, b);
    let both = left + right;
    if depth >= MAX_DEPTH || (both - whole).abs() <= tol {
        return both;
    }
    refine(f, a, m, left, 0.5 * tol, depth + 1) + refine(f, m, b, right, 0.5 * tol, depth + 1)
}

/// Integrates `f` over `[a, b]`, bisecting panels until two consecutive
/// levels agree to `tol` (absolute).
pub(crate) fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let whole = panel(&f, a, b);
    refine(&f, a, b, whole, tol, 0)
}

/// Same as [`integrate`] but splits `[a, b]` at the given interior points
/// first (kinks of the integrand).
pub(crate) fn integrate_with_breaks(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut lo = a;
    let mut acc = 0.0;
    let pieces = pts.len() + 1;
    for hi in pts.into_iter().chain(std::iter::once(b)) {
        acc += integrate(&f, lo, hi, tol / pieces as f64);
        lo = hi;
    }
    acc
}
