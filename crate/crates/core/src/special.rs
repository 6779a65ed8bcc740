//! Gamma and Beta function helpers.
//!
//! The incomplete Beta function is evaluated by the modified Lentz algorithm
//! on its standard continued fraction, switching to the complement when
//! `x > (a + 1) / (a + b + 2)` where the fraction converges slowly.

pub use statrs::function::gamma::ln_gamma;

const CF_TOL: f64 = 1e-16;
const CF_MAX_ITER: usize = 5000;
const TINY: f64 = 1e-300;

/// Complete Beta function `B(a, b) = Γ(a)Γ(b)/Γ(a+b)`.
pub fn beta(a: f64, b: f64) -> f64 {
    (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

/// Stateless namespace for the (non-regularized) incomplete Beta function
/// `B_x(a, b) = ∫_0^x t^(a-1) (1-t)^(b-1) dt`.
#[derive(Debug, Clone, Copy, Default)]
pub struct IncompleteBeta;

impl IncompleteBeta {
    /// `B_x(a, b)` for `a, b > 0` and `x ∈ [0, 1]` (clamped).
    pub fn lower(x: f64, a: f64, b: f64) -> f64 {
        debug_assert!(a > 0.0 && b > 0.0);
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return beta(a, b);
        }
        if x > (a + 1.0) / (a + b + 2.0) {
            beta(a, b) - Self::direct(1.0 - x, b, a)
        } else {
            Self::direct(x, a, b)
        }
    }

    /// `B(a, b) - B_x(a, b) = ∫_x^1 t^(a-1) (1-t)^(b-1) dt`, computed without
    /// subtracting from the complete integral when that would cancel.
    pub fn upper(x: f64, a: f64, b: f64) -> f64 {
        Self::lower(1.0 - x, b, a)
    }

    /// Regularized form `I_x(a, b) = B_x(a, b) / B(a, b)`.
    pub fn regularized(x: f64, a: f64, b: f64) -> f64 {
        Self::lower(x, a, b) / beta(a, b)
    }

    fn direct(x: f64, a: f64, b: f64) -> f64 {
        let front = (a * x.ln() + b * (1.0 - x).ln()).exp() / a;
        front * continued_fraction(x, a, b)
    }
}

/// Lentz evaluation of the continued fraction for `I_x(a, b)`
/// (the `1 / (1 + d1 / (1 + d2 / ...))` form).
fn continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_TOL {
            break;
        }
    }
    h
}
