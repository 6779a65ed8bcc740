//! Centered cardinal B-splines and the smoothed absolute value.
//!
//! `M_m` is the `m`-fold self-convolution of the indicator of `[-1/2, 1/2]`,
//! `M_{m,ε}(x) = M_m(x/ε)/ε` its rescaled version. Convolving `|x|` with
//! `M_{m,ε}` gives an even, convex, `C^{m}` function that coincides with `|x|`
//! outside `[-mε/2, mε/2]`; its second derivative is `2 M_{m,ε}`.
//!
//! All truncated-power sums are evaluated at `-|x|`, where only the knots to
//! the left of the point contribute. Near the support edge that leaves one or
//! two small terms instead of `m + 1` large cancelling ones.

use crate::{invalid, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Order-`m` centered cardinal B-spline with scale `ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineProfile {
    m: u32,
    eps: f64,
}

impl SplineProfile {
    pub fn new(m: u32, eps: f64) -> Result<Self> {
        if m == 0 {
            return Err(invalid("spline order must be at least 1"));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(invalid(format!("spline scale must be positive, got {eps}")));
        }
        Ok(Self { m, eps })
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Half-width of the support, `mε/2`.
    pub fn support_radius(&self) -> f64 {
        0.5 * self.m as f64 * self.eps
    }

    /// `M_{m,ε}(x)`.
    pub fn eval(&self, x: f64) -> f64 {
        unit_bspline(self.m, x / self.eps) / self.eps
    }

    /// `(|·| ∗ M_{m,ε})(x) = ε f(x/ε)`.
    pub fn smoothed_abs(&self, x: f64) -> f64 {
        let ax = x.abs();
        if ax >= self.support_radius() {
            return ax;
        }
        self.eps * unit_smoothed_abs(self.m, ax / self.eps)
    }

    /// First derivative of [`smoothed_abs`](Self::smoothed_abs). Scale
    /// invariant: equals `f'(x/ε)` without a `1/ε` factor.
    pub fn smoothed_abs_d1(&self, x: f64) -> f64 {
        unit_smoothed_abs_d1(self.m, x / self.eps)
    }

    /// Second derivative, `2 M_{m,ε}(x)`.
    pub fn smoothed_abs_d2(&self, x: f64) -> f64 {
        2.0 * self.eval(x)
    }
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// `Σ_k (-1)^k C(m,k) (y - k + m/2)_+^p` for `y ≤ 0`.
fn truncated_power_sum(m: u32, y: f64, p: i32) -> f64 {
    let half = 0.5 * m as f64;
    let mut acc = Compensated::default();
    for k in 0..=m {
        let base = y - k as f64 + half;
        if base <= 0.0 {
            break;
        }
        let term = binomial(m, k) * base.powi(p);
        acc.add(if k % 2 == 0 { term } else { -term });
    }
    acc.value()
}

/// `M_m(x)` at unit scale.
pub(crate) fn unit_bspline(m: u32, x: f64) -> f64 {
    let ax = x.abs();
    let half = 0.5 * m as f64;
    if ax >= half {
        return 0.0;
    }
    if m == 1 {
        return 1.0;
    }
    truncated_power_sum(m, -ax, m as i32 - 1) / factorial(m - 1)
}

/// `(|·| ∗ M_m)(x)` at unit scale.
pub(crate) fn unit_smoothed_abs(m: u32, x: f64) -> f64 {
    let ax = x.abs();
    if ax >= 0.5 * m as f64 {
        return ax;
    }
    2.0 * truncated_power_sum(m, -ax, m as i32 + 1) / factorial(m + 1) + ax
}

/// Derivative of `|·| ∗ M_m` at unit scale (odd, in `[-1, 1]`).
pub(crate) fn unit_smoothed_abs_d1(m: u32, x: f64) -> f64 {
    let ax = x.abs();
    if ax >= 0.5 * m as f64 {
        return x.signum();
    }
    if x == 0.0 {
        return 0.0;
    }
    let tail = 2.0 * truncated_power_sum(m, -ax, m as i32) / factorial(m);
    x.signum() * (1.0 - tail)
}

/// `M_m(0)` from the closed alternating sum
/// `m / 2^(m-1) · Σ_{k ≤ m/2} (-1)^k (m-2k)^(m-1) / (k! (m-k)!)`,
/// evaluated in exact rational arithmetic.
pub fn bspline_center_value(m: u32) -> f64 {
    assert!(m >= 1, "order must be positive");
    if m == 1 {
        return 1.0;
    }
    let big = |v: u64| BigInt::from(v);
    let fact = |n: u32| (1..=n as u64).fold(BigInt::one(), |acc, i| acc * big(i));
    let mut sum = BigRational::zero();
    for k in 0..=m / 2 {
        let num = num_traits::pow(big((m - 2 * k) as u64), (m - 1) as usize);
        let den = fact(k) * fact(m - k);
        let term = BigRational::new(num, den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let scale = BigRational::new(big(m as u64), num_traits::pow(big(2), (m - 1) as usize));
    (sum * scale).to_f64().unwrap_or(f64::NAN)
}

/// Huber function `½x²` for `|x| ≤ λ`, `λ(|x| - λ/2)` beyond.
pub fn huber(lambda: f64, x: f64) -> f64 {
    let ax = x.abs();
    if ax <= lambda {
        0.5 * x * x
    } else {
        lambda * (ax - 0.5 * lambda)
    }
}

/// One polynomial piece of `|·| ∗ M_m` on `[lo, hi]` (unit scale, `x ≥ 0`);
/// `coeffs[n]` multiplies `x^n`. The last piece is `x` on `[m/2, ∞)`.
#[derive(Debug, Clone)]
pub(crate) struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub coeffs: Vec<f64>,
}

impl Piece {
    pub fn derivative(&self) -> Piece {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, c)| n as f64 * c)
            .collect();
        Piece { lo: self.lo, hi: self.hi, coeffs }
    }

    #[cfg(test)]
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Monomial pieces of `|·| ∗ M_m` on `[0, ∞)` from the truncated-power form,
/// with coefficients computed exactly before rounding.
pub(crate) fn smoothed_abs_pieces(m: u32) -> Vec<Piece> {
    let big = |v: i64| BigInt::from(v);
    let rat = |n: i64, d: i64| BigRational::new(big(n), big(d));
    let degree = (m + 1) as usize;
    let fact = (1..=degree as i64).fold(BigInt::one(), |acc, i| acc * big(i));
    let lead = BigRational::new(big(2), fact);
    let knots: Vec<BigRational> = (0..=m as i64).map(|k| rat(2 * k - m as i64, 2)).collect();

    let mut breaks = vec![BigRational::zero()];
    breaks.extend(knots.iter().filter(|a| **a > BigRational::zero()).cloned());

    let binom = |n: usize, k: usize| -> BigInt {
        let mut acc = BigInt::one();
        for i in 0..k {
            acc = acc * big((n - i) as i64) / big(i as i64 + 1);
        }
        acc
    };

    let mut pieces = Vec::new();
    for w in breaks.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let mut coeffs = vec![BigRational::zero(); degree + 1];
        for (k, a) in knots.iter().enumerate() {
            if a >= hi {
                break;
            }
            let sign = if k % 2 == 0 { 1 } else { -1 };
            let outer = lead.clone() * BigRational::from_integer(big(sign) * binom(m as usize, k));
            // (x - a)^M = Σ_n C(M, n) x^n (-a)^(M-n)
            let neg_a = -a.clone();
            for (n, c) in coeffs.iter_mut().enumerate() {
                let p = num_traits::pow(neg_a.clone(), degree - n);
                *c += outer.clone() * BigRational::from_integer(binom(degree, n)) * p;
            }
        }
        coeffs[1] -= BigRational::one();
        pieces.push(Piece {
            lo: lo.to_f64().unwrap(),
            hi: hi.to_f64().unwrap(),
            coeffs: coeffs.iter().map(|c| c.to_f64().unwrap()).collect(),
        });
    }
    pieces.push(Piece {
        lo: 0.5 * m as f64,
        hi: f64::INFINITY,
        coeffs: vec![0.0, 1.0],
    });
    pieces
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sp(m: u32, eps: f64) -> SplineProfile {
        SplineProfile::new(m, eps).unwrap()
    }

    /// `M_m` by repeated numerical convolution of the box function: the
    /// definition, independent of the truncated-power formula.
    fn bspline_by_convolution(m: u32, x: f64) -> f64 {
        if m == 1 {
            return if x.abs() < 0.5 { 1.0 } else { 0.0 };
        }
        // M_m(x) = ∫_{-1/2}^{1/2} M_{m-1}(x - t) dt
        let n = 400;
        let h = 1.0 / n as f64;
        (0..n)
            .map(|i| {
                let t = -0.5 + (i as f64 + 0.5) * h;
                bspline_by_convolution_cached(m - 1, x - t)
            })
            .sum::<f64>()
            * h
    }

    fn bspline_by_convolution_cached(m: u32, x: f64) -> f64 {
        // one level of numerical convolution on top of the exact M_{m}
        // would not be independent, so recurse only to m = 2 (exact hat)
        if m == 2 {
            (1.0 - x.abs()).max(0.0)
        } else {
            bspline_by_convolution(m, x)
        }
    }

    #[test]
    fn bspline_examples() {
        assert_relative_eq!(sp(2, 1.0).eval(0.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(sp(4, 1.0).eval(0.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(sp(2, 0.5).eval(0.3), 0.8, epsilon = 1e-14);
        assert_eq!(sp(2, 1.0).eval(1.5), 0.0);
        assert_eq!(sp(1, 0.5).eval(0.2), 2.0);
        assert_eq!(sp(1, 0.5).eval(0.3), 0.0);
    }

    #[test]
    fn bspline_matches_convolution_definition() {
        for &x in &[0.0, 0.3, 0.77, 1.2, 1.9] {
            let conv = bspline_by_convolution(3, x);
            assert!((unit_bspline(3, x) - conv).abs() < 1e-5, "x={x}");
        }
        // m=2, eps=0.5 at x=0.3: (1/0.5) M_2(0.6)
        let conv = bspline_by_convolution_cached(2, 0.6) / 0.5;
        assert_relative_eq!(sp(2, 0.5).eval(0.3), conv, epsilon = 1e-12);
    }

    #[test]
    fn m4_matches_piecewise_cubic() {
        for i in 0..=40 {
            let x = -2.0 + i as f64 * 0.1;
            let ax = f64::abs(x);
            let expected = if ax <= 1.0 {
                (3.0 * ax.powi(3) - 6.0 * x * x + 4.0) / 6.0
            } else if ax <= 2.0 {
                (2.0 - ax).powi(3) / 6.0
            } else {
                0.0
            };
            assert!((unit_bspline(4, x) - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn center_value_examples() {
        assert_relative_eq!(bspline_center_value(2), 1.0, epsilon = 1e-15);
        assert_relative_eq!(bspline_center_value(4), 2.0 / 3.0, epsilon = 1e-15);
        for m in 2..=12 {
            assert!((bspline_center_value(m) - sp(m, 1.0).eval(0.0)).abs() < 1e-12, "m={m}");
        }
        let m = 64;
        let ratio = bspline_center_value(m) / (6.0 / (std::f64::consts::PI * m as f64)).sqrt();
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn integrates_to_one_and_is_even() {
        for &(m, eps) in &[(2, 1.0), (3, 0.4), (4, 0.1), (6, 2.0)] {
            let p = sp(m, eps);
            let r = p.support_radius();
            let n = 20_000;
            let h = 2.0 * r / n as f64;
            let integral: f64 = (0..n).map(|i| p.eval(-r + (i as f64 + 0.5) * h)).sum::<f64>() * h;
            assert!((integral - 1.0).abs() < 1e-6, "m={m} eps={eps}: {integral}");
            for i in 0..50 {
                let x = -r * 1.2 + i as f64 * r * 0.05;
                assert_eq!(p.eval(x), p.eval(-x));
                assert!(p.eval(x) >= 0.0);
                if x.abs() >= r {
                    assert_eq!(p.eval(x), 0.0);
                }
            }
        }
    }

    #[test]
    fn smoothed_abs_examples() {
        assert_relative_eq!(sp(2, 1.0).smoothed_abs(0.0), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(sp(4, 1.0).smoothed_abs(0.0), 7.0 / 15.0, epsilon = 1e-15);
        assert_eq!(sp(2, 1.0).smoothed_abs(2.0), 2.0);
        assert_relative_eq!(sp(2, 1.0).smoothed_abs_d1(0.5), 0.75, epsilon = 1e-15);
        assert_eq!(sp(2, 1.0).smoothed_abs_d1(0.0), 0.0);
        assert_relative_eq!(sp(2, 1.0).smoothed_abs_d2(0.0), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn smoothed_abs_matches_m4_closed_form() {
        for i in 0..=50 {
            let x = i as f64 * 0.05;
            let expected = if x < 1.0 {
                x.powi(5) / 20.0 - x.powi(4) / 6.0 + 2.0 * x * x / 3.0 + 7.0 / 15.0
            } else if x < 2.0 {
                (2.0 - x).powi(5) / 60.0 + x
            } else {
                x
            };
            assert!((unit_smoothed_abs(4, x) - expected).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn epsilon_sweep_bounded_by_radius() {
        for &eps in &[1.0, 0.5, 0.1, 0.01, 0.001] {
            let p = sp(2, eps);
            for i in -100..=100 {
                let x = i as f64 * 0.03;
                assert!((p.smoothed_abs(x) - x.abs()).abs() <= eps + 1e-15);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(m, eps) in &[(2, 1.0), (4, 0.3), (3, 0.7)] {
            let p = sp(m, eps);
            for _ in 0..100 {
                let x: f64 = rng.gen_range(-1.5..1.5) * p.support_radius();
                let h = 1e-6 * eps;
                let fd = (p.smoothed_abs(x + h) - p.smoothed_abs(x - h)) / (2.0 * h);
                let d1 = p.smoothed_abs_d1(x);
                assert!((d1 - fd).abs() <= 1e-6 * d1.abs().max(1e-3), "x={x} {d1} {fd}");
                let fd2 = (p.smoothed_abs_d1(x + h) - p.smoothed_abs_d1(x - h)) / (2.0 * h);
                assert!((p.smoothed_abs_d2(x) - fd2).abs() < 1e-4 / eps);
            }
        }
    }

    #[test]
    fn matches_direct_convolution_quadrature() {
        for &m in &[2, 4] {
            for &eps in &[0.1, 1.0] {
                let p = sp(m, eps);
                let r = p.support_radius();
                let knots: Vec<f64> = (0..=m).map(|k| (k as f64 - 0.5 * m as f64) * eps).collect();
                for i in 0..=40 {
                    let x = -5.0 + i as f64 * 0.25;
                    let mut breaks = knots.clone();
                    breaks.push(x);
                    let conv = crate::quadrature::integrate_with_breaks(
                        |y| (x - y).abs() * p.eval(y),
                        -r,
                        r,
                        &breaks,
                        1e-14,
                    );
                    assert!((p.smoothed_abs(x) - conv).abs() < 1e-9, "m={m} eps={eps} x={x}");
                }
            }
        }
    }

    #[test]
    fn pieces_agree_with_truncated_power_sum() {
        for m in 1..=8 {
            let pieces = smoothed_abs_pieces(m);
            for piece in &pieces {
                let hi = if piece.hi.is_finite() { piece.hi } else { piece.lo + 3.0 };
                for i in 0..=10 {
                    let x = piece.lo + (hi - piece.lo) * i as f64 / 10.0;
                    assert!(
                        (piece.eval(x) - unit_smoothed_abs(m, x)).abs() < 1e-12,
                        "m={m} x={x}"
                    );
                    assert!(
                        (piece.derivative().eval(x) - unit_smoothed_abs_d1(m, x)).abs() < 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn huber_piecewise() {
        assert_eq!(huber(1.0, 0.5), 0.125);
        assert_eq!(huber(1.0, -3.0), 2.5);
        // λ (|·| ∗ M_{1,2λ}) - λ²/2
        for &x in &[0.0, 0.4, 0.9, 1.7, -2.5] {
            let lam = 1.0;
            let alt = lam * sp(1, 2.0 * lam).smoothed_abs(x) - 0.5 * lam * lam;
            assert!((huber(lam, x) - alt).abs() < 1e-14);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn positive_even_and_exact_outside(m in 1u32..7, eps in 0.01f64..3.0, x in -10.0f64..10.0) {
                let p = SplineProfile::new(m, eps).unwrap();
                let v = p.smoothed_abs(x);
                prop_assert!(v > 0.0);
                prop_assert_eq!(v, p.smoothed_abs(-x));
                if x.abs() >= p.support_radius() {
                    prop_assert_eq!(v, x.abs());
                }
                prop_assert!(p.smoothed_abs_d2(x) >= 0.0);
            }

            #[test]
            fn midpoint_convex(m in 2u32..6, eps in 0.05f64..2.0, a in -4.0f64..4.0, b in -4.0f64..4.0) {
                let p = SplineProfile::new(m, eps).unwrap();
                let mid = p.smoothed_abs(0.5 * (a + b));
                prop_assert!(mid <= 0.5 * (p.smoothed_abs(a) + p.smoothed_abs(b)) + 1e-12);
            }
        }
    }
}
