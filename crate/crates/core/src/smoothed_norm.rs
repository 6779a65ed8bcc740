//! Radial profiles `F = I_d[f]` built with the Riemann–Liouville fractional
//! integral
//!
//! ```text
//! I_d[f](s) = c_d ∫_0^1 f(ts) (1 - t²)^((d-3)/2) dt,   c_d = 2 w_{d-2} / w_{d-1},
//! ```
//!
//! where `w_{d-1} = 2π^{d/2}/Γ(d/2)` is the area of the unit sphere in `R^d`.
//! For even `f`, `I_d[f](‖x‖)` is the average of `f(⟨x, ξ⟩)` over directions
//! `ξ` on the sphere, which is what makes sliced summation possible.
//!
//! Sign convention: every profile stored here is the *positive*,
//! distance-like function (`I_d[|·| ∗ M_{m,ε}]`, `½|s|`). The kernel is its
//! negation, applied in one place: [`RadialProfile::kernel_value`] and
//! [`RadialProfile::kernel_ratio`]. The Gaussian profile is stored as
//! `exp(-s²/2σ²)` and enters the kernel with a plus sign.

use std::sync::Arc;

use crate::special::{beta, ln_gamma, IncompleteBeta};
use crate::splines::{bspline_center_value, smoothed_abs_pieces, Piece, SplineProfile};
use crate::{invalid, quadrature, Real, Result};

/// `C_d = Γ(d/2) / (√π Γ((d+1)/2))`, the slope of `I_d[|·|]`.
///
/// Uses the recurrence `C_{d+2} = C_d · d/(d+1)` from `C_1 = 1`,
/// `C_2 = 2/π`, which is exact at small `d`; log-Gamma beyond that.
pub fn cd_constant(d: usize) -> f64 {
    if d == 0 {
        return f64::NAN;
    }
    if d > 4096 {
        let d = d as f64;
        return (ln_gamma(0.5 * d) - ln_gamma(0.5 * (d + 1.0))).exp() / std::f64::consts::PI.sqrt();
    }
    let (mut k, mut c) = if d % 2 == 1 { (1, 1.0) } else { (2, std::f64::consts::FRAC_2_PI) };
    while k < d {
        c *= k as f64 / (k + 1) as f64;
        k += 2;
    }
    c
}

/// Normalization `c_d = 2/(π C_{d-1})` of the fractional integral, so that
/// `I_d[1] = 1`.
pub fn rl_normalization(d: usize) -> f64 {
    2.0 / (std::f64::consts::PI * cd_constant(d.saturating_sub(1)))
}

/// Eigenvalue of `I_d` for the eigenfunction `|s|^β`, `β > -1`.
pub fn abs_power_eigenvalue(d: usize, beta: f64) -> f64 {
    let d = d as f64;
    (ln_gamma(0.5 * d) + ln_gamma(0.5 * (beta + 1.0)) - ln_gamma(0.5 * (d + beta))).exp()
        / std::f64::consts::PI.sqrt()
}

/// `I_d[f](s)` by adaptive Gauss–Legendre quadrature.
///
/// The substitution `t = sin θ` turns the weight into `cos^{d-2} θ`, which is
/// bounded for every `d ≥ 2`.
pub fn riemann_liouville_quadrature(f: impl Fn(f64) -> f64, d: usize, s: f64) -> Result<f64> {
    riemann_liouville_quadrature_with_breaks(f, d, s, &[])
}

/// Like [`riemann_liouville_quadrature`], with kinks of `f` (points `x ≥ 0`
/// where `f` is not smooth) passed so panels can be split there.
pub fn riemann_liouville_quadrature_with_breaks(
    f: impl Fn(f64) -> f64,
    d: usize,
    s: f64,
    kinks: &[f64],
) -> Result<f64> {
    if d < 2 {
        return Err(invalid(format!("fractional integral needs d >= 2, got {d}")));
    }
    let power = (d - 2) as i32;
    let as_ = s.abs();
    let breaks: Vec<f64> = kinks
        .iter()
        .filter(|&&k| k > 0.0 && k < as_)
        .map(|&k| (k / as_).asin())
        .collect();
    let tol = 1e-14 * f(s).abs().max(1.0);
    let integral = quadrature::integrate_with_breaks(
        |theta: f64| f(s * theta.sin()) * theta.cos().powi(power),
        0.0,
        std::f64::consts::FRAC_PI_2,
        &breaks,
        tol,
    );
    Ok(rl_normalization(d) * integral)
}

/// Which radial function a [`RadialProfile`] represents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileKind {
    /// `I_{d_slice}[|·| ∗ M_{m,ε}]`, the smoothed distance.
    Snd { m: u32, eps: f64, d_slice: usize },
    /// `½|s|`, the limit of the SND profile with `d_slice = 3` as `ε → 0`.
    Nd,
    /// `exp(-s²/2σ²)`.
    Gaussian { sigma: f64 },
}

/// An even 1D profile `F`; the kernel is `K(x, y) = ±F(‖x - y‖)`.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    kind: ProfileKind,
    curvature0: f64,
    general: Option<Arc<GeneralSnd>>,
}

/// Threshold below which [`RadialProfile::flow_ratio`] switches to `F''(0)`.
fn ratio_cutoff(eps: f64) -> f64 {
    1e-12 * eps.max(1.0)
}

impl RadialProfile {
    /// Smoothed distance profile `I_d[|·| ∗ M_{m,ε}]`.
    ///
    /// Only even orders are accepted: they are the ones whose Fourier
    /// transform `sinc^m` is nonnegative, which the conditional positive
    /// definiteness of the kernel rests on.
    pub fn snd(m: u32, eps: f64, d_slice: usize) -> Result<Self> {
        if m < 2 || m % 2 == 1 {
            return Err(invalid(format!("kernel spline order must be even and >= 2, got {m}")));
        }
        SplineProfile::new(m, eps)?;
        if d_slice < 2 {
            return Err(invalid(format!("slice dimension must be >= 2, got {d_slice}")));
        }
        let kind = ProfileKind::Snd { m, eps, d_slice };
        let general = if d_slice == 3 && (m == 2 || m == 4) {
            None
        } else {
            Some(Arc::new(GeneralSnd::new(m, d_slice)))
        };
        // F''(0) = c_d f''(0) ∫ t² (1-t²)^((d-3)/2) dt, f''(0) = 2 M_m(0)/ε
        let curvature0 = rl_normalization(d_slice)
            * 2.0
            * bspline_center_value(m)
            / eps
            * 0.5
            * beta(1.5, 0.5 * (d_slice as f64 - 1.0));
        Ok(Self { kind, curvature0, general })
    }

    /// Negative distance profile `½|s|`.
    pub fn nd() -> Self {
        Self { kind: ProfileKind::Nd, curvature0: 0.0, general: None }
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("Gaussian width must be positive, got {sigma}")));
        }
        Ok(Self {
            kind: ProfileKind::Gaussian { sigma },
            curvature0: -1.0 / (sigma * sigma),
            general: None,
        })
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    /// Name used in diagnostics and CSV output.
    pub fn label(&self) -> &'static str {
        match self.kind {
            ProfileKind::Snd { m: 2, .. } => "snd",
            ProfileKind::Snd { .. } => "snd4",
            ProfileKind::Nd => "nd",
            ProfileKind::Gaussian { .. } => "gauss",
        }
    }

    /// `-1` for distance-like profiles, `+1` for the Gaussian.
    pub fn kernel_sign(&self) -> f64 {
        match self.kind {
            ProfileKind::Gaussian { .. } => 1.0,
            _ => -1.0,
        }
    }

    /// `F(s)`.
    pub fn value(&self, s: f64) -> f64 {
        let s = s.abs();
        match self.kind {
            ProfileKind::Nd => 0.5 * s,
            ProfileKind::Gaussian { sigma } => (-0.5 * s * s / (sigma * sigma)).exp(),
            ProfileKind::Snd { m, eps, .. } => {
                let u = s / eps;
                let unit = match &self.general {
                    Some(g) => g.value(u),
                    None if m == 2 => i3_m2(u),
                    None => i3_m4(u),
                };
                eps * unit
            }
        }
    }

    /// `F'(s)`.
    pub fn d1(&self, s: f64) -> f64 {
        let sign = if s > 0.0 {
            1.0
        } else if s < 0.0 {
            -1.0
        } else {
            return 0.0;
        };
        let s = s.abs();
        sign * match self.kind {
            ProfileKind::Nd => 0.5,
            ProfileKind::Gaussian { sigma } => {
                -s / (sigma * sigma) * (-0.5 * s * s / (sigma * sigma)).exp()
            }
            ProfileKind::Snd { m, eps, .. } => {
                let u = s / eps;
                match &self.general {
                    Some(g) => g.d1(u),
                    None if m == 2 => i3_m2_ratio(u) * u,
                    None => i3_m4_ratio(u) * u,
                }
            }
        }
    }

    /// `F''(0)`; zero for the (non-differentiable) ND profile.
    pub fn curvature0(&self) -> f64 {
        self.curvature0
    }

    /// `F'(s)/s` for `s ≥ 0`, continued by `F''(0)` at the origin. For ND the
    /// origin value is 0 (the `x/‖x‖ := 0` convention).
    pub fn flow_ratio(&self, s: f64) -> f64 {
        let s = s.abs();
        match self.kind {
            ProfileKind::Nd => {
                if s == 0.0 {
                    0.0
                } else {
                    0.5 / s
                }
            }
            ProfileKind::Gaussian { sigma } => {
                -(-0.5 * s * s / (sigma * sigma)).exp() / (sigma * sigma)
            }
            ProfileKind::Snd { m, eps, .. } => match &self.general {
                None => {
                    let u = s / eps;
                    (if m == 2 { i3_m2_ratio(u) } else { i3_m4_ratio(u) }) / eps
                }
                Some(_) if s <= ratio_cutoff(eps) => self.curvature0,
                Some(_) => self.d1(s) / s,
            },
        }
    }

    /// `Φ(s)`, the kernel's radial function: `-F` for distance-like
    /// profiles, `+F` for the Gaussian.
    pub fn kernel_value(&self, s: f64) -> f64 {
        self.kernel_sign() * self.value(s)
    }

    /// `Φ'(s)/s` in working precision `T`; the flow's velocity is built from
    /// this ratio alone. This is the single place where the sign of the
    /// stored profile is turned into the sign of the kernel.
    #[inline]
    pub fn kernel_ratio<T: Real>(&self, s: T) -> T {
        let s = s.abs();
        match self.kind {
            ProfileKind::Nd => {
                if s == T::zero() {
                    T::zero()
                } else {
                    -T::lit(0.5) / s
                }
            }
            ProfileKind::Gaussian { sigma } => {
                let inv = T::lit(1.0 / (sigma * sigma));
                -(-T::lit(0.5) * s * s * inv).exp() * inv
            }
            ProfileKind::Snd { m, eps, .. } => match &self.general {
                None => {
                    let inv_eps = T::lit(1.0 / eps);
                    let u = s * inv_eps;
                    let r = if m == 2 { i3_m2_ratio(u) } else { i3_m4_ratio(u) };
                    -r * inv_eps
                }
                Some(_) => T::lit(-self.flow_ratio(s.to_f64().unwrap_or(f64::NAN))),
            },
        }
    }
}

/// `I_3[|·| ∗ M_2]` at unit scale, `s ≥ 0`.
fn i3_m2(s: f64) -> f64 {
    if s <= 1.0 {
        (-s * s * s + 4.0 * s * s + 4.0) / 12.0
    } else {
        (6.0 * s + 1.0 / s) / 12.0
    }
}

/// `I_3[|·| ∗ M_2]'(s)/s` at unit scale.
#[inline]
fn i3_m2_ratio<T: Real>(s: T) -> T {
    let twelfth = T::lit(1.0 / 12.0);
    if s <= T::one() {
        (T::lit(8.0) - T::lit(3.0) * s) * twelfth
    } else {
        let inv = s.recip();
        (T::lit(6.0) - inv * inv) * inv * twelfth
    }
}

/// `I_3[|·| ∗ M_4]` at unit scale, `s ≥ 0`.
fn i3_m4(s: f64) -> f64 {
    let s2 = s * s;
    let v = if s <= 1.0 {
        3.0 * s2 * s2 * s - 12.0 * s2 * s2 + 80.0 * s2 + 168.0
    } else if s <= 2.0 {
        -s2 * s2 * s + 12.0 * s2 * s2 - 60.0 * s2 * s + 160.0 * s2 - 60.0 * s + 192.0 - 4.0 / s
    } else {
        180.0 * s + 60.0 / s
    };
    v / 360.0
}

/// `I_3[|·| ∗ M_4]'(s)/s` at unit scale.
#[inline]
fn i3_m4_ratio<T: Real>(s: T) -> T {
    let c = T::lit(1.0 / 360.0);
    let l = T::lit;
    if s <= T::one() {
        (l(15.0) * s * s * s - l(48.0) * s * s + l(160.0)) * c
    } else if s <= l(2.0) {
        let inv = s.recip();
        (-l(5.0) * s * s * s + l(48.0) * s * s - l(180.0) * s + l(320.0) - l(60.0) * inv
            + l(4.0) * inv * inv * inv)
            * c
    } else {
        let inv = s.recip();
        (l(180.0) - l(60.0) * inv * inv) * inv * c
    }
}

/// General-order, general-dimension evaluation of `I_d[|·| ∗ M_m]` at unit
/// scale.
///
/// On each polynomial piece `[lo, hi]` of `|·| ∗ M_m` the integral reduces to
/// incomplete Beta functions:
///
/// ```text
/// c_d Σ_n a_n s^n ∫_{lo/s}^{min(hi/s,1)} t^n (1-t²)^((d-3)/2) dt
///   = c_d/2 Σ_n a_n s^n [B_{t1²} - B_{t0²}]((n+1)/2, (d-1)/2).
/// ```
///
/// Grouping by piece (instead of by truncated-power knot) keeps each term of
/// order `max(s, m)^n · (hi/s)^{n+1}`, so nothing large cancels for `s ≫ m`.
#[derive(Debug)]
struct GeneralSnd {
    d: usize,
    norm: f64,
    pieces: Vec<Piece>,
    d_pieces: Vec<Piece>,
}

impl GeneralSnd {
    fn new(m: u32, d: usize) -> Self {
        let pieces = smoothed_abs_pieces(m);
        let d_pieces = pieces.iter().map(Piece::derivative).collect();
        Self { d, norm: rl_normalization(d), pieces, d_pieces }
    }

    fn value(&self, s: f64) -> f64 {
        if s == 0.0 {
            return self.pieces[0].coeffs[0];
        }
        self.norm * transform(&self.pieces, self.d, s, 0)
    }

    fn d1(&self, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        self.norm * transform(&self.d_pieces, self.d, s, 1)
    }
}

/// `Σ_pieces Σ_n a_n s^n ∫ t^(n+shift) (1-t²)^((d-3)/2) dt` over `[lo/s, hi/s] ∩ [0, 1]`.
fn transform(pieces: &[Piece], d: usize, s: f64, shift: usize) -> f64 {
    let b = 0.5 * (d as f64 - 1.0);
    let mut total = 0.0;
    for piece in pieces {
        let t0 = piece.lo / s;
        if t0 >= 1.0 {
            break;
        }
        let t1 = (piece.hi / s).min(1.0);
        let mut s_pow = 1.0;
        for (n, &c) in piece.coeffs.iter().enumerate() {
            if c != 0.0 {
                let a = 0.5 * ((n + shift) as f64 + 1.0);
                let moment = if t1 >= 1.0 {
                    IncompleteBeta::upper(t0 * t0, a, b)
                } else {
                    IncompleteBeta::lower(t1 * t1, a, b) - IncompleteBeta::lower(t0 * t0, a, b)
                };
                total += c * s_pow * 0.5 * moment;
            }
            s_pow *= s;
        }
    }
    total
}

/// `I_d[|·| ∗ M_{m,ε}](s)` from the closed forms.
pub fn snd_profile_closed(m: u32, eps: f64, d: usize, s: f64) -> Result<f64> {
    Ok(RadialProfile::snd(m, eps, d)?.value(s))
}

/// Derivative of [`snd_profile_closed`] in `s`.
pub fn snd_profile_d1(m: u32, eps: f64, d: usize, s: f64) -> Result<f64> {
    Ok(RadialProfile::snd(m, eps, d)?.d1(s))
}

/// `F''(0)` of the SND profile.
pub fn snd_profile_curvature0(m: u32, eps: f64, d: usize) -> Result<f64> {
    Ok(RadialProfile::snd(m, eps, d)?.curvature0())
}

/// Evaluates the SND profile through the general incomplete-Beta route even
/// where a hard-coded `d = 3` formula exists. Used to cross-check the two.
pub fn snd_profile_general(m: u32, eps: f64, d: usize, s: f64) -> Result<f64> {
    RadialProfile::snd(m, eps, d)?;
    Ok(eps * GeneralSnd::new(m, d).value(s.abs() / eps))
}
