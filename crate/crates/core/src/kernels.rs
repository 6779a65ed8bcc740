//! Kernels built from radial profiles, Gram matrices and empirical checks of
//! conditional positive definiteness.
//!
//! With `P` the positive profile stored in [`RadialProfile`] and
//! `Φ(x) = -P(‖x‖)`:
//!
//! * the CPD variant is `K̃(x, y) = Φ(x - y)`,
//! * the PD variant is `K(x, y) = Φ(x - y) - Φ(x) - Φ(y)
//!   = -P(‖x-y‖) + P(‖x‖) + P(‖y‖)`.
//!
//! The constant `Φ(0)` term a general order-one construction would add is
//! dropped because `Φ(0) ≤ 0` for every distance-like profile. The Gaussian
//! is positive definite as it stands, so both variants evaluate it directly.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::smoothed_norm::{ProfileKind, RadialProfile};
use crate::{Error, ParticleCloud, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelVariant {
    /// `Φ(x - y)`, conditionally positive definite of order one.
    #[default]
    Cpd,
    /// `Φ(x - y) - Φ(x) - Φ(y)`, positive definite.
    Pd,
}

#[derive(Debug, Clone)]
pub struct Kernel {
    profile: RadialProfile,
    variant: KernelVariant,
}

impl Kernel {
    pub fn new(profile: RadialProfile, variant: KernelVariant) -> Self {
        Self { profile, variant }
    }

    pub fn cpd(profile: RadialProfile) -> Self {
        Self::new(profile, KernelVariant::Cpd)
    }

    pub fn pd(profile: RadialProfile) -> Self {
        Self::new(profile, KernelVariant::Pd)
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn variant(&self) -> KernelVariant {
        self.variant
    }

    /// `K(x, y)`; panics in debug builds on mismatched lengths.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let phi = |s: f64| self.profile.kernel_value(s);
        let diff = distance(x, y);
        match (self.variant, self.profile.kind()) {
            (KernelVariant::Cpd, _) | (KernelVariant::Pd, ProfileKind::Gaussian { .. }) => phi(diff),
            (KernelVariant::Pd, _) => phi(diff) - (phi(norm(x)) + phi(norm(y))),
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// `K(x, y)` with a dimension check.
pub fn kernel_eval(k: &Kernel, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    Ok(k.eval_unchecked(x, y))
}

/// Gram matrix `G[i][j] = K(x_i, x_j)`, filled from the upper triangle.
pub fn gram(k: &Kernel, pts: &ParticleCloud) -> DMatrix<f64> {
    let n = pts.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = k.eval_unchecked(pts.point(i), pts.point(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Checks `|Σ a| ≤ 1e-12 Σ |a|`.
pub fn check_zero_sum(weights: &[f64]) -> Result<()> {
    let sum: f64 = weights.iter().sum();
    let scale: f64 = weights.iter().map(|a| a.abs()).sum();
    if sum.abs() > 1e-12 * scale {
        return Err(Error::NotZeroSum { sum, scale });
    }
    Ok(())
}

/// `Σ_{j,k} a_j a_k K(x_j, x_k)` for zero-sum weights `a`.
pub fn cpd_quadratic_form(k: &Kernel, pts: &ParticleCloud, weights: &[f64]) -> Result<f64> {
    if weights.len() != pts.len() {
        return Err(Error::DimensionMismatch { expected: pts.len(), got: weights.len() });
    }
    check_zero_sum(weights)?;
    let mut total = 0.0;
    for (j, &aj) in weights.iter().enumerate() {
        if aj == 0.0 {
            continue;
        }
        let mut row = 0.5 * aj * k.eval_unchecked(pts.point(j), pts.point(j));
        for (l, &al) in weights.iter().enumerate().skip(j + 1) {
            row += al * k.eval_unchecked(pts.point(j), pts.point(l));
        }
        total += 2.0 * aj * row;
    }
    Ok(total)
}

/// A point set and zero-sum weights with a negative quadratic form.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub points: ParticleCloud,
    pub weights: Vec<f64>,
    pub form: f64,
}

/// Threshold below which a quadratic form counts as a violation.
pub const FALSIFY_TOL: f64 = -1e-8;

/// Default cap on the number of points per trial: 12, or `6^d` (at most
/// 256) when that is larger.
///
/// Twelve points are enough on the line, but in `R^3` the negative part of
/// the spectrum of a radialized smoothed absolute value is small and sits in
/// a narrow frequency band. Exposing it needs enough points (about a hundred)
/// to cancel the low frequencies.
pub fn default_max_points(d: usize) -> usize {
    let lattice = 6usize.checked_pow(d as u32).unwrap_or(usize::MAX);
    lattice.clamp(12, 256)
}

/// [`cpd_falsify_with`] using [`default_max_points`].
pub fn cpd_falsify<R: Rng + ?Sized>(
    phi: impl Fn(f64) -> f64,
    d: usize,
    trials: usize,
    rng: &mut R,
) -> Option<Counterexample> {
    cpd_falsify_with(phi, d, trials, default_max_points(d), rng)
}

/// Random search for a violation of conditional positive definiteness (order
/// one) of the radial function `x ↦ phi(‖x‖)` on `R^d`.
///
/// Trials alternate between two point families, both inside `[-3, 3]^d`
/// times a random scale in `[10^-1.5, 10^0.5]`: uniform clouds of
/// `2..=max_points` points, and jittered cubic lattices (used only when
/// `max_points > 12`). Weights are not sampled: each trial takes the
/// eigenvector of the smallest eigenvalue of the Gram matrix restricted to
/// zero-sum vectors. Returns the first configuration whose form is below
/// `-1e-8` with unit-norm weights.
pub fn cpd_falsify_with<R: Rng + ?Sized>(
    phi: impl Fn(f64) -> f64,
    d: usize,
    trials: usize,
    max_points: usize,
    rng: &mut R,
) -> Option<Counterexample> {
    let max_points = max_points.max(2);
    let side_max = (1..).take_while(|k: &usize| k.checked_pow(d as u32).is_some_and(|n| n <= max_points)).last()?;
    for trial in 0..trials {
        let scale = 10f64.powf(rng.gen_range(-1.5..0.5));
        let data: Vec<f64> = if max_points > 12 && side_max >= 2 && trial % 2 == 1 {
            let side = rng.gen_range(2..=side_max);
            let h = 6.0 / (side - 1) as f64;
            let n = side.pow(d as u32);
            let mut data = Vec::with_capacity(n * d);
            for idx in 0..n {
                let mut rest = idx;
                for _ in 0..d {
                    let jitter = rng.gen_range(-0.05..0.05);
                    data.push(scale * (-3.0 + h * ((rest % side) as f64 + jitter)));
                    rest /= side;
                }
            }
            data
        } else {
            let n = rng.gen_range(2..=max_points);
            (0..n * d).map(|_| scale * rng.gen_range(-3.0..3.0)).collect()
        };
        let pts = ParticleCloud::new(data, d).ok()?;
        if let Some(found) = most_negative_form(&phi, pts) {
            return Some(found);
        }
    }
    None
}

fn most_negative_form(phi: &impl Fn(f64) -> f64, pts: ParticleCloud) -> Option<Counterexample> {
    let n = pts.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = phi(distance(pts.point(i), pts.point(j)));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    // Π G Π + c·11ᵀ/n: the constant vector is moved to eigenvalue c, far
    // above the spectrum, so the minimum is taken over zero-sum vectors.
    let shift = 1.0 + n as f64 * g.amax();
    let proj = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    let restricted =
        &proj * &g * &proj + DMatrix::from_element(n, n, shift / n as f64);
    let eig = SymmetricEigen::new(restricted);
    let (idx, &lambda) = eig.eigenvalues.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    if lambda >= FALSIFY_TOL {
        return None;
    }
    let mut w: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
    let mean = w.iter().sum::<f64>() / n as f64;
    w.iter_mut().for_each(|v| *v -= mean);
    let wv = DVector::from_column_slice(&w);
    let form = (wv.transpose() * &g * &wv)[(0, 0)];
    (form < FALSIFY_TOL).then_some(Counterexample { points: pts, weights: w, form })
}

/// Random zero-sum weights: centered Gaussians with the mean subtracted.
pub fn random_zero_sum_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let mean = w.iter().sum::<f64>() / n as f64;
    w.iter_mut().for_each(|v| *v -= mean);
    w
}
