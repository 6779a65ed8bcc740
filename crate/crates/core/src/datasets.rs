//! Target and initial particle configurations.
//!
//! Every generator is deterministic: the geometric ones have no randomness,
//! the others draw from a [`ChaCha8Rng`] seeded with the given seed.

use std::f64::consts::TAU;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{invalid, ParticleCloud, Result};

const RING_CENTERS: [f64; 3] = [-2.5, 0.0, 2.5];

/// `n` equi-angular points on each of the unit circles around
/// `(-2.5, 0)`, `(0, 0)` and `(2.5, 0)`, starting at angle 0.
///
/// ```
/// let c = mmdflow::datasets::three_rings(1);
/// assert_eq!(c.as_slice(), &[-1.5, 0.0, 1.0, 0.0, 3.5, 0.0]);
/// ```
pub fn three_rings(n: usize) -> ParticleCloud {
    let n = n.max(1);
    let mut data = Vec::with_capacity(6 * n);
    for cx in RING_CENTERS {
        circle(&mut data, n, cx, 1.0);
    }
    ParticleCloud::new(data, 2).expect("finite ring points")
}

/// `n` equi-angular points on each of the concentric circles of radius 1
/// and 0.3 around the origin.
pub fn annulus(n: usize) -> ParticleCloud {
    let n = n.max(1);
    let mut data = Vec::with_capacity(4 * n);
    circle(&mut data, n, 0.0, 1.0);
    circle(&mut data, n, 0.0, 0.3);
    ParticleCloud::new(data, 2).expect("finite annulus points")
}

fn circle(data: &mut Vec<f64>, n: usize, cx: f64, r: f64) {
    for j in 0..n {
        let (s, c) = (TAU * j as f64 / n as f64).sin_cos();
        data.push(cx + r * c);
        data.push(r * s);
    }
}

/// Standard deviation of the banana jitter.
pub const BANANA_JITTER: f64 = 0.05;

/// Two mirrored parabolic arcs of `n` points each.
///
/// Banana `k ∈ {+1, -1}` holds the points `(k(s² - 1) - k, s)` for `s`
/// equispaced in `[-1, 1]`, each coordinate jittered by a normal draw with
/// standard deviation [`BANANA_JITTER`]. The first banana lies left of the
/// y-axis, opening to the right, the second is its mirror image.
pub fn bananas(n: usize, seed: u64) -> ParticleCloud {
    let n = n.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(4 * n);
    for k in [1.0, -1.0] {
        for j in 0..n {
            let s = if n == 1 { 0.0 } else { -1.0 + 2.0 * j as f64 / (n - 1) as f64 };
            let jx: f64 = rng.sample(StandardNormal);
            let jy: f64 = rng.sample(StandardNormal);
            data.push(k * (s * s - 1.0) - k + BANANA_JITTER * jx);
            data.push(s + BANANA_JITTER * jy);
        }
    }
    ParticleCloud::new(data, 2).expect("finite banana points")
}

/// `n` points in `R^d` around `modes` centers drawn uniformly from
/// `[0, 1]^d`. Point `i` belongs to mode `i mod modes` and is offset by
/// isotropic normal noise of standard deviation `std`.
pub fn gauss_mixture(n: usize, d: usize, modes: usize, std: f64, seed: u64) -> Result<ParticleCloud> {
    if n == 0 || d == 0 || modes == 0 {
        return Err(invalid("gauss_mixture needs n, d and modes all positive"));
    }
    if !(std >= 0.0 && std.is_finite()) {
        return Err(invalid(format!("standard deviation must be nonnegative, got {std}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<f64> = (0..modes * d).map(|_| rng.gen::<f64>()).collect();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        let c = &centers[(i % modes) * d..(i % modes + 1) * d];
        data.extend(c.iter().map(|&ci| ci + std * rng.sample::<f64, _>(StandardNormal)));
    }
    ParticleCloud::new(data, d)
}

/// `n` samples of `N(0, std² I_d)`.
pub fn init_gaussian(n: usize, d: usize, std: f64, seed: u64) -> ParticleCloud {
    init_gaussian_at(&vec![0.0; d.max(1)], n, std, seed).expect("valid Gaussian initialization")
}

/// `n` samples of `N(mean, std² I_d)`.
pub fn init_gaussian_at(mean: &[f64], n: usize, std: f64, seed: u64) -> Result<ParticleCloud> {
    if !(std >= 0.0 && std.is_finite()) {
        return Err(invalid(format!("standard deviation must be nonnegative, got {std}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * mean.len());
    for _ in 0..n {
        data.extend(mean.iter().map(|&m| m + std * rng.sample::<f64, _>(StandardNormal)));
    }
    ParticleCloud::new(data, mean.len())
}

/// `n` samples of the uniform distribution on `[0, 1]^d`.
pub fn init_uniform(n: usize, d: usize, seed: u64) -> Result<ParticleCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ParticleCloud::new((0..n * d).map(|_| rng.gen::<f64>()).collect(), d)
}

/// Which target to generate.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetKind {
    ThreeRings,
    Bananas,
    Annulus,
    GaussMixture { d: usize, modes: usize, std: f64 },
    CustomCsv(PathBuf),
}

/// A target cloud description.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub kind: TargetKind,
    /// Total point count; `None` selects the canonical count of the kind.
    pub points_total: Option<usize>,
    pub seed: u64,
}

impl TargetSpec {
    pub fn new(kind: TargetKind) -> Self {
        Self { kind, points_total: None, seed: 0 }
    }

    /// Point count when none is given: 120 rings points, 200 banana points,
    /// 100 annulus points, 100 mixture points. A CSV file has no canonical
    /// count.
    pub fn canonical_count(&self) -> Option<usize> {
        match self.kind {
            TargetKind::ThreeRings => Some(120),
            TargetKind::Bananas => Some(200),
            TargetKind::Annulus => Some(100),
            TargetKind::GaussMixture { .. } => Some(100),
            TargetKind::CustomCsv(_) => None,
        }
    }

    pub fn generate(&self) -> Result<ParticleCloud> {
        let total = self.points_total.or(self.canonical_count());
        let per = |parts: usize| -> Result<usize> {
            let t = total.unwrap_or(0);
            if t == 0 || t % parts != 0 {
                return Err(invalid(format!("point count {t} is not a positive multiple of {parts}")));
            }
            Ok(t / parts)
        };
        match &self.kind {
            TargetKind::ThreeRings => Ok(three_rings(per(3)?)),
            TargetKind::Bananas => Ok(bananas(per(2)?, self.seed)),
            TargetKind::Annulus => Ok(annulus(per(2)?)),
            TargetKind::GaussMixture { d, modes, std } => gauss_mixture(per(1)?, *d, *modes, *std, self.seed),
            TargetKind::CustomCsv(path) => {
                let cloud = ParticleCloud::read_csv(path)?;
                match self.points_total {
                    Some(t) if t != cloud.len() => Err(invalid(format!(
                        "{} holds {} points, expected {t}",
                        path.display(),
                        cloud.len()
                    ))),
                    _ => Ok(cloud),
                }
            }
        }
    }
}
