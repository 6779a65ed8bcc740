//! Squared maximum mean discrepancy between empirical measures.

use rayon::prelude::*;

use crate::kernels::Kernel;
use crate::{ParticleCloud, Result};

/// `(1/N²) Σ K(x_n, x_n') - (2/NM) Σ K(x_n, y_m) + (1/M²) Σ K(y_m, y_m')`,
/// diagonal terms included.
///
/// Rows are summed in parallel but combined in a fixed order, so the result
/// does not depend on the thread count. The two clouds are put in a
/// canonical order first, which makes the value exactly symmetric.
pub fn mmd_squared(k: &Kernel, mu: &ParticleCloud, nu: &ParticleCloud) -> Result<f64> {
    mu.check_dim(nu.dim())?;
    let (a, b) = if canonical_le(mu, nu) { (mu, nu) } else { (nu, mu) };
    let (n, m) = (a.len() as f64, b.len() as f64);
    let aa = self_sum(k, a) / (n * n);
    let bb = self_sum(k, b) / (m * m);
    let ab = cross_sum(k, a, b);
    Ok(aa + bb - 2.0 * ab / (n * m))
}

fn canonical_le(a: &ParticleCloud, b: &ParticleCloud) -> bool {
    let key = |c: &ParticleCloud| c.len();
    match key(a).cmp(&key(b)) {
        std::cmp::Ordering::Equal => a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .map_or(true, |o| o.is_lt()),
        o => o.is_lt(),
    }
}

/// The flow functional `½ MMD²(μ, ν)`.
pub fn flow_objective(k: &Kernel, mu: &ParticleCloud, nu: &ParticleCloud) -> Result<f64> {
    Ok(0.5 * mmd_squared(k, mu, nu)?)
}

fn self_sum(k: &Kernel, c: &ParticleCloud) -> f64 {
    let rows: Vec<f64> = (0..c.len())
        .into_par_iter()
        .map(|i| {
            let x = c.point(i);
            let off: f64 = (i + 1..c.len()).map(|j| k.eval_unchecked(x, c.point(j))).sum();
            k.eval_unchecked(x, x) + 2.0 * off
        })
        .collect();
    rows.iter().sum()
}

fn cross_sum(k: &Kernel, a: &ParticleCloud, b: &ParticleCloud) -> f64 {
    let rows: Vec<f64> = (0..a.len())
        .into_par_iter()
        .map(|i| b.points().map(|y| k.eval_unchecked(a.point(i), y)).sum())
        .collect();
    rows.iter().sum()
}
