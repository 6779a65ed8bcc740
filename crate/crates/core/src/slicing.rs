//! Sliced summation of kernel gradients.
//!
//! For `Φ(x) = E_ξ[φ(⟨x, ξ⟩)]` with `ξ` uniform on the sphere, the gradient
//! is `∇Φ(x) = E_ξ[ξ φ'(⟨x, ξ⟩)]`. Replacing the expectation by `P`
//! quadrature directions turns every `d`-dimensional kernel sum into `P`
//! one-dimensional sums:
//!
//! ```text
//! s_m ≈ (1/P) Σ_p ξ_p Σ_n w_n φ'(⟨y_m - x_n, ξ_p⟩).
//! ```
//!
//! The directions are the `d + 1` vertices of a regular simplex centered at
//! the origin, optionally rotated by a Haar-random orthogonal matrix. The
//! simplex is never stored: with vertices `u_i = α e_i - γ 1` (`i < d`) and
//! `u_d = -δ 1`, projecting a point onto all vertices and summing
//! `Σ_p c_p u_p` both cost `O(d)`. Rotations are kept as Householder
//! reflectors and cost `O(d²)` per point.
//!
//! Convention: 1D arguments are always query minus source.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::smoothed_norm::{cd_constant, ProfileKind, RadialProfile};
use crate::splines::SplineProfile;
use crate::{invalid, Error, Result};

/// The one-dimensional kernel `φ` that a radial kernel is sliced into,
/// together with its derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceKernel {
    /// `φ(z) = scale·|z|`.
    Abs { scale: f64 },
    /// `φ(z) = scale·(|·| ∗ M_{m,ε})(z)`.
    Smooth { spline: SplineProfile, scale: f64 },
}

impl SliceKernel {
    /// The sliced form of the kernel of `profile` in ambient dimension `d`.
    ///
    /// SND requires `d_slice = d`, since slicing in `R^d` realizes `I_d`.
    /// ND is `-½|s| = I_d[-|·|/(2 C_d)]`, valid in any dimension. The
    /// Gaussian has no sliced form here.
    pub fn for_profile(profile: &RadialProfile, d: usize) -> Result<Self> {
        match profile.kind() {
            ProfileKind::Snd { m, eps, d_slice } => {
                if d_slice != d {
                    return Err(invalid(format!(
                        "sliced summation in R^{d} realizes the profile with d_slice = {d}, got d_slice = {d_slice}"
                    )));
                }
                Ok(Self::Smooth { spline: SplineProfile::new(m, eps)?, scale: -1.0 })
            }
            ProfileKind::Nd => Ok(Self::Abs { scale: -0.5 / cd_constant(d) }),
            ProfileKind::Gaussian { .. } => Err(Error::NotSliceable("Gaussian")),
        }
    }

    /// `φ(z)`.
    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        match *self {
            Self::Abs { scale } => scale * z.abs(),
            Self::Smooth { spline, scale } => scale * spline.smoothed_abs(z),
        }
    }

    /// `φ'(z)`, odd, with `φ'(0) = 0`.
    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        match *self {
            Self::Abs { scale } => {
                if z > 0.0 {
                    scale
                } else if z < 0.0 {
                    -scale
                } else {
                    0.0
                }
            }
            Self::Smooth { spline, scale } => scale * spline.smoothed_abs_d1(z),
        }
    }

    /// Half-width `w` outside of which `φ'(z) = far·sign(z)`.
    pub fn window(&self) -> f64 {
        match self {
            Self::Abs { .. } => 0.0,
            Self::Smooth { spline, .. } => spline.support_radius(),
        }
    }

    /// The constant `φ'(z)` for `z > w`.
    pub fn far(&self) -> f64 {
        match *self {
            Self::Abs { scale } | Self::Smooth { scale, .. } => scale,
        }
    }
}

/// A Householder-factored orthogonal matrix `Q = H_0 H_1 ⋯ H_{d-2} D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    d: usize,
    /// Reflector `k` has length `d - k` and starts at `k·d - k(k-1)/2`. It
    /// is scaled so that `H_k = I - v vᵀ`.
    reflectors: Vec<f64>,
    signs: Vec<f64>,
}

impl Rotation {
    pub fn identity(d: usize) -> Self {
        Self { d, reflectors: Vec::new(), signs: vec![1.0; d] }
    }

    /// Haar-distributed draw, equivalent to the QR factorization of a
    /// standard Gaussian matrix with the signs of `diag(R)` moved into `Q`.
    /// Each Householder vector is sampled directly: after `k` reflections
    /// the trailing block of a Gaussian matrix is again Gaussian.
    pub fn random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        let mut reflectors = Vec::with_capacity(d * (d + 1) / 2);
        let mut signs = vec![1.0; d];
        for k in 0..d.saturating_sub(1) {
            let start = reflectors.len();
            reflectors.extend((k..d).map(|_| -> f64 { StandardNormal.sample(rng) }));
            let v = &mut reflectors[start..];
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let s = if v[0] >= 0.0 { 1.0 } else { -1.0 };
            // R_kk = -s·norm, so the sign factor is -s.
            signs[k] = -s;
            v[0] += s * norm;
            let vnorm2 = v.iter().map(|x| x * x).sum::<f64>();
            if vnorm2 > 0.0 {
                let scale = (2.0 / vnorm2).sqrt();
                v.iter_mut().for_each(|x| *x *= scale);
            }
        }
        if d > 0 {
            let last: f64 = StandardNormal.sample(rng);
            signs[d - 1] = if last >= 0.0 { 1.0 } else { -1.0 };
        }
        Self { d, reflectors, signs }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn is_identity(&self) -> bool {
        self.reflectors.is_empty() && self.signs.iter().all(|&s| s == 1.0)
    }

    fn reflector(&self, k: usize) -> &[f64] {
        let start = k * (2 * self.d - k + 1) / 2;
        &self.reflectors[start..start + self.d - k]
    }

    /// `x ← Q x`.
    pub fn apply(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.d);
        for (xi, s) in x.iter_mut().zip(&self.signs) {
            *xi *= s;
        }
        if self.reflectors.is_empty() {
            return;
        }
        for k in (0..self.d - 1).rev() {
            reflect(self.reflector(k), &mut x[k..]);
        }
    }

    /// `x ← Qᵀ x`.
    pub fn apply_transpose(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.d);
        if !self.reflectors.is_empty() {
            for k in 0..self.d - 1 {
                reflect(self.reflector(k), &mut x[k..]);
            }
        }
        for (xi, s) in x.iter_mut().zip(&self.signs) {
            *xi *= s;
        }
    }

    /// `Qᵀ` applied to every row of a row-major `n × d` block.
    fn apply_transpose_rows(&self, rows: &mut [f64]) {
        if self.is_identity() {
            return;
        }
        rows.par_chunks_mut(self.d * 16).for_each(|block| {
            if !self.reflectors.is_empty() {
                for k in 0..self.d - 1 {
                    let v = self.reflector(k);
                    for x in block.chunks_exact_mut(self.d) {
                        reflect(v, &mut x[k..]);
                    }
                }
            }
            for x in block.chunks_exact_mut(self.d) {
                for (xi, s) in x.iter_mut().zip(&self.signs) {
                    *xi *= s;
                }
            }
        });
    }

    /// `Q` applied to every row of a row-major `n × d` block.
    fn apply_rows(&self, rows: &mut [f64]) {
        if self.is_identity() {
            return;
        }
        rows.par_chunks_mut(self.d * 16).for_each(|block| {
            for x in block.chunks_exact_mut(self.d) {
                for (xi, s) in x.iter_mut().zip(&self.signs) {
                    *xi *= s;
                }
            }
            if !self.reflectors.is_empty() {
                for k in (0..self.d - 1).rev() {
                    let v = self.reflector(k);
                    for x in block.chunks_exact_mut(self.d) {
                        reflect(v, &mut x[k..]);
                    }
                }
            }
        });
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut q = DMatrix::identity(self.d, self.d);
        for j in 0..self.d {
            let mut col: Vec<f64> = q.column(j).iter().copied().collect();
            self.apply(&mut col);
            q.column_mut(j).copy_from_slice(&col);
        }
        q
    }
}

/// `x ← x - v (v·x)`.
#[inline]
fn reflect(v: &[f64], x: &mut [f64]) {
    let t = dot(v, x);
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= t * vi;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Haar-random orthogonal matrix as a dense matrix.
pub fn random_rotation<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    Rotation::random(d, rng).to_matrix()
}

/// Quadrature directions on `S^{d-1}`: one or more copies of the regular
/// simplex, each with its own rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSet {
    d: usize,
    alpha: f64,
    gamma: f64,
    delta: f64,
    antipodal: bool,
    rotations: Vec<Rotation>,
}

/// The unrotated `d + 1` simplex vertices.
pub fn simplex_directions(d: usize) -> SliceSet {
    SliceSet::simplex(d)
}

impl SliceSet {
    pub fn simplex(d: usize) -> Self {
        assert!(d >= 1, "dimension must be positive");
        let df = d as f64;
        let alpha = ((df + 1.0) / df).sqrt();
        let delta = 1.0 / df.sqrt();
        let gamma = (alpha - delta) / df;
        Self { d, alpha, gamma, delta, antipodal: false, rotations: vec![Rotation::identity(d)] }
    }

    /// Also use the negated vertices. The estimator is unchanged, since `φ'`
    /// is odd; this only doubles the direction count.
    pub fn with_antipodal(mut self, antipodal: bool) -> Self {
        self.antipodal = antipodal;
        self
    }

    /// Replaces the rotations with `blocks` fresh Haar draws.
    pub fn rotate_random<R: Rng + ?Sized>(&mut self, blocks: usize, rng: &mut R) {
        self.rotations = (0..blocks.max(1)).map(|_| Rotation::random(self.d, rng)).collect();
    }

    pub fn with_rotations(mut self, rotations: Vec<Rotation>) -> Result<Self> {
        if rotations.is_empty() || rotations.iter().any(|r| r.dim() != self.d) {
            return Err(invalid("rotations must be non-empty and match the dimension"));
        }
        self.rotations = rotations;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Total number of directions `P`.
    pub fn len(&self) -> usize {
        self.rotations.len() * (self.d + 1) * if self.antipodal { 2 } else { 1 }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn blocks(&self) -> usize {
        self.rotations.len()
    }

    /// All directions as explicit unit vectors.
    pub fn directions(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.len());
        for rot in &self.rotations {
            for p in 0..=self.d {
                let mut coeffs = vec![0.0; self.d + 1];
                coeffs[p] = 1.0;
                let mut u = vec![0.0; self.d];
                self.combine(&coeffs, &mut u);
                rot.apply(&mut u);
                if self.antipodal {
                    out.push(u.iter().map(|v| -v).collect());
                }
                out.push(u);
            }
        }
        out
    }

    /// `out[p] = ⟨x, u_p⟩` for the unrotated vertices.
    #[inline]
    fn project(&self, x: &[f64], out: &mut [f64]) {
        let sum: f64 = x.iter().sum();
        let shift = self.gamma * sum;
        for (o, xi) in out.iter_mut().zip(x) {
            *o = self.alpha * xi - shift;
        }
        out[self.d] = -self.delta * sum;
    }

    /// `out = Σ_p c_p u_p` for the unrotated vertices.
    #[inline]
    fn combine(&self, c: &[f64], out: &mut [f64]) {
        let head: f64 = c[..self.d].iter().sum();
        let shift = self.gamma * head + self.delta * c[self.d];
        for (o, ci) in out.iter_mut().zip(c) {
            *o = self.alpha * ci - shift;
        }
    }
}

/// How the per-direction 1D sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OneDMethod {
    /// Dense when `N + M` is below the threshold, sorted otherwise.
    Auto { dense_below: usize },
    Dense,
    Sorted,
}

impl Default for OneDMethod {
    fn default() -> Self {
        Self::Auto { dense_below: 512 }
    }
}

/// `out[m] = Σ_n w_n φ'(y_m - x_n)` by direct summation.
pub fn onedsum_dense(kernel: &SliceKernel, xs: &[f64], weights: &[f64], ys: &[f64]) -> Vec<f64> {
    ys.iter()
        .map(|&y| xs.iter().zip(weights).map(|(&x, &w)| w * kernel.derivative(y - x)).sum())
        .collect()
}

/// `out[m] = Σ_n w_n φ'(y_m - x_n)` for sorted `xs`.
///
/// Sources farther than the kernel window from `y` contribute
/// `±far·w_n`, so they are handled by prefix sums of the weights; only the
/// sources inside the window are evaluated one by one.
pub fn onedsum_sorted(kernel: &SliceKernel, xs: &[f64], weights: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    if xs.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: weights.len() });
    }
    if xs.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Unsorted);
    }
    let mut prefix = Vec::with_capacity(xs.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &w in weights {
        acc += w;
        prefix.push(acc);
    }
    Ok(ys.iter().map(|&y| sorted_one(kernel, xs, weights, &prefix, y)).collect())
}

#[inline]
fn sorted_one(kernel: &SliceKernel, xs: &[f64], weights: &[f64], prefix: &[f64], y: f64) -> f64 {
    let w = kernel.window();
    let lo = xs.partition_point(|&x| y - x > w);
    let hi = lo + xs[lo..].partition_point(|&x| x - y <= w);
    let left = prefix[lo];
    let right = prefix[xs.len()] - prefix[hi];
    let near: f64 = (lo..hi).map(|n| weights[n] * kernel.derivative(y - xs[n])).sum();
    kernel.far() * (left - right) + near
}

/// Sliced estimate of `Σ_n w_n ∇Φ(y_m - x_n)` for every query `y_m`.
///
/// `queries` and `sources` are row-major with the dimension of `slices`.
pub fn sliced_grad_sum(
    kernel: &SliceKernel,
    slices: &SliceSet,
    queries: &[f64],
    sources: &[f64],
    weights: &[f64],
    method: OneDMethod,
) -> Result<Vec<f64>> {
    let d = slices.dim();
    if queries.len() % d != 0 || sources.len() % d != 0 {
        return Err(Error::DimensionMismatch { expected: d, got: queries.len() % d + sources.len() % d });
    }
    let (m_q, n_s) = (queries.len() / d, sources.len() / d);
    if weights.len() != n_s {
        return Err(Error::DimensionMismatch { expected: n_s, got: weights.len() });
    }
    let sorted = match method {
        OneDMethod::Dense => false,
        OneDMethod::Sorted => true,
        OneDMethod::Auto { dense_below } => m_q + n_s >= dense_below,
    };
    let p = d + 1;
    let mut total = vec![0.0; m_q * d];
    for rot in &slices.rotations {
        let mut q = queries.to_vec();
        let mut s = sources.to_vec();
        rot.apply_transpose_rows(&mut q);
        rot.apply_transpose_rows(&mut s);
        let qp = project_all(slices, &q, m_q);
        let sp = project_all(slices, &s, n_s);
        // sums[dir][query]
        let sums: Vec<Vec<f64>> = (0..p)
            .into_par_iter()
            .map(|dir| {
                let ys = &qp[dir * m_q..(dir + 1) * m_q];
                let xs = &sp[dir * n_s..(dir + 1) * n_s];
                if sorted {
                    let mut order: Vec<usize> = (0..n_s).collect();
                    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
                    let xs_sorted: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
                    let w_sorted: Vec<f64> = order.iter().map(|&i| weights[i]).collect();
                    onedsum_sorted(kernel, &xs_sorted, &w_sorted, ys).expect("sorted input")
                } else {
                    onedsum_dense(kernel, xs, weights, ys)
                }
            })
            .collect();
        let mut block = vec![0.0; m_q * d];
        block.par_chunks_mut(d).enumerate().for_each_init(
            || vec![0.0; p],
            |coeffs, (m, out)| {
                for (dir, c) in coeffs.iter_mut().enumerate() {
                    *c = sums[dir][m];
                }
                slices.combine(coeffs, out);
            },
        );
        rot.apply_rows(&mut block);
        for (t, b) in total.iter_mut().zip(&block) {
            *t += b;
        }
    }
    // Antipodal pairs contribute identical terms, so the average over P
    // directions equals the average over the d + 1 vertices per block.
    let inv = 1.0 / (slices.rotations.len() * p) as f64;
    total.iter_mut().for_each(|v| *v *= inv);
    Ok(total)
}

/// Direction-major projections `out[dir * n + i] = ⟨x_i, u_dir⟩`.
fn project_all(slices: &SliceSet, rows: &[f64], n: usize) -> Vec<f64> {
    let d = slices.dim();
    let mut out = vec![0.0; (d + 1) * n];
    let mut buf = vec![0.0; d + 1];
    for (i, x) in rows.chunks_exact(d).enumerate() {
        slices.project(x, &mut buf);
        for (dir, &v) in buf.iter().enumerate() {
            out[dir * n + i] = v;
        }
    }
    out
}

/// Sliced estimate of `MMD²` for the kernel `Φ(x) = E_ξ φ(⟨x, ξ⟩)`: the
/// average over directions of the one-dimensional `MMD²` with kernel `φ`.
pub fn sliced_mmd_squared(kernel: &SliceKernel, slices: &SliceSet, mu: &[f64], nu: &[f64]) -> Result<f64> {
    let d = slices.dim();
    if mu.is_empty() || nu.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if mu.len() % d != 0 || nu.len() % d != 0 {
        return Err(Error::DimensionMismatch { expected: d, got: mu.len() % d + nu.len() % d });
    }
    let (n, m) = (mu.len() / d, nu.len() / d);
    let mut total = 0.0;
    for rot in &slices.rotations {
        let mut a = mu.to_vec();
        let mut b = nu.to_vec();
        rot.apply_transpose_rows(&mut a);
        rot.apply_transpose_rows(&mut b);
        let ap = project_all(slices, &a, n);
        let bp = project_all(slices, &b, m);
        let per_dir: Vec<f64> = (0..=d)
            .into_par_iter()
            .map(|dir| {
                let xs = &ap[dir * n..(dir + 1) * n];
                let ys = &bp[dir * m..(dir + 1) * m];
                mmd_1d(kernel, xs, ys)
            })
            .collect();
        total += per_dir.iter().sum::<f64>();
    }
    Ok(total / (slices.rotations.len() * (d + 1)) as f64)
}

fn mmd_1d(kernel: &SliceKernel, xs: &[f64], ys: &[f64]) -> f64 {
    let self_sum = |v: &[f64]| {
        let mut s = 0.0;
        for i in 0..v.len() {
            s += 0.5 * kernel.value(0.0);
            for j in i + 1..v.len() {
                s += kernel.value(v[i] - v[j]);
            }
        }
        2.0 * s
    };
    let cross: f64 = xs.iter().map(|&x| ys.iter().map(|&y| kernel.value(x - y)).sum::<f64>()).sum();
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    self_sum(xs) / (n * n) + self_sum(ys) / (m * m) - 2.0 * cross / (n * m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn simplex_geometry() {
        for d in [1, 2, 3, 7, 784] {
            let dirs = simplex_directions(d).directions();
            assert_eq!(dirs.len(), d + 1);
            let sample: Vec<usize> = if d > 10 { vec![0, 1, 5, d - 1, d] } else { (0..=d).collect() };
            for &i in &sample {
                for &j in &sample {
                    let g: f64 = dirs[i].iter().zip(&dirs[j]).map(|(a, b)| a * b).sum();
                    let expect = if i == j { 1.0 } else { -1.0 / d as f64 };
                    assert!((g - expect).abs() < 1e-12, "d={d} ({i},{j}) {g}");
                }
            }
        }
        let two = simplex_directions(2).directions();
        for u in &two {
            assert!((u[0].hypot(u[1]) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_and_combination_match_explicit_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = SliceSet::simplex(5);
        let dirs = s.directions();
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut proj = vec![0.0; 6];
        s.project(&x, &mut proj);
        for (p, u) in dirs.iter().enumerate() {
            let dot: f64 = u.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!((proj[p] - dot).abs() < 1e-14);
        }
        let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut out = vec![0.0; 5];
        s.combine(&c, &mut out);
        for k in 0..5 {
            let explicit: f64 = dirs.iter().zip(&c).map(|(u, ci)| u[k] * ci).sum();
            assert!((out[k] - explicit).abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in [1, 2, 3, 10, 40] {
            let rot = Rotation::random(d, &mut rng);
            let q = rot.to_matrix();
            let err = (q.transpose() * &q - DMatrix::identity(d, d)).amax();
            assert!(err < 1e-12, "d={d} err={err}");
            assert!((q.determinant().abs() - 1.0).abs() < 1e-10);
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut y = x.clone();
            rot.apply(&mut y);
            let qx = &q * nalgebra::DVector::from_column_slice(&x);
            for k in 0..d {
                assert!((y[k] - qx[k]).abs() < 1e-12);
            }
            rot.apply_transpose(&mut y);
            for k in 0..d {
                assert!((y[k] - x[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn haar_first_column_is_centered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 4;
        let draws = 10_000;
        let mut mean = [0.0; 4];
        for _ in 0..draws {
            let mut e1 = vec![0.0; d];
            e1[0] = 1.0;
            Rotation::random(d, &mut rng).apply(&mut e1);
            for k in 0..d {
                mean[k] += e1[k] / draws as f64;
            }
        }
        // each coordinate of a uniform unit vector has variance 1/d
        let band = 4.0 * (1.0 / d as f64 / draws as f64).sqrt();
        for m in mean {
            assert!(m.abs() < band, "{mean:?}");
        }
    }

    #[test]
    fn rotated_set_preserves_inner_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = SliceSet::simplex(6);
        s.rotate_random(1, &mut rng);
        let dirs = s.directions();
        for i in 0..7 {
            for j in 0..7 {
                let g: f64 = dirs[i].iter().zip(&dirs[j]).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { -1.0 / 6.0 };
                assert!((g - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn onedsum_examples() {
        let nd = SliceKernel::Abs { scale: -0.5 };
        assert_eq!(onedsum_sorted(&nd, &[0.0], &[1.0], &[2.0]).unwrap(), vec![-0.5]);
        assert!(matches!(onedsum_sorted(&nd, &[1.0, 0.0], &[1.0, 1.0], &[0.0]), Err(Error::Unsorted)));
    }

    #[test]
    fn onedsum_sorted_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let kernels = [
            SliceKernel::Abs { scale: -0.5 },
            SliceKernel::Smooth { spline: SplineProfile::new(2, 0.1).unwrap(), scale: -1.0 },
            SliceKernel::Smooth { spline: SplineProfile::new(4, 0.3).unwrap(), scale: 2.0 },
        ];
        for k in &kernels {
            for spread in [0.05, 1.0] {
                let mut xs: Vec<f64> = (0..300).map(|_| rng.gen_range(-spread..spread)).collect();
                xs.sort_by(f64::total_cmp);
                let ws: Vec<f64> = (0..300).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let ys: Vec<f64> = (0..200).map(|_| rng.gen_range(-spread..spread)).collect();
                let fast = onedsum_sorted(k, &xs, &ws, &ys).unwrap();
                let dense = onedsum_dense(k, &xs, &ws, &ys);
                let scale: f64 = ws.iter().map(|w| w.abs()).sum::<f64>() * k.far().abs();
                for (a, b) in fast.iter().zip(&dense) {
                    assert!((a - b).abs() <= 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn one_dimension_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let profile = RadialProfile::nd();
        let k = SliceKernel::for_profile(&profile, 1).unwrap();
        let src: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sliced = sliced_grad_sum(&k, &SliceSet::simplex(1), &q, &src, &w, OneDMethod::Dense).unwrap();
        for (m, &y) in q.iter().enumerate() {
            let dense: f64 = src
                .iter()
                .zip(&w)
                .map(|(&x, &wn)| wn * (y - x) * profile.kernel_ratio(y - x))
                .sum();
            assert_relative_eq!(sliced[m], dense, epsilon = 1e-13);
        }
    }

    #[test]
    fn antipodal_changes_count_not_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let k = SliceKernel::Smooth { spline: SplineProfile::new(2, 0.3).unwrap(), scale: -1.0 };
        let src: Vec<f64> = (0..30).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let q: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w = vec![0.1; 10];
        let s = SliceSet::simplex(3);
        let a = sliced_grad_sum(&k, &s, &q, &src, &w, OneDMethod::Dense).unwrap();
        let s2 = s.clone().with_antipodal(true);
        assert_eq!(s2.len(), 8);
        let dirs = s2.directions();
        let mut explicit = vec![0.0; 15];
        for (m, y) in q.chunks(3).enumerate() {
            for u in &dirs {
                let py: f64 = u.iter().zip(y).map(|(a, b)| a * b).sum();
                let s_mp: f64 = src
                    .chunks(3)
                    .zip(&w)
                    .map(|(x, wn)| wn * k.derivative(py - u.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()))
                    .sum();
                for c in 0..3 {
                    explicit[m * 3 + c] += u[c] * s_mp / dirs.len() as f64;
                }
            }
        }
        for (x, y) in a.iter().zip(&explicit) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_weights_and_self_query() {
        let k = SliceKernel::Abs { scale: -1.0 };
        let s = SliceSet::simplex(3);
        let out = sliced_grad_sum(&k, &s, &[0.1, 0.2, 0.3], &[1.0, 1.0, 1.0], &[0.0], OneDMethod::Sorted).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
        let out = sliced_grad_sum(&k, &s, &[0.1, 0.2, 0.3], &[0.1, 0.2, 0.3], &[1.0], OneDMethod::Sorted).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn slice_kernel_requires_matching_dimension() {
        let p = RadialProfile::snd(2, 0.1, 3).unwrap();
        assert!(SliceKernel::for_profile(&p, 3).is_ok());
        assert!(SliceKernel::for_profile(&p, 2).is_err());
        assert!(matches!(
            SliceKernel::for_profile(&RadialProfile::gaussian(1.0).unwrap(), 2),
            Err(Error::NotSliceable(_))
        ));
    }
}
