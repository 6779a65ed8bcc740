//! Explicit Euler MMD particle flow.
//!
//! With `K(x, y) = Φ(x - y)` the velocity of particle `i` is
//!
//! ```text
//! v_i = (1/N) Σ_n ∇Φ(x_i - x_n) - (1/M) Σ_m ∇Φ(x_i - y_m),
//! ∇Φ(z) = z · Φ'(‖z‖)/‖z‖,
//! ```
//!
//! and one step is `x_i ← x_i - τ v_i` for all particles at once (a Jacobi
//! update, every velocity is computed from the previous state). The ratio
//! `Φ'(s)/s` comes from [`RadialProfile::kernel_ratio`] and is continued at
//! `s = 0` by `Φ''(0)` (or by 0 for ND), so the self term `n = i` is
//! included and contributes nothing.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::kernels::Kernel;
use crate::mmd::mmd_squared;
use crate::slicing::{sliced_grad_sum, sliced_mmd_squared, OneDMethod, SliceKernel, SliceSet};
use crate::transport::w2_exact;
use crate::{invalid, Error, ParticleCloud, RadialProfile, Real, Result};

/// Floating point type the particle state is stored and updated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

/// Options for sliced summation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlicedConfig {
    /// Total direction count `P`; a multiple of `d + 1` (of `2(d + 1)` when
    /// antipodal), one independently rotated simplex per `d + 1`.
    pub directions: usize,
    /// Draw fresh rotations every iteration; otherwise use the plain simplex.
    pub rotate: bool,
    pub antipodal: bool,
    pub method: OneDMethod,
}

/// How the kernel sums of the velocity are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Summation {
    /// All pairs, `O(N(N + M) d)` per step.
    #[default]
    Dense,
    /// Sliced estimate over rotated simplex directions.
    Sliced(SlicedConfig),
}

impl Summation {
    /// Sliced summation with `directions` directions, rotated every step.
    pub fn sliced(directions: usize) -> Self {
        Self::Sliced(SlicedConfig { directions, rotate: true, antipodal: false, method: OneDMethod::default() })
    }
}

/// Step size, iteration count and evaluation schedule of a flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub tau: f64,
    pub iters: usize,
    /// Iterations at which metrics are recorded, sorted, within `[0, iters]`.
    pub checkpoints: Vec<usize>,
    pub precision: Precision,
    pub seed: u64,
    pub summation: Summation,
    /// Skip the Wasserstein evaluation (reported as NaN).
    pub skip_w2: bool,
}

impl FlowConfig {
    /// Checkpoints default to the first and the last iteration.
    pub fn new(tau: f64, iters: usize) -> Self {
        Self {
            tau,
            iters,
            checkpoints: if iters == 0 { vec![0] } else { vec![0, iters] },
            precision: Precision::F64,
            seed: 0,
            summation: Summation::Dense,
            skip_w2: false,
        }
    }

    pub fn with_checkpoints(mut self, mut checkpoints: Vec<usize>) -> Self {
        checkpoints.dedup();
        self.checkpoints = checkpoints;
        self
    }

    /// `count` checkpoints spaced evenly (in iterations) from 0 to `iters`.
    pub fn with_even_checkpoints(self, count: usize) -> Self {
        let count = count.max(2);
        let iters = self.iters;
        let mut cps: Vec<usize> = (0..count).map(|k| k * iters / (count - 1)).collect();
        cps.dedup();
        self.with_checkpoints(cps)
    }

    pub fn with_precision(mut self, precision: Precision) -> Self {
        self.precision = precision;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_summation(mut self, summation: Summation) -> Self {
        self.summation = summation;
        self
    }

    pub fn with_skip_w2(mut self, skip: bool) -> Self {
        self.skip_w2 = skip;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("step size must be positive, got {}", self.tau)));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("checkpoints must be strictly increasing"));
        }
        if let Some(&last) = self.checkpoints.last() {
            if last > self.iters {
                return Err(invalid(format!("checkpoint {last} exceeds the iteration count {}", self.iters)));
            }
        }
        if let Summation::Sliced(s) = self.summation {
            if s.directions == 0 {
                return Err(invalid("sliced summation needs at least one direction"));
            }
        }
        Ok(())
    }
}

/// Metrics recorded at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    /// `t = τ·iter`.
    pub time: f64,
    pub mmd2: f64,
    pub w2: f64,
    /// Wall-clock time spent in flow steps so far (metrics excluded).
    pub wall_ms: f64,
}

/// Checkpoint records and the final particle positions.
#[derive(Debug, Clone)]
pub struct FlowTrace {
    rows: Vec<TraceRow>,
    final_state: ParticleCloud,
}

impl FlowTrace {
    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn first(&self) -> Option<&TraceRow> {
        self.rows.first()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn final_state(&self) -> &ParticleCloud {
        &self.final_state
    }
}

/// `v_i` for every particle (dense summation), row-major into `out`.
pub fn velocity<T: Real>(profile: &RadialProfile, state: &[T], target: &[T], d: usize, out: &mut [T]) {
    let n_inv = T::lit(1.0 / (state.len() / d) as f64);
    let m_inv = T::lit(1.0 / (target.len() / d) as f64);
    out.par_chunks_mut(d).zip(state.par_chunks(d)).for_each_init(
        || (vec![T::zero(); d], vec![T::zero(); d]),
        |(rep, att), (v, x)| {
            rep.fill(T::zero());
            att.fill(T::zero());
            accumulate(profile, x, state, rep);
            accumulate(profile, x, target, att);
            for k in 0..d {
                v[k] = rep[k] * n_inv - att[k] * m_inv;
            }
        },
    );
}

/// `acc += Σ_j ∇Φ(x - p_j)` over the rows of `points`.
#[inline]
fn accumulate<T: Real>(profile: &RadialProfile, x: &[T], points: &[T], acc: &mut [T]) {
    let d = x.len();
    if d == 2 {
        let (x0, x1) = (x[0], x[1]);
        let (mut a0, mut a1) = (T::zero(), T::zero());
        for p in points.chunks_exact(2) {
            let (z0, z1) = (x0 - p[0], x1 - p[1]);
            let r = profile.kernel_ratio((z0 * z0 + z1 * z1).sqrt());
            a0 = a0 + z0 * r;
            a1 = a1 + z1 * r;
        }
        acc[0] = acc[0] + a0;
        acc[1] = acc[1] + a1;
        return;
    }
    for p in points.chunks_exact(d) {
        let s2 = x.iter().zip(p).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b));
        let r = profile.kernel_ratio(s2.sqrt());
        for k in 0..d {
            acc[k] = acc[k] + (x[k] - p[k]) * r;
        }
    }
}

/// One dense Euler step in double precision.
pub fn flow_step(profile: &RadialProfile, state: &ParticleCloud, target: &ParticleCloud, tau: f64) -> Result<ParticleCloud> {
    state.check_dim(target.dim())?;
    let d = state.dim();
    let mut v = vec![0.0; state.as_slice().len()];
    velocity(profile, state.as_slice(), target.as_slice(), d, &mut v);
    let next: Vec<f64> = state.as_slice().iter().zip(&v).map(|(x, vi)| x - tau * vi).collect();
    ParticleCloud::new(next, d).map_err(|_| Error::Diverged { iteration: 1 })
}

/// Single particle `x` flowing towards a single target `y`:
/// `x ← y + (x - y)(1 + τ Φ'(s)/s)` with `s = ‖x - y‖`.
///
/// Evaluated as `y + (x - y)/s · (s + τ Φ'(s))`, so the new distance is
/// formed by one addition (exact up to a single rounding for ND).
pub fn dirac_step(profile: &RadialProfile, x: &[f64], y: &[f64], tau: f64) -> Vec<f64> {
    let s = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if s == 0.0 {
        return x.to_vec();
    }
    let next = s + tau * profile.kernel_sign() * profile.d1(s);
    x.iter().zip(y).map(|(a, b)| b + (a - b) / s * next).collect()
}

/// Runs the flow from `init` towards `target`.
pub fn run_flow(
    profile: &RadialProfile,
    init: &ParticleCloud,
    target: &ParticleCloud,
    cfg: &FlowConfig,
) -> Result<FlowTrace> {
    run_flow_with(profile, init, target, cfg, |_, _| {})
}

/// [`run_flow`], calling `observe` with every checkpoint row and the state
/// at that checkpoint.
pub fn run_flow_with(
    profile: &RadialProfile,
    init: &ParticleCloud,
    target: &ParticleCloud,
    cfg: &FlowConfig,
    observe: impl FnMut(&TraceRow, &ParticleCloud),
) -> Result<FlowTrace> {
    cfg.validate()?;
    init.check_dim(target.dim())?;
    match cfg.precision {
        Precision::F64 => Runner::<f64>::new(profile, init, target, cfg)?.run(observe),
        Precision::F32 => Runner::<f32>::new(profile, init, target, cfg)?.run(observe),
    }
}

struct Runner<'a, T> {
    profile: &'a RadialProfile,
    target: &'a ParticleCloud,
    cfg: &'a FlowConfig,
    d: usize,
    state: Vec<T>,
    target_t: Vec<T>,
    sliced: Option<Sliced>,
}

struct Sliced {
    kernel: SliceKernel,
    slices: SliceSet,
    blocks: usize,
    config: SlicedConfig,
    rng: ChaCha8Rng,
    metric_slices: SliceSet,
    weights: Vec<f64>,
}

impl<'a, T: Real> Runner<'a, T> {
    fn new(profile: &'a RadialProfile, init: &ParticleCloud, target: &'a ParticleCloud, cfg: &'a FlowConfig) -> Result<Self> {
        let d = init.dim();
        let cast = |c: &ParticleCloud| c.as_slice().iter().map(|&v| T::lit(v)).collect::<Vec<T>>();
        let sliced = match cfg.summation {
            Summation::Dense => None,
            Summation::Sliced(sc) => {
                let kernel = SliceKernel::for_profile(profile, d)?;
                let per_block = (d + 1) * if sc.antipodal { 2 } else { 1 };
                if sc.directions % per_block != 0 {
                    return Err(invalid(format!(
                        "sliced summation in R^{d} needs a multiple of {per_block} directions, got {}",
                        sc.directions
                    )));
                }
                let blocks = sc.directions / per_block;
                let slices = SliceSet::simplex(d).with_antipodal(sc.antipodal);
                let mut metric_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
                let mut metric_slices = slices.clone();
                metric_slices.rotate_random(blocks, &mut metric_rng);
                let (n, m) = (init.len() as f64, target.len() as f64);
                let weights = std::iter::repeat(1.0 / n)
                    .take(init.len())
                    .chain(std::iter::repeat(-1.0 / m).take(target.len()))
                    .collect();
                Some(Sliced {
                    kernel,
                    slices,
                    blocks,
                    config: sc,
                    rng: ChaCha8Rng::seed_from_u64(cfg.seed),
                    metric_slices,
                    weights,
                })
            }
        };
        Ok(Self { profile, target, cfg, d, state: cast(init), target_t: cast(target), sliced })
    }

    fn run(mut self, mut observe: impl FnMut(&TraceRow, &ParticleCloud)) -> Result<FlowTrace> {
        let mut rows = Vec::with_capacity(self.cfg.checkpoints.len());
        let mut checkpoints = self.cfg.checkpoints.iter().peekable();
        let mut velocity_buf = vec![T::zero(); self.state.len()];
        let mut step_time = 0.0;
        let tau = T::lit(self.cfg.tau);
        for k in 0..=self.cfg.iters {
            if checkpoints.peek() == Some(&&k) {
                checkpoints.next();
                let cloud = self.cloud(k)?;
                let row = TraceRow {
                    iter: k,
                    time: self.cfg.tau * k as f64,
                    mmd2: self.mmd2(&cloud)?,
                    w2: if self.cfg.skip_w2 {
                        f64::NAN
                    } else {
                        w2_exact(&cloud, self.target).map_err(|_| Error::Diverged { iteration: k })?
                    },
                    wall_ms: step_time,
                };
                observe(&row, &cloud);
                rows.push(row);
            }
            if k == self.cfg.iters {
                break;
            }
            let start = Instant::now();
            self.velocity(&mut velocity_buf)?;
            let mut finite = true;
            for (x, v) in self.state.iter_mut().zip(&velocity_buf) {
                *x = *x - tau * *v;
                finite &= x.is_finite();
            }
            step_time += start.elapsed().as_secs_f64() * 1e3;
            if !finite {
                return Err(Error::Diverged { iteration: k + 1 });
            }
        }
        let final_state = self.cloud(self.cfg.iters)?;
        Ok(FlowTrace { rows, final_state })
    }

    fn velocity(&mut self, out: &mut [T]) -> Result<()> {
        let Some(sl) = self.sliced.as_mut() else {
            velocity(self.profile, &self.state, &self.target_t, self.d, out);
            return Ok(());
        };
        if sl.config.rotate {
            sl.slices.rotate_random(sl.blocks, &mut sl.rng);
        }
        let queries: Vec<f64> = self.state.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
        let mut sources = queries.clone();
        sources.extend(self.target.as_slice());
        let v = sliced_grad_sum(&sl.kernel, &sl.slices, &queries, &sources, &sl.weights, sl.config.method)?;
        for (o, vi) in out.iter_mut().zip(v) {
            *o = T::lit(vi);
        }
        Ok(())
    }

    fn cloud(&self, iteration: usize) -> Result<ParticleCloud> {
        let data = self.state.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
        ParticleCloud::new(data, self.d).map_err(|_| Error::Diverged { iteration })
    }

    fn mmd2(&self, cloud: &ParticleCloud) -> Result<f64> {
        match &self.sliced {
            None => mmd_squared(&Kernel::cpd(self.profile.clone()), cloud, self.target),
            Some(sl) => sliced_mmd_squared(&sl.kernel, &sl.metric_slices, cloud.as_slice(), self.target.as_slice()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> ParticleCloud {
        ParticleCloud::new(v.to_vec(), 2).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(FlowConfig::new(0.0, 10).validate().is_err());
        assert!(FlowConfig::new(0.1, 10).with_checkpoints(vec![0, 11]).validate().is_err());
        assert!(FlowConfig::new(0.1, 10).with_checkpoints(vec![5, 2]).validate().is_err());
        assert!(FlowConfig::new(0.1, 10).validate().is_ok());
        assert_eq!(FlowConfig::new(0.1, 10).with_even_checkpoints(3).checkpoints, vec![0, 5, 10]);
    }

    #[test]
    fn zero_iterations_record_initial_metrics() {
        let p = RadialProfile::snd(2, 1.0, 3).unwrap();
        let init = pt(&[0.0, 0.0, 1.0, 1.0]);
        let target = pt(&[2.0, 0.0, 0.0, 2.0]);
        let trace = run_flow(&p, &init, &target, &FlowConfig::new(0.1, 0)).unwrap();
        assert_eq!(trace.rows().len(), 1);
        let row = trace.rows()[0];
        assert_eq!((row.iter, row.time), (0, 0.0));
        assert_eq!(row.w2, w2_exact(&init, &target).unwrap());
        assert_eq!(trace.final_state(), &init);
    }

    #[test]
    fn state_equal_to_target_has_zero_velocity() {
        let p = RadialProfile::snd(2, 0.5, 3).unwrap();
        let c = pt(&[0.0, 0.1, 1.0, -0.3, 0.4, 2.0, -1.0, 0.7]);
        let mut v = vec![0.0; 8];
        velocity(&p, c.as_slice(), c.as_slice(), 2, &mut v);
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn single_pair_matches_dirac_step() {
        let p = RadialProfile::snd(2, 1.0, 3).unwrap();
        let x = [0.3, -0.2];
        let y = [0.1, 0.4];
        let stepped = flow_step(&p, &pt(&x), &pt(&y), 0.05).unwrap();
        let dirac = dirac_step(&p, &x, &y, 0.05);
        for (a, b) in stepped.as_slice().iter().zip(&dirac) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn nd_dirac_is_period_two() {
        let nd = RadialProfile::nd();
        let y = [0.0, 0.0];
        let x0 = [0.2, 0.0];
        let x1 = dirac_step(&nd, &x0, &y, 1.0);
        assert!((x1[0] + 0.3).abs() <= 1e-15);
        let x2 = dirac_step(&nd, &x1, &y, 1.0);
        assert!((x2[0] - x0[0]).abs() <= 1e-15);
        assert_eq!(dirac_step(&nd, &y, &y, 1.0), y.to_vec());
    }

    #[test]
    fn divergence_is_reported() {
        let g = RadialProfile::gaussian(0.01).unwrap();
        let init = pt(&[0.0, 0.0, 0.001, 0.0]);
        let target = pt(&[0.005, 0.0, 0.0, 0.005]);
        let cfg = FlowConfig::new(1e300, 5);
        assert!(matches!(run_flow(&g, &init, &target, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn f32_and_f64_agree_over_short_runs() {
        let p = RadialProfile::snd(2, 0.1, 3).unwrap();
        let init = pt(&[0.0, 0.0, 0.1, 0.0, 0.0, 0.1]);
        let target = pt(&[1.0, 0.0, -1.0, 0.0, 0.0, 1.0]);
        let cfg = FlowConfig::new(0.05, 50);
        let a = run_flow(&p, &init, &target, &cfg).unwrap();
        let b = run_flow(&p, &init, &target, &cfg.clone().with_precision(Precision::F32)).unwrap();
        assert!((a.last().unwrap().w2 - b.last().unwrap().w2).abs() < 1e-4);
    }

    #[test]
    fn sliced_requires_compatible_directions() {
        let p = RadialProfile::snd(2, 0.1, 2).unwrap();
        let init = pt(&[0.0, 0.0]);
        let target = pt(&[1.0, 0.0]);
        let cfg = FlowConfig::new(0.05, 2).with_summation(Summation::sliced(4));
        assert!(run_flow(&p, &init, &target, &cfg).is_err());
        let cfg = FlowConfig::new(0.05, 2).with_summation(Summation::sliced(6));
        assert!(run_flow(&p, &init, &target, &cfg).is_ok());
    }
}
