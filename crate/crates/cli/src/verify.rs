//! Self-checks runnable from the command line.

use mmdflow::kernels::{cpd_falsify, gram, Kernel, KernelVariant};
use mmdflow::slicing::{onedsum_dense, onedsum_sorted, sliced_grad_sum, OneDMethod, SliceKernel, SliceSet};
use mmdflow::smoothed_norm::{abs_power_eigenvalue, cd_constant, riemann_liouville_quadrature, snd_profile_general};
use mmdflow::splines::{bspline_center_value, huber};
use mmdflow::transport::{w2_1d, w2_exact};
use mmdflow::{flow, ParticleCloud, RadialProfile, SplineProfile};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SUITES: [&str; 6] = ["splines", "profiles", "slicing", "cpd", "dirac", "transport"];

/// One line of the verification table.
#[derive(Debug, Clone)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(suite: &'static str, name: &'static str, passed: bool, detail: String) -> Check {
    Check { suite, name, passed, detail }
}

/// Runs one suite, or all of them for `"all"`. `None` for an unknown name.
pub fn run_suite(name: &str) -> Option<Vec<Check>> {
    match name {
        "all" => Some(SUITES.iter().flat_map(|s| run_suite(s).unwrap()).collect()),
        "splines" => Some(splines()),
        "profiles" => Some(profiles()),
        "slicing" => Some(slicing()),
        "cpd" => Some(cpd()),
        "dirac" => Some(dirac()),
        "transport" => Some(transport()),
        _ => None,
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cloud(r: &mut ChaCha8Rng, n: usize, d: usize, half_width: f64) -> ParticleCloud {
    ParticleCloud::new((0..n * d).map(|_| r.gen_range(-half_width..half_width)).collect(), d).unwrap()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn splines() -> Vec<Check> {
    let mut center: f64 = 0.0;
    let mut mass: f64 = 0.0;
    let mut tails: f64 = 0.0;
    for m in 1..=8 {
        let s = SplineProfile::new(m, 1.0).unwrap();
        center = center.max((s.eval(0.0) - bspline_center_value(m)).abs());
        let r = s.support_radius();
        let h = 2.0 * r / 4000.0;
        let integral: f64 = (0..4000).map(|k| s.eval(-r + (k as f64 + 0.5) * h) * h).sum();
        mass = mass.max((integral - 1.0).abs());
        for x in [r, r + 0.5, 3.0 * r] {
            tails = tails.max((s.smoothed_abs(x) - x).abs()).max((s.smoothed_abs(-x) - x).abs());
        }
    }
    vec![
        check("splines", "center value, closed sum", center <= 1e-14, format!("max error {center:.1e}")),
        check("splines", "unit mass", mass <= 1e-6, format!("max error {mass:.1e}")),
        check("splines", "|x| outside the support", tails <= 1e-12, format!("max error {tails:.1e}")),
    ]
}

fn profiles() -> Vec<Check> {
    let recurrence: f64 = (1..=40usize)
        .map(|d| {
            let via_gamma = abs_power_eigenvalue(d, 1.0);
            (cd_constant(d) - via_gamma).abs() / via_gamma
        })
        .fold(0.0, f64::max);
    let mut closed: f64 = 0.0;
    let mut quad: f64 = 0.0;
    for (m, eps, d) in [(2, 0.5, 3), (4, 1.0, 2), (6, 0.2, 5)] {
        let p = RadialProfile::snd(m, eps, d).unwrap();
        let spline = SplineProfile::new(m, eps).unwrap();
        for s in [0.0, 0.05, 0.3, 1.0, 2.5, 7.0] {
            let general = snd_profile_general(m, eps, d, s).unwrap();
            closed = closed.max((p.value(s) - general).abs() / general.abs());
            let q = riemann_liouville_quadrature(|x| spline.smoothed_abs(x), d, s).unwrap();
            quad = quad.max((p.value(s) - q).abs() / q.abs());
        }
    }
    let nd = RadialProfile::nd();
    let nd_err = [0.0, 0.5, 3.0].iter().map(|&s| (nd.value(s) - 0.5 * s).abs()).fold(0.0, f64::max);
    vec![
        check("profiles", "C_d recurrence vs Gamma", recurrence <= 1e-12, format!("max relative error {recurrence:.1e}")),
        check("profiles", "closed form vs general", closed <= 1e-10, format!("max relative error {closed:.1e}")),
        check("profiles", "closed form vs quadrature", quad <= 1e-7, format!("max relative error {quad:.1e}")),
        check("profiles", "ND profile", nd_err == 0.0, format!("max error {nd_err:.1e}")),
    ]
}

fn slicing() -> Vec<Check> {
    let mut r = rng(3);
    let p = RadialProfile::snd(2, 0.3, 3).unwrap();
    let kernel = SliceKernel::for_profile(&p, 3).unwrap();
    let mut xs: Vec<f64> = (0..60).map(|_| r.gen_range(-2.0..2.0)).collect();
    let mut ys: Vec<f64> = (0..40).map(|_| r.gen_range(-2.0..2.0)).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let w: Vec<f64> = (0..60).map(|_| r.gen_range(-1.0..1.0)).collect();
    let dense = onedsum_dense(&kernel, &xs, &w, &ys);
    let sorted = onedsum_sorted(&kernel, &xs, &w, &ys).unwrap();
    let oned = dense.iter().zip(&sorted).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let src = cloud(&mut r, 25, 3, 1.5);
    let qry = cloud(&mut r, 10, 3, 1.5);
    let weights = vec![1.0 / 25.0; 25];
    let mut exact = vec![0.0; 30];
    for (i, y) in qry.points().enumerate() {
        for x in src.points() {
            let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
            let ratio = p.kernel_ratio(norm(&diff));
            for k in 0..3 {
                exact[3 * i + k] += ratio * diff[k] / 25.0;
            }
        }
    }
    let blocks = 2000;
    let mut slices = SliceSet::simplex(3);
    slices.rotate_random(blocks, &mut r);
    let est = sliced_grad_sum(&kernel, &slices, qry.as_slice(), src.as_slice(), &weights, OneDMethod::Sorted).unwrap();
    let err = norm(&est.iter().zip(&exact).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm(&exact);
    vec![
        check("slicing", "sorted vs dense 1D sums", oned <= 1e-12, format!("max error {oned:.1e}")),
        check(
            "slicing",
            "sliced vs dense gradient",
            err <= 0.02,
            format!("relative error {err:.1e} with {} directions", slices.len()),
        ),
    ]
}

fn cpd() -> Vec<Check> {
    let mut r = rng(5);
    let snd = RadialProfile::snd(2, 0.5, 3).unwrap();
    let found: Vec<_> = (1..=3).filter_map(|d| cpd_falsify(|s| -snd.value(s), d, 200, &mut r)).collect();
    let mut min_eig = f64::INFINITY;
    for t in 0..50 {
        let pts = cloud(&mut r, 2 + t % 20, 2, 3.0);
        let kernel = Kernel::new(RadialProfile::snd(2, 0.3, 2).unwrap(), KernelVariant::Pd);
        let g = gram(&kernel, &pts);
        let trace = g.trace();
        min_eig = min_eig.min(g.symmetric_eigenvalues().min() / trace);
    }
    let huber_found = cpd_falsify(|s| -huber(1.0, s), 1, 10_000, &mut rng(6));
    vec![
        check(
            "cpd",
            "SND has no counterexample",
            found.is_empty(),
            format!("{} violations in d = 1..3", found.len()),
        ),
        check("cpd", "PD variant Gram matrices", min_eig >= -1e-8, format!("min eigenvalue/trace {min_eig:.1e}")),
        check(
            "cpd",
            "Huber is not CPD",
            huber_found.is_some(),
            huber_found.map_or("no counterexample".into(), |c| format!("form {:.2e}", c.form)),
        ),
    ]
}

fn dirac() -> Vec<Check> {
    let tau = 0.1;
    let nd = RadialProfile::nd();
    let y = [0.0, 0.0];
    let mut r = rng(9);
    let mut period: f64 = 0.0;
    for _ in 0..100 {
        let x0 = [r.gen_range(0.001..tau / 2.0), 0.0];
        let x2 = flow::dirac_step(&nd, &flow::dirac_step(&nd, &x0, &y, tau), &y, tau);
        period = period.max((x2[0] - x0[0]).abs());
    }
    let snd = RadialProfile::snd(2, 1.0, 3).unwrap();
    let mut x = vec![0.05, 0.0];
    for _ in 0..1000 {
        x = flow::dirac_step(&snd, &x, &y, tau);
    }
    let left = norm(&x);
    vec![
        check("dirac", "ND orbit has period two", period <= 1e-16, format!("max drift {period:.1e}")),
        check("dirac", "SND converges to the Dirac", left <= 1e-20, format!("distance after 1000 steps {left:.1e}")),
    ]
}

fn transport() -> Vec<Check> {
    let mut r = rng(14);
    let mut brute: f64 = 0.0;
    for n in 1..=6 {
        let a = cloud(&mut r, n, 2, 2.0);
        let b = cloud(&mut r, n, 2, 2.0);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permutations(&mut perm, 0, &mut |p| {
            let cost: f64 = p
                .iter()
                .enumerate()
                .map(|(i, &j)| a.point(i).iter().zip(b.point(j)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .sum();
            best = best.min(cost);
        });
        brute = brute.max((w2_exact(&a, &b).unwrap() - (best / n as f64).sqrt()).abs());
    }
    let mut oned: f64 = 0.0;
    for n in [1, 7, 30] {
        let a = cloud(&mut r, n, 1, 3.0);
        let mut rows = cloud(&mut r, n, 1, 3.0).into_vec();
        rows.shuffle(&mut r);
        let b = ParticleCloud::new(rows, 1).unwrap();
        oned = oned.max((w2_exact(&a, &b).unwrap() - w2_1d(&a, &b).unwrap()).abs());
    }
    vec![
        check("transport", "assignment vs brute force", brute <= 1e-10, format!("max error {brute:.1e}")),
        check("transport", "assignment vs 1D sorting", oned <= 1e-10, format!("max error {oned:.1e}")),
    ]
}

fn permutations(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, visit);
        p.swap(k, i);
    }
}
