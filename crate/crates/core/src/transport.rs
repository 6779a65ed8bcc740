//! Exact Wasserstein-2 distance between uniform empirical measures.
//!
//! Equal sizes reduce to a linear assignment problem, solved with the
//! shortest augmenting path method (Jonker–Volgenant style, with dual
//! potentials). Unequal sizes are solved as a min-cost flow on the complete
//! bipartite graph with integer supplies `L/N` and demands `L/M`,
//! `L = lcm(N, M)`, by successive shortest paths.

use crate::{Error, ParticleCloud, Result};

/// Squared Euclidean costs `‖x_n - y_m‖²`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_clouds(mu: &ParticleCloud, nu: &ParticleCloud) -> Result<Self> {
        mu.check_dim(nu.dim())?;
        let mut data = Vec::with_capacity(mu.len() * nu.len());
        for x in mu.points() {
            for y in nu.points() {
                data.push(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum());
            }
        }
        if data.iter().any(|c: &f64| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows: mu.len(), cols: nu.len(), data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// Optimal assignment `row -> column` for a square cost matrix and its cost.
pub fn linear_assignment(cost: &CostMatrix) -> Result<(Vec<usize>, f64)> {
    let n = cost.rows;
    if n != cost.cols {
        return Err(Error::DimensionMismatch { expected: n, got: cost.cols });
    }
    if n == 0 {
        return Err(Error::EmptyCloud);
    }
    // 1-based arrays; column 0 is the virtual start of each augmenting path.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut col_owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for row in 1..=n {
        col_owner[0] = row;
        let mut j0 = 0;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[col_owner[j] - 1] = j - 1;
    }
    let total = ordered_sum(assignment.iter().enumerate().map(|(i, &j)| cost.get(i, j)).collect());
    Ok((assignment, total))
}

/// Sums in ascending order, so that the same multiset of terms always gives
/// the same result (this makes `W2(μ, ν) = W2(ν, μ)` hold bit for bit).
fn ordered_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Optimal transport plan between uniform measures on the rows and columns,
/// as integer flows summing to `lcm(rows, cols)`, and the plan's cost
/// normalized to unit mass.
pub fn min_cost_flow(cost: &CostMatrix) -> Result<(Vec<u64>, f64)> {
    let (n, m) = (cost.rows, cost.cols);
    if n == 0 || m == 0 {
        return Err(Error::EmptyCloud);
    }
    let total = (n / gcd(n, m) * m) as u64;
    let mut supply = vec![total / n as u64; n];
    let mut demand = vec![total / m as u64; m];
    let mut flow = vec![0u64; n * m];
    let mut pot_x = vec![0.0f64; n];
    let mut pot_y = vec![0.0f64; m];
    let mut dist_x = vec![0.0f64; n];
    let mut dist_y = vec![0.0f64; m];
    let mut pred_y = vec![0usize; m];
    let mut pred_x = vec![usize::MAX; n];
    let mut done_x = vec![false; n];
    let mut done_y = vec![false; m];
    let mut shipped = 0u64;

    while shipped < total {
        // Dijkstra on reduced costs from a virtual source feeding every row
        // with supply left (reduced cost of that edge is -pot_x ≥ 0).
        for i in 0..n {
            dist_x[i] = if supply[i] > 0 { (-pot_x[i]).max(0.0) } else { f64::INFINITY };
            pred_x[i] = usize::MAX;
        }
        dist_y.fill(f64::INFINITY);
        done_x.fill(false);
        done_y.fill(false);
        loop {
            let mut best = f64::INFINITY;
            let mut pick = None;
            for i in 0..n {
                if !done_x[i] && dist_x[i] < best {
                    best = dist_x[i];
                    pick = Some((true, i));
                }
            }
            for j in 0..m {
                if !done_y[j] && dist_y[j] < best {
                    best = dist_y[j];
                    pick = Some((false, j));
                }
            }
            let Some((is_x, k)) = pick else { break };
            if is_x {
                done_x[k] = true;
                for j in 0..m {
                    if done_y[j] {
                        continue;
                    }
                    let reduced = (cost.get(k, j) + pot_x[k] - pot_y[j]).max(0.0);
                    if best + reduced < dist_y[j] {
                        dist_y[j] = best + reduced;
                        pred_y[j] = k;
                    }
                }
            } else {
                done_y[k] = true;
                for i in 0..n {
                    if done_x[i] || flow[i * m + k] == 0 {
                        continue;
                    }
                    let reduced = (-cost.get(i, k) + pot_y[k] - pot_x[i]).max(0.0);
                    if best + reduced < dist_x[i] {
                        dist_x[i] = best + reduced;
                        pred_x[i] = k;
                    }
                }
            }
        }
        for i in 0..n {
            if dist_x[i].is_finite() {
                pot_x[i] += dist_x[i];
            }
        }
        for j in 0..m {
            pot_y[j] += dist_y[j];
        }
        // With updated potentials the true distance of column j is pot_y[j].
        let sink = (0..m)
            .filter(|&j| demand[j] > 0)
            .min_by(|&a, &b| pot_y[a].total_cmp(&pot_y[b]))
            .expect("unmet demand while supply remains");

        let mut bottleneck = demand[sink];
        let mut j = sink;
        loop {
            let i = pred_y[j];
            match pred_x[i] {
                usize::MAX => {
                    bottleneck = bottleneck.min(supply[i]);
                    break;
                }
                prev => {
                    bottleneck = bottleneck.min(flow[i * m + prev]);
                    j = prev;
                }
            }
        }
        let mut j = sink;
        loop {
            let i = pred_y[j];
            flow[i * m + j] += bottleneck;
            match pred_x[i] {
                usize::MAX => {
                    supply[i] -= bottleneck;
                    break;
                }
                prev => {
                    flow[i * m + prev] -= bottleneck;
                    j = prev;
                }
            }
        }
        demand[sink] -= bottleneck;
        shipped += bottleneck;
    }
    let terms = flow
        .iter()
        .enumerate()
        .filter(|(_, &f)| f > 0)
        .map(|(k, &f)| f as f64 * cost.data[k])
        .collect();
    let cost_total = ordered_sum(terms) / total as f64;
    Ok((flow, cost_total))
}

/// `W2(μ, ν)` for uniform empirical measures.
pub fn w2_exact(mu: &ParticleCloud, nu: &ParticleCloud) -> Result<f64> {
    let cost = CostMatrix::from_clouds(mu, nu)?;
    let squared = if mu.len() == nu.len() {
        linear_assignment(&cost)?.1 / mu.len() as f64
    } else {
        min_cost_flow(&cost)?.1
    };
    Ok(squared.max(0.0).sqrt())
}

/// `W2` in one dimension for equal sizes: sort both and pair in order.
pub fn w2_1d(mu: &ParticleCloud, nu: &ParticleCloud) -> Result<f64> {
    mu.check_dim(1)?;
    nu.check_dim(1)?;
    if mu.len() != nu.len() {
        return Err(Error::DimensionMismatch { expected: mu.len(), got: nu.len() });
    }
    let mut a = mu.as_slice().to_vec();
    let mut b = nu.as_slice().to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let sq: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sq / a.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut impl Rng, n: usize, d: usize) -> ParticleCloud {
        ParticleCloud::new((0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect(), d).unwrap()
    }

    fn brute_force(cost: &CostMatrix) -> f64 {
        fn rec(cost: &CostMatrix, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == cost.rows() {
                *best = best.min(acc);
                return;
            }
            for j in 0..cost.cols() {
                if !used[j] {
                    used[j] = true;
                    rec(cost, row + 1, used, acc + cost.get(row, j), best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(cost, 0, &mut vec![false; cost.cols()], 0.0, &mut best);
        best
    }

    fn repeat(c: &ParticleCloud, times: usize) -> ParticleCloud {
        let rows: Vec<&[f64]> = c.points().flat_map(|p| std::iter::repeat(p).take(times)).collect();
        ParticleCloud::from_rows(&rows).unwrap()
    }

    #[test]
    fn examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = cloud(&mut rng, 10, 2);
        assert!(w2_exact(&c, &c).unwrap() < 1e-12);
        let a = ParticleCloud::new(vec![0.0, 1.0], 1).unwrap();
        let b = ParticleCloud::new(vec![-0.7, 0.3], 1).unwrap();
        assert_relative_eq!(w2_exact(&a, &b).unwrap(), 0.7, max_relative = 1e-14);
        let b = ParticleCloud::new(vec![1.0, 2.0], 1).unwrap();
        assert_relative_eq!(w2_1d(&a, &b).unwrap(), 1.0);
        assert!(w2_1d(&a, &ParticleCloud::new(vec![1.0], 1).unwrap()).is_err());
    }

    #[test]
    fn assignment_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=6 {
            for _ in 0..5 {
                let cost = CostMatrix::from_clouds(&cloud(&mut rng, n, 2), &cloud(&mut rng, n, 2)).unwrap();
                let (perm, total) = linear_assignment(&cost).unwrap();
                let mut seen = perm.clone();
                seen.sort();
                assert_eq!(seen, (0..n).collect::<Vec<_>>());
                assert_relative_eq!(total, brute_force(&cost), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn flow_matches_assignment_on_square_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [1, 3, 8, 20] {
            let cost = CostMatrix::from_clouds(&cloud(&mut rng, n, 3), &cloud(&mut rng, n, 3)).unwrap();
            let lap = linear_assignment(&cost).unwrap().1 / n as f64;
            let (flow, mcf) = min_cost_flow(&cost).unwrap();
            assert_eq!(flow.iter().sum::<u64>(), n as u64);
            assert_relative_eq!(lap, mcf, max_relative = 1e-10);
        }
    }

    #[test]
    fn unequal_sizes_match_replicated_assignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(n, m) in &[(2, 3), (4, 6), (5, 3), (1, 4), (6, 9)] {
            let a = cloud(&mut rng, n, 2);
            let b = cloud(&mut rng, m, 2);
            let l = n / gcd(n, m) * m;
            let replicated = w2_exact(&repeat(&a, l / n), &repeat(&b, l / m)).unwrap();
            let direct = w2_exact(&a, &b).unwrap();
            assert_relative_eq!(direct, replicated, max_relative = 1e-10);
            let (flow, _) = min_cost_flow(&CostMatrix::from_clouds(&a, &b).unwrap()).unwrap();
            for i in 0..n {
                assert_eq!(flow[i * m..(i + 1) * m].iter().sum::<u64>(), (l / n) as u64);
            }
        }
    }

    #[test]
    fn one_dimensional_sorting_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let n = rng.gen_range(1..40);
            let a = cloud(&mut rng, n, 1);
            let b = cloud(&mut rng, n, 1);
            assert_relative_eq!(w2_exact(&a, &b).unwrap(), w2_1d(&a, &b).unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn metric_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let a = cloud(&mut rng, 7, 2);
            let b = cloud(&mut rng, 7, 2);
            let c = cloud(&mut rng, 7, 2);
            let ab = w2_exact(&a, &b).unwrap();
            assert_eq!(ab, w2_exact(&b, &a).unwrap());
            assert!(ab <= w2_exact(&a, &c).unwrap() + w2_exact(&c, &b).unwrap() + 1e-10);
        }
    }
}
