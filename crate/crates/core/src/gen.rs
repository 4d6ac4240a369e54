//! Seeded generation of instances, kernels, vertex plans, and fuzzed
//! feasible plans and duals. Everything is a pure function of its seed.

use crate::kernel::{KernelPairInstance, ProbabilityKernel};
use crate::types::{
    Coupling, DualPair, FiniteMetricSpace, ProbabilityVector, Scenario, StochasticInstance,
    StochasticPlan,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Flat simplex sample: exponentials normalized, rounded to 6 decimals,
/// then the largest entry absorbs the rounding residue so the sum is 1.
pub fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|e| round6(e / total)).collect();
    let deficit = 1.0 - w.iter().sum::<f64>();
    let top = (0..n)
        .max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap())
        .unwrap();
    w[top] += deficit;
    w
}

/// Cost matrix with entries uniform on [0, 1], rounded to 6 decimals.
pub fn cost_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| round6(rng.gen::<f64>())).collect())
        .collect()
}

/// A metric space from a random planar embedding. Points are kept well
/// separated, which bounds the Lipschitz constants of generated costs to
/// desk scale; the separation shrinks with the point count so the
/// rejection loop always terminates.
pub fn metric_space(rng: &mut ChaCha8Rng, n: usize, prefix: &str) -> FiniteMetricSpace {
    let min_sep = 0.05_f64.min(0.7 / (n as f64).sqrt());
    let points: Vec<(f64, f64)> = loop {
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
        let mut separated = true;
        'check: for i in 0..n {
            for j in i + 1..n {
                let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
                if (dx * dx + dy * dy).sqrt() < min_sep {
                    separated = false;
                    break 'check;
                }
            }
        }
        if separated {
            break pts;
        }
    };
    let dist = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                        (dx * dx + dy * dy).sqrt()
                    }
                })
                .collect()
        })
        .collect();
    FiniteMetricSpace {
        labels: (1..=n).map(|i| format!("{prefix}{i}")).collect(),
        dist,
    }
}

/// Symmetrizes a planar-embedding space so the matrix is exactly
/// symmetric regardless of subtraction order.
fn symmetrize(space: &mut FiniteMetricSpace) {
    let n = space.len();
    for i in 0..n {
        for j in i + 1..n {
            let d = space.dist[i][j];
            space.dist[j][i] = d;
        }
    }
}

/// A full instance from one seed: planar metric spaces, simplex marginals
/// and weights, uniform rounded costs.
pub fn instance(seed: u64, nx: usize, ny: usize, scenarios: usize) -> StochasticInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    instance_with_rng(&mut rng, nx, ny, scenarios)
}

pub fn instance_with_rng(
    rng: &mut ChaCha8Rng,
    nx: usize,
    ny: usize,
    scenarios: usize,
) -> StochasticInstance {
    let mut space_x = metric_space(rng, nx, "x");
    let mut space_y = metric_space(rng, ny, "y");
    symmetrize(&mut space_x);
    symmetrize(&mut space_y);
    let weights = simplex(rng, scenarios);
    let scenarios = weights
        .into_iter()
        .map(|weight| Scenario {
            weight,
            cost: cost_matrix(rng, nx, ny),
            mu: ProbabilityVector::new(simplex(rng, nx)),
            nu: ProbabilityVector::new(simplex(rng, ny)),
        })
        .collect();
    StochasticInstance {
        space_x,
        space_y,
        scenarios,
    }
}

/// A vertex of the coupling polytope: the greedy staircase applied to a
/// random ordering of rows and columns, mapped back to original indices.
pub fn vertex_coupling(
    rng: &mut ChaCha8Rng,
    mu: &ProbabilityVector,
    nu: &ProbabilityVector,
) -> Coupling {
    let m = mu.len();
    let n = nu.len();
    let mut rows: Vec<usize> = (0..m).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    rows.shuffle(rng);
    cols.shuffle(rng);
    let mut pi = vec![vec![0.0; n]; m];
    let mut rem_mu: Vec<f64> = rows.iter().map(|&i| mu.mass[i]).collect();
    let mut rem_nu: Vec<f64> = cols.iter().map(|&j| nu.mass[j]).collect();
    let (mut a, mut b) = (0, 0);
    loop {
        let t = rem_mu[a].min(rem_nu[b]);
        pi[rows[a]][cols[b]] = t;
        rem_mu[a] -= t;
        rem_nu[b] -= t;
        if a == m - 1 && b == n - 1 {
            break;
        }
        if a == m - 1 {
            b += 1;
        } else if b == n - 1 || rem_mu[a] <= rem_nu[b] {
            a += 1;
        } else {
            b += 1;
        }
    }
    Coupling::new(pi)
}

/// A feasible plan interior to the polytope: per scenario, a convex
/// combination of the product coupling and a few random vertices.
pub fn fuzz_feasible_plan(rng: &mut ChaCha8Rng, inst: &StochasticInstance) -> StochasticPlan {
    let couplings = inst
        .scenarios
        .iter()
        .map(|sc| {
            let vertices: Vec<Coupling> =
                (0..3).map(|_| vertex_coupling(rng, &sc.mu, &sc.nu)).collect();
            // unrounded simplex weights keep the combination exactly convex
            let raw: Vec<f64> = (0..vertices.len() + 1)
                .map(|_| -(1.0 - rng.gen::<f64>()).ln())
                .collect();
            let total: f64 = raw.iter().sum();
            let m = sc.mu.len();
            let n = sc.nu.len();
            let mut pi = vec![vec![0.0; n]; m];
            for (i, row) in pi.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    let mut v = (raw[0] / total) * sc.mu.mass[i] * sc.nu.mass[j];
                    for (t, vertex) in vertices.iter().enumerate() {
                        v += (raw[t + 1] / total) * vertex.pi[i][j];
                    }
                    *cell = v;
                }
            }
            Coupling::new(pi)
        })
        .collect();
    StochasticPlan { couplings }
}

/// A feasible dual pair: random potentials tightened by the cost
/// transform, then relaxed downward by a random slack.
pub fn fuzz_feasible_dual(rng: &mut ChaCha8Rng, inst: &StochasticInstance) -> DualPair {
    let mut psi = Vec::with_capacity(inst.scenarios.len());
    let mut phi = Vec::with_capacity(inst.scenarios.len());
    for sc in &inst.scenarios {
        let psi_k: Vec<f64> = (0..sc.mu.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let phi_k: Vec<f64> = crate::geometry::c_transform(&sc.cost, &psi_k)
            .into_iter()
            .map(|v| v - rng.gen_range(0.0..0.5))
            .collect();
        psi.push(psi_k);
        phi.push(phi_k);
    }
    DualPair { psi, phi }
}

/// A kernel pair on a shared seeded space.
pub fn kernel_pair(seed: u64, points: usize, scenarios: usize, p: f64) -> KernelPairInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut space = metric_space(&mut rng, points, "s");
    symmetrize(&mut space);
    let weights = simplex(&mut rng, scenarios);
    let mut kernels = (0..2).map(|_| ProbabilityKernel {
        marginals: (0..scenarios)
            .map(|_| ProbabilityVector::new(simplex(&mut rng, points)))
            .collect(),
    });
    KernelPairInstance {
        space,
        weights,
        mu: kernels.next().unwrap(),
        nu: kernels.next().unwrap(),
        p,
    }
}

/// Three kernels on one seeded space, for metric-axiom checks.
pub fn kernel_triple(
    seed: u64,
    points: usize,
    scenarios: usize,
) -> (FiniteMetricSpace, Vec<f64>, [ProbabilityKernel; 3]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut space = metric_space(&mut rng, points, "s");
    symmetrize(&mut space);
    let weights = simplex(&mut rng, scenarios);
    let mut make = || ProbabilityKernel {
        marginals: (0..scenarios)
            .map(|_| ProbabilityVector::new(simplex(&mut rng, points)))
            .collect(),
    };
    let kernels = [make(), make(), make()];
    (space, weights, kernels)
}

/// The seeded corpus used by property and acceptance tests: `count`
/// instances with sides up to 5 points and up to 4 scenarios.
pub fn corpus(count: u64) -> Vec<StochasticInstance> {
    (0..count)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let nx = rng.gen_range(1..=5);
            let ny = rng.gen_range(1..=5);
            let k = rng.gen_range(1..=4);
            instance_with_rng(&mut rng, nx, ny, k)
        })
        .collect()
}
