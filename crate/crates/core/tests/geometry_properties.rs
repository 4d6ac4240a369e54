//! Support geometry over the corpus: optimal supports are monotone,
//! suboptimal vertices expose improving cycles, and constructed
//! potentials are tight exactly on the support.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stot_core::{
    c_transform, check_cyclical_monotonicity, gen, improve_along_cycle, plan_cost,
    rockafellar_potential, solve_transport, support_of, FEAS_TOL, SUPPORT_THRESHOLD,
};

#[test]
fn optimal_supports_are_cyclically_monotone() {
    for inst in gen::corpus(60) {
        for sc in &inst.scenarios {
            let solved = solve_transport(&sc.cost, &sc.mu, &sc.nu).unwrap();
            let support = support_of(&solved.coupling, SUPPORT_THRESHOLD);
            let limit = support.len().min(8);
            assert!(
                check_cyclical_monotonicity(&sc.cost, &support, limit).is_none(),
                "optimal support admits an improving cycle"
            );
        }
    }
}

#[test]
fn suboptimal_vertices_yield_improving_cycles() {
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    let mut witnessed = 0;
    for inst in gen::corpus(40) {
        for sc in &inst.scenarios {
            let optimum = solve_transport(&sc.cost, &sc.mu, &sc.nu).unwrap().value;
            for _ in 0..5 {
                let vertex = gen::vertex_coupling(&mut rng, &sc.mu, &sc.nu);
                let cost = plan_cost(sc, &vertex).unwrap();
                if cost <= optimum + 1e-6 {
                    continue;
                }
                let support = support_of(&vertex, SUPPORT_THRESHOLD);
                let cycle = check_cyclical_monotonicity(&sc.cost, &support, support.len())
                    .expect("suboptimal vertex must expose a violating cycle");
                let improved = improve_along_cycle(&vertex, &cycle).unwrap();
                let new_cost = plan_cost(sc, &improved).unwrap();
                assert!(new_cost < cost - 1e-12, "{new_cost} !< {cost}");
                // marginals survive the shift
                for (a, b) in vertex.row_sums().iter().zip(improved.row_sums()) {
                    assert!((a - b).abs() <= 1e-12);
                }
                for (a, b) in vertex.col_sums().iter().zip(improved.col_sums()) {
                    assert!((a - b).abs() <= 1e-12);
                }
                witnessed += 1;
            }
        }
    }
    assert!(witnessed > 50, "only {witnessed} suboptimal vertices seen");
}

#[test]
fn constructed_potentials_are_tight_on_the_support() {
    for inst in gen::corpus(50) {
        for sc in &inst.scenarios {
            let solved = solve_transport(&sc.cost, &sc.mu, &sc.nu).unwrap();
            let support = support_of(&solved.coupling, SUPPORT_THRESHOLD);
            let anchor = support.pairs()[0];
            let psi = rockafellar_potential(&sc.cost, &support, anchor).unwrap();
            let phi = c_transform(&sc.cost, &psi);

            assert_eq!(psi[anchor.0], 0.0, "anchor normalization must be exact");
            for (x, &pv) in psi.iter().enumerate() {
                for (y, &fv) in phi.iter().enumerate() {
                    assert!(fv - pv <= sc.cost[x][y] + FEAS_TOL);
                }
            }
            for &(x, y) in support.pairs() {
                assert!(
                    (phi[y] - psi[x] - sc.cost[x][y]).abs() <= FEAS_TOL,
                    "potentials not tight at ({x},{y})"
                );
            }
            // the potential equals its double transform on support rows
            for &(x, _) in support.pairs() {
                let back = phi
                    .iter()
                    .enumerate()
                    .map(|(y, &fv)| fv - sc.cost[x][y])
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!((psi[x] - back).abs() <= FEAS_TOL);
            }
        }
    }
}
