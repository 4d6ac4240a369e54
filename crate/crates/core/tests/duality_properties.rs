//! Weak and strong duality over the corpus, and the smoothing chain.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stot_core::{
    assemble_stochastic_duals, dual_value, gen, lipschitz_smooth_cost, solve_stochastic,
    solve_transport, stochastic_cost, sufficient_level, verify_duality_gap, FEAS_TOL,
};

#[test]
fn weak_duality_over_fuzzed_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1009);
    for inst in gen::corpus(20) {
        for _ in 0..30 {
            let plan = gen::fuzz_feasible_plan(&mut rng, &inst);
            let dual = gen::fuzz_feasible_dual(&mut rng, &inst);
            let dv = dual_value(&inst, &dual).unwrap();
            let pc = stochastic_cost(&inst, &plan).unwrap();
            assert!(dv <= pc + FEAS_TOL, "dual {dv} beats primal {pc}");
            let report = verify_duality_gap(&inst, &plan, &dual).unwrap();
            assert!(report.gap >= -FEAS_TOL);
        }
    }
}

#[test]
fn assembled_duals_close_the_gap_everywhere() {
    for (seed, inst) in gen::corpus(40).into_iter().enumerate() {
        let solved = solve_stochastic(&inst).unwrap();
        let dual = assemble_stochastic_duals(&inst).unwrap();
        let dv = dual_value(&inst, &dual).unwrap();
        assert!(
            (dv - solved.value).abs() <= FEAS_TOL,
            "seed {seed}: dual {dv} vs primal {}",
            solved.value
        );
        let report = verify_duality_gap(&inst, &solved.plan, &dual).unwrap();
        assert!(report.jointly_optimal);
    }
}

#[test]
fn smoothing_chain_is_monotone_and_saturates() {
    for inst in gen::corpus(20) {
        let sx = &inst.space_x;
        let sy = &inst.space_y;
        for sc in &inst.scenarios {
            let n_star = sufficient_level(&sc.cost, sx, sy);
            let exact = solve_transport(&sc.cost, &sc.mu, &sc.nu).unwrap().value;
            let mut previous = f64::NEG_INFINITY;
            let mut n = 1u32;
            loop {
                let smoothed = lipschitz_smooth_cost(&sc.cost, sx, sy, n).unwrap();
                let value = solve_transport(&smoothed.cost_n, &sc.mu, &sc.nu)
                    .unwrap()
                    .value;
                assert!(value >= previous - FEAS_TOL, "chain decreased at level {n}");
                assert!(value <= exact + FEAS_TOL);
                previous = value;
                if n >= n_star {
                    break;
                }
                n = n.saturating_mul(2);
            }
            // at the sufficient level the chain has converged
            let top = lipschitz_smooth_cost(&sc.cost, sx, sy, n_star).unwrap();
            let top_value = solve_transport(&top.cost_n, &sc.mu, &sc.nu).unwrap().value;
            assert!((top_value - exact).abs() <= FEAS_TOL);
        }
    }
}

#[test]
fn smoothed_costs_keep_their_invariants() {
    for inst in gen::corpus(15) {
        let sx = &inst.space_x;
        let sy = &inst.space_y;
        for sc in &inst.scenarios {
            for n in [1u32, 2, 4, 8] {
                let s = lipschitz_smooth_cost(&sc.cost, sx, sy, n).unwrap();
                let level = f64::from(n);
                for (i, row) in s.cost_n.iter().enumerate() {
                    for (j, &v) in row.iter().enumerate() {
                        assert!(v <= sc.cost[i][j].min(level) + 1e-12);
                    }
                }
                // n-Lipschitz in the sum metric
                let rows = s.cost_n.len();
                let cols = s.cost_n[0].len();
                for a in 0..rows {
                    for b in 0..cols {
                        for a2 in 0..rows {
                            for b2 in 0..cols {
                                let lhs = (s.cost_n[a][b] - s.cost_n[a2][b2]).abs();
                                let rhs = level * (sx.dist[a][a2] + sy.dist[b][b2]);
                                assert!(lhs <= rhs + 1e-12);
                            }
                        }
                    }
                }
                // monotone in the level
                let s2 = lipschitz_smooth_cost(&sc.cost, sx, sy, n * 2).unwrap();
                for (row, row2) in s.cost_n.iter().zip(&s2.cost_n) {
                    for (&v, &v2) in row.iter().zip(row2) {
                        assert!(v <= v2 + 1e-12);
                    }
                }
            }
        }
    }
}
