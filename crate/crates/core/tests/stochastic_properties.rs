//! Decomposition invariants: the solved value is a true lower bound, it
//! splits over scenarios, and it recomputes exactly under deletion.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stot_core::{
    brute_force_value, gen, solve_stochastic, stochastic_cost, FEAS_TOL,
};

#[test]
fn solved_value_bounds_every_fuzzed_feasible_plan() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for inst in gen::corpus(10) {
        let solved = solve_stochastic(&inst).unwrap();
        for _ in 0..100 {
            let plan = gen::fuzz_feasible_plan(&mut rng, &inst);
            let cost = stochastic_cost(&inst, &plan).unwrap();
            assert!(
                cost >= solved.value - FEAS_TOL,
                "plan cost {cost} beats optimum {}",
                solved.value
            );
        }
    }
}

#[test]
fn value_decomposes_into_weighted_scenario_optima() {
    for inst in gen::corpus(40) {
        let solved = solve_stochastic(&inst).unwrap();
        let mut want = 0.0;
        for sc in &inst.scenarios {
            want += sc.weight * brute_force_value(&sc.cost, &sc.mu, &sc.nu).unwrap();
        }
        assert!((solved.value - want).abs() <= FEAS_TOL);
    }
}

#[test]
fn deleting_a_scenario_renormalizes_exactly() {
    for inst in gen::corpus(30) {
        if inst.scenarios.len() < 2 {
            continue;
        }
        let solved = solve_stochastic(&inst).unwrap();
        let dropped = inst.scenarios[0].weight;
        let mut reduced = inst.clone();
        reduced.scenarios.remove(0);
        for sc in &mut reduced.scenarios {
            sc.weight /= 1.0 - dropped;
        }
        let got = solve_stochastic(&reduced).unwrap().value;
        // identical per-scenario solves and an identical fold order make
        // the recomputation bit-for-bit
        let want = inst.scenarios[1..]
            .iter()
            .zip(&solved.per_scenario_values[1..])
            .fold(0.0, |acc, (sc, v)| acc + (sc.weight / (1.0 - dropped)) * v);
        assert_eq!(got, want);
    }
}

#[test]
fn aggregation_respects_scenario_order() {
    for inst in gen::corpus(20) {
        let solved = solve_stochastic(&inst).unwrap();
        let ordered = inst
            .scenarios
            .iter()
            .zip(&solved.per_scenario_values)
            .fold(0.0, |acc, (sc, v)| acc + sc.weight * v);
        assert!((solved.value - ordered).abs() <= 1e-12);
    }
}
