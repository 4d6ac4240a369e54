//! Algebraic identities checked with randomized inputs.

use proptest::prelude::*;
use stot_core::{c_transform, plan_cost, Coupling, ProbabilityVector, Scenario};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..10.0f64, cols), rows)
}

proptest! {
    /// plan_cost is linear in the coupling argument.
    #[test]
    fn plan_cost_is_linear(
        cost in matrix(3, 4),
        a in matrix(3, 4),
        b in matrix(3, 4),
        alpha in 0.0..=1.0f64,
    ) {
        let sc = Scenario {
            weight: 1.0,
            cost,
            mu: ProbabilityVector::new(vec![0.0; 3]),
            nu: ProbabilityVector::new(vec![0.0; 4]),
        };
        let mix: Vec<Vec<f64>> = a
            .iter()
            .zip(&b)
            .map(|(ra, rb)| {
                ra.iter()
                    .zip(rb)
                    .map(|(&x, &y)| alpha * x + (1.0 - alpha) * y)
                    .collect()
            })
            .collect();
        let lhs = plan_cost(&sc, &Coupling::new(mix)).unwrap();
        let rhs = alpha * plan_cost(&sc, &Coupling::new(a)).unwrap()
            + (1.0 - alpha) * plan_cost(&sc, &Coupling::new(b)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    /// Shifting a potential shifts its transform by the same constant.
    #[test]
    fn c_transform_commutes_with_shifts(
        cost in matrix(3, 3),
        psi in prop::collection::vec(-5.0..5.0f64, 3),
        shift in -10.0..10.0f64,
    ) {
        let base = c_transform(&cost, &psi);
        let shifted_psi: Vec<f64> = psi.iter().map(|v| v + shift).collect();
        let shifted = c_transform(&cost, &shifted_psi);
        for (b, s) in base.iter().zip(&shifted) {
            prop_assert!((b + shift - s).abs() <= 1e-9);
        }
    }

    /// The transform is antitone: larger potentials never shrink it.
    #[test]
    fn c_transform_is_monotone(
        cost in matrix(3, 3),
        psi in prop::collection::vec(-5.0..5.0f64, 3),
        bump in prop::collection::vec(0.0..5.0f64, 3),
    ) {
        let low = c_transform(&cost, &psi);
        let bigger: Vec<f64> = psi.iter().zip(&bump).map(|(v, b)| v + b).collect();
        let high = c_transform(&cost, &bigger);
        for (l, h) in low.iter().zip(&high) {
            prop_assert!(l <= &(h + 1e-12));
        }
    }
}
