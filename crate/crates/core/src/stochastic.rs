//! Scenario-wise decomposition: each scenario is solved independently and
//! the optimal values aggregate as a weighted sum in scenario order.

use crate::solver::{solve_transport, SolveError};
use crate::types::{
    plan_cost, Coupling, StochasticInstance, StochasticPlan, Violation, FEAS_TOL,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StochasticError {
    #[error("scenario {index}: {source}")]
    Scenario {
        index: usize,
        #[source]
        source: SolveError,
    },
    #[error("plan has {plan_len} couplings, instance has {scenarios} scenarios")]
    PlanLengthMismatch { plan_len: usize, scenarios: usize },
    #[error("scenario {index}: {source}")]
    ScenarioCost {
        index: usize,
        #[source]
        source: crate::types::CoreError,
    },
}

/// Optimal plan for every scenario plus the aggregated value.
#[derive(Debug, Clone)]
pub struct StochasticSolveResult {
    pub plan: StochasticPlan,
    pub value: f64,
    pub per_scenario_values: Vec<f64>,
}

/// Solves every scenario and aggregates the optimal values by weight,
/// summed in scenario order so the result is reproducible bit for bit.
pub fn solve_stochastic(
    inst: &StochasticInstance,
) -> Result<StochasticSolveResult, StochasticError> {
    let mut couplings = Vec::with_capacity(inst.scenarios.len());
    let mut per_scenario_values = Vec::with_capacity(inst.scenarios.len());
    for (index, sc) in inst.scenarios.iter().enumerate() {
        let solved = solve_transport(&sc.cost, &sc.mu, &sc.nu)
            .map_err(|source| StochasticError::Scenario { index, source })?;
        per_scenario_values.push(solved.value);
        couplings.push(solved.coupling);
    }
    let value = inst
        .scenarios
        .iter()
        .zip(&per_scenario_values)
        .fold(0.0, |acc, (sc, v)| acc + sc.weight * v);
    Ok(StochasticSolveResult {
        plan: StochasticPlan { couplings },
        value,
        per_scenario_values,
    })
}

/// Expected transport cost of `plan`: the weighted sum of per-scenario
/// plan costs, in scenario order.
pub fn stochastic_cost(
    inst: &StochasticInstance,
    plan: &StochasticPlan,
) -> Result<f64, StochasticError> {
    if plan.couplings.len() != inst.scenarios.len() {
        return Err(StochasticError::PlanLengthMismatch {
            plan_len: plan.couplings.len(),
            scenarios: inst.scenarios.len(),
        });
    }
    let mut total = 0.0;
    for (index, (sc, coupling)) in inst.scenarios.iter().zip(&plan.couplings).enumerate() {
        let c = plan_cost(sc, coupling)
            .map_err(|source| StochasticError::ScenarioCost { index, source })?;
        total += sc.weight * c;
    }
    Ok(total)
}

/// Feasibility of a plan as a kernel with the instance's marginals.
#[derive(Debug, Clone)]
pub struct PlanFeasibility {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// True iff every coupling reproduces its scenario's marginals within
/// the feasibility tolerance.
pub fn is_feasible_kernel_plan(inst: &StochasticInstance, plan: &StochasticPlan) -> PlanFeasibility {
    let mut violations = Vec::new();
    if plan.couplings.len() != inst.scenarios.len() {
        violations.push(Violation::new(
            "couplings",
            &format!(
                "plan has {} couplings, instance has {} scenarios",
                plan.couplings.len(),
                inst.scenarios.len()
            ),
        ));
        return PlanFeasibility {
            feasible: false,
            violations,
        };
    }
    for (k, (sc, coupling)) in inst.scenarios.iter().zip(&plan.couplings).enumerate() {
        coupling.feasibility_violations(
            &sc.mu,
            &sc.nu,
            FEAS_TOL,
            &format!("scenarios[{k}]"),
            &mut violations,
        );
    }
    PlanFeasibility {
        feasible: violations.is_empty(),
        violations,
    }
}

/// The product plan: each scenario couples its marginals independently,
/// `pi[k](x, y) = mu_k(x) * nu_k(y)`.
pub fn product_plan(inst: &StochasticInstance) -> StochasticPlan {
    let couplings = inst
        .scenarios
        .iter()
        .map(|sc| {
            Coupling::new(
                sc.mu
                    .mass
                    .iter()
                    .map(|&a| sc.nu.mass.iter().map(|&b| a * b).collect())
                    .collect(),
            )
        })
        .collect();
    StochasticPlan { couplings }
}
