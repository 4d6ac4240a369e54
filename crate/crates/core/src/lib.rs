//! Exact solvers, duality certificates, and monotonicity analysis for
//! scenario-indexed optimal transport on finite spaces, plus the
//! Wasserstein metric between probability kernels.

pub mod duality;
pub mod gen;
pub mod geometry;
pub mod kernel;
pub mod solver;
pub mod stochastic;
pub mod types;

pub use duality::{
    assemble_stochastic_duals, dual_value, lipschitz_smooth_cost, sufficient_level,
    verify_duality_gap, DualityError, GapReport, SmoothedCost,
};
pub use geometry::{
    c_subdifferential, c_transform, check_cyclical_monotonicity, check_plan_concentration,
    cycle_defect, improve_along_cycle, rockafellar_potential, support_of, verify_main3, Cycle,
    GeometryError, Main3Report, ScenarioMain3, SupportSet, DEFAULT_MAX_CYCLE_LEN,
};
pub use kernel::{
    check_metric_axioms, kr_dual_w1, per_scenario_transport_costs, wasserstein_p, KernelError,
    KernelPairInstance, KrResult, MetricAxiomReport, ProbabilityKernel,
};
pub use solver::{
    brute_force_value, extract_duals, solve_transport, SolveError, SolveResult, ENUMERATION_CAP,
};
pub use stochastic::{
    is_feasible_kernel_plan, product_plan, solve_stochastic, stochastic_cost, PlanFeasibility,
    StochasticError, StochasticSolveResult,
};
pub use types::{
    plan_cost, reference_instance, validate_instance, CoreError, Coupling, DualPair,
    FiniteMetricSpace, ProbabilityVector, Scenario, StochasticInstance, StochasticPlan,
    ValidationReport, Violation, FEAS_TOL, INPUT_TOL, SUPPORT_THRESHOLD,
};
