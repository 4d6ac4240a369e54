//! Dual objective evaluation, gap certification, dual assembly from the
//! support geometry, and Lipschitz cost smoothing.

use crate::geometry::{c_transform, rockafellar_potential, support_of, GeometryError};
use crate::stochastic::{is_feasible_kernel_plan, StochasticError};
use crate::types::{
    DualPair, FiniteMetricSpace, StochasticInstance, StochasticPlan, Violation, FEAS_TOL,
    SUPPORT_THRESHOLD,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DualityError {
    #[error("dual potentials have the wrong shape for scenario {scenario}")]
    DimensionMismatch { scenario: usize },
    #[error("smoothing level must be a positive integer")]
    InvalidLevel,
    #[error("smoothing shapes disagree: cost is {rows}x{cols}, spaces have {nx} and {ny} points")]
    SmoothingShape {
        rows: usize,
        cols: usize,
        nx: usize,
        ny: usize,
    },
    #[error("plan is infeasible: {}", summarize(.violations))]
    InfeasiblePlan { violations: Vec<Violation> },
    #[error(
        "dual is infeasible at scenario {scenario}, ({x}, {y}): phi - psi exceeds cost by {excess}"
    )]
    InfeasibleDual {
        scenario: usize,
        x: usize,
        y: usize,
        excess: f64,
    },
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
    #[error("scenario {scenario}: {source}")]
    Geometry {
        scenario: usize,
        #[source]
        source: GeometryError,
    },
}

fn summarize(violations: &[Violation]) -> String {
    violations
        .iter()
        .take(3)
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// A cost matrix flattened onto the `n`-Lipschitz functions, together
/// with its level.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedCost {
    pub level: u32,
    pub cost_n: Vec<Vec<f64>>,
}

fn check_dual_shape(inst: &StochasticInstance, dual: &DualPair) -> Result<(), DualityError> {
    let nx = inst.space_x.len();
    let ny = inst.space_y.len();
    let k = inst.scenarios.len();
    if dual.psi.len() != k || dual.phi.len() != k {
        return Err(DualityError::DimensionMismatch { scenario: 0 });
    }
    for s in 0..k {
        if dual.psi[s].len() != nx || dual.phi[s].len() != ny {
            return Err(DualityError::DimensionMismatch { scenario: s });
        }
    }
    Ok(())
}

/// Dual objective: the weighted sum over scenarios of
/// `sum nu * phi - sum mu * psi`, in scenario order.
pub fn dual_value(inst: &StochasticInstance, dual: &DualPair) -> Result<f64, DualityError> {
    check_dual_shape(inst, dual)?;
    let mut total = 0.0;
    for (k, sc) in inst.scenarios.iter().enumerate() {
        let phi_part: f64 = sc.nu.mass.iter().zip(&dual.phi[k]).map(|(w, f)| w * f).sum();
        let psi_part: f64 = sc.mu.mass.iter().zip(&dual.psi[k]).map(|(w, f)| w * f).sum();
        total += sc.weight * (phi_part - psi_part);
    }
    Ok(total)
}

fn check_dual_feasibility(inst: &StochasticInstance, dual: &DualPair) -> Result<(), DualityError> {
    for (k, sc) in inst.scenarios.iter().enumerate() {
        for (x, &pv) in dual.psi[k].iter().enumerate() {
            for (y, &fv) in dual.phi[k].iter().enumerate() {
                let excess = fv - pv - sc.cost[x][y];
                if excess > FEAS_TOL {
                    return Err(DualityError::InfeasibleDual {
                        scenario: k,
                        x,
                        y,
                        excess,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Primal cost, dual objective, and their gap for a feasible pair.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    /// gap within tolerance: the pair certifies joint optimality
    pub jointly_optimal: bool,
}

/// Certifies a (plan, dual) pair: both sides must be feasible, and the
/// report carries `primal - dual`, which is nonnegative up to tolerance.
pub fn verify_duality_gap(
    inst: &StochasticInstance,
    plan: &StochasticPlan,
    dual: &DualPair,
) -> Result<GapReport, DualityError> {
    check_dual_shape(inst, dual)?;
    let feas = is_feasible_kernel_plan(inst, plan);
    if !feas.feasible {
        return Err(DualityError::InfeasiblePlan {
            violations: feas.violations,
        });
    }
    check_dual_feasibility(inst, dual)?;
    let primal = crate::stochastic::stochastic_cost(inst, plan)?;
    let dual_obj = dual_value(inst, dual)?;
    let gap = primal - dual_obj;
    Ok(GapReport {
        primal,
        dual: dual_obj,
        gap,
        jointly_optimal: gap <= FEAS_TOL,
    })
}

/// Largest `n`-Lipschitz minorant construction:
/// `cost_n(x, y) = min over (x', y') of min(cost(x', y'), n) + n * (d_X(x, x') + d_Y(y, y'))`.
///
/// The result never exceeds `min(cost, n)`, is `n`-Lipschitz for the sum
/// metric, and increases pointwise to `cost` as the level grows.
pub fn lipschitz_smooth_cost(
    cost: &[Vec<f64>],
    space_x: &FiniteMetricSpace,
    space_y: &FiniteMetricSpace,
    n: u32,
) -> Result<SmoothedCost, DualityError> {
    if n == 0 {
        return Err(DualityError::InvalidLevel);
    }
    let rows = cost.len();
    let cols = cost.first().map_or(0, |r| r.len());
    if rows != space_x.len() || cols != space_y.len() || cost.iter().any(|r| r.len() != cols) {
        return Err(DualityError::SmoothingShape {
            rows,
            cols,
            nx: space_x.len(),
            ny: space_y.len(),
        });
    }
    let level = f64::from(n);
    let mut cost_n = vec![vec![0.0; cols]; rows];
    for (x, out_row) in cost_n.iter_mut().enumerate() {
        for (y, out) in out_row.iter_mut().enumerate() {
            let mut best = f64::INFINITY;
            for (xp, cost_row) in cost.iter().enumerate() {
                for (yp, &base) in cost_row.iter().enumerate() {
                    let cand =
                        base.min(level) + level * (space_x.dist[x][xp] + space_y.dist[y][yp]);
                    if cand < best {
                        best = cand;
                    }
                }
            }
            *out = best;
        }
    }
    Ok(SmoothedCost { level: n, cost_n })
}

/// A level beyond which smoothing reproduces the cost exactly: the larger
/// of the biggest cost entry and the cost's Lipschitz constant for the
/// sum metric, rounded up. Sufficient, not claimed tight.
pub fn sufficient_level(
    cost: &[Vec<f64>],
    space_x: &FiniteMetricSpace,
    space_y: &FiniteMetricSpace,
) -> u32 {
    let mut bound = cost.iter().flatten().fold(0.0_f64, |a, &c| a.max(c));
    let rows = cost.len();
    let cols = cost.first().map_or(0, |r| r.len());
    for x in 0..rows {
        for y in 0..cols {
            for xp in 0..rows {
                for yp in 0..cols {
                    if (x, y) == (xp, yp) {
                        continue;
                    }
                    let d = space_x.dist[x][xp] + space_y.dist[y][yp];
                    if d > 0.0 {
                        bound = bound.max((cost[x][y] - cost[xp][yp]).abs() / d);
                    }
                }
            }
        }
    }
    bound.ceil().clamp(1.0, f64::from(u32::MAX)) as u32
}

/// Builds dual potentials scenario by scenario from the optimal support:
/// the anchored chain potential and its transform. The result is feasible
/// and closes the duality gap.
pub fn assemble_stochastic_duals(inst: &StochasticInstance) -> Result<DualPair, DualityError> {
    let mut psi = Vec::with_capacity(inst.scenarios.len());
    let mut phi = Vec::with_capacity(inst.scenarios.len());
    for (k, sc) in inst.scenarios.iter().enumerate() {
        let solved = crate::solver::solve_transport(&sc.cost, &sc.mu, &sc.nu)
            .map_err(|source| StochasticError::Scenario { index: k, source })?;
        let support = support_of(&solved.coupling, SUPPORT_THRESHOLD);
        let anchor = support.pairs()[0];
        let psi_k = rockafellar_potential(&sc.cost, &support, anchor)
            .map_err(|source| DualityError::Geometry {
                scenario: k,
                source,
            })?;
        let phi_k = c_transform(&sc.cost, &psi_k);
        psi.push(psi_k);
        phi.push(phi_k);
    }
    Ok(DualPair { psi, phi })
}
