//! Support geometry of transport plans: cyclical monotonicity checks,
//! improving cycles, potential construction from a monotone support, and
//! the three-way optimality equivalence report.

use crate::stochastic::{solve_stochastic, stochastic_cost, StochasticError};
use crate::types::{
    plan_cost, Coupling, StochasticInstance, StochasticPlan, FEAS_TOL, SUPPORT_THRESHOLD,
};
use thiserror::Error;

/// Default bound on the length of cycles searched for violations.
pub const DEFAULT_MAX_CYCLE_LEN: usize = 8;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("support set is empty")]
    EmptySupport,
    #[error("anchor ({0}, {1}) is not in the support")]
    AnchorNotInSupport(usize, usize),
    #[error(
        "support is not cyclically monotone: witness cycle of length {} with defect {}",
        cycle.pairs.len(),
        cycle.defect
    )]
    NonMonotoneSupport { cycle: Cycle },
    #[error("pair ({0}, {1}) does not lie in the coupling's support")]
    NonSupportPair(usize, usize),
    #[error("cycle carries no mass to shift")]
    DegenerateCycle,
    #[error("cycle defect {0} is not negative, nothing to improve")]
    CycleNotImproving(f64),
    #[error("potentials are infeasible at ({x}, {y}): phi - psi exceeds cost by {excess}")]
    InfeasibleDual { x: usize, y: usize, excess: f64 },
}

/// The set of cells of a coupling carrying mass, sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    pairs: Vec<(usize, usize)>,
}

impl SupportSet {
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        pairs.dedup();
        Self { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, pair: (usize, usize)) -> bool {
        self.pairs.binary_search(&pair).is_ok()
    }
}

/// An ordered family of support cells with its rerouting defect
/// `sum c(x_i, y_{i+1}) - sum c(x_i, y_i)`. A negative defect witnesses a
/// cyclical-monotonicity violation.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    pub pairs: Vec<(usize, usize)>,
    pub defect: f64,
}

/// Cells of `coupling` with mass strictly above `threshold`.
pub fn support_of(coupling: &Coupling, threshold: f64) -> SupportSet {
    let mut pairs = Vec::new();
    for (i, row) in coupling.pi.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            if x > threshold {
                pairs.push((i, j));
            }
        }
    }
    SupportSet { pairs }
}

/// Rerouting defect of an ordered family of cells.
pub fn cycle_defect(cost: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    let n = pairs.len();
    let mut defect = 0.0;
    for (t, &(x, y)) in pairs.iter().enumerate() {
        let (_, y_next) = pairs[(t + 1) % n];
        defect += cost[x][y_next] - cost[x][y];
    }
    defect
}

/// Searches for a family of at most `max_len` distinct support cells whose
/// rerouting defect is below `-1e-9`, returning the most negative one
/// found. Families are enumerated once each, rotated so the smallest cell
/// comes first.
pub fn check_cyclical_monotonicity(
    cost: &[Vec<f64>],
    support: &SupportSet,
    max_len: usize,
) -> Option<Cycle> {
    if support.len() < 2 || max_len < 2 {
        return None;
    }
    let mut search = CycleSearch {
        cost,
        pairs: support.pairs(),
        start: 0,
        max_len,
        used: vec![false; support.len()],
        chain: Vec::with_capacity(max_len),
        best: None,
    };
    for start in 0..support.len() {
        search.start = start;
        search.chain.push(start);
        search.used[start] = true;
        search.extend(0.0);
        search.used[start] = false;
        search.chain.pop();
    }
    search.best
}

/// Arc weight of appending `q` after `p` in a rerouting family.
fn arc_weight(cost: &[Vec<f64>], p: (usize, usize), q: (usize, usize)) -> f64 {
    cost[p.0][q.1] - cost[p.0][p.1]
}

struct CycleSearch<'a> {
    cost: &'a [Vec<f64>],
    pairs: &'a [(usize, usize)],
    start: usize,
    max_len: usize,
    used: Vec<bool>,
    chain: Vec<usize>,
    best: Option<Cycle>,
}

impl CycleSearch<'_> {
    fn extend(&mut self, partial: f64) {
        let last = *self.chain.last().unwrap();
        if self.chain.len() >= 2 {
            let defect =
                partial + arc_weight(self.cost, self.pairs[last], self.pairs[self.start]);
            if defect < -FEAS_TOL && self.best.as_ref().is_none_or(|b| defect < b.defect) {
                self.best = Some(Cycle {
                    pairs: self.chain.iter().map(|&t| self.pairs[t]).collect(),
                    defect,
                });
            }
        }
        if self.chain.len() == self.max_len {
            return;
        }
        // only cells after `start` keep the smallest cell in front
        for next in self.start + 1..self.pairs.len() {
            if !self.used[next] {
                let w = arc_weight(self.cost, self.pairs[last], self.pairs[next]);
                self.used[next] = true;
                self.chain.push(next);
                self.extend(partial + w);
                self.chain.pop();
                self.used[next] = false;
            }
        }
    }
}

/// Shifts the largest feasible mass along a negative-defect cycle:
/// subtract at each `(x_i, y_i)`, add at `(x_i, y_{i+1})`. Marginals are
/// preserved and the cost drops by `theta * |defect|`.
pub fn improve_along_cycle(coupling: &Coupling, cycle: &Cycle) -> Result<Coupling, GeometryError> {
    if cycle.defect >= 0.0 {
        return Err(GeometryError::CycleNotImproving(cycle.defect));
    }
    let support = support_of(coupling, SUPPORT_THRESHOLD);
    for &(x, y) in &cycle.pairs {
        if x >= coupling.rows() || y >= coupling.cols() || !support.contains((x, y)) {
            return Err(GeometryError::NonSupportPair(x, y));
        }
    }
    let theta = cycle
        .pairs
        .iter()
        .map(|&(x, y)| coupling.pi[x][y])
        .fold(f64::INFINITY, f64::min);
    if theta <= 0.0 {
        return Err(GeometryError::DegenerateCycle);
    }
    let mut pi = coupling.pi.clone();
    let n = cycle.pairs.len();
    for (t, &(x, y)) in cycle.pairs.iter().enumerate() {
        let (_, y_next) = cycle.pairs[(t + 1) % n];
        pi[x][y] -= theta;
        pi[x][y_next] += theta;
    }
    Ok(Coupling::new(pi))
}

/// The potential generated by chains through a cyclically monotone
/// support, anchored so `psi(anchor_x) = 0`.
///
/// Chain values are taken to a fixpoint over the support cells; a value
/// still growing after `|support|` rounds certifies a positive-gain cycle,
/// i.e. a monotonicity violation, which is returned as an error with the
/// witness attached.
pub fn rockafellar_potential(
    cost: &[Vec<f64>],
    support: &SupportSet,
    anchor: (usize, usize),
) -> Result<Vec<f64>, GeometryError> {
    if support.is_empty() {
        return Err(GeometryError::EmptySupport);
    }
    if !support.contains(anchor) {
        return Err(GeometryError::AnchorNotInSupport(anchor.0, anchor.1));
    }
    let pairs = support.pairs();
    let k = pairs.len();
    let (ax, ay) = anchor;

    // val[p]: best chain value ending at support cell p, before the final
    // hop to the queried point
    let mut val: Vec<f64> = pairs.iter().map(|&(px, _)| cost[ax][ay] - cost[px][ay]).collect();
    let mut pred: Vec<usize> = (0..k).collect();
    for _ in 0..k {
        let mut changed = false;
        for q in 0..k {
            for p in 0..k {
                let cand = val[p] + cost[pairs[p].0][pairs[p].1] - cost[pairs[q].0][pairs[p].1];
                if cand > val[q] {
                    val[q] = cand;
                    pred[q] = p;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    // any sizable improvement left means chains gain along some cycle
    for q in 0..k {
        for p in 0..k {
            let cand = val[p] + cost[pairs[p].0][pairs[p].1] - cost[pairs[q].0][pairs[p].1];
            if cand > val[q] + FEAS_TOL {
                pred[q] = p;
                return Err(GeometryError::NonMonotoneSupport {
                    cycle: extract_violating_cycle(cost, pairs, &pred, q),
                });
            }
        }
    }

    let nx = cost.len();
    let mut psi = vec![0.0; nx];
    for (x, slot) in psi.iter_mut().enumerate() {
        *slot = pairs
            .iter()
            .zip(&val)
            .map(|(&(px, py), &v)| v + cost[px][py] - cost[x][py])
            .fold(f64::NEG_INFINITY, f64::max);
    }
    let shift = psi[ax];
    for v in &mut psi {
        *v -= shift;
    }
    psi[ax] = 0.0;
    Ok(psi)
}

/// Walks predecessor links from a still-improving cell into the gain
/// cycle; the backward walk order is exactly a negative-defect rerouting
/// family.
fn extract_violating_cycle(
    cost: &[Vec<f64>],
    pairs: &[(usize, usize)],
    pred: &[usize],
    from: usize,
) -> Cycle {
    let mut at = from;
    for _ in 0..pairs.len() {
        at = pred[at];
    }
    let mut walk = vec![at];
    let mut cur = pred[at];
    while cur != at {
        walk.push(cur);
        cur = pred[cur];
    }
    // rotate so the lexicographically smallest cell leads
    let min_pos = (0..walk.len())
        .min_by_key(|&t| pairs[walk[t]])
        .unwrap();
    walk.rotate_left(min_pos);
    let cells: Vec<(usize, usize)> = walk.into_iter().map(|t| pairs[t]).collect();
    let defect = cycle_defect(cost, &cells);
    Cycle {
        pairs: cells,
        defect,
    }
}

/// Tight dual partner of `psi`: `phi(y) = min_x (psi(x) + cost(x, y))`.
pub fn c_transform(cost: &[Vec<f64>], psi: &[f64]) -> Vec<f64> {
    let ny = cost.first().map_or(0, |r| r.len());
    (0..ny)
        .map(|y| {
            psi.iter()
                .enumerate()
                .map(|(x, &p)| p + cost[x][y])
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Cells where `phi(y) - psi(x) = cost(x, y)` within `tol`. The pair must
/// be dual-feasible up to `tol` everywhere, otherwise an error points at
/// the worst offender.
pub fn c_subdifferential(
    cost: &[Vec<f64>],
    psi: &[f64],
    phi: &[f64],
    tol: f64,
) -> Result<SupportSet, GeometryError> {
    let mut pairs = Vec::new();
    for (x, &pv) in psi.iter().enumerate() {
        for (y, &fv) in phi.iter().enumerate() {
            let slack = fv - pv - cost[x][y];
            if slack > tol {
                return Err(GeometryError::InfeasibleDual {
                    x,
                    y,
                    excess: slack,
                });
            }
            if slack.abs() <= tol {
                pairs.push((x, y));
            }
        }
    }
    Ok(SupportSet { pairs })
}

/// Per-scenario outcome of the three-way optimality equivalence.
#[derive(Debug, Clone)]
pub struct ScenarioMain3 {
    /// plan cost matches the scenario optimum within tolerance
    pub optimal: bool,
    /// no violating cycle up to the length bound
    pub monotone: bool,
    /// constructed potentials are feasible and tight on the support
    pub certified: bool,
    pub support: SupportSet,
    pub witness: Option<Cycle>,
    pub psi: Option<Vec<f64>>,
    pub phi: Option<Vec<f64>>,
    pub gamma: Option<SupportSet>,
}

/// Equivalence report: optimality, monotonicity, and certification must
/// agree scenario by scenario; any disagreement is listed as a defect.
#[derive(Debug, Clone)]
pub struct Main3Report {
    pub per_scenario: Vec<ScenarioMain3>,
    pub plan_value: f64,
    pub optimal_value: f64,
    pub aggregate_optimal: bool,
    pub defects: Vec<String>,
    pub equivalent: bool,
}

/// Evaluates the three equivalent optimality characterizations of `plan`
/// and cross-checks that they agree, per scenario and in aggregate.
pub fn verify_main3(
    inst: &StochasticInstance,
    plan: &StochasticPlan,
    max_len: usize,
) -> Result<Main3Report, StochasticError> {
    let solved = solve_stochastic(inst)?;
    let plan_value = stochastic_cost(inst, plan)?;
    let mut per_scenario = Vec::with_capacity(inst.scenarios.len());
    let mut defects = Vec::new();

    for (k, (sc, coupling)) in inst.scenarios.iter().zip(&plan.couplings).enumerate() {
        let cost_k = plan_cost(sc, coupling)
            .map_err(|source| StochasticError::ScenarioCost { index: k, source })?;
        let optimal = cost_k <= solved.per_scenario_values[k] + FEAS_TOL;

        let support = support_of(coupling, SUPPORT_THRESHOLD);
        let limit = support.len().min(max_len);
        let witness = check_cyclical_monotonicity(&sc.cost, &support, limit);
        let monotone = witness.is_none();

        let (certified, psi, phi, gamma) = if support.is_empty() {
            (false, None, None, None)
        } else {
            match rockafellar_potential(&sc.cost, &support, support.pairs()[0]) {
                Err(_) => (false, None, None, None),
                Ok(psi) => {
                    let phi = c_transform(&sc.cost, &psi);
                    match c_subdifferential(&sc.cost, &psi, &phi, FEAS_TOL) {
                        Err(_) => (false, Some(psi), Some(phi), None),
                        Ok(gamma) => {
                            let covered =
                                support.pairs().iter().all(|&pair| gamma.contains(pair));
                            (covered, Some(psi), Some(phi), Some(gamma))
                        }
                    }
                }
            }
        };

        if optimal != monotone || optimal != certified {
            defects.push(format!(
                "scenario {k}: optimal={optimal}, monotone={monotone}, certified={certified}"
            ));
        }
        per_scenario.push(ScenarioMain3 {
            optimal,
            monotone,
            certified,
            support,
            witness,
            psi,
            phi,
            gamma,
        });
    }

    let aggregate_optimal = plan_value <= solved.value + FEAS_TOL;
    let all_scenarios_optimal = per_scenario.iter().all(|s| s.optimal);
    if aggregate_optimal != all_scenarios_optimal {
        defects.push(format!(
            "aggregate optimality ({aggregate_optimal}) disagrees with per-scenario flags"
        ));
    }
    Ok(Main3Report {
        per_scenario,
        plan_value,
        optimal_value: solved.value,
        aggregate_optimal,
        equivalent: defects.is_empty(),
        defects,
    })
}

/// True iff `plan` places all but a tolerance of its mass inside the given
/// per-scenario tight sets.
///
/// Panics if the plan shape does not match the instance; feasibility of
/// the plan is the caller's responsibility.
pub fn check_plan_concentration(
    inst: &StochasticInstance,
    gammas: &[SupportSet],
    plan: &StochasticPlan,
) -> bool {
    assert_eq!(gammas.len(), inst.scenarios.len());
    assert_eq!(plan.couplings.len(), inst.scenarios.len());
    for (gamma, coupling) in gammas.iter().zip(&plan.couplings) {
        let mut outside = 0.0;
        for (i, row) in coupling.pi.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if !gamma.contains((i, j)) {
                    outside += x;
                }
            }
        }
        if outside > FEAS_TOL {
            return false;
        }
    }
    true
}
