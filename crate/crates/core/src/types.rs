//! Domain types, input validation, and the shared reference instance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for user-supplied sums (marginals, scenario weights).
pub const INPUT_TOL: f64 = 1e-12;
/// Tolerance for computed quantities: feasibility, slackness, duality gaps.
pub const FEAS_TOL: f64 = 1e-9;
/// Mass threshold below which a coupling entry does not count as support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// A finite metric space: labeled points plus a distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetricSpace {
    pub labels: Vec<String>,
    pub dist: Vec<Vec<f64>>,
}

impl FiniteMetricSpace {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Collects every metric-axiom violation under `path`.
    pub fn validate_into(&self, path: &str, out: &mut Vec<Violation>) {
        let n = self.labels.len();
        if n == 0 {
            out.push(Violation::new(path, "space has no points"));
            return;
        }
        if self.dist.len() != n || self.dist.iter().any(|row| row.len() != n) {
            out.push(Violation::new(
                &format!("{path}.dist"),
                &format!("distance matrix must be {n}x{n}"),
            ));
            return;
        }
        for i in 0..n {
            for j in 0..n {
                let d = self.dist[i][j];
                if !d.is_finite() {
                    out.push(Violation::new(
                        &format!("{path}.dist[{i}][{j}]"),
                        "distance is not finite",
                    ));
                    return;
                }
                if i == j && d != 0.0 {
                    out.push(Violation::new(
                        &format!("{path}.dist[{i}][{i}]"),
                        "self-distance must be 0",
                    ));
                }
                if i != j && d <= 0.0 {
                    out.push(Violation::new(
                        &format!("{path}.dist[{i}][{j}]"),
                        "distance between distinct points must be positive",
                    ));
                }
                if self.dist[i][j] != self.dist[j][i] {
                    out.push(Violation::new(
                        &format!("{path}.dist[{i}][{j}]"),
                        "distance matrix is not symmetric",
                    ));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if self.dist[i][k] > self.dist[i][j] + self.dist[j][k] + INPUT_TOL {
                        out.push(Violation::new(
                            &format!("{path}.dist"),
                            &format!("triangle inequality fails for ({i},{j},{k})"),
                        ));
                    }
                }
            }
        }
    }
}

/// A probability distribution over the points of a finite space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector {
    pub mass: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(mass: Vec<f64>) -> Self {
        Self { mass }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    fn validate_into(&self, expected_len: usize, path: &str, out: &mut Vec<Violation>) {
        if self.mass.len() != expected_len {
            out.push(Violation::new(
                path,
                &format!("expected {expected_len} entries, got {}", self.mass.len()),
            ));
            return;
        }
        for (i, &m) in self.mass.iter().enumerate() {
            if !m.is_finite() {
                out.push(Violation::new(&format!("{path}[{i}]"), "mass is not finite"));
                return;
            }
            if m < 0.0 {
                out.push(Violation::new(&format!("{path}[{i}]"), "negative mass"));
            }
        }
        let sum: f64 = self.mass.iter().sum();
        if (sum - 1.0).abs() > INPUT_TOL {
            out.push(Violation::new(
                path,
                &format!("mass sums to {sum}, expected 1 within {INPUT_TOL:e}"),
            ));
        }
    }
}

/// One scenario: its probability weight, cost matrix, and marginal pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub weight: f64,
    pub cost: Vec<Vec<f64>>,
    pub mu: ProbabilityVector,
    pub nu: ProbabilityVector,
}

/// A scenario-indexed transport instance over a fixed pair of spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticInstance {
    #[serde(rename = "space_X")]
    pub space_x: FiniteMetricSpace,
    #[serde(rename = "space_Y")]
    pub space_y: FiniteMetricSpace,
    pub scenarios: Vec<Scenario>,
}

impl StochasticInstance {
    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }
}

/// A transport plan for one scenario: nonnegative matrix whose row sums
/// are `mu` and column sums are `nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coupling {
    pub pi: Vec<Vec<f64>>,
}

impl Coupling {
    pub fn new(pi: Vec<Vec<f64>>) -> Self {
        Self { pi }
    }

    pub fn rows(&self) -> usize {
        self.pi.len()
    }

    pub fn cols(&self) -> usize {
        self.pi.first().map_or(0, |r| r.len())
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.pi.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols()];
        for row in &self.pi {
            for (j, &x) in row.iter().enumerate() {
                sums[j] += x;
            }
        }
        sums
    }

    /// Marginal-feasibility violations against `(mu, nu)` at tolerance `tol`.
    pub fn feasibility_violations(
        &self,
        mu: &ProbabilityVector,
        nu: &ProbabilityVector,
        tol: f64,
        path: &str,
        out: &mut Vec<Violation>,
    ) {
        if self.rows() != mu.len() || self.pi.iter().any(|r| r.len() != nu.len()) {
            out.push(Violation::new(
                path,
                &format!(
                    "coupling must be {}x{}, got {}x{}",
                    mu.len(),
                    nu.len(),
                    self.rows(),
                    self.cols()
                ),
            ));
            return;
        }
        for (i, row) in self.pi.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if x.is_nan() || x < 0.0 {
                    out.push(Violation::new(
                        &format!("{path}[{i}][{j}]"),
                        "coupling entry is negative or not a number",
                    ));
                }
            }
        }
        for (i, (s, &m)) in self.row_sums().iter().zip(&mu.mass).enumerate() {
            if (s - m).abs() > tol {
                out.push(Violation::new(
                    &format!("{path} row {i}"),
                    &format!("row sum {s} differs from mu {m}"),
                ));
            }
        }
        for (j, (s, &m)) in self.col_sums().iter().zip(&nu.mass).enumerate() {
            if (s - m).abs() > tol {
                out.push(Violation::new(
                    &format!("{path} column {j}"),
                    &format!("column sum {s} differs from nu {m}"),
                ));
            }
        }
    }
}

/// A scenario-indexed family of couplings, one per scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticPlan {
    pub couplings: Vec<Coupling>,
}

/// Per-scenario dual potentials, `psi` over X and `phi` over Y, subject to
/// `phi(y) - psi(x) <= cost(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPair {
    pub psi: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
}

/// One invariant violation, with the location that triggered it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: &str, message: &str) -> Self {
        Self {
            path: path.to_string(),
            message: message.to_string(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Outcome of validating an instance. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            write!(f, "valid")
        } else {
            for v in &self.violations {
                writeln!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CoreError {
    #[error("dimension mismatch in {context}: cost is {rows}x{cols}, coupling is {prows}x{pcols}")]
    DimensionMismatch {
        context: &'static str,
        rows: usize,
        cols: usize,
        prows: usize,
        pcols: usize,
    },
}

/// Checks every typed invariant of `inst` and reports all violations found.
///
/// Violations are data, not faults: an invalid instance yields a nonempty
/// report, never an error.
pub fn validate_instance(inst: &StochasticInstance) -> ValidationReport {
    let mut out = Vec::new();
    inst.space_x.validate_into("space_X", &mut out);
    inst.space_y.validate_into("space_Y", &mut out);
    if inst.scenarios.is_empty() {
        out.push(Violation::new("scenarios", "at least one scenario is required"));
        return ValidationReport { violations: out };
    }
    let nx = inst.space_x.len();
    let ny = inst.space_y.len();
    for (k, sc) in inst.scenarios.iter().enumerate() {
        let path = format!("scenarios[{k}]");
        if !sc.weight.is_finite() || sc.weight <= 0.0 || sc.weight > 1.0 {
            out.push(Violation::new(
                &format!("{path}.weight"),
                &format!("weight {} must lie in (0, 1]", sc.weight),
            ));
        }
        if sc.cost.len() != nx || sc.cost.iter().any(|row| row.len() != ny) {
            out.push(Violation::new(
                &format!("{path}.cost"),
                &format!("cost matrix must be {nx}x{ny}"),
            ));
        } else {
            for (i, row) in sc.cost.iter().enumerate() {
                for (j, &c) in row.iter().enumerate() {
                    if !c.is_finite() {
                        out.push(Violation::new(
                            &format!("{path}.cost[{i}][{j}]"),
                            "cost entry is not finite",
                        ));
                    } else if c < 0.0 {
                        out.push(Violation::new(
                            &format!("{path}.cost[{i}][{j}]"),
                            "negative cost entry",
                        ));
                    }
                }
            }
        }
        sc.mu.validate_into(nx, &format!("{path}.mu"), &mut out);
        sc.nu.validate_into(ny, &format!("{path}.nu"), &mut out);
    }
    let weight_sum: f64 = inst.scenarios.iter().map(|s| s.weight).sum();
    if (weight_sum - 1.0).abs() > INPUT_TOL {
        out.push(Violation::new(
            "scenarios",
            &format!("weights sum to {weight_sum}, expected 1 within {INPUT_TOL:e}"),
        ));
    }
    ValidationReport { violations: out }
}

/// Transport cost of `coupling` under the scenario's cost matrix,
/// summed in row-major order.
pub fn plan_cost(scenario: &Scenario, coupling: &Coupling) -> Result<f64, CoreError> {
    let rows = scenario.cost.len();
    let cols = scenario.cost.first().map_or(0, |r| r.len());
    if coupling.rows() != rows || coupling.pi.iter().any(|r| r.len() != cols) {
        return Err(CoreError::DimensionMismatch {
            context: "plan_cost",
            rows,
            cols,
            prows: coupling.rows(),
            pcols: coupling.cols(),
        });
    }
    let mut total = 0.0;
    for (crow, prow) in scenario.cost.iter().zip(&coupling.pi) {
        for (c, p) in crow.iter().zip(prow) {
            total += c * p;
        }
    }
    Ok(total)
}

/// Two points per side, two scenarios: one nontrivial solve and one
/// zero-cost diagonal. Shared by tests and documentation examples.
pub fn reference_instance() -> StochasticInstance {
    let two_points = |prefix: &str| FiniteMetricSpace {
        labels: vec![format!("{prefix}1"), format!("{prefix}2")],
        dist: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
    };
    StochasticInstance {
        space_x: two_points("x"),
        space_y: two_points("y"),
        scenarios: vec![
            Scenario {
                weight: 0.5,
                cost: vec![vec![1.0, 2.0], vec![3.0, 1.0]],
                mu: ProbabilityVector::new(vec![0.3, 0.7]),
                nu: ProbabilityVector::new(vec![0.6, 0.4]),
            },
            Scenario {
                weight: 0.5,
                cost: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
                mu: ProbabilityVector::new(vec![0.5, 0.5]),
                nu: ProbabilityVector::new(vec![0.5, 0.5]),
            },
        ],
    }
}
