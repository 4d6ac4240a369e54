//! Wasserstein distance between probability kernels over one finite
//! metric space, with the Lipschitz dual at exponent 1.

use crate::solver::{solve_transport, SolveError};
use crate::types::{
    FiniteMetricSpace, ProbabilityVector, ValidationReport, Violation, FEAS_TOL, INPUT_TOL,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("scenario {index}: {source}")]
    Scenario {
        index: usize,
        #[source]
        source: SolveError,
    },
    #[error("kernels disagree in shape: {0}")]
    Mismatch(String),
    #[error("the Lipschitz dual requires exponent 1, got {0}")]
    ExponentNotOne(f64),
    #[error("witness for scenario {index} failed its Lipschitz certificate")]
    WitnessNotLipschitz { index: usize },
}

/// A scenario-indexed family of distributions on one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityKernel {
    pub marginals: Vec<ProbabilityVector>,
}

/// Two kernels on a shared space and scenario weights, compared at
/// exponent `p`.
///
/// Distances are raised to `p` entrywise with no overflow guard beyond
/// the double range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelPairInstance {
    pub space: FiniteMetricSpace,
    pub weights: Vec<f64>,
    pub mu: ProbabilityKernel,
    pub nu: ProbabilityKernel,
    pub p: f64,
}

impl KernelPairInstance {
    pub fn validate(&self) -> ValidationReport {
        let mut out = Vec::new();
        self.space.validate_into("space", &mut out);
        if self.weights.is_empty() {
            out.push(Violation::new("weights", "at least one scenario is required"));
        }
        let sum: f64 = self.weights.iter().sum();
        if !self.weights.is_empty() && (sum - 1.0).abs() > INPUT_TOL {
            out.push(Violation::new(
                "weights",
                &format!("weights sum to {sum}, expected 1 within {INPUT_TOL:e}"),
            ));
        }
        for (idx, w) in self.weights.iter().enumerate() {
            if !w.is_finite() || *w <= 0.0 || *w > 1.0 {
                out.push(Violation::new(
                    &format!("weights[{idx}]"),
                    &format!("weight {w} must lie in (0, 1]"),
                ));
            }
        }
        if !(self.p.is_finite() && self.p >= 1.0) {
            out.push(Violation::new("p", &format!("exponent {} must be >= 1", self.p)));
        }
        for (name, kernel) in [("mu", &self.mu), ("nu", &self.nu)] {
            if kernel.marginals.len() != self.weights.len() {
                out.push(Violation::new(
                    name,
                    &format!(
                        "kernel has {} marginals, expected {}",
                        kernel.marginals.len(),
                        self.weights.len()
                    ),
                ));
                continue;
            }
            for (k, m) in kernel.marginals.iter().enumerate() {
                validate_marginal(m, self.space.len(), &format!("{name}[{k}]"), &mut out);
            }
        }
        ValidationReport { violations: out }
    }
}

fn validate_marginal(m: &ProbabilityVector, len: usize, path: &str, out: &mut Vec<Violation>) {
    if m.len() != len {
        out.push(Violation::new(
            path,
            &format!("expected {len} entries, got {}", m.len()),
        ));
        return;
    }
    for (i, &x) in m.mass.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            out.push(Violation::new(&format!("{path}[{i}]"), "bad mass entry"));
        }
    }
    let sum: f64 = m.mass.iter().sum();
    if (sum - 1.0).abs() > INPUT_TOL {
        out.push(Violation::new(path, &format!("mass sums to {sum}, expected 1")));
    }
}

fn power_cost(space: &FiniteMetricSpace, p: f64) -> Vec<Vec<f64>> {
    space
        .dist
        .iter()
        .map(|row| {
            row.iter()
                .map(|&d| if p == 1.0 { d } else { d.powf(p) })
                .collect()
        })
        .collect()
}

/// Compares the flattened marginal lists; used to canonicalize argument
/// order so that swapping the kernels cannot change a single bit.
fn kernel_le(a: &ProbabilityKernel, b: &ProbabilityKernel) -> bool {
    let flat = |k: &ProbabilityKernel| -> Vec<f64> {
        k.marginals.iter().flat_map(|m| m.mass.clone()).collect()
    };
    let (fa, fb) = (flat(a), flat(b));
    for (x, y) in fa.iter().zip(&fb) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    true
}

/// Per-scenario transport costs under `d^p` (the distances before the
/// final root), canonicalized like the aggregate.
pub fn per_scenario_transport_costs(pair: &KernelPairInstance) -> Result<Vec<f64>, KernelError> {
    let cost = power_cost(&pair.space, pair.p);
    // solve each scenario with a fixed argument order: the cost matrix is
    // symmetric, so the optimal value is order-free mathematically, and
    // canonicalization makes it order-free bitwise.
    let (lo, hi): (&ProbabilityKernel, &ProbabilityKernel) = if kernel_le(&pair.mu, &pair.nu) {
        (&pair.mu, &pair.nu)
    } else {
        (&pair.nu, &pair.mu)
    };
    let mut values = Vec::with_capacity(pair.weights.len());
    for (index, (a, b)) in lo.marginals.iter().zip(&hi.marginals).enumerate() {
        let solved = solve_transport(&cost, a, b)
            .map_err(|source| KernelError::Scenario { index, source })?;
        values.push(solved.value);
    }
    Ok(values)
}

/// The kernel Wasserstein distance: per-scenario optimal transport under
/// the cost `d^p`, aggregated as `(sum_k w_k * W_p^p)^(1/p)` in scenario
/// order.
pub fn wasserstein_p(pair: &KernelPairInstance) -> Result<f64, KernelError> {
    let shape = pair.validate();
    if !shape.is_valid() {
        return Err(KernelError::Mismatch(shape.to_string()));
    }
    let values = per_scenario_transport_costs(pair)?;
    let total = pair
        .weights
        .iter()
        .zip(&values)
        .fold(0.0, |acc, (w, v)| acc + w * v);
    Ok(if pair.p == 1.0 {
        total
    } else {
        total.powf(1.0 / pair.p)
    })
}

/// Dual witness form of the distance at exponent 1.
#[derive(Debug, Clone)]
pub struct KrResult {
    pub value: f64,
    /// one 1-Lipschitz test function per scenario
    pub witnesses: Vec<Vec<f64>>,
}

/// The exponent-1 distance as a supremum over 1-Lipschitz test functions.
///
/// The witness for each scenario is the metric transform of the transport
/// potential, `f(y) = min_x (u(x) + d(x, y))`, which the triangle
/// inequality makes 1-Lipschitz; its certificate is re-checked before
/// returning.
pub fn kr_dual_w1(pair: &KernelPairInstance) -> Result<KrResult, KernelError> {
    if pair.p != 1.0 {
        return Err(KernelError::ExponentNotOne(pair.p));
    }
    let shape = pair.validate();
    if !shape.is_valid() {
        return Err(KernelError::Mismatch(shape.to_string()));
    }
    let n = pair.space.len();
    let d = &pair.space.dist;
    let mut witnesses = Vec::with_capacity(pair.weights.len());
    let mut contributions = Vec::with_capacity(pair.weights.len());
    for (index, (mu, nu)) in pair.mu.marginals.iter().zip(&pair.nu.marginals).enumerate() {
        let solved =
            solve_transport(d, mu, nu).map_err(|source| KernelError::Scenario { index, source })?;
        let f: Vec<f64> = (0..n)
            .map(|y| {
                (0..n)
                    .map(|x| solved.u[x] + d[x][y])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        for a in 0..n {
            for b in 0..n {
                if (f[a] - f[b]).abs() > d[a][b] + 1e-12 {
                    return Err(KernelError::WitnessNotLipschitz { index });
                }
            }
        }
        let gain: f64 = nu.mass.iter().zip(&f).map(|(w, v)| w * v).sum::<f64>()
            - mu.mass.iter().zip(&f).map(|(w, v)| w * v).sum::<f64>();
        contributions.push(gain);
        witnesses.push(f);
    }
    let value = pair
        .weights
        .iter()
        .zip(&contributions)
        .fold(0.0, |acc, (w, v)| acc + w * v);
    Ok(KrResult { value, witnesses })
}

/// Metric-axiom check over a triple of kernels on one space.
#[derive(Debug, Clone)]
pub struct MetricAxiomReport {
    /// pairwise distances, indexed by kernel
    pub distances: [[f64; 3]; 3],
    /// swapped arguments returned bitwise-identical values
    pub symmetric: bool,
    /// self-distances within tolerance of zero
    pub identity: bool,
    /// all triangle inequalities within tolerance
    pub triangle: bool,
}

impl MetricAxiomReport {
    pub fn all_hold(&self) -> bool {
        self.symmetric && self.identity && self.triangle
    }
}

/// Checks symmetry (bitwise, thanks to canonicalization), identity of
/// indiscernibles at tolerance, and all triangle inequalities for three
/// kernels sharing a space and weights.
pub fn check_metric_axioms(
    space: &FiniteMetricSpace,
    weights: &[f64],
    kernels: [&ProbabilityKernel; 3],
    p: f64,
) -> Result<MetricAxiomReport, KernelError> {
    for k in kernels {
        if k.marginals.len() != weights.len() {
            return Err(KernelError::Mismatch(format!(
                "kernel has {} marginals, expected {}",
                k.marginals.len(),
                weights.len()
            )));
        }
        for m in &k.marginals {
            if m.len() != space.len() {
                return Err(KernelError::Mismatch(format!(
                    "marginal has {} entries, space has {} points",
                    m.len(),
                    space.len()
                )));
            }
        }
    }
    let dist = |a: &ProbabilityKernel, b: &ProbabilityKernel| -> Result<f64, KernelError> {
        wasserstein_p(&KernelPairInstance {
            space: space.clone(),
            weights: weights.to_vec(),
            mu: a.clone(),
            nu: b.clone(),
            p,
        })
    };
    let mut distances = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            distances[i][j] = dist(kernels[i], kernels[j])?;
        }
    }
    let symmetric = (0..3).all(|i| {
        (0..3).all(|j| distances[i][j].to_bits() == distances[j][i].to_bits())
    });
    let identity = (0..3).all(|i| distances[i][i] <= FEAS_TOL);
    let mut triangle = true;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                if distances[i][k] > distances[i][j] + distances[j][k] + FEAS_TOL {
                    triangle = false;
                }
            }
        }
    }
    Ok(MetricAxiomReport {
        distances,
        symmetric,
        identity,
        triangle,
    })
}
