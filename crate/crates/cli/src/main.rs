//! `stot`: solve scenario-indexed transport instances, certify duality,
//! check support monotonicity, and compare probability kernels.
//!
//! Reports are JSON on stdout with a short human summary on stderr.
//! Exit codes: 0 success / all checks pass, 1 a numeric check failed,
//! 2 malformed or invalid input.

mod json;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use stot_core::{
    assemble_stochastic_duals, c_subdifferential, c_transform, check_cyclical_monotonicity,
    dual_value, is_feasible_kernel_plan, kr_dual_w1, lipschitz_smooth_cost,
    per_scenario_transport_costs, rockafellar_potential, solve_stochastic, sufficient_level,
    support_of, validate_instance, verify_main3, wasserstein_p, Cycle, KernelPairInstance,
    StochasticInstance, StochasticPlan, SupportSet, DEFAULT_MAX_CYCLE_LEN, FEAS_TOL, INPUT_TOL,
    SUPPORT_THRESHOLD,
};

#[derive(Parser)]
#[command(
    name = "stot",
    version,
    about = "Exact transport over scenario-indexed marginals: solve, certify, verify"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the optimal plan and value
    Solve { file: PathBuf },
    /// Assemble dual potentials and report the duality gap
    Duals { file: PathBuf },
    /// Search plan supports for cyclical-monotonicity violations
    #[command(name = "check-cm")]
    CheckCm {
        file: PathBuf,
        /// plan file; defaults to the solved optimal plan
        #[arg(long)]
        plan: Option<PathBuf>,
        /// cycle length bound (default: KT_MAX_CYCLE_LEN or 8)
        #[arg(long = "max-len")]
        max_len: Option<usize>,
    },
    /// Per-scenario potentials, transforms, and tight sets
    Potentials { file: PathBuf },
    /// Full three-way optimality equivalence report for a plan
    Verify {
        file: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Wasserstein distance between the two kernels of a pair file
    Wp {
        pairfile: PathBuf,
        /// exponent override; defaults to the pair file's value
        #[arg(long)]
        p: Option<f64>,
    },
    /// Lipschitz dual of the distance at exponent 1, with witnesses
    Kr { pairfile: PathBuf },
    /// Smooth every scenario cost onto the n-Lipschitz functions
    Smooth {
        file: PathBuf,
        #[arg(long)]
        n: u32,
    },
    /// Write a seeded random instance to stdout
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=256))]
        nx: u32,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=256))]
        ny: u32,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=256))]
        scenarios: u32,
    },
    /// Check every instance invariant and report violations
    Validate { file: PathBuf },
}

enum CmdError {
    /// malformed or invalid input (exit 2)
    Input(String),
    /// a numeric check failed (exit 1)
    Check(String),
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(CmdError::Input(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CmdError::Check(msg)) => {
            eprintln!("check failed: {msg}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> Result<i32, CmdError> {
    match cli.command {
        Command::Solve { file } => cmd_solve(&file),
        Command::Duals { file } => cmd_duals(&file),
        Command::CheckCm {
            file,
            plan,
            max_len,
        } => cmd_check_cm(&file, plan.as_deref(), max_len),
        Command::Potentials { file } => cmd_potentials(&file),
        Command::Verify { file, plan } => cmd_verify(&file, &plan),
        Command::Wp { pairfile, p } => cmd_wp(&pairfile, p),
        Command::Kr { pairfile } => cmd_kr(&pairfile),
        Command::Smooth { file, n } => cmd_smooth(&file, n),
        Command::Gen {
            seed,
            nx,
            ny,
            scenarios,
        } => cmd_gen(seed, nx as usize, ny as usize, scenarios as usize),
        Command::Validate { file } => cmd_validate(&file),
    }
}

fn read_file(path: &Path) -> Result<(Vec<u8>, String), CmdError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CmdError::Input(format!("{}: {e}", path.display())))?;
    let digest = format!("sha256:{:x}", Sha256::digest(&bytes));
    Ok((bytes, digest))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path, bytes: &[u8]) -> Result<T, CmdError> {
    serde_json::from_slice(bytes)
        .map_err(|e| CmdError::Input(format!("{}: {e}", path.display())))
}

/// Reads an instance and refuses to continue unless it validates.
fn load_instance(path: &Path) -> Result<(StochasticInstance, String), CmdError> {
    let (bytes, digest) = read_file(path)?;
    let inst: StochasticInstance = parse_json(path, &bytes)?;
    let report = validate_instance(&inst);
    if !report.is_valid() {
        let lines: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(CmdError::Input(format!(
            "{}: invalid instance: {}",
            path.display(),
            lines.join("; ")
        )));
    }
    Ok((inst, digest))
}

fn load_plan(path: &Path, inst: &StochasticInstance) -> Result<(StochasticPlan, String), CmdError> {
    let (bytes, digest) = read_file(path)?;
    let plan: StochasticPlan = parse_json(path, &bytes)?;
    if plan.couplings.len() != inst.scenarios.len() {
        return Err(CmdError::Input(format!(
            "{}: plan has {} couplings, instance has {} scenarios",
            path.display(),
            plan.couplings.len(),
            inst.scenarios.len()
        )));
    }
    let nx = inst.space_x.len();
    let ny = inst.space_y.len();
    for (k, c) in plan.couplings.iter().enumerate() {
        if c.rows() != nx || c.pi.iter().any(|r| r.len() != ny) {
            return Err(CmdError::Input(format!(
                "{}: coupling {k} must be {nx}x{ny}",
                path.display()
            )));
        }
    }
    Ok((plan, digest))
}

fn tolerances() -> Value {
    json!({
        "feasibility": FEAS_TOL,
        "input": INPUT_TOL,
        "support": SUPPORT_THRESHOLD,
    })
}

fn emit_report(command: &str, digest: &str, results: Value) {
    let report = json!({
        "command": command,
        "instance_digest": digest,
        "results": results,
        "tolerances": tolerances(),
    });
    print!("{}", json::to_json_string(&report));
}

fn cycle_value(cycle: &Cycle) -> Value {
    json!({
        "pairs": cycle.pairs.iter().map(|&(x, y)| json!([x, y])).collect::<Vec<_>>(),
        "defect": cycle.defect,
    })
}

fn support_value(set: &SupportSet) -> Value {
    Value::Array(
        set.pairs()
            .iter()
            .map(|&(x, y)| json!([x, y]))
            .collect(),
    )
}

fn resolve_max_len(flag: Option<usize>) -> Result<usize, CmdError> {
    if let Some(v) = flag {
        if v < 2 {
            return Err(CmdError::Input("--max-len must be at least 2".into()));
        }
        return Ok(v);
    }
    match std::env::var("KT_MAX_CYCLE_LEN") {
        Ok(raw) => raw
            .parse::<usize>()
            .ok()
            .filter(|&v| v >= 2)
            .ok_or_else(|| {
                CmdError::Input(format!("KT_MAX_CYCLE_LEN must be an integer >= 2, got {raw:?}"))
            }),
        Err(_) => Ok(DEFAULT_MAX_CYCLE_LEN),
    }
}

fn cmd_solve(file: &Path) -> Result<i32, CmdError> {
    let (inst, digest) = load_instance(file)?;
    let solved = solve_stochastic(&inst).map_err(|e| CmdError::Check(e.to_string()))?;
    let results = json!({
        "value": solved.value,
        "per_scenario_values": solved.per_scenario_values,
        "plan": {
            "couplings": solved.plan.couplings.iter().map(|c| &c.pi).collect::<Vec<_>>(),
        },
    });
    emit_report("solve", &digest, results);
    eprintln!(
        "optimal expected cost {} over {} scenarios",
        solved.value,
        inst.scenarios.len()
    );
    Ok(0)
}

fn cmd_duals(file: &Path) -> Result<i32, CmdError> {
    let (inst, digest) = load_instance(file)?;
    let solved = solve_stochastic(&inst).map_err(|e| CmdError::Check(e.to_string()))?;
    let dual = assemble_stochastic_duals(&inst).map_err(|e| CmdError::Check(e.to_string()))?;
    let dv = dual_value(&inst, &dual).map_err(|e| CmdError::Check(e.to_string()))?;
    let gap = solved.value - dv;
    let results = json!({
        "dual_value": dv,
        "primal_value": solved.value,
        "gap": gap,
        "psi": dual.psi,
        "phi": dual.phi,
    });
    emit_report("duals", &digest, results);
    eprintln!("dual value {dv}, gap {gap}");
    Ok(if gap.abs() <= FEAS_TOL { 0 } else { 1 })
}

fn cmd_check_cm(
    file: &Path,
    plan_path: Option<&Path>,
    max_len: Option<usize>,
) -> Result<i32, CmdError> {
    let (inst, digest) = load_instance(file)?;
    let max_len = resolve_max_len(max_len)?;
    let (plan, plan_digest) = match plan_path {
        Some(p) => {
            let (plan, d) = load_plan(p, &inst)?;
            (plan, Some(d))
        }
        None => {
            let solved = solve_stochastic(&inst).map_err(|e| CmdError::Check(e.to_string()))?;
            (solved.plan, None)
        }
    };
    let mut scenarios = Vec::new();
    let mut all_monotone = true;
    for (sc, coupling) in inst.scenarios.iter().zip(&plan.couplings) {
        let support = support_of(coupling, SUPPORT_THRESHOLD);
        let limit = support.len().min(max_len).max(2);
        let witness = check_cyclical_monotonicity(&sc.cost, &support, limit);
        all_monotone &= witness.is_none();
        scenarios.push(json!({
            "support": support_value(&support),
            "max_len": limit,
            "monotone": witness.is_none(),
            "witness": witness.as_ref().map(cycle_value).unwrap_or(Value::Null),
        }));
    }
    let results = json!({
        "monotone": all_monotone,
        "max_len": max_len,
        "plan_digest": plan_digest,
        "per_scenario": scenarios,
    });
    emit_report("check-cm", &digest, results);
    eprintln!(
        "{} (cycle length bound {max_len})",
        if all_monotone {
            "all supports cyclically monotone"
        } else {
            "violating cycle found"
        }
    );
    Ok(if all_monotone { 0 } else { 1 })
}

fn cmd_potentials(file: &Path) -> Result<i32, CmdError> {
    let (inst, digest) = load_instance(file)?;
    let solved = solve_stochastic(&inst).map_err(|e| CmdError::Check(e.to_string()))?;
    let mut scenarios = Vec::new();
    let mut dual_total = 0.0;
    for (sc, coupling) in inst.scenarios.iter().zip(&solved.plan.couplings) {
        let support = support_of(coupling, SUPPORT_THRESHOLD);
        let anchor = support.pairs()[0];
        let psi = rockafellar_potential(&sc.cost, &support, anchor)
            .map_err(|e| CmdError::Check(e.to_string()))?;
        let phi = c_transform(&sc.cost, &psi);
        let gamma = c_subdifferential(&sc.cost, &psi, &phi, FEAS_TOL)
            .map_err(|e| CmdError::Check(e.to_string()))?;
        let phi_part: f64 = sc.nu.mass.iter().zip(&phi).map(|(w, f)| w * f).sum();
        let psi_part: f64 = sc.mu.mass.iter().zip(&psi).map(|(w, f)| w * f).sum();
        dual_total += sc.weight * (phi_part - psi_part);
        scenarios.push(json!({
            "anchor": [anchor.0, anchor.1],
            "psi": psi,
            "phi": phi,
            "gamma": support_value(&gamma),
        }));
    }
    let results = json!({
        "per_scenario": scenarios,
        "dual_value": dual_total,
        "primal_value": solved.value,
    });
    emit_report("potentials", &digest, results);
    eprintln!("potentials assembled; dual value {dual_total}");
    Ok(0)
}

fn cmd_verify(file: &Path, plan_path: &Path) -> Result<i32, CmdError> {
    let (inst, digest) = load_instance(file)?;
    let (plan, plan_digest) = load_plan(plan_path, &inst)?;
    let feas = is_feasible_kernel_plan(&inst, &plan);
    if !feas.feasible {
        let lines: Vec<String> = feas.violations.iter().map(|v| v.to_string()).collect();
        return Err(CmdError::Input(format!(
            "{}: infeasible plan: {}",
            plan_path.display(),
            lines.join("; ")
        )));
    }
    let max_len = resolve_max_len(None)?;
    let report =
        verify_main3(&inst, &plan, max_len).map_err(|e| CmdError::Check(e.to_string()))?;
    let scenarios: Vec<Value> = report
        .per_scenario
        .iter()
        .map(|s| {
            json!({
                "optimal": s.optimal,
                "monotone": s.monotone,
                "certified": s.certified,
                "support": support_value(&s.support),
                "witness": s.witness.as_ref().map(cycle_value).unwrap_or(Value::Null),
                "psi": s.psi.clone(),
                "phi": s.phi.clone(),
                "gamma": s.gamma.as_ref().map(support_value).unwrap_or(Value::Null),
            })
        })
        .collect();
    let results = json!({
        "plan_digest": plan_digest,
        "plan_value": report.plan_value,
        "optimal_value": report.optimal_value,
        "aggregate_optimal": report.aggregate_optimal,
        "equivalent": report.equivalent,
        "defects": report.defects,
        "per_scenario": scenarios,
    });
    let equivalent = report.equivalent;
    emit_report("verify", &digest, results);
    eprintln!(
        "plan value {} vs optimum {}; equivalence {}",
        report.plan_value,
        report.optimal_value,
        if equivalent { "holds" } else { "BROKEN" }
    );
    Ok(if equivalent { 0 } else { 1 })
}

fn load_pair(path: &Path) -> Result<(KernelPairInstance, String), CmdError> {
    let (bytes, digest) = read_file(path)?;
    let pair: KernelPairInstance = parse_json(path, &bytes)?;
    let report = pair.validate();
    if !report.is_valid() {
        let lines: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(CmdError::Input(format!(
            "{}: invalid kernel pair: {}",
            path.display(),
            lines.join("; ")
        )));
    }
    Ok((pair, digest))
}

fn cmd_wp(pairfile: &Path, p_override: Option<f64>) -> Result<i32, CmdError> {
    let (mut pair, digest) = load_pair(pairfile)?;
    if let Some(p) = p_override {
        if !(p.is_finite() && p >= 1.0) {
            return Err(CmdError::Input(format!("exponent {p} must be >= 1")));
        }
        pair.p = p;
    }
    let value = wasserstein_p(&pair).map_err(|e| CmdError::Check(e.to_string()))?;
    let costs = per_scenario_transport_costs(&pair).map_err(|e| CmdError::Check(e.to_string()))?;
    let distances: Vec<f64> = costs
        .iter()
        .map(|&c| if pair.p == 1.0 { c } else { c.powf(1.0 / pair.p) })
        .collect();
    let results = json!({
        "p": pair.p,
        "value": value,
        "per_scenario_wp": distances,
    });
    emit_report("wp", &digest, results);
    eprintln!("kernel distance {value} at exponent {}", pair.p);
    Ok(0)
}

fn cmd_kr(pairfile: &Path) -> Result<i32, CmdError> {
    let (pair, digest) = load_pair(pairfile)?;
    if pair.p != 1.0 {
        return Err(CmdError::Input(format!(
            "the Lipschitz dual requires p = 1, pair file has p = {}",
            pair.p
        )));
    }
    let kr = kr_dual_w1(&pair).map_err(|e| CmdError::Check(e.to_string()))?;
    let primal = wasserstein_p(&pair).map_err(|e| CmdError::Check(e.to_string()))?;
    let agrees = (kr.value - primal).abs() <= FEAS_TOL;
    let results = json!({
        "value": kr.value,
        "primal_value": primal,
        "agrees_with_primal": agrees,
        "witnesses": kr.witnesses,
    });
    emit_report("kr", &digest, results);
    eprintln!("dual distance {} (primal {primal})", kr.value);
    Ok(if agrees { 0 } else { 1 })
}

fn cmd_smooth(file: &Path, n: u32) -> Result<i32, CmdError> {
    let (inst, digest) = load_instance(file)?;
    if n == 0 {
        return Err(CmdError::Input("--n must be a positive integer".into()));
    }
    let mut costs = Vec::new();
    let mut sufficient = Vec::new();
    for sc in &inst.scenarios {
        let smoothed = lipschitz_smooth_cost(&sc.cost, &inst.space_x, &inst.space_y, n)
            .map_err(|e| CmdError::Input(e.to_string()))?;
        costs.push(smoothed.cost_n);
        sufficient.push(sufficient_level(&sc.cost, &inst.space_x, &inst.space_y));
    }
    let results = json!({
        "n": n,
        "per_scenario_cost_n": costs,
        "sufficient_levels": sufficient,
    });
    emit_report("smooth", &digest, results);
    eprintln!("smoothed {} scenario costs at level {n}", inst.scenarios.len());
    Ok(0)
}

fn cmd_gen(seed: u64, nx: usize, ny: usize, scenarios: usize) -> Result<i32, CmdError> {
    let inst = stot_core::gen::instance(seed, nx, ny, scenarios);
    let value = serde_json::to_value(&inst)
        .map_err(|e| CmdError::Check(format!("serialization failed: {e}")))?;
    print!("{}", json::to_json_string(&value));
    eprintln!("instance with |X|={nx}, |Y|={ny}, {scenarios} scenarios from seed {seed}");
    Ok(0)
}

fn cmd_validate(file: &Path) -> Result<i32, CmdError> {
    let (bytes, digest) = read_file(file)?;
    let inst: StochasticInstance = parse_json(file, &bytes)?;
    let report = validate_instance(&inst);
    let results = json!({
        "valid": report.is_valid(),
        "violations": report
            .violations
            .iter()
            .map(|v| json!({"path": v.path, "message": v.message}))
            .collect::<Vec<_>>(),
    });
    let valid = report.is_valid();
    emit_report("validate", &digest, results);
    if valid {
        eprintln!("instance is valid");
        Ok(0)
    } else {
        for v in &report.violations {
            eprintln!("violation: {v}");
        }
        Err(CmdError::Input(format!(
            "{}: {} violation(s)",
            file.display(),
            report.violations.len()
        )))
    }
}
