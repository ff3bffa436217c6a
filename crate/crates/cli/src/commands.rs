use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use monocert::certify::{
    controller_set, select_control, CertificateFile, Coefficients, ControllerExport, CspopProblem, RspopProblem,
    TrajectoryRef, REVERIFY_TOL,
};
use monocert::solver::{solve_cspop, solve_cspop_milp, solve_rspop, AttemptOutcome, LossSpec, SolverOptions};
use monocert::systems::{audit_monotonicity, estimate_compact_tail, MonotonicityMode, PolicySpec};
use monocert::validate::{check_basis_order, check_dissipation};
use monocert::{
    build_partition, monte_carlo_shielded, simulate, CertificateMode, ConstraintSystem, CoverSets, FeedbackPolicy,
    InputRole, InputSource, SafetyReport, SystemModel, Trajectory,
};
use serde_json::json;

use crate::config::{defaults, relative_to, Loaded};

/// How a command ended when it did not fail outright.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// No certificate found, or validation flagged a problem. The method is
    /// only sufficient, so this says nothing about actual safety.
    Inconclusive,
}

/// Validation draws from a different stream family than data generation.
pub fn validation_seed(seed: u64) -> u64 {
    seed ^ 0x5DEE_CE66_D1CE_5EED
}

fn run_seed(seed: u64, run: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(run as u64)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
    }
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(", "))
}

fn policies_by_id(specs: &[PolicySpec], sys: &SystemModel) -> Result<BTreeMap<String, (PolicySpec, Arc<FeedbackPolicy>)>> {
    let mut out = BTreeMap::new();
    if specs.is_empty() {
        return Ok(out);
    }
    let us = sys
        .input_set()
        .context("policies are configured but the system has no input set")?;
    for s in specs {
        let p = s.build(us).with_context(|| format!("policy `{}`", s.id()))?;
        if out.insert(s.id().to_string(), (s.clone(), Arc::new(p))).is_some() {
            bail!("duplicate policy id `{}`", s.id());
        }
    }
    Ok(out)
}

fn report_paths(output: &Path, suffix: &str) -> (PathBuf, PathBuf) {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("certificate");
    let dir = output.parent().unwrap_or(Path::new(""));
    (dir.join(format!("{stem}.{suffix}.txt")), dir.join(format!("{stem}.{suffix}.json")))
}

fn emit(text: &str, json: serde_json::Value, paths: (PathBuf, PathBuf)) -> Result<()> {
    print!("{text}");
    write_file(&paths.0, text)?;
    write_file(&paths.1, &(serde_json::to_string_pretty(&json)? + "\n"))?;
    Ok(())
}

// ---------------------------------------------------------------------------

pub fn cmd_simulate(cfg: &Loaded, seed: u64) -> Result<Outcome> {
    let sim = cfg.simulate()?;
    let sys = cfg.config.system.build().context("cannot build system")?;
    let policies = policies_by_id(&cfg.config.policies, &sys)?;
    let out_dir = cfg.resolve(&sim.output_dir);
    for (i, run) in sim.runs.iter().enumerate() {
        let source = match (sys.input_role(), &run.policy) {
            (InputRole::Control, Some(id)) => {
                let (_, p) = policies
                    .get(id)
                    .with_context(|| format!("simulate.runs[{i}].policy: unknown policy `{id}`"))?;
                InputSource::Policy(p.clone())
            }
            (InputRole::Control, None) => bail!("simulate.runs[{i}].policy: required for a controlled system"),
            (_, Some(_)) => bail!("simulate.runs[{i}].policy: the system has no control input"),
            (_, None) => InputSource::SampledDisturbance,
        };
        let tr = simulate(&sys, &run.x0, &source, sim.horizon, run_seed(seed, i))
            .with_context(|| format!("simulating run `{}`", run.name))?;
        let window = sim.tail_window.min(tr.horizon());
        let tail = estimate_compact_tail(&tr, window)?;
        let tr = tr.with_epsilon(tail.epsilon.unwrap_or(0.0))?;
        let file = out_dir.join(format!("{}.{}", run.name, sim.format.extension()));
        if let Some(dir) = file.parent() {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
        tr.save(&file)?;
        let rel = sim.output_dir.join(format!("{}.{}", run.name, sim.format.extension()));
        println!(
            "{}: T = {}, tail epsilon = {}, dominating tail = {:?}, final state {}",
            rel.display(),
            tr.horizon(),
            tr.tail().epsilon.unwrap_or(0.0),
            tr.tail().dominating,
            fmt_vec(tr.state(tr.horizon()))
        );
    }
    Ok(Outcome::Success)
}

fn load_trajectories(cfg: &Loaded) -> Result<Vec<(PathBuf, Arc<Trajectory>)>> {
    cfg.trajectory_paths()?
        .into_iter()
        .map(|rel| {
            let full = cfg.resolve(&rel);
            let tr = Trajectory::load(&full)
                .with_context(|| format!("cannot load trajectory {} (run `simulate` first?)", rel.display()))?;
            Ok((rel, Arc::new(tr)))
        })
        .collect()
}

fn trajectory_refs(trajs: &[(PathBuf, Arc<Trajectory>)], cert_rel: &Path) -> Vec<TrajectoryRef> {
    let cert_dir = cert_rel.parent().unwrap_or(Path::new(""));
    trajs
        .iter()
        .map(|(rel, tr)| TrajectoryRef {
            path: relative_to(rel, cert_dir).to_string_lossy().replace('\\', "/"),
            sha256: tr.content_hash(),
        })
        .collect()
}

fn solver_options(cap: f64) -> SolverOptions {
    SolverOptions {
        cap,
        ..SolverOptions::default()
    }
}

fn rows_summary(cs: &ConstraintSystem) -> String {
    monocert::solver::family_counts(cs)
        .iter()
        .map(|(f, c)| format!("{f:?} {c}").to_lowercase())
        .collect::<Vec<_>>()
        .join(", ")
}

fn safety_json(rep: &SafetyReport) -> serde_json::Value {
    serde_json::to_value(rep).unwrap_or(serde_json::Value::Null)
}

fn validation_params(cfg: &Loaded, trajs: &[(PathBuf, Arc<Trajectory>)]) -> (usize, usize, Option<Vec<f64>>) {
    let max_t = trajs.iter().map(|(_, t)| t.horizon()).max().unwrap_or(0);
    match &cfg.config.validation {
        Some(v) => (v.runs, v.horizon, v.nominal.clone()),
        None => (defaults::VALIDATION_RUNS, max_t, None),
    }
}

pub fn cmd_verify(cfg: &Loaded, seed: u64, lp_dump: Option<&Path>) -> Result<Outcome> {
    let cs_cfg = cfg.certificate()?;
    let lip = cs_cfg
        .lipschitz
        .context("certificate.lipschitz: Lipschitz bounds are required for verification (use d_w = 0 for disturbance-free data)")?;
    lip.validate().context("certificate.lipschitz")?;
    let sys = cfg.config.system.build().context("cannot build system")?;
    if sys.input_role() == InputRole::Control {
        bail!("system `{}` has control inputs; use `synthesize`", sys.name());
    }
    let trajs = load_trajectories(cfg)?;
    let arcs: Vec<Arc<Trajectory>> = trajs.iter().map(|(_, t)| t.clone()).collect();
    let partition = build_partition(sys.state_set(), cs_cfg.width)?;
    let covers = CoverSets::new(&partition, sys.initial_set(), sys.unsafe_set())?;
    let problem = RspopProblem::new(&arcs, Some(&lip), &partition, &covers, cs_cfg.alpha, cs_cfg.delta_u)?;
    let cs = problem.assemble()?;
    let n = arcs.len();
    if let Some(path) = lp_dump {
        let obj: Vec<(f64, usize)> = (1..=2 * n).map(|j| (1.0, j)).collect();
        write_file(path, &cs.lp_text(&obj))?;
    }
    let loss = cs_cfg.loss.unwrap_or(LossSpec::L1);
    let res = solve_rspop(&cs, loss, &solver_options(cs_cfg.cap))?;

    let mut text = String::new();
    let _ = writeln!(text, "system: {} (dimension {})", sys.name(), sys.dim());
    for (k, ((rel, tr), eps)) in trajs.iter().zip(&problem.epsilons).enumerate() {
        let _ = writeln!(
            text,
            "trajectory {}: {} (T = {}, effective tail epsilon {})",
            k + 1,
            rel.display(),
            tr.horizon(),
            eps
        );
    }
    let counts: Vec<String> = partition.counts().iter().map(|c| c.to_string()).collect();
    let _ = writeln!(text, "partition: {} cells ({})", partition.cell_count(), counts.join(" x "));
    let _ = writeln!(text, "rows: {} ({} after merging)", rows_summary(&cs), res.distinct_rows);
    let _ = writeln!(text, "loss: {loss:?}");
    let mut report = json!({
        "command": "verify",
        "system": sys.name(),
        "cells": partition.cell_count(),
        "rows": cs.rows.len(),
        "distinct_rows": res.distinct_rows,
        "status": format!("{:?}", res.status),
        "iterations": res.iterations,
    });
    let cert_rel = cs_cfg.output.clone();
    let paths = report_paths(&cfg.resolve(&cert_rel), "verify");

    if !res.is_optimal() {
        let _ = writeln!(text, "status: {:?} after {} iterations", res.status, res.iterations);
        let _ = writeln!(text, "most violated rows at the phase-1 point:");
        for v in &res.violated_rows {
            let _ = writeln!(text, "  row {} ({:?}, cell {:?}): {:e}", v.row, v.family, v.cell, v.amount);
        }
        let _ = writeln!(text, "verdict: inconclusive (no certificate on this grid; this does not show the system is unsafe)");
        report["violated_rows"] = serde_json::to_value(&res.violated_rows)?;
        report["verdict"] = json!("inconclusive");
        emit(&text, report, paths)?;
        return Ok(Outcome::Inconclusive);
    }

    let coefficients = Coefficients::from_packed(&res.p, n);
    let file = CertificateFile {
        mode: CertificateMode::Robust,
        alpha: cs_cfg.alpha,
        delta_u: cs_cfg.delta_u,
        coefficients: coefficients.clone(),
        trajectories: trajectory_refs(&trajs, &cert_rel),
        lipschitz: Some(lip),
        partition: partition.clone(),
        initial_set: sys.initial_set().clone(),
        unsafe_set: sys.unsafe_set().clone(),
        input_set: None,
        policies: Vec::new(),
        controller: None,
    };
    let cert_path = cfg.resolve(&cert_rel);
    write_file(&cert_path, &(file.to_json()? + "\n"))?;
    let verified = CertificateFile::load_verified(&cert_path, REVERIFY_TOL).context("written certificate failed re-verification")?;

    let _ = writeln!(text, "status: optimal after {} iterations, objective {:e}", res.iterations, res.objective);
    let _ = writeln!(
        text,
        "certificate: a = {}, b = {}, c = {}",
        coefficients.a,
        fmt_vec(&coefficients.b),
        fmt_vec(&coefficients.c)
    );
    let active: Vec<String> = active_bases(&coefficients);
    let _ = writeln!(text, "active bases: {}", active.join(", "));
    let _ = writeln!(text, "coefficient cap active: {}", if res.cap_active { "yes" } else { "no" });
    let _ = writeln!(text, "re-verified: largest row violation {:e}", verified.max_violation);
    let _ = writeln!(text, "wrote {}", cert_rel.display());

    let (runs, horizon, _) = validation_params(cfg, &trajs);
    let mc = monte_carlo_shielded(&sys, &verified.template, None, None, runs, horizon, validation_seed(seed))?;
    text.push_str(&mc.to_text());
    let ok = mc.is_clean();
    let _ = writeln!(
        text,
        "verdict: {}",
        if ok { "safe (certificate found and validated)" } else { "inconclusive (validation found violations)" }
    );
    report["coefficients"] = serde_json::to_value(&coefficients)?;
    report["active_bases"] = json!(active);
    report["objective"] = json!(res.objective);
    report["cap_active"] = json!(res.cap_active);
    report["max_row_violation"] = json!(verified.max_violation);
    report["monte_carlo"] = safety_json(&mc);
    report["verdict"] = json!(if ok { "safe" } else { "inconclusive" });
    emit(&text, report, paths)?;
    Ok(if ok { Outcome::Success } else { Outcome::Inconclusive })
}

fn active_bases(c: &Coefficients) -> Vec<String> {
    let mut out = Vec::new();
    for (k, v) in c.b.iter().enumerate() {
        if *v > 0.0 {
            out.push(format!("P on trajectory {}", k + 1));
        }
    }
    for (k, v) in c.c.iter().enumerate() {
        if *v > 0.0 {
            out.push(format!("Q on trajectory {}", k + 1));
        }
    }
    out
}

pub fn cmd_synthesize(cfg: &Loaded, seed: u64, lp_dump: Option<&Path>, milp: bool) -> Result<Outcome> {
    let cs_cfg = cfg.certificate()?;
    let sys = cfg.config.system.build().context("cannot build system")?;
    if sys.input_role() != InputRole::Control {
        bail!("system `{}` has no control input; use `verify`", sys.name());
    }
    let input_set = sys.input_set().expect("control systems have an input set").clone();
    let policies = policies_by_id(&cfg.config.policies, &sys)?;
    let trajs = load_trajectories(cfg)?;
    let mut specs = Vec::new();
    let mut pols = Vec::new();
    for (rel, tr) in &trajs {
        let id = tr
            .policy_id()
            .with_context(|| format!("trajectory {} does not name its generating policy", rel.display()))?;
        let (spec, pol) = policies
            .get(id)
            .with_context(|| format!("trajectory {} was generated by policy `{id}`, which is not configured", rel.display()))?;
        specs.push(spec.clone());
        pols.push(pol.clone());
    }
    let arcs: Vec<Arc<Trajectory>> = trajs.iter().map(|(_, t)| t.clone()).collect();
    let partition = build_partition(sys.state_set(), cs_cfg.width)?;
    let covers = CoverSets::new(&partition, sys.initial_set(), sys.unsafe_set())?;
    let problem = CspopProblem::new(&arcs, &pols, &partition, &covers, &input_set, cs_cfg.alpha, cs_cfg.delta_u)?;
    let loss = cs_cfg.loss.unwrap_or(LossSpec::SparsitySupportSize);
    let opts = solver_options(cs_cfg.cap);
    let out = if milp {
        solve_cspop_milp(&problem, loss, &opts)?
    } else {
        solve_cspop(&problem, loss, &opts)?
    };

    let mut text = String::new();
    let _ = writeln!(text, "system: {} (dimension {})", sys.name(), sys.dim());
    for (k, (rel, tr)) in trajs.iter().enumerate() {
        let _ = writeln!(
            text,
            "trajectory {}: {} (T = {}, policy {}, dominating tail {:?}, upper basis {}, lower basis {})",
            k + 1,
            rel.display(),
            tr.horizon(),
            tr.policy_id().unwrap_or("-"),
            tr.tail().dominating,
            if problem.has_upper(k) { "available" } else { "refused" },
            if problem.has_lower(k) { "available" } else { "refused" },
        );
    }
    let counts: Vec<String> = partition.counts().iter().map(|c| c.to_string()).collect();
    let _ = writeln!(text, "partition: {} cells ({})", partition.cell_count(), counts.join(" x "));
    let _ = writeln!(text, "search: {}, loss {loss:?}", if milp { "branch and bound" } else { "pattern enumeration" });
    if let Some(nodes) = out.nodes {
        let _ = writeln!(text, "branch-and-bound nodes: {nodes}");
    }
    for a in &out.attempts {
        let what = match &a.outcome {
            AttemptOutcome::Refused { reason } => format!("refused: {reason}"),
            AttemptOutcome::Incompatible { failing_cells } => {
                format!("incompatible policies on {failing_cells} cells")
            }
            AttemptOutcome::Infeasible => "infeasible".into(),
            AttemptOutcome::EmptyController { reason } => format!("empty controller set: {reason}"),
            AttemptOutcome::Optimal { objective } => format!("optimal, objective {objective:e}"),
        };
        let _ = writeln!(text, "  pattern {}: {what}", a.pattern);
    }
    let mut report = json!({
        "command": "synthesize",
        "system": sys.name(),
        "cells": partition.cell_count(),
        "attempts": serde_json::to_value(&out.attempts)?,
        "status": format!("{:?}", out.result.status),
    });
    let cert_rel = cs_cfg.output.clone();
    let paths = report_paths(&cfg.resolve(&cert_rel), "synthesize");

    let (Some(pattern), Some(cset)) = (out.pattern.clone(), out.controller.as_ref()) else {
        let _ = writeln!(text, "verdict: inconclusive (no support pattern admits a certificate)");
        report["verdict"] = json!("inconclusive");
        emit(&text, report, paths)?;
        return Ok(Outcome::Inconclusive);
    };
    let cs = problem.assemble(&pattern)?;
    if let Some(path) = lp_dump {
        let n = problem.n_bases();
        let obj: Vec<(f64, usize)> = (1..=2 * n).map(|j| (1.0, j)).collect();
        write_file(path, &cs.lp_text(&obj))?;
    }
    let n = problem.n_bases();
    let coefficients = Coefficients::from_packed(&out.result.p, n);
    let uniform = cset.uniform_box().cloned();
    let cells = if uniform.is_some() {
        Vec::new()
    } else {
        partition
            .iter_cells()
            .map(|c| Ok((partition.linear_index(&c)?, cset.cell_box(&c)?)))
            .collect::<monocert::Result<Vec<_>>>()?
    };
    let file = CertificateFile {
        mode: CertificateMode::Controlled,
        alpha: cs_cfg.alpha,
        delta_u: cs_cfg.delta_u,
        coefficients: coefficients.clone(),
        trajectories: trajectory_refs(&trajs, &cert_rel),
        lipschitz: None,
        partition: partition.clone(),
        initial_set: sys.initial_set().clone(),
        unsafe_set: sys.unsafe_set().clone(),
        input_set: Some(input_set.clone()),
        policies: specs,
        controller: Some(ControllerExport {
            pattern: pattern.clone(),
            uniform: uniform.clone(),
            cells,
        }),
    };
    let cert_path = cfg.resolve(&cert_rel);
    write_file(&cert_path, &(file.to_json()? + "\n"))?;
    let verified = CertificateFile::load_verified(&cert_path, REVERIFY_TOL).context("written certificate failed re-verification")?;

    let _ = writeln!(text, "pattern: {pattern}");
    let _ = writeln!(
        text,
        "certificate: a = {}, b = {}, c = {}",
        coefficients.a,
        fmt_vec(&coefficients.b),
        fmt_vec(&coefficients.c)
    );
    match &uniform {
        Some(b) => {
            let _ = writeln!(text, "controller: {} x {} on every cell", fmt_vec(b.lower()), fmt_vec(b.upper()));
        }
        None => {
            let _ = writeln!(text, "controller: state dependent, {} cell boxes stored", partition.cell_count());
        }
    }
    let _ = writeln!(text, "coefficient cap active: {}", if out.result.cap_active { "yes" } else { "no" });
    let _ = writeln!(text, "re-verified: largest row violation {:e}", verified.max_violation);
    let _ = writeln!(text, "wrote {}", cert_rel.display());

    let (runs, horizon, nominal) = validation_params(cfg, &trajs);
    if let Some(u) = &nominal {
        let shield = cert_path.with_extension("shield.csv");
        let mut csv = String::from("cell");
        for i in 0..u.len() {
            let _ = write!(csv, ",u{}", i + 1);
        }
        csv.push('\n');
        for c in partition.iter_cells() {
            let v = select_control(cset, &c, Some(u))?;
            let _ = write!(csv, "{}", partition.linear_index(&c)?);
            for x in v {
                let _ = write!(csv, ",{x}");
            }
            csv.push('\n');
        }
        write_file(&shield, &csv)?;
        let _ = writeln!(text, "shield: nominal input {} projected per cell", fmt_vec(u));
    }
    let mc = monte_carlo_shielded(
        &sys,
        &verified.template,
        Some(cset),
        nominal.as_deref(),
        runs,
        horizon,
        validation_seed(seed),
    )?;
    text.push_str(&mc.to_text());
    let ok = mc.is_clean();
    let _ = writeln!(
        text,
        "verdict: {}",
        if ok { "safe controller (certificate found and validated)" } else { "inconclusive (validation found violations)" }
    );
    report["pattern"] = json!(pattern.to_string());
    report["coefficients"] = serde_json::to_value(&coefficients)?;
    report["controller_uniform"] = serde_json::to_value(&uniform)?;
    report["objective"] = json!(out.result.objective);
    report["cap_active"] = json!(out.result.cap_active);
    report["max_row_violation"] = json!(verified.max_violation);
    report["monte_carlo"] = safety_json(&mc);
    report["verdict"] = json!(if ok { "safe" } else { "inconclusive" });
    emit(&text, report, paths)?;
    Ok(if ok { Outcome::Success } else { Outcome::Inconclusive })
}

/// Re-checks a stored certificate against its data, re-runs the Monte-Carlo
/// layer and the property checks of its active bases.
pub fn cmd_validate(cfg: &Loaded, seed: u64, certificate: Option<&Path>, samples: usize) -> Result<Outcome> {
    let cert_path = match certificate {
        Some(p) => p.to_path_buf(),
        None => cfg.resolve(&cfg.certificate()?.output),
    };
    let verified = CertificateFile::load_verified(&cert_path, REVERIFY_TOL)
        .with_context(|| format!("certificate {} rejected", cert_path.display()))?;
    let file = &verified.file;
    let sys = cfg.config.system.build().context("cannot build system")?;
    let cset = match (&file.controller, &file.input_set) {
        (Some(ctrl), Some(us)) => {
            let pols = file
                .policies
                .iter()
                .map(|s| s.build(us).map(Arc::new))
                .collect::<monocert::Result<Vec<_>>>()?;
            Some(controller_set(&ctrl.pattern, &pols, &file.partition, us)?)
        }
        _ => None,
    };
    let max_t = verified.template.upper().iter().map(|b| b.trajectory().horizon()).max().unwrap_or(0);
    let (runs, horizon, nominal) = match &cfg.config.validation {
        Some(v) => (v.runs, v.horizon, v.nominal.clone()),
        None => (defaults::VALIDATION_RUNS, max_t, None),
    };
    let vseed = validation_seed(seed);
    let mut text = String::new();
    let _ = writeln!(text, "certificate: re-verified, largest row violation {:e}", verified.max_violation);
    let mc = monte_carlo_shielded(&sys, &verified.template, cset.as_ref(), nominal.as_deref(), runs, horizon, vseed)?;
    text.push_str(&mc.to_text());
    let mut clean = mc.is_clean();
    let mut checks = Vec::new();
    let tpl = &verified.template;
    let bases = tpl
        .upper()
        .iter()
        .zip(tpl.b())
        .chain(tpl.lower().iter().zip(tpl.c()))
        .filter(|(_, w)| **w > 0.0)
        .map(|(b, _)| b);
    for (i, basis) in bases.enumerate() {
        let ord = check_basis_order(basis, sys.state_set(), samples, vseed.wrapping_add(i as u64))?;
        text.push_str(&ord.to_text());
        clean &= ord.is_clean();
        checks.push(json!({"basis": basis.label(), "kind": format!("{:?}", basis.kind()), "order": serde_json::to_value(&ord)?}));
        if !(basis.kind().is_robust() && basis.truncated()) {
            let dis = check_dissipation(basis, &sys, samples, vseed.wrapping_add(100 + i as u64))?;
            text.push_str(&dis.to_text());
            clean &= dis.is_clean();
            checks.push(json!({"basis": basis.label(), "dissipation": serde_json::to_value(&dis)?}));
        }
    }
    let _ = writeln!(text, "verdict: {}", if clean { "no violations found" } else { "violations found" });
    let report = json!({
        "command": "validate",
        "max_row_violation": verified.max_violation,
        "monte_carlo": safety_json(&mc),
        "basis_checks": checks,
        "verdict": if clean { "clean" } else { "violations" },
    });
    emit(&text, report, report_paths(&cert_path, "validate"))?;
    Ok(if clean { Outcome::Success } else { Outcome::Inconclusive })
}

/// CSV of certificate values on a 2-D grid over the partition domain. Other
/// coordinates are fixed at `at` (default: the domain center).
pub fn cmd_eval_grid(
    certificate: &Path,
    resolution: usize,
    axes: (usize, usize),
    at: Option<&[f64]>,
    output: Option<&Path>,
) -> Result<Outcome> {
    if resolution == 0 {
        bail!("--resolution must be at least 1");
    }
    let verified = CertificateFile::load_verified(certificate, REVERIFY_TOL)
        .with_context(|| format!("certificate {} rejected", certificate.display()))?;
    let domain = verified.file.partition.domain().clone();
    let n = domain.dim();
    let (i, j) = axes;
    if i >= n || j >= n || (i == j && n > 1) {
        bail!("--axes {},{}: need two distinct axes below {n}", i + 1, j + 1);
    }
    let mut base = match at {
        Some(v) if v.len() == n => v.to_vec(),
        Some(v) => bail!("--at has {} values, expected {n}", v.len()),
        None => domain.center(),
    };
    let node = |k: usize, axis: usize| -> f64 {
        let (lo, hi) = (domain.lower()[axis], domain.upper()[axis]);
        if resolution == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * k as f64 / (resolution - 1) as f64
        }
    };
    let mut csv = if n == 1 {
        format!("x{},value\n", i + 1)
    } else {
        format!("x{},x{},value\n", i + 1, j + 1)
    };
    let rows_j = if n == 1 { 1 } else { resolution };
    for kj in 0..rows_j {
        for ki in 0..resolution {
            base[i] = node(ki, i);
            if n > 1 {
                base[j] = node(kj, j);
            }
            let v = monocert::eval_certificate(&verified.template, &base)?;
            if n == 1 {
                let _ = writeln!(csv, "{},{v}", base[i]);
            } else {
                let _ = writeln!(csv, "{},{},{v}", base[i], base[j]);
            }
        }
    }
    match output {
        Some(p) => write_file(p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(Outcome::Success)
}

pub fn cmd_info(cfg: Option<&Loaded>, seed: u64) -> Result<Outcome> {
    println!("monocert {}", env!("CARGO_PKG_VERSION"));
    println!("built-in systems: lotka-volterra (tau), traffic (tau, x_max, indicator_closed), synthetic-contractive (dim)");
    println!("defaults:");
    println!("  alpha = {}", defaults::alpha());
    println!("  delta_u = {:e}", defaults::delta_u());
    println!("  support floor = {:e}", monocert::certify::SUPPORT_FLOOR);
    println!("  tail window = {}", defaults::TAIL_WINDOW);
    println!("  coefficient cap = {:e}", defaults::CAP);
    println!("  validation runs = {}", defaults::VALIDATION_RUNS);
    println!("  grid resolution = {}", defaults::GRID_RESOLUTION);
    let Some(cfg) = cfg else {
        return Ok(Outcome::Success);
    };
    let sys = cfg.config.system.build().context("cannot build system")?;
    println!("system: {} (dimension {}, inputs {:?})", sys.name(), sys.dim(), sys.input_role());
    println!("  state set {} x {}", fmt_vec(sys.state_set().lower()), fmt_vec(sys.state_set().upper()));
    for b in sys.initial_set().boxes() {
        println!("  initial box {} x {}", fmt_vec(b.lower()), fmt_vec(b.upper()));
    }
    for b in sys.unsafe_set().boxes() {
        println!("  unsafe box {} x {}", fmt_vec(b.lower()), fmt_vec(b.upper()));
    }
    if let Some(u) = sys.input_set() {
        println!("  input set {} x {}", fmt_vec(u.lower()), fmt_vec(u.upper()));
    }
    let modes: &[MonotonicityMode] = match sys.input_role() {
        InputRole::None => &[MonotonicityMode::Sm],
        _ => &[MonotonicityMode::Sm, MonotonicityMode::Sim],
    };
    for m in modes {
        let rep = audit_monotonicity(&sys, defaults::AUDIT_PAIRS, *m, seed);
        println!("  monotonicity audit {:?}: {} pairs, {} violations", m, rep.pairs, rep.violations.len());
    }
    if let Ok(c) = cfg.certificate() {
        let p = build_partition(sys.state_set(), c.width)?;
        let covers = CoverSets::new(&p, sys.initial_set(), sys.unsafe_set())?;
        println!(
            "partition width {}: {} cells, {} initial, {} unsafe",
            c.width,
            p.cell_count(),
            covers.initial.len(),
            covers.unsafe_cells.len()
        );
    }
    if let Ok(paths) = cfg.trajectory_paths() {
        for rel in paths {
            match Trajectory::load(&cfg.resolve(&rel)) {
                Ok(tr) => println!(
                    "trajectory {}: T = {}, tail epsilon {:?}, dominating tail {:?}",
                    rel.display(),
                    tr.horizon(),
                    tr.tail().epsilon,
                    tr.tail().dominating
                ),
                Err(_) => println!("trajectory {}: not generated yet", rel.display()),
            }
        }
    }
    Ok(Outcome::Success)
}
