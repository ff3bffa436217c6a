//! End-to-end runs of the two built-in case studies through assembly and the
//! solvers.

use std::sync::Arc;

use monocert::certify::{CspopProblem, RspopProblem, DEFAULT_DELTA_U};
use monocert::solver::{solve_cspop, solve_cspop_milp, solve_rspop, LossSpec, SolverOptions};
use monocert::systems::{estimate_compact_tail, make_lotka_volterra, make_traffic};
use monocert::{
    build_partition, eval_certificate, monte_carlo_safety, simulate, CoverSets, FeedbackPolicy, InputSource, Trajectory,
    DEFAULT_ALPHA,
};

fn lv_trajectories() -> Vec<Arc<Trajectory>> {
    let sys = make_lotka_volterra(0.2).unwrap();
    [[1.46, 0.84, 0.67, 1.59, 0.78], [8.65, 9.74, 8.83, 9.17, 9.61]]
        .iter()
        .map(|x0| {
            let tr = simulate(&sys, x0, &InputSource::SampledDisturbance, 400, 0).unwrap();
            let eps = estimate_compact_tail(&tr, 50).unwrap().epsilon.unwrap();
            Arc::new(tr.with_epsilon(eps).unwrap())
        })
        .collect()
}

#[test]
fn lotka_volterra_certificate() {
    let sys = make_lotka_volterra(0.2).unwrap();
    let trajs = lv_trajectories();
    let p = build_partition(sys.state_set(), 0.5).unwrap();
    let covers = CoverSets::new(&p, sys.initial_set(), sys.unsafe_set()).unwrap();
    let prob = RspopProblem::new(&trajs, None, &p, &covers, DEFAULT_ALPHA, DEFAULT_DELTA_U).unwrap();
    let cs = prob.assemble().unwrap();
    assert_eq!(cs.n_vars(), 5);
    let res = solve_rspop(&cs, LossSpec::L1, &SolverOptions::default()).unwrap();
    assert!(res.is_optimal(), "{res:?}");
    assert!(cs.verify(&res.p, 1e-9).is_empty());
    assert!(!res.cap_active);
    // At most one weight per basis family is needed: a lower basis on the
    // trajectory from below and an upper basis on the one from above.
    let active: Vec<usize> = (1..5).filter(|j| res.p[*j] > 0.0).collect();
    assert!(active.len() <= 2, "active weights {active:?}");

    let tpl = prob.template.clone().with_coefficients(&res.p).unwrap();
    for x in [[4.0; 5], [6.0; 5], [5.0; 5]] {
        assert!(eval_certificate(&tpl, &x).unwrap() <= 0.0);
    }
    for x in [[0.1; 5], [2.0; 5], [8.0; 5], [10.0; 5]] {
        assert!(eval_certificate(&tpl, &x).unwrap() > 0.0);
    }
    let rep = monte_carlo_safety(&sys, &tpl, None, 1000, 400, 1).unwrap();
    assert!(rep.is_clean(), "{}", rep.to_text());
}

fn traffic_problem() -> CspopProblem {
    let sys = make_traffic(0.01, &[10.0, 10.0]).unwrap();
    let pols: Vec<Arc<FeedbackPolicy>> = [("pi1", [9.0, 0.6]), ("pi2", [9.0, 0.5])]
        .iter()
        .map(|(id, u)| Arc::new(FeedbackPolicy::constant(*id, u.to_vec()).unwrap()))
        .collect();
    let trajs: Vec<Arc<Trajectory>> = [[9.5, 9.9], [0.1, 0.3]]
        .iter()
        .zip(&pols)
        .map(|(x0, pol)| {
            Arc::new(simulate(&sys, x0, &InputSource::Policy(pol.clone()), 1000, 0).unwrap())
        })
        .collect();
    let p = build_partition(sys.state_set(), 1.0).unwrap();
    let covers = CoverSets::new(&p, sys.initial_set(), sys.unsafe_set()).unwrap();
    CspopProblem::new(
        &trajs,
        &pols,
        &p,
        &covers,
        sys.input_set().unwrap(),
        DEFAULT_ALPHA,
        DEFAULT_DELTA_U,
    )
    .unwrap()
}

#[test]
fn traffic_controller() {
    let prob = traffic_problem();
    let out = solve_cspop(&prob, LossSpec::SparsitySupportSize, &SolverOptions::default()).unwrap();
    assert!(out.result.is_optimal());
    let pattern = out.pattern.clone().unwrap();
    assert_eq!(pattern.to_string(), "Kp={1} Kq={2}");
    let cset = out.controller.unwrap();
    let b = cset.uniform_box().expect("constant policies give one box");
    assert_eq!(b.lower(), &[9.0, 0.5]);
    assert_eq!(b.upper(), &[9.0, 0.6]);
    // Smaller patterns were tried first and rejected.
    assert!(out.attempts.iter().all(|a| a.pattern.size() <= 2));
    assert!(out.attempts.len() >= 5);
    let sys = make_traffic(0.01, &[10.0, 10.0]).unwrap();
    let tpl = out.template.unwrap();
    let rep = monte_carlo_safety(&sys, &tpl, Some(&cset), 1000, 1000, 1).unwrap();
    assert!(rep.is_clean(), "{}", rep.to_text());
}

#[test]
fn milp_agrees_with_enumeration() {
    let prob = traffic_problem();
    let opts = SolverOptions::default();
    for loss in [LossSpec::SparsitySupportSize, LossSpec::L1] {
        let a = solve_cspop(&prob, loss, &opts).unwrap();
        let b = solve_cspop_milp(&prob, loss, &opts).unwrap();
        assert!(a.result.is_optimal() && b.result.is_optimal());
        assert_eq!(a.pattern.as_ref().unwrap().size(), b.pattern.as_ref().unwrap().size());
        assert!((a.result.objective - b.result.objective).abs() <= 1e-9 * a.result.objective.abs().max(1.0));
    }
}
