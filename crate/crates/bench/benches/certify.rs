use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use monocert::certify::{CspopProblem, RspopProblem};
use monocert::systems::{estimate_compact_tail, make_lotka_volterra, make_traffic, FeedbackPolicy, LipschitzBounds};
use monocert::{
    build_partition, simulate, solve_cspop, solve_cspop_milp, solve_rspop, CoverSets, InputSource, LossSpec,
    SolverOptions, Trajectory,
};

fn population() -> (RspopProblem, Vec<Arc<Trajectory>>) {
    let sys = make_lotka_volterra(0.2).unwrap();
    let trajs: Vec<Arc<Trajectory>> = [[1.46, 0.84, 0.67, 1.59, 0.78], [8.65, 9.74, 8.83, 9.17, 9.61]]
        .iter()
        .map(|x0| {
            let tr = simulate(&sys, x0, &InputSource::SampledDisturbance, 400, 0).unwrap();
            let eps = estimate_compact_tail(&tr, 50).unwrap().epsilon.unwrap_or(0.0);
            Arc::new(tr.with_epsilon(eps).unwrap())
        })
        .collect();
    let lip = LipschitzBounds::new(1.0, 1.0, 0.0).unwrap();
    let g = build_partition(sys.state_set(), 0.5).unwrap();
    let covers = CoverSets::new(&g, sys.initial_set(), sys.unsafe_set()).unwrap();
    let prob = RspopProblem::new(&trajs, Some(&lip), &g, &covers, 2.0, 1e-6).unwrap();
    (prob, trajs)
}

fn traffic() -> CspopProblem {
    let sys = make_traffic(0.01, &[10.0, 10.0]).unwrap();
    let pols: Vec<Arc<FeedbackPolicy>> = [("high", [9.0, 0.6]), ("low", [9.0, 0.5])]
        .iter()
        .map(|(id, u)| Arc::new(FeedbackPolicy::constant(*id, u.to_vec()).unwrap()))
        .collect();
    let trajs: Vec<Arc<Trajectory>> = [[9.5, 9.9], [0.1, 0.3]]
        .iter()
        .zip(&pols)
        .map(|(x0, p)| Arc::new(simulate(&sys, x0, &InputSource::Policy(p.clone()), 1000, 0).unwrap()))
        .collect();
    let g = build_partition(sys.state_set(), 1.0).unwrap();
    let covers = CoverSets::new(&g, sys.initial_set(), sys.unsafe_set()).unwrap();
    CspopProblem::new(&trajs, &pols, &g, &covers, sys.input_set().unwrap(), 2.0, 1e-6).unwrap()
}

fn dominance(c: &mut Criterion) {
    let (prob, _) = population();
    let basis = &prob.template.upper()[1];
    let x = [5.0, 5.0, 7.0, 6.0, 7.0];
    c.bench_function("dominance value (T = 400, n = 5)", |b| b.iter(|| basis.value(black_box(&x)).unwrap()));
}

fn robust(c: &mut Criterion) {
    let (prob, _) = population();
    c.bench_function("assemble population program", |b| b.iter(|| prob.assemble().unwrap()));
    let cs = prob.assemble().unwrap();
    let opts = SolverOptions::default();
    c.bench_function("solve population program (L1)", |b| {
        b.iter(|| solve_rspop(black_box(&cs), LossSpec::L1, &opts).unwrap())
    });
}

fn controlled(c: &mut Criterion) {
    let prob = traffic();
    let opts = SolverOptions::default();
    let mut g = c.benchmark_group("traffic synthesis");
    g.sample_size(20);
    g.bench_function("pattern enumeration", |b| {
        b.iter(|| solve_cspop(&prob, LossSpec::SparsitySupportSize, &opts).unwrap())
    });
    g.bench_function("branch and bound", |b| {
        b.iter(|| solve_cspop_milp(&prob, LossSpec::SparsitySupportSize, &opts).unwrap())
    });
    g.bench_function("build problem", |b| b.iter(traffic));
    g.finish();
}

criterion_group!(benches, dominance, robust, controlled);
criterion_main!(benches);
