use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qualpert_core::convexsolve::{solve_capped_simplex_qp, solve_lp, CappedSimplexQp, LpProblem};
use qualpert_core::esqm::run_esqm;
use qualpert_core::qualification::check_mfcq_lp;
use qualpert_core::scanner::scan_singular;
use qualpert_core::{catalog, CatalogParams, EsqmParams, MfcqTolerances, PerturbationSpec};

fn ball_box() -> qualpert_core::ProblemInstance {
    let p = CatalogParams {
        n: Some(2),
        a: Some(vec![0.4, 0.2]),
        ..Default::default()
    };
    catalog("ball_box", &p).unwrap()
}

fn lp(c: &mut Criterion) {
    let prob = LpProblem::new(vec![-1.0, -2.0, 0.5, 1.0])
        .leq(vec![1.0, 1.0, 1.0, 1.0], 4.0)
        .leq(vec![2.0, -1.0, 0.0, 1.0], 3.0)
        .leq(vec![-1.0, 3.0, 1.0, 0.0], 5.0)
        .bounds(0, 0.0, 3.0)
        .bounds(1, 0.0, 3.0);
    c.bench_function("lp 4x3", |b| {
        b.iter(|| solve_lp(black_box(&prob), 1e-9).unwrap())
    });
}

fn qp(c: &mut Criterion) {
    let g = [[1.0, 0.2], [-0.3, 1.0], [0.5, -0.7], [-1.0, -0.4]];
    let quad = (0..4)
        .map(|i| {
            (0..4)
                .map(|j| -(g[i][0] * g[j][0] + g[i][1] * g[j][1]))
                .collect()
        })
        .collect();
    let qp = CappedSimplexQp {
        quad,
        lin: vec![0.3, -0.1, 0.2, 0.05],
        beta: 10.0,
    };
    c.bench_function("capped simplex qp m=4", |b| {
        b.iter(|| solve_capped_simplex_qp(black_box(&qp), 1e-12).unwrap())
    });
}

fn mfcq(c: &mut Criterion) {
    let prob = ball_box();
    let pert = PerturbationSpec::Diagonal(8.0 - 1.96 - 1.44);
    let tols = MfcqTolerances::default();
    c.bench_function("mfcq lp at a corner", |b| {
        b.iter(|| check_mfcq_lp(&prob, &pert, black_box(&[-1.0, -1.0]), &tols).unwrap())
    });
}

fn scan(c: &mut Criterion) {
    let prob = ball_box();
    let mut group = c.benchmark_group("scan");
    group.sample_size(10);
    group.bench_function("ball_box n=2, 100 starts", |b| {
        b.iter(|| scan_singular(&prob, (0.0, 8.0), 100, 1).unwrap())
    });
    group.finish();
}

fn esqm(c: &mut Criterion) {
    let prob = ball_box();
    let f = prob.objective().unwrap().clone();
    let params = EsqmParams::for_problem(&prob, &f, 6.8).unwrap();
    c.bench_function("esqm ball_box", |b| {
        b.iter(|| run_esqm(&prob, &f, black_box(&[0.0, -0.9]), &params).unwrap())
    });
}

criterion_group!(benches, lp, qp, mfcq, scan, esqm);
criterion_main!(benches);
