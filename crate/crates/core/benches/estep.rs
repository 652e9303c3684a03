use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use longdina::estimation::{e_step, marginal_loglikelihood, EmConfig, Evaluator, QuadratureSpec};
use longdina::exec::Execution;
use longdina::simulation::{paper_condition, simulate, AnchorQuality};
use std::hint::black_box;

fn e_step_by_execution(c: &mut Criterion) {
    let quad = QuadratureSpec::default();
    let mut group = c.benchmark_group("e_step");
    group.sample_size(20);
    for occasions in [2, 3] {
        let cond = paper_condition(occasions, 500, AnchorQuality::High, 1).unwrap();
        let data = simulate(&cond).unwrap().responses;
        let ev = Evaluator::new(&cond.design, &cond.params, &quad, EmConfig::default().pattern_cap_bits, true).unwrap();
        for execution in [Execution::Parallel, Execution::Sequential] {
            let id = BenchmarkId::new(format!("{execution:?}").to_lowercase(), format!("T{occasions}_N500"));
            group.bench_with_input(id, &execution, |b, &e| b.iter(|| e_step(&ev, black_box(&data), e)));
        }
    }
    group.finish();
}

fn loglikelihood(c: &mut Criterion) {
    let quad = QuadratureSpec::default();
    let cond = paper_condition(2, 500, AnchorQuality::High, 2).unwrap();
    let data = simulate(&cond).unwrap().responses;
    c.bench_function("marginal_loglikelihood T2_N500", |b| {
        b.iter(|| marginal_loglikelihood(black_box(&data), &cond.design, &cond.params, &quad).unwrap())
    });
}

criterion_group!(benches, e_step_by_execution, loglikelihood);
criterion_main!(benches);
