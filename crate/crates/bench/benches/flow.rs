use criterion::{criterion_group, criterion_main, Criterion};
use qlyap_bench::scenario;
use qlyap_core::stability::stability_report;
use qlyap_core::{ad_bracket_span, integrate, IntegrateOptions, ScenarioId, SuBasis};

fn rk4(c: &mut Criterion) {
    let sc = scenario(ScenarioId::Fig1a).unwrap();
    let rho0 = sc.initial_state(0).unwrap();
    let opts = IntegrateOptions { horizon: 1.0, ..Default::default() };
    c.bench_function("integrate n=3, 1000 steps", |b| {
        b.iter(|| integrate(&rho0, &sc.target, &sc.sys, &opts).unwrap())
    });
}

fn analysis(c: &mut Criterion) {
    let sc = scenario(ScenarioId::Fig1a).unwrap();
    let basis = SuBasis::new(3).unwrap();
    c.bench_function("ad_bracket_span n=3", |b| b.iter(|| ad_bracket_span(sc.pair(), &basis, None, 1e-9).unwrap()));
    c.bench_function("stability_report n=3", |b| b.iter(|| stability_report(&sc.target, &sc.sys).unwrap()));
}

criterion_group!(benches, rk4, analysis);
criterion_main!(benches);
