use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vmpc_core::stats::{fit, sample, DistSpec, Family};

fn fitting(c: &mut Criterion) {
    let laws = [
        (Family::BirnbaumSaunders, DistSpec::birnbaum_saunders(4.554, 2.011).unwrap()),
        (Family::LogNormal, DistSpec::log_normal(3.021, 1.435).unwrap()),
        (Family::Weibull, DistSpec::weibull(0.414, 1.013).unwrap()),
    ];
    for (family, spec) in laws {
        let xs = sample(&spec, 10_000, 1);
        c.bench_function(&format!("fit {} n=1e4", family.name()), |b| b.iter(|| fit(family, black_box(&xs)).unwrap()));
    }
}

criterion_group!(benches, fitting);
criterion_main!(benches);
