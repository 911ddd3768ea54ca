use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nos_bench::{desk_params, received, wide_params};
use nos_core::codec::map_marginals;
use nos_core::harness::run_trial;
use nos_core::kbest::kbest_search;
use nos_core::{Codebook, DecoderMode};
use std::hint::black_box;

fn marginals(c: &mut Criterion) {
    let mut g = c.benchmark_group("map_marginals");
    for (name, params) in [("desk", desk_params()), ("wide", wide_params())] {
        let cb = Codebook::random(params, 1);
        let y = received(&cb, 1.0, 2);
        g.bench_function(name, |b| {
            b.iter(|| map_marginals(black_box(&y), &cb, 1.0).unwrap())
        });
    }
    g.finish();
}

fn kbest(c: &mut Criterion) {
    let cb = Codebook::random(wide_params(), 1);
    let lp = map_marginals(&received(&cb, 2.0, 3), &cb, 2.0).unwrap();
    let mut g = c.benchmark_group("kbest_search");
    for k in [1, 16, 128, 512] {
        g.bench_with_input(BenchmarkId::from_parameter(k), &k, |b, &k| {
            b.iter(|| kbest_search(black_box(&lp), k))
        });
    }
    g.finish();
}

fn trial(c: &mut Criterion) {
    let cb = Codebook::random(desk_params(), 1);
    let mut g = c.benchmark_group("run_trial");
    for mode in [DecoderMode::OneShot, DecoderMode::KbestCrc] {
        let mut i = 0u64;
        g.bench_function(mode.to_string(), |b| {
            b.iter(|| {
                i += 1;
                run_trial(&cb, 1.0, 128, mode, i, 7).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, marginals, kbest, trial);
criterion_main!(benches);
