use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rescal_core::estimators::{greedy_set_cover, separating_table, spanning_table};
use rescal_core::orbits::orbit_census;
use rescal_core::{CatMatrix, FlowSpec, IntegrationConfig, TrajectoryCache};

fn cache(flow: &FlowSpec, resolution: usize, horizon: f64) -> TrajectoryCache {
    let pts = flow.chart().sample_grid(resolution);
    let integ = IntegrationConfig::default();
    TrajectoryCache::build(flow, &pts, horizon, integ.step, integ.sample_dt).unwrap()
}

fn trajectory_cache(c: &mut Criterion) {
    let f = FlowSpec::eno_default();
    c.bench_function("cache/sphere_eno_256_points_t4", |b| b.iter(|| cache(black_box(&f), 16, 4.0)));
}

fn tables(c: &mut Criterion) {
    let f = FlowSpec::TorusItem4;
    let cache = cache(&f, 20, 4.0);
    let n = cache.samples_until(4.0).unwrap();
    let all: Vec<usize> = (0..cache.len()).collect();
    let regular: Vec<usize> = all.iter().copied().filter(|&i| cache.is_regular(i, n)).collect();
    let ts = [1.0, 2.0, 3.0, 4.0];
    let eps = [0.2, 0.4, 0.8];
    c.bench_function("tables/spanning_classical_400", |b| {
        b.iter(|| spanning_table(&cache, &all, |_| all.clone(), &ts, &eps, false).unwrap())
    });
    c.bench_function("tables/spanning_rescaled_400", |b| {
        b.iter(|| spanning_table(&cache, &regular, |_| regular.clone(), &ts, &eps, true).unwrap())
    });
    c.bench_function("tables/separating_rescaled_400", |b| {
        b.iter(|| separating_table(&cache, &regular, &ts, &eps, true).unwrap())
    });
}

fn cover(c: &mut Criterion) {
    let n = 2000u32;
    let sets: Vec<Vec<u32>> = (0..n).map(|i| (0..16).map(|k| (i * 7 + k * 131) % n).collect()).collect();
    c.bench_function("cover/greedy_2000_sets", |b| b.iter(|| greedy_set_cover(black_box(&sets), n as usize).unwrap()));
}

fn census(c: &mut Criterion) {
    c.bench_function("orbits/census_t20", |b| b.iter(|| orbit_census(black_box(&CatMatrix::ARNOLD), 20.0).unwrap()));
}

criterion_group!(benches, trajectory_cache, tables, cover, census);
criterion_main!(benches);
