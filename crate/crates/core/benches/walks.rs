//! Run twice to compare the rayon path with the sequential fallback:
//!
//!     cargo bench -p hin-core --bench walks
//!     cargo bench -p hin-core --bench walks --no-default-features
//!
//! Benchmark ids carry the mode, so both runs land side by side in
//! `target/criterion`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use hin_core::ingest::load_movielens_100k;
use hin_core::randomizer::replicate_stream;
use hin_core::recommender::{Exclusion, TwoPath};
use hin_core::synth::{write_movielens_like, SynthConfig};
use hin_core::walk::all_source_distributions;
use hin_core::Hin;

const MODE: &str = if cfg!(feature = "parallel") {
    "parallel"
} else {
    "sequential"
};

fn fixture() -> Hin {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = SynthConfig {
        users: 900,
        movies: 1200,
        locations: 60,
        ..SynthConfig::default()
    };
    write_movielens_like(dir.path(), &config).expect("synthetic dataset");
    load_movielens_100k(dir.path()).expect("load")
}

fn benches(c: &mut Criterion) {
    let hin = fixture();

    let mut g = c.benchmark_group("walks");
    g.sample_size(20);
    for path in ["R_Lo^-1 R_likes R_Ty", "R_likes R_Ty R_Ty^-1"] {
        let mp = hin.meta_path(path).unwrap();
        g.bench_with_input(
            BenchmarkId::new(format!("all_sources/{MODE}"), path),
            &mp,
            |b, mp| b.iter(|| black_box(all_source_distributions(&hin, mp).unwrap())),
        );
    }
    g.finish();

    let mut g = c.benchmark_group("recommend");
    g.sample_size(10);
    let tp = TwoPath::new(&hin, "R_likes", "Lo", "Ty").unwrap();
    let alphas = [1.0, 0.8, 0.6, 0.4, 0.2, 0.0];
    g.bench_function(format!("two_path_grid/{MODE}"), |b| {
        b.iter(|| {
            black_box(
                tp.recommend_many(&hin, &alphas, 20, &Exclusion::Liked("R_likes".into()))
                    .unwrap(),
            )
        })
    });
    g.finish();

    let mut g = c.benchmark_group("shuffle");
    g.sample_size(10);
    g.bench_function(format!("replicates_8/{MODE}"), |b| {
        b.iter(|| black_box(replicate_stream(&hin, "R_likes", 7, 8, 2.0).unwrap()))
    });
    g.finish();
}

criterion_group!(walk_benches, benches);
criterion_main!(walk_benches);
