use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use keyseg_core::session::{parse_session_str, write_session, SessionMeta};
use keyseg_core::synth::{rng, typist_session, TypistParams};
use keyseg_core::{
    build_profile, derive_activity_units, ks2_test, segment_session, AuParams, ClassifyOptions, ProfileParams,
    SessionLog, Thresholds,
};
use rand::Rng;

fn session(keys: usize) -> SessionLog {
    let params = TypistParams { median_wp: 150.0, median_bp: 600.0, sigma: 0.5, deletion_rate: 0.05, long_pause_rate: 0.05 };
    typist_session(&mut rng(3), SessionMeta::new("BENCH", "b0", "T0"), &params, keys)
}

fn pipeline(c: &mut Criterion) {
    let sizes = [1_000usize, 10_000, 100_000];
    let mut g = c.benchmark_group("pipeline");
    for &n in &sizes {
        let s = session(n);
        let mut text = Vec::new();
        write_session(&s, &mut text).unwrap();
        let text = String::from_utf8(text).unwrap();
        let th = Thresholds::new(200.0, 300.0, 1800.0).unwrap();
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::new("parse", n), &text, |b, t| b.iter(|| parse_session_str(t).unwrap()));
        g.bench_with_input(BenchmarkId::new("profile", n), &s, |b, s| {
            b.iter(|| build_profile("T0", &[s], &ClassifyOptions::default(), &ProfileParams::default()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("segment", n), &s, |b, s| b.iter(|| segment_session(s, &th).unwrap()));
        g.bench_with_input(BenchmarkId::new("activity_units", n), &s, |b, s| {
            b.iter(|| derive_activity_units(s, 1800.0, &AuParams::default()))
        });
    }
    g.finish();
}

fn ks2(c: &mut Criterion) {
    let mut g = c.benchmark_group("ks2");
    let mut r = rng(5);
    for n in [20usize, 25, 1_000, 50_000] {
        let a: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1000.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| r.random_range(50.0..1050.0)).collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &(a, b), |bch, (a, b)| bch.iter(|| ks2_test(a, b).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, pipeline, ks2);
criterion_main!(benches);
