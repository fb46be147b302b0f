//! Criterion benchmarks for the hot kernels: dimension search, binomial
//! weight rows, reweighted-query simulation, sign quantization, and the
//! rejection oracle's sub-query recombination.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use sqmem::boost::{sq_simulate_query, LnFactorial, WeightRow};
use sqmem::harness::perturb_distribution;
use sqmem::reduce::{quantize_signs, RejectionSqOracle};
use sqmem::{sq_dim_exact, sq_dim_greedy, Calibration, ExactOracle, SqOracle, SqQuery};
use sqmem_bench::{boost_scene, parity, thresholds};

/// Exact search on a full-clique instance (every parity pair is orthogonal,
/// so the branch-and-bound walks the whole class) and greedy packing on a
/// longer threshold line.
fn bench_sq_dim(c: &mut Criterion) {
    let cal = Calibration::default();
    let (pclass, pdist) = parity(3);
    let (tclass, tdist) = thresholds(64);
    let mut g = c.benchmark_group("sq_dim");
    g.bench_function("exact_parity3", |b| {
        b.iter(|| sq_dim_exact(black_box(&pclass), &pdist, cal.exact_dim_cap).unwrap())
    });
    g.bench_function("greedy_threshold64", |b| {
        b.iter(|| sq_dim_greedy(black_box(&tclass), &tdist, 7).unwrap())
    });
    g.finish();
}

/// Peak location (construction) and per-margin evaluation of the binomial
/// acceptance weights at a mid-horizon round.
fn bench_weight_row(c: &mut Criterion) {
    let lf = Arc::new(LnFactorial::up_to(600));
    let row = WeightRow::new(600, 300, 1.0 / 24.0, Arc::clone(&lf)).unwrap();
    let mut g = c.benchmark_group("weight_row");
    g.bench_function("build_t300_of_600", |b| {
        b.iter(|| WeightRow::new(600, 300, black_box(1.0 / 24.0), Arc::clone(&lf)).unwrap())
    });
    g.bench_function("sweep_t300_of_600", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for m in -300..=300i64 {
                acc += row.value(black_box(m));
            }
            acc
        })
    });
    g.finish();
}

/// One simulated correlation query against the round-8 reweighted
/// distribution on a 64-point threshold line, paid for with exact base
/// queries region by region.
fn bench_simulate(c: &mut Criterion) {
    let cal = Calibration::default();
    let (mut oracle, psi, state, p) = boost_scene(64, 8);
    c.bench_function("simulate/query_t8_n64", |b| {
        b.iter(|| sq_simulate_query(&mut oracle, black_box(&psi), &state, &p, 0.05, &cal).unwrap())
    });
}

/// Grid quantization of a correlation value to sub-`tau` resolution,
/// including materializing the sign pattern.
fn bench_quantize(c: &mut Criterion) {
    c.bench_function("quantize/signs_tau1e-4", |b| {
        b.iter(|| {
            let q = quantize_signs(black_box(0.3), 1e-4).unwrap();
            (q.value, q.signs().len())
        })
    });
}

/// A transferred query on 256 points: the oracle recombines 41 quantized
/// sign sub-queries at the inner tolerance to emulate one query under the
/// source distribution.
fn bench_rejection(c: &mut Criterion) {
    let (class, p) = parity(8);
    let q_dist = perturb_distribution(&p, 1.2, 11).unwrap();
    let inner = ExactOracle::new(class.concept(5).clone(), q_dist.clone()).unwrap();
    let mut oracle = RejectionSqOracle::new(inner, p, q_dist, 0.5).unwrap();
    let query = SqQuery::new(class.concept(9).clone(), 0.1).unwrap();
    c.bench_function("rejection/answer_n256", |b| {
        b.iter(|| oracle.answer(black_box(&query)).unwrap())
    });
}

criterion_group!(
    kernels,
    bench_sq_dim,
    bench_weight_row,
    bench_simulate,
    bench_quantize,
    bench_rejection
);
criterion_main!(kernels);
