//! Parallel-versus-sequential benchmarks for the data-parallel kernels.
//!
//! The library parallelizes gradient evaluations, sweep trials, and shadow
//! snapshot collection through one facade gated by the `parallel` feature.
//! Run the suite twice to compare backends:
//!
//! ```text
//! cargo bench -p ucvqa                          # rayon
//! cargo bench -p ucvqa --no-default-features    # sequential fallback
//! ```
//!
//! Group names carry the active mode so reports from the two runs can sit
//! side by side in the same criterion directory.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ucvqa::circuits::{build_qsp_ansatz, build_target, haar_target, AnsatzSpec, CircuitKind};
use ucvqa::harness::{run_bp_scan, Experiment, ExperimentConfig, LayerChoice};
use ucvqa::objective::{gradient, CompilationProblem};
use ucvqa::optimize::OptimizerKind;
use ucvqa::rng::rng_from_seed;
use ucvqa::shadow::collect_pauli_snapshots;
use ucvqa::simcore::haar_unitary;

fn mode() -> &'static str {
    if cfg!(feature = "parallel") {
        "rayon"
    } else {
        "seq"
    }
}

fn bench_gradient(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("gradient/{}", mode()));
    for &n in &[4usize, 6] {
        let ansatz = build_qsp_ansatz(&AnsatzSpec::new(CircuitKind::GraphStar, n, 2)).unwrap();
        let target = build_target(CircuitKind::GhzTarget, n).unwrap();
        let problem =
            CompilationProblem::new(ansatz, target.adjoint().unwrap(), 10_000).unwrap();
        use rand::Rng as _;
        let mut rng = rng_from_seed(1);
        let params: Vec<f64> = (0..problem.n_params())
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        group.bench_with_input(BenchmarkId::new("star_ghz_l2", n), &n, |b, _| {
            b.iter(|| gradient(&problem, &params, 12345).unwrap())
        });
    }
    group.finish();
}

fn bench_snapshots(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("shadow_snapshots/{}", mode()));
    let unitary = haar_unitary(3, &mut rng_from_seed(9)).unwrap();
    let prep = haar_target(3, &unitary).unwrap();
    for &r in &[1_000usize, 10_000] {
        group.bench_with_input(BenchmarkId::new("haar3", r), &r, |b, &r| {
            b.iter(|| collect_pauli_snapshots(&prep, r, 7).unwrap())
        });
    }
    group.finish();
}

fn bench_bp_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("bp_scan/{}", mode()));
    group.sample_size(10);
    let cfg = ExperimentConfig {
        qubits: (2, 5),
        trials: 50,
        ansatz: CircuitKind::GraphPolygon,
        ..ExperimentConfig::defaults_for(Experiment::BpScan)
    };
    let _ = LayerChoice::Range(2, 2);
    let _ = OptimizerKind::Qng;
    group.bench_function("polygon_n2_5", |b| b.iter(|| run_bp_scan(&cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_gradient, bench_snapshots, bench_bp_scan);
criterion_main!(benches);
