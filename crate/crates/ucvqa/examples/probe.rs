use ucvqa::circuits::{build_qst_ansatz, haar_target, AnsatzSpec, CircuitKind};
use ucvqa::objective::CompilationProblem;
use ucvqa::optimize::{train, OptimizerConfig, OptimizerKind};
use ucvqa::rng::{mix, rng_from_seed};
use ucvqa::harness::trial_seed;
use ucvqa::simcore::{expectation_global_z, haar_unitary, run};
use rand::Rng as _;

fn main() {
    let n = 2;
    let mut sq_sum = 0.0;
    for trial in 0..10usize {
        let seed = trial_seed(7, "shadow_compare_vqa", n, 1, trial);
        let unitary = haar_unitary(n, &mut rng_from_seed(mix(seed, &[3]))).unwrap();
        let target = haar_target(n, &unitary).unwrap();
        let true_z = expectation_global_z(&run(&target, &[]).unwrap());
        let ansatz = build_qst_ansatz(&AnsatzSpec::new(CircuitKind::WChain, n, 1)).unwrap();
        let problem = CompilationProblem::new(target, ansatz.clone(), 10_000).unwrap();
        let mut rng = rng_from_seed(mix(seed, &[1]));
        let init: Vec<f64> = (0..problem.n_params()).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let trace = train(&problem, &OptimizerConfig::new(OptimizerKind::Adam), &init, mix(seed, &[2])).unwrap();
        let fid = problem.exact_p0(&trace.final_params).unwrap();
        let gamma = run(&ansatz.bind(&trace.final_params).unwrap().adjoint().unwrap(), &[]).unwrap();
        let z = expectation_global_z(&gamma);
        let err = z - true_z;
        sq_sum += err * err;
        println!("trial {trial}: converged={} iters={} fid={:.6} 1-F={:.2e} z_err={:+.4}",
                 trace.converged, trace.records.len(), fid, 1.0 - fid, err);
    }
    println!("vqa variance = {:.3e}  (shadow ~ 8e-5, need <= ~8e-6)", sq_sum / 10.0);
}
