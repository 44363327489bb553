use approx::assert_abs_diff_eq;
use decomap::certify::{certify_decomposable_with, sep_witness_with, CertifyOptions};
use decomap::cones::{compress, in_j, random_j_member};
use decomap::exec::Execution;
use decomap::maps::{choi, dual_eval, dual_eval_kron, positivity_probe_with, LinearMap, ProbeVerdict};
use decomap::matlib::{basis_transpose, hermitian_eig, partial_transpose_outer, psd_project};
use decomap::opsys::OperatorSystem;
use decomap::random::{random_hermitian, random_matrix, random_state, random_unitary, random_vector, rng_for};
use decomap::ComplexMatrix;
use proptest::prelude::*;

fn dist(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).frobenius_norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_transpose_is_an_involution(seed in any::<u64>(), p in 1usize..4, q in 1usize..4) {
        let m = random_matrix(&mut rng_for(seed, 1), p * q);
        let back = partial_transpose_outer(&partial_transpose_outer(&m, p, q).unwrap(), p, q).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn basis_transpose_is_an_involution(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = rng_for(seed, 2);
        let t = random_matrix(&mut rng, n);
        let u = random_unitary(&mut rng, n);
        let twice = basis_transpose(&basis_transpose(&t, &u).unwrap(), &u).unwrap();
        assert_abs_diff_eq!(dist(&twice, &t), 0.0, epsilon = 1e-11 * (1.0 + t.frobenius_norm()));
    }

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), n in 1usize..8) {
        let h = random_hermitian(&mut rng_for(seed, 3), n);
        let eig = hermitian_eig(&h).unwrap();
        assert_abs_diff_eq!(dist(&eig.reconstruct(), &h), 0.0, epsilon = 1e-10 * (1.0 + h.frobenius_norm()));
        prop_assert!(eig.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn psd_projection_is_idempotent(seed in any::<u64>(), n in 1usize..7) {
        let h = random_hermitian(&mut rng_for(seed, 4), n);
        let p = psd_project(&h).unwrap();
        prop_assert!(hermitian_eig(&p).unwrap().min_eigenvalue() >= -1e-12);
        assert_abs_diff_eq!(dist(&psd_project(&p).unwrap(), &p), 0.0, epsilon = 1e-10 * (1.0 + p.frobenius_norm()));
    }

    #[test]
    fn choi_round_trip(seed in any::<u64>(), d in 1usize..4, n in 1usize..4) {
        let c = random_hermitian(&mut rng_for(seed, 5), d * n);
        let phi = LinearMap::from_choi(&c, d, n).unwrap();
        assert_abs_diff_eq!(dist(&choi(&phi).unwrap(), &c), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dual_functional_forms_agree(seed in any::<u64>(), d in 1usize..4, n in 1usize..4) {
        let mut rng = rng_for(seed, 6);
        let phi = LinearMap::from_choi(&random_hermitian(&mut rng, d * n), d, n).unwrap();
        let m = random_matrix(&mut rng, d * n);
        let a = dual_eval(&phi, &m).unwrap();
        let b = dual_eval_kron(&phi, &m).unwrap();
        assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-10 * (1.0 + a.norm()));
    }

    #[test]
    fn compression_preserves_j(seed in any::<u64>(), k in 1usize..4, n in 1usize..4) {
        let mut rng = rng_for(seed, 7);
        let system = OperatorSystem::full(2);
        let s = random_j_member(&mut rng, &system, k).unwrap();
        let ys: Vec<_> = (0..k).map(|_| random_vector(&mut rng, n)).collect();
        let t = compress(&s, &ys, 2).unwrap();
        prop_assert!(in_j(&t, &system, n, 1e-9).unwrap().member);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn execution_mode_does_not_change_results(seed in any::<u64>()) {
        let mut rng = rng_for(seed, 8);
        let phi = LinearMap::from_choi(&random_hermitian(&mut rng, 4), 2, 2).unwrap();
        let par = positivity_probe_with(&phi, 200, seed, Execution::Parallel).unwrap();
        let seq = positivity_probe_with(&phi, 200, seed, Execution::Sequential).unwrap();
        let key = |v: &ProbeVerdict| (v.is_counterexample(), v.lambda_min().to_bits());
        prop_assert_eq!(key(&par), key(&seq));

        let rho = random_state(&mut rng, 6);
        let a = sep_witness_with(&rho, 2, 3, 8, seed, Execution::Parallel).unwrap();
        let b = sep_witness_with(&rho, 2, 3, 8, seed, Execution::Sequential).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert_eq!(a.witness_value().map(f64::to_bits), b.witness_value().map(f64::to_bits));

        let opts = |exec| CertifyOptions { budget: 400, seed, exec, ..Default::default() };
        let a = certify_decomposable_with(&phi, &opts(Execution::Parallel)).unwrap();
        let b = certify_decomposable_with(&phi, &opts(Execution::Sequential)).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
        prop_assert_eq!(a.witness_value().map(f64::to_bits), b.witness_value().map(f64::to_bits));
    }
}
