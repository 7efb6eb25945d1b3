mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pbvqo::hamiltonians::{
    coupling_operator, drift_hamiltonian, mixer_hamiltonian, problem_hamiltonian, qaoa_problem_hamiltonian,
    HardwareModel, ProblemGraph,
};
use pbvqo::optimizers::ParameterVector;
use pbvqo::pulses::{coupling_bound, coupling_strength, evaluate_pulse, filter_pulse, PulseAnsatz};
use pbvqo::simulator::{evolve, expectation, initial_state, EvolutionConfig};
use pbvqo::study::Summary;
use pbvqo::workflows::{pbvqo_cost, PbvqoProblem, QaoaEvaluator, QaoaParams};

fn run(check: fn() -> Check) {
    if let Err(e) = check() {
        panic!("{e}");
    }
}

#[test]
fn operators_are_hermitian() {
    run(check_hermiticity);
}

#[test]
fn evolution_conserves_norm() {
    run(check_norm_conservation);
}

#[test]
fn constant_pulse_matches_single_exponential() {
    run(check_constant_pulse_oracle);
}

#[test]
fn midpoint_integrator_is_second_order() {
    run(check_convergence_order);
}

#[test]
fn ring_ground_energies_match_brute_force() {
    run(check_ground_energies);
}

#[test]
fn filter_is_max_of_bound_and_magnitude() {
    run(check_filter);
}

#[test]
fn flux_inverts_coupling() {
    run(check_flux_round_trip);
}

#[test]
fn central_differences_are_second_order() {
    run(check_fd_order);
}

#[test]
fn ga_generation_best_never_worsens() {
    run(check_ga_elitism);
}

#[test]
fn stochastic_components_are_seed_deterministic() {
    run(check_seed_determinism);
}

/// `H^{(x)N} A H^{(x)N}` with an explicitly built Hadamard tensor power.
fn hadamard_conjugate(m: &DMatrix<Complex64>, n: usize) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h1 = DMatrix::from_row_slice(2, 2, &[s, s, s, -s]).map(|v| Complex64::new(v, 0.0));
    let h = (1..n).fold(h1.clone(), |acc, _| acc.kronecker(&h1));
    &h * m * &h
}

#[test]
fn problem_hamiltonians_are_hadamard_conjugates() {
    for n in 2..=7 {
        let g = ProblemGraph::ring(n).unwrap();
        let xx = problem_hamiltonian(&g).unwrap();
        let zz = qaoa_problem_hamiltonian(&g).unwrap();
        let rotated = hadamard_conjugate(xx.matrix(), n);
        let d = (rotated - zz.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(d < 1e-10, "N={n}: {d}");
    }
}

#[test]
fn pauli_sums_are_traceless() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for n in 2..=6 {
        let model = HardwareModel::uniform(n, 6.0, 1.0).unwrap();
        let g = ProblemGraph::ring(n).unwrap();
        for op in [
            drift_hamiltonian(&model).unwrap(),
            coupling_operator(&model).unwrap(),
            problem_hamiltonian(&g).unwrap(),
            qaoa_problem_hamiltonian(&g).unwrap(),
            mixer_hamiltonian(n).unwrap(),
        ] {
            assert!(op.trace().norm() < 1e-12);
        }
        for (_, op) in operators(n, &mut rng) {
            assert!(op.trace().norm() < 1e-9);
        }
    }
}

#[test]
fn coupling_floor_is_quarter_of_zero_flux_coupling() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..500 {
        let c = random_circuit(&mut rng);
        let g = coupling_bound(&c);
        let g0 = coupling_strength(&c, 0.0).unwrap() / 4.0;
        assert!((g - g0).abs() <= 1e-12 * g.max(1.0), "{g} vs {g0}");
    }
}

#[test]
fn expectation_within_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 2..=5 {
        let model = HardwareModel::uniform(n, 6.0, 1.0).unwrap();
        let psi = evolve(
            &initial_state(n).unwrap(),
            &model,
            &random_pulse(&mut rng, 3, 1.5),
            &EvolutionConfig::default(),
        )
        .unwrap();
        for (name, op) in operators(n, &mut rng) {
            let e = expectation(&psi, &op).unwrap();
            let spectrum = op.eigenvalues();
            assert!(e >= spectrum[0] - 1e-9 && e <= spectrum[spectrum.len() - 1] + 1e-9, "{name}: {e}");
        }
    }
}

#[test]
fn qaoa_variational_bound() {
    let g = ProblemGraph::ring(6).unwrap();
    let ev = QaoaEvaluator::new(&g).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        use rand::Rng;
        let flat: Vec<f64> = (0..6).map(|_| rng.random_range(-4.0..4.0)).collect();
        assert!(ev.energy(&QaoaParams::from_flat(&flat).unwrap()) >= ev.ground_energy() - 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_even_and_bounded(p in -100.0f64..100.0, g in 0.0f64..20.0) {
        let f = filter_pulse(p, g);
        prop_assert_eq!(f, filter_pulse(-p, g));
        prop_assert!(f >= g && f >= p.abs());
        prop_assert!(f == g || f == p.abs());
    }

    #[test]
    fn pulse_has_period_two(
        a in prop::collection::vec(-5.0f64..5.0, 1..5),
        t in 0.0f64..3.0,
    ) {
        let n = a.len();
        let phases: Vec<f64> = (0..n).map(|i| 0.7 * i as f64).collect();
        let ansatz = PulseAnsatz::new(a, phases, 6.0).unwrap();
        let d = evaluate_pulse(&ansatz, t + 2.0).unwrap() - evaluate_pulse(&ansatz, t).unwrap();
        prop_assert!(d.abs() < 1e-12);
    }

    #[test]
    fn pbvqo_energy_respects_variational_bound(
        x in prop::collection::vec(-5.0f64..5.0, 6),
        n in 2usize..=6,
    ) {
        let problem = PbvqoProblem::ring(n).unwrap().with_evolution(EvolutionConfig::with_divisions(200)).unwrap();
        let e = pbvqo_cost(&problem, &ParameterVector::new(x).unwrap()).unwrap();
        prop_assert!(e >= problem.ground_energy().unwrap() - 1e-8);
    }

    #[test]
    fn summary_recomputes_from_values(v in prop::collection::vec(0.0f64..2.0, 1..60)) {
        let s = Summary::from_values(&v).unwrap();
        prop_assert_eq!(&s, &Summary::from_values(&v).unwrap());
        let mut rev = v.clone();
        rev.reverse();
        prop_assert_eq!(&s, &Summary::from_values(&rev).unwrap());
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        prop_assert_eq!(s.count, v.len());
    }
}
