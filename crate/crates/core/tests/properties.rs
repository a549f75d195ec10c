//! Property-based invariants over random states and Hamiltonians.

mod common;

use common::*;
use proptest::prelude::*;
use qlyap_core::control::{lyapunov_value, lyapunov_value_isospectral};
use qlyap_core::critical_points::enumerate_critical_points;
use qlyap_core::hamiltonian::classify;
use qlyap_core::linalg::CMatrix;
use qlyap_core::quantum_state::{haar_unitary, random_isospectral, DensityMatrix, Spectrum};
use qlyap_core::{ControlledSystem, SuBasis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&g + g.adjoint()) * c(0.5, 0.0)
}

fn spectrum(n: usize, rng: &mut ChaCha8Rng) -> Spectrum {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    Spectrum::new(raw.iter().map(|x| x / total).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bloch_round_trip(n in 2usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = SuBasis::new(n).unwrap();
        let h = random_hermitian(n, &mut rng);
        let tr = h.trace().re;
        let s = basis.to_bloch(&h).unwrap();
        let back = basis.from_bloch(&s, tr).unwrap();
        prop_assert!((back - &h).iter().all(|z| z.norm() < 1e-12));
        // Parseval: ||H||^2 = Tr(H)^2 / n + |s|^2.
        let norm2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm2 - tr * tr / n as f64 - s.norm_squared()).abs() < 1e-11);
    }

    #[test]
    fn generators_are_antisymmetric(n in 2usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = SuBasis::new(n).unwrap();
        let a = basis.hamiltonian_generator(&random_hermitian(n, &mut rng)).unwrap();
        prop_assert!((&a + a.transpose()).amax() < 1e-12);
    }

    #[test]
    fn lyapunov_derivative_is_minus_f_squared(seed in any::<u64>(), kappa in 0.1f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h0 = random_hermitian(3, &mut rng);
        let h1 = random_hermitian(3, &mut rng);
        let sys = ControlledSystem::new(classify(&h0, &h1, Default::default()).unwrap(), kappa).unwrap();
        let spec = spectrum(3, &mut rng);
        let s = sys.bloch(&random_isospectral(&spec, rng.random()).unwrap()).unwrap();
        let sd = sys.bloch(&random_isospectral(&spec, rng.random()).unwrap()).unwrap();
        let (ds, dsd) = sys.vector_field(&s, &sd);
        let rate = (&s - &sd).dot(&(ds - dsd));
        let f = sys.control_field_bloch(&s, &sd);
        prop_assert!((rate + f * f / kappa).abs() < 1e-10);
        prop_assert!(sys.lyapunov_rate(&s, &sd) <= 0.0);
    }

    #[test]
    fn isospectral_lyapunov_identity(n in 2usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = spectrum(n, &mut rng);
        let a = random_isospectral(&spec, rng.random()).unwrap();
        let b = random_isospectral(&spec, rng.random()).unwrap();
        let v = lyapunov_value(&a, &b).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!((v - lyapunov_value(&b, &a).unwrap()).abs() < 1e-15);
        prop_assert!((v - lyapunov_value_isospectral(&a, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn critical_values_are_frame_independent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = spectrum(3, &mut rng);
        prop_assume!(spec.min_gap() > 1e-3);
        let diag_target = DensityMatrix::from_diagonal(spec.weights()).unwrap();
        let rotated = diag_target.conjugate(&haar_unitary(3, &mut rng)).unwrap();
        let a = enumerate_critical_points(&diag_target).unwrap();
        let b = enumerate_critical_points(&rotated).unwrap();
        for (p, q) in a.iter().zip(&b) {
            prop_assert_eq!(&p.tau, &q.tau);
            prop_assert!((p.j_value - q.j_value).abs() < 1e-12);
            prop_assert_eq!(p.morse_index, q.morse_index);
            prop_assert!(lyapunov_value(&q.state, &rotated).unwrap() - q.v_value < 1e-12);
        }
    }

    #[test]
    fn sampled_states_keep_their_spectrum(n in 2usize..=5, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = spectrum(n, &mut rng);
        let rho = random_isospectral(&spec, rng.random()).unwrap();
        for (a, b) in rho.eigenvalues().iter().zip(spec.weights()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn classification_ignores_identity_and_scale(seed in any::<u64>(), shift in -5.0f64..5.0, scale in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h0 = random_hermitian(3, &mut rng);
        let h1 = random_hermitian(3, &mut rng);
        let a = classify(&h0, &h1, Default::default()).unwrap();
        let b = classify(&(&h0 + CMatrix::identity(3, 3) * c(shift, 0.0)), &(&h1 * c(scale, 0.0)), Default::default()).unwrap();
        prop_assert_eq!(a.ideal, b.ideal);
        prop_assert_eq!(a.strongly_regular, b.strongly_regular);
        prop_assert_eq!(a.fully_connected, b.fully_connected);
    }

    #[test]
    fn commutator_superoperator_matches_reference(n in 2usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = SuBasis::new(n).unwrap();
        let spec = spectrum(n, &mut rng);
        let r1 = random_isospectral(&spec, rng.random()).unwrap();
        let r2 = random_isospectral(&spec, rng.random()).unwrap();
        let a = basis.commutator_superoperator(r2.matrix()).unwrap();
        let got = a * bloch(r1.matrix());
        let want = coords_anti(&comm(r1.matrix(), r2.matrix()));
        prop_assert!((got - want).amax() < 1e-12);
    }
}
