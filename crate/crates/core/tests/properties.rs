use proptest::prelude::*;

use tritangle::linalg::{self, c, ComplexMatrix};
use tritangle::noise::{self, NoiseSpec};
use tritangle::protocol::{self, TwoCopyObservable};
use tritangle::state::{self, random_pure, random_unitary, CBasis, DensityMatrix, PureState};
use tritangle::tangle::{self, LambdaSpectrum, SpectrumRoute};
use tritangle::verify::{self, SymmetricKind};

fn any_state() -> impl Strategy<Value = PureState> {
    (2usize..=6, any::<u64>()).prop_map(|(n, seed)| random_pure(n, seed).unwrap())
}

fn state_and_basis() -> impl Strategy<Value = (PureState, CBasis)> {
    (2usize..=6, any::<u64>(), any::<u64>())
        .prop_map(|(n, a, b)| (random_pure(n, a).unwrap(), random_unitary(n, b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn local_basis_change_keeps_norm_and_reduced_state((s, b) in state_and_basis()) {
        let t = s.apply_c_basis(&b).unwrap();
        prop_assert!((t.norm() - 1.0).abs() < 1e-12);
        let d = linalg::max_abs_diff(s.reduced_ab().matrix(), t.reduced_ab().matrix());
        prop_assert!(d <= 1e-12);
    }

    #[test]
    fn reduced_state_is_slice_gram(s in any_state()) {
        let psi = s.slice_matrix();
        let d = linalg::max_abs_diff(s.reduced_ab().matrix(), &(&psi * psi.adjoint()));
        prop_assert!(d < 1e-14);
    }

    #[test]
    fn two_copy_is_normalized(s in any_state(), seed in any::<u64>()) {
        let other = random_pure(s.n(), seed).unwrap();
        prop_assert!((state::two_copy(&s, &other).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn m_transforms_by_congruence((s, b) in state_and_basis()) {
        let direct = tangle::build_m(&s.apply_c_basis(&b).unwrap());
        let law = tangle::build_m(&s).transformed(b.matrix());
        prop_assert!(linalg::max_abs_diff(direct.matrix(), &law) < 1e-12);
        prop_assert_eq!(linalg::symmetry_defect(direct.matrix()), 0.0);
    }

    #[test]
    fn spectrum_routes_agree(s in any_state()) {
        let m = tangle::lambda_spectrum(&s, SpectrumRoute::ViaM).unwrap();
        for route in [SpectrumRoute::ViaR, SpectrumRoute::ViaHermitian] {
            prop_assert!(m.distance(&tangle::lambda_spectrum(&s, route).unwrap()) < 1e-8);
        }
        let total: f64 = m.values().iter().sum();
        prop_assert!(total <= 1.0 + 1e-12);
        prop_assert!(m.rank() <= s.n().min(4));
    }

    #[test]
    fn tau_forms_and_ranges(s in any_state()) {
        let r = tangle::tau(&s).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r.tau));
        prop_assert!(r.c <= r.c_a + 1e-15);
        prop_assert!((tangle::tau_branch_form(&r.lam) - r.tau).abs() < 1e-12);
        let b = &r.bounds;
        prop_assert!(b.sigma_u.bound <= b.spectral + 1e-9);
        prop_assert!(b.spectral <= r.tau + 1e-9);
        prop_assert!((0.0..=1.0).contains(&b.sigma_u.q_star));
        if let Some(d) = b.qubit_det {
            prop_assert!((d.exact - r.tau).abs() < 1e-9);
            prop_assert!(d.bound <= d.exact + 1e-9);
        }
    }

    #[test]
    fn tau_is_invariant_under_local_unitaries_on_c((s, b) in state_and_basis()) {
        let t = s.apply_c_basis(&b).unwrap();
        prop_assert!((tangle::tau(&s).unwrap().tau - tangle::tau(&t).unwrap().tau).abs() < 1e-9);
    }

    #[test]
    fn coincidences_give_m_moduli((s, b) in state_and_basis()) {
        let m = tangle::build_m(&s).transformed(b.matrix());
        for i in 0..s.n() {
            for j in 0..s.n() {
                let obs = TwoCopyObservable::shared(&b, i, j).unwrap();
                let p = protocol::expectation(&s, &obs).unwrap();
                prop_assert!((2.0 * p.sqrt() - m[(i, j)].norm()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn optimal_basis_diagonalizes(s in any_state()) {
        let b = protocol::optimal_basis(&s).unwrap();
        prop_assert!(protocol::off_diagonal_signal(&s, &b).unwrap() < 1e-12);
        let d = protocol::diagonal_moduli(&s, &b).unwrap();
        for (x, y) in d.iter().zip(tangle::lambda_spectrum(&s, SpectrumRoute::ViaM).unwrap().values()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_identity_factor_is_four(s in any_state()) {
        let t = protocol::verify_trace_identity(&s).unwrap();
        prop_assert!((t.factor.unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn takagi_reconstructs(n in 1usize..=8, seed in any::<u64>(), kind in 0usize..3) {
        let kind = [SymmetricKind::Generic, SymmetricKind::Degenerate, SymmetricKind::RankDeficient][kind];
        let m = verify::random_symmetric(n, seed, kind);
        let f = linalg::takagi(&m).unwrap();
        prop_assert!((f.reconstruct() - &m).norm() <= 1e-12 * m.norm().max(1.0));
        prop_assert!(linalg::unitarity_defect(&f.u) < 1e-12);
        prop_assert!(f.lam.windows(2).all(|w| w[0] >= w[1]) && f.lam.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn state_file_round_trips(s in any_state()) {
        let back = state::parse_state_json(&state::state_to_json(&s)).unwrap();
        prop_assert_eq!(back.amplitudes(), s.amplitudes());
    }

    #[test]
    fn random_state_is_deterministic(n in 1usize..=8, seed in any::<u64>()) {
        prop_assert_eq!(random_pure(n, seed).unwrap(), random_pure(n, seed).unwrap());
    }

    #[test]
    fn sampling_is_deterministic_and_bounded(p in 0.0f64..=1.0, shots in 1u64..100_000, seed in any::<u64>()) {
        let a = protocol::sample_probability(p, shots, seed).unwrap();
        prop_assert_eq!(a, protocol::sample_probability(p, shots, seed).unwrap());
        prop_assert!(a.counts <= shots);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn noisy_pipeline_reduces_to_ideal((s, b) in state_and_basis()) {
        let spec = NoiseSpec::defaults(&s, 0.0).unwrap();
        let (r1, r2) = spec.states(&s).unwrap();
        let noisy = noise::m_abs_noisy(&r1, &r2, &b).unwrap();
        let exact = tangle::build_m(&s).transformed(b.matrix());
        for i in 0..s.n() {
            for j in 0..s.n() {
                prop_assert!((noisy[(i, j)] - exact[(i, j)].norm()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn noisy_moduli_are_continuous(s in any_state(), eps in 1e-4f64..0.05) {
        let b = protocol::optimal_basis(&s).unwrap();
        let spec = NoiseSpec::defaults(&s, eps).unwrap();
        let (r1, r2) = spec.states(&s).unwrap();
        let noisy = noise::m_abs_noisy(&r1, &r2, &b).unwrap();
        let exact = tangle::build_m(&s).transformed(b.matrix());
        // Entries near zero move like sqrt(eps); elsewhere the shift is first order.
        for i in 0..s.n() {
            for j in 0..s.n() {
                prop_assert!((noisy[(i, j)] - exact[(i, j)].norm()).abs() <= 4.0 * eps.sqrt());
            }
        }
    }

    #[test]
    fn noise_inputs_stay_valid(s in any_state(), eps in 0.0f64..0.999, seed in any::<u64>()) {
        let extra = DensityMatrix::maximally_mixed(4 * s.n());
        let rho = noise::quasi_pure(&s, eps, &extra).unwrap();
        prop_assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
        let phi = random_pure(s.n(), seed).unwrap();
        let copy = noise::imperfect_copy(&s, eps, &phi).unwrap();
        prop_assert!((copy.norm() - 1.0).abs() < 1e-12);
        prop_assert!((copy.inner(&s).unwrap().norm_sqr() - (1.0 - eps * eps)).abs() < 1e-12);
    }
}

#[test]
fn lambda_spectrum_rejects_out_of_range() {
    assert!(LambdaSpectrum::new(&[1.2]).is_err());
    assert!(LambdaSpectrum::new(&[-0.1]).is_err());
    assert!(LambdaSpectrum::new(&[0.5, 0.5, 0.5, 0.6]).is_err());
}

#[test]
fn non_unitary_basis_is_rejected() {
    let q = ComplexMatrix::from_fn(2, 2, |i, j| if i == j { c(1.1, 0.0) } else { c(0.0, 0.0) });
    assert!(CBasis::new(q).is_err());
}
