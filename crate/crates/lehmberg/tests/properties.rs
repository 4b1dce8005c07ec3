use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use lehmberg::dressed_spectra::{closed_form_energies, diagonalize};
use lehmberg::dynamics::{build_generator, integrate, Dissipator, IntegratorOptions, StateVector};
use lehmberg::em_coupling::{collective_channels, cross_rate, CouplingTensors, TransitionDipole};
use lehmberg::observables::{g2_coincidence, CascadeGeometry};
use lehmberg::operator_algebra::{OperatorBasis, Transition};
use lehmberg::runner::{format_float, parse_config, G2Evaluator, RangeSpec};
use lehmberg::system_model::{swap_operator, CouplingMode, DiamondSetup};
use lehmberg::{max_norm, CMatrix, CVec3, Complex, Vec3};

fn config(cases: u32, seed: u64) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn real_unit(theta: f64, phi: f64) -> CVec3 {
    Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()).map(|x| Complex::new(x, 0.0))
}

fn setup_strategy() -> impl Strategy<Value = DiamondSetup> {
    (-120.0..120.0f64, -15.0..15.0f64, 0.0..20.0f64, 0.0..20.0f64, 40.0..3000.0f64, any::<bool>()).prop_map(
        |(delta1, delta2, rabi01, rabi12, separation_nm, coupled)| DiamondSetup {
            delta1,
            delta2,
            rabi01,
            rabi12,
            separation_nm,
            couplings: if coupled { CouplingMode::On } else { CouplingMode::Off },
            ..DiamondSetup::rb87()
        },
    )
}

proptest! {
    #![proptest_config(config(48, 1))]

    #[test]
    fn basis_round_trip(levels in 2usize..=4, atoms in 1usize..=2, entries in prop::collection::vec(-1.0..1.0f64, 512)) {
        let basis = OperatorBasis::new(levels, atoms).unwrap();
        let dim = basis.dim();
        let a = CMatrix::from_fn(dim, dim, |i, j| {
            let k = 2 * (i * dim + j);
            Complex::new(entries[k], entries[k + 1])
        });
        let back = basis.reconstruct(&basis.expand(&a).unwrap()).unwrap();
        prop_assert!(max_norm(&(back - &a)) < 1e-12);
        let hermitian = (&a + a.adjoint()) * Complex::new(0.5, 0.0);
        let coefficients = basis.expand(&hermitian).unwrap();
        prop_assert!(coefficients.iter().all(|c| c.im.abs() < 1e-12));
    }

    #[test]
    fn basis_is_orthogonal(levels in 2usize..=4, atoms in 1usize..=2, i in 0usize..256, j in 0usize..256) {
        let basis = OperatorBasis::new(levels, atoms).unwrap();
        let (i, j) = (i % basis.len(), j % basis.len());
        let overlap = basis.overlap(i, basis.element(j));
        let expected = if i == j { basis.norm(i) } else { 0.0 };
        prop_assert!((overlap - Complex::new(expected, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn collective_sum_rule_and_bounds(
        separation in 5.0..5000.0f64,
        theta in 0.0..std::f64::consts::PI,
        phi in 0.0..std::f64::consts::TAU,
        moment in prop::option::of(0.5..6.0f64),
    ) {
        let mut dipole = TransitionDipole::new(Transition::new(0, 1), 36.2, 780.0, real_unit(theta, phi)).unwrap();
        if let Some(m) = moment {
            dipole = dipole.with_moment(m).unwrap();
        }
        let positions = [Vec3::zeros(), Vec3::new(separation, 0.0, 0.0)];
        let tensors = CouplingTensors::new(2, std::slice::from_ref(&dipole), &positions, 362.0).unwrap();
        let ch = collective_channels(&tensors, Transition::new(0, 1)).unwrap();
        prop_assert!((ch.superradiant_rate + ch.subradiant_rate - 2.0 * dipole.rate()).abs() < 1e-10);
        let cross = tensors.decay((0, 1, 0, 0));
        prop_assert!(cross.abs() <= cross_rate(&dipole, &dipole) * (1.0 + 1e-12));
        prop_assert!((cross - tensors.decay((1, 0, 0, 0))).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_is_hermitian_and_exchange_symmetric(setup in setup_strategy()) {
        let h = setup.hamiltonian().unwrap();
        let s = swap_operator(4, 2).unwrap();
        prop_assert!(max_norm(&(&h - h.adjoint())) < 1e-12);
        prop_assert!(max_norm(&(&h * &s - &s * &h)) < 1e-10);
    }

    #[test]
    fn single_emitter_closed_form(delta1 in -200.0..200.0f64, rabi01 in 0.0..40.0f64, rabi12 in 0.0..40.0f64) {
        let setup = DiamondSetup { atoms: 1, delta1, delta2: 0.0, rabi01, rabi12, ..DiamondSetup::rb87() };
        let spectrum = diagonalize(&setup.hamiltonian().unwrap(), None).unwrap();
        let mut expected = closed_form_energies(delta1, rabi01, rabi12).to_vec();
        expected.sort_by(f64::total_cmp);
        let scale = (delta1 * delta1 + 16.0 * (rabi01 * rabi01 + rabi12 * rabi12)).sqrt().max(1.0);
        for (a, b) in spectrum.energies.iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-10 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn fallback_rate_reaches_single_emitter_rate_at_contact(kr in 1e-4..1e-2f64, rate in 0.1..50.0f64) {
        let wavelength = 780.0;
        let separation = kr * wavelength / std::f64::consts::TAU;
        let dipole = TransitionDipole::new(Transition::new(0, 1), rate, wavelength, real_unit(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)).unwrap();
        let positions = [Vec3::zeros(), Vec3::new(separation, 0.0, 0.0)];
        let tensors = CouplingTensors::new(2, std::slice::from_ref(&dipole), &positions, 1e3).unwrap();
        let cross = tensors.decay((0, 1, 0, 0));
        prop_assert!((cross - rate).abs() <= 0.05 * rate, "{cross} vs {rate}");
    }

    #[test]
    fn range_spec_display_round_trips(start in -1e3..1e3f64, span in 0.0..1e3f64, points in 2usize..500, log in any::<bool>()) {
        let (start, stop) = if log { (start.abs() + 1e-3, start.abs() + 1e-3 + span + 1.0) } else { (start, start + span + 1.0) };
        let spec: RangeSpec = format!("{start}:{stop}:{points}{}", if log { ":log" } else { "" }).parse().unwrap();
        let again: RangeSpec = spec.to_string().parse().unwrap();
        prop_assert_eq!(spec, again);
        let values = spec.values();
        prop_assert_eq!(values.len(), points);
        prop_assert_eq!((values[0], values[points - 1]), (start, stop));
        prop_assert!(values.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn float_format_keeps_twelve_digits(x in prop::num::f64::NORMAL) {
        let back: f64 = format_float(x).parse().unwrap();
        prop_assert!(((back - x) / x).abs() < 1e-11);
    }

    #[test]
    fn config_parser_never_panics(text in "\\PC{0,200}") {
        let _ = parse_config(&text);
    }
}

proptest! {
    #![proptest_config(config(12, 7))]

    #[test]
    fn trajectories_conserve_population(setup in setup_strategy(), t_final in 50.0..600.0f64) {
        let couplings = setup.couplings().unwrap();
        let basis = OperatorBasis::new(4, 2).unwrap();
        let g = build_generator(&setup.hamiltonian_with(&couplings).unwrap(), &Dissipator::from_couplings(&couplings), &basis).unwrap();
        prop_assert!(g.max_residue() < 1e-10);
        prop_assert!(g.conservation_defect() < 1e-10);
        let traj = integrate(&g, &StateVector::ground(&basis), t_final, IntegratorOptions { samples: 9, ..Default::default() }).unwrap();
        for s in &traj.samples {
            prop_assert!((s.total_population(&basis) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn coincidence_split_is_exact(setup in setup_strategy()) {
        let evaluator = G2Evaluator::new().unwrap();
        let state = evaluator.steady_state(&setup).unwrap();
        let r = g2_coincidence(&state, evaluator.basis(), &CascadeGeometry::rb87(setup.separation_nm), None).unwrap();
        prop_assert!((r.g2 - r.population - r.exchange).abs() < 1e-10);
        prop_assert!(r.population >= -1e-10);
        prop_assert!(r.imaginary_residue < 1e-10);
    }
}
