//! Invariant checks on the preset, run by the `validate` subcommand.

use std::time::Instant;

use serde::Serialize;

use crate::dressed_spectra::{closed_form_energies, diagonalize};
use crate::dynamics::{build_generator, Dissipator, DensityMatrixOracle};
use crate::em_coupling::collective_channels;
use crate::observables::{g2_coincidence, CascadeGeometry};
use crate::operator_algebra::OperatorBasis;
use crate::system_model::{swap_operator, DiamondSetup};
use crate::{max_norm, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_ms: u64,
}

fn bound(name: &'static str, value: f64, limit: f64) -> (bool, String) {
    (value <= limit, format!("{name} = {value:.3e} (limit {limit:.0e})"))
}

fn hamiltonian_symmetry() -> Result<(bool, String)> {
    let h = DiamondSetup::rb87().hamiltonian()?;
    let s = swap_operator(4, 2)?;
    let hermitian = max_norm(&(&h - h.adjoint()));
    let exchange = max_norm(&(&h * &s - &s * &h));
    let (ok, detail) = bound("max|[H,S]|", exchange, 1e-12);
    Ok((ok && hermitian <= 1e-12, format!("max|H-H†| = {hermitian:.3e}, {detail}")))
}

fn collective_sum_rule() -> Result<(bool, String)> {
    let tensors = DiamondSetup::rb87().couplings()?;
    let mut worst = 0.0_f64;
    for d in tensors.transitions() {
        let ch = collective_channels(&tensors, d.transition())?;
        worst = worst.max((ch.superradiant_rate + ch.subradiant_rate - 2.0 * d.rate()).abs() / d.rate());
    }
    Ok(bound("max relative |Γ⁺+Γ⁻−2Γ|/Γ", worst, 1e-12))
}

fn basis_orthogonality() -> Result<(bool, String)> {
    let basis = OperatorBasis::new(4, 2)?;
    let mut worst = 0.0_f64;
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            let expected = if i == j { basis.norm(i) } else { 0.0 };
            worst = worst.max((basis.overlap(i, basis.element(j)).re - expected).abs());
        }
    }
    Ok(bound("max|Tr[QᵢQⱼ] − δᵢⱼ‖Qᵢ‖²|", worst, 1e-12))
}

fn generator_structure() -> Result<(bool, String)> {
    let setup = DiamondSetup::rb87();
    let couplings = setup.couplings()?;
    let basis = OperatorBasis::new(4, 2)?;
    let g = build_generator(&setup.hamiltonian_with(&couplings)?, &Dissipator::from_couplings(&couplings), &basis)?;
    let (ok_res, res) = bound("imaginary residue", g.max_residue(), 1e-10);
    let (ok_con, con) = bound("conservation defect", g.conservation_defect(), 1e-10);
    Ok((ok_res && ok_con, format!("{res}, {con}")))
}

fn oracle_agreement() -> Result<(bool, String)> {
    let setup = DiamondSetup::rb87();
    let couplings = setup.couplings()?;
    let basis = OperatorBasis::new(4, 2)?;
    let h = setup.hamiltonian_with(&couplings)?;
    let d = Dissipator::from_couplings(&couplings);
    let g = build_generator(&h, &d, &basis)?;
    let w = crate::dynamics::steady_state(&g, &crate::dynamics::StateVector::ground(&basis))?;
    let rho = DensityMatrixOracle::new(&h, &d)?.steady_state()?;
    let worst = (0..basis.len())
        .map(|i| (basis.overlap(i, &rho).re - w.w[i]).abs())
        .fold(0.0, f64::max);
    Ok(bound("max|w − Tr[Qρ]|", worst, 1e-8))
}

fn single_atom_closed_form() -> Result<(bool, String)> {
    let setup = DiamondSetup {
        atoms: 1,
        delta2: 0.0,
        ..DiamondSetup::rb87()
    };
    let spectrum = diagonalize(&setup.hamiltonian()?, None)?;
    let mut expected = closed_form_energies(setup.delta1, setup.rabi01, setup.rabi12).to_vec();
    expected.sort_by(f64::total_cmp);
    let worst = spectrum
        .energies
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max);
    Ok(bound("max relative eigenvalue error", worst, 1e-10))
}

fn coincidence_split() -> Result<(bool, String)> {
    let setup = DiamondSetup::rb87();
    let couplings = setup.couplings()?;
    let basis = OperatorBasis::new(4, 2)?;
    let g = build_generator(&setup.hamiltonian_with(&couplings)?, &Dissipator::from_couplings(&couplings), &basis)?;
    let w = crate::dynamics::steady_state(&g, &crate::dynamics::StateVector::ground(&basis))?;
    let r = g2_coincidence(&w, &basis, &CascadeGeometry::rb87(setup.separation_nm), Some(&g))?;
    let split = (r.g2 - r.population - r.exchange).abs();
    let ok = split <= 1e-10 && r.population >= -1e-10 && r.imaginary_residue <= 1e-10 && !r.stale;
    Ok((
        ok,
        format!(
            "G2 = {:.6e}, Gpp = {:.6e}, Gpe = {:.6e}, imaginary residue {:.1e}",
            r.g2, r.population, r.exchange, r.imaginary_residue
        ),
    ))
}

fn asymptotic_channels() -> Result<(bool, String)> {
    let tensors = DiamondSetup {
        separation_nm: 10_000.0,
        ..DiamondSetup::rb87()
    }
    .couplings()?;
    let mut worst = 0.0_f64;
    for d in tensors.transitions() {
        let ch = collective_channels(&tensors, d.transition())?;
        for rate in [ch.superradiant_rate, ch.subradiant_rate] {
            worst = worst.max((rate - d.rate()).abs() / d.rate());
        }
    }
    Ok(bound("max relative |Γ± − Γ| at 10 µm", worst, 0.02))
}

type CheckFn = fn() -> Result<(bool, String)>;

const CHECKS: [(&str, CheckFn); 8] = [
    ("hamiltonian_symmetry", hamiltonian_symmetry),
    ("collective_sum_rule", collective_sum_rule),
    ("basis_orthogonality", basis_orthogonality),
    ("generator_structure", generator_structure),
    ("oracle_steady_state", oracle_agreement),
    ("single_emitter_closed_form", single_atom_closed_form),
    ("coincidence_split", coincidence_split),
    ("asymptotic_channels", asymptotic_channels),
];

/// Runs every check; errors count as failures.
pub fn run_validation() -> Vec<Check> {
    CHECKS
        .iter()
        .map(|&(name, check)| {
            let started = Instant::now();
            let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
            Check {
                name,
                passed,
                detail,
                elapsed_ms: started.elapsed().as_millis() as u64,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_passes_every_check() {
        for check in run_validation() {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }
}
