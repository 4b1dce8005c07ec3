//! Per-point evaluation: couplings, Hamiltonian, generator, steady state and
//! observables.

use crate::dressed_spectra::{
    diagonalize, diamond_single_states, label_by_projection, log_spaced, pair_states, track_labels, DressedSpectrum,
    ASYMPTOTIC_SEPARATION_NM, CONTINUATION_POINTS, DIAMOND_STATE_NAMES,
};
use crate::dynamics::{steady_state, Dissipator, GeneratorCache, StateVector};
use crate::em_coupling::{collective_channels, CollectiveChannels};
use crate::observables::{g2_coincidence, CascadeGeometry, CoincidenceResult};
use crate::operator_algebra::OperatorBasis;
use crate::system_model::{swap_operator, DiamondSetup};
use crate::{CMatrix, Error, Result};

/// Imaginary residue above which a coincidence result is flagged.
pub const IMAGINARY_RESIDUE_LIMIT: f64 = 1e-10;

/// Stationary coincidence at one parameter point.
#[derive(Clone, Debug, PartialEq)]
pub struct G2Point {
    pub setup: DiamondSetup,
    pub result: CoincidenceResult,
}

impl G2Point {
    pub fn is_suspect(&self) -> bool {
        self.result.stale || self.result.imaginary_residue > IMAGINARY_RESIDUE_LIMIT
    }
}

/// Shared immutable state for coincidence sweeps. The dissipative generator
/// part is cached per coupling configuration.
#[derive(Debug)]
pub struct G2Evaluator {
    basis: OperatorBasis,
    cache: GeneratorCache,
}

impl G2Evaluator {
    pub fn new() -> Result<Self> {
        Ok(Self {
            basis: OperatorBasis::new(4, 2)?,
            cache: GeneratorCache::new(),
        })
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    /// Stationary basis expectation values at `setup`.
    pub fn steady_state(&self, setup: &DiamondSetup) -> Result<StateVector> {
        if setup.atoms != 2 {
            return Err(Error::Unsupported(format!("coincidences need 2 emitters, got {}", setup.atoms)));
        }
        let couplings = setup.couplings()?;
        let h = setup.hamiltonian_with(&couplings)?;
        let dissipator = Dissipator::from_couplings(&couplings);
        let g = self.cache.build(&h, &dissipator, &self.basis)?;
        steady_state(&g, &StateVector::ground(&self.basis))
    }

    pub fn evaluate(&self, setup: &DiamondSetup) -> Result<G2Point> {
        let state = self.steady_state(setup)?;
        let result = g2_coincidence(&state, &self.basis, &CascadeGeometry::rb87(setup.separation_nm), None)?;
        Ok(G2Point {
            setup: setup.clone(),
            result,
        })
    }
}

/// Collective channels of every preset transition at `setup`.
pub fn channels(setup: &DiamondSetup) -> Result<Vec<CollectiveChannels>> {
    let tensors = setup.couplings()?;
    tensors
        .transitions()
        .iter()
        .map(|d| collective_channels(&tensors, d.transition()))
        .collect()
}

/// Diagonalizes each setup (`None` for failures) and carries labels along the
/// successful points in order. The first successful point is labeled by
/// projection after continuation from the asymptotic separation.
pub fn tracked_spectra(setups: &[DiamondSetup]) -> Vec<Result<DressedSpectrum>> {
    use rayon::prelude::*;
    let swap = match swap_operator(4, 2) {
        Ok(s) => s,
        Err(e) => return setups.iter().map(|_| Err(Error::Unsupported(e.to_string()))).collect(),
    };
    let mut results: Vec<Result<DressedSpectrum>> = setups
        .par_iter()
        .map(|s| {
            if s.atoms != 2 {
                return Err(Error::Unsupported(format!("spectra sweeps need 2 emitters, got {}", s.atoms)));
            }
            diagonalize(&s.hamiltonian()?, Some(&swap))
        })
        .collect();
    let ok: Vec<usize> = (0..results.len()).filter(|&i| results[i].is_ok()).collect();
    let Some(&first) = ok.first() else {
        return results;
    };
    let mut chain = match continuation_prefix(&setups[first], &swap) {
        Ok(prefix) => prefix,
        Err(e) => {
            let message = e.to_string();
            return results
                .into_iter()
                .map(|r| r.and_then(|_| Err(Error::Label(message.clone()))))
                .collect();
        }
    };
    let prefix_len = chain.len();
    chain.extend(ok.iter().map(|&i| results[i].as_ref().expect("filtered to successes").clone()));
    if prefix_len == 0 {
        if let Err(e) = label_start(&setups[first], &mut chain[0]) {
            let message = e.to_string();
            return results
                .into_iter()
                .map(|r| r.and_then(|_| Err(Error::Label(message.clone()))))
                .collect();
        }
    }
    if let Err(e) = track_labels(&mut chain) {
        let message = e.to_string();
        return results
            .into_iter()
            .map(|r| r.and_then(|_| Err(Error::Label(message.clone()))))
            .collect();
    }
    for (&i, s) in ok.iter().zip(chain.into_iter().skip(prefix_len)) {
        results[i] = Ok(s);
    }
    results
}

fn label_start(setup: &DiamondSetup, spectrum: &mut DressedSpectrum) -> Result<()> {
    let (_, single) = diamond_single_states(setup)?;
    label_by_projection(spectrum, &pair_states(&single, &DIAMOND_STATE_NAMES))
}

/// Labeled spectra from the asymptotic separation down to (excluding) the
/// separation of `setup`. Empty when `setup` is already asymptotic.
fn continuation_prefix(setup: &DiamondSetup, swap: &CMatrix) -> Result<Vec<DressedSpectrum>> {
    if setup.separation_nm >= ASYMPTOTIC_SEPARATION_NM {
        return Ok(Vec::new());
    }
    let mut path = log_spaced(ASYMPTOTIC_SEPARATION_NM, setup.separation_nm, CONTINUATION_POINTS);
    path.pop();
    let mut spectra = path
        .iter()
        .map(|&r| {
            let point = DiamondSetup {
                separation_nm: r,
                ..setup.clone()
            };
            diagonalize(&point.hamiltonian()?, Some(swap))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(first) = spectra.first_mut() {
        label_start(setup, first)?;
    }
    track_labels(&mut spectra)?;
    Ok(spectra)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressed_spectra::labeled_spectrum;

    #[test]
    fn ground_free_steady_state_has_population() {
        let e = G2Evaluator::new().unwrap();
        let p = e.evaluate(&DiamondSetup::rb87()).unwrap();
        assert!(p.result.population > 0.0);
        assert!(!p.is_suspect());
    }

    #[test]
    fn tracked_single_point_matches_labeled_spectrum() {
        let setup = DiamondSetup::rb87();
        let tracked = tracked_spectra(std::slice::from_ref(&setup)).pop().unwrap().unwrap();
        let direct = labeled_spectrum(&setup).unwrap();
        assert_eq!(tracked.labels, direct.labels);
        assert_eq!(tracked.energies, direct.energies);
    }

    #[test]
    fn failed_points_do_not_block_others() {
        let good = DiamondSetup::rb87();
        let bad = DiamondSetup {
            separation_nm: -1.0,
            ..good.clone()
        };
        let out = tracked_spectra(&[bad, good.clone(), DiamondSetup { delta2: 1.0, ..good }]);
        assert!(out[0].is_err());
        assert!(out[1].as_ref().unwrap().is_labeled());
        assert!(out[2].as_ref().unwrap().is_labeled());
    }

    #[test]
    fn channels_cover_all_transitions() {
        let ch = channels(&DiamondSetup::rb87()).unwrap();
        assert_eq!(ch.len(), 4);
        for c in ch {
            assert!(c.superradiant_rate > c.subradiant_rate);
        }
    }
}
