//! Free-space dipole-dipole couplings: the propagation tensor, pairwise
//! energy shifts and decay rates, and the collective decay channels of a pair.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::Matrix3;

pub use crate::operator_algebra::Transition;
use crate::operator_algebra::{embed, transition_operator};
use crate::units::{self, si};
use crate::{c, CMatrix, CVec3, Complex, Error, Result, Vec3};

const UNIT_TOLERANCE: f64 = 1e-12;

/// One radiative transition of the level scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionDipole {
    transition: Transition,
    rate: f64,
    wavelength_nm: f64,
    orientation: CVec3,
    moment_ea0: Option<f64>,
}

impl TransitionDipole {
    /// `rate` is the single-emitter decay rate in 10⁶ s⁻¹; `orientation` must
    /// be a unit vector.
    pub fn new(transition: Transition, rate: f64, wavelength_nm: f64, orientation: CVec3) -> Result<Self> {
        if transition.lower == transition.upper {
            return Err(Error::Domain(format!("transition {transition} connects a level to itself")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Domain(format!("rate of {transition} must be positive, got {rate}")));
        }
        if !(wavelength_nm > 0.0 && wavelength_nm.is_finite()) {
            return Err(Error::Domain(format!(
                "wavelength of {transition} must be positive, got {wavelength_nm}"
            )));
        }
        let norm = orientation.norm();
        if (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::Domain(format!("orientation of {transition} has norm {norm}")));
        }
        Ok(Self {
            transition,
            rate,
            wavelength_nm,
            orientation,
            moment_ea0: None,
        })
    }

    /// Attaches the dipole-moment magnitude in units of e·a₀. When both
    /// partners of a coupling carry one, the cross rate is derived from them.
    pub fn with_moment(mut self, moment_ea0: f64) -> Result<Self> {
        if !(moment_ea0 > 0.0 && moment_ea0.is_finite()) {
            return Err(Error::Domain(format!("dipole moment must be positive, got {moment_ea0}")));
        }
        self.moment_ea0 = Some(moment_ea0);
        Ok(self)
    }

    pub fn transition(&self) -> Transition {
        self.transition
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn wavelength_nm(&self) -> f64 {
        self.wavelength_nm
    }

    pub fn orientation(&self) -> &CVec3 {
        &self.orientation
    }

    pub fn moment_ea0(&self) -> Option<f64> {
        self.moment_ea0
    }

    /// κ = 2π/λ in nm⁻¹.
    pub fn wavenumber(&self) -> f64 {
        units::wavenumber(self.wavelength_nm)
    }

    /// Δ = c·κ in 10⁶ rad/s.
    pub fn angular_frequency(&self) -> f64 {
        units::angular_frequency(self.wavelength_nm)
    }
}

/// Dyadic free-space propagator at reduced distance `xi = κr` along `direction`.
pub fn propagator_tensor(xi: f64, direction: &Vec3) -> Result<Matrix3<Complex>> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::Domain(format!("reduced distance must be positive, got {xi}")));
    }
    if (direction.norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::Domain(format!("direction has norm {}", direction.norm())));
    }
    let transverse = c(xi * xi - 1.0, xi);
    let longitudinal = c(xi * xi - 3.0, 3.0 * xi);
    let outer = (direction * direction.transpose()).map(|x| c(x, 0.0));
    Ok((Matrix3::identity() * transverse - outer * longitudinal) / c(xi.powi(3), 0.0))
}

/// Cross rate between two transitions in 10⁶ s⁻¹.
///
/// With dipole moments on both sides this is `4Δ³|p||p'| / (4πε₀·3ħc³)`,
/// expressed per 2π·10⁶ s⁻¹ like the quoted rates; otherwise the geometric
/// mean of the two rates.
pub fn cross_rate(a: &TransitionDipole, b: &TransitionDipole) -> f64 {
    match (a.moment_ea0, b.moment_ea0) {
        (Some(pa), Some(pb)) => {
            let omega = 2.0 * PI * si::SPEED_OF_LIGHT / (a.wavelength_nm * 1e-9);
            let unit = si::ELEMENTARY_CHARGE * si::BOHR_RADIUS;
            let rate = 4.0 * omega.powi(3) * (pa * unit) * (pb * unit)
                / (4.0 * PI * si::VACUUM_PERMITTIVITY * 3.0 * si::HBAR * si::SPEED_OF_LIGHT.powi(3));
            rate / (2.0 * PI * 1e6)
        }
        _ => (a.rate * b.rate).sqrt(),
    }
}

/// Energy shift Ω and decay rate γ between two emitters, both in 10⁶ s⁻¹.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PairCoupling {
    pub shift: f64,
    pub decay: f64,
}

fn secular(a: &TransitionDipole, b: &TransitionDipole, threshold: f64) -> bool {
    (a.angular_frequency() - b.angular_frequency()).abs() <= threshold
}

/// Coupling between transition `a` on one emitter and `b` on another emitter
/// displaced by `separation`. `None` when the secular filter removes it.
pub fn pair_coupling(
    a: &TransitionDipole,
    b: &TransitionDipole,
    separation: &Vec3,
    secular_threshold: f64,
) -> Result<Option<PairCoupling>> {
    if !secular(a, b, secular_threshold) {
        return Ok(None);
    }
    let r = separation.norm();
    if r == 0.0 {
        return Err(Error::Overlap { first: 0, second: 1 });
    }
    let f = propagator_tensor(b.wavenumber() * r, &(separation / r))?;
    let projected = a.orientation.conjugate().dot(&(f * b.orientation));
    let value = projected * Complex::from_polar(0.75 * cross_rate(a, b), a.wavenumber() * r);
    Ok(Some(PairCoupling {
        shift: value.re,
        decay: 2.0 * value.im,
    }))
}

/// Same-emitter coupling: no shift, the bare rate on the diagonal.
fn self_coupling(a: &TransitionDipole, b: &TransitionDipole, threshold: f64) -> Option<PairCoupling> {
    if a.transition == b.transition {
        return Some(PairCoupling {
            shift: 0.0,
            decay: a.rate,
        });
    }
    secular(a, b, threshold).then(|| PairCoupling {
        shift: 0.0,
        decay: cross_rate(a, b) * a.orientation.conjugate().dot(&b.orientation).re,
    })
}

/// Key of a coupling entry: (emitter α, emitter β, transition index, transition index).
pub type CouplingKey = (usize, usize, usize, usize);

/// All secular-surviving Ω and γ entries for an emitter array.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingTensors {
    levels: usize,
    atoms: usize,
    transitions: Vec<TransitionDipole>,
    entries: BTreeMap<CouplingKey, PairCoupling>,
}

impl CouplingTensors {
    /// Builds the tensors for emitters at `positions` (nm).
    pub fn new(
        levels: usize,
        transitions: &[TransitionDipole],
        positions: &[Vec3],
        secular_threshold: f64,
    ) -> Result<Self> {
        if let Some(t) = transitions
            .iter()
            .find(|t| t.transition.lower >= levels || t.transition.upper >= levels)
        {
            return Err(Error::Domain(format!(
                "transition {} outside a {levels}-level scheme",
                t.transition
            )));
        }
        let mut entries = BTreeMap::new();
        let n = transitions.len();
        for (alpha, ra) in positions.iter().enumerate() {
            for (beta, rb) in positions.iter().enumerate() {
                for t in 0..n {
                    for u in 0..n {
                        // Canonical order computed once, mirrored for symmetry.
                        if (beta, u) < (alpha, t) {
                            continue;
                        }
                        let (a, b) = (&transitions[t], &transitions[u]);
                        let coupling = if alpha == beta {
                            self_coupling(a, b, secular_threshold)
                        } else {
                            pair_coupling(a, b, &(rb - ra), secular_threshold).map_err(|e| match e {
                                Error::Overlap { .. } => Error::Overlap {
                                    first: alpha,
                                    second: beta,
                                },
                                other => other,
                            })?
                        };
                        if let Some(p) = coupling {
                            entries.insert((alpha, beta, t, u), p);
                            entries.insert((beta, alpha, u, t), p);
                        }
                    }
                }
            }
        }
        Ok(Self {
            levels,
            atoms: positions.len(),
            transitions: transitions.to_vec(),
            entries,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn transitions(&self) -> &[TransitionDipole] {
        &self.transitions
    }

    pub fn transition_index(&self, t: Transition) -> Option<usize> {
        self.transitions.iter().position(|d| d.transition == t)
    }

    pub fn get(&self, key: CouplingKey) -> Option<PairCoupling> {
        self.entries.get(&key).copied()
    }

    pub fn shift(&self, key: CouplingKey) -> f64 {
        self.get(key).map_or(0.0, |p| p.shift)
    }

    pub fn decay(&self, key: CouplingKey) -> f64 {
        self.get(key).map_or(0.0, |p| p.decay)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&CouplingKey, &PairCoupling)> {
        self.entries.iter()
    }

    /// Drops inter-emitter entries whose transition pair fails `keep`.
    pub fn retain_interatomic(&mut self, mut keep: impl FnMut(Transition, Transition) -> bool) {
        let transitions = &self.transitions;
        self.entries.retain(|&(alpha, beta, t, u), _| {
            alpha == beta || keep(transitions[t].transition, transitions[u].transition)
        });
    }

    /// Independent-emitter copy: every inter-emitter Ω and γ removed.
    pub fn without_interatomic(&self) -> Self {
        let mut out = self.clone();
        out.retain_interatomic(|_, _| false);
        out
    }
}

/// Super- and subradiant channels of one transition on a two-emitter system.
#[derive(Clone, Debug)]
pub struct CollectiveChannels {
    pub transition: Transition,
    pub superradiant_rate: f64,
    pub subradiant_rate: f64,
    /// `(σ¹ + σ²)/√2` on the joint space.
    pub symmetric_jump: CMatrix,
    /// `(σ¹ − σ²)/√2` on the joint space.
    pub antisymmetric_jump: CMatrix,
}

pub fn collective_channels(tensors: &CouplingTensors, transition: Transition) -> Result<CollectiveChannels> {
    if tensors.atoms != 2 {
        return Err(Error::Unsupported(format!(
            "collective channels need exactly 2 emitters, got {}",
            tensors.atoms
        )));
    }
    let t = tensors
        .transition_index(transition)
        .ok_or_else(|| Error::Domain(format!("unknown transition {transition}")))?;
    let own = tensors.decay((0, 0, t, t));
    let cross = tensors.decay((0, 1, t, t));
    let sigma = transition_operator(tensors.levels, transition);
    let s0 = embed(&sigma, 0, tensors.levels, 2);
    let s1 = embed(&sigma, 1, tensors.levels, 2);
    let scale = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    Ok(CollectiveChannels {
        transition,
        superradiant_rate: own + cross,
        subradiant_rate: own - cross,
        symmetric_jump: (&s0 + &s1) * scale,
        antisymmetric_jump: (&s0 - &s1) * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn z_hat() -> Vec3 {
        Vec3::z()
    }

    fn linear(v: Vec3) -> CVec3 {
        v.map(|x| c(x, 0.0))
    }

    fn dipole(rate: f64, wavelength: f64, orientation: Vec3) -> TransitionDipole {
        TransitionDipole::new(Transition::new(0, 1), rate, wavelength, linear(orientation)).unwrap()
    }

    #[test]
    fn propagator_at_unit_distance() {
        let f = propagator_tensor(1.0, &z_hat()).unwrap();
        assert_relative_eq!(f[(0, 0)].re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(f[(0, 0)].im, 1.0, epsilon = 1e-15);
        assert_eq!(f[(0, 0)], f[(1, 1)]);
        assert_relative_eq!(f[(2, 2)].re, 2.0, epsilon = 1e-15);
        assert_relative_eq!(f[(2, 2)].im, -2.0, epsilon = 1e-15);
        for (i, j) in [(0, 1), (0, 2), (1, 2), (2, 0)] {
            assert_eq!(f[(i, j)].norm(), 0.0);
        }
    }

    #[test]
    fn propagator_far_field_transverse_asymptote() {
        let xi = 1e6;
        let f = propagator_tensor(xi, &z_hat()).unwrap();
        assert!((f[(0, 0)] - c(1.0 / xi, 0.0)).norm() < 1e-5 / xi);
    }

    #[test]
    fn propagator_rejects_bad_input() {
        assert!(propagator_tensor(0.0, &z_hat()).is_err());
        assert!(propagator_tensor(-1.0, &z_hat()).is_err());
        assert!(propagator_tensor(1.0, &Vec3::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn dipole_validation() {
        let t = Transition::new(0, 1);
        assert!(TransitionDipole::new(t, 0.0, 780.0, linear(Vec3::x())).is_err());
        assert!(TransitionDipole::new(t, 1.0, -1.0, linear(Vec3::x())).is_err());
        assert!(TransitionDipole::new(t, 1.0, 780.0, linear(Vec3::new(1.0, 1.0, 0.0))).is_err());
        assert!(TransitionDipole::new(Transition::new(1, 1), 1.0, 780.0, linear(Vec3::x())).is_err());
        assert!(dipole(1.0, 780.0, Vec3::x()).with_moment(-2.0).is_err());
    }

    #[test]
    fn far_separation_weak_coupling() {
        let d = dipole(36.2, 780.0, Vec3::y());
        let r = 100.0 / d.wavenumber();
        let p = pair_coupling(&d, &d, &Vec3::new(r, 0.0, 0.0), 1e3).unwrap().unwrap();
        assert!(p.decay.abs() < 0.02 * 36.2);
    }

    #[test]
    fn zero_separation_is_an_overlap() {
        let d = dipole(1.0, 780.0, Vec3::y());
        assert!(matches!(
            pair_coupling(&d, &d, &Vec3::zeros(), 1e3),
            Err(Error::Overlap { .. })
        ));
        assert!(matches!(
            CouplingTensors::new(2, &[d], &[Vec3::zeros(), Vec3::zeros()], 1e3),
            Err(Error::Overlap { first: 0, second: 1 })
        ));
    }

    #[test]
    fn mismatched_frequencies_are_filtered() {
        let a = dipole(1.0, 780.0, Vec3::y());
        let b = TransitionDipole::new(Transition::new(1, 2), 1.0, 776.0, linear(Vec3::y())).unwrap();
        assert!(pair_coupling(&a, &b, &Vec3::new(100.0, 0.0, 0.0), 100.0).unwrap().is_none());
    }

    #[test]
    fn self_term_is_bare_rate() {
        let d = dipole(36.2, 780.0, Vec3::y());
        let tensors = CouplingTensors::new(2, &[d], &[Vec3::zeros(), Vec3::new(120.0, 0.0, 0.0)], 362.0).unwrap();
        let own = tensors.get((0, 0, 0, 0)).unwrap();
        assert_eq!(own.shift, 0.0);
        assert_eq!(own.decay, 36.2);
    }

    #[test]
    fn tensors_are_symmetric() {
        let d = dipole(5.0, 700.0, Vec3::new(0.6, 0.8, 0.0));
        let tensors = CouplingTensors::new(2, &[d], &[Vec3::zeros(), Vec3::new(90.0, 30.0, 10.0)], 50.0).unwrap();
        assert_eq!(tensors.get((0, 1, 0, 0)), tensors.get((1, 0, 0, 0)));
        assert!(tensors.without_interatomic().get((0, 1, 0, 0)).is_none());
        assert!(tensors.without_interatomic().get((1, 1, 0, 0)).is_some());
    }

    #[test]
    fn moment_route_short_distance_limit_is_cross_rate() {
        let d = dipole(36.2, 780.0, Vec3::y()).with_moment(5.956).unwrap();
        let r = 0.01 / d.wavenumber();
        let p = pair_coupling(&d, &d, &Vec3::new(r, 0.0, 0.0), 1e3).unwrap().unwrap();
        assert_relative_eq!(p.decay, cross_rate(&d, &d), max_relative = 1e-3);
    }

    #[test]
    fn cross_rate_fallback_is_geometric_mean() {
        let a = dipole(4.0, 780.0, Vec3::y());
        let b = dipole(9.0, 780.0, Vec3::y());
        assert_relative_eq!(cross_rate(&a, &b), 6.0);
    }

    #[test]
    fn channels_need_two_emitters() {
        let d = dipole(1.0, 780.0, Vec3::y());
        let three = [Vec3::zeros(), Vec3::x() * 100.0, Vec3::x() * 200.0];
        let tensors = CouplingTensors::new(2, &[d], &three, 10.0).unwrap();
        assert!(matches!(
            collective_channels(&tensors, Transition::new(0, 1)),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn channel_jump_operators_orthogonal() {
        let d = dipole(1.0, 780.0, Vec3::y());
        let tensors = CouplingTensors::new(2, &[d], &[Vec3::zeros(), Vec3::x() * 100.0], 10.0).unwrap();
        let ch = collective_channels(&tensors, Transition::new(0, 1)).unwrap();
        let pp = (ch.symmetric_jump.adjoint() * &ch.symmetric_jump).trace();
        let mm = (ch.antisymmetric_jump.adjoint() * &ch.antisymmetric_jump).trace();
        let pm = (ch.symmetric_jump.adjoint() * &ch.antisymmetric_jump).trace();
        assert_relative_eq!(pp.re, mm.re, epsilon = 1e-14);
        assert!(pm.norm() < 1e-14);
        assert_relative_eq!(ch.superradiant_rate + ch.subradiant_rate, 2.0, epsilon = 1e-14);
    }
}
