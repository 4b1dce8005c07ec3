//! Rotating-frame system Hamiltonians for driven emitter arrays, plus the
//! Rb-87 diamond preset.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::em_coupling::{CouplingTensors, Transition, TransitionDipole};
use crate::operator_algebra::{embed, ket_bra, transition_operator};
use crate::units::{self, si};
use crate::{c, max_norm, CMatrix, CVec3, Complex, Error, Result, Vec3};

/// Drive matrix element per unit Rabi amplitude: a drive of amplitude Λ
/// couples its two levels with `2Λ`.
pub const DRIVE_MATRIX_FACTOR: f64 = 2.0;

const HERMITICITY_TOLERANCE: f64 = 1e-12;

/// Levels, their energies and the radiative transitions between them.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelScheme {
    energies: Vec<f64>,
    transitions: Vec<TransitionDipole>,
}

impl LevelScheme {
    /// `energies` in 10⁶ rad/s with the first level as zero reference.
    pub fn new(energies: Vec<f64>, transitions: Vec<TransitionDipole>) -> Result<Self> {
        if energies.len() < 2 {
            return Err(Error::Domain("a level scheme needs at least 2 levels".into()));
        }
        if energies[0] != 0.0 {
            return Err(Error::Domain("the first level is the energy reference and must be 0".into()));
        }
        let n = energies.len();
        if let Some(t) = transitions
            .iter()
            .find(|t| t.transition().lower >= n || t.transition().upper >= n)
        {
            return Err(Error::Domain(format!("transition {} outside a {n}-level scheme", t.transition())));
        }
        Ok(Self { energies, transitions })
    }

    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn transitions(&self) -> &[TransitionDipole] {
        &self.transitions
    }

    pub fn transition(&self, t: Transition) -> Option<&TransitionDipole> {
        self.transitions.iter().find(|d| d.transition() == t)
    }

    /// Relative mismatch between level spacings and stored wavelengths, per
    /// transition. Wavelengths govern all couplings; this is informational.
    pub fn spacing_mismatch(&self) -> Vec<(Transition, f64)> {
        self.transitions
            .iter()
            .map(|d| {
                let t = d.transition();
                let spacing = (self.energies[t.upper] - self.energies[t.lower]).abs();
                let expected = d.angular_frequency();
                (t, (spacing - expected).abs() / expected)
            })
            .collect()
    }
}

/// A laser addressing one transition.
#[derive(Clone, Debug, PartialEq)]
pub struct Drive {
    pub transition: Transition,
    /// Rabi amplitude Λ in 10⁶ rad/s.
    pub rabi: Complex,
    /// Required rotating-frame spacing `e_upper − e_lower`.
    pub detuning: f64,
    /// Laser wave vector in nm⁻¹.
    pub wave_vector: Vec3,
}

/// Per-transition rotation phases defining the rotating frame.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RotatingFrame {
    pub phases: Vec<(Transition, f64)>,
}

impl RotatingFrame {
    /// Frame for the diamond scheme driven on (0,1) and (1,2).
    pub fn diamond(detuning1: f64, detuning2: f64) -> Self {
        Self {
            phases: vec![
                (Transition::new(0, 1), 2.0 / 3.0 * (detuning1 + detuning2)),
                (Transition::new(1, 2), 2.0 / 3.0 * (2.0 * detuning2 - detuning1)),
            ],
        }
    }

    /// Diagonal of the frame-transformed free Hamiltonian, one entry per level.
    pub fn residual_energies(&self, levels: usize) -> Vec<f64> {
        let mut e = vec![0.0; levels];
        for &(t, phi) in &self.phases {
            e[t.lower] -= 0.5 * phi;
            e[t.upper] += 0.5 * phi;
        }
        e
    }
}

/// Emitter positions (nm) and the drives acting on all of them.
#[derive(Clone, Debug, PartialEq)]
pub struct EmitterArray {
    pub positions: Vec<Vec3>,
    pub drives: Vec<Drive>,
}

fn check_frame(levels: usize, drives: &[Drive], frame: &RotatingFrame, couplings: &CouplingTensors) -> Result<Vec<f64>> {
    let e = frame.residual_energies(levels);
    let spacing = |t: Transition| e[t.upper] - e[t.lower];
    for d in drives {
        let residual = spacing(d.transition) - d.detuning;
        if residual.abs() > 1e-9 * d.detuning.abs().max(1.0) {
            return Err(Error::Frame {
                lower: d.transition.lower,
                upper: d.transition.upper,
                residual,
            });
        }
    }
    let transitions = couplings.transitions();
    for (&(alpha, beta, t, u), _) in couplings.entries() {
        if alpha == beta || t == u {
            continue;
        }
        let (a, b) = (&transitions[t], &transitions[u]);
        let optical = a.angular_frequency() - b.angular_frequency();
        let residual = optical - (spacing(a.transition()) - spacing(b.transition()));
        if residual.abs() > 1e-6 * optical.abs().max(1.0) {
            return Err(Error::Frame {
                lower: a.transition().lower,
                upper: a.transition().upper,
                residual,
            });
        }
    }
    Ok(e)
}

/// Time-independent rotating-frame Hamiltonian on the joint emitter space.
pub fn build_h_sys(
    scheme: &LevelScheme,
    array: &EmitterArray,
    frame: &RotatingFrame,
    couplings: &CouplingTensors,
) -> Result<CMatrix> {
    let levels = scheme.levels();
    let atoms = array.positions.len();
    if atoms == 0 {
        return Err(Error::Domain("emitter array is empty".into()));
    }
    if couplings.atoms() != atoms || couplings.levels() != levels {
        return Err(Error::shape(
            format!("couplings for {atoms} emitters of {levels} levels"),
            format!("{} emitters of {} levels", couplings.atoms(), couplings.levels()),
        ));
    }
    if let Some(d) = array
        .drives
        .iter()
        .find(|d| d.transition.lower >= levels || d.transition.upper >= levels)
    {
        return Err(Error::Domain(format!("drive on {} outside the scheme", d.transition)));
    }
    let energies = check_frame(levels, &array.drives, frame, couplings)?;

    let mut single = CMatrix::zeros(levels, levels);
    for (m, &e) in energies.iter().enumerate() {
        single[(m, m)] = c(e, 0.0);
    }
    let mut h = CMatrix::zeros(levels.pow(atoms as u32), levels.pow(atoms as u32));
    for (alpha, position) in array.positions.iter().enumerate() {
        let mut local = single.clone();
        for d in &array.drives {
            let amplitude = d.rabi * DRIVE_MATRIX_FACTOR * Complex::from_polar(1.0, d.wave_vector.dot(position));
            let (l, u) = (d.transition.lower, d.transition.upper);
            local[(u, l)] += amplitude;
            local[(l, u)] += amplitude.conj();
        }
        h += embed(&local, alpha, levels, atoms);
    }

    let transitions = couplings.transitions();
    for (&(alpha, beta, t, u), p) in couplings.entries() {
        if alpha == beta || p.shift == 0.0 {
            continue;
        }
        let raise = transition_operator(levels, transitions[t].transition()).adjoint();
        let lower = transition_operator(levels, transitions[u].transition());
        h += embed(&raise, alpha, levels, atoms) * embed(&lower, beta, levels, atoms) * c(p.shift, 0.0);
    }

    let asymmetry = max_norm(&(&h - h.adjoint()));
    if asymmetry > HERMITICITY_TOLERANCE * max_norm(&h).max(1.0) {
        return Err(Error::Domain(format!("assembled Hamiltonian is not Hermitian ({asymmetry:.3e})")));
    }
    Ok(h)
}

/// Exchange operator of two emitters: `S(|i⟩⊗|j⟩) = |j⟩⊗|i⟩`.
pub fn swap_operator(levels: usize, atoms: usize) -> Result<CMatrix> {
    if atoms != 2 {
        return Err(Error::Unsupported(format!("swap needs exactly 2 emitters, got {atoms}")));
    }
    let n = levels * levels;
    let mut s = CMatrix::zeros(n, n);
    for i in 0..levels {
        for j in 0..levels {
            s[(j + levels * i, i + levels * j)] = c(1.0, 0.0);
        }
    }
    Ok(s)
}

/// Rabi amplitude (10⁶ rad/s) of a flat-top beam of `power_mw`
/// and `diameter_mm` on a dipole of `moment_ea0`: Λ = E·|p|/ħ with
/// E = sqrt(2I/(cε₀)) and I = P/(π(d/2)²).
pub fn rabi_from_power(power_mw: f64, diameter_mm: f64, moment_ea0: f64) -> f64 {
    let intensity = power_mw * 1e-3 / (PI * (0.5 * diameter_mm * 1e-3).powi(2));
    let field = (2.0 * intensity / (si::SPEED_OF_LIGHT * si::VACUUM_PERMITTIVITY)).sqrt();
    field * moment_ea0 * si::ELEMENTARY_CHARGE * si::BOHR_RADIUS / si::HBAR / 1e6
}

/// Which inter-emitter couplings are kept.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    #[default]
    On,
    Off,
    /// Keep only same-transition couplings on the listed transitions.
    Only(Vec<Transition>),
}

pub const PRESET_NAME: &str = "Rb87-diamond";

/// Rb-87 diamond transitions: (transition, wavelength nm, rate 10⁶ s⁻¹, moment e·a₀).
pub const RB87_TRANSITIONS: [(Transition, f64, f64, f64); 4] = [
    (Transition::new(0, 1), 780.0, 36.2, 5.956),
    (Transition::new(1, 2), 776.0, 0.641, 0.787),
    (Transition::new(3, 2), 762.0, 2.86, 1.616),
    (Transition::new(0, 3), 795.0, 17.2, 4.221),
];

/// Dipole orientations: the (0,1) and (3,2) dipoles lie along the
/// interatomic axis x̂, the (1,2) and (0,3) dipoles along ŷ.
fn rb87_orientation(t: Transition) -> CVec3 {
    let axis = if t == Transition::new(0, 1) || t == Transition::new(3, 2) {
        Vec3::x()
    } else {
        Vec3::y()
    };
    axis.map(|x| c(x, 0.0))
}

pub fn rb87_diamond_scheme() -> LevelScheme {
    let transitions: Vec<TransitionDipole> = RB87_TRANSITIONS
        .iter()
        .map(|&(t, wavelength, rate, moment)| {
            TransitionDipole::new(t, rate, wavelength, rb87_orientation(t))
                .and_then(|d| d.with_moment(moment))
                .expect("preset transition data is valid")
        })
        .collect();
    let omega = |i: usize| units::angular_frequency(RB87_TRANSITIONS[i].1);
    let e1 = omega(0);
    let e2 = e1 + omega(1);
    let e3 = e2 - omega(2);
    LevelScheme::new(vec![0.0, e1, e2, e3], transitions).expect("preset scheme is valid")
}

/// Parameters of the two-laser diamond setup; atoms sit on the x axis in the
/// plane perpendicular to the lasers (which propagate along ẑ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiamondSetup {
    pub delta1: f64,
    pub delta2: f64,
    pub rabi01: f64,
    pub rabi12: f64,
    pub separation_nm: f64,
    pub atoms: usize,
    pub couplings: CouplingMode,
    /// Defaults to ten times the largest single-emitter rate.
    pub secular_threshold: Option<f64>,
}

impl Default for DiamondSetup {
    fn default() -> Self {
        Self::rb87()
    }
}

impl DiamondSetup {
    pub fn rb87() -> Self {
        Self {
            delta1: -70.0,
            delta2: 0.0,
            rabi01: 7.5,
            rabi12: 6.3,
            separation_nm: 120.0,
            atoms: 2,
            couplings: CouplingMode::On,
            secular_threshold: None,
        }
    }

    pub fn scheme(&self) -> LevelScheme {
        rb87_diamond_scheme()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        (0..self.atoms)
            .map(|a| Vec3::new(a as f64 * self.separation_nm, 0.0, 0.0))
            .collect()
    }

    pub fn drives(&self) -> Vec<Drive> {
        let k = |t: usize| Vec3::z() * units::wavenumber(RB87_TRANSITIONS[t].1);
        vec![
            Drive {
                transition: Transition::new(0, 1),
                rabi: c(self.rabi01, 0.0),
                detuning: self.delta1,
                wave_vector: k(0),
            },
            Drive {
                transition: Transition::new(1, 2),
                rabi: c(self.rabi12, 0.0),
                detuning: self.delta2 - self.delta1,
                wave_vector: k(1),
            },
        ]
    }

    pub fn array(&self) -> EmitterArray {
        EmitterArray {
            positions: self.positions(),
            drives: self.drives(),
        }
    }

    pub fn frame(&self) -> RotatingFrame {
        RotatingFrame::diamond(self.delta1, self.delta2)
    }

    pub fn secular_threshold(&self, scheme: &LevelScheme) -> f64 {
        self.secular_threshold
            .unwrap_or_else(|| 10.0 * scheme.transitions().iter().map(|d| d.rate()).fold(0.0, f64::max))
    }

    pub fn couplings(&self) -> Result<CouplingTensors> {
        let scheme = self.scheme();
        if self.atoms == 0 {
            return Err(Error::Domain("need at least one emitter".into()));
        }
        if self.atoms > 1 && !(self.separation_nm > 0.0 && self.separation_nm.is_finite()) {
            return Err(Error::Domain(format!(
                "separation must be positive, got {}",
                self.separation_nm
            )));
        }
        let mut tensors = CouplingTensors::new(
            scheme.levels(),
            scheme.transitions(),
            &self.positions(),
            self.secular_threshold(&scheme),
        )?;
        match &self.couplings {
            CouplingMode::On => {}
            CouplingMode::Off => tensors.retain_interatomic(|_, _| false),
            CouplingMode::Only(keep) => tensors.retain_interatomic(|a, b| a == b && keep.contains(&a)),
        }
        Ok(tensors)
    }

    /// Hamiltonian for precomputed `couplings` (which do not depend on the detunings).
    pub fn hamiltonian_with(&self, couplings: &CouplingTensors) -> Result<CMatrix> {
        build_h_sys(&self.scheme(), &self.array(), &self.frame(), couplings)
    }

    pub fn hamiltonian(&self) -> Result<CMatrix> {
        self.hamiltonian_with(&self.couplings()?)
    }
}

/// Bare single-emitter projector `|m⟩⟨m|` embedded on `atom`.
pub fn population_operator(levels: usize, m: usize, atom: usize, atoms: usize) -> CMatrix {
    embed(&ket_bra(levels, m, m), atom, levels, atoms)
}
