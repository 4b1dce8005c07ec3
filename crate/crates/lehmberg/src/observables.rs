//! Cascade photon-coincidence observables, their dressed-state decomposition
//! and the far-field scattered intensity.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dressed_spectra::{DressedSpectrum, Symmetry};
use crate::dynamics::{expectation, GeneratorMatrix, StateVector};
use crate::em_coupling::TransitionDipole;
use crate::operator_algebra::{embed, ket_bra, OperatorBasis};
use crate::system_model::RB87_TRANSITIONS;
use crate::units::{self, si};
use crate::{c, CMatrix, Complex, Error, Result, Vec3};

const LEVELS: usize = 4;
/// `‖Λw‖∞` above which a coincidence result is marked stale.
pub const STALENESS_THRESHOLD: f64 = 1e-6;

/// Wave numbers and separation entering the coincidence phases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CascadeGeometry {
    /// κ of the upper cascade step |2⟩→|3⟩, nm⁻¹.
    pub kappa23: f64,
    /// κ of the lower cascade step |3⟩→|0⟩, nm⁻¹.
    pub kappa30: f64,
    pub separation_nm: f64,
}

impl CascadeGeometry {
    pub fn rb87(separation_nm: f64) -> Self {
        Self {
            kappa23: units::wavenumber(RB87_TRANSITIONS[2].1),
            kappa30: units::wavenumber(RB87_TRANSITIONS[3].1),
            separation_nm,
        }
    }

    /// κ of the direct |2⟩→|0⟩ phase, the sum of both steps.
    pub fn kappa20(&self) -> f64 {
        self.kappa23 + self.kappa30
    }
}

/// `|m⟩⟨n|` on emitter `atom` of a two-emitter diamond system.
fn sigma(m: usize, n: usize, atom: usize) -> CMatrix {
    embed(&ket_bra(LEVELS, m, n), atom, LEVELS, 2)
}

/// `σ¹_ab σ²_cd + σ¹_ef σ²_gh` with emitter 1 at index 0.
fn pair_product(first: (usize, usize, usize, usize), second: (usize, usize, usize, usize)) -> CMatrix {
    let (a, b, cc, d) = first;
    let (e, f, g, h) = second;
    sigma(a, b, 0) * sigma(cc, d, 1) + sigma(e, f, 0) * sigma(g, h, 1)
}

/// Operator groups of the zero-delay coincidence for the |2⟩→|3⟩→|0⟩ cascade.
#[derive(Clone, Debug)]
pub struct CoincidenceOperators {
    pub population: CMatrix,
    pub exchange: CMatrix,
}

impl CoincidenceOperators {
    pub fn new(geometry: &CascadeGeometry) -> Self {
        let r = geometry.separation_nm;
        let population = sigma(2, 2, 0) + sigma(2, 2, 1) + pair_product((2, 2, 3, 3), (3, 3, 2, 2));
        let p23 = Complex::from_polar(1.0, geometry.kappa23 * r);
        let p20 = Complex::from_polar(1.0, geometry.kappa20() * r);
        let exchange = (sigma(2, 3, 0) * sigma(3, 2, 1) * p23 + sigma(3, 2, 0) * sigma(2, 3, 1) * p23.conj()) * c(2.0, 0.0)
            + sigma(2, 0, 0) * sigma(0, 2, 1) * p20
            + sigma(0, 2, 0) * sigma(2, 0, 1) * p20.conj();
        Self { population, exchange }
    }
}

/// Dimensionless coincidence `G2 = Gpp + Gpe`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoincidenceResult {
    pub g2: f64,
    pub population: f64,
    pub exchange: f64,
    /// Largest imaginary part dropped from the expectation groups.
    pub imaginary_residue: f64,
    /// Set when the supplied state was not stationary.
    pub stale: bool,
}

fn check_pair_basis(basis: &OperatorBasis) -> Result<()> {
    if basis.levels() != LEVELS || basis.atoms() != 2 {
        return Err(Error::Unsupported(format!(
            "coincidences need two {LEVELS}-level emitters, got {} of {} levels",
            basis.atoms(),
            basis.levels()
        )));
    }
    Ok(())
}

/// Coincidence from basis expectation values. When `generator` is given, the
/// result is marked stale if `state` is not stationary under it.
pub fn g2_coincidence(
    state: &StateVector,
    basis: &OperatorBasis,
    geometry: &CascadeGeometry,
    generator: Option<&GeneratorMatrix>,
) -> Result<CoincidenceResult> {
    check_pair_basis(basis)?;
    let ops = CoincidenceOperators::new(geometry);
    let population = expectation(&ops.population, state, basis)?;
    let exchange = expectation(&ops.exchange, state, basis)?;
    let stale = generator.is_some_and(|g| g.apply(&state.w).amax() > STALENESS_THRESHOLD);
    Ok(CoincidenceResult {
        g2: population.re + exchange.re,
        population: population.re,
        exchange: exchange.re,
        imaginary_residue: population.im.abs().max(exchange.im.abs()),
        stale,
    })
}

/// `(Gpp, Gpe)`.
pub fn g2_split(state: &StateVector, basis: &OperatorBasis, geometry: &CascadeGeometry) -> Result<(f64, f64)> {
    let r = g2_coincidence(state, basis, geometry, None)?;
    Ok((r.population, r.exchange))
}

/// Scale constant `ħ⁴ω₂₃⁴ω₃₀⁴ |p₂₃|²|p₃₀|² ΔΩ / (ε₀² c⁴)` (SI), never applied
/// to the dimensionless results.
pub fn coincidence_prefactor(lambda23_nm: f64, lambda30_nm: f64, p23_ea0: f64, p30_ea0: f64, solid_angle: f64) -> f64 {
    let omega = |l: f64| 2.0 * PI * si::SPEED_OF_LIGHT / (l * 1e-9);
    let dipole = si::ELEMENTARY_CHARGE * si::BOHR_RADIUS;
    si::HBAR.powi(4) * omega(lambda23_nm).powi(4) * omega(lambda30_nm).powi(4)
        / (si::VACUUM_PERMITTIVITY.powi(2) * si::SPEED_OF_LIGHT.powi(4))
        * (p23_ea0 * dipole).powi(2)
        * (p30_ea0 * dipole).powi(2)
        * solid_angle
}

/// Exchange-symmetric operator pairs whose dressed-basis weights are reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorTag {
    /// `σ¹₂₂ + σ²₂₂`
    #[serde(rename = "2222")]
    Upper,
    /// `σ¹₂₂σ²₃₃ + σ¹₃₃σ²₂₂`
    #[serde(rename = "2233")]
    UpperIntermediate,
    /// `σ¹₂₃σ²₃₂ + σ¹₃₂σ²₂₃`
    #[serde(rename = "2332")]
    CascadeExchange,
    /// `σ¹₂₀σ²₀₂ + σ¹₀₂σ²₂₀`
    #[serde(rename = "2002")]
    DirectExchange,
}

impl OperatorTag {
    pub const ALL: [OperatorTag; 4] = [
        OperatorTag::Upper,
        OperatorTag::UpperIntermediate,
        OperatorTag::CascadeExchange,
        OperatorTag::DirectExchange,
    ];

    pub fn code(self) -> &'static str {
        match self {
            OperatorTag::Upper => "2222",
            OperatorTag::UpperIntermediate => "2233",
            OperatorTag::CascadeExchange => "2332",
            OperatorTag::DirectExchange => "2002",
        }
    }

    pub fn operator(self) -> CMatrix {
        match self {
            OperatorTag::Upper => sigma(2, 2, 0) + sigma(2, 2, 1),
            OperatorTag::UpperIntermediate => pair_product((2, 2, 3, 3), (3, 3, 2, 2)),
            OperatorTag::CascadeExchange => pair_product((2, 3, 3, 2), (3, 2, 2, 3)),
            OperatorTag::DirectExchange => pair_product((2, 0, 0, 2), (0, 2, 2, 0)),
        }
    }
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for OperatorTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OperatorTag::ALL
            .into_iter()
            .find(|t| t.code() == s)
            .ok_or_else(|| Error::Domain(format!("unknown operator tag {s:?}")))
    }
}

/// Diagonal dressed-basis weight of one state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DressedWeight {
    pub label: String,
    pub symmetry: Symmetry,
    pub zeta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DressedContribution {
    pub tag: OperatorTag,
    pub weights: Vec<DressedWeight>,
}

impl DressedContribution {
    pub fn weight(&self, label: &str) -> Option<f64> {
        self.weights.iter().find(|w| w.label == label).map(|w| w.zeta)
    }

    /// Label with the largest `|ζ|`.
    pub fn dominant(&self) -> Option<&DressedWeight> {
        self.weights.iter().max_by(|a, b| a.zeta.abs().total_cmp(&b.zeta.abs()))
    }
}

/// Full matrix of `tag`'s operator in the dressed basis, including
/// off-diagonal coherences.
pub fn dressed_matrix(tag: OperatorTag, spectrum: &DressedSpectrum) -> Result<CMatrix> {
    let op = tag.operator();
    if spectrum.vectors.nrows() != op.nrows() {
        return Err(Error::shape(op.nrows(), spectrum.vectors.nrows()));
    }
    Ok(spectrum.vectors.adjoint() * op * &spectrum.vectors)
}

/// `ζ_k = ⟨k|O|k⟩` for every labeled dressed state.
pub fn dressed_decomposition(tag: OperatorTag, spectrum: &DressedSpectrum) -> Result<DressedContribution> {
    if !spectrum.is_labeled() {
        return Err(Error::Label("dressed decomposition needs a labeled spectrum".into()));
    }
    let m = dressed_matrix(tag, spectrum)?;
    let weights = (0..spectrum.len())
        .map(|k| DressedWeight {
            label: spectrum.labels[k].clone().unwrap_or_default(),
            symmetry: spectrum.symmetry[k],
            zeta: m[(k, k)].re,
        })
        .collect();
    Ok(DressedContribution { tag, weights })
}

/// Far-field intensity along `direction` from the selected transitions, with
/// per-transition weight `|p̂ − R̂(R̂·p̂)|²·(Δ/Δ_ref)⁴` (`Δ_ref` of the first).
/// Cross terms between different transitions average out and are omitted.
pub fn far_field_intensity(
    state: &StateVector,
    basis: &OperatorBasis,
    direction: &Vec3,
    positions: &[Vec3],
    transitions: &[TransitionDipole],
) -> Result<f64> {
    if (direction.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("detector direction has norm {}", direction.norm())));
    }
    if positions.len() != basis.atoms() {
        return Err(Error::shape(basis.atoms(), positions.len()));
    }
    let Some(reference) = transitions.first().map(TransitionDipole::angular_frequency) else {
        return Ok(0.0);
    };
    let (levels, atoms) = (basis.levels(), basis.atoms());
    let dir = direction.map(|x| c(x, 0.0));
    let mut total = Complex::new(0.0, 0.0);
    for t in transitions {
        let p = t.orientation();
        let transverse = p - dir * dir.dot(p);
        let weight = transverse.norm_squared() * (t.angular_frequency() / reference).powi(4);
        let lower = ket_bra(levels, t.transition().lower, t.transition().upper);
        let mut field = CMatrix::zeros(basis.dim(), basis.dim());
        for (alpha, r) in positions.iter().enumerate() {
            let phase = Complex::from_polar(1.0, -t.wavenumber() * direction.dot(r));
            field += embed(&lower, alpha, levels, atoms) * phase;
        }
        total += expectation(&(field.adjoint() * &field), state, basis)? * weight;
    }
    Ok(total.re)
}

/// Interior indices strictly greater than both neighbours.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_algebra::Transition;
    use crate::CVec3;

    fn basis() -> OperatorBasis {
        OperatorBasis::new(4, 2).unwrap()
    }

    #[test]
    fn ground_state_has_no_coincidences() {
        let b = basis();
        let g = g2_coincidence(&StateVector::ground(&b), &b, &CascadeGeometry::rb87(120.0), None).unwrap();
        assert_eq!((g.g2, g.population, g.exchange), (0.0, 0.0, 0.0));
        assert!(!g.stale);
        assert_eq!(g2_split(&StateVector::ground(&b), &b, &CascadeGeometry::rb87(120.0)).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn coincidence_operators_are_hermitian() {
        let ops = CoincidenceOperators::new(&CascadeGeometry::rb87(137.0));
        assert!(crate::max_norm(&(&ops.population - ops.population.adjoint())) < 1e-15);
        assert!(crate::max_norm(&(&ops.exchange - ops.exchange.adjoint())) < 1e-15);
    }

    #[test]
    fn rejects_wrong_basis() {
        let b = OperatorBasis::new(2, 2).unwrap();
        assert!(g2_coincidence(&StateVector::ground(&b), &b, &CascadeGeometry::rb87(120.0), None).is_err());
    }

    #[test]
    fn tags_round_trip() {
        for tag in OperatorTag::ALL {
            assert_eq!(tag.code().parse::<OperatorTag>().unwrap(), tag);
            let op = tag.operator();
            assert!(crate::max_norm(&(&op - op.adjoint())) < 1e-15);
        }
        assert!("1234".parse::<OperatorTag>().is_err());
    }

    #[test]
    fn strict_local_maxima() {
        assert_eq!(local_maxima(&[0.0, 1.0, 0.0, 2.0, 2.0, 1.0, 3.0]), vec![1]);
        assert!(local_maxima(&[1.0, 2.0]).is_empty());
        assert!(local_maxima(&[]).is_empty());
    }

    #[test]
    fn prefactor_positive() {
        assert!(coincidence_prefactor(762.0, 795.0, 1.616, 4.221, 0.1) > 0.0);
    }

    fn excited_single_atom() -> (OperatorBasis, StateVector) {
        let b = OperatorBasis::new(4, 1).unwrap();
        let mut rho = CMatrix::zeros(4, 4);
        rho[(2, 2)] = c(0.3, 0.0);
        rho[(0, 0)] = c(0.7, 0.0);
        let s = StateVector::from_density(&b, &rho).unwrap();
        (b, s)
    }

    #[test]
    fn single_atom_intensity_is_projected_population() {
        let (b, s) = excited_single_atom();
        let p = Vec3::new(0.6, 0.8, 0.0).map(|x| c(x, 0.0));
        let d = TransitionDipole::new(Transition::new(3, 2), 1.0, 762.0, p).unwrap();
        let dir = Vec3::x();
        let i = far_field_intensity(&s, &b, &dir, &[Vec3::zeros()], &[d]).unwrap();
        assert!((i - 0.3 * 0.64).abs() < 1e-14);
        assert!(far_field_intensity(&s, &b, &Vec3::new(1.0, 1.0, 0.0), &[Vec3::zeros()], &[]).is_err());
    }

    #[test]
    fn ground_state_is_dark() {
        let b = basis();
        let d = TransitionDipole::new(Transition::new(3, 2), 1.0, 762.0, CVec3::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))).unwrap();
        let positions = [Vec3::zeros(), Vec3::new(120.0, 0.0, 0.0)];
        let i = far_field_intensity(&StateVector::ground(&b), &b, &Vec3::z(), &positions, &[d]).unwrap();
        assert_eq!(i, 0.0);
    }
}
