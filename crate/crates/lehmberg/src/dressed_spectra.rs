//! Collective dressed states: diagonalization by exchange sector, the
//! single-emitter closed forms of the diamond scheme, and label continuation
//! along parameter sweeps.

use nalgebra::{DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::system_model::{swap_operator, DiamondSetup};
use crate::{c, max_norm, CMatrix, Complex, Error, Result};

const HERMITICITY_TOLERANCE: f64 = 1e-10;
const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Overlap difference below which a label assignment counts as ambiguous.
pub const AMBIGUITY_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
    Mixed,
}

impl Symmetry {
    pub fn as_str(self) -> &'static str {
        match self {
            Symmetry::Symmetric => "symmetric",
            Symmetry::Antisymmetric => "antisymmetric",
            Symmetry::Mixed => "mixed",
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Symmetry::Symmetric => "+",
            Symmetry::Antisymmetric => "-",
            Symmetry::Mixed => "",
        }
    }

    fn compatible(self, other: Symmetry) -> bool {
        self == other || self == Symmetry::Mixed || other == Symmetry::Mixed
    }
}

/// Eigen-decomposition of a system Hamiltonian with per-state metadata.
#[derive(Clone, Debug)]
pub struct DressedSpectrum {
    /// Ascending energies.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors as columns, largest component real-positive.
    pub vectors: CMatrix,
    pub symmetry: Vec<Symmetry>,
    pub labels: Vec<Option<String>>,
    pub flagged: Vec<bool>,
}

impl DressedSpectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn vector(&self, k: usize) -> DVector<Complex> {
        self.vectors.column(k).into_owned()
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.iter().all(Option::is_some)
    }

    /// Index of the state carrying `label`.
    pub fn find(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.as_deref() == Some(label))
    }

    pub fn energy_of(&self, label: &str) -> Option<f64> {
        self.find(label).map(|k| self.energies[k])
    }
}

/// Orthonormal columns spanning the symmetric and antisymmetric subspaces of
/// a permutation involution.
fn sector_bases(swap: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = swap.nrows();
    let mut image = vec![usize::MAX; n];
    for col in 0..n {
        let rows: Vec<usize> = (0..n).filter(|&r| swap[(r, col)].norm() > 0.5).collect();
        match rows.as_slice() {
            [r] => image[col] = *r,
            _ => return Err(Error::Domain("swap operator is not a permutation".into())),
        }
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut symmetric = Vec::new();
    let mut antisymmetric = Vec::new();
    for k in 0..n {
        let j = image[k];
        if image[j] != k {
            return Err(Error::Domain("swap operator is not an involution".into()));
        }
        if j == k {
            let mut v = DVector::zeros(n);
            v[k] = c(1.0, 0.0);
            symmetric.push(v);
        } else if k < j {
            let mut plus = DVector::zeros(n);
            let mut minus = DVector::zeros(n);
            plus[k] = c(h, 0.0);
            plus[j] = c(h, 0.0);
            minus[k] = c(h, 0.0);
            minus[j] = c(-h, 0.0);
            symmetric.push(plus);
            antisymmetric.push(minus);
        }
    }
    Ok((CMatrix::from_columns(&symmetric), CMatrix::from_columns(&antisymmetric)))
}

fn fix_phase(v: &mut DVector<Complex>) {
    let peak = v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if let Some(z) = v.iter().find(|z| z.norm() >= peak * (1.0 - 1e-12)).copied() {
        let phase = z.conj() / z.norm();
        *v *= phase;
    }
}

fn eigen(h: &CMatrix) -> (Vec<f64>, Vec<DVector<Complex>>) {
    if h.nrows() == 0 {
        return (Vec::new(), Vec::new());
    }
    let decomposition = SymmetricEigen::new(h.clone());
    let values = decomposition.eigenvalues.iter().copied().collect();
    let vectors = decomposition
        .eigenvectors
        .column_iter()
        .map(|col| col.into_owned())
        .collect();
    (values, vectors)
}

/// Diagonalizes a Hermitian Hamiltonian. With a `swap` operator that commutes
/// with `h`, each exchange sector is diagonalized separately so every state
/// has a definite symmetry.
pub fn diagonalize(h: &CMatrix, swap: Option<&CMatrix>) -> Result<DressedSpectrum> {
    if h.nrows() != h.ncols() {
        return Err(Error::shape("square matrix", format!("{}x{}", h.nrows(), h.ncols())));
    }
    let scale = max_norm(h).max(1.0);
    let asymmetry = max_norm(&(h - h.adjoint()));
    if asymmetry > HERMITICITY_TOLERANCE * scale {
        return Err(Error::Domain(format!("matrix is not Hermitian ({asymmetry:.3e})")));
    }

    let mut states: Vec<(f64, DVector<Complex>, Symmetry)> = Vec::with_capacity(h.nrows());
    let commuting = swap.filter(|s| max_norm(&(h * *s - *s * h)) < HERMITICITY_TOLERANCE * scale);
    if let Some(s) = commuting {
        let (plus, minus) = sector_bases(s)?;
        for (basis, symmetry) in [(plus, Symmetry::Symmetric), (minus, Symmetry::Antisymmetric)] {
            let block = basis.adjoint() * h * &basis;
            let block = (&block + block.adjoint()) * c(0.5, 0.0);
            let (values, vectors) = eigen(&block);
            for (e, v) in values.into_iter().zip(vectors) {
                states.push((e, &basis * v, symmetry));
            }
        }
    } else {
        let (values, vectors) = eigen(h);
        for (e, v) in values.into_iter().zip(vectors) {
            let symmetry = match swap {
                Some(s) => {
                    let parity = v.dotc(&(s * &v)).re;
                    if parity > 1.0 - 1e-8 {
                        Symmetry::Symmetric
                    } else if parity < -1.0 + 1e-8 {
                        Symmetry::Antisymmetric
                    } else {
                        Symmetry::Mixed
                    }
                }
                None => Symmetry::Mixed,
            };
            states.push((e, v, symmetry));
        }
    }
    states.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut energies = Vec::with_capacity(states.len());
    let mut columns = Vec::with_capacity(states.len());
    let mut symmetry = Vec::with_capacity(states.len());
    for (e, mut v, s) in states {
        fix_phase(&mut v);
        let residual = (h * &v - &v * c(e, 0.0)).camax();
        if residual > RESIDUAL_TOLERANCE * scale {
            return Err(Error::Domain(format!("eigenpair residual {residual:.3e} too large")));
        }
        energies.push(e);
        columns.push(v);
        symmetry.push(s);
    }
    let n = energies.len();
    Ok(DressedSpectrum {
        energies,
        vectors: CMatrix::from_columns(&columns),
        symmetry,
        labels: vec![None; n],
        flagged: vec![false; n],
    })
}

fn closed_form_zeta(delta1: f64, rabi01: f64, rabi12: f64) -> f64 {
    (delta1 * delta1 + 16.0 * rabi01 * rabi01 + 16.0 * rabi12 * rabi12).sqrt()
}

/// Single-emitter diamond energies `[a, b, c, d]` at two-photon resonance.
pub fn closed_form_energies(delta1: f64, rabi01: f64, rabi12: f64) -> [f64; 4] {
    let zeta = closed_form_zeta(delta1, rabi01, rabi12);
    [
        0.0,
        -delta1 / 3.0,
        (delta1 + 3.0 * zeta) / 6.0,
        (delta1 - 3.0 * zeta) / 6.0,
    ]
}

/// Normalized single-emitter dressed states `[a, b, c, d]` at two-photon
/// resonance, in the bare basis `|0⟩..|3⟩`.
pub fn closed_form_states(delta1: f64, rabi01: f64, rabi12: f64) -> Result<[DVector<Complex>; 4]> {
    if rabi01 == 0.0 && rabi12 == 0.0 {
        return Err(Error::Domain("dressed states are undefined without drives".into()));
    }
    let zeta = closed_form_zeta(delta1, rabi01, rabi12);
    let state = |amps: [f64; 4]| {
        let v = DVector::from_iterator(4, amps.iter().map(|&x| c(x, 0.0)));
        let norm = v.norm();
        v / c(norm, 0.0)
    };
    Ok([
        state([0.0, 0.0, 0.0, 1.0]),
        state([rabi12, 0.0, -rabi01, 0.0]),
        state([rabi01, 0.25 * (delta1 + zeta), rabi12, 0.0]),
        state([rabi01, 0.25 * (delta1 - zeta), rabi12, 0.0]),
    ])
}

pub const DIAMOND_STATE_NAMES: [&str; 4] = ["a", "b", "c", "d"];

/// Numerically diagonalized single-emitter diamond states, ordered
/// `[a, b, c, d]`: `a` is the decoupled level |3⟩, `b` the state with the
/// least |1⟩ weight, then the upper (`c`) and lower (`d`) of the rest.
pub fn diamond_single_states(setup: &DiamondSetup) -> Result<(Vec<f64>, Vec<DVector<Complex>>)> {
    let single = DiamondSetup {
        atoms: 1,
        ..setup.clone()
    };
    let spectrum = diagonalize(&single.hamiltonian()?, None)?;
    let mut remaining: Vec<usize> = (0..4).collect();
    let mut take = |pick: &dyn Fn(&[usize]) -> usize| {
        let k = pick(&remaining);
        remaining.retain(|&x| x != k);
        k
    };
    let weight = |k: usize, level: usize| spectrum.vectors[(level, k)].norm_sqr();
    let a = take(&|r| *r.iter().max_by(|&&x, &&y| weight(x, 3).total_cmp(&weight(y, 3))).unwrap());
    let b = take(&|r| *r.iter().min_by(|&&x, &&y| weight(x, 1).total_cmp(&weight(y, 1))).unwrap());
    let cc = take(&|r| *r.iter().max_by(|&&x, &&y| spectrum.energies[x].total_cmp(&spectrum.energies[y])).unwrap());
    let d = take(&|r| r[0]);
    let order = [a, b, cc, d];
    Ok((
        order.iter().map(|&k| spectrum.energies[k]).collect(),
        order.iter().map(|&k| spectrum.vector(k)).collect(),
    ))
}

/// Explicit two-emitter product state with definite exchange symmetry.
#[derive(Clone, Debug)]
pub struct PairState {
    pub label: String,
    pub symmetry: Symmetry,
    pub vector: DVector<Complex>,
}

/// All `|i,j⟩±` combinations of single-emitter states (`i ≤ j`, no `|i,i⟩₋`).
pub fn pair_states(single: &[DVector<Complex>], names: &[&str]) -> Vec<PairState> {
    let mut out = Vec::new();
    for i in 0..single.len() {
        for j in i..single.len() {
            let forward = single[j].kronecker(&single[i]);
            let backward = single[i].kronecker(&single[j]);
            for symmetry in [Symmetry::Symmetric, Symmetry::Antisymmetric] {
                if i == j && symmetry == Symmetry::Antisymmetric {
                    continue;
                }
                let sign = if symmetry == Symmetry::Symmetric { 1.0 } else { -1.0 };
                let v = &forward + &backward * c(sign, 0.0);
                let norm = v.norm();
                out.push(PairState {
                    label: format!("{}{}{}", names[i], names[j], symmetry.suffix()),
                    symmetry,
                    vector: v / c(norm, 0.0),
                });
            }
        }
    }
    out
}

/// Best and runner-up overlap among candidates.
fn best_two(overlaps: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64, f64)> {
    let mut best: Option<(usize, f64)> = None;
    let mut second = 0.0_f64;
    for (i, o) in overlaps {
        match best {
            Some((_, b)) if o <= b => second = second.max(o),
            Some((_, b)) => {
                second = b;
                best = Some((i, o));
            }
            None => best = Some((i, o)),
        }
    }
    best.map(|(i, b)| (i, b, second))
}

fn flag_duplicates(spectrum: &mut DressedSpectrum) {
    for k in 0..spectrum.len() {
        let repeated = spectrum.labels[k].is_some()
            && spectrum
                .labels
                .iter()
                .enumerate()
                .any(|(j, l)| j != k && l == &spectrum.labels[k]);
        if repeated {
            spectrum.flagged[k] = true;
        }
    }
}

/// Labels each state by its largest projection onto `references` of the same
/// symmetry.
pub fn label_by_projection(spectrum: &mut DressedSpectrum, references: &[PairState]) -> Result<()> {
    if let Some(r) = references.iter().find(|r| r.vector.len() != spectrum.vectors.nrows()) {
        return Err(Error::shape(spectrum.vectors.nrows(), r.vector.len()));
    }
    for k in 0..spectrum.len() {
        let v = spectrum.vectors.column(k);
        let sym = spectrum.symmetry[k];
        let (best, top, second) = best_two(
            references
                .iter()
                .enumerate()
                .filter(|(_, r)| r.symmetry.compatible(sym))
                .map(|(i, r)| (i, r.vector.dotc(&v).norm())),
        )
        .ok_or_else(|| Error::Label(format!("no reference state compatible with state {k}")))?;
        spectrum.labels[k] = Some(references[best].label.clone());
        spectrum.flagged[k] = top - second < AMBIGUITY_THRESHOLD;
    }
    flag_duplicates(spectrum);
    Ok(())
}

/// Greedy label continuation: each state inherits the label of the previous
/// step's same-sector state with maximal overlap. The first spectrum must be
/// labeled. Ambiguous or duplicated assignments are flagged.
pub fn track_labels(spectra: &mut [DressedSpectrum]) -> Result<()> {
    let Some(first) = spectra.first() else {
        return Ok(());
    };
    if !first.is_labeled() {
        return Err(Error::Label("first spectrum of a sweep must be labeled".into()));
    }
    for step in 1..spectra.len() {
        let (done, rest) = spectra.split_at_mut(step);
        let prev = &done[step - 1];
        let next = &mut rest[0];
        if prev.vectors.nrows() != next.vectors.nrows() {
            return Err(Error::shape(prev.vectors.nrows(), next.vectors.nrows()));
        }
        let overlaps = prev.vectors.adjoint() * &next.vectors;
        for j in 0..next.len() {
            let sym = next.symmetry[j];
            let (best, top, second) = best_two(
                (0..prev.len())
                    .filter(|&i| prev.symmetry[i].compatible(sym))
                    .map(|i| (i, overlaps[(i, j)].norm())),
            )
            .ok_or_else(|| Error::Label(format!("state {j} at step {step} has no predecessor in its sector")))?;
            next.labels[j] = prev.labels[best].clone();
            next.flagged[j] = prev.flagged[best] || top - second < AMBIGUITY_THRESHOLD;
        }
        flag_duplicates(next);
    }
    Ok(())
}

/// An in-sector gap minimum along a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Anticrossing {
    pub step: usize,
    pub symmetry: Symmetry,
    pub lower: Option<String>,
    pub upper: Option<String>,
    pub gap: f64,
}

/// Local minima of the gap between energetically adjacent states of the same
/// sector, over interior sweep steps.
pub fn find_anticrossings(spectra: &[DressedSpectrum]) -> Vec<Anticrossing> {
    let gaps = |s: &DressedSpectrum, sym: Symmetry| -> Vec<(usize, usize, f64)> {
        let idx: Vec<usize> = (0..s.len()).filter(|&k| s.symmetry[k] == sym).collect();
        idx.windows(2)
            .map(|w| (w[0], w[1], s.energies[w[1]] - s.energies[w[0]]))
            .collect()
    };
    let mut out = Vec::new();
    for sym in [Symmetry::Symmetric, Symmetry::Antisymmetric, Symmetry::Mixed] {
        let series: Vec<Vec<(usize, usize, f64)>> = spectra.iter().map(|s| gaps(s, sym)).collect();
        for step in 1..spectra.len().saturating_sub(1) {
            for (pair, &(lo, hi, gap)) in series[step].iter().enumerate() {
                let before = series[step - 1].get(pair).map(|g| g.2);
                let after = series[step + 1].get(pair).map(|g| g.2);
                if let (Some(b), Some(a)) = (before, after) {
                    if gap < b && gap < a {
                        out.push(Anticrossing {
                            step,
                            symmetry: sym,
                            lower: spectra[step].labels[lo].clone(),
                            upper: spectra[step].labels[hi].clone(),
                            gap,
                        });
                    }
                }
            }
        }
    }
    out.sort_by_key(|a| a.step);
    out
}

/// `n` logarithmically spaced values from `start` to `stop` inclusive.
pub fn log_spaced(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let (a, b) = (start.ln(), stop.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        start
                    } else if i == n - 1 {
                        stop
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Default asymptotic starting separation (nm) for label continuation.
pub const ASYMPTOTIC_SEPARATION_NM: f64 = 2000.0;
/// Default number of continuation steps.
pub const CONTINUATION_POINTS: usize = 200;

/// Diagonalizes the two-emitter diamond model at each separation (ordered from
/// the asymptotic end) and tracks labels from projections at the first one.
pub fn separation_sweep(setup: &DiamondSetup, separations: &[f64]) -> Result<Vec<DressedSpectrum>> {
    if setup.atoms != 2 {
        return Err(Error::Unsupported("separation sweeps need exactly 2 emitters".into()));
    }
    let swap = swap_operator(4, 2)?;
    let mut spectra = separations
        .par_iter()
        .map(|&r| {
            let point = DiamondSetup {
                separation_nm: r,
                ..setup.clone()
            };
            diagonalize(&point.hamiltonian()?, Some(&swap))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(first) = spectra.first_mut() {
        let (_, single) = diamond_single_states(setup)?;
        label_by_projection(first, &pair_states(&single, &DIAMOND_STATE_NAMES))?;
    }
    track_labels(&mut spectra)?;
    Ok(spectra)
}

/// Labeled spectrum at `setup.separation_nm`, reached by continuation from
/// the asymptotic separation.
pub fn labeled_spectrum(setup: &DiamondSetup) -> Result<DressedSpectrum> {
    let path = log_spaced(ASYMPTOTIC_SEPARATION_NM, setup.separation_nm, CONTINUATION_POINTS);
    let mut spectra = separation_sweep(setup, &path)?;
    spectra.pop().ok_or_else(|| Error::Label("empty continuation path".into()))
}
