//! Complete Hermitian operator bases on the joint emitter space.
//!
//! Single-emitter elements come in three groups: level projectors, symmetric
//! pair matrices (σ_x-like) and antisymmetric imaginary pair matrices
//! (σ_y-like). Collective elements are Kronecker products with emitter 0 as
//! the rightmost (least significant) factor, so joint state `|i₀⟩⊗…` has
//! index `i₀ + n_l·i₁ + …` and basis digits use mixed radix `n_l²`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{c, CMatrix, Complex, Error, Result};

/// Default upper bound on the number of collective basis elements.
pub const DEFAULT_BASIS_LIMIT: usize = 10_000;

/// A dipole transition between a lower and an upper level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub lower: usize,
    pub upper: usize,
}

impl Transition {
    pub const fn new(lower: usize, upper: usize) -> Self {
        Self { lower, upper }
    }
}

impl std::fmt::Display for Transition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.lower, self.upper)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SingleKind {
    Projector(usize),
    Symmetric(usize, usize),
    Antisymmetric(usize, usize),
}

impl SingleKind {
    fn entries(self) -> Vec<(usize, usize, Complex)> {
        match self {
            SingleKind::Projector(k) => vec![(k, k, c(1.0, 0.0))],
            SingleKind::Symmetric(m, n) => vec![(m, n, c(1.0, 0.0)), (n, m, c(1.0, 0.0))],
            SingleKind::Antisymmetric(m, n) => vec![(m, n, c(0.0, -1.0)), (n, m, c(0.0, 1.0))],
        }
    }
}

fn single_kinds(levels: usize) -> Vec<SingleKind> {
    let pairs: Vec<(usize, usize)> = (0..levels)
        .flat_map(|m| ((m + 1)..levels).map(move |n| (m, n)))
        .collect();
    (0..levels)
        .map(SingleKind::Projector)
        .chain(pairs.iter().map(|&(m, n)| SingleKind::Symmetric(m, n)))
        .chain(pairs.iter().map(|&(m, n)| SingleKind::Antisymmetric(m, n)))
        .collect()
}

fn dense(dim: usize, entries: &[(usize, usize, Complex)]) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for &(i, j, v) in entries {
        m[(i, j)] += v;
    }
    m
}

/// The `n_l²` single-emitter Hermitian matrices: projectors, then symmetric
/// pairs, then antisymmetric pairs, pairs ordered lexicographically.
pub fn build_single_basis(levels: usize) -> Result<Vec<CMatrix>> {
    if levels < 2 {
        return Err(Error::Domain(format!("need at least 2 levels, got {levels}")));
    }
    Ok(single_kinds(levels)
        .into_iter()
        .map(|k| dense(levels, &k.entries()))
        .collect())
}

/// Kronecker product of `factors`, first factor leftmost.
pub fn kron_all(factors: &[&CMatrix]) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for f in factors {
        out = out.kronecker(f);
    }
    out
}

/// Places a single-emitter operator on `atom` within an `atoms`-emitter space.
pub fn embed(op: &CMatrix, atom: usize, levels: usize, atoms: usize) -> CMatrix {
    let id = CMatrix::identity(levels, levels);
    let factors: Vec<&CMatrix> = (0..atoms)
        .rev()
        .map(|a| if a == atom { op } else { &id })
        .collect();
    kron_all(&factors)
}

/// Lowering operator `|lower⟩⟨upper|` of one emitter.
pub fn transition_operator(levels: usize, t: Transition) -> CMatrix {
    dense(levels, &[(t.lower, t.upper, c(1.0, 0.0))])
}

/// Single-emitter `|m⟩⟨n|`.
pub fn ket_bra(levels: usize, m: usize, n: usize) -> CMatrix {
    dense(levels, &[(m, n, c(1.0, 0.0))])
}

/// Complete trace-orthogonal Hermitian basis of the joint emitter space.
#[derive(Clone, Debug)]
pub struct OperatorBasis {
    levels: usize,
    atoms: usize,
    dim: usize,
    elements: Vec<CMatrix>,
    sparse: Vec<Vec<(usize, usize, Complex)>>,
    norms: Vec<f64>,
    projector_product: Vec<bool>,
}

impl OperatorBasis {
    pub fn new(levels: usize, atoms: usize) -> Result<Self> {
        Self::with_limit(levels, atoms, DEFAULT_BASIS_LIMIT)
    }

    pub fn with_limit(levels: usize, atoms: usize, limit: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Domain(format!("need at least 2 levels, got {levels}")));
        }
        if atoms < 1 {
            return Err(Error::Domain("need at least one emitter".into()));
        }
        let exponent = u32::try_from(2 * atoms).unwrap_or(u32::MAX);
        let count = levels.checked_pow(exponent).unwrap_or(usize::MAX);
        if count > limit {
            return Err(Error::Capacity {
                what: "operator basis",
                required: count,
                limit,
            });
        }
        let dim = levels.pow(atoms as u32);
        let kinds = single_kinds(levels);
        let radix = kinds.len();

        let mut elements = Vec::with_capacity(count);
        let mut sparse = Vec::with_capacity(count);
        let mut norms = Vec::with_capacity(count);
        let mut projector_product = Vec::with_capacity(count);
        for k in 0..count {
            let digits = digits_of(k, radix, atoms);
            // Sparse Kronecker product: emitter 0 is the least significant factor.
            let mut entries = vec![(0usize, 0usize, c(1.0, 0.0))];
            let mut stride = 1usize;
            let mut off_diagonal_factors = 0;
            for &d in &digits {
                let kind = kinds[d];
                if !matches!(kind, SingleKind::Projector(_)) {
                    off_diagonal_factors += 1;
                }
                let single = kind.entries();
                entries = entries
                    .iter()
                    .flat_map(|&(i, j, v)| {
                        single
                            .iter()
                            .map(move |&(si, sj, sv)| (i + stride * si, j + stride * sj, v * sv))
                    })
                    .collect();
                stride *= levels;
            }
            elements.push(dense(dim, &entries));
            sparse.push(entries);
            norms.push(f64::from(1u32 << off_diagonal_factors));
            projector_product.push(off_diagonal_factors == 0);
        }
        Ok(Self {
            levels,
            atoms,
            dim,
            elements,
            sparse,
            norms,
            projector_product,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    /// Dimension of the joint Hilbert space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, k: usize) -> &CMatrix {
        &self.elements[k]
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// `Tr[Q_k† Q_k]`.
    pub fn norm(&self, k: usize) -> f64 {
        self.norms[k]
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub(crate) fn sparse(&self, k: usize) -> &[(usize, usize, Complex)] {
        &self.sparse[k]
    }

    /// Per-emitter single-basis digits of element `k`, emitter 0 first.
    pub fn digits(&self, k: usize) -> Vec<usize> {
        digits_of(k, self.levels * self.levels, self.atoms)
    }

    /// Inverse of [`digits`](Self::digits).
    pub fn index(&self, digits: &[usize]) -> Result<usize> {
        let radix = self.levels * self.levels;
        if digits.len() != self.atoms {
            return Err(Error::shape(self.atoms, digits.len()));
        }
        if let Some(&bad) = digits.iter().find(|&&d| d >= radix) {
            return Err(Error::Domain(format!("digit {bad} exceeds radix {radix}")));
        }
        Ok(digits.iter().rev().fold(0, |acc, &d| acc * radix + d))
    }

    /// True when every factor of `Q_k` is a level projector.
    pub fn is_projector_product(&self, k: usize) -> bool {
        self.projector_product[k]
    }

    pub fn projector_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.projector_product[k]).collect()
    }

    /// `Tr[Q_k† A]`.
    pub fn overlap(&self, k: usize, a: &CMatrix) -> Complex {
        self.sparse[k]
            .iter()
            .map(|&(i, j, v)| v.conj() * a[(i, j)])
            .sum()
    }

    fn check_dim(&self, a: &CMatrix) -> Result<()> {
        if a.nrows() != self.dim || a.ncols() != self.dim {
            return Err(Error::shape(
                format!("{0}x{0}", self.dim),
                format!("{}x{}", a.nrows(), a.ncols()),
            ));
        }
        Ok(())
    }

    /// Coefficients `c_k = Tr[Q_k† A] / Tr[Q_k† Q_k]` with `A = Σ c_k Q_k`.
    pub fn expand(&self, a: &CMatrix) -> Result<DVector<Complex>> {
        self.check_dim(a)?;
        Ok(DVector::from_iterator(
            self.len(),
            (0..self.len()).map(|k| self.overlap(k, a) / self.norms[k]),
        ))
    }

    pub fn reconstruct(&self, coefficients: &DVector<Complex>) -> Result<CMatrix> {
        if coefficients.len() != self.len() {
            return Err(Error::shape(self.len(), coefficients.len()));
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (k, &ck) in coefficients.iter().enumerate() {
            for &(i, j, v) in &self.sparse[k] {
                out[(i, j)] += ck * v;
            }
        }
        Ok(out)
    }
}

fn digits_of(mut k: usize, radix: usize, atoms: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(atoms);
    for _ in 0..atoms {
        out.push(k % radix);
        k /= radix;
    }
    out
}
