use crate::em_coupling::CouplingTensors;
use crate::operator_algebra::{embed, transition_operator};
use crate::{c, CMatrix, Error, Result};

/// One `γ^{αβ}` contribution with jump operators `σ^α_t` (left) and `σ^β_u` (right).
#[derive(Clone, Debug)]
pub struct DissipatorTerm {
    pub rate: f64,
    pub left: CMatrix,
    pub right: CMatrix,
    left_adjoint: CMatrix,
    /// `σ^{α†}_t σ^β_u`.
    product: CMatrix,
}

impl DissipatorTerm {
    pub fn new(rate: f64, left: CMatrix, right: CMatrix) -> Self {
        let left_adjoint = left.adjoint();
        let product = &left_adjoint * &right;
        Self {
            rate,
            left,
            right,
            left_adjoint,
            product,
        }
    }
}

/// Collective damping superoperator.
#[derive(Clone, Debug)]
pub struct Dissipator {
    dim: usize,
    terms: Vec<DissipatorTerm>,
}

impl Dissipator {
    pub fn new(dim: usize, terms: Vec<DissipatorTerm>) -> Result<Self> {
        if let Some(t) = terms.iter().find(|t| t.left.nrows() != dim || t.right.nrows() != dim) {
            return Err(Error::shape(dim, t.left.nrows().max(t.right.nrows())));
        }
        Ok(Self { dim, terms })
    }

    /// All nonzero decay entries of `couplings` as jump-operator pairs.
    pub fn from_couplings(couplings: &CouplingTensors) -> Self {
        let (levels, atoms) = (couplings.levels(), couplings.atoms());
        let transitions = couplings.transitions();
        let jump = |atom: usize, t: usize| embed(&transition_operator(levels, transitions[t].transition()), atom, levels, atoms);
        let terms = couplings
            .entries()
            .filter(|(_, p)| p.decay != 0.0)
            .map(|(&(alpha, beta, t, u), p)| DissipatorTerm::new(p.decay, jump(alpha, t), jump(beta, u)))
            .collect();
        Self {
            dim: levels.pow(atoms as u32),
            terms,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[DissipatorTerm] {
        &self.terms
    }

    /// Heisenberg (adjoint) action `½ Σ γ (2σ^{α†} Q σ^β − {σ^{α†}σ^β, Q})`.
    pub fn apply(&self, q: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            let sandwich = &t.left_adjoint * q * &t.right;
            let anti = &t.product * q + q * &t.product;
            out += (sandwich * c(2.0, 0.0) - anti) * c(0.5 * t.rate, 0.0);
        }
        out
    }

    /// Schrödinger-picture dual `½ Σ γ (2σ^β ρ σ^{α†} − {σ^{α†}σ^β, ρ})`.
    pub fn apply_to_state(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            let sandwich = &t.right * rho * &t.left_adjoint;
            let anti = &t.product * rho + rho * &t.product;
            out += (sandwich * c(2.0, 0.0) - anti) * c(0.5 * t.rate, 0.0);
        }
        out
    }
}

/// Applies the Heisenberg-form dissipator to `q`.
pub fn apply_dissipator(q: &CMatrix, dissipator: &Dissipator) -> Result<CMatrix> {
    if q.nrows() != dissipator.dim || q.ncols() != dissipator.dim {
        return Err(Error::shape(
            format!("{0}x{0}", dissipator.dim),
            format!("{}x{}", q.nrows(), q.ncols()),
        ));
    }
    Ok(dissipator.apply(q))
}
