use nalgebra::{DMatrix, DVector};

use super::Dissipator;
use crate::operator_algebra::OperatorBasis;
use crate::units::ns_to_rate_time;
use crate::{c, CMatrix, Complex, Error, Result};

/// Largest Hilbert-space dimension the density-matrix evolution accepts.
pub const ORACLE_DIMENSION_LIMIT: usize = 64;

/// Schrödinger-picture Lindblad evolution on column-stacked density matrices,
/// used to validate the operator-basis dynamics.
#[derive(Clone, Debug)]
pub struct DensityMatrixOracle {
    dim: usize,
    liouvillian: CMatrix,
}

fn vectorize(m: &CMatrix) -> DVector<Complex> {
    DVector::from_column_slice(m.as_slice())
}

fn unvectorize(v: &DVector<Complex>, dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v.as_slice())
}

impl DensityMatrixOracle {
    pub fn new(h: &CMatrix, dissipator: &Dissipator) -> Result<Self> {
        let dim = h.nrows();
        if dim > ORACLE_DIMENSION_LIMIT {
            return Err(Error::Capacity {
                what: "density-matrix oracle dimension",
                required: dim,
                limit: ORACLE_DIMENSION_LIMIT,
            });
        }
        if dissipator.dim() != dim || h.ncols() != dim {
            return Err(Error::shape(dim, dissipator.dim()));
        }
        let id = CMatrix::identity(dim, dim);
        // vec(A X B) = (Bᵀ ⊗ A) vec(X)
        let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * c(0.0, -1.0);
        for t in dissipator.terms() {
            let product = t.left.adjoint() * &t.right;
            let jump = t.left.map(|z| z.conj()).kronecker(&t.right);
            let anti = id.kronecker(&product) + product.transpose().kronecker(&id);
            l += (jump - anti * c(0.5, 0.0)) * c(t.rate, 0.0);
        }
        Ok(Self { dim, liouvillian: l })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn liouvillian(&self) -> &CMatrix {
        &self.liouvillian
    }

    fn check(&self, rho: &CMatrix) -> Result<()> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::shape(self.dim, rho.nrows()));
        }
        Ok(())
    }

    /// `ρ(t)` for `t` in ns.
    pub fn evolve(&self, rho0: &CMatrix, t_ns: f64) -> Result<CMatrix> {
        self.check(rho0)?;
        let propagator = (&self.liouvillian * c(ns_to_rate_time(t_ns), 0.0)).exp();
        Ok(unvectorize(&(propagator * vectorize(rho0)), self.dim))
    }

    /// `ρ` at evenly spaced times `0, dt, 2dt, …, (n−1)dt`.
    pub fn trajectory(&self, rho0: &CMatrix, dt_ns: f64, n: usize) -> Result<Vec<CMatrix>> {
        self.check(rho0)?;
        let propagator = (&self.liouvillian * c(ns_to_rate_time(dt_ns), 0.0)).exp();
        let mut v = vectorize(rho0);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(unvectorize(&v, self.dim));
            v = &propagator * v;
        }
        Ok(out)
    }

    /// Unit-trace stationary state from the Liouvillian null space.
    pub fn steady_state(&self) -> Result<CMatrix> {
        let n = self.dim * self.dim;
        let mut a = self.liouvillian.clone();
        let mut b = DVector::zeros(n);
        for j in 0..n {
            a[(0, j)] = c(0.0, 0.0);
        }
        for i in 0..self.dim {
            a[(0, i + self.dim * i)] = c(1.0, 0.0);
        }
        b[0] = c(1.0, 0.0);
        let v = a
            .lu()
            .solve(&b)
            .ok_or(Error::Degeneracy { dimension: 2 })?;
        let rho = unvectorize(&v, self.dim);
        Ok((&rho + rho.adjoint()) * c(0.5, 0.0))
    }

    /// The Liouvillian expressed on basis expectation values: the real matrix
    /// `M` with `d⟨Q_i⟩/dt = Σ_j M_ij ⟨Q_j⟩`.
    pub fn generator_in_basis(&self, basis: &OperatorBasis) -> Result<DMatrix<f64>> {
        if basis.dim() != self.dim {
            return Err(Error::shape(self.dim, basis.dim()));
        }
        let n = basis.len();
        // ρ = Σ_j (w_j / ‖Q_j‖²) Q_j and w_i = Tr[Q_i ρ].
        let to_vec = CMatrix::from_fn(self.dim * self.dim, n, |row, j| {
            basis.element(j)[(row % self.dim, row / self.dim)] / basis.norm(j)
        });
        let from_vec = CMatrix::from_fn(n, self.dim * self.dim, |i, col| {
            basis.element(i)[(col / self.dim, col % self.dim)]
        });
        let m = from_vec * &self.liouvillian * to_vec;
        Ok(m.map(|z| z.re))
    }
}

/// One-shot `ρ(t)` from `ρ₀`.
pub fn density_matrix_oracle(h: &CMatrix, dissipator: &Dissipator, rho0: &CMatrix, t_ns: f64) -> Result<CMatrix> {
    DensityMatrixOracle::new(h, dissipator)?.evolve(rho0, t_ns)
}
