use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::Dissipator;
use crate::operator_algebra::OperatorBasis;
use crate::{c, CMatrix, Complex, Error, Result};

/// Imaginary residue above which generator construction fails.
const RESIDUE_LIMIT: f64 = 1e-8;

/// Real generator of `dw/dt = Λw` with conserved-functional metadata.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    matrix: DMatrix<f64>,
    fingerprint: [u8; 32],
    conserved: Vec<usize>,
    max_residue: f64,
}

impl GeneratorMatrix {
    pub fn new(matrix: DMatrix<f64>, basis: &OperatorBasis) -> Result<Self> {
        if matrix.nrows() != basis.len() || matrix.ncols() != basis.len() {
            return Err(Error::shape(basis.len(), matrix.nrows()));
        }
        let fingerprint = Sha256::digest(bytes_of_real(&matrix)).into();
        Ok(Self {
            matrix,
            fingerprint,
            conserved: basis.projector_indices(),
            max_residue: 0.0,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    /// Hash of the construction inputs (Hamiltonian and damping terms).
    pub fn fingerprint(&self) -> [u8; 32] {
        self.fingerprint
    }

    /// Largest imaginary part discarded during construction.
    pub fn max_residue(&self) -> f64 {
        self.max_residue
    }

    /// Indices whose sum is the conserved total population.
    pub fn conserved_indices(&self) -> &[usize] {
        &self.conserved
    }

    /// Largest entry of `Σ_{i conserved} Λ_ij` over `j`; zero for a
    /// trace-preserving generator.
    pub fn conservation_defect(&self) -> f64 {
        (0..self.len())
            .map(|j| self.conserved.iter().map(|&i| self.matrix[(i, j)]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.matrix * w
    }
}

fn bytes_of_real(m: &DMatrix<f64>) -> Vec<u8> {
    m.iter().flat_map(|x| x.to_le_bytes()).collect()
}

fn hash_complex(hasher: &mut Sha256, m: &CMatrix) {
    for z in m.iter() {
        hasher.update(z.re.to_le_bytes());
        hasher.update(z.im.to_le_bytes());
    }
}

fn dissipator_fingerprint(d: &Dissipator) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update((d.dim() as u64).to_le_bytes());
    for t in d.terms() {
        hasher.update(t.rate.to_le_bytes());
        hash_complex(&mut hasher, &t.left);
        hash_complex(&mut hasher, &t.right);
    }
    hasher.finalize().into()
}

fn combined_fingerprint(h: &CMatrix, d: &Dissipator) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hash_complex(&mut hasher, h);
    hasher.update(dissipator_fingerprint(d));
    hasher.finalize().into()
}

/// `i[H, Q]` (ħ = 1).
pub fn hamiltonian_action(h: &CMatrix, q: &CMatrix) -> CMatrix {
    (h * q - q * h) * c(0.0, 1.0)
}

/// `i[H, Q]` for a sparse `Q`.
fn sparse_commutator(h: &CMatrix, entries: &[(usize, usize, Complex)]) -> CMatrix {
    let n = h.nrows();
    let mut out = CMatrix::zeros(n, n);
    let i = c(0.0, 1.0);
    for &(r, col, v) in entries {
        let iv = i * v;
        for a in 0..n {
            out[(a, col)] += h[(a, r)] * iv;
            out[(r, a)] -= iv * h[(col, a)];
        }
    }
    out
}

/// Projects `rows(i)` onto the basis: entry `(i, j) = Tr[Q_j X_i] / Tr[Q_j Q_j]`.
/// Returns the real part and the largest discarded imaginary part.
fn project_rows<F>(basis: &OperatorBasis, rows: F) -> (DMatrix<f64>, f64)
where
    F: Fn(usize) -> CMatrix + Sync,
{
    let n = basis.len();
    let computed: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = rows(i);
            let mut residue = 0.0_f64;
            let row = (0..n)
                .map(|j| {
                    let v = basis.overlap(j, &x) / basis.norm(j);
                    residue = residue.max(v.im.abs());
                    v.re
                })
                .collect();
            (row, residue)
        })
        .collect();
    let residue = computed.iter().map(|r| r.1).fold(0.0, f64::max);
    (DMatrix::from_fn(n, n, |i, j| computed[i].0[j]), residue)
}

fn checked((matrix, residue): (DMatrix<f64>, f64)) -> Result<(DMatrix<f64>, f64)> {
    if residue > RESIDUE_LIMIT * matrix.amax().max(1.0) {
        return Err(Error::Construction { residue });
    }
    Ok((matrix, residue))
}

fn check_dim(h_dim: usize, basis: &OperatorBasis) -> Result<()> {
    if h_dim != basis.dim() {
        return Err(Error::shape(basis.dim(), h_dim));
    }
    Ok(())
}

/// Generator contribution of `i[H, ·]`.
pub fn coherent_part(h: &CMatrix, basis: &OperatorBasis) -> Result<DMatrix<f64>> {
    check_dim(h.nrows(), basis)?;
    Ok(checked(project_rows(basis, |i| sparse_commutator(h, basis.sparse(i))))?.0)
}

/// Generator contribution of the dissipator.
pub fn dissipative_part(dissipator: &Dissipator, basis: &OperatorBasis) -> Result<DMatrix<f64>> {
    check_dim(dissipator.dim(), basis)?;
    Ok(checked(project_rows(basis, |i| dissipator.apply(basis.element(i))))?.0)
}

/// `Λ_ij = Tr[Q_j L(Q_i)] / Tr[Q_j Q_j]` with `L = i[H, ·] + dissipator`.
pub fn build_generator(h: &CMatrix, dissipator: &Dissipator, basis: &OperatorBasis) -> Result<GeneratorMatrix> {
    check_dim(h.nrows(), basis)?;
    check_dim(dissipator.dim(), basis)?;
    let (matrix, max_residue) = checked(project_rows(basis, |i| {
        sparse_commutator(h, basis.sparse(i)) + dissipator.apply(basis.element(i))
    }))?;
    Ok(GeneratorMatrix {
        matrix,
        fingerprint: combined_fingerprint(h, dissipator),
        conserved: basis.projector_indices(),
        max_residue,
    })
}

/// Caches generators by input fingerprint and dissipative parts by damping
/// fingerprint, so sweeps that only change the Hamiltonian reuse the latter.
#[derive(Debug, Default)]
pub struct GeneratorCache {
    generators: Mutex<HashMap<[u8; 32], Arc<GeneratorMatrix>>>,
    dissipative: Mutex<HashMap<[u8; 32], Arc<DMatrix<f64>>>>,
}

impl GeneratorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(&self, h: &CMatrix, dissipator: &Dissipator, basis: &OperatorBasis) -> Result<Arc<GeneratorMatrix>> {
        check_dim(h.nrows(), basis)?;
        let key = combined_fingerprint(h, dissipator);
        if let Some(g) = self.generators.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(g));
        }
        let generator = Arc::new(self.build(h, dissipator, basis)?);
        self.generators
            .lock()
            .expect("cache lock")
            .insert(key, Arc::clone(&generator));
        Ok(generator)
    }

    /// Builds a generator reusing the cached dissipative part, without
    /// retaining the result.
    pub fn build(&self, h: &CMatrix, dissipator: &Dissipator, basis: &OperatorBasis) -> Result<GeneratorMatrix> {
        check_dim(h.nrows(), basis)?;
        let damping_key = dissipator_fingerprint(dissipator);
        let cached = self.dissipative.lock().expect("cache lock").get(&damping_key).cloned();
        let damping = match cached {
            Some(d) => d,
            None => {
                let d = Arc::new(dissipative_part(dissipator, basis)?);
                self.dissipative
                    .lock()
                    .expect("cache lock")
                    .insert(damping_key, Arc::clone(&d));
                d
            }
        };
        let (coherent, max_residue) = checked(project_rows(basis, |i| sparse_commutator(h, basis.sparse(i))))?;
        Ok(GeneratorMatrix {
            matrix: coherent + damping.as_ref(),
            fingerprint: combined_fingerprint(h, dissipator),
            conserved: basis.projector_indices(),
            max_residue,
        })
    }

    pub fn len(&self) -> usize {
        self.generators.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Basis expectation values `w_i = ⟨Q_i⟩` at a time in ns.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub w: DVector<f64>,
    pub time_ns: f64,
}

impl StateVector {
    /// `w_i = Tr[Q_i ρ]`.
    pub fn from_density(basis: &OperatorBasis, rho: &CMatrix) -> Result<Self> {
        if rho.nrows() != basis.dim() || rho.ncols() != basis.dim() {
            return Err(Error::shape(basis.dim(), rho.nrows()));
        }
        Ok(Self {
            w: DVector::from_iterator(basis.len(), (0..basis.len()).map(|k| basis.overlap(k, rho).re)),
            time_ns: 0.0,
        })
    }

    /// Every emitter in level 0.
    pub fn ground(basis: &OperatorBasis) -> Self {
        let mut rho = CMatrix::zeros(basis.dim(), basis.dim());
        rho[(0, 0)] = c(1.0, 0.0);
        Self::from_density(basis, &rho).expect("dimension matches by construction")
    }

    /// Trace of the underlying density matrix.
    pub fn total_population(&self, basis: &OperatorBasis) -> f64 {
        basis.projector_indices().iter().map(|&k| self.w[k]).sum()
    }

    /// Density matrix `Σ_i (w_i / Tr[Q_i Q_i]) Q_i`.
    pub fn density(&self, basis: &OperatorBasis) -> Result<CMatrix> {
        let coefficients = DVector::from_iterator(
            basis.len(),
            self.w.iter().enumerate().map(|(k, &w)| c(w / basis.norm(k), 0.0)),
        );
        basis.reconstruct(&coefficients)
    }
}

/// `⟨A⟩ = Σ_i (Tr[Q_i† A] / Tr[Q_i† Q_i]) w_i`.
pub fn expectation(a: &CMatrix, state: &StateVector, basis: &OperatorBasis) -> Result<Complex> {
    if state.w.len() != basis.len() {
        return Err(Error::shape(basis.len(), state.w.len()));
    }
    let coefficients = basis.expand(a)?;
    Ok(coefficients.iter().zip(state.w.iter()).map(|(ck, &wk)| ck * wk).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DissipatorTerm;
    use crate::operator_algebra::{ket_bra, transition_operator, Transition};

    fn decaying_two_level(rate: f64) -> (OperatorBasis, Dissipator) {
        let basis = OperatorBasis::new(2, 1).unwrap();
        let s = transition_operator(2, Transition::new(0, 1));
        let d = Dissipator::new(2, vec![DissipatorTerm::new(rate, s.clone(), s)]).unwrap();
        (basis, d)
    }

    #[test]
    fn undriven_two_level_rows() {
        let (basis, d) = decaying_two_level(2.5);
        let g = build_generator(&CMatrix::zeros(2, 2), &d, &basis).unwrap();
        // Index 1 is the excited projector.
        assert!((g.matrix()[(1, 1)] + 2.5).abs() < 1e-14);
        assert!((g.matrix()[(0, 1)] - 2.5).abs() < 1e-14);
        assert!(g.conservation_defect() < 1e-14);
    }

    #[test]
    fn coherent_sparse_path_matches_dense() {
        let basis = OperatorBasis::new(3, 1).unwrap();
        let h = CMatrix::from_fn(3, 3, |i, j| c((i + 2 * j) as f64, i as f64 - j as f64));
        let h = (&h + h.adjoint()) * c(0.5, 0.0);
        for i in 0..basis.len() {
            let dense = hamiltonian_action(&h, basis.element(i));
            let sparse = sparse_commutator(&h, basis.sparse(i));
            assert!(crate::max_norm(&(dense - sparse)) < 1e-13);
        }
    }

    #[test]
    fn expectation_of_identity_and_basis_elements() {
        let basis = OperatorBasis::new(4, 2).unwrap();
        let state = StateVector::ground(&basis);
        let one = expectation(&CMatrix::identity(16, 16), &state, &basis).unwrap();
        assert!((one - c(1.0, 0.0)).norm() < 1e-14);
        for k in [0, 17, 115, 255] {
            let v = expectation(basis.element(k), &state, &basis).unwrap();
            assert!((v.re - state.w[k]).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn density_round_trip() {
        let basis = OperatorBasis::new(2, 2).unwrap();
        let mut rho = ket_bra(4, 1, 1) * c(0.25, 0.0) + ket_bra(4, 2, 2) * c(0.75, 0.0);
        rho[(1, 2)] = c(0.1, 0.2);
        rho[(2, 1)] = c(0.1, -0.2);
        let state = StateVector::from_density(&basis, &rho).unwrap();
        assert!(crate::max_norm(&(state.density(&basis).unwrap() - &rho)) < 1e-14);
        assert!((state.total_population(&basis) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cache_reuses_generators() {
        let (basis, d) = decaying_two_level(1.0);
        let cache = GeneratorCache::new();
        let h = CMatrix::zeros(2, 2);
        let a = cache.get_or_build(&h, &d, &basis).unwrap();
        let b = cache.get_or_build(&h, &d, &basis).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        let mut h2 = h.clone();
        h2[(1, 1)] = c(1.0, 0.0);
        let g2 = cache.get_or_build(&h2, &d, &basis).unwrap();
        assert_eq!(cache.len(), 2);
        let direct = build_generator(&h2, &d, &basis).unwrap();
        assert!((g2.matrix() - direct.matrix()).amax() < 1e-13);
        assert_eq!(g2.fingerprint(), direct.fingerprint());
    }
}
