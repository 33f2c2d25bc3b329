//! Small dense linear-algebra helpers for the packed `(z, z̄)` variables.

use nalgebra::SymmetricEigen;

use crate::error::{KamError, Result};
use crate::scalar::{ci, cr, CMat, Real};

/// Eigen-decomposition `N = U diag(μ) U^*` of a Hermitian matrix with the
/// eigenvalues in ascending order.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: CMat<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn new(m: &CMat<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(KamError::Dimension(
                "eigen-decomposition of a non-square matrix".into(),
            ));
        }
        let herm = (m + m.adjoint()) * cr(T::lit(0.5));
        let scale = crate::scalar::max_abs(m).max(T::one());
        if crate::scalar::max_abs(&(m - &herm)) > T::lit(1e-10) * scale {
            return Err(KamError::Reality("matrix is not Hermitian".into()));
        }
        let eig = SymmetricEigen::new(herm);
        let d = m.nrows();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMat::from_fn(d, d, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(HermitianEigen { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Structure matrix of the bracket in `u = (z, z̄)`: `[[0, -iI], [iI, 0]]`.
pub fn poisson_structure<T: Real>(d: usize) -> CMat<T> {
    let mut s = CMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        s[(i, d + i)] = ci(-T::one());
        s[(d + i, i)] = ci(T::one());
    }
    s
}

/// Real symplectic form `[[0, I], [-I, 0]]` on `(x, ξ)`.
pub fn real_symplectic<T: Real>(d: usize) -> CMat<T> {
    let mut j = CMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = cr(T::one());
        j[(d + i, i)] = cr(-T::one());
    }
    j
}

/// Change of variables `(z, z̄) = T (x, ξ)` with `z = (ξ - i x)/√2`.
pub fn complex_from_real<T: Real>(d: usize) -> CMat<T> {
    let h = T::one() / T::lit(2.0).sqrt();
    let mut t = CMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        t[(i, i)] = ci(-h);
        t[(i, d + i)] = cr(h);
        t[(d + i, i)] = ci(h);
        t[(d + i, d + i)] = cr(h);
    }
    t
}

/// Inverse of [`complex_from_real`].
pub fn real_from_complex<T: Real>(d: usize) -> CMat<T> {
    let h = T::one() / T::lit(2.0).sqrt();
    let mut t = CMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        t[(i, i)] = ci(h);
        t[(i, d + i)] = ci(-h);
        t[(d + i, i)] = cr(h);
        t[(d + i, d + i)] = cr(h);
    }
    t
}

/// Swap of the `z` and `z̄` halves.
pub fn half_swap<T: Real>(d: usize) -> CMat<T> {
    let mut p = CMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        p[(i, d + i)] = cr(T::one());
        p[(d + i, i)] = cr(T::one());
    }
    p
}

/// Largest entry of `M^T J M - J`, the symplecticity defect of a real
/// matrix acting on `(x, ξ)`.
pub fn symplectic_defect<T: Real>(m_real: &CMat<T>) -> T {
    let d = m_real.nrows() / 2;
    let j = real_symplectic::<T>(d);
    crate::scalar::max_abs(&(m_real.transpose() * &j * m_real - j))
}

/// Largest entry of `(JA)^T - JA`, which vanishes for Hamiltonian matrices.
pub fn hamiltonian_defect<T: Real>(a_real: &CMat<T>) -> T {
    let d = a_real.nrows() / 2;
    let j = real_symplectic::<T>(d);
    let ja = j * a_real;
    crate::scalar::max_abs(&(ja.transpose() - ja))
}
