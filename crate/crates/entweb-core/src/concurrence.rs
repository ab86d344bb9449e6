//! Wootters concurrence of a two-qubit density matrix.
//!
//! The spin flip conjugates the complex-conjugated matrix by sigma_y x
//! sigma_y; the concurrence is max(l1 - l2 - l3 - l4, 0) where the l_i are
//! the decreasing square roots of the eigenvalues of rho * rho_tilde,
//! computed here through the Hermitian product sqrt(rho) rho_tilde
//! sqrt(rho), which shares its spectrum and keeps the eigensolve symmetric.

use crate::linalg::{hermitian_eig, psd_sqrt, ComplexMatrix, LinalgError};
use crate::qstate::PairDensity;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConcurrenceError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Concurrence value together with the spectrum behind it.
#[derive(Clone, Debug)]
pub struct ConcurrenceResult {
    /// max(l[0] - l[1] - l[2] - l[3], 0), exactly as built from `lambdas`.
    pub value: f64,
    /// Decreasing square roots of the eigenvalues of rho * rho_tilde.
    pub lambdas: [f64; 4],
}

/// (sigma_y x sigma_y) conj(rho) (sigma_y x sigma_y). The result is
/// Hermitian and PSD whenever rho is, but is returned raw.
pub fn spin_flip(rho: &PairDensity) -> ComplexMatrix {
    let conj = rho.matrix().conj();
    // sigma_y x sigma_y has +/-1 entries on the antidiagonal: (YxY)[a][b] is
    // nonzero only for b = 3 - a, with sign -1 for a in {1, 2}.
    let sign = |a: usize| if a == 1 || a == 2 { -1.0 } else { 1.0 };
    ComplexMatrix::from_fn(4, 4, |a, b| {
        conj[(3 - a, 3 - b)] * Complex64::new(sign(a) * sign(b), 0.0)
    })
}

pub fn wootters_concurrence(rho: &PairDensity) -> Result<ConcurrenceResult, ConcurrenceError> {
    let sq = psd_sqrt(rho.matrix())?;
    let flipped = spin_flip(rho);
    let m = sq.mul(&flipped).mul(&sq).hermitized();
    let eig = hermitian_eig(&m, 1e-10)?;
    let mut lambdas = [0.0; 4];
    for (slot, &w) in lambdas.iter_mut().zip(&eig.eigenvalues) {
        *slot = w.max(0.0).sqrt();
    }
    let value = (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0);
    debug_assert!(lambdas.iter().sum::<f64>() <= 2.0 + 1e-9);
    Ok(ConcurrenceResult { value, lambdas })
}
