//! Dense complex linear algebra sized for this crate's needs.
//!
//! Everything here works on small matrices (4x4 marginals, 3x3 moment
//! matrices, operators up to 2^12) where a cyclic Jacobi eigensolver is both
//! simple and accurate, so no external numerics dependency is pulled in.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max |a_ij - conj(a_ji)| = {deviation:.3e} exceeds {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },
    #[error("eigenvalue {value:.3e} is negative beyond the PSD clip tolerance {tol:.3e}")]
    NotPositiveSemidefinite { value: f64, tol: f64 },
    #[error("Jacobi sweep failed to converge after {sweeps} sweeps (off-diagonal {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("cubic has a conjugate pair beyond tolerance (relative discriminant {disc:.3e})")]
    ComplexRoots { disc: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.concat() }
    }

    /// Builds from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::ZERO {
                    continue;
                }
                let lhs = k * other.cols;
                let dst = i * other.cols;
                for j in 0..other.cols {
                    out.data[dst + j] += a * other.data[lhs + j];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// Entrywise complex conjugate (no transpose).
    pub fn conj(&self) -> Self {
        let data = self.data.iter().map(|a| a.conj()).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// max |a_ij - conj(a_ji)|; zero for an exactly Hermitian matrix.
    pub fn hermiticity_deviation(&self) -> f64 {
        assert!(self.is_square());
        let mut dev: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.hermiticity_deviation() <= tol
    }

    /// (A + A†)/2, killing accumulated rounding.
    pub fn hermitized(&self) -> Self {
        self.add(&self.adjoint()).scale(Complex64::new(0.5, 0.0))
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues sorted descending; `eigenvectors` holds the matching
/// orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

const MAX_SWEEPS: usize = 64;

/// Full eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. `tol` bounds both the accepted hermiticity deviation of the
/// input and the residual off-diagonal mass at convergence, relative to the
/// largest entry.
pub fn hermitian_eig(m: &ComplexMatrix, tol: f64) -> Result<EigenDecomposition, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    let scale = m.max_abs().max(1.0);
    let dev = m.hermiticity_deviation();
    if dev > tol * scale {
        return Err(LinalgError::NotHermitian { deviation: dev, tol: tol * scale });
    }

    let mut a = m.hermitized();
    let mut v = ComplexMatrix::identity(n);
    let stop = (tol.max(1e-15)) * scale;

    let mut off = off_diag_max(&a);
    let mut sweeps = 0;
    while off > stop {
        if sweeps >= MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps, off });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let norm = apq.norm();
                if norm <= stop * 1e-2 {
                    continue;
                }
                // Phase removal then a real Jacobi rotation: the combined
                // plane unitary is J = [[c, -s], [e^{-i phi} s, e^{-i phi} c]]
                // acting on columns (p, q).
                let phi = apq.arg();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Stable small root of t^2 - 2 tau t - 1 = 0.
                let tau = (aqq - app) / (2.0 * norm);
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let e = Complex64::from_polar(1.0, -phi);
                let (jpp, jpq) = (Complex64::new(c, 0.0), Complex64::new(-s, 0.0));
                let (jqp, jqq) = (e * s, e * c);

                // A <- J† A J: columns first, then rows with conjugates.
                for i in 0..n {
                    let (x, y) = (a[(i, p)], a[(i, q)]);
                    a[(i, p)] = x * jpp + y * jqp;
                    a[(i, q)] = x * jpq + y * jqq;
                }
                for j in 0..n {
                    let (x, y) = (a[(p, j)], a[(q, j)]);
                    a[(p, j)] = jpp.conj() * x + jqp.conj() * y;
                    a[(q, j)] = jpq.conj() * x + jqq.conj() * y;
                }
                for i in 0..n {
                    let (x, y) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = x * jpp + y * jqp;
                    v[(i, q)] = x * jpq + y * jqq;
                }
            }
        }
        off = off_diag_max(&a);
        sweeps += 1;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap().then(i.cmp(&j)));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

fn off_diag_max(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut m: f64 = 0.0;
    for p in 0..n {
        for q in (p + 1)..n {
            m = m.max(a[(p, q)].norm());
        }
    }
    m
}

/// Absolute clip below which small negative eigenvalues are treated as
/// rounding noise by [`psd_sqrt`].
pub const TOL_CLIP: f64 = 1e-10;

/// Hermitian square root of a positive semidefinite matrix. Eigenvalues in
/// [-TOL_CLIP, 0) are clipped to zero; anything more negative is an error.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let eig = hermitian_eig(m, 1e-9)?;
    let scale = eig.eigenvalues.iter().fold(1.0_f64, |a, &w| a.max(w.abs()));
    let clip = TOL_CLIP * scale;
    let mut sq = Vec::with_capacity(eig.eigenvalues.len());
    for &w in &eig.eigenvalues {
        if w < -clip {
            return Err(LinalgError::NotPositiveSemidefinite { value: w, tol: clip });
        }
        sq.push(w.max(0.0).sqrt());
    }
    let n = m.rows();
    let v = &eig.eigenvectors;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::ZERO;
            for k in 0..n {
                acc += v[(i, k)] * Complex64::new(sq[k], 0.0) * v[(j, k)].conj();
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out.hermitized())
}

/// Real roots of t^3 + c2 t^2 + c1 t + c0, descending. Errors when the root
/// triple is genuinely complex; a discriminant within -1e-12 of zero
/// (relative to the coefficient scale) is treated as a boundary degeneracy
/// and clamped.
pub fn cubic_roots_real(c2: f64, c1: f64, c0: f64) -> Result<[f64; 3], LinalgError> {
    // Depressed form t = y - c2/3: y^3 + p y + q.
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;

    let disc = -4.0 * p * p * p - 27.0 * q * q;
    let disc_scale = (4.0 * p.abs().powi(3) + 27.0 * q * q).max(1e-300);
    let rel = disc / disc_scale;

    let mut roots = if p >= 0.0 {
        // y^3 + p y is monotone for p > 0: three real roots only survive the
        // clamp when both p and q are noise-level.
        if rel < -1e-12 {
            return Err(LinalgError::ComplexRoots { disc: rel });
        }
        [-shift; 3]
    } else {
        if rel < -1e-12 {
            return Err(LinalgError::ComplexRoots { disc: rel });
        }
        let m = 2.0 * (-p / 3.0).sqrt();
        let cos_arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = cos_arg.acos() / 3.0;
        let mut r = [0.0; 3];
        for (k, slot) in r.iter_mut().enumerate() {
            *slot = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift;
        }
        r
    };

    // One Newton polish per root tightens clustered cases; skipped where the
    // derivative itself vanishes (double roots).
    for r in roots.iter_mut() {
        let f = ((*r + c2) * *r + c1) * *r + c0;
        let df = (3.0 * *r + 2.0 * c2) * *r + c1;
        let scale = (r.abs() + c2.abs() + 1.0).powi(2);
        if df.abs() > 1e-8 * scale {
            *r -= f / df;
        }
    }
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_eigenpairs() {
        let eig = hermitian_eig(&ComplexMatrix::identity(2), 1e-12).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 1.0]);
    }

    #[test]
    fn pauli_x_eigenpairs() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]);
        let eig = hermitian_eig(&m, 1e-12).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.eigenvalues[1], -1.0, epsilon = 1e-12);
        // Eigenvector of +1 is (1,1)/sqrt(2) up to phase.
        let v = &eig.eigenvectors;
        let ratio = v[(1, 0)] / v[(0, 0)];
        assert_abs_diff_eq!(ratio.re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(ratio.im, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn diagonal_passthrough() {
        let m = ComplexMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                c([3.0, 1.0, 0.0, 0.0][i], 0.0)
            } else {
                Complex64::ZERO
            }
        });
        let eig = hermitian_eig(&m, 1e-12).unwrap();
        assert_eq!(eig.eigenvalues, vec![3.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.5, 0.0), c(0.0, 0.0)],
        ]);
        assert!(matches!(
            hermitian_eig(&m, 1e-12),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn rejects_non_square() {
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(hermitian_eig(&m, 1e-12), Err(LinalgError::NotSquare { .. })));
    }

    /// Deterministic xorshift-based Hermitian test matrices.
    fn pseudo_random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut s = seed.wrapping_mul(0x9e3779b97f4a7c15).max(1);
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                if i == j {
                    m[(i, i)] = c(2.0 * next(), 0.0);
                } else {
                    let v = c(next(), next());
                    m[(i, j)] = v;
                    m[(j, i)] = v.conj();
                }
            }
        }
        m
    }

    #[test]
    fn random_reconstruction_residual() {
        for (n, seed) in [(3, 7u64), (4, 11), (8, 23), (16, 41)] {
            let m = pseudo_random_hermitian(n, seed);
            let eig = hermitian_eig(&m, 1e-12).unwrap();
            let v = &eig.eigenvectors;
            let d = ComplexMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    c(eig.eigenvalues[i], 0.0)
                } else {
                    Complex64::ZERO
                }
            });
            let rebuilt = v.mul(&d).mul(&v.adjoint());
            assert!(
                rebuilt.max_abs_diff(&m) < 1e-10,
                "residual {} at n={n}",
                rebuilt.max_abs_diff(&m)
            );
            // Orthonormality of the eigenvector columns.
            let gram = v.adjoint().mul(v);
            assert!(gram.max_abs_diff(&ComplexMatrix::identity(n)) < 1e-11);
        }
    }

    #[test]
    fn psd_sqrt_diagonal() {
        let m = ComplexMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                c([4.0, 9.0][i], 0.0)
            } else {
                Complex64::ZERO
            }
        });
        let r = psd_sqrt(&m).unwrap();
        assert_abs_diff_eq!(r[(0, 0)].re, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[(1, 1)].re, 3.0, epsilon = 1e-12);
        assert!(r[(0, 1)].norm() < 1e-12);
    }

    #[test]
    fn psd_sqrt_projector_is_itself() {
        // |+><+| is idempotent, so it equals its own square root.
        let half = c(0.5, 0.0);
        let m = ComplexMatrix::from_fn(2, 2, |_, _| half);
        let r = psd_sqrt(&m).unwrap();
        assert!(r.max_abs_diff(&m) < 1e-12);
    }

    #[test]
    fn psd_sqrt_of_gram_matrix_squares_back() {
        for seed in [3u64, 5, 9] {
            let g = pseudo_random_hermitian(6, seed);
            // G†G is PSD regardless of G.
            let m = g.adjoint().mul(&g);
            let r = psd_sqrt(&m).unwrap();
            assert!(r.mul(&r).max_abs_diff(&m) < 1e-9);
            assert!(r.hermiticity_deviation() < 1e-12);
        }
    }

    #[test]
    fn psd_sqrt_rejects_negative() {
        let m = ComplexMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                c([1.0, -0.5][i], 0.0)
            } else {
                Complex64::ZERO
            }
        });
        assert!(matches!(
            psd_sqrt(&m),
            Err(LinalgError::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn cubic_known_roots() {
        // (t-3)(t-2)(t-1) = t^3 - 6t^2 + 11t - 6.
        let r = cubic_roots_real(-6.0, 11.0, -6.0).unwrap();
        assert_abs_diff_eq!(r[0], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r[1], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r[2], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn cubic_triple_root_at_zero() {
        let r = cubic_roots_real(0.0, 0.0, 0.0).unwrap();
        assert_eq!(r, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn cubic_double_root() {
        // (t-4)^2 t = t^3 - 8t^2 + 16t.
        let r = cubic_roots_real(-8.0, 16.0, 0.0).unwrap();
        assert_abs_diff_eq!(r[0], 4.0, epsilon = 1e-7);
        assert_abs_diff_eq!(r[1], 4.0, epsilon = 1e-7);
        assert_abs_diff_eq!(r[2], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn cubic_rejects_complex_pair() {
        // (t-1)(t^2+1) = t^3 - t^2 + t - 1.
        assert!(matches!(
            cubic_roots_real(-1.0, 1.0, -1.0),
            Err(LinalgError::ComplexRoots { .. })
        ));
    }

    #[test]
    fn cubic_random_root_recovery() {
        let mut s = 0x243f6a8885a308d3u64;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..500 {
            let mut r = [next() * 10.0, next() * 10.0, next() * 10.0];
            r.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let c2 = -(r[0] + r[1] + r[2]);
            let c1 = r[0] * r[1] + r[0] * r[2] + r[1] * r[2];
            let c0 = -r[0] * r[1] * r[2];
            let got = cubic_roots_real(c2, c1, c0).unwrap();
            for k in 0..3 {
                assert!(
                    (got[k] - r[k]).abs() < 1e-9 * (1.0 + r[k].abs()),
                    "root {k}: got {} want {}",
                    got[k],
                    r[k]
                );
            }
        }
    }
}
