//! Multiqubit states and the collective-spin quantities extracted from them.
//!
//! Conventions, fixed once and used everywhere: the computational basis is
//! ordered (|0>, |1>) per qubit with |1> the spin-up state, qubit 1 is the
//! leftmost tensor factor (most significant bit of a basis index), and the
//! single-site spin operators are s_z = diag(-1/2, +1/2), s_x off-diagonal
//! 1/2, s_y = [[0, i/2], [-i/2, 0]]. Collective operators are the sums of
//! the single-site ones.

use crate::linalg::{hermitian_eig, ComplexMatrix, LinalgError};
use itertools::Itertools;
use num_complex::Complex64;
use thiserror::Error;

pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 12;

/// Largest qubit count accepted by [`permutation_twirl`]; 8! conjugations of
/// a 256x256 matrix is the practical ceiling.
pub const MAX_TWIRL_QUBITS: usize = 8;

#[derive(Debug, Error)]
pub enum QStateError {
    #[error("qubit count {n} outside supported range {min}..={max}")]
    BadQubitCount { n: usize, min: usize, max: usize },
    #[error("amplitude vector has length {got}, expected {expected}")]
    BadDimension { expected: usize, got: usize },
    #[error("state norm {norm} is not 1 within tolerance")]
    NotNormalized { norm: f64 },
    #[error("cannot normalise a zero vector")]
    ZeroNorm,
    #[error("pair ({i}, {j}) invalid: need 1 <= i < j <= {n}")]
    BadPair { i: usize, j: usize, n: usize },
    #[error("excitation count {k} exceeds qubit count {n}")]
    BadExcitation { k: usize, n: usize },
    #[error("density matrix trace {trace} is not 1 within tolerance")]
    NotUnitTrace { trace: f64 },
    #[error("density matrix has eigenvalue {eig:.3e} below the PSD tolerance")]
    NotPsd { eig: f64 },
    #[error("permutation twirl supports at most {max} qubits, got {n}")]
    TwirlTooLarge { n: usize, max: usize },
    #[error("matrix is {rows}x{cols}, expected {dim}x{dim}")]
    BadMatrixShape { rows: usize, cols: usize, dim: usize },
    #[error("rotation matrix is not orthogonal: max |R R^T - I| = {deviation:.3e}")]
    NotOrthogonal { deviation: f64 },
    #[error("improper rotation (determinant {det:.6}) cannot be realised by qubit rotations")]
    ImproperRotation { det: f64 },
    #[error("expected {expected} ring coefficients, got {got}")]
    BadCoefficientCount { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Normalised pure state of `n` qubits, amplitudes in computational order.
#[derive(Clone, Debug)]
pub struct PureState {
    n: usize,
    amps: Vec<Complex64>,
}

impl PureState {
    /// Accepts an already-normalised amplitude vector (norm 1 within 1e-10).
    pub fn new(n: usize, amps: Vec<Complex64>) -> Result<Self, QStateError> {
        check_qubits(n)?;
        if amps.len() != 1 << n {
            return Err(QStateError::BadDimension { expected: 1 << n, got: amps.len() });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QStateError::NotNormalized { norm });
        }
        Ok(Self { n, amps })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(n: usize, mut amps: Vec<Complex64>) -> Result<Self, QStateError> {
        check_qubits(n)?;
        if amps.len() != 1 << n {
            return Err(QStateError::BadDimension { expected: 1 << n, got: amps.len() });
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-14 {
            return Err(QStateError::ZeroNorm);
        }
        let inv = Complex64::new(1.0 / norm, 0.0);
        for a in amps.iter_mut() {
            *a *= inv;
        }
        Ok(Self { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Reduced density matrix of the (1-indexed) qubit pair i < j, ordered
    /// (qubit i, qubit j) in the 4-dimensional computational basis.
    pub fn pair_marginal(&self, i: usize, j: usize) -> Result<PairDensity, QStateError> {
        let (pi, pj) = pair_bit_positions(self.n, i, j)?;
        let mut m = ComplexMatrix::zeros(4, 4);
        let rest = self.n - 2;
        for z in 0..1usize << rest {
            let base = spread_rest(z, pi, pj);
            let mut block = [Complex64::ZERO; 4];
            for (ai, slot) in block.iter_mut().enumerate() {
                let idx = base | bits_at(ai, pi, pj);
                *slot = self.amps[idx];
            }
            for a in 0..4 {
                for b in 0..4 {
                    m[(a, b)] += block[a] * block[b].conj();
                }
            }
        }
        PairDensity::new(m)
    }

    /// First and symmetrised second moments of the collective spin.
    pub fn moments(&self) -> CollectiveMoments {
        let dim = self.amps.len();
        let mut phi = [vec![Complex64::ZERO; dim], vec![Complex64::ZERO; dim], vec![
            Complex64::ZERO;
            dim
        ]];
        for (axis, out) in phi.iter_mut().enumerate() {
            apply_collective(axis, self.n, &self.amps, out);
        }
        let mut mean = [0.0; 3];
        let mut corr = [[0.0; 3]; 3];
        for a in 0..3 {
            mean[a] = inner(&self.amps, &phi[a]).re;
            for b in a..3 {
                // Re<S_a psi | S_b psi> is the symmetrised correlator.
                let v = inner(&phi[a], &phi[b]).re;
                corr[a][b] = v;
                corr[b][a] = v;
            }
        }
        CollectiveMoments::assemble(self.n, mean, corr)
    }

    /// Applies the same SU(2) rotation to every qubit. The rotation is given
    /// as its SO(3) action on spin expectation values.
    pub fn rotated(&self, rot: &Rotation3) -> Result<PureState, QStateError> {
        let u = rot.spin_half_unitary()?;
        let mut amps = self.amps.clone();
        for p in 0..self.n {
            apply_single_qubit(&u, p, &mut amps);
        }
        Ok(PureState { n: self.n, amps })
    }

    pub fn density(&self) -> DensityOperator {
        let dim = self.amps.len();
        let m = ComplexMatrix::from_fn(dim, dim, |r, c| self.amps[r] * self.amps[c].conj());
        DensityOperator { n: self.n, m }
    }
}

/// Mixed state of `n` qubits as a dense density matrix.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    n: usize,
    m: ComplexMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity and unit trace always; positivity is checked by
    /// full diagonalisation up to dimension 256 and deferred to downstream
    /// pair-level checks beyond that.
    pub fn new(n: usize, m: ComplexMatrix) -> Result<Self, QStateError> {
        check_qubits(n)?;
        let dim = 1 << n;
        if m.rows() != dim || m.cols() != dim {
            return Err(QStateError::BadMatrixShape { rows: m.rows(), cols: m.cols(), dim });
        }
        if !m.is_hermitian(1e-9) {
            return Err(LinalgError::NotHermitian {
                deviation: m.hermiticity_deviation(),
                tol: 1e-9,
            }
            .into());
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(QStateError::NotUnitTrace { trace: tr.re });
        }
        if dim <= 256 {
            let eig = hermitian_eig(&m, 1e-9)?;
            let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
            if min < -1e-9 {
                return Err(QStateError::NotPsd { eig: min });
            }
        }
        Ok(Self { n, m: m.hermitized() })
    }

    /// For matrices PSD by construction (convex mixtures, conjugations of
    /// valid states); skips the eigenvalue check at any size.
    pub(crate) fn trusted(n: usize, m: ComplexMatrix) -> Self {
        debug_assert!(m.is_hermitian(1e-9));
        debug_assert!((m.trace().re - 1.0).abs() < 1e-9);
        Self { n, m }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn pair_marginal(&self, i: usize, j: usize) -> Result<PairDensity, QStateError> {
        let (pi, pj) = pair_bit_positions(self.n, i, j)?;
        let mut out = ComplexMatrix::zeros(4, 4);
        let rest = self.n - 2;
        for z in 0..1usize << rest {
            let base = spread_rest(z, pi, pj);
            for a in 0..4 {
                let r = base | bits_at(a, pi, pj);
                for b in 0..4 {
                    let c = base | bits_at(b, pi, pj);
                    out[(a, b)] += self.m[(r, c)];
                }
            }
        }
        PairDensity::new(out)
    }

    pub fn moments(&self) -> CollectiveMoments {
        let dim = 1usize << self.n;
        let mut mean = [0.0; 3];
        let mut corr = [[0.0; 3]; 3];
        let mut col = vec![Complex64::ZERO; dim];
        let mut w = vec![Complex64::ZERO; dim];
        let mut u = vec![Complex64::ZERO; dim];
        for c in 0..dim {
            for (r, slot) in col.iter_mut().enumerate() {
                *slot = self.m[(r, c)];
            }
            for b in 0..3 {
                apply_collective(b, self.n, &col, &mut w);
                mean[b] += w[c].re;
                for a in 0..3 {
                    // tr(S_a S_b rho) accumulated column by column.
                    apply_collective(a, self.n, &w, &mut u);
                    corr[a][b] += u[c].re;
                }
            }
        }
        // Symmetrise: tr(S_a S_b rho) and tr(S_b S_a rho) average to the
        // symmetrised correlator; rounding is the only asymmetry here.
        let mut sym = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                sym[a][b] = 0.5 * (corr[a][b] + corr[b][a]);
            }
        }
        CollectiveMoments::assemble(self.n, mean, sym)
    }

    pub fn rotated(&self, rot: &Rotation3) -> Result<DensityOperator, QStateError> {
        let u = rot.spin_half_unitary()?;
        let dim = 1usize << self.n;
        let mut m = self.m.clone();
        let mut col = vec![Complex64::ZERO; dim];
        for p in 0..self.n {
            // Left-multiply rows by U on qubit p.
            for c in 0..dim {
                for (r, slot) in col.iter_mut().enumerate() {
                    *slot = m[(r, c)];
                }
                apply_single_qubit(&u, p, &mut col);
                for (r, slot) in col.iter().enumerate() {
                    m[(r, c)] = *slot;
                }
            }
            // Right-multiply columns by U† on qubit p.
            for r in 0..dim {
                let mask = 1usize << p;
                for c0 in 0..dim {
                    if c0 & mask != 0 {
                        continue;
                    }
                    let c1 = c0 | mask;
                    let (x, y) = (m[(r, c0)], m[(r, c1)]);
                    m[(r, c0)] = x * u[0].conj() + y * u[1].conj();
                    m[(r, c1)] = x * u[2].conj() + y * u[3].conj();
                }
            }
        }
        Ok(DensityOperator { n: self.n, m })
    }
}

/// Two-qubit density matrix in the computational basis (|00>, |01>, |10>,
/// |11>), validated Hermitian, unit-trace and PSD on construction.
#[derive(Clone, Debug)]
pub struct PairDensity {
    m: ComplexMatrix,
}

impl PairDensity {
    pub fn new(m: ComplexMatrix) -> Result<Self, QStateError> {
        if m.rows() != 4 || m.cols() != 4 {
            return Err(QStateError::BadMatrixShape { rows: m.rows(), cols: m.cols(), dim: 4 });
        }
        if !m.is_hermitian(1e-9) {
            return Err(LinalgError::NotHermitian {
                deviation: m.hermiticity_deviation(),
                tol: 1e-9,
            }
            .into());
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > 1e-9 {
            return Err(QStateError::NotUnitTrace { trace: tr.re });
        }
        let eig = hermitian_eig(&m, 1e-9)?;
        let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -1e-9 {
            return Err(QStateError::NotPsd { eig: min });
        }
        Ok(Self { m: m.hermitized() })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }
}

/// First moments, symmetrised second moments and total spin squared of the
/// collective spin operators.
#[derive(Clone, Debug)]
pub struct CollectiveMoments {
    pub n: usize,
    pub mean: [f64; 3],
    pub corr: [[f64; 3]; 3],
    pub total_spin_sq: f64,
}

impl CollectiveMoments {
    fn assemble(n: usize, mean: [f64; 3], corr: [[f64; 3]; 3]) -> Self {
        let total = corr[0][0] + corr[1][1] + corr[2][2];
        let half_n = n as f64 / 2.0;
        debug_assert!(mean.iter().all(|m| m.abs() <= half_n + 1e-9));
        debug_assert!((-1e-9..=half_n * (half_n + 1.0) + 1e-9).contains(&total));
        Self { n, mean, corr, total_spin_sq: total }
    }

    /// Diagonal second moments (S_x^2, S_y^2, S_z^2).
    pub fn second_moments(&self) -> [f64; 3] {
        [self.corr[0][0], self.corr[1][1], self.corr[2][2]]
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let c = &self.corr;
        c[0][1].abs() <= tol && c[0][2].abs() <= tol && c[1][2].abs() <= tol
    }
}

/// Proper rotation of spin expectation values, stored row-major.
#[derive(Clone, Debug)]
pub struct Rotation3 {
    m: [[f64; 3]; 3],
}

impl Rotation3 {
    /// Requires orthogonality within 1e-9; both determinant signs are
    /// representable, but improper matrices are rejected later when a qubit
    /// unitary is requested.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self, QStateError> {
        let mut dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[i][k] * m[j][k]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((dot - target).abs());
            }
        }
        if dev > 1e-9 {
            return Err(QStateError::NotOrthogonal { deviation: dev });
        }
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] }
    }

    /// Rodrigues construction from a (not necessarily unit) axis.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        assert!(norm > 1e-12, "rotation axis must be nonzero");
        let k = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
        let (s, c) = angle.sin_cos();
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let eye = if i == j { 1.0 } else { 0.0 };
                let cross = match (i, j) {
                    (0, 1) => -k[2],
                    (0, 2) => k[1],
                    (1, 0) => k[2],
                    (1, 2) => -k[0],
                    (2, 0) => -k[1],
                    (2, 1) => k[0],
                    _ => 0.0,
                };
                m[i][j] = eye * c + cross * s + k[i] * k[j] * (1.0 - c);
            }
        }
        Self { m }
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Rotation angle in [0, pi] (meaningful for proper rotations).
    pub fn angle(&self) -> f64 {
        let tr = self.m[0][0] + self.m[1][1] + self.m[2][2];
        (((tr - 1.0) / 2.0).clamp(-1.0, 1.0)).acos()
    }

    pub fn apply_vec(&self, v: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = (0..3).map(|k| self.m[i][k] * v[k]).sum();
        }
        out
    }

    /// R M R^T for a symmetric 3x3 matrix M.
    pub fn apply_sym(&self, mat: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut tmp = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                tmp[i][j] = (0..3).map(|k| self.m[i][k] * mat[k][j]).sum();
            }
        }
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3).map(|k| tmp[i][k] * self.m[j][k]).sum();
            }
        }
        // Exact symmetry survives the congruence only up to rounding.
        for i in 0..3 {
            for j in (i + 1)..3 {
                let v = 0.5 * (out[i][j] + out[j][i]);
                out[i][j] = v;
                out[j][i] = v;
            }
        }
        out
    }

    /// The qubit unitary (as [u00, u01, u10, u11]) whose conjugation action
    /// on spin expectation values equals this rotation. Improper rotations
    /// have no such unitary and are rejected.
    fn spin_half_unitary(&self) -> Result<[Complex64; 4], QStateError> {
        let det = self.det();
        if det < 0.0 {
            return Err(QStateError::ImproperRotation { det });
        }
        let theta = self.angle();
        let axis = if theta < 1e-12 {
            [0.0, 0.0, 1.0]
        } else if theta > std::f64::consts::PI - 1e-6 {
            // Near angle pi the antisymmetric part vanishes; recover the
            // axis from the dominant column of R + I.
            let m = &self.m;
            let cols: Vec<[f64; 3]> = (0..3)
                .map(|j| {
                    [
                        m[0][j] + if j == 0 { 1.0 } else { 0.0 },
                        m[1][j] + if j == 1 { 1.0 } else { 0.0 },
                        m[2][j] + if j == 2 { 1.0 } else { 0.0 },
                    ]
                })
                .collect();
            let best = cols
                .iter()
                .map(|c| c[0] * c[0] + c[1] * c[1] + c[2] * c[2])
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            let c = cols[best];
            let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
            [c[0] / norm, c[1] / norm, c[2] / norm]
        } else {
            let m = &self.m;
            let s = 2.0 * theta.sin();
            [
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            ]
        };
        let c2 = (theta / 2.0).cos();
        let s2 = (theta / 2.0).sin();
        // U = cos(theta/2) I - i sin(theta/2) (n . sigma) in the (|0>, |1>)
        // basis with sigma_z = diag(-1, 1).
        Ok([
            Complex64::new(c2, s2 * axis[2]),
            Complex64::new(s2 * axis[1], -s2 * axis[0]),
            Complex64::new(-s2 * axis[1], -s2 * axis[0]),
            Complex64::new(c2, -s2 * axis[2]),
        ])
    }
}

/// Pure or mixed state, for operations defined on both.
#[derive(Clone, Debug)]
pub enum QState {
    Pure(PureState),
    Mixed(DensityOperator),
}

impl QState {
    pub fn n(&self) -> usize {
        match self {
            QState::Pure(s) => s.n(),
            QState::Mixed(d) => d.n(),
        }
    }

    pub fn pair_marginal(&self, i: usize, j: usize) -> Result<PairDensity, QStateError> {
        match self {
            QState::Pure(s) => s.pair_marginal(i, j),
            QState::Mixed(d) => d.pair_marginal(i, j),
        }
    }

    pub fn moments(&self) -> CollectiveMoments {
        match self {
            QState::Pure(s) => s.moments(),
            QState::Mixed(d) => d.moments(),
        }
    }

    pub fn rotated(&self, rot: &Rotation3) -> Result<QState, QStateError> {
        Ok(match self {
            QState::Pure(s) => QState::Pure(s.rotated(rot)?),
            QState::Mixed(d) => QState::Mixed(d.rotated(rot)?),
        })
    }
}

/// Symmetric superposition of all basis states with exactly `n_zeros` qubits
/// in |0> (equivalently n - n_zeros excitations).
pub fn dicke_state(n: usize, n_zeros: usize) -> Result<PureState, QStateError> {
    check_qubits(n)?;
    if n_zeros > n {
        return Err(QStateError::BadExcitation { k: n_zeros, n });
    }
    let ones = n - n_zeros;
    let dim = 1usize << n;
    let count = binomial(n, n_zeros);
    let amp = Complex64::new(1.0 / (count as f64).sqrt(), 0.0);
    let mut amps = vec![Complex64::ZERO; dim];
    for (idx, slot) in amps.iter_mut().enumerate() {
        if idx.count_ones() as usize == ones {
            *slot = amp;
        }
    }
    PureState::new(n, amps)
}

/// (|0...0> + |1...1>)/sqrt(2).
pub fn ghz_state(n: usize) -> Result<PureState, QStateError> {
    check_qubits(n)?;
    let dim = 1usize << n;
    let mut amps = vec![Complex64::ZERO; dim];
    amps[0] = Complex64::new(SQRT_HALF, 0.0);
    amps[dim - 1] = Complex64::new(SQRT_HALF, 0.0);
    PureState::new(n, amps)
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

pub fn partial_trace_pair(state: &QState, i: usize, j: usize) -> Result<PairDensity, QStateError> {
    state.pair_marginal(i, j)
}

pub fn collective_moments(state: &QState) -> CollectiveMoments {
    state.moments()
}

pub fn apply_spin_rotation(state: &QState, rot: &Rotation3) -> Result<QState, QStateError> {
    state.rotated(rot)
}

/// Principal-axes frame of the second-moment matrix: returns the proper
/// rotation R and the moments expressed in the rotated frame, with axes
/// relabeled so that S_z^2 >= S_y^2 >= S_x^2 and the correlation matrix is
/// diagonal. Among the frames allowed by degenerate moments, the one
/// closest to the identity is chosen, deterministically.
pub fn principal_axes(
    moments: &CollectiveMoments,
) -> Result<(Rotation3, CollectiveMoments), QStateError> {
    let corr = &moments.corr;
    let m = ComplexMatrix::from_fn(3, 3, |i, j| Complex64::new(corr[i][j], 0.0));
    let eig = hermitian_eig(&m, 1e-12)?;
    // Ascending eigenvalues map onto slots (x, y, z).
    let w: Vec<f64> = eig.eigenvalues.iter().rev().copied().collect();
    let vecs: Vec<[f64; 3]> = (0..3)
        .rev()
        .map(|c| {
            [
                eig.eigenvectors[(0, c)].re,
                eig.eigenvectors[(1, c)].re,
                eig.eigenvectors[(2, c)].re,
            ]
        })
        .collect();

    let scale = w.iter().fold(1.0_f64, |a, &x| a.max(x.abs()));
    let cluster_tol = 1e-8 * scale;
    let mut rows = [[0.0; 3]; 3];
    let mut start = 0;
    while start < 3 {
        let mut end = start + 1;
        while end < 3 && (w[end] - w[end - 1]).abs() <= cluster_tol {
            end += 1;
        }
        // Basis of this eigenspace closest to the identity axes of the
        // slots it occupies: project each target axis into the eigenspace
        // and orthonormalise.
        let q: Vec<[f64; 3]> = vecs[start..end].to_vec();
        let mut picked: Vec<[f64; 3]> = Vec::new();
        for slot in start..end {
            let mut target = [0.0; 3];
            target[slot] = 1.0;
            let mut v = project_span(&q, target);
            for p in &picked {
                let d = dot3(&v, p);
                for k in 0..3 {
                    v[k] -= d * p[k];
                }
            }
            let mut norm = dot3(&v, &v).sqrt();
            if norm < 1e-6 {
                // Target axis is orthogonal to the eigenspace; fall back to
                // any remaining eigenspace direction.
                for cand in &q {
                    let mut u = *cand;
                    for p in &picked {
                        let d = dot3(&u, p);
                        for k in 0..3 {
                            u[k] -= d * p[k];
                        }
                    }
                    let un = dot3(&u, &u).sqrt();
                    if un > 1e-6 {
                        v = u;
                        norm = un;
                        break;
                    }
                }
            }
            for k in 0..3 {
                v[k] /= norm;
            }
            align_sign(&mut v, slot);
            rows[slot] = v;
            picked.push(v);
        }
        start = end;
    }

    // Proper rotation: if the relabeling came out orientation-reversing,
    // flip the row least aligned with its own axis.
    let mut rot = Rotation3::new(rows)?;
    if rot.det() < 0.0 {
        let diag = [rows[0][0], rows[1][1], rows[2][2]];
        let flip = (0..3).min_by(|&a, &b| diag[a].partial_cmp(&diag[b]).unwrap()).unwrap();
        for k in 0..3 {
            rows[flip][k] = -rows[flip][k];
        }
        rot = Rotation3::new(rows)?;
    }

    let mean = rot.apply_vec(moments.mean);
    let corr_rot = rot.apply_sym(corr);
    let rotated = CollectiveMoments::assemble(moments.n, mean, corr_rot);
    Ok((rot, rotated))
}

fn project_span(basis: &[[f64; 3]], v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for b in basis {
        let d = dot3(b, &v);
        for k in 0..3 {
            out[k] += d * b[k];
        }
    }
    out
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Sign convention for eigenvector rows: positive overlap with the slot's
/// own axis, falling back to the largest-magnitude component.
fn align_sign(v: &mut [f64; 3], slot: usize) {
    let d = v[slot];
    let pivot = if d.abs() > 1e-12 {
        d
    } else {
        let mut best = 0usize;
        for k in 1..3 {
            if v[k].abs() > v[best].abs() {
                best = k;
            }
        }
        v[best]
    };
    if pivot < 0.0 {
        for k in 0..3 {
            v[k] = -v[k];
        }
    }
}

/// True when every pair marginal matches the (1, 2) marginal within `tol`
/// entrywise. Two-qubit states are trivially uniform.
pub fn is_pair_marginal_uniform(state: &QState, tol: f64) -> Result<bool, QStateError> {
    let n = state.n();
    let reference = state.pair_marginal(1, 2)?;
    for i in 1..=n {
        for j in (i + 1)..=n {
            if (i, j) == (1, 2) {
                continue;
            }
            let m = state.pair_marginal(i, j)?;
            if m.matrix().max_abs_diff(reference.matrix()) > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Averages P rho P† over all n! qubit permutations, enumerated in
/// lexicographic order. The result commutes with every qubit transposition.
pub fn permutation_twirl(rho: &DensityOperator) -> Result<DensityOperator, QStateError> {
    let n = rho.n();
    if n > MAX_TWIRL_QUBITS {
        return Err(QStateError::TwirlTooLarge { n, max: MAX_TWIRL_QUBITS });
    }
    let dim = 1usize << n;
    let mut acc = ComplexMatrix::zeros(dim, dim);
    let mut map = vec![0usize; dim];
    let mut count = 0u64;
    for perm in (0..n).permutations(n) {
        // Basis relabeling: bit for qubit slot k comes from qubit perm[k].
        for (idx, slot) in map.iter_mut().enumerate() {
            let mut out = 0usize;
            for (k, &src) in perm.iter().enumerate() {
                let bit = (idx >> (n - 1 - src)) & 1;
                out |= bit << (n - 1 - k);
            }
            *slot = out;
        }
        for r in 0..dim {
            let mr = map[r];
            for c in 0..dim {
                acc[(mr, map[c])] += rho.m[(r, c)];
            }
        }
        count += 1;
    }
    let scaled = acc.scale(Complex64::new(1.0 / count as f64, 0.0));
    Ok(DensityOperator::trusted(n, scaled.hermitized()))
}

/// Rotates a ring index one step: the last qubit wraps around to the front.
pub fn rotate_ring_index(idx: usize, nbits: usize) -> usize {
    (idx >> 1) | ((idx & 1) << (nbits - 1))
}

/// Orbits of basis indices under cyclic qubit shifts, each orbit sorted
/// ascending, orbits ordered by their smallest member.
pub fn necklace_orbits(nbits: usize) -> Vec<Vec<usize>> {
    let dim = 1usize << nbits;
    let mut seen = vec![false; dim];
    let mut orbits = Vec::new();
    for start in 0..dim {
        if seen[start] {
            continue;
        }
        let mut orbit = Vec::new();
        let mut idx = start;
        loop {
            if !seen[idx] {
                seen[idx] = true;
                orbit.push(idx);
            }
            idx = rotate_ring_index(idx, nbits);
            if idx == start {
                break;
            }
        }
        orbit.sort_unstable();
        orbits.push(orbit);
    }
    orbits
}

/// Translation-invariant state of 2*half_n qubits on a ring: one amplitude
/// per shift orbit, each orbit's weight spread uniformly over its members.
/// `coeffs` must have one entry per orbit (see [`necklace_orbits`]).
pub fn ring_translation_state(
    half_n: usize,
    coeffs: &[Complex64],
) -> Result<PureState, QStateError> {
    let nbits = 2 * half_n;
    check_qubits(nbits)?;
    let orbits = necklace_orbits(nbits);
    if coeffs.len() != orbits.len() {
        return Err(QStateError::BadCoefficientCount { expected: orbits.len(), got: coeffs.len() });
    }
    let mut amps = vec![Complex64::ZERO; 1 << nbits];
    for (orbit, &c) in orbits.iter().zip(coeffs) {
        let w = c / Complex64::new((orbit.len() as f64).sqrt(), 0.0);
        for &idx in orbit {
            amps[idx] = w;
        }
    }
    PureState::normalized(nbits, amps)
}

fn check_qubits(n: usize) -> Result<(), QStateError> {
    if !(MIN_QUBITS..=MAX_QUBITS).contains(&n) {
        return Err(QStateError::BadQubitCount { n, min: MIN_QUBITS, max: MAX_QUBITS });
    }
    Ok(())
}

/// Bit positions (LSB-numbered) of 1-indexed qubits i < j; qubit 1 is the
/// most significant bit.
fn pair_bit_positions(n: usize, i: usize, j: usize) -> Result<(usize, usize), QStateError> {
    if i == 0 || j == 0 || i >= j || j > n {
        return Err(QStateError::BadPair { i, j, n });
    }
    Ok((n - i, n - j))
}

/// Distributes the bits of `z` over the positions not occupied by the pair.
fn spread_rest(z: usize, pi: usize, pj: usize) -> usize {
    let (hi, lo) = (pi.max(pj), pi.min(pj));
    // Insert a zero bit at `lo`, then at `hi`, low first so positions stay
    // valid.
    let low_mask = (1usize << lo) - 1;
    let mut v = (z & low_mask) | ((z & !low_mask) << 1);
    let high_mask = (1usize << hi) - 1;
    v = (v & high_mask) | ((v & !high_mask) << 1);
    v
}

/// Places the two bits of `ab` (qubit i bit first) at positions pi, pj.
fn bits_at(ab: usize, pi: usize, pj: usize) -> usize {
    ((ab >> 1) & 1) << pi | (ab & 1) << pj
}

const AXIS_X: usize = 0;
const AXIS_Y: usize = 1;
const AXIS_Z: usize = 2;

/// out = S_axis * v for the collective spin component.
fn apply_collective(axis: usize, n: usize, v: &[Complex64], out: &mut [Complex64]) {
    let half = Complex64::new(0.5, 0.0);
    match axis {
        AXIS_X => {
            for (idx, slot) in out.iter_mut().enumerate() {
                let mut acc = Complex64::ZERO;
                for p in 0..n {
                    acc += v[idx ^ (1 << p)];
                }
                *slot = acc * half;
            }
        }
        AXIS_Y => {
            // s_y sends |0> to -i/2 |1> and |1> to +i/2 |0>: the coefficient
            // seen at the target index depends on the target's own bit.
            for (idx, slot) in out.iter_mut().enumerate() {
                let mut acc = Complex64::ZERO;
                for p in 0..n {
                    let src = v[idx ^ (1 << p)];
                    if (idx >> p) & 1 == 1 {
                        acc += Complex64::new(src.im, -src.re); // -i * src
                    } else {
                        acc += Complex64::new(-src.im, src.re); // +i * src
                    }
                }
                *slot = acc * half;
            }
        }
        AXIS_Z => {
            for (idx, slot) in out.iter_mut().enumerate() {
                let ups = idx.count_ones() as f64;
                let weight = ups - n as f64 / 2.0;
                *slot = v[idx] * Complex64::new(weight, 0.0);
            }
        }
        _ => unreachable!(),
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// U applied to qubit at bit position p (one factor of the tensor product).
fn apply_single_qubit(u: &[Complex64; 4], p: usize, amps: &mut [Complex64]) {
    let mask = 1usize << p;
    for idx in 0..amps.len() {
        if idx & mask != 0 {
            continue;
        }
        let j = idx | mask;
        let (a, b) = (amps[idx], amps[j]);
        amps[idx] = u[0] * a + u[1] * b;
        amps[j] = u[2] * a + u[3] * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dicke_31_moments() {
        let st = dicke_state(3, 1).unwrap();
        let mom = st.moments();
        assert_abs_diff_eq!(mom.mean[2], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(mom.mean[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mom.mean[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mom.corr[0][0], 7.0 / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mom.corr[1][1], 7.0 / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mom.corr[2][2], 1.0 / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mom.total_spin_sq, 15.0 / 4.0, epsilon = 1e-12);
        assert!(mom.is_diagonal(1e-12));
    }

    #[test]
    fn ghz_moments() {
        let st = ghz_state(4).unwrap();
        let mom = st.moments();
        assert_abs_diff_eq!(mom.mean[2], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mom.corr[0][0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mom.corr[1][1], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mom.corr[2][2], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mom.total_spin_sq, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn ghz_pair_marginal_is_classical_mixture() {
        let st = ghz_state(4).unwrap();
        let m = st.pair_marginal(1, 2).unwrap();
        let want = ComplexMatrix::from_fn(4, 4, |i, j| {
            if i == j && (i == 0 || i == 3) {
                c(0.5, 0.0)
            } else {
                Complex64::ZERO
            }
        });
        assert!(m.matrix().max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn w_state_marginal_matches_known_form() {
        // Single-excitation Dicke state of 3 qubits: marginal has 1/3 on
        // |00><00|, and a 2/3 triplet block on (|01> + |10>)/sqrt(2).
        let st = dicke_state(3, 2).unwrap();
        let m = st.pair_marginal(1, 2).unwrap();
        let third = c(1.0 / 3.0, 0.0);
        let want = ComplexMatrix::from_rows(&[
            vec![third, Complex64::ZERO, Complex64::ZERO, Complex64::ZERO],
            vec![Complex64::ZERO, third, third, Complex64::ZERO],
            vec![Complex64::ZERO, third, third, Complex64::ZERO],
            vec![Complex64::ZERO; 4],
        ]);
        assert!(m.matrix().max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn pair_marginal_rejects_bad_pairs() {
        let st = QState::Pure(ghz_state(3).unwrap());
        assert!(partial_trace_pair(&st, 0, 2).is_err());
        assert!(partial_trace_pair(&st, 2, 2).is_err());
        assert!(partial_trace_pair(&st, 2, 1).is_err());
        assert!(partial_trace_pair(&st, 1, 4).is_err());
    }

    #[test]
    fn dicke_marginals_are_uniform() {
        for (n, k) in [(3, 1), (4, 2), (5, 1), (6, 3)] {
            let st = QState::Pure(dicke_state(n, k).unwrap());
            assert!(is_pair_marginal_uniform(&st, 1e-12).unwrap());
        }
    }

    #[test]
    fn product_state_with_distinct_sites_is_not_uniform() {
        // |0> x |0> x |+> has different marginals for (1,2) and (1,3).
        let h = SQRT_HALF;
        let mut amps = vec![Complex64::ZERO; 8];
        amps[0] = c(h, 0.0);
        amps[1] = c(h, 0.0);
        let st = QState::Pure(PureState::new(3, amps).unwrap());
        assert!(!is_pair_marginal_uniform(&st, 1e-9).unwrap());
    }

    #[test]
    fn density_moments_match_pure_moments() {
        let st = dicke_state(4, 1).unwrap();
        let pm = st.moments();
        let dm = st.density().moments();
        for a in 0..3 {
            assert_abs_diff_eq!(pm.mean[a], dm.mean[a], epsilon = 1e-10);
            for b in 0..3 {
                assert_abs_diff_eq!(pm.corr[a][b], dm.corr[a][b], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn density_pair_marginal_matches_pure() {
        let st = dicke_state(5, 2).unwrap();
        let a = st.pair_marginal(2, 4).unwrap();
        let b = st.density().pair_marginal(2, 4).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-12);
    }

    #[test]
    fn rotation_covariance_of_moments() {
        let st = dicke_state(4, 1).unwrap();
        let rot = Rotation3::from_axis_angle([1.0, -2.0, 0.5], 0.83);
        let rotated = st.rotated(&rot).unwrap();
        let before = st.moments();
        let after = rotated.moments();
        let want_mean = rot.apply_vec(before.mean);
        let want_corr = rot.apply_sym(&before.corr);
        for a in 0..3 {
            assert_abs_diff_eq!(after.mean[a], want_mean[a], epsilon = 1e-10);
            for b in 0..3 {
                assert_abs_diff_eq!(after.corr[a][b], want_corr[a][b], epsilon = 1e-10);
            }
        }
        assert_abs_diff_eq!(after.total_spin_sq, before.total_spin_sq, epsilon = 1e-10);
    }

    #[test]
    fn density_rotation_matches_pure_rotation() {
        let st = dicke_state(3, 1).unwrap();
        let rot = Rotation3::from_axis_angle([0.3, 1.0, -0.7], 1.21);
        let via_pure = st.rotated(&rot).unwrap().density();
        let via_density = st.density().rotated(&rot).unwrap();
        assert!(via_pure.matrix().max_abs_diff(via_density.matrix()) < 1e-11);
    }

    #[test]
    fn improper_rotation_rejected() {
        let refl = Rotation3::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]).unwrap();
        let st = ghz_state(3).unwrap();
        assert!(matches!(
            st.rotated(&refl),
            Err(QStateError::ImproperRotation { .. })
        ));
    }

    #[test]
    fn principal_axes_diagonal_canonical_is_identity() {
        let st = ghz_state(4).unwrap();
        let (rot, rotated) = principal_axes(&st.moments()).unwrap();
        assert!(rot.angle() < 1e-9);
        let s2 = rotated.second_moments();
        assert!(s2[2] >= s2[1] - 1e-12 && s2[1] >= s2[0] - 1e-12);
    }

    #[test]
    fn principal_axes_relabels_dicke_41() {
        // Second moments (5/2, 5/2, 1) must move the small value to the x
        // slot; the minimal proper rotation doing so has angle pi/2.
        let st = dicke_state(4, 1).unwrap();
        let (rot, rotated) = principal_axes(&st.moments()).unwrap();
        let s2 = rotated.second_moments();
        assert_abs_diff_eq!(s2[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(s2[1], 2.5, epsilon = 1e-10);
        assert_abs_diff_eq!(s2[2], 2.5, epsilon = 1e-10);
        assert!(rotated.is_diagonal(1e-10));
        assert!(rot.det() > 0.0);
        assert_abs_diff_eq!(rot.angle(), std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        // The mean spin (originally along z) now lies along a transverse
        // axis with unchanged length.
        let mean = rotated.mean;
        assert_abs_diff_eq!(mean[0].abs().max(mean[2].abs()), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn principal_axes_recovers_rotated_frame() {
        let st = dicke_state(5, 1).unwrap();
        let scramble = Rotation3::from_axis_angle([0.2, 0.9, -0.5], 0.77);
        let scrambled = st.rotated(&scramble).unwrap();
        let (_, rotated) = principal_axes(&scrambled.moments()).unwrap();
        assert!(rotated.is_diagonal(1e-9));
        let s2 = rotated.second_moments();
        let orig = st.moments().second_moments();
        let mut want = orig;
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for k in 0..3 {
            assert_abs_diff_eq!(s2[k], want[k], epsilon = 1e-9);
        }
    }

    #[test]
    fn twirl_fixes_dicke_and_mixes_products() {
        let st = dicke_state(3, 1).unwrap().density();
        let tw = permutation_twirl(&st).unwrap();
        assert!(tw.matrix().max_abs_diff(st.matrix()) < 1e-12);

        // |001><001| twirls to the uniform mixture over one-excitation
        // basis states.
        let mut amps = vec![Complex64::ZERO; 8];
        amps[1] = Complex64::ONE;
        let prod = PureState::new(3, amps).unwrap().density();
        let tw = permutation_twirl(&prod).unwrap();
        let third = c(1.0 / 3.0, 0.0);
        for idx in [1usize, 2, 4] {
            assert_abs_diff_eq!(tw.matrix()[(idx, idx)].re, third.re, epsilon = 1e-12);
        }
        assert!(tw.matrix()[(1, 2)].norm() < 1e-12);
    }

    #[test]
    fn twirl_output_is_transposition_invariant() {
        // A random-ish pure product state: twirled marginals must be equal
        // across all pairs.
        let mut amps = vec![Complex64::ZERO; 16];
        amps[0b0001] = c(0.6, 0.0);
        amps[0b0010] = c(0.0, 0.48);
        amps[0b1000] = c(-0.64, 0.0);
        let st = PureState::normalized(4, amps).unwrap().density();
        let tw = permutation_twirl(&st).unwrap();
        assert!(is_pair_marginal_uniform(&QState::Mixed(tw), 1e-12).unwrap());
    }

    #[test]
    fn twirl_rejects_large_n() {
        let st = ghz_state(9).unwrap().density();
        assert!(matches!(
            permutation_twirl(&st),
            Err(QStateError::TwirlTooLarge { .. })
        ));
    }

    #[test]
    fn ring_state_is_shift_invariant() {
        let orbits = necklace_orbits(6);
        let coeffs: Vec<Complex64> = (0..orbits.len())
            .map(|k| c(0.3 + 0.1 * k as f64, 0.05 * k as f64))
            .collect();
        let st = ring_translation_state(3, &coeffs).unwrap();
        let amps = st.amplitudes();
        for idx in 0..amps.len() {
            let shifted = rotate_ring_index(idx, 6);
            assert!((amps[idx] - amps[shifted]).norm() < 1e-12);
        }
    }

    #[test]
    fn ring_orbit_count_small_cases() {
        // Binary necklaces: 2 qubits -> 3, 4 qubits -> 6, 6 qubits -> 14.
        assert_eq!(necklace_orbits(2).len(), 3);
        assert_eq!(necklace_orbits(4).len(), 6);
        assert_eq!(necklace_orbits(6).len(), 14);
    }

    #[test]
    fn ring_state_rejects_wrong_coefficient_count() {
        let coeffs = vec![Complex64::ONE; 5];
        assert!(matches!(
            ring_translation_state(2, &coeffs),
            Err(QStateError::BadCoefficientCount { expected: 6, got: 5 })
        ));
    }

    #[test]
    fn dicke_rejects_bad_excitation() {
        assert!(matches!(
            dicke_state(3, 4),
            Err(QStateError::BadExcitation { .. })
        ));
    }

    #[test]
    fn pure_state_validation() {
        assert!(matches!(
            PureState::new(2, vec![Complex64::ONE; 3]),
            Err(QStateError::BadDimension { .. })
        ));
        assert!(matches!(
            PureState::new(2, vec![Complex64::ONE; 4]),
            Err(QStateError::NotNormalized { .. })
        ));
        assert!(matches!(
            PureState::normalized(2, vec![Complex64::ZERO; 4]),
            Err(QStateError::ZeroNorm)
        ));
    }

    #[test]
    fn binomial_small_table() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(12, 6), 924);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(3, 5), 0);
    }
}
