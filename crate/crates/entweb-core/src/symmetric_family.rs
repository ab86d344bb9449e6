//! The family of two-qubit marginals shared by permutation-uniform N-qubit
//! states, parametrised by collective spin moments.
//!
//! In a frame where the second-moment matrix is diagonal, the common pair
//! marginal is fixed by four nonnegative numbers A_x, A_y, A_z, A_0 summing
//! to N (functions of the second moments and total spin) together with the
//! squared first moments (X, Y, Z) = (<S_x>^2, <S_y>^2, <S_z>^2) and their
//! signs. The marginal, written in the orthonormal basis
//!
//!   e1 = (|11> - |00>)/sqrt2,  e2 = (|11> + |00>)/sqrt2,
//!   e3 = (|01> + |10>)/sqrt2,  e4 = (|10> - |01>)/sqrt2,
//!
//! is block diagonal: a 3x3 block T/N over (e1, e2, e3) carrying the A_mu
//! and the mean spin, plus the singlet weight A_0/N. The spin flip acts on
//! the block as conjugation with a sign flip of e2, so the Wootters lambdas
//! of the marginal are the three singular-type values of the block plus
//! A_0/N, and everything (concurrence, feasibility, geometry, gradients)
//! reduces to explicit functions of (A, X, Y, Z).

use crate::linalg::{cubic_roots_real, hermitian_eig, ComplexMatrix, LinalgError};
use crate::qstate::{CollectiveMoments, PairDensity, QStateError};
use num_complex::Complex64;
use thiserror::Error;

/// Absolute threshold below which the spectral gap product makes the
/// gradient of gamma meaningless.
pub const TOL_KAPPA: f64 = 1e-10;

const TOL_REGION: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("invalid family parameters: {0}")]
    InvalidParams(String),
    #[error("point is infeasible for these parameters: {0}")]
    InfeasiblePoint(String),
    #[error("second-moment matrix is not diagonal (off-diagonal {deviation:.3e})")]
    NonDiagonalMoments { deviation: f64 },
    #[error("moments are inconsistent with the family: {0}")]
    InconsistentMoments(String),
    #[error("gamma is not differentiable here (spectral gap product {kappa:.3e})")]
    GradientUndefined { kappa: f64 },
    #[error("axis root discriminant {value:.3e} is negative beyond tolerance")]
    NegativeDiscriminant { value: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    QState(#[from] QStateError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The other two axes, in cyclic order (x -> y,z; y -> z,x; z -> x,y).
    pub fn others(self) -> (usize, usize) {
        match self {
            Axis::X => (1, 2),
            Axis::Y => (2, 0),
            Axis::Z => (0, 1),
        }
    }
}

/// Squared first moments (X, Y, Z); coordinates of a point of the
/// feasibility region. Geometry code also evaluates the region functions at
/// points outside the physical octant, so coordinates are unconstrained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegionPoint {
    pub coords: [f64; 3],
}

impl RegionPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { coords: [x, y, z] }
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    pub fn z(&self) -> f64 {
        self.coords[2]
    }

    pub fn origin() -> Self {
        Self { coords: [0.0; 3] }
    }
}

/// Signs of the first moments, +1 or -1 per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignVector(pub [f64; 3]);

impl SignVector {
    pub fn positive() -> Self {
        Self([1.0; 3])
    }

    pub fn from_means(means: [f64; 3]) -> Self {
        Self(means.map(|m| if m < 0.0 { -1.0 } else { 1.0 }))
    }

    /// Signed means recovered from squared moments.
    pub fn means(&self, point: &RegionPoint) -> [f64; 3] {
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = self.0[k] * point.coords[k].max(0.0).sqrt();
        }
        out
    }
}

/// Relabeling of the coordinate axes; `to_original[k]` is the original axis
/// occupying canonical slot k.
#[derive(Clone, Copy, Debug)]
pub struct AxisPermutation {
    pub to_original: [usize; 3],
}

impl AxisPermutation {
    pub fn identity() -> Self {
        Self { to_original: [0, 1, 2] }
    }

    pub fn permute(&self, v: [f64; 3]) -> [f64; 3] {
        [v[self.to_original[0]], v[self.to_original[1]], v[self.to_original[2]]]
    }

    pub fn unpermute(&self, v: [f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[self.to_original[k]] = v[k];
        }
        out
    }

    pub fn point_to_canonical(&self, p: &RegionPoint) -> RegionPoint {
        RegionPoint { coords: self.permute(p.coords) }
    }

    pub fn point_to_original(&self, p: &RegionPoint) -> RegionPoint {
        RegionPoint { coords: self.unpermute(p.coords) }
    }
}

/// The diagonal-frame family parameters (N; A_x, A_y, A_z, A_0).
#[derive(Clone, Copy, Debug)]
pub struct FamilyParams {
    n: usize,
    a: [f64; 3],
    a0: f64,
}

impl FamilyParams {
    /// Validates nonnegativity (clamping rounding-level violations), the sum
    /// rule A_x + A_y + A_z + A_0 = N and physicality of the implied second
    /// moments.
    pub fn from_a(n: usize, a: [f64; 3], a0: f64) -> Result<Self, FamilyError> {
        if n < 2 {
            return Err(FamilyError::InvalidParams(format!("n = {n} is below 2")));
        }
        let mut a = a;
        for v in a.iter_mut().chain(std::iter::once(&mut { a0 })) {
            if *v < -1e-9 {
                return Err(FamilyError::InvalidParams(format!("negative weight {v}")));
            }
        }
        for v in a.iter_mut() {
            *v = v.max(0.0);
        }
        if a0 < -1e-9 {
            return Err(FamilyError::InvalidParams(format!("negative singlet weight {a0}")));
        }
        let a0 = a0.max(0.0);
        let sum = a[0] + a[1] + a[2] + a0;
        if (sum - n as f64).abs() > 1e-8 * (n as f64) {
            return Err(FamilyError::InvalidParams(format!(
                "weights sum to {sum}, expected {n}"
            )));
        }
        let params = Self { n, a, a0 };
        for (k, s2) in params.second_moments_raw().into_iter().enumerate() {
            if s2 < -1e-9 * (n * n) as f64 {
                return Err(FamilyError::InvalidParams(format!(
                    "axis {k} implies negative squared moment {s2}"
                )));
            }
        }
        Ok(params)
    }

    /// Parameters of the single-excitation symmetric state: weight 2 on one
    /// axis, (N-2)/2 on the others, no singlet component. Stored in
    /// canonical (descending) order.
    pub fn w_state(n: usize) -> Result<Self, FamilyError> {
        if n < 3 {
            return Err(FamilyError::InvalidParams(format!("n = {n} is below 3")));
        }
        let h = (n as f64 - 2.0) / 2.0;
        let mut a = [2.0, h, h];
        a.sort_by(|p, q| q.partial_cmp(p).unwrap());
        Self::from_a(n, a, 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> [f64; 3] {
        self.a
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    fn second_moments_raw(&self) -> [f64; 3] {
        let nf = self.n as f64;
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = (nf * nf - 2.0 * (nf - 1.0) * (self.a[k] + self.a0)) / 4.0;
        }
        out
    }

    /// Squared collective means ceiling per axis: S_mu^2.
    pub fn second_moments(&self) -> [f64; 3] {
        self.second_moments_raw().map(|v| v.max(0.0))
    }

    pub fn total_spin_sq(&self) -> f64 {
        let nf = self.n as f64;
        (nf * (nf + 2.0) - 4.0 * (nf - 1.0) * self.a0) / 4.0
    }

    /// B_mu = A_x + A_y + A_z - 2 A_mu.
    pub fn b(&self) -> [f64; 3] {
        let s = self.a[0] + self.a[1] + self.a[2];
        [s - 2.0 * self.a[0], s - 2.0 * self.a[1], s - 2.0 * self.a[2]]
    }

    /// gamma_m = N/(N-1) - A_0, the value of gamma along the inner edge of
    /// the second-moment plane.
    pub fn gamma_m(&self) -> f64 {
        let nf = self.n as f64;
        nf / (nf - 1.0) - self.a0
    }

    /// Canonical frame: S_z^2 >= S_y^2 >= S_x^2, equivalently A_x >= A_y >=
    /// A_z.
    pub fn is_canonical(&self) -> bool {
        self.a[0] >= self.a[1] && self.a[1] >= self.a[2]
    }

    /// Relabels axes into the canonical frame; ties keep the original order.
    pub fn canonicalized(&self) -> (Self, AxisPermutation) {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&p, &q| {
            self.a[q].partial_cmp(&self.a[p]).unwrap().then(p.cmp(&q))
        });
        let perm = AxisPermutation { to_original: idx };
        let params = Self { n: self.n, a: perm.permute(self.a), a0: self.a0 };
        (params, perm)
    }
}

/// Sorted lambda triple of the marginal's flip block, with its sum and
/// alternating sum.
#[derive(Clone, Copy, Debug)]
pub struct SpectralData {
    /// Descending: lambdas[0] >= lambdas[1] >= lambdas[2] >= 0.
    pub lambdas: [f64; 3],
    /// beta = l1 + l2 + l3.
    pub beta: f64,
    /// gamma = l1 - l2 - l3.
    pub gamma: f64,
}

impl SpectralData {
    fn from_sorted(lambdas: [f64; 3]) -> Self {
        debug_assert!(lambdas[0] >= lambdas[1] && lambdas[1] >= lambdas[2]);
        Self {
            lambdas,
            beta: lambdas[0] + lambdas[1] + lambdas[2],
            gamma: lambdas[0] - lambdas[1] - lambdas[2],
        }
    }
}

/// Extracts (params, point, signs) from moments whose second-moment matrix
/// is already diagonal (use [`crate::qstate::principal_axes`] first
/// otherwise).
pub fn params_from_moments(
    moments: &CollectiveMoments,
) -> Result<(FamilyParams, RegionPoint, SignVector), FamilyError> {
    let scale = moments.second_moments().iter().fold(1.0_f64, |a, &v| a.max(v.abs()));
    let dev = [
        moments.corr[0][1].abs(),
        moments.corr[0][2].abs(),
        moments.corr[1][2].abs(),
    ]
    .into_iter()
    .fold(0.0_f64, f64::max);
    if dev > 1e-8 * scale {
        return Err(FamilyError::NonDiagonalMoments { deviation: dev });
    }
    let n = moments.n;
    let nf = n as f64;
    let s2 = moments.second_moments();
    let a0 = (nf * (nf + 2.0) - 4.0 * moments.total_spin_sq) / (4.0 * (nf - 1.0));
    let mut a = [0.0; 3];
    for k in 0..3 {
        a[k] = (nf * nf - 4.0 * s2[k]) / (2.0 * (nf - 1.0)) - a0;
        if a[k] < -1e-8 {
            return Err(FamilyError::InconsistentMoments(format!(
                "axis {k} weight {} is negative",
                a[k]
            )));
        }
        a[k] = a[k].max(0.0);
    }
    let a0 = if a0 < -1e-8 {
        return Err(FamilyError::InconsistentMoments(format!(
            "singlet weight {a0} is negative"
        )));
    } else {
        a0.max(0.0)
    };
    let params = FamilyParams::from_a(n, a, a0)?;
    let point = RegionPoint::new(
        moments.mean[0] * moments.mean[0],
        moments.mean[1] * moments.mean[1],
        moments.mean[2] * moments.mean[2],
    );
    Ok((params, point, SignVector::from_means(moments.mean)))
}

/// The N-scaled flip block (e1, e2, e3) of the marginal.
fn triplet_block(params: &FamilyParams, means: [f64; 3]) -> ComplexMatrix {
    let a = params.a;
    let (mx, my, mz) = (means[0], means[1], means[2]);
    let c = |re: f64| Complex64::new(re, 0.0);
    ComplexMatrix::from_rows(&[
        vec![c(a[0]), c(mz), Complex64::new(0.0, -my)],
        vec![c(mz), c(a[1]), c(mx)],
        vec![Complex64::new(0.0, my), c(mx), c(a[2])],
    ])
}

/// Spin flip of the block: conjugate entries, sign-flip the e2 row/column.
fn flipped_block(t: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(3, 3, |i, j| {
        let sign = if (i == 1) ^ (j == 1) { -1.0 } else { 1.0 };
        t[(i, j)].conj() * Complex64::new(sign, 0.0)
    })
}

/// Builds the physical 4x4 marginal in the computational basis from family
/// data. Errors when the point is infeasible (the matrix fails positivity).
pub fn build_rho(
    params: &FamilyParams,
    point: &RegionPoint,
    signs: &SignVector,
) -> Result<PairDensity, FamilyError> {
    for (k, &c) in point.coords.iter().enumerate() {
        if c < -1e-9 {
            return Err(FamilyError::InfeasiblePoint(format!(
                "coordinate {k} of the point is negative ({c})"
            )));
        }
    }
    let n = params.n as f64;
    let means = signs.means(point);
    let t = triplet_block(params, means);
    let inv_n = Complex64::new(1.0 / n, 0.0);

    // Bell-like basis vectors as columns in the computational basis.
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let q = ComplexMatrix::from_fn(4, 4, |r, c| {
        let v = match (r, c) {
            (0, 0) => -h,
            (3, 0) => h,
            (0, 1) | (3, 1) => h,
            (1, 2) | (2, 2) => h,
            (1, 3) => -h,
            (2, 3) => h,
            _ => 0.0,
        };
        Complex64::new(v, 0.0)
    });
    let mut bell = ComplexMatrix::zeros(4, 4);
    for i in 0..3 {
        for j in 0..3 {
            bell[(i, j)] = t[(i, j)] * inv_n;
        }
    }
    bell[(3, 3)] = Complex64::new(params.a0, 0.0) * inv_n;
    let comp = q.mul(&bell).mul(&q.adjoint());
    PairDensity::new(comp.hermitized()).map_err(|e| match e {
        QStateError::NotPsd { eig } => {
            FamilyError::InfeasiblePoint(format!("negative marginal eigenvalue {eig:.3e}"))
        }
        other => FamilyError::QState(other),
    })
}

/// f_A = A_x A_y A_z - A_x X - A_y Y - A_z Z; equals det of the flip block
/// and the product l1 l2 l3 inside the region.
pub fn f_a(params: &FamilyParams, point: &RegionPoint) -> f64 {
    let a = params.a;
    let [x, y, z] = point.coords;
    a[0] * a[1] * a[2] - a[0] * x - a[1] * y - a[2] * z
}

/// f_S = 1 - X/S_x^2 - Y/S_y^2 - Z/S_z^2, the second-moment cap. A
/// vanishing S_mu^2 forces the corresponding coordinate to zero; points
/// violating that are reported as negative infinity.
pub fn f_s(params: &FamilyParams, point: &RegionPoint) -> f64 {
    let s2 = params.second_moments();
    let mut acc = 1.0;
    for k in 0..3 {
        if s2[k] <= 1e-14 {
            if point.coords[k] > 1e-12 {
                return f64::NEG_INFINITY;
            }
        } else {
            acc -= point.coords[k] / s2[k];
        }
    }
    acc
}

/// f_0 = A_x^2 + A_y^2 + A_z^2 - 2(X + Y + Z) = l1^2 + l2^2 + l3^2.
pub fn f_zero(params: &FamilyParams, point: &RegionPoint) -> f64 {
    let a = params.a;
    let [x, y, z] = point.coords;
    a[0] * a[0] + a[1] * a[1] + a[2] * a[2] - 2.0 * (x + y + z)
}

/// The division-free quartic symmetric function
/// f_B = -B_x B_y B_z (B_x + B_y + B_z) + 4 B_y B_z X + 4 B_x B_z Y
///       + 4 B_x B_y Z
/// which factorises over the lambdas as
/// beta gamma (l1 - l2 + l3)(l1 + l2 - l3).
pub fn f_b(params: &FamilyParams, point: &RegionPoint) -> f64 {
    let b = params.b();
    let [x, y, z] = point.coords;
    let sum = b[0] + b[1] + b[2];
    -b[0] * b[1] * b[2] * sum
        + 4.0 * (b[1] * b[2] * x + b[0] * b[2] * y + b[0] * b[1] * z)
}

/// Membership in the feasibility region V = {X,Y,Z >= 0, f_A >= 0, f_S >= 0}
/// within an absolute tolerance scaled by the natural size of each
/// constraint.
///
/// The pairwise caps X <= A_y A_z (and cyclic) are the 2x2 minors of the
/// flip block. For positive weights they follow from f_A >= 0 (the
/// determinant stays nonnegative on the segment from the origin, so no
/// eigenvalue can cross), but on zero-weight boundaries f_A degenerates
/// and the minors carry the whole constraint; checking them makes the
/// predicate match block positivity in every case.
pub fn in_region_v(params: &FamilyParams, point: &RegionPoint, tol: f64) -> bool {
    let a = params.a;
    let coord_ok = point.coords.iter().all(|&c| c >= -tol);
    let fa_scale = (a[0] * a[1] * a[2]).abs().max(1.0);
    let minors_ok = (0..3).all(|k| {
        let cap = a[(k + 1) % 3] * a[(k + 2) % 3];
        point.coords[k] <= cap + tol * cap.max(1.0)
    });
    coord_ok
        && minors_ok
        && f_a(params, point) >= -tol * fa_scale
        && f_s(params, point) >= -tol
}

fn sqrt_clipped(v: f64, tol: f64) -> Result<f64, FamilyError> {
    if v < -tol {
        return Err(FamilyError::InfeasiblePoint(format!(
            "squared spectral value {v:.3e} is negative"
        )));
    }
    Ok(v.max(0.0).sqrt())
}

/// Lambda triple through the matrix route: the Hermitian product
/// sqrt(T) T_tilde sqrt(T) of the N-scaled flip block.
///
/// Points admitted by [`in_region_v`] at tolerances up to ~1e-9 sit on the
/// far side of the boundary by that much, and det T = f_A, so the smallest
/// block eigenvalue can dip to -(f_A slack)/(product of the other two):
/// corner conditioning amplifies a 1e-9 membership slack well past 1e-8.
/// The square root therefore clamps small negative values to zero (the PSD
/// projection) and only clearly negative spectra, which signal a caller
/// logic error rather than boundary rounding, are rejected. The flip keeps
/// the exact block: a congruence preserves its inertia, so an exactly
/// vanishing product eigenvalue stays exact instead of inheriting the
/// sqrt-amplified decomposition residual.
///
/// The final square root is ill conditioned at zero: the eigensolver leaves
/// the product's vanishing eigenvalue at ~eps * |T|^2, which the root
/// inflates to sqrt(eps) * |T|. Since det(sqrt(T) T_tilde sqrt(T)) equals
/// (det T)^2 = f_A^2, a smallest root below its rounding allowance is
/// replaced by |f_A| / (l1 l2), which carries only relative error and is
/// exactly zero on the f_A plane.
pub fn lambdas(params: &FamilyParams, point: &RegionPoint) -> Result<SpectralData, FamilyError> {
    // Project rounding-level overshoot of the pairwise caps back onto the
    // box. Means are square roots of the coordinates, so a cap overshoot
    // of 1e-10 already moves a block entry by 1e-5; at a corner where two
    // eigenvalues vanish that splits them by the same amount, which no
    // spectral tolerance can tell apart from a real violation. Genuine
    // violations (beyond the allowance) are left for the spectral check.
    let mut boxed = *point;
    for k in 0..3 {
        let cap = params.a[(k + 1) % 3] * params.a[(k + 2) % 3];
        let c = boxed.coords[k];
        if c > cap && c <= cap + 1e-6 * cap.max(1.0) {
            boxed.coords[k] = cap;
        }
    }
    let means = SignVector::positive().means(&boxed);
    let t = triplet_block(params, means);
    let eig_t = hermitian_eig(&t, 1e-10)?;
    let wscale = eig_t.eigenvalues.iter().fold(1.0f64, |m, &w| m.max(w.abs()));
    if let Some(&w) = eig_t.eigenvalues.iter().find(|&&w| w < -1e-6 * wscale) {
        return Err(FamilyError::InfeasiblePoint(format!(
            "flip block has negative eigenvalue {w:.3e}"
        )));
    }
    let v = &eig_t.eigenvectors;
    let vd = ComplexMatrix::from_fn(3, 3, |i, j| {
        v[(i, j)] * eig_t.eigenvalues[j].max(0.0).sqrt()
    });
    let sq = vd.mul(&v.adjoint()).hermitized();
    let m = sq.mul(&flipped_block(&t)).mul(&sq).hermitized();
    let eig = hermitian_eig(&m, 1e-10)?;
    let scale = eig.eigenvalues[0].abs().max(1.0);
    // The flip shares the block's spectrum, so the clamped negativity
    // contaminates the product by at most |min eigenvalue| * lambda_max.
    let negt = eig_t.eigenvalues.iter().fold(0.0f64, |m, &w| m.max(-w));
    let leak = 2.0 * negt * eig_t.eigenvalues[0].max(0.0);
    let mut ls = [0.0; 3];
    for (slot, &w) in ls.iter_mut().zip(&eig.eigenvalues) {
        *slot = sqrt_clipped(w, 1e-9 * scale + leak)?;
    }
    ls.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let floor = (1e-9 * scale + leak).max(0.0).sqrt();
    if ls[2] <= floor && ls[1] > floor {
        let det_l = f_a(params, &boxed).abs() / (ls[0] * ls[1]);
        if det_l <= floor {
            ls[2] = det_l;
        }
    }
    Ok(SpectralData::from_sorted(ls))
}

/// Lambda triple through the invariant route: the squared lambdas are the
/// roots of t^3 - f_0 t^2 + ((f_0^2 - f_B)/4) t - f_A^2.
///
/// Accuracy caveat: a coefficient-level rounding error eps spreads to
/// sqrt(eps) in a double root of the cubic and to eps^(1/4) in the lambda
/// when that double root sits at zero (which happens exactly on the f_A
/// boundary with a repeated vanishing lambda). [`lambdas`] is the accurate
/// reference there; this route is the cheap path for scans that only need
/// gamma to ~1e-4 near such points.
pub fn lambdas_from_invariants(
    params: &FamilyParams,
    point: &RegionPoint,
) -> Result<SpectralData, FamilyError> {
    let f0 = f_zero(params, point);
    let fb = f_b(params, point);
    let fa = f_a(params, point);
    let roots = cubic_roots_real(-f0, (f0 * f0 - fb) / 4.0, -(fa * fa))?;
    let scale = roots[0].abs().max(1.0);
    let mut ls = [0.0; 3];
    for (slot, &u) in ls.iter_mut().zip(&roots) {
        *slot = sqrt_clipped(u, 1e-8 * scale)?;
    }
    ls.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(SpectralData::from_sorted(ls))
}

/// Concurrence of the family marginal: max(gamma - A_0, A_0 - beta, 0)/N.
pub fn closed_form_concurrence(
    params: &FamilyParams,
    point: &RegionPoint,
) -> Result<f64, FamilyError> {
    let s = lambdas(params, point)?;
    let n = params.n as f64;
    Ok(((s.gamma - params.a0) / n).max((params.a0 - s.beta) / n).max(0.0))
}

/// kappa = 2 (l1 - l2)(l1 - l3)(l2 + l3), the spectral gap product in the
/// gradient denominators.
pub fn kappa(spectral: &SpectralData) -> f64 {
    let [l1, l2, l3] = spectral.lambdas;
    2.0 * (l1 - l2) * (l1 - l3) * (l2 + l3)
}

/// Gradient of gamma in (X, Y, Z):
/// d gamma / d X = (gamma + B_y)(gamma + B_z)/kappa, cyclically.
pub fn grad_gamma(params: &FamilyParams, point: &RegionPoint) -> Result<[f64; 3], FamilyError> {
    let s = lambdas(params, point)?;
    let k = kappa(&s);
    if k.abs() <= TOL_KAPPA {
        return Err(FamilyError::GradientUndefined { kappa: k });
    }
    let b = params.b();
    let g = s.gamma;
    Ok([
        (g + b[1]) * (g + b[2]) / k,
        (g + b[2]) * (g + b[0]) / k,
        (g + b[0]) * (g + b[1]) / k,
    ])
}

/// Edge directions of the region's two boundary planes: Q directions join
/// axis intercepts of the f_A plane, P directions join axis intercepts of
/// the f_S plane. Named source-to-destination, e.g. Qyx runs from the
/// y-intercept toward the x-intercept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowDirection {
    Qyx,
    Qzx,
    Qyz,
    Pxy,
    Pxz,
    Pyz,
}

impl FlowDirection {
    pub const ALL: [FlowDirection; 6] = [
        FlowDirection::Qyx,
        FlowDirection::Qzx,
        FlowDirection::Qyz,
        FlowDirection::Pxy,
        FlowDirection::Pxz,
        FlowDirection::Pyz,
    ];
}

/// The unnormalised direction vector of a flow (difference of the two plane
/// intercepts it joins).
pub fn flow_direction_vector(params: &FamilyParams, dir: FlowDirection) -> [f64; 3] {
    let a = params.a;
    let s2 = params.second_moments();
    match dir {
        FlowDirection::Qyx => [a[1] * a[2], -a[2] * a[0], 0.0],
        FlowDirection::Qzx => [a[1] * a[2], 0.0, -a[0] * a[1]],
        FlowDirection::Qyz => [0.0, -a[2] * a[0], a[0] * a[1]],
        FlowDirection::Pxy => [-s2[0], s2[1], 0.0],
        FlowDirection::Pxz => [-s2[0], 0.0, s2[2]],
        FlowDirection::Pyz => [0.0, -s2[1], s2[2]],
    }
}

/// Closed-form directional derivative of gamma along a flow direction.
/// Algebraically equal to flow_direction_vector . grad_gamma wherever the
/// gradient exists.
pub fn directional_derivative(
    params: &FamilyParams,
    point: &RegionPoint,
    dir: FlowDirection,
) -> Result<f64, FamilyError> {
    let s = lambdas(params, point)?;
    let k = kappa(&s);
    if k.abs() <= TOL_KAPPA {
        return Err(FamilyError::GradientUndefined { kappa: k });
    }
    let a = params.a;
    let b = params.b();
    let s2 = params.second_moments();
    let g = s.gamma;
    let gm = params.gamma_m();
    let v = match dir {
        FlowDirection::Qyx => a[2] * (b[2] * b[2] - g * g) * (a[0] - a[1]),
        FlowDirection::Qzx => a[1] * (b[1] * b[1] - g * g) * (a[0] - a[2]),
        FlowDirection::Qyz => a[0] * (g * g - b[0] * b[0]) * (a[1] - a[2]),
        FlowDirection::Pxy => (g + b[2]) * (g - gm) * (s2[1] - s2[0]),
        FlowDirection::Pxz => (g + b[1]) * (g - gm) * (s2[2] - s2[0]),
        FlowDirection::Pyz => (g + b[0]) * (g - gm) * (s2[2] - s2[1]),
    };
    Ok(v / k)
}

/// Lambda triple at an on-axis point with signed mean `mean`:
/// {A_axis, (sqrt(D) + delta)/2, (sqrt(D) - delta)/2} with
/// D = (A_i + A_j)^2 - 4 mean^2 and delta = A_i - A_j over the other two
/// axes (i, j) in cyclic order. Returned unsorted in that conventional
/// order.
pub fn axis_roots(params: &FamilyParams, axis: Axis, mean: f64) -> Result<[f64; 3], FamilyError> {
    let a = params.a;
    let (i, j) = axis.others();
    let sum = a[i] + a[j];
    let disc = sum * sum - 4.0 * mean * mean;
    let scale = (sum * sum).max(1.0);
    if disc < -1e-9 * scale {
        return Err(FamilyError::NegativeDiscriminant { value: disc });
    }
    let root = disc.max(0.0).sqrt();
    let delta = a[i] - a[j];
    Ok([a[axis.index()], (root + delta) / 2.0, (root - delta) / 2.0])
}

/// gamma at an on-axis point, from the sorted axis roots.
pub fn gamma_on_axis(params: &FamilyParams, axis: Axis, mean: f64) -> Result<f64, FamilyError> {
    let mut roots = axis_roots(params, axis, mean)?;
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(roots[0] - roots[1] - roots[2])
}

/// A named point of the region geometry with the data attached to it.
#[derive(Clone, Copy, Debug)]
pub struct VertexInfo {
    pub point: RegionPoint,
    /// gamma at the vertex, when the axis roots are real there.
    pub gamma: Option<f64>,
    /// Whether the vertex satisfies f_A >= 0 and f_B >= 0.
    pub in_w: bool,
}

/// Axis intercepts and special points of the region for fixed parameters.
#[derive(Clone, Debug)]
pub struct RegionGeometry {
    /// Intercepts of the f_A plane: (A_y A_z, 0, 0) and cyclic.
    pub p_a: [VertexInfo; 3],
    /// Intercepts of the f_S plane: (S_x^2, 0, 0) and cyclic.
    pub p_s: [VertexInfo; 3],
    /// Axis intercepts of the f_B surface, (B_mu (A_x+A_y+A_z)/4) on each
    /// axis; may lie outside the physical octant.
    pub p_b: [RegionPoint; 3],
    /// False where the f_B surface degenerates along that axis.
    pub p_b_defined: [bool; 3],
    /// Interior meeting point of the gamma plateau edges; defined only for
    /// strictly ordered positive weights A_x > A_y > A_z > 0.
    pub p0: Option<RegionPoint>,
    /// Crossing of the f_A and f_S traces in the X-Z coordinate plane, when
    /// it lies in the closed quadrant.
    pub p1: Option<RegionPoint>,
    /// gamma_m = N/(N-1) - A_0.
    pub gamma_m: f64,
}

pub fn region_geometry(params: &FamilyParams) -> RegionGeometry {
    let a = params.a;
    let s2 = params.second_moments();
    let b = params.b();
    let sum_a = a[0] + a[1] + a[2];

    let vertex = |axis: Axis, coord: f64| -> VertexInfo {
        let mut coords = [0.0; 3];
        coords[axis.index()] = coord;
        let point = RegionPoint { coords };
        let gamma = gamma_on_axis(params, axis, coord.max(0.0).sqrt()).ok();
        let fa_scale = (a[0] * a[1] * a[2]).abs().max(1.0);
        let fb_scale = (b[0] * b[1] * b[2] * sum_a).abs().max(1.0);
        let in_w = f_a(params, &point) >= -TOL_REGION * fa_scale
            && f_b(params, &point) >= -TOL_REGION * fb_scale;
        VertexInfo { point, gamma, in_w }
    };

    let p_a = [
        vertex(Axis::X, a[1] * a[2]),
        vertex(Axis::Y, a[2] * a[0]),
        vertex(Axis::Z, a[0] * a[1]),
    ];
    let p_s = [
        vertex(Axis::X, s2[0]),
        vertex(Axis::Y, s2[1]),
        vertex(Axis::Z, s2[2]),
    ];

    let mut p_b = [RegionPoint::origin(); 3];
    let mut p_b_defined = [false; 3];
    for k in 0..3 {
        let (i, j) = match k {
            0 => (1, 2),
            1 => (2, 0),
            _ => (0, 1),
        };
        p_b_defined[k] = (b[i] * b[j]).abs() > 1e-12;
        let mut coords = [0.0; 3];
        coords[k] = b[k] * sum_a / 4.0;
        p_b[k] = RegionPoint { coords };
    }

    let strict = a[0] > a[1] + 1e-9 && a[1] > a[2] + 1e-9 && a[2] > 1e-9;
    let p0 = strict.then(|| {
        let denom = a[0] - a[2];
        RegionPoint::new(
            a[2] * a[2] * (a[0] - a[1]) / denom,
            0.0,
            a[0] * a[0] * (a[1] - a[2]) / denom,
        )
    });

    let p1 = p1_crossing(params, &a, &s2);

    RegionGeometry { p_a, p_s, p_b, p_b_defined, p0, p1, gamma_m: params.gamma_m() }
}

/// Intersection of {f_A = 0} and {f_S = 0} within the Y = 0 plane, if it
/// exists in the closed quadrant: A_x X + A_z Z = A_x A_y A_z and
/// X/S_x^2 + Z/S_z^2 = 1.
fn p1_crossing(params: &FamilyParams, a: &[f64; 3], s2: &[f64; 3]) -> Option<RegionPoint> {
    if s2[0] <= 1e-12 || s2[2] <= 1e-12 || a[0] <= 1e-12 {
        return None;
    }
    let denom = a[2] * s2[2] - a[0] * s2[0];
    if denom.abs() < 1e-12 * (a[0] * s2[0]).abs().max(1.0) {
        return None;
    }
    let z = (a[0] * a[1] * a[2] - a[0] * s2[0]) * s2[2] / denom;
    let x = s2[0] * (1.0 - z / s2[2]);
    let tol = 1e-9 * s2[2].max(1.0);
    if z < -tol || x < -tol {
        return None;
    }
    let _ = params;
    Some(RegionPoint::new(x.max(0.0), 0.0, z.max(0.0)))
}
