//! Deterministic random draws shared by the optimizer, the verification
//! sweeps and the CLI.
//!
//! Reproducibility contract: every consumer derives its generator through
//! [`sample_stream`], so sample i of a run is a pure function of
//! (seed, i) regardless of thread count or evaluation order.

use crate::linalg::ComplexMatrix;
use crate::qstate::{dicke_state, DensityOperator, PureState};
use crate::symmetric_family::{f_a, f_s, FamilyParams, RegionPoint};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for the idx-th independent sample of a seeded run.
pub fn sample_stream(seed: u64, idx: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(idx);
    rng
}

/// Standard normal deviate (Box-Muller).
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Standard complex normal deviate (unit total variance).
pub fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

/// Trace-normalised G G^dagger for a square Ginibre matrix G: a full-rank
/// random density operator.
pub fn ginibre_density(n_qubits: usize, rng: &mut impl Rng) -> DensityOperator {
    let dim = 1usize << n_qubits;
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| complex_normal(rng));
    let mut m = g.mul(&g.adjoint()).hermitized();
    let tr = m.trace().re;
    m = m.scale(Complex64::new(1.0 / tr, 0.0));
    // Positive and unit trace by construction.
    DensityOperator::trusted(n_qubits, m)
}

/// Random state in the symmetric sector: normal coefficients over the
/// excitation-number basis.
pub fn random_symmetric_pure(n_qubits: usize, rng: &mut impl Rng) -> PureState {
    let dim = 1usize << n_qubits;
    let mut amps = vec![Complex64::ZERO; dim];
    for k in 0..=n_qubits {
        let c = complex_normal(rng);
        let basis = dicke_state(n_qubits, k).expect("valid excitation count");
        for (slot, &b) in amps.iter_mut().zip(basis.amplitudes()) {
            *slot += c * b;
        }
    }
    PureState::normalized(n_qubits, amps).expect("normal draw is nonzero")
}

/// Uniform draw from the physical parameter simplex: weights proportional
/// to exponential deviates, rejecting the (rare) draws whose implied second
/// moments are negative. Returned in canonical descending order.
pub fn draw_feasible_params(n: usize, rng: &mut impl Rng) -> FamilyParams {
    loop {
        let mut w = [0.0f64; 4];
        for v in w.iter_mut() {
            *v = -rng.random::<f64>().max(f64::MIN_POSITIVE).ln();
        }
        let total: f64 = w.iter().sum();
        let scale = n as f64 / total;
        let mut a = [w[0] * scale, w[1] * scale, w[2] * scale];
        a.sort_by(|p, q| q.partial_cmp(p).unwrap());
        if let Ok(params) = FamilyParams::from_a(n, a, w[3] * scale) {
            return params;
        }
    }
}

/// Point of the feasibility region with margin against both curved
/// constraints: f_A >= margin * A_x A_y A_z and f_S >= margin. Rejection
/// sampling in the bounding box, shrinking toward the origin when the
/// margin leaves little room.
pub fn draw_interior_point(
    params: &FamilyParams,
    rng: &mut impl Rng,
    margin: f64,
) -> RegionPoint {
    let a = params.a();
    let s2 = params.second_moments();
    let prod = a[0] * a[1] * a[2];
    let fa_floor = margin * prod.max(1e-300);
    let mut cap = [0.0f64; 3];
    for k in 0..3 {
        let from_fa = if a[k] > 1e-12 { prod / a[k] } else { f64::INFINITY };
        cap[k] = s2[k].min(from_fa);
    }
    let mut shrink = 1.0;
    for attempt in 0..2000 {
        if attempt % 200 == 199 {
            shrink *= 0.5;
        }
        let p = RegionPoint::new(
            rng.random::<f64>() * cap[0] * shrink,
            rng.random::<f64>() * cap[1] * shrink,
            rng.random::<f64>() * cap[2] * shrink,
        );
        if f_a(params, &p) >= fa_floor && f_s(params, &p) >= margin {
            return p;
        }
    }
    RegionPoint::origin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{is_pair_marginal_uniform, QState};
    use crate::symmetric_family::in_region_v;

    #[test]
    fn streams_are_reproducible_and_independent() {
        let mut a = sample_stream(7, 3);
        let mut b = sample_stream(7, 3);
        assert_eq!(a.random::<u64>(), b.random::<u64>());
        let mut c = sample_stream(7, 4);
        let mut d = sample_stream(8, 3);
        let x = sample_stream(7, 3).random::<u64>();
        assert_ne!(x, c.random::<u64>());
        assert_ne!(x, d.random::<u64>());
    }

    #[test]
    fn normal_moments_are_sane() {
        let mut rng = sample_stream(11, 0);
        let m = 20000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..m {
            let z = standard_normal(&mut rng);
            s1 += z;
            s2 += z * z;
        }
        let mean = s1 / m as f64;
        let var = s2 / m as f64 - mean * mean;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn ginibre_is_a_state() {
        let mut rng = sample_stream(3, 0);
        let rho = ginibre_density(3, &mut rng);
        let m = rho.matrix();
        assert!((m.trace().re - 1.0).abs() < 1e-12);
        assert!(m.hermiticity_deviation() < 1e-12);
    }

    #[test]
    fn symmetric_pure_has_uniform_marginals() {
        let mut rng = sample_stream(5, 2);
        for n in [3, 4, 5] {
            let st = random_symmetric_pure(n, &mut rng);
            assert!(is_pair_marginal_uniform(&QState::Pure(st), 1e-10).unwrap());
        }
    }

    #[test]
    fn drawn_params_are_canonical_and_sum_to_n() {
        let mut rng = sample_stream(1, 0);
        for n in [3usize, 5, 8] {
            for _ in 0..50 {
                let p = draw_feasible_params(n, &mut rng);
                assert!(p.is_canonical());
                let a = p.a();
                let sum = a[0] + a[1] + a[2] + p.a0();
                assert!((sum - n as f64).abs() < 1e-9);
                assert!(p.second_moments().iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn interior_points_respect_margin() {
        let mut rng = sample_stream(2, 0);
        for n in [3usize, 6] {
            for _ in 0..40 {
                let params = draw_feasible_params(n, &mut rng);
                let margin = 1e-3;
                let p = draw_interior_point(&params, &mut rng, margin);
                assert!(in_region_v(&params, &p, 1e-12));
                assert!(f_s(&params, &p) >= margin - 1e-12);
            }
        }
    }
}
