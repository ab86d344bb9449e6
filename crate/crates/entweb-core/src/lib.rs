//! Pairwise entanglement of permutation-uniform multiqubit states.
//!
//! The crate is organised around one object: the two-qubit reduced density
//! matrix shared by every pair of an N-qubit state whose pair marginals are
//! all equal. Such a marginal is fixed by a handful of collective spin
//! moments, and its Wootters concurrence has a closed form in those moments.
//! On top of that sit region geometry for the feasible moment set, exact
//! vertex formulas, gradient flows, case-split maximisers with brute-force
//! oracles, Monte Carlo bound checks, and small "entanglement web" searches.
//!
//! Modules build strictly bottom-up:
//!
//! * [`linalg`]: dense complex matrices, Hermitian eigensolver, PSD square
//!   root, real cubic roots. No external numerics dependency.
//! * [`qstate`]: pure states and density operators, Dicke states, pair
//!   partial traces, collective moments, principal axes, twirling.
//! * [`concurrence`]: spin flip and the Wootters concurrence of a two-qubit
//!   density matrix.
//! * [`symmetric_family`]: the moment-parametrised marginal family, its
//!   feasibility region, spectra, closed-form concurrence, gradients and
//!   region geometry.
//! * [`optimizer`]: case classification, inner maximisers over the moment
//!   region, the outer sweep over moment budgets, grid oracles and random
//!   state checks.
//! * [`webs`]: W-state and translation-invariant ring constructions.
//! * [`fileio`]: the QSV/QDM text formats for states and density matrices.
//! * [`sampling`]: seeded, stream-indexed random draws shared by tests,
//!   benchmarks and the CLI.
//! * [`parallel`]: a small deterministic fork-join helper.

pub mod concurrence;
pub mod fileio;
pub mod linalg;
pub mod optimizer;
pub mod parallel;
pub mod qstate;
pub mod sampling;
pub mod symmetric_family;
pub mod webs;

pub use num_complex::Complex64;

pub use concurrence::{spin_flip, wootters_concurrence, ConcurrenceError, ConcurrenceResult};
pub use fileio::{
    fmt_sig12, parse_state_text, qdm_string, qsv_string, read_state_file, write_qdm, write_qsv,
    FileError,
};
pub use linalg::{
    cubic_roots_real, hermitian_eig, psd_sqrt, ComplexMatrix, EigenDecomposition, LinalgError,
};
pub use qstate::{
    apply_spin_rotation, collective_moments, dicke_state, ghz_state, is_pair_marginal_uniform,
    partial_trace_pair, permutation_twirl, principal_axes, ring_translation_state,
    CollectiveMoments, DensityOperator, PairDensity, PureState, QState, QStateError, Rotation3,
};
pub use symmetric_family::{
    axis_roots, build_rho, closed_form_concurrence, directional_derivative, f_a, f_b, f_s,
    f_zero, flow_direction_vector, gamma_on_axis, grad_gamma, in_region_v, kappa, lambdas,
    lambdas_from_invariants, params_from_moments, region_geometry, Axis, AxisPermutation,
    FamilyError, FamilyParams, FlowDirection, RegionGeometry, RegionPoint, SignVector,
    SpectralData, VertexInfo,
};

pub use optimizer::{
    classify_case, draw_params_for_case, gamma_candidates, global_max, grid_oracle,
    lattice_spacing, max_concurrence_inner, max_gamma_inner, min_beta_numeric, min_f0_over_v,
    random_state_bound_check, singlet_branch_bound, CaseLabel, Certificate, GlobalResult,
    InnerResult, McResult, OptimizerError,
};

pub use webs::{
    ring_formula, ring_search, w_state_concurrence, RingSearchResult, WebError, WebKind,
    WebReport,
};
