//! Strong pathwise approximation of scalar SDEs driven by fractional
//! Brownian motion with Hurst index between 1/4 and 1/2.
//!
//! The solution is represented as a deterministic flow composed with a
//! random ODE; the scheme replaces the flow by a closed-form piecewise
//! Taylor flow on a path-dependent partition and advances the ODE by a
//! derivative-corrected Euler rule. The library ships exact fBm samplers,
//! oracle reference solvers, the scheme itself, the constants of the error
//! analysis, and harnesses that verify the n^(-2(H-rho)) rate and the
//! supporting bounds empirically.

pub mod coeffs;
pub mod constants;
pub mod driver;
pub mod error;
pub mod fbm;
pub mod flow;
pub mod harness;
pub mod ode;
pub mod quad;
pub mod scheme;

pub use coeffs::{builtin_family, validate_bounds, CoefficientBounds, CoefficientPair, Family};
pub use constants::{compute_constants, Bound, ConstantSet};
pub use harness::{
    check_taylor_lemma, run_convergence, run_lemma_suite, ConvergenceConfig, ConvergenceReport,
    LemmaConfig, LemmaReport, PiecewiseC2, TaylorReport,
};
pub use driver::{
    g_l, h1_l, integrate_y_exact, integrate_y_l, step_scheme_y, step_scheme_y_dense,
    Provenance, Trajectory, TrajectoryKind,
};
pub use error::{Error, Result};
pub use fbm::{
    covariance, generate_cholesky, generate_circulant, path_stats, CholeskyFbm, CirculantFbm,
    FbmPath, GeneratorTag, PathStats,
};
pub use flow::{
    build_partition, solve_phi_reference, solve_phi_with_exponent, FlowPartition, PiecewiseFlow,
    Side,
};
pub use scheme::{
    solve_x_reference, solve_x_reference_on_path, solve_x_scheme, solve_x_scheme_on_path,
    sup_error, Generator, RunManifest, SchemeConfig, SolveOutput,
};
