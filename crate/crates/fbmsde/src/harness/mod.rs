//! Verification harnesses: empirical convergence order against the proven
//! rate, bound checks for the supporting estimates, and the piecewise-Taylor
//! remainder inequality.

mod convergence;
mod lemmas;
mod taylor;

pub use convergence::{
    fit_order, run_convergence, ConvergenceConfig, ConvergenceReport, HurstSummary, RunRecord,
};
pub use lemmas::{run_lemma_suite, LemmaConfig, LemmaEntry, LemmaReport};
pub use taylor::{
    check_taylor_lemma, kink_spec, smooth_spec, taylor_spec_from_flow, PiecewiseC2, TaylorReport,
};
