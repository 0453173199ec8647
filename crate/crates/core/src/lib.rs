//! Best-subset maximum score binary prediction.
//!
//! Given a binary outcome `y`, a scale-normalized focus covariate `x0`, further
//! focus covariates `x̃` and auxiliary covariates `z`, the crate computes the
//! rule `1{α x0 + x̃'β + z'γ ≥ 0}` that maximizes the in-sample fraction of
//! correct predictions subject to `‖γ‖₀ ≤ q`. The maximization is cast as a
//! big-M mixed integer program and solved exactly (or to a certified score
//! tolerance) by the branch-and-bound solver in [`mio`], built on the dense
//! simplex in [`lp`].
//!
//! - [`data`]: datasets, CSV ingestion, standardization, quadratic expansion, folds
//! - [`score`]: prediction rule, empirical score, big-M values
//! - [`mio`]: the two MIO formulations and branch-and-bound
//! - [`warmstart`]: logit-driven parameter box refinement
//! - [`selection`]: score tolerance rule, cross-validated `q`, the fit pipeline
//! - [`sim`]: Monte Carlo designs and metrics
//! - [`oracle`]: exhaustive sign-pattern search for certifying small instances

pub mod clock;
pub mod data;
pub mod error;
pub mod lp;
pub mod mio;
pub mod oracle;
mod par;
pub mod score;
pub mod selection;
pub mod sim;
pub mod warmstart;

pub use data::{Dataset, FoldAssignment, Schema};
pub use error::{Error, Result};
pub use mio::{
    solve_prescience, AlphaMode, Formulation, MioConfig, NodeSelection, SolveResult, SolveStatus,
};
pub use score::{empirical_score, predict, Coefficients, ParamBox};
pub use selection::{epsilon_rule, fit, EpsilonMode, FitReport, FitSpec};
