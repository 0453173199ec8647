//! Exact maximization of the empirical score under `‖γ‖₀ ≤ q`.
//!
//! The problem splits on the sign `α` of the `x0` coefficient. For each fixed
//! `α` the maximization is written as a big-M mixed integer program
//! ([`build_formulation_a`] or [`build_formulation_b`]) and solved by
//! [`branch_and_bound`], which returns the incumbent together with a certified
//! upper bound. [`solve_prescience`] runs both signs and keeps the better rule.

mod bnb;
mod formulation;

use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::score::{Coefficients, ParamBox};

pub use bnb::{branch_and_bound, TraceAction, TraceRow};
pub use formulation::{build_formulation, build_formulation_a, build_formulation_b, MioProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Formulation {
    /// Indicator constraints `d_i = 1{index_i ≥ 0}` with a δ margin.
    #[default]
    A,
    /// Sign-matching constraints `d_i = 1` only if observation `i` is classified correctly.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum NodeSelection {
    #[default]
    BestBound,
    DepthFirst,
}

/// Which signs of the `x0` coefficient to search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AlphaMode {
    #[default]
    Both,
    Fixed(i8),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MioConfig {
    pub formulation: Formulation,
    pub q: usize,
    pub delta: f64,
    /// Early termination once `best_bound − score ≤ epsilon` (score units).
    pub epsilon: f64,
    pub node_limit: Option<u64>,
    /// Seconds.
    pub time_limit: Option<f64>,
    pub node_selection: NodeSelection,
    pub alpha_mode: AlphaMode,
    /// Record one [`TraceRow`] per node.
    pub trace: bool,
    /// Re-optimize child relaxations from the parent's simplex tableau.
    pub warm_lp: bool,
    /// Memory for parent tableaus kept by open nodes, in MiB. Nodes beyond
    /// the budget re-optimize from the root tableau instead.
    pub tableau_memory_mb: usize,
}

impl Default for MioConfig {
    fn default() -> Self {
        Self {
            formulation: Formulation::A,
            q: 0,
            delta: 1e-6,
            epsilon: 0.0,
            node_limit: None,
            time_limit: None,
            node_selection: NodeSelection::BestBound,
            alpha_mode: AlphaMode::Both,
            trace: false,
            warm_lp: true,
            tableau_memory_mb: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    GapReached,
    NodeLimit,
    TimeLimit,
    Infeasible,
}

impl SolveStatus {
    pub fn is_limit(self) -> bool {
        matches!(self, SolveStatus::NodeLimit | SolveStatus::TimeLimit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub coefficients: Coefficients,
    /// Empirical score of `coefficients`.
    pub score: f64,
    /// Certified upper bound on the best attainable score.
    pub best_bound: f64,
    /// `max(0, best_bound − score)`.
    pub mio_gap: f64,
    pub nodes_explored: u64,
    pub status: SolveStatus,
    pub wall_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<Vec<TraceRow>>,
}

/// Solve for each searched sign of `α` and return the better rule (ties go to
/// `α = +1`).
///
/// The reported bound is the larger of the two sub-problem bounds, so the gap
/// certifies the combined problem even when the losing sign stopped early.
pub fn solve_prescience(d: &Dataset, bx: &ParamBox, cfg: &MioConfig) -> Result<SolveResult> {
    let clock = Stopwatch::start();
    let solve_one = |alpha: i8| -> Result<SolveResult> {
        let prob = build_formulation(d, alpha, bx, cfg)?;
        branch_and_bound(&prob, cfg)
    };
    let (plus, minus) = match cfg.alpha_mode {
        AlphaMode::Fixed(a) if a == 1 || a == -1 => {
            let mut r = solve_one(a)?;
            r.wall_seconds = clock.seconds();
            return Ok(r);
        }
        AlphaMode::Fixed(a) => {
            return Err(Error::arg(format!("fixed alpha must be +1 or -1, got {a}")))
        }
        AlphaMode::Both => join(|| solve_one(1), || solve_one(-1)),
    };
    let (plus, minus) = (plus?, minus?);
    Ok(merge_signs(plus, minus, clock.seconds()))
}

/// Merge the `α = +1` and `α = −1` results: the higher score wins (ties go to
/// `+1`) and the bound is the larger of the two bounds.
pub fn merge_signs(plus: SolveResult, minus: SolveResult, wall: f64) -> SolveResult {
    let nodes = plus.nodes_explored + minus.nodes_explored;
    let both_infeasible =
        plus.status == SolveStatus::Infeasible && minus.status == SolveStatus::Infeasible;
    let bound = plus.best_bound.max(minus.best_bound);
    let limit = [plus.status, minus.status]
        .into_iter()
        .find(|s| s.is_limit());
    let mut win = if minus.score > plus.score { minus } else { plus };
    win.best_bound = bound.max(win.score);
    win.mio_gap = (bound - win.score).max(0.0);
    win.nodes_explored = nodes;
    win.wall_seconds = wall;
    win.trace = None;
    win.status = if both_infeasible {
        SolveStatus::Infeasible
    } else if win.mio_gap <= 1e-9 {
        SolveStatus::Optimal
    } else if let Some(s) = limit {
        s
    } else {
        SolveStatus::GapReached
    };
    win
}

#[cfg(feature = "parallel")]
fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    rayon::join(a, b)
}

#[cfg(not(feature = "parallel"))]
fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA,
    B: FnOnce() -> RB,
{
    (a(), b())
}
