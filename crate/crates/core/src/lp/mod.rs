//! Linear programming and the small dense linear algebra the rest of the
//! crate relies on.

mod linalg;
mod simplex;

pub use linalg::{cholesky, dot, solve_linear_system, Matrix};
pub use simplex::{
    solve_lp, LinearProgram, LpOutcome, LpStatus, Sense, SimplexState, FEAS_TOL, PIVOT_TOL,
};

/// `max_{t ∈ box} |c0 + c·t|` for a finite box, in closed form.
///
/// A linear function attains its extremes over a box at corners, so the
/// maximum and minimum of `c0 + c·t` are separable per coordinate.
pub fn box_linear_abs_max(c0: f64, c: &[f64], bounds: &[(f64, f64)]) -> f64 {
    assert_eq!(c.len(), bounds.len(), "coefficient/box length mismatch");
    let mut upper = c0;
    let mut lower = -c0;
    for (&cj, &(lo, hi)) in c.iter().zip(bounds) {
        upper += (cj * lo).max(cj * hi);
        lower += (-cj * lo).max(-cj * hi);
    }
    upper.max(lower)
}
