//! Big-M mixed integer formulations of the score maximization for a fixed α.
//!
//! Variable layout shared by both formulations: the `k + p` continuous
//! coefficients `t = (β, γ)`, then `d_1..d_n`, then `e_1..e_p`. Binaries are
//! addressed in one index space `v = (d, e)`. Objectives are in counts of
//! correctly classified observations; divide by `n` for scores.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::lp::{dot, LinearProgram, Matrix, Sense};
use crate::score::{compute_big_m, ParamBox};

use super::{Formulation, MioConfig};

#[derive(Debug, Clone)]
pub struct MioProblem {
    pub(crate) formulation: Formulation,
    pub(crate) alpha: i8,
    pub(crate) lp: LinearProgram,
    pub(crate) n: usize,
    pub(crate) k: usize,
    pub(crate) p: usize,
    pub(crate) q: usize,
    pub(crate) delta: f64,
    pub(crate) y: Vec<u8>,
    /// `α x0_i`.
    pub(crate) offset: Vec<f64>,
    /// Rows `w̃_i = (x̃_i, z_i)`.
    pub(crate) w: Matrix,
    pub(crate) bounds: Vec<(f64, f64)>,
    /// Objective constant in count units.
    pub(crate) constant: f64,
    pub(crate) big_m: Vec<f64>,
}

impl MioProblem {
    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn alpha(&self) -> i8 {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Linear constraints beyond variable bounds.
    pub fn num_constraints(&self) -> usize {
        self.lp.num_rows()
    }

    pub fn num_binaries(&self) -> usize {
        self.n + self.p
    }

    pub fn big_m(&self) -> &[f64] {
        &self.big_m
    }

    pub fn linear_program(&self) -> &LinearProgram {
        &self.lp
    }

    #[inline]
    pub(crate) fn num_continuous(&self) -> usize {
        self.k + self.p
    }

    /// Column of binary `b` in the LP.
    #[inline]
    pub(crate) fn binary_column(&self, b: usize) -> usize {
        self.k + self.p + b
    }

    /// Count objective of an integral binary assignment.
    pub(crate) fn pattern_value(&self, d: &[u8]) -> i64 {
        match self.formulation {
            Formulation::A => d
                .iter()
                .zip(&self.y)
                .filter(|(di, yi)| di == yi)
                .count() as i64,
            Formulation::B => d.iter().filter(|&&di| di == 1).count() as i64,
        }
    }

    /// Number of observations classified correctly by `t` under the δ-margin
    /// reading of the rule: an index in `(−δ, 0)` is counted as wrong.
    pub(crate) fn margin_count(&self, t: &[f64]) -> i64 {
        let mut hits = 0;
        for i in 0..self.n {
            let v = self.index(i, t);
            let ok = if self.y[i] == 1 { v >= 0.0 } else { v <= -self.delta };
            hits += ok as i64;
        }
        hits
    }

    /// Index of observation `i`, summed in the same order as
    /// [`crate::score::index_value`] so both agree bit for bit.
    #[inline]
    pub(crate) fn index(&self, i: usize, t: &[f64]) -> f64 {
        let row = self.w.row(i);
        let k = self.k;
        self.offset[i] + dot(&row[..k], &t[..k]) + dot(&row[k..], &t[k..])
    }

    /// Number of observations classified correctly by `t` under the rule's
    /// own `index ≥ 0` convention.
    pub(crate) fn true_count(&self, t: &[f64]) -> i64 {
        (0..self.n)
            .filter(|&i| (self.index(i, t) >= 0.0) == (self.y[i] == 1))
            .count() as i64
    }
}

fn validate(d: &Dataset, bx: &ParamBox, cfg: &MioConfig) -> Result<()> {
    if cfg.q > d.p() {
        return Err(Error::arg(format!("q = {} exceeds p = {}", cfg.q, d.p())));
    }
    if !(cfg.delta > 0.0) {
        return Err(Error::arg("delta must be positive"));
    }
    if !(cfg.epsilon >= 0.0) {
        return Err(Error::arg("epsilon must be non-negative"));
    }
    if bx.k() != d.k() || bx.p() != d.p() {
        return Err(Error::arg("parameter box does not match the dataset"));
    }
    Ok(())
}

fn common(
    d: &Dataset,
    alpha: i8,
    bx: &ParamBox,
    cfg: &MioConfig,
    formulation: Formulation,
) -> Result<(MioProblem, Vec<f64>)> {
    validate(d, bx, cfg)?;
    if alpha != 1 && alpha != -1 {
        return Err(Error::arg("alpha must be +1 or -1"));
    }
    let big_m = compute_big_m(d, alpha, bx)?;
    if let Some(i) = big_m.iter().position(|m| !m.is_finite()) {
        return Err(Error::arg(format!("big-M value for observation {i} is not finite")));
    }
    let (n, k, p) = (d.n(), d.k(), d.p());
    let bounds = bx.flat();
    let mut var_bounds = bounds.clone();
    var_bounds.extend(std::iter::repeat((0.0, 1.0)).take(n + p));
    let (objective, constant) = match formulation {
        Formulation::A => {
            let mut c = vec![0.0; k + p];
            c.extend(d.y().iter().map(|&y| 2.0 * f64::from(y) - 1.0));
            c.extend(std::iter::repeat(0.0).take(p));
            let zeros = d.y().iter().filter(|&&y| y == 0).count();
            (c, zeros as f64)
        }
        Formulation::B => {
            let mut c = vec![0.0; k + p];
            c.extend(std::iter::repeat(1.0).take(n));
            c.extend(std::iter::repeat(0.0).take(p));
            (c, 0.0)
        }
    };
    let lp = LinearProgram::new(objective, var_bounds)?;
    let offset: Vec<f64> = d.x0().iter().map(|&x| f64::from(alpha) * x).collect();
    let prob = MioProblem {
        formulation,
        alpha,
        lp,
        n,
        k,
        p,
        q: cfg.q,
        delta: cfg.delta,
        y: d.y().to_vec(),
        offset,
        w: d.w_tilde(),
        bounds,
        constant,
        big_m: big_m.clone(),
    };
    Ok((prob, big_m))
}

/// Selection rows `e_j lo_j ≤ γ_j ≤ e_j hi_j` and `Σ e_j ≤ q`.
fn add_selection_rows(prob: &mut MioProblem) -> Result<()> {
    let (n, k, p) = (prob.n, prob.k, prob.p);
    let nv = k + p + n + p;
    for j in 0..p {
        let (lo, hi) = prob.bounds[k + j];
        let e_col = k + p + n + j;
        let mut row = vec![0.0; nv];
        row[k + j] = 1.0;
        row[e_col] = -hi;
        prob.lp.add_row(&row, Sense::Le, 0.0)?;
        row[e_col] = -lo;
        prob.lp.add_row(&row, Sense::Ge, 0.0)?;
    }
    let mut row = vec![0.0; nv];
    row[k + p + n..].iter_mut().for_each(|v| *v = 1.0);
    prob.lp.add_row(&row, Sense::Le, prob.q as f64)
}

/// Indicator formulation: `d_i = 1{index_i ≥ 0}` via
/// `(d_i − 1) M_i ≤ index_i ≤ d_i (M_i + δ) − δ`, objective
/// `Σ (1 − y_i) + (2 y_i − 1) d_i`.
pub fn build_formulation_a(
    d: &Dataset,
    alpha: i8,
    bx: &ParamBox,
    cfg: &MioConfig,
) -> Result<MioProblem> {
    let (mut prob, big_m) = common(d, alpha, bx, cfg, Formulation::A)?;
    let (n, k, p) = (prob.n, prob.k, prob.p);
    let nv = k + p + n + p;
    for i in 0..n {
        let mut row = vec![0.0; nv];
        row[..k + p].copy_from_slice(prob.w.row(i));
        row[k + p + i] = -big_m[i];
        prob.lp.add_row(&row, Sense::Ge, -big_m[i] - prob.offset[i])?;
        row[k + p + i] = -(big_m[i] + prob.delta);
        prob.lp.add_row(&row, Sense::Le, -prob.delta - prob.offset[i])?;
    }
    add_selection_rows(&mut prob)?;
    Ok(prob)
}

/// Sign-matching formulation: `(1 − 2 y_i) index_i ≤ M_i (1 − d_i)`, objective
/// `Σ d_i`.
pub fn build_formulation_b(
    d: &Dataset,
    alpha: i8,
    bx: &ParamBox,
    cfg: &MioConfig,
) -> Result<MioProblem> {
    let (mut prob, big_m) = common(d, alpha, bx, cfg, Formulation::B)?;
    let x0 = d.x0();
    let mut sorted: Vec<f64> = x0.to_vec();
    sorted.sort_by(f64::total_cmp);
    if x0.contains(&0.0) || sorted.windows(2).any(|w| w[0] == w[1]) {
        log::warn!(
            "x0 has ties or zeros; the sign-matching formulation may overstate the attainable score"
        );
    }
    let (n, k, p) = (prob.n, prob.k, prob.p);
    let nv = k + p + n + p;
    for i in 0..n {
        let s = 1.0 - 2.0 * f64::from(prob.y[i]);
        let mut row = vec![0.0; nv];
        for (r, w) in row[..k + p].iter_mut().zip(prob.w.row(i)) {
            *r = s * w;
        }
        row[k + p + i] = big_m[i];
        prob.lp.add_row(&row, Sense::Le, big_m[i] - s * prob.offset[i])?;
    }
    add_selection_rows(&mut prob)?;
    Ok(prob)
}

pub fn build_formulation(
    d: &Dataset,
    alpha: i8,
    bx: &ParamBox,
    cfg: &MioConfig,
) -> Result<MioProblem> {
    match cfg.formulation {
        Formulation::A => build_formulation_a(d, alpha, bx, cfg),
        Formulation::B => build_formulation_b(d, alpha, bx, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(n: usize, p: usize) -> Dataset {
        let y = (0..n).map(|i| (i % 2) as u8).collect();
        let x0 = (0..n).map(|i| i as f64 - 0.5).collect();
        let z = Matrix::from_row_major(n, p, (0..n * p).map(|v| (v as f64).sin()).collect()).unwrap();
        Dataset::new(y, x0, Matrix::zeros(n, 0), z).unwrap().with_intercept().unwrap()
    }

    #[test]
    fn constraint_counts() {
        for (n, p, q) in [(1, 0, 0), (5, 3, 2), (9, 4, 4)] {
            let d = data(n, p);
            let bx = ParamBox::cube(1, p, 10.0).unwrap();
            let cfg = MioConfig { q, ..MioConfig::default() };
            let a = build_formulation_a(&d, 1, &bx, &cfg).unwrap();
            let b = build_formulation_b(&d, -1, &bx, &cfg).unwrap();
            assert_eq!(a.num_constraints(), 2 * n + 2 * p + 1);
            assert_eq!(b.num_constraints(), n + 2 * p + 1);
            assert_eq!(a.linear_program().num_vars(), 1 + p + n + p);
        }
    }

    #[test]
    fn q_above_p_is_rejected() {
        let d = data(4, 1);
        let bx = ParamBox::cube(1, 1, 10.0).unwrap();
        let cfg = MioConfig { q: 2, ..MioConfig::default() };
        assert!(matches!(build_formulation_a(&d, 1, &bx, &cfg), Err(Error::Argument(_))));
    }

    #[test]
    fn pattern_values() {
        let d = data(4, 0);
        let bx = ParamBox::cube(1, 0, 10.0).unwrap();
        let cfg = MioConfig::default();
        let a = build_formulation_a(&d, 1, &bx, &cfg).unwrap();
        let b = build_formulation_b(&d, 1, &bx, &cfg).unwrap();
        // y = (0, 1, 0, 1)
        assert_eq!(a.pattern_value(&[0, 1, 1, 1]), 3);
        assert_eq!(b.pattern_value(&[0, 1, 1, 1]), 3);
        assert_eq!(a.constant, 2.0);
    }
}
