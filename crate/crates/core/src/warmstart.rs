//! Data-driven refinement of the parameter box.
//!
//! A logit fit gives choice probabilities `P̂_i`. Any rule that agrees in sign
//! with `P̂_i − 0.5` for every observation satisfies
//! `(α x0_i + w̃_i't)(P̂_i − 0.5) ≥ 0`. Minimizing and maximizing each
//! coordinate of `t` over that polyhedron, one coordinate after another with
//! earlier intervals imposed, yields bounds `l̂_j ≤ t_j ≤ û_j`. The solver then
//! searches the symmetric enlargement `[−τ m_j, τ m_j]`, `m_j = |l̂_j| ∨ |û_j|`,
//! intersected with the original box. When the polyhedron is empty the
//! original box is used unchanged.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::lp::{dot, solve_linear_system, solve_lp, LinearProgram, Matrix, Sense};
use crate::score::ParamBox;

const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 100;
const SEPARATION_ETA: f64 = 30.0;
const PROB_CLIP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitFit {
    /// Coefficients on the kept design columns.
    pub coefficients: Vec<f64>,
    /// Names of the kept design columns, `Intercept` first.
    pub columns: Vec<String>,
    pub fitted_probabilities: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub separated: bool,
    /// Max-norm of the log-likelihood gradient at `coefficients`.
    pub gradient_norm: f64,
}

/// Design matrix `(1, x0, x̃ without its intercept, z)` and column names.
pub fn logit_design(d: &Dataset) -> (Matrix, Vec<String>) {
    let n = d.n();
    let mut cols = vec![vec![1.0; n], d.x0().to_vec()];
    let mut names = vec![crate::data::INTERCEPT_NAME.to_string(), d.x0_name().to_string()];
    for j in 0..d.k() {
        if Some(j) != d.intercept_index() {
            cols.push(d.x_tilde().column(j));
            names.push(d.focus_names()[j].clone());
        }
    }
    for j in 0..d.p() {
        cols.push(d.z().column(j));
        names.push(d.aux_names()[j].clone());
    }
    (Matrix::from_columns(n, &cols).expect("equal column lengths"), names)
}

/// Indices of a maximal linearly independent prefix-greedy set of columns.
fn independent_columns(x: &Matrix) -> Vec<usize> {
    let n = x.rows();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut keep = Vec::new();
    for j in 0..x.cols() {
        let mut v = x.column(j);
        let norm0 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm0 == 0.0 {
            continue;
        }
        // two passes of Gram-Schmidt for stability
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-9 * norm0.max(1.0) && basis.len() < n {
            v.iter_mut().for_each(|a| *a /= norm);
            basis.push(v);
            keep.push(j);
        }
    }
    keep
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^η)` without overflow.
fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn log_likelihood(x: &Matrix, y: &[u8], b: &[f64]) -> f64 {
    (0..x.rows())
        .map(|i| {
            let eta = dot(x.row(i), b);
            f64::from(y[i]) * eta - softplus(eta)
        })
        .sum()
}

fn gradient(x: &Matrix, y: &[u8], b: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.cols()];
    for i in 0..x.rows() {
        let r = f64::from(y[i]) - sigmoid(dot(x.row(i), b));
        for (gj, xij) in g.iter_mut().zip(x.row(i)) {
            *gj += r * xij;
        }
    }
    g
}

/// Logistic regression of `y` on `(1, x0, x̃, z)` by Newton's method with step
/// halving. Collinear columns are dropped first.
pub fn fit_logit(d: &Dataset) -> Result<LogitFit> {
    let (full, all_names) = logit_design(d);
    let keep = independent_columns(&full);
    let x = full.select_columns(&keep);
    let names: Vec<String> = keep.iter().map(|&j| all_names[j].clone()).collect();
    if keep.len() < full.cols() {
        log::info!("logit: dropped {} collinear column(s)", full.cols() - keep.len());
    }
    let y = d.y();
    let c = x.cols();
    let mut b = vec![0.0; c];
    let mut ll = log_likelihood(&x, y, &b);
    let mut converged = false;
    let mut iterations = 0;
    let mut g = gradient(&x, y, &b);
    while iterations < MAX_ITER {
        if g.iter().fold(0.0_f64, |m, v| m.max(v.abs())) < GRAD_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let mut h = Matrix::zeros(c, c);
        for i in 0..x.rows() {
            let p = sigmoid(dot(x.row(i), &b));
            let wgt = p * (1.0 - p);
            let row = x.row(i);
            for a in 0..c {
                let ra = wgt * row[a];
                for bb in a..c {
                    h[(a, bb)] += ra * row[bb];
                }
            }
        }
        for a in 0..c {
            for bb in 0..a {
                h[(a, bb)] = h[(bb, a)];
            }
        }
        let step = match solve_linear_system(&h, &g) {
            Some(s) => s,
            None => {
                // Hessian collapses under separation; fall back to a ridge step.
                let scale = (0..c).map(|a| h[(a, a)]).fold(0.0_f64, f64::max).max(1.0);
                for a in 0..c {
                    h[(a, a)] += 1e-8 * scale;
                }
                match solve_linear_system(&h, &g) {
                    Some(s) => s,
                    None => break,
                }
            }
        };
        let mut t = 1.0;
        let mut moved = false;
        // near the optimum the gain is below the rounding error of the sum
        let slack = 1e-12 * (1.0 + ll.abs());
        for _ in 0..40 {
            let cand: Vec<f64> = b.iter().zip(&step).map(|(bi, si)| bi + t * si).collect();
            let cand_ll = log_likelihood(&x, y, &cand);
            if cand_ll >= ll - slack {
                b = cand;
                ll = cand_ll;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        g = gradient(&x, y, &b);
        if !moved {
            break;
        }
    }
    if !converged && g.iter().fold(0.0_f64, |m, v| m.max(v.abs())) < GRAD_TOL {
        converged = true;
    }
    let etas: Vec<f64> = (0..x.rows()).map(|i| dot(x.row(i), &b)).collect();
    let mut probs: Vec<f64> = etas.iter().map(|&e| sigmoid(e)).collect();
    // Under separation the gradient vanishes while the index diverges, so the
    // fit can look converged. A fitted index that classifies every
    // observation correctly means no finite maximizer exists; a large index
    // without convergence points to quasi-complete separation.
    let perfect = etas.iter().zip(y).all(|(&e, &yi)| if yi == 1 { e > 0.0 } else { e < 0.0 });
    let separated = perfect || (!converged && etas.iter().any(|e| e.abs() > SEPARATION_ETA));
    if separated {
        log::warn!("logit: the data look separable; probabilities are clipped");
    }
    for pr in &mut probs {
        *pr = pr.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    }
    let gradient_norm = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(LogitFit {
        coefficients: b,
        columns: names,
        fitted_probabilities: probs,
        converged,
        iterations,
        separated,
        gradient_norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinedSpace {
    pub l_hat: Vec<f64>,
    pub u_hat: Vec<f64>,
    pub tau: f64,
    pub feasible: bool,
    /// The enlarged box, present when `feasible`.
    pub param_box: Option<ParamBox>,
    pub lp_calls: usize,
}

impl RefinedSpace {
    /// Set `τ` and recompute the enlarged box.
    pub fn with_tau(mut self, tau: f64, base: &ParamBox) -> Result<Self> {
        if !(tau >= 1.0) {
            return Err(Error::arg(format!("tau must be at least 1, got {tau}")));
        }
        self.tau = tau;
        self.param_box = if self.feasible { Some(enlarge(&self, base)?) } else { None };
        Ok(self)
    }
}

/// Sequential coordinate bounds over `{t ∈ box : (α x0_i + w̃_i't)(P̂_i − 0.5) ≥ 0 ∀i}`.
/// Issues exactly `2(k + p)` LPs when every one of them is feasible.
pub fn tighten_bounds(
    d: &Dataset,
    alpha: i8,
    base: &ParamBox,
    probs: &[f64],
) -> Result<RefinedSpace> {
    if probs.len() != d.n() {
        return Err(Error::arg("one probability per observation is required"));
    }
    if base.k() != d.k() || base.p() != d.p() {
        return Err(Error::arg("parameter box does not match the dataset"));
    }
    let dim = d.k() + d.p();
    let mut running = base.flat();
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    let mut w = vec![0.0; dim];
    for (i, &pr) in probs.iter().enumerate() {
        if pr == 0.5 {
            continue;
        }
        d.w_row_into(i, &mut w);
        let rhs = -f64::from(alpha) * d.x0()[i];
        let sense = if pr > 0.5 { Sense::Ge } else { Sense::Le };
        rows.push((w.clone(), sense, rhs));
    }
    let mut l_hat = Vec::with_capacity(dim);
    let mut u_hat = Vec::with_capacity(dim);
    let mut calls = 0;
    let infeasible = |l_hat: Vec<f64>, u_hat: Vec<f64>, calls: usize| RefinedSpace {
        l_hat,
        u_hat,
        tau: 1.0,
        feasible: false,
        param_box: None,
        lp_calls: calls,
    };
    for j in 0..dim {
        let mut lo = None;
        for sign in [-1.0, 1.0] {
            let mut obj = vec![0.0; dim];
            obj[j] = sign;
            let mut lp = LinearProgram::new(obj, running.clone())?;
            for (row, sense, rhs) in &rows {
                lp.add_row(row, *sense, *rhs)?;
            }
            calls += 1;
            let out = solve_lp(&lp)?;
            if !out.is_optimal() {
                return Ok(infeasible(l_hat, u_hat, calls));
            }
            let v = out.x[j].clamp(running[j].0, running[j].1);
            match lo {
                None => {
                    lo = Some(v);
                    running[j].0 = v;
                }
                Some(l) => {
                    let u = v.max(l);
                    running[j] = (l, u);
                    l_hat.push(l);
                    u_hat.push(u);
                }
            }
        }
    }
    Ok(RefinedSpace {
        l_hat,
        u_hat,
        tau: 1.0,
        feasible: true,
        param_box: None,
        lp_calls: calls,
    }
    .with_tau(1.0, base)?)
}

/// `[−τ m_j, τ m_j] ∩ base_j` with `m_j = |l̂_j| ∨ |û_j|`.
pub fn enlarge(r: &RefinedSpace, base: &ParamBox) -> Result<ParamBox> {
    if !r.feasible {
        return Err(Error::Contract("cannot enlarge an infeasible refinement".into()));
    }
    let flat: Vec<(f64, f64)> = base
        .flat()
        .iter()
        .zip(r.l_hat.iter().zip(&r.u_hat))
        .map(|(&(lo, hi), (l, u))| {
            let m = r.tau * l.abs().max(u.abs());
            let a = (-m).max(lo);
            let b = m.min(hi);
            if a <= b {
                (a, b)
            } else {
                (lo, hi)
            }
        })
        .collect();
    ParamBox::from_flat(base.k(), &flat)
}

/// Outcome of the warm-start step for one sign of `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStart {
    pub alpha: i8,
    pub refined: RefinedSpace,
    /// The box to search: the refined one when feasible, else the base box.
    pub search_box: ParamBox,
    /// Volume of `search_box` relative to the base box.
    pub volume_ratio: f64,
}

/// Whether the refinement is attempted at all (it needs `p < n`).
pub fn warm_start_applicable(d: &Dataset) -> bool {
    d.p() < d.n()
}

/// Fit the logit once and refine the box for the given sign.
pub fn warm_start(
    d: &Dataset,
    alpha: i8,
    base: &ParamBox,
    probs: &[f64],
    tau: f64,
) -> Result<WarmStart> {
    let refined = tighten_bounds(d, alpha, base, probs)?.with_tau(tau, base)?;
    let search_box = match &refined.param_box {
        Some(b) => b.clone(),
        None => {
            log::info!("warm start for alpha = {alpha} is infeasible; using the original box");
            base.clone()
        }
    };
    let volume_ratio = search_box.volume_ratio(base);
    Ok(WarmStart {
        alpha,
        refined,
        search_box,
        volume_ratio,
    })
}
