//! Exhaustive maximizer for small instances.
//!
//! For each sign `α` and each auxiliary subset of size at most `q`, candidate
//! prediction patterns are visited in order of increasing number of
//! misclassified observations. A pattern is attainable when the linear system
//! `index_i ≥ 0` (predicted 1) / `index_i ≤ −δ` (predicted 0) has a solution
//! in the box, which is one LP feasibility check. The first attainable
//! pattern is optimal for that branch. This module shares nothing with the
//! MIO code beyond the simplex engine, so it can certify it.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, Sense};
use crate::score::{Coefficients, ParamBox};

pub const MAX_N: usize = 14;
pub const MAX_P: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_score: f64,
    pub witness: Coefficients,
    pub patterns_checked: u64,
}

pub fn exact_max_score(d: &Dataset, bx: &ParamBox, q: usize, delta: f64) -> Result<OracleResult> {
    let (n, k, p) = (d.n(), d.k(), d.p());
    if n > MAX_N || p > MAX_P {
        return Err(Error::Size(format!(
            "n = {n}, p = {p} (limits n <= {MAX_N}, p <= {MAX_P})"
        )));
    }
    if q > p {
        return Err(Error::arg(format!("q = {q} exceeds p = {p}")));
    }
    if bx.k() != k || bx.p() != p {
        return Err(Error::arg("parameter box does not match the dataset"));
    }
    if !(delta > 0.0) {
        return Err(Error::arg("delta must be positive"));
    }

    let subsets = subsets_up_to(p, q);
    let mut best_errors = n + 1;
    let mut witness = None;
    let mut checked = 0u64;
    for alpha in [1i8, -1] {
        for subset in &subsets {
            // only strictly better patterns can change the answer
            for errors in 0..best_errors {
                let mut found = None;
                for wrong in Combinations::new(n, errors) {
                    checked += 1;
                    let mut predicted: Vec<bool> = d.y().iter().map(|&y| y == 1).collect();
                    for &i in &wrong {
                        predicted[i] = !predicted[i];
                    }
                    if let Some(c) = realize(d, bx, alpha, subset, &predicted, delta)? {
                        found = Some(c);
                        break;
                    }
                }
                if let Some(c) = found {
                    best_errors = errors;
                    witness = Some(c);
                    break;
                }
            }
        }
    }
    // every pattern is visited when nothing was attainable before
    let witness = witness.ok_or_else(|| Error::arg("the parameter box admits no attainable pattern"))?;
    Ok(OracleResult {
        best_score: (n - best_errors) as f64 / n as f64,
        witness,
        patterns_checked: checked,
    })
}

/// Coefficients whose rule produces `predicted` with the δ-margin semantics,
/// chosen to maximize a common margin `s ∈ [0, 1]`.
fn realize(
    d: &Dataset,
    bx: &ParamBox,
    alpha: i8,
    subset: &[usize],
    predicted: &[bool],
    delta: f64,
) -> Result<Option<Coefficients>> {
    let k = d.k();
    let nv = k + subset.len() + 1;
    let mut bounds = bx.beta_bounds.clone();
    bounds.extend(subset.iter().map(|&j| bx.gamma_bounds[j]));
    bounds.push((0.0, 1.0));
    let mut obj = vec![0.0; nv];
    obj[nv - 1] = 1.0;
    let mut lp = LinearProgram::new(obj, bounds)?;
    let mut row = vec![0.0; nv];
    for (i, &pos) in predicted.iter().enumerate() {
        row[..k].copy_from_slice(d.x_tilde().row(i));
        for (c, &j) in subset.iter().enumerate() {
            row[k + c] = d.z()[(i, j)];
        }
        let a0 = f64::from(alpha) * d.x0()[i];
        if pos {
            row[nv - 1] = -1.0;
            lp.add_row(&row, Sense::Ge, -a0)?;
        } else {
            row[nv - 1] = 1.0;
            lp.add_row(&row, Sense::Le, -delta - a0)?;
        }
    }
    let out = solve_lp(&lp)?;
    if !out.is_optimal() {
        return Ok(None);
    }
    let beta: Vec<f64> = out.x[..k]
        .iter()
        .zip(&bx.beta_bounds)
        .map(|(v, &(lo, hi))| v.clamp(lo, hi))
        .collect();
    let mut gamma = vec![0.0; d.p()];
    for (c, &j) in subset.iter().enumerate() {
        let (lo, hi) = bx.gamma_bounds[j];
        gamma[j] = out.x[k + c].clamp(lo, hi);
    }
    for (j, g) in gamma.iter_mut().enumerate() {
        if !subset.contains(&j) {
            *g = 0.0_f64.clamp(bx.gamma_bounds[j].0, bx.gamma_bounds[j].1);
        }
    }
    let c = Coefficients { alpha, beta, gamma };
    Ok(Some(c))
}

/// All subsets of `0..p` with at most `q` elements, by size then lexicographically.
fn subsets_up_to(p: usize, q: usize) -> Vec<Vec<usize>> {
    (0..=q.min(p)).flat_map(|s| Combinations::new(p, s)).collect()
}

/// Lexicographic `s`-element combinations of `0..n`.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, s: usize) -> Self {
        Self {
            n,
            current: (s <= n).then(|| (0..s).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.current.take()?;
        let out = cur.clone();
        let s = cur.len();
        let mut next = cur;
        let mut i = s;
        while i > 0 {
            i -= 1;
            if next[i] < self.n - s + i {
                next[i] += 1;
                for j in i + 1..s {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Matrix;
    use crate::score::empirical_score;

    #[test]
    fn combinations_are_lexicographic() {
        let all: Vec<Vec<usize>> = Combinations::new(4, 2).collect();
        assert_eq!(
            all,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
        assert_eq!(subsets_up_to(3, 2).len(), 7);
    }

    #[test]
    fn separable_data_scores_one() {
        let x0 = vec![-2.0, -1.0, 0.5, 1.5, 3.0];
        let y = x0.iter().map(|&v| (v >= 0.0) as u8).collect();
        let d = Dataset::new(y, x0, Matrix::zeros(5, 0), Matrix::zeros(5, 0)).unwrap();
        let r = exact_max_score(&d, &ParamBox::cube(0, 0, 10.0).unwrap(), 0, 1e-6).unwrap();
        assert_eq!(r.best_score, 1.0);
        assert_eq!(r.witness.alpha, 1);
    }

    #[test]
    fn two_points_hand_enumeration() {
        let d = Dataset::new(vec![1, 1], vec![1.0, -1.0], Matrix::zeros(2, 0), Matrix::zeros(2, 0))
            .unwrap();
        let r = exact_max_score(&d, &ParamBox::cube(0, 0, 10.0).unwrap(), 0, 1e-6).unwrap();
        assert_eq!(r.best_score, 0.5);
        assert_eq!(empirical_score(&r.witness, &d).unwrap(), 0.5);
    }

    #[test]
    fn guard_rails() {
        let n = 15;
        let d = Dataset::new(vec![0; n], vec![1.0; n], Matrix::zeros(n, 0), Matrix::zeros(n, 0))
            .unwrap();
        assert!(matches!(
            exact_max_score(&d, &ParamBox::cube(0, 0, 1.0).unwrap(), 0, 1e-6),
            Err(Error::Size(_))
        ));
    }
}
