//! Dense bounded-variable simplex.
//!
//! Rows are turned into equalities with one slack per row, so the working
//! tableau always holds `B⁻¹ [A | I]`. Variable bounds are handled implicitly
//! (nonbasic variables sit at a bound), which keeps binaries and box
//! constraints out of the row count.
//!
//! Cold solves run a classic two-phase primal simplex with artificial columns.
//! After a cold solve the state can be kept: changing variable bounds and
//! calling [`SimplexState::reoptimize`] runs a dual simplex from the previous
//! optimal basis, which is what branch-and-bound needs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Primal feasibility tolerance, shared by the MIO and warm-start code.
pub const FEAS_TOL: f64 = 1e-9;
/// Smallest tableau entry accepted as a pivot.
pub const PIVOT_TOL: f64 = 1e-11;
const OPT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// `maximize c·x  s.t.  A x {≤,≥,=} b,  lo ≤ x ≤ hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    coeffs: Vec<f64>,
    senses: Vec<Sense>,
    rhs: Vec<f64>,
    var_bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, var_bounds: Vec<(f64, f64)>) -> Result<Self> {
        if objective.len() != var_bounds.len() {
            return Err(Error::arg(format!(
                "objective has {} entries but {} bounds were given",
                objective.len(),
                var_bounds.len()
            )));
        }
        if let Some((j, b)) = var_bounds
            .iter()
            .enumerate()
            .find(|(_, b)| !(b.0 <= b.1) || b.0 == f64::INFINITY || b.1 == f64::NEG_INFINITY)
        {
            return Err(Error::arg(format!("variable {j} has invalid bounds {b:?}")));
        }
        Ok(Self {
            objective,
            coeffs: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            var_bounds,
        })
    }

    pub fn add_row(&mut self, coeffs: &[f64], sense: Sense, rhs: f64) -> Result<()> {
        if coeffs.len() != self.num_vars() {
            return Err(Error::arg(format!(
                "row has {} coefficients, expected {}",
                coeffs.len(),
                self.num_vars()
            )));
        }
        if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::arg("row contains non-finite values"));
        }
        self.coeffs.extend_from_slice(coeffs);
        self.senses.push(sense);
        self.rhs.push(rhs);
        Ok(())
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    #[inline]
    pub fn num_rows(&self) -> usize {
        self.senses.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.num_vars();
        &self.coeffs[i * n..(i + 1) * n]
    }

    pub fn sense(&self, i: usize) -> Sense {
        self.senses[i]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn var_bounds(&self) -> &[(f64, f64)] {
        &self.var_bounds
    }

    pub fn set_var_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.var_bounds[j] = (lo, hi);
    }

    /// Largest violation of rows and bounds at `x`, each measured relative
    /// to `1 + |rhs|` (or `1 + |bound|`).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.num_rows() {
            let act: f64 = self.row(i).iter().zip(x).map(|(a, v)| a * v).sum();
            let b = self.rhs[i];
            let v = match self.senses[i] {
                Sense::Le => act - b,
                Sense::Ge => b - act,
                Sense::Eq => (act - b).abs(),
            };
            worst = worst.max(v / (1.0 + b.abs()));
        }
        for (v, &(lo, hi)) in x.iter().zip(&self.var_bounds) {
            if lo.is_finite() {
                worst = worst.max((lo - v) / (1.0 + lo.abs()));
            }
            if hi.is_finite() {
                worst = worst.max((v - hi) / (1.0 + hi.abs()));
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome {
    pub status: LpStatus,
    /// Structural variable values; empty unless `Optimal`.
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

impl LpOutcome {
    fn non_optimal(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective_value: f64::NAN,
            iterations,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solve an LP from scratch.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    let (outcome, _) = SimplexState::solve(lp)?;
    Ok(outcome)
}

const NONBASIC: usize = usize::MAX;

enum Phase {
    One,
    Two,
}

/// Working tableau that can be re-optimized after bound changes.
#[derive(Debug, Clone)]
pub struct SimplexState {
    m: usize,
    nv: usize,
    /// Columns in the tableau (structural + slack, plus artificials in phase one).
    w: usize,
    tab: Vec<f64>,
    xb: Vec<f64>,
    basis: Vec<usize>,
    basic_row: Vec<usize>,
    xn: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    dj: Vec<f64>,
    lp: LinearProgram,
    iterations: usize,
    pivots_since_refactor: usize,
}

impl SimplexState {
    /// Cold two-phase solve. The returned state is `Some` when the LP is optimal.
    pub fn solve(lp: &LinearProgram) -> Result<(LpOutcome, Option<SimplexState>)> {
        let mut st = Self::initial(lp);
        let phase_one_needed = st.w > st.nv + st.m;
        if phase_one_needed {
            st.run_primal(Phase::One)?;
            let infeas: f64 = st.artificial_sum();
            let scale = 1.0 + lp.rhs.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
            if infeas > FEAS_TOL * scale {
                return Ok((LpOutcome::non_optimal(LpStatus::Infeasible, st.iterations), None));
            }
            st.drop_artificials()?;
        }
        st.set_phase_two_costs();
        match st.run_primal(Phase::Two)? {
            PrimalEnd::Optimal => {}
            PrimalEnd::Unbounded => {
                return Ok((LpOutcome::non_optimal(LpStatus::Unbounded, st.iterations), None))
            }
        }
        st.finish()
    }

    /// Change the bounds of structural variable `j`. Call [`reoptimize`](Self::reoptimize)
    /// afterwards.
    pub fn set_var_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        assert!(j < self.nv, "variable index out of range");
        assert!(lo <= hi, "invalid bounds");
        self.lp.var_bounds[j] = (lo, hi);
        self.lo[j] = lo;
        self.hi[j] = hi;
        if self.basic_row[j] == NONBASIC {
            let old = self.xn[j];
            let new = if old <= lo {
                lo
            } else if old >= hi {
                hi
            } else if self.dj[j] > 0.0 && hi.is_finite() {
                hi
            } else if lo.is_finite() {
                lo
            } else if hi.is_finite() {
                hi
            } else {
                0.0
            };
            let delta = new - old;
            if delta != 0.0 {
                for i in 0..self.m {
                    let a = self.tab[i * self.w + j];
                    if a != 0.0 {
                        self.xb[i] -= a * delta;
                    }
                }
                self.xn[j] = new;
            }
        }
    }

    /// Restore optimality after bound changes, starting from the current basis.
    pub fn reoptimize(&mut self) -> Result<LpOutcome> {
        let start = self.iterations;
        if self.pivots_since_refactor > 4 * self.m + 50 {
            self.refactor()?;
        }
        match self.run_dual()? {
            DualEnd::Feasible => {}
            DualEnd::Infeasible => {
                return Ok(LpOutcome::non_optimal(
                    LpStatus::Infeasible,
                    self.iterations - start,
                ))
            }
        }
        match self.run_primal(Phase::Two)? {
            PrimalEnd::Optimal => {}
            PrimalEnd::Unbounded => {
                return Ok(LpOutcome::non_optimal(
                    LpStatus::Unbounded,
                    self.iterations - start,
                ))
            }
        }
        let (mut outcome, _) = self.clone_free_finish()?;
        outcome.iterations = self.iterations - start;
        Ok(outcome)
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Approximate heap size in bytes.
    pub fn footprint(&self) -> usize {
        8 * (self.tab.len() + self.xb.len() + 5 * self.w)
            + 8 * (self.lp.num_rows() * (self.nv + 1) + 3 * self.nv)
    }

    pub fn program(&self) -> &LinearProgram {
        &self.lp
    }

    /// Basic feasible start: structurals at a finite bound, slacks basic where
    /// that is feasible, artificials elsewhere.
    fn initial(lp: &LinearProgram) -> Self {
        let m = lp.num_rows();
        let nv = lp.num_vars();
        let mut xn = Vec::with_capacity(nv + m);
        let mut lo = Vec::with_capacity(nv + m);
        let mut hi = Vec::with_capacity(nv + m);
        for &(l, h) in &lp.var_bounds {
            lo.push(l);
            hi.push(h);
            xn.push(if l.is_finite() {
                l
            } else if h.is_finite() {
                h
            } else {
                0.0
            });
        }
        for i in 0..m {
            let (l, h) = match lp.senses[i] {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(h);
            xn.push(0.0);
        }

        let residual: Vec<f64> = (0..m)
            .map(|i| lp.rhs[i] - lp.row(i).iter().zip(&xn[..nv]).map(|(a, v)| a * v).sum::<f64>())
            .collect();
        let needs_art: Vec<usize> = (0..m)
            .filter(|&i| residual[i] < lo[nv + i] || residual[i] > hi[nv + i])
            .collect();
        let w = nv + m + needs_art.len();

        let mut tab = vec![0.0; m * w];
        for i in 0..m {
            let row = &mut tab[i * w..(i + 1) * w];
            row[..nv].copy_from_slice(lp.row(i));
            row[nv + i] = 1.0;
        }
        let mut basis = vec![0; m];
        let mut basic_row = vec![NONBASIC; w];
        let mut xb = vec![0.0; m];
        let mut cost = vec![0.0; w];
        for i in 0..m {
            basis[i] = nv + i;
            xb[i] = residual[i];
        }
        for (a, &i) in needs_art.iter().enumerate() {
            let col = nv + m + a;
            let sign = if residual[i] > hi[nv + i] { 1.0 } else { -1.0 };
            // slack stays nonbasic at 0; artificial absorbs the residual
            let row = &mut tab[i * w..(i + 1) * w];
            row[col] = sign;
            // normalize so the artificial column is +1 in its row
            if sign < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            xb[i] = residual[i].abs();
            basis[i] = col;
            lo.push(0.0);
            hi.push(f64::INFINITY);
            xn.push(0.0);
            cost[col] = -1.0;
        }
        for (i, &b) in basis.iter().enumerate() {
            basic_row[b] = i;
        }
        let mut st = Self {
            m,
            nv,
            w,
            tab,
            xb,
            basis,
            basic_row,
            xn,
            lo,
            hi,
            cost,
            dj: vec![0.0; w],
            lp: lp.clone(),
            iterations: 0,
            pivots_since_refactor: 0,
        };
        st.recompute_reduced_costs();
        st
    }

    fn artificial_sum(&self) -> f64 {
        (0..self.m)
            .filter(|&i| self.basis[i] >= self.nv + self.m)
            .map(|i| self.xb[i].max(0.0))
            .sum()
    }

    fn drop_artificials(&mut self) -> Result<()> {
        let real = self.nv + self.m;
        for r in 0..self.m {
            if self.basis[r] < real {
                continue;
            }
            let row = &self.tab[r * self.w..r * self.w + real];
            let (q, best) = row
                .iter()
                .enumerate()
                .map(|(j, v)| (j, v.abs()))
                .filter(|&(j, _)| self.basic_row[j] == NONBASIC)
                .fold((NONBASIC, 0.0), |acc, c| if c.1 > acc.1 { c } else { acc });
            if q == NONBASIC || best < PIVOT_TOL {
                return Err(Error::NumericFailure {
                    iterations: self.iterations,
                });
            }
            // degenerate exchange: the artificial is (numerically) zero
            let target = 0.0;
            let delta_q = (self.xb[r] - target) / self.tab[r * self.w + q];
            self.apply_step(q, delta_q);
            let leaving = self.basis[r];
            self.xn[leaving] = target;
            self.pivot(r, q);
        }
        let mut tab = vec![0.0; self.m * real];
        for i in 0..self.m {
            tab[i * real..(i + 1) * real]
                .copy_from_slice(&self.tab[i * self.w..i * self.w + real]);
        }
        self.tab = tab;
        self.w = real;
        self.lo.truncate(real);
        self.hi.truncate(real);
        self.xn.truncate(real);
        self.cost.truncate(real);
        self.dj.truncate(real);
        self.basic_row.truncate(real);
        Ok(())
    }

    fn set_phase_two_costs(&mut self) {
        self.cost.iter_mut().for_each(|c| *c = 0.0);
        self.cost[..self.nv].copy_from_slice(&self.lp.objective);
        self.recompute_reduced_costs();
    }

    fn recompute_reduced_costs(&mut self) {
        let w = self.w;
        self.dj.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.tab[i * w..(i + 1) * w];
            for (d, t) in self.dj.iter_mut().zip(row) {
                *d -= cb * t;
            }
        }
        for &b in &self.basis {
            self.dj[b] = 0.0;
        }
    }

    #[inline]
    fn can_increase(&self, j: usize) -> bool {
        self.xn[j] < self.hi[j]
    }

    #[inline]
    fn can_decrease(&self, j: usize) -> bool {
        self.xn[j] > self.lo[j]
    }

    fn bland_threshold(&self) -> usize {
        5 * (self.m + self.nv)
    }

    fn iteration_cap(&self) -> usize {
        50 * (self.m + self.w) + 10_000
    }

    /// Move nonbasic column `q` by `delta` and update the basic values.
    fn apply_step(&mut self, q: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        let w = self.w;
        for i in 0..self.m {
            let a = self.tab[i * w + q];
            if a != 0.0 {
                self.xb[i] -= a * delta;
            }
        }
        self.xn[q] += delta;
    }

    /// Gauss-Jordan pivot on `(r, q)`; `xb[r]` receives the entering value.
    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.w;
        let piv = self.tab[r * w + q];
        let inv = 1.0 / piv;
        {
            let row = &mut self.tab[r * w..(r + 1) * w];
            row.iter_mut().for_each(|v| *v *= inv);
            row[q] = 1.0;
        }
        let (before, rest) = self.tab.split_at_mut(r * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        for chunk in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = chunk[q];
            if f == 0.0 {
                continue;
            }
            for (v, p) in chunk.iter_mut().zip(pivot_row.iter()) {
                *v -= f * p;
            }
            chunk[q] = 0.0;
        }
        let f = self.dj[q];
        if f != 0.0 {
            for (d, p) in self.dj.iter_mut().zip(pivot_row.iter()) {
                *d -= f * p;
            }
        }
        self.dj[q] = 0.0;

        let leaving = self.basis[r];
        self.basic_row[leaving] = NONBASIC;
        self.basis[r] = q;
        self.basic_row[q] = r;
        self.xb[r] = self.xn[q];
        self.iterations += 1;
        self.pivots_since_refactor += 1;
    }

    fn run_primal(&mut self, phase: Phase) -> Result<PrimalEnd> {
        let start = self.iterations;
        let limit_art = match phase {
            Phase::One => self.w,
            Phase::Two => self.nv + self.m,
        };
        loop {
            let local = self.iterations - start;
            if local > self.iteration_cap() {
                return Err(Error::NumericFailure {
                    iterations: self.iterations,
                });
            }
            let bland = local >= self.bland_threshold();

            // pricing
            let mut enter = NONBASIC;
            let mut dir = 0.0;
            let mut best = 0.0;
            for j in 0..limit_art {
                if self.basic_row[j] != NONBASIC {
                    continue;
                }
                let d = self.dj[j];
                let cand = if d > OPT_TOL && self.can_increase(j) {
                    Some(1.0)
                } else if d < -OPT_TOL && self.can_decrease(j) {
                    Some(-1.0)
                } else {
                    None
                };
                if let Some(s) = cand {
                    if bland {
                        enter = j;
                        dir = s;
                        break;
                    }
                    if d.abs() > best {
                        best = d.abs();
                        enter = j;
                        dir = s;
                    }
                }
            }
            if enter == NONBASIC {
                return Ok(PrimalEnd::Optimal);
            }

            // ratio test
            let q = enter;
            let mut theta = self.hi[q] - self.lo[q];
            let mut leave = NONBASIC;
            let mut leave_piv = 0.0;
            for i in 0..self.m {
                let a = self.tab[i * self.w + q] * dir;
                let b = self.basis[i];
                let t = if a > PIVOT_TOL && self.lo[b].is_finite() {
                    ((self.xb[i] - self.lo[b]) / a).max(0.0)
                } else if a < -PIVOT_TOL && self.hi[b].is_finite() {
                    ((self.hi[b] - self.xb[i]) / -a).max(0.0)
                } else {
                    continue;
                };
                let better = if t < theta - 1e-12 {
                    true
                } else if t <= theta + 1e-12 && leave != NONBASIC {
                    if bland {
                        b < self.basis[leave]
                    } else {
                        a.abs() > leave_piv
                    }
                } else {
                    // tie with the bound flip: prefer the pivot
                    t <= theta && leave == NONBASIC
                };
                if better {
                    theta = t;
                    leave = i;
                    leave_piv = a.abs();
                }
            }
            if leave == NONBASIC && !theta.is_finite() {
                return Ok(PrimalEnd::Unbounded);
            }
            self.apply_step(q, theta * dir);
            if leave == NONBASIC {
                // bound flip
                self.xn[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                self.iterations += 1;
                continue;
            }
            let b = self.basis[leave];
            let a = self.tab[leave * self.w + q] * dir;
            self.xn[b] = if a > 0.0 { self.lo[b] } else { self.hi[b] };
            self.pivot(leave, q);
        }
    }

    fn run_dual(&mut self) -> Result<DualEnd> {
        let start = self.iterations;
        loop {
            let local = self.iterations - start;
            if local > self.iteration_cap() {
                return Err(Error::NumericFailure {
                    iterations: self.iterations,
                });
            }
            let bland = local >= self.bland_threshold();

            let mut r = NONBASIC;
            let mut worst = 0.0;
            for i in 0..self.m {
                let b = self.basis[i];
                let tol = FEAS_TOL * (1.0 + self.lo[b].abs().min(self.hi[b].abs()));
                let viol = (self.lo[b] - self.xb[i]).max(self.xb[i] - self.hi[b]);
                if viol > tol {
                    if bland {
                        if r == NONBASIC || b < self.basis[r] {
                            r = i;
                        }
                    } else if viol > worst {
                        worst = viol;
                        r = i;
                    }
                }
            }
            if r == NONBASIC {
                return Ok(DualEnd::Feasible);
            }
            let b = self.basis[r];
            let below = self.xb[r] < self.lo[b];
            let target = if below { self.lo[b] } else { self.hi[b] };

            let row = &self.tab[r * self.w..(r + 1) * self.w];
            let mut q = NONBASIC;
            let mut best_ratio = f64::INFINITY;
            let mut best_piv = 0.0;
            for j in 0..self.w {
                if self.basic_row[j] != NONBASIC {
                    continue;
                }
                let a = row[j];
                // x_B changes by -a * dx_j
                let ok = if below {
                    (a < -PIVOT_TOL && self.can_increase(j)) || (a > PIVOT_TOL && self.can_decrease(j))
                } else {
                    (a > PIVOT_TOL && self.can_increase(j)) || (a < -PIVOT_TOL && self.can_decrease(j))
                };
                if !ok {
                    continue;
                }
                let ratio = self.dj[j].abs() / a.abs();
                let better = if ratio < best_ratio - 1e-12 {
                    true
                } else if ratio <= best_ratio + 1e-12 {
                    if bland {
                        j < q
                    } else {
                        a.abs() > best_piv
                    }
                } else {
                    false
                };
                if better {
                    best_ratio = ratio;
                    best_piv = a.abs();
                    q = j;
                }
            }
            if q == NONBASIC {
                return Ok(DualEnd::Infeasible);
            }
            let delta_q = (self.xb[r] - target) / self.tab[r * self.w + q];
            self.apply_step(q, delta_q);
            self.xn[b] = target;
            self.pivot(r, q);
        }
    }

    /// Rebuild `B⁻¹[A | I]` and the basic values from the original data.
    fn refactor(&mut self) -> Result<()> {
        let (m, nv, w) = (self.m, self.nv, self.w);
        debug_assert_eq!(w, nv + m);
        let mut tab = vec![0.0; m * w];
        let mut rhs = vec![0.0; m];
        for i in 0..m {
            let row = &mut tab[i * w..(i + 1) * w];
            row[..nv].copy_from_slice(self.lp.row(i));
            row[nv + i] = 1.0;
            let mut r = self.lp.rhs[i];
            for j in 0..w {
                if self.basic_row[j] == NONBASIC && row[j] != 0.0 {
                    r -= row[j] * self.xn[j];
                }
            }
            rhs[i] = r;
        }
        let cols: Vec<usize> = self.basis.clone();
        let mut assigned = vec![false; m];
        let mut new_basis = vec![NONBASIC; m];
        for &q in &cols {
            let (r, best) = (0..m)
                .filter(|&i| !assigned[i])
                .map(|i| (i, tab[i * w + q].abs()))
                .fold((NONBASIC, 0.0), |acc, c| if c.1 > acc.1 { c } else { acc });
            if r == NONBASIC || best < PIVOT_TOL {
                return Err(Error::NumericFailure {
                    iterations: self.iterations,
                });
            }
            assigned[r] = true;
            new_basis[r] = q;
            let inv = 1.0 / tab[r * w + q];
            for v in &mut tab[r * w..(r + 1) * w] {
                *v *= inv;
            }
            rhs[r] *= inv;
            let pivot_row: Vec<f64> = tab[r * w..(r + 1) * w].to_vec();
            for i in 0..m {
                if i == r {
                    continue;
                }
                let f = tab[i * w + q];
                if f == 0.0 {
                    continue;
                }
                for (v, p) in tab[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                tab[i * w + q] = 0.0;
                rhs[i] -= f * rhs[r];
            }
        }
        self.tab = tab;
        self.xb = rhs;
        self.basis = new_basis;
        for j in 0..w {
            self.basic_row[j] = NONBASIC;
        }
        for (i, &b) in self.basis.iter().enumerate() {
            self.basic_row[b] = i;
        }
        self.recompute_reduced_costs();
        self.pivots_since_refactor = 0;
        Ok(())
    }

    fn structural_values(&self) -> Vec<f64> {
        (0..self.nv)
            .map(|j| match self.basic_row[j] {
                NONBASIC => self.xn[j],
                r => self.xb[r],
            })
            .collect()
    }

    fn finish(mut self) -> Result<(LpOutcome, Option<SimplexState>)> {
        let (outcome, ok) = self.clone_free_finish()?;
        Ok((outcome, if ok { Some(self) } else { None }))
    }

    /// Produce the outcome, refactoring once if the residual check fails.
    fn clone_free_finish(&mut self) -> Result<(LpOutcome, bool)> {
        let mut x = self.structural_values();
        if self.lp.max_violation(&x) > FEAS_TOL {
            self.refactor()?;
            if let DualEnd::Infeasible = self.run_dual()? {
                return Ok((LpOutcome::non_optimal(LpStatus::Infeasible, self.iterations), false));
            }
            if let PrimalEnd::Unbounded = self.run_primal(Phase::Two)? {
                return Ok((LpOutcome::non_optimal(LpStatus::Unbounded, self.iterations), false));
            }
            x = self.structural_values();
            if self.lp.max_violation(&x) > FEAS_TOL * 100.0 {
                return Err(Error::NumericFailure {
                    iterations: self.iterations,
                });
            }
        }
        let objective_value = self.lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok((
            LpOutcome {
                status: LpStatus::Optimal,
                x,
                objective_value,
                iterations: self.iterations,
            },
            true,
        ))
    }
}

enum PrimalEnd {
    Optimal,
    Unbounded,
}

enum DualEnd {
    Feasible,
    Infeasible,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp2() -> LinearProgram {
        let mut lp = LinearProgram::new(vec![1.0, 1.0], vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
        lp.add_row(&[1.0, 1.0], Sense::Le, 1.0).unwrap();
        lp
    }

    #[test]
    fn simple_box_lp() {
        let out = solve_lp(&lp2()).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut lp = LinearProgram::new(vec![1.0], vec![(f64::NEG_INFINITY, f64::INFINITY)]).unwrap();
        lp.add_row(&[1.0], Sense::Ge, 2.0).unwrap();
        lp.add_row(&[1.0], Sense::Le, 1.0).unwrap();
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_direction_detected() {
        let mut lp = LinearProgram::new(vec![1.0, 0.0], vec![(0.0, f64::INFINITY), (0.0, 1.0)]).unwrap();
        lp.add_row(&[1.0, -1.0], Sense::Ge, 0.0).unwrap();
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_rows_and_free_variables() {
        // max x - y  s.t. x + y = 4, x - y <= 2, free vars
        let free = (f64::NEG_INFINITY, f64::INFINITY);
        let mut lp = LinearProgram::new(vec![1.0, -1.0], vec![free, free]).unwrap();
        lp.add_row(&[1.0, 1.0], Sense::Eq, 4.0).unwrap();
        lp.add_row(&[1.0, -1.0], Sense::Le, 2.0).unwrap();
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective_value - 2.0).abs() < 1e-9);
        assert!((out.x[0] - 3.0).abs() < 1e-9 && (out.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beale_degenerate_lp_terminates() {
        // Beale's cycling example, rewritten as a maximization.
        let lp = {
            let nonneg = (0.0, f64::INFINITY);
            let mut lp = LinearProgram::new(vec![0.75, -150.0, 0.02, -6.0], vec![nonneg; 4]).unwrap();
            lp.add_row(&[0.25, -60.0, -0.04, 9.0], Sense::Le, 0.0).unwrap();
            lp.add_row(&[0.5, -90.0, -0.02, 3.0], Sense::Le, 0.0).unwrap();
            lp.add_row(&[0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0).unwrap();
            lp
        };
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective_value - 0.05).abs() < 1e-9);
    }

    #[test]
    fn warm_reoptimize_matches_cold_solve() {
        let mut lp = LinearProgram::new(vec![3.0, 2.0, 1.0], vec![(0.0, 1.0); 3]).unwrap();
        lp.add_row(&[1.0, 1.0, 1.0], Sense::Le, 1.5).unwrap();
        lp.add_row(&[1.0, -1.0, 0.0], Sense::Ge, -0.5).unwrap();
        let (out, st) = SimplexState::solve(&lp).unwrap();
        assert!(out.is_optimal());
        let mut st = st.unwrap();
        st.set_var_bounds(0, 0.0, 0.0);
        let warm = st.reoptimize().unwrap();
        lp.set_var_bounds(0, 0.0, 0.0);
        let cold = solve_lp(&lp).unwrap();
        assert!((warm.objective_value - cold.objective_value).abs() < 1e-9);
        st.set_var_bounds(2, 0.0, 0.2);
        let warm = st.reoptimize().unwrap();
        lp.set_var_bounds(2, 0.0, 0.2);
        let cold = solve_lp(&lp).unwrap();
        assert!(warm.is_optimal() && cold.is_optimal());
        assert!((warm.objective_value - 1.2).abs() < 1e-9);
        assert!((warm.objective_value - cold.objective_value).abs() < 1e-9);
        // x0 - x1 >= -0.5 cannot hold with x0 = 0, x1 = 1
        st.set_var_bounds(1, 1.0, 1.0);
        assert_eq!(st.reoptimize().unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn deterministic_repeat() {
        let a = solve_lp(&lp2()).unwrap();
        let b = solve_lp(&lp2()).unwrap();
        assert_eq!(a, b);
    }
}
