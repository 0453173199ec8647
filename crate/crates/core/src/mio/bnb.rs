//! LP-based branch-and-bound over the binaries of a [`MioProblem`].
//!
//! Bounds and incumbents are kept as integer counts of correctly classified
//! observations. Every relaxation bound is rounded down to an integer, which
//! is valid because attainable objectives are integers.
//!
//! Incumbents are scored with the δ-margin reading of the rule (an index in
//! `(−δ, 0)` counts as a miss), which is exactly what the formulations can
//! represent. The reported score is the plain empirical score of the returned
//! coefficients, which can only be larger.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::error::Result;
use crate::lp::{LinearProgram, LpOutcome, LpStatus, Sense, SimplexState};
use crate::score::Coefficients;

use super::formulation::MioProblem;
use super::{Formulation, MioConfig, NodeSelection, SolveResult, SolveStatus};

/// A binary within this distance of 0 or 1 counts as integral.
const INT_TOL: f64 = 1e-6;
/// Slack added before rounding a relaxation bound down to a count.
const BOUND_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceAction {
    Infeasible,
    Pruned,
    Integral,
    Branched,
    /// The relaxation could not be solved reliably; its bound is kept.
    Unresolved,
}

impl TraceAction {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceAction::Infeasible => "infeasible",
            TraceAction::Pruned => "pruned",
            TraceAction::Integral => "integral",
            TraceAction::Branched => "branched",
            TraceAction::Unresolved => "unresolved",
        }
    }
}

/// One processed node. Bounds and incumbent are in score units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub node: u64,
    pub depth: u32,
    pub bound: f64,
    pub incumbent: f64,
    pub best_bound: f64,
    pub action: TraceAction,
}

struct Snapshot {
    state: Option<SimplexState>,
    bytes: usize,
    live: Rc<Cell<usize>>,
}

impl Drop for Snapshot {
    fn drop(&mut self) {
        self.live.set(self.live.get() - self.bytes);
    }
}

struct Node {
    fixed: Vec<i8>,
    /// The fixing that distinguishes this node from its parent.
    branch: Option<(usize, u8)>,
    bound: i64,
    raw: f64,
    depth: u32,
    seq: u64,
    parent: Option<Rc<Snapshot>>,
}

impl Node {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.bound
            .cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(self.raw.total_cmp(&other.raw))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

enum Open {
    Heap(BinaryHeap<Node>),
    Stack(Vec<Node>),
}

impl Open {
    fn push(&mut self, node: Node) {
        match self {
            Open::Heap(h) => h.push(node),
            Open::Stack(s) => s.push(node),
        }
    }

    fn pop(&mut self) -> Option<Node> {
        match self {
            Open::Heap(h) => h.pop(),
            Open::Stack(s) => s.pop(),
        }
    }

    /// Drop nodes that cannot beat `count`.
    fn purge(&mut self, count: i64) {
        match self {
            Open::Heap(h) => h.retain(|n| n.bound > count),
            Open::Stack(s) => s.retain(|n| n.bound > count),
        }
    }

    fn max_bound(&self) -> Option<i64> {
        match self {
            Open::Heap(h) => h.peek().map(|n| n.bound),
            Open::Stack(s) => s.iter().map(|n| n.bound).max(),
        }
    }
}

struct Incumbent {
    t: Vec<f64>,
    count: i64,
}

struct Search<'a> {
    prob: &'a MioProblem,

    incumbent: Option<Incumbent>,
    /// Bounds of fathomed or unsolved nodes whose value was not attained.
    pending: Vec<i64>,
    live_bytes: Rc<Cell<usize>>,
    /// Root tableau, the warm start for nodes that carry no parent tableau.
    root: Option<SimplexState>,
    warm: bool,
    trace: Option<Vec<TraceRow>>,
}

/// Solve a single-α problem. Never errors on limits: the returned status and
/// gap describe how far the search got.
pub fn branch_and_bound(prob: &MioProblem, cfg: &MioConfig) -> Result<SolveResult> {
    let clock = Stopwatch::start();
    let n = prob.n as f64;
    let nb = prob.num_binaries();
    let mut search = Search {
        prob,

        incumbent: None,
        pending: Vec::new(),
        live_bytes: Rc::new(Cell::new(0)),
        root: None,
        warm: cfg.warm_lp,
        trace: cfg.trace.then(Vec::new),
    };
    search.seed_incumbent();

    let mut open = match cfg.node_selection {
        NodeSelection::BestBound => Open::Heap(BinaryHeap::new()),
        NodeSelection::DepthFirst => Open::Stack(Vec::new()),
    };
    open.push(Node {
        fixed: vec![-1; nb],
        branch: None,
        bound: i64::MAX,
        raw: f64::INFINITY,
        depth: 0,
        seq: 0,
        parent: None,
    });
    let mut seq = 1u64;
    let mut nodes = 0u64;
    let mut root_infeasible = false;
    let mut stopped: Option<SolveStatus> = None;
    let mut purged_at = i64::MIN;
    let eps_count = cfg.epsilon * n + 1e-9;

    loop {
        let inc = search.incumbent_count();
        let global = search.global_bound(&open);
        if open.max_bound().is_none() {
            break;
        }
        if nodes > 0 && ((global - inc) as f64) <= eps_count {
            break;
        }
        if cfg.node_limit.is_some_and(|l| nodes >= l) {
            stopped = Some(SolveStatus::NodeLimit);
            break;
        }
        if cfg.time_limit.is_some_and(|l| clock.seconds() >= l) {
            stopped = Some(SolveStatus::TimeLimit);
            break;
        }
        if inc > purged_at {
            open.purge(inc);
            purged_at = inc;
        }
        let Some(mut node) = open.pop() else { break };
        if node.bound <= inc {
            continue;
        }
        nodes += 1;
        let id = nodes;

        let solved = search.relax(&mut node);
        let (outcome, state) = match solved {
            Some(v) => v,
            None => {
                search.pending.push(node.bound);
                search.log(id, &node, node.bound, TraceAction::Unresolved, &open);
                continue;
            }
        };
        if outcome.status != LpStatus::Optimal {
            if node.depth == 0 {
                root_infeasible = true;
            }
            search.log(id, &node, node.bound, TraceAction::Infeasible, &open);
            continue;
        }
        let obj = outcome.objective_value + prob.constant;
        let bound = ((obj + BOUND_EPS).floor() as i64).min(node.bound);
        if bound <= search.incumbent_count() {
            search.log(id, &node, bound, TraceAction::Pruned, &open);
            continue;
        }

        let x = &outcome.x;
        let values: Vec<f64> = (0..nb).map(|b| x[prob.binary_column(b)]).collect();
        let branch_var = most_fractional(&values);
        let Some(bv) = branch_var else {
            let pattern: Vec<u8> = values.iter().map(|v| (*v > 0.5) as u8).collect();
            search.integral_node(&pattern, &x[..prob.num_continuous()], bound);
            search.log(id, &node, bound, TraceAction::Integral, &open);
            continue;
        };

        search.heuristic(&x[..prob.num_continuous()]);
        if bound <= search.incumbent_count() {
            search.log(id, &node, bound, TraceAction::Pruned, &open);
            continue;
        }

        if node.depth == 0 && cfg.warm_lp {
            search.root = state.clone();
        }
        let snapshot = state.and_then(|st| {
            let bytes = st.footprint();
            (cfg.warm_lp && search.live_bytes.get() + bytes <= cfg.tableau_memory_mb << 20).then(|| {
                search.live_bytes.set(search.live_bytes.get() + bytes);
                Rc::new(Snapshot {
                    state: Some(st),
                    bytes,
                    live: Rc::clone(&search.live_bytes),
                })
            })
        });
        let mut children = Vec::with_capacity(2);
        for v in [0u8, 1] {
            let mut fixed = node.fixed.clone();
            fixed[bv] = v as i8;
            children.push(Node {
                fixed,
                branch: Some((bv, v)),
                bound,
                raw: obj,
                depth: node.depth + 1,
                seq,
                parent: snapshot.clone(),
            });
            seq += 1;
        }
        drop(snapshot);
        match open {
            Open::Stack(_) => {
                // zero child on top
                children.reverse();
                for c in children {
                    open.push(c);
                }
            }
            Open::Heap(_) => {
                for c in children {
                    open.push(c);
                }
            }
        }
        search.log(id, &node, bound, TraceAction::Branched, &open);
    }

    let inc_count = search.incumbent_count();
    let mut global = search.global_bound(&open);
    if root_infeasible {
        global = inc_count;
    }
    let inc = search.incumbent.take();
    let t = match inc {
        Some(inc) => inc.t,
        None => search.fallback_point(),
    };
    let score_count = prob.true_count(&t);
    let score = score_count as f64 / n;
    let best_bound = (global.max(score_count)) as f64 / n;
    let mio_gap = (best_bound - score).max(0.0);
    let status = if root_infeasible {
        SolveStatus::Infeasible
    } else if mio_gap <= 1e-9 {
        SolveStatus::Optimal
    } else if let Some(s) = stopped {
        s
    } else {
        SolveStatus::GapReached
    };
    let k = prob.k;
    Ok(SolveResult {
        coefficients: Coefficients {
            alpha: prob.alpha,
            beta: t[..k].to_vec(),
            gamma: t[k..].to_vec(),
        },
        score,
        best_bound,
        mio_gap,
        nodes_explored: nodes,
        status,
        wall_seconds: clock.seconds(),
        trace: search.trace,
    })
}

/// Most fractional binary (`|v − 0.5|` smallest), lowest index on ties.
fn most_fractional(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (b, &v) in values.iter().enumerate() {
        if v.min(1.0 - v) <= INT_TOL {
            continue;
        }
        let dist = (v - 0.5).abs();
        if best.is_none_or(|(_, d)| dist < d) {
            best = Some((b, dist));
        }
    }
    best.map(|(b, _)| b)
}

impl Search<'_> {
    fn incumbent_count(&self) -> i64 {
        self.incumbent.as_ref().map_or(-1, |i| i.count)
    }

    fn global_bound(&self, open: &Open) -> i64 {
        let inc = self.incumbent_count();
        let pend = self.pending.iter().copied().max().unwrap_or(i64::MIN);
        let open_max = open.max_bound().unwrap_or(i64::MIN);
        let g = inc.max(pend).max(open_max);
        if g == i64::MAX {
            // root not yet solved: every observation could be classified correctly
            self.prob.n as i64
        } else {
            g
        }
    }

    fn offer(&mut self, t: Vec<f64>) {
        let count = self.prob.margin_count(&t);
        if count > self.incumbent_count() {
            self.incumbent = Some(Incumbent { t, count });
        }
    }

    /// The box point closest to the origin, when it respects the cardinality bound.
    fn seed_incumbent(&mut self) {
        let t = self.fallback_point();
        let k = self.prob.k;
        let nonzero = t[k..].iter().filter(|v| **v != 0.0).count();
        if nonzero <= self.prob.q {
            self.offer(t);
        }
    }

    fn fallback_point(&self) -> Vec<f64> {
        self.prob.bounds.iter().map(|&(lo, hi)| 0.0_f64.clamp(lo, hi)).collect()
    }

    /// Keep the `q` largest `|γ_j|` of a relaxation point and score it.
    fn heuristic(&mut self, t: &[f64]) {
        let (k, p, q) = (self.prob.k, self.prob.p, self.prob.q);
        let mut t = self.clamp(t);
        if p > q {
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by(|&a, &b| t[k + b].abs().total_cmp(&t[k + a].abs()).then(a.cmp(&b)));
            for &j in &order[q..] {
                t[k + j] = 0.0_f64.clamp(self.prob.bounds[k + j].0, self.prob.bounds[k + j].1);
            }
            let nonzero = t[k..].iter().filter(|v| **v != 0.0).count();
            if nonzero > q {
                return;
            }
        }
        self.offer(t);
    }

    fn clamp(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .zip(&self.prob.bounds)
            .map(|(v, &(lo, hi))| v.clamp(lo, hi))
            .collect()
    }

    fn integral_node(&mut self, pattern: &[u8], t_lp: &[f64], bound: i64) {
        let prob = self.prob;
        let n = prob.n;
        let value = prob.pattern_value(&pattern[..n]).min(bound);
        let labels: Vec<Option<bool>> = (0..n)
            .map(|i| match prob.formulation {
                Formulation::A => Some(pattern[i] == 1),
                Formulation::B => (pattern[i] == 1).then_some(prob.y[i] == 1),
            })
            .collect();
        let selected = &pattern[n..];
        if let Some(t) = self.recover(&labels, selected) {
            self.offer(t);
        }
        let mut t = self.clamp(t_lp);
        for (j, &e) in selected.iter().enumerate() {
            if e == 0 {
                t[prob.k + j] = 0.0_f64.clamp(prob.bounds[prob.k + j].0, prob.bounds[prob.k + j].1);
            }
        }
        self.offer(t);
        if self.incumbent_count() < value {
            self.pending.push(value);
        }
    }

    /// Coefficients realizing a sign pattern with the largest uniform margin:
    /// maximize `s` subject to `index_i ≥ s` for positives and
    /// `index_i ≤ −δ − s` for negatives, `s ∈ [0, 1]`.
    fn recover(&self, labels: &[Option<bool>], selected: &[u8]) -> Option<Vec<f64>> {
        let prob = self.prob;
        let (k, p) = (prob.k, prob.p);
        let nc = k + p;
        let mut bounds = prob.bounds.clone();
        for (j, &e) in selected.iter().enumerate() {
            if e == 0 {
                let (lo, hi) = bounds[k + j];
                let z = 0.0_f64.clamp(lo, hi);
                bounds[k + j] = (z, z);
            }
        }
        bounds.push((0.0, 1.0));
        let mut obj = vec![0.0; nc + 1];
        obj[nc] = 1.0;
        let mut lp = LinearProgram::new(obj, bounds).ok()?;
        let mut row = vec![0.0; nc + 1];
        for (i, label) in labels.iter().enumerate() {
            let Some(positive) = *label else { continue };
            row[..nc].copy_from_slice(prob.w.row(i));
            if positive {
                row[nc] = -1.0;
                lp.add_row(&row, Sense::Ge, -prob.offset[i]).ok()?;
            } else {
                row[nc] = 1.0;
                lp.add_row(&row, Sense::Le, -prob.delta - prob.offset[i]).ok()?;
            }
        }
        if lp.num_rows() == 0 {
            return Some(self.fallback_point());
        }
        let out = crate::lp::solve_lp(&lp).ok()?;
        if !out.is_optimal() {
            return None;
        }
        let mut t = self.clamp(&out.x[..nc]);
        for (j, &e) in selected.iter().enumerate() {
            if e == 0 {
                t[k + j] = 0.0_f64.clamp(prob.bounds[k + j].0, prob.bounds[k + j].1);
            }
        }
        Some(t)
    }

    /// Solve the node relaxation, warm from the parent's tableau when one is
    /// available. `None` when the simplex breaks down both ways.
    fn relax(&self, node: &mut Node) -> Option<(LpOutcome, Option<SimplexState>)> {
        if let (Some(parent), Some((b, v))) = (node.parent.take(), node.branch) {
            let mut st = match Rc::try_unwrap(parent) {
                Ok(mut snap) => snap.state.take().expect("snapshot holds a state"),
                Err(shared) => shared.state.as_ref().expect("snapshot holds a state").clone(),
            };
            let col = self.prob.binary_column(b);
            st.set_var_bounds(col, f64::from(v), f64::from(v));
            match st.reoptimize() {
                Ok(out) if out.status == LpStatus::Optimal => return Some((out, Some(st))),
                Ok(out) if out.status == LpStatus::Infeasible => return Some((out, None)),
                Ok(_) | Err(_) => {
                    log::debug!("warm re-optimization failed, solving node from scratch");
                }
            }
        }
        if self.warm && node.depth > 0 {
            if let Some(root) = &self.root {
                let mut st = root.clone();
                for (b, &f) in node.fixed.iter().enumerate() {
                    if f >= 0 {
                        let v = f64::from(f);
                        st.set_var_bounds(self.prob.binary_column(b), v, v);
                    }
                }
                match st.reoptimize() {
                    Ok(out) if out.status == LpStatus::Optimal => return Some((out, Some(st))),
                    Ok(out) if out.status == LpStatus::Infeasible => return Some((out, None)),
                    Ok(_) | Err(_) => {
                        log::debug!("re-optimization from the root failed, solving node from scratch");
                    }
                }
            }
        }
        let mut lp = self.prob.lp.clone();
        for (b, &f) in node.fixed.iter().enumerate() {
            if f >= 0 {
                let v = f64::from(f);
                lp.set_var_bounds(self.prob.binary_column(b), v, v);
            }
        }
        match SimplexState::solve(&lp) {
            Ok(v) => Some(v),
            Err(e) => {
                log::warn!("node relaxation failed: {e}");
                None
            }
        }
    }

    fn log(&mut self, id: u64, node: &Node, bound: i64, action: TraceAction, open: &Open) {
        if self.trace.is_none() && !log::log_enabled!(log::Level::Trace) {
            return;
        }
        let n = self.prob.n as f64;
        let shown = if bound == i64::MAX { self.prob.n as i64 } else { bound };
        let row = TraceRow {
            node: id,
            depth: node.depth,
            bound: shown as f64 / n,
            incumbent: self.incumbent_count().max(0) as f64 / n,
            best_bound: self.global_bound(open) as f64 / n,
            action,
        };
        log::trace!(
            "node {} depth {} bound {:.6} incumbent {:.6} best {:.6} {}",
            row.node,
            row.depth,
            row.bound,
            row.incumbent,
            row.best_bound,
            action.as_str()
        );
        if let Some(tr) = self.trace.as_mut() {
            tr.push(row);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::lp::Matrix;
    use crate::mio::{build_formulation_a, build_formulation_b};
    use crate::score::{empirical_score, l0_norm, ParamBox};

    fn one_point(y: u8) -> Dataset {
        Dataset::new(vec![y], vec![1.0], Matrix::zeros(1, 0), Matrix::zeros(1, 0)).unwrap()
    }

    #[test]
    fn single_observation_cases() {
        let bx = ParamBox::cube(0, 0, 10.0).unwrap();
        let cfg = MioConfig::default();
        let a = build_formulation_a(&one_point(1), 1, &bx, &cfg).unwrap();
        let r = branch_and_bound(&a, &cfg).unwrap();
        assert_eq!(r.score, 1.0);
        assert_eq!(r.status, SolveStatus::Optimal);
        let b = build_formulation_b(&one_point(1), 1, &bx, &cfg).unwrap();
        assert_eq!(branch_and_bound(&b, &cfg).unwrap().score, 1.0);
        let b0 = build_formulation_b(&one_point(0), 1, &bx, &cfg).unwrap();
        let r0 = branch_and_bound(&b0, &cfg).unwrap();
        assert_eq!(r0.score, 0.0);
        assert_eq!(r0.best_bound, 0.0);
    }

    #[test]
    fn q_zero_forces_gamma_to_zero() {
        // z alone would separate the data perfectly
        let d = Dataset::new(
            vec![1, 0],
            vec![-1.0, 1.0],
            Matrix::zeros(2, 0),
            Matrix::from_rows(&[vec![5.0], vec![-5.0]]).unwrap(),
        )
        .unwrap();
        let bx = ParamBox::cube(0, 1, 10.0).unwrap();
        let cfg = MioConfig::default();
        let r = branch_and_bound(&build_formulation_a(&d, 1, &bx, &cfg).unwrap(), &cfg).unwrap();
        assert_eq!(r.coefficients.gamma, vec![0.0]);
        assert_eq!(r.score, 0.0);
        let cfg1 = MioConfig { q: 1, ..cfg };
        let r1 = branch_and_bound(&build_formulation_a(&d, 1, &bx, &cfg1).unwrap(), &cfg1).unwrap();
        assert_eq!(r1.score, 1.0);
        assert_eq!(l0_norm(&r1.coefficients.gamma, 1e-6), 1);
    }

    #[test]
    fn most_fractional_prefers_half_and_low_index() {
        assert_eq!(most_fractional(&[0.0, 1.0, 0.25, 0.75]), Some(2));
        assert_eq!(most_fractional(&[0.0, 1.0 - 1e-8]), None);
        assert_eq!(most_fractional(&[0.2, 0.5, 0.5]), Some(1));
    }

    #[test]
    fn trace_bound_is_monotone() {
        let n = 14;
        let y: Vec<u8> = (0..n).map(|i| ((i * 7) % 3 == 0) as u8).collect();
        let x0: Vec<f64> = (0..n).map(|i| ((i as f64) * 1.3).sin()).collect();
        let z = Matrix::from_row_major(n, 3, (0..3 * n).map(|v| ((v as f64) * 0.77).cos()).collect())
            .unwrap();
        let d = Dataset::new(y, x0, Matrix::zeros(n, 0), z).unwrap().with_intercept().unwrap();
        let bx = ParamBox::cube(1, 3, 10.0).unwrap();
        for sel in [NodeSelection::BestBound, NodeSelection::DepthFirst] {
            let cfg = MioConfig { q: 2, trace: true, node_selection: sel, ..MioConfig::default() };
            let prob = build_formulation_a(&d, 1, &bx, &cfg).unwrap();
            let r = branch_and_bound(&prob, &cfg).unwrap();
            let tr = r.trace.as_ref().unwrap();
            assert_eq!(tr.len() as u64, r.nodes_explored);
            assert!(tr.windows(2).all(|w| w[1].best_bound <= w[0].best_bound + 1e-12));
            assert_eq!(r.score, empirical_score(&r.coefficients, &d).unwrap());
            assert_eq!(r.status, SolveStatus::Optimal);
        }
    }
}
