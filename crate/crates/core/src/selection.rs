//! Score tolerance rule, cross-validated choice of `q`, and the fit pipeline.

use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::data::{split_folds, Dataset};
use crate::error::{Error, Result};
use crate::mio::{merge_signs, solve_prescience, AlphaMode, MioConfig, SolveResult, SolveStatus};
use crate::score::{empirical_score, selected_indices, ParamBox, SELECTION_TOL};
use crate::warmstart::{fit_logit, warm_start, warm_start_applicable};

/// `min{0.05, 0.5 · sqrt(ln(max(p, n)) / n)}`.
pub fn epsilon_rule(n: usize, p: usize) -> f64 {
    let n = n.max(1);
    let m = n.max(p) as f64;
    (0.5 * (m.ln() / n as f64).sqrt()).min(0.05)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum EpsilonMode {
    /// Solve to optimality.
    #[default]
    Exact,
    /// [`epsilon_rule`] at the sample size being fitted.
    Rule,
    Fixed(f64),
}

impl EpsilonMode {
    pub fn value(self, n: usize, p: usize) -> f64 {
        match self {
            EpsilonMode::Exact => 0.0,
            EpsilonMode::Rule => epsilon_rule(n, p),
            EpsilonMode::Fixed(e) => e,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub q_candidates: Vec<usize>,
    pub folds: usize,
    pub epsilon_mode: EpsilonMode,
    pub warm_start: bool,
    pub tau: f64,
    pub seed: u64,
    /// Solver settings; `q` and `epsilon` are overwritten per solve.
    pub mio: MioConfig,
}

impl Default for FitSpec {
    fn default() -> Self {
        Self {
            q_candidates: vec![1],
            folds: 5,
            epsilon_mode: EpsilonMode::Exact,
            warm_start: false,
            tau: 1.5,
            seed: 0,
            mio: MioConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub q: usize,
    pub mean_score: f64,
    /// Held-out score per fold; `None` for skipped folds.
    pub fold_scores: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub q_star: usize,
    pub table: Vec<CvRow>,
    pub folds_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarmStartReport {
    pub used: bool,
    pub feasible: bool,
    pub volume_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub alpha: i8,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub selected_indices: Vec<usize>,
    pub focus_names: Vec<String>,
    pub aux_names: Vec<String>,
    pub q: usize,
    pub epsilon: f64,
    pub score: f64,
    pub best_bound: f64,
    pub mio_gap: f64,
    pub status: SolveStatus,
    pub nodes: u64,
    pub wall_seconds: f64,
    pub cv_table: Option<Vec<CvRow>>,
    pub warmstart: WarmStartReport,
}

fn validate(d: &Dataset, spec: &FitSpec) -> Result<()> {
    if spec.q_candidates.is_empty() {
        return Err(Error::arg("at least one candidate q is required"));
    }
    if let Some(q) = spec.q_candidates.iter().find(|&&q| q > d.p()) {
        return Err(Error::arg(format!("candidate q = {q} exceeds p = {}", d.p())));
    }
    if !(spec.tau >= 1.0) {
        return Err(Error::arg(format!("tau must be at least 1, got {}", spec.tau)));
    }
    Ok(())
}

/// Solve at a fixed `q`, with the warm-start refinement when requested.
pub fn solve_with_spec(
    d: &Dataset,
    bx: &ParamBox,
    spec: &FitSpec,
    q: usize,
) -> Result<(SolveResult, WarmStartReport)> {
    let cfg = MioConfig {
        q,
        epsilon: spec.epsilon_mode.value(d.n(), d.p()),
        ..spec.mio.clone()
    };
    let cold = WarmStartReport {
        used: false,
        feasible: false,
        volume_ratio: 1.0,
    };
    if !spec.warm_start {
        return Ok((solve_prescience(d, bx, &cfg)?, cold));
    }
    if !warm_start_applicable(d) {
        log::info!("warm start disabled: p = {} is not below n = {}", d.p(), d.n());
        return Ok((solve_prescience(d, bx, &cfg)?, cold));
    }
    let clock = Stopwatch::start();
    let logit = fit_logit(d)?;
    let signs: Vec<i8> = match cfg.alpha_mode {
        AlphaMode::Both => vec![1, -1],
        AlphaMode::Fixed(a) => vec![a],
    };
    let mut runs = Vec::with_capacity(2);
    for alpha in signs {
        let ws = warm_start(d, alpha, bx, &logit.fitted_probabilities, spec.tau)?;
        let sub = MioConfig {
            alpha_mode: AlphaMode::Fixed(alpha),
            ..cfg.clone()
        };
        let r = solve_prescience(d, &ws.search_box, &sub)?;
        runs.push((r, ws));
    }
    let (result, ws) = if runs.len() == 2 {
        let (minus, ws_minus) = runs.pop().expect("two runs");
        let (plus, ws_plus) = runs.pop().expect("two runs");
        let plus_wins = plus.score >= minus.score;
        let ws = if plus_wins { ws_plus } else { ws_minus };
        (merge_signs(plus, minus, clock.seconds()), ws)
    } else {
        runs.pop().expect("one run")
    };
    Ok((
        result,
        WarmStartReport {
            used: true,
            feasible: ws.refined.feasible,
            volume_ratio: ws.volume_ratio,
        },
    ))
}

/// K-fold cross-validation over the candidate `q` values. Every candidate is
/// fit on each training part and scored on the held-out part; `q*` maximizes
/// the mean held-out score, smallest `q` on ties.
pub fn cross_validate_q(d: &Dataset, spec: &FitSpec, bx: &ParamBox) -> Result<CvOutcome> {
    validate(d, spec)?;
    let folds = split_folds(d.n(), spec.folds, spec.seed)?;
    let mut usable = Vec::new();
    for f in 0..spec.folds {
        let train = d.subset_rows(&folds.train_indices(f));
        let constant = train.constant_columns();
        if constant.is_empty() {
            usable.push(f);
        } else {
            log::warn!(
                "fold {f} skipped: column(s) {} constant in the training part",
                constant.join(", ")
            );
        }
    }
    if usable.is_empty() {
        return Err(Error::NoUsableFolds);
    }
    let mut qs = spec.q_candidates.clone();
    qs.sort_unstable();
    qs.dedup();
    let jobs: Vec<(usize, usize)> = usable
        .iter()
        .flat_map(|&f| qs.iter().map(move |&q| (f, q)))
        .collect();
    let scores = crate::par::map(jobs.clone(), |(f, q)| -> Result<f64> {
        let train = d.subset_rows(&folds.train_indices(f));
        let test = d.subset_rows(&folds.test_indices(f));
        let (r, _) = solve_with_spec(&train, bx, spec, q)?;
        if r.status.is_limit() {
            log::warn!("fold {f}, q = {q}: solver stopped at a limit (gap {:.4})", r.mio_gap);
        }
        empirical_score(&r.coefficients, &test)
    });
    let mut table: Vec<CvRow> = qs
        .iter()
        .map(|&q| CvRow {
            q,
            mean_score: 0.0,
            fold_scores: vec![None; spec.folds],
        })
        .collect();
    for ((f, q), s) in jobs.into_iter().zip(scores) {
        let row = table.iter_mut().find(|r| r.q == q).expect("q in table");
        row.fold_scores[f] = Some(s?);
    }
    for row in &mut table {
        let used: Vec<f64> = row.fold_scores.iter().flatten().copied().collect();
        row.mean_score = used.iter().sum::<f64>() / used.len() as f64;
    }
    let mut q_star = table[0].q;
    let mut best = table[0].mean_score;
    for row in &table[1..] {
        if row.mean_score > best {
            best = row.mean_score;
            q_star = row.q;
        }
    }
    Ok(CvOutcome {
        q_star,
        table,
        folds_used: usable.len(),
    })
}

/// Choose `q` (by cross-validation when several candidates are given), then
/// solve on the full sample.
pub fn fit(d: &Dataset, spec: &FitSpec, bx: &ParamBox) -> Result<FitReport> {
    let clock = Stopwatch::start();
    let (q, cv) = if d.p() == 0 {
        (0, None)
    } else {
        validate(d, spec)?;
        if spec.q_candidates.len() > 1 {
            let cv = cross_validate_q(d, spec, bx)?;
            (cv.q_star, Some(cv.table))
        } else {
            (spec.q_candidates[0], None)
        }
    };
    let (r, warm) = solve_with_spec(d, bx, spec, q)?;
    let c = &r.coefficients;
    Ok(FitReport {
        alpha: c.alpha,
        beta: c.beta.clone(),
        gamma: c.gamma.clone(),
        selected_indices: selected_indices(&c.gamma, SELECTION_TOL),
        focus_names: d.focus_names().to_vec(),
        aux_names: d.aux_names().to_vec(),
        q,
        epsilon: spec.epsilon_mode.value(d.n(), d.p()),
        score: r.score,
        best_bound: r.best_bound,
        mio_gap: r.mio_gap,
        status: r.status,
        nodes: r.nodes_explored,
        wall_seconds: clock.seconds(),
        cv_table: cv,
        warmstart: warm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Matrix;

    #[test]
    fn epsilon_rule_values() {
        assert!((epsilon_rule(842, 9) - 0.5 * (842f64.ln() / 842.0).sqrt()).abs() < 1e-15);
        assert!((epsilon_rule(842, 9) - 0.04472).abs() < 5e-5);
        assert!((epsilon_rule(674, 9) - 0.04915).abs() < 5e-5);
        assert_eq!(epsilon_rule(100, 200), 0.05);
    }

    #[test]
    fn epsilon_modes() {
        assert_eq!(EpsilonMode::Exact.value(50, 3), 0.0);
        assert_eq!(EpsilonMode::Fixed(0.01).value(50, 3), 0.01);
        assert_eq!(EpsilonMode::Rule.value(842, 9), epsilon_rule(842, 9));
    }

    fn small() -> Dataset {
        let x0 = vec![-1.5, -0.7, 0.2, 0.9, 1.4, -0.3, 0.6, -1.1];
        let z1 = vec![0.3, -0.2, 0.8, -0.5, 0.1, 0.9, -0.4, 0.7];
        let y = x0
            .iter()
            .zip(&z1)
            .map(|(a, b): (&f64, &f64)| (a + 0.5 * b >= 0.0) as u8)
            .collect();
        Dataset::new(y, x0, Matrix::zeros(8, 0), Matrix::from_columns(8, &[z1]).unwrap())
            .unwrap()
            .with_intercept()
            .unwrap()
    }

    #[test]
    fn p_zero_skips_cv() {
        let d = Dataset::new(
            vec![1, 0, 1],
            vec![0.5, -1.0, 2.0],
            Matrix::zeros(3, 0),
            Matrix::zeros(3, 0),
        )
        .unwrap();
        let spec = FitSpec { q_candidates: vec![1, 2], ..FitSpec::default() };
        let r = fit(&d, &spec, &ParamBox::cube(0, 0, 10.0).unwrap()).unwrap();
        assert_eq!(r.q, 0);
        assert!(r.cv_table.is_none());
        assert_eq!(r.score, 1.0);
    }

    #[test]
    fn report_score_matches_recomputation() {
        let d = small();
        let bx = ParamBox::cube(1, 1, 10.0).unwrap();
        let r = fit(&d, &FitSpec::default(), &bx).unwrap();
        let c = crate::score::Coefficients::new(r.alpha, r.beta.clone(), r.gamma.clone()).unwrap();
        assert_eq!(r.score, empirical_score(&c, &d).unwrap());
    }

    #[test]
    fn leave_one_out_runs() {
        let d = small().subset_rows(&[0, 1, 2, 3, 4, 5]);
        let spec = FitSpec { q_candidates: vec![0, 1], folds: 6, ..FitSpec::default() };
        let cv = cross_validate_q(&d, &spec, &ParamBox::cube(1, 1, 10.0).unwrap()).unwrap();
        assert_eq!(cv.table.len(), 2);
        assert_eq!(cv.folds_used, 6);
    }

    #[test]
    fn ties_choose_smallest_q() {
        // z carries no information beyond x0, so every q scores the same
        let x0: Vec<f64> = (0..10).map(|i| i as f64 - 4.5).collect();
        let y = x0.iter().map(|&v| (v >= 0.0) as u8).collect();
        let z = Matrix::from_columns(10, &[x0.iter().map(|v| v * 0.1).collect()]).unwrap();
        let d = Dataset::new(y, x0, Matrix::zeros(10, 0), z).unwrap();
        let spec = FitSpec { q_candidates: vec![1, 0], ..FitSpec::default() };
        let cv = cross_validate_q(&d, &spec, &ParamBox::cube(0, 1, 10.0).unwrap()).unwrap();
        assert_eq!(cv.table[0].mean_score, cv.table[1].mean_score);
        assert_eq!(cv.q_star, 0);
    }

    #[test]
    fn candidates_above_p_are_rejected() {
        let spec = FitSpec { q_candidates: vec![2], ..FitSpec::default() };
        assert!(matches!(
            fit(&small(), &spec, &ParamBox::cube(1, 1, 10.0).unwrap()),
            Err(Error::Argument(_))
        ));
    }
}
