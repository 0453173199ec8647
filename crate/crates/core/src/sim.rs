//! Monte Carlo designs and the selection / prediction metrics.
//!
//! `V ~ N(0, Σ)` with `Σ_ij = ρ^|i−j|` has `p + 1` coordinates. The focus
//! covariates are `X0 = V1` and an intercept, the auxiliary covariates are
//! `Z = (V2, …, V_{p+1})`, and `Y = 1{W'θ* ≥ σ(W) ξ}` with `θ* = (1, 0, θ3, 0, …)`.
//!
//! Random numbers come from ChaCha8 seeded with the experiment seed, one
//! stream per repetition (`set_stream(rep)`), so a repetition draws the same
//! data whether the reps run in parallel or not. Within a repetition the
//! training sample is drawn first, then the validation sample; each
//! observation draws `p + 1` ziggurat normals for `V` followed by one for `ξ`.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::clock::Stopwatch;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::lp::{cholesky, Matrix};
use crate::mio::{solve_prescience, AlphaMode, Formulation, MioConfig, NodeSelection, SolveStatus};
use crate::score::{empirical_score, selected_indices, Coefficients, ParamBox, SELECTION_TOL};
use crate::selection::{epsilon_rule, fit, EpsilonMode, FitSpec};

pub const RNG_NAME: &str = "ChaCha8 (one stream per rep), ziggurat normals";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Homoskedastic noise, `σ(W) = 0.25`.
    I,
    /// `σ(W) = 0.25 (1 + 2 (V1 + V2)² + (V1 + V2)⁴)`.
    II,
}

impl Variant {
    pub fn default_theta3(self) -> f64 {
        match self {
            Variant::I => -0.35,
            Variant::II => -1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub variant: Variant,
    pub p: usize,
    pub n_train: usize,
    pub n_valid: usize,
    pub reps: usize,
    pub seed: u64,
    pub theta3: f64,
    pub rho: f64,
    /// Multiplies `σ(W)`; values near zero give the noiseless rule.
    pub noise_scale: f64,
}

impl DgpSpec {
    pub fn new(variant: Variant, p: usize, n_train: usize, reps: usize, seed: u64) -> Self {
        Self {
            variant,
            p,
            n_train,
            n_valid: 5000,
            reps,
            seed,
            theta3: variant.default_theta3(),
            rho: 0.25,
            noise_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::arg("p must be at least 1"));
        }
        if self.reps == 0 {
            return Err(Error::arg("reps must be at least 1"));
        }
        if self.n_train < 2 || self.n_valid == 0 {
            return Err(Error::arg("n_train must be at least 2 and n_valid at least 1"));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::arg(format!("rho must lie in (-1, 1), got {}", self.rho)));
        }
        if !(self.noise_scale >= 0.0) || !self.theta3.is_finite() {
            return Err(Error::arg("noise_scale must be non-negative and theta3 finite"));
        }
        Ok(())
    }

    pub fn theta_star(&self) -> Coefficients {
        let mut gamma = vec![0.0; self.p];
        gamma[0] = self.theta3;
        Coefficients {
            alpha: 1,
            beta: vec![0.0],
            gamma,
        }
    }
}

/// `Σ_ij = ρ^|i−j|`.
pub fn covariance(dim: usize, rho: f64) -> Matrix {
    let mut s = Matrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            s[(i, j)] = rho.powi(i.abs_diff(j) as i32);
        }
    }
    s
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub train: Dataset,
    pub valid: Dataset,
    pub theta_star: Coefficients,
}

pub fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Draw the training and validation samples of repetition `rep`.
pub fn sample_dataset(spec: &DgpSpec, rep: u64) -> Result<Sample> {
    spec.validate()?;
    let chol = cholesky(&covariance(spec.p + 1, spec.rho))?;
    let mut rng = rep_rng(spec.seed, rep);
    let train = draw(spec, &chol, spec.n_train, &mut rng)?;
    let valid = draw(spec, &chol, spec.n_valid, &mut rng)?;
    Ok(Sample {
        train,
        valid,
        theta_star: spec.theta_star(),
    })
}

fn draw(spec: &DgpSpec, chol: &Matrix, n: usize, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let dim = spec.p + 1;
    let mut y = Vec::with_capacity(n);
    let mut x0 = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n * spec.p);
    let mut e = vec![0.0; dim];
    for _ in 0..n {
        for v in e.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        let v = chol.mul_vec(&e);
        let xi: f64 = StandardNormal.sample(rng);
        let sigma = match spec.variant {
            Variant::I => 0.25,
            Variant::II => {
                let s = v[0] + v[1];
                0.25 * (1.0 + 2.0 * s * s + s.powi(4))
            }
        };
        let index = v[0] + spec.theta3 * v[1];
        y.push((index >= spec.noise_scale * sigma * xi) as u8);
        x0.push(v[0]);
        z.extend_from_slice(&v[1..]);
    }
    let aux = (1..=spec.p).map(|j| format!("Z{j}")).collect();
    Dataset::with_names(
        y,
        x0,
        Matrix::zeros(n, 0),
        Matrix::from_row_major(n, spec.p, z)?,
        "Y".into(),
        "X0".into(),
        Vec::new(),
        aux,
        None,
    )?
    .with_intercept()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Prescience(usize),
    PreCv(Vec<usize>),
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Prescience(q) => format!("PRESCIENCE({q})"),
            Method::PreCv(_) => "PRE_CV".into(),
        }
    }
}

/// One method on one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub method: String,
    pub q: usize,
    pub gamma: Vec<f64>,
    pub in_score: f64,
    pub out_score: f64,
    pub in_score_star: f64,
    pub out_score_star: f64,
    pub status: SolveStatus,
    pub mio_gap: f64,
    pub nodes: u64,
    pub wall_seconds: f64,
}

impl RepOutcome {
    pub fn evaluate(rep: usize, method: &str, q: usize, c: &Coefficients, s: &Sample) -> Result<Self> {
        Ok(Self {
            rep,
            method: method.to_string(),
            q,
            gamma: c.gamma.clone(),
            in_score: empirical_score(c, &s.train)?,
            out_score: empirical_score(c, &s.valid)?,
            in_score_star: empirical_score(&s.theta_star, &s.train)?,
            out_score_star: empirical_score(&s.theta_star, &s.valid)?,
            status: SolveStatus::Optimal,
            mio_gap: 0.0,
            nodes: 0,
            wall_seconds: 0.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub method: String,
    pub corr_sel: f64,
    pub orac_sel: f64,
    pub num_irrel: f64,
    pub in_score: f64,
    pub in_rs: f64,
    pub out_score: f64,
    pub out_rs: f64,
    pub reps: usize,
    /// Repetitions that stopped at a node or time limit.
    pub limit_hits: usize,
}

/// Average the per-rep outcomes of one method. `relevant` lists the
/// auxiliary coordinates with non-zero true coefficients.
pub fn compute_metrics(method: &str, outcomes: &[RepOutcome], relevant: &[usize]) -> Result<MetricsSummary> {
    if outcomes.is_empty() {
        return Err(Error::arg("metrics need at least one repetition"));
    }
    let r = outcomes.len() as f64;
    let mut corr = 0usize;
    let mut orac = 0usize;
    let mut irrel = 0usize;
    let (mut ins, mut inrs, mut outs, mut outrs) = (0.0, 0.0, 0.0, 0.0);
    for o in outcomes {
        let sel = selected_indices(&o.gamma, SELECTION_TOL);
        let hits = relevant.iter().all(|j| sel.contains(j));
        let extra = sel.iter().filter(|j| !relevant.contains(j)).count();
        corr += hits as usize;
        orac += (hits && extra == 0) as usize;
        irrel += extra;
        ins += o.in_score;
        outs += o.out_score;
        inrs += o.in_score / o.in_score_star;
        outrs += o.out_score / o.out_score_star;
    }
    Ok(MetricsSummary {
        method: method.to_string(),
        corr_sel: corr as f64 / r,
        orac_sel: orac as f64 / r,
        num_irrel: irrel as f64 / r,
        in_score: ins / r,
        in_rs: inrs / r,
        out_score: outs / r,
        out_rs: outrs / r,
        reps: outcomes.len(),
        limit_hits: outcomes.iter().filter(|o| o.status.is_limit()).count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub method: String,
    pub mean: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

pub fn timing_row(method: &str, outcomes: &[RepOutcome]) -> TimingRow {
    let mut t: Vec<f64> = outcomes.iter().map(|o| o.wall_seconds).collect();
    t.sort_by(f64::total_cmp);
    let m = t.len();
    let median = if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        t[m / 2]
    } else {
        0.5 * (t[m / 2 - 1] + t[m / 2])
    };
    TimingRow {
        method: method.to_string(),
        mean: t.iter().sum::<f64>() / m as f64,
        min: t.first().copied().unwrap_or(f64::NAN),
        median,
        max: t.last().copied().unwrap_or(f64::NAN),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub metrics: Vec<MetricsSummary>,
    pub timing: Vec<TimingRow>,
    /// Rep-major, methods in the order given.
    pub outcomes: Vec<RepOutcome>,
}

/// Run every method on every repetition. `mio` supplies solver settings;
/// `q` and `epsilon` are set per method (exact when `p < n`, the tolerance
/// rule otherwise).
pub fn run_experiment(spec: &DgpSpec, methods: &[Method], mio: &MioConfig, folds: usize) -> Result<Experiment> {
    spec.validate()?;
    if methods.is_empty() {
        return Err(Error::arg("no methods to run"));
    }
    for m in methods {
        let qs = match m {
            Method::Prescience(q) => vec![*q],
            Method::PreCv(c) => c.clone(),
        };
        if qs.is_empty() || qs.iter().any(|&q| q > spec.p) {
            return Err(Error::arg(format!("{}: candidate q must be between 0 and p", m.label())));
        }
    }
    let exact = spec.p < spec.n_train;
    let bx = ParamBox::cube(1, spec.p, 10.0)?;
    let per_rep = crate::par::map((0..spec.reps).collect(), |rep| -> Result<Vec<RepOutcome>> {
        let s = sample_dataset(spec, rep as u64)?;
        let mut out = Vec::with_capacity(methods.len());
        for m in methods {
            let clock = Stopwatch::start();
            let o = match m {
                Method::Prescience(q) => {
                    let cfg = MioConfig {
                        q: *q,
                        epsilon: if exact { 0.0 } else { epsilon_rule(spec.n_train, spec.p) },
                        trace: false,
                        ..mio.clone()
                    };
                    let r = solve_prescience(&s.train, &bx, &cfg)?;
                    let mut o = RepOutcome::evaluate(rep, &m.label(), *q, &r.coefficients, &s)?;
                    o.status = r.status;
                    o.mio_gap = r.mio_gap;
                    o.nodes = r.nodes_explored;
                    o
                }
                Method::PreCv(cands) => {
                    let fs = FitSpec {
                        q_candidates: cands.clone(),
                        folds,
                        epsilon_mode: if exact { EpsilonMode::Exact } else { EpsilonMode::Rule },
                        warm_start: false,
                        tau: 1.5,
                        seed: spec.seed.wrapping_add(rep as u64),
                        mio: MioConfig { trace: false, ..mio.clone() },
                    };
                    let r = fit(&s.train, &fs, &bx)?;
                    let c = Coefficients {
                        alpha: r.alpha,
                        beta: r.beta.clone(),
                        gamma: r.gamma.clone(),
                    };
                    let mut o = RepOutcome::evaluate(rep, &m.label(), r.q, &c, &s)?;
                    o.status = r.status;
                    o.mio_gap = r.mio_gap;
                    o.nodes = r.nodes;
                    o
                }
            };
            if o.status.is_limit() {
                log::warn!("rep {rep}, {}: stopped at a limit with gap {:.4}", o.method, o.mio_gap);
            }
            out.push(RepOutcome {
                wall_seconds: clock.seconds(),
                ..o
            });
        }
        Ok(out)
    });
    let mut outcomes = Vec::with_capacity(spec.reps * methods.len());
    for r in per_rep {
        outcomes.extend(r?);
    }
    let relevant: Vec<usize> = (0..spec.p).filter(|&j| spec.theta_star().gamma[j] != 0.0).collect();
    let mut metrics = Vec::new();
    let mut timing = Vec::new();
    for m in methods {
        let label = m.label();
        let mine: Vec<RepOutcome> = outcomes.iter().filter(|o| o.method == label).cloned().collect();
        metrics.push(compute_metrics(&label, &mine, &relevant)?);
        timing.push(timing_row(&label, &mine));
    }
    Ok(Experiment {
        metrics,
        timing,
        outcomes,
    })
}

pub fn write_metrics_csv<W: Write>(w: W, rows: &[MetricsSummary]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "method", "Corr_sel", "Orac_sel", "Num_irrel", "in_Score", "in_RS", "out_Score", "out_RS", "reps",
        "limit_hits",
    ])?;
    for m in rows {
        wtr.write_record([
            m.method.clone(),
            m.corr_sel.to_string(),
            m.orac_sel.to_string(),
            m.num_irrel.to_string(),
            m.in_score.to_string(),
            m.in_rs.to_string(),
            m.out_score.to_string(),
            m.out_rs.to_string(),
            m.reps.to_string(),
            m.limit_hits.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::Io { path: "<metrics>".into(), source: e })?;
    Ok(())
}

pub fn write_timing_csv<W: Write>(w: W, rows: &[TimingRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["method", "mean", "min", "median", "max"])?;
    for t in rows {
        wtr.write_record([
            t.method.clone(),
            t.mean.to_string(),
            t.min.to_string(),
            t.median.to_string(),
            t.max.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::Io { path: "<timing>".into(), source: e })?;
    Ok(())
}

/// Per-rep solver outcomes, without timings.
pub fn write_nodes_csv<W: Write>(w: W, rows: &[RepOutcome]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["rep", "method", "q", "status", "nodes", "mio_gap", "in_score", "out_score"])?;
    for o in rows {
        wtr.write_record([
            o.rep.to_string(),
            o.method.clone(),
            o.q.to_string(),
            format!("{:?}", o.status),
            o.nodes.to_string(),
            o.mio_gap.to_string(),
            o.in_score.to_string(),
            o.out_score.to_string(),
        ])?;
    }
    wtr.flush().map_err(|e| Error::Io { path: "<nodes>".into(), source: e })?;
    Ok(())
}

/// Experiment settings read from a `key = value` file.
///
/// One setting per line; `#` starts a comment and blank lines are ignored.
/// Keys: `variant` (I or II), `p`, `n`, `n_valid`, `reps`, `seed`, `theta3`,
/// `rho`, `noise_scale`, `methods` (comma list of q values and `cv`, e.g.
/// `1,2,3,cv`), `cv_candidates` (comma list), `folds`, `formulation` (A or B),
/// `node_selection` (best-bound or depth-first), `alpha` (+1, -1 or both),
/// `delta`, `node_limit`, `time_limit` (seconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dgp: DgpSpec,
    pub methods: Vec<Method>,
    pub folds: usize,
    pub mio: MioConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dgp: DgpSpec::new(Variant::I, 10, 100, 20, 0),
            methods: vec![Method::Prescience(1)],
            folds: 5,
            mio: MioConfig {
                alpha_mode: AlphaMode::Fixed(1),
                ..MioConfig::default()
            },
        }
    }
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        let mut theta3 = None;
        let mut methods = None;
        let mut cands = vec![1, 2, 3];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::arg(format!("config line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(key.trim(), value.trim(), &mut theta3, &mut methods, &mut cands)
                .map_err(|e| Error::arg(format!("config line {}: {e}", lineno + 1)))?;
        }
        cfg.finish(theta3, methods, cands);
        Ok(cfg)
    }

    /// Apply one setting (used by the config file and command-line overrides).
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let mut theta3 = None;
        let mut methods = None;
        let mut cands = match self.methods.iter().find_map(|m| match m {
            Method::PreCv(c) => Some(c.clone()),
            _ => None,
        }) {
            Some(c) => c,
            None => vec![1, 2, 3],
        };
        self.set(key, value, &mut theta3, &mut methods, &mut cands)?;
        if let Some(t) = theta3 {
            self.dgp.theta3 = t;
        }
        self.finish(None, methods, cands);
        Ok(())
    }

    fn set(
        &mut self,
        key: &str,
        value: &str,
        theta3: &mut Option<f64>,
        methods: &mut Option<Vec<String>>,
        cands: &mut Vec<usize>,
    ) -> Result<()> {
        let bad = |what: &str| Error::arg(format!("invalid {what} `{value}`"));
        let num = |what: &str| value.parse::<f64>().map_err(|_| bad(what));
        let int = |what: &str| value.parse::<u64>().map_err(|_| bad(what));
        match key {
            "variant" => {
                self.dgp.variant = match value.to_ascii_uppercase().as_str() {
                    "I" | "1" => Variant::I,
                    "II" | "2" => Variant::II,
                    _ => return Err(bad("variant")),
                };
                if theta3.is_none() {
                    self.dgp.theta3 = self.dgp.variant.default_theta3();
                }
            }
            "p" => self.dgp.p = int("p")? as usize,
            "n" | "n_train" => self.dgp.n_train = int("n")? as usize,
            "n_valid" => self.dgp.n_valid = int("n_valid")? as usize,
            "reps" => self.dgp.reps = int("reps")? as usize,
            "seed" => self.dgp.seed = int("seed")?,
            "theta3" => *theta3 = Some(num("theta3")?),
            "rho" => self.dgp.rho = num("rho")?,
            "noise_scale" => self.dgp.noise_scale = num("noise_scale")?,
            "methods" => *methods = Some(split_list(value)),
            "cv_candidates" => {
                *cands = split_list(value)
                    .iter()
                    .map(|s| s.parse().map_err(|_| bad("cv_candidates")))
                    .collect::<Result<_>>()?;
            }
            "folds" => self.folds = int("folds")? as usize,
            "formulation" => {
                self.mio.formulation = match value.to_ascii_uppercase().as_str() {
                    "A" => Formulation::A,
                    "B" => Formulation::B,
                    _ => return Err(bad("formulation")),
                }
            }
            "node_selection" => {
                self.mio.node_selection = match value {
                    "best-bound" | "best_bound" => NodeSelection::BestBound,
                    "depth-first" | "depth_first" => NodeSelection::DepthFirst,
                    _ => return Err(bad("node_selection")),
                }
            }
            "alpha" => {
                self.mio.alpha_mode = match value {
                    "+1" | "1" => AlphaMode::Fixed(1),
                    "-1" => AlphaMode::Fixed(-1),
                    "both" => AlphaMode::Both,
                    _ => return Err(bad("alpha")),
                }
            }
            "delta" => self.mio.delta = num("delta")?,
            "node_limit" => self.mio.node_limit = Some(int("node_limit")?),
            "time_limit" => self.mio.time_limit = Some(num("time_limit")?),
            _ => return Err(Error::arg(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    fn finish(&mut self, theta3: Option<f64>, methods: Option<Vec<String>>, cands: Vec<usize>) {
        if let Some(t) = theta3 {
            self.dgp.theta3 = t;
        }
        let names: Vec<String> = match methods {
            Some(m) => m,
            None => self
                .methods
                .iter()
                .map(|m| match m {
                    Method::Prescience(q) => q.to_string(),
                    Method::PreCv(_) => "cv".into(),
                })
                .collect(),
        };
        self.methods = names
            .iter()
            .filter_map(|s| {
                if s.eq_ignore_ascii_case("cv") {
                    Some(Method::PreCv(cands.clone()))
                } else {
                    s.parse().ok().map(Method::Prescience)
                }
            })
            .collect();
    }

    /// Method list check that `finish` cannot report (bad entries are dropped there).
    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        if self.methods.is_empty() {
            return Err(Error::arg("no valid methods configured"));
        }
        if self.folds < 2 {
            return Err(Error::arg("folds must be at least 2"));
        }
        Ok(())
    }

    pub fn run(&self) -> Result<Experiment> {
        self.validate()?;
        run_experiment(&self.dgp, &self.methods, &self.mio, self.folds)
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect()
}
