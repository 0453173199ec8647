use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use prescience::{AlphaMode, EpsilonMode, Formulation, NodeSelection};

/// Best-subset maximum score binary prediction.
///
/// Settings can also come from a `key = value` file given with `--config`;
/// keys are long flag names (`q_candidates` and `q-candidates` both work),
/// `#` starts a comment, and flags given on the command line take precedence.
/// Boolean flags take `true` or `false`.
#[derive(Debug, Parser)]
#[command(name = "prescience", version, args_override_self = true)]
pub struct Cli {
    /// Settings file applied before the command-line flags
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for the solver and harness pools (1 = single-threaded)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// More logging (-v debug, -vv trace with node-level solver output)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Only warnings and errors
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a rule and write report.json
    Fit(FitArgs),
    /// Cross-validate the cardinality bound q and write cv.csv
    Cv(CvArgs),
    /// Run a Monte Carlo experiment and write metrics, timing and per-rep tables
    Simulate(SimArgs),
    /// Warm-start parameter bounds from a logit fit, written to bounds.csv
    Bounds(BoundsArgs),
    /// Compare branch-and-bound with exhaustive search on small random instances
    OracleCheck(OracleArgs),
    /// Write a synthetic mode-choice CSV with columns y, DCOST, CARS, DOVTT, DIVTT
    ///
    /// CARS takes 0, 1, 2, 3 with probabilities 0.15, 0.45, 0.30, 0.10;
    /// DCOST ~ N(0.5, 0.8²) dollars, DOVTT ~ N(12, 8²) and DIVTT ~ N(10, 15²)
    /// minutes, independent. The outcome is
    /// y = 1{DCOST + 1.1 (CARS − 1) + 0.05 DOVTT + 0.02 DIVTT − 0.8 + 0.7 e ≥ 0}
    /// with e standard logistic.
    GenSynthetic(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV with a header row
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// 0/1 outcome column
    #[arg(long, default_value = "y")]
    pub outcome: String,
    /// Focus covariate whose coefficient is normalized to ±1
    #[arg(long)]
    pub x0: String,
    /// Further focus covariates, always included
    #[arg(long, value_delimiter = ',')]
    pub focus: Vec<String>,
    /// Auxiliary covariates subject to selection (default: all other columns)
    #[arg(long, value_delimiter = ',')]
    pub aux: Option<Vec<String>>,
    /// Do not add an intercept to the focus covariates
    #[arg(long)]
    pub no_intercept: bool,
    /// Standardize every covariate to mean 0 and variance 1
    #[arg(long)]
    pub standardize: bool,
    /// Replace these auxiliary columns by their quadratic expansion
    #[arg(long, value_delimiter = ',')]
    pub quadratic: Option<Vec<String>>,
    /// With both --standardize and --quadratic: which happens first
    #[arg(long, value_enum, default_value_t = PrepOrderArg::StandardizeFirst)]
    pub prep_order: PrepOrderArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PrepOrderArg {
    StandardizeFirst,
    ExpandFirst,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormulationArg {
    A,
    B,
}

impl From<FormulationArg> for Formulation {
    fn from(f: FormulationArg) -> Self {
        match f {
            FormulationArg::A => Formulation::A,
            FormulationArg::B => Formulation::B,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NodeSelectionArg {
    BestBound,
    DepthFirst,
}

impl From<NodeSelectionArg> for NodeSelection {
    fn from(s: NodeSelectionArg) -> Self {
        match s {
            NodeSelectionArg::BestBound => NodeSelection::BestBound,
            NodeSelectionArg::DepthFirst => NodeSelection::DepthFirst,
        }
    }
}

pub fn parse_alpha(s: &str) -> Result<AlphaMode, String> {
    match s {
        "both" => Ok(AlphaMode::Both),
        "+1" | "1" => Ok(AlphaMode::Fixed(1)),
        "-1" => Ok(AlphaMode::Fixed(-1)),
        _ => Err(format!("expected both, +1 or -1, got `{s}`")),
    }
}

pub fn parse_epsilon(s: &str) -> Result<EpsilonMode, String> {
    match s {
        "exact" => Ok(EpsilonMode::Exact),
        "rule" => Ok(EpsilonMode::Rule),
        _ => match s.parse::<f64>() {
            Ok(v) if v >= 0.0 => Ok(EpsilonMode::Fixed(v)),
            _ => Err(format!("expected exact, rule or a non-negative number, got `{s}`")),
        },
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value_t = FormulationArg::A)]
    pub formulation: FormulationArg,
    #[arg(long, value_enum, default_value_t = NodeSelectionArg::BestBound)]
    pub node_selection: NodeSelectionArg,
    /// Sign of the x0 coefficient: both, +1 or -1
    #[arg(long, default_value = "both", value_parser = parse_alpha, allow_hyphen_values = true)]
    pub alpha: AlphaMode,
    /// Score tolerance: exact, rule (depends on n and p) or a number
    #[arg(long, default_value = "exact", value_parser = parse_epsilon)]
    pub epsilon: EpsilonMode,
    /// Margin separating predicted zeros from the decision boundary
    #[arg(long, default_value_t = 1e-6)]
    pub delta: f64,
    #[arg(long)]
    pub node_limit: Option<u64>,
    /// Seconds per branch-and-bound run
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Half-width L of the parameter box [-L, L]
    #[arg(long, default_value_t = 10.0)]
    pub bound: f64,
    /// Search a logit-refined box instead of the full box
    #[arg(long)]
    pub warm_start: bool,
    /// Enlargement factor of the refined box
    #[arg(long, default_value_t = 1.5)]
    pub tau: f64,
    /// Memory for stored simplex tableaus, MiB
    #[arg(long, default_value_t = 512)]
    pub tableau_memory_mb: usize,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Cardinality bound on the auxiliary coefficients
    #[arg(long, conflicts_with = "q_candidates")]
    pub q: Option<usize>,
    /// Candidate bounds, chosen by cross-validation
    #[arg(long, value_delimiter = ',')]
    pub q_candidates: Option<Vec<usize>>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".", value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    pub q_candidates: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".", value_name = "DIR")]
    pub out_dir: PathBuf,
}

/// Unset options keep the experiment defaults: design I, p = 10, n = 100,
/// 5000 validation rows, 20 reps, seed 0, q = 1 only, alpha fixed at +1.
#[derive(Debug, Args)]
pub struct SimArgs {
    /// I (homoskedastic) or II (heteroskedastic)
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    /// Training sample size
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub n_valid: Option<String>,
    #[arg(long)]
    pub reps: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta3: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<String>,
    #[arg(long)]
    pub noise_scale: Option<String>,
    /// Comma list of q values and `cv`, e.g. 1,2,3,cv
    #[arg(long)]
    pub methods: Option<String>,
    /// Candidate q values for the cv method
    #[arg(long)]
    pub cv_candidates: Option<String>,
    #[arg(long)]
    pub folds: Option<String>,
    /// A or B
    #[arg(long)]
    pub formulation: Option<String>,
    /// best-bound or depth-first
    #[arg(long)]
    pub node_selection: Option<String>,
    /// +1, -1 or both
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub node_limit: Option<String>,
    #[arg(long)]
    pub time_limit: Option<String>,
    #[arg(long, default_value = ".", value_name = "DIR")]
    pub out_dir: PathBuf,
}

impl SimArgs {
    /// Set options as `(config key, value)` pairs.
    pub fn settings(&self) -> Vec<(&'static str, &str)> {
        let all = [
            ("variant", &self.variant),
            ("p", &self.p),
            ("n", &self.n),
            ("n_valid", &self.n_valid),
            ("reps", &self.reps),
            ("seed", &self.seed),
            ("theta3", &self.theta3),
            ("rho", &self.rho),
            ("noise_scale", &self.noise_scale),
            ("methods", &self.methods),
            ("cv_candidates", &self.cv_candidates),
            ("folds", &self.folds),
            ("formulation", &self.formulation),
            ("node_selection", &self.node_selection),
            ("alpha", &self.alpha),
            ("delta", &self.delta),
            ("node_limit", &self.node_limit),
            ("time_limit", &self.time_limit),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Sign of the x0 coefficient: both, +1 or -1
    #[arg(long, default_value = "+1", value_parser = parse_alpha, allow_hyphen_values = true)]
    pub alpha: AlphaMode,
    #[arg(long, default_value_t = 1.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 10.0)]
    pub bound: f64,
    #[arg(long, default_value = ".", value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 50)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Observations per instance are drawn from 6..=n-max
    #[arg(long, default_value_t = 12)]
    pub n_max: usize,
    /// Auxiliary covariates are drawn from 1..=p-max
    #[arg(long, default_value_t = 4)]
    pub p_max: usize,
    /// q is drawn from 0..=q-max (capped at p)
    #[arg(long, default_value_t = 2)]
    pub q_max: usize,
    #[arg(long, default_value = ".", value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 842)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; a manifest is written next to it
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}
