//! wasm-bindgen bindings behind the browser demo in `www/`.
//!
//! Datasets cross the boundary as CSV text and results come back as JSON
//! strings. The first column is the outcome, the second is the sign-normalized
//! covariate, and every other column is a candidate for selection. An
//! intercept is always added.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use prescience::selection::{fit, EpsilonMode, FitSpec};
use prescience::sim::{sample_dataset, DgpSpec, Variant};
use prescience::warmstart::{fit_logit, tighten_bounds};
use prescience::{AlphaMode, Dataset, MioConfig, ParamBox, Schema};

/// Nodes allowed per solve. Time limits cannot be enforced in the browser.
const NODE_LIMIT: u64 = 200_000;

fn msg(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn export<T>(r: Result<T, String>) -> Result<T, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

fn parse(csv: &str) -> Result<Dataset, String> {
    let header: Vec<String> = csv
        .lines()
        .next()
        .ok_or_else(|| msg("empty CSV"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if header.len() < 2 {
        return Err(msg("need at least an outcome and one covariate column"));
    }
    let schema = Schema {
        outcome: header[0].clone(),
        x0: header[1].clone(),
        focus: Vec::new(),
        auxiliary: header[2..].to_vec(),
        intercept: true,
    };
    prescience::data::read_csv(csv.as_bytes(), &schema).map_err(msg)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(msg)
}

/// Simulated training sample as CSV. `variant` is 1 (homoskedastic) or 2.
#[wasm_bindgen]
pub fn sample_dgp(variant: u8, p: usize, n: usize, seed: u32) -> Result<String, JsValue> {
    export(sample_dgp_impl(variant, p, n, seed.into()))
}

fn sample_dgp_impl(variant: u8, p: usize, n: usize, seed: u64) -> Result<String, String> {
    let variant = match variant {
        1 => Variant::I,
        2 => Variant::II,
        v => return Err(msg(format!("variant must be 1 or 2, got {v}"))),
    };
    let spec = DgpSpec {
        n_valid: 1,
        ..DgpSpec::new(variant, p, n, 1, seed)
    };
    let s = sample_dataset(&spec, 0).map_err(msg)?;
    let mut buf = Vec::new();
    s.train.write_csv(&mut buf).map_err(msg)?;
    String::from_utf8(buf).map_err(msg)
}

/// Fit with at most `q` selected columns inside the cube `[-bound, bound]`.
/// Both signs of the leading coefficient are tried.
#[wasm_bindgen]
pub fn fit_rule(csv: &str, q: usize, bound: f64, warm_start: bool) -> Result<String, JsValue> {
    export(fit_rule_impl(csv, q, bound, warm_start))
}

fn fit_rule_impl(csv: &str, q: usize, bound: f64, warm_start: bool) -> Result<String, String> {
    let d = parse(csv)?;
    let bx = ParamBox::cube(d.k(), d.p(), bound).map_err(msg)?;
    let spec = FitSpec {
        q_candidates: vec![q.min(d.p())],
        epsilon_mode: EpsilonMode::Exact,
        warm_start,
        mio: MioConfig {
            alpha_mode: AlphaMode::Both,
            node_limit: Some(NODE_LIMIT),
            ..MioConfig::default()
        },
        ..FitSpec::default()
    };
    to_json(&fit(&d, &spec, &bx).map_err(msg)?)
}

#[derive(Serialize)]
struct Interval {
    name: String,
    lower: f64,
    upper: f64,
}

#[derive(Serialize)]
struct Refined {
    alpha: i8,
    feasible: bool,
    lp_calls: usize,
    volume_ratio: f64,
    logit_separated: bool,
    intervals: Vec<Interval>,
}

/// The box the warm start would search for a given sign of the leading
/// coefficient, enlarged by `tau`.
#[wasm_bindgen]
pub fn refined_box(csv: &str, alpha: i8, tau: f64, bound: f64) -> Result<String, JsValue> {
    export(refined_box_impl(csv, alpha, tau, bound))
}

fn refined_box_impl(csv: &str, alpha: i8, tau: f64, bound: f64) -> Result<String, String> {
    let d = parse(csv)?;
    let bx = ParamBox::cube(d.k(), d.p(), bound).map_err(msg)?;
    if alpha != 1 && alpha != -1 {
        return Err(msg("alpha must be +1 or -1"));
    }
    let logit = fit_logit(&d).map_err(msg)?;
    let r = tighten_bounds(&d, alpha, &bx, &logit.fitted_probabilities)
        .map_err(msg)?
        .with_tau(tau, &bx)
        .map_err(msg)?;
    let search = r.param_box.clone().unwrap_or_else(|| bx.clone());
    let intervals = d
        .coefficient_names()
        .into_iter()
        .zip(search.flat())
        .map(|(name, (lower, upper))| Interval { name, lower, upper })
        .collect();
    to_json(&Refined {
        alpha,
        feasible: r.feasible,
        lp_calls: r.lp_calls,
        volume_ratio: search.volume_ratio(&bx),
        logit_separated: logit.separated,
        intervals,
    })
}

/// Tolerance the estimator uses when the problem is too large to solve exactly.
#[wasm_bindgen]
pub fn epsilon_rule(n: usize, p: usize) -> f64 {
    prescience::selection::epsilon_rule(n, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_then_fit() {
        let csv = sample_dgp_impl(1, 3, 40, 9).unwrap();
        assert!(csv.starts_with("Y,X0,Z1,Z2,Z3"));
        let r: serde_json::Value = serde_json::from_str(&fit_rule_impl(&csv, 1, 10.0, false).unwrap()).unwrap();
        let nonzero = r["gamma"].as_array().unwrap().iter().filter(|g| g.as_f64() != Some(0.0)).count();
        assert!(nonzero <= 1);
        let s = r["score"].as_f64().unwrap();
        assert!(s > 0.5 && s <= 1.0);
    }

    #[test]
    fn refined_box_lists_every_coefficient() {
        let csv = sample_dgp_impl(1, 2, 60, 4).unwrap();
        let r: serde_json::Value = serde_json::from_str(&refined_box_impl(&csv, 1, 1.5, 10.0).unwrap()).unwrap();
        assert_eq!(r["intervals"].as_array().unwrap().len(), 3);
        assert!(r["volume_ratio"].as_f64().unwrap() <= 1.0);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(sample_dgp_impl(3, 2, 10, 1).is_err());
        assert!(fit_rule_impl("y\n1\n", 1, 10.0, false).is_err());
    }
}
