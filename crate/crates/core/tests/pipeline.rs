use prescience::data::{read_csv, Dataset, Schema};
use prescience::lp::Matrix;
use prescience::score::{empirical_score, l0_norm, Coefficients, ParamBox, SELECTION_TOL};
use prescience::selection::{fit, EpsilonMode, FitSpec};
use prescience::{MioConfig, SolveStatus};

/// The outcome follows `z1` while `x0` is unrelated, and the box is too small
/// for either sign of `α` to reproduce the logit's predictions.
fn misspecified() -> Dataset {
    let x0 = vec![-1.0, 1.0, -0.5, 0.8, -1.2, 0.6, 1.1, -0.9, 0.3, -0.2];
    let z1 = vec![2.0, -1.5, 1.0, -2.0, 1.5, 1.2, -1.0, -0.7, 0.9, -1.3];
    let y = z1.iter().map(|&v: &f64| (v > 0.0) as u8).collect();
    Dataset::new(y, x0, Matrix::zeros(10, 0), Matrix::from_columns(10, &[z1]).unwrap())
        .unwrap()
        .with_intercept()
        .unwrap()
}

#[test]
fn infeasible_tightening_falls_back_to_cold_start() {
    let d = misspecified();
    let bx = ParamBox::cube(1, 1, 0.05).unwrap();
    let cold = FitSpec { q_candidates: vec![1], ..FitSpec::default() };
    let warm = FitSpec { warm_start: true, ..cold.clone() };
    let a = fit(&d, &cold, &bx).unwrap();
    let b = fit(&d, &warm, &bx).unwrap();
    assert!(b.warmstart.used);
    assert!(!b.warmstart.feasible);
    assert_eq!(b.warmstart.volume_ratio, 1.0);
    assert_eq!((a.alpha, &a.beta, &a.gamma, a.score), (b.alpha, &b.beta, &b.gamma, b.score));
}

#[test]
fn csv_to_report() {
    let mut text = String::from("y,x0,z1,z2,z3\n");
    for i in 0..40 {
        let x0 = (i as f64 * 0.37).sin() * 2.0;
        let z1 = (i as f64 * 0.91).cos() * 2.0;
        let z2 = (i as f64 * 1.3).sin();
        let z3 = ((i * 7) % 11) as f64 / 5.0 - 1.0;
        let y = (x0 - 0.8 * z1 + 0.2 * ((i % 5) as f64 - 2.0) >= 0.0) as u8;
        text += &format!("{y},{x0},{z1},{z2},{z3}\n");
    }
    let schema = Schema {
        outcome: "y".into(),
        x0: "x0".into(),
        focus: vec![],
        auxiliary: vec!["z1".into(), "z2".into(), "z3".into()],
        intercept: true,
    };
    let d = read_csv(text.as_bytes(), &schema).unwrap();
    let spec = FitSpec {
        q_candidates: vec![1, 2, 3],
        epsilon_mode: EpsilonMode::Exact,
        mio: MioConfig::default(),
        ..FitSpec::default()
    };
    let r = fit(&d, &spec, &ParamBox::cube(1, 3, 10.0).unwrap()).unwrap();
    assert_eq!(r.cv_table.as_ref().unwrap().len(), 3);
    assert!(l0_norm(&r.gamma, SELECTION_TOL) <= r.q);
    assert_eq!(r.status, SolveStatus::Optimal);
    let c = Coefficients::new(r.alpha, r.beta.clone(), r.gamma.clone()).unwrap();
    assert_eq!(r.score, empirical_score(&c, &d).unwrap());

    let json: serde_json::Value = serde_json::to_value(&r).unwrap();
    for key in ["alpha", "beta", "gamma", "selected_indices", "q", "score", "mio_gap", "nodes", "wall_seconds", "cv_table", "warmstart"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    for key in ["used", "feasible", "volume_ratio"] {
        assert!(json["warmstart"].get(key).is_some());
    }
}
