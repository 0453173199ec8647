//! The prediction rule `1{α x0 + x̃'β + z'γ ≥ 0}`, its empirical score and the
//! big-M constants of the MIO formulations.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::lp::{box_linear_abs_max, dot};

/// Default threshold above which a coefficient counts as selected.
pub const SELECTION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub alpha: i8,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Coefficients {
    pub fn new(alpha: i8, beta: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if alpha != 1 && alpha != -1 {
            return Err(Error::arg(format!("alpha must be +1 or -1, got {alpha}")));
        }
        Ok(Self { alpha, beta, gamma })
    }

    pub fn zeros(alpha: i8, k: usize, p: usize) -> Self {
        Self {
            alpha,
            beta: vec![0.0; k],
            gamma: vec![0.0; p],
        }
    }

    /// `(β, γ)` as one vector.
    pub fn free_part(&self) -> Vec<f64> {
        self.beta.iter().chain(&self.gamma).copied().collect()
    }

    fn check(&self, d: &Dataset) -> Result<()> {
        if self.alpha != 1 && self.alpha != -1 {
            return Err(Error::arg("alpha must be +1 or -1"));
        }
        if self.beta.len() != d.k() || self.gamma.len() != d.p() {
            return Err(Error::arg(format!(
                "coefficient lengths ({}, {}) do not match dataset ({}, {})",
                self.beta.len(),
                self.gamma.len(),
                d.k(),
                d.p()
            )));
        }
        Ok(())
    }
}

/// Per-coordinate bounds on `(β, γ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBox {
    pub beta_bounds: Vec<(f64, f64)>,
    pub gamma_bounds: Vec<(f64, f64)>,
}

impl ParamBox {
    pub fn new(beta_bounds: Vec<(f64, f64)>, gamma_bounds: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in beta_bounds.iter().chain(&gamma_bounds) {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::arg(format!("invalid bound [{lo}, {hi}]")));
            }
        }
        Ok(Self {
            beta_bounds,
            gamma_bounds,
        })
    }

    /// The cube `[−l, l]^{k+p}`.
    pub fn cube(k: usize, p: usize, l: f64) -> Result<Self> {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::arg(format!("box half-width must be finite and >= 0, got {l}")));
        }
        Ok(Self {
            beta_bounds: vec![(-l, l); k],
            gamma_bounds: vec![(-l, l); p],
        })
    }

    /// Bounds rebuilt from a flat `(β, γ)` list.
    pub fn from_flat(k: usize, bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.len() < k {
            return Err(Error::arg("fewer bounds than focus coefficients"));
        }
        Self::new(bounds[..k].to_vec(), bounds[k..].to_vec())
    }

    pub fn k(&self) -> usize {
        self.beta_bounds.len()
    }

    pub fn p(&self) -> usize {
        self.gamma_bounds.len()
    }

    /// All bounds, `β` first.
    pub fn flat(&self) -> Vec<(f64, f64)> {
        self.beta_bounds.iter().chain(&self.gamma_bounds).copied().collect()
    }

    pub fn contains(&self, c: &Coefficients) -> bool {
        let inside = |v: &f64, b: &(f64, f64)| *v >= b.0 && *v <= b.1;
        c.beta.len() == self.k()
            && c.gamma.len() == self.p()
            && c.beta.iter().zip(&self.beta_bounds).all(|(v, b)| inside(v, b))
            && c.gamma.iter().zip(&self.gamma_bounds).all(|(v, b)| inside(v, b))
    }

    /// Natural log of the box volume (`−∞` when some coordinate is pinned).
    pub fn log_volume(&self) -> f64 {
        self.beta_bounds
            .iter()
            .chain(&self.gamma_bounds)
            .map(|(lo, hi)| (hi - lo).ln())
            .sum()
    }

    /// `vol(self) / vol(other)`, computed in log space.
    pub fn volume_ratio(&self, other: &ParamBox) -> f64 {
        let (a, b) = (self.log_volume(), other.log_volume());
        if a == f64::NEG_INFINITY {
            return 0.0;
        }
        (a - b).exp()
    }

    fn check(&self, d: &Dataset) -> Result<()> {
        if self.k() != d.k() || self.p() != d.p() {
            return Err(Error::arg(format!(
                "box dimensions ({}, {}) do not match dataset ({}, {})",
                self.k(),
                self.p(),
                d.k(),
                d.p()
            )));
        }
        Ok(())
    }
}

/// The index `α x0_i + x̃_i'β + z_i'γ` of observation `i`.
#[inline]
pub fn index_value(c: &Coefficients, d: &Dataset, i: usize) -> f64 {
    f64::from(c.alpha) * d.x0()[i] + dot(d.x_tilde().row(i), &c.beta) + dot(d.z().row(i), &c.gamma)
}

pub fn predict(c: &Coefficients, d: &Dataset) -> Result<Vec<u8>> {
    c.check(d)?;
    Ok((0..d.n()).map(|i| (index_value(c, d, i) >= 0.0) as u8).collect())
}

/// Number of observations predicted correctly.
pub fn correct_count(c: &Coefficients, d: &Dataset) -> Result<usize> {
    let pred = predict(c, d)?;
    Ok(pred.iter().zip(d.y()).filter(|(a, b)| a == b).count())
}

pub fn empirical_score(c: &Coefficients, d: &Dataset) -> Result<f64> {
    Ok(correct_count(c, d)? as f64 / d.n() as f64)
}

/// Number of entries with `|γ_j| > tol`.
pub fn l0_norm(gamma: &[f64], tol: f64) -> usize {
    gamma.iter().filter(|g| g.abs() > tol).count()
}

/// Indices with `|γ_j| > tol`.
pub fn selected_indices(gamma: &[f64], tol: f64) -> Vec<usize> {
    (0..gamma.len()).filter(|&j| gamma[j].abs() > tol).collect()
}

/// `M_i = max_{(β,γ) ∈ box} |α x0_i + x̃_i'β + z_i'γ|`.
pub fn compute_big_m(d: &Dataset, alpha: i8, bx: &ParamBox) -> Result<Vec<f64>> {
    bx.check(d)?;
    let bounds = bx.flat();
    let mut w = vec![0.0; d.k() + d.p()];
    Ok((0..d.n())
        .map(|i| {
            d.w_row_into(i, &mut w);
            box_linear_abs_max(f64::from(alpha) * d.x0()[i], &w, &bounds)
        })
        .collect())
}
