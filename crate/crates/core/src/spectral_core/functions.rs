use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Scalar functions `g` applied to operators through the spectral theorem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarFunction {
    /// `Σ c_j t^j`, coefficients in ascending order.
    Polynomial { coefficients: Vec<f64> },
    /// `exp(−(t − center)² / (2σ²))`.
    Gaussian { center: f64, sigma: f64 },
    /// Smooth compactly supported bump `exp(1 − 1/(1 − u²))`, `u = (t − center)/halfwidth`,
    /// with peak value 1 at the center.
    Bump { center: f64, halfwidth: f64 },
    /// Piecewise-linear interpolation of `(t, g(t))` nodes; undefined outside
    /// the node range.
    Table { points: Vec<[f64; 2]> },
    /// `Σ weight · function`.
    Combination { terms: Vec<WeightedTerm> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedTerm {
    pub weight: f64,
    pub function: ScalarFunction,
}

impl ScalarFunction {
    pub fn identity() -> Self {
        ScalarFunction::Polynomial {
            coefficients: vec![0.0, 1.0],
        }
    }

    pub fn constant(c: f64) -> Self {
        ScalarFunction::Polynomial { coefficients: vec![c] }
    }

    pub fn gaussian(center: f64, sigma: f64) -> Self {
        ScalarFunction::Gaussian { center, sigma }
    }

    pub fn bump(center: f64, halfwidth: f64) -> Self {
        ScalarFunction::Bump { center, halfwidth }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarFunction::Polynomial { coefficients } if coefficients.is_empty() => {
                invalid("polynomial needs at least one coefficient")
            }
            ScalarFunction::Gaussian { sigma, .. } if !(*sigma > 0.0) => invalid("gaussian sigma must be positive"),
            ScalarFunction::Bump { halfwidth, .. } if !(*halfwidth > 0.0) => invalid("bump halfwidth must be positive"),
            ScalarFunction::Table { points } => {
                if points.len() < 2 {
                    return invalid("table needs at least two nodes");
                }
                if points.windows(2).any(|w| !(w[1][0] > w[0][0])) {
                    return invalid("table nodes must be strictly increasing in t");
                }
                Ok(())
            }
            ScalarFunction::Combination { terms } => terms.iter().try_for_each(|t| t.function.validate()),
            _ => Ok(()),
        }
    }

    /// Errors if `g` is undefined somewhere on `[lo, hi]`.
    pub fn check_domain(&self, lo: f64, hi: f64) -> Result<()> {
        self.validate()?;
        match self {
            ScalarFunction::Table { points } => {
                let (a, b) = (points[0][0], points[points.len() - 1][0]);
                if lo < a || hi > b {
                    return invalid(format!(
                        "table function defined on [{a}, {b}] but the spectrum spans [{lo}, {hi}]"
                    ));
                }
                Ok(())
            }
            ScalarFunction::Combination { terms } => terms.iter().try_for_each(|t| t.function.check_domain(lo, hi)),
            _ => Ok(()),
        }
    }

    /// Evaluates `g(t)`; table functions clamp outside their range, so call
    /// [`check_domain`](Self::check_domain) first.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            ScalarFunction::Polynomial { coefficients } => coefficients.iter().rev().fold(0.0, |acc, &c| acc * t + c),
            ScalarFunction::Gaussian { center, sigma } => {
                let u = (t - center) / sigma;
                (-0.5 * u * u).exp()
            }
            ScalarFunction::Bump { center, halfwidth } => {
                let u = (t - center) / halfwidth;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - u * u)).exp()
                }
            }
            ScalarFunction::Table { points } => {
                let n = points.len();
                if t <= points[0][0] {
                    return points[0][1];
                }
                if t >= points[n - 1][0] {
                    return points[n - 1][1];
                }
                let k = points.partition_point(|p| p[0] <= t);
                let ([x0, y0], [x1, y1]) = (points[k - 1], points[k]);
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
            ScalarFunction::Combination { terms } => terms.iter().map(|w| w.weight * w.function.eval(t)).sum(),
        }
    }
}
