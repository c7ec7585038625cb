//! Spearman's rank correlation estimates from a coefficient state, the
//! Spearman/Pearson transforms for bivariate normal data, and the variance
//! budget tooling for choosing the exponential weight.
//!
//! The estimate is the quadratic/bilinear form
//!
//! ```text
//! R = 12 a1' W' A W a2 - 6 a1' W' A z - 6 z' A W a2 + 3 z' A z
//! ```
//!
//! evaluated with four matrix-vector products and four dot products, so one
//! estimate costs O(order^2) regardless of how long the stream is.

use crate::basis::BasisCache;
use crate::fmt::g17;
use crate::matrix::dot;
use crate::state::CoefficientState;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorrelationError {
    #[error("state order {state} does not match cache order {cache}")]
    OrderMismatch { state: usize, cache: usize },

    #[error("state holds no observations; the estimate is undefined")]
    EmptyState,

    #[error("argument {value} outside the domain {domain}")]
    OutOfDomain { value: f64, domain: &'static str },
}

/// One Spearman correlation estimate, in raw, clamped, and Pearson forms.
///
/// The raw value can leave [-1, 1] for short streams or poorly matched
/// orders; the clamped value clips it and feeds the Pearson transform
/// `2 sin(pi r / 6)`, which is exact for bivariate normal data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate {
    pub raw: f64,
    pub clamped: f64,
    pub pearson: f64,
}

impl CorrelationEstimate {
    /// Derives the clamped and Pearson-transformed values from a raw estimate.
    pub fn from_raw(raw: f64) -> Self {
        let clamped = raw.clamp(-1.0, 1.0);
        let pearson = 2.0 * (std::f64::consts::PI * clamped / 6.0).sin();
        Self {
            raw,
            clamped,
            pearson,
        }
    }

    /// JSON line `{"i": index, "raw": r, "clamped": r_c, "pearson": p}`.
    pub fn json_line(&self, index: u64) -> String {
        format!(
            "{{\"i\":{},\"raw\":{},\"clamped\":{},\"pearson\":{}}}",
            index,
            g17(self.raw),
            g17(self.clamped),
            g17(self.pearson)
        )
    }
}

/// Scratch buffers for repeated estimate evaluation in hot loops.
#[derive(Debug, Clone)]
pub(crate) struct EstimateScratch {
    u: Vec<f64>,
    v: Vec<f64>,
    av: Vec<f64>,
    az: Vec<f64>,
}

impl EstimateScratch {
    pub(crate) fn new(order: usize) -> Self {
        let dim = order + 1;
        Self {
            u: vec![0.0; dim],
            v: vec![0.0; dim],
            av: vec![0.0; dim],
            az: vec![0.0; dim],
        }
    }
}

/// Computes the Spearman correlation estimate for `state` using the
/// precomputed integrals in `cache`.
pub fn estimate_spearman(
    state: &CoefficientState,
    cache: &BasisCache,
) -> Result<CorrelationEstimate, CorrelationError> {
    let mut scratch = EstimateScratch::new(cache.order());
    estimate_spearman_with(state, cache, &mut scratch)
}

pub(crate) fn estimate_spearman_with(
    state: &CoefficientState,
    cache: &BasisCache,
    scratch: &mut EstimateScratch,
) -> Result<CorrelationEstimate, CorrelationError> {
    if state.order() != cache.order() {
        return Err(CorrelationError::OrderMismatch {
            state: state.order(),
            cache: cache.order(),
        });
    }
    if state.observation_count() == 0 {
        return Err(CorrelationError::EmptyState);
    }
    let w = cache.w();
    let z = cache.z();
    let a = state.joint();
    // u = W a1, v = W a2, then two products against A give every term.
    w.matvec_into(state.a1(), &mut scratch.u);
    w.matvec_into(state.a2(), &mut scratch.v);
    a.matvec_into(&scratch.v, &mut scratch.av);
    a.matvec_into(z, &mut scratch.az);
    let t1 = dot(&scratch.u, &scratch.av);
    let t2 = dot(&scratch.u, &scratch.az);
    let t3 = dot(z, &scratch.av);
    let t4 = dot(z, &scratch.az);
    let raw = 12.0 * t1 - 6.0 * t2 - 6.0 * t3 + 3.0 * t4;
    Ok(CorrelationEstimate::from_raw(raw))
}

/// `2 sin(pi r / 6)`: maps a Spearman correlation to the Pearson correlation
/// of a bivariate normal distribution. Accepts `r` in [-1, 1].
pub fn spearman_to_pearson(r: f64) -> Result<f64, CorrelationError> {
    if !(-1.0..=1.0).contains(&r) {
        return Err(CorrelationError::OutOfDomain {
            value: r,
            domain: "[-1, 1]",
        });
    }
    Ok(2.0 * (std::f64::consts::PI * r / 6.0).sin())
}

/// `(6/pi) asin(rho/2)`: the population Spearman correlation of a bivariate
/// normal distribution with Pearson correlation `rho` in [-1, 1].
pub fn grade_correlation_normal(rho: f64) -> Result<f64, CorrelationError> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(CorrelationError::OutOfDomain {
            value: rho,
            domain: "[-1, 1]",
        });
    }
    Ok(6.0 / std::f64::consts::PI * (rho / 2.0).asin())
}

/// Exponential weights meeting a target steady-state standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSelection {
    /// `2 s^2 / (1 + s^2)`: the bound from the worst-case variance constant.
    pub exact: f64,
    /// `2 s^2`: the small-sigma shortcut.
    pub rough: f64,
}

/// Largest exponential weight that keeps the steady-state standard deviation
/// of the estimate within `sigma_tol` for streams resembling bivariate normal
/// data. Requires `0 < sigma_tol <= 1`.
pub fn select_lambda(sigma_tol: f64) -> Result<LambdaSelection, CorrelationError> {
    if !(sigma_tol > 0.0 && sigma_tol <= 1.0) {
        return Err(CorrelationError::OutOfDomain {
            value: sigma_tol,
            domain: "(0, 1]",
        });
    }
    let s2 = sigma_tol * sigma_tol;
    Ok(LambdaSelection {
        exact: 2.0 * s2 / (1.0 + s2),
        rough: 2.0 * s2,
    })
}

/// Steady-state variance of the exponentially weighted estimate,
/// `lambda / (2 - lambda) * g`, for a distribution with variance constant `g`.
/// `lambda = 1` is the formula boundary and is accepted for testing.
pub fn predict_ew_variance(lambda: f64, g: f64) -> Result<f64, CorrelationError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(CorrelationError::OutOfDomain {
            value: lambda,
            domain: "(0, 1]",
        });
    }
    if g.is_nan() || g <= 0.0 {
        return Err(CorrelationError::OutOfDomain {
            value: g,
            domain: "(0, inf)",
        });
    }
    Ok(lambda / (2.0 - lambda) * g)
}

/// `lambda = 2 / (w + 1)`: the exponential weight whose average observation
/// age matches a simple moving window of size `w >= 1`.
pub fn lambda_for_window(w: u64) -> Result<f64, CorrelationError> {
    if w < 1 {
        return Err(CorrelationError::OutOfDomain {
            value: w as f64,
            domain: "[1, inf)",
        });
    }
    Ok(2.0 / (w as f64 + 1.0))
}

/// Inverse of `lambda_for_window`: `w = 2/lambda - 1`, rounded to the nearest
/// integer.
pub fn window_for_lambda(lambda: f64) -> Result<u64, CorrelationError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(CorrelationError::OutOfDomain {
            value: lambda,
            domain: "(0, 1]",
        });
    }
    Ok((2.0 / lambda - 1.0).round() as u64)
}

/// One cell of the variance-constant table for bivariate normal streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GTableEntry {
    pub order: usize,
    pub rho: f64,
    pub g: f64,
    pub se: f64,
}

/// Monte Carlo values of the variance constant `g` for bivariate normal
/// streams, on the grid order in {4, 6, 8, 10} x rho in
/// {-0.75, -0.5, -0.25, 0, 0.25, 0.5, 0.75}, with bootstrap standard errors.
/// Steady-state `Var(R) ~ lambda/(2-lambda) * g`.
pub const NORMAL_G_TABLE: [GTableEntry; 28] = [
    GTableEntry { order: 4, rho: -0.75, g: 0.701, se: 0.007 },
    GTableEntry { order: 4, rho: -0.50, g: 0.891, se: 0.009 },
    GTableEntry { order: 4, rho: -0.25, g: 1.106, se: 0.011 },
    GTableEntry { order: 4, rho: 0.00, g: 1.182, se: 0.012 },
    GTableEntry { order: 4, rho: 0.25, g: 1.112, se: 0.012 },
    GTableEntry { order: 4, rho: 0.50, g: 0.886, se: 0.009 },
    GTableEntry { order: 4, rho: 0.75, g: 0.718, se: 0.007 },
    GTableEntry { order: 6, rho: -0.75, g: 0.474, se: 0.005 },
    GTableEntry { order: 6, rho: -0.50, g: 0.845, se: 0.008 },
    GTableEntry { order: 6, rho: -0.25, g: 1.104, se: 0.011 },
    GTableEntry { order: 6, rho: 0.00, g: 1.190, se: 0.012 },
    GTableEntry { order: 6, rho: 0.25, g: 1.086, se: 0.011 },
    GTableEntry { order: 6, rho: 0.50, g: 0.848, se: 0.009 },
    GTableEntry { order: 6, rho: 0.75, g: 0.475, se: 0.005 },
    GTableEntry { order: 8, rho: -0.75, g: 0.407, se: 0.004 },
    GTableEntry { order: 8, rho: -0.50, g: 0.757, se: 0.008 },
    GTableEntry { order: 8, rho: -0.25, g: 1.027, se: 0.010 },
    GTableEntry { order: 8, rho: 0.00, g: 1.129, se: 0.011 },
    GTableEntry { order: 8, rho: 0.25, g: 1.028, se: 0.010 },
    GTableEntry { order: 8, rho: 0.50, g: 0.747, se: 0.007 },
    GTableEntry { order: 8, rho: 0.75, g: 0.395, se: 0.004 },
    GTableEntry { order: 10, rho: -0.75, g: 0.357, se: 0.004 },
    GTableEntry { order: 10, rho: -0.50, g: 0.747, se: 0.007 },
    GTableEntry { order: 10, rho: -0.25, g: 1.003, se: 0.010 },
    GTableEntry { order: 10, rho: 0.00, g: 1.100, se: 0.011 },
    GTableEntry { order: 10, rho: 0.25, g: 1.010, se: 0.010 },
    GTableEntry { order: 10, rho: 0.50, g: 0.734, se: 0.007 },
    GTableEntry { order: 10, rho: 0.75, g: 0.364, se: 0.004 },
];

/// Exact-grid lookup into `NORMAL_G_TABLE`.
pub fn lookup_g(order: usize, rho: f64) -> Option<&'static GTableEntry> {
    NORMAL_G_TABLE
        .iter()
        .find(|e| e.order == order && (e.rho - rho).abs() < 1e-12)
}

/// A target standard deviation for the exponentially weighted estimate,
/// with helpers that tie the weight choice to the table of variance
/// constants.
#[derive(Debug, Clone, Copy)]
pub struct VarianceBudget {
    sigma_tol: f64,
}

impl VarianceBudget {
    pub fn new(sigma_tol: f64) -> Result<Self, CorrelationError> {
        if !(sigma_tol > 0.0 && sigma_tol <= 1.0) {
            return Err(CorrelationError::OutOfDomain {
                value: sigma_tol,
                domain: "(0, 1]",
            });
        }
        Ok(Self { sigma_tol })
    }

    pub fn sigma_tol(&self) -> f64 {
        self.sigma_tol
    }

    pub fn lambda(&self) -> LambdaSelection {
        select_lambda(self.sigma_tol).expect("validated at construction")
    }

    /// Predicted steady-state standard deviation at `lambda` for a tabulated
    /// `(order, rho)` cell, if present.
    pub fn predicted_sd(&self, lambda: f64, order: usize, rho: f64) -> Option<f64> {
        let entry = lookup_g(order, rho)?;
        predict_ew_variance(lambda, entry.g).ok().map(f64::sqrt)
    }
}
