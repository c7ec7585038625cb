//! Live coefficient state for the streaming estimator, plus online
//! standardization.
//!
//! A `CoefficientState` holds two marginal CDF coefficient vectors `a1`, `a2`
//! and a bivariate density coefficient matrix `A`, all indexed `0..=order`.
//! Each accepted observation `(x, y)` folds `h(x)` and `h(y)` into them, in
//! either running-mean form (stationary streams) or exponentially weighted
//! form with weight `lambda` (non-stationary streams). Updates cost O(order^2)
//! time and the state size is a function of the order alone, independent of
//! how many observations have been seen.
//!
//! Non-finite observations are rejected and counted rather than absorbed: a
//! single NaN folded into the coefficients would poison every later estimate.

use crate::basis::{hermite_values_into, BasisError, MAX_ORDER};
use crate::fmt::{g17, json_array};
use crate::matrix::SquareMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StateError {
    #[error(transparent)]
    Basis(#[from] BasisError),

    #[error("lambda must lie in (0, 1], got {0}")]
    InvalidLambda(f64),

    #[error("non-finite observation ({x}, {y}) rejected; {rejected} rejected so far")]
    NonFiniteObservation { x: f64, y: f64, rejected: u64 },

    #[error("non-finite value {0} cannot be standardized")]
    NonFiniteValue(f64),

    #[error("merge requires two stationary states, got an exponentially weighted one")]
    MergeRequiresStationary,

    #[error("merge requires matching orders, got {left} and {right}")]
    MergeOrderMismatch { left: usize, right: usize },

    #[error("merge requires both states to hold at least one observation")]
    MergeEmptyState,

    #[error("malformed state snapshot JSON: {0}")]
    MalformedSnapshot(String),

    #[error("snapshot violates a state invariant: {0}")]
    InvalidSnapshot(String),
}

/// Update rule of a coefficient state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    /// Running-mean updates; the coefficient vectors equal the sample means
    /// of the Hermite function values seen so far.
    Stationary,
    /// Exponentially weighted updates with weight `lambda` in (0, 1] on the
    /// newest observation.
    ExpWeighted { lambda: f64 },
}

/// Hermite coefficient state of a bivariate stream.
#[derive(Debug, Clone)]
pub struct CoefficientState {
    order: usize,
    mode: Mode,
    accepted: u64,
    rejected: u64,
    a1: Vec<f64>,
    a2: Vec<f64>,
    joint: SquareMatrix,
    // Per-update scratch for h(x) and h(y); keeps the hot path allocation-free.
    hx: Vec<f64>,
    hy: Vec<f64>,
}

impl CoefficientState {
    /// Empty state with running-mean updates.
    pub fn stationary(order: usize) -> Result<Self, StateError> {
        Self::with_mode(order, Mode::Stationary)
    }

    /// Empty state with exponentially weighted updates, `0 < lambda <= 1`.
    /// `lambda = 1` keeps only the newest observation and exists as a
    /// degenerate testing case.
    pub fn exp_weighted(order: usize, lambda: f64) -> Result<Self, StateError> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(StateError::InvalidLambda(lambda));
        }
        Self::with_mode(order, Mode::ExpWeighted { lambda })
    }

    fn with_mode(order: usize, mode: Mode) -> Result<Self, StateError> {
        if order == 0 || order > MAX_ORDER {
            return Err(StateError::Basis(BasisError::InvalidOrder(order)));
        }
        let dim = order + 1;
        Ok(Self {
            order,
            mode,
            accepted: 0,
            rejected: 0,
            a1: vec![0.0; dim],
            a2: vec![0.0; dim],
            joint: SquareMatrix::zeros(dim),
            hx: vec![0.0; dim],
            hy: vec![0.0; dim],
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Number of observations folded into the coefficients.
    pub fn observation_count(&self) -> u64 {
        self.accepted
    }

    /// Number of observations rejected for being non-finite.
    pub fn rejected_count(&self) -> u64 {
        self.rejected
    }

    pub fn a1(&self) -> &[f64] {
        &self.a1
    }

    pub fn a2(&self) -> &[f64] {
        &self.a2
    }

    /// Bivariate density coefficients, `(order + 1) x (order + 1)`.
    pub fn joint(&self) -> &SquareMatrix {
        &self.joint
    }

    /// Number of `f64` slots the state owns. Depends on the order only.
    pub fn f64_footprint(&self) -> usize {
        self.a1.len() + self.a2.len() + self.joint.dim() * self.joint.dim() + self.hx.len() + self.hy.len()
    }

    /// Folds one observation into the state according to its mode.
    ///
    /// The first accepted observation initializes `a1 = h(x)`, `a2 = h(y)`,
    /// `A = h(x) (x) h(y)`. Later observations apply the running-mean rule
    /// `a <- ((i-1) a + h) / i` in stationary mode, or the blend
    /// `a <- (1-lambda) a + lambda h` in exponentially weighted mode.
    ///
    /// Non-finite inputs leave the state unchanged and report the running
    /// reject count in the error.
    pub fn update(&mut self, x: f64, y: f64) -> Result<(), StateError> {
        if !x.is_finite() || !y.is_finite() {
            self.rejected += 1;
            return Err(StateError::NonFiniteObservation {
                x,
                y,
                rejected: self.rejected,
            });
        }
        hermite_values_into(x, &mut self.hx);
        hermite_values_into(y, &mut self.hy);

        let dim = self.order + 1;
        if self.accepted == 0 {
            self.a1.copy_from_slice(&self.hx);
            self.a2.copy_from_slice(&self.hy);
            for k in 0..dim {
                let hk = self.hx[k];
                let row = self.joint.row_mut(k);
                for (cell, hl) in row.iter_mut().zip(self.hy.iter()) {
                    *cell = hk * hl;
                }
            }
        } else {
            match self.mode {
                Mode::Stationary => {
                    let i = (self.accepted + 1) as f64;
                    let prev = i - 1.0;
                    let inv = 1.0 / i;
                    for k in 0..dim {
                        self.a1[k] = (prev * self.a1[k] + self.hx[k]) * inv;
                        self.a2[k] = (prev * self.a2[k] + self.hy[k]) * inv;
                    }
                    for k in 0..dim {
                        let hk = self.hx[k];
                        let row = self.joint.row_mut(k);
                        for (cell, hl) in row.iter_mut().zip(self.hy.iter()) {
                            *cell = (prev * *cell + hk * hl) * inv;
                        }
                    }
                }
                Mode::ExpWeighted { lambda } => {
                    let keep = 1.0 - lambda;
                    for k in 0..dim {
                        self.a1[k] = keep * self.a1[k] + lambda * self.hx[k];
                        self.a2[k] = keep * self.a2[k] + lambda * self.hy[k];
                    }
                    for k in 0..dim {
                        let scaled = lambda * self.hx[k];
                        let row = self.joint.row_mut(k);
                        for (cell, hl) in row.iter_mut().zip(self.hy.iter()) {
                            *cell = keep * *cell + scaled * hl;
                        }
                    }
                }
            }
        }
        self.accepted += 1;
        Ok(())
    }

    /// Combines two stationary states built from disjoint data into the state
    /// the full pass would have produced: count-weighted coefficient means and
    /// summed counts.
    pub fn merge_stationary(&self, other: &Self) -> Result<Self, StateError> {
        if self.mode != Mode::Stationary || other.mode != Mode::Stationary {
            return Err(StateError::MergeRequiresStationary);
        }
        if self.order != other.order {
            return Err(StateError::MergeOrderMismatch {
                left: self.order,
                right: other.order,
            });
        }
        if self.accepted == 0 || other.accepted == 0 {
            return Err(StateError::MergeEmptyState);
        }
        let n1 = self.accepted as f64;
        let n2 = other.accepted as f64;
        let inv = 1.0 / (n1 + n2);
        let mut merged = Self::with_mode(self.order, Mode::Stationary)?;
        merged.accepted = self.accepted + other.accepted;
        merged.rejected = self.rejected + other.rejected;
        for k in 0..=self.order {
            merged.a1[k] = (n1 * self.a1[k] + n2 * other.a1[k]) * inv;
            merged.a2[k] = (n1 * self.a2[k] + n2 * other.a2[k]) * inv;
        }
        for k in 0..=self.order {
            let (src1, src2) = (self.joint.row(k), other.joint.row(k));
            let dst = merged.joint.row_mut(k);
            for l in 0..=self.order {
                dst[l] = (n1 * src1[l] + n2 * src2[l]) * inv;
            }
        }
        Ok(merged)
    }

    /// Serializes the state as
    /// `{"order": N, "mode": {"stationary": n} | {"ew": lambda}, "a1": [...], "a2": [...], "A": [[...]]}`
    /// with 17-significant-digit numbers. Round-trips bit-exactly through
    /// `from_snapshot_json`.
    pub fn to_snapshot_json(&self) -> String {
        let mode = match self.mode {
            Mode::Stationary => format!("{{\"stationary\":{}}}", self.accepted),
            Mode::ExpWeighted { lambda } => format!("{{\"ew\":{}}}", g17(lambda)),
        };
        let rows: Vec<String> = (0..=self.order)
            .map(|k| json_array(self.joint.row(k)))
            .collect();
        format!(
            "{{\"order\":{},\"mode\":{},\"a1\":{},\"a2\":{},\"A\":[{}]}}",
            self.order,
            mode,
            json_array(&self.a1),
            json_array(&self.a2),
            rows.join(",")
        )
    }

    /// Restores a snapshot, validating the state invariants. The rejected
    /// count is not part of the snapshot and restores to zero; a restored
    /// exponentially weighted state is treated as having seen data.
    pub fn from_snapshot_json(text: &str) -> Result<Self, StateError> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| StateError::MalformedSnapshot(e.to_string()))?;
        let order = value["order"]
            .as_u64()
            .ok_or_else(|| StateError::MalformedSnapshot("missing integer field `order`".into()))?
            as usize;
        if order == 0 || order > MAX_ORDER {
            return Err(StateError::Basis(BasisError::InvalidOrder(order)));
        }
        let dim = order + 1;
        let (mode, accepted) = if let Some(n) = value["mode"]["stationary"].as_u64() {
            (Mode::Stationary, n)
        } else if let Some(lambda) = value["mode"]["ew"].as_f64() {
            if !(lambda > 0.0 && lambda <= 1.0) {
                return Err(StateError::InvalidLambda(lambda));
            }
            (Mode::ExpWeighted { lambda }, 1)
        } else {
            return Err(StateError::MalformedSnapshot(
                "field `mode` must be {\"stationary\": n} or {\"ew\": lambda}".into(),
            ));
        };

        let a1 = snapshot_floats(&value["a1"], dim, "a1")?;
        let a2 = snapshot_floats(&value["a2"], dim, "a2")?;
        let rows = value["A"]
            .as_array()
            .ok_or_else(|| StateError::MalformedSnapshot("missing array field `A`".into()))?;
        if rows.len() != dim {
            return Err(StateError::MalformedSnapshot(format!(
                "expected {dim} rows in `A`, found {}",
                rows.len()
            )));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            data.extend(snapshot_floats(row, dim, "A row")?);
        }

        let marginal_bound = 0.76;
        let joint_bound = 0.76 * 0.76;
        for (name, vec, bound) in [
            ("a1", &a1, marginal_bound),
            ("a2", &a2, marginal_bound),
            ("A", &data, joint_bound),
        ] {
            for v in vec {
                if !v.is_finite() || v.abs() > bound {
                    return Err(StateError::InvalidSnapshot(format!(
                        "entry {v} of `{name}` outside [-{bound}, {bound}]"
                    )));
                }
            }
        }

        Ok(Self {
            order,
            mode,
            accepted,
            rejected: 0,
            a1,
            a2,
            joint: SquareMatrix::from_rows(dim, data),
            hx: vec![0.0; dim],
            hy: vec![0.0; dim],
        })
    }
}

fn snapshot_floats(
    value: &serde_json::Value,
    expected_len: usize,
    what: &str,
) -> Result<Vec<f64>, StateError> {
    let items = value
        .as_array()
        .ok_or_else(|| StateError::MalformedSnapshot(format!("`{what}` is not an array")))?;
    if items.len() != expected_len {
        return Err(StateError::MalformedSnapshot(format!(
            "`{what}` has length {}, expected {expected_len}",
            items.len()
        )));
    }
    items
        .iter()
        .map(|v| {
            v.as_f64().ok_or_else(|| {
                StateError::MalformedSnapshot(format!("non-numeric entry in `{what}`"))
            })
        })
        .collect()
}

/// Welford running mean and variance for one margin, used to standardize a
/// stream online.
///
/// The transform uses the statistics accumulated BEFORE the current value, so
/// no observation is standardized against itself, and it passes values through
/// unchanged until two observations have been seen and the variance is
/// positive.
#[derive(Debug, Clone, Default)]
pub struct Standardizer {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Standardizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (n-1 denominator); zero until two observations.
    pub fn sample_variance(&self) -> f64 {
        if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn sample_sd(&self) -> f64 {
        self.sample_variance().sqrt()
    }

    /// Returns the standardized value of `v` (or `v` itself while suspended),
    /// then folds `v` into the running statistics.
    pub fn standardize_then_update(&mut self, v: f64) -> Result<f64, StateError> {
        if !v.is_finite() {
            return Err(StateError::NonFiniteValue(v));
        }
        let out = if self.count >= 2 {
            let var = self.sample_variance();
            if var > 0.0 {
                (v - self.mean) / var.sqrt()
            } else {
                v
            }
        } else {
            v
        };
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
        Ok(out)
    }
}
