//! Reference estimators: exact batch Spearman with average-rank ties, a
//! moving-window variant, and an exponentially weighted Pearson estimator.
//!
//! These are correctness baselines, not performance paths. The moving window
//! re-ranks its contents on every step rather than maintaining ranks
//! incrementally; simplicity aids trust in what the streaming estimator is
//! compared against.

use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("correlation undefined: a margin has zero rank variance (constant values)")]
    DegenerateMargin,

    #[error("observations must be finite")]
    NonFiniteObservation,

    #[error("window size must be at least 2, got {0}")]
    InvalidWindow(usize),

    #[error("lambda must lie in (0, 1], got {0}")]
    InvalidLambda(f64),
}

/// Average ranks (1-based) of `values`; tied values share the mean of the
/// positions they occupy, so rank sums are preserved.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>, BaselineError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(BaselineError::NonFiniteObservation);
    }
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i..j (0-based) share the average of ranks i+1..=j.
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    Ok(ranks)
}

/// Paired observations with their per-margin average ranks.
#[derive(Debug, Clone)]
pub struct RankedSample {
    pub x_ranks: Vec<f64>,
    pub y_ranks: Vec<f64>,
}

impl RankedSample {
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, BaselineError> {
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        Ok(Self {
            x_ranks: average_ranks(&xs)?,
            y_ranks: average_ranks(&ys)?,
        })
    }
}

/// Exact sample Spearman correlation: the Pearson correlation of the rank
/// vectors, with average ranks on ties. Needs `n >= 2` and both margins
/// non-constant.
pub fn exact_spearman(pairs: &[(f64, f64)]) -> Result<f64, BaselineError> {
    if pairs.len() < 2 {
        return Err(BaselineError::TooFewObservations {
            needed: 2,
            got: pairs.len(),
        });
    }
    let ranked = RankedSample::from_pairs(pairs)?;
    pearson(&ranked.x_ranks, &ranked.y_ranks)
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, BaselineError> {
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (xi, yi) in x.iter().zip(y.iter()) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(BaselineError::DegenerateMargin);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Output of one moving-window step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowStep {
    /// Fewer than `w` observations seen so far; nothing is emitted.
    Pending,
    /// The window is full but its contents are degenerate (constant margin).
    Degenerate,
    /// Exact Spearman correlation of the last `w` observations.
    Estimate(f64),
}

/// Exact Spearman correlation over a sliding window of the last `w`
/// observations, recomputed from scratch each step.
#[derive(Debug, Clone)]
pub struct MovingWindowSpearman {
    window: VecDeque<(f64, f64)>,
    size: usize,
}

impl MovingWindowSpearman {
    pub fn new(size: usize) -> Result<Self, BaselineError> {
        if size < 2 {
            return Err(BaselineError::InvalidWindow(size));
        }
        Ok(Self {
            window: VecDeque::with_capacity(size),
            size,
        })
    }

    pub fn window_size(&self) -> usize {
        self.size
    }

    pub fn push(&mut self, x: f64, y: f64) -> Result<WindowStep, BaselineError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(BaselineError::NonFiniteObservation);
        }
        if self.window.len() == self.size {
            self.window.pop_front();
        }
        self.window.push_back((x, y));
        if self.window.len() < self.size {
            return Ok(WindowStep::Pending);
        }
        let pairs: Vec<(f64, f64)> = self.window.iter().copied().collect();
        match exact_spearman(&pairs) {
            Ok(r) => Ok(WindowStep::Estimate(r)),
            Err(BaselineError::DegenerateMargin) => Ok(WindowStep::Degenerate),
            Err(e) => Err(e),
        }
    }
}

/// Exponentially weighted Pearson correlation state.
///
/// The first observation initializes the means to the data and the variance
/// and covariance accumulators to one; later observations blend with weight
/// `lambda`, using the just-updated means in the squared terms. The unit
/// initialization biases early estimates toward one and is kept as the
/// comparison baseline definition.
#[derive(Debug, Clone)]
pub struct EwPearson {
    lambda: f64,
    count: u64,
    mean_x: f64,
    mean_y: f64,
    var_x: f64,
    var_y: f64,
    cov: f64,
}

impl EwPearson {
    pub fn new(lambda: f64) -> Result<Self, BaselineError> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(BaselineError::InvalidLambda(lambda));
        }
        Ok(Self {
            lambda,
            count: 0,
            mean_x: 0.0,
            mean_y: 0.0,
            var_x: 0.0,
            var_y: 0.0,
            cov: 0.0,
        })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Folds `(x, y)` in and returns the updated correlation estimate, or
    /// `None` when the variance product is zero and the ratio is undefined.
    pub fn update(&mut self, x: f64, y: f64) -> Result<Option<f64>, BaselineError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(BaselineError::NonFiniteObservation);
        }
        if self.count == 0 {
            self.mean_x = x;
            self.mean_y = y;
            self.var_x = 1.0;
            self.var_y = 1.0;
            self.cov = 1.0;
        } else {
            let l = self.lambda;
            let keep = 1.0 - l;
            self.mean_x = l * x + keep * self.mean_x;
            self.mean_y = l * y + keep * self.mean_y;
            let dx = x - self.mean_x;
            let dy = y - self.mean_y;
            self.var_x = l * dx * dx + keep * self.var_x;
            self.var_y = l * dy * dy + keep * self.var_y;
            self.cov = l * dx * dy + keep * self.cov;
        }
        self.count += 1;
        Ok(self.estimate())
    }

    /// Current estimate `C / sqrt(V_x V_y)`, or `None` when undefined.
    pub fn estimate(&self) -> Option<f64> {
        if self.count == 0 {
            return None;
        }
        let denom = self.var_x * self.var_y;
        if denom <= 0.0 {
            return None;
        }
        Some(self.cov / denom.sqrt())
    }
}
