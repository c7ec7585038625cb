//! The `stream` subcommand: run one estimator over an `x,y` stream and emit
//! JSON lines.

use anyhow::{anyhow, Result};
use corr_core::baselines::{EwPearson, MovingWindowSpearman, WindowStep};
use corr_core::basis::BasisCache;
use corr_core::correlation::{estimate_spearman, spearman_to_pearson};
use corr_core::fmt::g17;
use corr_core::state::{CoefficientState, Standardizer};
use std::io::Write;

pub enum StreamEstimator {
    Hermite {
        state: CoefficientState,
        cache: BasisCache,
    },
    EwPearson(EwPearson),
    Window(MovingWindowSpearman),
}

impl StreamEstimator {
    fn is_hermite(&self) -> bool {
        matches!(self, StreamEstimator::Hermite { .. })
    }

    /// Emits the JSON line for observation `i`, or nothing when the estimator
    /// has nothing to report yet (a window that is still filling).
    fn json_line(&self, i: u64) -> Result<Option<String>> {
        match self {
            StreamEstimator::Hermite { state, cache } => {
                let est = estimate_spearman(state, cache)?;
                Ok(Some(est.json_line(i)))
            }
            StreamEstimator::EwPearson(ew) => Ok(Some(match ew.estimate() {
                Some(raw) => {
                    let clamped = raw.clamp(-1.0, 1.0);
                    format!(
                        "{{\"i\":{i},\"estimator\":\"ew-pearson\",\"raw\":{},\"clamped\":{},\"pearson\":{}}}",
                        g17(raw),
                        g17(clamped),
                        g17(clamped)
                    )
                }
                None => format!(
                    "{{\"i\":{i},\"estimator\":\"ew-pearson\",\"raw\":null,\"clamped\":null,\"pearson\":null}}"
                ),
            })),
            StreamEstimator::Window(_) => unreachable!("window emission handled per step"),
        }
    }
}

pub struct StreamRunner {
    estimator: StreamEstimator,
    standardize: Option<(Standardizer, Standardizer)>,
    emit_every: u64,
    count: u64,
    pending_line: Option<String>,
    last_emitted_at: u64,
}

impl StreamRunner {
    pub fn new(estimator: StreamEstimator, standardize: bool, emit_every: u64) -> Self {
        Self {
            estimator,
            standardize: standardize.then(|| (Standardizer::new(), Standardizer::new())),
            emit_every: emit_every.max(1),
            count: 0,
            pending_line: None,
            last_emitted_at: 0,
        }
    }

    /// Processes one observation; writes a JSON line to `out` on emission
    /// steps.
    pub fn push(&mut self, x: f64, y: f64, out: &mut impl Write) -> Result<()> {
        let (x, y) = match &mut self.standardize {
            Some((sx, sy)) => (sx.standardize_then_update(x)?, sy.standardize_then_update(y)?),
            None => (x, y),
        };
        self.count += 1;
        let i = self.count;
        let line = match &mut self.estimator {
            StreamEstimator::Hermite { state, .. } => {
                state.update(x, y)?;
                None
            }
            StreamEstimator::EwPearson(ew) => {
                ew.update(x, y)?;
                None
            }
            StreamEstimator::Window(win) => match win.push(x, y)? {
                WindowStep::Pending => return Ok(()),
                WindowStep::Degenerate => Some(format!(
                    "{{\"i\":{i},\"estimator\":\"window-spearman\",\"raw\":null,\"clamped\":null,\"pearson\":null}}"
                )),
                WindowStep::Estimate(r) => Some(format!(
                    "{{\"i\":{i},\"estimator\":\"window-spearman\",\"raw\":{},\"clamped\":{},\"pearson\":{}}}",
                    g17(r),
                    g17(r),
                    g17(spearman_to_pearson(r)?)
                )),
            },
        };
        if i.is_multiple_of(self.emit_every) {
            let line = match line {
                Some(l) => l,
                None => match self.estimator.json_line(i)? {
                    Some(l) => l,
                    None => return Ok(()),
                },
            };
            writeln!(out, "{line}")?;
            self.last_emitted_at = i;
        } else {
            self.pending_line = line;
        }
        Ok(())
    }

    /// Emits the final estimate if the last observation fell between emission
    /// steps, then returns the snapshot JSON for Hermite estimators.
    pub fn finish(&mut self, out: &mut impl Write) -> Result<Option<String>> {
        if self.count == 0 {
            return Err(anyhow!("input contained no usable observations"));
        }
        if self.last_emitted_at < self.count {
            let line = match self.pending_line.take() {
                Some(l) => Some(l),
                None => {
                    if self.estimator.is_hermite() || matches!(self.estimator, StreamEstimator::EwPearson(_)) {
                        self.estimator.json_line(self.count)?
                    } else {
                        None
                    }
                }
            };
            if let Some(line) = line {
                writeln!(out, "{line}")?;
            }
        }
        Ok(match &self.estimator {
            StreamEstimator::Hermite { state, .. } => Some(state.to_snapshot_json()),
            _ => None,
        })
    }
}
