use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::QueryCounts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunFlag {
    /// The query budget ran out; the estimate covers completed work only.
    BudgetExhausted,
    /// The wall-clock limit was hit; the estimate covers completed work only.
    TimeLimit,
    /// No estimate could be produced.
    Unavailable,
    /// A guess-and-prove search ended without certifying a guess.
    NotConverged,
    /// An iteration cap stopped the run before its stopping rule fired.
    RoundCap,
}

/// Result of one estimator run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub queries: QueryCounts,
    pub wall_millis: f64,
    pub rounds_used: u64,
    pub seed: u64,
    pub flags: Vec<RunFlag>,
}

impl EstimateReport {
    pub fn is_available(&self) -> bool {
        !self.flags.contains(&RunFlag::Unavailable)
    }

    pub fn has_flag(&self, flag: RunFlag) -> bool {
        self.flags.contains(&flag)
    }

    /// (estimate - truth) / truth.
    pub fn relative_error(&self, truth: u64) -> Option<f64> {
        (self.is_available() && truth > 0).then(|| (self.estimate - truth as f64) / truth as f64)
    }
}

/// Accumulates the pieces of a report while an estimator runs.
pub(crate) struct ReportBuilder {
    started: Instant,
    seed: u64,
    flags: Vec<RunFlag>,
}

impl ReportBuilder {
    pub(crate) fn start(seed: u64) -> Self {
        ReportBuilder {
            started: Instant::now(),
            seed,
            flags: Vec::new(),
        }
    }

    pub(crate) fn flag(&mut self, flag: RunFlag) {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
    }

    /// Records an interruption from the meter, passing any other error on.
    pub(crate) fn absorb(&mut self, err: Error) -> Result<()> {
        match err {
            Error::BudgetExhausted { .. } => self.flag(RunFlag::BudgetExhausted),
            Error::TimeLimitReached { .. } => self.flag(RunFlag::TimeLimit),
            other => return Err(other),
        }
        Ok(())
    }

    pub(crate) fn finish(self, estimate: Option<f64>, queries: QueryCounts, rounds_used: u64) -> EstimateReport {
        let mut flags = self.flags;
        if estimate.is_none() {
            flags.push(RunFlag::Unavailable);
        }
        EstimateReport {
            estimate: estimate.unwrap_or(0.0),
            queries,
            wall_millis: self.started.elapsed().as_secs_f64() * 1e3,
            rounds_used,
            seed: self.seed,
            flags,
        }
    }
}
