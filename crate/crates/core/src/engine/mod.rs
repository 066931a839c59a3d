//! Exact single-machine simulation with α-point preemption, plus the
//! offline schedulers and exhaustive oracles used to check it.

mod expectimax;
mod offline;
mod online;

pub use expectimax::{
    expectimax_optimal, expectimax_optimal_bounded, threshold_rule_expected, TreeOracle, DEFAULT_EXPECTIMAX_BOUND,
};
pub use offline::{
    enumerate_instance_optimum, enumerate_offline_optimum, offline_wspt, offline_wsrpt, weighted_jobs, wsrpt_schedule,
    Schedule, WeightedJob, DEFAULT_ENUMERATION_BOUND,
};
pub use online::{run, run_cost, run_with, RunOptions};

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::domain::{format_rational, DomainError, JobType, Rational};
use crate::policies::{Action, PolicyError};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("policy contract violated at t={}: {source}; recent trace: {context}", format_rational(.time))]
    Policy { source: PolicyError, time: Rational, context: String },
    #[error("illegal action {action:?} at t={}; recent trace: {context}", format_rational(.time))]
    IllegalAction { action: Action, time: Rational, context: String },
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("resource limit: n = {n} exceeds the bound {bound}")]
    ResourceLimit { n: usize, bound: usize },
    #[error("time scale overflow: release dates and alpha need too fine a common denominator")]
    Overflow,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Open,
    AlphaReveal,
    Complete,
    Preempt,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Open => "open",
            EventKind::AlphaReveal => "alpha_reveal",
            EventKind::Complete => "complete",
            EventKind::Preempt => "preempt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: Rational,
    pub kind: EventKind,
    pub job: usize,
    pub true_type: JobType,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", format_rational(&self.time), self.kind.name(), self.job, self.true_type)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub completion_times: BTreeMap<usize, Rational>,
    pub total_cost: Rational,
    /// Empty unless trace retention was requested.
    pub trace: Vec<TraceEvent>,
    pub preemption_count: usize,
}

/// `t,event,job_id,true_type`, one line per event.
pub fn format_trace(trace: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in trace {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

fn trace_context(trace: &[TraceEvent]) -> String {
    let tail = &trace[trace.len().saturating_sub(4)..];
    if tail.is_empty() {
        return "<empty>".into();
    }
    tail.iter().map(ToString::to_string).collect::<Vec<_>>().join(" | ")
}

/// Integer time grid: every event time is a multiple of `1/denom`.
#[derive(Debug, Clone, Copy)]
struct TickScale {
    denom: i64,
}

impl TickScale {
    fn new<'a>(values: impl IntoIterator<Item = &'a Rational>) -> Result<Self, EngineError> {
        let mut denom: i64 = 1;
        for v in values {
            let d = *v.denom() as i128;
            let g = num::integer::gcd(denom as i128, d);
            let l = denom as i128 / g * d;
            if l > (i64::MAX / 4096) as i128 {
                return Err(EngineError::Overflow);
            }
            denom = l as i64;
        }
        Ok(TickScale { denom })
    }

    fn ticks(&self, r: &Rational) -> Result<i64, EngineError> {
        r.numer().checked_mul(self.denom / r.denom()).ok_or(EngineError::Overflow)
    }

    fn rational(&self, t: i64) -> Rational {
        Rational::new(t, self.denom)
    }
}

/// Σ w·C where the completion-tick sums are split by weight class.
fn weighted_cost(scale: TickScale, w0: Rational, sum0: i128, w1: Rational, sum1: i128) -> Result<Rational, EngineError> {
    use num::rational::Ratio;
    let big = |r: Rational| Ratio::<i128>::new(*r.numer() as i128, *r.denom() as i128);
    let d = scale.denom as i128;
    let total = big(w0) * Ratio::new(sum0, d) + big(w1) * Ratio::new(sum1, d);
    let n = i64::try_from(*total.numer()).map_err(|_| EngineError::Overflow)?;
    let dd = i64::try_from(*total.denom()).map_err(|_| EngineError::Overflow)?;
    Ok(Rational::new(n, dd))
}
