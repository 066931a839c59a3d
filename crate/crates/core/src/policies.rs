//! Decision rules. Each rule is a pure function of the observed state and
//! the parameters; the engine owns every mutation.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num::{One, Zero};
use rand::Rng;
use rand_distr::{Beta, Distribution};
use thiserror::Error;

use crate::domain::{JobType, Parameters, PredictionModel, Rational};

/// An unopened, released job as the policy sees it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueuedJob {
    pub id: usize,
    /// Urgency probability used for ordering (posterior or p̂).
    pub prior: Rational,
    /// Binary label, when the instance has one.
    pub label: Option<JobType>,
}

impl QueuedJob {
    /// Queue order: nonincreasing prior, then urgent label first, then id.
    ///
    /// The label key only matters when both labels share a posterior, which
    /// happens when the labels carry no information; keeping each label class
    /// contiguous there preserves the label-driven policies' structure.
    pub fn queue_order(&self, other: &QueuedJob) -> Ordering {
        other.prior.cmp(&self.prior).then(self.label.cmp(&other.label)).then(self.id.cmp(&other.id))
    }
}

/// A job stopped at its α-point, with 1−α work left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterruptedJob {
    pub id: usize,
    /// Probability the job is urgent, learned at its α-point.
    pub theta: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyState {
    /// Sorted by [`QueuedJob::queue_order`].
    pub unopened: VecDeque<QueuedJob>,
    /// Interruption order (oldest first).
    pub interrupted: Vec<InterruptedJob>,
    pub clock: Rational,
}

impl PolicyState {
    pub fn new(unopened: impl IntoIterator<Item = QueuedJob>, interrupted: Vec<InterruptedJob>) -> Self {
        let mut unopened: Vec<QueuedJob> = unopened.into_iter().collect();
        unopened.sort_by(QueuedJob::queue_order);
        PolicyState { unopened: unopened.into(), interrupted, clock: Rational::zero() }
    }

    pub fn is_terminal(&self) -> bool {
        self.unopened.is_empty() && self.interrupted.is_empty()
    }

    fn oldest_interrupted(&self) -> Option<usize> {
        self.interrupted.first().map(|j| j.id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    /// Open the head of the unopened queue and run it to its α-point.
    OpenNext,
    /// Finish the residual work of an interrupted job.
    CompleteLow(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("no legal action in a terminal state")]
    Terminal,
    #[error("policy {policy} cannot run here: {reason}")]
    Incompatible { policy: &'static str, reason: &'static str },
}

/// Handles the forced cases shared by every rule. Returns `Ok(None)` when
/// both an open and a completion are legal.
fn forced(state: &PolicyState) -> Result<Option<Action>, PolicyError> {
    match (state.unopened.is_empty(), state.oldest_interrupted()) {
        (true, None) => Err(PolicyError::Terminal),
        (true, Some(id)) => Ok(Some(Action::CompleteLow(id))),
        (false, None) => Ok(Some(Action::OpenNext)),
        (false, Some(_)) => Ok(None),
    }
}

/// The β-threshold rule: open the next job iff its urgency probability exceeds β,
/// otherwise finish the oldest interrupted job.
pub fn beta_threshold_decide(state: &PolicyState, params: &Parameters) -> Result<Action, PolicyError> {
    threshold_decide(state, &params.beta())
}

/// The β rule with an arbitrary threshold in place of β.
pub fn threshold_decide(state: &PolicyState, threshold: &Rational) -> Result<Action, PolicyError> {
    if let Some(a) = forced(state)? {
        return Ok(a);
    }
    let head = &state.unopened[0];
    if head.prior > *threshold {
        Ok(Action::OpenNext)
    } else {
        Ok(Action::CompleteLow(state.interrupted[0].id))
    }
}

/// Never preempts. The engine also forces continuation at α-points for
/// this rule, so the completion branch only fires on empty queues.
pub fn nonpreemptive_decide(state: &PolicyState, _params: &Parameters) -> Result<Action, PolicyError> {
    if state.unopened.is_empty() {
        return forced(state).map(|a| a.expect("unopened empty forces an action"));
    }
    Ok(Action::OpenNext)
}

/// Opens everything before touching any residual work.
pub fn preemptive_decide(state: &PolicyState, _params: &Parameters) -> Result<Action, PolicyError> {
    if let Some(a) = forced(state)? {
        return Ok(a);
    }
    Ok(Action::OpenNext)
}

/// Preempts while the next job carries an urgent label, finishes residual
/// work otherwise. Needs binary labels.
pub fn hybrid_decide(state: &PolicyState, _params: &Parameters) -> Result<Action, PolicyError> {
    if let Some(a) = forced(state)? {
        return Ok(a);
    }
    match state.unopened[0].label {
        Some(JobType::Urgent) => Ok(Action::OpenNext),
        Some(JobType::NonUrgent) => Ok(Action::CompleteLow(state.interrupted[0].id)),
        None => Err(PolicyError::Incompatible { policy: "hybrid", reason: "requires binary labels" }),
    }
}

/// β + (α/(1−α))·(ω₀/(ω₀−ω₁))·θ/(1−θ). `None` stands for +∞ (θ = 1).
pub fn modified_threshold(params: &Parameters, theta: Rational) -> Option<Rational> {
    let one = Rational::one();
    if theta >= one {
        return None;
    }
    let a = params.alpha();
    let scale = a / (one - a) * (params.w0() / (params.w0() - params.w1()));
    Some(params.beta() + scale * (theta / (one - theta)))
}

/// Threshold rule for uncertain revelation: compare the head's prior
/// against the threshold raised by the most-likely-urgent interrupted job,
/// and if not opening, finish that job.
pub fn modified_beta_decide(state: &PolicyState, params: &Parameters) -> Result<Action, PolicyError> {
    if state.interrupted.is_empty() {
        return forced(state).map(|a| a.expect("nonterminal"));
    }
    // Earliest-interrupted among the maximizers, matching the FIFO order of
    // the plain β rule when every θ is 0.
    let mut best = &state.interrupted[0];
    for j in &state.interrupted[1..] {
        if j.theta > best.theta {
            best = j;
        }
    }
    if state.unopened.is_empty() {
        return Ok(Action::CompleteLow(best.id));
    }
    match modified_threshold(params, best.theta) {
        Some(tau) if state.unopened[0].prior > tau => Ok(Action::OpenNext),
        _ => Ok(Action::CompleteLow(best.id)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Nonpreemptive,
    Preemptive,
    Hybrid,
    Beta,
    ModifiedBeta,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Nonpreemptive,
        PolicyKind::Preemptive,
        PolicyKind::Hybrid,
        PolicyKind::Beta,
        PolicyKind::ModifiedBeta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Nonpreemptive => "nonpreemptive",
            PolicyKind::Preemptive => "preemptive",
            PolicyKind::Hybrid => "hybrid",
            PolicyKind::Beta => "beta",
            PolicyKind::ModifiedBeta => "modified-beta",
        }
    }

    pub fn decide(self, state: &PolicyState, params: &Parameters) -> Result<Action, PolicyError> {
        match self {
            PolicyKind::Nonpreemptive => nonpreemptive_decide(state, params),
            PolicyKind::Preemptive => preemptive_decide(state, params),
            PolicyKind::Hybrid => hybrid_decide(state, params),
            PolicyKind::Beta => beta_threshold_decide(state, params),
            PolicyKind::ModifiedBeta => modified_beta_decide(state, params),
        }
    }

    /// Whether the rule may stop a job at its α-point at all.
    pub fn preempts(self) -> bool {
        !matches!(self, PolicyKind::Nonpreemptive)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| format!("unknown policy {s:?}; expected one of nonpreemptive, preemptive, hybrid, beta, modified-beta"))
    }
}

/// Distribution of the urgency probability θ learned at an α-point, given
/// the job's true type: Beta(a, b) for urgent jobs and Beta(b', a') for
/// non-urgent ones as configured.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaDistribution {
    pub urgent: (f64, f64),
    pub non_urgent: (f64, f64),
    pub seed: u64,
    /// θ is rounded to a multiple of 1/resolution so that thresholds stay exact.
    pub resolution: i64,
}

impl Default for ThetaDistribution {
    fn default() -> Self {
        ThetaDistribution { urgent: (4.0, 1.0), non_urgent: (1.0, 4.0), seed: 0, resolution: 1_000_000 }
    }
}

impl ThetaDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, t: JobType, rng: &mut R) -> Rational {
        let (a, b) = match t {
            JobType::Urgent => self.urgent,
            JobType::NonUrgent => self.non_urgent,
        };
        let x: f64 = Beta::new(a, b).expect("beta shape parameters must be positive").sample(rng);
        let k = (x * self.resolution as f64).round().clamp(0.0, self.resolution as f64) as i64;
        Rational::new(k, self.resolution)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum RevelationModel {
    /// θ = 1 for urgent jobs, 0 otherwise.
    #[default]
    Exact,
    Probabilistic(ThetaDistribution),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Nonpreemptive,
    Preemptive,
    Hybrid,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Nonpreemptive => "nonpreemptive",
            Regime::Preemptive => "preemptive",
            Regime::Hybrid => "hybrid",
        })
    }
}

/// Which behavior the β rule exhibits under binary labels.
///
/// Hybrid exactly when P(0|pred 1) ≤ β < P(0|pred 0), which is the
/// tie rule of the engine (a head at exactly β is not opened).
pub fn classify_regime(model: &PredictionModel, params: &Parameters) -> Regime {
    let b = params.beta();
    let p0 = model.posterior(JobType::Urgent);
    let p1 = model.posterior(JobType::NonUrgent);
    if p1 <= b && b < p0 {
        Regime::Hybrid
    } else if model.rho() <= b {
        Regime::Nonpreemptive
    } else {
        Regime::Preemptive
    }
}

/// ρ(1−β)ε₀ + β(1−ρ)ε₁ < min(ρ(1−β), β(1−ρ)), the error-rate form of the
/// hybrid condition. Differs from [`classify_regime`] only when
/// P(0|pred 1) = β exactly.
pub fn hybrid_condition_strict(model: &PredictionModel, params: &Parameters) -> bool {
    let one = Rational::one();
    let b = params.beta();
    let rho = model.rho();
    let lhs = rho * (one - b) * model.eps0() + b * (one - rho) * model.eps1();
    lhs < (rho * (one - b)).min(b * (one - rho))
}
