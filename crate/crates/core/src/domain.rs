//! Problem data: parameters, the prediction channel, jobs and instances.
//!
//! Everything that feeds a threshold comparison or an event time is an exact
//! rational. Floats only appear in Monte Carlo aggregates and in the
//! competitive-ratio formulas downstream.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::Ratio;
use num::{BigRational, One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Exact rational used for times, weights and probabilities.
pub type Rational = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid prediction model: {0}")]
    InvalidModel(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("cannot parse rational from {0:?}")]
    ParseRational(String),
}

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(numer, denom)
}

pub fn to_big(q: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

pub fn to_f64(q: &Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

pub fn big_to_f64(q: &BigRational) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        // Huge numerators/denominators: scale down before dividing.
        _ => {
            let bits = q.denom().bits().max(q.numer().bits()) as i64 - 900;
            let shift = bits.max(0) as usize;
            let n = (q.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (q.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Formats as `num/den`, the wire form used by every file this crate writes.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `a/b`, an integer, or a finite decimal such as `0.41421356`.
/// Decimals are converted exactly (`0.4` becomes `2/5`).
pub fn parse_rational(s: &str) -> Result<Rational, DomainError> {
    let err = || DomainError::ParseRational(s.to_string());
    let s = s.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| err())?;
        let d: i64 = d.trim().parse().map_err(|_| err())?;
        if d == 0 {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    if frac_part.len() > 17 {
        return Err(err());
    }
    let den = 10i64.checked_pow(frac_part.len() as u32).ok_or_else(err)?;
    let int_val: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| err())? };
    let frac_val: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| err())? };
    let num = int_val
        .checked_mul(den)
        .and_then(|v| v.checked_add(frac_val))
        .ok_or_else(err)?;
    Ok(Rational::new(if neg { -num } else { num }, den))
}

/// Job class. Urgent jobs are type 0, non-urgent type 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JobType {
    Urgent,
    NonUrgent,
}

impl JobType {
    pub fn index(self) -> u8 {
        match self {
            JobType::Urgent => 0,
            JobType::NonUrgent => 1,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            0 => Some(JobType::Urgent),
            1 => Some(JobType::NonUrgent),
            _ => None,
        }
    }
}

impl fmt::Display for JobType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Machine and cost constants: the α-point fraction and the two weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parameters {
    alpha: Rational,
    w0: Rational,
    w1: Rational,
}

impl Parameters {
    pub fn new(alpha: Rational, w0: Rational, w1: Rational) -> Result<Self, DomainError> {
        if !(alpha > Rational::zero() && alpha < Rational::one()) {
            return Err(DomainError::InvalidParameters(format!(
                "alpha must lie in (0,1), got {}",
                format_rational(&alpha)
            )));
        }
        if !(w1 > Rational::zero() && w0 > w1) {
            return Err(DomainError::InvalidParameters(format!(
                "weights must satisfy w0 > w1 > 0, got w0={} w1={}",
                format_rational(&w0),
                format_rational(&w1)
            )));
        }
        Ok(Parameters { alpha, w0, w1 })
    }

    pub fn alpha(&self) -> Rational {
        self.alpha
    }

    pub fn w0(&self) -> Rational {
        self.w0
    }

    pub fn w1(&self) -> Rational {
        self.w1
    }

    /// Residual work of an interrupted job.
    pub fn residual(&self) -> Rational {
        Rational::one() - self.alpha
    }

    pub fn weight(&self, t: JobType) -> Rational {
        match t {
            JobType::Urgent => self.w0,
            JobType::NonUrgent => self.w1,
        }
    }

    /// (α/(1−α))·(ω₁/(ω₀−ω₁)).
    pub fn beta(&self) -> Rational {
        self.alpha / (Rational::one() - self.alpha) * (self.w1 / (self.w0 - self.w1))
    }

    /// ω₁ < ω₀(1−α).
    pub fn satisfies_assumption1(&self) -> bool {
        self.w1 < self.w0 * (Rational::one() - self.alpha)
    }

    /// E(w) = ω₁ + (ω₀−ω₁)·p for a job that is urgent with probability p.
    pub fn expected_weight(&self, p: Rational) -> Rational {
        self.w1 + (self.w0 - self.w1) * p
    }

    /// cμ comparison: an unopened job (unit work) against a known
    /// non-urgent remainder (work 1−α). True when the unopened job wins.
    pub fn cmu_prefers_open(&self, p: Rational) -> bool {
        self.expected_weight(p) > self.w1 / (Rational::one() - self.alpha)
    }
}

pub fn beta(params: &Parameters) -> Rational {
    params.beta()
}

/// Prior urgency rate and the two error rates of a binary predictor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionModel {
    rho: Rational,
    eps0: Rational,
    eps1: Rational,
}

impl PredictionModel {
    pub fn new(rho: Rational, eps0: Rational, eps1: Rational) -> Result<Self, DomainError> {
        let half = rat(1, 2);
        if !(rho > Rational::zero() && rho < Rational::one()) {
            return Err(DomainError::InvalidModel(format!(
                "rho must lie in (0,1), got {}",
                format_rational(&rho)
            )));
        }
        for (name, e) in [("eps0", eps0), ("eps1", eps1)] {
            if e < Rational::zero() || e > half {
                return Err(DomainError::InvalidModel(format!(
                    "{name} must lie in [0,1/2], got {}",
                    format_rational(&e)
                )));
            }
        }
        Ok(PredictionModel { rho, eps0, eps1 })
    }

    /// Symmetric channel with ε₀ = ε₁ = eps.
    pub fn symmetric(rho: Rational, eps: Rational) -> Result<Self, DomainError> {
        Self::new(rho, eps, eps)
    }

    pub fn rho(&self) -> Rational {
        self.rho
    }

    pub fn eps0(&self) -> Rational {
        self.eps0
    }

    pub fn eps1(&self) -> Rational {
        self.eps1
    }

    /// Average error rate (ε₀+ε₁)/2.
    pub fn eps(&self) -> Rational {
        (self.eps0 + self.eps1) / 2
    }

    /// P(pred = label).
    pub fn label_probability(&self, label: JobType) -> Rational {
        let one = Rational::one();
        let p0 = (one - self.eps0) * self.rho + self.eps1 * (one - self.rho);
        match label {
            JobType::Urgent => p0,
            JobType::NonUrgent => one - p0,
        }
    }

    /// P(true = 0 | pred = label) by Bayes' rule.
    pub fn posterior(&self, label: JobType) -> Rational {
        let one = Rational::one();
        match label {
            JobType::Urgent => {
                let num = (one - self.eps0) * self.rho;
                num / (num + self.eps1 * (one - self.rho))
            }
            JobType::NonUrgent => {
                let num = self.eps0 * self.rho;
                num / (num + (one - self.eps1) * (one - self.rho))
            }
        }
    }

    /// Probability that a job of the given true type receives label 0.
    fn flip_to_urgent(&self, t: JobType) -> Rational {
        match t {
            JobType::Urgent => Rational::one() - self.eps0,
            JobType::NonUrgent => self.eps1,
        }
    }
}

pub fn posterior(model: &PredictionModel, label: JobType) -> Rational {
    model.posterior(label)
}

/// What the predictor told us about a job.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction {
    Label(JobType),
    /// Estimated probability p̂ that the job is urgent.
    Probability(Rational),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictionMode {
    Labels,
    Probabilities,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub id: usize,
    pub true_type: JobType,
    pub prediction: Prediction,
    pub release: Rational,
}

impl Job {
    pub fn new(id: usize, true_type: JobType, prediction: Prediction) -> Self {
        Job { id, true_type, prediction, release: Rational::zero() }
    }

    pub fn released_at(mut self, release: Rational) -> Self {
        self.release = release;
        self
    }

    pub fn label(&self) -> Option<JobType> {
        match self.prediction {
            Prediction::Label(l) => Some(l),
            Prediction::Probability(_) => None,
        }
    }
}

/// A validated set of unit jobs together with the constants that price them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    jobs: Vec<Job>,
    params: Parameters,
    model: Option<PredictionModel>,
    mode: PredictionMode,
}

impl Instance {
    pub fn new(jobs: Vec<Job>, params: Parameters, model: Option<PredictionModel>) -> Result<Self, DomainError> {
        if jobs.is_empty() {
            return Err(DomainError::InvalidInstance("an instance needs at least one job".into()));
        }
        let labels = jobs.iter().filter(|j| matches!(j.prediction, Prediction::Label(_))).count();
        let mode = if labels == jobs.len() {
            PredictionMode::Labels
        } else if labels == 0 {
            PredictionMode::Probabilities
        } else {
            return Err(DomainError::InvalidInstance(
                "instance mixes binary labels and probability estimates".into(),
            ));
        };
        if mode == PredictionMode::Labels && model.is_none() {
            return Err(DomainError::InvalidInstance(
                "binary labels need a prediction model to compute posteriors".into(),
            ));
        }
        let mut ids: Vec<usize> = jobs.iter().map(|j| j.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(DomainError::InvalidInstance("duplicate job id".into()));
        }
        for j in &jobs {
            if j.release < Rational::zero() {
                return Err(DomainError::InvalidInstance(format!("job {} has a negative release time", j.id)));
            }
            if let Prediction::Probability(p) = j.prediction {
                if p < Rational::zero() || p > Rational::one() {
                    return Err(DomainError::InvalidInstance(format!(
                        "job {} has probability estimate {} outside [0,1]",
                        j.id,
                        format_rational(&p)
                    )));
                }
            }
        }
        Ok(Instance { jobs, params, model, mode })
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn model(&self) -> Option<&PredictionModel> {
        self.model.as_ref()
    }

    pub fn mode(&self) -> PredictionMode {
        self.mode
    }

    pub fn n(&self) -> usize {
        self.jobs.len()
    }

    /// Number of truly urgent jobs.
    pub fn n0(&self) -> usize {
        self.jobs.iter().filter(|j| j.true_type == JobType::Urgent).count()
    }

    pub fn job(&self, id: usize) -> Option<&Job> {
        self.jobs.iter().find(|j| j.id == id)
    }

    pub fn weight(&self, job: &Job) -> Rational {
        self.params.weight(job.true_type)
    }

    /// Urgency probability used for ordering: the Bayes posterior of the
    /// label, or the classifier's own estimate.
    pub fn prior(&self, job: &Job) -> Rational {
        match job.prediction {
            Prediction::Label(l) => self
                .model
                .as_ref()
                .expect("label mode always carries a model")
                .posterior(l),
            Prediction::Probability(p) => p,
        }
    }

    pub fn has_release_dates(&self) -> bool {
        self.jobs.iter().any(|j| !j.release.is_zero())
    }

    /// Same jobs with new release times, matched by position.
    pub fn with_releases(&self, releases: &[Rational]) -> Result<Self, DomainError> {
        if releases.len() != self.jobs.len() {
            return Err(DomainError::InvalidInstance("release vector length mismatch".into()));
        }
        let jobs = self
            .jobs
            .iter()
            .zip(releases)
            .map(|(j, r)| j.clone().released_at(*r))
            .collect();
        Instance::new(jobs, self.params.clone(), self.model.clone())
    }
}

/// Exact Bernoulli draw with a rational success probability.
pub fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: Rational) -> bool {
    if p <= Rational::zero() {
        return false;
    }
    if p >= Rational::one() {
        return true;
    }
    rng.gen_range(0..*p.denom()) < *p.numer()
}

/// Deterministic generator for replication `stream` under `seed`.
///
/// Every replication gets its own ChaCha8 stream, so results do not depend
/// on the order or thread in which replications are run.
pub fn replication_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n` jobs with ids `1..=n`, all released at time 0.
pub fn sample_instance(n: usize, model: &PredictionModel, params: &Parameters, seed: u64) -> Result<Instance, DomainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_instance_with(n, model, params, &mut rng)
}

pub fn sample_instance_with<R: Rng + ?Sized>(
    n: usize,
    model: &PredictionModel,
    params: &Parameters,
    rng: &mut R,
) -> Result<Instance, DomainError> {
    if n == 0 {
        return Err(DomainError::InvalidInstance("n must be at least 1".into()));
    }
    let jobs = (1..=n)
        .map(|id| {
            let true_type = if bernoulli(rng, model.rho()) { JobType::Urgent } else { JobType::NonUrgent };
            let label = if bernoulli(rng, model.flip_to_urgent(true_type)) {
                JobType::Urgent
            } else {
                JobType::NonUrgent
            };
            Job::new(id, true_type, Prediction::Label(label))
        })
        .collect();
    Instance::new(jobs, params.clone(), Some(model.clone()))
}

/// Job ids in nonincreasing urgency probability. Equal probabilities put
/// urgent labels first and then ascending ids.
pub fn sort_for_policy(instance: &Instance) -> Vec<usize> {
    let mut keyed: Vec<(Rational, Option<JobType>, usize)> =
        instance.jobs().iter().map(|j| (instance.prior(j), j.label(), j.id)).collect();
    keyed.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    keyed.into_iter().map(|(_, _, id)| id).collect()
}

impl FromStr for JobType {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "0" => Ok(JobType::Urgent),
            "1" => Ok(JobType::NonUrgent),
            other => Err(DomainError::InvalidInstance(format!("job type must be 0 or 1, got {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model(rho: Rational, e0: Rational, e1: Rational) -> PredictionModel {
        PredictionModel::new(rho, e0, e1).unwrap()
    }

    #[test]
    fn posterior_perfect_predictor() {
        let m = model(rat(1, 10), rat(0, 1), rat(0, 1));
        assert_eq!(m.posterior(JobType::Urgent), rat(1, 1));
        assert_eq!(m.posterior(JobType::NonUrgent), rat(0, 1));
    }

    #[test]
    fn posterior_uninformative_predictor_is_prior() {
        let m = model(rat(1, 10), rat(1, 2), rat(1, 2));
        assert_eq!(m.posterior(JobType::Urgent), rat(1, 10));
        assert_eq!(m.posterior(JobType::NonUrgent), rat(1, 10));
    }

    #[test]
    fn posterior_ten_percent_noise() {
        let m = model(rat(1, 10), rat(1, 10), rat(1, 10));
        assert_eq!(posterior(&m, JobType::Urgent), rat(1, 2));
        assert_eq!(posterior(&m, JobType::NonUrgent), rat(1, 82));
    }

    #[test]
    fn beta_values() {
        let p = Parameters::new(rat(2, 5), rat(20, 1), rat(1, 1)).unwrap();
        assert_eq!(beta(&p), rat(2, 57));
        assert!(p.satisfies_assumption1());
        let p = Parameters::new(rat(1, 2), rat(2, 1), rat(1, 1)).unwrap();
        assert_eq!(p.beta(), rat(1, 1));
        assert!(!p.satisfies_assumption1());
        // ω₁ ≥ ω₀(1−α) pushes β to at least 1.
        let p = Parameters::new(rat(7, 10), rat(3, 1), rat(1, 1)).unwrap();
        assert!(!p.satisfies_assumption1());
        assert!(p.beta() >= rat(1, 1));
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(Parameters::new(rat(0, 1), rat(2, 1), rat(1, 1)).is_err());
        assert!(Parameters::new(rat(1, 1), rat(2, 1), rat(1, 1)).is_err());
        assert!(Parameters::new(rat(1, 2), rat(1, 1), rat(1, 1)).is_err());
        assert!(Parameters::new(rat(1, 2), rat(2, 1), rat(0, 1)).is_err());
        assert!(PredictionModel::new(rat(0, 1), rat(0, 1), rat(0, 1)).is_err());
        assert!(PredictionModel::new(rat(1, 2), rat(3, 5), rat(0, 1)).is_err());
        assert!(PredictionModel::new(rat(1, 2), rat(1, 2), rat(1, 2)).is_ok());
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("2/5").unwrap(), rat(2, 5));
        assert_eq!(parse_rational("0.4").unwrap(), rat(2, 5));
        assert_eq!(parse_rational("20").unwrap(), rat(20, 1));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("0.41421356").unwrap(), rat(10355339, 25000000));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1e-3").is_err());
    }

    #[test]
    fn sample_rejects_empty() {
        let m = model(rat(1, 10), rat(0, 1), rat(0, 1));
        let p = Parameters::new(rat(2, 5), rat(20, 1), rat(1, 1)).unwrap();
        assert!(sample_instance(0, &m, &p, 1).is_err());
    }

    #[test]
    fn sample_noiseless_channel_copies_truth() {
        let m = model(rat(3, 10), rat(0, 1), rat(0, 1));
        let p = Parameters::new(rat(2, 5), rat(20, 1), rat(1, 1)).unwrap();
        let inst = sample_instance(500, &m, &p, 9).unwrap();
        assert!(inst.jobs().iter().all(|j| j.label() == Some(j.true_type)));
        assert!(inst.jobs().iter().all(|j| j.release.is_zero()));
    }

    #[test]
    fn sample_urgent_fraction_concentrates() {
        let m = model(rat(1, 10), rat(1, 10), rat(1, 10));
        let p = Parameters::new(rat(2, 5), rat(20, 1), rat(1, 1)).unwrap();
        let n = 100_000usize;
        let inst = sample_instance(n, &m, &p, 2024).unwrap();
        let frac = inst.n0() as f64 / n as f64;
        let tol = 3.0 * (0.1f64 * 0.9 / n as f64).sqrt();
        assert!((frac - 0.1).abs() <= tol, "urgent fraction {frac}");
    }

    #[test]
    fn mixed_predictions_rejected() {
        let p = Parameters::new(rat(2, 5), rat(20, 1), rat(1, 1)).unwrap();
        let m = model(rat(1, 10), rat(1, 10), rat(1, 10));
        let jobs = vec![
            Job::new(1, JobType::Urgent, Prediction::Label(JobType::Urgent)),
            Job::new(2, JobType::Urgent, Prediction::Probability(rat(1, 2))),
        ];
        assert!(Instance::new(jobs, p.clone(), Some(m)).is_err());
        let jobs = vec![Job::new(1, JobType::Urgent, Prediction::Label(JobType::Urgent))];
        assert!(Instance::new(jobs, p, None).is_err());
    }

    #[test]
    fn sort_nine_job_example() {
        let p = Parameters::new(rat(2, 5), rat(20, 1), rat(1, 1)).unwrap();
        let m = model(rat(1, 10), rat(1, 10), rat(1, 10));
        let truth = [0u8, 0, 0, 0, 1, 1, 1, 1, 1];
        let pred = [0u8, 1, 0, 0, 0, 1, 1, 1, 0];
        let jobs = (0..9)
            .map(|i| {
                Job::new(
                    i + 1,
                    JobType::from_index(truth[i]).unwrap(),
                    Prediction::Label(JobType::from_index(pred[i]).unwrap()),
                )
            })
            .collect();
        let inst = Instance::new(jobs, p, Some(m)).unwrap();
        let order = sort_for_policy(&inst);
        assert_eq!(order, vec![1, 3, 4, 5, 9, 2, 6, 7, 8]);
    }

    #[test]
    fn uninformative_labels_keep_classes_together() {
        // ε₀ + ε₁ = 1 gives both labels the posterior ρ.
        let p = Parameters::new(rat(2, 5), rat(20, 1), rat(1, 1)).unwrap();
        let m = model(rat(1, 10), rat(1, 2), rat(1, 2));
        let pred = [1u8, 0, 1, 0];
        let jobs = (0..4)
            .map(|i| Job::new(i + 1, JobType::NonUrgent, Prediction::Label(JobType::from_index(pred[i]).unwrap())))
            .collect();
        let inst = Instance::new(jobs, p, Some(m)).unwrap();
        assert_eq!(sort_for_policy(&inst), vec![2, 4, 1, 3]);
    }

    #[test]
    fn sort_stable_and_by_probability() {
        let p = Parameters::new(rat(2, 5), rat(20, 1), rat(1, 1)).unwrap();
        let m = model(rat(1, 10), rat(1, 10), rat(1, 10));
        let jobs = (1..=4).map(|i| Job::new(i, JobType::NonUrgent, Prediction::Label(JobType::NonUrgent))).collect();
        let inst = Instance::new(jobs, p.clone(), Some(m)).unwrap();
        assert_eq!(sort_for_policy(&inst), vec![1, 2, 3, 4]);

        let jobs = [(1, rat(1, 5)), (2, rat(9, 10)), (3, rat(1, 2))]
            .into_iter()
            .map(|(i, q)| Job::new(i, JobType::NonUrgent, Prediction::Probability(q)))
            .collect();
        let inst = Instance::new(jobs, p, None).unwrap();
        assert_eq!(sort_for_policy(&inst), vec![2, 3, 1]);
    }

    fn arb_model() -> impl Strategy<Value = PredictionModel> {
        (1i64..100, 0i64..=50, 0i64..=50)
            .prop_map(|(r, e0, e1)| PredictionModel::new(rat(r, 100), rat(e0, 100), rat(e1, 100)).unwrap())
    }

    proptest! {
        #[test]
        fn posterior_monotone_and_total_probability(m in arb_model()) {
            let p0 = m.posterior(JobType::Urgent);
            let p1 = m.posterior(JobType::NonUrgent);
            prop_assert!(p0 >= p1);
            let both_half = m.eps0() == rat(1, 2) && m.eps1() == rat(1, 2);
            prop_assert_eq!(p0 == p1, both_half);
            let q0 = m.label_probability(JobType::Urgent);
            let q1 = m.label_probability(JobType::NonUrgent);
            prop_assert_eq!(p0 * q0 + p1 * q1, m.rho());
        }

        #[test]
        fn beta_and_assumption_agree(a in 1i64..100, w0 in 2i64..200, w1 in 1i64..100) {
            prop_assume!(w0 > w1);
            let p = Parameters::new(rat(a, 100), rat(w0, 1), rat(w1, 1)).unwrap();
            prop_assert_eq!(p.satisfies_assumption1(), p.beta() < rat(1, 1));
            // cμ form of the threshold test.
            for k in 0..=20 {
                let q = rat(k, 20);
                prop_assert_eq!(p.cmu_prefers_open(q), q > p.beta());
            }
        }

        #[test]
        fn sampling_is_deterministic_and_sort_is_permutation(m in arb_model(), seed in any::<u64>(), n in 1usize..40) {
            let p = Parameters::new(rat(2, 5), rat(20, 1), rat(1, 1)).unwrap();
            let a = sample_instance(n, &m, &p, seed).unwrap();
            let b = sample_instance(n, &m, &p, seed).unwrap();
            prop_assert_eq!(&a, &b);
            let order = sort_for_policy(&a);
            let mut sorted = order.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (1..=n).collect::<Vec<_>>());
            let priors: Vec<Rational> = order.iter().map(|id| a.prior(a.job(*id).unwrap())).collect();
            prop_assert!(priors.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
