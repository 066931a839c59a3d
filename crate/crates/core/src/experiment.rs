//! Replicated experiments and the oracle verification suite.
//!
//! Every replication draws from its own ChaCha8 stream keyed by
//! `(seed, grid point, replication index)` and results are reduced in index
//! order, so outputs do not depend on how many threads run them.

use num::Zero;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use thiserror::Error;

use crate::analytics::{alg0_cr_bound, expected_unconditional, theorem4_cr, AnalyticsError, CompetitiveRatioReport};
use crate::domain::{
    big_to_f64, format_rational, rat, replication_rng, sample_instance_with, to_big, to_f64, DomainError, Instance, Job,
    JobType, Parameters, Prediction, PredictionModel, Rational,
};
use crate::engine::{
    enumerate_instance_optimum, expectimax_optimal_bounded, format_trace, offline_wsrpt, offline_wspt, run, run_cost,
    threshold_rule_expected, EngineError, DEFAULT_ENUMERATION_BOUND, DEFAULT_EXPECTIMAX_BOUND,
};
use crate::io::write_instance;
use crate::policies::{classify_regime, hybrid_condition_strict, PolicyKind, Regime, RevelationModel};

/// Release times are rounded to multiples of this.
pub const RELEASE_RESOLUTION: i64 = 1_000_000;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrivalMode {
    Batch,
    /// Exponential interarrival times with this mean; the first job arrives at 0.
    Poisson(Rational),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub alpha: Rational,
    pub rho: Rational,
    pub w0: Rational,
    pub w1: Rational,
    /// `(ε₀, ε₁)` points, swept in order.
    pub eps_grid: Vec<(Rational, Rational)>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub arrival: ArrivalMode,
    pub policies: Vec<PolicyKind>,
    /// Add the three competitive-ratio columns.
    pub cr: bool,
}

/// `0, 1/20, ..., 1/2` with ε₀ = ε₁.
pub fn default_eps_grid() -> Vec<(Rational, Rational)> {
    (0..=10).map(|k| (rat(k, 20), rat(k, 20))).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            alpha: rat(2, 5),
            rho: rat(1, 10),
            w0: rat(20, 1),
            w1: rat(1, 1),
            eps_grid: default_eps_grid(),
            n: 50,
            reps: 100_000,
            seed: 1,
            arrival: ArrivalMode::Batch,
            policies: vec![PolicyKind::Nonpreemptive, PolicyKind::Preemptive, PolicyKind::Hybrid, PolicyKind::Beta],
            cr: false,
        }
    }
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<Parameters, ExperimentError> {
        Ok(Parameters::new(self.alpha, self.w0, self.w1)?)
    }

    pub fn model(&self, eps0: Rational, eps1: Rational) -> Result<PredictionModel, ExperimentError> {
        Ok(PredictionModel::new(self.rho, eps0, eps1)?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Config(m.to_string()));
        if self.eps_grid.is_empty() {
            return bad("the error-rate grid is empty");
        }
        let half = rat(1, 2);
        if self.eps_grid.iter().any(|&(a, b)| a < Rational::zero() || b < Rational::zero() || a > half || b > half) {
            return bad("error rates must lie in [0, 1/2]");
        }
        if self.reps == 0 {
            return bad("replications must be at least 1");
        }
        if self.n == 0 {
            return bad("n must be at least 1");
        }
        if self.policies.is_empty() {
            return bad("no policies selected");
        }
        if let ArrivalMode::Poisson(m) = self.arrival {
            if m <= Rational::zero() {
                return bad("mean interarrival time must be positive");
            }
        }
        self.params()?;
        for &(a, b) in &self.eps_grid {
            self.model(a, b)?;
        }
        Ok(())
    }

    fn point_seed(&self, point: usize) -> u64 {
        self.seed.wrapping_add((point as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps0: Rational,
    pub eps1: Rational,
    /// A policy name, or `opt` for the clairvoyant schedule.
    pub policy: String,
    /// Analytic expected cost over analytic E(OPT); batch mode only.
    pub analytic_ratio: Option<f64>,
    pub mc_mean_ratio: f64,
    pub mc_stderr: f64,
    /// Largest per-replication ratio (meaningful in arrival mode).
    pub mc_max_ratio: f64,
    pub replications: usize,
    pub cr: Option<CompetitiveRatioReport>,
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    mean: f64,
    stderr: f64,
    max: f64,
}

fn moments(values: impl Iterator<Item = f64> + Clone) -> Moments {
    let (mut n, mut sum, mut max) = (0usize, 0.0, f64::NEG_INFINITY);
    for v in values.clone() {
        n += 1;
        sum += v;
        max = max.max(v);
    }
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    let stderr = if n > 1 { (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt() } else { 0.0 };
    Moments { mean, stderr, max }
}

/// Cumulative release times: 0, then exponential gaps of the given mean,
/// each time rounded to the release grid.
pub fn sample_releases<R: Rng + ?Sized>(n: usize, mean: Rational, rng: &mut R) -> Vec<Rational> {
    let exp = Exp::new(1.0 / to_f64(&mean)).expect("positive mean");
    let mut t = 0.0f64;
    (0..n)
        .map(|i| {
            if i > 0 {
                t += exp.sample(rng);
            }
            Rational::new((t * RELEASE_RESOLUTION as f64).round() as i64, RELEASE_RESOLUTION)
        })
        .collect()
}

fn analytic_value(e: &crate::analytics::UnconditionalExpectation, policy: PolicyKind) -> &num::BigRational {
    match policy {
        PolicyKind::Nonpreemptive => &e.nonpreemptive,
        PolicyKind::Preemptive => &e.preemptive,
        PolicyKind::Hybrid => &e.hybrid,
        PolicyKind::Beta | PolicyKind::ModifiedBeta => &e.beta,
    }
}

/// Batch sweep: ratios are normalized by the analytic E(OPT). An `opt` row
/// reports the clairvoyant WSPT schedule under the same normalization.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    config.validate()?;
    if config.arrival != ArrivalMode::Batch {
        return Err(ExperimentError::Config("sweep runs batch instances; use arrivals for release dates".into()));
    }
    let params = config.params()?;
    let mut rows = Vec::new();
    for (point, &(eps0, eps1)) in config.eps_grid.iter().enumerate() {
        let model = config.model(eps0, eps1)?;
        let expected = expected_unconditional(config.n, &model, &params)?;
        let opt = big_to_f64(&expected.opt);
        let seed = config.point_seed(point);
        let samples: Vec<Vec<f64>> = (0..config.reps)
            .into_par_iter()
            .map(|rep| -> Result<Vec<f64>, ExperimentError> {
                let mut rng = replication_rng(seed, rep as u64);
                let inst = sample_instance_with(config.n, &model, &params, &mut rng)?;
                let mut out = Vec::with_capacity(config.policies.len() + 1);
                out.push(to_f64(&offline_wspt(&inst)?.total_cost) / opt);
                for &p in &config.policies {
                    out.push(to_f64(&run_cost(&inst, p, &RevelationModel::Exact)?) / opt);
                }
                Ok(out)
            })
            .collect::<Result<_, _>>()?;
        let cr = config.cr.then(|| theorem4_cr(&model, &params));
        let names = std::iter::once(("opt".to_string(), Some(1.0))).chain(config.policies.iter().map(|&p| {
            (p.name().to_string(), Some(big_to_f64(&(analytic_value(&expected, p) / &expected.opt))))
        }));
        for (col, (policy, analytic_ratio)) in names.enumerate() {
            let m = moments(samples.iter().map(|s| s[col]));
            rows.push(SweepRow {
                eps0,
                eps1,
                policy,
                analytic_ratio,
                mc_mean_ratio: m.mean,
                mc_stderr: m.stderr,
                mc_max_ratio: m.max,
                replications: config.reps,
                cr: cr.clone(),
            });
        }
    }
    Ok(rows)
}

/// Arrival sweep: each replication's cost is divided by that replication's
/// WSRPT cost, and the ratios are averaged.
pub fn arrivals(config: &ExperimentConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    config.validate()?;
    let ArrivalMode::Poisson(mean) = config.arrival else {
        return Err(ExperimentError::Config("arrivals needs a positive mean interarrival time".into()));
    };
    let params = config.params()?;
    let mut rows = Vec::new();
    for (point, &(eps0, eps1)) in config.eps_grid.iter().enumerate() {
        let model = config.model(eps0, eps1)?;
        let seed = config.point_seed(point);
        let samples: Vec<Vec<f64>> = (0..config.reps)
            .into_par_iter()
            .map(|rep| -> Result<Vec<f64>, ExperimentError> {
                let mut rng = replication_rng(seed, rep as u64);
                let inst = sample_instance_with(config.n, &model, &params, &mut rng)?;
                let inst = inst.with_releases(&sample_releases(config.n, mean, &mut rng))?;
                let base = offline_wsrpt(&inst)?.total_cost;
                config
                    .policies
                    .iter()
                    .map(|&p| Ok(to_f64(&(run_cost(&inst, p, &RevelationModel::Exact)? / base))))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        let cr = config.cr.then(|| theorem4_cr(&model, &params));
        for (col, &p) in config.policies.iter().enumerate() {
            let m = moments(samples.iter().map(|s| s[col]));
            rows.push(SweepRow {
                eps0,
                eps1,
                policy: p.name().to_string(),
                analytic_ratio: None,
                mc_mean_ratio: m.mean,
                mc_stderr: m.stderr,
                mc_max_ratio: m.max,
                replications: config.reps,
                cr: cr.clone(),
            });
        }
    }
    Ok(rows)
}

/// Instance whose labels are the true types, with `n` jobs drawn at rate ρ
/// and release times `k/d` for random `d` in a small set and `k/d < horizon`.
pub fn random_release_instance<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    rho: Rational,
    params: &Parameters,
    horizon: i64,
) -> Result<Instance, DomainError> {
    const DENOMS: [i64; 6] = [1, 2, 3, 4, 5, 8];
    let model = PredictionModel::new(rho, Rational::zero(), Rational::zero())?;
    let jobs = (1..=n)
        .map(|id| {
            let t = if crate::domain::bernoulli(rng, rho) { JobType::Urgent } else { JobType::NonUrgent };
            let d = DENOMS[rng.gen_range(0..DENOMS.len())];
            let r = Rational::new(rng.gen_range(0..horizon * d), d);
            Job::new(id, t, Prediction::Label(t)).released_at(r)
        })
        .collect();
    Instance::new(jobs, params.clone(), Some(model))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    /// Human-readable failure descriptions, each with the offending input.
    pub failures: Vec<String>,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    /// Largest batch size checked against the expectimax oracle.
    pub max_n: usize,
    /// Random instances for the enumeration and trace-identity checks.
    pub instances: usize,
    pub seed: u64,
    /// Shift applied to β in the threshold rule; nonzero only for fault injection.
    pub beta_offset: Rational,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { max_n: 5, instances: 1000, seed: 7, beta_offset: Rational::zero() }
    }
}

/// Points of the exact optimality grid: α, ω₀/ω₁, ρ, ε₀, ε₁.
pub fn optimality_grid() -> Vec<(Parameters, PredictionModel)> {
    let alphas = [rat(1, 4), rat(2, 5), rat(7, 10)];
    let ratios = [3, 20, 100];
    let rhos = [rat(1, 10), rat(1, 2)];
    let eps = [rat(0, 1), rat(1, 10), rat(3, 10), rat(1, 2)];
    let mut grid = Vec::new();
    for &a in &alphas {
        for &w0 in &ratios {
            let p = Parameters::new(a, rat(w0, 1), rat(1, 1)).expect("valid grid parameters");
            for &rho in &rhos {
                for &e0 in &eps {
                    for &e1 in &eps {
                        grid.push((p.clone(), PredictionModel::new(rho, e0, e1).expect("valid grid model")));
                    }
                }
            }
        }
    }
    grid
}

fn describe_point(p: &Parameters, m: &PredictionModel) -> String {
    format!(
        "alpha={} w0={} w1={} rho={} eps0={} eps1={}",
        format_rational(&p.alpha()),
        format_rational(&p.w0()),
        format_rational(&p.w1()),
        format_rational(&m.rho()),
        format_rational(&m.eps0()),
        format_rational(&m.eps1())
    )
}

/// The threshold rule with threshold β (plus the configured offset) has the
/// same exact expected cost as the expectimax optimum.
pub fn check_threshold_optimality(opts: &VerifyOptions) -> Result<CheckResult, ExperimentError> {
    if opts.max_n > DEFAULT_EXPECTIMAX_BOUND {
        return Err(EngineError::ResourceLimit { n: opts.max_n, bound: DEFAULT_EXPECTIMAX_BOUND }.into());
    }
    let mut failures = Vec::new();
    let mut cases = 0;
    for (p, m) in optimality_grid() {
        let threshold = p.beta() + opts.beta_offset;
        for n in 1..=opts.max_n {
            cases += 1;
            let best = expectimax_optimal_bounded(n, &m, &p, DEFAULT_EXPECTIMAX_BOUND)?;
            let rule = threshold_rule_expected(n, &m, &p, &threshold)?;
            if best != rule {
                failures.push(format!(
                    "n={n} {}: optimum {} vs threshold rule {}",
                    describe_point(&p, &m),
                    big_to_f64(&best),
                    big_to_f64(&rule)
                ));
            }
        }
    }
    Ok(CheckResult { name: "threshold-rule optimality".into(), cases, failures })
}

/// WSRPT cost equals the exhaustive optimum on random small instances.
pub fn check_wsrpt_optimality(opts: &VerifyOptions) -> Result<CheckResult, ExperimentError> {
    let mut failures = Vec::new();
    let weights = [rat(3, 1), rat(20, 1), rat(100, 1)];
    for i in 0..opts.instances {
        let mut rng = replication_rng(opts.seed, i as u64);
        let p = Parameters::new(rat(2, 5), weights[rng.gen_range(0..weights.len())], rat(1, 1))?;
        let n = rng.gen_range(1..=DEFAULT_ENUMERATION_BOUND);
        let inst = random_release_instance(&mut rng, n, rat(1, 2), &p, 4)?;
        let greedy = offline_wsrpt(&inst)?.total_cost;
        let best = enumerate_instance_optimum(&inst, DEFAULT_ENUMERATION_BOUND)?;
        if greedy != best {
            failures.push(format!(
                "wsrpt {} vs optimum {} on\n{}",
                format_rational(&greedy),
                format_rational(&best),
                write_instance(&inst)
            ));
        }
    }
    Ok(CheckResult { name: "wsrpt optimality".into(), cases: opts.instances, failures })
}

fn regime_policy(r: Regime) -> PolicyKind {
    match r {
        Regime::Nonpreemptive => PolicyKind::Nonpreemptive,
        Regime::Preemptive => PolicyKind::Preemptive,
        Regime::Hybrid => PolicyKind::Hybrid,
    }
}

/// The regime labels agree across modules, and the β rule's schedule is the
/// schedule of the policy its regime names.
pub fn check_regime_consistency(opts: &VerifyOptions) -> Result<CheckResult, ExperimentError> {
    let mut failures = Vec::new();
    let mut cases = 0;
    let per_point = (opts.instances / 50).max(1);
    for (point, (p, m)) in optimality_grid().into_iter().enumerate() {
        let regime = classify_regime(&m, &p);
        cases += 1;
        if theorem4_cr(&m, &p).regime != regime {
            failures.push(format!("ratio report regime differs at {}", describe_point(&p, &m)));
        }
        let p1 = m.posterior(JobType::NonUrgent);
        if p1 != p.beta() && hybrid_condition_strict(&m, &p) != (regime == Regime::Hybrid) {
            failures.push(format!("error-rate form disagrees at {}", describe_point(&p, &m)));
        }
        let twin = regime_policy(regime);
        for i in 0..per_point {
            cases += 1;
            let mut rng = replication_rng(opts.seed ^ 0x5eed, (point * per_point + i) as u64);
            let n = rng.gen_range(1..=8);
            let inst = sample_instance_with(n, &m, &p, &mut rng)?;
            let a = run(&inst, PolicyKind::Beta, &RevelationModel::Exact)?;
            let b = run(&inst, twin, &RevelationModel::Exact)?;
            if a.trace != b.trace {
                failures.push(format!("beta rule differs from {twin} on\n{}", write_instance(&inst)));
            }
        }
    }
    Ok(CheckResult { name: "regime consistency".into(), cases, failures })
}

/// With exact revelation the modified rule schedules exactly like the β rule.
pub fn check_modified_beta_degeneration(opts: &VerifyOptions) -> Result<CheckResult, ExperimentError> {
    let mut failures = Vec::new();
    let grid = optimality_grid();
    for i in 0..opts.instances {
        let mut rng = replication_rng(opts.seed ^ 0xbeef, i as u64);
        let (p, m) = &grid[rng.gen_range(0..grid.len())];
        let n = rng.gen_range(1..=12);
        let mut inst = sample_instance_with(n, m, p, &mut rng)?;
        if rng.gen_bool(0.5) {
            inst = inst.with_releases(&sample_releases(n, rat(9, 10), &mut rng))?;
        }
        let a = run(&inst, PolicyKind::Beta, &RevelationModel::Exact)?;
        let b = run(&inst, PolicyKind::ModifiedBeta, &RevelationModel::Exact)?;
        if a.trace != b.trace {
            failures.push(format!(
                "traces differ on\n{}beta:\n{}modified:\n{}",
                write_instance(&inst),
                format_trace(&a.trace),
                format_trace(&b.trace)
            ));
        }
    }
    Ok(CheckResult { name: "modified rule degeneration".into(), cases: opts.instances, failures })
}

/// ALG₀ cost stays within max(1+α, 2/(1+α)) of WSRPT, exactly.
pub fn check_arrival_bound(
    alpha: Rational,
    instances: usize,
    seed: u64,
    max_n: usize,
) -> Result<(CheckResult, f64), ExperimentError> {
    let p = Parameters::new(alpha, rat(20, 1), rat(1, 1))?;
    let bound = alg0_cr_bound(&alpha);
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..instances {
        let mut rng = replication_rng(seed, i as u64);
        let n = rng.gen_range(1..=max_n);
        let inst = if rng.gen_bool(0.5) {
            random_release_instance(&mut rng, n, rat(1, 2), &p, 4)?
        } else {
            let m = PredictionModel::new(rat(1, 10) * rng.gen_range(1..=9), Rational::zero(), Rational::zero())?;
            let inst = sample_instance_with(n, &m, &p, &mut rng)?;
            inst.with_releases(&sample_releases(n, rat(9, 10), &mut rng))?
        };
        let alg = run_cost(&inst, PolicyKind::Beta, &RevelationModel::Exact)?;
        let opt = offline_wsrpt(&inst)?.total_cost;
        let ratio = to_big(&alg) / to_big(&opt);
        worst = worst.max(big_to_f64(&ratio));
        if ratio > to_big(&bound) {
            failures.push(format!("ratio {} above {} on\n{}", big_to_f64(&ratio), to_f64(&bound), write_instance(&inst)));
        }
    }
    Ok((CheckResult { name: format!("arrival competitive bound, alpha={}", format_rational(&alpha)), cases: instances, failures }, worst))
}

/// Runs every oracle suite in order.
pub fn verify(opts: &VerifyOptions) -> Result<Vec<CheckResult>, ExperimentError> {
    let mut out = vec![
        check_threshold_optimality(opts)?,
        check_wsrpt_optimality(opts)?,
        check_regime_consistency(opts)?,
        check_modified_beta_degeneration(opts)?,
    ];
    for alpha in [rat(1, 4), rat(41_421_356, 100_000_000), rat(7, 10)] {
        out.push(check_arrival_bound(alpha, opts.instances, opts.seed, 20)?.0);
    }
    Ok(out)
}

/// Fraction `k/d` with `d` from the release grid, as used by sampled releases.
pub fn is_on_release_grid(r: &Rational) -> bool {
    (RELEASE_RESOLUTION % r.denom()).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(reps: usize) -> ExperimentConfig {
        ExperimentConfig { n: 8, reps, eps_grid: vec![(rat(0, 1), rat(0, 1)), (rat(1, 10), rat(1, 10))], ..Default::default() }
    }

    #[test]
    fn perfect_predictions_row_is_exactly_opt() {
        let rows = sweep(&small(200)).unwrap();
        let at0: Vec<_> = rows.iter().filter(|r| r.eps0.is_zero()).collect();
        for r in &at0 {
            if matches!(r.policy.as_str(), "nonpreemptive" | "hybrid" | "beta" | "opt") {
                assert_eq!(r.analytic_ratio, Some(1.0));
            }
        }
        let opt = at0.iter().find(|r| r.policy == "opt").unwrap();
        let hyb = at0.iter().find(|r| r.policy == "hybrid").unwrap();
        assert_eq!(opt.mc_mean_ratio, hyb.mc_mean_ratio);
        assert!((opt.mc_mean_ratio - 1.0).abs() < 3.0 * opt.mc_stderr);
    }

    #[test]
    fn sweep_is_deterministic() {
        let a = sweep(&small(50)).unwrap();
        let b = sweep(&small(50)).unwrap();
        assert_eq!(a, b);
        let c = sweep(&ExperimentConfig { seed: 2, ..small(50) }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = ExperimentConfig { eps_grid: vec![], ..small(1) };
        assert!(matches!(sweep(&bad), Err(ExperimentError::Config(_))));
        let bad = ExperimentConfig { eps_grid: vec![(rat(3, 5), rat(0, 1))], ..small(1) };
        assert!(matches!(sweep(&bad), Err(ExperimentError::Config(_))));
        let bad = ExperimentConfig { reps: 0, ..small(1) };
        assert!(matches!(sweep(&bad), Err(ExperimentError::Config(_))));
        assert!(matches!(arrivals(&small(1)), Err(ExperimentError::Config(_))));
    }

    #[test]
    fn arrival_rows_bounded_at_perfect_predictions() {
        let cfg = ExperimentConfig {
            arrival: ArrivalMode::Poisson(rat(9, 10)),
            eps_grid: vec![(rat(0, 1), rat(0, 1))],
            n: 10,
            reps: 300,
            ..Default::default()
        };
        let rows = arrivals(&cfg).unwrap();
        let bound = to_f64(&alg0_cr_bound(&cfg.alpha));
        let beta = rows.iter().find(|r| r.policy == "beta").unwrap();
        assert!(beta.mc_max_ratio <= bound + 1e-9);
        assert!(beta.mc_mean_ratio >= 1.0);
        assert!(rows.iter().all(|r| r.analytic_ratio.is_none()));
    }

    #[test]
    fn tiny_interarrival_approaches_batch() {
        // Only the first job is visible at t = 0, so a near-batch arrival run
        // differs from the batch run by one forced open, an O(1/n) effect.
        let p = Parameters::new(rat(2, 5), rat(20, 1), rat(1, 1)).unwrap();
        let m = PredictionModel::symmetric(rat(1, 10), rat(1, 10)).unwrap();
        let gap = |n: usize, policy: PolicyKind| {
            let reps = 300;
            let mut total = 0.0;
            for rep in 0..reps {
                let mut rng = replication_rng(11, rep);
                let inst = sample_instance_with(n, &m, &p, &mut rng).unwrap();
                let batch = to_f64(&(run_cost(&inst, policy, &RevelationModel::Exact).unwrap() / offline_wspt(&inst).unwrap().total_cost));
                let late = inst.with_releases(&sample_releases(n, rat(1, 1_000_000), &mut rng)).unwrap();
                let arrival =
                    to_f64(&(run_cost(&late, policy, &RevelationModel::Exact).unwrap() / offline_wsrpt(&late).unwrap().total_cost));
                total += arrival - batch;
            }
            (total / reps as f64).abs()
        };
        for policy in [PolicyKind::Nonpreemptive, PolicyKind::Preemptive, PolicyKind::Hybrid] {
            let (coarse, fine) = (gap(10, policy), gap(40, policy));
            assert!(fine < coarse / 2.0, "{policy}: {fine} vs {coarse}");
            assert!(fine < 0.05, "{policy}: {fine}");
        }
    }

    #[test]
    fn releases_start_at_zero_and_increase() {
        let mut rng = replication_rng(3, 0);
        let r = sample_releases(20, rat(9, 10), &mut rng);
        assert!(r[0].is_zero());
        assert!(r.windows(2).all(|w| w[0] <= w[1]));
        assert!(r.iter().all(is_on_release_grid));
    }

    #[test]
    fn verify_small_passes_and_fault_is_caught() {
        let opts = VerifyOptions { max_n: 3, instances: 60, ..Default::default() };
        for c in verify(&opts).unwrap() {
            assert!(c.passed(), "{}: {:?}", c.name, c.failures.first());
        }
        let too_big = VerifyOptions { max_n: 7, ..opts.clone() };
        assert!(matches!(
            check_threshold_optimality(&too_big),
            Err(ExperimentError::Engine(EngineError::ResourceLimit { n: 7, bound: 6 }))
        ));
    }
}
