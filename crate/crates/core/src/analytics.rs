//! Closed-form expected costs, competitive ratios and prediction loss.
//!
//! Expectations are exact rationals. Competitive ratios involve square
//! roots, so the algebra under each radical is done exactly and converted to
//! `f64` once.

use num::{BigInt, BigRational, One, Zero};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::domain::{big_to_f64, format_rational, to_big, to_f64, Instance, JobType, Parameters, Prediction, PredictionModel, Rational};
use crate::policies::{classify_regime, Regime};

/// Clamp applied to predicted probabilities before taking logs.
pub const LOG_LOSS_CLAMP: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum AnalyticsError {
    #[error("n0 = {n0} exceeds n = {n}")]
    CountOutOfRange { n0: usize, n: usize },
    #[error("n must be at least 1")]
    EmptyPopulation,
    #[error("log-loss needs probability predictions, instance carries labels")]
    LabelsOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalExpectation {
    pub n: usize,
    pub n0: usize,
    pub model: PredictionModel,
    pub params: Parameters,
    pub opt: BigRational,
    pub nonpreemptive: BigRational,
    pub preemptive: BigRational,
    pub hybrid: BigRational,
}

impl ConditionalExpectation {
    pub fn value(&self, regime: Regime) -> &BigRational {
        match regime {
            Regime::Nonpreemptive => &self.nonpreemptive,
            Regime::Preemptive => &self.preemptive,
            Regime::Hybrid => &self.hybrid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnconditionalExpectation {
    pub n: usize,
    pub opt: BigRational,
    pub nonpreemptive: BigRational,
    pub preemptive: BigRational,
    pub hybrid: BigRational,
    /// The β rule's value, which is whichever of the three its regime selects.
    pub beta: BigRational,
    pub regime: Regime,
}

/// The four values as polynomials in a (possibly fractional) urgent count.
fn conditional_values(n: &BigRational, n0: &BigRational, model: &PredictionModel, params: &Parameters) -> [BigRational; 4] {
    let one = BigRational::one();
    let two = BigRational::from_integer(BigInt::from(2));
    let (a, w0, w1) = (to_big(&params.alpha()), to_big(&params.w0()), to_big(&params.w1()));
    let (e0, e1) = (to_big(&model.eps0()), to_big(&model.eps1()));
    let d = &w0 - &w1;
    let n1 = n - n0;
    let pairs = n0 * &n1 / &two;

    let opt = &d * n0 * (n0 + &one) / &two + &w1 * n * (n + &one) / &two;
    let ex = (&e0 + &e1) * &pairs;
    let ey = &n1 * (&n1 - &one) / &two;
    let ex0 = &e1 * (&one - &e0) * &pairs;
    let ey0 = &e1 * &e1 * (&n1 * &n1 - &n1) / &two;

    let nonpreemptive = &opt + &d * &ex;
    let preemptive = &opt + &a * &w0 * &ex + &a * &w1 * &ey;
    let hybrid = &opt + &a * &w0 * &ex0 + &a * &w1 * &ey0 + &d * (&ex - &ex0);
    [opt, nonpreemptive, preemptive, hybrid]
}

fn big_count(k: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

/// Expected costs given that exactly `n0` of the `n` jobs are urgent.
pub fn expected_conditional(
    n: usize,
    n0: usize,
    model: &PredictionModel,
    params: &Parameters,
) -> Result<ConditionalExpectation, AnalyticsError> {
    if n0 > n {
        return Err(AnalyticsError::CountOutOfRange { n0, n });
    }
    let [opt, nonpreemptive, preemptive, hybrid] = conditional_values(&big_count(n), &big_count(n0), model, params);
    Ok(ConditionalExpectation {
        n,
        n0,
        model: model.clone(),
        params: params.clone(),
        opt,
        nonpreemptive,
        preemptive,
        hybrid,
    })
}

fn assemble(n: usize, values: [BigRational; 4], model: &PredictionModel, params: &Parameters) -> UnconditionalExpectation {
    let [opt, nonpreemptive, preemptive, hybrid] = values;
    let regime = classify_regime(model, params);
    let beta = match regime {
        Regime::Nonpreemptive => nonpreemptive.clone(),
        Regime::Preemptive => preemptive.clone(),
        Regime::Hybrid => hybrid.clone(),
    };
    UnconditionalExpectation { n, opt, nonpreemptive, preemptive, hybrid, beta, regime }
}

/// Expected costs with `n0 ~ Binomial(n, ρ)`.
///
/// Every conditional value is a quadratic in `n0`, so its mean follows from
/// the first two moments of the binomial. The result is exactly the full
/// binomial average; [`expected_unconditional_summed`] computes that sum
/// term by term.
pub fn expected_unconditional(
    n: usize,
    model: &PredictionModel,
    params: &Parameters,
) -> Result<UnconditionalExpectation, AnalyticsError> {
    if n == 0 {
        return Err(AnalyticsError::EmptyPopulation);
    }
    let nn = big_count(n);
    let rho = to_big(&model.rho());
    let m1 = &nn * &rho;
    let m2 = &m1 * (BigRational::one() - &rho) + &m1 * &m1;
    let f0 = conditional_values(&nn, &big_count(0), model, params);
    let f1 = conditional_values(&nn, &big_count(1), model, params);
    let f2 = conditional_values(&nn, &big_count(2), model, params);
    let two = BigRational::from_integer(BigInt::from(2));
    let values = std::array::from_fn(|i| {
        let c = (&f2[i] - &two * &f1[i] + &f0[i]) / &two;
        let b = &f1[i] - &f0[i] - &c;
        &f0[i] + b * &m1 + c * &m2
    });
    Ok(assemble(n, values, model, params))
}

/// Term-by-term binomial average of [`expected_conditional`].
pub fn expected_unconditional_summed(
    n: usize,
    model: &PredictionModel,
    params: &Parameters,
) -> Result<UnconditionalExpectation, AnalyticsError> {
    if n == 0 {
        return Err(AnalyticsError::EmptyPopulation);
    }
    let rho = to_big(&model.rho());
    let lo = BigRational::one() - &rho;
    let mut totals: [BigRational; 4] = std::array::from_fn(|_| BigRational::zero());
    let mut coeff = BigInt::one();
    for k in 0..=n {
        if k > 0 {
            coeff = coeff * BigInt::from(n - k + 1) / BigInt::from(k);
        }
        let w = BigRational::from_integer(coeff.clone()) * pow(&rho, k) * pow(&lo, n - k);
        if w.is_zero() {
            continue;
        }
        let c = expected_conditional(n, k, model, params)?;
        for (t, v) in totals.iter_mut().zip([c.opt, c.nonpreemptive, c.preemptive, c.hybrid]) {
            *t += &w * v;
        }
    }
    Ok(assemble(n, totals, model, params))
}

fn pow(x: &BigRational, k: usize) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrValue {
    pub ratio: f64,
    /// Urgent fraction at which the limiting ratio peaks, when defined.
    pub worst_q: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridCr {
    pub ratio: f64,
    pub worst_q: Option<f64>,
    pub lambda: f64,
    pub decomposition_bound: f64,
}

/// ω₁/(ω₀−ω₁).
fn weight_ratio(params: &Parameters) -> BigRational {
    to_big(&params.w1()) / to_big(&(params.w0() - params.w1()))
}

fn sqrt_big(x: &BigRational) -> f64 {
    big_to_f64(x).sqrt()
}

/// Maximizer of the limiting ratios: q = √(r + (rK)²) − rK.
fn peak_q(r: &BigRational, k: &BigRational) -> f64 {
    let rk = r * k;
    sqrt_big(&(r + &rk * &rk)) - big_to_f64(&rk)
}

pub fn cr_nonpreemptive(model: &PredictionModel, params: &Parameters) -> CrValue {
    let eps = to_f64(&model.eps());
    let ratio = 1.0 + eps * (sqrt_big(&to_big(&(params.w0() / params.w1()))) - 1.0);
    let r = weight_ratio(params);
    CrValue { ratio, worst_q: Some(peak_q(&r, &BigRational::one())) }
}

/// Upper bound on the nonpreemptive ratio valid when ω₁ ≥ ω₀(1−α), where
/// ω₀/ω₁ ≤ 1/(1−α).
pub fn cr_bound_without_assumption(model: &PredictionModel, params: &Parameters) -> f64 {
    let eps = to_f64(&model.eps());
    1.0 + eps * ((1.0 / to_f64(&params.residual())).sqrt() - 1.0)
}

pub fn cr_preemptive(model: &PredictionModel, params: &Parameters) -> CrValue {
    let alpha = params.alpha();
    if model.eps() <= params.w1() / params.w0() {
        return CrValue { ratio: 1.0 + to_f64(&alpha), worst_q: Some(0.0) };
    }
    let (eps, w0, w1) = (to_big(&model.eps()), to_big(&params.w0()), to_big(&params.w1()));
    let one = BigRational::one();
    let four = BigRational::from_integer(BigInt::from(4));
    let two = BigRational::from_integer(BigInt::from(2));
    let radicand = &one - &four * &eps + &four * &eps * &eps * &w0 / &w1;
    let scale = to_big(&alpha) / &two * &w0 / (&w0 - &w1);
    let ratio = 1.0 + big_to_f64(&scale) * (big_to_f64(&(&one - &two * &eps)) + sqrt_big(&radicand));
    let k = (&two * &eps * &w0 - &two * &w1 + &w0) / (&two * &eps * &w0 - &two * &w1);
    CrValue { ratio, worst_q: Some(peak_q(&weight_ratio(params), &k)) }
}

/// λ = ε₀(1+ε₁) + (αω₀/(ω₀−ω₁))ε₁(1−ε₀) − (αω₁/(ω₀−ω₁))ε₁².
pub fn hybrid_lambda(model: &PredictionModel, params: &Parameters) -> BigRational {
    let one = BigRational::one();
    let (a, w0, w1) = (to_big(&params.alpha()), to_big(&params.w0()), to_big(&params.w1()));
    let (e0, e1) = (to_big(&model.eps0()), to_big(&model.eps1()));
    let d = &w0 - &w1;
    &e0 * (&one + &e1) + &a * &w0 / &d * &e1 * (&one - &e0) - &a * &w1 / &d * &e1 * &e1
}

pub fn cr_hybrid(model: &PredictionModel, params: &Parameters) -> HybridCr {
    let (a, w0, w1) = (to_big(&params.alpha()), to_big(&params.w0()), to_big(&params.w1()));
    let e1 = to_big(&model.eps1());
    let lambda = hybrid_lambda(model, params);
    let ae = &a * &e1 * &e1;
    let d = &w0 - &w1;
    let radicand = &w0 / &w1 * &lambda * &lambda + &w0 / &d * &ae * &ae;
    let ratio = 1.0 + 0.5 * (big_to_f64(&(&ae - &lambda)) + sqrt_big(&radicand));
    let decomposition_bound = 1.0
        + big_to_f64(&lambda) / 2.0 * (sqrt_big(&(&w0 / &w1)) - 1.0)
        + big_to_f64(&ae) / 2.0 * (1.0 + sqrt_big(&(&w0 / &d)));
    let r = weight_ratio(params);
    let denom = &lambda - &a * &r * &e1 * &e1;
    let worst_q = if lambda.is_zero() && ae.is_zero() || denom <= BigRational::zero() {
        None
    } else {
        Some(peak_q(&r, &((&lambda + &ae) / denom)))
    };
    HybridCr { ratio, worst_q, lambda: big_to_f64(&lambda), decomposition_bound }
}

/// max(1+α, 2/(1+α)), the competitive ratio with exact types and arrivals.
pub fn alg0_cr_bound(alpha: &Rational) -> Rational {
    let one = Rational::one();
    let a = one + alpha;
    a.max(Rational::from_integer(2) / a)
}

/// Excess ratio E(ALG|n₀)/OPT − 1 in the limit n → ∞ with n₀ = qn.
pub fn limiting_excess(regime: Regime, q: f64, model: &PredictionModel, params: &Parameters) -> f64 {
    let (a, w0, w1) = (to_f64(&params.alpha()), to_f64(&params.w0()), to_f64(&params.w1()));
    let (e0, e1) = (to_f64(&model.eps0()), to_f64(&model.eps1()));
    let eps = (e0 + e1) / 2.0;
    let denom = (w0 - w1) * q * q + w1;
    let mixed = q * (1.0 - q);
    let num = match regime {
        Regime::Nonpreemptive => 2.0 * eps * (w0 - w1) * mixed,
        Regime::Preemptive => a * (2.0 * eps * w0 * mixed + w1 * (1.0 - q) * (1.0 - q)),
        Regime::Hybrid => {
            (a * w0 * e1 * (1.0 - e0) + (w0 - w1) * e0 * (1.0 + e1)) * mixed + a * w1 * e1 * e1 * (1.0 - q) * (1.0 - q)
        }
    };
    num / denom
}

/// Maximizes `f` on [0, 1]: a 0.001 grid, then a 10⁻⁶ grid around the best
/// coarse point. Returns `(argmax, max)`.
pub fn maximize_over_q(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let pick = |qs: &mut dyn Iterator<Item = f64>| {
        qs.map(|q| (q, f(q))).fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
    };
    let (coarse, _) = pick(&mut (0..=1000).map(|i| i as f64 / 1000.0));
    let lo = (coarse - 1e-3).max(0.0);
    let hi = (coarse + 1e-3).min(1.0);
    let steps = ((hi - lo) / 1e-6).round() as usize;
    pick(&mut (0..=steps).map(|i| lo + i as f64 * 1e-6))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompetitiveRatioReport {
    pub regime: Regime,
    pub cr_nonpreemptive: f64,
    pub cr_preemptive: f64,
    pub cr_hybrid: f64,
    pub theorem4_value: f64,
    pub worst_q_nonpreemptive: Option<f64>,
    pub worst_q_preemptive: Option<f64>,
    pub worst_q_hybrid: Option<f64>,
    pub lambda: f64,
    pub decomposition_bound: f64,
}

/// All three ratios plus the one the β rule attains in its regime.
pub fn theorem4_cr(model: &PredictionModel, params: &Parameters) -> CompetitiveRatioReport {
    let phi = cr_nonpreemptive(model, params);
    let pre = cr_preemptive(model, params);
    let hyb = cr_hybrid(model, params);
    let regime = classify_regime(model, params);
    let theorem4_value = match regime {
        Regime::Nonpreemptive => phi.ratio,
        Regime::Preemptive => pre.ratio,
        Regime::Hybrid => hyb.ratio,
    };
    CompetitiveRatioReport {
        regime,
        cr_nonpreemptive: phi.ratio,
        cr_preemptive: pre.ratio,
        cr_hybrid: hyb.ratio,
        theorem4_value,
        worst_q_nonpreemptive: phi.worst_q,
        worst_q_preemptive: pre.worst_q,
        worst_q_hybrid: hyb.worst_q,
        lambda: hyb.lambda,
        decomposition_bound: hyb.decomposition_bound,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLoss {
    pub eta: f64,
    /// How many predictions were moved into [δ, 1−δ] before taking logs.
    pub clamped: usize,
}

/// Mean negative log-likelihood of the true types under p̂ = P(urgent).
pub fn log_loss(instance: &Instance) -> Result<LogLoss, AnalyticsError> {
    let mut total = 0.0;
    let mut clamped = 0;
    for job in instance.jobs() {
        let Prediction::Probability(p) = job.prediction else {
            return Err(AnalyticsError::LabelsOnly);
        };
        let raw = to_f64(&p);
        let p = raw.clamp(LOG_LOSS_CLAMP, 1.0 - LOG_LOSS_CLAMP);
        if p != raw {
            clamped += 1;
        }
        total += match job.true_type {
            JobType::Urgent => p.ln(),
            JobType::NonUrgent => (1.0 - p).ln(),
        };
    }
    Ok(LogLoss { eta: -total / instance.n() as f64, clamped })
}

/// Decimal string with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci.split_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    let rounded: f64 = sci.parse().unwrap_or(x);
    let digits = (11 - exp).max(0) as usize;
    format!("{rounded:.digits$}")
}

/// Flat key/value report: inputs as fractions, outputs as 12-digit decimals.
pub fn report_json(n: usize, model: &PredictionModel, params: &Parameters) -> Result<Value, AnalyticsError> {
    let mut m = Map::new();
    let frac = |q: Rational| Value::String(format_rational(&q));
    let dec = |x: f64| Value::String(sig12(x));
    let opt_dec = |x: Option<f64>| x.map_or(Value::Null, dec);
    m.insert("n".into(), Value::String(n.to_string()));
    m.insert("alpha".into(), frac(params.alpha()));
    m.insert("w0".into(), frac(params.w0()));
    m.insert("w1".into(), frac(params.w1()));
    m.insert("rho".into(), frac(model.rho()));
    m.insert("eps0".into(), frac(model.eps0()));
    m.insert("eps1".into(), frac(model.eps1()));

    m.insert("beta".into(), dec(to_f64(&params.beta())));
    m.insert("assumption1".into(), Value::Bool(params.satisfies_assumption1()));
    m.insert("posterior_pred0".into(), dec(to_f64(&model.posterior(JobType::Urgent))));
    m.insert("posterior_pred1".into(), dec(to_f64(&model.posterior(JobType::NonUrgent))));
    let e = expected_unconditional(n, model, params)?;
    m.insert("regime".into(), Value::String(e.regime.to_string()));
    m.insert("expected_opt".into(), dec(big_to_f64(&e.opt)));
    m.insert("expected_nonpreemptive".into(), dec(big_to_f64(&e.nonpreemptive)));
    m.insert("expected_preemptive".into(), dec(big_to_f64(&e.preemptive)));
    m.insert("expected_hybrid".into(), dec(big_to_f64(&e.hybrid)));
    m.insert("expected_beta".into(), dec(big_to_f64(&e.beta)));
    let cr = theorem4_cr(model, params);
    m.insert("cr_nonpreemptive".into(), dec(cr.cr_nonpreemptive));
    m.insert("cr_preemptive".into(), dec(cr.cr_preemptive));
    m.insert("cr_hybrid".into(), dec(cr.cr_hybrid));
    m.insert("cr_beta".into(), dec(cr.theorem4_value));
    m.insert("worst_q_nonpreemptive".into(), opt_dec(cr.worst_q_nonpreemptive));
    m.insert("worst_q_preemptive".into(), opt_dec(cr.worst_q_preemptive));
    m.insert("worst_q_hybrid".into(), opt_dec(cr.worst_q_hybrid));
    m.insert("lambda".into(), dec(cr.lambda));
    m.insert("decomposition_bound".into(), dec(cr.decomposition_bound));
    m.insert("alg0_bound".into(), dec(to_f64(&alg0_cr_bound(&params.alpha()))));
    Ok(Value::Object(m))
}
