//! Exact expected costs over the full decision tree of a batch instance.
//!
//! Jobs with the same label are exchangeable, and so are interrupted jobs of
//! the same revealed type, so a node is the count vector
//! `(unopened with label 0, unopened with label 1, interrupted non-urgent,
//! interrupted urgent)`. Cost is accrued as elapsed time times the expected
//! weight still in the system, which is linear and so exact in expectation.

use std::collections::HashMap;

use num::{BigInt, BigRational, One, Zero};

use super::EngineError;
use crate::domain::{to_big, JobType, Parameters, PredictionModel, Rational};

pub const DEFAULT_EXPECTIMAX_BOUND: usize = 6;

type Node = (u8, u8, u8, u8);

pub struct TreeOracle {
    alpha: BigRational,
    rest: BigRational,
    w0: BigRational,
    w1: BigRational,
    /// Posterior urgency given label 0 and label 1.
    post: [BigRational; 2],
    post_small: [Rational; 2],
    /// Expected weight of an unopened job by label.
    expected: [BigRational; 2],
    /// Probability a job carries label 0.
    q0: BigRational,
    memo: HashMap<Node, BigRational>,
}

impl TreeOracle {
    pub fn new(model: &PredictionModel, params: &Parameters) -> Self {
        let post_small = [model.posterior(JobType::Urgent), model.posterior(JobType::NonUrgent)];
        let post = post_small.map(|p| to_big(&p));
        let w0 = to_big(&params.w0());
        let w1 = to_big(&params.w1());
        let expected = post.clone().map(|p| &p * &w0 + (BigRational::one() - p) * &w1);
        TreeOracle {
            alpha: to_big(&params.alpha()),
            rest: to_big(&params.residual()),
            w0,
            w1,
            post,
            post_small,
            expected,
            q0: to_big(&model.label_probability(JobType::Urgent)),
            memo: HashMap::new(),
        }
    }

    fn load(&self, (u0, u1, l1, l0): Node) -> BigRational {
        &self.expected[0] * big(u0) + &self.expected[1] * big(u1) + &self.w1 * big(l1) + &self.w0 * big(l0)
    }

    /// Run α of a job with the given label, then reveal it into the pool.
    fn open_value(&mut self, node: Node, label: usize, next: &mut impl FnMut(&mut Self, Node) -> BigRational) -> BigRational {
        let (mut u0, mut u1, l1, l0) = node;
        if label == 0 { u0 -= 1 } else { u1 -= 1 }
        let p = self.post[label].clone();
        let run = &self.alpha * self.load(node);
        let urgent = if p.is_zero() { BigRational::zero() } else { &p * next(self, (u0, u1, l1, l0 + 1)) };
        let lazy = if p.is_one() { BigRational::zero() } else { (BigRational::one() - &p) * next(self, (u0, u1, l1 + 1, l0)) };
        run + urgent + lazy
    }

    fn complete_value(&mut self, node: Node, urgent: bool, next: &mut impl FnMut(&mut Self, Node) -> BigRational) -> BigRational {
        let (u0, u1, l1, l0) = node;
        let run = &self.rest * self.load(node);
        let after = if urgent { (u0, u1, l1, l0 - 1) } else { (u0, u1, l1 - 1, l0) };
        run + next(self, after)
    }

    /// Minimum expected remaining cost from `node` over every action sequence.
    pub fn optimal(&mut self, node: Node) -> BigRational {
        if node == (0, 0, 0, 0) {
            return BigRational::zero();
        }
        if let Some(v) = self.memo.get(&node) {
            return v.clone();
        }
        let (u0, u1, l1, l0) = node;
        let mut rec = |s: &mut Self, n: Node| s.optimal(n);
        let mut best: Option<BigRational> = None;
        let mut consider = |v: BigRational| {
            if best.as_ref().map_or(true, |b| v < *b) {
                best = Some(v);
            }
        };
        if u0 > 0 {
            consider(self.open_value(node, 0, &mut rec));
        }
        if u1 > 0 {
            consider(self.open_value(node, 1, &mut rec));
        }
        if l1 > 0 {
            consider(self.complete_value(node, false, &mut rec));
        }
        if l0 > 0 {
            consider(self.complete_value(node, true, &mut rec));
        }
        let v = best.expect("non-terminal node has an action");
        self.memo.insert(node, v.clone());
        v
    }

    /// Expected remaining cost of the threshold rule: urgent jobs run to
    /// completion, the head of the sorted queue is opened when nothing is
    /// interrupted or when its posterior is strictly above `threshold`.
    pub fn threshold_rule(&self, node: Node, threshold: &Rational, memo: &mut HashMap<Node, BigRational>) -> BigRational {
        if node == (0, 0, 0, 0) {
            return BigRational::zero();
        }
        if let Some(v) = memo.get(&node) {
            return v.clone();
        }
        let (u0, u1, l1, l0) = node;
        // Label 0 is the head unless its posterior is lower; equal posteriors
        // make the classes indistinguishable.
        let head = match (u0 > 0, u1 > 0) {
            (true, true) => Some(if self.post_small[0] >= self.post_small[1] { 0 } else { 1 }),
            (true, false) => Some(0),
            (false, true) => Some(1),
            (false, false) => None,
        };
        let action = if l0 > 0 {
            None
        } else {
            match head {
                Some(h) if l1 == 0 || self.post_small[h] > *threshold => Some(h),
                _ => None,
            }
        };
        // The recursion borrows `self` immutably, so evaluate without the
        // mutable helpers.
        let v = match action {
            Some(label) => {
                let (mut a, mut b) = (u0, u1);
                if label == 0 { a -= 1 } else { b -= 1 }
                let p = &self.post[label];
                let mut v = &self.alpha * self.load(node);
                if !p.is_zero() {
                    v += p * self.threshold_rule((a, b, l1, l0 + 1), threshold, memo);
                }
                if !p.is_one() {
                    v += (BigRational::one() - p) * self.threshold_rule((a, b, l1 + 1, l0), threshold, memo);
                }
                v
            }
            None => {
                let after = if l0 > 0 { (u0, u1, l1, l0 - 1) } else { (u0, u1, l1 - 1, l0) };
                &self.rest * self.load(node) + self.threshold_rule(after, threshold, memo)
            }
        };
        memo.insert(node, v.clone());
        v
    }

    /// Average of `value(k, n-k)` over the binomial law of the label counts.
    fn mix(&mut self, n: usize, mut value: impl FnMut(&mut Self, u8, u8) -> BigRational) -> BigRational {
        let q0 = self.q0.clone();
        let q1 = BigRational::one() - &q0;
        let mut total = BigRational::zero();
        for k in 0..=n {
            let weight = big_binomial(n, k) * pow(&q0, k) * pow(&q1, n - k);
            if weight.is_zero() {
                continue;
            }
            total += weight * value(self, k as u8, (n - k) as u8);
        }
        total
    }
}

fn big(k: u8) -> BigRational {
    BigRational::from_integer(BigInt::from(k))
}

fn pow(x: &BigRational, k: usize) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * x)
}

fn big_binomial(n: usize, k: usize) -> BigRational {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    BigRational::from_integer(c)
}

fn check_bound(n: usize, bound: usize) -> Result<(), EngineError> {
    if n > bound || n > u8::MAX as usize / 2 {
        return Err(EngineError::ResourceLimit { n, bound });
    }
    Ok(())
}

/// Expected cost of the best non-anticipating policy for `n` jobs whose
/// labels and types are drawn from `model`.
pub fn expectimax_optimal(n: usize, model: &PredictionModel, params: &Parameters) -> Result<BigRational, EngineError> {
    expectimax_optimal_bounded(n, model, params, DEFAULT_EXPECTIMAX_BOUND)
}

pub fn expectimax_optimal_bounded(
    n: usize,
    model: &PredictionModel,
    params: &Parameters,
    bound: usize,
) -> Result<BigRational, EngineError> {
    check_bound(n, bound)?;
    let mut oracle = TreeOracle::new(model, params);
    Ok(oracle.mix(n, |o, a, b| o.optimal((a, b, 0, 0))))
}

/// Expected cost of the threshold rule with the given threshold on the same
/// tree. With `threshold = β` this is the β-threshold rule.
pub fn threshold_rule_expected(
    n: usize,
    model: &PredictionModel,
    params: &Parameters,
    threshold: &Rational,
) -> Result<BigRational, EngineError> {
    check_bound(n, DEFAULT_EXPECTIMAX_BOUND)?;
    let mut oracle = TreeOracle::new(model, params);
    let mut memo = HashMap::new();
    Ok(oracle.mix(n, |o, a, b| o.threshold_rule((a, b, 0, 0), threshold, &mut memo)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::rat;

    fn params(a: Rational, r: i64) -> Parameters {
        Parameters::new(a, rat(r, 1), rat(1, 1)).unwrap()
    }

    #[test]
    fn one_job_by_hand() {
        for (rho, e0, e1) in [(rat(1, 10), rat(1, 10), rat(3, 10)), (rat(1, 2), rat(0, 1), rat(1, 2))] {
            let m = PredictionModel::new(rho, e0, e1).unwrap();
            let p = params(rat(2, 5), 20);
            let want = to_big(&(rho * (p.w0() - p.w1()) + p.w1()));
            assert_eq!(expectimax_optimal(1, &m, &p).unwrap(), want);
            assert_eq!(threshold_rule_expected(1, &m, &p, &p.beta()).unwrap(), want);
        }
    }

    #[test]
    fn perfect_information_is_wspt_mixture() {
        // Mean of (ω₀−ω₁)n₀(n₀+1)/2 + ω₁n(n+1)/2 under n₀ ~ Bin(n, ρ).
        let m = PredictionModel::new(rat(1, 10), rat(0, 1), rat(0, 1)).unwrap();
        let p = params(rat(2, 5), 20);
        let n = 4i64;
        let rho = rat(1, 10);
        let mean_n0 = rho * n;
        let second = rho * (rat(1, 1) - rho) * n + mean_n0 * mean_n0;
        let want = (p.w0() - p.w1()) * (second + mean_n0) / 2 + p.w1() * (n * (n + 1) / 2);
        assert_eq!(expectimax_optimal(4, &m, &p).unwrap(), to_big(&want));
    }

    #[test]
    fn beta_rule_matches_optimum_small_grid() {
        for a in [rat(1, 4), rat(7, 10)] {
            for r in [3, 100] {
                let m = PredictionModel::new(rat(1, 2), rat(1, 10), rat(3, 10)).unwrap();
                let p = params(a, r);
                for n in 1..=4 {
                    let opt = expectimax_optimal(n, &m, &p).unwrap();
                    let rule = threshold_rule_expected(n, &m, &p, &p.beta()).unwrap();
                    assert_eq!(opt, rule, "n={n} alpha={a} ratio={r}");
                }
            }
        }
    }

    #[test]
    fn wrong_threshold_is_strictly_worse() {
        // Posterior ρ = 1/2 with uninformative labels sits well above β.
        let m = PredictionModel::new(rat(1, 2), rat(1, 2), rat(1, 2)).unwrap();
        let p = params(rat(2, 5), 20);
        let opt = expectimax_optimal(3, &m, &p).unwrap();
        let never_open = threshold_rule_expected(3, &m, &p, &rat(1, 1)).unwrap();
        assert!(never_open > opt);
    }

    #[test]
    fn bound_enforced() {
        let m = PredictionModel::symmetric(rat(1, 10), rat(1, 10)).unwrap();
        let p = params(rat(2, 5), 20);
        assert!(matches!(expectimax_optimal(7, &m, &p), Err(EngineError::ResourceLimit { n: 7, bound: 6 })));
        assert!(expectimax_optimal_bounded(7, &m, &p, 7).is_ok());
    }
}
