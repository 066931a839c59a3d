//! Clairvoyant schedules: WSPT for batch instances, WSRPT with release
//! dates, and an exhaustive search over event-grid schedules.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num::Zero;

use super::{weighted_cost, EngineError, EventKind, RunOutcome, TickScale, TraceEvent};
use crate::domain::{Instance, JobType, Rational};

pub const DEFAULT_ENUMERATION_BOUND: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedJob {
    pub id: usize,
    pub weight: Rational,
    pub release: Rational,
}

/// True weights and releases of an instance.
pub fn weighted_jobs(instance: &Instance) -> Vec<WeightedJob> {
    instance
        .jobs()
        .iter()
        .map(|j| WeightedJob { id: j.id, weight: instance.weight(j), release: j.release })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub completion_times: BTreeMap<usize, Rational>,
    pub cost: Rational,
    /// Maximal processing intervals `(job id, start, end)`.
    pub segments: Vec<(usize, Rational, Rational)>,
    pub preemptions: usize,
}

/// Urgent jobs first, then by id; job in position k completes at k.
pub fn offline_wspt(instance: &Instance) -> Result<RunOutcome, EngineError> {
    if instance.has_release_dates() {
        return Err(EngineError::Unsupported("offline_wspt needs all release times at 0; use offline_wsrpt".into()));
    }
    let mut order: Vec<_> = instance.jobs().iter().collect();
    order.sort_by(|a, b| a.true_type.cmp(&b.true_type).then(a.id.cmp(&b.id)));
    let p = instance.params();
    let mut completion_times = BTreeMap::new();
    let mut trace = Vec::with_capacity(2 * order.len());
    let (mut sum0, mut sum1) = (0i128, 0i128);
    for (k, job) in order.iter().enumerate() {
        let c = (k + 1) as i64;
        match job.true_type {
            JobType::Urgent => sum0 += c as i128,
            JobType::NonUrgent => sum1 += c as i128,
        }
        completion_times.insert(job.id, Rational::from_integer(c));
        trace.push(TraceEvent { time: Rational::from_integer(c - 1), kind: EventKind::Open, job: job.id, true_type: job.true_type });
        trace.push(TraceEvent { time: Rational::from_integer(c), kind: EventKind::Complete, job: job.id, true_type: job.true_type });
    }
    let total_cost = weighted_cost(TickScale { denom: 1 }, p.w0(), sum0, p.w1(), sum1)?;
    Ok(RunOutcome { completion_times, total_cost, trace, preemption_count: 0 })
}

/// WSRPT on the instance's true weights and release dates.
pub fn offline_wsrpt(instance: &Instance) -> Result<RunOutcome, EngineError> {
    let jobs = weighted_jobs(instance);
    let schedule = wsrpt_schedule(&jobs)?;
    let ty: BTreeMap<usize, JobType> = instance.jobs().iter().map(|j| (j.id, j.true_type)).collect();
    let mut trace = Vec::new();
    let mut started = std::collections::HashSet::new();
    for (id, start, end) in &schedule.segments {
        let true_type = ty[id];
        let kind = if started.insert(*id) { EventKind::Open } else { EventKind::Open };
        trace.push(TraceEvent { time: *start, kind, job: *id, true_type });
        let kind = if schedule.completion_times[id] == *end { EventKind::Complete } else { EventKind::Preempt };
        trace.push(TraceEvent { time: *end, kind, job: *id, true_type });
    }
    Ok(RunOutcome {
        completion_times: schedule.completion_times,
        total_cost: schedule.cost,
        trace,
        preemption_count: schedule.preemptions,
    })
}

/// Unit jobs on the integer tick grid, weights scaled to integers.
struct TickJobs {
    scale: TickScale,
    ids: Vec<usize>,
    weight: Vec<i128>,
    release: Vec<i64>,
}

impl TickJobs {
    fn new(jobs: &[WeightedJob]) -> Result<Self, EngineError> {
        if jobs.is_empty() {
            return Err(EngineError::Unsupported("no jobs".into()));
        }
        let mut distinct: Vec<Rational> = jobs.iter().map(|j| j.weight).collect();
        distinct.sort();
        distinct.dedup();
        if distinct.len() > 2 {
            return Err(EngineError::Unsupported(format!(
                "{} distinct weights; WSRPT optimality holds for at most two",
                distinct.len()
            )));
        }
        if jobs.iter().any(|j| j.weight <= Rational::zero() || j.release < Rational::zero()) {
            return Err(EngineError::Unsupported("weights must be positive and releases nonnegative".into()));
        }
        let scale = TickScale::new(jobs.iter().map(|j| &j.release))?;
        let wscale = TickScale::new(jobs.iter().map(|j| &j.weight))?;
        let release = jobs.iter().map(|j| scale.ticks(&j.release)).collect::<Result<Vec<_>, _>>()?;
        let weight = jobs
            .iter()
            .map(|j| wscale.ticks(&j.weight).map(|w| w as i128))
            .collect::<Result<Vec<_>, _>>()?;
        let horizon = release.iter().copied().max().unwrap_or(0) as i128 + jobs.len() as i128 * scale.denom as i128;
        if horizon > i64::MAX as i128 / 2 {
            return Err(EngineError::Overflow);
        }
        Ok(TickJobs { scale, ids: jobs.iter().map(|j| j.id).collect(), weight, release })
    }

    fn next_release_after(&self, t: i64) -> Option<i64> {
        self.release.iter().copied().filter(|&r| r > t).min()
    }

    /// Exact cost Σ w·C from completion ticks.
    fn cost(&self, jobs: &[WeightedJob], completion: &[i64]) -> Result<Rational, EngineError> {
        let mut total = num::rational::Ratio::<i128>::zero();
        for (j, &c) in jobs.iter().zip(completion) {
            let w = num::rational::Ratio::<i128>::new(*j.weight.numer() as i128, *j.weight.denom() as i128);
            total += w * num::rational::Ratio::new(c as i128, self.scale.denom as i128);
        }
        let n = i64::try_from(*total.numer()).map_err(|_| EngineError::Overflow)?;
        let d = i64::try_from(*total.denom()).map_err(|_| EngineError::Overflow)?;
        Ok(Rational::new(n, d))
    }
}

/// Preemptive weighted shortest remaining processing time.
///
/// At every release and completion the available job with the largest
/// weight / remaining work runs; ties go to less remaining work, then to
/// the smaller id.
pub fn wsrpt_schedule(jobs: &[WeightedJob]) -> Result<Schedule, EngineError> {
    let tj = TickJobs::new(jobs)?;
    let n = jobs.len();
    let unit = tj.scale.denom;
    let mut remaining = vec![unit; n];
    let mut completion = vec![0i64; n];
    let mut done = 0usize;
    let mut t = tj.release.iter().copied().min().unwrap_or(0);
    let mut segments: Vec<(usize, i64, i64)> = Vec::new();
    let mut preemptions = 0usize;

    let better = |a: usize, b: usize, rem: &[i64]| -> Ordering {
        // w_a / x_a vs w_b / x_b, larger first.
        let lhs = tj.weight[a] * rem[b] as i128;
        let rhs = tj.weight[b] * rem[a] as i128;
        rhs.cmp(&lhs).then(rem[a].cmp(&rem[b])).then(tj.ids[a].cmp(&tj.ids[b]))
    };

    while done < n {
        let best = (0..n)
            .filter(|&i| remaining[i] > 0 && tj.release[i] <= t)
            .min_by(|&a, &b| better(a, b, &remaining));
        let Some(j) = best else {
            t = tj.next_release_after(t).expect("unfinished jobs must be pending");
            continue;
        };
        let finish = t + remaining[j];
        let stop = match tj.next_release_after(t) {
            Some(r) if r < finish => r,
            _ => finish,
        };
        remaining[j] -= stop - t;
        match segments.last_mut() {
            Some(last) if last.0 == j && last.2 == t => last.2 = stop,
            _ => {
                if let Some(last) = segments.last() {
                    if last.2 == t && remaining[last.0] > 0 {
                        preemptions += 1;
                    }
                }
                segments.push((j, t, stop));
            }
        }
        t = stop;
        if remaining[j] == 0 {
            completion[j] = t;
            done += 1;
        }
    }

    let cost = tj.cost(jobs, &completion)?;
    Ok(Schedule {
        completion_times: (0..n).map(|i| (tj.ids[i], tj.scale.rational(completion[i]))).collect(),
        cost,
        segments: segments
            .into_iter()
            .map(|(j, s, e)| (tj.ids[j], tj.scale.rational(s), tj.scale.rational(e)))
            .collect(),
        preemptions,
    })
}

/// Minimum Σ w·C over every schedule that only switches jobs at release
/// dates or completions, by exhaustive search. Exponential; `bound` caps n.
pub fn enumerate_offline_optimum(jobs: &[WeightedJob], bound: usize) -> Result<Rational, EngineError> {
    if jobs.len() > bound {
        return Err(EngineError::ResourceLimit { n: jobs.len(), bound });
    }
    let tj = TickJobs::new(jobs)?;
    let n = jobs.len();
    let mut remaining = vec![tj.scale.denom; n];
    let mut completion = vec![0i64; n];
    let mut best: Option<Rational> = None;
    let t0 = tj.release.iter().copied().min().unwrap_or(0);
    search(&tj, jobs, t0, &mut remaining, &mut completion, 0, &mut best)?;
    Ok(best.expect("at least one schedule exists"))
}

fn search(
    tj: &TickJobs,
    jobs: &[WeightedJob],
    t: i64,
    remaining: &mut [i64],
    completion: &mut [i64],
    done: usize,
    best: &mut Option<Rational>,
) -> Result<(), EngineError> {
    let n = remaining.len();
    if done == n {
        let c = tj.cost(jobs, completion)?;
        if best.map_or(true, |b| c < b) {
            *best = Some(c);
        }
        return Ok(());
    }
    let available: Vec<usize> = (0..n).filter(|&i| remaining[i] > 0 && tj.release[i] <= t).collect();
    if available.is_empty() {
        let next = tj.next_release_after(t).expect("unfinished jobs must be pending");
        return search(tj, jobs, next, remaining, completion, done, best);
    }
    let next_release = tj.next_release_after(t);
    for j in available {
        let finish = t + remaining[j];
        let stop = match next_release {
            Some(r) if r < finish => r,
            _ => finish,
        };
        let ran = stop - t;
        remaining[j] -= ran;
        let finished = remaining[j] == 0;
        if finished {
            completion[j] = stop;
        }
        search(tj, jobs, stop, remaining, completion, done + usize::from(finished), best)?;
        remaining[j] += ran;
    }
    Ok(())
}

pub fn enumerate_instance_optimum(instance: &Instance, bound: usize) -> Result<Rational, EngineError> {
    enumerate_offline_optimum(&weighted_jobs(instance), bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{rat, Job, Parameters, Prediction, PredictionModel};

    fn wj(id: usize, w: i64, r: Rational) -> WeightedJob {
        WeightedJob { id, weight: rat(w, 1), release: r }
    }

    fn batch(types: &[u8]) -> Instance {
        let p = Parameters::new(rat(2, 5), rat(20, 1), rat(1, 1)).unwrap();
        let m = PredictionModel::new(rat(1, 10), rat(0, 1), rat(0, 1)).unwrap();
        let jobs = types
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let t = JobType::from_index(t).unwrap();
                Job::new(i + 1, t, Prediction::Label(t))
            })
            .collect();
        Instance::new(jobs, p, Some(m)).unwrap()
    }

    #[test]
    fn wspt_closed_form_values() {
        assert_eq!(offline_wspt(&batch(&[1; 9])).unwrap().total_cost, rat(45, 1));
        assert_eq!(offline_wspt(&batch(&[1, 0, 1, 0, 0, 1, 1, 0, 1])).unwrap().total_cost, rat(235, 1));
        assert_eq!(offline_wspt(&batch(&[0])).unwrap().total_cost, rat(20, 1));
    }

    #[test]
    fn wspt_rejects_release_dates() {
        let inst = batch(&[0, 1]).with_releases(&[rat(0, 1), rat(1, 2)]).unwrap();
        assert!(matches!(offline_wspt(&inst), Err(EngineError::Unsupported(_))));
        assert!(offline_wsrpt(&inst).is_ok());
    }

    #[test]
    fn wsrpt_two_job_preemption() {
        let jobs = [wj(1, 1, rat(0, 1)), wj(2, 20, rat(1, 2))];
        let s = wsrpt_schedule(&jobs).unwrap();
        assert_eq!(s.completion_times[&2], rat(3, 2));
        assert_eq!(s.completion_times[&1], rat(2, 1));
        assert_eq!(s.cost, rat(32, 1));
        assert_eq!(s.preemptions, 1);
        assert_eq!(enumerate_offline_optimum(&jobs, 4).unwrap(), rat(32, 1));
    }

    #[test]
    fn wsrpt_no_preempt_window() {
        // Remaining work below ω₁/ω₀ = 1/20 when the urgent job arrives.
        let r = rat(1, 1) - rat(1, 20) + rat(1, 100);
        let jobs = [wj(1, 1, rat(0, 1)), wj(2, 20, r)];
        let s = wsrpt_schedule(&jobs).unwrap();
        assert_eq!(s.completion_times[&1], rat(1, 1));
        assert_eq!(s.completion_times[&2], rat(2, 1));
        assert_eq!(s.preemptions, 0);
        assert_eq!(enumerate_offline_optimum(&jobs, 4).unwrap(), s.cost);
    }

    #[test]
    fn wsrpt_matches_wspt_without_releases() {
        let inst = batch(&[1, 0, 1, 0, 0, 1, 1, 0, 1]);
        assert_eq!(offline_wsrpt(&inst).unwrap().total_cost, offline_wspt(&inst).unwrap().total_cost);
        assert_eq!(
            enumerate_instance_optimum(&batch(&[1, 0, 1, 0]), 4).unwrap(),
            offline_wspt(&batch(&[1, 0, 1, 0])).unwrap().total_cost
        );
    }

    #[test]
    fn three_weights_and_bounds_rejected() {
        let jobs = [wj(1, 1, rat(0, 1)), wj(2, 2, rat(0, 1)), wj(3, 3, rat(0, 1))];
        assert!(matches!(wsrpt_schedule(&jobs), Err(EngineError::Unsupported(_))));
        let jobs: Vec<_> = (1..=5).map(|i| wj(i, 1, rat(0, 1))).collect();
        assert!(matches!(enumerate_offline_optimum(&jobs, 4), Err(EngineError::ResourceLimit { n: 5, bound: 4 })));
    }

    #[test]
    fn idle_gap_handled() {
        let jobs = [wj(1, 1, rat(0, 1)), wj(2, 20, rat(3, 1))];
        let s = wsrpt_schedule(&jobs).unwrap();
        assert_eq!(s.completion_times[&1], rat(1, 1));
        assert_eq!(s.completion_times[&2], rat(4, 1));
        assert_eq!(s.cost, rat(81, 1));
    }
}
