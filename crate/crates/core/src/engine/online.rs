use std::collections::{BTreeMap, HashMap, VecDeque};

use num::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{trace_context, weighted_cost, EngineError, EventKind, RunOutcome, TickScale, TraceEvent};
use crate::domain::{Instance, JobType, Rational};
use crate::policies::{Action, InterruptedJob, PolicyKind, PolicyState, QueuedJob, RevelationModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub keep_trace: bool,
    pub keep_completions: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { keep_trace: true, keep_completions: true }
    }
}

/// Simulates `policy` on `instance`, keeping the full trace.
pub fn run(instance: &Instance, policy: PolicyKind, revelation: &RevelationModel) -> Result<RunOutcome, EngineError> {
    run_with(instance, policy, revelation, RunOptions::default())
}

/// Total weighted completion time only; no trace or completion map.
pub fn run_cost(instance: &Instance, policy: PolicyKind, revelation: &RevelationModel) -> Result<Rational, EngineError> {
    run_with(instance, policy, revelation, RunOptions { keep_trace: false, keep_completions: false })
        .map(|o| o.total_cost)
}

pub fn run_with(
    instance: &Instance,
    policy: PolicyKind,
    revelation: &RevelationModel,
    opts: RunOptions,
) -> Result<RunOutcome, EngineError> {
    Simulation::new(instance, policy, revelation, opts)?.execute()
}

struct Simulation<'a> {
    instance: &'a Instance,
    policy: PolicyKind,
    exact: bool,
    opts: RunOptions,
    scale: TickScale,
    alpha: i64,
    residual: i64,
    /// Job indices not yet released, latest release first (pop from the back).
    pending: Vec<usize>,
    release: Vec<i64>,
    theta: Vec<Rational>,
    index_of: HashMap<usize, usize>,
    state: PolicyState,
    trace: Vec<TraceEvent>,
    completions: BTreeMap<usize, Rational>,
    sum0: i128,
    sum1: i128,
    preemptions: usize,
}

impl<'a> Simulation<'a> {
    fn new(
        instance: &'a Instance,
        policy: PolicyKind,
        revelation: &RevelationModel,
        opts: RunOptions,
    ) -> Result<Self, EngineError> {
        let params = instance.params();
        let jobs = instance.jobs();
        let scale = TickScale::new(std::iter::once(&params.alpha()).chain(jobs.iter().map(|j| &j.release)))?;
        let alpha = scale.ticks(&params.alpha())?;
        let residual = scale.denom - alpha;
        let release = jobs.iter().map(|j| scale.ticks(&j.release)).collect::<Result<Vec<_>, _>>()?;
        let horizon = release.iter().copied().max().unwrap_or(0) as i128 + jobs.len() as i128 * scale.denom as i128;
        if horizon > i64::MAX as i128 / 2 {
            return Err(EngineError::Overflow);
        }

        let theta = match revelation {
            RevelationModel::Exact => jobs
                .iter()
                .map(|j| if j.true_type == JobType::Urgent { Rational::one() } else { Rational::zero() })
                .collect(),
            RevelationModel::Probabilistic(dist) => {
                let mut order: Vec<usize> = (0..jobs.len()).collect();
                order.sort_by_key(|&i| jobs[i].id);
                let mut rng = ChaCha8Rng::seed_from_u64(dist.seed);
                let mut theta = vec![Rational::zero(); jobs.len()];
                for i in order {
                    theta[i] = dist.sample(jobs[i].true_type, &mut rng);
                }
                theta
            }
        };

        let mut pending: Vec<usize> = (0..jobs.len()).collect();
        pending.sort_by(|&a, &b| release[b].cmp(&release[a]).then(jobs[b].id.cmp(&jobs[a].id)));
        let index_of = jobs.iter().enumerate().map(|(i, j)| (j.id, i)).collect();

        Ok(Simulation {
            instance,
            policy,
            exact: matches!(revelation, RevelationModel::Exact),
            opts,
            scale,
            alpha,
            residual,
            pending,
            release,
            theta,
            index_of,
            state: PolicyState { unopened: VecDeque::new(), interrupted: Vec::new(), clock: Rational::zero() },
            trace: Vec::new(),
            completions: BTreeMap::new(),
            sum0: 0,
            sum1: 0,
            preemptions: 0,
        })
    }

    fn release_until(&mut self, t: i64) {
        while let Some(&i) = self.pending.last() {
            if self.release[i] > t {
                break;
            }
            self.pending.pop();
            let job = &self.instance.jobs()[i];
            let q = QueuedJob { id: job.id, prior: self.instance.prior(job), label: job.label() };
            let pos = self
                .state
                .unopened
                .partition_point(|u| u.queue_order(&q) == std::cmp::Ordering::Less);
            self.state.unopened.insert(pos, q);
        }
    }

    fn record(&mut self, t: i64, kind: EventKind, idx: usize) {
        if kind == EventKind::Preempt {
            self.preemptions += 1;
        }
        if self.opts.keep_trace {
            let job = &self.instance.jobs()[idx];
            self.trace.push(TraceEvent { time: self.scale.rational(t), kind, job: job.id, true_type: job.true_type });
        }
    }

    fn complete(&mut self, t: i64, idx: usize) {
        self.record(t, EventKind::Complete, idx);
        let job = &self.instance.jobs()[idx];
        match job.true_type {
            JobType::Urgent => self.sum0 += t as i128,
            JobType::NonUrgent => self.sum1 += t as i128,
        }
        if self.opts.keep_completions {
            self.completions.insert(job.id, self.scale.rational(t));
        }
    }

    fn execute(mut self) -> Result<RunOutcome, EngineError> {
        let params = self.instance.params().clone();
        let mut t: i64 = 0;
        // Job sitting at its α-point whose fate the next action decides.
        let mut at_alpha: Option<usize> = None;
        loop {
            self.release_until(t);
            if self.state.is_terminal() {
                match self.pending.last() {
                    Some(&next) => {
                        t = self.release[next];
                        continue;
                    }
                    None => break,
                }
            }
            self.state.clock = self.scale.rational(t);
            let action = self.policy.decide(&self.state, &params).map_err(|source| EngineError::Policy {
                source,
                time: self.scale.rational(t),
                context: trace_context(&self.trace),
            })?;
            match action {
                Action::CompleteLow(id) => {
                    let pos = self.state.interrupted.iter().position(|j| j.id == id).ok_or_else(|| {
                        EngineError::IllegalAction {
                            action,
                            time: self.scale.rational(t),
                            context: trace_context(&self.trace),
                        }
                    })?;
                    if let Some(k) = at_alpha.take() {
                        if self.instance.jobs()[k].id != id {
                            self.record(t, EventKind::Preempt, k);
                        }
                    }
                    self.state.interrupted.remove(pos);
                    let idx = self.index_of[&id];
                    t += self.residual;
                    self.complete(t, idx);
                }
                Action::OpenNext => {
                    let Some(head) = self.state.unopened.pop_front() else {
                        return Err(EngineError::IllegalAction {
                            action,
                            time: self.scale.rational(t),
                            context: trace_context(&self.trace),
                        });
                    };
                    if let Some(k) = at_alpha.take() {
                        self.record(t, EventKind::Preempt, k);
                    }
                    let idx = self.index_of[&head.id];
                    self.record(t, EventKind::Open, idx);
                    t += self.alpha;
                    self.record(t, EventKind::AlphaReveal, idx);
                    let urgent = self.instance.jobs()[idx].true_type == JobType::Urgent;
                    if !self.policy.preempts() || (self.exact && urgent) {
                        t += self.residual;
                        self.complete(t, idx);
                    } else {
                        self.state.interrupted.push(InterruptedJob { id: head.id, theta: self.theta[idx] });
                        at_alpha = Some(idx);
                    }
                }
            }
        }
        let p = self.instance.params();
        let total_cost = weighted_cost(self.scale, p.w0(), self.sum0, p.w1(), self.sum1)?;
        Ok(RunOutcome {
            completion_times: self.completions,
            total_cost,
            trace: self.trace,
            preemption_count: self.preemptions,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{rat, Job, Parameters, Prediction, PredictionModel};
    use crate::engine::format_trace;

    fn params() -> Parameters {
        Parameters::new(rat(2, 5), rat(20, 1), rat(1, 1)).unwrap()
    }

    /// Sorted predictions (0,0,0,0,0,1,1,1,1) with true types π.
    fn nine_jobs() -> Instance {
        let m = PredictionModel::new(rat(1, 10), rat(1, 10), rat(1, 10)).unwrap();
        let truth = [0u8, 1, 0, 0, 1, 1, 1, 0, 1];
        let jobs = (0..9)
            .map(|i| {
                let label = if i < 5 { JobType::Urgent } else { JobType::NonUrgent };
                Job::new(i + 1, JobType::from_index(truth[i]).unwrap(), Prediction::Label(label))
            })
            .collect();
        Instance::new(jobs, params(), Some(m)).unwrap()
    }

    #[test]
    fn single_non_urgent_job() {
        let m = PredictionModel::new(rat(1, 10), rat(1, 10), rat(1, 10)).unwrap();
        let inst = Instance::new(
            vec![Job::new(1, JobType::NonUrgent, Prediction::Label(JobType::Urgent))],
            params(),
            Some(m),
        )
        .unwrap();
        for p in PolicyKind::ALL {
            let out = run(&inst, p, &RevelationModel::Exact).unwrap();
            assert_eq!(out.completion_times[&1], rat(1, 1));
            assert_eq!(out.total_cost, rat(1, 1));
            assert_eq!(out.preemption_count, 0);
        }
    }

    #[test]
    fn nine_job_beta_trace() {
        let inst = nine_jobs();
        let out = run(&inst, PolicyKind::Beta, &RevelationModel::Exact).unwrap();
        let expected = [rat(1, 1), rat(22, 5), rat(12, 5), rat(17, 5), rat(5, 1), rat(6, 1), rat(7, 1), rat(8, 1), rat(9, 1)];
        for (i, c) in expected.iter().enumerate() {
            assert_eq!(out.completion_times[&(i + 1)], *c, "job {}", i + 1);
        }
        assert_eq!(out.total_cost, rat(1637, 5));
        assert_eq!(out.preemption_count, 2);
        let text = format_trace(&out.trace);
        assert!(text.starts_with("0/1,open,1,0\n2/5,alpha_reveal,1,0\n1/1,complete,1,0\n1/1,open,2,1\n7/5,alpha_reveal,2,1\n7/5,preempt,2,1\n"));
    }

    #[test]
    fn nine_job_non_adaptive_costs() {
        let inst = nine_jobs();
        let np = run(&inst, PolicyKind::Nonpreemptive, &RevelationModel::Exact).unwrap();
        assert_eq!(np.total_cost, rat(349, 1));
        assert_eq!(np.preemption_count, 0);
        let p = run(&inst, PolicyKind::Preemptive, &RevelationModel::Exact).unwrap();
        assert_eq!(p.total_cost, rat(287, 1));
        let h = run(&inst, PolicyKind::Hybrid, &RevelationModel::Exact).unwrap();
        assert_eq!(h.total_cost, rat(1637, 5));
    }

    #[test]
    fn idle_until_release() {
        let m = PredictionModel::new(rat(1, 2), rat(0, 1), rat(0, 1)).unwrap();
        let jobs = vec![
            Job::new(1, JobType::NonUrgent, Prediction::Label(JobType::NonUrgent)).released_at(rat(3, 1)),
            Job::new(2, JobType::Urgent, Prediction::Label(JobType::Urgent)).released_at(rat(7, 2)),
        ];
        let inst = Instance::new(jobs, params(), Some(m)).unwrap();
        let out = run(&inst, PolicyKind::Beta, &RevelationModel::Exact).unwrap();
        // Job 1 opens at 3, reaches its α-point at 3.4 before job 2 arrives,
        // so it completes at 4; job 2 runs 4..5.
        assert_eq!(out.completion_times[&1], rat(4, 1));
        assert_eq!(out.completion_times[&2], rat(5, 1));
    }

    #[test]
    fn arrival_triggers_preemption_at_alpha_point() {
        let m = PredictionModel::new(rat(1, 2), rat(0, 1), rat(0, 1)).unwrap();
        let jobs = vec![
            Job::new(1, JobType::NonUrgent, Prediction::Label(JobType::NonUrgent)),
            Job::new(2, JobType::Urgent, Prediction::Label(JobType::Urgent)).released_at(rat(1, 5)),
        ];
        let inst = Instance::new(jobs, params(), Some(m)).unwrap();
        let out = run(&inst, PolicyKind::Beta, &RevelationModel::Exact).unwrap();
        assert_eq!(out.completion_times[&2], rat(7, 5));
        assert_eq!(out.completion_times[&1], rat(2, 1));
        assert_eq!(out.preemption_count, 1);
        assert_eq!(out.total_cost, rat(30, 1));
    }

    #[test]
    fn hybrid_rejects_probability_mode() {
        let jobs = vec![
            Job::new(1, JobType::NonUrgent, Prediction::Probability(rat(1, 2))),
            Job::new(2, JobType::Urgent, Prediction::Probability(rat(1, 2))),
        ];
        let inst = Instance::new(jobs, params(), None).unwrap();
        let err = run(&inst, PolicyKind::Hybrid, &RevelationModel::Exact).unwrap_err();
        assert!(matches!(err, EngineError::Policy { .. }));
        assert!(err.to_string().contains("alpha_reveal"));
    }

    #[test]
    fn probabilistic_revelation_is_seeded() {
        let m = PredictionModel::new(rat(3, 10), rat(1, 10), rat(1, 10)).unwrap();
        let inst = crate::domain::sample_instance(20, &m, &params(), 3).unwrap();
        let rev = RevelationModel::Probabilistic(crate::policies::ThetaDistribution { seed: 11, ..Default::default() });
        let a = run(&inst, PolicyKind::ModifiedBeta, &rev).unwrap();
        let b = run(&inst, PolicyKind::ModifiedBeta, &rev).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.completion_times.len(), 20);
    }
}
