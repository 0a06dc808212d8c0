//! Seeded head-to-head runs of feedback-driven search against the reward
//! baselines.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asg::Grounding;
use crate::envsim::Trajectory;
use crate::error::Result;
use crate::search::{
    run_asg_search, run_reward_search, Algorithm, AsgSearchConfig, OracleFeedback, Reward, SearchConfig,
    SearchDistribution, SearchTrace,
};
use crate::task::TaskParam;
use crate::tasks::SkillTask;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Asg,
    Pi2Cma,
    Cem,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Asg => "asg",
            Method::Pi2Cma => "pi2cma",
            Method::Cem => "cem",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Asg => "ASG",
            Method::Pi2Cma => "PI2-CMA",
            Method::Cem => "CEM",
        }
    }
}

impl From<Algorithm> for Method {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Pi2Cma => Method::Pi2Cma,
            Algorithm::Cem => Method::Cem,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub method: Method,
    pub target: Vec<f64>,
    pub start: Vec<f64>,
    pub episodes_to_converge: usize,
    pub converged: bool,
    pub final_error: f64,
    /// Error of every episode in order.
    pub error_curve: Vec<f64>,
}

impl TrialResult {
    fn from_trace(trial: usize, seed: u64, method: Method, target: &TaskParam, start: &TaskParam, t: SearchTrace) -> Self {
        TrialResult {
            trial,
            seed,
            method,
            target: target.0.clone(),
            start: start.0.clone(),
            episodes_to_converge: t.total_episodes,
            converged: t.converged,
            final_error: t.final_error,
            error_curve: t.records.iter().map(|r| -r.objective).collect(),
        }
    }
}

/// Settings for one comparison run; the task and grounding are supplied
/// separately.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonSpec {
    pub seeds: Vec<u64>,
    pub baselines: Vec<Algorithm>,
    pub search: SearchConfig,
    pub asg: AsgSearchConfig,
    /// Targets are drawn from the central `target_interior` fraction of `T`.
    pub target_interior: f64,
    /// Redraw `tau_0` while its outcome is already within `epsilon` of the
    /// target.
    pub nontrivial_starts: bool,
}

/// Draws before giving up on a start outside the convergence radius.
const START_DRAWS: usize = 1000;

/// Everything one trial produces: ASG first, then each baseline.
pub type TrialSet = Vec<TrialResult>;

/// Runs one trial: draws `tau*` from the interior of `T` and `tau_0`
/// uniformly from `T` (optionally away from `tau*`), then runs ASG with oracle feedback and every baseline
/// from the same `tau_0`. ASG sees only feedback and the judge; baselines see
/// only the reward.
pub fn run_trial(
    task: &dyn SkillTask,
    grounding: &dyn Grounding,
    spec: &ComparisonSpec,
    trial: usize,
) -> Result<TrialSet> {
    let seed = spec.seeds[trial];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = task.space();
    let target = space.interior(spec.target_interior).sample(&mut rng);
    let mut start = space.sample(&mut rng);
    if spec.nontrivial_starts {
        let mut draws = 1;
        while task.outcome_error(&task.execute(&start)?, &target) < spec.asg.epsilon {
            if draws == START_DRAWS {
                log::warn!("trial {trial}: no start outside the convergence radius after {draws} draws");
                break;
            }
            start = space.sample(&mut rng);
            draws += 1;
        }
    }

    let mut out = Vec::with_capacity(1 + spec.baselines.len());
    let mut oracle = OracleFeedback::new(task, target.clone());
    let judge = |t: &Trajectory| task.outcome_error(t, &target);
    let trace = run_asg_search(task, grounding, &mut oracle, Some(&judge), start.clone(), &spec.asg)?;
    out.push(TrialResult::from_trace(trial, seed, Method::Asg, &target, &start, trace));

    for (i, alg) in spec.baselines.iter().enumerate() {
        let mut search_rng = ChaCha8Rng::seed_from_u64(seed);
        search_rng.set_stream(1 + i as u64);
        let reward = Reward::new(task, target.clone());
        let init = SearchDistribution::for_space(&start.0, space, spec.search.init_std_fraction);
        let trace = run_reward_search(task, &reward, init, &spec.search, *alg, &mut search_rng)?;
        out.push(TrialResult::from_trace(trial, seed, (*alg).into(), &target, &start, trace));
    }
    Ok(out)
}

/// All trials in parallel, reduced in trial order.
pub fn run_trials(task: &dyn SkillTask, grounding: &(dyn Grounding + Sync), spec: &ComparisonSpec) -> Result<Vec<TrialSet>> {
    (0..spec.seeds.len()).into_par_iter().map(|i| run_trial(task, grounding, spec, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub trials: usize,
    pub converged: usize,
    pub not_converged: usize,
    /// Mean over converged trials only (NaN if none converged).
    pub mean_converged: f64,
    /// Mean over all trials, non-converged trials counted at the episode cap.
    pub mean_imputed: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub methods: Vec<MethodSummary>,
    /// Per baseline: mean baseline episodes divided by mean ASG episodes over
    /// trials where both converged.
    pub adverb_worth: Vec<(Method, f64)>,
}

impl ComparisonSummary {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }

    pub fn worth(&self, m: Method) -> Option<f64> {
        self.adverb_worth.iter().find(|(b, _)| *b == m).map(|(_, v)| *v)
    }

    /// Aligned text table, one row per method.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<10} {:>7} {:>10} {:>14} {:>12} {:>8} {:>14}",
            "Method", "Trials", "Converged", "Mean(conv.)", "Mean(imp.)", "Median", "IQR"
        );
        for m in &self.methods {
            let _ = writeln!(
                s,
                "{:<10} {:>7} {:>10} {:>14.2} {:>12.2} {:>8.1} {:>14}",
                m.method.label(),
                m.trials,
                m.converged,
                m.mean_converged,
                m.mean_imputed,
                m.median,
                format!("{:.1}-{:.1}", m.q1, m.q3)
            );
        }
        for (m, w) in &self.adverb_worth {
            let _ = writeln!(s, "Episodes per adverb vs {}: {:.2}", m.label(), w);
        }
        s
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Episode cap a non-converged run is charged.
pub fn episode_cap(method: Method, spec: &ComparisonSpec) -> usize {
    match method {
        Method::Asg => spec.asg.max_episodes,
        _ => spec.search.max_updates * spec.search.samples_per_update,
    }
}

pub fn summarize(results: &[TrialSet], spec: &ComparisonSpec) -> ComparisonSummary {
    let methods: Vec<Method> =
        std::iter::once(Method::Asg).chain(spec.baselines.iter().map(|a| Method::from(*a))).collect();
    let pick = |m: Method| results.iter().flat_map(move |set| set.iter().filter(move |r| r.method == m));
    let summaries = methods
        .iter()
        .map(|&m| {
            let cap = episode_cap(m, spec) as f64;
            let conv: Vec<f64> = pick(m).filter(|r| r.converged).map(|r| r.episodes_to_converge as f64).collect();
            let mut imputed: Vec<f64> =
                pick(m).map(|r| if r.converged { r.episodes_to_converge as f64 } else { cap }).collect();
            imputed.sort_by(f64::total_cmp);
            MethodSummary {
                method: m,
                trials: imputed.len(),
                converged: conv.len(),
                not_converged: imputed.len() - conv.len(),
                mean_converged: mean(&conv),
                mean_imputed: mean(&imputed),
                median: quantile(&imputed, 0.5),
                q1: quantile(&imputed, 0.25),
                q3: quantile(&imputed, 0.75),
            }
        })
        .collect();
    let adverb_worth = methods[1..]
        .iter()
        .map(|&b| {
            let (mut base, mut asg) = (Vec::new(), Vec::new());
            for set in results {
                let a = set.iter().find(|r| r.method == Method::Asg);
                let r = set.iter().find(|r| r.method == b);
                if let (Some(a), Some(r)) = (a, r) {
                    if a.converged && r.converged {
                        asg.push(a.episodes_to_converge as f64);
                        base.push(r.episodes_to_converge as f64);
                    }
                }
            }
            (b, mean(&base) / mean(&asg))
        })
        .collect();
    ComparisonSummary { methods: summaries, adverb_worth }
}

/// One row per (trial, method).
pub fn trials_csv(results: &[TrialSet]) -> String {
    let mut s = String::from("trial,seed,method,converged,episodes,final_error,target,start\n");
    for r in results.iter().flatten() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.trial,
            r.seed,
            r.method.as_str(),
            r.converged,
            r.episodes_to_converge,
            r.final_error,
            join(&r.target),
            join(&r.start)
        );
    }
    s
}

pub fn summary_csv(summary: &ComparisonSummary) -> String {
    let mut s = String::from("method,trials,converged,not_converged,mean_converged,mean_imputed,median,q1,q3,adverb_worth\n");
    for m in &summary.methods {
        let worth = summary.worth(m.method).map_or(String::new(), |w| w.to_string());
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            m.method.as_str(),
            m.trials,
            m.converged,
            m.not_converged,
            m.mean_converged,
            m.mean_imputed,
            m.median,
            m.q1,
            m.q3,
            worth
        );
    }
    s
}

/// `episode,error` rows for one run.
pub fn curve_csv(r: &TrialResult) -> String {
    let mut s = String::from("episode,error\n");
    for (i, e) in r.error_curve.iter().enumerate() {
        let _ = writeln!(s, "{},{}", i + 1, e);
    }
    s
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asg::ZeroGrounding;
    use crate::tasks::BallThrowTask;

    fn spec(n: usize) -> ComparisonSpec {
        ComparisonSpec {
            seeds: (0..n as u64).collect(),
            baselines: vec![Algorithm::Pi2Cma],
            search: SearchConfig { max_updates: 20, ..Default::default() },
            asg: AsgSearchConfig { max_episodes: 15, ..Default::default() },
            target_interior: 0.8,
            nontrivial_starts: true,
        }
    }

    #[test]
    fn zero_grounding_hits_the_cap() {
        let task = BallThrowTask::default();
        let spec = spec(6);
        let results = run_trials(&task, &ZeroGrounding, &spec).unwrap();
        let s = summarize(&results, &spec);
        let asg = s.method(Method::Asg).unwrap();
        for set in &results {
            assert_eq!(set[0].episodes_to_converge, 15, "{:?}", set[0]);
        }
        assert_eq!((asg.converged, asg.not_converged), (0, 6));
    }

    #[test]
    fn starts_lie_outside_the_radius() {
        let task = BallThrowTask::default();
        let mut spec = spec(30);
        spec.asg.epsilon = 8.0;
        spec.search.epsilon = 8.0;
        for set in run_trials(&task, &ZeroGrounding, &spec).unwrap() {
            let r = &set[0];
            let traj = task.execute(&TaskParam(r.start.clone())).unwrap();
            assert!(task.outcome_error(&traj, &TaskParam(r.target.clone())) >= 8.0, "{r:?}");
        }
    }

    #[test]
    fn trials_are_reproducible_and_ordered() {
        let task = BallThrowTask::default();
        let spec = spec(4);
        let a = run_trials(&task, &ZeroGrounding, &spec).unwrap();
        let b = run_trials(&task, &ZeroGrounding, &spec).unwrap();
        assert_eq!(trials_csv(&a), trials_csv(&b));
        assert!(a.iter().enumerate().all(|(i, set)| set.iter().all(|r| r.trial == i)));
    }

    #[test]
    fn curve_length_matches_episodes() {
        let task = BallThrowTask::default();
        let spec = spec(3);
        for r in run_trials(&task, &ZeroGrounding, &spec).unwrap().iter().flatten() {
            assert_eq!(r.error_curve.len(), r.episodes_to_converge);
        }
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert!(quantile(&[], 0.5).is_nan());
    }
}
