//! Episodic direct policy search over task parameters (PI²-CMA and CEM) and
//! the reward-free grounding-driven search.
//!
//! Both reward-driven methods share one loop: draw `K` samples from a
//! Gaussian, score them, turn scores into weights, and refit the Gaussian
//! from the weighted samples. They differ only in how weights are assigned
//! and where the covariance is centered.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::adverbs::AdverbEmbedding;
use crate::asg::Grounding;
use crate::envsim::Trajectory;
use crate::error::{Error, Result};
use crate::task::{Bounds, TaskParam};
use crate::tasks::SkillTask;

/// Guards the min-max normalization of objective values.
const OBJECTIVE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchDistribution {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl SearchDistribution {
    pub fn new(mean: &[f64], cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::dims(mean.len(), cov.nrows()));
        }
        Ok(SearchDistribution { mean: DVector::from_column_slice(mean), cov })
    }

    /// Mean at `mean` with std `fraction * range` along each axis of `space`.
    pub fn for_space(mean: &[f64], space: &Bounds, fraction: f64) -> Self {
        let diag = DVector::from_fn(space.dim(), |i, _| (space.range(i) * fraction).powi(2));
        SearchDistribution { mean: DVector::from_column_slice(mean), cov: DMatrix::from_diagonal(&diag) }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean_param(&self) -> TaskParam {
        TaskParam(self.mean.iter().copied().collect())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let chol = self
            .cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("sampling covariance is not positive definite".into()))?;
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        Ok(&self.mean + chol.l() * z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Samples (episodes) per distribution update, `K`.
    pub samples_per_update: usize,
    /// Elite count `K_e` used by CEM.
    pub elites: usize,
    /// PI²-CMA weighting temperature `h`.
    pub temperature: f64,
    pub variance_floor: f64,
    pub max_updates: usize,
    /// Convergence radius in task units.
    pub epsilon: f64,
    /// Initial search std per axis as a fraction of that axis' range.
    pub init_std_fraction: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            samples_per_update: 10,
            elites: 5,
            temperature: 10.0,
            variance_floor: 1e-6,
            max_updates: 100,
            epsilon: 0.5,
            init_std_fraction: 0.25,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.samples_per_update >= 1
            && self.elites >= 1
            && self.elites <= self.samples_per_update
            && self.temperature > 0.0
            && self.variance_floor > 0.0
            && self.epsilon > 0.0
            && self.init_std_fraction >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid search config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Pi2Cma,
    Cem,
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_lowercase().replace(['-', '_'], "").as_str() {
            "pi2cma" => Ok(Algorithm::Pi2Cma),
            "cem" => Ok(Algorithm::Cem),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Task parameter executed in this episode.
    pub tau: Vec<f64>,
    /// Objective value `J`; reward searches use `J = -error`.
    pub objective: f64,
    /// Distribution mean (or current parameter) after this episode's update.
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub records: Vec<EpisodeRecord>,
    /// Error of the current parameter before each update, initial check first.
    pub checkpoint_errors: Vec<f64>,
    pub total_episodes: usize,
    pub converged: bool,
    pub final_tau: Vec<f64>,
    pub final_error: f64,
}

impl SearchTrace {
    /// `episode,error,mean_0,...` rows, `error = -objective`.
    pub fn to_csv(&self) -> String {
        let dim = self.final_tau.len();
        let mut out = String::from("episode,error");
        for i in 0..dim {
            out.push_str(&format!(",mean_{i}"));
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!("{},{}", r.episode, -r.objective));
            for m in &r.mean {
                out.push_str(&format!(",{m}"));
            }
            out.push('\n');
        }
        out
    }
}

/// PI²-CMA weights `exp(h (J - J_min) / (J_max - J_min + eps))`, normalized.
/// Equal objectives give uniform weights.
pub fn pi2_weights(objectives: &[f64], temperature: f64) -> Vec<f64> {
    let min = objectives.iter().copied().fold(f64::INFINITY, f64::min);
    let max = objectives.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let raw: Vec<f64> = if range > 0.0 {
        objectives.iter().map(|j| (temperature * (j - min) / (range + OBJECTIVE_EPS)).exp()).collect()
    } else {
        vec![1.0; objectives.len()]
    };
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// CEM weights: `1 / K_e` on the `K_e` best samples (ties broken by index).
pub fn elite_weights(objectives: &[f64], elites: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..objectives.len()).collect();
    order.sort_by(|&a, &b| objectives[b].total_cmp(&objectives[a]).then(a.cmp(&b)));
    let ke = elites.clamp(1, objectives.len());
    let mut w = vec![0.0; objectives.len()];
    for &i in &order[..ke] {
        w[i] = 1.0 / ke as f64;
    }
    w
}

/// Where the refitted covariance is centered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovCenter {
    /// Around the mean the samples were drawn from.
    PreviousMean,
    /// Around the refitted mean.
    NewMean,
}

/// Refits a distribution from weighted samples and floors its eigenvalues.
pub fn refit(
    previous: &SearchDistribution,
    samples: &[DVector<f64>],
    weights: &[f64],
    center: CovCenter,
    variance_floor: f64,
) -> SearchDistribution {
    let dim = previous.dim();
    let mut mean = DVector::zeros(dim);
    for (s, w) in samples.iter().zip(weights) {
        mean += s * *w;
    }
    let c = match center {
        CovCenter::PreviousMean => previous.mean.clone(),
        CovCenter::NewMean => mean.clone(),
    };
    let mut cov = DMatrix::zeros(dim, dim);
    for (s, w) in samples.iter().zip(weights) {
        let d = s - &c;
        cov += (&d * d.transpose()) * *w;
    }
    SearchDistribution { mean, cov: floor_covariance(cov, variance_floor) }
}

/// Symmetrizes `cov` and clamps its eigenvalues to at least `floor`.
pub fn floor_covariance(cov: DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = (&cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let clamped = eig.eigenvalues.map(|v| if v.is_finite() { v.max(floor) } else { floor });
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose();
    (&rebuilt + rebuilt.transpose()) * 0.5
}

fn draw_and_score<R: Rng + ?Sized>(
    dist: &SearchDistribution,
    objective: &mut dyn FnMut(&TaskParam) -> Result<f64>,
    cfg: &SearchConfig,
    bounds: Option<&Bounds>,
    rng: &mut R,
) -> Result<(Vec<DVector<f64>>, Vec<f64>)> {
    let mut samples = Vec::with_capacity(cfg.samples_per_update);
    let mut values = Vec::with_capacity(cfg.samples_per_update);
    for _ in 0..cfg.samples_per_update {
        let mut s = dist.sample(rng)?;
        if let Some(b) = bounds {
            s = DVector::from_vec(b.clip(s.as_slice()));
        }
        let j = objective(&TaskParam(s.iter().copied().collect()))?;
        if !j.is_finite() {
            return Err(Error::Numerical(format!("objective returned {j}")));
        }
        samples.push(s);
        values.push(j);
    }
    Ok((samples, values))
}

fn records(samples: &[DVector<f64>], values: &[f64], mean: &DVector<f64>) -> Vec<EpisodeRecord> {
    samples
        .iter()
        .zip(values)
        .enumerate()
        .map(|(i, (s, j))| EpisodeRecord {
            episode: i,
            tau: s.iter().copied().collect(),
            objective: *j,
            mean: mean.iter().copied().collect(),
        })
        .collect()
}

/// One PI²-CMA update: `K` samples, soft-max weights on normalized
/// objectives (higher is better), probability-weighted mean, covariance
/// around the previous mean. Samples are clipped to `bounds` when given.
pub fn pi2cma_step<R: Rng + ?Sized>(
    dist: &SearchDistribution,
    objective: &mut dyn FnMut(&TaskParam) -> Result<f64>,
    cfg: &SearchConfig,
    bounds: Option<&Bounds>,
    rng: &mut R,
) -> Result<(SearchDistribution, Vec<EpisodeRecord>)> {
    let (samples, values) = draw_and_score(dist, objective, cfg, bounds, rng)?;
    let w = pi2_weights(&values, cfg.temperature);
    let next = refit(dist, &samples, &w, CovCenter::PreviousMean, cfg.variance_floor);
    let recs = records(&samples, &values, &next.mean);
    Ok((next, recs))
}

/// One CEM update: uniform weights on the `K_e` elites, mean refit to them,
/// covariance of the elites around the previous mean. Centering on the new
/// mean collapses the distribution before it reaches the optimum.
pub fn cem_step<R: Rng + ?Sized>(
    dist: &SearchDistribution,
    objective: &mut dyn FnMut(&TaskParam) -> Result<f64>,
    cfg: &SearchConfig,
    bounds: Option<&Bounds>,
    rng: &mut R,
) -> Result<(SearchDistribution, Vec<EpisodeRecord>)> {
    let (samples, values) = draw_and_score(dist, objective, cfg, bounds, rng)?;
    let w = elite_weights(&values, cfg.elites);
    let next = refit(dist, &samples, &w, CovCenter::PreviousMean, cfg.variance_floor);
    let recs = records(&samples, &values, &next.mean);
    Ok((next, recs))
}

/// Handle to the environment's reward for one target. Only reward-driven
/// searches receive it.
pub struct Reward<'a> {
    task: &'a dyn SkillTask,
    target: TaskParam,
}

impl<'a> Reward<'a> {
    pub fn new(task: &'a dyn SkillTask, target: TaskParam) -> Self {
        Reward { task, target }
    }

    /// `R(tau) = -|outcome(tau) - tau*|`, costing one rollout.
    pub fn evaluate(&self, tau: &TaskParam) -> Result<f64> {
        let traj = self.task.execute(tau)?;
        Ok(-self.task.outcome_error(&traj, &self.target))
    }
}

/// Runs PI²-CMA or CEM over the task space until the distribution mean's
/// outcome lies within `epsilon` of the target or `max_updates` is reached.
///
/// Checking the mean is bookkeeping and is not counted; every sampled
/// parameter costs one episode.
pub fn run_reward_search<R: Rng + ?Sized>(
    task: &dyn SkillTask,
    reward: &Reward<'_>,
    init: SearchDistribution,
    cfg: &SearchConfig,
    algorithm: Algorithm,
    rng: &mut R,
) -> Result<SearchTrace> {
    cfg.validate()?;
    let space = task.space().clone();
    let mut dist = init;
    let mut all = Vec::new();
    let mut checkpoints = Vec::new();
    let mut updates = 0;
    let mut objective = |tau: &TaskParam| reward.evaluate(tau);
    loop {
        let current = space.clip_param(&dist.mean_param());
        let err = -reward.evaluate(&current)?;
        checkpoints.push(err);
        if err < cfg.epsilon || updates >= cfg.max_updates {
            let converged = err < cfg.epsilon;
            return Ok(SearchTrace {
                total_episodes: all.len(),
                records: all,
                checkpoint_errors: checkpoints,
                converged,
                final_tau: current.0,
                final_error: err,
            });
        }
        let (next, recs) = match algorithm {
            Algorithm::Pi2Cma => pi2cma_step(&dist, &mut objective, cfg, Some(&space), rng)?,
            Algorithm::Cem => cem_step(&dist, &mut objective, cfg, Some(&space), rng)?,
        };
        let offset = all.len();
        all.extend(recs.into_iter().map(|r| EpisodeRecord { episode: offset + r.episode, ..r }));
        dist = next;
        updates += 1;
    }
}

/// Source of adverb feedback on the latest execution: a synthetic oracle or
/// a person.
pub trait FeedbackSource {
    fn feedback(&mut self, latest: &Trajectory) -> Result<AdverbEmbedding>;
}

/// Oracle feedback: labels the change from the observed outcome to the
/// hidden target with the task's labeller.
pub struct OracleFeedback<'a> {
    task: &'a dyn SkillTask,
    target: TaskParam,
}

impl<'a> OracleFeedback<'a> {
    pub fn new(task: &'a dyn SkillTask, target: TaskParam) -> Self {
        OracleFeedback { task, target }
    }
}

impl FeedbackSource for OracleFeedback<'_> {
    fn feedback(&mut self, latest: &Trajectory) -> Result<AdverbEmbedding> {
        let observed = latest
            .outcome
            .observed()
            .ok_or_else(|| Error::InvalidParams("episode produced no observable outcome".into()))?;
        let grades = self.task.label(&observed, &self.target);
        Ok(AdverbEmbedding::from_grades(&grades, self.task.axes().max_magnitude))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AsgSearchConfig {
    pub epsilon: f64,
    /// Maximum number of episodes (feedback rounds).
    pub max_episodes: usize,
    pub step_scale: f64,
}

impl Default for AsgSearchConfig {
    fn default() -> Self {
        AsgSearchConfig { epsilon: 0.5, max_episodes: 100, step_scale: 1.0 }
    }
}

/// Feedback-driven search: execute at `tau_t`, ask for an adverb phrase,
/// and move to `clip(tau_t + step_scale * grounding(l, tau_t))`.
///
/// Stops when the judge reports an error below `epsilon`, when the feedback
/// is the zero phrase, or after `max_episodes`. The judge only decides
/// termination and bookkeeping; it never informs the update. Without a judge
/// the zero phrase is the only way to converge.
pub fn run_asg_search(
    task: &dyn SkillTask,
    grounding: &dyn Grounding,
    feedback: &mut dyn FeedbackSource,
    judge: Option<&dyn Fn(&Trajectory) -> f64>,
    tau0: TaskParam,
    cfg: &AsgSearchConfig,
) -> Result<SearchTrace> {
    let space = task.space();
    let mut tau = space.clip_param(&tau0);
    let mut records = Vec::new();
    let mut checkpoints = Vec::new();
    loop {
        let traj = task.execute(&tau)?;
        let err = judge.map_or(f64::NAN, |j| j(&traj));
        let episode = records.len();
        checkpoints.push(err);
        let finish = |records: Vec<EpisodeRecord>, checkpoints: Vec<f64>, tau: TaskParam, converged: bool| SearchTrace {
            total_episodes: records.len(),
            records,
            checkpoint_errors: checkpoints,
            converged,
            final_tau: tau.0,
            final_error: err,
        };
        records.push(EpisodeRecord { episode, tau: tau.0.clone(), objective: -err, mean: tau.0.clone() });
        if err < cfg.epsilon {
            return Ok(finish(records, checkpoints, tau, true));
        }
        let l = feedback.feedback(&traj)?;
        if l.is_zero() {
            return Ok(finish(records, checkpoints, tau, judge.is_none()));
        }
        if records.len() >= cfg.max_episodes {
            return Ok(finish(records, checkpoints, tau, false));
        }
        let delta = grounding.adjustment(&tau, &l)?;
        let moved: Vec<f64> = tau.0.iter().zip(&delta).map(|(t, d)| t + cfg.step_scale * d).collect();
        tau = TaskParam(space.clip(&moved));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asg::ZeroGrounding;
    use crate::tasks::BallThrowTask;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sphere(tau: &TaskParam) -> Result<f64> {
        Ok(-tau.0.iter().map(|v| v * v).sum::<f64>())
    }

    fn iso(mean: &[f64], var: f64) -> SearchDistribution {
        SearchDistribution::new(mean, DMatrix::identity(mean.len(), mean.len()) * var).unwrap()
    }

    #[test]
    fn cem_elite_mean_example() {
        let prev = iso(&[0.0], 1.0);
        let samples: Vec<DVector<f64>> = [10.0, 20.0, 30.0, 40.0].iter().map(|v| DVector::from_element(1, *v)).collect();
        let w = elite_weights(&[3.0, 1.0, 4.0, 1.0], 2);
        let next = refit(&prev, &samples, &w, CovCenter::NewMean, 1e-6);
        assert_eq!(next.mean[0], 20.0); // mean of samples scored 4 and 3
    }

    #[test]
    fn cem_all_elites_is_plain_refit() {
        let prev = iso(&[0.0, 0.0], 1.0);
        let pts = [[1.0, 2.0], [3.0, -1.0], [0.0, 0.0], [2.0, 3.0]];
        let samples: Vec<DVector<f64>> = pts.iter().map(|p| DVector::from_column_slice(p)).collect();
        let w = elite_weights(&[5.0, 1.0, 2.0, 0.0], 4);
        let next = refit(&prev, &samples, &w, CovCenter::NewMean, 1e-9);
        assert!((next.mean[0] - 1.5).abs() < 1e-12 && (next.mean[1] - 1.0).abs() < 1e-12);
        let var_x = pts.iter().map(|p| (p[0] - 1.5f64).powi(2)).sum::<f64>() / 4.0;
        let cov_xy = pts.iter().map(|p| (p[0] - 1.5) * (p[1] - 1.0)).sum::<f64>() / 4.0;
        assert!((next.cov[(0, 0)] - var_x).abs() < 1e-12);
        assert!((next.cov[(0, 1)] - cov_xy).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_pin_the_mean() {
        let prev = iso(&[0.0, 0.0], 1e-6);
        let samples = vec![DVector::from_column_slice(&[2.0, -1.0]); 5];
        let w = pi2_weights(&[1.0, 1.0, 1.0, 1.0, 1.0], 10.0);
        assert!(w.iter().all(|v| (*v - 0.2).abs() < 1e-15));
        let next = refit(&prev, &samples, &w, CovCenter::NewMean, 1e-6);
        assert!((next.mean[0] - 2.0).abs() < 1e-12 && (next.mean[1] + 1.0).abs() < 1e-12);
        assert!((next.cov[(0, 0)] - 1e-6).abs() < 1e-15);
    }

    #[test]
    fn zero_temperature_weights_are_uniform() {
        let w = pi2_weights(&[1.0, 5.0, -3.0, 2.0], 1e-12);
        assert!(w.iter().all(|v| (v - 0.25).abs() < 1e-9));
    }

    #[test]
    fn weights_ignore_objective_offset() {
        let j = [0.3, -1.2, 4.0, 2.5, 2.5];
        let shifted: Vec<f64> = j.iter().map(|v| v + 1000.0).collect();
        let (a, b) = (pi2_weights(&j, 10.0), pi2_weights(&shifted, 10.0));
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
        assert_eq!(elite_weights(&j, 2), elite_weights(&shifted, 2));
    }

    #[test]
    fn non_finite_objective_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut bad = |_: &TaskParam| Ok(f64::NAN);
        let r = pi2cma_step(&iso(&[0.0], 1.0), &mut bad, &SearchConfig::default(), None, &mut rng);
        assert!(matches!(r, Err(Error::Numerical(_))));
    }

    /// Updates CEM needs to bring the sphere mean from (3, 3) to norm < 0.1.
    pub(crate) fn cem_sphere_updates(seed: u64, limit: usize) -> Option<usize> {
        let cfg = SearchConfig { samples_per_update: 20, elites: 5, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dist = iso(&[3.0, 3.0], 1.0);
        let mut obj = sphere;
        (1..=limit).find(|_| {
            dist = cem_step(&dist, &mut obj, &cfg, None, &mut rng).unwrap().0;
            dist.mean.norm() < 0.1
        })
    }

    #[test]
    fn cem_sphere_sanity() {
        let hits = (0..20).filter(|s| cem_sphere_updates(*s, 30).is_some()).count();
        assert!(hits >= 16, "{hits}/20 seeds reached the optimum");
    }

    #[test]
    fn step_records_k_episodes() {
        let cfg = SearchConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut calls = 0;
        let mut obj = |t: &TaskParam| {
            calls += 1;
            sphere(t)
        };
        let (_, recs) = pi2cma_step(&iso(&[1.0, 1.0], 0.5), &mut obj, &cfg, None, &mut rng).unwrap();
        assert_eq!(recs.len(), cfg.samples_per_update);
        assert_eq!(calls, cfg.samples_per_update);
    }

    #[test]
    fn huge_epsilon_converges_without_episodes() {
        let task = BallThrowTask::default();
        let target = TaskParam::new([2.0, 3.0]);
        let reward = Reward::new(&task, target);
        let cfg = SearchConfig { epsilon: 1e3, ..Default::default() };
        let init = SearchDistribution::for_space(&[1.0, -10.0], task.space(), 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = run_reward_search(&task, &reward, init, &cfg, Algorithm::Pi2Cma, &mut rng).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.total_episodes, 0);
    }

    #[test]
    fn unreachable_target_does_not_converge() {
        let task = BallThrowTask::default();
        let reward = Reward::new(&task, TaskParam::new([10.0, 100.0]));
        let cfg = SearchConfig { max_updates: 5, ..Default::default() };
        let init = SearchDistribution::for_space(&[1.0, 0.0], task.space(), 0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let trace = run_reward_search(&task, &reward, init, &cfg, Algorithm::Cem, &mut rng).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.total_episodes, 5 * cfg.samples_per_update);
    }

    struct Silent;
    impl FeedbackSource for Silent {
        fn feedback(&mut self, _: &Trajectory) -> Result<AdverbEmbedding> {
            Ok(AdverbEmbedding::zeros(2))
        }
    }

    #[test]
    fn zero_feedback_stops_after_one_episode() {
        let task = BallThrowTask::default();
        let trace = run_asg_search(&task, &ZeroGrounding, &mut Silent, None, TaskParam::new([1.0, 2.0]), &AsgSearchConfig::default()).unwrap();
        assert_eq!(trace.total_episodes, 1);
        assert_eq!(trace.final_tau, vec![1.0, 2.0]);
    }

    #[test]
    fn zero_grounding_never_moves() {
        let task = BallThrowTask::default();
        let target = TaskParam::new([3.0, 10.0]);
        let mut oracle = OracleFeedback::new(&task, target.clone());
        let judge = |t: &Trajectory| task.outcome_error(t, &target);
        let cfg = AsgSearchConfig { max_episodes: 12, ..Default::default() };
        let trace = run_asg_search(&task, &ZeroGrounding, &mut oracle, Some(&judge), TaskParam::new([1.0, -5.0]), &cfg).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.total_episodes, 12);
        assert!(trace.records.iter().all(|r| r.tau == vec![1.0, -5.0]));
    }
}
