//! Builds the Puck-Slide parameterized skill: optimize one DMP strike per
//! sampled goal, then store the solutions as KNN exemplars.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envsim::{rollout_puck, task_error, PolicyParams, PuckSlideEnv, PUCK_THETA_LEN};
use crate::error::{Error, Result};
use crate::search::{pi2cma_step, SearchConfig, SearchDistribution};
use crate::skills::{fit_knn_skill, DmpParams, KnnSkill};
use crate::task::{Bounds, TaskParam};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PretrainConfig {
    pub n_goals: usize,
    /// Goals are drawn uniformly from this box.
    pub goal_region: Bounds,
    pub seed: u64,
    /// A goal counts as solved when the puck stops within this distance.
    pub tolerance: f64,
    pub max_updates: usize,
    pub samples_per_update: usize,
    pub temperature: f64,
    /// Initial exploration std of the forcing weights, goal offset and duration.
    pub weight_std: f64,
    pub goal_std: f64,
    pub duration_std: f64,
    /// Overshoot of the pusher goal past the contact point.
    pub overshoot: f64,
    pub k: usize,
    /// Minimum fraction of goals that must be solved.
    pub min_success: f64,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            n_goals: 25,
            goal_region: Bounds::new([-0.6, 0.9], [0.6, 2.1]).expect("valid bounds"),
            seed: 0,
            tolerance: 0.01,
            max_updates: 40,
            samples_per_update: 10,
            temperature: 10.0,
            weight_std: 2.0,
            goal_std: 0.01,
            duration_std: 0.02,
            overshoot: 0.1,
            k: 3,
            min_success: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalReport {
    pub goal: Vec<f64>,
    pub error: f64,
    pub updates: usize,
    pub solved: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PretrainReport {
    pub skill: KnnSkill,
    pub goals: Vec<GoalReport>,
    /// Sampled goals off the table, skipped.
    pub excluded: Vec<Vec<f64>>,
    /// Fewer exemplars than neighbours: the skill cannot interpolate.
    pub degenerate: bool,
}

impl PretrainReport {
    pub fn solved(&self) -> usize {
        self.goals.iter().filter(|g| g.solved).count()
    }
}

fn theta_bounds(env: &PuckSlideEnv) -> Bounds {
    let t = &env.table_bounds;
    let span = (t.hi[0] - t.lo[0]).max(t.hi[1] - t.lo[1]);
    let mut lo = vec![-1000.0; PUCK_THETA_LEN];
    let mut hi = vec![1000.0; PUCK_THETA_LEN];
    lo[10] = -span;
    lo[11] = -span;
    hi[10] = span;
    hi[11] = span;
    lo[12] = 0.05;
    hi[12] = 10.0;
    Bounds::new(lo, hi).expect("valid bounds")
}

fn puck_error(env: &PuckSlideEnv, theta: &PolicyParams, goal: &TaskParam) -> Result<f64> {
    let traj = rollout_puck(env, theta)?;
    Ok(match traj.outcome.observed() {
        Some(o) => task_error(&o, goal)?,
        None => 2.0 * env.table_bounds.diagonal(),
    })
}

/// Initial strike for `goal`: a straight push through the point of the puck
/// opposite the goal, so the contact normal points at the goal, with the
/// duration bisected until the slide length matches.
pub fn strike_guess(env: &PuckSlideEnv, goal: &[f64], overshoot: f64) -> Option<PolicyParams> {
    let c = env.puck_start;
    let (gx, gy) = (goal[0] - c[0], goal[1] - c[1]);
    let dist = (gx * gx + gy * gy).sqrt();
    if dist <= 0.0 {
        return None;
    }
    let u = [gx / dist, gy / dist];
    let q = [c[0] - env.contact_radius * u[0], c[1] - env.contact_radius * u[1]];
    let p = env.pusher_start;
    let (wx, wy) = (q[0] - p[0], q[1] - p[1]);
    let wn = (wx * wx + wy * wy).sqrt();
    if wn <= 0.0 || (wx * u[0] + wy * u[1]) <= 0.0 {
        return None;
    }
    let w = [wx / wn, wy / wn];
    let offset = [wx + overshoot * w[0], wy + overshoot * w[1]];
    let theta_for = |duration: f64| {
        let params = DmpParams { weights: [vec![0.0; env.dmp.n_basis], vec![0.0; env.dmp.n_basis]], goal: [p[0] + offset[0], p[1] + offset[1]], duration };
        params.to_theta(p)
    };
    // Travel along u; shorter durations strike harder.
    let travel = |duration: f64| -> f64 {
        match rollout_puck(env, &theta_for(duration)).ok().and_then(|t| t.outcome.observed()) {
            Some(o) => (o.0[0] - c[0]) * u[0] + (o.0[1] - c[1]) * u[1],
            None => 0.0,
        }
    };
    let (mut fast, mut slow) = (0.05f64.ln(), 5.0f64.ln());
    for _ in 0..40 {
        let mid = 0.5 * (fast + slow);
        if travel(mid.exp()) > dist {
            fast = mid;
        } else {
            slow = mid;
        }
    }
    Some(theta_for((0.5 * (fast + slow)).exp()))
}

/// Solves one goal: heuristic strike, then PI²-CMA over all 13 parameters
/// until the puck stops within `tolerance`.
pub fn solve_goal(env: &PuckSlideEnv, goal: &TaskParam, cfg: &PretrainConfig, seed: u64) -> Result<(PolicyParams, GoalReport)> {
    let bounds = theta_bounds(env);
    let init = strike_guess(env, &goal.0, cfg.overshoot)
        .unwrap_or_else(|| PolicyParams::new(bounds.clip(&[vec![0.0; 10], vec![0.0, 0.4, 0.5]].concat())));
    let mut best = (puck_error(env, &init, goal)?, init.clone());
    let mut std = vec![cfg.weight_std; 10];
    std.extend([cfg.goal_std, cfg.goal_std, cfg.duration_std]);
    let cov = DMatrix::from_diagonal(&DVector::from_iterator(PUCK_THETA_LEN, std.iter().map(|s| s * s)));
    let mut dist = SearchDistribution::new(&init.0, cov)?;
    let search = SearchConfig {
        samples_per_update: cfg.samples_per_update,
        elites: cfg.samples_per_update,
        temperature: cfg.temperature,
        variance_floor: 1e-10,
        max_updates: cfg.max_updates,
        epsilon: cfg.tolerance,
        init_std_fraction: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut updates = 0;
    while best.0 >= cfg.tolerance && updates < cfg.max_updates {
        let mut objective = |tau: &TaskParam| -> Result<f64> {
            let theta = PolicyParams(tau.0.clone());
            let e = puck_error(env, &theta, goal)?;
            if e < best.0 {
                best = (e, theta);
            }
            Ok(-e)
        };
        dist = pi2cma_step(&dist, &mut objective, &search, Some(&bounds), &mut rng)?.0;
        updates += 1;
        let mean = PolicyParams(dist.mean.iter().copied().collect());
        let e = puck_error(env, &mean, goal)?;
        if e < best.0 {
            best = (e, mean);
        }
    }
    let report = GoalReport { goal: goal.0.clone(), error: best.0, updates, solved: best.0 < cfg.tolerance };
    Ok((best.1, report))
}

/// Samples `n_goals` goals, solves each, and fits a KNN skill on the solved
/// ones. Fails if fewer than `min_success` of the on-table goals are solved.
pub fn pretrain_puck_skill(env: &PuckSlideEnv, cfg: &PretrainConfig) -> Result<PretrainReport> {
    env.validate()?;
    if cfg.n_goals == 0 || cfg.k == 0 || cfg.goal_region.dim() != 2 {
        return Err(Error::Config("pre-training needs n_goals >= 1, k >= 1 and a 2-D goal region".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sampled: Vec<TaskParam> = (0..cfg.n_goals).map(|_| cfg.goal_region.sample(&mut rng)).collect();
    let (goals, excluded): (Vec<_>, Vec<_>) =
        sampled.into_iter().partition(|g| env.table_bounds.contains([g.0[0], g.0[1]]));
    for g in &excluded {
        log::warn!("goal {:?} lies outside the table and is skipped", g.0);
    }
    let solved: Vec<(PolicyParams, GoalReport)> = goals
        .par_iter()
        .enumerate()
        .map(|(i, g)| solve_goal(env, g, cfg, cfg.seed.wrapping_add(1 + i as u64)))
        .collect::<Result<_>>()?;
    let attempted = solved.len();
    let reports: Vec<GoalReport> = solved.iter().map(|(_, r)| r.clone()).collect();
    for r in reports.iter().filter(|r| !r.solved) {
        log::warn!("goal {:?} not solved (error {:.4} after {} updates)", r.goal, r.error, r.updates);
    }
    let exemplars: Vec<(TaskParam, PolicyParams)> =
        solved.into_iter().filter(|(_, r)| r.solved).map(|(theta, r)| (TaskParam(r.goal), theta)).collect();
    let ok = exemplars.len();
    if attempted == 0 || (ok as f64) < cfg.min_success * attempted as f64 || ok == 0 {
        return Err(Error::PretrainFailed { succeeded: ok, attempted, required: 100.0 * cfg.min_success });
    }
    let degenerate = ok < cfg.k;
    let skill = fit_knn_skill(exemplars, cfg.k.min(ok))?;
    Ok(PretrainReport { skill, goals: reports, excluded: excluded.into_iter().map(|g| g.0).collect(), degenerate })
}
