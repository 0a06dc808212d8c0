//! Skill + environment bundles the searches and the harness operate on.

use serde::{Deserialize, Serialize};

use crate::adverbs::{oracle_label_ball_with, oracle_label_puck, AxisConfig, BandConfig, OracleVariant};
use crate::envsim::{rollout_ball, rollout_puck, task_error, BallThrowEnv, PolicyParams, PuckSlideEnv, Trajectory};
use crate::error::Result;
use crate::skills::{ball_skill_for, KnnSkill};
use crate::task::{Bounds, TaskParam};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    BallThrow,
    PuckSlide,
}

impl TaskKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TaskKind::BallThrow => "ball_throw",
            TaskKind::PuckSlide => "puck_slide",
        }
    }
}

impl std::str::FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "ball_throw" => Ok(TaskKind::BallThrow),
            "puck_slide" => Ok(TaskKind::PuckSlide),
            other => Err(format!("unknown task `{other}` (expected ball_throw or puck_slide)")),
        }
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A parameterized skill executing in its environment, plus the synthetic
/// labeller that stands in for a human observer.
pub trait SkillTask: Send + Sync {
    fn kind(&self) -> TaskKind;

    /// Identifier recorded in datasets and models trained for this skill.
    fn skill_id(&self) -> String;

    /// Task-parameter space `T`.
    fn space(&self) -> &Bounds;

    fn axes(&self) -> &AxisConfig;

    fn policy(&self, tau: &TaskParam) -> Result<PolicyParams>;

    fn rollout(&self, theta: &PolicyParams) -> Result<Trajectory>;

    fn execute(&self, tau: &TaskParam) -> Result<Trajectory> {
        self.rollout(&self.policy(tau)?)
    }

    /// Raw integer grades describing the observed change `from -> to`.
    fn label(&self, from: &TaskParam, to: &TaskParam) -> Vec<i32>;

    /// Error charged for an episode without an observable outcome.
    fn miss_penalty(&self) -> f64 {
        2.0 * self.space().diagonal()
    }

    /// Distance between what the episode produced and `target`.
    fn outcome_error(&self, traj: &Trajectory, target: &TaskParam) -> f64 {
        traj.outcome
            .observed()
            .and_then(|o| task_error(&o, target).ok())
            .unwrap_or_else(|| self.miss_penalty())
    }
}

#[derive(Debug, Clone)]
pub struct BallThrowTask {
    pub env: BallThrowEnv,
    pub space: Bounds,
    pub axes: AxisConfig,
    pub oracle: OracleVariant,
}

impl BallThrowTask {
    pub fn default_space() -> Bounds {
        Bounds::new([0.5, -15.0], [4.0, 15.0]).expect("valid bounds")
    }
}

impl Default for BallThrowTask {
    fn default() -> Self {
        BallThrowTask {
            env: BallThrowEnv::default(),
            space: Self::default_space(),
            axes: AxisConfig::ball_throw(),
            oracle: OracleVariant::Corrected,
        }
    }
}

impl SkillTask for BallThrowTask {
    fn kind(&self) -> TaskKind {
        TaskKind::BallThrow
    }

    fn skill_id(&self) -> String {
        format!("ball_throw:g={},wall={}", self.env.gravity, self.env.wall_x)
    }

    fn space(&self) -> &Bounds {
        &self.space
    }

    fn axes(&self) -> &AxisConfig {
        &self.axes
    }

    fn policy(&self, tau: &TaskParam) -> Result<PolicyParams> {
        ball_skill_for(tau, self.env.gravity, self.env.wall_x)
    }

    fn rollout(&self, theta: &PolicyParams) -> Result<Trajectory> {
        rollout_ball(&self.env, theta)
    }

    fn label(&self, from: &TaskParam, to: &TaskParam) -> Vec<i32> {
        oracle_label_ball_with(self.oracle, from, to).to_vec()
    }
}

#[derive(Debug, Clone)]
pub struct PuckSlideTask {
    pub env: PuckSlideEnv,
    pub skill: KnnSkill,
    /// Goal positions the skill is asked to reach.
    pub space: Bounds,
    pub axes: AxisConfig,
    pub bands: BandConfig,
}

impl PuckSlideTask {
    pub fn default_space() -> Bounds {
        Bounds::new([-0.5, 1.0], [0.5, 2.0]).expect("valid bounds")
    }

    pub fn new(env: PuckSlideEnv, skill: KnnSkill) -> Self {
        PuckSlideTask {
            env,
            skill,
            space: Self::default_space(),
            axes: AxisConfig::puck_slide(),
            bands: BandConfig::default(),
        }
    }
}

impl SkillTask for PuckSlideTask {
    fn kind(&self) -> TaskKind {
        TaskKind::PuckSlide
    }

    fn skill_id(&self) -> String {
        format!("puck_slide:{}", self.skill.fingerprint())
    }

    fn space(&self) -> &Bounds {
        &self.space
    }

    fn axes(&self) -> &AxisConfig {
        &self.axes
    }

    fn policy(&self, tau: &TaskParam) -> Result<PolicyParams> {
        self.skill.predict(tau)
    }

    fn rollout(&self, theta: &PolicyParams) -> Result<Trajectory> {
        rollout_puck(&self.env, theta)
    }

    fn label(&self, from: &TaskParam, to: &TaskParam) -> Vec<i32> {
        oracle_label_puck(from, to, &self.bands)
    }
}
