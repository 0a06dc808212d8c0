//! Parameterized skills: maps from task parameters to policy parameters.

pub mod dmp;
pub mod knn;

pub use dmp::{execute_dmp, DmpConfig, DmpParams};
pub use knn::{fit_knn_skill, knn_predict, KnnSkill};

use crate::envsim::PolicyParams;
use crate::error::{Error, Result};
use crate::task::TaskParam;

/// Closed-form Ball-Throw skill for `g = 10`, `wall_x = 1`:
/// `[t, y] -> [1/t, 5t + y/t]`.
pub fn ball_skill(tau: &TaskParam) -> Result<PolicyParams> {
    ball_skill_for(tau, 10.0, 1.0)
}

/// Ball-Throw skill for arbitrary gravity and wall distance. Reaching the
/// wall at time `t` needs `v_x = wall_x / t`; hitting height `y` there needs
/// `v_y = y/t + g t / 2`.
pub fn ball_skill_for(tau: &TaskParam, gravity: f64, wall_x: f64) -> Result<PolicyParams> {
    if tau.dim() != 2 {
        return Err(Error::dims(2, tau.dim()));
    }
    let (t_goal, y_goal) = (tau.0[0], tau.0[1]);
    if !(t_goal > 0.0) || !t_goal.is_finite() || !y_goal.is_finite() {
        return Err(Error::Domain(format!("t_goal must be positive and finite, got {t_goal}")));
    }
    Ok(PolicyParams(vec![wall_x / t_goal, 0.5 * gravity * t_goal + y_goal / t_goal]))
}
