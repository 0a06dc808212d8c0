//! Deterministic episodic environments.
//!
//! Both environments are immutable after construction and every rollout is a
//! pure function of `(env, theta)`, so rollouts may run concurrently.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skills::dmp::{execute_dmp, DmpConfig, DmpParams};
use crate::task::TaskParam;

/// Low-level policy parameters consumed by an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolicyParams(pub Vec<f64>);

impl PolicyParams {
    pub fn new(values: impl Into<Vec<f64>>) -> Self {
        PolicyParams(values.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn check(&self, expected: usize) -> Result<()> {
        if self.0.len() != expected {
            return Err(Error::InvalidParams(format!(
                "expected {expected} policy parameters, got {}",
                self.0.len()
            )));
        }
        if let Some(v) = self.0.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("non-finite policy parameter {v}")));
        }
        Ok(())
    }
}

/// One time-stamped state of a rollout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub pos: [f64; 2],
    pub vel: [f64; 2],
}

/// How an episode ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    /// The task outcome was measured, in task-parameter units.
    Hit { measured: TaskParam },
    /// The episode hit its time cutoff before producing a measurement.
    Timeout { last: [f64; 2] },
    /// The pusher never touched the puck; the puck is still at `puck`.
    NoContact { puck: [f64; 2] },
}

impl Outcome {
    /// What an observer sees as the task outcome, if anything.
    pub fn observed(&self) -> Option<TaskParam> {
        match self {
            Outcome::Hit { measured } => Some(measured.clone()),
            Outcome::NoContact { puck } => Some(TaskParam(puck.to_vec())),
            Outcome::Timeout { .. } => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            Outcome::Hit { measured } => measured.is_finite(),
            Outcome::Timeout { last } => last.iter().all(|v| v.is_finite()),
            Outcome::NoContact { puck } => puck.iter().all(|v| v.is_finite()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Positions of the manipulated object (ball or puck).
    pub samples: Vec<Sample>,
    /// End-effector path, empty for tasks without one.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effector: Vec<Sample>,
    pub outcome: Outcome,
}

/// Euclidean task error `|outcome - target|`.
pub fn task_error(outcome: &TaskParam, target: &TaskParam) -> Result<f64> {
    if outcome.dim() != target.dim() {
        return Err(Error::dims(target.dim(), outcome.dim()));
    }
    Ok(outcome
        .0
        .iter()
        .zip(&target.0)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt())
}

// ---------------------------------------------------------------------------
// Ball-Throw

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BallThrowEnv {
    /// Downward acceleration.
    pub gravity: f64,
    /// Horizontal position of the wall.
    pub wall_x: f64,
    pub dt: f64,
    pub max_t: f64,
}

impl Default for BallThrowEnv {
    fn default() -> Self {
        BallThrowEnv { gravity: 10.0, wall_x: 1.0, dt: 0.001, max_t: 10.0 }
    }
}

impl BallThrowEnv {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gravity > 0.0
            && self.wall_x > 0.0
            && self.dt > 0.0
            && self.dt <= 0.01
            && self.max_t.is_finite()
            && self.max_t > self.dt;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid ball-throw environment {self:?}")))
        }
    }
}

/// Throws a ball from the origin with velocity `theta = [v_x, v_y]`.
///
/// The state is advanced with the exact constant-acceleration update, and the
/// wall crossing is located by linear interpolation between the bracketing
/// samples. The final sample sits on the wall.
pub fn rollout_ball(env: &BallThrowEnv, theta: &PolicyParams) -> Result<Trajectory> {
    env.validate()?;
    theta.check(2)?;
    let (vx, vy0) = (theta.0[0], theta.0[1]);
    let (g, dt) = (env.gravity, env.dt);
    let steps = (env.max_t / dt).ceil() as usize;

    let mut samples = Vec::with_capacity(if vx > 0.0 {
        ((env.wall_x / vx / dt) as usize).min(steps) + 2
    } else {
        steps + 1
    });
    let (mut t, mut x, mut y, mut vy) = (0.0, 0.0, 0.0, vy0);
    samples.push(Sample { t, pos: [x, y], vel: [vx, vy] });

    for k in 1..=steps {
        let t_next = k as f64 * dt;
        let x_next = x + vx * dt;
        let y_next = y + vy * dt - 0.5 * g * dt * dt;
        let vy_next = vy - g * dt;
        if vx > 0.0 && x_next >= env.wall_x {
            let frac = (env.wall_x - x) / (x_next - x);
            let t_hit = t + frac * dt;
            let y_hit = y + frac * (y_next - y);
            samples.push(Sample {
                t: t_hit,
                pos: [env.wall_x, y_hit],
                vel: [vx, vy - g * frac * dt],
            });
            return Ok(Trajectory {
                samples,
                effector: Vec::new(),
                outcome: Outcome::Hit { measured: TaskParam(vec![t_hit, y_hit]) },
            });
        }
        (t, x, y, vy) = (t_next, x_next, y_next, vy_next);
        samples.push(Sample { t, pos: [x, y], vel: [vx, vy] });
    }

    Ok(Trajectory { samples, effector: Vec::new(), outcome: Outcome::Timeout { last: [x, y] } })
}

// ---------------------------------------------------------------------------
// Puck-Slide

/// Axis-aligned 2-D rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub const fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Rect { lo, hi }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.lo[0] && p[0] <= self.hi[0] && p[1] >= self.lo[1] && p[1] <= self.hi[1]
    }

    pub fn diagonal(&self) -> f64 {
        ((self.hi[0] - self.lo[0]).powi(2) + (self.hi[1] - self.lo[1]).powi(2)).sqrt()
    }

    fn is_valid(&self) -> bool {
        (0..2).all(|i| self.lo[i].is_finite() && self.hi[i].is_finite() && self.lo[i] < self.hi[i])
    }

    /// Fraction along `a -> b` at which the segment leaves the rectangle,
    /// assuming `a` is inside.
    fn exit_fraction(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let mut s: f64 = 1.0;
        for i in 0..2 {
            let d = b[i] - a[i];
            if d > 0.0 && b[i] > self.hi[i] {
                s = s.min((self.hi[i] - a[i]) / d);
            } else if d < 0.0 && b[i] < self.lo[i] {
                s = s.min((self.lo[i] - a[i]) / d);
            }
        }
        s.clamp(0.0, 1.0)
    }
}

/// Top-down table with a point pusher driven by a DMP and a round puck that
/// slides under Coulomb friction. `+y` is "higher" (away from the robot),
/// `+x` is "right".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PuckSlideEnv {
    pub friction_coeff: f64,
    pub gravity: f64,
    pub puck_start: [f64; 2],
    /// Contact distance between the pusher point and the puck center.
    pub contact_radius: f64,
    pub pusher_start: [f64; 2],
    pub strike_region: Rect,
    pub dt: f64,
    pub table_bounds: Rect,
    pub dmp: DmpConfig,
}

impl Default for PuckSlideEnv {
    fn default() -> Self {
        PuckSlideEnv {
            friction_coeff: 0.3,
            gravity: 9.81,
            puck_start: [0.0, 0.3],
            contact_radius: 0.05,
            pusher_start: [0.0, 0.0],
            strike_region: Rect::new([-0.3, -0.1], [0.3, 0.45]),
            dt: 0.002,
            table_bounds: Rect::new([-0.75, 0.0], [0.75, 2.5]),
            dmp: DmpConfig::default(),
        }
    }
}

/// Number of policy parameters of the Puck-Slide DMP.
pub const PUCK_THETA_LEN: usize = 13;

impl PuckSlideEnv {
    pub fn validate(&self) -> Result<()> {
        let ok = self.friction_coeff > 0.0
            && self.gravity > 0.0
            && self.contact_radius > 0.0
            && self.dt > 0.0
            && self.dt <= 0.01
            && self.table_bounds.is_valid()
            && self.strike_region.is_valid()
            && self.table_bounds.contains(self.puck_start);
        if !ok {
            return Err(Error::Config(format!("invalid puck-slide environment {self:?}")));
        }
        self.dmp.validate()
    }

    /// Distance a puck launched at `speed` slides before stopping.
    pub fn slide_distance(&self, speed: f64) -> f64 {
        speed * speed / (2.0 * self.friction_coeff * self.gravity)
    }
}

struct Contact {
    t: f64,
    /// Normal component of the pusher velocity transferred to the puck.
    puck_vel: [f64; 2],
}

fn find_contact(env: &PuckSlideEnv, path: &[Sample]) -> Option<Contact> {
    let c = env.puck_start;
    let r = env.contact_radius;
    let impulse = |q: [f64; 2], v: [f64; 2]| {
        let (dx, dy) = (c[0] - q[0], c[1] - q[1]);
        let d = (dx * dx + dy * dy).sqrt();
        let n = if d > 1e-12 {
            [dx / d, dy / d]
        } else {
            let s = (v[0] * v[0] + v[1] * v[1]).sqrt();
            if s > 0.0 { [v[0] / s, v[1] / s] } else { [0.0, 0.0] }
        };
        let vn = (v[0] * n[0] + v[1] * n[1]).max(0.0);
        [vn * n[0], vn * n[1]]
    };

    let first = path.first()?;
    let dist0 = ((first.pos[0] - c[0]).powi(2) + (first.pos[1] - c[1]).powi(2)).sqrt();
    if dist0 <= r && env.strike_region.contains(first.pos) {
        return Some(Contact { t: first.t, puck_vel: impulse(first.pos, first.vel) });
    }

    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let d = [b.pos[0] - a.pos[0], b.pos[1] - a.pos[1]];
        let f = [a.pos[0] - c[0], a.pos[1] - c[1]];
        let qa = d[0] * d[0] + d[1] * d[1];
        let qb = 2.0 * (f[0] * d[0] + f[1] * d[1]);
        let qc = f[0] * f[0] + f[1] * f[1] - r * r;
        if qa <= 0.0 || qc <= 0.0 {
            continue;
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            continue;
        }
        let s = (-qb - disc.sqrt()) / (2.0 * qa);
        if !(0.0..=1.0).contains(&s) {
            continue;
        }
        let q = [a.pos[0] + s * d[0], a.pos[1] + s * d[1]];
        if !env.strike_region.contains(q) {
            continue;
        }
        let v = [a.vel[0] + s * (b.vel[0] - a.vel[0]), a.vel[1] + s * (b.vel[1] - a.vel[1])];
        return Some(Contact { t: a.t + s * (b.t - a.t), puck_vel: impulse(q, v) });
    }
    None
}

/// Slides the puck from `start` with initial velocity `vel` beginning at time
/// `t0`, appending samples until it rests or leaves the table.
fn slide(env: &PuckSlideEnv, t0: f64, start: [f64; 2], vel: [f64; 2], samples: &mut Vec<Sample>) -> [f64; 2] {
    let decel = env.friction_coeff * env.gravity;
    let mut speed = (vel[0] * vel[0] + vel[1] * vel[1]).sqrt();
    if speed <= 0.0 {
        return start;
    }
    let dir = [vel[0] / speed, vel[1] / speed];
    let mut p = start;
    let mut t = t0;
    let mut k = 0usize;
    loop {
        let (step, stopping) = if speed <= decel * env.dt {
            (speed / decel, true)
        } else {
            (env.dt, false)
        };
        let ds = speed * step - 0.5 * decel * step * step;
        let next = [p[0] + dir[0] * ds, p[1] + dir[1] * ds];
        let next_speed = if stopping { 0.0 } else { speed - decel * step };
        k += 1;
        let t_next = if stopping { t + step } else { t0 + k as f64 * env.dt };
        if !env.table_bounds.contains(next) {
            let frac = env.table_bounds.exit_fraction(p, next);
            let exit = [p[0] + frac * (next[0] - p[0]), p[1] + frac * (next[1] - p[1])];
            let v = speed + frac * (next_speed - speed);
            let t_exit = t + frac * (t_next - t);
            if t_exit > t {
                samples.push(Sample { t: t_exit, pos: exit, vel: [dir[0] * v, dir[1] * v] });
            }
            return exit;
        }
        samples.push(Sample { t: t_next, pos: next, vel: [dir[0] * next_speed, dir[1] * next_speed] });
        p = next;
        t = t_next;
        speed = next_speed;
        if stopping {
            return p;
        }
    }
}

/// Executes the 13-parameter DMP strike and returns the puck trajectory.
///
/// The pusher follows the DMP path from `pusher_start`. At the first contact
/// inside the strike region the puck takes the component of the pusher
/// velocity along the line of centers, then decelerates at `mu * g` until it
/// rests or leaves the table. A head-on strike transfers the full velocity.
pub fn rollout_puck(env: &PuckSlideEnv, theta: &PolicyParams) -> Result<Trajectory> {
    env.validate()?;
    theta.check(PUCK_THETA_LEN)?;
    let params = DmpParams::from_theta(theta, env.pusher_start, env.dmp.n_basis)?;
    let path = execute_dmp(&env.dmp, &params, env.pusher_start)?;
    let puck = env.puck_start;
    let rest = Sample { t: 0.0, pos: puck, vel: [0.0, 0.0] };

    let Some(contact) = find_contact(env, &path) else {
        let mut samples = vec![rest];
        if let Some(end) = path.last().filter(|s| s.t > 0.0) {
            samples.push(Sample { t: end.t, ..rest });
        }
        return Ok(Trajectory { samples, effector: path, outcome: Outcome::NoContact { puck } });
    };

    let mut samples = vec![rest];
    if contact.t > 0.0 {
        samples.push(Sample { t: contact.t, pos: puck, vel: contact.puck_vel });
    } else {
        samples[0].vel = contact.puck_vel;
    }
    let end = slide(env, contact.t, puck, contact.puck_vel, &mut samples);
    Ok(Trajectory {
        samples,
        effector: path,
        outcome: Outcome::Hit { measured: TaskParam(end.to_vec()) },
    })
}
