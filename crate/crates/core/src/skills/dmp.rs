//! Discrete dynamic movement primitives in two output dimensions.
//!
//! Per dimension the transformation system is
//! `D * z' = alpha * (beta * (g - y) - z) + f(x)`, `D * y' = z`, driven by the
//! canonical phase `D * x' = -alpha_c * x`. The forcing term is a normalized
//! mixture of Gaussian basis functions gated by the phase.

use serde::{Deserialize, Serialize};

use crate::envsim::{PolicyParams, Sample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DmpConfig {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_phase: f64,
    pub n_basis: usize,
    pub dt: f64,
    /// Integration horizon as a multiple of the movement duration.
    pub horizon: f64,
}

impl Default for DmpConfig {
    fn default() -> Self {
        DmpConfig { alpha: 25.0, beta: 25.0 / 4.0, alpha_phase: 8.0, n_basis: 5, dt: 0.001, horizon: 2.0 }
    }
}

impl DmpConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.beta > 0.0
            && self.alpha_phase > 0.0
            && self.n_basis >= 1
            && self.dt > 0.0
            && self.horizon >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid DMP config {self:?}")))
        }
    }

    /// Basis centers, equally spaced in normalized time and mapped to phase.
    pub fn centers(&self) -> Vec<f64> {
        let n = self.n_basis;
        if n == 1 {
            return vec![(-0.5 * self.alpha_phase).exp()];
        }
        (0..n).map(|i| (-self.alpha_phase * i as f64 / (n - 1) as f64).exp()).collect()
    }

    /// Widths chosen so neighbouring basis functions cross at 0.5.
    pub fn widths(&self) -> Vec<f64> {
        let c = self.centers();
        if c.len() == 1 {
            return vec![4.0 * std::f64::consts::LN_2 / (1.0 - c[0]).powi(2)];
        }
        (0..c.len())
            .map(|i| {
                let gap = if i + 1 < c.len() { c[i] - c[i + 1] } else { c[i - 1] - c[i] };
                4.0 * std::f64::consts::LN_2 / (gap * gap)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmpParams {
    /// `weights[d]` holds the basis weights of output dimension `d`.
    pub weights: [Vec<f64>; 2],
    pub goal: [f64; 2],
    pub duration: f64,
}

impl DmpParams {
    /// Decodes `[w_x (n), w_y (n), goal offset (2), duration]`; the goal
    /// offset is relative to `start`.
    pub fn from_theta(theta: &PolicyParams, start: [f64; 2], n_basis: usize) -> Result<Self> {
        theta.check(2 * n_basis + 3)?;
        let v = &theta.0;
        let duration = v[2 * n_basis + 2];
        if duration <= 0.0 {
            return Err(Error::InvalidParams(format!("DMP duration must be positive, got {duration}")));
        }
        Ok(DmpParams {
            weights: [v[..n_basis].to_vec(), v[n_basis..2 * n_basis].to_vec()],
            goal: [start[0] + v[2 * n_basis], start[1] + v[2 * n_basis + 1]],
            duration,
        })
    }

    pub fn to_theta(&self, start: [f64; 2]) -> PolicyParams {
        let mut v = Vec::with_capacity(2 * self.weights[0].len() + 3);
        v.extend_from_slice(&self.weights[0]);
        v.extend_from_slice(&self.weights[1]);
        v.push(self.goal[0] - start[0]);
        v.push(self.goal[1] - start[1]);
        v.push(self.duration);
        PolicyParams(v)
    }

    fn validate(&self, cfg: &DmpConfig) -> Result<()> {
        if self.weights.iter().any(|w| w.len() != cfg.n_basis) {
            return Err(Error::InvalidParams(format!("expected {} weights per dimension", cfg.n_basis)));
        }
        let finite = self.weights.iter().flatten().chain(&self.goal).all(|v| v.is_finite());
        if !finite || !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::InvalidParams("DMP parameters must be finite with positive duration".into()));
        }
        Ok(())
    }
}

struct Forcing {
    centers: Vec<f64>,
    widths: Vec<f64>,
}

impl Forcing {
    fn eval(&self, phase: f64, weights: &[f64]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for ((c, h), w) in self.centers.iter().zip(&self.widths).zip(weights) {
            let psi = (-h * (phase - c) * (phase - c)).exp();
            num += psi * w;
            den += psi;
        }
        if den > 0.0 { phase * num / den } else { 0.0 }
    }
}

/// Integrates the DMP from `start` with fourth-order Runge-Kutta and returns
/// the end-effector path over `horizon * duration` seconds.
pub fn execute_dmp(cfg: &DmpConfig, params: &DmpParams, start: [f64; 2]) -> Result<Vec<Sample>> {
    cfg.validate()?;
    params.validate(cfg)?;
    let forcing = Forcing { centers: cfg.centers(), widths: cfg.widths() };
    let d = params.duration;
    let phase = |t: f64| (-cfg.alpha_phase * t / d).exp();
    let f_at = |t: f64| [forcing.eval(phase(t), &params.weights[0]), forcing.eval(phase(t), &params.weights[1])];

    // State per dimension: (y, z).
    let deriv = |y: [f64; 2], z: [f64; 2], f: [f64; 2]| {
        let mut dy = [0.0; 2];
        let mut dz = [0.0; 2];
        for i in 0..2 {
            dy[i] = z[i] / d;
            dz[i] = (cfg.alpha * (cfg.beta * (params.goal[i] - y[i]) - z[i]) + f[i]) / d;
        }
        (dy, dz)
    };

    let steps = (cfg.horizon * d / cfg.dt).ceil().max(1.0) as usize;
    let h = cfg.horizon * d / steps as f64;
    let mut y = start;
    let mut z = [0.0; 2];
    let mut path = Vec::with_capacity(steps + 1);
    path.push(Sample { t: 0.0, pos: y, vel: [0.0, 0.0] });

    let axpy = |a: [f64; 2], s: f64, b: [f64; 2]| [a[0] + s * b[0], a[1] + s * b[1]];
    for k in 0..steps {
        let t = k as f64 * h;
        let f0 = f_at(t);
        let fm = f_at(t + 0.5 * h);
        let f1 = f_at(t + h);
        let (k1y, k1z) = deriv(y, z, f0);
        let (k2y, k2z) = deriv(axpy(y, 0.5 * h, k1y), axpy(z, 0.5 * h, k1z), fm);
        let (k3y, k3z) = deriv(axpy(y, 0.5 * h, k2y), axpy(z, 0.5 * h, k2z), fm);
        let (k4y, k4z) = deriv(axpy(y, h, k3y), axpy(z, h, k3z), f1);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1y[i] + 2.0 * k2y[i] + 2.0 * k3y[i] + k4y[i]);
            z[i] += h / 6.0 * (k1z[i] + 2.0 * k2z[i] + 2.0 * k3z[i] + k4z[i]);
        }
        path.push(Sample { t: (k + 1) as f64 * h, pos: y, vel: [z[0] / d, z[1] / d] });
    }
    Ok(path)
}

/// Writes a path as `time,x,y` CSV.
pub fn path_to_csv(path: &[Sample]) -> String {
    let mut out = String::from("time,x,y\n");
    for s in path {
        out.push_str(&format!("{},{},{}\n", s.t, s.pos[0], s.pos[1]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(weights: [Vec<f64>; 2], goal: [f64; 2], duration: f64) -> DmpParams {
        DmpParams { weights, goal, duration }
    }

    fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }

    #[test]
    fn unforced_reaches_goal_monotonically() {
        let cfg = DmpConfig::default();
        let p = params([vec![0.0; 5], vec![0.0; 5]], [0.4, 0.8], 0.5);
        let path = execute_dmp(&cfg, &p, [0.0, 0.0]).unwrap();
        assert!(dist(path.last().unwrap().pos, p.goal) < 1e-2);
        let d: Vec<f64> = path.iter().map(|s| dist(s.pos, p.goal)).collect();
        assert!(d.windows(2).all(|w| w[1] <= w[0] + 1e-12), "critically damped path overshot");
    }

    #[test]
    fn start_at_goal_stays_put() {
        let cfg = DmpConfig::default();
        let p = params([vec![0.0; 5], vec![0.0; 5]], [0.2, 0.3], 0.7);
        let path = execute_dmp(&cfg, &p, [0.2, 0.3]).unwrap();
        assert!(path.iter().all(|s| dist(s.pos, p.goal) < 1e-6));
    }

    #[test]
    fn doubling_duration_preserves_shape() {
        let cfg = DmpConfig::default();
        let w = [vec![10.0, -20.0, 5.0, 30.0, -4.0], vec![-8.0, 12.0, 40.0, -3.0, 7.0]];
        let fast = execute_dmp(&cfg, &params(w.clone(), [0.5, 1.0], 0.5), [0.0, 0.0]).unwrap();
        let slow = execute_dmp(&cfg, &params(w, [0.5, 1.0], 1.0), [0.0, 0.0]).unwrap();
        // Fast sample k sits at t = k*h, slow sample 2k at 2*k*h: same phase.
        assert_eq!(slow.len() - 1, 2 * (fast.len() - 1));
        for (k, s) in fast.iter().enumerate() {
            let m = slow[2 * k];
            assert!((m.t - 2.0 * s.t).abs() < 1e-12);
            assert!(dist(m.pos, s.pos) < 1e-3, "phase {k}: {:?} vs {:?}", m.pos, s.pos);
        }
    }

    #[test]
    fn theta_round_trip_and_bad_duration() {
        let theta = PolicyParams((0..13).map(|i| i as f64 * 0.1 + 0.1).collect());
        let p = DmpParams::from_theta(&theta, [1.0, -1.0], 5).unwrap();
        assert!((p.goal[0] - 2.1).abs() < 1e-12 && (p.goal[1] - 0.2).abs() < 1e-12);
        let back = p.to_theta([1.0, -1.0]);
        for (a, b) in back.0.iter().zip(&theta.0) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut bad = theta.clone();
        bad.0[12] = 0.0;
        assert!(matches!(DmpParams::from_theta(&bad, [0.0, 0.0], 5), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn basis_widths_cross_at_half() {
        let cfg = DmpConfig::default();
        let (c, h) = (cfg.centers(), cfg.widths());
        for i in 0..c.len() - 1 {
            let m = 0.5 * (c[i] + c[i + 1]);
            assert!(((-h[i] * (m - c[i]).powi(2)).exp() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let cfg = DmpConfig { dt: 0.1, ..Default::default() };
        let p = params([vec![0.0; 5], vec![0.0; 5]], [1.0, 0.0], 0.5);
        let path = execute_dmp(&cfg, &p, [0.0, 0.0]).unwrap();
        let csv = path_to_csv(&path);
        assert!(csv.starts_with("time,x,y\n0,0,0\n"));
        assert_eq!(csv.lines().count(), path.len() + 1);
    }
}
