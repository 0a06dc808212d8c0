//! Nonparametric regressors over standardized `(tau, l)` features.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Inverse-distance-weighted k-nearest-neighbour regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnRegressor {
    pub k: usize,
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl KnnRegressor {
    pub fn fit(data: &[(Vec<f64>, Vec<f64>)], k: usize) -> Result<Self> {
        if k == 0 || data.len() < k {
            return Err(Error::InsufficientData { needed: k.max(1), got: data.len() });
        }
        Ok(KnnRegressor {
            k,
            inputs: data.iter().map(|(x, _)| x.clone()).collect(),
            targets: data.iter().map(|(_, y)| y.clone()).collect(),
        })
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut order: Vec<(f64, usize)> =
            self.inputs.iter().enumerate().map(|(i, p)| (sq_dist(p, x).sqrt(), i)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if order[0].0 == 0.0 {
            return self.targets[order[0].1].clone();
        }
        let mut out = vec![0.0; self.targets[0].len()];
        let mut total = 0.0;
        for &(d, i) in order.iter().take(self.k) {
            let w = 1.0 / d;
            total += w;
            out.iter_mut().zip(&self.targets[i]).for_each(|(o, t)| *o += w * t);
        }
        out.iter_mut().for_each(|o| *o /= total);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KrrHyper {
    /// Gaussian kernel length scale in standardized feature units.
    pub width: f64,
    pub ridge: f64,
}

impl Default for KrrHyper {
    fn default() -> Self {
        KrrHyper { width: 1.0, ridge: 1e-2 }
    }
}

/// Kernel ridge regression with a Gaussian kernel, one coefficient column per
/// output dimension. Targets are expected to be centered, so a heavy ridge
/// shrinks predictions toward zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrrRegressor {
    pub hyper: KrrHyper,
    pub inputs: Vec<Vec<f64>>,
    /// `coefficients[i][d]`: weight of training point `i` for output `d`.
    pub coefficients: Vec<Vec<f64>>,
}

impl KrrRegressor {
    fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        gaussian(a, b, self.hyper.width)
    }

    pub fn fit(data: &[(Vec<f64>, Vec<f64>)], hyper: KrrHyper) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, got: data.len() });
        }
        if !(hyper.width > 0.0) || !(hyper.ridge >= 0.0) {
            return Err(Error::Config(format!("invalid kernel ridge settings {hyper:?}")));
        }
        let n = data.len();
        let n_out = data[0].1.len();
        let gram = DMatrix::from_fn(n, n, |i, j| {
            gaussian(&data[i].0, &data[j].0, hyper.width) + if i == j { hyper.ridge } else { 0.0 }
        });
        let chol = gram.cholesky().ok_or(Error::SingularKernel)?;
        let targets = DMatrix::from_fn(n, n_out, |i, d| data[i].1[d]);
        let alpha = chol.solve(&targets);
        if alpha.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularKernel);
        }
        let coefficients = alpha.row_iter().map(|r| r.iter().copied().collect()).collect();
        Ok(KrrRegressor { hyper, inputs: data.iter().map(|(x, _)| x.clone()).collect(), coefficients })
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.coefficients.first().map_or(0, Vec::len)];
        for (p, c) in self.inputs.iter().zip(&self.coefficients) {
            let k = self.kernel(p, x);
            out.iter_mut().zip(c).for_each(|(o, a)| *o += k * a);
        }
        out
    }
}

fn gaussian(a: &[f64], b: &[f64], width: f64) -> f64 {
    (-sq_dist(a, b) / (2.0 * width * width)).exp()
}
