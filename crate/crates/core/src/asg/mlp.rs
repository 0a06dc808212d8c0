//! Small fully connected network: tanh hidden layers, linear output,
//! trained on mean squared error with mini-batch gradient descent.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Network weights. Layer `i` maps `sizes[i]` inputs to `sizes[i + 1]`
/// outputs; `weights[i]` is row-major `sizes[i + 1] x sizes[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpParams {
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        MlpParams {
            sizes: sizes.to_vec(),
            weights: sizes.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect(),
            biases: sizes[1..].iter().map(|n| vec![0.0; *n]).collect(),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut p = Self::zeros(sizes);
        for (w, dims) in p.weights.iter_mut().zip(sizes.windows(2)) {
            let a = (6.0 / (dims[0] + dims[1]) as f64).sqrt();
            w.iter_mut().for_each(|v| *v = rng.random_range(-a..a));
        }
        p
    }

    pub fn layers(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sizes.len() >= 2
            && self.weights.len() == self.sizes.len() - 1
            && self.biases.len() == self.sizes.len() - 1
            && self.sizes.windows(2).zip(&self.weights).all(|(d, w)| w.len() == d[0] * d[1])
            && self.sizes[1..].iter().zip(&self.biases).all(|(n, b)| b.len() == *n);
        if !ok {
            return Err(Error::CorruptFile("MLP layer dimensions disagree".into()));
        }
        if !self.values().all(|v| v.is_finite()) {
            return Err(Error::Numerical("non-finite MLP weight".into()));
        }
        Ok(())
    }

    /// Every weight then every bias, layer by layer.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().flatten().chain(self.biases.iter().flatten())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().flatten().chain(self.biases.iter_mut().flatten())
    }

    /// Layer activations, input first and output last.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers() + 1);
        acts.push(x.to_vec());
        for l in 0..self.layers() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &acts[l];
            let w = &self.weights[l];
            let mut out: Vec<f64> = (0..n_out)
                .map(|j| self.biases[l][j] + (0..n_in).map(|i| w[j * n_in + i] * input[i]).sum::<f64>())
                .collect();
            if l + 1 < self.layers() {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.activations(x).pop().expect("at least one layer")
    }

    /// `(1/n) * sum_i |f(x_i) - y_i|^2`.
    pub fn loss(&self, batch: &[(Vec<f64>, Vec<f64>)]) -> f64 {
        let n = batch.len() as f64;
        batch
            .iter()
            .map(|(x, y)| self.forward(x).iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum::<f64>())
            .sum::<f64>()
            / n
    }
}

/// Exact gradient of [`MlpParams::loss`] with respect to every weight and
/// bias, by backpropagation. Returned in the same shape as `params`.
pub fn backprop_gradient(params: &MlpParams, batch: &[(Vec<f64>, Vec<f64>)]) -> MlpParams {
    let mut grad = MlpParams::zeros(&params.sizes);
    if batch.is_empty() {
        return grad;
    }
    let scale = 2.0 / batch.len() as f64;
    for (x, y) in batch {
        let acts = params.activations(x);
        let out = &acts[params.layers()];
        let mut delta: Vec<f64> = out.iter().zip(y).map(|(p, t)| scale * (p - t)).collect();
        for l in (0..params.layers()).rev() {
            let n_in = params.sizes[l];
            let input = &acts[l];
            let gw = &mut grad.weights[l];
            for (j, d) in delta.iter().enumerate() {
                grad.biases[l][j] += d;
                for i in 0..n_in {
                    gw[j * n_in + i] += d * input[i];
                }
            }
            if l > 0 {
                let w = &params.weights[l];
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = delta.iter().enumerate().map(|(j, d)| w[j * n_in + i] * d).sum();
                        back * (1.0 - input[i] * input[i])
                    })
                    .collect();
            }
        }
    }
    grad
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpHyper {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        MlpHyper { hidden: vec![32, 32], learning_rate: 0.01, epochs: 1000, batch_size: 8, seed: 0 }
    }
}

/// Fits `params` in place; returns the full-batch loss before training
/// followed by the loss after each epoch.
pub fn fit(params: &mut MlpParams, data: &[(Vec<f64>, Vec<f64>)], hyper: &MlpHyper, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if hyper.batch_size == 0 || !(hyper.learning_rate > 0.0) {
        return Err(Error::Config("batch size and learning rate must be positive".into()));
    }
    let mut losses = Vec::with_capacity(hyper.epochs + 1);
    losses.push(params.loss(data));
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::with_capacity(hyper.batch_size);
    for epoch in 0..hyper.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(hyper.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| data[i].clone()));
            let grad = backprop_gradient(params, &batch);
            for (w, g) in params.values_mut().zip(grad.values()) {
                *w -= hyper.learning_rate * g;
            }
        }
        let loss = params.loss(data);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        losses.push(loss);
    }
    Ok(losses)
}

/// Builds and trains a network for `data` from scratch.
pub fn train(data: &[(Vec<f64>, Vec<f64>)], hyper: &MlpHyper) -> Result<(MlpParams, Vec<f64>)> {
    let (n_in, n_out) = (data[0].0.len(), data[0].1.len());
    let mut sizes = vec![n_in];
    sizes.extend(&hyper.hidden);
    sizes.push(n_out);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut params = MlpParams::init(&sizes, &mut rng);
    let losses = fit(&mut params, data, hyper, &mut rng)?;
    Ok((params, losses))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite differences of the loss over every parameter.
    fn numeric_gradient(params: &MlpParams, batch: &[(Vec<f64>, Vec<f64>)], h: f64) -> Vec<f64> {
        let n = params.values().count();
        (0..n)
            .map(|k| {
                let mut plus = params.clone();
                let mut minus = params.clone();
                *plus.values_mut().nth(k).unwrap() += h;
                *minus.values_mut().nth(k).unwrap() -= h;
                (plus.loss(batch) - minus.loss(batch)) / (2.0 * h)
            })
            .collect()
    }

    fn random_batch(rng: &mut ChaCha8Rng, n: usize, n_in: usize, n_out: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        (0..n)
            .map(|_| {
                let x = (0..n_in).map(|_| rng.random_range(-2.0..2.0)).collect();
                let y = (0..n_out).map(|_| rng.random_range(-2.0..2.0)).collect();
                (x, y)
            })
            .collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = MlpParams::init(&[4, 6, 5, 2], &mut rng);
        let batch = random_batch(&mut rng, 5, 4, 2);
        let analytic: Vec<f64> = backprop_gradient(&params, &batch).values().copied().collect();
        let numeric = numeric_gradient(&params, &batch, 1e-5);
        for (k, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-3);
            assert!(rel < 1e-6, "coordinate {k}: analytic {a}, numeric {n}");
        }
    }

    #[test]
    fn output_bias_gradient_of_zero_net_is_mean_error() {
        let params = MlpParams::zeros(&[3, 4, 2]);
        let batch = vec![(vec![1.0, 2.0, 3.0], vec![1.0, -2.0]), (vec![0.0, 1.0, 0.0], vec![3.0, 0.0])];
        let g = backprop_gradient(&params, &batch);
        // Prediction is 0 everywhere, so dL/db = 2 * mean(0 - y).
        assert_eq!(g.biases[1], vec![-4.0, 2.0]);
        assert!(g.weights[0].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_linear_layer_is_least_squares_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params = MlpParams::init(&[3, 1], &mut rng);
        let batch = random_batch(&mut rng, 6, 3, 1);
        let g = backprop_gradient(&params, &batch);
        // Augment x with a constant 1 for the bias: grad = 2/n X^T (Xw - y).
        let n = batch.len() as f64;
        let w: Vec<f64> = params.weights[0].iter().chain(&params.biases[0]).copied().collect();
        let mut expected = [0.0; 4];
        for (x, y) in &batch {
            let xa = [x[0], x[1], x[2], 1.0];
            let r: f64 = xa.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - y[0];
            for k in 0..4 {
                expected[k] += 2.0 / n * xa[k] * r;
            }
        }
        let got: Vec<f64> = g.values().copied().collect();
        for (a, b) in got.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn memorizes_repeated_sample() {
        let data = vec![(vec![0.3, -0.7, 0.1], vec![0.5, -1.0]); 10];
        let hyper = MlpHyper { epochs: 300, ..Default::default() };
        let (_, losses) = train(&data, &hyper).unwrap();
        assert!(*losses.last().unwrap() < 1e-6, "final loss {}", losses.last().unwrap());
    }

    #[test]
    fn same_seed_same_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data = random_batch(&mut rng, 12, 2, 1);
        let hyper = MlpHyper { epochs: 20, ..Default::default() };
        assert_eq!(train(&data, &hyper).unwrap().0, train(&data, &hyper).unwrap().0);
    }

    #[test]
    fn huge_learning_rate_diverges() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let data = random_batch(&mut rng, 12, 2, 1);
        let data: Vec<_> = data.into_iter().map(|(x, y)| (x, vec![y[0] * 1e3])).collect();
        let hyper = MlpHyper { epochs: 200, learning_rate: 1e3, hidden: vec![], ..Default::default() };
        assert!(matches!(train(&data, &hyper), Err(Error::Divergence { .. })));
    }
}
