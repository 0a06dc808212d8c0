//! Adverb-skill groundings: regressors mapping `(tau, l)` to a task-parameter
//! adjustment `delta_tau`.
//!
//! Features are `tau` followed by `l`, standardized per feature over the
//! training set; targets are standardized the same way. The statistics travel
//! with the model file so prediction always applies the training transform.

pub mod dataset;
pub mod kernel;
pub mod mlp;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use dataset::{AsgSample, Dataset, DatasetHeader};
pub use kernel::{KnnRegressor, KrrHyper, KrrRegressor};
pub use mlp::{backprop_gradient, MlpHyper, MlpParams};

use crate::adverbs::AdverbEmbedding;
use crate::error::{Error, Result};
use crate::task::TaskParam;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Identifies what a grounding was trained for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundingKey {
    pub axis_config_hash: String,
    pub skill_id: String,
}

/// Anything that turns adverb feedback into a task-parameter adjustment.
pub trait Grounding {
    fn adjustment(&self, tau: &TaskParam, l: &AdverbEmbedding) -> Result<Vec<f64>>;
}

/// Grounding that never moves; a sanity baseline.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroGrounding;

impl Grounding for ZeroGrounding {
    fn adjustment(&self, tau: &TaskParam, _l: &AdverbEmbedding) -> Result<Vec<f64>> {
        Ok(vec![0.0; tau.dim()])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub input_mean: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub output_mean: Vec<f64>,
    pub output_scale: Vec<f64>,
}

fn mean_and_scale(columns: usize, rows: impl Iterator<Item = Vec<f64>> + Clone) -> (Vec<f64>, Vec<f64>) {
    let n = rows.clone().count() as f64;
    let mut mean = vec![0.0; columns];
    for r in rows.clone() {
        mean.iter_mut().zip(&r).for_each(|(m, v)| *m += v / n);
    }
    let mut var = vec![0.0; columns];
    for r in rows {
        var.iter_mut().zip(r.iter().zip(&mean)).for_each(|(s, (v, m))| *s += (v - m).powi(2) / n);
    }
    let scale = var.into_iter().map(|v| if v.sqrt() > 1e-12 { v.sqrt() } else { 1.0 }).collect();
    (mean, scale)
}

impl NormStats {
    fn fit(samples: &[AsgSample]) -> Self {
        let n_in = samples[0].tau.dim() + samples[0].embedding.dim();
        let (input_mean, input_scale) = mean_and_scale(n_in, samples.iter().map(AsgSample::features));
        let (output_mean, output_scale) =
            mean_and_scale(samples[0].delta_tau.len(), samples.iter().map(|s| s.delta_tau.clone()));
        NormStats { input_mean, input_scale, output_mean, output_scale }
    }

    fn input(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(self.input_mean.iter().zip(&self.input_scale)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    fn output(&self, raw: &[f64]) -> Vec<f64> {
        raw.iter().zip(self.output_mean.iter().zip(&self.output_scale)).map(|(v, (m, s))| (v - m) / s).collect()
    }

    fn restore_output(&self, norm: &[f64]) -> Vec<f64> {
        norm.iter().zip(self.output_mean.iter().zip(&self.output_scale)).map(|(v, (m, s))| v * s + m).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Regressor {
    Mlp(MlpParams),
    Knn(KnnRegressor),
    Krr(KrrRegressor),
}

impl Regressor {
    fn predict(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Regressor::Mlp(p) => p.forward(x),
            Regressor::Knn(m) => m.predict(x),
            Regressor::Krr(m) => m.predict(x),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Regressor::Mlp(_) => "mlp",
            Regressor::Knn(_) => "knn",
            Regressor::Krr(_) => "krr",
        }
    }
}

/// A trained grounding together with everything needed to apply it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsgModel {
    pub schema_version: u32,
    #[serde(flatten)]
    pub regressor: Regressor,
    pub axis_config_hash: String,
    pub skill_id: String,
    pub tau_dim: usize,
    pub embedding_dim: usize,
    pub norm_stats: NormStats,
}

/// Regressor settings accepted by [`train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegressorSpec {
    Mlp(MlpHyper),
    Knn { k: usize },
    Krr(KrrHyper),
}

impl Default for RegressorSpec {
    fn default() -> Self {
        RegressorSpec::Mlp(MlpHyper::default())
    }
}

/// Per-epoch training losses (empty for the lazy regressors).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingReport {
    pub epoch_losses: Vec<f64>,
}

fn check_dataset(samples: &[AsgSample], needed: usize) -> Result<(usize, usize)> {
    if samples.len() < needed {
        return Err(Error::InsufficientData { needed, got: samples.len() });
    }
    let (td, ld) = (samples[0].tau.dim(), samples[0].embedding.dim());
    for s in samples {
        if s.tau.dim() != td || s.delta_tau.len() != td {
            return Err(Error::dims(td, s.tau.dim().max(s.delta_tau.len())));
        }
        if s.embedding.dim() != ld {
            return Err(Error::dims(ld, s.embedding.dim()));
        }
    }
    Ok((td, ld))
}

fn normalized_pairs(samples: &[AsgSample], stats: &NormStats) -> Vec<(Vec<f64>, Vec<f64>)> {
    samples.iter().map(|s| (stats.input(&s.features()), stats.output(&s.delta_tau))).collect()
}

/// Trains a grounding of the requested kind.
pub fn train(samples: &[AsgSample], key: &GroundingKey, spec: &RegressorSpec) -> Result<(AsgModel, TrainingReport)> {
    match spec {
        RegressorSpec::Mlp(h) => train_mlp(samples, key, h),
        RegressorSpec::Knn { k } => Ok((train_knn(samples, key, *k)?, TrainingReport::default())),
        RegressorSpec::Krr(h) => Ok((train_krr(samples, key, *h)?, TrainingReport::default())),
    }
}

fn assemble(samples: &[AsgSample], key: &GroundingKey, stats: NormStats, regressor: Regressor) -> AsgModel {
    AsgModel {
        schema_version: MODEL_SCHEMA_VERSION,
        regressor,
        axis_config_hash: key.axis_config_hash.clone(),
        skill_id: key.skill_id.clone(),
        tau_dim: samples[0].tau.dim(),
        embedding_dim: samples[0].embedding.dim(),
        norm_stats: stats,
    }
}

/// Minimizes mean squared error of the standardized `delta_tau` by
/// mini-batch gradient descent. Deterministic for a given seed.
pub fn train_mlp(samples: &[AsgSample], key: &GroundingKey, hyper: &MlpHyper) -> Result<(AsgModel, TrainingReport)> {
    check_dataset(samples, 10)?;
    let stats = NormStats::fit(samples);
    let data = normalized_pairs(samples, &stats);
    let (params, losses) = mlp::train(&data, hyper)?;
    Ok((assemble(samples, key, stats, Regressor::Mlp(params)), TrainingReport { epoch_losses: losses }))
}

pub fn train_knn(samples: &[AsgSample], key: &GroundingKey, k: usize) -> Result<AsgModel> {
    check_dataset(samples, k.max(1))?;
    let stats = NormStats::fit(samples);
    let model = KnnRegressor::fit(&normalized_pairs(samples, &stats), k)?;
    Ok(assemble(samples, key, stats, Regressor::Knn(model)))
}

pub fn train_krr(samples: &[AsgSample], key: &GroundingKey, hyper: KrrHyper) -> Result<AsgModel> {
    check_dataset(samples, 2)?;
    let stats = NormStats::fit(samples);
    let model = KrrRegressor::fit(&normalized_pairs(samples, &stats), hyper)?;
    Ok(assemble(samples, key, stats, Regressor::Krr(model)))
}

impl AsgModel {
    pub fn key(&self) -> GroundingKey {
        GroundingKey { axis_config_hash: self.axis_config_hash.clone(), skill_id: self.skill_id.clone() }
    }

    pub fn kind(&self) -> &'static str {
        self.regressor.kind()
    }

    /// Predicts `delta_tau` for the current parameters and feedback.
    pub fn predict(&self, key: &GroundingKey, tau: &TaskParam, l: &AdverbEmbedding) -> Result<Vec<f64>> {
        if key.axis_config_hash != self.axis_config_hash || key.skill_id != self.skill_id {
            return Err(Error::StaleConfig {
                model: self.axis_config_hash.clone(),
                model_skill: self.skill_id.clone(),
                caller: key.axis_config_hash.clone(),
                caller_skill: key.skill_id.clone(),
            });
        }
        if tau.dim() != self.tau_dim {
            return Err(Error::dims(self.tau_dim, tau.dim()));
        }
        if l.dim() != self.embedding_dim {
            return Err(Error::dims(self.embedding_dim, l.dim()));
        }
        let raw: Vec<f64> = tau.0.iter().chain(&l.0).copied().collect();
        let out = self.norm_stats.restore_output(&self.regressor.predict(&self.norm_stats.input(&raw)));
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("grounding produced a non-finite adjustment".into()));
        }
        Ok(out)
    }

    /// Binds the model to a caller key; mismatches surface at prediction time.
    pub fn bind(&self, key: GroundingKey) -> BoundModel<'_> {
        BoundModel { model: self, key }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string(self).map_err(|e| Error::CorruptFile(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::CorruptFile(e.to_string()))?;
        let version = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::CorruptFile("missing schema_version".into()))?;
        if version != MODEL_SCHEMA_VERSION as u64 {
            return Err(Error::SchemaVersionMismatch { found: version as u32, expected: MODEL_SCHEMA_VERSION });
        }
        let model: AsgModel = serde_json::from_value(value).map_err(|e| Error::CorruptFile(e.to_string()))?;
        let n_in = model.tau_dim + model.embedding_dim;
        let stats_ok = model.norm_stats.input_mean.len() == n_in
            && model.norm_stats.input_scale.len() == n_in
            && model.norm_stats.output_mean.len() == model.tau_dim
            && model.norm_stats.output_scale.len() == model.tau_dim;
        if !stats_ok {
            return Err(Error::CorruptFile("normalization stats do not match model dimensions".into()));
        }
        if let Regressor::Mlp(p) = &model.regressor {
            p.validate()?;
            if p.sizes[0] != n_in || *p.sizes.last().unwrap() != model.tau_dim {
                return Err(Error::CorruptFile("network shape does not match model dimensions".into()));
            }
        }
        Ok(model)
    }
}

pub struct BoundModel<'a> {
    model: &'a AsgModel,
    key: GroundingKey,
}

impl Grounding for BoundModel<'_> {
    fn adjustment(&self, tau: &TaskParam, l: &AdverbEmbedding) -> Result<Vec<f64>> {
        self.model.predict(&self.key, tau, l)
    }
}
