//! End-to-end steps driven by an [`ExperimentConfig`].

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::asg::{train, AsgModel, Dataset, TrainingReport};
use crate::error::{Error, Result};
use crate::harness::compare::{curve_csv, run_trials, summarize, summary_csv, trials_csv, ComparisonSummary, TrialSet};
use crate::harness::config::ExperimentConfig;
use crate::harness::datagen::{gen_dataset, grounding_key};
use crate::harness::plot::error_curves_svg;
use crate::harness::pretrain::{pretrain_puck_skill, PretrainReport};
use crate::skills::KnnSkill;
use crate::tasks::{BallThrowTask, PuckSlideTask, SkillTask, TaskKind};

/// Independent random streams derived from the config seed.
#[derive(Debug, Clone, Copy)]
enum Stream {
    Dataset = 1,
    Holdout = 2,
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

pub fn ball_task(cfg: &ExperimentConfig) -> Result<BallThrowTask> {
    cfg.ball_throw.validate()?;
    Ok(BallThrowTask { env: cfg.ball_throw.clone(), oracle: cfg.oracle, ..Default::default() })
}

/// Pre-trains the Puck-Slide skill with the config's settings and seed.
pub fn pretrain(cfg: &ExperimentConfig) -> Result<PretrainReport> {
    let pcfg = crate::harness::pretrain::PretrainConfig { seed: cfg.seed, ..cfg.pretrain.clone() };
    pretrain_puck_skill(&cfg.puck_slide, &pcfg)
}

pub fn puck_task(cfg: &ExperimentConfig) -> Result<PuckSlideTask> {
    let skill = match &cfg.skill {
        Some(path) => KnnSkill::load(path)?,
        None => {
            let report = pretrain(cfg)?;
            if report.degenerate {
                log::warn!("pre-trained skill has fewer exemplars than neighbours");
            }
            report.skill
        }
    };
    Ok(PuckSlideTask::new(cfg.puck_slide.clone(), skill))
}

pub fn build_task(cfg: &ExperimentConfig) -> Result<Box<dyn SkillTask>> {
    Ok(match cfg.task {
        TaskKind::BallThrow => Box::new(ball_task(cfg)?),
        TaskKind::PuckSlide => Box::new(puck_task(cfg)?),
    })
}

/// The config's dataset file, or a freshly generated one.
pub fn dataset(cfg: &ExperimentConfig, task: &dyn SkillTask) -> Result<Dataset> {
    match &cfg.dataset {
        Some(path) => Dataset::load(path),
        None => gen_dataset(task, cfg.dataset_size, cfg.zero_fraction, &mut stream_rng(cfg.seed, Stream::Dataset)),
    }
}

pub fn train_model(cfg: &ExperimentConfig, task: &dyn SkillTask, data: &Dataset) -> Result<(AsgModel, TrainingReport)> {
    let key = grounding_key(task);
    if data.header.axis_config_hash != key.axis_config_hash || data.header.skill_id != key.skill_id {
        return Err(Error::StaleConfig {
            model: data.header.axis_config_hash.clone(),
            model_skill: data.header.skill_id.clone(),
            caller: key.axis_config_hash,
            caller_skill: key.skill_id,
        });
    }
    let spec = match &cfg.regressor {
        crate::asg::RegressorSpec::Mlp(h) => crate::asg::RegressorSpec::Mlp(crate::asg::MlpHyper { seed: cfg.seed, ..h.clone() }),
        other => other.clone(),
    };
    train(&data.samples, &key, &spec)
}

/// The config's model file, or a model trained in-line.
pub fn model(cfg: &ExperimentConfig, task: &dyn SkillTask) -> Result<AsgModel> {
    match &cfg.model {
        Some(path) => AsgModel::load(path),
        None => Ok(train_model(cfg, task, &dataset(cfg, task)?)?.0),
    }
}

/// A fresh labelled dataset on a stream disjoint from the training data.
pub fn holdout_dataset(cfg: &ExperimentConfig, task: &dyn SkillTask) -> Result<Dataset> {
    gen_dataset(task, cfg.dataset_size, cfg.zero_fraction, &mut stream_rng(cfg.seed, Stream::Holdout))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub samples: usize,
    /// Per-component root mean squared error of the predicted adjustment.
    pub rmse: Vec<f64>,
    /// Fraction of non-zero labelled components whose predicted sign matches.
    pub sign_agreement: f64,
    /// Mean absolute predicted adjustment on zero-feedback samples.
    pub zero_feedback_shift: Vec<f64>,
}

pub fn evaluate(model: &AsgModel, task: &dyn SkillTask, data: &Dataset) -> Result<EvalReport> {
    let key = grounding_key(task);
    let dim = task.space().dim();
    let (mut sq, mut zero) = (vec![0.0; dim], vec![0.0; dim]);
    let (mut agree, mut signed, mut zeros) = (0usize, 0usize, 0usize);
    for s in &data.samples {
        let pred = model.predict(&key, &s.tau, &s.embedding)?;
        for (d, (p, t)) in pred.iter().zip(&s.delta_tau).enumerate() {
            sq[d] += (p - t).powi(2);
            if s.embedding.is_zero() {
                zero[d] += p.abs();
            } else if *t != 0.0 {
                signed += 1;
                agree += (p.signum() == t.signum()) as usize;
            }
        }
        zeros += s.embedding.is_zero() as usize;
    }
    let n = data.samples.len().max(1) as f64;
    Ok(EvalReport {
        samples: data.samples.len(),
        rmse: sq.iter().map(|v| (v / n).sqrt()).collect(),
        sign_agreement: if signed > 0 { agree as f64 / signed as f64 } else { f64::NAN },
        zero_feedback_shift: zero.iter().map(|v| v / zeros.max(1) as f64).collect(),
    })
}

pub struct ComparisonOutput {
    pub results: Vec<TrialSet>,
    pub summary: ComparisonSummary,
}

/// Runs every trial of `cfg` with `model` on a pool of `cfg.threads` workers.
pub fn run_comparison(cfg: &ExperimentConfig, task: &dyn SkillTask, model: &AsgModel) -> Result<ComparisonOutput> {
    cfg.validate()?;
    let spec = cfg.comparison_spec();
    let grounding = model.bind(grounding_key(task));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results = pool.install(|| run_trials(task, &grounding, &spec))?;
    let summary = summarize(&results, &spec);
    Ok(ComparisonOutput { results, summary })
}

/// Writes `summary.txt`, `summary.csv`, `trials.csv`, one CSV per error curve
/// under `curves/`, and one SVG per trial under `plots/`. Returns the paths.
pub fn write_comparison(out_dir: &Path, cfg: &ExperimentConfig, out: &ComparisonOutput) -> Result<Vec<PathBuf>> {
    let curves = out_dir.join("curves");
    let plots = out_dir.join("plots");
    std::fs::create_dir_all(&curves)?;
    std::fs::create_dir_all(&plots)?;
    let mut written = Vec::new();
    let mut put = |path: PathBuf, body: String| -> Result<()> {
        std::fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put(out_dir.join("summary.txt"), out.summary.table())?;
    put(out_dir.join("summary.csv"), summary_csv(&out.summary))?;
    put(out_dir.join("trials.csv"), trials_csv(&out.results))?;
    let epsilon = cfg.asg_config().epsilon;
    for set in &out.results {
        let trial = set[0].trial;
        for r in set {
            put(curves.join(format!("trial_{trial:03}_{}.csv", r.method.as_str())), curve_csv(r))?;
        }
        put(plots.join(format!("trial_{trial:03}.svg")), error_curves_svg(set, epsilon))?;
    }
    Ok(written)
}
