//! Synthetic grounding data: random pairs labelled by the task's oracle.

use rand::Rng;

use crate::adverbs::AdverbEmbedding;
use crate::asg::dataset::DATASET_SCHEMA_VERSION;
use crate::asg::{AsgSample, Dataset, DatasetHeader, GroundingKey};
use crate::error::{Error, Result};
use crate::tasks::SkillTask;

/// Attempts per requested pair before giving up on pairs whose episodes
/// produce no observable outcome.
const ATTEMPTS_PER_PAIR: usize = 20;

pub fn grounding_key(task: &dyn SkillTask) -> GroundingKey {
    GroundingKey { axis_config_hash: task.axes().hash(), skill_id: task.skill_id() }
}

/// Collects `size` labelled pairs: draw `tau` and `tau'` uniformly from `T`,
/// execute both, label the change between the observed outcomes, and store
/// `delta_tau = tau' - tau`. Then appends `round(zero_fraction * size)`
/// samples at random `tau` with zero feedback and zero adjustment.
pub fn gen_dataset<R: Rng + ?Sized>(
    task: &dyn SkillTask,
    size: usize,
    zero_fraction: f64,
    rng: &mut R,
) -> Result<Dataset> {
    if size == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if !(0.0..=1.0).contains(&zero_fraction) {
        return Err(Error::Config(format!("zero_fraction {zero_fraction} outside [0, 1]")));
    }
    let space = task.space();
    let axes = task.axes();
    let mut samples = Vec::with_capacity(size);
    let mut attempts = 0;
    while samples.len() < size {
        attempts += 1;
        if attempts > size * ATTEMPTS_PER_PAIR {
            return Err(Error::InsufficientData { needed: size, got: samples.len() });
        }
        let tau = space.sample(rng);
        let tau_prime = space.sample(rng);
        let a = task.execute(&tau)?.outcome.observed();
        let b = task.execute(&tau_prime)?.outcome.observed();
        let (Some(a), Some(b)) = (a, b) else {
            continue;
        };
        let grades = task.label(&a, &b);
        samples.push(AsgSample {
            embedding: AdverbEmbedding::from_grades(&grades, axes.max_magnitude),
            delta_tau: tau.delta_to(&tau_prime)?,
            tau,
        });
    }
    let extra = (zero_fraction * size as f64).round() as usize;
    for _ in 0..extra {
        let tau = space.sample(rng);
        samples.push(AsgSample {
            embedding: AdverbEmbedding::zeros(axes.dim()),
            delta_tau: vec![0.0; tau.dim()],
            tau,
        });
    }
    let key = grounding_key(task);
    Ok(Dataset {
        header: DatasetHeader {
            schema_version: DATASET_SCHEMA_VERSION,
            axis_config_hash: key.axis_config_hash,
            axes: axes.axis_names(),
            skill_id: key.skill_id,
            bounds: space.clone(),
            labelled: size,
        },
        samples,
    })
}
