//! Experiment configuration (TOML). Fields left out of a file take the
//! defaults of the file's `task`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adverbs::OracleVariant;
use crate::asg::{KrrHyper, RegressorSpec};
use crate::envsim::{BallThrowEnv, PuckSlideEnv};
use crate::error::{Error, Result};
use crate::harness::compare::ComparisonSpec;
use crate::harness::pretrain::PretrainConfig;
use crate::search::{Algorithm, AsgSearchConfig, SearchConfig};
use crate::tasks::TaskKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    /// Seed for dataset generation, training and skill pre-training.
    pub seed: u64,
    /// Trial seeds. Empty means `seed, seed + 1, ...` for `trials` trials.
    pub seeds: Vec<u64>,
    pub trials: usize,
    pub dataset_size: usize,
    /// Zero-feedback samples appended, as a fraction of `dataset_size`.
    pub zero_fraction: f64,
    pub target_interior: f64,
    /// Redraw starts whose outcome already lies within `epsilon` of the target.
    pub nontrivial_starts: bool,
    /// Convergence radius shared by every search; overrides the nested values.
    pub epsilon: Option<f64>,
    pub regressor: RegressorSpec,
    pub search: SearchConfig,
    pub asg: AsgSearchConfig,
    pub baselines: Vec<Algorithm>,
    /// Worker threads for trials; 0 uses every core.
    pub threads: usize,
    pub out_dir: PathBuf,
    /// Pre-trained grounding; trained in-line when absent.
    pub model: Option<PathBuf>,
    /// Dataset to train on; generated in-line when absent.
    pub dataset: Option<PathBuf>,
    /// Pre-trained Puck-Slide skill; pre-trained in-line when absent.
    pub skill: Option<PathBuf>,
    pub oracle: OracleVariant,
    pub ball_throw: BallThrowEnv,
    pub puck_slide: PuckSlideEnv,
    pub pretrain: PretrainConfig,
}

impl ExperimentConfig {
    pub fn defaults_for(task: TaskKind) -> Self {
        match task {
            TaskKind::BallThrow => ExperimentConfig {
                task,
                seed: 0,
                seeds: Vec::new(),
                trials: 100,
                dataset_size: 30,
                zero_fraction: 0.2,
                target_interior: 0.8,
                nontrivial_starts: true,
                epsilon: Some(5.0),
                regressor: RegressorSpec::default(),
                search: SearchConfig { samples_per_update: 10, init_std_fraction: 0.05, ..Default::default() },
                asg: AsgSearchConfig::default(),
                baselines: vec![Algorithm::Pi2Cma],
                threads: 0,
                out_dir: PathBuf::from("out"),
                model: None,
                dataset: None,
                skill: None,
                oracle: OracleVariant::Corrected,
                ball_throw: BallThrowEnv::default(),
                puck_slide: PuckSlideEnv::default(),
                pretrain: PretrainConfig::default(),
            },
            TaskKind::PuckSlide => {
                let env = PuckSlideEnv::default();
                ExperimentConfig {
                    task,
                    trials: 18,
                    dataset_size: 50,
                    epsilon: Some(0.05 * env.table_bounds.diagonal()),
                    regressor: RegressorSpec::Krr(KrrHyper::default()),
                    search: SearchConfig {
                        samples_per_update: 5,
                        elites: 5,
                        init_std_fraction: 0.25,
                        variance_floor: 4e-3,
                        ..Default::default()
                    },
                    puck_slide: env,
                    ..Self::defaults_for(TaskKind::BallThrow)
                }
            }
        }
    }

    /// Parses TOML, filling every missing field from the task's defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        let task = match user.get("task") {
            Some(v) => v
                .as_str()
                .ok_or_else(|| Error::Config("`task` must be a string".into()))?
                .parse::<TaskKind>()
                .map_err(Error::Config)?,
            None => TaskKind::BallThrow,
        };
        let mut merged = toml::Table::try_from(Self::defaults_for(task)).map_err(|e| Error::Config(format!("{e}")))?;
        merge(&mut merged, user);
        let cfg: ExperimentConfig = merged.try_into().map_err(|e: toml::de::Error| Error::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        // Relative artifact paths are relative to the config file.
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.model, &mut cfg.dataset, &mut cfg.skill].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.trial_seeds().is_empty() {
            return Err(Error::Config("trial count must be at least 1".into()));
        }
        if self.dataset_size < 10 {
            return Err(Error::Config(format!("dataset_size {} below the minimum of 10", self.dataset_size)));
        }
        if !(self.target_interior > 0.0 && self.target_interior <= 1.0) {
            return Err(Error::Config(format!("target_interior {} outside (0, 1]", self.target_interior)));
        }
        let search = self.search_config();
        search.validate()?;
        let asg = self.asg_config();
        if !(asg.epsilon > 0.0) || asg.max_episodes == 0 || !(asg.step_scale > 0.0) {
            return Err(Error::Config(format!("invalid asg settings {asg:?}")));
        }
        if search.epsilon != asg.epsilon {
            return Err(Error::Config(format!(
                "search.epsilon {} and asg.epsilon {} differ; set the top-level epsilon",
                search.epsilon, asg.epsilon
            )));
        }
        Ok(())
    }

    pub fn trial_seeds(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.trials as u64).map(|i| self.seed.wrapping_add(i)).collect()
        } else {
            self.seeds.clone()
        }
    }

    pub fn search_config(&self) -> SearchConfig {
        SearchConfig { epsilon: self.epsilon.unwrap_or(self.search.epsilon), ..self.search.clone() }
    }

    pub fn asg_config(&self) -> AsgSearchConfig {
        AsgSearchConfig { epsilon: self.epsilon.unwrap_or(self.asg.epsilon), ..self.asg.clone() }
    }

    pub fn comparison_spec(&self) -> ComparisonSpec {
        ComparisonSpec {
            seeds: self.trial_seeds(),
            baselines: self.baselines.clone(),
            search: self.search_config(),
            asg: self.asg_config(),
            target_interior: self.target_interior,
            nontrivial_starts: self.nontrivial_starts,
        }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::defaults_for(TaskKind::BallThrow)
    }
}

/// Recursively overlays `over` onto `base`; tables merge, anything else
/// replaces. A table naming a `kind` replaces the default wholesale.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if !o.contains_key("kind") => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_ball_throw_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::defaults_for(TaskKind::BallThrow));
        assert_eq!(cfg.trial_seeds().len(), 100);
    }

    #[test]
    fn task_selects_its_defaults_and_nested_overrides_merge() {
        let cfg = ExperimentConfig::from_toml(
            "task = \"puck_slide\"\ntrials = 4\n[search]\nmax_updates = 7\n[pretrain]\nn_goals = 9\n",
        )
        .unwrap();
        assert_eq!(cfg.task, TaskKind::PuckSlide);
        assert_eq!(cfg.trials, 4);
        assert_eq!(cfg.search.max_updates, 7);
        assert_eq!(cfg.search.samples_per_update, 5);
        assert_eq!(cfg.pretrain.n_goals, 9);
        assert_eq!(cfg.dataset_size, 50);
        assert!(matches!(cfg.regressor, RegressorSpec::Krr(_)));
    }

    #[test]
    fn regressor_kind_switch() {
        let cfg = ExperimentConfig::from_toml("[regressor]\nkind = \"knn\"\nk = 4\n").unwrap();
        assert_eq!(cfg.regressor, RegressorSpec::Knn { k: 4 });
        let cfg = ExperimentConfig::from_toml("[regressor]\nkind = \"mlp\"\nepochs = 5\n").unwrap();
        assert!(matches!(cfg.regressor, RegressorSpec::Mlp(ref h) if h.epochs == 5 && h.hidden == vec![32, 32]));
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_toml("trials = 0").is_err());
        assert!(ExperimentConfig::from_toml("dataset_size = 5").is_err());
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("task = \"juggling\"").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        for task in [TaskKind::BallThrow, TaskKind::PuckSlide] {
            let cfg = ExperimentConfig::defaults_for(task);
            assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        }
    }
}
