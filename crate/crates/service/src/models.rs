//! Models available to sessions, discovered in a directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use asg_core::asg::AsgModel;
use asg_core::envsim::{BallThrowEnv, PuckSlideEnv};
use asg_core::harness::grounding_key;
use asg_core::skills::KnnSkill;
use asg_core::{AxisConfig, BallThrowTask, Bounds, PuckSlideTask, SkillTask, TaskKind};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub type SharedTask = Arc<dyn SkillTask + Send + Sync>;

/// A grounding bound to the task it was trained for.
#[derive(Clone)]
pub struct LoadedModel {
    pub id: String,
    pub path: PathBuf,
    /// SHA-256 of the model file.
    pub sha256: String,
    pub model: Arc<AsgModel>,
    pub task: SharedTask,
}

/// What the UI needs to draw a task and compose phrases for it.
#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub id: String,
    pub task: TaskKind,
    pub kind: &'static str,
    pub sha256: String,
    pub axis_config_hash: String,
    pub skill_id: String,
    pub axes: AxisConfig,
    pub space: Bounds,
    pub env: serde_json::Value,
}

impl LoadedModel {
    pub fn info(&self) -> ModelInfo {
        let env = match self.task.kind() {
            TaskKind::BallThrow => serde_json::to_value(BallThrowEnv::default()),
            TaskKind::PuckSlide => serde_json::to_value(PuckSlideEnv::default()),
        }
        .expect("env serializes");
        ModelInfo {
            id: self.id.clone(),
            task: self.task.kind(),
            kind: self.model.kind(),
            sha256: self.sha256.clone(),
            axis_config_hash: self.model.axis_config_hash.clone(),
            skill_id: self.model.skill_id.clone(),
            axes: self.task.axes().clone(),
            space: self.task.space().clone(),
            env,
        }
    }
}

#[derive(Clone, Default)]
pub struct ModelRegistry {
    models: BTreeMap<String, LoadedModel>,
}

impl ModelRegistry {
    /// Loads every `*.json` grounding in `dir` whose task can be built:
    /// Ball-Throw with the default environment, or Puck-Slide with a skill
    /// file in the same directory. Other files are skipped.
    pub fn scan(dir: &Path) -> std::io::Result<Self> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let mut models = Vec::new();
        let mut skills = Vec::new();
        for path in files {
            let Ok(bytes) = std::fs::read(&path) else { continue };
            let text = String::from_utf8_lossy(&bytes);
            if let Ok(model) = AsgModel::from_json(&text) {
                models.push((path, hex::encode(Sha256::digest(&bytes)), model));
            } else if let Ok(skill) = serde_json::from_str::<KnnSkill>(&text) {
                skills.push(skill);
            }
        }
        let ball: SharedTask = Arc::new(BallThrowTask::default());
        let pucks: Vec<SharedTask> = skills
            .into_iter()
            .map(|s| Arc::new(PuckSlideTask::new(PuckSlideEnv::default(), s)) as SharedTask)
            .collect();
        let mut registry = ModelRegistry::default();
        for (path, sha256, model) in models {
            let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let task = std::iter::once(&ball).chain(&pucks).find(|t| grounding_key(t.as_ref()) == model.key()).cloned();
            match task {
                Some(task) => registry.insert(LoadedModel { id, path, sha256, model: Arc::new(model), task }),
                None => log::warn!("{}: no task matches skill {}", path.display(), model.skill_id),
            }
        }
        Ok(registry)
    }

    pub fn insert(&mut self, m: LoadedModel) {
        self.models.insert(m.id.clone(), m);
    }

    pub fn get(&self, id: &str) -> Option<&LoadedModel> {
        self.models.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &LoadedModel> {
        self.models.values()
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}
