//! Coaching sessions: the pure update step, history, decimation and replay.

use asg_core::adverbs::parse_phrase;
use asg_core::asg::AsgModel;
use asg_core::envsim::{Outcome, Sample};
use asg_core::harness::grounding_key;
use asg_core::{AdverbEmbedding, Result, SkillTask, TaskKind, TaskParam, Trajectory};
use serde::{Deserialize, Serialize};

/// Most trajectory points returned per rollout.
pub const MAX_POINTS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Active,
    Satisfied,
    Expired,
}

/// Evenly spaced subset of at most `max` points keeping the first and last.
pub fn decimate<T: Clone>(points: &[T], max: usize) -> Vec<T> {
    let n = points.len();
    if n <= max {
        return points.to_vec();
    }
    if max < 2 {
        return points[..max].to_vec();
    }
    (0..max)
        .map(|i| {
            let idx = ((i as f64) * (n - 1) as f64 / (max - 1) as f64).round() as usize;
            points[idx].clone()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryView {
    pub samples: Vec<Sample>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effector: Vec<Sample>,
    pub outcome: Outcome,
    /// What an observer sees as the result, if anything.
    pub terminal: Option<Vec<f64>>,
    /// Sample count before decimation.
    pub full_len: usize,
}

impl From<&Trajectory> for TrajectoryView {
    fn from(t: &Trajectory) -> Self {
        TrajectoryView {
            samples: decimate(&t.samples, MAX_POINTS),
            effector: decimate(&t.effector, MAX_POINTS),
            outcome: t.outcome.clone(),
            terminal: t.outcome.observed().map(|o| o.0),
            full_len: t.samples.len(),
        }
    }
}

/// One executed episode. Entries after the first also carry the feedback and
/// adjustment that produced them, the same triple a training sample stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub episode: usize,
    pub tau: Vec<f64>,
    pub trajectory: TrajectoryView,
    pub phrase: Option<String>,
    pub embedding: Option<AdverbEmbedding>,
    pub delta: Option<Vec<f64>>,
    pub request_id: Option<String>,
    pub at_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub task: TaskKind,
    pub model_id: String,
    pub seed: u64,
    pub status: Status,
    pub created_ms: u64,
    pub updated_ms: u64,
    pub history: Vec<HistoryEntry>,
    /// Request id that marked the session satisfied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub satisfied_request: Option<String>,
    #[serde(skip)]
    pub create_request: Option<String>,
}

impl Session {
    pub fn tau(&self) -> &[f64] {
        &self.history.last().expect("sessions start with one episode").tau
    }

    pub fn phrases(&self) -> Vec<String> {
        self.history.iter().filter_map(|e| e.phrase.clone()).collect()
    }

    pub fn entry_for_request(&self, request_id: &str) -> Option<&HistoryEntry> {
        self.history.iter().find(|e| e.request_id.as_deref() == Some(request_id))
    }
}

/// Whether a phrase ends the session instead of giving feedback.
pub fn is_satisfied_phrase(phrase: &str) -> bool {
    phrase.trim().trim_end_matches(['.', '!']).eq_ignore_ascii_case("satisfied")
}

/// Result of applying one piece of feedback.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub embedding: AdverbEmbedding,
    pub delta: Vec<f64>,
    pub tau: TaskParam,
}

/// `tau' = clip(tau + model(tau, parse(phrase)))`.
pub fn step(task: &dyn SkillTask, model: &AsgModel, tau: &TaskParam, phrase: &str) -> Result<Step> {
    let embedding = parse_phrase(task.axes(), phrase)?;
    let delta = model.predict(&grounding_key(task), tau, &embedding)?;
    let moved: Vec<f64> = tau.0.iter().zip(&delta).map(|(t, d)| t + d).collect();
    Ok(Step { embedding, delta, tau: TaskParam(task.space().clip(&moved)) })
}

/// Re-applies recorded phrases from `tau0`; returns every visited `tau`,
/// starting with `tau0`.
pub fn replay(task: &dyn SkillTask, model: &AsgModel, tau0: &TaskParam, phrases: &[String]) -> Result<Vec<TaskParam>> {
    let mut taus = vec![tau0.clone()];
    for p in phrases {
        let next = step(task, model, taus.last().expect("non-empty"), p)?.tau;
        taus.push(next);
    }
    Ok(taus)
}
