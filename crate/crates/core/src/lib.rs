//! Simulated skills, adverb feedback, learned groundings and the searches
//! that use them.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adverbs;
pub mod asg;
pub mod envsim;
pub mod error;
pub mod harness;
pub mod search;
pub mod skills;
pub mod task;
pub mod tasks;

pub use adverbs::{AdverbEmbedding, AxisConfig};
pub use envsim::{Outcome, PolicyParams, Trajectory};
pub use error::{Error, Result};
pub use task::{Bounds, TaskParam};
pub use tasks::{BallThrowTask, PuckSlideTask, SkillTask, TaskKind};
