//! Task-specific adverb embeddings.
//!
//! An [`AxisConfig`] names one antonym pair per embedding axis. Phrases such
//! as "a little higher and much more to the left" are parsed clause by clause:
//! the pole word picks the axis and sign, an optional modifier picks the
//! magnitude (unmodified clauses get the default magnitude), and the integer
//! grades are divided by the maximum magnitude so every entry lies in
//! `[-1, 1]`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::TaskParam;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoleSynonyms {
    #[serde(default)]
    pub pos: Vec<String>,
    #[serde(default)]
    pub neg: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axis {
    pub pos: String,
    pub neg: String,
    #[serde(default)]
    pub synonyms: PoleSynonyms,
}

impl Axis {
    pub fn new(pos: &str, neg: &str, pos_syn: &[&str], neg_syn: &[&str]) -> Self {
        let owned = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        Axis {
            pos: pos.into(),
            neg: neg.into(),
            synonyms: PoleSynonyms { pos: owned(pos_syn), neg: owned(neg_syn) },
        }
    }

    pub fn name(&self) -> String {
        format!("{}-{}", self.pos, self.neg)
    }
}

fn default_max_magnitude() -> u8 {
    3
}

fn default_magnitude() -> u8 {
    2
}

fn default_null_phrases() -> Vec<String> {
    vec!["perfect".into(), "satisfied".into()]
}

fn default_modifiers() -> BTreeMap<String, u8> {
    BTreeMap::from([
        ("a little".to_string(), 1),
        ("slightly".to_string(), 1),
        ("a bit".to_string(), 1),
        ("much".to_string(), 3),
        ("a lot".to_string(), 3),
    ])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisConfig {
    pub axes: Vec<Axis>,
    #[serde(default = "default_modifiers")]
    pub modifiers: BTreeMap<String, u8>,
    #[serde(default = "default_max_magnitude")]
    pub max_magnitude: u8,
    /// Magnitude of a clause without a modifier.
    #[serde(default = "default_magnitude")]
    pub default_magnitude: u8,
    /// Whole phrases meaning "no change".
    #[serde(default = "default_null_phrases")]
    pub null_phrases: Vec<String>,
}

/// Filler words allowed between a modifier and a pole ("much *more to the* left").
const FILLERS: [&str; 3] = ["more", "to", "the"];

/// Preferred modifier spellings when rendering.
const CANONICAL_MODIFIERS: [&str; 2] = ["a little", "much"];

impl AxisConfig {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        let cfg = AxisConfig {
            axes,
            modifiers: default_modifiers(),
            max_magnitude: default_max_magnitude(),
            default_magnitude: default_magnitude(),
            null_phrases: default_null_phrases(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Axes `(faster-slower, higher-lower)`.
    pub fn ball_throw() -> Self {
        Self::new(vec![
            Axis::new("faster", "slower", &["quicker", "sooner", "earlier"], &["later"]),
            Axis::new("higher", "lower", &["up", "upward"], &["down", "downward"]),
        ])
        .expect("built-in config is valid")
    }

    /// Axes `(higher-lower, right-left)`; `+y` is higher and `+x` is right.
    pub fn puck_slide() -> Self {
        Self::new(vec![
            Axis::new("higher", "lower", &["up", "further", "farther"], &["down", "shorter", "closer"]),
            Axis::new("right", "left", &["rightward"], &["leftward"]),
        ])
        .expect("built-in config is valid")
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::Config("axis config needs at least one axis".into()));
        }
        if self.max_magnitude == 0 || self.default_magnitude == 0 || self.default_magnitude > self.max_magnitude {
            return Err(Error::Config("magnitudes must satisfy 1 <= default <= max".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for axis in &self.axes {
            let words = [&axis.pos, &axis.neg].into_iter().chain(&axis.synonyms.pos).chain(&axis.synonyms.neg);
            for w in words {
                let w = normalize_words(w);
                if w.is_empty() || !seen.insert(w.clone()) {
                    return Err(Error::Config(format!("axis word `{w}` is empty or repeated")));
                }
            }
        }
        for (word, m) in &self.modifiers {
            if *m == 0 || *m > self.max_magnitude {
                return Err(Error::Config(format!("modifier `{word}` has magnitude {m} outside 1..={}", self.max_magnitude)));
            }
        }
        Ok(())
    }

    /// Short content hash embedded in dataset and model headers.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("axis config serializes");
        hex::encode(Sha256::digest(&json))[..16].to_string()
    }

    pub fn axis_names(&self) -> Vec<String> {
        self.axes.iter().map(Axis::name).collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: AxisConfig = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Finds which axis and sign a pole phrase denotes.
    fn pole(&self, words: &str) -> Option<(usize, i32)> {
        self.axes.iter().enumerate().find_map(|(i, axis)| {
            let matches = |w: &String| normalize_words(w) == words;
            if matches(&axis.pos) || axis.synonyms.pos.iter().any(matches) {
                Some((i, 1))
            } else if matches(&axis.neg) || axis.synonyms.neg.iter().any(matches) {
                Some((i, -1))
            } else {
                None
            }
        })
    }

    fn is_vocabulary(&self, token: &str) -> bool {
        FILLERS.contains(&token)
            || self.modifiers.keys().any(|m| m.split_whitespace().any(|w| w == token))
            || self.axes.iter().any(|a| {
                [&a.pos, &a.neg]
                    .into_iter()
                    .chain(&a.synonyms.pos)
                    .chain(&a.synonyms.neg)
                    .any(|w| w.to_lowercase().split_whitespace().any(|p| p == token))
            })
    }
}

fn normalize_words(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalized adverb embedding, one entry per axis in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AdverbEmbedding(pub Vec<f64>);

impl AdverbEmbedding {
    pub fn zeros(dim: usize) -> Self {
        AdverbEmbedding(vec![0.0; dim])
    }

    pub fn from_grades(grades: &[i32], max_magnitude: u8) -> Self {
        AdverbEmbedding(grades.iter().map(|g| *g as f64 / max_magnitude as f64).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }
}

/// Parses a phrase into raw signed integer grades, one per axis.
pub fn parse_grades(cfg: &AxisConfig, phrase: &str) -> Result<Vec<i32>> {
    let mut grades = vec![0i32; cfg.dim()];
    let mut mentioned = vec![false; cfg.dim()];
    let text = normalize_words(&phrase.replace(',', " and "));
    let text = text.trim_end_matches(['.', '!']).trim();
    if text.is_empty() || cfg.null_phrases.iter().any(|p| normalize_words(p) == text) {
        return Ok(grades);
    }
    let tokens: Vec<&str> = text.split_whitespace().collect();

    // Modifiers sorted longest first so "a little" wins over any one-word prefix.
    let mut modifiers: Vec<(Vec<&str>, u8)> =
        cfg.modifiers.iter().map(|(k, v)| (k.split_whitespace().collect(), *v)).collect();
    modifiers.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));

    for clause in tokens.split(|t| *t == "and").filter(|c| !c.is_empty()) {
        let mut rest = clause;
        let mut magnitude = cfg.default_magnitude;
        if let Some((words, m)) = modifiers.iter().find(|(words, _)| rest.starts_with(words)) {
            magnitude = *m;
            rest = &rest[words.len()..];
        }
        if rest.first() == Some(&"more") {
            rest = &rest[1..];
        }
        if rest.starts_with(&["to", "the"]) {
            rest = &rest[2..];
        }
        let pole_words = rest.join(" ");
        let Some((axis, sign)) = cfg.pole(&pole_words) else {
            let offending = rest
                .iter()
                .find(|t| !cfg.is_vocabulary(t))
                .map(|t| t.to_string())
                .unwrap_or_else(|| if pole_words.is_empty() { clause.join(" ") } else { pole_words.clone() });
            return Err(Error::UnknownWord(offending));
        };
        if mentioned[axis] {
            return Err(Error::ConflictingClause(cfg.axes[axis].name()));
        }
        mentioned[axis] = true;
        grades[axis] = sign * magnitude as i32;
    }
    Ok(grades)
}

/// Parses a phrase into a normalized embedding.
pub fn parse_phrase(cfg: &AxisConfig, phrase: &str) -> Result<AdverbEmbedding> {
    Ok(AdverbEmbedding::from_grades(&parse_grades(cfg, phrase)?, cfg.max_magnitude))
}

/// Canonical phrase for an on-grid embedding; `parse_phrase` inverts it.
pub fn render_phrase(cfg: &AxisConfig, emb: &AdverbEmbedding) -> Result<String> {
    if emb.dim() != cfg.dim() {
        return Err(Error::dims(cfg.dim(), emb.dim()));
    }
    let max = cfg.max_magnitude as f64;
    let mut clauses = Vec::new();
    for (axis, v) in cfg.axes.iter().zip(&emb.0) {
        let scaled = v * max;
        let grade = scaled.round();
        if !v.is_finite() || (scaled - grade).abs() > 1e-9 || grade.abs() > max {
            return Err(Error::UnrenderableMagnitude(*v));
        }
        if grade == 0.0 {
            continue;
        }
        let magnitude = grade.abs() as u8;
        let pole = if grade > 0.0 { &axis.pos } else { &axis.neg };
        if magnitude == cfg.default_magnitude {
            clauses.push(pole.clone());
            continue;
        }
        let mut candidates: Vec<&String> =
            cfg.modifiers.iter().filter(|(_, m)| **m == magnitude).map(|(w, _)| w).collect();
        candidates.sort_by_key(|w| (!CANONICAL_MODIFIERS.contains(&w.as_str()), w.as_str()));
        let Some(modifier) = candidates.first() else {
            return Err(Error::UnrenderableMagnitude(*v));
        };
        clauses.push(format!("{modifier} {pole}"));
    }
    Ok(clauses.join(" and "))
}

// ---------------------------------------------------------------------------
// Synthetic labelling oracles

/// Which transcription of the Ball-Throw labelling procedure to run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleVariant {
    /// Each axis is graded and signed by its own component of the change.
    #[default]
    Corrected,
    /// The procedure exactly as printed: the height axis' middle band reads
    /// the time component and both sign flips act on the height grade.
    Verbatim,
}

/// Slack on band edges so a change landing on a threshold up to rounding
/// error stays in the lower grade.
const BAND_SLACK: f64 = 1e-9;

fn band_grade(magnitude: f64, inner: f64, middle: f64, outer: f64) -> i32 {
    let above = |band: f64| magnitude > band + BAND_SLACK;
    if above(inner) {
        if above(outer) {
            3
        } else if above(middle) {
            2
        } else {
            1
        }
    } else {
        0
    }
}

/// Grades the change `tau -> tau_prime` on `(faster-slower, higher-lower)`.
///
/// Band thresholds grow affinely with the starting parameters. A later
/// arrival (`dt >= 0`) is "slower" and a non-positive height change is
/// "lower".
pub fn oracle_label_ball(tau: &TaskParam, tau_prime: &TaskParam) -> [i32; 2] {
    oracle_label_ball_with(OracleVariant::Corrected, tau, tau_prime)
}

pub fn oracle_label_ball_with(variant: OracleVariant, tau: &TaskParam, tau_prime: &TaskParam) -> [i32; 2] {
    let (t0, y0) = (tau.0[0], tau.0[1]);
    let dt = tau_prime.0[0] - t0;
    let dy = tau_prime.0[1] - y0;
    let time_scale = -t0 + 4.0;
    let height_scale = y0 + 15.0;

    let mut t_adv = band_grade(
        dt.abs(),
        0.05 + 0.15 * time_scale,
        0.6 + 0.15 * time_scale,
        1.2 + 0.17 * time_scale,
    );
    let mut y_adv = match variant {
        OracleVariant::Corrected => band_grade(
            dy.abs(),
            0.5 + 0.15 * height_scale,
            6.0 + 0.15 * height_scale,
            12.0 + 0.17 * height_scale,
        ),
        OracleVariant::Verbatim => {
            if dy.abs() > 0.5 + 0.15 * height_scale {
                if dy.abs() > 12.0 + 0.17 * height_scale {
                    3
                } else if dt.abs() > 0.6 + 0.15 * time_scale {
                    2
                } else {
                    1
                }
            } else {
                0
            }
        }
    };
    match variant {
        OracleVariant::Corrected => {
            if dt >= 0.0 {
                t_adv = -t_adv;
            }
            if dy <= 0.0 {
                y_adv = -y_adv;
            }
        }
        OracleVariant::Verbatim => {
            if dt >= 0.0 {
                y_adv = -y_adv;
            }
            if dy <= 0.0 {
                y_adv = -y_adv;
            }
        }
    }
    [t_adv, y_adv]
}

/// Threshold `base + slope * tau[task_index]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineBand {
    pub base: f64,
    #[serde(default)]
    pub slope: f64,
}

impl AffineBand {
    pub const fn constant(base: f64) -> Self {
        AffineBand { base, slope: 0.0 }
    }
}

/// Grading bands for one embedding axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBands {
    /// Task-parameter component this axis describes. A positive change of it
    /// maps to the axis' positive pole.
    pub task_index: usize,
    pub inner: AffineBand,
    pub middle: AffineBand,
    pub outer: AffineBand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandConfig {
    pub axes: Vec<AxisBands>,
}

impl Default for BandConfig {
    /// Bands for Puck-Slide axes `(higher-lower, right-left)` over `tau = [x, y]`.
    fn default() -> Self {
        BandConfig {
            axes: vec![
                AxisBands {
                    task_index: 1,
                    inner: AffineBand::constant(0.04),
                    middle: AffineBand::constant(0.2),
                    outer: AffineBand::constant(0.45),
                },
                AxisBands {
                    task_index: 0,
                    inner: AffineBand::constant(0.04),
                    middle: AffineBand::constant(0.15),
                    outer: AffineBand::constant(0.35),
                },
            ],
        }
    }
}

/// Grades the change `tau -> tau_prime` with configurable bands; a strictly
/// positive change picks the positive pole.
pub fn oracle_label_puck(tau: &TaskParam, tau_prime: &TaskParam, bands: &BandConfig) -> Vec<i32> {
    bands
        .axes
        .iter()
        .map(|b| {
            let x = tau.0[b.task_index];
            let d = tau_prime.0[b.task_index] - x;
            let at = |band: &AffineBand| band.base + band.slope * x;
            let g = band_grade(d.abs(), at(&b.inner), at(&b.middle), at(&b.outer));
            if d > 0.0 { g } else { -g }
        })
        .collect()
}
