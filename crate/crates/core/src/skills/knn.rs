//! K-nearest-neighbour parameterized skill: task parameters to DMP parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envsim::PolicyParams;
use crate::error::{Error, Result};
use crate::task::TaskParam;

const DISTANCE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub tau: TaskParam,
    pub theta: PolicyParams,
}

/// Lazy learner storing `(tau, theta)` exemplars verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnSkill {
    pub k: usize,
    pub exemplars: Vec<Exemplar>,
}

/// Builds a skill from training episodes. Task parameters must be distinct.
pub fn fit_knn_skill(episodes: Vec<(TaskParam, PolicyParams)>, k: usize) -> Result<KnnSkill> {
    if k == 0 || episodes.len() < k {
        return Err(Error::InsufficientData { needed: k.max(1), got: episodes.len() });
    }
    let (tau_dim, theta_dim) = (episodes[0].0.dim(), episodes[0].1.len());
    for (i, (tau, theta)) in episodes.iter().enumerate() {
        if tau.dim() != tau_dim {
            return Err(Error::dims(tau_dim, tau.dim()));
        }
        if theta.len() != theta_dim {
            return Err(Error::dims(theta_dim, theta.len()));
        }
        if episodes[..i].iter().any(|(other, _)| other == tau) {
            return Err(Error::DuplicateTask(tau.0.clone()));
        }
    }
    Ok(KnnSkill {
        k,
        exemplars: episodes.into_iter().map(|(tau, theta)| Exemplar { tau, theta }).collect(),
    })
}

/// Inverse-distance-weighted average of the `k` nearest exemplars' policy
/// parameters. A query sitting on an exemplar returns that exemplar exactly.
pub fn knn_predict(skill: &KnnSkill, tau: &TaskParam) -> Result<PolicyParams> {
    if skill.exemplars.is_empty() {
        return Err(Error::EmptySkill);
    }
    let dim = skill.exemplars[0].tau.dim();
    if tau.dim() != dim {
        return Err(Error::dims(dim, tau.dim()));
    }
    let mut by_distance: Vec<(f64, usize)> = skill
        .exemplars
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let d = e.tau.0.iter().zip(&tau.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            (d, i)
        })
        .collect();
    by_distance.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    if by_distance[0].0 == 0.0 {
        return Ok(skill.exemplars[by_distance[0].1].theta.clone());
    }
    let k = skill.k.clamp(1, by_distance.len());
    let theta_dim = skill.exemplars[0].theta.len();
    let mut out = vec![0.0; theta_dim];
    let mut total = 0.0;
    for &(d, i) in &by_distance[..k] {
        let w = 1.0 / (d + DISTANCE_EPS);
        total += w;
        for (o, v) in out.iter_mut().zip(&skill.exemplars[i].theta.0) {
            *o += w * v;
        }
    }
    out.iter_mut().for_each(|o| *o /= total);
    Ok(PolicyParams(out))
}

impl KnnSkill {
    pub fn predict(&self, tau: &TaskParam) -> Result<PolicyParams> {
        knn_predict(self, tau)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::CorruptFile(e.to_string()))?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let skill: KnnSkill = serde_json::from_str(&text).map_err(|e| Error::CorruptFile(e.to_string()))?;
        if skill.k == 0 || skill.exemplars.len() < skill.k {
            return Err(Error::CorruptFile("k must be between 1 and the exemplar count".into()));
        }
        Ok(skill)
    }

    /// Stable identifier derived from the skill's content.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("skill serializes");
        hex::encode(Sha256::digest(&json))[..16].to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ep(tau: [f64; 2], theta: [f64; 3]) -> (TaskParam, PolicyParams) {
        (tau.into(), PolicyParams::new(theta))
    }

    #[test]
    fn exact_on_exemplar() {
        let s = fit_knn_skill(vec![ep([0.0, 0.0], [1.0, 2.0, 3.0]), ep([1.0, 0.0], [4.0, 5.0, 6.0])], 2).unwrap();
        assert_eq!(knn_predict(&s, &[1.0, 0.0].into()).unwrap().0, vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn k1_is_nearest() {
        let s = fit_knn_skill(vec![ep([0.0, 0.0], [1.0, 1.0, 1.0]), ep([1.0, 0.0], [2.0, 2.0, 2.0])], 1).unwrap();
        assert_eq!(knn_predict(&s, &[0.8, 0.3].into()).unwrap().0, vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn equidistant_pair_averages() {
        let s = fit_knn_skill(
            vec![ep([0.0, 0.0], [1.0, 3.0, 5.0]), ep([2.0, 0.0], [3.0, 5.0, 9.0]), ep([9.0, 9.0], [0.0, 0.0, 0.0])],
            2,
        )
        .unwrap();
        let got = knn_predict(&s, &[1.0, 0.0].into()).unwrap();
        for (g, e) in got.0.iter().zip([2.0, 4.0, 7.0]) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn single_exemplar_is_constant() {
        let s = fit_knn_skill(vec![ep([0.5, 0.5], [7.0, 8.0, 9.0])], 1).unwrap();
        assert_eq!(knn_predict(&s, &[3.0, -2.0].into()).unwrap().0, vec![7.0, 8.0, 9.0]);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(
            fit_knn_skill(vec![ep([0.0, 0.0], [1.0, 1.0, 1.0])], 2),
            Err(Error::InsufficientData { .. })
        ));
        assert!(matches!(
            fit_knn_skill(vec![ep([0.0, 0.0], [1.0, 1.0, 1.0]), ep([0.0, 0.0], [2.0, 2.0, 2.0])], 1),
            Err(Error::DuplicateTask(_))
        ));
        let empty = KnnSkill { k: 1, exemplars: vec![] };
        assert!(matches!(knn_predict(&empty, &[0.0, 0.0].into()), Err(Error::EmptySkill)));
    }

    #[test]
    fn json_round_trip() {
        let s = fit_knn_skill(vec![ep([0.0, 1.0], [1.0, 2.0, 3.0])], 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("skill.json");
        s.save(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["k"], 1);
        assert_eq!(v["exemplars"][0]["tau"], serde_json::json!([0.0, 1.0]));
        assert_eq!(KnnSkill::load(&path).unwrap(), s);
    }
}
