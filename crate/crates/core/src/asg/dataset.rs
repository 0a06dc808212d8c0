//! Grounding datasets as JSON Lines: one header line, then one sample per line.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adverbs::AdverbEmbedding;
use crate::error::{Error, Result};
use crate::task::{Bounds, TaskParam};

pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// One labelled change: feedback `embedding` describes moving from `tau` to
/// `tau + delta_tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsgSample {
    pub embedding: AdverbEmbedding,
    pub tau: TaskParam,
    pub delta_tau: Vec<f64>,
}

impl AsgSample {
    /// Regressor input: `tau` then the embedding.
    pub fn features(&self) -> Vec<f64> {
        self.tau.0.iter().chain(&self.embedding.0).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema_version: u32,
    pub axis_config_hash: String,
    /// Axis names in embedding order.
    pub axes: Vec<String>,
    pub skill_id: String,
    pub bounds: Bounds,
    /// Labelled pairs; the remaining samples are zero-feedback augmentation.
    pub labelled: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub samples: Vec<AsgSample>,
}

impl Dataset {
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", to_line(&self.header))?;
        for s in &self.samples {
            writeln!(out, "{}", to_line(s))?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn read_jsonl<R: std::io::Read>(input: R) -> Result<Self> {
        let mut lines = BufReader::new(input).lines();
        let first = lines.next().ok_or_else(|| Error::CorruptFile("empty dataset".into()))??;
        let header: DatasetHeader =
            serde_json::from_str(&first).map_err(|e| Error::CorruptFile(format!("header: {e}")))?;
        if header.schema_version != DATASET_SCHEMA_VERSION {
            return Err(Error::SchemaVersionMismatch { found: header.schema_version, expected: DATASET_SCHEMA_VERSION });
        }
        let mut samples = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let s: AsgSample =
                serde_json::from_str(&line).map_err(|e| Error::CorruptFile(format!("line {}: {e}", i + 2)))?;
            if s.embedding.dim() != header.axes.len() {
                return Err(Error::dims(header.axes.len(), s.embedding.dim()));
            }
            if s.tau.dim() != header.bounds.dim() || s.delta_tau.len() != header.bounds.dim() {
                return Err(Error::dims(header.bounds.dim(), s.tau.dim()));
            }
            samples.push(s);
        }
        Ok(Dataset { header, samples })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_jsonl(std::fs::File::open(path)?)
    }
}

fn to_line<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("dataset records serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let ds = Dataset {
            header: DatasetHeader {
                schema_version: DATASET_SCHEMA_VERSION,
                axis_config_hash: "h".into(),
                axes: vec!["faster-slower".into(), "higher-lower".into()],
                skill_id: "ball_throw".into(),
                bounds: Bounds::new([0.5, -15.0], [4.0, 15.0]).unwrap(),
                labelled: 1,
            },
            samples: vec![AsgSample {
                embedding: AdverbEmbedding(vec![1.0 / 3.0, -1.0]),
                tau: TaskParam::new([1.0, 2.0]),
                delta_tau: vec![-0.1, -12.5],
            }],
        };
        let mut buf = Vec::new();
        ds.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().next().unwrap().contains("axis_config_hash"));
        assert_eq!(Dataset::read_jsonl(&buf[..]).unwrap(), ds);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(Dataset::read_jsonl(&b""[..]), Err(Error::CorruptFile(_))));
        assert!(matches!(Dataset::read_jsonl(&b"{not json\n"[..]), Err(Error::CorruptFile(_))));
    }
}
