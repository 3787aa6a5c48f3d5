//! Versioned JSON model files.
//!
//! ```text
//! {
//!   "version": 1,
//!   "dim": 2,
//!   "regions": [{"id": 0, "center": [..], "scale": [..], "count": 3, "members": [..]}],
//!   "merge_log": [{"level": 2, "survivor": 0, "absorbed": 1, "distance": 0.0}],
//!   "config": {...},
//!   "dataset_fingerprint": "…"
//! }
//! ```
//!
//! Numbers are written in shortest round-trip form, so reading a written model
//! reproduces every center and scale bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::{ClusterModel, EngineConfig, MergeEvent, Region};
use crate::error::{Error, Result};
use crate::metric::{FeatVec, ProbSpace};

pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionRecord {
    id: usize,
    center: Vec<f64>,
    scale: Vec<f64>,
    count: usize,
    members: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    dim: usize,
    regions: Vec<RegionRecord>,
    merge_log: Vec<MergeEvent>,
    config: EngineConfig,
    dataset_fingerprint: String,
}

fn format_err(path: impl Into<String>, message: impl ToString) -> Error {
    Error::Format {
        path: path.into(),
        message: message.to_string(),
    }
}

impl TryFrom<&ClusterModel> for ModelFile {
    type Error = Error;

    fn try_from(model: &ClusterModel) -> Result<Self> {
        let regions = model
            .regions
            .iter()
            .map(|r| {
                let s = r.fitted()?;
                Ok(RegionRecord {
                    id: r.id,
                    center: s.center().to_vec(),
                    scale: s.scale().to_vec(),
                    count: s.count(),
                    members: r.members.clone(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(ModelFile {
            version: MODEL_VERSION,
            dim: model.dim,
            regions,
            merge_log: model.merge_log.clone(),
            config: model.config,
            dataset_fingerprint: model.dataset_fingerprint.clone(),
        })
    }
}

impl ModelFile {
    fn into_model(self) -> Result<ClusterModel> {
        let regions = self
            .regions
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let center = FeatVec::new(r.center)
                    .map_err(|e| format_err(format!("regions[{i}].center"), e))?;
                let space = ProbSpace::new(center, r.scale, r.count)
                    .map_err(|e| format_err(format!("regions[{i}].scale"), e))?;
                Ok(Region {
                    id: r.id,
                    members: r.members,
                    space: Some(space),
                })
            })
            .collect::<Result<_>>()?;
        let model = ClusterModel {
            regions,
            dim: self.dim,
            merge_log: self.merge_log,
            config: self.config,
            dataset_fingerprint: self.dataset_fingerprint,
        };
        model.validate()?;
        model
            .config
            .validate()
            .map_err(|e| format_err("config", e))?;
        Ok(model)
    }
}

/// Serializes a model to its pretty-printed JSON text.
pub fn model_to_string(model: &ClusterModel) -> Result<String> {
    let file = ModelFile::try_from(model)?;
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| format_err("$", e))?;
    text.push('\n');
    Ok(text)
}

/// Parses model text, checking the version before the schema.
pub fn model_from_str(text: &str) -> Result<ClusterModel> {
    let value: Value = serde_json::from_str(text).map_err(|e| format_err("$", e))?;
    let version = value
        .get("version")
        .ok_or_else(|| format_err("version", "missing field"))?;
    if version.as_u64() != Some(u64::from(MODEL_VERSION)) {
        let found = match version {
            Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        return Err(Error::Version {
            found,
            expected: MODEL_VERSION,
        });
    }
    let file: ModelFile = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        format_err(path, e.into_inner())
    })?;
    file.into_model()
}

pub fn write_model(model: &ClusterModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = model_to_string(model)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ClusterModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}
