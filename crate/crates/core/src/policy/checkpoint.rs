//! JSON tensor dump: a manifest of named, shaped, row-major tensors.

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::network::{PolicyParams, PolicyShape};
use super::normalize::ObsNormalizer;
use super::PolicyError;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub shape: PolicyShape,
    pub tensors: Vec<TensorRecord>,
    pub obs_norm: ObsNormalizer,
    /// Caller-defined metadata (agent, advisor, training progress).
    #[serde(default)]
    pub meta: serde_json::Value,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: Option<u32>,
}

impl Checkpoint {
    pub fn new(params: &PolicyParams, obs_norm: &ObsNormalizer, meta: serde_json::Value) -> Self {
        let tensors = params
            .names()
            .iter()
            .zip(params.tensors())
            .map(|(name, t)| TensorRecord {
                name: name.clone(),
                shape: [t.nrows(), t.ncols()],
                data: t.iter().copied().collect(),
            })
            .collect();
        Self {
            version: CHECKPOINT_VERSION,
            shape: params.shape().clone(),
            tensors,
            obs_norm: obs_norm.clone(),
            meta,
        }
    }

    pub fn params(&self) -> Result<PolicyParams, PolicyError> {
        let tensors = self
            .tensors
            .iter()
            .map(|r| {
                Array2::from_shape_vec((r.shape[0], r.shape[1]), r.data.clone())
                    .map(|a| (r.name.clone(), a))
                    .map_err(|e| PolicyError::CheckpointCorrupt(format!("tensor {}: {e}", r.name)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        PolicyParams::from_tensors(self.shape.clone(), tensors)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let probe: VersionProbe =
            serde_json::from_str(text).map_err(|e| PolicyError::CheckpointCorrupt(e.to_string()))?;
        match probe.version {
            Some(CHECKPOINT_VERSION) => {}
            found => {
                return Err(PolicyError::CheckpointVersion {
                    found,
                    expected: CHECKPOINT_VERSION,
                })
            }
        }
        let ckpt: Checkpoint = serde_json::from_str(text).map_err(|e| PolicyError::CheckpointCorrupt(e.to_string()))?;
        if ckpt.obs_norm.dim() != ckpt.shape.obs_dim {
            return Err(PolicyError::CheckpointCorrupt("normalizer width does not match the network".into()));
        }
        ckpt.params()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_json())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PolicyParams {
        let shape = PolicyShape {
            obs_dim: 18,
            extractor: 4,
            actor: vec![3],
            critic: vec![3],
        };
        PolicyParams::init(shape, 5).unwrap()
    }

    #[test]
    fn roundtrip_is_exact() {
        let p = small();
        let mut norm = ObsNormalizer::new(18);
        norm.update(&[0.1; 18]).unwrap();
        let c = Checkpoint::new(&p, &norm, serde_json::json!({"agent": "covlm"}));
        let back = Checkpoint::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.params().unwrap(), p);
    }

    #[test]
    fn version_and_corruption_errors() {
        let c = Checkpoint::new(&small(), &ObsNormalizer::new(18), serde_json::Value::Null);
        let mut v: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        v["version"] = 7.into();
        assert!(matches!(
            Checkpoint::from_json(&v.to_string()),
            Err(PolicyError::CheckpointVersion { found: Some(7), expected: 1 })
        ));
        assert!(matches!(
            Checkpoint::from_json("{\"weights\": 3"),
            Err(PolicyError::CheckpointCorrupt(_))
        ));
        v["version"] = 1.into();
        v["tensors"][0]["data"] = serde_json::json!([1.0]);
        assert!(matches!(Checkpoint::from_json(&v.to_string()), Err(PolicyError::CheckpointCorrupt(_))));
    }
}
