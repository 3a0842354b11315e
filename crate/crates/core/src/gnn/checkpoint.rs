//! JSON model checkpoints.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::model::GcnModel;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    layer_dims: Vec<usize>,
    frozen_prefix: usize,
    /// Row-major `dims[l] x dims[l+1]` matrices.
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl GcnModel {
    pub fn to_json(&self) -> Result<String> {
        let ck = Checkpoint {
            format_version: CHECKPOINT_VERSION,
            layer_dims: self.layer_dims(),
            frozen_prefix: self.frozen_prefix(),
            weights: self.weights.iter().map(|w| w.iter().copied().collect()).collect(),
            biases: self.biases.iter().map(|b| b.to_vec()).collect(),
        };
        Ok(serde_json::to_string(&ck)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format_version != CHECKPOINT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ck.format_version
            )));
        }
        let layers = ck.layer_dims.len().saturating_sub(1);
        if ck.weights.len() != layers || ck.biases.len() != layers {
            return Err(Error::Shape("checkpoint layer count mismatch".into()));
        }
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for l in 0..layers {
            let (r, c) = (ck.layer_dims[l], ck.layer_dims[l + 1]);
            let w = Array2::from_shape_vec((r, c), ck.weights[l].clone())
                .map_err(|e| Error::Shape(format!("layer {l} weights: {e}")))?;
            weights.push(w);
            biases.push(Array1::from(ck.biases[l].clone()));
        }
        GcnModel::from_parts(weights, biases, ck.frozen_prefix)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::model::GcnConfig;

    #[test]
    fn json_round_trip_is_exact() {
        let cfg = GcnConfig {
            hidden: 5,
            layers: 3,
            frozen_prefix: 2,
        };
        let m = GcnModel::new(4, 3, &cfg, 17).unwrap();
        let back = GcnModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn version_is_checked() {
        let m = GcnModel::new(2, 2, &GcnConfig::default(), 0).unwrap();
        let text = m.to_json().unwrap().replace("\"format_version\":1", "\"format_version\":9");
        assert!(GcnModel::from_json(&text).is_err());
    }
}
