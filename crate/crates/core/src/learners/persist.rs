//! Model files.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | content                                   |
//! |-------|-------------------------------------------|
//! | 8     | magic `DRGHTCST`                          |
//! | 4     | schema version (`u32`, currently 1)       |
//! | 8     | body length in bytes (`u64`)              |
//! | n     | body: [`ModelBundle`] encoded with postcard |
//!
//! The bundle carries everything needed to score raw samples: the task, the
//! feature names in model column order, the class list, the fitted scaler
//! and the model itself. Encoding is deterministic, so identical models
//! produce byte-identical files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Classifier, Model};
use crate::error::{Error, Result};
use crate::preprocess::{ScalerParams, Task};

pub const MAGIC: &[u8; 8] = b"DRGHTCST";
pub const SCHEMA_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub task: Task,
    pub name: String,
    pub feature_names: Vec<String>,
    pub classes: Vec<u32>,
    pub scaler: ScalerParams,
    pub model: Model,
}

impl ModelBundle {
    pub fn new(task: Task, name: impl Into<String>, scaler: ScalerParams, model: Model) -> Result<Self> {
        if scaler.width() != model.n_features() {
            return Err(Error::Dimension {
                expected: scaler.width(),
                found: model.n_features(),
            });
        }
        Ok(ModelBundle {
            task,
            name: name.into(),
            feature_names: scaler.feature_names.clone(),
            classes: model.classes().to_vec(),
            scaler,
            model,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let body = postcard::to_stdvec(self).map_err(|e| Error::Model(e.to_string()))?;
        let mut out = Vec::with_capacity(HEADER_LEN + body.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&SCHEMA_VERSION.to_le_bytes());
        out.extend_from_slice(&(body.len() as u64).to_le_bytes());
        out.extend_from_slice(&body);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
            return Err(Error::Model("not a model file (bad magic)".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != SCHEMA_VERSION {
            return Err(Error::Model(format!(
                "unsupported schema version {version} (expected {SCHEMA_VERSION})"
            )));
        }
        let len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let body = &bytes[HEADER_LEN..];
        if body.len() != len {
            return Err(Error::Model(format!(
                "truncated body: header says {len} bytes, found {}",
                body.len()
            )));
        }
        let bundle: ModelBundle = postcard::from_bytes(body).map_err(|e| Error::Model(e.to_string()))?;
        if bundle.classes != bundle.model.classes() || bundle.scaler.width() != bundle.model.n_features() {
            return Err(Error::Model("bundle metadata disagrees with its model".into()));
        }
        Ok(bundle)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Fails unless `found` lists exactly this model's features in order.
    pub fn check_features(&self, found: &[String]) -> Result<()> {
        if found != self.feature_names.as_slice() {
            return Err(Error::FeatureMismatch {
                expected: self.feature_names.clone(),
                found: found.to_vec(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{fit_forest, ForestParams, Matrix};

    fn bundle() -> ModelBundle {
        let x = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.5], vec![0.9, 0.1]]).unwrap();
        let forest = fit_forest(
            &x,
            &[0, 1, 0, 1],
            &[0, 1],
            &ForestParams {
                n_estimators: 3,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        let scaler = ScalerParams {
            columns: vec![0, 1],
            feature_names: vec!["PRECTOT".into(), "PS".into()],
            min: vec![0.0, 90.0],
            max: vec![10.0, 102.0],
        };
        ModelBundle::new(Task::Presence, "rf", scaler, Model::Forest(forest)).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let b = bundle();
        let bytes = b.to_bytes().unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(ModelBundle::from_bytes(&bytes).unwrap(), b);
        assert_eq!(b.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let mut bytes = bundle().to_bytes().unwrap();
        assert!(ModelBundle::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        bytes[8] = 9;
        assert!(ModelBundle::from_bytes(&bytes).is_err());
        assert!(ModelBundle::from_bytes(b"nonsense").is_err());
    }

    #[test]
    fn feature_check() {
        let b = bundle();
        assert!(b.check_features(&["PRECTOT".into(), "PS".into()]).is_ok());
        let err = b.check_features(&["PRECTOT".into()]).unwrap_err();
        assert!(err.to_string().contains("expected [PRECTOT,PS]"));
    }
}
