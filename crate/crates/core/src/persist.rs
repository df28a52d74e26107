//! Versioned JSON model documents.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::Schema;
use crate::error::{Error, Result};
use crate::ingest::{MinMaxScaler, SchemaConfig};
use crate::metrics::GroupPair;
use crate::predictors::PredictorSet;

pub const FORMAT: &str = "fairadjust-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub schema_fingerprint: String,
    /// Scaling applied to raw inputs before scoring.
    #[serde(default)]
    pub normalization: MinMaxScaler,
    #[serde(default)]
    pub groups: Vec<GroupPair>,
    /// Input layout for scoring raw files, with levels pinned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<SchemaConfig>,
    pub predictors: PredictorSet,
}

impl ModelDocument {
    pub fn new(
        predictors: PredictorSet,
        normalization: MinMaxScaler,
        groups: Vec<GroupPair>,
    ) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            schema_fingerprint: predictors.components.schema().fingerprint(),
            normalization,
            groups,
            input: None,
            predictors,
        }
    }

    pub fn with_input(mut self, cfg: &SchemaConfig) -> Self {
        self.input = Some(cfg.pinned(self.predictors.components.schema()));
        self
    }

    pub fn schema(&self) -> &Schema {
        self.predictors.components.schema()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format != FORMAT {
            return Err(Error::ModelFormat(format!(
                "unrecognized format `{}`",
                doc.format
            )));
        }
        if doc.version != VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported version {}; this build reads version {VERSION}",
                doc.version
            )));
        }
        let fp = doc.schema().fingerprint();
        if fp != doc.schema_fingerprint {
            return Err(Error::ModelFormat(
                "schema fingerprint does not match the embedded schema".into(),
            ));
        }
        Ok(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictors::PredictorKind;
    use crate::scm_sim::{simulate, ScmParams, SimSpec};

    fn doc() -> ModelDocument {
        let data = simulate(&SimSpec {
            params: ScmParams::default(),
            n: 500,
            seed: 2,
        })
        .unwrap();
        let set = PredictorSet::fit(&data).unwrap();
        let groups = GroupPair::defaults(data.schema());
        ModelDocument::new(set, MinMaxScaler::default(), groups)
    }

    #[test]
    fn round_trip_preserves_scores() {
        let d = doc();
        let back = ModelDocument::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
        let a = [crate::domain::AttrValue::Num(0.61)];
        for kind in PredictorKind::ALL {
            let x = d.predictors.get(kind).score(&[1], &a).unwrap();
            let y = back.predictors.get(kind).score(&[1], &a).unwrap();
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn rejects_foreign_documents() {
        let d = doc();
        let mut v: serde_json::Value = serde_json::from_str(&d.to_json().unwrap()).unwrap();
        v["version"] = 99.into();
        assert!(matches!(
            ModelDocument::from_json(&v.to_string()),
            Err(Error::ModelFormat(_))
        ));
        v["version"] = VERSION.into();
        v["schema_fingerprint"] = "00".into();
        assert!(matches!(
            ModelDocument::from_json(&v.to_string()),
            Err(Error::ModelFormat(_))
        ));
        v["format"] = "other".into();
        assert!(ModelDocument::from_json(&v.to_string()).is_err());
    }
}
