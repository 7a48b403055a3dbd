//! Prediction requests and responses shared by the CLI and the HTTP server,
//! so both surfaces produce the same numbers for the same inputs.

use std::fmt;

use ppv_core::data::{Feature, PileDrivingRecord, SensorDirection, SensorLocation};
use ppv_core::explain::{shap_exact, ShapResult};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model_file::{model_version, SavedModel};

/// Enum input given either as its integer code or as a name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeOrName {
    Code(i64),
    Name(String),
}

impl fmt::Display for CodeOrName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeOrName::Code(c) => write!(f, "{c}"),
            CodeOrName::Name(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for CodeOrName {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().parse::<i64>() {
            Ok(c) => CodeOrName::Code(c),
            Err(_) => CodeOrName::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    #[serde(alias = "pile_size")]
    pub pile_size_mm: f64,
    #[serde(alias = "pile_length")]
    pub pile_length_m: f64,
    #[serde(alias = "hammer_weight")]
    pub hammer_weight_ton: f64,
    #[serde(alias = "drop_height")]
    pub drop_height_m: f64,
    #[serde(alias = "distance")]
    pub distance_m: f64,
    pub sensor_location: CodeOrName,
    pub sensor_direction: CodeOrName,
    #[serde(default)]
    pub explain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureAttribution {
    pub feature: String,
    pub value: f64,
    pub phi_mm_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapPayload {
    pub baseline_mm_s: f64,
    pub prediction_mm_s: f64,
    /// Schema order.
    pub phi: Vec<FeatureAttribution>,
}

impl ShapPayload {
    fn new(record: &PileDrivingRecord, s: &ShapResult) -> Self {
        let x = record.features();
        Self {
            baseline_mm_s: s.baseline,
            prediction_mm_s: s.prediction,
            phi: Feature::ALL
                .iter()
                .map(|f| FeatureAttribution {
                    feature: f.name().to_string(),
                    value: x[f.index()],
                    phi_mm_s: s.phi[f.index()],
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub ppv_mm_s: f64,
    pub model_version: String,
    pub sensor_location: String,
    pub sensor_direction: String,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shap: Option<ShapPayload>,
}

#[derive(Debug, Error)]
pub enum PredictError {
    /// Input is well-formed but fails a domain rule.
    #[error("{field}: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("model has no background set; attribution is unavailable")]
    NoBackground,
    #[error(transparent)]
    Model(#[from] ppv_core::Error),
}

fn parse_enum<T>(field: &'static str, v: &CodeOrName, from_code: fn(i64) -> Option<T>) -> Result<T, PredictError>
where
    T: std::str::FromStr<Err = String>,
{
    match v {
        CodeOrName::Code(c) => from_code(*c).ok_or_else(|| PredictError::Invalid {
            field,
            message: format!("code {c} outside 1..=3"),
        }),
        CodeOrName::Name(n) => n.parse().map_err(|message| PredictError::Invalid { field, message }),
    }
}

impl PredictRequest {
    pub fn to_record(&self) -> Result<PileDrivingRecord, PredictError> {
        let record = PileDrivingRecord {
            pile_size: self.pile_size_mm,
            pile_length: self.pile_length_m,
            hammer_weight: self.hammer_weight_ton,
            drop_height: self.drop_height_m,
            distance: self.distance_m,
            sensor_location: parse_enum("sensor_location", &self.sensor_location, SensorLocation::from_code)?,
            sensor_direction: parse_enum("sensor_direction", &self.sensor_direction, SensorDirection::from_code)?,
            ppv: None,
        };
        record
            .validate()
            .map_err(|(feature, message)| PredictError::Invalid {
                field: feature.column(),
                message,
            })?;
        Ok(record)
    }
}

/// A model ready to serve, with its version label computed once.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub saved: SavedModel,
    pub version: String,
}

impl LoadedModel {
    pub fn new(saved: SavedModel) -> Self {
        let version = model_version(&saved);
        Self { saved, version }
    }
}

/// Validates, predicts, and optionally attributes one request.
pub fn predict(loaded: &LoadedModel, req: &PredictRequest, explain: bool) -> Result<PredictResponse, PredictError> {
    let saved = &loaded.saved;
    let record = req.to_record()?;
    let ppv_mm_s = saved.model.predict_record(&record)?;
    let shap = if explain {
        let bg = saved.background.as_ref().ok_or(PredictError::NoBackground)?;
        Some(ShapPayload::new(&record, &shap_exact(&saved.model, &record, bg)?))
    } else {
        None
    };
    Ok(PredictResponse {
        ppv_mm_s,
        model_version: loaded.version.clone(),
        sensor_location: record.sensor_location.name().to_string(),
        sensor_direction: record.sensor_direction.name().to_string(),
        warnings: record.extrapolation_warnings(),
        shap,
    })
}
