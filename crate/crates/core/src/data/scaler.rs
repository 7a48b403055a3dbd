//! Z-scoring of the seven features and min-max scaling of the target.
//!
//! Standard deviations use the population convention (divide by n).
//! Categorical codes are standardized like any other numeric column.

use serde::{Deserialize, Serialize};

use super::record::{Feature, Features, PileDrivingRecord, N_FEATURES};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Features,
    pub std: Features,
    pub ppv_min: f64,
    pub ppv_max: f64,
}

impl ScalerParams {
    pub fn fit(records: &[PileDrivingRecord]) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::Fit(format!(
                "need at least 2 records, got {}",
                records.len()
            )));
        }
        let n = records.len() as f64;
        let rows: Vec<Features> = records.iter().map(|r| r.features()).collect();
        let mut mean = [0.0; N_FEATURES];
        let mut std = [0.0; N_FEATURES];
        for feat in Feature::ALL {
            let i = feat.index();
            let mu = rows.iter().map(|r| r[i]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[i] - mu).powi(2)).sum::<f64>() / n;
            let sd = var.sqrt();
            if !(sd > 0.0) {
                return Err(Error::ZeroVariance {
                    feature: feat.name(),
                });
            }
            mean[i] = mu;
            std[i] = sd;
        }

        let mut ppv_min = f64::INFINITY;
        let mut ppv_max = f64::NEG_INFINITY;
        for (row, r) in records.iter().enumerate() {
            let p = r
                .ppv
                .ok_or_else(|| Error::Fit(format!("record {row} has no ppv")))?;
            ppv_min = ppv_min.min(p);
            ppv_max = ppv_max.max(p);
        }
        let scaler = Self {
            mean,
            std,
            ppv_min,
            ppv_max,
        };
        scaler.validate()?;
        Ok(scaler)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.std.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::ZeroVariance {
                feature: Feature::ALL[i].name(),
            });
        }
        if self.mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::Fit("non-finite feature mean".into()));
        }
        if !(self.ppv_min > 0.0 && self.ppv_max > self.ppv_min && self.ppv_max.is_finite()) {
            return Err(Error::Fit(format!(
                "target range must satisfy ppv_max > ppv_min > 0, got [{}, {}]",
                self.ppv_min, self.ppv_max
            )));
        }
        Ok(())
    }

    pub fn transform(&self, features: &Features) -> Features {
        let mut z = [0.0; N_FEATURES];
        for i in 0..N_FEATURES {
            z[i] = (features[i] - self.mean[i]) / self.std[i];
        }
        z
    }

    pub fn transform_record(&self, record: &PileDrivingRecord) -> Features {
        self.transform(&record.features())
    }

    pub fn inverse_transform(&self, z: &Features) -> Features {
        let mut x = [0.0; N_FEATURES];
        for i in 0..N_FEATURES {
            x[i] = z[i] * self.std[i] + self.mean[i];
        }
        x
    }

    /// Unclamped min-max position of `ppv` in the fitted range.
    fn position(&self, ppv: f64) -> f64 {
        (ppv - self.ppv_min) / (self.ppv_max - self.ppv_min)
    }

    /// Maps `ppv` into `[0, 1]`. Values outside the fitted range are clamped
    /// and a warning is logged.
    pub fn target_normalize(&self, ppv: f64) -> f64 {
        let t = self.position(ppv);
        if !(0.0..=1.0).contains(&t) {
            log::warn!(
                "ppv {ppv} mm/s outside fitted range [{}, {}]; clamped",
                self.ppv_min,
                self.ppv_max
            );
        }
        t.clamp(0.0, 1.0)
    }

    /// Like [`Self::target_normalize`] over a slice, logging one summary
    /// warning instead of one per value.
    pub fn target_normalize_all(&self, ppv: &[f64]) -> Vec<f64> {
        let mut clamped = 0usize;
        let out = ppv
            .iter()
            .map(|&p| {
                let t = self.position(p);
                if !(0.0..=1.0).contains(&t) {
                    clamped += 1;
                }
                t.clamp(0.0, 1.0)
            })
            .collect();
        if clamped > 0 {
            log::warn!(
                "{clamped} of {} ppv values outside fitted range [{}, {}]; clamped",
                ppv.len(),
                self.ppv_min,
                self.ppv_max
            );
        }
        out
    }

    pub fn inverse_target(&self, t: f64) -> f64 {
        self.ppv_min + t * (self.ppv_max - self.ppv_min)
    }
}
