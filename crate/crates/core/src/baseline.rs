//! Empirical scaled-distance attenuation laws, `ppv = k (√E / d)^n`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{hammer_energy, PileDrivingRecord};
use crate::error::{Error, Result};
use crate::nn;
use crate::train::Predictor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawParams {
    pub name: String,
    /// Amplitude, mm/s per (√J/m)^n.
    pub k: f64,
    pub n: f64,
}

impl PowerLawParams {
    pub fn new(name: impl Into<String>, k: f64, n: f64) -> Result<Self> {
        let p = Self { name: name.into(), k, n };
        p.validate()?;
        Ok(p)
    }

    /// Configurable preset; the coefficients are conventional, not fitted.
    pub fn attewell_farmer() -> Self {
        Self {
            name: "attewell_farmer".into(),
            k: 0.75,
            n: 1.0,
        }
    }

    /// Configurable preset; the coefficients are conventional, not fitted.
    pub fn achmus() -> Self {
        Self {
            name: "achmus".into(),
            k: 1.5,
            n: 1.0,
        }
    }

    pub fn presets() -> Vec<Self> {
        vec![Self::attewell_farmer(), Self::achmus()]
    }

    pub fn preset(name: &str) -> Option<Self> {
        Self::presets().into_iter().find(|p| p.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k.is_finite() && self.k > 0.0 && self.n.is_finite() && self.n > 0.0) {
            return Err(Error::Domain(format!(
                "power law `{}` needs k > 0 and n > 0, got k={} n={}",
                self.name, self.k, self.n
            )));
        }
        Ok(())
    }
}

pub fn powerlaw_ppv(params: &PowerLawParams, record: &PileDrivingRecord) -> Result<f64> {
    params.validate()?;
    for (what, v) in [
        ("distance", record.distance),
        ("hammer_weight", record.hammer_weight),
        ("drop_height", record.drop_height),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("{what} must be positive, got {v}")));
        }
    }
    let e = hammer_energy(record.hammer_weight, record.drop_height);
    Ok(params.k * (e.sqrt() / record.distance).powf(params.n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub distance_m: f64,
    pub observed_ppv: f64,
    pub neural_ppv: f64,
    /// One entry per baseline, in report order.
    pub baseline_ppv: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline_names: Vec<String>,
    /// Sorted by distance (stable).
    pub rows: Vec<ComparisonRow>,
    pub neural_mae: f64,
    pub baseline_mae: Vec<f64>,
}

impl ComparisonReport {
    /// `(predictor, MAE)` with the neural model first.
    pub fn mae_summary(&self) -> Vec<(String, f64)> {
        std::iter::once(("neural".to_string(), self.neural_mae))
            .chain(self.baseline_names.iter().cloned().zip(self.baseline_mae.iter().copied()))
            .collect()
    }

    pub fn write_table_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "distance_m,observed_ppv,neural_ppv")?;
        for name in &self.baseline_names {
            write!(w, ",{name}_ppv")?;
        }
        writeln!(w)?;
        for r in &self.rows {
            write!(w, "{},{},{}", r.distance_m, r.observed_ppv, r.neural_ppv)?;
            for v in &r.baseline_ppv {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "predictor,mae_mm_s")?;
        for (name, mae) in self.mae_summary() {
            writeln!(w, "{name},{mae}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Neural predictions against each power law on the same records.
pub fn compare<P: Predictor + ?Sized>(
    model: &P,
    baselines: &[PowerLawParams],
    records: &[PileDrivingRecord],
) -> Result<ComparisonReport> {
    if records.is_empty() {
        return Err(Error::Domain("comparison needs at least one record".into()));
    }
    let observed: Vec<f64> = records
        .iter()
        .enumerate()
        .map(|(i, r)| r.ppv.ok_or_else(|| Error::Domain(format!("record {i} has no measured ppv"))))
        .collect::<Result<_>>()?;
    let rows_in: Vec<_> = records.iter().map(|r| r.features()).collect();
    let neural = model.predict_ppv(&rows_in)?;
    let per_baseline: Vec<Vec<f64>> = baselines
        .iter()
        .map(|b| records.iter().map(|r| powerlaw_ppv(b, r)).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    let neural_mae = nn::mae(&neural, &observed)?;
    let baseline_mae = per_baseline
        .iter()
        .map(|p| nn::mae(p, &observed))
        .collect::<Result<_>>()?;

    let mut rows: Vec<ComparisonRow> = (0..records.len())
        .map(|i| ComparisonRow {
            distance_m: records[i].distance,
            observed_ppv: observed[i],
            neural_ppv: neural[i],
            baseline_ppv: per_baseline.iter().map(|p| p[i]).collect(),
        })
        .collect();
    rows.sort_by(|a, b| a.distance_m.total_cmp(&b.distance_m));

    Ok(ComparisonReport {
        baseline_names: baselines.iter().map(|b| b.name.clone()).collect(),
        rows,
        neural_mae,
        baseline_mae,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Features, SensorDirection, SensorLocation};

    fn rec(hammer_weight: f64, drop_height: f64, distance: f64, ppv: Option<f64>) -> PileDrivingRecord {
        PileDrivingRecord {
            pile_size: 300.0,
            pile_length: 18.0,
            hammer_weight,
            drop_height,
            distance,
            sensor_location: SensorLocation::Ground,
            sensor_direction: SensorDirection::Transverse,
            ppv,
        }
    }

    /// Looks up the observed ppv by distance; exact on the test records.
    struct Oracle(Vec<PileDrivingRecord>);

    impl Predictor for Oracle {
        fn predict_ppv(&self, rows: &[Features]) -> Result<Vec<f64>> {
            Ok(rows
                .iter()
                .map(|x| self.0.iter().find(|r| r.distance == x[4]).unwrap().ppv.unwrap())
                .collect())
        }
    }

    #[test]
    fn unit_coefficients() {
        // E = 100 J  <=>  W g h = 100
        let h = 100.0 / (1000.0 * 9.81);
        let p = PowerLawParams::new("unit", 1.0, 1.0).unwrap();
        assert!((powerlaw_ppv(&p, &rec(1.0, h, 10.0, None)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fig11_scenario() {
        let v = powerlaw_ppv(&PowerLawParams::attewell_farmer(), &rec(4.2, 0.5, 3.0, None)).unwrap();
        assert!((v - 0.75 * 20601f64.sqrt() / 3.0).abs() < 1e-12);
        assert!((v - 35.88).abs() < 0.01);
    }

    #[test]
    fn doubling_distance_halves() {
        let p = PowerLawParams::achmus();
        let a = powerlaw_ppv(&p, &rec(5.0, 0.4, 8.0, None)).unwrap();
        let b = powerlaw_ppv(&p, &rec(5.0, 0.4, 16.0, None)).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let p = PowerLawParams::attewell_farmer();
        assert!(powerlaw_ppv(&p, &rec(5.0, 0.4, 0.0, None)).is_err());
        assert!(powerlaw_ppv(&p, &rec(-1.0, 0.4, 3.0, None)).is_err());
        assert!(PowerLawParams::new("bad", 0.0, 1.0).is_err());
        assert!(PowerLawParams::new("bad", 1.0, -1.0).is_err());
        assert_eq!(PowerLawParams::preset("achmus"), Some(PowerLawParams::achmus()));
    }

    #[test]
    fn comparison_report() {
        let records = vec![rec(4.0, 0.5, 20.0, Some(1.0)), rec(4.0, 0.5, 5.0, Some(3.0))];
        let oracle = Oracle(records.clone());
        assert!(compare(&oracle, &[], &[]).is_err());

        let only = compare(&oracle, &[], &records).unwrap();
        assert!(only.baseline_names.is_empty());
        assert_eq!(only.mae_summary().len(), 1);

        let r = compare(&oracle, &PowerLawParams::presets(), &records).unwrap();
        assert_eq!(r.neural_mae, 0.0);
        assert!(r.baseline_mae.iter().all(|&m| m >= r.neural_mae));
        assert_eq!(r.rows[0].distance_m, 5.0);
        let mut buf = Vec::new();
        r.write_table_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("distance_m,observed_ppv,neural_ppv,attewell_farmer_ppv,achmus_ppv\n5,3,3,"));
        let mut buf = Vec::new();
        r.write_summary_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("predictor,mae_mm_s\nneural,0\n"));
    }
}
