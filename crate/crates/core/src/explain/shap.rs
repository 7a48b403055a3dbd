//! Exact Shapley values over all 2^7 feature coalitions.
//!
//! The value of a coalition `S` is the mean prediction over hybrid inputs that
//! take the features in `S` from the instance and the rest from each
//! background record (interventional masking). All values are in mm/s.

use std::io::Write;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Feature, Features, PileDrivingRecord, N_FEATURES};
use crate::error::{Error, Result};
use crate::train::Predictor;

const N_COALITIONS: usize = 1 << N_FEATURES;

/// Default cap on background rows.
pub const DEFAULT_BACKGROUND: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapResult {
    /// Per-feature attribution, schema order.
    pub phi: [f64; N_FEATURES],
    /// Mean prediction over the background set.
    pub baseline: f64,
    pub prediction: f64,
}

impl ShapResult {
    pub fn phi_sum(&self) -> f64 {
        self.phi.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSet {
    rows: Vec<Features>,
}

impl BackgroundSet {
    pub fn new(rows: Vec<Features>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Domain("background set is empty".into()));
        }
        Ok(Self { rows })
    }

    pub fn from_records(records: &[PileDrivingRecord]) -> Result<Self> {
        Self::new(records.iter().map(|r| r.features()).collect())
    }

    /// At most `max` records drawn without replacement, kept in their original
    /// order. Uses every record when there are no more than `max`.
    pub fn sample(records: &[PileDrivingRecord], max: usize, seed: u64) -> Result<Self> {
        if records.len() <= max {
            return Self::from_records(records);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, records.len(), max).into_vec();
        picked.sort_unstable();
        Self::new(picked.into_iter().map(|i| records[i].features()).collect())
    }

    pub fn rows(&self) -> &[Features] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Shapley weight `|S|! (|F|-|S|-1)! / |F|!` indexed by `|S|`.
pub fn subset_weights() -> [f64; N_FEATURES] {
    let total = factorial(N_FEATURES);
    std::array::from_fn(|s| factorial(s) * factorial(N_FEATURES - s - 1) / total)
}

/// Coalition values `v(S)` for every bitmask `S` (bit `i` = feature `i`).
pub fn coalition_values<P: Predictor + ?Sized>(
    model: &P,
    instance: &Features,
    background: &BackgroundSet,
) -> Result<Vec<f64>> {
    if background.is_empty() {
        return Err(Error::Domain("background set is empty".into()));
    }
    let b = background.len();
    let mut hybrids = Vec::with_capacity(N_COALITIONS * b);
    for mask in 0..N_COALITIONS {
        for bg in background.rows() {
            hybrids.push(std::array::from_fn(|i| if mask >> i & 1 == 1 { instance[i] } else { bg[i] }));
        }
    }
    let preds = model.predict_ppv(&hybrids)?;
    if preds.len() != hybrids.len() {
        return Err(Error::dim("predictor output", hybrids.len(), preds.len()));
    }
    Ok(preds
        .chunks(b)
        .map(|c| c.iter().sum::<f64>() / b as f64)
        .collect())
}

pub fn shap_exact<P: Predictor + ?Sized>(
    model: &P,
    instance: &PileDrivingRecord,
    background: &BackgroundSet,
) -> Result<ShapResult> {
    let x = instance.features();
    let v = coalition_values(model, &x, background)?;
    let w = subset_weights();
    let mut phi = [0.0; N_FEATURES];
    let mut terms = Vec::with_capacity(N_COALITIONS / 2);
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1 << i;
        terms.clear();
        terms.extend(
            (0..N_COALITIONS)
                .filter(|s| s & bit == 0)
                .map(|s| w[(s as u32).count_ones() as usize] * (v[s | bit] - v[s])),
        );
        // Summing in sorted order makes φᵢ a function of the multiset of
        // marginal terms, so exchangeable features get bit-identical values.
        terms.sort_unstable_by(f64::total_cmp);
        *p = terms.iter().sum();
    }
    Ok(ShapResult {
        phi,
        baseline: v[0],
        prediction: model.predict_ppv(&[x])?[0],
    })
}

/// `shap_exact` for each record, in record order.
pub fn shap_many<P: Predictor + ?Sized>(
    model: &P,
    records: &[PileDrivingRecord],
    background: &BackgroundSet,
) -> Result<Vec<ShapResult>> {
    records
        .par_iter()
        .map(|r| shap_exact(model, r, background))
        .collect()
}

/// Per-feature mean |φ|, descending; ties keep schema order.
pub fn mean_abs_ranking(results: &[ShapResult]) -> Result<Vec<(Feature, f64)>> {
    if results.is_empty() {
        return Err(Error::Domain("no attributions to rank".into()));
    }
    let n = results.len() as f64;
    let mut ranked: Vec<(Feature, f64)> = Feature::ALL
        .iter()
        .map(|&f| (f, results.iter().map(|r| r.phi[f.index()].abs()).sum::<f64>() / n))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ranked)
}

pub fn mean_abs_shap<P: Predictor + ?Sized>(
    model: &P,
    records: &[PileDrivingRecord],
    background: &BackgroundSet,
) -> Result<Vec<(Feature, f64)>> {
    if records.is_empty() {
        return Err(Error::Domain("no records to explain".into()));
    }
    mean_abs_ranking(&shap_many(model, records, background)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryPoint {
    pub record_id: usize,
    pub feature: Feature,
    pub feature_value: f64,
    pub phi_mm_s: f64,
}

pub fn summary_points(records: &[PileDrivingRecord], results: &[ShapResult]) -> Vec<SummaryPoint> {
    records
        .iter()
        .zip(results)
        .enumerate()
        .flat_map(|(id, (rec, res))| {
            let x = rec.features();
            Feature::ALL.into_iter().map(move |f| SummaryPoint {
                record_id: id,
                feature: f,
                feature_value: x[f.index()],
                phi_mm_s: res.phi[f.index()],
            })
        })
        .collect()
}

/// Flat (record, feature) table for beeswarm and dependence plots.
pub fn shap_summary_points<P: Predictor + ?Sized>(
    model: &P,
    records: &[PileDrivingRecord],
    background: &BackgroundSet,
) -> Result<Vec<SummaryPoint>> {
    if records.is_empty() {
        return Err(Error::Domain("no records to explain".into()));
    }
    let results = shap_many(model, records, background)?;
    Ok(summary_points(records, &results))
}

pub fn write_summary_points_csv<W: Write>(points: &[SummaryPoint], mut w: W) -> Result<()> {
    writeln!(w, "record_id,feature,feature_value,phi_mm_s")?;
    for p in points {
        writeln!(w, "{},{},{},{}", p.record_id, p.feature, p.feature_value, p.phi_mm_s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mean_abs_csv<W: Write>(ranking: &[(Feature, f64)], mut w: W) -> Result<()> {
    writeln!(w, "feature,mean_abs_phi")?;
    for (f, v) in ranking {
        writeln!(w, "{f},{v}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{SensorDirection, SensorLocation};

    struct Constant(f64);

    impl Predictor for Constant {
        fn predict_ppv(&self, rows: &[Features]) -> Result<Vec<f64>> {
            Ok(vec![self.0; rows.len()])
        }
    }

    /// Sum of the first two features only.
    struct FirstTwo;

    impl Predictor for FirstTwo {
        fn predict_ppv(&self, rows: &[Features]) -> Result<Vec<f64>> {
            Ok(rows.iter().map(|r| r[0] + r[1]).collect())
        }
    }

    fn record(pile_size: f64, distance: f64) -> PileDrivingRecord {
        PileDrivingRecord {
            pile_size,
            pile_length: 18.0,
            hammer_weight: 4.2,
            drop_height: 0.5,
            distance,
            sensor_location: SensorLocation::Ground,
            sensor_direction: SensorDirection::Vertical,
            ppv: None,
        }
    }

    #[test]
    fn weights_sum_to_one_per_feature() {
        let w = subset_weights();
        let total: f64 = (0..N_COALITIONS / 2).map(|s| w[(s as u32).count_ones() as usize]).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert_eq!(w[0], 1.0 / 7.0);
    }

    #[test]
    fn empty_background_is_rejected() {
        assert!(BackgroundSet::new(vec![]).is_err());
        assert!(BackgroundSet::from_records(&[]).is_err());
    }

    #[test]
    fn constant_model_has_zero_attribution() {
        let bg = BackgroundSet::from_records(&[record(300.0, 5.0), record(600.0, 40.0)]).unwrap();
        let r = shap_exact(&Constant(2.5), &record(400.0, 10.0), &bg).unwrap();
        assert_eq!(r.phi, [0.0; 7]);
        assert_eq!(r.baseline, 2.5);
        assert_eq!(r.prediction, 2.5);
    }

    #[test]
    fn self_background_gives_zero() {
        let x = record(400.0, 10.0);
        let bg = BackgroundSet::from_records(&[x]).unwrap();
        let r = shap_exact(&FirstTwo, &x, &bg).unwrap();
        assert_eq!(r.phi, [0.0; 7]);
        assert_eq!(r.baseline, r.prediction);
    }

    #[test]
    fn additive_model_closed_form() {
        let bg = BackgroundSet::from_records(&[record(300.0, 5.0), record(500.0, 40.0)]).unwrap();
        let r = shap_exact(&FirstTwo, &record(600.0, 10.0), &bg).unwrap();
        assert!((r.phi[0] - 200.0).abs() < 1e-9);
        assert!(r.phi[1].abs() < 1e-12);
        assert_eq!(r.phi[4], 0.0);
    }

    #[test]
    fn ranking_is_stable_and_descending() {
        let mk = |phi: [f64; 7]| ShapResult {
            phi,
            baseline: 0.0,
            prediction: phi.iter().sum(),
        };
        let ranked = mean_abs_ranking(&[mk([0.0, 1.0, 0.0, -1.0, 3.0, 0.0, 0.0])]).unwrap();
        let order: Vec<Feature> = ranked.iter().map(|p| p.0).collect();
        assert_eq!(order[0], Feature::Distance);
        assert_eq!(order[1], Feature::PileLength);
        assert_eq!(order[2], Feature::DropHeight);
        assert_eq!(order[3], Feature::PileSize);
        assert_eq!(order[6], Feature::SensorDirection);
        assert!(mean_abs_ranking(&[]).is_err());
    }

    #[test]
    fn summary_table_shape_and_csv() {
        let records = vec![record(300.0, 5.0), record(500.0, 40.0), record(700.0, 9.0)];
        let bg = BackgroundSet::from_records(&records).unwrap();
        let pts = shap_summary_points(&FirstTwo, &records, &bg).unwrap();
        assert_eq!(pts.len(), 21);
        assert_eq!(pts[7].record_id, 1);
        assert_eq!(pts[7].feature, Feature::PileSize);
        let mut buf = Vec::new();
        write_summary_points_csv(&pts[..1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("record_id,feature,feature_value,phi_mm_s\n0,pile_size,300,"));
    }

    #[test]
    fn sampled_background_is_capped_and_deterministic() {
        let records: Vec<_> = (0..250).map(|i| record(250.0 + i as f64, 10.0)).collect();
        let a = BackgroundSet::sample(&records, 100, 9).unwrap();
        let b = BackgroundSet::sample(&records, 100, 9).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        assert!(a.rows().windows(2).all(|w| w[0][0] < w[1][0]));
        assert_eq!(BackgroundSet::sample(&records[..5], 100, 9).unwrap().len(), 5);
    }
}
