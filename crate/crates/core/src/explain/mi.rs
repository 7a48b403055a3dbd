//! Kraskov–Stögbauer–Grassberger k-NN mutual information (first estimator).

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::data::{Feature, PileDrivingRecord};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 3;

/// Tie-breaking noise amplitude, applied after standardization.
const JITTER: f64 = 1e-10;
const JITTER_SEED: u64 = 0x6b73_6731;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiResult {
    /// Estimates in nats, schema order.
    pub per_feature: Vec<(Feature, f64)>,
    pub k: usize,
}

impl MiResult {
    /// Features by decreasing MI; ties keep schema order.
    pub fn ranked(&self) -> Vec<(Feature, f64)> {
        let mut r = self.per_feature.clone();
        r.sort_by(|a, b| b.1.total_cmp(&a.1));
        r
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "feature,mi_nats")?;
        for (f, v) in &self.per_feature {
            writeln!(w, "{f},{v}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Raw KSG estimate for paired samples, in nats. May be slightly negative.
///
/// `ψ(k) + ψ(n) − ⟨ψ(n_x+1) + ψ(n_y+1)⟩`, where the ball radius is the
/// max-norm distance to the k-th joint neighbour and marginal counts are
/// strict.
pub fn ksg_mi(x: &[f64], y: &[f64], k: usize) -> Result<f64> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::dim("ksg_mi y", n, y.len()));
    }
    if k == 0 {
        return Err(Error::Domain("k must be >= 1".into()));
    }
    if n <= k + 1 {
        return Err(Error::Domain(format!("need more than {} samples for k={k}, got {n}", k + 1)));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite sample".into()));
    }
    let mut dist = Vec::with_capacity(n - 1);
    let mut acc = 0.0;
    for i in 0..n {
        dist.clear();
        dist.extend(
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (x[i] - x[j]).abs().max((y[i] - y[j]).abs())),
        );
        let (_, eps, _) = dist.select_nth_unstable_by(k - 1, f64::total_cmp);
        let eps = *eps;
        let mut nx = 0usize;
        let mut ny = 0usize;
        for j in (0..n).filter(|&j| j != i) {
            if (x[i] - x[j]).abs() < eps {
                nx += 1;
            }
            if (y[i] - y[j]).abs() < eps {
                ny += 1;
            }
        }
        acc += digamma(nx as f64 + 1.0) + digamma(ny as f64 + 1.0);
    }
    Ok(digamma(k as f64) + digamma(n as f64) - acc / n as f64)
}

fn standardize(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    v.iter().map(|x| (x - mean) / sd).collect()
}

fn jittered(v: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    standardize(v)
        .into_iter()
        .map(|x| x + rng.random_range(-JITTER..JITTER))
        .collect()
}

/// MI between each feature and measured ppv. Variables are z-scored and
/// jittered (seeded) so categorical codes have distinct distances; negative
/// estimates are reported as 0.
pub fn mutual_information(records: &[PileDrivingRecord], k: usize) -> Result<MiResult> {
    if records.len() <= k + 1 {
        return Err(Error::Domain(format!(
            "mutual information with k={k} needs more than {} records, got {}",
            k + 1,
            records.len()
        )));
    }
    let ppv: Vec<f64> = records
        .iter()
        .enumerate()
        .map(|(i, r)| r.ppv.ok_or_else(|| Error::Domain(format!("record {i} has no measured ppv"))))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(JITTER_SEED);
    let y = jittered(&ppv, &mut rng);
    let mut per_feature = Vec::with_capacity(Feature::ALL.len());
    for f in Feature::ALL {
        let col: Vec<f64> = records.iter().map(|r| r.features()[f.index()]).collect();
        let x = jittered(&col, &mut rng);
        per_feature.push((f, ksg_mi(&x, &y, k)?.max(0.0)));
    }
    Ok(MiResult { per_feature, k })
}
