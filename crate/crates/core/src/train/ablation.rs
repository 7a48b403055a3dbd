//! Architecture/activation ablation over a fixed grid of network shapes.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, TrainConfig};
use crate::data::DatasetSplit;
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamConfig, NetworkSpec, DEFAULT_WIDTHS};

/// Reference-only rows with no trainable counterpart here (tree ensembles).
pub const REFERENCE_ONLY_ROWS: [(&str, f64); 2] = [("XGBoost", 0.315), ("CatBoost", 0.332)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub label: String,
    pub spec: NetworkSpec,
    /// Reference MAE for this configuration, if any.
    pub reference_mae: Option<f64>,
}

impl AblationConfig {
    pub fn new(spec: NetworkSpec, reference_mae: Option<f64>) -> Self {
        let label = format!("{}:{}", spec.widths_label(), activation_label(spec.hidden_activation));
        Self {
            label,
            spec,
            reference_mae,
        }
    }
}

fn activation_label(a: Activation) -> &'static str {
    match a {
        Activation::Relu => "ReLU",
        Activation::Sigmoid => "Sigmoid",
        Activation::Tanh => "Tanh",
        Activation::LeakyRelu => "LeakyReLU",
        Activation::Identity => "Identity",
    }
}

/// The six neural reference rows, in table order.
pub fn reference_configs() -> Vec<AblationConfig> {
    let base = DEFAULT_WIDTHS.to_vec();
    let mut rows = vec![
        AblationConfig::new(
            NetworkSpec::new(vec![7, 200, 1000, 2000, 200, 20, 5, 1], Activation::Relu),
            Some(0.289),
        ),
        AblationConfig::new(NetworkSpec::new(vec![7, 50, 100, 20, 5, 1], Activation::Relu), Some(0.283)),
        AblationConfig::new(NetworkSpec::new(base.clone(), Activation::Sigmoid), Some(0.432)),
        AblationConfig::new(NetworkSpec::new(base.clone(), Activation::Tanh), Some(0.279)),
        AblationConfig::new(NetworkSpec::new(base.clone(), Activation::LeakyRelu), Some(0.852)),
        AblationConfig::new(NetworkSpec::new(base, Activation::Relu), Some(0.276)),
    ];
    rows.last_mut().unwrap().label = format!("proposed {}", rows.last().unwrap().label);
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationSettings {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Shuffle/dropout seed shared by every row; init uses each spec's seed.
    pub seed: u64,
}

impl Default for AblationSettings {
    fn default() -> Self {
        Self {
            epochs: 400,
            batch_size: 50,
            adam: AdamConfig::default(),
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub label: String,
    pub reference_mae: Option<f64>,
    /// Test MAE in mm/s; `None` for reference-only rows.
    pub test_mae_mm_s: Option<f64>,
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
}

/// Trains every configuration on `split` and tabulates test MAE next to the
/// reference values. Rows run in parallel; output order follows `configs`,
/// preceded by the reference-only rows.
pub fn run_ablation(
    split: &DatasetSplit,
    configs: &[AblationConfig],
    settings: &AblationSettings,
) -> Result<AblationTable> {
    if configs.is_empty() {
        return Err(Error::Domain("ablation needs at least one configuration".into()));
    }
    let trained: Vec<Result<AblationRow>> = configs
        .par_iter()
        .map(|cfg| {
            let tc = TrainConfig {
                spec: cfg.spec.clone(),
                batch_size: settings.batch_size,
                epochs: settings.epochs,
                adam: settings.adam,
                seed: settings.seed,
            };
            let (_, report) = train(&tc, split).map_err(|e| Error::Ablation {
                label: cfg.label.clone(),
                source: Box::new(e),
            })?;
            Ok(AblationRow {
                label: cfg.label.clone(),
                reference_mae: cfg.reference_mae,
                test_mae_mm_s: report.test_mae,
                best_epoch: Some(report.best_epoch),
            })
        })
        .collect();

    let mut rows: Vec<AblationRow> = REFERENCE_ONLY_ROWS
        .iter()
        .map(|&(label, mae)| AblationRow {
            label: label.to_string(),
            reference_mae: Some(mae),
            test_mae_mm_s: None,
            best_epoch: None,
        })
        .collect();
    for row in trained {
        rows.push(row?);
    }
    Ok(AblationTable { rows })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl AblationTable {
    pub fn reference_maes(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.reference_mae).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let csv_err = |e| Error::Csv {
            path: "<ablation>".into(),
            source: e,
        };
        out.write_record(["model", "reference_mae", "test_mae_mm_s"]).map_err(csv_err)?;
        for r in &self.rows {
            out.write_record([r.label.clone(), opt(r.reference_mae), opt(r.test_mae_mm_s)])
                .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Fixed-width text rendering for terminals.
    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(5);
        let mut s = String::new();
        let _ = writeln!(s, "{:<width$}  {:>13}  {:>13}", "model", "reference_mae", "test_mae_mm_s");
        for r in &self.rows {
            let fmt = |v: Option<f64>, digits: usize| v.map_or("-".to_string(), |x| format!("{x:.digits$}"));
            let _ = writeln!(
                s,
                "{:<width$}  {:>13}  {:>13}",
                r.label,
                fmt(r.reference_mae, 3),
                fmt(r.test_mae_mm_s, 4)
            );
        }
        s
    }
}
