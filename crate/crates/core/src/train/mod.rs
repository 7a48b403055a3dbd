//! Mini-batch training with best-on-validation checkpointing.

mod ablation;
mod report;

pub use ablation::{
    reference_configs, run_ablation, AblationConfig, AblationRow, AblationSettings, AblationTable,
    REFERENCE_ONLY_ROWS,
};
pub use report::write_report_csv;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{DatasetSplit, Features, PileDrivingRecord, ScalerParams, N_FEATURES};
use crate::error::{Error, Result};
use crate::nn::{self, AdamConfig, AdamState, Matrix, Mode, Network, NetworkSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub spec: NetworkSpec,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    /// Seeds batch shuffling and dropout masks. Weight init uses `spec.seed`.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            spec: NetworkSpec::default(),
            batch_size: 50,
            epochs: 500,
            adam: AdamConfig::default(),
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.spec.input_width() != N_FEATURES {
            return Err(Error::InvalidSpec(format!(
                "first width must be {N_FEATURES} (feature count), got {}",
                self.spec.input_width()
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Domain("batch size must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Domain("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Loss and metric history of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Per epoch: mean training-batch MSE on the normalized target, with
    /// dropout active, weighted by batch size.
    pub train_mse: Vec<f64>,
    /// Per epoch: eval-mode validation MAE in mm/s.
    pub val_mae_mm_s: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_validation_mae: f64,
    /// Test MAE of the kept parameters, mm/s. `None` for an empty test split.
    pub test_mae: Option<f64>,
    pub adam_steps: u64,
}

/// Provenance stored alongside the parameters of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_validation_mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub network: Network,
    /// Fitted on the training split only.
    pub scaler: ScalerParams,
    pub meta: TrainingMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae_mm_s: f64,
    pub mse_normalized: f64,
    pub n: usize,
}

impl TrainedModel {
    pub fn spec(&self) -> &NetworkSpec {
        &self.network.spec
    }

    /// Network outputs on the normalized scale, in `(0, 1)` for a sigmoid output.
    pub fn predict_normalized(&self, rows: &[Features]) -> Result<Vec<f64>> {
        predict_normalized(&self.network, &self.scaler, rows)
    }

    /// Eval-mode predictions in mm/s for raw feature rows.
    pub fn predict_ppv(&self, rows: &[Features]) -> Result<Vec<f64>> {
        Ok(self
            .predict_normalized(rows)?
            .into_iter()
            .map(|t| self.scaler.inverse_target(t))
            .collect())
    }

    pub fn predict_record(&self, record: &PileDrivingRecord) -> Result<f64> {
        Ok(self.predict_ppv(&[record.features()])?[0])
    }
}

/// Anything that maps raw feature rows to ppv in mm/s. Attribution and the
/// baseline comparison work against this rather than a concrete model.
pub trait Predictor: Sync {
    fn predict_ppv(&self, rows: &[Features]) -> Result<Vec<f64>>;
}

impl Predictor for TrainedModel {
    fn predict_ppv(&self, rows: &[Features]) -> Result<Vec<f64>> {
        TrainedModel::predict_ppv(self, rows)
    }
}

fn predict_normalized(network: &Network, scaler: &ScalerParams, rows: &[Features]) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let z: Vec<Features> = rows.iter().map(|r| scaler.transform(r)).collect();
    network.predict(&Matrix::from_rows(&z)?)
}

fn targets(records: &[PileDrivingRecord]) -> Result<Vec<f64>> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.ppv
                .ok_or_else(|| Error::Domain(format!("record {i} has no measured ppv")))
        })
        .collect()
}

/// Eval-mode MAE (mm/s, after the inverse target transform) and MSE on the
/// normalized scale.
pub fn evaluate(model: &TrainedModel, records: &[PileDrivingRecord]) -> Result<Metrics> {
    evaluate_with(&model.network, &model.scaler, records)
}

fn evaluate_with(network: &Network, scaler: &ScalerParams, records: &[PileDrivingRecord]) -> Result<Metrics> {
    if records.is_empty() {
        return Err(Error::Domain("cannot evaluate on an empty set".into()));
    }
    let observed = targets(records)?;
    let rows: Vec<Features> = records.iter().map(|r| r.features()).collect();
    let normalized = predict_normalized(network, scaler, &rows)?;
    let mm_s: Vec<f64> = normalized.iter().map(|&t| scaler.inverse_target(t)).collect();
    let norm_targets = scaler.target_normalize_all(&observed);
    Ok(Metrics {
        mae_mm_s: nn::mae(&mm_s, &observed)?,
        mse_normalized: nn::mse(&normalized, &norm_targets)?,
        n: records.len(),
    })
}

/// Trains `config.spec` on `split.train` and returns the parameters of the
/// epoch with the lowest validation MAE.
///
/// Each epoch shuffles the training set with a seeded stream, walks it in
/// batches of `batch_size` (the last batch may be smaller) and takes one
/// Adam step per batch on the batch-mean gradient.
pub fn train(config: &TrainConfig, split: &DatasetSplit) -> Result<(TrainedModel, TrainReport)> {
    config.validate()?;
    if split.train.is_empty() {
        return Err(Error::Domain("training split is empty".into()));
    }
    if split.validation.is_empty() {
        return Err(Error::Domain("validation split is empty".into()));
    }
    let scaler = ScalerParams::fit(&split.train)?;
    let train_x: Vec<Features> = split.train.iter().map(|r| scaler.transform_record(r)).collect();
    let train_t = scaler.target_normalize_all(&targets(&split.train)?);

    let mut network = Network::new(config.spec.clone())?;
    let mut adam = AdamState::new(config.adam, &network.params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_x.len()).collect();

    let mut report = TrainReport {
        train_mse: Vec::with_capacity(config.epochs),
        val_mae_mm_s: Vec::with_capacity(config.epochs),
        best_epoch: 0,
        best_validation_mae: f64::INFINITY,
        test_mae: None,
        adam_steps: 0,
    };
    let mut best = network.params.clone();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let rows: Vec<&[f64]> = chunk.iter().map(|&i| train_x[i].as_slice()).collect();
            let x = Matrix::from_rows(&rows)?;
            let t: Vec<f64> = chunk.iter().map(|&i| train_t[i]).collect();

            let trace = network.forward(&x, Mode::Train(&mut rng))?;
            let loss = nn::mse(&trace.outputs(), &t)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b + 1,
                    message: format!("loss is {loss}"),
                });
            }
            loss_sum += loss * chunk.len() as f64;
            let grads = network.backward(&trace, &t)?;
            adam.step(&mut network.params, &grads)?;
            if !network.params.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b + 1,
                    message: "non-finite parameters after Adam step".into(),
                });
            }
        }
        report.train_mse.push(loss_sum / train_x.len() as f64);

        let val = evaluate_with(&network, &scaler, &split.validation)?.mae_mm_s;
        if !val.is_finite() {
            return Err(Error::Diverged {
                epoch,
                batch: 0,
                message: format!("validation MAE is {val}"),
            });
        }
        report.val_mae_mm_s.push(val);
        if val < report.best_validation_mae {
            report.best_validation_mae = val;
            report.best_epoch = epoch;
            best.clone_from(&network.params);
        }
    }
    report.adam_steps = adam.t;

    network.params = best;
    let model = TrainedModel {
        network,
        scaler,
        meta: TrainingMeta {
            seed: config.seed,
            epochs: config.epochs,
            best_epoch: report.best_epoch,
            best_validation_mae: report.best_validation_mae,
        },
    };
    if !split.test.is_empty() {
        report.test_mae = Some(evaluate(&model, &split.test)?.mae_mm_s);
    }
    Ok((model, report))
}
