use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ppv_core::baseline::{compare, PowerLawParams};
use ppv_core::data::{generate_synthetic, load_csv, save_csv, split, GeneratorParams};
use ppv_core::explain::{
    mean_abs_ranking, mutual_information, shap_many, summary_points, write_mean_abs_csv, write_summary_points_csv,
    BackgroundSet, DEFAULT_BACKGROUND, DEFAULT_K,
};
use ppv_core::nn::{Activation, AdamConfig, NetworkSpec, DEFAULT_INIT_SEED, DEFAULT_DROPOUT, DEFAULT_WIDTHS};
use ppv_core::train::{evaluate, reference_configs, run_ablation, train, write_report_csv, AblationSettings, TrainConfig};

use crate::api::{predict, CodeOrName, LoadedModel, PredictRequest, PredictResponse};
use crate::model_file::{load_model, save_model, SavedModel};
use crate::server::{serve, DEFAULT_PORT};

/// Pile-driving peak particle velocity: train, explain, compare and serve.
#[derive(Debug, Parser)]
#[command(name = "ppv", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset as CSV.
    GenData(GenDataArgs),
    /// Train a model on a CSV file (80/10/10 split).
    Train(TrainArgs),
    /// Report MAE/MSE of a model on a labelled CSV file.
    Eval(EvalArgs),
    /// Predict ppv for one set of inputs or every row of a CSV file.
    Predict(PredictArgs),
    /// Exact Shapley attributions as CSV.
    Explain(ExplainArgs),
    /// k-NN mutual information of every feature with ppv.
    Mi(MiArgs),
    /// Train the built-in architecture/activation grid.
    Ablate(AblateArgs),
    /// Compare a model with empirical power-law predictors.
    Compare(CompareArgs),
    /// Serve the HTTP JSON API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = GeneratorParams::default().seed)]
    pub seed: u64,
    /// Zero noise; ppv follows the attenuation law exactly.
    #[arg(long)]
    pub noiseless: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Seed of the train/validation/test shuffle.
    #[arg(long, default_value_t = 7)]
    pub split_seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, short)]
    pub data: PathBuf,
    #[arg(long, short)]
    pub model: PathBuf,
    /// Per-epoch loss history (`epoch,train_mse,val_mae_mm_s`).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    #[arg(long, default_value_t = 50)]
    pub batch_size: usize,
    #[arg(long, default_value_t = AdamConfig::default().lr)]
    pub lr: f64,
    /// Seed of batch shuffling and dropout.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_INIT_SEED)]
    pub init_seed: u64,
    /// Comma-separated layer widths, input first.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_WIDTHS.to_vec())]
    pub widths: Vec<usize>,
    #[arg(long, default_value_t = Activation::Relu)]
    pub activation: Activation,
    #[arg(long, default_value_t = DEFAULT_DROPOUT)]
    pub dropout: f64,
    /// Training records stored in the model file for attribution.
    #[arg(long, default_value_t = DEFAULT_BACKGROUND)]
    pub background: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    #[arg(long, short)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// CSV of inputs; writes one prediction per row instead of using flags.
    #[arg(long, conflicts_with_all = ["pile_size", "pile_length", "hammer_weight", "drop_height", "distance", "location", "direction"])]
    pub input: Option<PathBuf>,
    /// Output CSV for `--input` (stdout if absent).
    #[arg(long, requires = "input")]
    pub output: Option<PathBuf>,
    /// Pile size (width), mm.
    #[arg(long, required_unless_present = "input", allow_negative_numbers = true)]
    pub pile_size: Option<f64>,
    /// Pile length, m.
    #[arg(long, required_unless_present = "input", allow_negative_numbers = true)]
    pub pile_length: Option<f64>,
    /// Hammer weight, ton.
    #[arg(long, required_unless_present = "input", allow_negative_numbers = true)]
    pub hammer_weight: Option<f64>,
    /// Drop height, m.
    #[arg(long, required_unless_present = "input", allow_negative_numbers = true)]
    pub drop_height: Option<f64>,
    /// Distance from pile to sensor, m.
    #[arg(long, required_unless_present = "input", allow_negative_numbers = true)]
    pub distance: Option<f64>,
    /// Sensor location: 1-3 or ground/footing/building.
    #[arg(long, required_unless_present = "input")]
    pub location: Option<CodeOrName>,
    /// Sensor direction: 1-3 or longitudinal/transverse/vertical.
    #[arg(long, required_unless_present = "input")]
    pub direction: Option<CodeOrName>,
    /// Include Shapley attributions.
    #[arg(long)]
    pub explain: bool,
    /// Print the same JSON document the HTTP API returns.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    /// Records to explain.
    #[arg(long, short)]
    pub data: PathBuf,
    /// Background records; defaults to the set stored in the model file.
    #[arg(long)]
    pub background: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_BACKGROUND)]
    pub background_size: usize,
    #[arg(long, default_value_t = 0)]
    pub background_seed: u64,
    /// Per-record rows `record_id,feature,feature_value,phi_mm_s`.
    #[arg(long, default_value = "shap_values.csv")]
    pub points: PathBuf,
    /// Ranking `feature,mean_abs_phi`.
    #[arg(long, default_value = "shap_summary.csv")]
    pub summary: PathBuf,
}

#[derive(Debug, Args)]
pub struct MiArgs {
    #[arg(long, short)]
    pub data: PathBuf,
    #[arg(long, short, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Output CSV (stdout if absent).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long, short)]
    pub data: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long, default_value_t = 400)]
    pub epochs: usize,
    #[arg(long, default_value_t = 50)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Table as CSV (`model,reference_mae,test_mae_mm_s`).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    #[arg(long, short)]
    pub data: PathBuf,
    /// Restrict to the test portion of the 80/10/10 split of `--data`.
    #[arg(long)]
    pub test_split: bool,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Preset names (attewell_farmer, achmus); default both.
    #[arg(long, value_delimiter = ',')]
    pub presets: Vec<String>,
    /// Extra power law `name:k:n`; repeatable.
    #[arg(long = "power-law")]
    pub power_laws: Vec<String>,
    /// Distance table CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Per-predictor MAE CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, short)]
    pub model: PathBuf,
    #[arg(long, env = "PPV_PORT", default_value_t = DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Background records for /explain when the model file has none.
    #[arg(long)]
    pub background: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn load(path: &Path) -> Result<SavedModel> {
    load_model(path).with_context(|| format!("cannot load model {}", path.display()))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Predict(a) => predict_cmd(a),
        Command::Explain(a) => explain_cmd(a),
        Command::Mi(a) => mi_cmd(a),
        Command::Ablate(a) => ablate_cmd(a),
        Command::Compare(a) => compare_cmd(a),
        Command::Serve(a) => serve_cmd(a),
    }
}

fn gen_data(a: GenDataArgs) -> Result<()> {
    let mut gp = GeneratorParams::default().with_seed(a.seed);
    if a.noiseless {
        gp = gp.noiseless();
    }
    let records = generate_synthetic(a.n, &gp);
    save_csv(&a.out, &records)?;
    println!("wrote {} records to {}", records.len(), a.out.display());
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let records = load_csv(&a.data)?;
    let data = split(&records, a.split.split_seed)?;
    let mut spec = NetworkSpec::new(a.widths, a.activation).with_seed(a.init_seed);
    spec.dropout_rate = a.dropout;
    let config = TrainConfig {
        spec,
        batch_size: a.batch_size,
        epochs: a.epochs,
        adam: AdamConfig {
            lr: a.lr,
            ..AdamConfig::default()
        },
        seed: a.seed,
    };
    let (model, report) = train(&config, &data)?;
    let background = if a.background == 0 {
        None
    } else {
        Some(BackgroundSet::sample(&data.train, a.background, a.seed)?)
    };
    save_model(&SavedModel { model, background }, &a.model)?;
    if let Some(path) = &a.report {
        write_report_csv(&report, create(path)?)?;
    }
    println!(
        "records: train {} / validation {} / test {}",
        data.train.len(),
        data.validation.len(),
        data.test.len()
    );
    println!(
        "best epoch {} of {}: validation MAE {} mm/s",
        report.best_epoch, config.epochs, report.best_validation_mae
    );
    if let Some(t) = report.test_mae {
        println!("test MAE {t} mm/s");
    }
    println!("model written to {}", a.model.display());
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let saved = load(&a.model)?;
    let records = load_csv(&a.data)?;
    let m = evaluate(&saved.model, &records)?;
    println!("n={}", m.n);
    println!("mae_mm_s={}", m.mae_mm_s);
    println!("mse_normalized={}", m.mse_normalized);
    Ok(())
}

fn print_response(r: &PredictResponse, json: bool) -> Result<()> {
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    if json {
        println!("{}", serde_json::to_string(r)?);
        return Ok(());
    }
    println!("Peak Particle Velocity: {} mm/s", r.ppv_mm_s);
    if let Some(shap) = &r.shap {
        println!("baseline: {} mm/s", shap.baseline_mm_s);
        for p in &shap.phi {
            println!("  {:<17} {:>12} {:+} mm/s", p.feature, p.value, p.phi_mm_s);
        }
    }
    Ok(())
}

fn predict_cmd(a: PredictArgs) -> Result<()> {
    let loaded = LoadedModel::new(load(&a.model)?);
    if let Some(input) = &a.input {
        let records = load_csv(input)?;
        let mut out: Box<dyn Write> = match &a.output {
            Some(p) => Box::new(create(p)?),
            None => Box::new(io::stdout().lock()),
        };
        writeln!(out, "row,ppv_mm_s")?;
        for (i, r) in records.iter().enumerate() {
            for w in r.extrapolation_warnings() {
                eprintln!("warning: row {}: {w}", i + 1);
            }
            writeln!(out, "{},{}", i + 1, loaded.saved.model.predict_record(r)?)?;
        }
        out.flush()?;
        return Ok(());
    }
    // clap guarantees every flag is present without --input.
    let req = PredictRequest {
        pile_size_mm: a.pile_size.unwrap(),
        pile_length_m: a.pile_length.unwrap(),
        hammer_weight_ton: a.hammer_weight.unwrap(),
        drop_height_m: a.drop_height.unwrap(),
        distance_m: a.distance.unwrap(),
        sensor_location: a.location.unwrap(),
        sensor_direction: a.direction.unwrap(),
        explain: a.explain,
    };
    let resp = predict(&loaded, &req, a.explain)?;
    print_response(&resp, a.json)
}

fn explain_cmd(a: ExplainArgs) -> Result<()> {
    let saved = load(&a.model)?;
    let records = load_csv(&a.data)?;
    let background = match (&a.background, &saved.background) {
        (Some(path), _) => BackgroundSet::sample(&load_csv(path)?, a.background_size, a.background_seed)?,
        (None, Some(bg)) => bg.clone(),
        (None, None) => bail!("model file has no background set; pass --background <csv>"),
    };
    let results = shap_many(&saved.model, &records, &background)?;
    write_summary_points_csv(&summary_points(&records, &results), create(&a.points)?)?;
    let ranking = mean_abs_ranking(&results)?;
    write_mean_abs_csv(&ranking, create(&a.summary)?)?;
    println!("mean |phi| (mm/s) over {} records:", records.len());
    for (f, v) in ranking {
        println!("  {:<17} {v}", f.name());
    }
    Ok(())
}

fn mi_cmd(a: MiArgs) -> Result<()> {
    let records = load_csv(&a.data)?;
    let mi = mutual_information(&records, a.k)?;
    match &a.out {
        Some(p) => mi.write_csv(create(p)?)?,
        None => mi.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn ablate_cmd(a: AblateArgs) -> Result<()> {
    let records = load_csv(&a.data)?;
    let data = split(&records, a.split.split_seed)?;
    let settings = AblationSettings {
        epochs: a.epochs,
        batch_size: a.batch_size,
        seed: a.seed,
        ..AblationSettings::default()
    };
    let table = run_ablation(&data, &reference_configs(), &settings)?;
    print!("{}", table.to_text());
    if let Some(p) = &a.out {
        table.write_csv(create(p)?)?;
    }
    Ok(())
}

fn parse_power_law(s: &str) -> Result<PowerLawParams> {
    let parts: Vec<&str> = s.split(':').collect();
    let [name, k, n] = parts.as_slice() else {
        bail!("power law `{s}` must look like name:k:n");
    };
    let k: f64 = k.parse().with_context(|| format!("bad k in `{s}`"))?;
    let n: f64 = n.parse().with_context(|| format!("bad n in `{s}`"))?;
    Ok(PowerLawParams::new(*name, k, n)?)
}

fn compare_cmd(a: CompareArgs) -> Result<()> {
    let saved = load(&a.model)?;
    let mut records = load_csv(&a.data)?;
    if a.test_split {
        records = split(&records, a.split.split_seed)?.test;
    }
    let mut baselines = if a.presets.is_empty() {
        PowerLawParams::presets()
    } else {
        a.presets
            .iter()
            .map(|n| PowerLawParams::preset(n).with_context(|| format!("unknown preset `{n}`")))
            .collect::<Result<_>>()?
    };
    for s in &a.power_laws {
        baselines.push(parse_power_law(s)?);
    }
    let report = compare(&saved.model, &baselines, &records)?;
    if let Some(p) = &a.table {
        report.write_table_csv(create(p)?)?;
    }
    if let Some(p) = &a.summary {
        report.write_summary_csv(create(p)?)?;
    }
    println!("MAE over {} records (power laws are configurable presets):", records.len());
    for (name, mae) in report.mae_summary() {
        println!("  {name:<16} {mae} mm/s");
    }
    Ok(())
}

fn serve_cmd(a: ServeArgs) -> Result<()> {
    let mut saved = load(&a.model)?;
    if let Some(path) = &a.background {
        saved.background = Some(BackgroundSet::sample(&load_csv(path)?, DEFAULT_BACKGROUND, 0)?);
    }
    if saved.background.is_none() {
        log::warn!("model has no background set; /explain and explain=true will fail");
    }
    let loaded = LoadedModel::new(saved);
    let addr = SocketAddr::new(a.host, a.port);
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(loaded, addr))
        .with_context(|| format!("server on {addr} failed"))
}
