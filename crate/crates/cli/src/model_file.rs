//! Line-oriented text format for trained models.
//!
//! Every real is written as `{:.16e}` (17 significant digits), which parses
//! back to the identical `f64`, so save → load → save is byte-identical and
//! loaded predictions match the saved model bit for bit.
//!
//! ```text
//! ppv-model <version>
//! widths 7 100 200 20 5 1
//! hidden_activation relu
//! ...
//! layer <index> <rows> <cols>
//! w <row values>          (one line per output unit)
//! b <bias values>
//! ...
//! background <count>
//! row <7 values>
//! end
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ppv_core::data::{Features, ScalerParams, N_FEATURES};
use ppv_core::explain::BackgroundSet;
use ppv_core::nn::{Activation, LayerParams, Matrix, Network, NetworkParams, NetworkSpec};
use ppv_core::train::{TrainedModel, TrainingMeta};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "ppv-model";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("unsupported model format version {found} (this build reads version {FORMAT_VERSION})")]
    UnsupportedVersion { found: String },
    #[error("not a model file: first line must start with `{MAGIC}`")]
    NotAModel,
    #[error("line {line}: unexpected end of file, expected {expected}")]
    Truncated { line: usize, expected: String },
    #[error("line {line}: expected `{expected}`, found `{found}`")]
    Unexpected { line: usize, expected: String, found: String },
    #[error("line {line}: invalid number `{token}`")]
    BadNumber { line: usize, token: String },
    #[error("line {line}: {message}")]
    Shape { line: usize, message: String },
    #[error("invalid model: {0}")]
    Invalid(#[from] ppv_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, ModelFileError>;

/// A trained model plus an optional background set for attribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: TrainedModel,
    pub background: Option<BackgroundSet>,
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_reals(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    for v in values {
        out.push(' ');
        out.push_str(&real(*v));
    }
    out.push('\n');
}

pub fn to_text(saved: &SavedModel) -> String {
    let m = &saved.model;
    let spec = m.spec();
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {FORMAT_VERSION}");
    let widths: Vec<String> = spec.layer_widths.iter().map(|w| w.to_string()).collect();
    let _ = writeln!(s, "widths {}", widths.join(" "));
    let _ = writeln!(s, "hidden_activation {}", spec.hidden_activation);
    let _ = writeln!(s, "output_activation {}", spec.output_activation);
    let _ = writeln!(s, "dropout_rate {}", real(spec.dropout_rate));
    match spec.dropout_after {
        Some(i) => {
            let _ = writeln!(s, "dropout_after {i}");
        }
        None => s.push_str("dropout_after none\n"),
    }
    let _ = writeln!(s, "init_seed {}", spec.seed);
    let _ = writeln!(s, "train_seed {}", m.meta.seed);
    let _ = writeln!(s, "epochs {}", m.meta.epochs);
    let _ = writeln!(s, "best_epoch {}", m.meta.best_epoch);
    let _ = writeln!(s, "best_validation_mae {}", real(m.meta.best_validation_mae));
    push_reals(&mut s, "scaler_mean", &m.scaler.mean);
    push_reals(&mut s, "scaler_std", &m.scaler.std);
    let _ = writeln!(s, "ppv_min {}", real(m.scaler.ppv_min));
    let _ = writeln!(s, "ppv_max {}", real(m.scaler.ppv_max));
    for (i, layer) in m.network.params.layers.iter().enumerate() {
        let (rows, cols) = layer.weights.shape();
        let _ = writeln!(s, "layer {i} {rows} {cols}");
        for r in 0..rows {
            push_reals(&mut s, "w", layer.weights.row(r));
        }
        push_reals(&mut s, "b", &layer.bias);
    }
    match &saved.background {
        Some(bg) => {
            let _ = writeln!(s, "background {}", bg.len());
            for row in bg.rows() {
                push_reals(&mut s, "row", row);
            }
        }
        None => s.push_str("background 0\n"),
    }
    s.push_str("end\n");
    s
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            iter: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next line split into key and value tokens; `expected` names the key.
    fn next(&mut self, expected: &str) -> Result<(usize, Vec<&'a str>)> {
        match self.iter.next() {
            Some((i, line)) => {
                self.last = i + 1;
                let mut tokens = line.split_ascii_whitespace();
                let key = tokens.next().unwrap_or("");
                if key != expected {
                    return Err(ModelFileError::Unexpected {
                        line: i + 1,
                        expected: expected.to_string(),
                        found: line.chars().take(40).collect(),
                    });
                }
                Ok((i + 1, tokens.collect()))
            }
            None => Err(ModelFileError::Truncated {
                line: self.last + 1,
                expected: format!("`{expected}`"),
            }),
        }
    }

    fn single(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (line, tokens) = self.next(key)?;
        match tokens.as_slice() {
            [one] => Ok((line, one)),
            _ => Err(ModelFileError::Shape {
                line,
                message: format!("`{key}` takes exactly one value, got {}", tokens.len()),
            }),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let (line, tok) = self.single(key)?;
        tok.parse().map_err(|_| ModelFileError::BadNumber {
            line,
            token: tok.to_string(),
        })
    }

    fn reals(&mut self, key: &str, count: usize) -> Result<Vec<f64>> {
        let (line, tokens) = self.next(key)?;
        if tokens.len() != count {
            return Err(ModelFileError::Shape {
                line,
                message: format!("`{key}` needs {count} values, got {}", tokens.len()),
            });
        }
        tokens.iter().map(|t| parse_real(line, t)).collect()
    }
}

fn parse_real(line: usize, token: &str) -> Result<f64> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(ModelFileError::BadNumber {
            line,
            token: token.to_string(),
        }),
    }
}

fn parse_activation(line: usize, tok: &str) -> Result<Activation> {
    tok.parse().map_err(|message: String| ModelFileError::Shape { line, message })
}

pub fn from_text(text: &str) -> Result<SavedModel> {
    let mut lines = Lines::new(text);
    let (_, header) = lines.next(MAGIC).map_err(|e| match e {
        ModelFileError::Unexpected { .. } | ModelFileError::Truncated { .. } => ModelFileError::NotAModel,
        other => other,
    })?;
    match header.as_slice() {
        [v] if *v == FORMAT_VERSION.to_string() => {}
        other => {
            return Err(ModelFileError::UnsupportedVersion {
                found: other.join(" "),
            })
        }
    }

    let (line, tokens) = lines.next("widths")?;
    let layer_widths = tokens
        .iter()
        .map(|t| {
            t.parse::<usize>().map_err(|_| ModelFileError::BadNumber {
                line,
                token: t.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (line, tok) = lines.single("hidden_activation")?;
    let hidden_activation = parse_activation(line, tok)?;
    let (line, tok) = lines.single("output_activation")?;
    let output_activation = parse_activation(line, tok)?;
    let (line, tok) = lines.single("dropout_rate")?;
    let dropout_rate = parse_real(line, tok)?;
    let (line, tok) = lines.single("dropout_after")?;
    let dropout_after = match tok {
        "none" => None,
        t => Some(t.parse().map_err(|_| ModelFileError::BadNumber {
            line,
            token: t.to_string(),
        })?),
    };
    let spec = NetworkSpec {
        layer_widths,
        hidden_activation,
        output_activation,
        dropout_rate,
        dropout_after,
        seed: lines.parsed("init_seed")?,
    };
    spec.validate()?;

    let train_seed = lines.parsed("train_seed")?;
    let epochs = lines.parsed("epochs")?;
    let best_epoch = lines.parsed("best_epoch")?;
    let (line, tok) = lines.single("best_validation_mae")?;
    let meta = TrainingMeta {
        seed: train_seed,
        epochs,
        best_epoch,
        best_validation_mae: parse_real(line, tok)?,
    };

    let mean: Features = lines.reals("scaler_mean", N_FEATURES)?.try_into().unwrap();
    let std: Features = lines.reals("scaler_std", N_FEATURES)?.try_into().unwrap();
    let (line, tok) = lines.single("ppv_min")?;
    let ppv_min = parse_real(line, tok)?;
    let (line, tok) = lines.single("ppv_max")?;
    let ppv_max = parse_real(line, tok)?;
    let scaler = ScalerParams {
        mean,
        std,
        ppv_min,
        ppv_max,
    };
    scaler.validate()?;

    let mut layers = Vec::with_capacity(spec.depth());
    for (i, pair) in spec.layer_widths.windows(2).enumerate() {
        let (line, tokens) = lines.next("layer")?;
        let want = [i, pair[1], pair[0]];
        let got: Vec<Option<usize>> = tokens.iter().map(|t| t.parse().ok()).collect();
        if got.len() != 3 || got.iter().zip(want).any(|(g, w)| *g != Some(w)) {
            return Err(ModelFileError::Shape {
                line,
                message: format!(
                    "expected `layer {} {} {}` from the widths, found `layer {}`",
                    want[0],
                    want[1],
                    want[2],
                    tokens.join(" ")
                ),
            });
        }
        let (rows, cols) = (pair[1], pair[0]);
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            values.extend(lines.reals("w", cols)?);
        }
        let bias = lines.reals("b", rows)?;
        layers.push(LayerParams {
            weights: Matrix::from_vec(rows, cols, values)?,
            bias,
        });
    }
    let network = Network::from_parts(spec, NetworkParams { layers })?;

    let count: usize = lines.parsed("background")?;
    let background = if count == 0 {
        None
    } else {
        let rows = (0..count)
            .map(|_| Ok(lines.reals("row", N_FEATURES)?.try_into().unwrap()))
            .collect::<Result<Vec<Features>>>()?;
        Some(BackgroundSet::new(rows)?)
    };
    let (line, rest) = lines.next("end")?;
    if !rest.is_empty() {
        return Err(ModelFileError::Unexpected {
            line,
            expected: "end".into(),
            found: rest.join(" "),
        });
    }
    if let Some((i, extra)) = lines.iter.find(|(_, l)| !l.trim().is_empty()) {
        return Err(ModelFileError::Unexpected {
            line: i + 1,
            expected: "nothing after `end`".into(),
            found: extra.chars().take(40).collect(),
        });
    }

    Ok(SavedModel {
        model: TrainedModel {
            network,
            scaler,
            meta,
        },
        background,
    })
}

pub fn save_model(saved: &SavedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_text(saved)).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<SavedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_text(&text)
}

/// Short content hash identifying a model in API responses.
pub fn model_version(saved: &SavedModel) -> String {
    // FNV-1a over the canonical text: stable across runs and platforms.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in to_text(saved).bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("v{FORMAT_VERSION}-{:016x}", h)
}
