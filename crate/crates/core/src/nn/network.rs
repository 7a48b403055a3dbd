//! Dense feed-forward network with explicit forward and backward passes.
//!
//! Samples are processed in batches stored as matrices with one row per
//! sample. A single sample is a batch of one; there is no separate code path.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::activation::Activation;
use super::matrix::{gemm, Matrix, Op};
use crate::error::{Error, Result};

/// Default architecture: 7 inputs expanding to 200 then
/// narrowing to a single output.
pub const DEFAULT_WIDTHS: [usize; 6] = [7, 100, 200, 20, 5, 1];
pub const DEFAULT_DROPOUT: f64 = 0.1;
/// Init seed used when none is given. With this seed no hidden layer of the
/// built-in architectures starts out dead on standardized inputs.
pub const DEFAULT_INIT_SEED: u64 = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layer_widths: Vec<usize>,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    /// Probability of zeroing a unit during training; 0 disables dropout.
    pub dropout_rate: f64,
    /// Index into the hidden layers after which dropout is applied.
    pub dropout_after: Option<usize>,
    /// Seed for weight initialization.
    pub seed: u64,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self::new(DEFAULT_WIDTHS.to_vec(), Activation::Relu)
    }
}

impl NetworkSpec {
    /// Sigmoid output, dropout 0.1 after the second-to-last hidden layer.
    ///
    /// For the default widths that is the 20-unit layer, right before the
    /// network narrows to 5 units.
    pub fn new(layer_widths: Vec<usize>, hidden_activation: Activation) -> Self {
        let hidden = layer_widths.len().saturating_sub(2);
        let dropout_after = match hidden {
            0 => None,
            1 => Some(0),
            h => Some(h - 2),
        };
        Self {
            layer_widths,
            hidden_activation,
            output_activation: Activation::Sigmoid,
            dropout_rate: DEFAULT_DROPOUT,
            dropout_after,
            seed: DEFAULT_INIT_SEED,
        }
    }

    pub fn without_dropout(mut self) -> Self {
        self.dropout_rate = 0.0;
        self.dropout_after = None;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    /// Number of linear layers.
    pub fn depth(&self) -> usize {
        self.layer_widths.len() - 1
    }

    pub fn hidden_count(&self) -> usize {
        self.layer_widths.len().saturating_sub(2)
    }

    /// Human-readable width tuple such as `(7,100,200,20,5,1)`.
    pub fn widths_label(&self) -> String {
        let parts: Vec<String> = self.layer_widths.iter().map(|w| w.to_string()).collect();
        format!("({})", parts.join(","))
    }

    pub fn validate(&self) -> Result<()> {
        let w = &self.layer_widths;
        if w.len() < 2 {
            return Err(Error::InvalidSpec(
                "need at least an input and an output width".into(),
            ));
        }
        if w.contains(&0) {
            return Err(Error::InvalidSpec(format!("zero width in {w:?}")));
        }
        if *w.last().unwrap() != 1 {
            return Err(Error::InvalidSpec(format!(
                "output width must be 1, got {}",
                w.last().unwrap()
            )));
        }
        if !matches!(
            self.output_activation,
            Activation::Sigmoid | Activation::Identity
        ) {
            return Err(Error::InvalidSpec(format!(
                "output activation must be sigmoid or identity, got {}",
                self.output_activation
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidSpec(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout_rate
            )));
        }
        if let Some(idx) = self.dropout_after {
            if idx >= self.hidden_count() {
                return Err(Error::InvalidSpec(format!(
                    "dropout after hidden layer {idx}, but there are only {} hidden layers",
                    self.hidden_count()
                )));
            }
        }
        Ok(())
    }

    fn activation_of(&self, layer: usize) -> Activation {
        if layer + 1 == self.depth() {
            self.output_activation
        } else {
            self.hidden_activation
        }
    }

    fn dropout_at(&self, layer: usize) -> bool {
        self.dropout_rate > 0.0 && self.dropout_after == Some(layer)
    }
}

/// Weight matrix (`out x in`) and bias vector of one linear layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Trainable parameters, also used as the container for gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub layers: Vec<LayerParams>,
}

impl NetworkParams {
    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, seeded by `spec.seed`.
    pub fn init(spec: &NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let layers = spec
            .layer_widths
            .windows(2)
            .map(|pair| {
                let (fan_in, fan_out) = (pair[0], pair[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let mut draw = || rng.random_range(-bound..bound);
                let weights: Vec<f64> = (0..fan_in * fan_out).map(|_| draw()).collect();
                let bias: Vec<f64> = (0..fan_out).map(|_| draw()).collect();
                LayerParams {
                    weights: Matrix::from_vec(fan_out, fan_in, weights).expect("shape"),
                    bias,
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    weights: Matrix::zeros(l.weights.rows(), l.weights.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    /// Parameter tensors in a fixed order: weights then bias, layer by layer.
    pub fn tensors(&self) -> impl Iterator<Item = &[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
    }

    pub fn param_count(&self) -> usize {
        self.tensors().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn same_shape(&self, other: &NetworkParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weights.shape() == b.weights.shape() && a.bias.len() == b.bias.len())
    }

    pub fn matches(&self, spec: &NetworkSpec) -> bool {
        self.layers.len() == spec.depth()
            && self.layers.iter().zip(spec.layer_widths.windows(2)).all(|(l, w)| {
                l.weights.shape() == (w[1], w[0]) && l.bias.len() == w[1]
            })
    }
}

/// Train mode carries the random stream that draws dropout masks.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

#[derive(Debug, Clone)]
pub struct LayerTrace {
    pub pre: Matrix,
    /// Activation output after dropout; this is the next layer's input.
    pub post: Matrix,
    /// `true` marks a kept unit. Present only for the dropout layer in train mode.
    pub mask: Option<Vec<bool>>,
}

#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub input: Matrix,
    pub layers: Vec<LayerTrace>,
}

impl ForwardTrace {
    /// Network outputs, one per input row.
    pub fn outputs(&self) -> Vec<f64> {
        self.layers
            .last()
            .map(|l| l.post.as_slice().to_vec())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: NetworkSpec,
    pub params: NetworkParams,
}

impl Network {
    pub fn new(spec: NetworkSpec) -> Result<Self> {
        let params = NetworkParams::init(&spec)?;
        Ok(Self { spec, params })
    }

    pub fn from_parts(spec: NetworkSpec, params: NetworkParams) -> Result<Self> {
        spec.validate()?;
        if !params.matches(&spec) {
            return Err(Error::Consistency(format!(
                "parameter shapes do not match widths {}",
                spec.widths_label()
            )));
        }
        Ok(Self { spec, params })
    }

    pub fn forward(&self, x: &Matrix, mode: Mode<'_>) -> Result<ForwardTrace> {
        if x.cols() != self.spec.input_width() {
            return Err(Error::dim(
                "layer 0 input",
                format!("{} columns", self.spec.input_width()),
                x.cols(),
            ));
        }
        let mut rng = match mode {
            Mode::Eval => None,
            Mode::Train(r) => Some(r),
        };
        let batch = x.rows();
        let mut layers: Vec<LayerTrace> = Vec::with_capacity(self.params.layers.len());
        for (l, lp) in self.params.layers.iter().enumerate() {
            let input = layers.last().map_or(x, |t| &t.post);
            if input.cols() != lp.weights.cols() {
                return Err(Error::dim(
                    format!("layer {l} input"),
                    lp.weights.cols(),
                    input.cols(),
                ));
            }
            let out = lp.weights.rows();
            let mut pre = Matrix::zeros(batch, out);
            for r in 0..batch {
                pre.row_mut(r).copy_from_slice(&lp.bias);
            }
            gemm(1.0, Op::N(input), Op::T(&lp.weights), 1.0, &mut pre);

            let act = self.spec.activation_of(l);
            let mut post = pre.clone();
            for v in post.as_mut_slice() {
                *v = act.apply(*v);
            }

            let mut mask = None;
            if self.spec.dropout_at(l) {
                if let Some(rng) = rng.as_deref_mut() {
                    let p = self.spec.dropout_rate;
                    let scale = 1.0 / (1.0 - p);
                    let keep: Vec<bool> = (0..batch * out).map(|_| rng.random::<f64>() >= p).collect();
                    for (v, &k) in post.as_mut_slice().iter_mut().zip(&keep) {
                        *v = if k { *v * scale } else { 0.0 };
                    }
                    mask = Some(keep);
                }
            }
            layers.push(LayerTrace { pre, post, mask });
        }
        Ok(ForwardTrace {
            input: x.clone(),
            layers,
        })
    }

    /// Gradient of the batch-mean squared error `mean((y - f)^2)`.
    ///
    /// Units zeroed by a recorded dropout mask propagate zero gradient.
    pub fn backward(&self, trace: &ForwardTrace, targets: &[f64]) -> Result<NetworkParams> {
        let depth = self.params.layers.len();
        if trace.layers.len() != depth {
            return Err(Error::Consistency(format!(
                "trace has {} layers, network has {depth}",
                trace.layers.len()
            )));
        }
        let batch = trace.input.rows();
        if targets.len() != batch {
            return Err(Error::dim("backward targets", batch, targets.len()));
        }
        for (l, (t, lp)) in trace.layers.iter().zip(&self.params.layers).enumerate() {
            let expect = (batch, lp.weights.rows());
            if t.pre.shape() != expect || t.post.shape() != expect {
                return Err(Error::Consistency(format!(
                    "trace layer {l} has shape {:?}, expected {expect:?}",
                    t.pre.shape()
                )));
            }
            if t.mask.as_ref().is_some_and(|m| m.len() != batch * expect.1) {
                return Err(Error::Consistency(format!("dropout mask of layer {l} has wrong length")));
            }
        }
        if trace.input.cols() != self.spec.input_width() {
            return Err(Error::Consistency("trace input width differs from spec".into()));
        }

        let mut grads = self.params.zeros_like();
        let outputs = &trace.layers[depth - 1].post;
        let mut d_post = Matrix::zeros(batch, 1);
        let n = batch as f64;
        for r in 0..batch {
            d_post.set(r, 0, 2.0 * (outputs.get(r, 0) - targets[r]) / n);
        }

        for l in (0..depth).rev() {
            let t = &trace.layers[l];
            let lp = &self.params.layers[l];
            let act = self.spec.activation_of(l);
            let scale = 1.0 / (1.0 - self.spec.dropout_rate);

            let mut d_pre = d_post;
            for (i, (g, &z)) in d_pre
                .as_mut_slice()
                .iter_mut()
                .zip(t.pre.as_slice())
                .enumerate()
            {
                if let Some(mask) = &t.mask {
                    *g = if mask[i] { *g * scale } else { 0.0 };
                }
                *g *= act.derivative(z, act.apply(z));
            }

            let input = if l == 0 { &trace.input } else { &trace.layers[l - 1].post };
            let gl = &mut grads.layers[l];
            gemm(1.0, Op::T(&d_pre), Op::N(input), 0.0, &mut gl.weights);
            for r in 0..batch {
                for (b, &g) in gl.bias.iter_mut().zip(d_pre.row(r)) {
                    *b += g;
                }
            }

            d_post = if l > 0 {
                let mut d_in = Matrix::zeros(batch, lp.weights.cols());
                gemm(1.0, Op::N(&d_pre), Op::N(&lp.weights), 0.0, &mut d_in);
                d_in
            } else {
                Matrix::zeros(0, 0)
            };
        }
        Ok(grads)
    }

    /// Eval-mode outputs for a batch of rows.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.forward(x, Mode::Eval)?.outputs())
    }

    pub fn predict_one(&self, x: &[f64]) -> Result<f64> {
        let m = Matrix::from_vec(1, x.len(), x.to_vec())?;
        Ok(self.predict(&m)?[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn linear_net(w: f64, b: f64) -> Network {
        let mut spec = NetworkSpec::new(vec![1, 1], Activation::Identity);
        spec.output_activation = Activation::Identity;
        let params = NetworkParams {
            layers: vec![LayerParams {
                weights: Matrix::from_vec(1, 1, vec![w]).unwrap(),
                bias: vec![b],
            }],
        };
        Network::from_parts(spec, params).unwrap()
    }

    #[test]
    fn default_spec_is_reference_architecture() {
        let spec = NetworkSpec::default();
        assert_eq!(spec.layer_widths, vec![7, 100, 200, 20, 5, 1]);
        assert_eq!(spec.dropout_rate, 0.1);
        // hidden layers are 100, 200, 20, 5: dropout follows the 20-unit one
        assert_eq!(spec.dropout_after, Some(2));
        assert_eq!(spec.layer_widths[spec.dropout_after.unwrap() + 1], 20);
        spec.validate().unwrap();
        assert_eq!(NetworkParams::init(&spec).unwrap().param_count(), 25_131);
    }

    #[test]
    fn dropout_follows_20_unit_layer_in_ablation_widths() {
        for widths in [vec![7, 200, 1000, 2000, 200, 20, 5, 1], vec![7, 50, 100, 20, 5, 1]] {
            let spec = NetworkSpec::new(widths.clone(), Activation::Relu);
            assert_eq!(widths[spec.dropout_after.unwrap() + 1], 20);
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = NetworkSpec::default();
        s.layer_widths = vec![7, 3, 2];
        assert!(s.validate().is_err());
        let mut s = NetworkSpec::default();
        s.dropout_rate = 1.0;
        assert!(s.validate().is_err());
        let mut s = NetworkSpec::default();
        s.output_activation = Activation::Relu;
        assert!(s.validate().is_err());
        let mut s = NetworkSpec::default();
        s.dropout_after = Some(4);
        assert!(s.validate().is_err());
        let mut s = NetworkSpec::default();
        s.layer_widths = vec![7, 0, 1];
        assert!(s.validate().is_err());
    }

    #[test]
    fn identity_network_composes_linear_maps() {
        let mut spec = NetworkSpec::new(vec![3, 3, 3, 1], Activation::Identity).without_dropout();
        spec.output_activation = Activation::Identity;
        let params = NetworkParams {
            layers: vec![
                LayerParams { weights: Matrix::identity(3), bias: vec![0.0; 3] },
                LayerParams { weights: Matrix::identity(3), bias: vec![0.0; 3] },
                LayerParams {
                    weights: Matrix::from_vec(1, 3, vec![1.0, 2.0, 3.0]).unwrap(),
                    bias: vec![0.0],
                },
            ],
        };
        let net = Network::from_parts(spec, params).unwrap();
        let y = net.predict_one(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(y, 3.0);
    }

    #[test]
    fn eval_is_deterministic() {
        let net = Network::new(NetworkSpec::default()).unwrap();
        let x = [0.3, -1.2, 0.8, 0.0, 1.5, -0.4, 0.9];
        let a = net.predict_one(&x).unwrap();
        let b = net.predict_one(&x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn wrong_input_width_is_a_dimension_error() {
        let net = Network::new(NetworkSpec::default()).unwrap();
        let err = net.predict_one(&[1.0, 2.0]).unwrap_err();
        assert!(err.to_string().contains("layer 0"), "{err}");
    }

    #[test]
    fn dropout_preserves_expected_activation() {
        // One hidden layer of 1000 units whose activations are all exactly 1.
        let mut spec = NetworkSpec::new(vec![1, 1000, 1], Activation::Identity);
        spec.dropout_rate = 0.5;
        spec.dropout_after = Some(0);
        let params = NetworkParams {
            layers: vec![
                LayerParams {
                    weights: Matrix::zeros(1000, 1),
                    bias: vec![1.0; 1000],
                },
                LayerParams {
                    weights: Matrix::zeros(1, 1000),
                    bias: vec![0.0],
                },
            ],
        };
        let net = Network::from_parts(spec, params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Matrix::zeros(100, 1);
        let (mut sum, mut count) = (0.0, 0usize);
        for _ in 0..2 {
            let trace = net.forward(&x, Mode::Train(&mut rng)).unwrap();
            let post = &trace.layers[0].post;
            for &v in post.as_slice() {
                assert!(v == 0.0 || v == 2.0);
                sum += v;
                count += 1;
            }
        }
        assert!(count >= 100_000);
        let mean = sum / count as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn linear_gradient_closed_form() {
        let (w, b, x, y) = (0.7, -0.2, 1.5, 2.0);
        let net = linear_net(w, b);
        let xm = Matrix::from_vec(1, 1, vec![x]).unwrap();
        let trace = net.forward(&xm, Mode::Eval).unwrap();
        let g = net.backward(&trace, &[y]).unwrap();
        let f = w * x + b;
        assert!((g.layers[0].weights.get(0, 0) - (-2.0 * (y - f) * x)).abs() < 1e-15);
        assert!((g.layers[0].bias[0] - (-2.0 * (y - f))).abs() < 1e-15);
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let net = Network::new(NetworkSpec::default().without_dropout()).unwrap();
        let x = Matrix::from_vec(1, 7, vec![0.1, 0.2, -0.3, 0.4, -0.5, 0.6, 0.7]).unwrap();
        let trace = net.forward(&x, Mode::Eval).unwrap();
        let target = trace.outputs()[0];
        let g = net.backward(&trace, &[target]).unwrap();
        assert!(g.tensors().all(|t| t.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn masked_units_get_no_gradient() {
        let mut spec = NetworkSpec::new(vec![2, 8, 1], Activation::Tanh);
        spec.dropout_rate = 0.5;
        spec.dropout_after = Some(0);
        let net = Network::new(spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Matrix::from_vec(1, 2, vec![0.4, -0.9]).unwrap();
        let trace = net.forward(&x, Mode::Train(&mut rng)).unwrap();
        let mask = trace.layers[0].mask.clone().unwrap();
        assert!(mask.iter().any(|k| !k));
        let g = net.backward(&trace, &[0.3]).unwrap();
        for (unit, kept) in mask.iter().enumerate() {
            if !kept {
                assert_eq!(g.layers[0].bias[unit], 0.0);
                assert!(g.layers[0].weights.row(unit).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn mismatched_trace_is_rejected() {
        let a = Network::new(NetworkSpec::default()).unwrap();
        let b = Network::new(NetworkSpec::new(vec![7, 4, 1], Activation::Relu)).unwrap();
        let x = Matrix::zeros(1, 7);
        let trace = b.forward(&x, Mode::Eval).unwrap();
        assert!(matches!(a.backward(&trace, &[0.0]), Err(Error::Consistency(_))));
        let trace = a.forward(&x, Mode::Eval).unwrap();
        assert!(a.backward(&trace, &[0.0, 1.0]).is_err());
    }
}
