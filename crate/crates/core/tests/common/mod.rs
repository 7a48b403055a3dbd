//! Independent oracles shared by the integration tests and the acceptance
//! suite. Nothing here calls the routine it is used to check.

#![allow(dead_code)]

use ppv_core::data::{Features, PileDrivingRecord, ScalerParams, SensorDirection, SensorLocation, N_FEATURES};
use ppv_core::nn::{Activation, Matrix, Mode, Network, NetworkSpec, DEFAULT_WIDTHS};
use ppv_core::train::{Predictor, TrainedModel, TrainingMeta};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn identity_scaler() -> ScalerParams {
    ScalerParams {
        mean: [0.0; N_FEATURES],
        std: [1.0; N_FEATURES],
        ppv_min: 0.0,
        ppv_max: 1.0,
    }
}

pub fn wrap(network: Network, scaler: ScalerParams) -> TrainedModel {
    TrainedModel {
        network,
        scaler,
        meta: TrainingMeta {
            seed: 0,
            epochs: 0,
            best_epoch: 0,
            best_validation_mae: 0.0,
        },
    }
}

/// `f(x) = w·x + c` as a single identity-output layer on unscaled inputs.
pub fn linear_model(w: [f64; N_FEATURES], c: f64) -> TrainedModel {
    let mut spec = NetworkSpec::new(vec![N_FEATURES, 1], Activation::Relu);
    spec.output_activation = Activation::Identity;
    let mut net = Network::new(spec).unwrap();
    net.params.layers[0].weights = Matrix::from_vec(1, N_FEATURES, w.to_vec()).unwrap();
    net.params.layers[0].bias = vec![c];
    wrap(net, identity_scaler())
}

/// Direct evaluation of the additive closed form `wᵢ (xᵢ − mean_b xᵢ)`.
pub fn linear_shap_closed_form(w: &[f64; N_FEATURES], x: &Features, background: &[Features]) -> [f64; N_FEATURES] {
    std::array::from_fn(|i| {
        let mean = background.iter().map(|b| b[i]).sum::<f64>() / background.len() as f64;
        w[i] * (x[i] - mean)
    })
}

pub fn record_from(f: Features) -> PileDrivingRecord {
    PileDrivingRecord {
        pile_size: f[0],
        pile_length: f[1],
        hammer_weight: f[2],
        drop_height: f[3],
        distance: f[4],
        sensor_location: SensorLocation::from_code(f[5] as i64).unwrap_or(SensorLocation::Ground),
        sensor_direction: SensorDirection::from_code(f[6] as i64).unwrap_or(SensorDirection::Vertical),
        ppv: None,
    }
}

fn dyadic(v: f64, bits: i32) -> f64 {
    let s = 2f64.powi(bits);
    (v * s).round() / s
}

/// Default-shaped ReLU network whose first layer uses dyadic weights/biases and
/// the same column for features `a` and `b`, on an identity scaler. With
/// dyadic inputs every first-layer product and partial sum is exact, so the
/// two features are exchangeable in floating point, not just in exact arithmetic.
pub fn symmetric_model(a: usize, b: usize, seed: u64) -> TrainedModel {
    let spec = NetworkSpec::new(DEFAULT_WIDTHS.to_vec(), Activation::Relu)
        .without_dropout()
        .with_seed(seed);
    let mut net = Network::new(spec).unwrap();
    let first = &mut net.params.layers[0];
    for r in 0..first.weights.rows() {
        for c in 0..first.weights.cols() {
            let v = dyadic(first.weights.get(r, c), 8);
            first.weights.set(r, c, v);
        }
        let shared = first.weights.get(r, a);
        first.weights.set(r, b, shared);
    }
    for v in &mut first.bias {
        *v = dyadic(*v, 8);
    }
    wrap(net, identity_scaler())
}

/// Dyadic feature rows (multiples of 1/4 in [0.25, 4]) with equal values in
/// columns `a` and `b`; categorical columns hold valid codes.
pub fn symmetric_rows(n: usize, a: usize, b: usize, rng: &mut ChaCha8Rng) -> Vec<Features> {
    (0..n)
        .map(|_| {
            let mut f: Features = std::array::from_fn(|_| f64::from(rng.random_range(1..=16u32)) / 4.0);
            f[5] = f64::from(rng.random_range(1..=3u32));
            f[6] = f64::from(rng.random_range(1..=3u32));
            f[b] = f[a];
            f
        })
        .collect()
}

/// Default network with seeded random parameters behind a given scaler.
pub fn random_default_model(seed: u64, scaler: ScalerParams) -> TrainedModel {
    let spec = NetworkSpec::new(DEFAULT_WIDTHS.to_vec(), Activation::Relu).with_seed(seed);
    wrap(Network::new(spec).unwrap(), scaler)
}

/// Monte-Carlo Shapley estimate by permutation sampling: each sample draws a
/// feature order and one background row and records every feature's marginal
/// contribution along that order. Returns per-feature mean and standard error.
pub fn permutation_shapley<P: Predictor>(
    model: &P,
    x: &Features,
    background: &[Features],
    samples: usize,
    seed: u64,
) -> ([f64; N_FEATURES], [f64; N_FEATURES]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = [0.0; N_FEATURES];
    let mut sum_sq = [0.0; N_FEATURES];
    let mut order: Vec<usize> = (0..N_FEATURES).collect();
    for _ in 0..samples {
        order.shuffle(&mut rng);
        let bg = background[rng.random_range(0..background.len())];
        let mut chain = Vec::with_capacity(N_FEATURES + 1);
        let mut cur = bg;
        chain.push(cur);
        for &i in &order {
            cur[i] = x[i];
            chain.push(cur);
        }
        let preds = model.predict_ppv(&chain).unwrap();
        for (step, &i) in order.iter().enumerate() {
            let d = preds[step + 1] - preds[step];
            sum[i] += d;
            sum_sq[i] += d * d;
        }
    }
    let n = samples as f64;
    let mean: [f64; N_FEATURES] = std::array::from_fn(|i| sum[i] / n);
    let se = std::array::from_fn(|i| {
        let var = (sum_sq[i] / n - mean[i] * mean[i]).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    });
    (mean, se)
}

/// Shapley weight sum over all coalitions excluding one feature, computed
/// from binomial counts: Σ_s C(6,s)·s!(6−s)!/7!.
pub fn shapley_weight_total() -> f64 {
    let fact = |n: u64| (1..=n).product::<u64>() as f64;
    let m = (N_FEATURES - 1) as u64;
    (0..=m)
        .map(|s| fact(m) / (fact(s) * fact(m - s)) * fact(s) * fact(m - s) / fact(m + 1))
        .sum()
}

/// Batch-mean squared error of an eval-mode forward pass.
pub fn batch_loss(net: &Network, x: &Matrix, targets: &[f64]) -> f64 {
    let out = net.predict(x).unwrap();
    out.iter().zip(targets).map(|(o, t)| (o - t).powi(2)).sum::<f64>() / targets.len() as f64
}

pub struct GradCheck {
    pub params: usize,
    pub max_rel: f64,
    pub worst_index: usize,
    /// Parameters whose analytic gradient is nonzero.
    pub nonzero: usize,
    /// Smallest |pre-activation| of any hidden ReLU unit; should exceed the
    /// step so no finite difference straddles a kink.
    pub min_abs_pre: f64,
}

/// Central-difference check of every parameter of the default ReLU network.
/// Relative error is `|a − n| / max(|a|, |n|, floor)`.
pub fn gradient_check(param_seed: u64, input_seed: u64, batch: usize, h: f64, floor: f64) -> GradCheck {
    let spec = NetworkSpec::new(DEFAULT_WIDTHS.to_vec(), Activation::Relu)
        .without_dropout()
        .with_seed(param_seed);
    let mut net = Network::new(spec).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(input_seed);
    let rows: Vec<Vec<f64>> = (0..batch)
        .map(|_| (0..N_FEATURES).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let x = Matrix::from_rows(&rows).unwrap();
    let t: Vec<f64> = (0..batch).map(|_| rng.random_range(0.0..1.0)).collect();

    let trace = net.forward(&x, Mode::Eval).unwrap();
    let min_abs_pre = trace.layers[..trace.layers.len() - 1]
        .iter()
        .flat_map(|l| l.pre.as_slice().iter().map(|v| v.abs()))
        .fold(f64::INFINITY, f64::min);
    let fd = finite_difference_check(&mut net, &x, &t, h, floor);
    GradCheck {
        params: fd.params,
        max_rel: fd.max_rel,
        worst_index: fd.worst_index,
        nonzero: fd.nonzero,
        min_abs_pre,
    }
}

pub struct FdResult {
    pub params: usize,
    pub max_rel: f64,
    pub worst_index: usize,
    pub nonzero: usize,
}

/// Compares backprop against central differences of [`batch_loss`] for
/// every parameter of `net` (restored afterwards).
pub fn finite_difference_check(net: &mut Network, x: &Matrix, t: &[f64], h: f64, floor: f64) -> FdResult {
    let trace = net.forward(x, Mode::Eval).unwrap();
    let grads = net.backward(&trace, t).unwrap();
    let analytic: Vec<f64> = grads.tensors().flatten().copied().collect();
    let nonzero = analytic.iter().filter(|g| **g != 0.0).count();

    let lens: Vec<usize> = net.params.tensors().map(|t| t.len()).collect();
    let mut max_rel = 0.0;
    let mut worst_index = 0;
    let mut flat = 0;
    for (ti, len) in lens.into_iter().enumerate() {
        for j in 0..len {
            let orig = net.params.tensors().nth(ti).unwrap()[j];
            net.params.tensors_mut().nth(ti).unwrap()[j] = orig + h;
            let up = batch_loss(net, x, t);
            net.params.tensors_mut().nth(ti).unwrap()[j] = orig - h;
            let down = batch_loss(net, x, t);
            net.params.tensors_mut().nth(ti).unwrap()[j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[flat];
            let rel = if a == numeric {
                0.0
            } else {
                (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor)
            };
            if rel > max_rel {
                max_rel = rel;
                worst_index = flat;
            }
            flat += 1;
        }
    }
    FdResult {
        params: flat,
        max_rel,
        worst_index,
        nonzero,
    }
}

/// `n` draws from a standard bivariate normal with correlation `rho`.
pub fn gaussian_pairs(n: usize, rho: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = (1.0 - rho * rho).sqrt();
    (0..n)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            (a, rho * a + c * b)
        })
        .unzip()
}

pub fn uniform_pairs(n: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).unzip()
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
