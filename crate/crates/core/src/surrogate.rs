//! Feed-forward regressor approximating the modified antenna-domain training
//! length `L_t = f(rho, alpha)` for one array size.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel_models::build_exponential_covariance;
use crate::error::{invalid, Error, Result};
use crate::simulator::{monte_carlo, SchemeKind};

/// Input, four hidden layers, scalar output.
pub const LAYER_WIDTHS: [usize; 6] = [2, 4, 8, 16, 32, 1];
pub const SPLIT_RATIOS: [f64; 3] = [0.7, 0.15, 0.15];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub rho: f64,
    pub alpha_th: f64,
    pub lt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateDataset {
    antennas: usize,
    samples: Vec<Sample>,
    train: Vec<usize>,
    validation: Vec<usize>,
    test: Vec<usize>,
}

impl SurrogateDataset {
    /// Splits `samples` 0.7/0.15/0.15 after a seeded shuffle.
    pub fn new(antennas: usize, samples: Vec<Sample>, seed: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(invalid("dataset is empty"));
        }
        if antennas == 0 {
            return Err(invalid("array needs at least one antenna"));
        }
        let n = samples.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = ((SPLIT_RATIOS[0] * n as f64).round() as usize).clamp(1, n);
        let n_val = ((SPLIT_RATIOS[1] * n as f64).round() as usize).min(n - n_train);
        let test = order.split_off(n_train + n_val);
        let validation = order.split_off(n_train);
        Ok(Self { antennas, samples, train: order, validation, test })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn indices(&self, split: Split) -> &[usize] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    pub fn split(&self, split: Split) -> Vec<Sample> {
        self.indices(split).iter().map(|&i| self.samples[i]).collect()
    }
}

/// Monte Carlo targets for the modified antenna-domain scheme on the grid,
/// all points sharing `seed` (common random numbers).
pub fn generate_dataset(
    antennas: usize,
    rho_grid: &[f64],
    alpha_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<SurrogateDataset> {
    if rho_grid.is_empty() || alpha_grid.is_empty() {
        return Err(invalid("grids must be non-empty"));
    }
    let mut samples = Vec::with_capacity(rho_grid.len() * alpha_grid.len());
    for &rho in rho_grid {
        let cov = build_exponential_covariance(antennas, Complex64::new(rho, 0.0))?;
        for &alpha_th in alpha_grid {
            let est = monte_carlo(&SchemeKind::ModifiedAntenna, &cov, alpha_th, trials, seed)?;
            samples.push(Sample { rho, alpha_th, lt: est.mean_length });
        }
    }
    SurrogateDataset::new(antennas, samples, seed)
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    inputs: usize,
    outputs: usize,
    /// `outputs x inputs`, row-major.
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorModel {
    antennas: usize,
    layers: Vec<Layer>,
    input_mean: [f64; 2],
    input_std: [f64; 2],
}

impl RegressorModel {
    fn initialize(antennas: usize, input_mean: [f64; 2], input_std: [f64; 2], target_mean: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = LAYER_WIDTHS
            .windows(2)
            .map(|w| {
                let scale = (2.0 / w[0] as f64).sqrt();
                let weights = (0..w[0] * w[1])
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        scale * z
                    })
                    .collect();
                Layer { inputs: w[0], outputs: w[1], weights, biases: vec![0.0; w[1]] }
            })
            .collect::<Vec<_>>();
        let mut model = Self { antennas, layers, input_mean, input_std };
        // Zero output weights: the untrained network predicts the target mean.
        if let Some(last) = model.layers.last_mut() {
            last.weights.iter_mut().for_each(|w| *w = 0.0);
            last.biases[0] = target_mean;
        }
        model
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    fn standardize(&self, rho: f64, alpha_th: f64) -> [f64; 2] {
        [(rho - self.input_mean[0]) / self.input_std[0], (alpha_th - self.input_mean[1]) / self.input_std[1]]
    }

    /// Whether the inputs lie within three training standard deviations.
    pub fn in_domain(&self, rho: f64, alpha_th: f64) -> bool {
        self.standardize(rho, alpha_th).iter().all(|z| z.abs() <= 3.0)
    }

    /// Network output before clamping, with every layer's activations.
    fn forward(&self, x: [f64; 2]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for (l, layer) in self.layers.iter().enumerate() {
            let input = &acts[l];
            let hidden = l + 1 < self.layers.len();
            let out = (0..layer.outputs)
                .map(|o| {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    let z = layer.biases[o] + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>();
                    if hidden { z.max(0.0) } else { z }
                })
                .collect();
            acts.push(out);
        }
        acts
    }

    fn raw(&self, rho: f64, alpha_th: f64) -> f64 {
        self.forward(self.standardize(rho, alpha_th)).last().map(|v| v[0]).unwrap_or(f64::NAN)
    }

    pub fn predict(&self, rho: f64, alpha_th: f64) -> f64 {
        self.raw(rho, alpha_th).clamp(1.0, self.antennas as f64)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let widths: Vec<String> = LAYER_WIDTHS.iter().map(|w| w.to_string()).collect();
        writeln!(s, "widths {}", widths.join(" ")).unwrap();
        writeln!(s, "antennas {}", self.antennas).unwrap();
        let line = |s: &mut String, key: &str, v: &[f64]| {
            let vals: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
            writeln!(s, "{key} {}", vals.join(" ")).unwrap();
        };
        for layer in &self.layers {
            line(&mut s, "weights", &layer.weights);
            line(&mut s, "biases", &layer.biases);
        }
        line(&mut s, "input_mean", &self.input_mean);
        line(&mut s, "input_std", &self.input_std);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::ModelFormat(msg);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut field = |key: &str| -> Result<Vec<String>> {
            let line = lines.next().ok_or_else(|| bad(format!("missing `{key}` line")))?;
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some(k) if k == key => Ok(parts.map(str::to_owned).collect()),
                other => Err(bad(format!("expected `{key}`, found `{}`", other.unwrap_or("")))),
            }
        };
        let floats = |v: Vec<String>, n: usize, key: &str| -> Result<Vec<f64>> {
            if v.len() != n {
                return Err(bad(format!("`{key}` needs {n} values, found {}", v.len())));
            }
            v.iter()
                .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad number `{t}` in `{key}`"))))
                .collect()
        };
        let widths: Vec<usize> = field("widths")?
            .iter()
            .map(|t| t.parse().map_err(|_| bad(format!("bad width `{t}`"))))
            .collect::<Result<_>>()?;
        if widths != LAYER_WIDTHS {
            return Err(bad(format!("unsupported architecture {widths:?}")));
        }
        let antennas_field = field("antennas")?;
        let antennas: usize = antennas_field
            .first()
            .and_then(|t| t.parse().ok())
            .filter(|&m| m > 0)
            .ok_or_else(|| bad("bad antenna count".into()))?;
        let mut layers = Vec::new();
        for w in LAYER_WIDTHS.windows(2) {
            let weights = floats(field("weights")?, w[0] * w[1], "weights")?;
            let biases = floats(field("biases")?, w[1], "biases")?;
            layers.push(Layer { inputs: w[0], outputs: w[1], weights, biases });
        }
        let mean = floats(field("input_mean")?, 2, "input_mean")?;
        let std = floats(field("input_std")?, 2, "input_std")?;
        let model = Self { antennas, layers, input_mean: [mean[0], mean[1]], input_std: [std[0], std[1]] };
        if !model.parameters_finite() || model.input_std.iter().any(|&s| !(s > 0.0)) {
            return Err(bad("non-finite parameters".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    fn parameters_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.biases).all(|x| x.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: RegressorModel,
    pub train_mse: Vec<f64>,
    pub validation_mse: Vec<f64>,
    /// Epoch (1-based, 0 for the initial weights) whose weights were kept.
    pub best_epoch: usize,
    /// `predict - target` on the training split, in split order.
    pub training_residuals: Vec<(Sample, f64)>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grads[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grads[i] * grads[i];
            params[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

fn flatten(model: &RegressorModel) -> Vec<f64> {
    model.layers.iter().flat_map(|l| l.weights.iter().chain(&l.biases).copied()).collect()
}

fn unflatten(model: &mut RegressorModel, params: &[f64]) {
    let mut k = 0;
    for l in &mut model.layers {
        let nw = l.weights.len();
        l.weights.copy_from_slice(&params[k..k + nw]);
        k += nw;
        let nb = l.biases.len();
        l.biases.copy_from_slice(&params[k..k + nb]);
        k += nb;
    }
}

/// Mean-square-error gradient over `samples`, same layout as [`flatten`].
fn gradient(model: &RegressorModel, samples: &[Sample]) -> (f64, Vec<f64>) {
    let mut grads: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.weights.len() + l.biases.len()]).collect();
    let mut loss = 0.0;
    let scale = 1.0 / samples.len() as f64;
    for s in samples {
        let acts = model.forward(model.standardize(s.rho, s.alpha_th));
        let err = acts.last().unwrap()[0] - s.lt;
        loss += err * err * scale;
        let mut delta = vec![2.0 * err * scale];
        for (l, layer) in model.layers.iter().enumerate().rev() {
            let input = &acts[l];
            let g = &mut grads[l];
            let nw = layer.weights.len();
            for o in 0..layer.outputs {
                for i in 0..layer.inputs {
                    g[o * layer.inputs + i] += delta[o] * input[i];
                }
                g[nw + o] += delta[o];
            }
            if l > 0 {
                delta = (0..layer.inputs)
                    .map(|i| {
                        if input[i] > 0.0 {
                            (0..layer.outputs).map(|o| delta[o] * layer.weights[o * layer.inputs + i]).sum()
                        } else {
                            0.0
                        }
                    })
                    .collect();
            }
        }
    }
    (loss, grads.concat())
}

/// Full-batch Adam on the training split with the step size decaying
/// geometrically to a tenth of `learning_rate`; the weights with the lowest
/// validation error are returned.
pub fn fit(data: &SurrogateDataset, epochs: usize, learning_rate: f64, seed: u64) -> Result<FitReport> {
    let train = data.split(Split::Train);
    if train.is_empty() {
        return Err(invalid("training split is empty"));
    }
    if !(learning_rate > 0.0) {
        return Err(invalid("learning rate must be positive"));
    }
    let validation = data.split(Split::Validation);
    let monitor = if validation.is_empty() { &train } else { &validation };
    let n = train.len() as f64;
    let mut mean = [0.0; 2];
    for s in &train {
        mean[0] += s.rho / n;
        mean[1] += s.alpha_th / n;
    }
    let mut std = [0.0; 2];
    for s in &train {
        std[0] += (s.rho - mean[0]).powi(2) / n;
        std[1] += (s.alpha_th - mean[1]).powi(2) / n;
    }
    let std = std.map(|v| if v > 0.0 { v.sqrt() } else { 1.0 });
    let target_mean = train.iter().map(|s| s.lt).sum::<f64>() / n;
    let mut model = RegressorModel::initialize(data.antennas(), mean, std, target_mean, seed);

    let mut params = flatten(&model);
    let mut adam = Adam { m: vec![0.0; params.len()], v: vec![0.0; params.len()], t: 0 };
    let mut best = (mse(&model, monitor), 0usize, model.clone());
    let mut train_mse = Vec::with_capacity(epochs);
    let mut validation_mse = Vec::with_capacity(epochs);
    for epoch in 1..=epochs {
        let (loss, grads) = gradient(&model, &train);
        if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::TrainingFailure { epoch, detail: format!("training loss became {loss}") });
        }
        let lr = learning_rate * 0.1f64.powf((epoch - 1) as f64 / epochs as f64);
        adam.step(&mut params, &grads, lr);
        unflatten(&mut model, &params);
        let tr = mse(&model, &train);
        let va = mse(&model, monitor);
        if !tr.is_finite() || !va.is_finite() {
            return Err(Error::TrainingFailure { epoch, detail: format!("train MSE {tr}, validation MSE {va}") });
        }
        train_mse.push(tr);
        validation_mse.push(va);
        if va < best.0 {
            best = (va, epoch, model.clone());
        }
    }
    let (_, best_epoch, model) = best;
    let training_residuals = train.iter().map(|&s| (s, model.predict(s.rho, s.alpha_th) - s.lt)).collect();
    Ok(FitReport { model, train_mse, validation_mse, best_epoch, training_residuals })
}

fn mse(model: &RegressorModel, samples: &[Sample]) -> f64 {
    samples.iter().map(|s| (model.predict(s.rho, s.alpha_th) - s.lt).powi(2)).sum::<f64>() / samples.len() as f64
}

/// Mean squared error of the clamped predictions on `samples`.
pub fn evaluate(model: &RegressorModel, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(invalid("evaluation split is empty"));
    }
    Ok(mse(model, samples))
}

pub fn predict(model: &RegressorModel, rho: f64, alpha_th: f64) -> f64 {
    model.predict(rho, alpha_th)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(antennas: usize, f: impl Fn(f64, f64) -> f64) -> SurrogateDataset {
        let mut samples = Vec::new();
        for i in 0..10 {
            for j in 0..12 {
                let rho = 0.1 * i as f64;
                let alpha = 1.0 + 2.5 * j as f64;
                samples.push(Sample { rho, alpha_th: alpha, lt: f(rho, alpha) });
            }
        }
        SurrogateDataset::new(antennas, samples, 5).unwrap()
    }

    #[test]
    fn splits_are_disjoint_and_exhaustive() {
        let d = synthetic(32, |_, a| a);
        let mut all: Vec<usize> = [Split::Train, Split::Validation, Split::Test]
            .iter()
            .flat_map(|&s| d.indices(s).to_vec())
            .collect();
        assert_eq!(d.indices(Split::Train).len(), 84);
        assert_eq!(d.indices(Split::Validation).len(), 18);
        all.sort();
        assert_eq!(all, (0..120).collect::<Vec<_>>());
    }

    #[test]
    fn constant_target_is_learned() {
        let d = synthetic(32, |_, _| 5.0);
        let report = fit(&d, 300, 0.01, 1).unwrap();
        for s in d.samples() {
            assert!((report.model.predict(s.rho, s.alpha_th) - 5.0).abs() < 1e-2);
        }
    }

    #[test]
    fn training_reduces_error_and_is_reproducible() {
        let d = synthetic(32, |r, a| 1.0 + a * (1.0 - 0.5 * r) * 0.8);
        let base = fit(&d, 0, 0.01, 3).unwrap();
        let trained = fit(&d, 1500, 0.01, 3).unwrap();
        let test = d.split(Split::Test);
        assert!(evaluate(&trained.model, &test).unwrap() < evaluate(&base.model, &test).unwrap());
        let again = fit(&d, 1500, 0.01, 3).unwrap();
        assert_eq!(trained.model, again.model);
        assert!(trained.validation_mse.len() == 1500 && trained.best_epoch >= 1);
        for (s, res) in &trained.training_residuals {
            assert!((trained.model.predict(s.rho, s.alpha_th) - s.lt - res).abs() < 1e-15);
        }
    }

    #[test]
    fn evaluate_is_mean_square_residual() {
        let d = synthetic(32, |_, _| 1.0);
        let report = fit(&d, 50, 0.01, 2).unwrap();
        let test = d.split(Split::Test);
        let direct: f64 =
            test.iter().map(|s| (report.model.predict(s.rho, s.alpha_th) - s.lt).powi(2)).sum::<f64>() / test.len() as f64;
        assert!((evaluate(&report.model, &test).unwrap() - direct).abs() < 1e-12);
        assert!(evaluate(&report.model, &[]).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        let d = synthetic(16, |r, a| 1.0 + a * r);
        let model = fit(&d, 20, 0.01, 4).unwrap().model;
        let text = model.to_text();
        assert!(text.starts_with("widths 2 4 8 16 32 1\nantennas 16\n"));
        let back = RegressorModel::from_text(&text).unwrap();
        assert_eq!(back, model);
        assert!(RegressorModel::from_text("widths 2 3 1\n").is_err());
        assert!(RegressorModel::from_text("").is_err());
    }

    #[test]
    fn predictions_are_clamped() {
        let d = synthetic(4, |_, a| a);
        let model = fit(&d, 10, 0.01, 4).unwrap().model;
        let p = model.predict(0.5, 1e6);
        assert!((1.0..=4.0).contains(&p));
    }
}
