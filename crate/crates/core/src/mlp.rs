//! The 8-3-1 multilayer perceptron: tanh hidden layer, linear output.
//!
//! Training is full-batch gradient descent with momentum on the mean squared
//! error, with early stopping on a chronological validation tail. It runs on
//! one thread so a fixed seed gives a bit-identical model.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stationarize::NormStats;
use crate::timeseries::Step;

pub const INPUTS: usize = 8;
pub const HIDDEN: usize = 3;
pub const PARAM_COUNT: usize = HIDDEN * INPUTS + HIDDEN + HIDDEN + 1;
pub const MODEL_SCHEMA_VERSION: u32 = 1;
pub const MIN_TRAINING_PAIRS: usize = 50;

pub type Input = [f64; INPUTS];

/// Weights and biases of the 8-3-1 network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub w_hidden: [[f64; INPUTS]; HIDDEN],
    pub b_hidden: [f64; HIDDEN],
    pub w_out: [f64; HIDDEN],
    pub b_out: f64,
}

/// Parameter gradients; same layout as [`Network`].
pub type Gradients = Network;

impl Network {
    pub fn zeros() -> Self {
        Network {
            w_hidden: [[0.0; INPUTS]; HIDDEN],
            b_hidden: [0.0; HIDDEN],
            w_out: [0.0; HIDDEN],
            b_out: 0.0,
        }
    }

    /// Seeded initialization, uniform in ±1/√fan_in for each layer.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hb = 1.0 / (INPUTS as f64).sqrt();
        let ob = 1.0 / (HIDDEN as f64).sqrt();
        let mut net = Network::zeros();
        for row in net.w_hidden.iter_mut() {
            for w in row.iter_mut() {
                *w = rng.random_range(-hb..=hb);
            }
        }
        for b in net.b_hidden.iter_mut() {
            *b = rng.random_range(-hb..=hb);
        }
        for w in net.w_out.iter_mut() {
            *w = rng.random_range(-ob..=ob);
        }
        net.b_out = rng.random_range(-ob..=ob);
        net
    }

    fn hidden(&self, x: &Input) -> [f64; HIDDEN] {
        let mut h = [0.0; HIDDEN];
        for (j, hj) in h.iter_mut().enumerate() {
            let z: f64 = self.w_hidden[j]
                .iter()
                .zip(x)
                .map(|(w, xi)| w * xi)
                .sum::<f64>()
                + self.b_hidden[j];
            *hj = z.tanh();
        }
        h
    }

    fn output(&self, h: &[f64; HIDDEN]) -> f64 {
        self.w_out.iter().zip(h).map(|(w, hj)| w * hj).sum::<f64>() + self.b_out
    }

    pub fn forward(&self, x: &Input) -> f64 {
        self.output(&self.hidden(x))
    }

    /// Forward pass that rejects non-finite inputs.
    pub fn try_forward(&self, x: &Input) -> Result<f64> {
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("network input {v}")));
        }
        Ok(self.forward(x))
    }

    /// Exact gradients of ½(ŷ − y)² for one sample.
    pub fn backward(&self, x: &Input, target: f64) -> Gradients {
        let mut g = Network::zeros();
        self.accumulate_gradient(x, target, 1.0, &mut g);
        g
    }

    /// Adds `scale`·∇½(ŷ − y)² into `g` and returns the squared error.
    fn accumulate_gradient(&self, x: &Input, target: f64, scale: f64, g: &mut Gradients) -> f64 {
        let h = self.hidden(x);
        let err = self.output(&h) - target;
        let e = scale * err;
        g.b_out += e;
        for j in 0..HIDDEN {
            g.w_out[j] += e * h[j];
            let dz = e * self.w_out[j] * (1.0 - h[j] * h[j]);
            g.b_hidden[j] += dz;
            for (gw, xi) in g.w_hidden[j].iter_mut().zip(x) {
                *gw += dz * xi;
            }
        }
        err * err
    }

    /// Flat parameter vector: hidden weights row-major, hidden biases, output
    /// weights, output bias.
    pub fn to_params(&self) -> [f64; PARAM_COUNT] {
        let mut p = [0.0; PARAM_COUNT];
        let mut k = 0;
        for row in &self.w_hidden {
            for w in row {
                p[k] = *w;
                k += 1;
            }
        }
        for v in self.b_hidden.iter().chain(&self.w_out) {
            p[k] = *v;
            k += 1;
        }
        p[k] = self.b_out;
        p
    }

    pub fn from_params(p: &[f64; PARAM_COUNT]) -> Self {
        let mut net = Network::zeros();
        let mut it = p.iter().copied();
        for row in net.w_hidden.iter_mut() {
            for w in row.iter_mut() {
                *w = it.next().unwrap();
            }
        }
        for b in net.b_hidden.iter_mut() {
            *b = it.next().unwrap();
        }
        for w in net.w_out.iter_mut() {
            *w = it.next().unwrap();
        }
        net.b_out = it.next().unwrap();
        net
    }

    pub fn is_finite(&self) -> bool {
        self.to_params().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HiddenActivation {
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Share of the pairs (taken from the end) held out for early stopping.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            momentum: 0.9,
            max_epochs: 5000,
            patience: 50,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| {
            Err(Error::InvalidConfig {
                field: field.into(),
                reason: reason.into(),
            })
        };
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate", "must be a positive number");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", "must be in [0, 1)");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs", "must be positive");
        }
        if self.patience == 0 {
            return bad("patience", "must be positive");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction", "must be in (0, 1)");
        }
        Ok(())
    }
}

/// Per-epoch losses (mean squared error on normalized values).
///
/// `train_loss[e]` is measured before the update of epoch `e + 1`,
/// `val_loss[e]` after it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub stopped_epoch: usize,
}

impl TrainReport {
    pub fn best_val_loss(&self) -> f64 {
        self.val_loss[self.best_epoch - 1]
    }
}

/// A trained network plus everything needed to apply it at any site.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub network: Network,
    pub hidden_activation: HiddenActivation,
    pub output_activation: OutputActivation,
    /// Min-max statistics of the training site, reused unchanged elsewhere.
    pub norm: NormStats,
    pub training_site: String,
    pub step: Step,
    pub train_config: Option<TrainConfig>,
}

impl MlpModel {
    pub fn new(network: Network, norm: NormStats, training_site: impl Into<String>, step: Step) -> Self {
        MlpModel {
            network,
            hidden_activation: HiddenActivation::Tanh,
            output_activation: OutputActivation::Linear,
            norm,
            training_site: training_site.into(),
            step,
            train_config: None,
        }
    }

    pub fn forward(&self, x: &Input) -> Result<f64> {
        self.network.try_forward(x)
    }
}

fn mse(net: &Network, pairs: &[(Input, f64)]) -> f64 {
    let sum: f64 = pairs
        .iter()
        .map(|(x, y)| {
            let e = net.forward(x) - y;
            e * e
        })
        .sum();
    sum / pairs.len() as f64
}

pub fn train(
    pairs: &[(Input, f64)],
    cfg: &TrainConfig,
    norm: NormStats,
    training_site: &str,
    step: Step,
) -> Result<(MlpModel, TrainReport)> {
    cfg.validate()?;
    if pairs.len() < MIN_TRAINING_PAIRS {
        return Err(Error::TooFewSamples {
            got: pairs.len(),
            need: MIN_TRAINING_PAIRS,
        });
    }
    if pairs
        .iter()
        .any(|(x, y)| !y.is_finite() || x.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::NonFinite("training pair".into()));
    }

    let n_val = ((pairs.len() as f64 * cfg.validation_fraction).floor() as usize).max(1);
    let (fit, val) = pairs.split_at(pairs.len() - n_val);
    let inv_n = 1.0 / fit.len() as f64;

    let mut params = Network::init(cfg.seed).to_params();
    let mut velocity = [0.0; PARAM_COUNT];
    let mut best = Network::from_params(&params);
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut report = TrainReport {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        best_epoch: 0,
        stopped_epoch: 0,
    };

    for epoch in 1..=cfg.max_epochs {
        let net = Network::from_params(&params);
        let mut grad = Network::zeros();
        let mut sq = 0.0;
        for (x, y) in fit {
            sq += net.accumulate_gradient(x, *y, inv_n, &mut grad);
        }
        let train_loss = sq * inv_n;
        let g = grad.to_params();
        for k in 0..PARAM_COUNT {
            velocity[k] = cfg.momentum * velocity[k] - cfg.learning_rate * g[k];
            params[k] += velocity[k];
        }
        let updated = Network::from_params(&params);
        let val_loss = mse(&updated, val);
        if !train_loss.is_finite() || !val_loss.is_finite() || !updated.is_finite() {
            return Err(Error::TrainingFailed { epoch });
        }
        report.train_loss.push(train_loss);
        report.val_loss.push(val_loss);
        report.stopped_epoch = epoch;
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best = updated;
        } else if epoch - best_epoch >= cfg.patience {
            break;
        }
    }
    report.best_epoch = best_epoch;
    log::debug!(
        "trained {} pairs: best epoch {} (val mse {:.3e}), stopped at {}",
        pairs.len(),
        best_epoch,
        best_val,
        report.stopped_epoch
    );

    let mut model = MlpModel::new(best, norm, training_site, step);
    model.train_config = Some(*cfg);
    Ok((model, report))
}

#[derive(Serialize, Deserialize)]
struct ArchitectureFile {
    inputs: usize,
    hidden: usize,
    outputs: usize,
    hidden_activation: HiddenActivation,
    output_activation: OutputActivation,
}

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    /// hidden × inputs
    hidden: Vec<Vec<f64>>,
    hidden_bias: Vec<f64>,
    /// outputs × hidden
    output: Vec<Vec<f64>>,
    output_bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    architecture: ArchitectureFile,
    weights: WeightsFile,
    norm: NormStats,
    training_site: String,
    step: Step,
    train_config: Option<TrainConfig>,
}

impl From<&MlpModel> for ModelFile {
    fn from(m: &MlpModel) -> Self {
        let net = &m.network;
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            architecture: ArchitectureFile {
                inputs: INPUTS,
                hidden: HIDDEN,
                outputs: 1,
                hidden_activation: m.hidden_activation,
                output_activation: m.output_activation,
            },
            weights: WeightsFile {
                hidden: net.w_hidden.iter().map(|r| r.to_vec()).collect(),
                hidden_bias: net.b_hidden.to_vec(),
                output: vec![net.w_out.to_vec()],
                output_bias: vec![net.b_out],
            },
            norm: m.norm,
            training_site: m.training_site.clone(),
            step: m.step,
            train_config: m.train_config,
        }
    }
}

impl TryFrom<ModelFile> for MlpModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        if f.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::MalformedModel(format!(
                "unsupported schema version {}",
                f.schema_version
            )));
        }
        let a = &f.architecture;
        if (a.inputs, a.hidden, a.outputs) != (INPUTS, HIDDEN, 1) {
            return Err(Error::ShapeMismatch(format!(
                "file declares {}-{}-{}",
                a.inputs, a.hidden, a.outputs
            )));
        }
        let w = &f.weights;
        let shape_ok = w.hidden.len() == HIDDEN
            && w.hidden.iter().all(|r| r.len() == INPUTS)
            && w.hidden_bias.len() == HIDDEN
            && w.output.len() == 1
            && w.output[0].len() == HIDDEN
            && w.output_bias.len() == 1;
        if !shape_ok {
            return Err(Error::ShapeMismatch(
                "weight arrays do not match the declared architecture".into(),
            ));
        }
        let mut net = Network::zeros();
        for (dst, src) in net.w_hidden.iter_mut().zip(&w.hidden) {
            dst.copy_from_slice(src);
        }
        net.b_hidden.copy_from_slice(&w.hidden_bias);
        net.w_out.copy_from_slice(&w.output[0]);
        net.b_out = w.output_bias[0];
        if !net.is_finite() {
            return Err(Error::MalformedModel("non-finite weight".into()));
        }
        let norm = NormStats::new(f.norm.min, f.norm.max)
            .map_err(|e| Error::MalformedModel(e.to_string()))?;
        if let Some(cfg) = &f.train_config {
            cfg.validate()
                .map_err(|e| Error::MalformedModel(e.to_string()))?;
        }
        Ok(MlpModel {
            network: net,
            hidden_activation: a.hidden_activation,
            output_activation: a.output_activation,
            norm,
            training_site: f.training_site,
            step: f.step,
            train_config: f.train_config,
        })
    }
}

pub fn to_json(model: &MlpModel) -> String {
    // Floats are written in shortest round-trip form, so parsing restores
    // every bit.
    let mut s = serde_json::to_string_pretty(&ModelFile::from(model))
        .expect("model serialization cannot fail");
    s.push('\n');
    s
}

pub fn from_json(text: &str) -> Result<MlpModel> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::MalformedModel(e.to_string()))?;
    MlpModel::try_from(file)
}

pub fn save(model: &MlpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_json(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<MlpModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}
