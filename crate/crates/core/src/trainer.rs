//! Single-neuron training and the precision sweep.
//!
//! Training is logistic regression by plain mini-batch gradient descent on
//! the sigmoid cross-entropy loss. The learned unit is then read with step
//! semantics; since `σ(z) ≥ 1/2` exactly when `z ≥ 0`, the stepped unit makes
//! the same predictions as the sigmoid one thresholded at one half.

use std::ops::RangeInclusive;

use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::Instance;
use crate::neuron::{
    compile_pseudo, identity_binding, quantize, ExactUnit, LinearThresholdUnit, NeuronError, RoundMode,
};
use crate::obdd::{Manager, ObddError};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("dataset is empty")]
    Empty,
    #[error("row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("dataset has {got} features, expected {expected}")]
    Width { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Neuron(#[from] NeuronError),
}

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: 0.5, epochs: 100, batch_size: 32, seed: 0, l2: 0.0 }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config("learning rate must be positive".into()));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::Config("epochs and batch size must be positive".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(TrainError::Config("l2 penalty must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDataset {
    features: usize,
    rows: Vec<(Instance, bool)>,
}

impl LabeledDataset {
    pub fn new(rows: Vec<(Instance, bool)>) -> Result<Self> {
        let features = rows.first().ok_or(TrainError::Empty)?.0.len();
        if let Some(bad) = rows.iter().position(|(x, _)| x.len() != features) {
            return Err(TrainError::Row {
                row: bad + 1,
                msg: format!("{} features, expected {}", rows[bad].0.len(), features),
            });
        }
        Ok(LabeledDataset { features, rows })
    }

    /// Reads `bit,…,bit,label` rows. A first line that is not all 0/1 is
    /// taken as a header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec?;
            let bits: std::result::Result<Vec<bool>, String> = rec
                .iter()
                .map(|t| match t {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(format!("`{}` is not 0 or 1", other)),
                })
                .collect();
            match bits {
                Ok(mut bits) => {
                    if bits.len() < 2 {
                        return Err(TrainError::Row {
                            row: i + 1,
                            msg: "need at least one feature and a label".into(),
                        });
                    }
                    let label = bits.pop().unwrap();
                    rows.push((Instance::new(bits), label));
                }
                Err(_) if i == 0 => continue,
                Err(msg) => return Err(TrainError::Row { row: i + 1, msg }),
            }
        }
        LabeledDataset::new(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (x, y) in &self.rows {
            for &b in x.bits() {
                out.push(if b { '1' } else { '0' });
                out.push(',');
            }
            out.push(if *y { '1' } else { '0' });
            out.push('\n');
        }
        out
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[(Instance, bool)] {
        &self.rows
    }

    pub fn instances(&self) -> impl Iterator<Item = &Instance> {
        self.rows.iter().map(|(x, _)| x)
    }

    /// First `n` rows and the rest.
    pub fn split_at(&self, n: usize) -> (LabeledDataset, LabeledDataset) {
        let (a, b) = self.rows.split_at(n.min(self.rows.len()));
        (
            LabeledDataset { features: self.features, rows: a.to_vec() },
            LabeledDataset { features: self.features, rows: b.to_vec() },
        )
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn train_neuron(data: &LabeledDataset, cfg: &TrainConfig) -> Result<LinearThresholdUnit> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(TrainError::Empty);
    }
    let n = data.features;
    // the last coordinate is the bias, fed by an always-on input
    let mut w = vec![0.0f64; n + 1];
    let mut grad = vec![0.0f64; n + 1];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let (x, y) = &data.rows[i];
                let z = w[n] + x.bits().iter().zip(&w).filter(|(&b, _)| b).map(|(_, wi)| wi).sum::<f64>();
                let err = sigmoid(z) - f64::from(u8::from(*y));
                for (g, _) in grad.iter_mut().zip(x.bits()).filter(|(_, &b)| b) {
                    *g += err;
                }
                grad[n] += err;
            }
            let scale = cfg.learning_rate / batch.len() as f64;
            for j in 0..=n {
                let decay = if j < n { cfg.l2 * w[j] } else { 0.0 };
                w[j] -= scale * grad[j] + cfg.learning_rate * decay;
            }
        }
    }
    let bias = w.pop().unwrap();
    Ok(LinearThresholdUnit::new(w, bias))
}

/// Fraction of rows on which `predict` returns the label.
pub fn accuracy_by(data: &LabeledDataset, mut predict: impl FnMut(&Instance) -> bool) -> Ratio<u64> {
    let correct = data.rows.iter().filter(|(x, y)| predict(x) == *y).count();
    Ratio::new(correct as u64, data.len().max(1) as u64)
}

/// Accuracy of a unit under exact step semantics.
pub fn accuracy(u: &ExactUnit, data: &LabeledDataset) -> Result<Ratio<u64>> {
    if u.weights.len() != data.features {
        return Err(TrainError::Width { expected: u.weights.len(), got: data.features });
    }
    Ok(accuracy_by(data, |x| u.fires(x.bits())))
}

/// Random instances labelled by a random integer teacher, keeping only
/// instances at least `margin` away from the teacher's decision boundary.
pub fn separable_dataset(features: usize, rows: usize, margin: i64, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let teacher: Vec<i64> = (0..features).map(|_| rng.gen_range(-9..=9)).collect();
    // the expected weighted sum of a uniform instance, so labels are balanced
    let threshold = teacher.iter().sum::<i64>() / 2;
    let mut out = Vec::with_capacity(rows);
    while out.len() < rows {
        let bits: Vec<bool> = (0..features).map(|_| rng.gen_bool(0.5)).collect();
        let s: i64 = teacher.iter().zip(&bits).filter(|(_, &b)| b).map(|(w, _)| w).sum();
        let gap = s - threshold;
        if gap >= margin || gap < -margin {
            out.push((Instance::new(bits), gap >= 0));
        }
    }
    LabeledDataset { features, rows: out }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepStatus {
    Ok,
    /// Compilation hit the node budget.
    Budget,
    /// Scaled weights do not fit the integer range.
    Overflow,
}

impl SweepStatus {
    pub fn label(self) -> &'static str {
        match self {
            SweepStatus::Ok => "ok",
            SweepStatus::Budget => "budget",
            SweepStatus::Overflow => "overflow",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub digits: u32,
    /// Accuracy of the quantized unit; absent when quantization overflowed.
    pub accuracy: Option<f64>,
    /// Node count of the compiled diagram; absent when compilation failed.
    pub nodes: Option<usize>,
    pub status: SweepStatus,
}

/// Quantizes `u` at each precision, measures the quantized unit's accuracy on
/// `data`, and compiles it under a node budget. Failures are rows, not errors.
pub fn precision_sweep(
    u: &LinearThresholdUnit,
    data: &LabeledDataset,
    digits: RangeInclusive<u32>,
    mode: RoundMode,
    budget: Option<usize>,
) -> Result<Vec<SweepRow>> {
    if u.arity() != data.features {
        return Err(TrainError::Width { expected: u.arity(), got: data.features });
    }
    let mut rows = Vec::new();
    for d in digits {
        let q = match quantize(u, d, mode) {
            Ok(q) => q,
            Err(NeuronError::QuantizeOverflow) => {
                rows.push(SweepRow { digits: d, accuracy: None, nodes: None, status: SweepStatus::Overflow });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let acc = accuracy_by(data, |x| q.fires(x.bits()));
        let mut mgr = Manager::new(u.arity());
        mgr.set_node_budget(budget);
        let (nodes, status) = match compile_pseudo(&mut mgr, &q, &identity_binding(u.arity())) {
            Ok(f) => (Some(mgr.node_count(f).expect("own handle")), SweepStatus::Ok),
            Err(NeuronError::Obdd(ObddError::NodeBudgetExceeded { .. })) => (None, SweepStatus::Budget),
            Err(e) => return Err(e.into()),
        };
        rows.push(SweepRow { digits: d, accuracy: Some(ratio_f64(acc)), nodes, status });
    }
    Ok(rows)
}

fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `digits,accuracy,nodes,status`; missing values are empty fields.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("digits,accuracy,nodes,status\n");
    for r in rows {
        let acc = r.accuracy.map(|a| format!("{:.6}", a)).unwrap_or_default();
        let nodes = r.nodes.map(|n| n.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", r.digits, acc, nodes, r.status.label()));
    }
    out
}
