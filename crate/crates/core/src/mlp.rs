//! One-hidden-layer perceptron: sigmoid hidden units, one linear output per
//! class, fitted to one-hot targets by squared error.
//!
//! `output_k(x) = sum_i w2[k,i] * g(<x, w1[i]> + b1[i])`, `g(a) = 1 / (1 + e^-a)`.
//!
//! Training is full-batch gradient descent on the mean squared error of a
//! training split, with early stopping on a held-out split and several
//! independent restarts.

use rayon::prelude::*;
use thiserror::Error;

use crate::argmax;
use crate::features::Sample;
use crate::grid::ClassId;
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("input width {found} does not match network width {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("{0} samples given, at least 10 are needed")]
    TooFewSamples(usize),
    #[error("sample target {0} outside 1..=K")]
    Target(ClassId),
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("all {0} restarts diverged (non-finite loss)")]
    AllRestartsFailed(usize),
}

#[inline]
pub fn sigmoid(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

/// Network weights; `w1` is `hidden x inputs`, `w2` is `outputs x hidden`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl MlpWeights {
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        Self {
            inputs,
            hidden,
            outputs,
            w1: vec![0.0; hidden * inputs],
            b1: vec![0.0; hidden],
            w2: vec![0.0; outputs * hidden],
        }
    }

    /// Uniform draws in `[-0.5, 0.5]` scaled by `1/sqrt(fan-in)` of each layer.
    pub fn random(inputs: usize, hidden: usize, outputs: usize, rng: &mut SplitMix64) -> Self {
        let mut w = Self::zeros(inputs, hidden, outputs);
        let s1 = 1.0 / (inputs.max(1) as f64).sqrt();
        let s2 = 1.0 / (hidden as f64).sqrt();
        w.w1.iter_mut().for_each(|v| *v = rng.uniform(-0.5, 0.5) * s1);
        w.b1.iter_mut().for_each(|v| *v = rng.uniform(-0.5, 0.5) * s1);
        w.w2.iter_mut().for_each(|v| *v = rng.uniform(-0.5, 0.5) * s2);
        w
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len()
    }

    /// All parameters in order `w1, b1, w2`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).copied().collect()
    }

    pub fn from_flat(inputs: usize, hidden: usize, outputs: usize, flat: &[f64]) -> Self {
        let (a, rest) = flat.split_at(hidden * inputs);
        let (b, c) = rest.split_at(hidden);
        Self { inputs, hidden, outputs, w1: a.to_vec(), b1: b.to_vec(), w2: c.to_vec() }
    }

    fn blocks_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1.iter_mut().chain(self.b1.iter_mut()).chain(self.w2.iter_mut())
    }

    fn blocks(&self) -> impl Iterator<Item = &f64> {
        self.w1.iter().chain(self.b1.iter()).chain(self.w2.iter())
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().all(|v| v.is_finite())
    }

    fn hidden_into(&self, x: &[f64], h: &mut [f64]) {
        for (i, hi) in h.iter_mut().enumerate() {
            let row = &self.w1[i * self.inputs..(i + 1) * self.inputs];
            let a: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[i];
            *hi = sigmoid(a);
        }
    }

    fn output_into(&self, h: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.w2[k * self.hidden..(k + 1) * self.hidden].iter().zip(h).map(|(w, v)| w * v).sum();
        }
    }
}

/// Network outputs for one input (unconstrained reals).
pub fn forward(w: &MlpWeights, x: &[f64]) -> Result<Vec<f64>, MlpError> {
    if x.len() != w.inputs {
        return Err(MlpError::Dimension { expected: w.inputs, found: x.len() });
    }
    let mut h = vec![0.0; w.hidden];
    let mut out = vec![0.0; w.outputs];
    w.hidden_into(x, &mut h);
    w.output_into(&h, &mut out);
    Ok(out)
}

/// Maximum rule on the outputs, ties to the smallest class.
pub fn predict(w: &MlpWeights, x: &[f64]) -> Result<ClassId, MlpError> {
    Ok(ClassId::from_index(argmax(&forward(w, x)?)))
}

fn check(w: &MlpWeights, samples: &[Sample]) -> Result<(), MlpError> {
    for s in samples {
        if s.x.len() != w.inputs {
            return Err(MlpError::Dimension { expected: w.inputs, found: s.x.len() });
        }
        if s.target.index() >= w.outputs {
            return Err(MlpError::Target(s.target));
        }
    }
    Ok(())
}

/// Squared error against one-hot targets, summed over samples and outputs.
pub fn loss(w: &MlpWeights, samples: &[Sample]) -> Result<f64, MlpError> {
    check(w, samples)?;
    let batch = Batch::from_samples(samples);
    Ok(batch.loss(w, &(0..batch.len()).collect::<Vec<_>>()))
}

/// Exact gradient of [`loss`].
pub fn grad(w: &MlpWeights, samples: &[Sample]) -> Result<MlpWeights, MlpError> {
    check(w, samples)?;
    let batch = Batch::from_samples(samples);
    let mut g = MlpWeights::zeros(w.inputs, w.hidden, w.outputs);
    batch.accumulate_grad(w, &(0..batch.len()).collect::<Vec<_>>(), &mut g);
    Ok(g)
}

/// Samples packed row-major.
struct Batch {
    q: usize,
    x: Vec<f64>,
    targets: Vec<usize>,
}

impl Batch {
    fn from_samples(samples: &[Sample]) -> Self {
        let q = samples.first().map_or(0, |s| s.x.len());
        let mut x = Vec::with_capacity(samples.len() * q);
        for s in samples {
            x.extend_from_slice(&s.x.values);
        }
        Self { q, x, targets: samples.iter().map(|s| s.target.index()).collect() }
    }

    fn len(&self) -> usize {
        self.targets.len()
    }

    fn row(&self, n: usize) -> &[f64] {
        &self.x[n * self.q..(n + 1) * self.q]
    }

    fn loss(&self, w: &MlpWeights, idx: &[usize]) -> f64 {
        let mut h = vec![0.0; w.hidden];
        let mut out = vec![0.0; w.outputs];
        let mut total = 0.0;
        for &n in idx {
            w.hidden_into(self.row(n), &mut h);
            w.output_into(&h, &mut out);
            for (k, o) in out.iter().enumerate() {
                let t = f64::from(u8::from(k == self.targets[n]));
                total += (t - o) * (t - o);
            }
        }
        total
    }

    /// Add the gradient of the summed loss over `idx` into `g`.
    fn accumulate_grad(&self, w: &MlpWeights, idx: &[usize], g: &mut MlpWeights) {
        let mut h = vec![0.0; w.hidden];
        let mut out = vec![0.0; w.outputs];
        let mut dh = vec![0.0; w.hidden];
        for &n in idx {
            let x = self.row(n);
            w.hidden_into(x, &mut h);
            w.output_into(&h, &mut out);
            dh.iter_mut().for_each(|v| *v = 0.0);
            for k in 0..w.outputs {
                let t = f64::from(u8::from(k == self.targets[n]));
                let e2 = 2.0 * (out[k] - t);
                let row = k * w.hidden;
                for i in 0..w.hidden {
                    g.w2[row + i] += e2 * h[i];
                    dh[i] += e2 * w.w2[row + i];
                }
            }
            for i in 0..w.hidden {
                let da = dh[i] * h[i] * (1.0 - h[i]);
                g.b1[i] += da;
                let row = i * w.inputs;
                for (gj, xj) in g.w1[row..row + w.inputs].iter_mut().zip(x) {
                    *gj += da * xj;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Hidden units `q2`.
    pub hidden: usize,
    pub restarts: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub learning_rate: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: 8,
            restarts: 5,
            max_epochs: 2000,
            patience: 20,
            learning_rate: 0.05,
            validation_fraction: 0.25,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), MlpError> {
        let bad = |m: &str| Err(MlpError::Config(m.to_string()));
        if self.hidden == 0 {
            return bad("hidden must be at least 1");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if self.patience >= self.max_epochs {
            return bad("patience must be smaller than max_epochs");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie in (0, 1)");
        }
        Ok(())
    }

    /// Seed of restart `r`.
    pub fn restart_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartReport {
    pub index: usize,
    pub seed: u64,
    pub failed: bool,
    /// Epoch of the returned snapshot (0 = initial weights).
    pub best_epoch: usize,
    pub epochs_run: usize,
    /// Mean squared error per validation sample at `best_epoch`.
    pub best_validation_loss: f64,
    /// Mean validation loss of every epoch snapshot, starting at epoch 0.
    pub validation_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub best_restart: usize,
    pub restarts: Vec<RestartReport>,
}

#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub report: RestartReport,
    pub weights: Option<MlpWeights>,
}

/// Canonical sample order: training does not depend on input order.
fn canonical_order(samples: &[Sample]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..samples.len()).collect();
    idx.sort_by(|&a, &b| {
        let (sa, sb) = (&samples[a], &samples[b]);
        (sa.date_index, sa.position, sa.target)
            .cmp(&(sb.date_index, sb.position, sb.target))
            .then_with(|| {
                let ka = sa.x.values.iter().map(|v| v.to_bits());
                let kb = sb.x.values.iter().map(|v| v.to_bits());
                ka.cmp(kb)
            })
    });
    idx
}

/// Run every restart; outcomes are returned in restart order.
pub fn train_restarts(samples: &[Sample], cfg: &TrainConfig) -> Result<Vec<RestartOutcome>, MlpError> {
    cfg.validate()?;
    if samples.len() < 10 {
        return Err(MlpError::TooFewSamples(samples.len()));
    }
    let q = samples[0].x.len();
    let k = samples[0].x.class_count;
    check(&MlpWeights::zeros(q, cfg.hidden, k), samples)?;
    let order = canonical_order(samples);
    let sorted: Vec<Sample> = order.iter().map(|&i| samples[i].clone()).collect();
    let batch = Batch::from_samples(&sorted);
    Ok((0..cfg.restarts).into_par_iter().map(|r| run_restart(&batch, q, k, cfg, r)).collect())
}

/// Train and keep the restart with the lowest validation loss.
pub fn train(samples: &[Sample], cfg: &TrainConfig) -> Result<(MlpWeights, TrainReport), MlpError> {
    let outcomes = train_restarts(samples, cfg)?;
    let best = outcomes
        .iter()
        .filter(|o| !o.report.failed)
        .min_by(|a, b| a.report.best_validation_loss.total_cmp(&b.report.best_validation_loss))
        .ok_or(MlpError::AllRestartsFailed(cfg.restarts))?;
    let weights = best.weights.clone().expect("successful restart has weights");
    let report = TrainReport {
        best_restart: best.report.index,
        restarts: outcomes.into_iter().map(|o| o.report).collect(),
    };
    Ok((weights, report))
}

fn run_restart(batch: &Batch, q: usize, k: usize, cfg: &TrainConfig, r: usize) -> RestartOutcome {
    let seed = cfg.restart_seed(r);
    let mut rng = SplitMix64::new(seed);
    let n = batch.len();
    let mut perm: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut perm);
    let n_val = ((n as f64 * cfg.validation_fraction).round() as usize).clamp(1, n - 1);
    let mut val_idx = perm[..n_val].to_vec();
    let mut train_idx = perm[n_val..].to_vec();
    val_idx.sort_unstable();
    train_idx.sort_unstable();
    let mut w = MlpWeights::random(q, cfg.hidden, k, &mut rng);
    let inv_train = 1.0 / train_idx.len() as f64;
    let inv_val = 1.0 / val_idx.len() as f64;
    let mut report = RestartReport {
        index: r,
        seed,
        failed: false,
        best_epoch: 0,
        epochs_run: 0,
        best_validation_loss: f64::INFINITY,
        validation_history: Vec::new(),
    };
    let v0 = batch.loss(&w, &val_idx) * inv_val;
    if !v0.is_finite() {
        report.failed = true;
        return RestartOutcome { report, weights: None };
    }
    report.validation_history.push(v0);
    report.best_validation_loss = v0;
    let mut best = w.clone();
    let mut g = MlpWeights::zeros(q, cfg.hidden, k);
    for epoch in 1..=cfg.max_epochs {
        g.blocks_mut().for_each(|v| *v = 0.0);
        batch.accumulate_grad(&w, &train_idx, &mut g);
        let step = cfg.learning_rate * inv_train;
        for (wi, gi) in w.blocks_mut().zip(g.blocks()) {
            *wi -= step * gi;
        }
        report.epochs_run = epoch;
        let v = batch.loss(&w, &val_idx) * inv_val;
        if !v.is_finite() || !w.is_finite() {
            report.failed = true;
            return RestartOutcome { report, weights: None };
        }
        report.validation_history.push(v);
        if v < report.best_validation_loss {
            report.best_validation_loss = v;
            report.best_epoch = epoch;
            best.clone_from(&w);
        } else if epoch - report.best_epoch >= cfg.patience {
            break;
        }
    }
    RestartOutcome { report, weights: Some(best) }
}
