//! Map prediction, misclassification accounting and validation-driven
//! hyperparameter selection.
//!
//! The protocol: fit on the estimation transition(s), predict the
//! validation-target map from the validation-source map, score the overall
//! error on a fixed evaluation mask, and keep the candidate with the lowest
//! error. The selected model then predicts the test transition.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::features::{
    build_training_set, frontier_pixels, FeatureError, NeighborhoodSpec, SamplingOptions, TrainingSet, Transition,
    Weighting,
};
use crate::grid::{ClassId, Dataset, LandCoverGrid, Mask};
use crate::kv::{KvError, KvFile};
use crate::mlp::{self, TrainConfig};
use crate::model::{MlpModel, Model, ModelError, PolyregModel};
use crate::polyreg::{self, FitOptions};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("maps differ in size: {0:?} vs {1:?}")]
    Dimension((usize, usize), (usize, usize)),
    #[error("no pixel to evaluate")]
    NoPixels,
    #[error("date {date} out of range (dataset has {dates} dates)")]
    Date { date: usize, dates: usize },
    #[error("protocol needs at least 3 dates, dataset has {0}")]
    TooFewDates(usize),
    #[error("empty hyperparameter grid: {0}")]
    EmptyGrid(&'static str),
    #[error("every candidate failed; first failure: {0}")]
    AllCandidatesFailed(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kv(#[from] KvError),
}

/// Predict the map of `from_date + 1` from the cover at `from_date`.
///
/// With `frontier_only`, pixels that are not frontier (order `frontier_order`)
/// on the source map keep their class. NODATA propagates.
pub fn predict_map(
    model: &Model,
    d: &Dataset,
    from_date: usize,
    frontier_only: bool,
    frontier_order: usize,
) -> Result<LandCoverGrid, EvalError> {
    model.check()?;
    if from_date >= d.dates() {
        return Err(EvalError::Date { date: from_date, dates: d.dates() });
    }
    let layout = model.layout();
    let builder = layout.builder(d, from_date)?;
    let src = &d.covers[from_date];
    let frontier = frontier_only.then(|| frontier_pixels(src, frontier_order));
    let (rows, cols) = src.dims();
    let cells: Vec<Vec<Option<ClassId>>> = (0..rows)
        .into_par_iter()
        .map(|i| {
            (0..cols)
                .map(|j| {
                    let Some(prev) = src.get(i, j) else { return Ok(None) };
                    if frontier.as_ref().is_some_and(|m| !m.get(i, j)) {
                        return Ok(Some(prev));
                    }
                    let x = builder.features(i, j)?;
                    Ok(Some(model.predict(&x)?))
                })
                .collect::<Result<Vec<_>, EvalError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut out = LandCoverGrid::new(rows, cols, cells.into_iter().flatten().collect()).expect("source dimensions");
    out.nodata = src.nodata;
    if let Some(next) = d.covers.get(from_date + 1) {
        out.date_label = next.date_label.clone();
    }
    Ok(out)
}

/// `K x K` counts, rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub class_count: usize,
    pub counts: Vec<u64>,
    pub evaluated_pixels: u64,
}

impl ConfusionMatrix {
    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.class_count + predicted]
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.counts[truth * self.class_count..(truth + 1) * self.class_count].iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.class_count).map(|k| self.get(k, k)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Misclassification {
    pub confusion: ConfusionMatrix,
    /// Error among pixels truly of class `k`; `None` when the class is absent.
    pub per_class: Vec<Option<f64>>,
    pub overall: f64,
}

impl Misclassification {
    /// Share of evaluated pixels whose true class is `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        self.confusion.row_sum(k) as f64 / self.confusion.evaluated_pixels as f64
    }
}

/// Per-class and overall misclassification rates.
///
/// A pixel is evaluated when it is valid on both maps and, if given, set in `mask`.
pub fn misclassification(
    truth: &LandCoverGrid,
    pred: &LandCoverGrid,
    class_count: usize,
    mask: Option<&Mask>,
) -> Result<Misclassification, EvalError> {
    if truth.dims() != pred.dims() {
        return Err(EvalError::Dimension(truth.dims(), pred.dims()));
    }
    if let Some(m) = mask {
        if (m.rows, m.cols) != truth.dims() {
            return Err(EvalError::Dimension(truth.dims(), (m.rows, m.cols)));
        }
    }
    let mut counts = vec![0u64; class_count * class_count];
    let mut evaluated = 0u64;
    for (idx, (t, p)) in truth.cells().iter().zip(pred.cells()).enumerate() {
        if mask.is_some_and(|m| !m.bits[idx]) {
            continue;
        }
        let (Some(t), Some(p)) = (t, p) else { continue };
        if t.index() >= class_count || p.index() >= class_count {
            continue;
        }
        counts[t.index() * class_count + p.index()] += 1;
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(EvalError::NoPixels);
    }
    let confusion = ConfusionMatrix { class_count, counts, evaluated_pixels: evaluated };
    let per_class = (0..class_count)
        .map(|k| {
            let n = confusion.row_sum(k);
            (n > 0).then(|| (n - confusion.get(k, k)) as f64 / n as f64)
        })
        .collect();
    let overall = (evaluated - confusion.trace()) as f64 / evaluated as f64;
    Ok(Misclassification { confusion, per_class, overall })
}

/// Candidate values for the validation step.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub neighborhood_sizes: Vec<usize>,
    pub eps_values: Vec<f64>,
    pub hidden_sizes: Vec<usize>,
}

impl Default for HyperGrid {
    /// Sizes 1 to 9, five decades of eps and five hidden widths.
    fn default() -> Self {
        Self {
            neighborhood_sizes: (1..=9).collect(),
            eps_values: vec![0.001, 0.01, 0.1, 1.0, 10.0],
            hidden_sizes: vec![2, 4, 8, 16, 30],
        }
    }
}

impl HyperGrid {
    /// Read `sizes`, `eps` and `hidden` lists; missing keys keep defaults.
    pub fn from_kv(kv: &KvFile) -> Result<Self, EvalError> {
        let mut g = Self::default();
        if let Some(v) = kv.parse_list("sizes")? {
            g.neighborhood_sizes = v;
        }
        if let Some(v) = kv.parse_list("eps")? {
            g.eps_values = v;
        }
        if let Some(v) = kv.parse_list("hidden")? {
            g.hidden_sizes = v;
        }
        Ok(g)
    }

    pub fn to_kv(&self) -> KvFile {
        let join = |v: Vec<String>| v.join(" ");
        let mut kv = KvFile::new();
        kv.push("sizes", join(self.neighborhood_sizes.iter().map(ToString::to_string).collect()));
        kv.push("eps", join(self.eps_values.iter().map(ToString::to_string).collect()));
        kv.push("hidden", join(self.hidden_sizes.iter().map(ToString::to_string).collect()));
        kv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMask {
    /// Every pixel valid on both maps.
    All,
    /// Frontier pixels of the source map only.
    Frontier,
}

impl std::str::FromStr for EvalMask {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(EvalMask::All),
            "frontier" => Ok(EvalMask::Frontier),
            other => Err(format!("unknown evaluation mask {other:?}")),
        }
    }
}

/// Estimation, validation and test transitions plus pixel-selection settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub estimation: Vec<Transition>,
    pub validation: Transition,
    pub test: Option<Transition>,
    /// Train on frontier pixels only.
    pub frontier_only: bool,
    pub frontier_order: usize,
    /// Keep non-frontier pixels constant in predicted maps.
    pub predict_frontier_only: bool,
    pub eval_mask: EvalMask,
    /// Subsample cap for the estimation pixels.
    pub max_samples: Option<usize>,
    pub seed: u64,
}

impl Protocol {
    /// Earliest transitions for estimation, the next for validation, the last for test.
    ///
    /// With 3 dates the validation and test transitions coincide.
    pub fn for_dates(dates: usize) -> Result<Self, EvalError> {
        if dates < 3 {
            return Err(EvalError::TooFewDates(dates));
        }
        let val_from = if dates >= 4 { dates - 3 } else { dates - 2 };
        Ok(Self {
            estimation: (0..val_from).map(Transition::starting_at).collect(),
            validation: Transition::starting_at(val_from),
            test: Some(Transition::starting_at(dates - 2)),
            frontier_only: true,
            frontier_order: 4,
            predict_frontier_only: true,
            eval_mask: EvalMask::All,
            max_samples: None,
            seed: 0,
        })
    }

    /// The test transition reuses (part of) the data used for selection.
    pub fn overlapping(&self) -> bool {
        self.test.is_some_and(|t| t == self.validation || self.estimation.contains(&t))
    }

    pub fn sampling(&self) -> SamplingOptions {
        SamplingOptions {
            frontier_only: self.frontier_only,
            frontier_order: self.frontier_order,
            max_samples: self.max_samples,
            seed: self.seed,
        }
    }

    pub fn mask(&self, d: &Dataset, tr: Transition) -> Option<Mask> {
        match self.eval_mask {
            EvalMask::All => None,
            EvalMask::Frontier => Some(frontier_pixels(&d.covers[tr.from], self.frontier_order)),
        }
    }

    /// Predict `tr.to` from `tr.from` and score it.
    pub fn evaluate(
        &self,
        model: &Model,
        d: &Dataset,
        tr: Transition,
    ) -> Result<(LandCoverGrid, Misclassification), EvalError> {
        tr.check(d.dates())?;
        let pred = predict_map(model, d, tr.from, self.predict_frontier_only, self.frontier_order)?;
        let m = misclassification(&d.covers[tr.to], &pred, d.class_count(), self.mask(d, tr).as_ref())?;
        Ok((pred, m))
    }

    fn check(&self, d: &Dataset) -> Result<(), EvalError> {
        for tr in self.estimation.iter().chain([&self.validation]).chain(self.test.as_ref()) {
            tr.check(d.dates())?;
        }
        Ok(())
    }
}

/// One row of the selection table.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateRow {
    pub size: usize,
    pub eps: Option<f64>,
    pub hidden: Option<usize>,
    pub restart: Option<usize>,
    pub validation_error: Option<f64>,
    pub status: String,
}

impl CandidateRow {
    fn key(&self) -> (usize, f64, usize, usize) {
        (self.size, self.eps.unwrap_or(0.0), self.hidden.unwrap_or(0), self.restart.unwrap_or(0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub method: &'static str,
    pub rows: Vec<CandidateRow>,
    /// Index of the selected row.
    pub best: usize,
    pub validation: Transition,
    pub overlapping_test: bool,
}

impl SelectionReport {
    pub fn best_row(&self) -> &CandidateRow {
        &self.rows[self.best]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,size,eps,hidden,restart,validation_error,status\n");
        for r in &self.rows {
            let opt = |v: Option<String>| v.unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                self.method,
                r.size,
                opt(r.eps.map(|v| v.to_string())),
                opt(r.hidden.map(|v| v.to_string())),
                opt(r.restart.map(|v| v.to_string())),
                opt(r.validation_error.map(|v| v.to_string())),
                r.status
            )
            .unwrap();
        }
        out
    }
}

/// Minimum validation error; ties to the smallest size, then eps or q2, then restart.
fn pick_best(rows: &[CandidateRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .filter_map(|(i, r)| r.validation_error.map(|e| (i, e)))
        .min_by(|(ia, ea), (ib, eb)| {
            let (ka, kb) = (rows[*ia].key(), rows[*ib].key());
            ea.total_cmp(eb)
                .then(ka.0.cmp(&kb.0))
                .then(ka.1.total_cmp(&kb.1))
                .then(ka.2.cmp(&kb.2))
                .then(ka.3.cmp(&kb.3))
        })
        .map(|(i, _)| i)
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub report: SelectionReport,
    pub model: Model,
}

fn training_sets(
    d: &Dataset,
    protocol: &Protocol,
    sizes: &[usize],
    weighting: Weighting,
) -> Vec<Result<TrainingSet, FeatureError>> {
    let sampling = protocol.sampling();
    sizes
        .par_iter()
        .map(|&s| build_training_set(d, &protocol.estimation, NeighborhoodSpec::new(s, weighting)?, &sampling))
        .collect()
}

fn validation_error(protocol: &Protocol, model: &Model, d: &Dataset, mask: Option<&Mask>) -> Result<f64, EvalError> {
    let tr = protocol.validation;
    let pred = predict_map(model, d, tr.from, protocol.predict_frontier_only, protocol.frontier_order)?;
    Ok(misclassification(&d.covers[tr.to], &pred, d.class_count(), mask)?.overall)
}

fn failed_row(size: usize, eps: Option<f64>, hidden: Option<usize>, restart: Option<usize>, msg: String) -> CandidateRow {
    CandidateRow { size, eps, hidden, restart, validation_error: None, status: format!("failed: {msg}") }
}

fn finish(
    method: &'static str,
    protocol: &Protocol,
    scored: Vec<(CandidateRow, Option<Model>)>,
) -> Result<Selection, EvalError> {
    let rows: Vec<CandidateRow> = scored.iter().map(|(r, _)| r.clone()).collect();
    let best = pick_best(&rows).ok_or_else(|| {
        EvalError::AllCandidatesFailed(rows.first().map(|r| r.status.clone()).unwrap_or_default())
    })?;
    let model = scored.into_iter().nth(best).and_then(|(_, m)| m).expect("best row has a model");
    Ok(Selection {
        report: SelectionReport {
            method,
            rows,
            best,
            validation: protocol.validation,
            overlapping_test: protocol.overlapping(),
        },
        model,
    })
}

/// Validation step for polychotomous regression over `(size, eps)`.
pub fn select_polyreg(
    d: &Dataset,
    protocol: &Protocol,
    grid: &HyperGrid,
    fit_opts: &FitOptions,
) -> Result<Selection, EvalError> {
    if grid.neighborhood_sizes.is_empty() || grid.eps_values.is_empty() {
        return Err(EvalError::EmptyGrid("sizes and eps must be non-empty"));
    }
    protocol.check(d)?;
    let mask = protocol.mask(d, protocol.validation);
    let sets = training_sets(d, protocol, &grid.neighborhood_sizes, Weighting::Counts);
    let jobs: Vec<(usize, f64)> = (0..sets.len())
        .flat_map(|si| grid.eps_values.iter().map(move |&e| (si, e)))
        .collect();
    let scored: Vec<(CandidateRow, Option<Model>)> = jobs
        .par_iter()
        .map(|&(si, eps)| {
            let size = grid.neighborhood_sizes[si];
            let set = match &sets[si] {
                Ok(s) => s,
                Err(e) => return (failed_row(size, Some(eps), None, None, e.to_string()), None),
            };
            let fitted = polyreg::fit(&set.samples, eps, fit_opts)
                .map_err(|e| EvalError::Model(e.into()))
                .and_then(|(params, report)| {
                    let model = Model::Polyreg(PolyregModel { params, layout: set.layout.clone(), eps });
                    let err = validation_error(protocol, &model, d, mask.as_ref())?;
                    Ok((model, report, err))
                });
            match fitted {
                Ok((model, report, err)) => {
                    let status = if report.converged { "ok".to_string() } else { "not_converged".to_string() };
                    let row = CandidateRow {
                        size,
                        eps: Some(eps),
                        hidden: None,
                        restart: None,
                        validation_error: Some(err),
                        status,
                    };
                    (row, Some(model))
                }
                Err(e) => (failed_row(size, Some(eps), None, None, e.to_string()), None),
            }
        })
        .collect();
    finish("polyreg", protocol, scored)
}

/// Validation step for perceptrons over `(size, q2)` and every restart.
pub fn select_mlp(
    d: &Dataset,
    protocol: &Protocol,
    grid: &HyperGrid,
    template: &TrainConfig,
) -> Result<Selection, EvalError> {
    if grid.neighborhood_sizes.is_empty() || grid.hidden_sizes.is_empty() {
        return Err(EvalError::EmptyGrid("sizes and hidden must be non-empty"));
    }
    protocol.check(d)?;
    let mask = protocol.mask(d, protocol.validation);
    let sets = training_sets(d, protocol, &grid.neighborhood_sizes, Weighting::ExpDistance);
    let jobs: Vec<(usize, usize)> = (0..sets.len())
        .flat_map(|si| grid.hidden_sizes.iter().map(move |&h| (si, h)))
        .collect();
    let scored: Vec<Vec<(CandidateRow, Option<Model>)>> = jobs
        .par_iter()
        .map(|&(si, hidden)| {
            let size = grid.neighborhood_sizes[si];
            let set = match &sets[si] {
                Ok(s) => s,
                Err(e) => return vec![(failed_row(size, None, Some(hidden), None, e.to_string()), None)],
            };
            let cfg = TrainConfig { hidden, ..template.clone() };
            let outcomes = match mlp::train_restarts(&set.samples, &cfg) {
                Ok(o) => o,
                Err(e) => return vec![(failed_row(size, None, Some(hidden), None, e.to_string()), None)],
            };
            outcomes
                .into_par_iter()
                .map(|o| {
                    let r = Some(o.report.index);
                    let Some(weights) = o.weights else {
                        return (failed_row(size, None, Some(hidden), r, "diverged".into()), None);
                    };
                    let model = Model::Mlp(MlpModel { weights, layout: set.layout.clone() });
                    match validation_error(protocol, &model, d, mask.as_ref()) {
                        Ok(err) => {
                            let row = CandidateRow {
                                size,
                                eps: None,
                                hidden: Some(hidden),
                                restart: r,
                                validation_error: Some(err),
                                status: format!("ok epoch={}", o.report.best_epoch),
                            };
                            (row, Some(model))
                        }
                        Err(e) => (failed_row(size, None, Some(hidden), r, e.to_string()), None),
                    }
                })
                .collect()
        })
        .collect();
    finish("mlp", protocol, scored.into_iter().flatten().collect())
}

/// Selection followed by prediction of the test transition.
#[derive(Debug, Clone)]
pub struct ProtocolOutcome {
    pub selection: Selection,
    pub test: Option<(LandCoverGrid, Misclassification)>,
}

pub fn run_test(selection: Selection, d: &Dataset, protocol: &Protocol) -> Result<ProtocolOutcome, EvalError> {
    let test = match protocol.test {
        Some(tr) => Some(protocol.evaluate(&selection.model, d, tr)?),
        None => None,
    };
    Ok(ProtocolOutcome { selection, test })
}

/// Share below which a class is footnoted in reports.
pub const RARE_CLASS_SHARE: f64 = 0.05;

/// Plain-text table of per-class and overall rates.
pub fn format_rates(m: &Misclassification, class_names: &[String]) -> String {
    let mut out = String::new();
    let width = class_names.iter().map(String::len).max().unwrap_or(5).max(10);
    writeln!(out, "{:<width$}  {:>9}  {:>10}", "class", "frequency", "error").unwrap();
    let mut rare = Vec::new();
    for (k, err) in m.per_class.iter().enumerate() {
        let name = class_names.get(k).cloned().unwrap_or_else(|| format!("class{}", k + 1));
        let freq = m.frequency(k);
        let mark = if err.is_some() && freq < RARE_CLASS_SHARE { "*" } else { "" };
        if !mark.is_empty() {
            rare.push(name.clone());
        }
        let err = err.map_or_else(|| "undefined".to_string(), |e| format!("{:.2}%", 100.0 * e));
        writeln!(out, "{:<width$}  {:>8.2}%  {:>10}{mark}", name, 100.0 * freq, err).unwrap();
    }
    writeln!(out, "{:<width$}  {:>9}  {:>9.2}%", "overall", "", 100.0 * m.overall).unwrap();
    writeln!(out, "evaluated pixels: {}", m.confusion.evaluated_pixels).unwrap();
    if !rare.is_empty() {
        writeln!(out, "* under {:.0}% of the evaluated area: {}", 100.0 * RARE_CLASS_SHARE, rare.join(", ")).unwrap();
    }
    out
}
