//! Seeded synthetic landscapes with a known transition law.
//!
//! Date 0 is the per-pixel argmax of box-smoothed uniform noise, one field per
//! class, which produces patches about `patch_radius` wide. Each later map
//! applies a deterministic rule to the previous one and then flips each pixel
//! with probability `noise` to a uniformly chosen other class. The Bayes
//! predictor is therefore the rule itself and its expected error is `noise`.
//!
//! Randomness is addressed by counter: every draw is
//! `counter_f64(seed, [stream, date, row, col])` on top of SplitMix64, so the
//! output does not depend on iteration order or thread count.
//!
//! Rules, with `counts` the class counts within `effective_radius` (centre
//! excluded) and `window` the full window size:
//!
//! * `linear_logit`: next = argmax over k of
//!   `persistence * [prev = k] + neighbor_weight * sum_l B[k][l] * counts[l] / window + env_weight * sum_r G[k][r] * env[r]`,
//!   with `B = I + U(-0.5, 0.5)` and `G = U(-1, 1)` drawn from the seed.
//! * `xor_gate`: `gate = [prev = 1] xor [env1 > 0]`; a gated pixel becomes
//!   class 1, an ungated class-1 pixel becomes class 2, any other pixel stays.
//!
//! Under both rules a pixel whose whole window holds its own class stays put.

use rayon::prelude::*;
use thiserror::Error;

use crate::argmax;
use crate::eval::{misclassification, EvalError};
use crate::features::ClassIntegral;
use crate::grid::{ClassId, Dataset, EnvKind, EnvLayer, LandCoverGrid};
use crate::kv::{KvError, KvFile};
use crate::rng::{counter_f64, SplitMix64};

const STREAM_PATCH: u64 = 1;
const STREAM_ENV: u64 = 2;
const STREAM_FLIP: u64 = 3;
const STREAM_OTHER: u64 = 4;
const STREAM_COEF: u64 = 5;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator spec: {0}")]
    Spec(String),
    #[error("dataset does not match the generator spec: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Kv(#[from] KvError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dynamics {
    LinearLogit,
    XorGate,
}

impl Dynamics {
    pub fn as_str(self) -> &'static str {
        match self {
            Dynamics::LinearLogit => "linear_logit",
            Dynamics::XorGate => "xor_gate",
        }
    }
}

impl std::str::FromStr for Dynamics {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "linear_logit" => Ok(Dynamics::LinearLogit),
            "xor_gate" => Ok(Dynamics::XorGate),
            other => Err(format!("unknown dynamics {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub rows: usize,
    pub cols: usize,
    pub classes: usize,
    pub dates: usize,
    pub dynamics: Dynamics,
    pub effective_radius: usize,
    pub env_layer_count: usize,
    pub noise: f64,
    pub seed: u64,
    pub persistence: f64,
    pub neighbor_weight: f64,
    pub env_weight: f64,
    pub patch_radius: usize,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            rows: 60,
            cols: 60,
            classes: 4,
            dates: 4,
            dynamics: Dynamics::LinearLogit,
            effective_radius: 2,
            env_layer_count: 1,
            noise: 0.1,
            seed: 0,
            persistence: 1.0,
            neighbor_weight: 12.0,
            env_weight: 0.5,
            patch_radius: 2,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Spec(m.to_string()));
        if self.rows == 0 || self.cols == 0 {
            return bad("rows and cols must be positive");
        }
        if self.classes < 2 || self.classes > u16::MAX as usize {
            return bad("classes must be at least 2");
        }
        if self.dates < 3 {
            return bad("dates must be at least 3");
        }
        if self.effective_radius < 1 {
            return bad("effective_radius must be at least 1");
        }
        if !(0.0..=0.5).contains(&self.noise) {
            return bad("noise must lie in [0, 0.5]");
        }
        if self.dynamics == Dynamics::XorGate && self.env_layer_count == 0 {
            return bad("xor_gate needs at least one env layer");
        }
        if ![self.persistence, self.neighbor_weight, self.env_weight].iter().all(|v| v.is_finite()) {
            return bad("weights must be finite");
        }
        Ok(())
    }

    pub fn from_kv(kv: &KvFile) -> Result<Self, SynthError> {
        let d = Self::default();
        let dynamics = match kv.get("dynamics")? {
            Some(v) => v.parse().map_err(SynthError::Spec)?,
            None => d.dynamics,
        };
        let spec = Self {
            rows: kv.parse_or("rows", d.rows)?,
            cols: kv.parse_or("cols", d.cols)?,
            classes: kv.parse_or("classes", d.classes)?,
            dates: kv.parse_or("dates", d.dates)?,
            dynamics,
            effective_radius: kv.parse_or("effective_radius", d.effective_radius)?,
            env_layer_count: kv.parse_or("env_layer_count", d.env_layer_count)?,
            noise: kv.parse_or("noise", d.noise)?,
            seed: kv.parse_or("seed", d.seed)?,
            persistence: kv.parse_or("persistence", d.persistence)?,
            neighbor_weight: kv.parse_or("neighbor_weight", d.neighbor_weight)?,
            env_weight: kv.parse_or("env_weight", d.env_weight)?,
            patch_radius: kv.parse_or("patch_radius", d.patch_radius)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_kv(&self) -> KvFile {
        let mut kv = KvFile::new();
        kv.push("rows", self.rows);
        kv.push("cols", self.cols);
        kv.push("classes", self.classes);
        kv.push("dates", self.dates);
        kv.push("dynamics", self.dynamics.as_str());
        kv.push("effective_radius", self.effective_radius);
        kv.push("env_layer_count", self.env_layer_count);
        kv.push("noise", self.noise);
        kv.push("seed", self.seed);
        kv.push("persistence", self.persistence);
        kv.push("neighbor_weight", self.neighbor_weight);
        kv.push("env_weight", self.env_weight);
        kv.push("patch_radius", self.patch_radius);
        kv
    }

    fn window_size(&self) -> f64 {
        let side = 2 * self.effective_radius + 1;
        (side * side - 1) as f64
    }
}

/// Coefficients of the linear rule.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearLaw {
    /// `classes x classes`, row-major.
    pub neighbor: Vec<f64>,
    /// `classes x env_layer_count`, row-major.
    pub env: Vec<f64>,
}

impl LinearLaw {
    pub fn for_spec(spec: &GeneratorSpec) -> Self {
        let mut rng = SplitMix64::derive(spec.seed, STREAM_COEF);
        let k = spec.classes;
        let neighbor = (0..k * k)
            .map(|idx| {
                let diag = if idx / k == idx % k { 1.0 } else { 0.0 };
                diag + rng.uniform(-0.5, 0.5)
            })
            .collect();
        let env = (0..k * spec.env_layer_count).map(|_| rng.uniform(-1.0, 1.0)).collect();
        Self { neighbor, env }
    }
}

/// Mean of `values` over the `(2r+1)^2` box, truncated at the edges.
fn box_smooth(values: &[f64], rows: usize, cols: usize, r: usize) -> Vec<f64> {
    let w = cols + 1;
    let mut sat = vec![0.0; (rows + 1) * w];
    for i in 0..rows {
        let mut run = 0.0;
        for j in 0..cols {
            run += values[i * cols + j];
            sat[(i + 1) * w + j + 1] = sat[i * w + j + 1] + run;
        }
    }
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        let (i0, i1) = (i.saturating_sub(r), (i + r + 1).min(rows));
        for j in 0..cols {
            let (j0, j1) = (j.saturating_sub(r), (j + r + 1).min(cols));
            let s = sat[i1 * w + j1] - sat[i0 * w + j1] - sat[i1 * w + j0] + sat[i0 * w + j0];
            out[i * cols + j] = s / ((i1 - i0) * (j1 - j0)) as f64;
        }
    }
    out
}

fn initial_map(spec: &GeneratorSpec) -> LandCoverGrid {
    let (rows, cols) = (spec.rows, spec.cols);
    let fields: Vec<Vec<f64>> = (0..spec.classes)
        .map(|k| {
            let raw: Vec<f64> = (0..rows * cols)
                .map(|idx| counter_f64(spec.seed, &[STREAM_PATCH, k as u64, (idx / cols) as u64, (idx % cols) as u64]))
                .collect();
            box_smooth(&raw, rows, cols, spec.patch_radius)
        })
        .collect();
    let cells = (0..rows * cols)
        .map(|idx| {
            let scores: Vec<f64> = fields.iter().map(|f| f[idx]).collect();
            Some(ClassId::from_index(argmax(&scores)))
        })
        .collect();
    LandCoverGrid::new(rows, cols, cells).expect("sized")
}

fn env_layers(spec: &GeneratorSpec) -> Vec<EnvLayer> {
    let (rows, cols) = (spec.rows, spec.cols);
    (0..spec.env_layer_count)
        .map(|r| {
            let raw: Vec<f64> = (0..rows * cols)
                .map(|idx| counter_f64(spec.seed, &[STREAM_ENV, r as u64, (idx / cols) as u64, (idx % cols) as u64]))
                .collect();
            let smooth = box_smooth(&raw, rows, cols, spec.patch_radius + 2);
            let n = smooth.len() as f64;
            let mean = smooth.iter().sum::<f64>() / n;
            let sd = (smooth.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            let cells = smooth.iter().map(|v| Some(if sd > 0.0 { (v - mean) / sd } else { 0.0 })).collect();
            EnvLayer::new(format!("env{}", r + 1), EnvKind::Numeric, rows, cols, cells).expect("sized")
        })
        .collect()
}

/// The noiseless next map: the argmax of the law at every valid pixel.
fn rule_map(spec: &GeneratorSpec, law: &LinearLaw, prev: &LandCoverGrid, env: &[EnvLayer]) -> LandCoverGrid {
    let (rows, cols) = prev.dims();
    let k = spec.classes;
    let integral = ClassIntegral::new(prev, k);
    let window = spec.window_size();
    let cells: Vec<Option<ClassId>> = (0..rows)
        .into_par_iter()
        .flat_map_iter(|i| {
            let integral = &integral;
            let mut counts = vec![0.0; k];
            (0..cols)
                .map(move |j| {
                    let here = prev.get(i, j)?;
                    integral.window(i, j, spec.effective_radius, &mut counts);
                    counts[here.index()] -= 1.0;
                    let total: f64 = counts.iter().sum();
                    if counts[here.index()] == total {
                        return Some(here);
                    }
                    let next = match spec.dynamics {
                        Dynamics::LinearLogit => {
                            let scores: Vec<f64> = (0..k)
                                .map(|c| {
                                    let own = if c == here.index() { spec.persistence } else { 0.0 };
                                    let neigh: f64 =
                                        (0..k).map(|l| law.neighbor[c * k + l] * counts[l]).sum::<f64>() / window;
                                    let envs: f64 = env
                                        .iter()
                                        .enumerate()
                                        .map(|(r, layer)| {
                                            law.env[c * env.len() + r] * layer.get(i, j).unwrap_or(0.0)
                                        })
                                        .sum();
                                    own + spec.neighbor_weight * neigh + spec.env_weight * envs
                                })
                                .collect();
                            argmax(&scores)
                        }
                        Dynamics::XorGate => {
                            let was_first = here.index() == 0;
                            let high = env[0].get(i, j).unwrap_or(0.0) > 0.0;
                            if was_first != high {
                                0
                            } else if was_first {
                                1
                            } else {
                                here.index()
                            }
                        }
                    };
                    Some(ClassId::from_index(next))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    LandCoverGrid::new(rows, cols, cells).expect("sized")
}

fn apply_noise(spec: &GeneratorSpec, date: usize, rule: &LandCoverGrid) -> LandCoverGrid {
    let (rows, cols) = rule.dims();
    let k = spec.classes as u64;
    let cells = rule
        .cells()
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let c = (*c)?;
            let coords = [date as u64, (idx / cols) as u64, (idx % cols) as u64];
            let flip = counter_f64(spec.seed, &[STREAM_FLIP, coords[0], coords[1], coords[2]]) < spec.noise;
            if !flip {
                return Some(c);
            }
            let u = counter_f64(spec.seed, &[STREAM_OTHER, coords[0], coords[1], coords[2]]);
            let offset = 1 + ((u * (k - 1) as f64) as u64).min(k - 2);
            Some(ClassId::from_index(((c.index() as u64 + offset) % k) as usize))
        })
        .collect();
    LandCoverGrid::new(rows, cols, cells).expect("sized")
}

/// Build the full time series.
pub fn generate(spec: &GeneratorSpec) -> Result<Dataset, SynthError> {
    spec.validate()?;
    let law = LinearLaw::for_spec(spec);
    let env = env_layers(spec);
    let mut covers = vec![initial_map(spec).with_label("0")];
    for t in 1..spec.dates {
        let rule = rule_map(spec, &law, &covers[t - 1], &env);
        covers.push(apply_noise(spec, t, &rule).with_label(t.to_string()));
    }
    Ok(Dataset {
        class_names: (1..=spec.classes).map(|k| format!("class{k}")).collect(),
        covers,
        env_layers: env,
    })
}

fn check_matches(spec: &GeneratorSpec, d: &Dataset, from_date: usize) -> Result<(), SynthError> {
    spec.validate()?;
    let mismatch = |m: String| Err(SynthError::Mismatch(m));
    if d.class_count() != spec.classes {
        return mismatch(format!("{} classes, spec says {}", d.class_count(), spec.classes));
    }
    if d.dims() != (spec.rows, spec.cols) {
        return mismatch(format!("dimensions {:?}, spec says {:?}", d.dims(), (spec.rows, spec.cols)));
    }
    if d.env_layers.len() != spec.env_layer_count {
        return mismatch(format!("{} env layers, spec says {}", d.env_layers.len(), spec.env_layer_count));
    }
    if from_date + 1 >= d.dates() {
        return mismatch(format!("no transition starts at date {from_date}"));
    }
    Ok(())
}

/// Argmax of the true law for the map following `from_date`.
pub fn bayes_predict(spec: &GeneratorSpec, d: &Dataset, from_date: usize) -> Result<LandCoverGrid, SynthError> {
    check_matches(spec, d, from_date)?;
    let law = LinearLaw::for_spec(spec);
    let mut out = rule_map(spec, &law, &d.covers[from_date], &d.env_layers);
    out.nodata = d.covers[from_date].nodata;
    Ok(out)
}

/// Overall misclassification of [`bayes_predict`] against the realized map.
pub fn bayes_error(spec: &GeneratorSpec, d: &Dataset, from_date: usize) -> Result<f64, SynthError> {
    let pred = bayes_predict(spec, d, from_date)?;
    Ok(misclassification(&d.covers[from_date + 1], &pred, spec.classes, None)?.overall)
}

/// Class shares of the map after `from_date` expected under the law.
pub fn expected_marginals(spec: &GeneratorSpec, d: &Dataset, from_date: usize) -> Result<Vec<f64>, SynthError> {
    let pred = bayes_predict(spec, d, from_date)?;
    let k = spec.classes;
    let mut counts = vec![0.0; k];
    let mut n = 0.0;
    for c in pred.cells().iter().flatten() {
        counts[c.index()] += 1.0;
        n += 1.0;
    }
    let other = spec.noise / (k - 1) as f64;
    Ok(counts
        .iter()
        .map(|&c| {
            let share = c / n;
            (1.0 - spec.noise) * share + other * (1.0 - share)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_persistence_freezes_the_map() {
        let spec = GeneratorSpec { noise: 0.0, neighbor_weight: 0.0, env_weight: 0.0, ..Default::default() };
        let d = generate(&spec).unwrap();
        for t in 1..spec.dates {
            assert_eq!(d.covers[t].cells(), d.covers[0].cells());
        }
    }

    #[test]
    fn same_spec_same_dataset() {
        let spec = GeneratorSpec { seed: 9, ..Default::default() };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn noiseless_bayes_error_is_zero() {
        for dynamics in [Dynamics::LinearLogit, Dynamics::XorGate] {
            let spec = GeneratorSpec { noise: 0.0, dynamics, classes: 3, ..Default::default() };
            let d = generate(&spec).unwrap();
            assert_eq!(bayes_error(&spec, &d, 1).unwrap(), 0.0);
        }
    }

    #[test]
    fn spec_round_trips_through_kv() {
        let spec = GeneratorSpec { dynamics: Dynamics::XorGate, noise: 0.125, seed: 77, ..Default::default() };
        let text = spec.to_kv().to_text();
        assert_eq!(GeneratorSpec::from_kv(&KvFile::parse(&text).unwrap()).unwrap(), spec);
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(GeneratorSpec { classes: 1, ..Default::default() }.validate().is_err());
        assert!(GeneratorSpec { dates: 2, ..Default::default() }.validate().is_err());
        assert!(GeneratorSpec { effective_radius: 0, ..Default::default() }.validate().is_err());
        assert!(GeneratorSpec { noise: 0.6, ..Default::default() }.validate().is_err());
        let xor = GeneratorSpec { dynamics: Dynamics::XorGate, env_layer_count: 0, ..Default::default() };
        assert!(xor.validate().is_err());
    }

    #[test]
    fn mismatched_dataset_rejected() {
        let spec = GeneratorSpec::default();
        let d = generate(&spec).unwrap();
        let other = GeneratorSpec { classes: 3, ..spec };
        assert!(matches!(bayes_predict(&other, &d, 0), Err(SynthError::Mismatch(_))));
    }
}
