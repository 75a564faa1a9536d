//! Fitted models bundled with their feature layout, and their text format.
//!
//! Model files are `key = value` lines. Reals are written with 17
//! significant digits so a reloaded model predicts bit-identically.
//!
//! ```text
//! model = polyreg
//! classes = 3
//! p = 4
//! q = 7
//! neighborhood_size = 2
//! weighting = counts
//! env = elevation numeric <mean> <scale>
//! alpha = ...            (K-1 values)
//! beta = ...             (K-1 lines of K values)
//! gamma = ...            (K-1 lines of p values)
//! ```
//!
//! Perceptron files carry `q`, `q2`, `classes`, the layout keys, then `w1`
//! (q2 lines of q values), `b1` (q2 values) and `w2` (K lines of q2 values).

use std::path::Path;

use thiserror::Error;

use crate::features::{EnvEncoding, EnvFeature, FeatureLayout, FeatureVector, NeighborhoodSpec, Weighting};
use crate::grid::ClassId;
use crate::kv::{split_list, KvError, KvFile};
use crate::mlp::{self, MlpWeights};
use crate::polyreg::{self, PolyregParams};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Kv(#[from] KvError),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Polyreg(#[from] polyreg::PolyregError),
    #[error(transparent)]
    Mlp(#[from] mlp::MlpError),
}

fn fmt_err(msg: impl Into<String>) -> ModelError {
    ModelError::Format(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyregModel {
    pub params: PolyregParams,
    pub layout: FeatureLayout,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub weights: MlpWeights,
    pub layout: FeatureLayout,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Polyreg(PolyregModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn layout(&self) -> &FeatureLayout {
        match self {
            Model::Polyreg(m) => &m.layout,
            Model::Mlp(m) => &m.layout,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Polyreg(_) => "polyreg",
            Model::Mlp(_) => "mlp",
        }
    }

    /// Check that the model consumes the layout's feature width.
    pub fn check(&self) -> Result<(), ModelError> {
        let q = self.layout().width();
        let (found, classes) = match self {
            Model::Polyreg(m) => (m.params.feature_width(), m.params.class_count()),
            Model::Mlp(m) => (m.weights.inputs, m.weights.outputs),
        };
        if found != q || classes != self.layout().class_count {
            return Err(fmt_err(format!(
                "model expects {found} features / {classes} classes, layout gives {q} / {}",
                self.layout().class_count
            )));
        }
        Ok(())
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<ClassId, ModelError> {
        Ok(match self {
            Model::Polyreg(m) => polyreg::predict(&m.params, &x.values)?,
            Model::Mlp(m) => mlp::predict(&m.weights, &x.values)?,
        })
    }

    pub fn to_text(&self) -> String {
        let mut kv = KvFile::new();
        kv.push("model", self.kind());
        match self {
            Model::Polyreg(m) => {
                let p = &m.params;
                let k = p.class_count();
                kv.push("classes", k);
                kv.push("p", p.p());
                kv.push("q", p.feature_width());
                kv.push("eps", real(m.eps));
                push_layout(&mut kv, &m.layout);
                kv.push("alpha", reals((0..k - 1).map(|c| p.alpha(c))));
                for c in 0..k - 1 {
                    kv.push("beta", reals((0..k).map(|l| p.beta(c, l))));
                }
                for c in 0..k - 1 {
                    kv.push("gamma", reals((0..p.p()).map(|r| p.gamma(c, r))));
                }
            }
            Model::Mlp(m) => {
                let w = &m.weights;
                kv.push("q", w.inputs);
                kv.push("q2", w.hidden);
                kv.push("classes", w.outputs);
                push_layout(&mut kv, &m.layout);
                for row in w.w1.chunks(w.inputs.max(1)) {
                    kv.push("w1", reals(row.iter().copied()));
                }
                kv.push("b1", reals(w.b1.iter().copied()));
                for row in w.w2.chunks(w.hidden) {
                    kv.push("w2", reals(row.iter().copied()));
                }
            }
        }
        kv.to_text()
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let kv = KvFile::parse(text)?;
        let kind = kv.require("model")?;
        let classes: usize = kv.parse_value("classes")?.ok_or_else(|| fmt_err("missing classes"))?;
        let layout = parse_layout(&kv, classes)?;
        let model = match kind {
            "polyreg" => {
                let p: usize = kv.parse_value("p")?.ok_or_else(|| fmt_err("missing p"))?;
                let eps = kv.parse_or("eps", 0.0)?;
                let mut flat = parse_rows(&kv, "alpha", 1, classes - 1)?;
                flat.extend(parse_rows(&kv, "beta", classes - 1, classes)?);
                flat.extend(parse_rows(&kv, "gamma", classes - 1, p)?);
                let params = PolyregParams::from_flat(classes, p, flat)?;
                Model::Polyreg(PolyregModel { params, layout, eps })
            }
            "mlp" => {
                let q: usize = kv.parse_value("q")?.ok_or_else(|| fmt_err("missing q"))?;
                let q2: usize = kv.parse_value("q2")?.ok_or_else(|| fmt_err("missing q2"))?;
                let mut flat = parse_rows(&kv, "w1", q2, q)?;
                flat.extend(parse_rows(&kv, "b1", 1, q2)?);
                flat.extend(parse_rows(&kv, "w2", classes, q2)?);
                Model::Mlp(MlpModel { weights: MlpWeights::from_flat(q, q2, classes, &flat), layout })
            }
            other => return Err(fmt_err(format!("unknown model kind {other:?}"))),
        };
        model.check()?;
        Ok(model)
    }

    pub fn write(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_text()).map_err(|source| ModelError::Io { path: path.display().to_string(), source })
    }

    pub fn read(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }
}

/// 17 significant digits.
fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn reals(values: impl Iterator<Item = f64>) -> String {
    values.map(real).collect::<Vec<_>>().join(" ")
}

fn push_layout(kv: &mut KvFile, layout: &FeatureLayout) {
    kv.push("neighborhood_size", layout.neighborhood.size());
    kv.push("weighting", layout.neighborhood.weighting.as_str());
    for e in &layout.env {
        match e.encoding {
            EnvEncoding::Numeric { mean, scale } => {
                kv.push("env", format!("{} numeric {} {}", e.name, real(mean), real(scale)))
            }
            EnvEncoding::Categorical { category_count } => {
                kv.push("env", format!("{} categorical {category_count}", e.name))
            }
        }
    }
}

fn parse_layout(kv: &KvFile, classes: usize) -> Result<FeatureLayout, ModelError> {
    let size: usize = kv.parse_value("neighborhood_size")?.ok_or_else(|| fmt_err("missing neighborhood_size"))?;
    let weighting: Weighting = kv.require("weighting")?.parse().map_err(fmt_err)?;
    let neighborhood = NeighborhoodSpec::new(size, weighting).map_err(|e| fmt_err(e.to_string()))?;
    let mut env = Vec::new();
    for v in kv.get_all("env") {
        let f: Vec<&str> = v.split_whitespace().collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| fmt_err(format!("bad number {s:?} in env line")));
        let encoding = match f.as_slice() {
            [_, "numeric", mean, scale] => EnvEncoding::Numeric { mean: num(mean)?, scale: num(scale)? },
            [_, "categorical", count] => EnvEncoding::Categorical {
                category_count: count.parse().map_err(|_| fmt_err(format!("bad category count {count:?}")))?,
            },
            _ => return Err(fmt_err(format!("bad env line {v:?}"))),
        };
        env.push(EnvFeature { name: f[0].to_string(), encoding });
    }
    Ok(FeatureLayout { class_count: classes, neighborhood, env })
}

fn parse_rows(kv: &KvFile, key: &str, rows: usize, cols: usize) -> Result<Vec<f64>, ModelError> {
    let lines: Vec<&str> = kv.get_all(key).collect();
    if lines.len() != rows && !(rows == 0 || cols == 0) {
        return Err(fmt_err(format!("expected {rows} `{key}` lines, found {}", lines.len())));
    }
    let mut out = Vec::with_capacity(rows * cols);
    for line in lines {
        let vals = split_list(line)
            .map(|t| t.parse::<f64>().map_err(|_| fmt_err(format!("bad number {t:?} in `{key}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != cols {
            return Err(fmt_err(format!("`{key}` line has {} values, expected {cols}", vals.len())));
        }
        out.extend(vals);
    }
    Ok(out)
}
