//! Land-cover transition prediction.
//!
//! The pipeline reads a time series of categorical maps plus environmental
//! layers, builds per-pixel features (previous class, neighbourhood class
//! frequencies, encoded environment), fits either a penalized multinomial
//! logit or a one-hidden-layer perceptron, selects hyperparameters on a
//! validation transition and predicts the next map.
//!
//! ```no_run
//! use terracast::{eval, manifest, polyreg};
//! let d = manifest::read_dataset(std::path::Path::new("data")).unwrap();
//! let protocol = eval::Protocol::for_dates(d.dates()).unwrap();
//! let sel = eval::select_polyreg(&d, &protocol, &eval::HyperGrid::default(), &polyreg::FitOptions::default()).unwrap();
//! println!("{}", sel.report.to_csv());
//! ```

pub mod cli;
pub mod eval;
pub mod features;
pub mod grid;
pub mod kv;
pub mod linalg;
pub mod manifest;
pub mod mlp;
pub mod model;
pub mod polyreg;
pub mod render;
pub mod rng;
pub mod synth;

pub use eval::{misclassification, predict_map, HyperGrid, Misclassification, Protocol, SelectionReport};
pub use features::{FeatureLayout, NeighborhoodSpec, Sample, Transition, Weighting};
pub use grid::{ClassId, Dataset, EnvKind, EnvLayer, LandCoverGrid, Mask};
pub use model::Model;

/// Crate version, recorded in run logs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Any library error, prefixed by the module that raised it.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("grid: {0}")]
    Grid(#[from] grid::GridError),
    #[error("manifest: {0}")]
    Manifest(#[from] manifest::ManifestError),
    #[error("features: {0}")]
    Features(#[from] features::FeatureError),
    #[error("polyreg: {0}")]
    Polyreg(#[from] polyreg::PolyregError),
    #[error("mlp: {0}")]
    Mlp(#[from] mlp::MlpError),
    #[error("model: {0}")]
    Model(#[from] model::ModelError),
    #[error("eval: {0}")]
    Eval(#[from] eval::EvalError),
    #[error("synth: {0}")]
    Synth(#[from] synth::SynthError),
    #[error("config: {0}")]
    Kv(#[from] kv::KvError),
    #[error("render: {0}")]
    Render(#[from] render::RenderError),
    #[error("io: {0}")]
    Io(String),
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
