//! Predictor vectors for one-step land-cover transitions.
//!
//! A feature vector for pixel `(i, j)` predicting date `t` is laid out as
//!
//! ```text
//! [ one-hot class at t-1 (K) | neighbourhood class frequencies at t-1 (K) | env block ]
//! ```
//!
//! The env block holds one standardized value per numeric layer and a
//! one-hot block per categorical layer, in manifest order. Standardization
//! statistics come from the estimation pixels only and are frozen in the
//! [`FeatureLayout`] for validation, test and map prediction.
//!
//! Neighbourhoods are square (Chebyshev radius `s`, centre excluded) and are
//! truncated at the raster edge and at NODATA cells.

use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::{ClassId, Dataset, EnvKind, LandCoverGrid, Mask};
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("neighbourhood size must be at least 1")]
    ZeroSize,
    #[error("pixel ({0}, {1}) is NODATA")]
    Nodata(usize, usize),
    #[error("pixel ({0}, {1}) is outside the grid")]
    OutOfBounds(usize, usize),
    #[error("transition {from}->{to} is not a consecutive pair of dates in 0..{dates}")]
    BadTransition { from: usize, to: usize, dates: usize },
    #[error("no eligible pixels for the requested transitions")]
    EmptyEligible,
    #[error("feature layout expects {expected} classes/layers, dataset has {found}")]
    LayoutMismatch { expected: usize, found: usize },
    #[error("csv: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weighting {
    /// Raw neighbour counts per class.
    Counts,
    /// `e^{-d}`-weighted class frequencies normalized to sum to 1.
    ExpDistance,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::Counts => "counts",
            Weighting::ExpDistance => "exp_distance",
        }
    }
}

impl std::str::FromStr for Weighting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "counts" => Ok(Weighting::Counts),
            "exp_distance" | "exp" => Ok(Weighting::ExpDistance),
            other => Err(format!("unknown weighting {other:?}")),
        }
    }
}

/// Square neighbourhood of Chebyshev radius `size`, centre excluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NeighborhoodSpec {
    size: usize,
    pub weighting: Weighting,
}

impl NeighborhoodSpec {
    pub fn new(size: usize, weighting: Weighting) -> Result<Self, FeatureError> {
        if size == 0 {
            return Err(FeatureError::ZeroSize);
        }
        Ok(Self { size, weighting })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Offsets and `e^{-d}` weights, row-major.
    pub fn kernel(&self) -> Vec<(isize, isize, f64)> {
        let s = self.size as isize;
        let mut out = Vec::with_capacity(((2 * s + 1) * (2 * s + 1) - 1) as usize);
        for di in -s..=s {
            for dj in -s..=s {
                if di == 0 && dj == 0 {
                    continue;
                }
                let d = ((di * di + dj * dj) as f64).sqrt();
                out.push((di, dj, (-d).exp()));
            }
        }
        out
    }
}

/// Per-class summed-area tables of a cover map.
#[derive(Debug, Clone)]
pub struct ClassIntegral {
    rows: usize,
    cols: usize,
    classes: usize,
    // (rows+1) x (cols+1) x classes
    sums: Vec<u32>,
}

impl ClassIntegral {
    pub fn new(cover: &LandCoverGrid, classes: usize) -> Self {
        let (rows, cols) = cover.dims();
        let w = cols + 1;
        let mut sums = vec![0u32; (rows + 1) * w * classes];
        for i in 0..rows {
            for j in 0..cols {
                let dst = ((i + 1) * w + (j + 1)) * classes;
                let up = (i * w + (j + 1)) * classes;
                let left = ((i + 1) * w + j) * classes;
                let diag = (i * w + j) * classes;
                for c in 0..classes {
                    sums[dst + c] = sums[up + c] + sums[left + c] - sums[diag + c];
                }
                if let Some(cl) = cover.get(i, j) {
                    if cl.index() < classes {
                        sums[dst + cl.index()] += 1;
                    }
                }
            }
        }
        Self { rows, cols, classes, sums }
    }

    /// Per-class counts over the window of Chebyshev radius `r` around `(i, j)`, clipped,
    /// centre included.
    pub fn window(&self, i: usize, j: usize, r: usize, out: &mut [f64]) {
        let i0 = i.saturating_sub(r);
        let j0 = j.saturating_sub(r);
        let i1 = (i + r + 1).min(self.rows);
        let j1 = (j + r + 1).min(self.cols);
        let w = self.cols + 1;
        let k = self.classes;
        let (a, b, c, d) = ((i1 * w + j1) * k, (i0 * w + j1) * k, (i1 * w + j0) * k, (i0 * w + j0) * k);
        for (cl, o) in out.iter_mut().enumerate().take(k) {
            *o = f64::from(self.sums[a + cl] + self.sums[d + cl] - self.sums[b + cl] - self.sums[c + cl]);
        }
    }
}

/// Frontier mask: a valid pixel is frontier when some valid pixel within
/// Chebyshev distance `order` has a different class.
pub fn frontier_pixels(cover: &LandCoverGrid, order: usize) -> Mask {
    let (rows, cols) = cover.dims();
    let classes = cover.max_class().map_or(0, |c| c.index() + 1);
    let integral = ClassIntegral::new(cover, classes);
    let mut counts = vec![0.0; classes];
    let mut bits = vec![false; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let Some(own) = cover.get(i, j) else { continue };
            integral.window(i, j, order, &mut counts);
            let total: f64 = counts.iter().sum();
            bits[i * cols + j] = total > counts[own.index()];
        }
    }
    Mask { rows, cols, bits }
}

/// Class frequencies in a pixel's neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborFrequencies {
    pub values: Vec<f64>,
    pub valid_neighbors: usize,
}

impl NeighborFrequencies {
    /// No valid neighbour: the vector is all zeros.
    pub fn is_degenerate(&self) -> bool {
        self.valid_neighbors == 0
    }
}

/// Neighbourhood class frequencies of `pos` on `cover` (see [`Weighting`]).
pub fn neighborhood_frequencies(
    cover: &LandCoverGrid,
    class_count: usize,
    pos: (usize, usize),
    spec: &NeighborhoodSpec,
) -> Result<NeighborFrequencies, FeatureError> {
    let (i, j) = pos;
    if i >= cover.rows() || j >= cover.cols() {
        return Err(FeatureError::OutOfBounds(i, j));
    }
    if cover.get(i, j).is_none() {
        return Err(FeatureError::Nodata(i, j));
    }
    let mut values = vec![0.0; class_count];
    let valid = kernel_frequencies(cover, pos, &spec.kernel(), spec.weighting, &mut values);
    Ok(NeighborFrequencies { values, valid_neighbors: valid })
}

fn kernel_frequencies(
    cover: &LandCoverGrid,
    (i, j): (usize, usize),
    kernel: &[(isize, isize, f64)],
    weighting: Weighting,
    out: &mut [f64],
) -> usize {
    out.iter_mut().for_each(|v| *v = 0.0);
    let (rows, cols) = (cover.rows() as isize, cover.cols() as isize);
    let mut valid = 0;
    let mut total = 0.0;
    for &(di, dj, w) in kernel {
        let (ni, nj) = (i as isize + di, j as isize + dj);
        if ni < 0 || nj < 0 || ni >= rows || nj >= cols {
            continue;
        }
        let Some(c) = cover.get(ni as usize, nj as usize) else { continue };
        if c.index() >= out.len() {
            continue;
        }
        valid += 1;
        match weighting {
            Weighting::Counts => out[c.index()] += 1.0,
            Weighting::ExpDistance => {
                out[c.index()] += w;
                total += w;
            }
        }
    }
    if weighting == Weighting::ExpDistance && total > 0.0 {
        out.iter_mut().for_each(|v| *v /= total);
    }
    valid
}

/// Encoding of one environmental layer in the feature vector.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvEncoding {
    /// `(v - mean) / scale`; `scale == 0` maps every value to 0.
    Numeric { mean: f64, scale: f64 },
    Categorical { category_count: u32 },
}

impl EnvEncoding {
    pub fn width(&self) -> usize {
        match self {
            EnvEncoding::Numeric { .. } => 1,
            EnvEncoding::Categorical { category_count } => *category_count as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvFeature {
    pub name: String,
    pub encoding: EnvEncoding,
}

/// Assembled predictor vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub class_count: usize,
    /// The neighbourhood had no valid pixel.
    pub degenerate: bool,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn prev_onehot(&self) -> &[f64] {
        &self.values[..self.class_count]
    }

    pub fn neighborhood(&self) -> &[f64] {
        &self.values[self.class_count..2 * self.class_count]
    }

    pub fn env(&self) -> &[f64] {
        &self.values[2 * self.class_count..]
    }
}

/// One training observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: FeatureVector,
    pub target: ClassId,
    pub position: (usize, usize),
    /// Date of `target`; features come from `date_index - 1`.
    pub date_index: usize,
}

/// Consecutive pair of date indices `(from, from + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
}

impl Transition {
    pub fn starting_at(from: usize) -> Self {
        Self { from, to: from + 1 }
    }

    pub fn check(&self, dates: usize) -> Result<(), FeatureError> {
        if self.to != self.from + 1 || self.to >= dates {
            return Err(FeatureError::BadTransition { from: self.from, to: self.to, dates });
        }
        Ok(())
    }
}

impl std::fmt::Display for Transition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

/// Frozen description of how features are assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLayout {
    pub class_count: usize,
    pub neighborhood: NeighborhoodSpec,
    pub env: Vec<EnvFeature>,
}

impl FeatureLayout {
    /// Fit standardization statistics over `positions` (the estimation pixels).
    pub fn fit(d: &Dataset, neighborhood: NeighborhoodSpec, positions: &[(usize, usize)]) -> Self {
        let env = d
            .env_layers
            .iter()
            .map(|layer| {
                let encoding = match layer.kind {
                    EnvKind::Categorical { category_count } => EnvEncoding::Categorical { category_count },
                    EnvKind::Numeric => {
                        let vals: Vec<f64> = positions.iter().filter_map(|&(i, j)| layer.get(i, j)).collect();
                        let (mean, scale) = mean_and_scale(&vals);
                        EnvEncoding::Numeric { mean, scale }
                    }
                };
                EnvFeature { name: layer.name.clone(), encoding }
            })
            .collect();
        Self { class_count: d.class_count(), neighborhood, env }
    }

    pub fn env_width(&self) -> usize {
        self.env.iter().map(|e| e.encoding.width()).sum()
    }

    /// Total feature width `q = 2K + q_env`.
    pub fn width(&self) -> usize {
        2 * self.class_count + self.env_width()
    }

    pub fn check_dataset(&self, d: &Dataset) -> Result<(), FeatureError> {
        if d.class_count() != self.class_count {
            return Err(FeatureError::LayoutMismatch { expected: self.class_count, found: d.class_count() });
        }
        if d.env_layers.len() != self.env.len() || d.env_width() != self.env_width() {
            return Err(FeatureError::LayoutMismatch { expected: self.env.len(), found: d.env_layers.len() });
        }
        Ok(())
    }

    /// Features of pixel `pos` predicting date `t` (built from date `t - 1`).
    pub fn assemble(&self, d: &Dataset, t: usize, pos: (usize, usize)) -> Result<FeatureVector, FeatureError> {
        if t == 0 || t > d.dates() {
            return Err(FeatureError::BadTransition { from: t.wrapping_sub(1), to: t, dates: d.dates() });
        }
        self.builder(d, t - 1)?.features(pos.0, pos.1)
    }

    /// Builder for many pixels of the same source date.
    pub fn builder<'a>(&'a self, d: &'a Dataset, source_date: usize) -> Result<FeatureBuilder<'a>, FeatureError> {
        self.check_dataset(d)?;
        let cover = &d.covers[source_date];
        let integral = match self.neighborhood.weighting {
            Weighting::Counts => Some(ClassIntegral::new(cover, self.class_count)),
            Weighting::ExpDistance => None,
        };
        Ok(FeatureBuilder { layout: self, dataset: d, cover, integral, kernel: self.neighborhood.kernel() })
    }
}

fn mean_and_scale(vals: &[f64]) -> (f64, f64) {
    if vals.is_empty() {
        return (0.0, 0.0);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    // Constant layers (up to rounding) carry no information.
    if sd <= 1e-12 * mean.abs().max(1.0) {
        (mean, 0.0)
    } else {
        (mean, sd)
    }
}

/// Assembles feature vectors from one source cover.
pub struct FeatureBuilder<'a> {
    layout: &'a FeatureLayout,
    dataset: &'a Dataset,
    cover: &'a LandCoverGrid,
    integral: Option<ClassIntegral>,
    kernel: Vec<(isize, isize, f64)>,
}

impl FeatureBuilder<'_> {
    pub fn features(&self, i: usize, j: usize) -> Result<FeatureVector, FeatureError> {
        if i >= self.cover.rows() || j >= self.cover.cols() {
            return Err(FeatureError::OutOfBounds(i, j));
        }
        let prev = self.cover.get(i, j).ok_or(FeatureError::Nodata(i, j))?;
        let k = self.layout.class_count;
        let mut values = vec![0.0; self.layout.width()];
        values[prev.index()] = 1.0;
        let neigh = &mut values[k..2 * k];
        let valid = match &self.integral {
            Some(integral) => {
                integral.window(i, j, self.layout.neighborhood.size(), neigh);
                neigh[prev.index()] -= 1.0;
                neigh.iter().sum::<f64>() as usize
            }
            None => kernel_frequencies(self.cover, (i, j), &self.kernel, self.layout.neighborhood.weighting, neigh),
        };
        let mut off = 2 * k;
        for (feat, layer) in self.layout.env.iter().zip(&self.dataset.env_layers) {
            match feat.encoding {
                EnvEncoding::Numeric { mean, scale } => {
                    if let (Some(v), true) = (layer.get(i, j), scale > 0.0) {
                        values[off] = (v - mean) / scale;
                    }
                    off += 1;
                }
                EnvEncoding::Categorical { category_count } => {
                    if let Some(c) = layer.category(i, j) {
                        if (1..=category_count).contains(&c) {
                            values[off + c as usize - 1] = 1.0;
                        }
                    }
                    off += category_count as usize;
                }
            }
        }
        Ok(FeatureVector { values, class_count: k, degenerate: valid == 0 })
    }
}

/// Sampling options for [`build_training_set`].
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingOptions {
    pub frontier_only: bool,
    pub frontier_order: usize,
    pub max_samples: Option<usize>,
    pub seed: u64,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self { frontier_only: true, frontier_order: 4, max_samples: None, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub samples: Vec<Sample>,
    pub layout: FeatureLayout,
    /// Eligible pixels before subsampling.
    pub eligible: usize,
}

/// Eligible `(to_date, i, j)` triples in transition order, then row-major.
pub fn eligible_pixels(
    d: &Dataset,
    transitions: &[Transition],
    opts: &SamplingOptions,
) -> Result<Vec<(usize, usize, usize)>, FeatureError> {
    let mut out = Vec::new();
    for tr in transitions {
        tr.check(d.dates())?;
        let src = &d.covers[tr.from];
        let dst = &d.covers[tr.to];
        let frontier = opts.frontier_only.then(|| frontier_pixels(src, opts.frontier_order));
        for i in 0..src.rows() {
            for j in 0..src.cols() {
                if src.get(i, j).is_none() || dst.get(i, j).is_none() {
                    continue;
                }
                if frontier.as_ref().is_some_and(|m| !m.get(i, j)) {
                    continue;
                }
                out.push((tr.to, i, j));
            }
        }
    }
    Ok(out)
}

/// Collect training samples for `transitions` and fit the feature layout on them.
pub fn build_training_set(
    d: &Dataset,
    transitions: &[Transition],
    spec: NeighborhoodSpec,
    opts: &SamplingOptions,
) -> Result<TrainingSet, FeatureError> {
    let chosen = choose_pixels(d, transitions, opts)?;
    let positions: Vec<(usize, usize)> = chosen.pixels.iter().map(|&(_, i, j)| (i, j)).collect();
    let layout = FeatureLayout::fit(d, spec, &positions);
    let samples = assemble_samples(d, &layout, &chosen.pixels)?;
    Ok(TrainingSet { samples, layout, eligible: chosen.eligible })
}

/// Samples for `transitions` under an already-fitted layout.
pub fn build_samples(
    d: &Dataset,
    transitions: &[Transition],
    layout: &FeatureLayout,
    opts: &SamplingOptions,
) -> Result<Vec<Sample>, FeatureError> {
    let chosen = choose_pixels(d, transitions, opts)?;
    assemble_samples(d, layout, &chosen.pixels)
}

struct Chosen {
    pixels: Vec<(usize, usize, usize)>,
    eligible: usize,
}

fn choose_pixels(d: &Dataset, transitions: &[Transition], opts: &SamplingOptions) -> Result<Chosen, FeatureError> {
    let all = eligible_pixels(d, transitions, opts)?;
    if all.is_empty() {
        return Err(FeatureError::EmptyEligible);
    }
    let eligible = all.len();
    let pixels = match opts.max_samples {
        Some(n) if n < all.len() => {
            let mut rng = SplitMix64::new(opts.seed);
            rng.sample_indices(all.len(), n).into_iter().map(|idx| all[idx]).collect()
        }
        _ => all,
    };
    Ok(Chosen { pixels, eligible })
}

fn assemble_samples(
    d: &Dataset,
    layout: &FeatureLayout,
    pixels: &[(usize, usize, usize)],
) -> Result<Vec<Sample>, FeatureError> {
    let mut dates: Vec<usize> = pixels.iter().map(|p| p.0).collect();
    dates.sort_unstable();
    dates.dedup();
    let builders = dates
        .iter()
        .map(|&t| layout.builder(d, t - 1).map(|b| (t, b)))
        .collect::<Result<Vec<_>, _>>()?;
    pixels
        .par_iter()
        .map(|&(t, i, j)| {
            let (_, b) = builders.iter().find(|(bt, _)| *bt == t).expect("builder for date");
            let x = b.features(i, j)?;
            let target = d.covers[t].get(i, j).ok_or(FeatureError::Nodata(i, j))?;
            Ok(Sample { x, target, position: (i, j), date_index: t })
        })
        .collect()
}

/// CSV dump with header `i,j,t,target,x0..x{q-1}`.
pub fn write_samples_csv<W: Write>(samples: &[Sample], mut w: W) -> Result<(), FeatureError> {
    let q = samples.first().map_or(0, |s| s.x.len());
    write!(w, "i,j,t,target")?;
    for c in 0..q {
        write!(w, ",x{c}")?;
    }
    writeln!(w)?;
    for s in samples {
        write!(w, "{},{},{},{}", s.position.0, s.position.1, s.date_index, s.target)?;
        for v in &s.x.values {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
