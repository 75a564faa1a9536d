//! Random instances and naive reference implementations shared by the test targets.
#![allow(dead_code)]

use terracast::features::{FeatureVector, Sample};
use terracast::grid::{ClassId, LandCoverGrid};
use terracast::mlp::MlpWeights;
use terracast::polyreg::PolyregParams;
use terracast::rng::SplitMix64;

/// Random cover with roughly `nodata_share` missing cells.
pub fn random_cover(rng: &mut SplitMix64, rows: usize, cols: usize, classes: usize, nodata_share: f64) -> LandCoverGrid {
    let cells = (0..rows * cols)
        .map(|_| {
            if rng.next_f64() < nodata_share {
                None
            } else {
                Some(ClassId::from_index(rng.below(classes as u64) as usize))
            }
        })
        .collect();
    LandCoverGrid::new(rows, cols, cells).unwrap()
}

/// Random polyreg feature vector: one-hot, neighbour counts summing to 8, normal covariates.
pub fn random_polyreg_x(rng: &mut SplitMix64, classes: usize, env: usize) -> FeatureVector {
    let mut values = vec![0.0; 2 * classes + env];
    values[rng.below(classes as u64) as usize] = 1.0;
    for _ in 0..8 {
        values[classes + rng.below(classes as u64) as usize] += 1.0;
    }
    for v in &mut values[2 * classes..] {
        *v = rng.normal();
    }
    FeatureVector { values, class_count: classes, degenerate: false }
}

pub fn sample(x: FeatureVector, target: usize, n: usize) -> Sample {
    Sample { x, target: ClassId::from_index(target), position: (n, 0), date_index: 1 }
}

pub fn random_params(rng: &mut SplitMix64, classes: usize, p: usize, scale: f64) -> PolyregParams {
    let n = terracast::polyreg::param_count(classes, p);
    PolyregParams::from_flat(classes, p, (0..n).map(|_| rng.uniform(-scale, scale)).collect()).unwrap()
}

/// Naive linear predictor straight from the coefficient accessors.
pub fn naive_theta(params: &PolyregParams, x: &[f64]) -> Vec<f64> {
    let k = params.class_count();
    let mut out = vec![0.0; k];
    for (c, t) in out.iter_mut().enumerate().take(k - 1) {
        *t = params.alpha(c);
        for l in 0..k {
            *t += params.beta(c, l) * x[k + l];
        }
        for r in 0..k {
            *t += params.gamma(c, r) * x[r];
        }
        for r in k..params.p() {
            *t += params.gamma(c, r) * x[k + r];
        }
    }
    out
}

/// Term-by-term penalized log-likelihood.
pub fn naive_loglik(params: &PolyregParams, samples: &[Sample], eps: f64) -> f64 {
    let mut total = 0.0;
    for s in samples {
        let theta = naive_theta(params, &s.x.values);
        let denom: f64 = theta.iter().map(|t| t.exp()).sum();
        total += theta[s.target.index()] - denom.ln();
        let mean = theta.iter().sum::<f64>() / theta.len() as f64;
        total -= eps * theta.iter().map(|t| (t - mean).powi(2)).sum::<f64>();
    }
    total
}

/// Samples drawn from a random multinomial logit.
pub fn logit_samples(rng: &mut SplitMix64, classes: usize, env: usize, n: usize, scale: f64) -> Vec<Sample> {
    let truth = random_params(rng, classes, classes + env, scale);
    (0..n)
        .map(|i| {
            let x = random_polyreg_x(rng, classes, env);
            let probs = terracast::polyreg::class_probs(&truth, &x.values).unwrap();
            let u = rng.next_f64();
            let mut acc = 0.0;
            let mut target = classes - 1;
            for (k, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    target = k;
                    break;
                }
            }
            sample(x, target, i)
        })
        .collect()
}

/// Samples with real-valued inputs and random targets for network checks.
pub fn mlp_samples(rng: &mut SplitMix64, inputs: usize, classes: usize, n: usize) -> Vec<Sample> {
    (0..n)
        .map(|i| {
            let x = FeatureVector { values: (0..inputs).map(|_| rng.normal()).collect(), class_count: classes, degenerate: false };
            sample(x, rng.below(classes as u64) as usize, i)
        })
        .collect()
}

pub fn random_weights(rng: &mut SplitMix64, inputs: usize, hidden: usize, outputs: usize) -> MlpWeights {
    let n = hidden * inputs + hidden + outputs * hidden;
    let flat: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
    MlpWeights::from_flat(inputs, hidden, outputs, &flat)
}

pub fn sigmoid(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

/// Output of the network computed from the raw weight vectors.
pub fn naive_forward(w: &MlpWeights, x: &[f64]) -> Vec<f64> {
    let hidden: Vec<f64> = (0..w.hidden)
        .map(|i| sigmoid((0..w.inputs).map(|j| w.w1[i * w.inputs + j] * x[j]).sum::<f64>() + w.b1[i]))
        .collect();
    (0..w.outputs).map(|k| (0..w.hidden).map(|i| w.w2[k * w.hidden + i] * hidden[i]).sum()).collect()
}

pub fn naive_loss(w: &MlpWeights, samples: &[Sample]) -> f64 {
    samples
        .iter()
        .map(|s| {
            naive_forward(w, &s.x.values)
                .iter()
                .enumerate()
                .map(|(k, o)| (if k == s.target.index() { 1.0 } else { 0.0 } - o).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `max |a - b| / max(max |b|, 1e-12)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(1e-12_f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// Frontier rule by scanning every pair of cells.
pub fn brute_frontier(cover: &LandCoverGrid, order: usize) -> Vec<bool> {
    let (rows, cols) = cover.dims();
    let mut out = vec![false; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let Some(own) = cover.get(i, j) else { continue };
            for a in 0..rows {
                for b in 0..cols {
                    if i.abs_diff(a).max(j.abs_diff(b)) <= order && cover.get(a, b).is_some_and(|c| c != own) {
                        out[i * cols + j] = true;
                    }
                }
            }
        }
    }
    out
}

/// Neighbour counts (or normalized `e^-d` weights) by scanning every cell.
pub fn brute_frequencies(cover: &LandCoverGrid, classes: usize, (i, j): (usize, usize), size: usize, weighted: bool) -> Vec<f64> {
    let (rows, cols) = cover.dims();
    let mut out = vec![0.0; classes];
    let mut total = 0.0;
    for a in 0..rows {
        for b in 0..cols {
            let cheb = i.abs_diff(a).max(j.abs_diff(b));
            if cheb == 0 || cheb > size {
                continue;
            }
            let Some(c) = cover.get(a, b) else { continue };
            let d = ((i.abs_diff(a).pow(2) + j.abs_diff(b).pow(2)) as f64).sqrt();
            let w = if weighted { (-d).exp() } else { 1.0 };
            out[c.index()] += w;
            total += w;
        }
    }
    if weighted && total > 0.0 {
        out.iter_mut().for_each(|v| *v /= total);
    }
    out
}
