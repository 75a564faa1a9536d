//! Penalized polychotomous (multinomial logistic) regression.
//!
//! For a feature vector `x = [onehot | neigh | env]` the linear predictor of
//! class `k < K` is
//!
//! ```text
//! theta_k = alpha_k + sum_l beta_{k,l} * neigh_l + sum_r gamma_{k,r} * z_r
//! ```
//!
//! where `z = onehot ++ env` (so `p = K + q_env` gamma columns) and class `K`
//! is the reference with `theta_K = 0`. Probabilities are the softmax of
//! `theta`. The fitted objective is the log-likelihood minus
//! `eps * sum_n sum_k u_nk^2`, with `u_nk = theta_k(x_n) - mean_k' theta_k'(x_n)`
//! taken over all `K` classes including the reference.
//!
//! Parameters are flattened as `alpha` (K-1), then `beta` row-major
//! ((K-1) x K), then `gamma` row-major ((K-1) x p): `M = K^2 + (K-1) p - 1`
//! scalars.

use thiserror::Error;

use crate::argmax;
use crate::features::Sample;
use crate::grid::ClassId;
use crate::linalg::{cholesky_solve, SquareMatrix};

#[derive(Debug, Error)]
pub enum PolyregError {
    #[error("feature width {found} does not match model width {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("at least 2 classes are required")]
    TooFewClasses,
    #[error("no samples")]
    NoSamples,
    #[error("sample target {0} outside 1..=K")]
    Target(ClassId),
    #[error("{expected} parameters expected, {found} given")]
    ParamCount { expected: usize, found: usize },
    #[error("objective is not finite")]
    NonFinite,
    #[error("Newton system stayed singular after damping ramp (iteration {0})")]
    Singular(usize),
}

/// Number of free parameters `K^2 + (K-1) p - 1`.
pub fn param_count(class_count: usize, p: usize) -> usize {
    class_count * class_count + (class_count - 1) * p - 1
}

/// Coefficients `(alpha, beta, gamma)` with the reference class pinned to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyregParams {
    class_count: usize,
    p: usize,
    coef: Vec<f64>,
}

impl PolyregParams {
    /// All-zero parameters (the uniform model).
    pub fn zeros(class_count: usize, p: usize) -> Result<Self, PolyregError> {
        if class_count < 2 {
            return Err(PolyregError::TooFewClasses);
        }
        Ok(Self { class_count, p, coef: vec![0.0; param_count(class_count, p)] })
    }

    pub fn from_flat(class_count: usize, p: usize, coef: Vec<f64>) -> Result<Self, PolyregError> {
        let mut out = Self::zeros(class_count, p)?;
        if coef.len() != out.coef.len() {
            return Err(PolyregError::ParamCount { expected: out.coef.len(), found: coef.len() });
        }
        out.coef = coef;
        Ok(out)
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Number of gamma columns.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Expected feature width `q = K + p`.
    pub fn feature_width(&self) -> usize {
        self.class_count + self.p
    }

    pub fn flat(&self) -> &[f64] {
        &self.coef
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.coef
    }

    pub fn len(&self) -> usize {
        self.coef.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coef.is_empty()
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.coef[k]
    }

    pub fn beta(&self, k: usize, l: usize) -> f64 {
        self.coef[self.class_count - 1 + k * self.class_count + l]
    }

    pub fn gamma(&self, k: usize, r: usize) -> f64 {
        let kk = self.class_count;
        self.coef[(kk - 1) + (kk - 1) * kk + k * self.p + r]
    }

    pub fn set_alpha(&mut self, k: usize, v: f64) {
        self.coef[k] = v;
    }

    pub fn set_beta(&mut self, k: usize, l: usize, v: f64) {
        let kk = self.class_count;
        self.coef[kk - 1 + k * kk + l] = v;
    }

    pub fn set_gamma(&mut self, k: usize, r: usize, v: f64) {
        let kk = self.class_count;
        self.coef[(kk - 1) + (kk - 1) * kk + k * self.p + r] = v;
    }

    /// Design width `1 + K + p` (intercept, neighbourhood block, gamma block).
    fn design_width(&self) -> usize {
        1 + self.class_count + self.p
    }

    /// Flat index of the coefficient of class `k` on design column `j`.
    fn index(&self, k: usize, j: usize) -> usize {
        let kk = self.class_count;
        if j == 0 {
            k
        } else if j <= kk {
            kk - 1 + k * kk + (j - 1)
        } else {
            (kk - 1) + (kk - 1) * kk + k * self.p + (j - 1 - kk)
        }
    }

    /// Coefficients arranged per class over design columns, `(K-1) x D`.
    fn design_weights(&self, flat: &[f64]) -> Vec<f64> {
        let dw = self.design_width();
        let mut w = vec![0.0; (self.class_count - 1) * dw];
        for k in 0..self.class_count - 1 {
            for j in 0..dw {
                w[k * dw + j] = flat[self.index(k, j)];
            }
        }
        w
    }

    fn check_width(&self, found: usize) -> Result<(), PolyregError> {
        if found != self.feature_width() || self.p < self.class_count {
            return Err(PolyregError::Dimension { expected: self.feature_width(), found });
        }
        Ok(())
    }

    /// Design row `[1, neigh, onehot, env]` for a feature vector.
    fn design_row(&self, x: &[f64], out: &mut [f64]) {
        let k = self.class_count;
        out[0] = 1.0;
        out[1..=k].copy_from_slice(&x[k..2 * k]);
        out[k + 1..2 * k + 1].copy_from_slice(&x[..k]);
        out[2 * k + 1..].copy_from_slice(&x[2 * k..]);
    }
}

/// Linear predictors `theta` (length `K`, last entry exactly 0).
pub fn theta(params: &PolyregParams, x: &[f64]) -> Result<Vec<f64>, PolyregError> {
    params.check_width(x.len())?;
    let mut d = vec![0.0; params.design_width()];
    params.design_row(x, &mut d);
    let mut out = vec![0.0; params.class_count];
    for (k, t) in out.iter_mut().enumerate().take(params.class_count - 1) {
        *t = d.iter().enumerate().map(|(j, v)| params.coef[params.index(k, j)] * v).sum();
    }
    Ok(out)
}

/// Softmax with max subtraction.
pub fn softmax(theta: &[f64]) -> Vec<f64> {
    let m = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = theta.iter().map(|t| (t - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn class_probs(params: &PolyregParams, x: &[f64]) -> Result<Vec<f64>, PolyregError> {
    Ok(softmax(&theta(params, x)?))
}

/// Maximum rule, ties to the smallest class.
pub fn predict(params: &PolyregParams, x: &[f64]) -> Result<ClassId, PolyregError> {
    Ok(ClassId::from_index(argmax(&class_probs(params, x)?)))
}

/// Samples packed as design rows.
struct Problem {
    params: PolyregParams,
    dw: usize,
    design: Vec<f64>,
    targets: Vec<usize>,
}

impl Problem {
    fn new(samples: &[Sample]) -> Result<Self, PolyregError> {
        let first = samples.first().ok_or(PolyregError::NoSamples)?;
        let k = first.x.class_count;
        let q = first.x.len();
        let p = q.checked_sub(k).ok_or(PolyregError::Dimension { expected: 2 * k, found: q })?;
        Self::with_params(PolyregParams::zeros(k, p)?, samples)
    }

    fn with_params(params: PolyregParams, samples: &[Sample]) -> Result<Self, PolyregError> {
        if samples.is_empty() {
            return Err(PolyregError::NoSamples);
        }
        let dw = params.design_width();
        let mut design = vec![0.0; samples.len() * dw];
        let mut targets = Vec::with_capacity(samples.len());
        for (n, s) in samples.iter().enumerate() {
            params.check_width(s.x.len())?;
            if s.target.index() >= params.class_count {
                return Err(PolyregError::Target(s.target));
            }
            params.design_row(&s.x.values, &mut design[n * dw..(n + 1) * dw]);
            targets.push(s.target.index());
        }
        Ok(Self { params, dw, design, targets })
    }

    /// Objective, and optionally gradient and Hessian, at flat parameters `flat`.
    fn evaluate(&self, flat: &[f64], eps: f64, grad: bool, hess: bool) -> Evaluation {
        let kk = self.params.class_count;
        let km = kk - 1;
        let dw = self.dw;
        let w = self.params.design_weights(flat);
        let mut value = 0.0;
        let mut g = if grad { vec![0.0; km * dw] } else { Vec::new() };
        let mut h = if hess { vec![0.0; km * dw * km * dw] } else { Vec::new() };
        let mut th = vec![0.0; kk];
        let mut pr = vec![0.0; kk];
        let mut outer = vec![0.0; dw * dw];
        let inv_k = 1.0 / kk as f64;
        for (n, &y) in self.targets.iter().enumerate() {
            let d = &self.design[n * dw..(n + 1) * dw];
            for k in 0..km {
                th[k] = w[k * dw..(k + 1) * dw].iter().zip(d).map(|(a, b)| a * b).sum();
            }
            th[km] = 0.0;
            let m = th.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for k in 0..kk {
                pr[k] = (th[k] - m).exp();
                s += pr[k];
            }
            let mean = th.iter().sum::<f64>() * inv_k;
            let pen: f64 = th.iter().map(|t| (t - mean) * (t - mean)).sum();
            value += th[y] - m - s.ln() - eps * pen;
            if !grad && !hess {
                continue;
            }
            pr.iter_mut().for_each(|v| *v /= s);
            if grad {
                for k in 0..km {
                    let r = f64::from(u8::from(y == k)) - pr[k] - 2.0 * eps * (th[k] - mean);
                    for (gj, dj) in g[k * dw..(k + 1) * dw].iter_mut().zip(d) {
                        *gj += r * dj;
                    }
                }
            }
            if hess {
                for a in 0..dw {
                    for b in 0..dw {
                        outer[a * dw + b] = d[a] * d[b];
                    }
                }
                let row = km * dw;
                for k in 0..km {
                    for mm in 0..km {
                        let delta = f64::from(u8::from(k == mm));
                        let coef = pr[k] * (delta - pr[mm]) + 2.0 * eps * (delta - inv_k);
                        for a in 0..dw {
                            let base = (k * dw + a) * row + mm * dw;
                            for b in 0..dw {
                                h[base + b] -= coef * outer[a * dw + b];
                            }
                        }
                    }
                }
            }
        }
        let gradient = grad.then(|| {
            let mut out = vec![0.0; flat.len()];
            for k in 0..km {
                for j in 0..dw {
                    out[self.params.index(k, j)] = g[k * dw + j];
                }
            }
            out
        });
        let hessian = hess.then(|| {
            let mut out = SquareMatrix::zeros(flat.len());
            let row = km * dw;
            for k in 0..km {
                for a in 0..dw {
                    let fi = self.params.index(k, a);
                    for mm in 0..km {
                        for b in 0..dw {
                            let fj = self.params.index(mm, b);
                            out.data[fi * flat.len() + fj] = h[(k * dw + a) * row + mm * dw + b];
                        }
                    }
                }
            }
            out
        });
        Evaluation { value, gradient, hessian }
    }

    /// Objective change from `from` to `to`, summed per sample from the
    /// predictor differences so that small increments are not lost to
    /// cancellation between two large totals.
    fn increase(&self, from: &[f64], to: &[f64], eps: f64) -> f64 {
        let kk = self.params.class_count;
        let km = kk - 1;
        let dw = self.dw;
        let w = self.params.design_weights(from);
        let diff: Vec<f64> = to.iter().zip(from).map(|(a, b)| a - b).collect();
        let dwt = self.params.design_weights(&diff);
        let mut th = vec![0.0; kk];
        let mut dth = vec![0.0; kk];
        let mut pr = vec![0.0; kk];
        let inv_k = 1.0 / kk as f64;
        let mut total = 0.0;
        for (n, &y) in self.targets.iter().enumerate() {
            let d = &self.design[n * dw..(n + 1) * dw];
            for k in 0..km {
                th[k] = w[k * dw..(k + 1) * dw].iter().zip(d).map(|(a, b)| a * b).sum();
                dth[k] = dwt[k * dw..(k + 1) * dw].iter().zip(d).map(|(a, b)| a * b).sum();
            }
            th[km] = 0.0;
            dth[km] = 0.0;
            let m = th.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for k in 0..kk {
                pr[k] = (th[k] - m).exp();
                s += pr[k];
            }
            let big = dth.iter().any(|v| v.abs() > 1.0);
            let d_lse = if big {
                let m2 = th.iter().zip(&dth).map(|(a, b)| a + b).fold(f64::NEG_INFINITY, f64::max);
                let s2: f64 = th.iter().zip(&dth).map(|(a, b)| (a + b - m2).exp()).sum();
                (m2 + s2.ln()) - (m + s.ln())
            } else {
                (pr.iter().zip(&dth).map(|(p, v)| p * v.exp_m1()).sum::<f64>() / s).ln_1p()
            };
            let mean = th.iter().sum::<f64>() * inv_k;
            let d_mean = dth.iter().sum::<f64>() * inv_k;
            let d_pen: f64 = th
                .iter()
                .zip(&dth)
                .map(|(t, dt)| {
                    let du = dt - d_mean;
                    du * (2.0 * (t - mean) + du)
                })
                .sum();
            total += dth[y] - d_lse - eps * d_pen;
        }
        total
    }
}

struct Evaluation {
    value: f64,
    gradient: Option<Vec<f64>>,
    hessian: Option<SquareMatrix>,
}

/// `sum_n log P(c_n | x_n) - eps * sum_n sum_k u_nk^2`.
pub fn penalized_loglik(params: &PolyregParams, samples: &[Sample], eps: f64) -> Result<f64, PolyregError> {
    let prob = Problem::with_params(params.clone(), samples)?;
    Ok(prob.evaluate(params.flat(), eps, false, false).value)
}

/// Gradient of [`penalized_loglik`] in flat parameter order.
pub fn penalized_grad(params: &PolyregParams, samples: &[Sample], eps: f64) -> Result<Vec<f64>, PolyregError> {
    let prob = Problem::with_params(params.clone(), samples)?;
    Ok(prob.evaluate(params.flat(), eps, true, false).gradient.expect("gradient requested"))
}

/// Hessian of [`penalized_loglik`] in flat parameter order.
pub fn penalized_hessian(params: &PolyregParams, samples: &[Sample], eps: f64) -> Result<SquareMatrix, PolyregError> {
    let prob = Problem::with_params(params.clone(), samples)?;
    Ok(prob.evaluate(params.flat(), eps, false, true).hessian.expect("hessian requested"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Stop when the largest absolute gradient entry is at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Unused by the deterministic Newton solver.
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 100, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub converged: bool,
    pub iterations: usize,
    pub final_objective: f64,
    pub gradient_norm: f64,
    pub step_halvings: usize,
    /// Iterations that needed a diagonal shift to make the system definite.
    pub damped_iterations: usize,
    /// Objective at `delta = 0` followed by the running sum of the increments
    /// of each accepted iteration.
    pub objective_trace: Vec<f64>,
}

const MAX_HALVINGS: usize = 30;
const MAX_RAMPS: usize = 40;
// A rejected step uses up several factorization ramps at once.
const STEP_RAMP_COST: usize = 5;
const PIVOT_FLOOR: f64 = 1e-13;

/// `D^-1/2 A D^-1/2` and the `sqrt(diag)` factors, for `A = -H`.
fn jacobi_scaled(h: SquareMatrix) -> (SquareMatrix, Vec<f64>) {
    let n = h.n;
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let v = -h.get(i, i);
            if v > 0.0 && v.is_finite() { v.sqrt() } else { 1.0 }
        })
        .collect();
    let mut out = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out.data[i * n + j] = -h.get(i, j) / (d[i] * d[j]);
        }
    }
    (out, d)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Maximize the penalized log-likelihood by damped Newton-Raphson from `delta = 0`.
///
/// Each step solves `(-H + lambda D) step = g` with `D = diag(-H)`, in
/// Jacobi-scaled form. `lambda = 0` unless the Cholesky factorization fails
/// or no halving of the step keeps the objective from decreasing; then
/// `lambda` ramps geometrically.
pub fn fit(samples: &[Sample], eps: f64, opts: &FitOptions) -> Result<(PolyregParams, FitReport), PolyregError> {
    let prob = Problem::new(samples)?;
    let mut params = prob.params.clone();
    let mut ev = prob.evaluate(params.flat(), eps, true, true);
    if !ev.value.is_finite() {
        return Err(PolyregError::NonFinite);
    }
    let mut report = FitReport {
        converged: false,
        iterations: 0,
        final_objective: ev.value,
        gradient_norm: f64::INFINITY,
        step_halvings: 0,
        damped_iterations: 0,
        objective_trace: vec![ev.value],
    };
    loop {
        let g = ev.gradient.as_ref().expect("gradient");
        report.gradient_norm = inf_norm(g);
        if report.gradient_norm <= opts.tol {
            report.converged = true;
            break;
        }
        if report.iterations >= opts.max_iter {
            break;
        }
        report.iterations += 1;
        let neg_h = jacobi_scaled(ev.hessian.take().expect("hessian"));
        let scaled_g: Vec<f64> = g.iter().zip(&neg_h.1).map(|(v, d)| v / d).collect();
        let mut lambda = 0.0;
        let mut ramps = 0;
        let mut accepted = None;
        let mut solved = false;
        let mut trial = params.clone();
        while accepted.is_none() && ramps < MAX_RAMPS {
            let Some(y) = cholesky_solve(&neg_h.0, lambda, &scaled_g, PIVOT_FLOOR) else {
                lambda = if lambda == 0.0 { 1e-10 } else { lambda * 10.0 };
                ramps += 1;
                continue;
            };
            solved = true;
            let step: Vec<f64> = y.iter().zip(&neg_h.1).map(|(v, d)| v / d).collect();
            let mut t = 1.0;
            for _ in 0..=MAX_HALVINGS {
                for ((c, base), s) in trial.coef.iter_mut().zip(&params.coef).zip(&step) {
                    *c = base + t * s;
                }
                let gain = prob.increase(params.flat(), trial.flat(), eps);
                if gain.is_finite() && gain >= 0.0 {
                    accepted = Some(gain);
                    break;
                }
                t *= 0.5;
                report.step_halvings += 1;
            }
            if accepted.is_none() {
                lambda = if lambda == 0.0 { 1e-10 } else { lambda * 100.0 };
                ramps += STEP_RAMP_COST;
            }
        }
        if !solved {
            return Err(PolyregError::Singular(report.iterations));
        }
        if accepted.is_none() {
            // No non-decreasing step exists at floating-point resolution.
            break;
        }
        if lambda > 0.0 {
            report.damped_iterations += 1;
        }
        let gain = accepted.unwrap_or(0.0);
        params = trial;
        ev = prob.evaluate(params.flat(), eps, true, true);
        if !ev.value.is_finite() {
            return Err(PolyregError::NonFinite);
        }
        let last = *report.objective_trace.last().expect("trace starts non-empty");
        report.objective_trace.push(last + gain);
        let stalled = gain == 0.0;
        if stalled {
            report.gradient_norm = inf_norm(ev.gradient.as_ref().expect("gradient"));
            report.converged = report.gradient_norm <= opts.tol;
            break;
        }
    }
    report.final_objective = ev.value;
    if !report.final_objective.is_finite() {
        return Err(PolyregError::NonFinite);
    }
    Ok((params, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;

    fn sample(x: Vec<f64>, k: usize, target: usize) -> Sample {
        Sample {
            x: FeatureVector { values: x, class_count: k, degenerate: false },
            target: ClassId::from_index(target),
            position: (0, 0),
            date_index: 1,
        }
    }

    #[test]
    fn param_counts() {
        assert_eq!(param_count(2, 0), 3);
        assert_eq!(param_count(3, 2), 12);
        assert_eq!(param_count(9, 5), 120);
        let p = PolyregParams::zeros(4, 7).unwrap();
        assert_eq!(p.len(), param_count(4, 7));
    }

    #[test]
    fn zero_params_give_zero_theta() {
        let p = PolyregParams::zeros(3, 4).unwrap();
        assert_eq!(theta(&p, &[1.0, 0.0, 0.0, 2.0, 3.0, 1.0, 0.5]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn alpha_only() {
        let mut p = PolyregParams::zeros(2, 3).unwrap();
        p.set_alpha(0, 1.0);
        assert_eq!(theta(&p, &[0.0, 1.0, 4.0, 4.0, -3.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn width_mismatch() {
        let p = PolyregParams::zeros(2, 2).unwrap();
        assert!(matches!(theta(&p, &[1.0, 0.0, 1.0]), Err(PolyregError::Dimension { .. })));
    }

    #[test]
    fn softmax_properties() {
        assert_eq!(softmax(&[0.0, 0.0, 0.0, 0.0]), vec![0.25; 4]);
        let big = softmax(&[1000.0, 0.0]);
        assert!((big[0] - 1.0).abs() < 1e-15 && big[1] >= 0.0 && big[1] < 1e-300);
        let t = [0.3, -1.2, 2.5];
        let shifted: Vec<f64> = t.iter().map(|v| v + 7.3).collect();
        for (a, b) in softmax(&t).iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_tie_breaks_to_first() {
        assert_eq!(argmax(&[0.2, 0.5, 0.3]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    #[test]
    fn uniform_loglik() {
        let p = PolyregParams::zeros(3, 3).unwrap();
        let s: Vec<Sample> = (0..10).map(|n| sample(vec![1.0, 0.0, 0.0, 1.0, 2.0, 0.0], 3, n % 3)).collect();
        let l = penalized_loglik(&p, &s, 5.0).unwrap();
        assert!((l - 10.0 * (1.0f64 / 3.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn separable_toy_converges() {
        // K=2, one env feature; class 1 below 0, class 2 above.
        let samples: Vec<Sample> = (-10..=10)
            .filter(|&v| v != 0)
            .map(|v| {
                let x = f64::from(v) / 5.0;
                sample(vec![1.0, 0.0, 0.0, 0.0, x], 2, usize::from(v > 0))
            })
            .collect();
        let (params, report) = fit(&samples, 0.1, &FitOptions::default()).unwrap();
        assert!(report.converged);
        assert!(report.gradient_norm <= 1e-8);
        let correct = samples.iter().filter(|s| predict(&params, &s.x.values).unwrap() == s.target).count();
        assert_eq!(correct, samples.len());
        assert!(report.objective_trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn absent_class_with_penalty_stays_finite() {
        let samples: Vec<Sample> =
            (0..20).map(|n| sample(vec![1.0, 0.0, 0.0, 3.0, 5.0, 0.0, f64::from(n)], 3, n as usize % 2)).collect();
        let (params, report) = fit(&samples, 0.1, &FitOptions::default()).unwrap();
        assert!(params.flat().iter().all(|v| v.is_finite()));
        assert!(report.final_objective.is_finite());
    }

    #[test]
    fn increments_agree_with_direct_differences() {
        let samples: Vec<Sample> = (0..30)
            .map(|n| {
                let v = f64::from(n);
                sample(vec![0.0, 1.0, 0.0, (v * 0.7).sin() * 4.0, 2.0, 2.0, v / 10.0], 3, n as usize % 3)
            })
            .collect();
        let prob = Problem::new(&samples).unwrap();
        let from: Vec<f64> = (0..prob.params.len()).map(|i| (i as f64 * 0.37).cos() * 0.3).collect();
        for scale in [2.0, 0.1, 1e-4] {
            let to: Vec<f64> = from.iter().enumerate().map(|(i, v)| v + scale * (i as f64 * 1.3).sin()).collect();
            let direct = prob.evaluate(&to, 0.5, false, false).value - prob.evaluate(&from, 0.5, false, false).value;
            let inc = prob.increase(&from, &to, 0.5);
            assert!((inc - direct).abs() <= 1e-9 * (1.0 + direct.abs()), "{scale}: {inc} vs {direct}");
        }
    }
}
