mod common;

use common::*;
use proptest::prelude::*;
use terracast::features::FeatureVector;
use terracast::polyreg::{
    class_probs, fit, param_count, penalized_grad, penalized_hessian, penalized_loglik, predict, softmax, theta,
    FitOptions, PolyregParams,
};
use terracast::rng::SplitMix64;

#[test]
fn parameter_counts() {
    assert_eq!(param_count(2, 0), 3);
    assert_eq!(param_count(3, 2), 12);
    assert_eq!(param_count(9, 5), 120);
    for k in 2..6 {
        for p in k..k + 4 {
            assert_eq!(PolyregParams::zeros(k, p).unwrap().len(), param_count(k, p));
        }
    }
}

#[test]
fn theta_examples() {
    let x = vec![0.0, 1.0, 3.0, 5.0];
    let zero = PolyregParams::zeros(2, 2).unwrap();
    assert_eq!(theta(&zero, &x).unwrap(), vec![0.0, 0.0]);
    let mut p = zero.clone();
    p.set_alpha(0, 1.0);
    assert_eq!(theta(&p, &x).unwrap(), vec![1.0, 0.0]);

    let mut rng = SplitMix64::new(1);
    for _ in 0..20 {
        let params = random_params(&mut rng, 3, 5, 1.0);
        let x = random_polyreg_x(&mut rng, 3, 2);
        let got = theta(&params, &x.values).unwrap();
        let want = naive_theta(&params, &x.values);
        assert_eq!(got[2], 0.0);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn probability_examples() {
    assert_eq!(softmax(&[0.0; 4]), vec![0.25; 4]);
    let p = softmax(&[1000.0, 0.0]);
    assert!(p.iter().all(|v| v.is_finite()));
    assert!((p[0] - 1.0).abs() < 1e-15 && p[1] >= 0.0);
}

#[test]
fn likelihood_examples() {
    let mut rng = SplitMix64::new(2);
    let samples = logit_samples(&mut rng, 3, 0, 30, 0.5);
    let zero = PolyregParams::zeros(3, 3).unwrap();
    let l = penalized_loglik(&zero, &samples, 0.7).unwrap();
    assert!((l - 30.0 * (1.0_f64 / 3.0).ln()).abs() < 1e-10);

    let params = random_params(&mut rng, 3, 3, 0.5);
    let unpenalized = naive_loglik(&params, &samples, 0.0);
    assert!((penalized_loglik(&params, &samples, 0.0).unwrap() - unpenalized).abs() < 1e-10);

    let samples = logit_samples(&mut rng, 3, 2, 50, 0.5);
    let params = random_params(&mut rng, 3, 5, 0.5);
    let got = penalized_loglik(&params, &samples, 0.3).unwrap();
    assert!((got - naive_loglik(&params, &samples, 0.3)).abs() < 1e-10);
}

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = SplitMix64::new(3);
    let (k, env, eps) = (3, 2, 0.2);
    let samples = logit_samples(&mut rng, k, env, 50, 0.5);
    let params = random_params(&mut rng, k, k + env, 0.5);
    let f = |c: &[f64]| penalized_loglik(&PolyregParams::from_flat(k, k + env, c.to_vec()).unwrap(), &samples, eps).unwrap();
    let g = penalized_grad(&params, &samples, eps).unwrap();
    assert!(rel_err(&g, &central_diff(f, params.flat(), 1e-5)) <= 1e-6);

    let h = penalized_hessian(&params, &samples, eps).unwrap();
    assert!(h.max_asymmetry() <= 1e-10);
    let n = params.len();
    for i in 0..n {
        let gi = |c: &[f64]| penalized_grad(&PolyregParams::from_flat(k, k + env, c.to_vec()).unwrap(), &samples, eps).unwrap()[i];
        let row: Vec<f64> = (0..n).map(|j| h.get(i, j)).collect();
        assert!(rel_err(&row, &central_diff(gi, params.flat(), 1e-5)) <= 1e-4);
    }
}

fn toy(points: &[(f64, usize)]) -> Vec<terracast::Sample> {
    points
        .iter()
        .enumerate()
        .map(|(n, &(v, c))| {
            let x = FeatureVector { values: vec![1.0, 0.0, 0.0, 0.0, v], class_count: 2, degenerate: false };
            sample(x, c, n)
        })
        .collect()
}

#[test]
fn separable_toy_fits_perfectly() {
    let samples = toy(&[(-3.0, 0), (-2.0, 0), (-1.0, 0), (1.0, 1), (2.0, 1), (3.0, 1)]);
    let (params, report) = fit(&samples, 0.1, &FitOptions::default()).unwrap();
    assert!(report.converged);
    assert!(report.gradient_norm <= 1e-8);
    for s in &samples {
        assert_eq!(predict(&params, &s.x.values).unwrap(), s.target);
    }
}

fn spread(params: &PolyregParams, samples: &[terracast::Sample]) -> f64 {
    samples
        .iter()
        .map(|s| {
            let t = theta(params, &s.x.values).unwrap();
            let m = t.iter().sum::<f64>() / t.len() as f64;
            t.iter().map(|v| (v - m).powi(2)).sum::<f64>()
        })
        .sum()
}

#[test]
fn heavier_penalty_shrinks_spread() {
    let mut rng = SplitMix64::new(4);
    let samples = logit_samples(&mut rng, 3, 1, 60, 2.0);
    let (light, _) = fit(&samples, 0.1, &FitOptions::default()).unwrap();
    let (heavy, _) = fit(&samples, 10.0, &FitOptions::default()).unwrap();
    assert!(spread(&heavy, &samples) < spread(&light, &samples));
}

#[test]
fn absent_class_still_terminates() {
    let mut rng = SplitMix64::new(5);
    let mut samples = logit_samples(&mut rng, 3, 1, 40, 1.0);
    for s in &mut samples {
        if s.target.index() == 2 {
            s.target = terracast::ClassId::from_index(0);
        }
    }
    let (params, report) = fit(&samples, 0.1, &FitOptions::default()).unwrap();
    assert!(params.flat().iter().all(|v| v.is_finite()));
    assert!(report.iterations <= 100);
}

#[test]
fn prediction_examples() {
    // theta (0, ln 2.5, ln 1.5) gives probabilities proportional to (0.2, 0.5, 0.3) after reordering
    let x = vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let mut p = PolyregParams::zeros(3, 3).unwrap();
    p.set_alpha(0, (0.2_f64 / 0.3).ln());
    p.set_alpha(1, (0.5_f64 / 0.3).ln());
    let probs = class_probs(&p, &x).unwrap();
    assert!((probs[1] - 0.5).abs() < 1e-12);
    assert_eq!(predict(&p, &x).unwrap().get(), 2);
    let tie = PolyregParams::zeros(2, 2).unwrap();
    assert_eq!(predict(&tie, &[1.0, 0.0, 0.0, 0.0]).unwrap().get(), 1);
}

#[test]
fn model_file_reproduces_predictions() {
    use terracast::features::{FeatureLayout, NeighborhoodSpec, Weighting};
    use terracast::grid::{ClassId, Dataset, LandCoverGrid};
    use terracast::model::{Model, PolyregModel};
    let g = LandCoverGrid::filled(1, 1, ClassId::from_index(0));
    let d = Dataset { class_names: vec!["a".into(), "b".into(), "c".into()], covers: vec![g.clone(), g], env_layers: vec![] };
    let layout = FeatureLayout::fit(&d, NeighborhoodSpec::new(1, Weighting::Counts).unwrap(), &[]);
    let mut rng = SplitMix64::new(6);
    let params = random_params(&mut rng, 3, 3, 1.0 / 3.0);
    let m = Model::Polyreg(PolyregModel { params, layout, eps: 0.1 });
    let back = Model::parse(&m.to_text()).unwrap();
    assert_eq!(back, m);
}

proptest! {
    #[test]
    fn probabilities_are_normalized_and_shift_invariant(
        theta in prop::collection::vec(-50.0f64..50.0, 2..10),
        shift in -100.0f64..100.0,
    ) {
        let p = softmax(&theta);
        prop_assert!(p.iter().all(|v| *v > 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let moved: Vec<f64> = theta.iter().map(|t| t + shift).collect();
        for (a, b) in p.iter().zip(softmax(&moved)) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn prediction_is_the_largest_probability(seed in any::<u64>(), k in 2usize..6) {
        let mut rng = SplitMix64::new(seed);
        let params = random_params(&mut rng, k, k + 1, 1.0);
        let x = random_polyreg_x(&mut rng, k, 1);
        let probs = class_probs(&params, &x.values).unwrap();
        let cube: Vec<f64> = probs.iter().map(|p| p.powi(3)).collect();
        let best = cube.iter().enumerate().fold(0, |b, (i, v)| if *v > cube[b] { i } else { b });
        prop_assert_eq!(predict(&params, &x.values).unwrap().index(), best);
    }

    #[test]
    fn fit_is_monotone_and_stationary(seed in any::<u64>(), k in 2usize..5, env in 0usize..3) {
        let mut rng = SplitMix64::new(seed);
        let samples = logit_samples(&mut rng, k, env, 60, 0.5);
        let (params, report) = fit(&samples, 0.1, &FitOptions::default()).unwrap();
        prop_assert!(report.objective_trace.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(report.converged);
        let g = penalized_grad(&params, &samples, 0.1).unwrap();
        prop_assert!(g.iter().all(|v| v.abs() <= 1e-8));
    }
}

