mod common;

use common::*;
use proptest::prelude::*;
use terracast::features::FeatureVector;
use terracast::mlp::{forward, grad, loss, predict, train, MlpWeights, TrainConfig};
use terracast::rng::SplitMix64;

#[test]
fn forward_examples() {
    assert_eq!(forward(&MlpWeights::zeros(3, 4, 2), &[1.0, -2.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    let mut w = MlpWeights::zeros(3, 4, 2);
    w.w2.iter_mut().for_each(|v| *v = 1.0);
    assert_eq!(forward(&w, &[0.3, 0.1, 9.0]).unwrap(), vec![2.0, 2.0]);
    let mut rng = SplitMix64::new(1);
    let w = random_weights(&mut rng, 5, 4, 3);
    for _ in 0..10 {
        let x: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
        for (a, b) in forward(&w, &x).unwrap().iter().zip(naive_forward(&w, &x)) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn loss_examples() {
    let mut rng = SplitMix64::new(2);
    let samples = mlp_samples(&mut rng, 3, 4, 12);
    assert_eq!(loss(&MlpWeights::zeros(3, 2, 4), &samples).unwrap(), 12.0);

    // One hidden unit saturated at 1 reproduces class 1 exactly.
    let mut w = MlpWeights::zeros(3, 1, 2);
    w.b1[0] = 800.0;
    w.w2 = vec![1.0, 0.0];
    let first: Vec<_> =
        samples.iter().map(|s| sample(FeatureVector { class_count: 2, ..s.x.clone() }, 0, 0)).collect();
    assert_eq!(loss(&w, &first).unwrap(), 0.0);

    let w = random_weights(&mut rng, 3, 3, 4);
    assert!((loss(&w, &samples).unwrap() - naive_loss(&w, &samples)).abs() <= 1e-10);
}

#[test]
fn gradient_examples() {
    let mut rng = SplitMix64::new(3);
    let samples = mlp_samples(&mut rng, 4, 2, 20);
    let w = random_weights(&mut rng, 4, 3, 2);
    let f = |c: &[f64]| loss(&MlpWeights::from_flat(4, 3, 2, c), &samples).unwrap();
    let g = grad(&w, &samples).unwrap().to_flat();
    assert!(rel_err(&g, &central_diff(f, &w.to_flat(), 1e-5)) <= 1e-6);

    // With w2 = 0 the outputs vanish and the w2 gradient is -2 sum target * hidden.
    let mut z = w.clone();
    z.w2.iter_mut().for_each(|v| *v = 0.0);
    let gz = grad(&z, &samples).unwrap();
    for k in 0..2 {
        for i in 0..3 {
            let want: f64 = samples
                .iter()
                .filter(|s| s.target.index() == k)
                .map(|s| {
                    let a: f64 = (0..4).map(|j| z.w1[i * 4 + j] * s.x.values[j]).sum::<f64>() + z.b1[i];
                    -2.0 * sigmoid(a)
                })
                .sum();
            assert!((gz.w2[k * 3 + i] - want).abs() <= 1e-12);
        }
    }

    let doubled: Vec<_> = samples.iter().chain(&samples).cloned().collect();
    let g2 = grad(&w, &doubled).unwrap().to_flat();
    for (a, b) in g2.iter().zip(&g) {
        assert!((a - 2.0 * b).abs() <= 1e-12 * b.abs().max(1.0));
    }
}

fn accuracy(w: &MlpWeights, samples: &[terracast::Sample]) -> f64 {
    samples.iter().filter(|s| predict(w, &s.x.values).unwrap() == s.target).count() as f64 / samples.len() as f64
}

fn points(rng: &mut SplitMix64, n: usize, label: impl Fn(f64, f64) -> usize) -> Vec<terracast::Sample> {
    (0..n)
        .map(|i| {
            let (a, b) = (rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
            let x = FeatureVector { values: vec![a, b], class_count: 2, degenerate: false };
            sample(x, label(a, b), i)
        })
        .collect()
}

#[test]
fn separable_set_is_learned() {
    let mut rng = SplitMix64::new(4);
    let samples = points(&mut rng, 200, |a, b| usize::from(a + b > 0.0));
    let cfg = TrainConfig { hidden: 2, learning_rate: 0.5, max_epochs: 3000, patience: 200, ..Default::default() };
    let (w, _) = train(&samples, &cfg).unwrap();
    assert!(accuracy(&w, &samples) >= 0.95);
}

#[test]
fn xor_set_needs_hidden_units() {
    let mut rng = SplitMix64::new(5);
    let cells = |a: f64, b: f64| usize::from((a > 0.0) != (b > 0.0));
    let samples: Vec<_> = points(&mut rng, 400, cells).into_iter().filter(|s| s.x.values.iter().all(|v| v.abs() > 0.1)).collect();
    let cfg = TrainConfig { hidden: 4, learning_rate: 0.5, max_epochs: 5000, patience: 300, restarts: 5, ..Default::default() };
    let (w, _) = train(&samples, &cfg).unwrap();
    assert!(accuracy(&w, &samples) >= 0.95);

    // Any half-plane labels at most 3 of the 4 quadrant centres correctly.
    let corners = [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)];
    let mut best = 0;
    for side in 0..2 {
        for deg in 0..360 {
            let t = f64::from(deg).to_radians();
            for off in -20..=20 {
                let c = f64::from(off) / 10.0;
                let hits = corners
                    .iter()
                    .filter(|&&(a, b)| usize::from((t.cos() * a + t.sin() * b > c) ^ (side == 1)) == cells(a, b))
                    .count();
                best = best.max(hits);
            }
        }
    }
    assert_eq!(best, 3);
}

#[test]
fn prediction_examples() {
    let mut w = MlpWeights::zeros(1, 1, 2);
    w.b1[0] = 800.0;
    w.w2 = vec![0.1, 0.9];
    assert_eq!(predict(&w, &[0.0]).unwrap().get(), 2);
    w.w2 = vec![0.4, 0.4];
    assert_eq!(predict(&w, &[0.0]).unwrap().get(), 1);
}

#[test]
fn training_report_contracts() {
    let mut rng = SplitMix64::new(6);
    let samples = points(&mut rng, 120, |a, b| usize::from(a * b > 0.0));
    let cfg = TrainConfig { hidden: 3, restarts: 3, learning_rate: 0.5, max_epochs: 400, ..Default::default() };
    let (w1, r1) = train(&samples, &cfg).unwrap();
    let (w2, r2) = train(&samples, &cfg).unwrap();
    assert_eq!(w1, w2);
    assert_eq!(r1, r2);
    for r in &r1.restarts {
        let best = r.validation_history[r.best_epoch];
        assert_eq!(best, r.best_validation_loss);
        assert!(r.validation_history.iter().all(|v| best <= *v));
    }
    let chosen = r1.restarts[r1.best_restart].best_validation_loss;
    assert!(r1.restarts.iter().filter(|r| !r.failed).all(|r| chosen <= r.best_validation_loss));

    let mut reversed = samples.clone();
    reversed.reverse();
    assert_eq!(train(&reversed, &cfg).unwrap().0, w1);
}

#[test]
fn divergent_rate_fails_every_restart() {
    let mut rng = SplitMix64::new(7);
    let samples = points(&mut rng, 40, |a, _| usize::from(a > 0.0));
    let cfg = TrainConfig { learning_rate: 1e200, restarts: 2, max_epochs: 50, patience: 10, ..Default::default() };
    assert!(train(&samples, &cfg).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), q in 1usize..7, hidden in 1usize..6, k in 2usize..4) {
        let mut rng = SplitMix64::new(seed);
        let n = 1 + rng.below(30) as usize;
        let samples = mlp_samples(&mut rng, q, k, n);
        let w = random_weights(&mut rng, q, hidden, k);
        let f = |c: &[f64]| loss(&MlpWeights::from_flat(q, hidden, k, c), &samples).unwrap();
        let g = grad(&w, &samples).unwrap().to_flat();
        prop_assert!(rel_err(&g, &central_diff(f, &w.to_flat(), 1e-5)) <= 1e-6);
    }

    #[test]
    fn output_shift_keeps_prediction(seed in any::<u64>(), shift in -5.0f64..5.0) {
        let mut rng = SplitMix64::new(seed);
        let mut w = random_weights(&mut rng, 3, 1, 3);
        w.b1[0] = 800.0;
        let x = [rng.normal(), rng.normal(), rng.normal()];
        let before = predict(&w, &x).unwrap();
        w.w2.iter_mut().for_each(|v| *v += shift);
        prop_assert_eq!(predict(&w, &x).unwrap(), before);
    }
}
