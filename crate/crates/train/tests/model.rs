use approx::assert_relative_eq;
use ndarray::Array2;
use onn_core::photonics::nonlinear_product;
use onn_core::OnnError;
use onn_train::model::{cross_entropy, squash, Cache, CLAMP_EPS};
use onn_train::OnnModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_batch(rng: &mut ChaCha8Rng, k: usize, d: usize) -> Array2<f64> {
    Array2::from_shape_fn((k, d), |_| rng.random_range(-0.99..0.99))
}

/// A model with weights in ±0.95 and non-trivial batch-norm parameters.
fn fixture(dims: &[usize], seed: u64) -> OnnModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = OnnModel::new(dims).unwrap();
    for l in &mut m.layers {
        l.weights.mapv_inplace(|_| rng.random_range(-0.95..0.95));
        l.bn_gamma.mapv_inplace(|_| rng.random_range(0.5..1.5));
        l.bn_beta.mapv_inplace(|_| rng.random_range(-0.3..0.3));
        l.bn_running_mean.mapv_inplace(|_| rng.random_range(-1.0..1.0));
        l.bn_running_var.mapv_inplace(|_| rng.random_range(0.5..2.0));
    }
    m
}

#[test]
fn zero_weights_give_minus_input_sum() {
    let m = OnnModel::new(&[5, 3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random_batch(&mut rng, 4, 5);
    let z = onn_train::model::nonlinear_layer(x.view(), m.layers[0].weights.view());
    for r in 0..4 {
        let s: f64 = x.row(r).sum();
        for c in 0..3 {
            assert_relative_eq!(z[[r, c]], -s, epsilon = 1e-12);
        }
    }
}

#[test]
fn single_sample_matches_batch_in_inference() {
    let m = fixture(&[6, 4, 3], 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_batch(&mut rng, 7, 6);
    let (batch, _) = m.forward(x.view(), false).unwrap();
    for r in 0..7 {
        let one = x.row(r).insert_axis(ndarray::Axis(0)).to_owned();
        let (y, _) = m.forward(one.view(), false).unwrap();
        for c in 0..3 {
            assert_relative_eq!(y[[0, c]], batch[[r, c]], max_relative = 1e-12);
        }
    }
}

#[test]
fn straight_line_oracle_4_3_2() {
    let m = fixture(&[4, 3, 2], 4);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_batch(&mut rng, 5, 4);
    let (y, _) = m.forward(x.view(), false).unwrap();
    for r in 0..5 {
        let mut a: Vec<f64> = x.row(r).to_vec();
        for (n, l) in m.layers.iter().enumerate() {
            let mut next = Vec::new();
            for j in 0..l.outputs() {
                let mut z = 0.0;
                for (i, &ai) in a.iter().enumerate() {
                    z += nonlinear_product(ai, l.weights[[i, j]]).unwrap();
                }
                let bn = l.bn_gamma[j] * (z - l.bn_running_mean[j]) / (l.bn_running_var[j] + 1e-5).sqrt()
                    + l.bn_beta[j];
                next.push(if n + 1 < m.layers.len() { (1.0 - 1e-6) * bn.tanh() } else { bn });
            }
            a = next;
        }
        for c in 0..2 {
            assert!((y[[r, c]] - a[c]).abs() <= 1e-10 * a[c].abs().max(1.0));
        }
    }
}

fn loss(m: &OnnModel, x: &Array2<f64>, y: &[u8]) -> f64 {
    cross_entropy(&m.forward(x.view(), true).unwrap().0, y)
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

#[test]
fn gradients_match_finite_differences() {
    let m = fixture(&[6, 4, 3], 6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = random_batch(&mut rng, 8, 6);
    let y: Vec<u8> = (0..8).map(|k| (k % 3) as u8).collect();
    let (_, cache) = m.forward(x.view(), true).unwrap();
    let g = m.backward(&cache, &y).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for n in 0..m.layers.len() {
        let (r, c) = m.layers[n].weights.dim();
        for i in 0..r {
            for j in 0..c {
                let mut p = m.clone();
                p.layers[n].weights[[i, j]] += h;
                let mut q = m.clone();
                q.layers[n].weights[[i, j]] -= h;
                let fd = (loss(&p, &x, &y) - loss(&q, &x, &y)) / (2.0 * h);
                worst = worst.max(rel_err(g.layers[n].weights[[i, j]], fd));
            }
        }
        for j in 0..c {
            for (field, analytic) in [(0, g.layers[n].bn_gamma[j]), (1, g.layers[n].bn_beta[j])] {
                let bump = |m: &mut OnnModel, d: f64| {
                    let l = &mut m.layers[n];
                    if field == 0 {
                        l.bn_gamma[j] += d;
                    } else {
                        l.bn_beta[j] += d;
                    }
                };
                let mut p = m.clone();
                bump(&mut p, h);
                let mut q = m.clone();
                bump(&mut q, -h);
                let fd = (loss(&p, &x, &y) - loss(&q, &x, &y)) / (2.0 * h);
                worst = worst.max(rel_err(analytic, fd));
            }
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
}

#[test]
fn uniform_logits_gradient() {
    // Zero weights and zero inputs make every logit equal β = 0.
    let m = OnnModel::new(&[3, 10]).unwrap();
    let x = Array2::<f64>::zeros((4, 3));
    let y = [0u8, 3, 7, 9];
    let (logits, cache) = m.forward(x.view(), true).unwrap();
    assert!(logits.iter().all(|&v| v == 0.0));
    let g = m.backward(&cache, &y).unwrap();
    // dL/dβ_j = Σ_k (0.1 − δ_{j,y_k})/k.
    for j in 0..10 {
        let hits = y.iter().filter(|&&l| l as usize == j).count() as f64;
        assert_relative_eq!(g.layers[0].bn_beta[j], 0.1 - hits / 4.0, epsilon = 1e-15);
    }
}

#[test]
fn duplicated_batch_gives_same_gradients() {
    let m = fixture(&[5, 4, 3], 8);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = random_batch(&mut rng, 6, 5);
    let y: Vec<u8> = (0..6).map(|k| (k % 3) as u8).collect();
    let x2 = ndarray::concatenate![ndarray::Axis(0), x, x];
    let y2: Vec<u8> = y.iter().chain(&y).copied().collect();
    let g1 = m.backward(&m.forward(x.view(), true).unwrap().1, &y).unwrap();
    let g2 = m.backward(&m.forward(x2.view(), true).unwrap().1, &y2).unwrap();
    for (a, b) in g1.layers.iter().zip(&g2.layers) {
        for (p, q) in a.weights.iter().zip(b.weights.iter()) {
            assert!((p - q).abs() <= 1e-12 * p.abs().max(1e-3));
        }
    }
}

#[test]
fn backward_rejects_inference_cache() {
    let m = fixture(&[4, 3, 2], 10);
    let x = Array2::<f64>::zeros((3, 4));
    let (_, cache) = m.forward(x.view(), false).unwrap();
    assert!(matches!(m.backward(&cache, &[0, 1, 0]), Err(OnnError::State(_))));
    let empty = Cache {
        training: true,
        layers: vec![],
    };
    assert!(matches!(m.backward(&empty, &[]), Err(OnnError::State(_))));
}

#[test]
fn forward_shape_and_range_errors() {
    let m = fixture(&[4, 3, 2], 11);
    assert!(matches!(m.forward(Array2::zeros((2, 5)).view(), false), Err(OnnError::Shape(_))));
    let mut x = Array2::<f64>::zeros((2, 4));
    x[[1, 2]] = 1.01;
    assert!(m.forward(x.view(), false).is_err());
    assert!(m.forward(Array2::zeros((1, 4)).view(), true).is_err());
}

#[test]
fn init_law() {
    let m = OnnModel::paper(42);
    let w = &m.layers[0].weights;
    assert_eq!(w.dim(), (784, 100));
    assert!(w.mean().unwrap().abs() < 0.01);
    let s = (3.0f64 / 784.0).sqrt();
    assert!(w.iter().all(|v| v.abs() <= s));
    for l in &m.layers {
        assert!(l.weights.iter().all(|v| v.abs() <= 1.0 - CLAMP_EPS));
    }
    assert_eq!(OnnModel::paper(42), m);
    assert_ne!(OnnModel::paper(43), m);
    assert_eq!(m.dims(), vec![784, 100, 10, 10]);
    // i = 10 hits the 0.5 cap.
    let small = OnnModel::new(&[10, 2]).unwrap().init_weights(1);
    assert!(small.layers[0].weights.iter().all(|v| v.abs() <= 0.5));
    assert!(small.layers[0].weights.iter().any(|v| v.abs() > 0.4));
}

#[test]
fn clamp_after_step() {
    let mut m = fixture(&[4, 3], 12);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let x = random_batch(&mut rng, 5, 4);
    let y = [0u8, 1, 2, 0, 1];
    let (_, c) = m.forward(x.view(), true).unwrap();
    let g = m.backward(&c, &y).unwrap();
    m.apply_gradients(&g, 1e6).unwrap();
    assert!(m.layers[0].weights.iter().all(|v| v.abs() <= 1.0 - CLAMP_EPS));
    assert!(m.layers[0].weights.iter().any(|v| v.abs() == 1.0 - CLAMP_EPS));
    m.validate().unwrap();
}

#[test]
fn squash_stays_inside_unit_interval() {
    for v in [-1e6, -30.0, -1.0, 0.0, 0.5, 20.0, 1e300] {
        let s = squash(v);
        assert!(s.abs() < 1.0);
        assert_eq!(s.signum(), if v == 0.0 { s.signum() } else { v.signum() });
    }
}
