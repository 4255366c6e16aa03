use std::fs;

use infoplane::data::gen_szt;
use infoplane::nn::{
    gradient_check, log_schedule, read_trace_dir, train, write_trace_dir, Activation, Mlp, MlpConfig, Optimizer,
    Samples, TraceMeta,
};
use infoplane::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(input: usize, hidden: Vec<usize>, classes: usize, act: Activation, seed: u64) -> MlpConfig {
    MlpConfig {
        input_dim: input,
        hidden_widths: hidden,
        activation: act,
        num_classes: classes,
        seed,
        learning_rate: 0.1,
        batch_size: 16,
        epochs: 10,
        optimizer: Optimizer::Sgd,
    }
}

fn random_batch(rng: &mut ChaCha8Rng, d: usize, m: usize, k: usize) -> (Matrix<f64>, Vec<usize>) {
    let x = Matrix::from_fn(d, m, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let y = (0..m).map(|_| rng.random_range(0..k)).collect();
    (x, y)
}

#[test]
fn scripted_forward_matches_hand_computation() {
    let w1 = Matrix::from_rows(&[vec![0.5, -1.0], vec![2.0, 0.25]]).unwrap();
    let b1 = vec![0.1, -0.2];
    let w2 = Matrix::from_rows(&[vec![1.5, -0.5], vec![-1.0, 0.75]]).unwrap();
    let b2 = vec![0.0, 0.3];
    let m = Mlp::from_layers(vec![(w1, b1), (w2, b2)], Activation::Tanh).unwrap();
    let x = Matrix::from_rows(&[vec![0.3], vec![-0.7]]).unwrap();
    let fp = m.forward(&x).unwrap();

    let h0 = (0.5f64 * 0.3 + 1.0 * 0.7 + 0.1).tanh();
    let h1 = (2.0f64 * 0.3 - 0.25 * 0.7 - 0.2).tanh();
    let l0 = 1.5 * h0 - 0.5 * h1;
    let l1 = -h0 + 0.75 * h1 + 0.3;
    let p0 = 1.0 / (1.0 + (l1 - l0).exp());
    assert!((fp.hidden[0][(0, 0)] - h0).abs() < 1e-15);
    assert!((fp.hidden[0][(1, 0)] - h1).abs() < 1e-15);
    assert!((fp.probabilities[(0, 0)] - p0).abs() < 1e-14);
    assert!((fp.probabilities[(1, 0)] - (1.0 - p0)).abs() < 1e-14);
}

#[test]
fn softmax_columns_sum_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut cfg = config(5, vec![6, 4], 7, Activation::Relu, 3);
    cfg.learning_rate = 0.0;
    let m = Mlp::<f64>::init(&cfg).unwrap();
    let x = Matrix::from_fn(5, 50, |_, _| 40.0 * (rng.random::<f64>() - 0.5));
    let fp = m.forward(&x).unwrap();
    for j in 0..50 {
        let s: f64 = fp.probabilities.col(j).iter().sum();
        assert!((s - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn gradient_check_tanh_4_3_2() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for seed in 0..5 {
        let m = Mlp::<f64>::init(&config(4, vec![3], 2, Activation::Tanh, seed)).unwrap();
        let (x, y) = random_batch(&mut rng, 4, 12, 2);
        let err = gradient_check(&m, Samples::new(&x, &y).unwrap()).unwrap();
        assert!(err <= 1e-4, "seed {seed}: {err}");
    }
}

/// Smallest `|pre-activation|` of any hidden unit on `x`.
fn min_preactivation(m: &Mlp<f64>, x: &Matrix<f64>) -> f64 {
    let fp = m.forward(x).unwrap();
    let mut input = x.clone();
    let mut worst = f64::INFINITY;
    for (l, h) in fp.hidden.iter().enumerate() {
        // zero biases at init, so the pre-activation is W * input
        let z = m.weights(l).matmul(&input).unwrap();
        worst = z.as_slice().iter().fold(worst, |a, v| a.min(v.abs()));
        input = h.clone();
    }
    worst
}

#[test]
fn gradient_check_relu_away_from_kinks() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut checked = 0;
    for seed in 0..50 {
        let m = Mlp::<f64>::init(&config(5, vec![6, 4], 3, Activation::Relu, seed)).unwrap();
        assert!(m.param_count() <= 200);
        let (x, y) = random_batch(&mut rng, 5, 8, 3);
        if min_preactivation(&m, &x) <= 1e-3 {
            continue;
        }
        let err = gradient_check(&m, Samples::new(&x, &y).unwrap()).unwrap();
        assert!(err <= 1e-4, "seed {seed}: {err}");
        checked += 1;
    }
    assert!(checked >= 5, "only {checked} kink-free configurations");
}

#[test]
fn output_bias_only_gradient() {
    // all weights zero: the only informative gradient is the output bias
    let w1 = Matrix::<f64>::zeros(1, 1);
    let w2 = Matrix::<f64>::zeros(2, 1);
    let m = Mlp::from_layers(vec![(w1, vec![0.0]), (w2, vec![0.2, -0.1])], Activation::Linear).unwrap();
    let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
    let y = vec![0, 1, 1];
    let err = gradient_check(&m, Samples::new(&x, &y).unwrap()).unwrap();
    assert!(err <= 1e-7, "{err}");
}

#[test]
fn repeated_batch_loss_is_nonincreasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (x, y) = random_batch(&mut rng, 4, 16, 2);
    let mut cfg = config(4, vec![5, 3], 2, Activation::Tanh, 9);
    cfg.learning_rate = 0.01;
    cfg.batch_size = 16;
    cfg.epochs = 1;
    let mut m = Mlp::<f64>::init(&cfg).unwrap();
    let s = Samples::new(&x, &y).unwrap();
    let mut prev = m.loss(s).unwrap();
    for _ in 0..10 {
        train(&mut m, &cfg, s, None, &x, &[]).unwrap();
        let now = m.loss(s).unwrap();
        assert!(now <= prev + 1e-9, "{now} > {prev}");
        prev = now;
    }
}

#[test]
fn init_weights_centered() {
    let m = Mlp::<f64>::init(&config(100, vec![100], 2, Activation::Tanh, 1)).unwrap();
    let w = m.weights(0).as_slice();
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let limit = (6.0f64 / 200.0).sqrt();
    let sigma_of_mean = limit / 3f64.sqrt() / n.sqrt();
    assert!(mean.abs() <= 3.0 * sigma_of_mean, "{mean}");
    assert!(w.iter().all(|v| v.abs() <= limit));
}

fn run_trace(dir: &std::path::Path) {
    let ds = gen_szt::<f64>(None, 0);
    let mut cfg = config(12, vec![6, 4], 2, Activation::Tanh, 13);
    cfg.batch_size = 256;
    cfg.epochs = 4;
    let mut m = Mlp::<f64>::init(&cfg).unwrap();
    let sched = log_schedule(cfg.epochs, 60);
    let s = Samples::new(ds.features(), ds.labels()).unwrap();
    let tr = train(&mut m, &cfg, s, None, ds.features(), &sched).unwrap();
    let meta = TraceMeta {
        config: cfg,
        logged_epochs: tr.logged_epochs(),
        dataset_name: ds.name().into(),
        dataset_checksum: ds.checksum().into(),
        eval_labels: ds.labels().to_vec(),
        deterministic: true,
    };
    write_trace_dir(dir, &tr, &meta).unwrap();
}

#[test]
fn identical_seeds_give_identical_trace_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_trace(a.path());
    run_trace(b.path());
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 3);
    for n in &names {
        assert_eq!(fs::read(a.path().join(n)).unwrap(), fs::read(b.path().join(n)).unwrap(), "{n:?}");
    }
    let (meta, snaps) = read_trace_dir(a.path()).unwrap();
    assert_eq!(snaps.len(), meta.logged_epochs.len() * 2);
    assert_eq!(meta.eval_labels.len(), snaps[0].values.cols());
}

#[test]
fn small_tanh_net_beats_majority_baseline() {
    let ds = gen_szt::<f64>(None, 0);
    let mut cfg = config(12, vec![10, 7, 5, 3], 2, Activation::Tanh, 2);
    cfg.batch_size = 256;
    cfg.epochs = 300;
    let mut m = Mlp::<f64>::init(&cfg).unwrap();
    let s = Samples::new(ds.features(), ds.labels()).unwrap();
    let tr = train(&mut m, &cfg, s, None, ds.features(), &[cfg.epochs]).unwrap();
    let counts = ds.class_counts();
    let majority = *counts.iter().max().unwrap() as f64 / ds.len() as f64;
    let acc = tr.final_record().unwrap().train_acc;
    assert!(acc > majority + 0.1, "acc {acc} vs majority {majority}");
}
