use proptest::prelude::*;

use super::*;
use crate::rng::SeededRng;

fn set(net: &mut Network, name: &str, values: &[f64]) {
    let b = net.block(name).unwrap().clone();
    b.of_mut(net.params_mut()).copy_from_slice(values);
}

fn seq(rows: &[&[f64]], max_len: usize) -> PaddedTweetMatrix {
    PaddedTweetMatrix::new(Matrix::from_rows(rows, rows[0].len()).unwrap(), max_len)
}

fn random_input(rng: &mut SeededRng, len: usize, dim: usize, max_len: usize) -> PaddedTweetMatrix {
    let data = (0..len * dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
    PaddedTweetMatrix::new(Matrix::from_vec(len, dim, data).unwrap(), max_len)
}

fn tiny_lstm(candidate: Activation) -> Architecture {
    Architecture::Lstm(LstmConfig {
        dim: 4,
        hidden: 4,
        candidate,
        forget_bias: 1.0,
    })
}

fn tiny_cnn(activation: Activation) -> Architecture {
    Architecture::Cnn(CnnConfig {
        dim: 4,
        windows: vec![2, 3],
        filters_per_window: 1,
        activation,
        max_len: 8,
    })
}

#[test]
fn zero_lstm_cell() {
    let net = Network::zeros(tiny_lstm(Activation::Tanh)).unwrap();
    let (h, c) = net.lstm_cell_step(&[0.3, -2.0, 1.0, 5.0], &[0.0; 4], &[0.0; 4]).unwrap();
    assert_eq!(h, vec![0.0; 4]);
    assert_eq!(c, vec![0.0; 4]);
}

#[test]
fn scalar_lstm_hand_values() {
    let mut net = Network::zeros(Architecture::Lstm(LstmConfig {
        dim: 1,
        hidden: 1,
        candidate: Activation::Tanh,
        forget_bias: 0.0,
    }))
    .unwrap();
    set(&mut net, "W_i", &[1.0]);
    let (h, c) = net.lstm_cell_step(&[1.0], &[0.0], &[0.0]).unwrap();
    // candidate tanh(0) = 0 leaves the cell empty
    assert_eq!((h[0], c[0]), (0.0, 0.0));

    set(&mut net, "W_c", &[1.0]);
    let (h, c) = net.lstm_cell_step(&[1.0], &[0.0], &[0.0]).unwrap();
    // c = sigmoid(1) tanh(1), h = sigmoid(0) tanh(c)
    assert!((c[0] - 0.7310585786300049 * 0.7615941559557649).abs() < 1e-12);
    assert!((c[0] - 0.5567699411459397).abs() < 1e-12);
    assert!((h[0] - 0.252788465753554).abs() < 1e-12);
}

#[test]
fn lstm_sigmoid_candidate_differs() {
    let mut net = Network::zeros(Architecture::Lstm(LstmConfig {
        dim: 1,
        hidden: 1,
        candidate: Activation::Sigmoid,
        forget_bias: 0.0,
    }))
    .unwrap();
    set(&mut net, "W_i", &[1.0]);
    let (_, c) = net.lstm_cell_step(&[1.0], &[0.0], &[0.0]).unwrap();
    // sigmoid(1) * sigmoid(0)
    assert!((c[0] - 0.7310585786300049 * 0.5).abs() < 1e-12);
}

#[test]
fn zero_model_is_uniform_and_predicts_positive() {
    for arch in [tiny_lstm(Activation::Tanh), tiny_cnn(Activation::Tanh)] {
        let net = Network::zeros(arch).unwrap();
        let x = seq(&[&[1.0, 2.0, 3.0, 4.0]], 8);
        let (label, p) = net.classify(&x).unwrap();
        assert_eq!(label, Polarity::Positive);
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let ex = Example {
            input: x,
            label: Polarity::Negative,
        };
        let (loss, _) = net.loss_and_gradients(&[&ex], None).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-12);
    }
}

#[test]
fn cnn_hand_values() {
    let mut net = Network::zeros(Architecture::Cnn(CnnConfig {
        dim: 2,
        windows: vec![2],
        filters_per_window: 1,
        activation: Activation::Relu,
        max_len: 3,
    }))
    .unwrap();
    set(&mut net, "conv2_W", &[0.5, -1.0, 1.0, 0.25]);
    set(&mut net, "conv2_b", &[0.1]);
    set(&mut net, "out_W", &[1.0, 0.0, -1.0]);
    set(&mut net, "out_b", &[0.0, 0.5, 0.0]);
    let x = seq(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]], 3);
    // c_1 = 0.5 - 2 + 3 + 1 + 0.1 = 2.6, c_2 = 1.5 - 4 + 5 + 1.5 + 0.1 = 4.1
    let z = net.logits(&x, None).unwrap();
    for (a, b) in z.iter().zip([4.1, 0.5, -4.1]) {
        assert!((a - b).abs() < 1e-12, "{z:?}");
    }
}

#[test]
fn cnn_zero_input_gives_bias_only() {
    let mut net = Network::initialized(tiny_cnn(Activation::Tanh), 1).unwrap();
    for name in ["conv2_b", "conv3_b"] {
        set(&mut net, name, &[0.0]);
    }
    set(&mut net, "out_b", &[0.2, -0.1, 0.4]);
    let x = seq(&[&[0.0; 4], &[0.0; 4]], 8);
    assert_eq!(net.logits(&x, None).unwrap(), [0.2, -0.1, 0.4]);
}

#[test]
fn all_ones_mask_is_identity() {
    let net = Network::initialized(tiny_cnn(Activation::Tanh), 2).unwrap();
    let x = random_input(&mut SeededRng::new(1, 0), 5, 4, 8);
    assert_eq!(net.logits(&x, Some(&[1.0, 1.0])).unwrap(), net.logits(&x, None).unwrap());
}

#[test]
fn padding_is_neutral_without_bias() {
    let arch = |max_len| {
        Architecture::Cnn(CnnConfig {
            dim: 4,
            windows: vec![2, 3],
            filters_per_window: 3,
            activation: Activation::Relu,
            max_len,
        })
    };
    let mut rng = SeededRng::new(5, 0);
    // padded out to the reach of the widest window
    let x = random_input(&mut rng, 5, 4, 7);
    let short = Network::initialized(arch(7), 3).unwrap();
    let long = Network::from_params(arch(40), short.params().to_vec()).unwrap();
    let x_long = PaddedTweetMatrix::new(x.rows().clone(), 40);
    assert_eq!(short.logits(&x, None).unwrap(), long.logits(&x_long, None).unwrap());
}

#[test]
fn dense_padding_matches_implicit_padding() {
    let net = Network::initialized(tiny_cnn(Activation::Tanh), 4).unwrap();
    let mut rng = SeededRng::new(6, 0);
    let x = random_input(&mut rng, 3, 4, 8);
    let dense = PaddedTweetMatrix::new(x.to_dense(), 8);
    let a = net.logits(&x, None).unwrap();
    let b = net.logits(&dense, None).unwrap();
    for (u, v) in a.iter().zip(b) {
        assert!((u - v).abs() < 1e-14);
    }
}

#[test]
fn lstm_is_order_sensitive() {
    let net = Network::initialized(tiny_lstm(Activation::Tanh), 7).unwrap();
    let a: &[f64] = &[1.0, 0.0, -1.0, 0.5];
    let b: &[f64] = &[0.0, 2.0, 0.3, -0.7];
    let c: &[f64] = &[-1.0, 0.4, 0.9, 0.0];
    let z1 = net.logits(&seq(&[a, b, c], 8), None).unwrap();
    let z2 = net.logits(&seq(&[c, b, a], 8), None).unwrap();
    assert_ne!(z1, z2);
}

#[test]
fn truncation_to_max_len() {
    let x = seq(&[&[1.0], &[2.0], &[3.0]], 2);
    assert_eq!(x.true_length(), 2);
    assert_eq!(x.to_dense().as_slice(), &[1.0, 2.0]);
}

#[test]
fn input_and_config_errors() {
    let net = Network::zeros(tiny_lstm(Activation::Tanh)).unwrap();
    let empty = PaddedTweetMatrix::new(Matrix::zeros(0, 4), 8);
    assert!(matches!(net.logits(&empty, None), Err(Error::Argument(_))));
    assert!(net.logits(&seq(&[&[1.0, 2.0]], 8), None).is_err());
    let narrow = Architecture::Cnn(CnnConfig::new(4, 4));
    assert!(matches!(Network::zeros(narrow), Err(Error::Config(_))));
    assert!(Network::zeros(tiny_lstm(Activation::Relu)).is_err());
}

fn check_gradients(net: &Network, batch: &[&Example], masks: Option<&[Vec<f64>]>) {
    let (_, analytic) = net.loss_and_gradients(batch, masks).unwrap();
    let step = 1e-5;
    let mut probe = net.clone();
    for k in 0..net.param_count() {
        let orig = probe.params()[k];
        probe.params_mut()[k] = orig + step;
        let (up, _) = probe.loss_and_gradients(batch, masks).unwrap();
        probe.params_mut()[k] = orig - step;
        let (down, _) = probe.loss_and_gradients(batch, masks).unwrap();
        probe.params_mut()[k] = orig;
        let numeric = (up - down) / (2.0 * step);
        let a = analytic[k];
        let scale = a.abs().max(numeric.abs());
        if scale < 1e-8 {
            assert!((a - numeric).abs() <= 1e-10, "param {k}: {a} vs {numeric}");
        } else {
            assert!((a - numeric).abs() / scale <= 1e-4, "param {k}: {a} vs {numeric}");
        }
    }
}

fn random_batch(seed: u64, lens: &[usize], max_len: usize) -> Vec<Example> {
    let mut rng = SeededRng::new(seed, 0);
    lens.iter()
        .enumerate()
        .map(|(i, &len)| Example {
            input: random_input(&mut rng, len, 4, max_len),
            label: Polarity::from_code(i % 3).unwrap(),
        })
        .collect()
}

#[test]
fn lstm_gradients_match_finite_differences() {
    for candidate in [Activation::Tanh, Activation::Sigmoid] {
        let net = Network::initialized(tiny_lstm(candidate), 11).unwrap();
        let batch = random_batch(12, &[6, 3, 1], 8);
        let refs: Vec<&Example> = batch.iter().collect();
        check_gradients(&net, &refs, None);
        let masks: Vec<Vec<f64>> = (0..3).map(|j| dropout_mask(4, 0.5, 1, 0, 0, j)).collect();
        check_gradients(&net, &refs, Some(&masks));
    }
}

#[test]
fn cnn_gradients_match_finite_differences() {
    for activation in [Activation::Tanh, Activation::Sigmoid] {
        let mut net = Network::initialized(tiny_cnn(activation), 13).unwrap();
        set(&mut net, "conv2_b", &[0.05]);
        set(&mut net, "conv3_b", &[-0.3]);
        let batch = random_batch(14, &[6, 2, 6], 8);
        let refs: Vec<&Example> = batch.iter().collect();
        check_gradients(&net, &refs, None);
        let masks = vec![vec![2.0, 0.0], vec![2.0, 2.0], vec![0.0, 2.0]];
        check_gradients(&net, &refs, Some(&masks));
    }
}

#[test]
fn duplicated_batch_keeps_mean_loss_and_gradient() {
    let net = Network::initialized(tiny_cnn(Activation::Tanh), 21).unwrap();
    let batch = random_batch(22, &[4, 5, 6], 8);
    let once: Vec<&Example> = batch.iter().collect();
    let twice: Vec<&Example> = batch.iter().chain(batch.iter()).collect();
    let (l1, g1) = net.loss_and_gradients(&once, None).unwrap();
    let (l2, g2) = net.loss_and_gradients(&twice, None).unwrap();
    assert!((l1 - l2).abs() < 1e-12);
    for (a, b) in g1.iter().zip(&g2) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn gradients_do_not_depend_on_thread_count() {
    let net = Network::initialized(tiny_lstm(Activation::Tanh), 23).unwrap();
    let batch = random_batch(24, &[3; 40], 8);
    let refs: Vec<&Example> = batch.iter().collect();
    let reference = net.loss_and_gradients(&refs, None).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single = pool.install(|| net.loss_and_gradients(&refs, None).unwrap());
    assert_eq!(reference.0.to_bits(), single.0.to_bits());
    assert_eq!(reference.1, single.1);
}

#[test]
fn adadelta_scalar_step() {
    let mut opt = Adadelta::new(1, 0.95, 1e-6);
    let mut p = [0.0];
    opt.step(&mut p, &[1.0]).unwrap();
    let expected = -0.001 / 0.050001f64.sqrt();
    assert!((p[0] - expected).abs() < 1e-12);
    assert!((p[0] - -0.004472091234310839).abs() < 1e-12);
    assert!((opt.accum_grad()[0] - 0.05).abs() < 1e-15);
    assert!((opt.accum_update()[0] - 9.99980000399992e-07).abs() < 1e-18);
}

#[test]
fn adadelta_zero_gradient_is_fixed_point() {
    let mut opt = Adadelta::new(3, 0.95, 1e-6);
    let mut p = [1.0, -2.0, 3.0];
    opt.step(&mut p, &[0.0; 3]).unwrap();
    assert_eq!(p, [1.0, -2.0, 3.0]);
    assert_eq!(opt.accum_grad(), &[0.0; 3]);
    assert_eq!(opt.accum_update(), &[0.0; 3]);
    assert!(opt.step(&mut p, &[0.0; 2]).is_err());
}

#[test]
fn adadelta_is_odd() {
    let mut a = Adadelta::new(1, 0.9, 1e-6);
    let mut b = Adadelta::new(1, 0.9, 1e-6);
    let (mut pa, mut pb) = ([0.0], [0.0]);
    for g in [0.3, -1.2, 2.0] {
        a.step(&mut pa, &[g]).unwrap();
        b.step(&mut pb, &[-g]).unwrap();
    }
    assert_eq!(pa[0], -pb[0]);
    assert_eq!(a, b);
}

#[test]
fn dropout_mask_values() {
    let m = dropout_mask(1000, 0.5, 9, 1, 2, 3);
    assert!(m.iter().all(|&v| v == 0.0 || v == 2.0));
    let kept = m.iter().filter(|&&v| v > 0.0).count();
    assert!((400..600).contains(&kept));
    assert_eq!(m, dropout_mask(1000, 0.5, 9, 1, 2, 3));
    assert_ne!(m, dropout_mask(1000, 0.5, 9, 1, 2, 4));
}

fn marker_examples(dim: usize, max_len: usize, seed: u64) -> Vec<Example> {
    let mut rng = SeededRng::new(seed, 0);
    let markers: Vec<Vec<f64>> = (0..3).map(|_| (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect();
    (0..30)
        .map(|i| {
            let label = i % 3;
            let len = 3 + rng.below(3) as usize;
            let at = rng.below(len as u64) as usize;
            let rows: Vec<Vec<f64>> = (0..len)
                .map(|t| {
                    if t == at {
                        markers[label].clone()
                    } else {
                        (0..dim).map(|_| rng.uniform(-0.3, 0.3)).collect()
                    }
                })
                .collect();
            Example {
                input: PaddedTweetMatrix::new(Matrix::from_rows(&rows, dim).unwrap(), max_len),
                label: Polarity::from_code(label).unwrap(),
            }
        })
        .collect()
}

#[test]
fn patience_zero_runs_one_epoch() {
    let data = marker_examples(4, 6, 1);
    let net = Network::initialized(tiny_cnn(Activation::Tanh), 1).unwrap();
    let cfg = TrainConfig {
        patience: 0,
        max_epochs: 10,
        ..TrainConfig::default()
    };
    let out = train(net, &data, &data, &cfg).unwrap();
    assert_eq!(out.history.len(), 1);
    assert!(train(Network::zeros(tiny_cnn(Activation::Tanh)).unwrap(), &[], &data, &cfg).is_err());
}

#[test]
fn training_is_deterministic() {
    let data = marker_examples(4, 8, 2);
    let cfg = TrainConfig {
        batch_size: 7,
        max_epochs: 4,
        seed: 5,
        ..TrainConfig::default()
    };
    let run = || {
        train(Network::initialized(tiny_lstm(Activation::Tanh), 5).unwrap(), &data, &data, &cfg).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.network, b.network);
    assert_eq!(a.history, b.history);
}

#[test]
fn early_stopping_keeps_best_parameters() {
    let data = marker_examples(4, 8, 3);
    let cfg = TrainConfig {
        batch_size: 5,
        max_epochs: 15,
        patience: 3,
        seed: 1,
        ..TrainConfig::default()
    };
    let out = train(Network::initialized(tiny_cnn(Activation::Tanh), 3).unwrap(), &data, &data, &cfg).unwrap();
    let best = out.history.iter().map(|h| h.dev_accuracy).fold(f64::MIN, f64::max);
    assert_eq!(out.history[out.best_epoch - 1].dev_accuracy, best);
    assert_eq!(accuracy(&out.network, &data).unwrap(), best);
}

#[test]
fn checkpoint_round_trip() {
    for arch in [tiny_lstm(Activation::Sigmoid), tiny_cnn(Activation::Relu)] {
        let model = TrainedModel {
            network: Network::initialized(arch, 8).unwrap(),
            train_config: TrainConfig::default(),
            fingerprints: ModelFingerprints {
                preprocessing: "aa".into(),
                embeddings: "bb".into(),
                alignment: "cc".into(),
            },
            history: vec![EpochStats {
                epoch: 1,
                train_loss: 0.1 + 0.2,
                dev_accuracy: 2.0 / 3.0,
            }],
        };
        let back = TrainedModel::parse(&model.to_text(), std::path::Path::new("m")).unwrap();
        assert_eq!(back, model);
        let x = seq(&[&[1.0, 2.0, 3.0, 4.0]], 8);
        assert!(back.predict(&x, &model.fingerprints).is_ok());
        let other = ModelFingerprints {
            alignment: "dd".into(),
            ..model.fingerprints.clone()
        };
        assert!(matches!(back.predict(&x, &other), Err(Error::Config(_))));
    }
}

#[test]
fn checkpoint_rejects_truncation() {
    let model = TrainedModel {
        network: Network::initialized(tiny_lstm(Activation::Tanh), 8).unwrap(),
        train_config: TrainConfig::default(),
        fingerprints: ModelFingerprints::default(),
        history: vec![],
    };
    let text = model.to_text();
    let cut: String = text.lines().take(30).map(|l| format!("{l}\n")).collect();
    assert!(matches!(
        TrainedModel::parse(&cut, std::path::Path::new("m")),
        Err(Error::Parse { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn probabilities_are_normalized(z in prop::array::uniform3(-50.0f64..50.0)) {
        let p = softmax(&z);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(p.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn lstm_hidden_state_is_bounded(seed in any::<u64>(), len in 1usize..12, scale in 0.1f64..20.0) {
        let net = Network::initialized(tiny_lstm(Activation::Tanh), seed).unwrap();
        let mut rng = SeededRng::new(seed, 1);
        let data = (0..len * 4).map(|_| scale * rng.uniform(-1.0, 1.0)).collect();
        let x = Matrix::from_vec(len, 4, data).unwrap();
        let layout = match &net.layout { Layout::Lstm(l) => l.clone(), _ => unreachable!() };
        for h in lstm::hidden_states(&layout, net.params(), &x) {
            prop_assert!(h.iter().all(|v| v.abs() < 1.0));
        }
    }
}
