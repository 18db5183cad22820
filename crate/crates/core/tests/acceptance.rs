//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

#![allow(clippy::needless_range_loop)]

use std::collections::{BTreeMap, HashMap, HashSet};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use xlsent::align::{
    alignment_report, fit_translation_matrix, resolve_pairs, select_pivot_pairs, Dictionary, FitOptions,
    PivotSelection, RankedSide,
};
use xlsent::baselines::{train_binary_svm, train_nb, DcdOptions, NbEvent, SparseBinaryVector};
use xlsent::corpus::{make_folds, Lang, Polarity};
use xlsent::embeddings::EmbeddingTable;
use xlsent::eval::{run_cv, AlignmentMode, ClassifierKind, ExperimentConfig, ExperimentData, LeakageAudit};
use xlsent::linalg::Matrix;
use xlsent::nn::{
    accuracy, softmax, train, Activation, Adadelta, Architecture, CnnConfig, Example, LstmConfig, Network,
    PaddedTweetMatrix, TrainConfig,
};
use xlsent::rng::SeededRng;
use xlsent::synth::{generate, SynthConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn within(limit: Duration, start: Instant, out: Outcome) -> Outcome {
    let took = start.elapsed();
    let out = out?;
    check(
        took < limit,
        format!("{out}; {:.2}s", took.as_secs_f64()),
        format!("{out}; took {:.2}s, limit {}s", took.as_secs_f64(), limit.as_secs()),
    )
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut SeededRng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gaussian()).collect()).unwrap()
}

/// Orthogonal factor of a seeded Gaussian matrix.
fn qr_rotation(dim: usize, seed: u64) -> Matrix {
    let mut rng = SeededRng::new(seed, 500);
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.gaussian());
    let q = a.qr().q();
    Matrix::from_vec(dim, dim, (0..dim * dim).map(|k| q[(k / dim, k % dim)]).collect()).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (dim, n) = (10, 200);
    let r = qr_rotation(dim, 1);
    let mut rng = SeededRng::new(2, 500);
    let x = gaussian_matrix(n, dim, &mut rng);
    // z_i = R x_i, i.e. Z = X R^T with pairs as rows
    let z = x.matmul(&r.transpose()).unwrap();
    let w = fit_translation_matrix(&x, &z, Lang::new("ja"), Lang::new("en"), &FitOptions::default())
        .map_err(|e| e.to_string())?;
    let err = w.w.sub(&r.transpose()).frobenius_norm();
    // an exact fit sends every source vector onto its partner
    let rep = alignment_report(&x, &z, &w);
    let out = check(
        err <= 1e-8 && w.fit_residual < 1e-12 && rep.euclidean_sum_after < 1e-6 && rep.euclidean_sum_before > 1.0,
        format!(
            "||W - R^T||_F = {err:.2e}, residual = {:.2e}, euclidean sum {:.1} -> {:.1e}",
            w.fit_residual, rep.euclidean_sum_before, rep.euclidean_sum_after
        ),
        format!(
            "||W - R^T||_F = {err:.2e} (limit 1e-8), residual = {:.2e} (limit 1e-12), euclidean after {:.2e}",
            w.fit_residual, rep.euclidean_sum_after
        ),
    );
    within(Duration::from_secs(1), start, out)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (dim, n) = (10, 250);
    let mut worst: (f64, f64) = (0.0, 0.0);
    for seed in 0..10u64 {
        let r = qr_rotation(dim, 100 + seed);
        let mut rng = SeededRng::new(seed, 501);
        let mut src = Vec::new();
        let mut tgt = Vec::new();
        for i in 0..n {
            let x: Vec<f64> = (0..dim).map(|_| rng.gaussian()).collect();
            // z = R x, which is x^T R^T as a row
            let mut z = r.transpose().left_mul(&x);
            for v in z.iter_mut() {
                *v += 0.05 * rng.gaussian();
            }
            src.push((format!("s{i}"), x));
            tgt.push((format!("t{i}"), z));
        }
        let st = EmbeddingTable::from_entries(Lang::new("ja"), dim, src).unwrap();
        let tt = EmbeddingTable::from_entries(Lang::new("en"), dim, tgt).unwrap();
        let dict = Dictionary::new((0..n).map(|i| (format!("s{i}"), format!("t{i}"))).collect());
        let ranks: HashMap<String, usize> = (0..n).map(|i| (format!("t{i}"), i + 1)).collect();
        let set = select_pivot_pairs(
            &ranks,
            &dict,
            &PivotSelection {
                src_lang: Lang::new("ja"),
                tgt_lang: Lang::new("en"),
                side: RankedSide::Target,
                k: n,
                train_count: n * 4 / 5,
                seed,
            },
        )
        .map_err(|e| e.to_string())?;
        let (x, z) = resolve_pairs(&set.train, &st, &tt).map_err(|e| e.to_string())?;
        let w = fit_translation_matrix(&x, &z, Lang::new("ja"), Lang::new("en"), &FitOptions::default())
            .map_err(|e| e.to_string())?;
        let (xt, zt) = resolve_pairs(&set.test, &st, &tt).map_err(|e| e.to_string())?;
        let rep = alignment_report(&xt, &zt, &w);
        let e_ratio = rep.euclidean_sum_after / rep.euclidean_sum_before;
        let c_ratio = rep.cosine_sum_after / rep.cosine_sum_before;
        worst = (worst.0.max(e_ratio), worst.1.max(c_ratio));
        if !(rep.euclidean_sum_after < rep.euclidean_sum_before && rep.cosine_sum_after < rep.cosine_sum_before) {
            return Err(format!("seed {seed}: {rep:?}"));
        }
    }
    within(
        Duration::from_secs(5),
        start,
        Ok(format!(
            "10/10 seeds improve on the held-out 20%; worst after/before ratios: euclidean {:.3}, cosine {:.3}",
            worst.0, worst.1
        )),
    )
}

/// Largest relative error between analytic and central-difference
/// gradients (absolute error where both are below 1e-8).
fn gradient_error(net: &Network, batch: &[&Example], masks: Option<&[Vec<f64>]>) -> f64 {
    let (_, analytic) = net.loss_and_gradients(batch, masks).unwrap();
    let h = 1e-5;
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for k in 0..net.param_count() {
        let orig = probe.params()[k];
        probe.params_mut()[k] = orig + h;
        let up = probe.loss_and_gradients(batch, masks).unwrap().0;
        probe.params_mut()[k] = orig - h;
        let down = probe.loss_and_gradients(batch, masks).unwrap().0;
        probe.params_mut()[k] = orig;
        let numeric = (up - down) / (2.0 * h);
        let scale = analytic[k].abs().max(numeric.abs());
        let err = if scale < 1e-8 {
            if (analytic[k] - numeric).abs() <= 1e-10 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (analytic[k] - numeric).abs() / scale
        };
        worst = worst.max(err);
    }
    worst
}

fn random_examples(seed: u64, n: usize, len: usize, dim: usize, max_len: usize) -> Vec<Example> {
    let mut rng = SeededRng::new(seed, 502);
    (0..n)
        .map(|i| {
            let data = (0..len * dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
            Example {
                input: PaddedTweetMatrix::new(Matrix::from_vec(len, dim, data).unwrap(), max_len),
                label: Polarity::from_code(i % 3).unwrap(),
            }
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut worst = BTreeMap::new();
    for seed in 0..10u64 {
        let batch = random_examples(seed, 3, 6, 4, 8);
        let refs: Vec<&Example> = batch.iter().collect();
        for candidate in [Activation::Tanh, Activation::Sigmoid] {
            let net = Network::initialized(
                Architecture::Lstm(LstmConfig {
                    dim: 4,
                    hidden: 4,
                    candidate,
                    forget_bias: 1.0,
                }),
                seed,
            )
            .unwrap();
            let e = gradient_error(&net, &refs, None);
            let slot = worst.entry(format!("lstm/{candidate}")).or_insert(0.0f64);
            *slot = slot.max(e);
        }
        let net = Network::initialized(
            Architecture::Cnn(CnnConfig {
                dim: 4,
                windows: vec![2, 3],
                filters_per_window: 1,
                activation: Activation::Tanh,
                max_len: 8,
            }),
            seed,
        )
        .unwrap();
        let mut rng = SeededRng::new(seed, 503);
        let masks: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..2).map(|_| if rng.next_f64() < 0.5 { 0.0 } else { 2.0 }).collect())
            .collect();
        let e = gradient_error(&net, &refs, None).max(gradient_error(&net, &refs, Some(&masks)));
        let slot = worst.entry("cnn/tanh+dropout".to_string()).or_insert(0.0f64);
        *slot = slot.max(e);
    }
    let max = worst.values().cloned().fold(0.0, f64::max);
    let summary: Vec<String> = worst.iter().map(|(k, v)| format!("{k} {v:.1e}")).collect();
    within(
        Duration::from_secs(30),
        start,
        check(
            max <= 1e-4,
            format!("max relative error over 10 seeds: {}", summary.join(", ")),
            format!("relative error above 1e-4: {}", summary.join(", ")),
        ),
    )
}

fn set_block(net: &mut Network, name: &str, values: &[f64]) {
    let b = net.block(name).unwrap().clone();
    b.of_mut(net.params_mut()).copy_from_slice(values);
}

fn criterion_4() -> Outcome {
    let mut lstm = Network::zeros(Architecture::Lstm(LstmConfig {
        dim: 1,
        hidden: 1,
        candidate: Activation::Tanh,
        forget_bias: 0.0,
    }))
    .unwrap();
    set_block(&mut lstm, "W_i", &[1.0]);
    set_block(&mut lstm, "W_c", &[1.0]);
    let (h, c) = lstm.lstm_cell_step(&[1.0], &[0.0], &[0.0]).unwrap();
    // i = sigma(1), candidate = tanh(1), f = o = sigma(0) = 1/2
    let i_t = 1.0 / (1.0 + (-1.0f64).exp());
    let c_hand = i_t * 1.0f64.tanh();
    let h_hand = 0.5 * c_hand.tanh();
    let lstm_err = (c[0] - c_hand).abs().max((h[0] - h_hand).abs());

    let mut cnn = Network::zeros(Architecture::Cnn(CnnConfig {
        dim: 2,
        windows: vec![2],
        filters_per_window: 1,
        activation: Activation::Relu,
        max_len: 3,
    }))
    .unwrap();
    set_block(&mut cnn, "conv2_W", &[0.5, -1.0, 1.0, 0.25]);
    set_block(&mut cnn, "conv2_b", &[0.1]);
    set_block(&mut cnn, "out_W", &[1.0, 0.0, -1.0]);
    set_block(&mut cnn, "out_b", &[0.0, 0.5, 0.0]);
    let x = PaddedTweetMatrix::new(Matrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap(), 3);
    // windows: 0.5 - 2 + 3 + 1 + 0.1 = 2.6 and 1.5 - 4 + 5 + 1.5 + 0.1 = 4.1
    let z = cnn.logits(&x, None).unwrap();
    let cnn_err = z.iter().zip([4.1, 0.5, -4.1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    check(
        lstm_err <= 1e-12 && cnn_err <= 1e-12 && (i_t - 0.731059).abs() < 1e-6,
        format!("LSTM cell error {lstm_err:.1e}, CNN logit error {cnn_err:.1e}"),
        format!("LSTM cell error {lstm_err:.1e}, CNN logit error {cnn_err:.1e} (limit 1e-12)"),
    )
}

fn criterion_5() -> Outcome {
    let mut opt = Adadelta::new(1, 0.95, 1e-6);
    let mut p = [0.0];
    opt.step(&mut p, &[1.0]).map_err(|e| e.to_string())?;
    let hand = -(1e-6f64).sqrt() / (0.05f64 + 1e-6).sqrt();
    let err = (p[0] - hand).abs();
    let mut still = Adadelta::new(4, 0.95, 1e-6);
    let mut q = [0.5, -1.0, 2.0, 0.0];
    still.step(&mut q, &[0.0; 4]).map_err(|e| e.to_string())?;
    let fixed = q == [0.5, -1.0, 2.0, 0.0] && still.accum_grad() == [0.0; 4] && still.accum_update() == [0.0; 4];
    check(
        err <= 1e-12 && fixed,
        format!("delta = {:.10} (error {err:.1e}); zero gradient leaves params and state unchanged", p[0]),
        format!("delta error {err:.1e}, zero-gradient fixed point: {fixed}"),
    )
}

fn toy_examples() -> Vec<Example> {
    let cfg = SynthConfig {
        tweets: BTreeMap::from([(Lang::new("en"), 10), (Lang::new("ja"), 10), (Lang::new("zh"), 10)]),
        markers_per_class: 1,
        seed: 7,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg).unwrap();
    let max_len = corpus.tweets.iter().map(|t| t.len()).max().unwrap();
    corpus
        .tweets
        .iter()
        .map(|t| {
            let table = &corpus.tables[&t.lang];
            let rows: Vec<&[f64]> = t.tokens.iter().map(|w| table.get(w).unwrap()).collect();
            Example {
                input: PaddedTweetMatrix::new(Matrix::from_rows(&rows, cfg.dim).unwrap(), max_len),
                label: t.label,
            }
        })
        .collect()
}

fn overfit(arch: Architecture, need: f64) -> Outcome {
    let start = Instant::now();
    let data = toy_examples();
    let cfg = TrainConfig {
        max_epochs: 200,
        patience: 200,
        seed: 3,
        ..TrainConfig::default()
    };
    let net = Network::initialized(arch, 3).unwrap();
    let out = train(net, &data, &data, &cfg).map_err(|e| e.to_string())?;
    let acc = accuracy(&out.network, &data).map_err(|e| e.to_string())?;
    let first = out.history.iter().find(|h| h.dev_accuracy >= need).map(|h| h.epoch);
    within(
        Duration::from_secs(60),
        start,
        check(
            acc >= need,
            format!("training accuracy {acc:.3} (first reached {need} at epoch {first:?})"),
            format!("training accuracy {acc:.3} < {need} after {} epochs", out.history.len()),
        ),
    )
}

fn criterion_6() -> Outcome {
    let dim = SynthConfig::default().dim;
    let max_len = SynthConfig::default().max_len;
    let cnn = overfit(Architecture::Cnn(CnnConfig::new(dim, max_len)), 0.99)?;
    let lstm = overfit(Architecture::Lstm(LstmConfig::new(dim)), 0.95)?;
    Ok(format!("CNN: {cnn}. LSTM: {lstm}"))
}

fn synth_data(seed: u64) -> ExperimentData {
    let c = generate(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    ExperimentData {
        tweets: c.tweets,
        tables: c.tables,
        dictionaries: c.dictionaries,
        ..ExperimentData::default()
    }
}

fn cnn_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        folds: 5,
        seed,
        kind: ClassifierKind::Cnn,
        pivot_k: 60,
        pivot_train: 50,
        ..ExperimentConfig::default()
    };
    cfg.neural.train.max_epochs = 30;
    cfg
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut rows = Vec::new();
    let mut ok = true;
    for seed in 0..5u64 {
        let data = synth_data(seed);
        let mut cfg = cnn_config(seed);
        let raw = run_cv(&cfg, &data).map_err(|e| e.to_string())?;
        cfg.alignment = AlignmentMode::Refit;
        let aligned = run_cv(&cfg, &data).map_err(|e| e.to_string())?;
        let gap = aligned.mean_accuracy - raw.mean_accuracy;
        ok &= gap >= 0.05;
        rows.push(format!(
            "seed {seed}: {:.3} vs {:.3} ({gap:+.3})",
            aligned.mean_accuracy, raw.mean_accuracy
        ));
    }
    within(
        Duration::from_secs(300),
        start,
        check(
            ok,
            format!("aligned vs raw 5-fold CNN accuracy, gap >= 0.05 on every seed: {}", rows.join("; ")),
            format!("gap below 0.05: {}", rows.join("; ")),
        ),
    )
}

/// Minimizes `1/2 (w1^2 + w2^2 + b^2) + C sum hinge` by a grid that zooms
/// in around its best point. The objective is 1-strongly convex, so a
/// near-minimal grid value pins the minimizer.
fn primal_grid_oracle(points: &[([f64; 2], f64)], c: f64) -> [f64; 3] {
    let objective = |p: [f64; 3]| {
        let reg = 0.5 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        reg + c * points
            .iter()
            .map(|(x, y)| (1.0 - y * (p[0] * x[0] + p[1] * x[1] + p[2])).max(0.0))
            .sum::<f64>()
    };
    let mut center = [0.0; 3];
    let mut half = 8.0;
    let steps = 40;
    for _ in 0..16 {
        let mut best = (f64::INFINITY, center);
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps {
                    let p = [
                        center[0] - half + 2.0 * half * i as f64 / steps as f64,
                        center[1] - half + 2.0 * half * j as f64 / steps as f64,
                        center[2] - half + 2.0 * half * k as f64 / steps as f64,
                    ];
                    let v = objective(p);
                    if v < best.0 {
                        best = (v, p);
                    }
                }
            }
        }
        center = best.1;
        half /= 4.0;
    }
    center
}

fn criterion_8() -> Outcome {
    // Naive Bayes: positive docs {f0}, {f0, f1}; negative docs {f1}, {f1}
    let docs = vec![
        SparseBinaryVector::from_ids(vec![0]),
        SparseBinaryVector::from_ids(vec![0, 1]),
        SparseBinaryVector::from_ids(vec![1]),
        SparseBinaryVector::from_ids(vec![1]),
    ];
    let labels = [Polarity::Positive, Polarity::Positive, Polarity::Negative, Polarity::Negative];
    let nb = train_nb(&docs, &labels, 2, 1.0, NbEvent::Multinomial).map_err(|e| e.to_string())?;
    // P(f0|pos) = 3/5, P(f1|pos) = 2/5, P(f0|neg) = 1/4, P(f1|neg) = 3/4
    let table: [(&[u32], f64); 4] = [(&[0, 1], 32.0 / 57.0), (&[0], 12.0 / 17.0), (&[1], 8.0 / 23.0), (&[], 0.5)];
    let mut nb_err: f64 = 0.0;
    for (ids, pos) in table {
        let p = nb.posterior(&SparseBinaryVector::from_ids(ids.to_vec()));
        nb_err = nb_err.max((p[0] - pos).abs()).max((p[2] - (1.0 - pos)).abs()).max(p[1].abs());
    }

    let points: Vec<([f64; 2], f64)> = vec![
        ([1.0, 2.0], 1.0),
        ([2.0, 3.0], 1.0),
        ([2.0, 0.5], 1.0),
        ([0.0, 0.0], -1.0),
        ([1.0, 0.0], -1.0),
        ([1.5, 1.8], -1.0),
    ];
    let rows: Vec<Vec<f64>> = points.iter().map(|(x, _)| x.to_vec()).collect();
    let y: Vec<f64> = points.iter().map(|(_, y)| *y).collect();
    let (svm, trace) = train_binary_svm(&rows, &y, 2, &DcdOptions::default()).map_err(|e| e.to_string())?;
    let oracle = primal_grid_oracle(&points, 1.0);
    let got = [svm.weights[0], svm.weights[1], svm.bias];
    let svm_err = got.iter().zip(oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let monotone = trace.dual_objective.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    check(
        nb_err <= 1e-12 && svm_err <= 1e-3 && monotone && trace.converged,
        format!(
            "NB posterior error {nb_err:.1e}; SVM (w, b) {got:.4?} vs oracle {oracle:.4?} (error {svm_err:.1e}); dual monotone over {} sweeps",
            trace.dual_objective.len()
        ),
        format!("NB error {nb_err:.1e}, SVM error {svm_err:.1e}, monotone {monotone}, converged {}", trace.converged),
    )
}

fn criterion_9() -> Outcome {
    let data = synth_data(11);
    let plan = make_folds(&data.tweets, 10, 11, true).map_err(|e| e.to_string())?;
    let sizes = plan.fold_sizes();
    let every_once = data.tweets.iter().all(|t| plan.fold_of(&t.id).is_some()) && plan.assignments.len() == data.tweets.len();
    let balanced = sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1;
    let mut disjoint = true;
    for fold in 0..10 {
        let (train, test) = plan.split_indices(&data.tweets, fold);
        let a: HashSet<usize> = train.iter().copied().collect();
        disjoint &= test.iter().all(|i| !a.contains(i)) && train.len() + test.len() == data.tweets.len();
    }

    let mut audit = LeakageAudit::new(["x-1"]);
    audit.consult(["x-1"]);
    let guard_fires = audit.verify().is_err();

    let nb_cfg = ExperimentConfig {
        kind: ClassifierKind::Nb,
        folds: 10,
        seed: 11,
        ..ExperimentConfig::default()
    };
    let mut cnn_cfg = cnn_config(11);
    cnn_cfg.alignment = AlignmentMode::Refit;
    let mut identical = true;
    for cfg in [&nb_cfg, &cnn_cfg] {
        let a = run_cv(cfg, &data).map_err(|e| e.to_string())?;
        let b = run_cv(cfg, &data).map_err(|e| e.to_string())?;
        identical &= a == b && a.mean_accuracy.to_bits() == b.mean_accuracy.to_bits();
    }
    check(
        every_once && balanced && disjoint && guard_fires && identical,
        format!("folds partition the corpus (sizes {sizes:?}); id audit clean on NB and refit-CNN runs; repeated runs identical"),
        format!("partition {every_once}, balanced {balanced}, disjoint {disjoint}, guard {guard_fires}, identical {identical}"),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = SeededRng::new(10, 504);
    let mut worst_sum: f64 = 0.0;
    let mut positive = true;
    for case in 0..1000u64 {
        let p = if case % 2 == 0 {
            softmax(&[rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)])
        } else {
            let net = Network::initialized(
                Architecture::Cnn(CnnConfig {
                    dim: 3,
                    windows: vec![2],
                    filters_per_window: 3,
                    activation: Activation::Tanh,
                    max_len: 6,
                }),
                case,
            )
            .unwrap();
            let len = 1 + rng.below(6) as usize;
            let data = (0..len * 3).map(|_| rng.uniform(-10.0, 10.0)).collect();
            net.probabilities(&PaddedTweetMatrix::new(Matrix::from_vec(len, 3, data).unwrap(), 6))
                .unwrap()
        };
        worst_sum = worst_sum.max((p.iter().sum::<f64>() - 1.0).abs());
        positive &= p.iter().all(|&v| v > 0.0);
    }

    let mut h_max: f64 = 0.0;
    for case in 0..1000u64 {
        let net = Network::initialized(Architecture::Lstm(LstmConfig::new(4)), case).unwrap();
        let scale = rng.uniform(0.1, 50.0);
        let (mut h, mut c) = (vec![0.0; 4], vec![0.0; 4]);
        for _ in 0..1 + rng.below(20) {
            let x: Vec<f64> = (0..4).map(|_| scale * rng.uniform(-1.0, 1.0)).collect();
            (h, c) = net.lstm_cell_step(&x, &h, &c).unwrap();
            h_max = h.iter().fold(h_max, |m, v| m.max(v.abs()));
        }
    }
    check(
        worst_sum <= 1e-9 && positive && h_max < 1.0,
        format!("1000 cases each: max |sum p - 1| = {worst_sum:.1e}, all p > 0; max |h_t| = {h_max:.6}"),
        format!("max |sum p - 1| = {worst_sum:.1e}, positive {positive}, max |h_t| = {h_max}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("alignment exactness", criterion_1),
        ("alignment improves held-out distances", criterion_2),
        ("gradient checks", criterion_3),
        ("forward hand oracles", criterion_4),
        ("Adadelta oracle", criterion_5),
        ("overfit sanity", criterion_6),
        ("alignment helps cross-lingual CNN", criterion_7),
        ("baseline oracles", criterion_8),
        ("harness integrity", criterion_9),
        ("softmax normalization and LSTM bound", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  criterion {:>2}  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {:>2}  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
