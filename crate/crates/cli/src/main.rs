use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use xlsent::align::{
    alignment_report, fit_translation_matrix, resolve_pairs, select_pivot_pairs, Dictionary, FitOptions,
    PivotSelection, RankedSide, Solver, TranslationMatrix,
};
use xlsent::baselines::{train_nb, train_svm_ovo, DcdOptions, FeatureSpace};
use xlsent::corpus::{load_corpus, make_folds, CorpusFormat, Lang, LanguageSet, Polarity, TweetRecord};
use xlsent::embeddings::{load_embedding_table, load_frequency_tsv, ranks_from_counts};
use xlsent::eval::{
    compare_runs, load_data, predict, run_experiment, train_final, ClassifierKind, ExperimentConfig, ExperimentData,
};
use xlsent::nn::{training_log_csv, TrainedModel};
use xlsent::preprocess::{preprocess_corpus, NormalizationRuleSet, TokenizeMode};
use xlsent::synth::{generate, SynthConfig};
use xlsent::{Error, Result};

#[derive(Parser)]
#[command(name = "xlsent", version, about = "Cross-lingual tweet sentiment classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Experiment configuration: a key = value file plus overrides.
#[derive(clap::Args)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` override, applied after the file; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Src,
    Tgt,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Normal,
    Gd,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize and tokenize a corpus into pretokenized JSONL.
    Preprocess {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "whitespace")]
        mode: TokenizeMode,
        #[arg(long, default_value = "en,ja,zh")]
        languages: String,
    },
    /// Print the fold of every record as `id<TAB>fold`.
    Folds {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Stratify by label (the default).
        #[arg(long, overrides_with = "no_stratify")]
        stratify: bool,
        #[arg(long)]
        no_stratify: bool,
        #[arg(long, default_value = "en,ja,zh")]
        languages: String,
    },
    /// Fit a translation matrix from pivot word pairs.
    Align {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long, default_value = "ja")]
        src_lang: String,
        #[arg(long, default_value = "en")]
        tgt_lang: String,
        #[arg(long)]
        dict: PathBuf,
        #[arg(long, default_value_t = 3500)]
        k: usize,
        #[arg(long, default_value_t = 3000)]
        train: usize,
        /// Side whose frequency ranks choose the pivots.
        #[arg(long, value_enum, default_value = "tgt")]
        rank_by: Side,
        /// `word<TAB>count` file for the ranked side; without it the
        /// embedding file order is the rank.
        #[arg(long)]
        freq: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "normal")]
        solver: SolverArg,
        #[arg(long)]
        out: PathBuf,
        /// Print distance sums over the held-out pairs.
        #[arg(long)]
        report: bool,
    },
    /// Train one neural model on the whole corpus.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Checkpoint path; the training log goes to `<out>.log.csv` and
        /// translation matrices to `<out>.<lang>.mat`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate an n-gram baseline.
    Baseline {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "nb")]
        model: String,
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Also train on the whole corpus and write the feature space and
        /// model dumps here.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Cross-validate one or more configurations.
    Evaluate {
        /// Repeat to compare several runs.
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Run name that comparison deltas are taken against.
        #[arg(long)]
        baseline: Option<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Classify tweets with a trained checkpoint.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the synthetic trilingual fixture and a matching config.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn languages(list: &str) -> LanguageSet {
    LanguageSet::new(list.split(',').map(|s| Lang::new(s.trim())))
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    apply_overrides(&mut cfg, &args.overrides)?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ExperimentConfig, overrides: &[String]) -> Result<()> {
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Argument(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim(), Path::new("."))?;
    }
    Ok(())
}

fn write(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

fn cmd_preprocess(input: &Path, out: &Path, mode: TokenizeMode, langs: &str) -> Result<()> {
    let langs = languages(langs);
    let records = load_corpus(input, CorpusFormat::from_path(input), &langs)?;
    let rules = NormalizationRuleSet::for_languages(langs.iter());
    let pre = preprocess_corpus(&records, &rules, mode)?;
    for id in &pre.dropped {
        log::warn!("record {id} is empty after normalization, dropped");
    }
    let mut lines = String::new();
    for t in pre.tweets {
        let rec = TweetRecord {
            id: t.id,
            lang: t.lang,
            text: t.tokens.join(" "),
            tokens: Some(t.tokens),
            label: t.label,
        };
        lines.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        lines.push('\n');
    }
    write(out, &lines)
}

fn cmd_folds(input: &Path, folds: usize, seed: u64, stratify: bool, langs: &str) -> Result<()> {
    let records = load_corpus(input, CorpusFormat::from_path(input), &languages(langs))?;
    let plan = make_folds(&records, folds, seed, stratify)?;
    let mut out = String::new();
    for r in &records {
        out.push_str(&format!("{}\t{}\n", r.id, plan.fold_of(&r.id).expect("every record has a fold")));
    }
    // a closed pipe (`| head`) is not an error
    match std::io::stdout().write_all(out.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_align(
    src: &Path,
    tgt: &Path,
    src_lang: Lang,
    tgt_lang: Lang,
    dict: &Path,
    k: usize,
    train: usize,
    rank_by: Side,
    freq: Option<&Path>,
    seed: u64,
    solver: SolverArg,
    out: &Path,
    report: bool,
) -> Result<()> {
    let src_table = load_embedding_table(src, src_lang.clone())?;
    let tgt_table = load_embedding_table(tgt, tgt_lang.clone())?;
    let dict = Dictionary::load(dict)?.resolvable(&src_table, &tgt_table);
    let (side, ranked) = match rank_by {
        Side::Src => (RankedSide::Source, &src_table),
        Side::Tgt => (RankedSide::Target, &tgt_table),
    };
    let ranks: HashMap<String, usize> = match freq {
        Some(path) => ranks_from_counts(&load_frequency_tsv(path)?),
        None => ranked.words().iter().enumerate().map(|(i, w)| (w.clone(), i + 1)).collect(),
    };
    let set = select_pivot_pairs(
        &ranks,
        &dict,
        &PivotSelection {
            src_lang: src_lang.clone(),
            tgt_lang: tgt_lang.clone(),
            side,
            k,
            train_count: train,
            seed,
        },
    )?;
    let (x, z) = resolve_pairs(&set.train, &src_table, &tgt_table)?;
    let opts = FitOptions {
        solver: match solver {
            SolverArg::Normal => Solver::NormalEquations,
            SolverArg::Gd => Solver::GradientDescent {
                max_iters: 100_000,
                tol: 1e-10,
            },
        },
        ..FitOptions::default()
    };
    let w = fit_translation_matrix(&x, &z, src_lang, tgt_lang, &opts)?;
    w.save(out)?;
    println!("fitted {} -> {} on {} pairs, residual {:.6}", w.src_lang, w.tgt_lang, set.train.len(), w.fit_residual);
    if report && !set.test.is_empty() {
        let (xt, zt) = resolve_pairs(&set.test, &src_table, &tgt_table)?;
        let r = alignment_report(&xt, &zt, &w);
        println!("held-out pairs: {}", r.pairs);
        println!("euclidean sum: {:.4} -> {:.4}", r.euclidean_sum_before, r.euclidean_sum_after);
        println!("cosine sum:    {:.4} -> {:.4}", r.cosine_sum_before, r.cosine_sum_after);
    }
    Ok(())
}

fn matrix_path(model: &Path, lang: &Lang) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(format!(".{lang}.mat"));
    PathBuf::from(s)
}

fn cmd_train(mut cfg: ExperimentConfig, kind: Option<&str>, seed: Option<u64>, out: &Path) -> Result<()> {
    if let Some(kind) = kind {
        cfg.set("kind", kind, Path::new("."))?;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let data = load_data(&cfg)?;
    let fin = train_final(&cfg, &data)?;
    fin.model.save(out)?;
    let mut log_path = out.as_os_str().to_owned();
    log_path.push(".log.csv");
    write(Path::new(&log_path), &training_log_csv(&fin.model.history))?;
    for (lang, m) in &fin.matrices {
        m.save(&matrix_path(out, lang))?;
    }
    let best = fin.model.history.iter().map(|h| h.dev_accuracy).fold(f64::NAN, f64::max);
    println!(
        "trained {} for {} epochs, best dev accuracy {best:.4}; wrote {}",
        cfg.kind,
        fin.model.history.len(),
        out.display()
    );
    Ok(())
}

fn cmd_baseline(cfg: ExperimentConfig, dump: Option<&Path>, csv: Option<&Path>) -> Result<()> {
    if cfg.kind.is_neural() {
        return Err(Error::Argument(format!("--model must be nb or svm, got {}", cfg.kind)));
    }
    let report = run_experiment(&cfg)?;
    print!("{}", report.to_text());
    if let Some(path) = csv {
        write(path, &report.to_csv())?;
    }
    if let Some(dir) = dump {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let data = load_data(&cfg)?;
        let tweets: Vec<_> = data.tweets.iter().filter(|t| cfg.languages.contains(&t.lang)).collect();
        let space = FeatureSpace::build(tweets.iter().copied(), cfg.scheme);
        let vectors: Vec<_> = tweets.iter().map(|t| space.vectorize(t)).collect();
        let labels: Vec<Polarity> = tweets.iter().map(|t| t.label).collect();
        write(&dir.join("features.txt"), &space.to_text())?;
        let model = match cfg.kind {
            ClassifierKind::Nb => train_nb(&vectors, &labels, space.len(), cfg.nb_alpha, cfg.nb_event)?.to_text(),
            _ => {
                let opts = DcdOptions {
                    c: cfg.svm_c,
                    ..DcdOptions::default()
                };
                train_svm_ovo(&vectors, &labels, space.len(), &opts)?.to_text()
            }
        };
        write(&dir.join(format!("{}.txt", cfg.kind)), &model)?;
    }
    Ok(())
}

fn cmd_evaluate(configs: &[PathBuf], overrides: &[String], baseline: Option<&str>, csv: Option<&Path>) -> Result<()> {
    let mut reports = Vec::new();
    for path in configs {
        let mut cfg = ExperimentConfig::load(path)?;
        apply_overrides(&mut cfg, overrides)?;
        let report = run_experiment(&cfg)?;
        print!("{}", report.to_text());
        reports.push(report);
    }
    if reports.len() > 1 {
        let cmp = compare_runs(&reports, baseline)?;
        print!("\n{}", cmp.to_text());
        if let Some(path) = csv {
            write(path, &cmp.to_csv())?;
        }
    } else if let Some(path) = csv {
        write(path, &reports[0].to_csv())?;
    }
    Ok(())
}

/// A tweet to classify; the label is optional.
#[derive(Deserialize)]
struct PredictInput {
    id: String,
    lang: Lang,
    #[serde(default)]
    text: String,
    tokens: Option<Vec<String>>,
    label: Option<String>,
}

#[derive(Serialize)]
struct Prediction<'a> {
    id: &'a str,
    lang: &'a Lang,
    label: &'static str,
    probabilities: BTreeMap<&'static str, f64>,
}

fn cmd_predict(mut cfg: ExperimentConfig, model_path: &Path, input: &Path, out: &Path) -> Result<()> {
    let model = TrainedModel::load(model_path)?;
    // out-of-vocabulary vectors are seeded with the run seed the model was trained under
    cfg.seed = model.train_config.seed;
    let mut data = ExperimentData::default();
    for (lang, path) in &cfg.embeddings {
        data.tables.insert(lang.clone(), load_embedding_table(path, lang.clone())?);
    }
    let mut matrices = BTreeMap::new();
    for lang in cfg.languages.iter() {
        let path = matrix_path(model_path, lang);
        if path.exists() {
            matrices.insert(lang.clone(), TranslationMatrix::load(&path)?);
        }
    }
    let content = fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let mut records = Vec::new();
    let mut gold = HashMap::new();
    for (i, line) in content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let rec: PredictInput = serde_json::from_str(line).map_err(|e| Error::parse(input, i + 1, e.to_string()))?;
        if let Some(label) = &rec.label {
            let p: Polarity = label.parse().map_err(|e: String| Error::parse(input, i + 1, e))?;
            gold.insert(rec.id.clone(), p);
        }
        records.push(TweetRecord {
            id: rec.id,
            lang: rec.lang,
            text: rec.text,
            tokens: rec.tokens,
            label: Polarity::Neutral,
        });
    }
    let rules = NormalizationRuleSet::for_languages(cfg.languages.iter());
    let pre = preprocess_corpus(&records, &rules, cfg.tokenize)?;
    for id in &pre.dropped {
        log::warn!("record {id} is empty after normalization, not classified");
    }
    let preds = predict(&cfg, &data, &model, &matrices, &pre.tweets)?;
    let mut lines = String::new();
    let mut correct = 0;
    for (t, (label, p)) in pre.tweets.iter().zip(&preds) {
        if gold.get(&t.id) == Some(label) {
            correct += 1;
        }
        let row = Prediction {
            id: &t.id,
            lang: &t.lang,
            label: label.name(),
            probabilities: Polarity::ALL.iter().map(|c| (c.name(), p[c.code()])).collect(),
        };
        lines.push_str(&serde_json::to_string(&row).expect("prediction serializes"));
        lines.push('\n');
    }
    write(out, &lines)?;
    println!("classified {} tweets", preds.len());
    if !gold.is_empty() {
        println!("accuracy on labelled input: {:.4} ({correct}/{})", correct as f64 / gold.len() as f64, gold.len());
    }
    Ok(())
}

fn cmd_synth(out: &Path, seed: u64) -> Result<()> {
    let cfg = SynthConfig {
        seed,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg)?;
    corpus.write_to_dir(out, &cfg.pivot)?;
    let mut exp = String::from(
        "name = synth\ncorpus = corpus.jsonl\ntokenize = pretokenized\nkind = cnn\nalignment = refit\n\
         pivot_k = 60\npivot_train = 50\nfolds = 5\nmax_epochs = 30\n",
    );
    exp.push_str(&format!("pivot = {}\nseed = {seed}\n", cfg.pivot));
    for lang in corpus.tables.keys() {
        exp.push_str(&format!("embeddings.{lang} = emb.{lang}.txt\n"));
    }
    for lang in corpus.dictionaries.keys() {
        exp.push_str(&format!("dictionary.{lang} = dict.{lang}-{}.tsv\n", cfg.pivot));
    }
    write(&out.join("experiment.cfg"), &exp)?;
    println!("wrote {} tweets to {}", corpus.tweets.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess {
            input,
            out,
            mode,
            languages,
        } => cmd_preprocess(&input, &out, mode, &languages),
        Command::Folds {
            input,
            folds,
            seed,
            no_stratify,
            languages,
            ..
        } => cmd_folds(&input, folds, seed, !no_stratify, &languages),
        Command::Align {
            src,
            tgt,
            src_lang,
            tgt_lang,
            dict,
            k,
            train,
            rank_by,
            freq,
            seed,
            solver,
            out,
            report,
        } => cmd_align(
            &src,
            &tgt,
            Lang::new(&src_lang),
            Lang::new(&tgt_lang),
            &dict,
            k,
            train,
            rank_by,
            freq.as_deref(),
            seed,
            solver,
            &out,
            report,
        ),
        Command::Train { config, kind, seed, out } => cmd_train(load_config(&config)?, kind.as_deref(), seed, &out),
        Command::Baseline {
            config,
            corpus,
            model,
            scheme,
            c,
            alpha,
            dump,
            csv,
        } => {
            let mut cfg = load_config(&config)?;
            let here = Path::new(".");
            if let Some(corpus) = corpus {
                cfg.corpus = Some(corpus);
            }
            cfg.set("kind", &model, here)?;
            if let Some(s) = scheme {
                cfg.set("scheme", &s, here)?;
            }
            if let Some(c) = c {
                cfg.svm_c = c;
            }
            if let Some(a) = alpha {
                cfg.nb_alpha = a;
            }
            cmd_baseline(cfg, dump.as_deref(), csv.as_deref())
        }
        Command::Evaluate {
            configs,
            overrides,
            baseline,
            csv,
        } => cmd_evaluate(&configs, &overrides, baseline.as_deref(), csv.as_deref()),
        Command::Predict {
            model,
            config,
            input,
            out,
        } => cmd_predict(load_config(&config)?, &model, &input, &out),
        Command::Synth { out, seed } => cmd_synth(&out, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Leakage { .. } => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
