//! Acceptance gate for the whole workspace: nine checks, each printing one
//! PASS line with its runtime. Run with `--nocapture` to see the lines:
//!
//!   cargo test -p eib-cli --test acceptance -- --nocapture
//!
//! The checks cover the analytic compression term against Monte Carlo, the
//! backward pass against finite differences, smoke training behavior, the
//! compression/preservation trade-off, an overfit oracle, corruption-builder
//! invariants, metric oracles, prompt goldens and whole-pipeline determinism.

use eib_core::bottleneck::{compression_loss, GaussianBottleneck};
use eib_core::graph::Graph;
use eib_core::lm::LmShape;
use eib_core::model::{render_template, EibModel, ModelConfig, SerializeTemplates, TrainRecord};
use eib_core::seed::{derive_seed, stream_rng};
use eib_core::tensor::Tensor;
use eib_core::text::{ExplanationText, TaskSample};
use eib_core::tokenizer::Vocab;
use eib_core::train::{train, TrainConfig};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

fn report_pass(tag: &str, detail: &str, started: Instant, budget_s: u64) {
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs() < budget_s,
        "[{tag}] exceeded its {budget_s}s budget: {elapsed:?}"
    );
    println!("[{tag}] PASS in {:.2}s ({detail})", elapsed.as_secs_f64());
}

// ---------------------------------------------------------------------------
// 1. Closed-form compression term vs Monte Carlo
// ---------------------------------------------------------------------------

#[test]
fn c1_closed_form_kl_matches_monte_carlo() {
    let started = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xC1);
    let mc_samples = 100_000usize;
    let mut worst_rel = 0.0f64;

    for _draw in 0..20 {
        let n = rng.gen_range(1..=3usize);
        let k = rng.gen_range(2..=6usize);
        let means: Vec<f64> = (0..n * k).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let log_stds: Vec<f64> = (0..n * k).map(|_| rng.gen_range(-1.0..0.7)).collect();

        let analytic = compression_loss(&GaussianBottleneck::new(
            Tensor::new(n, k, means.clone()),
            Tensor::new(n, k, log_stds.clone()),
        ));

        // Estimate E_q[log q(z) - log p(z)] by sampling z = mu + sigma * eps.
        // Per coordinate that integrand is -log sigma - eps^2/2 + z^2/2.
        let mut acc = 0.0f64;
        for _ in 0..mc_samples {
            let mut term = 0.0f64;
            for i in 0..n * k {
                let eps: f64 = rng.sample(StandardNormal);
                let sigma = log_stds[i].exp();
                let z = means[i] + sigma * eps;
                term += -log_stds[i] - 0.5 * eps * eps + 0.5 * z * z;
            }
            acc += term;
        }
        let estimate = acc / mc_samples as f64;

        let rel = (analytic - estimate).abs() / analytic.abs().max(1e-12);
        worst_rel = worst_rel.max(rel);
        assert!(
            rel <= 0.01,
            "analytic {analytic:.6} vs MC {estimate:.6} (rel {rel:.4})"
        );
    }

    // A standard-normal posterior carries no information at all.
    let zero: f64 = compression_loss(&GaussianBottleneck::new(
        Tensor::zeros(2, 4),
        Tensor::zeros(2, 4),
    ));
    assert!(zero.abs() <= 1e-9, "KL at the prior came out {zero:.3e}");

    report_pass(
        "c1",
        &format!("20 draws vs 1e5-sample MC, worst rel err {worst_rel:.2e}"),
        started,
        30,
    );
}

// ---------------------------------------------------------------------------
// 2. Finite-difference check on bottleneck and prefix parameters
// ---------------------------------------------------------------------------

fn fd_model() -> EibModel<f64> {
    let lm = LmShape {
        layers: 1,
        d_model: 8,
        n_heads: 2,
        ff_mult: 2,
        max_seq_len: 48,
    };
    let cfg = ModelConfig {
        encoder: lm.clone(),
        preservation: lm.clone(),
        generator: lm,
        bottleneck_k: 4,
        bottleneck_hidden: 6,
        encoder_max_len: 24,
        templates: SerializeTemplates::default(),
    };
    let vocab = Vocab::build([
        "Rain is water. Water makes people wet.",
        "why is rain wet true",
        "context: output: candidate: refined:",
    ]);
    EibModel::new(cfg, vocab, 11).unwrap()
}

fn fd_record() -> TrainRecord {
    TrainRecord {
        sample: TaskSample {
            id: "fd".into(),
            task: "qa".into(),
            context: "why is rain wet".into(),
            output: "true".into(),
        },
        synthetic: ExplanationText::new("Water people makes wet. Rain is water.").unwrap(),
        gold: ExplanationText::new("Rain is water. Water makes people wet.").unwrap(),
    }
}

#[test]
fn c2_bottleneck_and_prefix_gradients_match_finite_differences() {
    let started = Instant::now();
    let mut model = fd_model();
    assert!(
        model.params.count(false) <= 5_000,
        "finite-difference model has {} parameters",
        model.params.count(false)
    );

    // Nudge every trainable tensor off its symmetric initialization so
    // zero-started heads cannot hide a wrong gradient behind an exact zero.
    let mut jitter_rng = stream_rng(0xC2, "fd-jitter", 0);
    let names: Vec<String> = model
        .params
        .entries()
        .filter(|e| e.trainable)
        .map(|e| e.name.clone())
        .collect();
    for name in &names {
        let id = model.params.by_name(name).unwrap();
        for v in model.params.value_mut(id).data_mut() {
            let z: f64 = jitter_rng.sample(StandardNormal);
            *v += 0.05 * z;
        }
    }

    let rec = fd_record();
    let cfg = TrainConfig {
        mc_samples: 2,
        beta: 0.5,
        ..TrainConfig::default()
    };
    let mc_seed = 314;
    let h = 1e-4f64;

    let mut g = Graph::new();
    let vars = model.record_loss_graph(&mut g, &rec, &cfg, mc_seed);
    let grads = g.backward(vars.total, 1.0);
    model.params.zero_grads();
    g.scatter_grads(&grads, &mut model.params, 1.0);

    let targets: Vec<(String, Vec<f64>)> = model
        .params
        .entries()
        .filter(|e| e.name.starts_with("bneck.") || e.name.contains("_prefix."))
        .map(|e| (e.name.clone(), e.grad.data().to_vec()))
        .collect();
    assert!(!targets.is_empty());

    let value_at = |model: &EibModel<f64>| -> f64 {
        let mut g = Graph::new();
        let vars = model.record_loss_graph(&mut g, &rec, &cfg, mc_seed);
        g.value(vars.total).item()
    };

    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for (name, grad) in &targets {
        let id = model.params.by_name(name).unwrap();
        for i in 0..grad.len() {
            let orig = model.params.value(id).data()[i];
            model.params.value_mut(id).data_mut()[i] = orig + h;
            let up = value_at(&model);
            model.params.value_mut(id).data_mut()[i] = orig - h;
            let down = value_at(&model);
            model.params.value_mut(id).data_mut()[i] = orig;

            let numeric = (up - down) / (2.0 * h);
            let a = grad[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            assert!(
                rel <= 1e-3,
                "{name}[{i}]: analytic {a:.6e} vs numeric {numeric:.6e} (rel {rel:.3e})"
            );
            checked += 1;
        }
    }
    let expected: usize = targets.iter().map(|(_, g)| g.len()).sum();
    assert_eq!(checked, expected);

    report_pass(
        "c2",
        &format!("{checked} coordinates, worst rel err {worst:.2e}"),
        started,
        120,
    );
}

// ---------------------------------------------------------------------------
// 3 and 4. Smoke training and the compression trade-off (shared harness)
// ---------------------------------------------------------------------------

struct SmokeRun {
    /// Per-epoch training averages in log order.
    train_epochs: Vec<eib_core::loss::LossBreakdown>,
    /// Mean preservation gain over the training records after training.
    post_gain: f64,
    seconds: f64,
}

/// 200 train plus 16 validation records over three independent binary word
/// factors. Each factor gives the sample output one position the
/// unconditional model cannot predict at all, while the candidate text spells
/// the answer out, so reading the bottleneck is worth a solid fraction of a
/// nat per record once the projections align. Richer corpora stall at this
/// learning rate: the decoder routes around the still-noisy prefix faster
/// than the bottleneck learns to load it.
fn smoke_corpus() -> (Vec<TrainRecord>, Vec<TrainRecord>) {
    let pairs = [("rain", "fire"), ("ground", "air"), ("wet", "dry")];
    let mut records = Vec::with_capacity(216);
    for idx in 0..216usize {
        let pick: Vec<&str> = (0..pairs.len())
            .map(|f| {
                let (a, b) = pairs[f];
                if (idx >> f) & 1 == 0 {
                    a
                } else {
                    b
                }
            })
            .collect();
        let joined = pick.join(" ");
        records.push(TrainRecord {
            sample: TaskSample {
                id: format!("smoke-{idx}"),
                task: "qa".into(),
                context: "show".into(),
                output: joined.clone(),
            },
            synthetic: ExplanationText::new(&format!("A {joined} sign fades.")).unwrap(),
            gold: ExplanationText::new(&format!("The {joined} sign glows.")).unwrap(),
        });
    }
    use rand::seq::SliceRandom;
    records.shuffle(&mut stream_rng(0xC3, "smoke-split", 0));
    let valid = records.split_off(200);
    (records, valid)
}

fn smoke_vocab(cfg: &ModelConfig, records: &[TrainRecord]) -> Vocab {
    let mut texts = Vec::new();
    for r in records {
        texts.push(render_template(&cfg.templates.preservation, &r.sample, None));
        texts.push(render_template(
            &cfg.templates.generator,
            &r.sample,
            Some(r.synthetic.text()),
        ));
        texts.push(r.gold.text().to_string());
    }
    Vocab::build(texts.iter().map(|s| s.as_str()))
}

fn run_smoke(beta: f64) -> SmokeRun {
    let started = Instant::now();
    let lm32 = |layers: usize| LmShape {
        layers,
        d_model: 32,
        n_heads: 4,
        ff_mult: 2,
        max_seq_len: 128,
    };
    // A bare preservation template keeps the target nearly all signal
    // positions, which is what lets the prefix pathway win before the
    // decoder learns to ignore it.
    let cfg = ModelConfig {
        encoder: lm32(2),
        preservation: lm32(2),
        generator: lm32(1),
        bottleneck_k: 16,
        bottleneck_hidden: 64,
        encoder_max_len: 32,
        templates: SerializeTemplates {
            preservation: "{z_c} {z_o}".into(),
            ..SerializeTemplates::default()
        },
    };
    let (train_recs, valid_recs) = smoke_corpus();
    let mut all = train_recs.clone();
    all.extend(valid_recs.iter().cloned());
    let vocab = smoke_vocab(&cfg, &all);
    let mut model: EibModel<f64> = EibModel::new(cfg, vocab, 42).unwrap();

    let tc = TrainConfig {
        learning_rate: 5e-5,
        batch_size: 1,
        max_epochs: 20,
        early_stop_patience: 20,
        beta,
        mc_samples: 5,
        seed: 42,
    };
    let outcome = train(&mut model, &train_recs, &valid_recs, &tc, |_| {}).unwrap();
    let train_epochs: Vec<_> = outcome
        .log
        .iter()
        .filter(|l| l.split == "train")
        .map(|l| l.losses)
        .collect();

    // Post-training read of the preservation gain on the training records.
    let mut gain = 0.0f64;
    for (i, rec) in train_recs.iter().enumerate() {
        let mut g = Graph::new();
        let vars =
            model.record_loss_graph(&mut g, rec, &tc, derive_seed(42, "post-eval", i as u64));
        let cond = g.value(vars.conditional).item();
        let uncond = g.value(vars.unconditional).item();
        gain += uncond - cond;
    }
    gain /= train_recs.len() as f64;

    SmokeRun {
        train_epochs,
        post_gain: gain,
        seconds: started.elapsed().as_secs_f64(),
    }
}

static SMOKE_LOW_BETA: OnceLock<SmokeRun> = OnceLock::new();
static SMOKE_HIGH_BETA: OnceLock<SmokeRun> = OnceLock::new();

fn smoke_low_beta() -> &'static SmokeRun {
    SMOKE_LOW_BETA.get_or_init(|| run_smoke(1e-4))
}

fn smoke_high_beta() -> &'static SmokeRun {
    SMOKE_HIGH_BETA.get_or_init(|| run_smoke(1.0))
}

#[test]
fn c3_smoke_training_reduces_loss_and_preserves_information() {
    let started = Instant::now();
    let run = smoke_low_beta();

    let first = run.train_epochs.first().expect("at least one epoch").total;
    let last = run.train_epochs.last().unwrap().total;
    assert!(
        last <= 0.7 * first,
        "train total went {first:.3} -> {last:.3}, ratio {:.3}",
        last / first
    );
    assert!(
        run.post_gain > 0.0,
        "mean preservation gain after training is {:.4}",
        run.post_gain
    );
    assert!(run.seconds < 600.0, "training took {:.1}s", run.seconds);

    report_pass(
        "c3",
        &format!(
            "{} epochs, train total {first:.2} -> {last:.2}, gain {:.3}",
            run.train_epochs.len(),
            run.post_gain
        ),
        started,
        600,
    );
}

#[test]
fn c4_high_beta_compresses_at_least_as_hard_as_low_beta() {
    let started = Instant::now();
    let low = smoke_low_beta();
    let high = smoke_high_beta();

    let low_c = low.train_epochs.last().unwrap().compression;
    let high_c = high.train_epochs.last().unwrap().compression;
    assert!(
        high_c <= low_c,
        "compression under beta=1.0 is {high_c:.6}, above the beta=1e-4 value {low_c:.6}"
    );

    report_pass(
        "c4",
        &format!("final compression {high_c:.4} (beta 1.0) vs {low_c:.4} (beta 1e-4)"),
        started,
        600,
    );
}

// ---------------------------------------------------------------------------
// 5. Overfit oracle on a single record
// ---------------------------------------------------------------------------

#[test]
fn c5_single_record_overfit_memorizes_and_refines_exactly() {
    let started = Instant::now();
    let lm = LmShape {
        layers: 1,
        d_model: 16,
        n_heads: 2,
        ff_mult: 2,
        max_seq_len: 64,
    };
    let cfg = ModelConfig {
        encoder: lm.clone(),
        preservation: lm.clone(),
        generator: lm,
        bottleneck_k: 8,
        bottleneck_hidden: 12,
        encoder_max_len: 24,
        templates: SerializeTemplates::default(),
    };

    let record = TrainRecord {
        sample: TaskSample {
            id: "overfit".into(),
            task: "qa".into(),
            context: "why is the ground wet".into(),
            output: "rain".into(),
        },
        synthetic: ExplanationText::new("the ground makes rain wet.").unwrap(),
        gold: ExplanationText::new("rain makes the ground wet.").unwrap(),
    };
    let vocab = smoke_vocab(&cfg, std::slice::from_ref(&record));
    let mut model: EibModel<f64> = EibModel::new(cfg, vocab, 5).unwrap();

    // One record per batch and one record per epoch: 300 epochs is exactly
    // 300 optimizer steps.
    let tc = TrainConfig {
        learning_rate: 1e-2,
        batch_size: 1,
        max_epochs: 300,
        early_stop_patience: 300,
        beta: 1e-4,
        mc_samples: 2,
        seed: 5,
    };
    let records = vec![record.clone()];
    let outcome = train(&mut model, &records, &records, &tc, |_| {}).unwrap();

    let final_gen = outcome
        .log
        .iter()
        .rev()
        .find(|l| l.split == "train")
        .unwrap()
        .losses
        .generation_nll;
    let gen_tokens = model.vocab.encode(record.gold.text()).len() + 1;
    let per_token = final_gen / gen_tokens as f64;
    assert!(
        per_token < 0.1,
        "generation loss is {per_token:.4} nats/token after 300 steps"
    );

    let decode = eib_core::decode::DecodeConfig {
        strategy: eib_core::decode::Strategy::Greedy,
        max_len: 16,
        ..eib_core::decode::DecodeConfig::default()
    };
    let refined = eib_core::refine::refine(&model, &record.synthetic, &record.sample, &decode)
        .expect("refinement decodes");
    assert_eq!(
        refined.text(),
        record.gold.text(),
        "greedy refinement did not reproduce the gold explanation"
    );

    report_pass(
        "c5",
        &format!("{per_token:.4} nats/token, greedy refinement equals gold"),
        started,
        120,
    );
}

// ---------------------------------------------------------------------------
// 6. Corruption-builder invariants over a seeded sweep
// ---------------------------------------------------------------------------

#[test]
fn c6_thousand_corruption_records_hold_every_invariant() {
    let started = Instant::now();
    let lex = eib_mixexpl::Lexicon::bundled();

    let subjects = ["Water", "Rain", "Fire", "Ice", "Wind", "Snow"];
    let adjs = ["wet", "dry", "hot", "cold", "heavy", "light"];
    let mut golds = Vec::new();
    for (i, s) in subjects.iter().enumerate() {
        for (j, a) in adjs.iter().enumerate() {
            let filler = if (i + j) % 2 == 0 { "big" } else { "dark" };
            let text = format!(
                "{s} makes the ground {a}. People feel {a} air outside. The {filler} sky looks {} today.",
                adjs[(j + 1) % adjs.len()],
            );
            golds.push(ExplanationText::new(&text).unwrap());
        }
    }

    let mut count_hist = [0usize; 3];
    for seed in 0..1000u64 {
        let gold = &golds[(seed as usize) % golds.len()];
        let z = TaskSample {
            id: format!("c6-{seed}"),
            task: "qa".into(),
            context: format!("why does thing {seed} happen"),
            output: "because it does".into(),
        };
        match eib_mixexpl::build_record(gold, &z, &lex, &golds, seed) {
            eib_mixexpl::RecordOutcome::Record(r) => {
                r.validate().unwrap();
                assert_ne!(r.synthetic.text(), r.gold.text());
                assert!((2..=4).contains(&r.ops.len()));
                let distinct: HashSet<_> = r.ops.iter().collect();
                assert_eq!(distinct.len(), r.ops.len(), "repeated op in {:?}", r.ops);
                count_hist[r.ops.len() - 2] += 1;
            }
            eib_mixexpl::RecordOutcome::Skip { id, reason } => {
                panic!("rich fixture skipped: {id} ({reason})");
            }
        }
    }
    for (i, &n) in count_hist.iter().enumerate() {
        let share = n as f64 / 1000.0;
        assert!(
            (share - 1.0 / 3.0).abs() <= 0.05,
            "op count {} drawn {n}/1000 times, outside the uniform band",
            i + 2
        );
    }

    // Structural per-op properties, checked on each operation in isolation.
    use eib_mixexpl::ops::{
        corrupt_infilling, corrupt_negation, corrupt_repetition, corrupt_replacement,
        corrupt_shuffle, OpOutcome,
    };
    use eib_core::tokenizer::word_tokenize;
    for seed in 0..200u64 {
        let gold = &golds[(seed as usize) % golds.len()];
        let mut rng = stream_rng(seed, "c6-per-op", 0);

        match corrupt_repetition(gold, &mut rng) {
            OpOutcome::Changed(out) => assert!(
                word_tokenize(out.text()).len() > word_tokenize(gold.text()).len()
            ),
            OpOutcome::NoOp => panic!("repetition always applies"),
        }
        match corrupt_replacement(gold, &golds, &lex, &mut rng) {
            OpOutcome::Changed(out) => assert_ne!(out.text(), gold.text()),
            OpOutcome::NoOp => panic!("replacement applies to keyword fixtures"),
        }
        match corrupt_negation(gold, &lex, &mut rng) {
            OpOutcome::Changed(out) => {
                assert_ne!(out.text(), gold.text());
                assert_eq!(out.sentences().len(), gold.sentences().len());
            }
            OpOutcome::NoOp => panic!("negation applies to verb fixtures"),
        }
        match corrupt_shuffle(gold, &mut rng) {
            OpOutcome::Changed(out) => {
                let mut a = gold.sentences().to_vec();
                let mut b = out.sentences().to_vec();
                a.sort();
                b.sort();
                assert_eq!(a, b, "shuffle changed sentence content");
            }
            OpOutcome::NoOp => panic!("shuffle applies to multi-sentence fixtures"),
        }
        let infilled = corrupt_infilling(gold, &golds, &mut rng)
            .unwrap()
            .changed()
            .expect("infilling applies with a populated pool");
        assert_eq!(infilled.sentences().len(), gold.sentences().len() + 1);
    }

    report_pass(
        "c6",
        &format!(
            "1000 records, op counts {}/{}/{} for 2/3/4",
            count_hist[0], count_hist[1], count_hist[2]
        ),
        started,
        60,
    );
}

// ---------------------------------------------------------------------------
// 7. Metric oracles against an independent brute-force counter
// ---------------------------------------------------------------------------

/// How often `gram` occurs in `tokens`, by direct window comparison.
fn occurrences(tokens: &[String], gram: &[String]) -> u64 {
    if gram.is_empty() || tokens.len() < gram.len() {
        return 0;
    }
    tokens.windows(gram.len()).filter(|w| *w == gram).count() as u64
}

fn oracle_bleu(hyp: &[String], refs: &[Vec<String>], n: usize) -> f64 {
    // Clipped matches, one hypothesis occurrence at a time: the occurrence
    // counts while some reference still has capacity for its gram.
    let grams: Vec<&[String]> = if hyp.len() < n {
        Vec::new()
    } else {
        hyp.windows(n).collect()
    };
    let mut matched = 0u64;
    for (i, g) in grams.iter().enumerate() {
        let seen_before = grams[..i].iter().filter(|p| **p == *g).count() as u64;
        let cap = refs.iter().map(|r| occurrences(r, g)).max().unwrap_or(0);
        if seen_before < cap {
            matched += 1;
        }
    }
    let total = grams.len() as u64;
    if total == 0 {
        return 0.0;
    }

    let hyp_len = hyp.len();
    let mut ref_len = refs[0].len();
    for r in &refs[1..] {
        let better = r.len().abs_diff(hyp_len) < ref_len.abs_diff(hyp_len)
            || (r.len().abs_diff(hyp_len) == ref_len.abs_diff(hyp_len) && r.len() < ref_len);
        if better {
            ref_len = r.len();
        }
    }
    let bp = if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    (matched as f64 / total as f64) * bp
}

fn oracle_distinct(hyp: &[String], n: usize) -> f64 {
    let grams: Vec<&[String]> = hyp.windows(n).collect();
    let mut unique: Vec<&[String]> = Vec::new();
    for g in &grams {
        if !unique.iter().any(|u| *u == *g) {
            unique.push(g);
        }
    }
    unique.len() as f64 / grams.len() as f64
}

fn oracle_novelty(hyp: &[String], source: &[String], n: usize) -> f64 {
    let grams: Vec<&[String]> = hyp.windows(n).collect();
    if grams.is_empty() {
        return 0.0;
    }
    let mut unique: Vec<&[String]> = Vec::new();
    for g in &grams {
        if !unique.iter().any(|u| *u == *g) {
            unique.push(g);
        }
    }
    let novel = unique
        .iter()
        .filter(|g| occurrences(source, g) == 0)
        .count();
    novel as f64 / unique.len() as f64
}

#[test]
fn c7_metric_oracles_and_brute_force_agreement() {
    let started = Instant::now();
    use eib_metrics::metric_tokens;

    // Hand-counted fixtures.
    let bleu = eib_metrics::bleu_n(
        &metric_tokens("a b c"),
        &[metric_tokens("a b d")],
        1,
    )
    .unwrap();
    assert!(
        (bleu - 2.0 / 3.0).abs() < 1e-12 && (bleu - 0.6667).abs() < 5e-5,
        "two of three unigrams match, got {bleu}"
    );
    let distinct = eib_metrics::distinct_n(&[metric_tokens("a a b")], 1).unwrap();
    assert!((distinct - 2.0 / 3.0).abs() < 1e-12);

    let sample = TaskSample {
        id: "c7".into(),
        task: "qa".into(),
        context: "Why is the sky blue?".into(),
        output: "light scattering".into(),
    };
    let copy = metric_tokens("why is the sky blue light scattering");
    let novelty = eib_metrics::novelty_n(&copy, &sample, 1).unwrap();
    assert_eq!(novelty, 0.0, "a verbatim copy has no novel grams");

    // Random fixtures against the brute-force counter, matched exactly.
    let vocab = ["rain", "sun", "wind", "snow", "cloud", "storm", "sky", "sea"];
    let mut rng = ChaCha12Rng::seed_from_u64(0xC7);
    let words = |len: usize, rng: &mut ChaCha12Rng| -> Vec<String> {
        (0..len)
            .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
            .collect()
    };

    for _ in 0..50 {
        let n = rng.gen_range(1..=3usize);
        let hyp = words(rng.gen_range(1..=12), &mut rng);
        let n_refs = rng.gen_range(1..=3usize);
        let refs: Vec<Vec<String>> = (0..n_refs)
            .map(|_| words(rng.gen_range(1..=12), &mut rng))
            .collect();
        let got = eib_metrics::bleu_n(&hyp, &refs, n).unwrap();
        let want = oracle_bleu(&hyp, &refs, n);
        assert_eq!(got, want, "bleu-{n} on {hyp:?} vs {refs:?}");
    }

    for _ in 0..50 {
        let n = rng.gen_range(1..=3usize);
        let hyp = words(rng.gen_range(n..=12), &mut rng);
        let got = eib_metrics::distinct_n(std::slice::from_ref(&hyp), n).unwrap();
        assert_eq!(got, oracle_distinct(&hyp, n));
    }

    for _ in 0..50 {
        let n = rng.gen_range(1..=3usize);
        let hyp = words(rng.gen_range(1..=12), &mut rng);
        let ctx = words(rng.gen_range(1..=8), &mut rng);
        let out = words(rng.gen_range(1..=4), &mut rng);
        let z = TaskSample {
            id: "c7r".into(),
            task: "qa".into(),
            context: ctx.join(" "),
            output: out.join(" "),
        };
        // The metric serializes context and output into one token stream,
        // so cross-boundary grams count as known.
        let source: Vec<String> = ctx.iter().chain(out.iter()).cloned().collect();
        let got = eib_metrics::novelty_n(&hyp, &z, n).unwrap();
        assert_eq!(got, oracle_novelty(&hyp, &source, n));
    }

    report_pass("c7", "hand fixtures plus 150 brute-force comparisons", started, 30);
}

// ---------------------------------------------------------------------------
// 8. Prompt goldens, character for character
// ---------------------------------------------------------------------------

#[test]
fn c8_prompt_goldens_render_exactly() {
    let started = Instant::now();

    let gift = TaskSample {
        id: "gift".into(),
        task: "qa".into(),
        context: "The mother finished wrapping the very last gift, she then placed it under \
                  the what?"
            .into(),
        output: "Christmas tree".into(),
    };
    let rendered = eib_prompt::PromptTemplate::builtin("qa_because")
        .unwrap()
        .format(&gift)
        .unwrap();
    assert_eq!(
        rendered,
        "Let's explain question and answer. Question is the mother finished wrapping the \
         very last gift, she then placed it under the what? Answer is Christmas tree because"
    );

    let elephant = TaskSample {
        id: "elephant".into(),
        task: "qa".into(),
        context: "Can elephants be put in the fridge?".into(),
        output: "no".into(),
    };
    let rendered = eib_prompt::PromptTemplate::builtin("qa_statement_because")
        .unwrap()
        .format(&elephant)
        .unwrap();
    assert_eq!(
        rendered,
        "The question is can elephants be put in the fridge? The answer is no because."
    );

    report_pass("c8", "both golden prompts matched", started, 1);
}

// ---------------------------------------------------------------------------
// 9. Whole-pipeline determinism
// ---------------------------------------------------------------------------

fn repo_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn write_determinism_config(dir: &Path) -> PathBuf {
    let sources = repo_fixture("toy_sources.jsonl");
    let fixtures = repo_fixture("prompt_fixtures.jsonl");
    let text = format!(
        r#"
seed = 1234
sources = [{sources:?}]
ratios = [0.5, 0.25, 0.25]
backend = "fixture"
prompt_fixtures = {fixtures:?}

[model.encoder]
layers = 2
d_model = 16
n_heads = 2
ff_mult = 2
max_seq_len = 96

[model.preservation]
layers = 2
d_model = 16
n_heads = 2
ff_mult = 2
max_seq_len = 96

[model.generator]
layers = 2
d_model = 16
n_heads = 2
ff_mult = 2
max_seq_len = 96

[model]
bottleneck_k = 8
bottleneck_hidden = 12
encoder_max_len = 32

[train]
max_epochs = 2
batch_size = 4
early_stop_patience = 2

[decode]
max_len = 16
num_candidates = 2
"#,
    );
    let path = dir.join("determinism.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn c9_identical_seeds_give_byte_identical_artifacts() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let config = write_determinism_config(dir.path());

    let run = |out: &Path| {
        for stage in ["build-data", "train", "prompt", "refine", "evaluate"] {
            let output = std::process::Command::new(env!("CARGO_BIN_EXE_eib"))
                .args([
                    stage,
                    "--config",
                    config.to_str().unwrap(),
                    "--out-dir",
                    out.to_str().unwrap(),
                ])
                .output()
                .expect("binary runs");
            assert!(
                output.status.success(),
                "stage {stage} failed:\n{}",
                String::from_utf8_lossy(&output.stderr)
            );
        }
    };

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run(&a);
    run(&b);

    for artifact in [
        "data/train.jsonl",
        "data/valid.jsonl",
        "data/test.jsonl",
        "data/build_manifest.json",
        "logs/train_log.jsonl",
        "checkpoint/weights.bin",
        "checkpoint/config.json",
        "checkpoint/vocab.json",
        "checkpoint/manifest.json",
        "candidates.jsonl",
        "refined.jsonl",
        "report.json",
    ] {
        let bytes_a = std::fs::read(a.join(artifact)).unwrap();
        let bytes_b = std::fs::read(b.join(artifact)).unwrap();
        assert_eq!(
            bytes_a,
            bytes_b,
            "{artifact} differs between identically seeded runs"
        );
    }

    report_pass("c9", "two seeded runs, twelve artifacts byte-identical", started, 600);
}
