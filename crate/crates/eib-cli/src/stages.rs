//! The five pipeline stages plus checkpoint inspection.
//!
//! Each stage declares its input and output files up front, then runs through
//! a common harness that handles digesting, manifest bookkeeping and reuse.
//! A stage is skipped with status "reused" when the config hash, every input
//! digest and every output digest match the previous run. An output that
//! exists but no longer matches its recorded digest is treated as tampering
//! and aborts the run.

use crate::config::{PipelineConfig, RunPaths};
use crate::events::Emitter;
use crate::manifest::{digest_files, now_unix_ms, RunManifest, StageEntry};
use eib_core::checkpoint::{load_checkpoint, save_checkpoint, verify_checkpoint};
use eib_core::error::{CoreError, Result};
use eib_core::model::{render_template, EibModel, ModelConfig, TrainRecord};
use eib_core::refine::refine;
use eib_core::seed::derive_seed;
use eib_core::text::{ExplanationText, TaskSample};
use eib_core::tokenizer::Vocab;
use eib_core::train::train;
use eib_mixexpl::{build_corpus, load_sources, read_split, BuildOptions, Lexicon, MixExplRecord};
use eib_prompt::{
    generate_candidates, write_candidates, BackendHandle, CandidateRecord, FixtureBackend,
    LocalTinyBackend, PromptTemplate, RemoteBackend,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Completed,
    Reused,
}

impl StageStatus {
    fn name(self) -> &'static str {
        match self {
            StageStatus::Completed => "completed",
            StageStatus::Reused => "reused",
        }
    }
}

/// Everything a stage needs: the effective config, artifact locations and
/// the event sink.
pub struct StageContext<'a> {
    pub cfg: &'a PipelineConfig,
    pub paths: RunPaths,
    pub emitter: Emitter,
    pub config_digest: String,
}

impl<'a> StageContext<'a> {
    pub fn new(cfg: &'a PipelineConfig, emitter: Emitter) -> Self {
        let paths = RunPaths::new(cfg.resolved_out_dir());
        let config_digest = cfg.digest();
        Self {
            cfg,
            paths,
            emitter,
            config_digest,
        }
    }
}

/// One line of refined.jsonl. `fallback` marks records where refinement
/// produced nothing usable and the candidate was passed through unchanged.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinedLine {
    pub id: String,
    pub refined: String,
    #[serde(default)]
    pub fallback: bool,
}

fn checkpoint_files(dir: &Path) -> Vec<PathBuf> {
    ["weights.bin", "config.json", "vocab.json", "manifest.json"]
        .iter()
        .map(|f| dir.join(f))
        .collect()
}

/// Shared stage harness. Checks inputs, decides reuse, runs the work closure
/// when needed and records the stage entry in the run manifest.
fn run_stage(
    ctx: &StageContext,
    name: &str,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
    work: impl FnOnce() -> Result<Value>,
) -> Result<StageStatus> {
    let started = now_unix_ms();
    ctx.emitter.info(
        "stage_started",
        json!({ "stage": name, "out_dir": ctx.paths.root.display().to_string() }),
    );

    for input in inputs {
        if !input.exists() {
            return Err(CoreError::MissingInput(input.clone()));
        }
    }
    let input_digests = digest_files(&ctx.paths.root, inputs)?;

    std::fs::create_dir_all(&ctx.paths.root)?;
    let manifest_path = ctx.paths.run_manifest();
    let mut manifest = RunManifest::load_or_new(&manifest_path, &ctx.config_digest)?;

    if let Some(prev) = manifest.stages.get(name) {
        if prev.config_digest == ctx.config_digest && prev.inputs == input_digests {
            match check_outputs(&ctx.paths.root, outputs, &prev.outputs)? {
                OutputState::Intact(digests) => {
                    let entry = StageEntry {
                        status: StageStatus::Reused.name().into(),
                        config_digest: ctx.config_digest.clone(),
                        started_unix_ms: started,
                        finished_unix_ms: now_unix_ms(),
                        inputs: input_digests,
                        outputs: digests,
                    };
                    manifest.stages.insert(name.into(), entry);
                    manifest.save(&manifest_path)?;
                    ctx.emitter
                        .info("stage_reused", json!({ "stage": name }));
                    return Ok(StageStatus::Reused);
                }
                OutputState::Tampered { path, expected, actual } => {
                    return Err(CoreError::DigestMismatch { path, expected, actual });
                }
                OutputState::Missing => {}
            }
        }
    }

    let summary = work()?;

    for output in outputs {
        if !output.exists() {
            return Err(CoreError::Config(format!(
                "stage {name} finished without writing {}",
                output.display()
            )));
        }
    }
    let output_digests = digest_files(&ctx.paths.root, outputs)?;
    let entry = StageEntry {
        status: StageStatus::Completed.name().into(),
        config_digest: ctx.config_digest.clone(),
        started_unix_ms: started,
        finished_unix_ms: now_unix_ms(),
        inputs: input_digests,
        outputs: output_digests,
    };
    manifest.stages.insert(name.into(), entry);
    manifest.save(&manifest_path)?;

    let mut fields = json!({ "stage": name });
    if let (Value::Object(dst), Value::Object(src)) = (&mut fields, summary) {
        for (k, v) in src {
            dst.insert(k, v);
        }
    }
    ctx.emitter.info("stage_finished", fields);
    Ok(StageStatus::Completed)
}

enum OutputState {
    /// All outputs present with matching digests.
    Intact(BTreeMap<String, String>),
    /// At least one output gone; the stage should recompute.
    Missing,
    /// An output exists but its bytes changed behind our back.
    Tampered {
        path: String,
        expected: String,
        actual: String,
    },
}

fn check_outputs(
    root: &Path,
    outputs: &[PathBuf],
    recorded: &BTreeMap<String, String>,
) -> Result<OutputState> {
    if outputs.iter().any(|p| !p.exists()) {
        return Ok(OutputState::Missing);
    }
    let fresh = digest_files(root, outputs)?;
    if fresh.len() != recorded.len() || fresh.keys().ne(recorded.keys()) {
        // The output list itself changed (say, a flag redirected a file), so
        // the previous entry cannot vouch for this configuration.
        return Ok(OutputState::Missing);
    }
    for (key, digest) in &fresh {
        let expected = &recorded[key];
        if digest != expected {
            return Ok(OutputState::Tampered {
                path: key.clone(),
                expected: expected.clone(),
                actual: digest.clone(),
            });
        }
    }
    Ok(OutputState::Intact(fresh))
}

pub fn build_data(ctx: &StageContext) -> Result<StageStatus> {
    let cfg = ctx.cfg;
    if cfg.sources.is_empty() {
        return Err(CoreError::Config(
            "no source files configured; pass --sources or set `sources` in the config".into(),
        ));
    }
    let mut inputs = cfg.sources.clone();
    if let Some(dir) = &cfg.lexicon_dir {
        for name in ["antonyms.tsv", "stopwords.txt", "verbs.tsv", "negation.tsv"] {
            inputs.push(dir.join(name));
        }
    }
    let outputs = vec![
        ctx.paths.split("train"),
        ctx.paths.split("valid"),
        ctx.paths.split("test"),
        ctx.paths.build_manifest(),
    ];

    run_stage(ctx, "build-data", &inputs, &outputs, || {
        let pairs = load_sources(&cfg.sources)?;
        let lexicon = match &cfg.lexicon_dir {
            Some(dir) => Lexicon::from_dir(dir)?,
            None => Lexicon::bundled(),
        };
        let opts = BuildOptions {
            seed: cfg.seed,
            ratios: cfg.ratios,
        };
        let built = build_corpus(&pairs, &lexicon, &ctx.paths.data_dir(), &opts)?;
        let splits: BTreeMap<&str, usize> = built
            .splits
            .iter()
            .map(|(k, v)| (k.as_str(), v.written))
            .collect();
        Ok(json!({
            "pairs": pairs.len(),
            "written": splits,
            "skipped": built.skipped.len(),
        }))
    })
}

/// Vocabulary for a fresh model: every token the model will ever see during
/// training, which is the serialized sample under both templates plus the
/// gold explanations.
fn vocab_for(model_cfg: &ModelConfig, records: &[TrainRecord]) -> Vocab {
    let mut texts = Vec::new();
    for r in records {
        texts.push(render_template(
            &model_cfg.templates.preservation,
            &r.sample,
            None,
        ));
        texts.push(render_template(
            &model_cfg.templates.generator,
            &r.sample,
            Some(r.synthetic.text()),
        ));
        texts.push(r.gold.text().to_string());
    }
    Vocab::build(texts.iter().map(|s| s.as_str()))
}

fn to_train_record(r: MixExplRecord) -> TrainRecord {
    TrainRecord {
        sample: r.sample,
        synthetic: r.synthetic,
        gold: r.gold,
    }
}

pub fn train_stage(ctx: &StageContext) -> Result<StageStatus> {
    let inputs = vec![ctx.paths.split("train"), ctx.paths.split("valid")];
    let mut outputs = checkpoint_files(&ctx.paths.checkpoint_dir());
    outputs.push(ctx.paths.train_log());

    run_stage(ctx, "train", &inputs, &outputs, || {
        let train_recs: Vec<TrainRecord> = read_split(&ctx.paths.split("train"))?
            .into_iter()
            .map(to_train_record)
            .collect();
        let valid_recs: Vec<TrainRecord> = read_split(&ctx.paths.split("valid"))?
            .into_iter()
            .map(to_train_record)
            .collect();

        let mut all = train_recs.clone();
        all.extend(valid_recs.iter().cloned());
        let vocab = vocab_for(&ctx.cfg.model, &all);

        // The pipeline derives every stream from the top-level seed; a seed
        // inside [train] would otherwise compete with --seed.
        let mut train_cfg = ctx.cfg.train.clone();
        train_cfg.seed = ctx.cfg.seed;

        let mut model: EibModel<f64> =
            EibModel::new(ctx.cfg.model.clone(), vocab, ctx.cfg.seed)?;

        let mut log_lines: Vec<String> = Vec::new();
        let emitter = ctx.emitter;
        let outcome = train(&mut model, &train_recs, &valid_recs, &train_cfg, |epoch| {
            log_lines.push(serde_json::to_string(epoch).expect("epoch log serializes"));
            emitter.debug(
                "epoch",
                json!({
                    "epoch": epoch.epoch,
                    "split": epoch.split,
                    "total": epoch.losses.total,
                }),
            );
        });

        let write_log = |lines: &[String]| -> Result<()> {
            let log_path = ctx.paths.train_log();
            if let Some(parent) = log_path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            let mut f = std::fs::File::create(&log_path)?;
            for line in lines {
                writeln!(f, "{line}")?;
            }
            Ok(())
        };

        match outcome {
            Ok(outcome) => {
                save_checkpoint(
                    &ctx.paths.checkpoint_dir(),
                    &model,
                    &train_cfg,
                    Some(&outcome.best_validation),
                )?;
                write_log(&log_lines)?;
                Ok(json!({
                    "records": train_recs.len(),
                    "epochs_run": outcome.epochs_run,
                    "best_epoch": outcome.best_epoch,
                    "stopped_early": outcome.stopped_early,
                    "best_validation_total": outcome.best_validation.total,
                }))
            }
            Err(err) => {
                // The model was rolled back to its last good parameters, so
                // save what we have before surfacing the divergence.
                emitter.warn(
                    "train_diverged",
                    json!({ "detail": err.to_string() }),
                );
                save_checkpoint(&ctx.paths.checkpoint_dir(), &model, &train_cfg, None)?;
                write_log(&log_lines)?;
                Err(err)
            }
        }
    })
}

/// Reads samples from either corpus record lines or bare sample lines.
fn read_samples_flexible(path: &Path) -> Result<Vec<TaskSample>> {
    if !path.exists() {
        return Err(CoreError::MissingInput(path.to_path_buf()));
    }
    let file = std::fs::File::open(path)?;
    let mut samples = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| CoreError::Schema {
            path: path.display().to_string(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        let sample_value = if value.get("sample").is_some() {
            value.get("sample").cloned().unwrap()
        } else {
            value
        };
        let sample: TaskSample =
            serde_json::from_value(sample_value).map_err(|e| CoreError::Schema {
                path: path.display().to_string(),
                line: idx + 1,
                msg: e.to_string(),
            })?;
        sample.validate()?;
        if !seen.insert(sample.id.clone()) {
            return Err(CoreError::Schema {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("duplicate sample id {:?}", sample.id),
            });
        }
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(CoreError::Schema {
            path: path.display().to_string(),
            line: 0,
            msg: "no samples found".into(),
        });
    }
    Ok(samples)
}

/// Reads gold references from corpus record lines or `{"id", "gold"}` lines.
fn read_golds_flexible(path: &Path) -> Result<BTreeMap<String, String>> {
    #[derive(Deserialize)]
    struct GoldLine {
        id: String,
        gold: String,
    }

    if !path.exists() {
        return Err(CoreError::MissingInput(path.to_path_buf()));
    }
    let file = std::fs::File::open(path)?;
    let mut golds = BTreeMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| CoreError::Schema {
            path: path.display().to_string(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        let (id, gold) = if let Some(sample) = value.get("sample") {
            let id = sample
                .get("id")
                .and_then(Value::as_str)
                .map(str::to_string);
            // Explanation texts serialize as bare strings.
            let gold = value
                .get("gold")
                .and_then(Value::as_str)
                .map(str::to_string);
            match (id, gold) {
                (Some(i), Some(g)) => (i, g),
                _ => {
                    return Err(CoreError::Schema {
                        path: path.display().to_string(),
                        line: idx + 1,
                        msg: "corpus record without sample id or gold text".into(),
                    })
                }
            }
        } else {
            let parsed: GoldLine =
                serde_json::from_value(value).map_err(|e| CoreError::Schema {
                    path: path.display().to_string(),
                    line: idx + 1,
                    msg: e.to_string(),
                })?;
            (parsed.id, parsed.gold)
        };
        if golds.insert(id.clone(), gold).is_some() {
            return Err(CoreError::Schema {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("duplicate reference id {id:?}"),
            });
        }
    }
    Ok(golds)
}

pub fn prompt_stage(
    ctx: &StageContext,
    input: Option<&Path>,
    out: Option<&Path>,
) -> Result<StageStatus> {
    let cfg = ctx.cfg;
    let sample_file = input
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.paths.split("test"));
    let out_file = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.paths.candidates());

    let mut inputs = vec![sample_file.clone()];
    match cfg.backend.as_str() {
        "fixture" => {
            let fixtures = cfg.prompt_fixtures.as_ref().ok_or_else(|| {
                CoreError::Config(
                    "the fixture backend needs `prompt_fixtures` in the config".into(),
                )
            })?;
            inputs.push(fixtures.clone());
        }
        "local" => inputs.extend(checkpoint_files(&ctx.paths.checkpoint_dir())),
        _ => {}
    }
    let outputs = vec![out_file.clone()];

    run_stage(ctx, "prompt", &inputs, &outputs, || {
        let template = PromptTemplate::builtin(&cfg.template)?;
        let backend = match cfg.backend.as_str() {
            "fixture" => {
                let path = cfg.prompt_fixtures.as_ref().expect("checked above");
                BackendHandle::Fixture(FixtureBackend::load(path)?)
            }
            "local" => BackendHandle::LocalTiny(Box::new(LocalTinyBackend::load(
                &ctx.paths.checkpoint_dir(),
            )?)),
            "remote" => BackendHandle::Remote(RemoteBackend::from_env()?),
            other => unreachable!("backend {other} rejected by config validation"),
        };

        let samples = read_samples_flexible(&sample_file)?;
        let mut records = Vec::with_capacity(samples.len());
        for sample in &samples {
            let prompt = template.format(sample)?;
            let mut decode = cfg.decode.clone();
            decode.seed = derive_seed(cfg.seed, &sample.id, 0);
            let candidates = generate_candidates(&prompt, &backend, &decode)?;
            records.push(CandidateRecord {
                id: sample.id.clone(),
                prompt,
                candidates: candidates.iter().map(|c| c.text().to_string()).collect(),
            });
        }
        write_candidates(&out_file, &records)?;
        Ok(json!({
            "records": records.len(),
            "backend": cfg.backend,
            "template": cfg.template,
        }))
    })
}

pub fn refine_stage(
    ctx: &StageContext,
    input: Option<&Path>,
    checkpoint: Option<&Path>,
    out: Option<&Path>,
) -> Result<StageStatus> {
    let cfg = ctx.cfg;
    let cand_file = input
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.paths.candidates());
    let ckpt_dir = checkpoint
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.paths.checkpoint_dir());
    let out_file = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.paths.refined());

    let mut inputs = vec![cand_file.clone(), ctx.paths.split("test")];
    inputs.extend(checkpoint_files(&ckpt_dir));
    let outputs = vec![out_file.clone()];

    run_stage(ctx, "refine", &inputs, &outputs, || {
        let (model, _train_cfg, _manifest) = load_checkpoint::<f64>(&ckpt_dir)?;
        let candidates = eib_prompt::read_candidates(&cand_file)?;
        let samples: BTreeMap<String, TaskSample> =
            read_samples_flexible(&ctx.paths.split("test"))?
                .into_iter()
                .map(|s| (s.id.clone(), s))
                .collect();

        let mut fallbacks = 0usize;
        let mut lines = Vec::with_capacity(candidates.len());
        for record in &candidates {
            let sample = samples.get(&record.id).ok_or_else(|| {
                CoreError::Config(format!(
                    "candidate id {:?} has no sample in the test split",
                    record.id
                ))
            })?;
            let first = record.candidates.first().ok_or_else(|| {
                CoreError::Config(format!("candidate record {:?} is empty", record.id))
            })?;
            let candidate = ExplanationText::new(first)?;
            let mut decode = cfg.decode.clone();
            decode.seed = derive_seed(cfg.seed, &record.id, 1);
            let (refined, fallback) = match refine(&model, &candidate, sample, &decode) {
                Ok(text) => (text.text().to_string(), false),
                Err(CoreError::EmptyText(_)) => {
                    ctx.emitter.warn(
                        "refine_fallback",
                        json!({ "id": record.id, "detail": "decode produced no tokens; kept the candidate" }),
                    );
                    fallbacks += 1;
                    (first.clone(), true)
                }
                Err(other) => return Err(other),
            };
            lines.push(RefinedLine {
                id: record.id.clone(),
                refined,
                fallback,
            });
        }

        let mut buf = Vec::new();
        for line in &lines {
            serde_json::to_writer(&mut buf, line)?;
            buf.push(b'\n');
        }
        std::fs::write(&out_file, buf)?;
        Ok(json!({ "records": lines.len(), "fallbacks": fallbacks }))
    })
}

fn read_refined(path: &Path) -> Result<Vec<RefinedLine>> {
    if !path.exists() {
        return Err(CoreError::MissingInput(path.to_path_buf()));
    }
    let file = std::fs::File::open(path)?;
    let mut lines = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: RefinedLine = serde_json::from_str(&line).map_err(|e| CoreError::Schema {
            path: path.display().to_string(),
            line: idx + 1,
            msg: e.to_string(),
        })?;
        if !seen.insert(parsed.id.clone()) {
            return Err(CoreError::Schema {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("duplicate id {:?}", parsed.id),
            });
        }
        lines.push(parsed);
    }
    Ok(lines)
}

pub fn evaluate_stage(
    ctx: &StageContext,
    hyp: Option<&Path>,
    reference: Option<&Path>,
    samples: Option<&Path>,
    out: Option<&Path>,
) -> Result<StageStatus> {
    let cfg = ctx.cfg;
    let hyp_file = hyp
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.paths.refined());
    let ref_file = reference
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.paths.split("test"));
    let samples_file = samples
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.paths.split("test"));
    let out_file = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ctx.paths.report());

    let mut inputs = vec![hyp_file.clone(), ref_file.clone(), samples_file.clone()];
    inputs.dedup();
    if let Some(scores) = &cfg.external_scores {
        inputs.push(scores.clone());
    }
    let outputs = vec![out_file.clone()];

    run_stage(ctx, "evaluate", &inputs, &outputs, || {
        let hyps = read_refined(&hyp_file)?;
        let golds = read_golds_flexible(&ref_file)?;
        let sample_map: BTreeMap<String, TaskSample> = read_samples_flexible(&samples_file)?
            .into_iter()
            .map(|s| (s.id.clone(), s))
            .collect();

        for id in golds.keys() {
            if !hyps.iter().any(|h| &h.id == id) {
                return Err(CoreError::Config(format!(
                    "reference id {id:?} has no hypothesis in {}",
                    hyp_file.display()
                )));
            }
        }

        let mut entries = Vec::with_capacity(hyps.len());
        for h in &hyps {
            let gold = golds.get(&h.id).ok_or_else(|| {
                CoreError::Config(format!(
                    "hypothesis id {:?} has no reference in {}",
                    h.id,
                    ref_file.display()
                ))
            })?;
            let sample = sample_map.get(&h.id).ok_or_else(|| {
                CoreError::Config(format!(
                    "hypothesis id {:?} has no sample in {}",
                    h.id,
                    samples_file.display()
                ))
            })?;
            entries.push(eib_metrics::EvalEntry {
                id: h.id.clone(),
                hypothesis: h.refined.clone(),
                references: vec![gold.clone()],
                sample: sample.clone(),
            });
        }

        let mut report = eib_metrics::build_report(&entries)?;
        if let Some(score_path) = &cfg.external_scores {
            let scores = eib_metrics::read_scores(score_path)?;
            eib_metrics::attach_external_scores(&mut report, &scores)?;
        }
        eib_metrics::write_report(&out_file, &report)?;
        Ok(json!({
            "samples": report.counts.samples,
            "bleu_1": report.corpus.bleu_1,
            "novelty_1": report.corpus.novelty_1,
            "avg_len": report.corpus.avg_len,
        }))
    })
}

/// Verifies a checkpoint and prints a JSON summary to stdout.
pub fn inspect(checkpoint: &Path, emitter: &Emitter) -> Result<()> {
    verify_checkpoint(checkpoint)?;
    let (model, train_cfg, manifest) = load_checkpoint::<f64>(checkpoint)?;

    let param_count = model.params.count(false);
    let trainable = model.params.count(true);
    if param_count != manifest.param_count || trainable != manifest.trainable_param_count {
        return Err(CoreError::Checkpoint(format!(
            "manifest counts {}/{} disagree with loaded parameters {}/{}",
            manifest.param_count, manifest.trainable_param_count, param_count, trainable
        )));
    }

    let summary = json!({
        "checkpoint": checkpoint.display().to_string(),
        "param_count": param_count,
        "trainable_param_count": trainable,
        "components": model.params.count_by_component(),
        "vocab_size": model.vocab.len(),
        "model": model.cfg,
        "train": train_cfg,
        "last_validation": manifest.last_validation,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    emitter.info("inspect_finished", json!({ "param_count": param_count }));
    Ok(())
}
