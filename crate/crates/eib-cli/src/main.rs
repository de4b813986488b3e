//! `eib`: drives the explanation pipeline end to end.
//!
//! The five stages run in order: build-data, train, prompt, refine, evaluate.
//! Each writes its artifacts under the run directory and records digests in
//! run_manifest.json, so rerunning a finished stage is a no-op. `inspect`
//! verifies and summarizes a checkpoint without touching the manifest.
//!
//! Exit codes: 0 success, 2 invalid config or data, 3 missing input file,
//! 4 numerical divergence.

mod config;
mod events;
mod manifest;
mod stages;

use clap::{Parser, Subcommand};
use config::PipelineConfig;
use eib_core::error::{CoreError, Result};
use events::{Emitter, Level};
use serde_json::json;
use stages::StageContext;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "eib",
    version,
    about = "Explanation pipeline: corpus building, training, prompting, refinement and scoring"
)]
struct Cli {
    /// TOML config file. Flags override its values, defaults fill the rest.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Root seed for the run; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Run directory for artifacts; overrides the config file.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Minimum event level written to stderr: debug, info, warn or error.
    #[arg(long, global = true, default_value = "info", value_name = "LEVEL")]
    log_level: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build train/valid/test corruption-corpus splits from source files.
    BuildData {
        /// Source JSONL files of sample/explanation pairs.
        #[arg(long, num_args = 1.., value_name = "FILE")]
        sources: Vec<PathBuf>,
        /// Split ratios, e.g. --ratios 0.8 0.1 0.1.
        #[arg(long, num_args = 3, value_name = "R")]
        ratios: Option<Vec<f64>>,
        /// Directory of lexicon files; bundled lists when omitted.
        #[arg(long, value_name = "DIR")]
        lexicon: Option<PathBuf>,
    },
    /// Train the model on the built splits and save a checkpoint.
    Train,
    /// Render prompts for the test split and collect candidate explanations.
    Prompt {
        /// Sample file; defaults to the run's test split.
        #[arg(long = "in", value_name = "FILE")]
        input: Option<PathBuf>,
        /// Built-in template name.
        #[arg(long, value_name = "NAME")]
        template: Option<String>,
        /// Backend: fixture, local or remote.
        #[arg(long, value_name = "NAME")]
        backend: Option<String>,
        /// Replay file for the fixture backend.
        #[arg(long, value_name = "FILE")]
        fixtures: Option<PathBuf>,
        /// Output candidate file; defaults to candidates.jsonl in the run dir.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Refine candidate explanations through the trained bottleneck.
    Refine {
        /// Candidate file; defaults to candidates.jsonl in the run dir.
        #[arg(long = "in", value_name = "FILE")]
        input: Option<PathBuf>,
        /// Checkpoint directory; defaults to the run's checkpoint.
        #[arg(long, value_name = "DIR")]
        checkpoint: Option<PathBuf>,
        /// Output file; defaults to refined.jsonl in the run dir.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Score refined explanations against gold references.
    Evaluate {
        /// Hypothesis file; defaults to refined.jsonl in the run dir.
        #[arg(long, value_name = "FILE")]
        hyp: Option<PathBuf>,
        /// Reference file; defaults to the run's test split.
        #[arg(long = "ref", value_name = "FILE")]
        reference: Option<PathBuf>,
        /// Sample file; defaults to the run's test split.
        #[arg(long, value_name = "FILE")]
        samples: Option<PathBuf>,
        /// Report path; defaults to report.json in the run dir.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Verify a checkpoint's digests and print a JSON summary.
    Inspect {
        #[arg(long, value_name = "DIR")]
        checkpoint: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level: Level = match cli.log_level.parse() {
        Ok(level) => level,
        Err(msg) => {
            eprintln!("{}", json!({ "level": "error", "event": "error", "detail": msg }));
            return ExitCode::from(2);
        }
    };
    let emitter = Emitter::new(level);

    match run(cli, emitter) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            emitter.error(
                "error",
                json!({ "detail": err.to_string(), "exit_code": code }),
            );
            ExitCode::from(code)
        }
    }
}

fn exit_code(err: &CoreError) -> u8 {
    match err {
        CoreError::MissingInput(_) | CoreError::Io(_) => 3,
        CoreError::Diverged { .. } | CoreError::NonFinite(_) => 4,
        _ => 2,
    }
}

fn run(cli: Cli, emitter: Emitter) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = Some(dir.clone());
    }

    // Fold per-command flags into the config before hashing it, so reuse is
    // keyed on what actually ran.
    match &cli.command {
        Command::BuildData {
            sources,
            ratios,
            lexicon,
        } => {
            if !sources.is_empty() {
                cfg.sources = sources.clone();
            }
            if let Some(r) = ratios {
                cfg.ratios = Some([r[0], r[1], r[2]]);
            }
            if let Some(dir) = lexicon {
                cfg.lexicon_dir = Some(dir.clone());
            }
        }
        Command::Prompt {
            template,
            backend,
            fixtures,
            ..
        } => {
            if let Some(t) = template {
                cfg.template = t.clone();
            }
            if let Some(b) = backend {
                cfg.backend = b.clone();
            }
            if let Some(f) = fixtures {
                cfg.prompt_fixtures = Some(f.clone());
            }
        }
        _ => {}
    }
    cfg.validate()?;

    if let Command::Inspect { checkpoint } = &cli.command {
        return stages::inspect(checkpoint, &emitter);
    }

    let ctx = StageContext::new(&cfg, emitter);
    emitter.debug(
        "run_started",
        json!({
            "config_digest": ctx.config_digest,
            "out_dir": ctx.paths.root.display().to_string(),
        }),
    );

    match &cli.command {
        Command::BuildData { .. } => stages::build_data(&ctx)?,
        Command::Train => stages::train_stage(&ctx)?,
        Command::Prompt { input, out, .. } => {
            stages::prompt_stage(&ctx, input.as_deref(), out.as_deref())?
        }
        Command::Refine {
            input,
            checkpoint,
            out,
        } => stages::refine_stage(
            &ctx,
            input.as_deref(),
            checkpoint.as_deref(),
            out.as_deref(),
        )?,
        Command::Evaluate {
            hyp,
            reference,
            samples,
            out,
        } => stages::evaluate_stage(
            &ctx,
            hyp.as_deref(),
            reference.as_deref(),
            samples.as_deref(),
            out.as_deref(),
        )?,
        Command::Inspect { .. } => unreachable!("handled above"),
    };
    Ok(())
}
