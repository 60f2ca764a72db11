//! `avfusion`: synthetic audio-visual forgery pipeline driver.

mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{input_path, DETECTIONS_FILE, LOCALIZATIONS_FILE, META_FILE, PREDICTIONS_FILE};
use crate::config::{ConfigError, RunConfig};
use avfusion_core::Modality;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "avfusion",
    version,
    about = "Audio-visual forgery detection and localization pipeline"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true, env = "AVFUSION_CONFIG", value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base random seed; overrides the config file.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory, also the default location of inputs.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Configuration override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate metadata and simulated frame scores.
    Synth,
    /// Draw training crops and label them against the forged audio spans.
    Label {
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Video-level scores per modality.
    Detect {
        #[arg(long)]
        meta: Option<PathBuf>,
        #[arg(long)]
        audio: Option<PathBuf>,
        #[arg(long)]
        visual: Option<PathBuf>,
    },
    /// Per-modality forged segments from frame scores.
    Localize {
        #[arg(long)]
        audio: Option<PathBuf>,
        #[arg(long)]
        visual: Option<PathBuf>,
    },
    /// Combine detections and localizations across modalities.
    Fuse {
        #[arg(long)]
        detections: Option<PathBuf>,
        #[arg(long)]
        localizations: Option<PathBuf>,
        /// Metadata supplying clip durations; defaults to `<out>/meta.jsonl` when present.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Score predictions against the metadata.
    Eval {
        #[arg(long)]
        predictions: Option<PathBuf>,
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Category and duration summary of a metadata file.
    Stats {
        #[arg(long)]
        meta: Option<PathBuf>,
    },
}

fn resolve_config(global: &GlobalArgs) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for assignment in &global.overrides {
        cfg.apply_override(assignment)?;
    }
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: Command, cfg: &RunConfig, out: &std::path::Path) -> anyhow::Result<()> {
    let audio_default = commands::scores_file(Modality::Audio);
    let visual_default = commands::scores_file(Modality::Visual);
    match command {
        Command::Synth => commands::synth(cfg, out),
        Command::Label { meta } => commands::label(cfg, &input_path(meta, out, META_FILE), out),
        Command::Detect { meta, audio, visual } => commands::detect(
            cfg,
            &input_path(meta, out, META_FILE),
            &input_path(audio, out, &audio_default),
            &input_path(visual, out, &visual_default),
            out,
        ),
        Command::Localize { audio, visual } => commands::localize(
            cfg,
            &input_path(audio, out, &audio_default),
            &input_path(visual, out, &visual_default),
            out,
        ),
        Command::Fuse {
            detections,
            localizations,
            meta,
        } => {
            let meta = meta.or_else(|| Some(out.join(META_FILE)).filter(|p| p.is_file()));
            commands::fuse(
                cfg,
                &input_path(detections, out, DETECTIONS_FILE),
                &input_path(localizations, out, LOCALIZATIONS_FILE),
                meta.as_deref(),
                out,
            )
        }
        Command::Eval { predictions, meta } => commands::eval(
            cfg,
            &input_path(predictions, out, PREDICTIONS_FILE),
            &input_path(meta, out, META_FILE),
            out,
        ),
        Command::Stats { meta } => commands::stats(&input_path(meta, out, META_FILE)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let cfg = match resolve_config(&cli.global) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(cli.command, &cfg, &cli.global.out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
