//! `riskrag` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 provider
//! failure, 3 data error.

mod commands;
mod error;
mod manifest;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use riskrag::evaluation::Cardinality;
use riskrag::report::Format;
use riskrag::retrieval::Backend;

use crate::commands::{EvaluateArgs, GenerateArgs, Run, Subject};
use crate::error::CliError;
use crate::settings::{FileSettings, FlagSettings};

#[derive(Debug, Parser)]
#[command(name = "riskrag", version, about = "Retrieval-augmented risk reports for AI models")]
struct Cli {
    /// TOML config file (flags and RISKRAG_* variables take precedence).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Use the deterministic offline providers.
    #[arg(long, global = true)]
    offline: bool,
    /// Recorded in the manifest; offline runs do not use randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ProviderFlags {
    /// Providers file with [chat], [embedding] and [scorer] sections.
    #[arg(long, value_name = "FILE")]
    providers: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a card dump, keep cards with risk sections and deduplicate.
    Ingest {
        #[arg(long)]
        cards: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Corpus statistics as JSON.
    Stats {
        #[arg(long)]
        cards: PathBuf,
        /// Write to a file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and persist card and incident indices.
    Index {
        #[arg(long)]
        cards: PathBuf,
        #[arg(long)]
        incidents: PathBuf,
        #[arg(long)]
        backend: Option<Backend>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[command(flatten)]
        providers: ProviderFlags,
    },
    /// Generate a risk report for one model.
    Generate {
        /// A model in the indexed corpus; its own card is not retrieved.
        #[arg(
            long,
            conflicts_with = "description_file",
            required_unless_present = "description_file"
        )]
        model_id: Option<String>,
        /// A plain-text description of a model outside the corpus.
        #[arg(long, value_name = "FILE")]
        description_file: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        index: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        backend: Option<Backend>,
        #[arg(long, default_value = "json")]
        format: Format,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory of replacement prompt templates.
        #[arg(long, value_name = "DIR")]
        prompts: Option<PathBuf>,
        #[command(flatten)]
        providers: ProviderFlags,
    },
    /// Precision / recall of retrieved risks against pseudo ground truth.
    Evaluate {
        #[arg(long)]
        cards: PathBuf,
        #[arg(long)]
        incidents: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "tfidf")]
        backends: Vec<Backend>,
        #[arg(long = "k", value_delimiter = ',', default_value = "5,10,15")]
        ks: Vec<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        /// Fraction of most-downloaded cards to evaluate.
        #[arg(long, default_value_t = 0.1)]
        top_fraction: f64,
        #[arg(long, value_enum, default_value = "one-to-one")]
        cardinality: CardinalityArg,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, value_name = "DIR")]
        prompts: Option<PathBuf>,
        #[command(flatten)]
        providers: ProviderFlags,
    },
    /// Pick the match threshold that best agrees with labelled pairs.
    Calibrate {
        /// CSV with columns text_a,text_b,label (match or no_match).
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        providers: ProviderFlags,
    },
    /// Re-render a JSON report.
    Render {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum CardinalityArg {
    OneToOne,
    ManyToOne,
}

impl From<CardinalityArg> for Cardinality {
    fn from(c: CardinalityArg) -> Self {
        match c {
            CardinalityArg::OneToOne => Cardinality::OneToOne,
            CardinalityArg::ManyToOne => Cardinality::ManyToOne,
        }
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Ingest { .. } => "ingest",
            Command::Stats { .. } => "stats",
            Command::Index { .. } => "index",
            Command::Generate { .. } => "generate",
            Command::Evaluate { .. } => "evaluate",
            Command::Calibrate { .. } => "calibrate",
            Command::Render { .. } => "render",
        }
    }

    fn flag_settings(&self, cli: &Cli) -> FlagSettings {
        let mut f = FlagSettings {
            offline: cli.offline,
            jobs: cli.jobs,
            ..Default::default()
        };
        match self {
            Command::Index { backend, providers, .. } => {
                f.backend = backend.map(|b| b.to_string());
                f.providers = providers.providers.clone();
            }
            Command::Generate { k, providers, .. } => {
                f.k = *k;
                f.providers = providers.providers.clone();
            }
            Command::Evaluate {
                threshold, providers, ..
            } => {
                f.threshold = *threshold;
                f.providers = providers.providers.clone();
            }
            Command::Calibrate { providers, .. } => f.providers = providers.providers.clone(),
            Command::Ingest { .. } | Command::Stats { .. } | Command::Render { .. } => {}
        }
        f
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => settings::load_file(p)?,
        None => FileSettings::default(),
    };
    let settings = settings::resolve(file, cli.command.flag_settings(&cli), &|k| std::env::var(k).ok())?;
    if let Some(n) = settings.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))?;
    }
    let run = Run {
        subcommand: cli.command.name(),
        settings,
        seed: cli.seed,
        started_at: manifest::now(),
    };
    match &cli.command {
        Command::Ingest { cards, out } => commands::ingest_cmd(&run, cards, out),
        Command::Stats { cards, out } => commands::stats_cmd(&run, cards, out.as_deref()),
        Command::Index {
            cards, incidents, out, ..
        } => commands::index_cmd(&run, cards, incidents, out),
        Command::Generate {
            model_id,
            description_file,
            index,
            backend,
            format,
            out,
            prompts,
            ..
        } => {
            let subject = match (model_id, description_file) {
                (Some(id), _) => Subject::ModelId(id),
                (None, Some(p)) => Subject::DescriptionFile(p),
                (None, None) => return Err(CliError::Usage("pass --model-id or --description-file".into())),
            };
            commands::generate_cmd(
                &run,
                GenerateArgs {
                    subject,
                    index,
                    backend_flag: *backend,
                    format: *format,
                    out: out.as_deref(),
                    prompts: prompts.as_deref(),
                },
            )
        }
        Command::Evaluate {
            cards,
            incidents,
            backends,
            ks,
            top_fraction,
            cardinality,
            out,
            prompts,
            ..
        } => {
            if ks.contains(&0) {
                return Err(CliError::Usage("every k must be at least 1".into()));
            }
            commands::evaluate_cmd(
                &run,
                EvaluateArgs {
                    cards,
                    incidents,
                    backends: backends.clone(),
                    ks: ks.clone(),
                    top_fraction: *top_fraction,
                    cardinality: (*cardinality).into(),
                    out,
                    prompts: prompts.as_deref(),
                },
            )
        }
        Command::Calibrate { labels, out, .. } => commands::calibrate_cmd(&run, labels, out.as_ref()),
        Command::Render { report, format, out } => commands::render_cmd(&run, report, *format, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("riskrag: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
