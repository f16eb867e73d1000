//! `keyseg`: keystroke-log segmentation over a corpus of session files.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error.

mod commands;
mod config;
mod corpus;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(format!("{e:#}"))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "keyseg", version, about = "Segment keystroke logs into motor programs, Tasks and Task Segments")]
struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Significant digits for floats in tables.
    #[arg(long, global = true)]
    precision: Option<usize>,
    /// Delay threshold in ms.
    #[arg(long, global = true)]
    delay: Option<f64>,
    /// Report identification under the `p < alpha` means same rule.
    #[arg(long, global = true)]
    paper_literal: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct Corpus {
    /// Session files or directories holding `*.session.tsv` files.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check every session for format and ordering problems.
    Validate(Corpus),
    /// Per-translator RSP / TSP thresholds.
    Profile(Corpus),
    /// Segment sessions and summarise Task Segment labels.
    Segment {
        #[command(flatten)]
        corpus: Corpus,
        /// Profiles table (CSV or JSON) from a previous `profile` run.
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Overlay HOF annotations on the segmentation.
    Hof {
        #[command(flatten)]
        corpus: Corpus,
        /// Directories with `<session_id>.hof.tsv` files.
        #[arg(long, required = true)]
        annotations: Vec<PathBuf>,
        #[arg(long)]
        profiles: Option<PathBuf>,
        /// Write suggested annotations for sessions that have none.
        #[arg(long)]
        suggest: bool,
        /// Labels per state in the TS label ranking.
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Two-sample KS comparisons of IKI distributions.
    Identify {
        #[command(flatten)]
        corpus: Corpus,
        /// Pairing plan: `session_a<TAB>session_b<TAB>class` rows.
        #[arg(long)]
        pairs: Option<PathBuf>,
    },
    /// Progression graphs and IKI distribution plots.
    Render(RenderArgs),
    /// Write a seeded synthetic corpus.
    Synth {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        translators: usize,
        #[arg(long, default_value_t = 2)]
        sessions: usize,
        #[arg(long, default_value_t = 400)]
        keys: usize,
        /// Instead write one session with this many planted Task Segments.
        #[arg(long)]
        planted: Option<usize>,
    },
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    #[command(flatten)]
    pub corpus: Corpus,
    /// Session id for a progression graph.
    #[arg(long, conflicts_with = "dist", required_unless_present = "dist")]
    pub graph: Option<String>,
    #[arg(long, value_enum)]
    pub dist: Option<DistArg>,
    /// Time window `START:END` in ms.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub annotations: Vec<PathBuf>,
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    /// Whitespace-separated source text for the left axis.
    #[arg(long)]
    pub source_text: Option<PathBuf>,
    /// `st_token<TAB>tt_token` alignment rows.
    #[arg(long)]
    pub alignment: Option<PathBuf>,
    /// Layers to leave out.
    #[arg(long, value_enum)]
    pub hide: Vec<LayerArg>,
    #[arg(long, value_enum, default_value_t = GroupArg::Study)]
    pub group_by: GroupArg,
    #[arg(long)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub font_size: Option<u32>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum DistArg {
    Cdf,
    Density,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum LayerArg {
    Keystrokes,
    Fixations,
    Aus,
    Tasks,
    Segments,
    TspBoxes,
    Hof,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
pub enum GroupArg {
    Study,
    Lang,
    Translator,
    Mode,
    Session,
}

fn build_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| CliError::Usage(format!("{e:#}")))?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(f) = cli.format {
        cfg.format = match f {
            FormatArg::Csv => keyseg_core::Format::Csv,
            FormatArg::Json => keyseg_core::Format::Json,
        };
    }
    if let Some(p) = cli.precision {
        cfg.precision = p;
    }
    if let Some(d) = cli.delay {
        cfg.delay = d;
    }
    if cli.paper_literal {
        cfg.identify.rule = "paper_literal".into();
    }
    cfg.check().map_err(|e| CliError::Usage(format!("{e:#}")))?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(&cli).and_then(|cfg| commands::run(&cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
