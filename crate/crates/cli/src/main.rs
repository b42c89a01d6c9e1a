//! Command-line front end: validate, prepare, train, eval, sweep-w,
//! agreement and synth.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{parse_protocol, PrepareFlags, RunConfig, TrainFlags};
use rtmotion::evaluation::Protocol;
use rtmotion::InputForm;

#[derive(Debug, Parser)]
#[command(
    name = "rtmotion",
    version,
    about = "Reflective-thinking detection from skeleton sequences"
)]
struct Cli {
    /// Worker threads for folds and batches; results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON run configuration; its fields take precedence over flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse every file of a manifest and report problems.
    Validate {
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Segment, balance, augment and tensorize a dataset.
    Prepare {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cut subsegments of this width instead of resampling whole periods.
        #[arg(long)]
        window: Option<usize>,
        #[command(flatten)]
        prep: PrepareFlags,
    },
    /// Train one model on a prepared set and save it.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Evaluate with leave-one-subject-out or the A→B hold-out.
    Eval {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_parser = parse_protocol)]
        protocol: Option<Protocol>,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Hold-out evaluation over a range of subsegment widths.
    SweepW {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        widths: Option<Vec<usize>>,
        #[command(flatten)]
        prep: PrepareFlags,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Inter-rater ICC on aligned labels of the first two raters.
    Agreement {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic pause-rich / motion-rich dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 6)]
        children_a: usize,
        #[arg(long, default_value_t = 4)]
        children_b: usize,
        #[arg(long, default_value_t = 2)]
        tasks: usize,
        #[arg(long, default_value_t = 3)]
        rt_segments: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

/// The error chain on one line, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !parts.last().is_some_and(|prev| prev.contains(&text)) {
            parts.push(text);
        }
    }
    parts.join(": ")
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let core = e.chain().find_map(|c| c.downcast_ref::<rtmotion::Error>());
    match core {
        Some(err) if err.is_validation() => EXIT_VALIDATION,
        _ => EXIT_RUNTIME,
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    let mut cfg = RunConfig::default();
    let finish = |cfg: RunConfig| -> anyhow::Result<RunConfig> {
        match &cli.config {
            Some(path) => cfg.overlay(path),
            None => Ok(cfg),
        }
    };
    match &cli.command {
        Command::Validate { manifest } => {
            cfg.manifest = manifest.clone();
            commands::validate(&finish(cfg)?)
        }
        Command::Prepare {
            manifest,
            out,
            window,
            prep,
        } => {
            cfg.manifest = manifest.clone();
            cfg.output = out.clone();
            cfg.window = *window;
            prep.apply(&mut cfg);
            commands::prepare(&finish(cfg)?)
        }
        Command::Train { data, out, train } => {
            cfg.data = data.clone();
            cfg.output = out.clone();
            train.apply(&mut cfg);
            commands::train(&finish(cfg)?)
        }
        Command::Eval {
            data,
            out,
            protocol,
            train,
        } => {
            cfg.data = data.clone();
            cfg.output = out.clone();
            if let Some(p) = protocol {
                cfg.protocol = *p;
            }
            train.apply(&mut cfg);
            commands::eval(&finish(cfg)?)
        }
        Command::SweepW {
            manifest,
            out,
            widths,
            prep,
            train,
        } => {
            cfg.manifest = manifest.clone();
            cfg.output = out.clone();
            cfg.protocol = Protocol::Holdout;
            cfg.input_form = InputForm::Pos;
            if let Some(w) = widths {
                cfg.widths = w.clone();
            }
            prep.apply(&mut cfg);
            train.apply(&mut cfg);
            commands::sweep(&finish(cfg)?)
        }
        Command::Agreement { manifest, out } => {
            cfg.manifest = manifest.clone();
            cfg.output = out.clone();
            commands::agreement(&finish(cfg)?)
        }
        Command::Synth {
            out,
            children_a,
            children_b,
            tasks,
            rt_segments,
            seed,
        } => commands::synth(out, *children_a, *children_b, *tasks, *rt_segments, *seed),
    }
}
