//! Argument parsing. Each subcommand either builds a single task from its
//! flags or, when the identifying flags are absent, runs the matching tasks
//! of the `--config` file.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ssg_core::certify::NiReading;
use ssg_core::closed_loop::LoopSign;

use crate::commands::Context;
use crate::config::{CertifyProperty, ExperimentConfig, GraphSource, ModeSelection, Task};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "ssgraph", version, about = "Signed scaled graphs: estimation, separation checks and certificates")]
pub struct Cli {
    /// Worker threads for the parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: `output_dir` of the config, else `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Graph estimation and analytic regions.
    Ssg {
        #[command(subcommand)]
        command: SsgCommand,
    },
    /// Graph separation test for a feedback pair.
    Stability {
        #[command(subcommand)]
        command: StabilityCommand,
    },
    /// Passivity and negative-imaginary certificates.
    Certify(CertifyArgs),
    /// Closed-loop simulation and empirical gain.
    Loop {
        #[command(subcommand)]
        command: LoopCommand,
    },
    /// Hilbert transform of a `t,value` CSV signal.
    Hilbert(HilbertArgs),
    /// Runs every task of a configuration in order.
    Run {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Subcommand)]
pub enum SsgCommand {
    /// Estimates the graph of a system from sampled input/output pairs.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Configured or built-in system.
        #[arg(long)]
        system: Option<String>,
        #[arg(long)]
        family: Option<String>,
        /// Catalog region drawn over the cloud (repeatable).
        #[arg(long = "overlay")]
        overlays: Vec<String>,
        /// Unsigned graph instead of the signed one.
        #[arg(long)]
        unsigned: bool,
    },
    /// Samples the boundary of a catalog region.
    Analytic {
        #[command(flatten)]
        common: Common,
        /// `lead-circle`, `lag-circle`, `lead-inverse-halfline`,
        /// `lag-inverse-halfline` or `second-order-perimeter:K`.
        #[arg(long)]
        entry: Option<String>,
        #[arg(long)]
        signed: bool,
        #[arg(long, default_value_t = 512)]
        samples: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum StabilityCommand {
    /// Checks `dist(SSG(H1), SSG^dagger(-tau H2)) >= r` over the tau grid.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        h1: Option<String>,
        /// With `--analytic`, the catalog entry of the inverse graph of H2.
        #[arg(long)]
        h2: Option<String>,
        #[arg(long, value_enum, default_value_t = ModeSelection::Signed)]
        mode: ModeSelection,
        /// Use catalog regions instead of estimated clouds.
        #[arg(long)]
        analytic: bool,
        #[arg(long)]
        family: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub property: Option<CertifyProperty>,
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub h1: Option<String>,
    #[arg(long)]
    pub h2: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Literal negative-imaginary reading instead of the lag-side one.
    #[arg(long)]
    pub literal: bool,
    #[arg(long)]
    pub family: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum LoopCommand {
    /// Simulates the loop for one input of the family.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        h1: Option<String>,
        #[arg(long)]
        h2: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        /// Positive feedback instead of negative.
        #[arg(long)]
        positive: bool,
        /// Index of the input within the family.
        #[arg(long, default_value_t = 0)]
        input: usize,
        #[arg(long)]
        family: Option<String>,
    },
    /// Largest closed-loop gain over the family and the tau grid.
    Gain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        h1: Option<String>,
        #[arg(long)]
        h2: Option<String>,
        #[arg(long)]
        positive: bool,
        #[arg(long)]
        family: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct HilbertArgs {
    #[command(flatten)]
    pub common: Common,
    /// Input signal; omitted to run the config's hilbert tasks.
    pub file: Option<PathBuf>,
    /// Zero-padding factor.
    #[arg(long, default_value_t = ssg_core::spectral::DEFAULT_PAD_FACTOR)]
    pub pad: usize,
    /// Write the whole padded grid instead of the input support.
    #[arg(long)]
    pub full: bool,
}

fn sign(positive: bool) -> LoopSign {
    if positive {
        LoopSign::Positive
    } else {
        LoopSign::Negative
    }
}

fn both(a: &Option<String>, b: &Option<String>) -> Option<(String, String)> {
    Some((a.clone()?, b.clone()?))
}

impl Command {
    /// The flags of the command, the task they describe (if complete) and
    /// the task kind to pick from the configuration otherwise.
    fn resolve(self) -> Result<(Common, Option<Task>, &'static str), CliError> {
        Ok(match self {
            Command::Ssg { command: SsgCommand::Estimate { common, system, family, overlays, unsigned } } => {
                let task = system.map(|system| Task::SsgEstimate { system, family, overlays, signed: !unsigned });
                (common, task, "ssg-estimate")
            }
            Command::Ssg { command: SsgCommand::Analytic { common, entry, signed, samples } } => {
                (common, entry.map(|entry| Task::SsgAnalytic { entry, signed, samples }), "ssg-analytic")
            }
            Command::Stability { command: StabilityCommand::Check { common, h1, h2, mode, analytic, family } } => {
                let source = if analytic { GraphSource::Analytic } else { GraphSource::Clouds };
                let task = both(&h1, &h2).map(|(h1, h2)| Task::StabilityCheck { h1, h2, mode, source, family });
                (common, task, "stability-check")
            }
            Command::Certify(a) => {
                let reading = if a.literal { NiReading::Literal } else { NiReading::LagSide };
                let task = a.property.map(|property| Task::Certify {
                    property,
                    system: a.system,
                    h1: a.h1,
                    h2: a.h2,
                    epsilon: a.epsilon,
                    reading,
                    family: a.family,
                });
                (a.common, task, "certify")
            }
            Command::Loop { command: LoopCommand::Simulate { common, h1, h2, tau, positive, input, family } } => {
                let task = both(&h1, &h2).map(|(h1, h2)| Task::LoopSimulate { h1, h2, tau, sign: sign(positive), input, family });
                (common, task, "loop-simulate")
            }
            Command::Loop { command: LoopCommand::Gain { common, h1, h2, positive, family } } => {
                let task = both(&h1, &h2).map(|(h1, h2)| Task::LoopGain { h1, h2, sign: sign(positive), family });
                (common, task, "loop-gain")
            }
            Command::Hilbert(a) => {
                let task = a.file.map(|input| Task::Hilbert { input, pad: a.pad, full: a.full });
                (a.common, task, "hilbert")
            }
            Command::Run { common } => {
                if common.config.is_none() {
                    return Err(CliError::Config("`run` needs --config".into()));
                }
                (common, None, "")
            }
        })
    }
}

/// Parses, executes and reports; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs the parsed command and returns the summary lines.
pub fn execute(cli: Cli) -> Result<Vec<String>, CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        // fails only if the pool was already built, which keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let (common, task, kind) = cli.command.resolve()?;
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let tasks: Vec<Task> = match task {
        Some(t) => vec![t],
        None => {
            let picked: Vec<Task> = config.tasks.iter().filter(|t| kind.is_empty() || t.command() == kind).cloned().collect();
            if picked.is_empty() {
                return Err(CliError::Config(if kind.is_empty() {
                    "the configuration defines no tasks".into()
                } else {
                    format!("no `{kind}` arguments given and the configuration has no `{kind}` task")
                }));
            }
            picked
        }
    };
    let out = common.out.clone().or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context::new(config, out);
    let mut lines = Vec::new();
    for task in &tasks {
        let output = ctx.run(task)?;
        lines.push(output.summary);
        for f in output.files {
            lines.push(format!("  wrote {}", f.display()));
        }
    }
    Ok(lines)
}
