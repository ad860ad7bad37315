use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use condmetrics::synth::CollapseSchedule;

use crate::commands::{self, Metric, OutputFormat, Sweep, SynthKind, SynthOptions};
use crate::config::{CliError, PairingMode, RunConfig, WeightingMode};

#[derive(Debug, Parser)]
#[command(name = "condmetrics", version, about = "Conditional IS/FID metrics for generated data")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, env = "CONDMETRICS_THREADS", global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute every applicable metric.
    Metrics(MetricsArgs),
    /// Metric curves under label noise or mode collapse.
    Sweep(SweepArgs),
    /// Align conditioned classes to real classes.
    Match(MatchArgs),
    /// Write synthetic datasets as tensor files.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// JSON run config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Features of the real samples (N×d).
    #[arg(long)]
    pub real_features: Option<PathBuf>,
    /// Features of the generated samples (M×d).
    #[arg(long)]
    pub gen_features: Option<PathBuf>,
    /// Class labels of the real samples.
    #[arg(long)]
    pub real_labels: Option<PathBuf>,
    /// Conditioning labels of the generated samples.
    #[arg(long)]
    pub gen_labels: Option<PathBuf>,
    /// Class probabilities of the generated samples.
    #[arg(long)]
    pub probs: Option<PathBuf>,
    /// Class count (inferred from labels and probabilities when omitted).
    #[arg(long)]
    pub k: Option<usize>,
    /// Random feature subset per FID trial; scores are divided by it.
    #[arg(long)]
    pub subset_size: Option<usize>,
    /// Subsampling trials averaged per FID score.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Seed for every random draw.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Class averaging for the conditional scores.
    #[arg(long, value_enum)]
    pub weighting: Option<WeightingMode>,
    /// How conditioned classes map onto real classes.
    #[arg(long, value_enum)]
    pub pairing: Option<PairingMode>,
}

impl InputArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    cfg.$f = Some(v.clone());
                }
            )*};
        }
        take!(real_features, gen_features, real_labels, gen_labels, probs, k, subset_size);
        cfg.trials = self.trials.unwrap_or(cfg.trials);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.weighting = self.weighting.unwrap_or(cfg.weighting);
        cfg.pairing = self.pairing.unwrap_or(cfg.pairing);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    /// Metrics that must be computed; missing inputs for them are errors.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub metrics: Vec<Metric>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    LabelNoise,
    ModeCollapse,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    /// Noise levels for label_noise.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1")]
    pub grid: Vec<f64>,
    /// Collapse steps, including the uncollapsed start.
    #[arg(long, default_value_t = 11)]
    pub steps: usize,
    /// Kept pool fraction per collapse step, as `num/den`.
    #[arg(long, default_value = "2/3")]
    pub shrink: String,
    /// Samples emitted per class at each step.
    #[arg(long, default_value_t = 100)]
    pub per_class_sample: usize,
    /// Classes whose pools shrink.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub collapsed_classes: Vec<usize>,
    /// Collapse runs averaged per step.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[command(flatten)]
    pub inputs: InputArgs,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    /// Samples per class on each side.
    #[arg(long, default_value_t = 1000)]
    pub n_per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', num_args = 2, default_value = "1,2")]
    pub sigma_real: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 2, default_value = "2,1")]
    pub sigma_gen: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub radii: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub radial_sigma: f64,
    #[arg(long, default_value_t = 10)]
    pub classes: usize,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0.9)]
    pub confidence: f64,
}

pub fn parse_shrink(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("shrink {s:?} is not a fraction num/den in (0, 1)"));
    let (n, d) = s.split_once('/').ok_or_else(bad)?;
    let (n, d): (usize, usize) = (n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?);
    if n == 0 || n >= d {
        return Err(bad());
    }
    Ok((n, d))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Output {
            path: path.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Output {
                path: "<stdout>".into(),
                source,
            }),
    }
}

/// Runs `f` on a pool of `threads` workers, or the global pool when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("thread count must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}"))),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    with_threads(cli.threads, || dispatch(cli.command))?
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Metrics(a) => {
            let cfg = a.inputs.resolve()?;
            emit(a.out.as_deref(), &commands::cmd_metrics(&cfg, &a.metrics, a.format)?)
        }
        Command::Sweep(a) => {
            if a.format != OutputFormat::Csv {
                return Err(CliError::Config("sweep output is CSV only".into()));
            }
            let cfg = a.inputs.resolve()?;
            let spec = match a.experiment {
                Experiment::LabelNoise => Sweep::LabelNoise { grid: a.grid },
                Experiment::ModeCollapse => Sweep::ModeCollapse {
                    schedule: CollapseSchedule {
                        steps: a.steps,
                        shrink: parse_shrink(&a.shrink)?,
                        per_class_sample: a.per_class_sample,
                        collapsed_classes: a.collapsed_classes,
                    },
                    repeats: a.repeats,
                },
            };
            emit(a.out.as_deref(), &commands::cmd_sweep(&cfg, &spec)?)
        }
        Command::Match(a) => {
            let cfg = a.inputs.resolve()?;
            emit(a.out.as_deref(), &commands::cmd_match(&cfg)?)
        }
        Command::Synth(a) => {
            let opts = SynthOptions {
                kind: a.kind,
                n_per_class: a.n_per_class,
                seed: a.seed,
                sigma_real: [a.sigma_real[0], a.sigma_real[1]],
                sigma_gen: [a.sigma_gen[0], a.sigma_gen[1]],
                radii: a.radii,
                radial_sigma: a.radial_sigma,
                classes: a.classes,
                dim: a.dim,
                separation: a.separation,
                confidence: a.confidence,
            };
            let written = commands::cmd_synth(&opts, &a.out)?;
            let list: String = written.iter().map(|p| format!("{}\n", p.display())).collect();
            emit(None, &list)
        }
    }
}
