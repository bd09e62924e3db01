mod config;
mod output;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use ssct::real::Precision;
use ssct::tables::{self, Cell, TableOptions};
use ssct::SsctError;

use config::{ExperimentConfig, SchemaError};

#[derive(Parser)]
#[command(name = "ssct", version, about = "Sequential shifted chi-square test for spectrum sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// CSV output file
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Markdown mirror of the CSV output
    #[arg(long, global = true)]
    markdown: Option<PathBuf>,
    /// Overrides the seed of the experiment
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the Monte Carlo trial count
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Arithmetic for the exact recursion
    #[arg(long, global = true, value_enum)]
    precision: Option<PrecisionArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Native,
    Extended,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Native => Precision::Native,
            PrecisionArg::Extended => Precision::Extended,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one experiment file
    Evaluate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rebuild one of the comparison tables
    Table {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        which: u8,
    },
    /// Evaluate an experiment over a range of one parameter
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        param: Param,
        /// Comma-separated values, e.g. -12,-13,-14
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "range")]
        values: Vec<f64>,
        /// Inclusive `start:stop:step`
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Param {
    #[value(name = "snr_o_db")]
    SnrODb,
    #[value(name = "b_bar")]
    BBar,
    #[value(name = "gamma_bar")]
    GammaBar,
    #[value(name = "M", alias = "m")]
    M,
}

impl Param {
    fn name(self) -> &'static str {
        match self {
            Param::SnrODb => "snr_o_db",
            Param::BBar => "b_bar",
            Param::GammaBar => "gamma_bar",
            Param::M => "M",
        }
    }

    fn apply(self, cfg: &mut ExperimentConfig, x: f64) -> Result<(), SchemaError> {
        match self {
            Param::SnrODb => cfg.signal.snr_o_db = Some(x),
            Param::BBar => cfg.detector.b_bar = x,
            Param::GammaBar => cfg.detector.gamma_bar = x,
            Param::M => {
                if x.fract() != 0.0 || x < 0.0 {
                    return Err(SchemaError::Invalid(format!("M must be a whole number, got {x}")));
                }
                cfg.detector.m = x as usize;
            }
        }
        Ok(())
    }
}

/// Usage problems that clap cannot see.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn parse_range(text: &str) -> Result<Vec<f64>, Usage> {
    let bad = || Usage(format!("range `{text}` must look like start:stop:step"));
    let parts: Vec<f64> =
        text.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let [start, stop, step] = parts[..] else { return Err(bad()) };
    if !(step.is_finite() && step != 0.0 && start.is_finite() && stop.is_finite()) {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor();
    if count < 0.0 {
        return Ok(Vec::new());
    }
    Ok((0..=count as usize).map(|i| start + i as f64 * step).collect())
}

fn apply_overrides(cli: &Cli, cfg: &mut ExperimentConfig) {
    if let Some(s) = cli.seed {
        cfg.evaluation.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.evaluation.trials = t;
    }
    if let Some(p) = cli.precision {
        cfg.evaluation.precision = Precision::from(p).to_string();
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn print_metrics(metrics: &report::Metrics) -> io::Result<()> {
    let mut out = io::stdout().lock();
    let width = metrics.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, c) in metrics {
        let tol = if c.tolerance > 0.0 { format!(" ± {}", output::short(c.tolerance)) } else { String::new() };
        writeln!(out, "{k:<width$}  {}{tol}  ({})", output::short(c.value), c.method)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::Evaluate { config } => {
            let mut cfg = ExperimentConfig::load(config)?;
            apply_overrides(cli, &mut cfg);
            let metrics = report::evaluate(&cfg.build()?)?;
            print_metrics(&metrics)?;
            let mut table = tables::Table::new("Evaluation", vec!["value".into()]);
            for (k, c) in &metrics {
                table.push(k, vec![Some(*c)]);
            }
            if let Some(p) = &cli.out {
                output::table_csv(&table, create(p)?)?;
            }
            if let Some(p) = &cli.markdown {
                write_text(p, &output::table_markdown(&table))?;
            }
        }
        Command::Table { which } => {
            let d = TableOptions::default();
            let opts = TableOptions {
                trials: cli.trials.unwrap_or(d.trials),
                seed: cli.seed.unwrap_or(d.seed),
                precision: cli.precision.map(Precision::from).unwrap_or(d.precision),
                priors: d.priors,
            };
            let table = tables::build(*which, &opts)?;
            match &cli.out {
                Some(p) => output::table_csv(&table, create(p)?)?,
                None => output::table_csv(&table, io::stdout().lock())?,
            }
            if let Some(p) = &cli.markdown {
                write_text(p, &output::table_markdown(&table))?;
            }
        }
        Command::Sweep { config, param, values, range } => {
            let points = match range {
                Some(r) => parse_range(r)?,
                None => values.clone(),
            };
            if points.is_empty() {
                bail!(Usage("the sweep range is empty".into()));
            }
            let mut base = ExperimentConfig::load(config)?;
            apply_overrides(cli, &mut base);
            let evaluated = points
                .par_iter()
                .map(|&x| {
                    let mut cfg = base.clone();
                    param.apply(&mut cfg, x)?;
                    let metrics = report::evaluate(&cfg.build()?)?;
                    eprintln!("{} = {x} done", param.name());
                    Ok((x, metrics))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let names: Vec<String> = evaluated[0].1.iter().map(|(k, _)| k.clone()).collect();
            let rows: Vec<(f64, Vec<Option<Cell>>)> = evaluated
                .iter()
                .map(|(x, m)| (*x, names.iter().map(|n| m.iter().find(|(k, _)| k == n).map(|(_, c)| *c)).collect()))
                .collect();
            match &cli.out {
                Some(p) => output::sweep_csv(param.name(), &names, &rows, create(p)?)?,
                None => output::sweep_csv(param.name(), &names, &rows, io::stdout().lock())?,
            }
            if let Some(p) = &cli.markdown {
                write_text(p, &output::sweep_markdown(param.name(), &names, &rows))?;
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.is::<SchemaError>() || err.is::<Usage>() {
        return 2;
    }
    match err.downcast_ref::<SsctError>() {
        Some(SsctError::Unstable { .. }) => 3,
        Some(SsctError::InvalidConfig(_) | SsctError::Domain(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("SSCT_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: SSCT_THREADS ignored: {e}");
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
