//! `coaglab` command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use coaglab::harness::{self, table, ExperimentConfig, Format, Output, Table};

#[derive(Parser)]
#[command(name = "coaglab", version, about = "Coagulation with limited aggregations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate or evaluate a deterministic model (ode_mono, ode_limited, closed_forms).
    Solve(RunArgs),
    /// Run a stochastic model (mono/limited/threshold coalescent, configuration).
    Simulate(RunArgs),
    /// Terminal concentrations and solution-phase limits of the configured arm law.
    Limits(RunArgs),
    /// Compare an estimate table against a reference table.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment file in key=value format.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output path; `-` writes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the output format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Args)]
struct CompareArgs {
    reference: PathBuf,
    estimate: PathBuf,
    /// Keep only rows with mass at most this value (scalar rows are kept).
    #[arg(long)]
    max_m: Option<u64>,
    /// Writes the row-wise report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with status 1 when any row is flagged.
    #[arg(long)]
    strict: bool,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut config = harness::parse_config(&text)
        .with_context(|| format!("in {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(path) = &args.out {
        let format = args
            .format
            .map(Format::from)
            .unwrap_or_else(|| table::format_of(path));
        config.output = Some(Output {
            path: path.clone(),
            format,
        });
    } else if let (Some(format), Some(out)) = (args.format, config.output.as_mut()) {
        out.format = format.into();
    }
    Ok(config)
}

fn emit(table: &Table, config: &ExperimentConfig, format: Option<FormatArg>) -> Result<()> {
    match &config.output {
        Some(out) if out.path != Path::new("-") => {
            table.write(&out.path, out.format)?;
            eprintln!("wrote {} rows to {}", table.rows.len(), out.path.display());
        }
        out => {
            let format = out
                .as_ref()
                .map(|o| o.format)
                .or(format.map(Format::from))
                .unwrap_or_default();
            std::io::stdout().write_all(&table.encode(format)?)?;
        }
    }
    Ok(())
}

fn run(args: &RunArgs, stochastic: Option<bool>) -> Result<()> {
    let config = load(args)?;
    if let Some(expected) = stochastic {
        if config.model.is_stochastic() != expected {
            let hint = if expected { "solve" } else { "simulate" };
            bail!("model {} is run with `coaglab {hint}`", config.model.name());
        }
    }
    let table = match stochastic {
        None => harness::limits(&config)?,
        Some(_) => harness::run(&config)?,
    };
    emit(&table, &config, args.format)
}

fn compare(args: &CompareArgs) -> Result<bool> {
    let keep = |r: &harness::Row| args.max_m.is_none_or(|max| r.m <= max);
    let reference = Table::read(&args.reference)?.filter(keep);
    let estimate = Table::read(&args.estimate)?.filter(keep);
    let report = harness::compare(&reference, &estimate)?;
    println!("rows        {}", report.rows.len());
    println!("max |z|     {}", report.max_abs_z);
    println!("sup gap     {}", report.sup_gap);
    if let Some(leak) = report.truncation_leak {
        println!("trunc leak  {leak}");
    }
    for r in report.flagged() {
        let z = r.z.map_or("undefined".to_string(), |z| format!("{z:.3}"));
        println!(
            "flagged a={} m={} t={}: reference {} estimate {} stderr {} z {z}",
            r.a, r.m, r.t, r.reference, r.estimate, r.stderr
        );
    }
    if let Some(path) = &args.out {
        let mut bytes = serde_json::to_vec_pretty(&report)?;
        bytes.push(b'\n');
        harness::table::write_atomic(path, &bytes)?;
    }
    Ok(report.passes())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => run(args, Some(false)).map(|_| true),
        Command::Simulate(args) => run(args, Some(true)).map(|_| true),
        Command::Limits(args) => run(args, None).map(|_| true),
        Command::Compare(args) => compare(args).map(|ok| ok || !args.strict),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
