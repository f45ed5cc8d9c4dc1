use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use qdos_core::driver::{
    deviation_rows, emit_deviations, emit_report, format_sig12, parse_rows_json, repeat_stability, run_workflow,
    Method, ReportFormat, ResultRow, RowStatus, RunConfig, SpreadSummary,
};
use qdos_core::Execution;

#[derive(Parser)]
#[command(name = "qdos", version, about = "Sampled active-space selection with subspace MRMP2 / TCC corrections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `sampling.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `output.dir`. Without one the main report goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads; 1 selects the sequential code path.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every requested method on every input geometry.
    Run,
    /// Like `run`, and also write deviations from `fci-oracle` when it is requested.
    Scan,
    /// Repeat the sampled workflow with derived seeds and summarise the spread.
    Stability {
        /// Overrides `repeats` from the configuration.
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Convert a JSON result file into CSV, JSON or a deviation table.
    Report {
        /// Rows previously written with `--format json`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        deviations: bool,
    },
}

fn load_config(g: &GlobalArgs) -> anyhow::Result<RunConfig> {
    let path = g.config.as_ref().context("--config is required for this subcommand")?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = RunConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(seed) = g.seed {
        cfg.sampling.seed = seed;
    }
    if let Some(dir) = &g.out {
        cfg.output.dir = Some(dir.clone());
    }
    if let Some(f) = g.format {
        cfg.output.format = f.into();
    }
    if g.jobs == Some(1) {
        cfg.solver.execution = Execution::Sequential;
        cfg.cc.execution = Execution::Sequential;
    }
    Ok(cfg)
}

fn extension(f: ReportFormat) -> &'static str {
    match f {
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
    }
}

/// Writes `name` into `dir`, or prints it when no directory is configured
/// and `primary` is set.
fn write_output(dir: Option<&Path>, name: &str, text: &str, primary: bool) -> anyhow::Result<()> {
    match dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            info!("wrote {}", path.display());
        }
        None if primary => print!("{text}"),
        None => {}
    }
    Ok(())
}

fn emit_summary(rows: &[SpreadSummary]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["geometry", "method", "n_ok", "mean", "min", "max", "spread"])?;
    for s in rows {
        w.write_record([
            s.geometry.clone(),
            s.method.clone(),
            s.n_ok.to_string(),
            format_sig12(s.mean),
            format_sig12(s.min),
            format_sig12(s.max),
            format_sig12(s.spread),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn all_ok(rows: &[ResultRow]) -> bool {
    rows.iter().all(|r| r.status == RowStatus::Ok)
}

fn execute(cli: &Cli) -> anyhow::Result<bool> {
    let g = &cli.global;
    match &cli.command {
        Command::Run | Command::Scan => {
            let cfg = load_config(g)?;
            let rows = run_workflow(&cfg)?;
            let dir = cfg.output.dir.as_deref();
            let fmt = cfg.output.format;
            write_output(dir, &format!("results.{}", extension(fmt)), &emit_report(&rows, fmt)?, true)?;
            if matches!(cli.command, Command::Scan) && cfg.methods.contains(&Method::FciOracle) {
                write_output(dir, "deviations.csv", &emit_deviations(&deviation_rows(&rows))?, true)?;
            }
            Ok(all_ok(&rows))
        }
        Command::Stability { repeats } => {
            let mut cfg = load_config(g)?;
            if let Some(r) = repeats {
                cfg.repeats = *r;
            }
            let rep = repeat_stability(&cfg)?;
            let dir = cfg.output.dir.as_deref();
            let fmt = cfg.output.format;
            write_output(dir, &format!("stability.{}", extension(fmt)), &emit_report(&rep.rows, fmt)?, false)?;
            write_output(dir, "spread.csv", &emit_summary(&rep.summary)?, true)?;
            Ok(all_ok(&rep.rows))
        }
        Command::Report { input, deviations } => {
            let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
            let rows = parse_rows_json(&text)?;
            let dir = g.out.as_deref();
            if *deviations {
                let dev = deviation_rows(&rows);
                if dev.is_empty() {
                    bail!("{} contains no fci-oracle rows to compare against", input.display());
                }
                write_output(dir, "deviations.csv", &emit_deviations(&dev)?, true)?;
            } else {
                let fmt: ReportFormat = g.format.map_or(ReportFormat::Csv, Into::into);
                write_output(dir, &format!("results.{}", extension(fmt)), &emit_report(&rows, fmt)?, true)?;
            }
            Ok(all_ok(&rows))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().filter_level(cli.global.log_level).format_timestamp(None).init();

    let outcome = match cli.global.jobs {
        Some(n) if n > 1 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(e.into()),
        },
        _ => execute(&cli),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            log::error!("some rows failed; see the status and diagnostics columns");
            ExitCode::from(1)
        }
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::from(2)
        }
    }
}
