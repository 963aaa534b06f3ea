use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qpt_anneal::config::{ConvergenceAxis, RawConfig, RunConfig};
use qpt_anneal::observables::ObservableTrace;
use qpt_anneal::run::{convergence_sweep, describe_grid, run};
use qpt_anneal::scaling::{
    apt_window, collapse_metric, extract_critical_functions, fit_power_law, kzm_window, write_json,
    Abscissa, FinalSample,
};
use qpt_anneal::spectral::SweepOptions;
use qpt_anneal::{Error, ModelKind, ModelSpec};

#[derive(Parser)]
#[command(
    name = "qpt-anneal",
    version,
    about = "Quenches across quantum phase transitions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct Common {
    /// Flat key = value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    model: Option<String>,
    /// Comma-separated qubit counts.
    #[arg(long, global = true)]
    sizes: Option<String>,
    #[arg(long, global = true)]
    velocities: Option<String>,
    /// Scaled velocities Λ (converted per size).
    #[arg(long, global = true)]
    lambdas: Option<String>,
    #[arg(long, global = true)]
    kappa: Option<String>,
    #[arg(long, global = true)]
    engine: Option<String>,
    #[arg(long, global = true)]
    levels: Option<String>,
    /// Output directory (default: $QPT_ANNEAL_OUT or ./results).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Print the resolved grid and exit.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every grid point and run the requested analyses.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Grow M, n_levels or photon_cap until the final heating settles.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        axis: String,
        /// Explicit values instead of doubling.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<usize>>,
    },
    /// Compare two traces taken at equal Λ.
    Collapse {
        trace_a: PathBuf,
        trace_b: PathBuf,
        /// Window in x as lo,hi.
        #[arg(long, default_value = "-10,10", allow_hyphen_values = true)]
        window: String,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Power-law fit of the final heating of several traces.
    Fit {
        traces: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Regime::Kzm)]
        regime: Regime,
        /// Explicit abscissa window as lo,hi (υ for apt, Λ for kzm).
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Tabulate critical functions C(x), D(x) over several sizes.
    Critfunc {
        #[command(flatten)]
        common: Common,
        /// Level pairs as n:m, comma-separated.
        #[arg(long, value_delimiter = ',', default_value = "1:0")]
        pairs: Vec<String>,
        #[arg(long, default_value_t = 8)]
        truncation: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Regime {
    Apt,
    Kzm,
}

fn raw_config(c: &Common) -> qpt_anneal::Result<RawConfig> {
    let mut raw = match &c.config {
        Some(p) => RawConfig::read(p)?,
        None => RawConfig::default(),
    };
    let flags = [
        ("model", c.model.clone()),
        ("size", c.sizes.clone()),
        ("velocity", c.velocities.clone()),
        ("scaled_velocity", c.lambdas.clone()),
        ("kappa", c.kappa.clone()),
        ("engine", c.engine.clone()),
        ("levels", c.levels.clone()),
        ("out", c.out.as_ref().map(|p| p.display().to_string())),
        ("workers", c.workers.map(|w| w.to_string())),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            raw.set(key, &v)?;
        }
    }
    // a flag for one velocity axis drops the other one from the file
    if c.velocities.is_some() && c.lambdas.is_none() {
        raw.clear("scaled_velocity");
    }
    if c.lambdas.is_some() && c.velocities.is_none() {
        raw.clear("velocity");
    }
    Ok(raw)
}

fn parse_window(s: &str) -> qpt_anneal::Result<(f64, f64)> {
    let bad = || Error::Config(format!("window '{s}' is not lo,hi"));
    let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    Ok((lo, hi))
}

fn print_json<T: serde::Serialize>(value: &T, path: Option<&PathBuf>) -> qpt_anneal::Result<()> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

/// 0 success, 1 configuration or fatal error, 2 partial failure.
fn execute(cli: Cli) -> qpt_anneal::Result<u8> {
    match cli.command {
        Command::Run { common } => {
            let cfg = RunConfig::from_raw(&raw_config(&common)?)?;
            if common.dry_run {
                print!("{}", describe_grid(&cfg)?);
                return Ok(0);
            }
            let report = run(&cfg)?;
            let failed = report.failures();
            eprintln!(
                "{} point(s), {failed} failure(s); report in {}",
                report.points.len(),
                cfg.out.join("report.json").display()
            );
            Ok(if failed == 0 { 0 } else { 2 })
        }
        Command::Converge {
            common,
            axis,
            values,
        } => {
            let cfg = RunConfig::from_raw(&raw_config(&common)?)?;
            let axis: ConvergenceAxis = axis.parse()?;
            if common.dry_run {
                print!("{}", describe_grid(&cfg)?);
                return Ok(0);
            }
            let table = convergence_sweep(&cfg, axis, values.as_deref())?;
            std::fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
            let path = cfg.out.join(format!("converge_{axis}.json"));
            write_json(&path, &table)?;
            print_json(&table, None)?;
            Ok(if table.converged.is_some() { 0 } else { 2 })
        }
        Command::Collapse {
            trace_a,
            trace_b,
            window,
            report,
        } => {
            let a = ObservableTrace::read_csv(&trace_a)?;
            let b = ObservableTrace::read_csv(&trace_b)?;
            let r = collapse_metric(
                &a,
                &b,
                parse_window(&window)?,
                (
                    &trace_a.display().to_string(),
                    &trace_b.display().to_string(),
                ),
            )?;
            print_json(&r, report.as_ref())?;
            Ok(0)
        }
        Command::Fit {
            traces,
            regime,
            window,
            report,
        } => {
            let samples: Vec<FinalSample> = traces
                .iter()
                .map(|p| ObservableTrace::read_csv(p).map(|t| FinalSample::from_trace(&t)))
                .collect::<qpt_anneal::Result<_>>()?;
            let (abscissa, pts): (Abscissa, Vec<(f64, f64)>) = match regime {
                Regime::Apt => (
                    Abscissa::Velocity,
                    samples.iter().map(|s| (s.velocity, s.q_final)).collect(),
                ),
                Regime::Kzm => (
                    Abscissa::ScaledVelocity,
                    samples
                        .iter()
                        .map(|s| (s.scaled_velocity, s.q_final))
                        .collect(),
                ),
            };
            let w = match (window, regime) {
                (Some(w), _) => parse_window(&w)?,
                (None, Regime::Apt) => apt_window(&samples)?,
                (None, Regime::Kzm) => kzm_window(&samples)?,
            };
            let fit = fit_power_law(&pts, w, abscissa)?;
            print_json(&fit, report.as_ref())?;
            Ok(0)
        }
        Command::Critfunc {
            common,
            pairs,
            truncation,
        } => {
            let raw = raw_config(&common)?;
            let model: ModelKind = raw
                .one("model")?
                .ok_or_else(|| Error::Config("missing model".into()))?;
            let sizes: Vec<usize> = raw.list("size")?;
            if sizes.is_empty() {
                return Err(Error::Config("missing sweep axis: size".into()));
            }
            let pairs = pairs
                .iter()
                .map(|p| {
                    let (n, m) = p
                        .split_once(':')
                        .ok_or_else(|| Error::Config(format!("pair '{p}' is not n:m")))?;
                    let parse = |s: &str| {
                        s.trim()
                            .parse::<usize>()
                            .map_err(|e| Error::Config(format!("pair '{p}': {e}")))
                    };
                    Ok((parse(n)?, parse(m)?))
                })
                .collect::<qpt_anneal::Result<Vec<_>>>()?;
            let specs = sizes
                .iter()
                .map(|&n| ModelSpec::with_truncation(model, n, truncation))
                .collect::<qpt_anneal::Result<Vec<_>>>()?;
            let cfg_out = RunConfig::from_raw(&{
                let mut r = raw.clone();
                r.set("velocity", "1")?;
                r.clear("scaled_velocity");
                r
            })?;
            if common.dry_run {
                println!(
                    "{model}: sizes {sizes:?}, pairs {pairs:?} -> {}",
                    cfg_out.out.display()
                );
                return Ok(0);
            }
            let tables = extract_critical_functions(
                &specs,
                (cfg_out.lambda_start, cfg_out.lambda_end),
                &pairs,
                &cfg_out.grid(),
                &SweepOptions::default(),
            )?;
            let dir = cfg_out.out.join(model.name());
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for t in &tables {
                let path = dir.join(format!("critfunc_{}_{}.csv", t.pair.0, t.pair.1));
                t.write_csv(&path)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
