//! Command-line parsing and output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::config::{
    CheckConfig, Command, DensityConfig, DimensionConfig, DispersionConfig, Format, KernelConfig, MethodName, Params,
    RunConfig, SimulateConfig,
};
use crate::error::{CliError, CliResult};
use crate::format::RunRecord;
use crate::parallel;
use crate::presets::{Figure, Initial};
use crate::run::{self, Output};

#[derive(Debug, Parser)]
#[command(
    name = "selfsim",
    version,
    about = "Self-similar harmonic chains: dispersion, continuum limit, wave propagation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    /// Scale ratio N > 1
    #[arg(long = "N", value_name = "N")]
    pub n: Option<f64>,
    /// Similarity exponent, 0 < delta < 2
    #[arg(long)]
    pub delta: Option<f64>,
    /// Lattice spacing h > 0
    #[arg(long)]
    pub h: Option<f64>,
}

impl ChainArgs {
    fn resolve(&self, n: f64, delta: f64, h: f64) -> Params {
        Params {
            n: self.n.unwrap_or(n),
            delta: self.delta.unwrap_or(delta),
            h: self.h.unwrap_or(h),
        }
    }

    fn resolve_figure(&self, preset: Option<Figure>, n: f64, delta: f64) -> CliResult<Params> {
        match preset {
            Some(f) if self.n.is_some() || self.delta.is_some() => Err(CliError::validation(format!(
                "--preset {} fixes N and delta; drop --N/--delta",
                format!("{f:?}").to_lowercase()
            ))),
            Some(f) => Ok(self.resolve(Figure::N, f.delta(), 1.0)),
            None => Ok(self.resolve(n, delta, 1.0)),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Add the current time to JSON records (off by default so that records are reproducible)
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Sample the dispersion relation omega^2(kh)
    Dispersion {
        #[command(flatten)]
        chain: ChainArgs,
        /// Reference curve: fig1..fig4 are N = 1.5 with delta 1.2, 0.7, 0.5, 0.1
        #[arg(long, value_enum)]
        preset: Option<Figure>,
        #[arg(long, default_value_t = 0.0)]
        kh_min: f64,
        #[arg(long, default_value_t = 10.0)]
        kh_max: f64,
        #[arg(long, default_value_t = 2001)]
        points: usize,
        /// Certified truncation tolerance per sample
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Evaluate at the single point --kh
        #[arg(long, requires = "kh")]
        point: bool,
        #[arg(long)]
        kh: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Empirical density of states against the long-wave power law
    Density {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 1e-3)]
        omega_min: f64,
        #[arg(long, default_value_t = 1e-1)]
        omega_max: f64,
        #[arg(long, default_value_t = 9)]
        points: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Convolution kernel of the continuum Laplacian
    Kernel {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 1e-3)]
        x_min: f64,
        #[arg(long, default_value_t = 10.0)]
        x_max: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Box-counting dimension of a dispersion curve
    Dimension {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_enum)]
        preset: Option<Figure>,
        #[arg(long, default_value_t = 0.01)]
        kh_min: f64,
        #[arg(long, default_value_t = 100.0)]
        kh_max: f64,
        #[arg(long, default_value_t = 1 << 17)]
        samples: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Evolve the wave equation on a periodic chain
    Simulate {
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_enum, default_value_t = Initial::Mode)]
        preset: Initial,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        dx: f64,
        /// Time step; a quarter of the explicit stability limit when absent
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, value_enum, default_value_t = MethodName::Spectral)]
        method: MethodName,
        #[arg(long, default_value_t = 1)]
        mode: usize,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 1024)]
        max_snapshots: usize,
        /// Also write one x,u,v CSV per snapshot into this directory
        #[arg(long)]
        snapshot_dir: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the invariant battery and print a table
    Check {
        /// Smaller draws and grids
        #[arg(long)]
        quick: bool,
        #[arg(long, default_value_t = 20240601)]
        seed: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Repeat the run stored in a JSON record
    Rerun {
        record: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Output format; the record's own when absent
        #[arg(long, value_enum)]
        format: Option<Format>,
        #[arg(long)]
        timestamp: bool,
    },
}

/// Where and how to write.
#[derive(Debug, Clone)]
pub struct Sink {
    pub output: Option<PathBuf>,
    pub timestamp: bool,
    pub snapshot_dir: Option<PathBuf>,
}

pub fn resolve(sub: Sub) -> CliResult<(RunConfig, Sink)> {
    let sink = |o: &OutputArgs| Sink {
        output: o.output.clone(),
        timestamp: o.timestamp,
        snapshot_dir: None,
    };
    let (command, format, sink) = match sub {
        Sub::Dispersion {
            chain,
            preset,
            kh_min,
            kh_max,
            points,
            tol,
            point,
            kh,
            out,
        } => {
            let params = chain.resolve_figure(preset, 1.5, 1.0)?;
            let cfg = DispersionConfig {
                params,
                preset,
                kh_min,
                kh_max,
                points,
                tol,
                point: if point { kh } else { None },
            };
            (Command::Dispersion(cfg), out.format, sink(&out))
        }
        Sub::Density {
            chain,
            tol,
            omega_min,
            omega_max,
            points,
            out,
        } => {
            let cfg = DensityConfig {
                params: chain.resolve(1.01, 1.0, 1.0),
                tol,
                omega_min,
                omega_max,
                points,
            };
            (Command::Density(cfg), out.format, sink(&out))
        }
        Sub::Kernel {
            chain,
            x_min,
            x_max,
            points,
            out,
        } => {
            let cfg = KernelConfig {
                params: chain.resolve(1.01, 0.5, 1.0),
                x_min,
                x_max,
                points,
            };
            (Command::Kernel(cfg), out.format, sink(&out))
        }
        Sub::Dimension {
            chain,
            preset,
            kh_min,
            kh_max,
            samples,
            tol,
            out,
        } => {
            let cfg = DimensionConfig {
                params: chain.resolve_figure(preset, 1.5, 0.5)?,
                preset,
                kh_min,
                kh_max,
                samples,
                tol,
            };
            (Command::Dimension(cfg), out.format, sink(&out))
        }
        Sub::Simulate {
            chain,
            preset,
            samples,
            dx,
            dt,
            steps,
            method,
            mode,
            amplitude,
            seed,
            tol,
            max_snapshots,
            snapshot_dir,
            out,
        } => {
            let cfg = SimulateConfig {
                params: chain.resolve(1.5, 1.0, 0.1),
                preset,
                samples,
                dx,
                dt,
                steps,
                method,
                mode,
                amplitude,
                seed,
                tol,
                max_snapshots,
            };
            let mut s = sink(&out);
            s.snapshot_dir = snapshot_dir;
            (Command::Simulate(cfg), out.format, s)
        }
        Sub::Check { quick, seed, out } => (Command::Check(CheckConfig { quick, seed }), out.format, sink(&out)),
        Sub::Rerun {
            record,
            output,
            format,
            timestamp,
        } => {
            let text = fs::read_to_string(&record)
                .map_err(|e| CliError::validation(format!("rerun: cannot read {}: {e}", record.display())))?;
            let rec = RunRecord::from_json(&text)?;
            if rec.version != env!("CARGO_PKG_VERSION") {
                log::warn!(
                    "record written by version {}, running {}",
                    rec.version,
                    env!("CARGO_PKG_VERSION")
                );
            }
            let sink = Sink {
                output,
                timestamp,
                snapshot_dir: None,
            };
            let format = format.unwrap_or(rec.config.format);
            (rec.config.command, format, sink)
        }
    };
    Ok((RunConfig { command, format }, sink))
}

/// The bytes a run writes in the configured format.
pub fn render(config: &RunConfig, out: &Output, timestamp: bool) -> String {
    match config.format {
        Format::Csv => out.table.to_csv(),
        Format::Json => {
            let mut rec = RunRecord::new(config.clone(), out.result.clone());
            if timestamp {
                rec.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
            }
            rec.to_json()
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display())))
}

/// Executes a resolved run and writes its output.
pub fn execute(config: &RunConfig, sink: &Sink) -> CliResult<()> {
    let out = parallel::with_pool(|| run::execute(&config.command))??;
    let text = render(config, &out, sink.timestamp);
    match &sink.output {
        Some(path) => write_file(path, &text)?,
        None => {
            // a summary, if any, goes to stderr so stdout stays machine-readable
            match std::io::stdout().write_all(text.as_bytes()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
                r => r.map_err(|e| CliError::validation(format!("stdout: {e}")))?,
            }
        }
    }
    if let Some(summary) = &out.summary {
        if sink.output.is_some() {
            print!("{summary}");
        } else {
            eprint!("{summary}");
        }
    }
    if let (Some(dir), Some(traj)) = (&sink.snapshot_dir, &out.trajectory) {
        fs::create_dir_all(dir).map_err(|e| CliError::validation(format!("cannot create {}: {e}", dir.display())))?;
        for (step, table) in run::snapshot_tables(traj) {
            write_file(&dir.join(format!("snapshot_{step:08}.csv")), &table.to_csv())?;
        }
    }
    match out.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Runs a command line (without the program name) in process and returns
/// what it would write to standard output.
pub fn output_for(args: &[&str]) -> CliResult<String> {
    let cli = Cli::try_parse_from(std::iter::once("selfsim").chain(args.iter().copied()))
        .map_err(|e| CliError::validation(e.to_string()))?;
    let (config, sink) = resolve(cli.command)?;
    let out = parallel::with_pool(|| run::execute(&config.command))??;
    match out.failure {
        Some(e) => Err(e),
        None => Ok(render(&config, &out, sink.timestamp)),
    }
}

/// Runs a parsed command line and returns the process exit status.
pub fn main_with(cli: Cli) -> i32 {
    let result = resolve(cli.command).and_then(|(config, sink)| execute(&config, &sink));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
