use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cosserat::error::Result;
use cosserat::plane_waves::classification_table;
use cosserat::report::{emit, CheckReport, Format};
use cosserat::snapshot;
use cosserat::suites::{check_field, run_suite, sample_field, Config, Mode};

#[derive(Parser)]
#[command(name = "cosserat", version, about = "Numerical checks for a spinor-coframe model of the electron")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a named suite: coframe, torsion-routes, kk-decomposition,
    /// factorization, separation, theorem1, plane-waves, table1, appendix-b
    /// or all.
    Run {
        suite: String,
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
        /// Number of random fields per check, overriding the defaults.
        #[arg(long)]
        seeds: Option<usize>,
        /// Tolerance for every check in the run.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Add wall-clock runtime_ms to each report.
        #[arg(long)]
        timings: bool,
    },
    /// Print the plane-wave classification table as CSV.
    Table1 {
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long = "A0", default_value_t = 0.25)]
        a0: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample a seeded band-limited spinor field and write a snapshot.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dump: PathBuf,
    },
    /// Run the field checks on a snapshot.
    CheckField {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        output: Output,
        #[arg(long)]
        load: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// N (cubic), N,N,N or N,N,N,N (4D).
    #[arg(long, value_delimiter = ',', default_value = "32")]
    grid: Vec<usize>,
    /// Stencil order, 2 or 4.
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "A0", default_value_t = 0.25)]
    a0: f64,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Analytic,
    Stencil,
}

impl Common {
    fn config(&self) -> Config {
        Config { m: self.m, grid: self.grid.clone(), order: self.order, seed: self.seed, a0: self.a0, ..Default::default() }
    }
}

impl Output {
    fn emit(&self, reports: &[CheckReport], suite: &str) -> Result<()> {
        let format = match self.format {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        };
        emit(reports, suite, format, self.out.as_deref())
    }
}

fn summarize(reports: &[CheckReport]) -> ExitCode {
    let failed: Vec<_> = reports.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        eprintln!("FAIL {}: {:e} > {:e}", r.check_name, r.max_abs_residual, r.tolerance);
    }
    eprintln!("{}/{} checks passed", reports.len() - failed.len(), reports.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { suite, common, output, seeds, tol, mode, timings } => {
            let cfg = Config {
                seeds,
                tol,
                mode: mode.map(|m| match m {
                    ModeArg::Analytic => Mode::Analytic,
                    ModeArg::Stencil => Mode::Stencil,
                }),
                timings,
                ..common.config()
            };
            let reports = run_suite(&suite, &cfg)?;
            output.emit(&reports, &suite)?;
            Ok(summarize(&reports))
        }
        Command::Table1 { m, a0, out } => {
            if !(a0 > 0.0 && a0 < m) {
                return Err(cosserat::error::Error::ConfigInvalid(format!("table1 needs 0 < A0 < m, got A0 = {a0}")));
            }
            let mut text = String::from("r,s,particle,spin,energy\n");
            for c in classification_table(m, a0)? {
                text.push_str(&format!("{},{},{},{},{}\n", c.r.symbol(), c.s.symbol(), c.particle, c.spin, c.energy));
            }
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample { common, dump } => {
            let field = sample_field(&common.config())?;
            snapshot::dump(&dump, &field)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckField { common, output, load } => {
            let field = snapshot::load(&load)?;
            let reports = check_field(&field, &common.config())?;
            output.emit(&reports, "check-field")?;
            Ok(summarize(&reports))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
