use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lattice_scatter::geometry::ModeKind;
use lattice_scatter::scan::{
    self, Normalization, OutputFormat, Preset, ScanConfig, ScanOverrides, StateKind,
};
use lattice_scatter::Error;

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "LATTICE_SCATTER_OUT_DIR";

const EXIT_VALIDATION: u8 = 1;
const EXIT_CHECK_FAILED: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "lattice-scatter", version, about = "Cavity light scattering from atoms in an optical lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the detection angle θ1 and write the observables.
    Scan(CommonArgs),
    /// Compare the closed forms with the enumeration (or Monte Carlo) oracle.
    Check(CommonArgs),
    /// Two traveling waves, N = M = K = 30, θ0 = 0.
    Fig2(CommonArgs),
    /// Two traveling waves, N = M = 30, K = 15, θ0 = 0.
    Fig2c(CommonArgs),
    /// Two standing waves, N = M = K = 30, θ0 = 0.1π.
    Fig3(CommonArgs),
    /// Single-site and window statistics of the state.
    Table1(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    #[arg(long, value_parser = ["mi", "sf", "coherent"])]
    state: Option<String>,
    /// Total (mean) atom number.
    #[arg(long = "N")]
    atoms: Option<f64>,
    /// Lattice sites.
    #[arg(long = "M")]
    sites: Option<usize>,
    /// Illuminated sites (default: all).
    #[arg(long = "K")]
    illuminated: Option<usize>,
    /// First illuminated site, 1-based.
    #[arg(long)]
    j0: Option<usize>,
    /// Lattice period.
    #[arg(long)]
    d: Option<f64>,
    #[arg(long)]
    lambda0: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    /// Probe angle in radians.
    #[arg(long, allow_negative_numbers = true)]
    theta0: Option<f64>,
    #[arg(long, value_parser = ["traveling", "standing"])]
    probe: Option<String>,
    #[arg(long, value_parser = ["traveling", "standing"])]
    detect: Option<String>,
    /// Grid points over [theta1-start, theta1-stop].
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    theta1_start: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta1_stop: Option<f64>,
    #[arg(long, value_parser = ["raw", "per-nk"])]
    normalize: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    g0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delta_0a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delta_01: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    /// Quadrature angle in radians.
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,
    /// Add exact oracle columns to scan output.
    #[arg(long)]
    oracle: bool,
    /// Use a Monte Carlo oracle with this many samples per grid point.
    #[arg(long, value_name = "SAMPLES")]
    mc: Option<u64>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Largest number of configurations the exact oracle may enumerate.
    #[arg(long, value_name = "COUNT")]
    cap: Option<u64>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
    /// JSON file with the same keys as these flags; flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(&self) -> Result<ScanOverrides, Error> {
        let parse_kind = |s: &Option<String>| s.as_deref().map(str::parse::<ModeKind>).transpose();
        Ok(ScanOverrides {
            state: self.state.as_deref().map(str::parse::<StateKind>).transpose()?,
            atoms: self.atoms,
            sites: self.sites,
            illuminated: self.illuminated,
            j0: self.j0,
            d: self.d,
            lambda0: self.lambda0,
            lambda1: self.lambda1,
            theta0: self.theta0,
            probe: parse_kind(&self.probe)?,
            detect: parse_kind(&self.detect)?,
            points: self.points,
            theta1_start: self.theta1_start,
            theta1_stop: self.theta1_stop,
            normalize: self.normalize.as_deref().map(str::parse::<Normalization>).transpose()?,
            g0: self.g0,
            a0: self.a0,
            delta_0a: self.delta_0a,
            delta_01: self.delta_01,
            kappa: self.kappa,
            phi: self.phi,
            oracle: self.oracle.then_some(true),
            mc: self.mc,
            seed: self.seed,
            cap: self.cap,
            out: self.out.as_ref().map(|p| p.display().to_string()),
            format: self.format.as_deref().map(str::parse::<OutputFormat>).transpose()?,
        })
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_VALIDATION,
    }
}

/// Destination for output: explicit path, then `$LATTICE_SCATTER_OUT_DIR/<name>.<ext>`,
/// then stdout.
fn destination(explicit: Option<&str>, name: &str, format: OutputFormat) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(PathBuf::from(p));
    }
    std::env::var_os(OUT_DIR_ENV)
        .filter(|d| !d.is_empty())
        .map(|dir| PathBuf::from(dir).join(format!("{name}.{}", format.extension())))
}

fn write_output(
    path: Option<PathBuf>,
    write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), Error> {
    match path {
        Some(path) => {
            let io_err = |source| Error::Io {
                path: path.clone(),
                source,
            };
            let file = std::fs::File::create(&path).map_err(io_err)?;
            let mut w = std::io::BufWriter::new(file);
            write(&mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(|source| Error::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let (name, args, preset) = match &cli.command {
        Command::Scan(a) => ("scan", a, None),
        Command::Check(a) => ("check", a, None),
        Command::Fig2(a) => ("fig2", a, Some(Preset::Fig2)),
        Command::Fig2c(a) => ("fig2c", a, Some(Preset::Fig2c)),
        Command::Fig3(a) => ("fig3", a, Some(Preset::Fig3)),
        Command::Table1(a) => ("table1", a, None),
    };
    let flags = args.overrides()?;
    let overrides = match &args.config {
        Some(path) => flags.layered_over(&ScanOverrides::from_json_file(path)?),
        None => flags,
    };
    let mut cfg = preset.map(Preset::config).unwrap_or_else(ScanConfig::default);
    overrides.apply(&mut cfg);
    let format = overrides.format.unwrap_or(OutputFormat::Csv);
    let out = destination(overrides.out.as_deref(), name, format);

    match cli.command {
        Command::Check(_) => {
            let report = scan::run_oracle_check(&cfg)?;
            println!("{report}");
            Ok(if report.passed() { 0 } else { EXIT_CHECK_FAILED })
        }
        Command::Table1(_) => {
            let report = scan::table1_for(&cfg)?;
            write_output(out, |w| scan::write_table1(&report, format, w))?;
            Ok(0)
        }
        _ => {
            let rows = scan::run_scan(&cfg)?;
            write_output(out, |w| scan::write_rows(&rows, format, w))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
