use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use shotlearn::experiment::{
    read_csv_file, run_grid_with_progress, success_region, validate, variance_sweep, write_csv, write_heatmaps, ExperimentConfig,
    HeatmapAxis, VarianceConfig,
};
use shotlearn::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "shotlearn", version, about = "Shot-limited learning of separable vs. entangled states")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SHOTLEARN_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum XAxis {
    #[value(name = "N")]
    N,
    #[value(name = "NS")]
    NS,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-check oracles and estimators; exits 1 on any failure.
    Validate {
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run a success-rate grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// CSV output (overrides output.csv; default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write heatmaps here (overrides output.svg_dir).
        #[arg(long)]
        svg_dir: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Print the high-accuracy region of a grid CSV.
    Region {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.99)]
        threshold: f64,
    },
    /// Variance sweep of the mean-state estimators with log-log fits.
    Variance {
        #[arg(long)]
        config: PathBuf,
        /// JSON output (overrides output; default stdout table only).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render heatmaps from a grid CSV.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "N")]
        xaxis: XAxis,
        #[arg(long, default_value_t = 0.99)]
        threshold: f64,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Json(_) | Error::InvalidArgument(_) | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_VALIDATION,
    }
}

fn check_threshold(t: f64) -> shotlearn::Result<()> {
    if t > 0.5 && t <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config("threshold must lie in (0.5, 1]".into()))
    }
}

fn run(cli: Cli) -> shotlearn::Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Validate { json } => {
            let report = validate()?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{report}");
            }
            Ok(if report.passed() { 0 } else { EXIT_VALIDATION })
        }
        Command::Sweep { config, out, svg_dir, quiet } => {
            let cfg = ExperimentConfig::load(&config)?;
            let result = run_grid_with_progress(&cfg, |done, total| {
                if !quiet {
                    eprintln!("[{done}/{total}]");
                }
            })?;
            for s in &result.skipped {
                eprintln!("skipped d={} N={} S={} {} trial {}: {}", s.d, s.n, s.s, s.method, s.trial, s.reason);
            }
            match out.or(cfg.output.csv.clone()) {
                Some(path) => write_csv(&result.rows, std::fs::File::create(&path)?)?,
                None => write_csv(&result.rows, std::io::stdout().lock())?,
            }
            if let Some(dir) = svg_dir.or(cfg.output.svg_dir.clone()) {
                for p in write_heatmaps(&result.rows, &dir, cfg.success_threshold, HeatmapAxis::N)? {
                    eprintln!("wrote {}", p.display());
                }
            }
            Ok(0)
        }
        Command::Region { input, threshold } => {
            check_threshold(threshold)?;
            let rows = read_csv_file(&input)?;
            let region = success_region(&rows, threshold);
            let mut grid_s: Vec<_> = rows.iter().map(|r| r.s).collect();
            grid_s.sort_unstable();
            grid_s.dedup();
            let mut stdout = std::io::stdout().lock();
            for (&(d, method), cells) in &region.cells {
                writeln!(stdout, "d={d} method={method} cells={}", cells.len())?;
                for (s, n) in region.boundary(d, method, &grid_s) {
                    match n {
                        Some(n) => writeln!(stdout, "  S={s}: N>={n}")?,
                        None => writeln!(stdout, "  S={s}: none")?,
                    }
                }
            }
            Ok(0)
        }
        Command::Variance { config, out } => {
            let text = std::fs::read_to_string(&config).map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
            let cfg = VarianceConfig::from_json(&text)?;
            let report = variance_sweep(&cfg)?;
            println!(
                "{:>3} {:>11} {:>6} {:>6} {:>4} {:>9} {:>7} {:>7}",
                "d", "mode", "stage", "axis", "at", "slope", "±95%", "points"
            );
            for f in &report.fits {
                println!(
                    "{:>3} {:>11} {:>6} {:>6} {:>4} {:>9.3} {:>7.3} {:>7}",
                    f.d,
                    format!("{:?}", f.mode),
                    format!("{:?}", f.quantity),
                    format!("{:?}", f.axis),
                    f.fixed,
                    f.slope,
                    f.ci,
                    f.points
                );
            }
            if let Some(path) = out.or(cfg.output.clone()) {
                std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
            }
            Ok(0)
        }
        Command::Plot { input, out, xaxis, threshold } => {
            check_threshold(threshold)?;
            let rows = read_csv_file(&input)?;
            let axis = match xaxis {
                XAxis::N => HeatmapAxis::N,
                XAxis::NS => HeatmapAxis::NS,
            };
            for p in write_heatmaps(&rows, &out, threshold, axis)? {
                println!("{}", p.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
