//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 I/O error, 4 bad input file or
//! configuration, 5 degenerate data, 6 model fit failure, 7 any other
//! numerical or geometric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use envcontour::io::config::{MethodSelector, RunConfig};
use envcontour::io::write_csv;
use envcontour::pipeline::{error_report, run_pipeline, write_error_report, Stage};
use envcontour::synth::generate_synthetic;
use envcontour::Error;

#[derive(Parser)]
#[command(name = "envcontour", version, about = "Highest-density environmental contours of Hs and wind speed")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the density models and write fit.json.
    Fit(RunArgs),
    /// Fit and write contour files.
    Contour(RunArgs),
    /// Fit, extract contours and write design-condition tables.
    DesignConditions(RunArgs),
    /// Fit, extract contours and write the exceedance report.
    Diagnose(RunArgs),
    /// Full pipeline: every output including plots.
    Run(RunArgs),
    /// Write a synthetic hindcast CSV.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV. Without one, a synthetic dataset is used.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Comma-separated return periods in years.
    #[arg(long, value_delimiter = ',')]
    return_periods: Option<Vec<f64>>,
    /// Duration of one sea state in hours.
    #[arg(long)]
    state_duration: Option<f64>,
    #[arg(long)]
    step_hs: Option<f64>,
    #[arg(long)]
    step_v: Option<f64>,
    /// KDE grid padding in bandwidths.
    #[arg(long)]
    padding: Option<f64>,
    #[arg(long)]
    bandwidth_factor: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    bandwidth_exponent: Option<f64>,
    #[arg(long)]
    bin_width: Option<f64>,
    #[arg(long)]
    min_bin_count: Option<usize>,
    /// Comma-separated ray angles in degrees.
    #[arg(long, value_delimiter = ',')]
    angles: Option<Vec<f64>>,
    #[arg(long)]
    hs_column: Option<String>,
    #[arg(long)]
    v_column: Option<String>,
    #[arg(long)]
    time_column: Option<String>,
    /// Drop invalid rows instead of failing.
    #[arg(long)]
    skip_invalid: bool,
    /// Seed of the synthetic dataset.
    #[arg(long)]
    seed: Option<u64>,
    /// Size of the synthetic dataset.
    #[arg(long)]
    n: Option<usize>,
    /// Also write the density grids.
    #[arg(long)]
    density: bool,
    #[arg(long)]
    no_plot: bool,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum MethodArg {
    Kde,
    Cma,
    Both,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, Error> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        if self.input.is_some() {
            c.input = self.input;
        }
        set!(c.output_dir, self.output_dir);
        set!(
            c.method,
            self.method.map(|m| match m {
                MethodArg::Kde => MethodSelector::Kde,
                MethodArg::Cma => MethodSelector::Cma,
                MethodArg::Both => MethodSelector::Both,
            })
        );
        set!(c.return_periods, self.return_periods);
        set!(c.state_duration_hours, self.state_duration);
        set!(c.grid.step_hs, self.step_hs);
        set!(c.grid.step_v, self.step_v);
        set!(c.grid.padding, self.padding);
        set!(c.bandwidth.factor, self.bandwidth_factor);
        set!(c.bandwidth.exponent, self.bandwidth_exponent);
        set!(c.cma.bin_width, self.bin_width);
        set!(c.cma.min_bin_count, self.min_bin_count);
        set!(c.angles, self.angles);
        set!(c.columns.hs, self.hs_column);
        set!(c.columns.v, self.v_column);
        set!(c.columns.time, self.time_column);
        set!(c.synth.seed, self.seed);
        set!(c.synth.n, self.n);
        c.skip_invalid |= self.skip_invalid;
        c.output.density |= self.density;
        if self.no_plot {
            c.output.plot = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn run(args: RunArgs, stage: Stage) -> Result<(), (Error, Option<PathBuf>)> {
    let fallback_dir = args.output_dir.clone();
    let cfg = args.into_config().map_err(|e| (e, fallback_dir))?;
    let summary = run_pipeline(&cfg, stage).map_err(|e| (e, Some(cfg.output_dir.clone())))?;
    if !summary.rejected.is_empty() {
        eprintln!("skipped {} invalid row(s)", summary.rejected.len());
    }
    println!("n = {}, config_hash = {}", summary.n, summary.config_hash);
    for m in &summary.methods {
        for c in &m.contours {
            let mut line = format!(
                "{} {}y: f_m = {}, enclosed_mass = {}",
                m.method.name(),
                c.return_period_years,
                c.hdc.threshold,
                c.hdc.enclosed_mass
            );
            if let Some(r) = &c.report {
                line.push_str(&format!(
                    ", exceedances = {} (expected {}), P(X > k) = {}",
                    r.observed_exceedances, r.expected_exceedances, r.tail_probability
                ));
            }
            println!("{line}");
        }
    }
    for f in &summary.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Fit(a) => run(a, Stage::Fit),
        Command::Contour(a) => run(a, Stage::Contour),
        Command::DesignConditions(a) => run(a, Stage::DesignConditions),
        Command::Diagnose(a) => run(a, Stage::Diagnose),
        Command::Run(a) => run(a, Stage::Run),
        Command::Synth(a) => generate_synthetic(a.n, a.seed)
            .and_then(|d| write_csv(&a.output, &d))
            .map_err(|e| (e, None)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((err, dir)) => {
            eprintln!("error: {err}");
            eprintln!("{}", error_report(&err));
            if let Some(dir) = dir {
                write_error_report(&dir, &err);
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
