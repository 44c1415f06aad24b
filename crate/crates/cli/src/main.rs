use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ghostsim::commands::{self, CorrelateOptions, ImageOptions, InterfereOptions, Metrics};
use ghostsim::output::{OutDir, Provenance, TOOL, VERSION};
use ghostsim::scenario::{Experiment, ImagePath, Scenario};
use ghostsim::{CliError, CliResult};

/// Correlated-photon imaging simulator.
#[derive(Parser)]
#[command(name = "ghostsim", version, about)]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum PathArg {
    Analytic,
    Bruteforce,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl From<Switch> for bool {
    fn from(s: Switch) -> bool {
        matches!(s, Switch::On)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Coincidence image R(x1).
    Image {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        path: Option<PathArg>,
        #[arg(long, value_enum)]
        branch1_lens: Option<Switch>,
        #[arg(long, value_enum)]
        branch2_lens: Option<Switch>,
        /// Also write PNG previews.
        #[arg(long)]
        png: bool,
    },
    /// Interferometer coincidence rate versus delay.
    Interfere {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        tau_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        tau_max: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Bucket-bucket spatial correlator over a square displacement scan.
    Correlate {
        #[command(flatten)]
        common: Common,
        /// Half-width and points per axis, e.g. `2e-4,21`.
        #[arg(long, value_parser = parse_scan)]
        scan: Option<(f64, usize)>,
        /// Undo the ghost inversion with an extra lens.
        #[arg(long)]
        deinvert: bool,
    },
    /// Brute-force maps with each detection lens removed in turn.
    LensStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        png: bool,
    },
    /// Runs the experiment named in the scenario with its own settings.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Runs the acceptance suite and writes a JSON report.
    Validate {
        /// Report file; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_scan(s: &str) -> Result<(f64, usize), String> {
    let (r, n) = s.split_once(',').ok_or("expected rmax,steps")?;
    let r: f64 = r.trim().parse().map_err(|e| format!("rmax: {e}"))?;
    let n: usize = n.trim().parse().map_err(|e| format!("steps: {e}"))?;
    if !(r.is_finite() && r >= 0.0) || n == 0 {
        return Err("rmax must be finite and non-negative, steps at least 1".into());
    }
    Ok((r, n))
}

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("GHOSTSIM_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Parse(format!("GHOSTSIM_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Parse(format!("cannot configure {n} threads: {e}")))
}

fn run_experiment(common: &Common, experiment: Option<Experiment>, f: impl FnOnce(&Scenario, &mut OutDir) -> CliResult<Metrics>) -> CliResult<()> {
    let s = Scenario::load(&common.scenario)?;
    let experiment = experiment.unwrap_or(s.experiment);
    let mut out = OutDir::new(&common.out, Provenance::of(&s))?;
    let metrics = f(&s, &mut out)?;
    let summary = commands::finish(&s, experiment, metrics, &mut out)?;
    for (k, v) in &summary.metrics {
        println!("{k} = {v:e}");
    }
    println!("wrote {} file(s) to {}", summary.files.len(), common.out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Image { common, path, branch1_lens, branch2_lens, png } => {
            let opts = ImageOptions {
                path: path.map(|p| match p {
                    PathArg::Analytic => ImagePath::Analytic,
                    PathArg::Bruteforce => ImagePath::Bruteforce,
                    PathArg::Both => ImagePath::Both,
                }),
                branch1_lens: branch1_lens.map(Into::into),
                branch2_lens: branch2_lens.map(Into::into),
                png,
            };
            run_experiment(&common, Some(Experiment::Image), |s, out| commands::image(s, &opts, out))
        }
        Command::Interfere { common, tau_min, tau_max, steps } => {
            let opts = InterfereOptions { tau_min, tau_max, steps };
            run_experiment(&common, Some(Experiment::Interfere), |s, out| commands::interfere(s, &opts, out))
        }
        Command::Correlate { common, scan, deinvert } => {
            let opts = CorrelateOptions { scan, deinvert };
            run_experiment(&common, Some(Experiment::Correlate), |s, out| commands::correlate(s, &opts, out))
        }
        Command::LensStudy { common, png } => {
            run_experiment(&common, Some(Experiment::LensStudy), |s, out| commands::lens_study_cmd(s, png, out))
        }
        Command::Run { common } => run_experiment(&common, None, |s, out| match s.experiment {
            Experiment::Image => commands::image(s, &ImageOptions::default(), out),
            Experiment::Interfere => commands::interfere(s, &InterfereOptions::default(), out),
            Experiment::Correlate => commands::correlate(s, &CorrelateOptions::default(), out),
            Experiment::LensStudy => commands::lens_study_cmd(s, false, out),
        }),
        Command::Validate { out } => {
            let report = commands::validate(|r| eprintln!("{}", r.line()))?;
            let mut json = report.to_json();
            json.push('\n');
            match out {
                Some(path) => {
                    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
                    }
                    ghostsim_core::io::write_atomic(&path, json.as_bytes())?;
                }
                None => print!("{json}"),
            }
            let failed = report.failed().count();
            if failed > 0 {
                return Err(CliError::Assertions { failed, total: report.criteria.len() });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = init_threads().and_then(|_| dispatch(cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{TOOL} {VERSION}: error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
