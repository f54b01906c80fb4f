use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aoa_pla_lab::config::Config;
use aoa_pla_lab::output::write_csv;
use aoa_pla_lab::presets::Preset;
use aoa_pla_lab::sweep::{self, ResultRow, RunOptions, Series, SweepAxis, SweepSpec};
use aoa_pla_lab::validate::{self, ValidateOptions, FAULT_ENV};
use aoa_pla_lab::{CliError, CliResult};
use clap::{Args, Parser, Subcommand};

/// Angle-of-arrival authentication under multi-antenna spoofing: closed-form
/// bounds and error probabilities with Monte Carlo validation.
#[derive(Debug, Parser)]
#[command(name = "aoa-pla-lab", version)]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form report for the configured operating point.
    Analytic {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Sweep one parameter as given by the config's [sweep] section.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Reproduce a published figure: fig1, fig2a, fig2b or fig3.
    Preset {
        preset: Preset,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run every oracle suite; exits 1 on any failure.
    Validate {
        /// Monte Carlo trials per efficiency scenario.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, env = "AOA_PLA_SEED")]
        seed: Option<u64>,
        /// Perturb S1 by 1e-6 to check that the harness notices.
        #[arg(long)]
        inject_s1_fault: bool,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run Monte Carlo trials next to the closed forms.
    #[arg(long)]
    empirical: bool,
    #[arg(long)]
    trials: Option<u64>,
    /// Base seed; overrides the config file.
    #[arg(long, env = "AOA_PLA_SEED")]
    seed: Option<u64>,
    /// Fill the runtime_ms column.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Directory for the CSV (and SVG); CSV goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render an SVG plot; needs --out.
    #[arg(long, requires = "out")]
    plot: bool,
}

impl RunArgs {
    fn load(&self) -> CliResult<Config> {
        match &self.config {
            Some(path) => Config::load(path),
            None => Ok(Config::default()),
        }
    }

    fn options(&self, config: &Config) -> RunOptions {
        RunOptions {
            empirical: self.empirical,
            trials: self.trials.unwrap_or(config.monte_carlo.trials),
            seed: self.seed.unwrap_or(config.monte_carlo.seed),
            confidence: config.monte_carlo.confidence,
            phase_draws: config.monte_carlo.phase_draws,
            timing: self.timing,
        }
    }
}

fn emit(rows: &[ResultRow], opts: &RunOptions, out: &OutArgs, stem: &str, preset: Option<Preset>) -> CliResult<()> {
    let Some(dir) = &out.out else {
        let stdout = std::io::stdout().lock();
        return write_csv(stdout, rows, opts.seed);
    };
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    write_csv(std::fs::File::create(&csv_path)?, rows, opts.seed)?;
    eprintln!("wrote {}", csv_path.display());
    if out.plot {
        let plot = match preset {
            Some(p) => p.plot(rows),
            None => sweep_plot(rows),
        };
        let svg_path = dir.join(format!("{stem}.svg"));
        std::fs::write(&svg_path, plot.render())?;
        eprintln!("wrote {}", svg_path.display());
    }
    Ok(())
}

fn sweep_plot(rows: &[ResultRow]) -> aoa_pla_lab::svg::Plot {
    let axis = rows.first().map(|r| r.axis).unwrap_or("value");
    let mut plot = Preset::Fig1.plot(rows);
    plot.title = format!("P_SD vs {axis}");
    plot.x_label = axis.to_string();
    plot.log_x = false;
    plot
}

fn config_stem(path: Option<&Path>) -> String {
    path.and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into())
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Analytic { run } => {
            let config = run.load()?;
            let opts = run.options(&config);
            let point = config.point();
            let series = [Series {
                label: "point".into(),
                sweep: SweepSpec::list(SweepAxis::SnrDb, vec![point.snr_db]),
                base: point,
            }];
            let rows = sweep::run(&series, &opts)?;
            let text = toml::to_string(&rows[0]).map_err(|e| CliError::Config(e.to_string()))?;
            print!("{text}");
            Ok(())
        }
        Command::Sweep { run, out } => {
            let config = run.load()?;
            let spec = config
                .sweep
                .clone()
                .ok_or_else(|| CliError::Config("sweep: the config has no [sweep] section".into()))?;
            let opts = run.options(&config);
            let series = [Series {
                label: spec.axis.name().into(),
                base: config.point(),
                sweep: spec,
            }];
            let rows = sweep::run(&series, &opts)?;
            emit(&rows, &opts, &out, &config_stem(run.config.as_deref()), None)
        }
        Command::Preset { preset, run, out } => {
            let config = run.load()?;
            let opts = run.options(&config);
            let rows = sweep::run(&preset.series(), &opts)?;
            emit(&rows, &opts, &out, preset.name(), Some(preset))
        }
        Command::Validate {
            trials,
            seed,
            inject_s1_fault,
        } => {
            let defaults = ValidateOptions::default();
            let fault_env = std::env::var(FAULT_ENV).is_ok_and(|v| !v.is_empty() && v != "0");
            let options = ValidateOptions {
                trials: trials.unwrap_or(defaults.trials),
                seed: seed.unwrap_or(defaults.seed),
                inject_s1_fault: inject_s1_fault || fault_env,
            };
            let report = validate::run(&options)?;
            print!("{}", report.render());
            report.into_result().map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
