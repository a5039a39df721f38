use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use interleave::config::{self, parse_config, parse_surrogate_config, Mode, PRESET_NAMES};
use interleave::surrogate::{evaluate, fit, generate_dataset, RegressorModel, Split};
use interleave::sweep::{run_sweep, to_csv};
use interleave::validation::{run_validation, Settings};
use interleave::{Error, Result};

#[derive(Parser)]
#[command(name = "interleave", version, about = "Interleaved channel training for massive MIMO downlink")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form average training lengths.
    Analytic(PointArgs),
    /// Monte Carlo estimates of the average training length and outage rate.
    Simulate {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = config::DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = config::DEFAULT_SEED)]
        seed: u64,
    },
    /// Run a sweep from a config file or a named figure preset.
    Sweep {
        /// Path to a config file, or a preset name (fig1a ... fig8c).
        config: String,
        /// Overrides the config's `output` key.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Overrides the config's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Print the config text instead of running it.
        #[arg(long)]
        print_config: bool,
    },
    /// Run the acceptance checks and print `id,value,threshold,verdict` lines.
    Validate {
        /// Reduced trial counts.
        #[arg(long)]
        quick: bool,
    },
    /// Generate Monte Carlo data for the modified antenna-domain scheme and fit the regressor.
    FitSurrogate { config: PathBuf },
    /// Evaluate a fitted regressor.
    Predict {
        model: PathBuf,
        rho: f64,
        #[arg(allow_negative_numbers = true)]
        alpha: f64,
    },
}

#[derive(Args)]
struct PointArgs {
    /// exponential or one-ring.
    #[arg(long, default_value = "exponential")]
    model: String,
    /// Correlation coefficients (exponential model), comma separated.
    #[arg(long)]
    rho: Option<String>,
    /// Mean angle of departure in degrees (one-ring model).
    #[arg(long, default_value_t = 45.0, allow_negative_numbers = true)]
    theta_bar_deg: f64,
    /// Angular spreads in degrees (one-ring model), comma separated.
    #[arg(long)]
    as_deg: Option<String>,
    /// Antenna spacing in wavelengths (one-ring model).
    #[arg(long)]
    spacing: Option<f64>,
    /// Quadrature nodes for the one-ring integral.
    #[arg(long)]
    nodes: Option<usize>,
    /// Antenna counts, comma separated.
    #[arg(long, default_value = "32")]
    antennas: String,
    /// Schemes, comma separated.
    #[arg(long, default_value = "modified-beam")]
    scheme: String,
    /// SNR thresholds, comma separated.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<String>,
    /// Target rates in bit/s/Hz, combined with --p-db.
    #[arg(long)]
    r_th: Option<String>,
    /// Transmit powers in dB.
    #[arg(long, allow_negative_numbers = true)]
    p_db: Option<String>,
}

impl PointArgs {
    fn config_text(&self, mode: &str, trials: Option<usize>, seed: Option<u64>) -> String {
        let mut lines = vec![format!("model = {}", self.model)];
        let mut push = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                lines.push(format!("{key} = {v}"));
            }
        };
        if self.model == "one-ring" {
            push("theta_bar_deg", Some(self.theta_bar_deg.to_string()));
            push("as_deg", self.as_deg.clone());
            push("spacing", self.spacing.map(|s| s.to_string()));
            push("nodes", self.nodes.map(|n| n.to_string()));
        } else {
            push("rho", self.rho.clone());
        }
        push("antennas", Some(self.antennas.clone()));
        push("schemes", Some(self.scheme.clone()));
        push("alpha", self.alpha.clone());
        push("r_th", self.r_th.clone());
        push("p_db", self.p_db.clone());
        push("trials", trials.map(|t| t.to_string()));
        push("seed", seed.map(|s| s.to_string()));
        push("mode", Some(mode.to_owned()));
        lines.join("\n") + "\n"
    }
}

fn write_csv(csv: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, csv).map_err(Error::from),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn sweep_text(source: &str) -> Result<String> {
    let path = Path::new(source);
    if path.is_file() {
        return Ok(fs::read_to_string(path)?);
    }
    config::preset(source).ok_or_else(|| {
        Error::InvalidParameter(format!("`{source}` is neither a config file nor a preset ({})", PRESET_NAMES.join(", ")))
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Analytic(point) => {
            let cfg = parse_config(&point.config_text("analytic", None, None))?;
            write_csv(&to_csv(&run_sweep(&cfg)?), None)?;
        }
        Command::Simulate { point, trials, seed } => {
            let cfg = parse_config(&point.config_text("simulate", Some(trials), Some(seed)))?;
            write_csv(&to_csv(&run_sweep(&cfg)?), None)?;
        }
        Command::Sweep { config, output, trials, print_config } => {
            let text = sweep_text(&config)?;
            if print_config {
                print!("{text}");
                return Ok(true);
            }
            let mut cfg = parse_config(&text)?;
            if let Some(t) = trials {
                if t == 0 {
                    return Err(Error::InvalidParameter("--trials must be at least 1".into()));
                }
                cfg.trials = t;
            }
            if cfg.mode == Mode::Analytic && trials.is_some() {
                eprintln!("warning: --trials has no effect in analytic mode");
            }
            let target = output.or_else(|| cfg.output.clone());
            write_csv(&to_csv(&run_sweep(&cfg)?), target.as_deref())?;
        }
        Command::Validate { quick } => {
            let settings = if quick { Settings::quick() } else { Settings::full() };
            let checks = run_validation(&settings)?;
            for c in &checks {
                println!("{}", c.report_line());
                eprintln!("  {}: {}", c.id, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
        Command::FitSurrogate { config } => {
            let cfg = parse_surrogate_config(&fs::read_to_string(&config)?)?;
            let data = generate_dataset(cfg.antennas, &cfg.rho, &cfg.alpha, cfg.trials, cfg.seed)?;
            let report = fit(&data, cfg.epochs, cfg.learning_rate, cfg.seed)?;
            report.model.save(&cfg.output)?;
            println!("samples,{}", data.samples().len());
            for (name, split) in [("train", Split::Train), ("validation", Split::Validation), ("test", Split::Test)] {
                let samples = data.split(split);
                if !samples.is_empty() {
                    println!("{name}_mse,{}", evaluate(&report.model, &samples)?);
                }
            }
            println!("best_epoch,{}", report.best_epoch);
            println!("model,{}", cfg.output.display());
        }
        Command::Predict { model, rho, alpha } => {
            let model = RegressorModel::load(&model)?;
            if !rho.is_finite() || !alpha.is_finite() {
                return Err(Error::InvalidParameter("inputs must be finite".into()));
            }
            if !model.in_domain(rho, alpha) {
                eprintln!("warning: ({rho}, {alpha}) lies outside the training domain; the prediction is an extrapolation");
            }
            println!("{}", model.predict(rho, alpha));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
