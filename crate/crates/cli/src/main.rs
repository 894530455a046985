//! Command-line front end: simulation grids, exact oracle, asymptotic
//! predictions, threshold calibration, SLLN diagnostics and the worked examples.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shiryaev_hmm::asymptotics::asymptotic_report;
use shiryaev_hmm::detectors::calibrate_threshold;
use shiryaev_hmm::experiments::examples::run_example;
use shiryaev_hmm::experiments::{
    exact_oracle, report_to_string, simulate, slln_diagnostic_with, with_threads, ConfigFile,
    ExperimentConfig, SllnOptions, ThresholdSpec,
};
use shiryaev_hmm::hmm::kl_information;
use shiryaev_hmm::rng::{derive_seed, tags};
use shiryaev_hmm::{Error, Result};

#[derive(Parser)]
#[command(name = "shiryaev-hmm", version, about = "Bayesian quickest change detection in hidden Markov models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// False-alarm probability and delay moments over the threshold grid.
    Simulate,
    /// Exact false-alarm probability by enumerating short Bernoulli paths.
    Oracle {
        #[arg(long, default_value_t = 8)]
        horizon: usize,
    },
    /// First-order and higher-order predictions with simulated constants.
    Asymptotics,
    /// Threshold whose simulated false-alarm probability matches a target.
    Calibrate {
        /// Target level; defaults to `detector.target_alpha` in the config.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Last-entry-time diagnostic for the normalized log-likelihood ratio.
    Diagnose,
    /// Runs worked example 1, 2 or 3.
    Example {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        id: u8,
    },
}

fn load(common: &Common) -> Result<ConfigFile> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required for this command".into()))?;
    let mut file = ConfigFile::from_path(path)?;
    override_run(&mut file, common);
    Ok(file)
}

fn override_run(file: &mut ConfigFile, common: &Common) {
    if let Some(seed) = common.seed {
        file.run.seed = seed;
    }
    if let Some(reps) = common.reps {
        file.run.reps = reps;
    }
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_oracle(cfg: &ExperimentConfig, horizon: usize) -> Result<String> {
    let mut out = String::from("threshold,horizon,pfa,p_censored\n");
    for t in cfg.resolved_thresholds()? {
        let o = exact_oracle(cfg, t, horizon)?;
        let _ = writeln!(out, "{t},{},{},{}", o.horizon, o.pfa, o.p_censored);
    }
    Ok(out)
}

fn cmd_calibrate(cfg: &ExperimentConfig, alpha: Option<f64>) -> Result<String> {
    let alpha = match (alpha, &cfg.thresholds) {
        (Some(a), _) => a,
        (None, ThresholdSpec::TargetAlpha(a)) => *a,
        (None, ThresholdSpec::List(_)) => {
            return Err(Error::Config("calibrate needs --alpha or detector.target_alpha".into()))
        }
    };
    let r = calibrate_threshold(alpha, cfg, cfg.run.calibrate_max_iter)?;
    Ok(format!(
        "detector,alpha,threshold,pfa_hat,pfa_se,ci_lo,ci_hi,iterations,analytic_threshold\n{},{alpha},{},{},{},{},{},{},{}\n",
        cfg.detector.name(),
        r.threshold,
        r.pfa.mean,
        r.pfa.std_error,
        r.ci.0,
        r.ci.1,
        r.iterations,
        r.analytic_threshold
    ))
}

fn cmd_diagnose(cfg: &ExperimentConfig) -> Result<String> {
    let mut opts = SllnOptions {
        k: cfg.run.change_point.max(1),
        mode: cfg.run.llr_mode,
        kl_steps: cfg.run.kl_steps,
        information: None,
    };
    let probe = match cfg.run.slln_epsilon {
        Some(e) => e,
        None => {
            let k = kl_information(&cfg.pair, cfg.run.kl_steps.max(1000), derive_seed(cfg.run.seed, tags::KL))?;
            opts.information = Some(k.mean);
            0.25 * k.mean
        }
    };
    let d = slln_diagnostic_with(&cfg.pair, probe, cfg.run.slln_n_max, cfg.run.reps, cfg.run.seed, &opts)?;
    let mut out = String::new();
    let _ = writeln!(out, "# epsilon={} information={} n_max={}", d.epsilon, d.information, d.n_max);
    let _ = writeln!(
        out,
        "# q50={} q90={} q99={} non_settled={} trend_ok={}",
        d.quantiles[0], d.quantiles[1], d.quantiles[2], d.non_settled_fraction, d.trend_ok
    );
    out.push_str("n,survival\n");
    for (n, s) in d.survival.iter().enumerate() {
        let _ = writeln!(out, "{n},{s}");
    }
    Ok(out)
}

fn cmd_asymptotics(cfg: &ExperimentConfig) -> Result<String> {
    let report = asymptotic_report(cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    report.to_csv_string()
}

fn cmd_example(id: u8, common: &Common) -> Result<String> {
    let report = run_example(id, |c| override_run(c, common))?;
    for c in &report.checks {
        eprintln!("{} {}: {}", if c.passed { "ok" } else { "FAILED" }, c.name, c.detail);
    }
    if let Some(c) = report.checks.iter().find(|c| !c.passed) {
        return Err(Error::Diagnostics(format!("cross-check `{}` failed: {}", c.name, c.detail)));
    }
    report_to_string(&report.results)
}

fn run(cli: Cli) -> Result<()> {
    let common = cli.common.clone();
    let text = with_threads(common.threads, || -> Result<String> {
        match cli.command {
            Command::Example { id } => cmd_example(id, &common),
            command => {
                let cfg = load(&common)?.build::<f64>()?;
                match command {
                    Command::Simulate => report_to_string(&simulate(&cfg)?),
                    Command::Oracle { horizon } => cmd_oracle(&cfg, horizon),
                    Command::Asymptotics => cmd_asymptotics(&cfg),
                    Command::Calibrate { alpha } => cmd_calibrate(&cfg, alpha),
                    Command::Diagnose => cmd_diagnose(&cfg),
                    Command::Example { .. } => unreachable!(),
                }
            }
        }
    })??;
    emit(&common, &text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let text = e.to_string();
            eprintln!("error[argument]: {}", text.trim_start_matches("error: ").trim_end());
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}
