use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::{info, warn};

use rsgf::certify::{self, Constants};
use rsgf::config::{EnvSpec, ExperimentConfig, Mode, PRESETS};
use rsgf::flow::{AnalyticProblem, FlowOptions};
use rsgf::mdp::Cmdp;
use rsgf::policy::RbfGaussianPolicy;
use rsgf::qcqp::SolverOptions;
use rsgf::train::{self, Manifest};

/// Safe policy optimization with reduced-gradient flows.
///
/// Log verbosity is read from RSGF_LOG (error, warn, info, debug).
#[derive(Debug, Parser)]
#[command(name = "rsgf", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Experiment config (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Start from a built-in preset instead of a config file.
    #[arg(long, global = true, value_name = "NAME", conflicts_with = "config")]
    preset: Option<String>,

    /// Override the config seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Print a preset as TOML and exit.
    #[arg(long, value_name = "NAME")]
    dump_preset: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Integrate the flow on an analytic fixture.
    Flow,
    /// Run the training loop on an environment.
    Train,
    /// Validate the estimators against the tabular oracle.
    Validate,
    /// Compute episode counts and confidences for a certified step.
    Certify,
}

impl Command {
    fn mode(self) -> Mode {
        match self {
            Command::Flow => Mode::Flow,
            Command::Train => Mode::Train,
            Command::Validate => Mode::Validate,
            Command::Certify => Mode::Certify,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RSGF_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(name) = &cli.dump_preset {
        print!("{}", ExperimentConfig::preset(name)?.to_toml()?);
        return Ok(ExitCode::SUCCESS);
    }
    let Some(command) = cli.command else {
        bail!(
            "no subcommand given (flow, train, validate, certify); presets: {}",
            PRESETS.join(", ")
        );
    };
    let mut config = load_config(&cli, command)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.display().to_string());
    }
    config.check()?;
    info!("mode {:?}, seed {}", config.mode, config.seed);
    match config.mode {
        Mode::Flow => run_flow(&config),
        Mode::Train => run_train(&config),
        Mode::Validate => run_validate(&config),
        Mode::Certify => run_certify(&config),
    }
}

fn load_config(cli: &Cli, command: Command) -> Result<ExperimentConfig> {
    let config = match (&cli.config, &cli.preset) {
        (Some(path), _) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_toml(&text)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(name)) => ExperimentConfig::preset(name)?,
        (None, None) => default_preset(command)?,
    };
    if config.mode != command.mode() {
        bail!(
            "config is for mode {:?} but the {:?} subcommand was given",
            config.mode,
            command.mode()
        );
    }
    Ok(config)
}

fn default_preset(command: Command) -> Result<ExperimentConfig> {
    let name = match command {
        Command::Validate => "validate",
        Command::Certify => "certify-example",
        Command::Flow | Command::Train => {
            bail!("--config or --preset is required for this subcommand")
        }
    };
    Ok(ExperimentConfig::preset(name)?)
}

/// Creates the run directory and echoes the config into it.
fn prepare_out(config: &ExperimentConfig, default: &str) -> Result<PathBuf> {
    let dir = PathBuf::from(config.out.clone().unwrap_or_else(|| default.to_string()));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), config.to_toml()?)?;
    Ok(dir)
}

fn run_flow(config: &ExperimentConfig) -> Result<ExitCode> {
    let spec = config.flow.as_ref().expect("checked");
    let problem = AnalyticProblem::fixture(&spec.fixture)?;
    let dir = prepare_out(config, "rsgf-flow")?;
    train::write_json(
        &dir.join("manifest.json"),
        &Manifest::new(config.seed, config),
    )?;
    let opts = FlowOptions {
        alpha: spec.alpha,
        beta: spec.beta,
        schedule: spec.schedule,
        iters: spec.iters,
        solver: SolverOptions {
            tol: 1e-12,
            ..SolverOptions::default()
        },
        kkt_tol: spec.kkt_tol,
    };
    let trace = rsgf::flow::integrate(&problem, &spec.theta0, &opts)?;
    trace.write_csv(fs::File::create(dir.join("trace.csv"))?)?;
    let last = trace.last();
    println!("fixture            {}", problem.name);
    println!("iterations         {}", trace.iterates.len() - 1);
    println!("final theta        {last:?}");
    println!(
        "final values       {:?}",
        trace.values.last().expect("nonempty")
    );
    println!(
        "final kkt residual {:e}",
        trace.kkt_residuals.last().expect("nonempty")
    );
    println!("trace              {}", dir.join("trace.csv").display());
    if let Some(why) = &trace.stopped_early {
        eprintln!("error: flow stopped early: {why}");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn run_train(config: &ExperimentConfig) -> Result<ExitCode> {
    let env = config.env.as_ref().expect("checked");
    let policy = config.policy.as_ref().expect("checked").build(env)?;
    let dir = prepare_out(config, "rsgf-train")?;
    match env {
        EnvSpec::Nav2d(e) => train_on(e, &policy, config, &dir),
        EnvSpec::CartPole(e) => train_on(e, &policy, config, &dir),
    }
}

fn train_on<E: Cmdp>(
    env: &E,
    policy: &RbfGaussianPolicy,
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<ExitCode> {
    let tc = config.train_config()?;
    let run = train::train(&tc, env, policy, Some((dir, config)))?;
    let first = run
        .rows
        .first()
        .map(|r| r.values.clone())
        .unwrap_or_default();
    let last = run
        .rows
        .last()
        .map(|r| r.values.clone())
        .unwrap_or_default();
    let frozen = run.rows.iter().filter(|r| r.frozen).count();
    println!("iterations      {}", tc.iterations);
    println!("updates         {}", run.rows.len());
    println!("first values    {first:?}");
    println!("last values     {last:?}");
    println!("frozen updates  {frozen}");
    println!("metrics         {}", dir.join("metrics.csv").display());
    let report = train::convergence_diagnostics(&run, &tc, env.num_rewards() - 1, None);
    for flag in &report.flags {
        warn!("{flag}");
    }
    Ok(ExitCode::SUCCESS)
}

fn run_validate(config: &ExperimentConfig) -> Result<ExitCode> {
    let spec = config.validate.clone().unwrap_or_default();
    let report = rsgf::validate::run_validation(&spec, config.seed)?;
    print!("{report}");
    if let Some(out) = &config.out {
        let dir = prepare_out(config, out)?;
        fs::write(dir.join("validation.txt"), report.to_string())?;
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run_certify(config: &ExperimentConfig) -> Result<ExitCode> {
    let c = config.certify.as_ref().expect("checked");
    let m = match (c.margin, &c.step) {
        (Some(m), _) => m,
        (None, Some(s)) => certify::margin(s.v_hat, s.alpha, s.h, s.beta, s.l_j, s.r_norm),
        (None, None) => unreachable!("checked"),
    };
    let consts = Constants {
        phi: c.phi,
        phi_bar: c.phi_bar.unwrap_or(c.phi),
        psi: c.psi,
        psi_bar: c.psi_bar.unwrap_or(c.psi),
    };
    let req = certify::episodes_required(m, c.delta, &consts, c.dim)?;
    let row = |label: &str, value: String| println!("{label:<30}{value}");
    row("margin", format!("{m:.6}"));
    row("delta", c.delta.to_string());
    row("value threshold", format!("{:.6}", req.value_threshold));
    row(
        "gradient threshold",
        format!("{:.6}", req.gradient_threshold),
    );
    row(
        "on-policy episodes (value)",
        req.on_policy_value.to_string(),
    );
    // ψ = 0 means only the value condition was asked for.
    let need = if c.psi > 0.0 {
        row(
            "on-policy episodes (gradient)",
            req.on_policy_gradient.to_string(),
        );
        req.on_policy()
    } else {
        req.on_policy_value
    };
    row("required on-policy episodes", need.to_string());
    row(
        "per-step confidence",
        (1.0 - 2.0 * c.q as f64 * c.delta).max(0.0).to_string(),
    );
    row(
        &format!("horizon confidence (H = {})", c.horizon),
        certify::horizon_confidence(c.q, c.horizon, c.delta).to_string(),
    );
    Ok(ExitCode::SUCCESS)
}
