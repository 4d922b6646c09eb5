use clap::{Args, Parser, Subcommand};
use qkdsim::scenario::{self, Command, ScenarioConfig};
use qkdsim::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qkdsim",
    version,
    about = "Satellite QKD uplink simulator; writes CSV tables"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario file (`key = value` lines); defaults are used when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Monte Carlo seed, same as `--set sim.rng_seed=N`.
    #[arg(long)]
    seed: Option<u64>,
    /// Override one key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Slant range, elevation and slew rates over a pass.
    PassProfile(Common),
    /// Link attenuation over a pass per offset, wavelength and r0.
    LinkSweep(Common),
    /// QBER, SNR and visibility against attenuation per dark count rate.
    QberSweep(Common),
    /// Secure key rate against attenuation per coincidence window and dark count rate.
    KeyrateSweep(Common),
    /// Key rate and accumulated key over one pass.
    PassKey(Common),
    /// Event-level simulation compared with the analytic model.
    Montecarlo(Common),
    /// Storage and downlink volumes.
    Databudget(Common),
    /// Yearly key weighted by the Fried-parameter histogram.
    AnnualYield(Common),
    /// Run a command once per value of one scenario key.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Scenario key to vary.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
        /// Command to run at each value.
        #[arg(long)]
        command: String,
    },
    /// Print the resolved scenario in canonical form.
    Dump {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn resolve(
    path: Option<&PathBuf>,
    sets: &[String],
    seed: Option<u64>,
) -> qkdsim::Result<ScenarioConfig> {
    let mut cfg = match path {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    for kv in sets {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("--set expects KEY=VALUE, got `{kv}`"),
        })?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(seed) = seed {
        cfg.set("sim.rng_seed", &seed.to_string())?;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> qkdsim::Result<()> {
    let (command, common) = match cli.command {
        Cmd::PassProfile(c) => (Command::PassProfile, c),
        Cmd::LinkSweep(c) => (Command::LinkSweep, c),
        Cmd::QberSweep(c) => (Command::QberSweep, c),
        Cmd::KeyrateSweep(c) => (Command::KeyrateSweep, c),
        Cmd::PassKey(c) => (Command::PassKey, c),
        Cmd::Montecarlo(c) => (Command::MonteCarlo, c),
        Cmd::Databudget(c) => (Command::DataBudget, c),
        Cmd::AnnualYield(c) => (Command::AnnualYield, c),
        Cmd::Sweep {
            common,
            param,
            values,
            command,
        } => {
            let command = Command::parse(&command)?;
            let cfg = resolve(common.scenario.as_ref(), &common.set, common.seed)?;
            for p in scenario::sweep(&param, &values, &cfg, command, &common.out)? {
                println!("{}", p.display());
            }
            return Ok(());
        }
        Cmd::Dump { scenario, set } => {
            print!("{}", resolve(scenario.as_ref(), &set, None)?.dump());
            return Ok(());
        }
    };
    let cfg = resolve(common.scenario.as_ref(), &common.set, common.seed)?;
    for p in scenario::run(command, &cfg, &common.out)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qkdsim: {e}");
            match e {
                Error::UnknownCommand(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
