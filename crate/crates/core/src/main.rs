use std::path::PathBuf;
use std::process::ExitCode;

use chrono::Utc;
use clap::{Parser, Subcommand};

use ipa_sim::commands::{self, AttackCommand, Command, SecurityCommand};
use ipa_sim::config::ScenarioConfig;
use ipa_sim::output::{write_outputs, Manifest};
use ipa_sim::Execution;

#[derive(Parser)]
#[command(
    name = "ipa",
    version,
    about = "Induced-photorefractive attack simulator"
)]
struct Cli {
    /// Scenario file (TOML). Missing keys take the calibrated defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for Monte Carlo and measurement noise.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Validate the configuration and print it without running anything.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Run on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Magnification against time for a set of CW irradiation powers.
    PeCurve,
    /// Voltage curves before and after pre-treatment.
    VoltageCurve,
    /// Pre-treatment, pulsed injection and initialization.
    Attack {
        #[command(subcommand)]
        cmd: AttackCmd,
    },
    /// Key-rate impact of a magnified source.
    Security {
        #[command(subcommand)]
        cmd: SecurityCmd,
    },
    /// Loss budget of injection paths and countermeasures.
    Budget,
}

#[derive(Subcommand)]
enum AttackCmd {
    /// Shift the bias by irradiating with a held voltage.
    PreTreat,
    /// Drive the magnification to a target with a pulsed source.
    Pulse,
    /// Return a device to a reproducible state.
    Init,
}

#[derive(Subcommand)]
enum SecurityCmd {
    /// Estimated and actual key rates over distance.
    Sweep,
    /// Smallest magnification that removes all secure key.
    Threshold,
}

impl Cmd {
    fn to_command(&self) -> Command {
        match self {
            Cmd::PeCurve => Command::PeCurve,
            Cmd::VoltageCurve => Command::VoltageCurve,
            Cmd::Attack {
                cmd: AttackCmd::PreTreat,
            } => Command::Attack(AttackCommand::PreTreat),
            Cmd::Attack {
                cmd: AttackCmd::Pulse,
            } => Command::Attack(AttackCommand::Pulse),
            Cmd::Attack {
                cmd: AttackCmd::Init,
            } => Command::Attack(AttackCommand::Init),
            Cmd::Security {
                cmd: SecurityCmd::Sweep,
            } => Command::Security(SecurityCommand::Sweep),
            Cmd::Security {
                cmd: SecurityCmd::Threshold,
            } => Command::Security(SecurityCommand::Threshold),
            Cmd::Budget => Command::Budget,
        }
    }
}

fn run(cli: &Cli) -> ipa_sim::Result<()> {
    let started = Utc::now();
    let cfg = match &cli.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    cfg.validate()?;
    let cmd = cli.cmd.to_command();
    let hash = cfg.content_hash(cli.seed);
    if cli.dry_run {
        println!("{}", toml::to_string(&cfg).expect("config serializes"));
        println!("# command: {}\n# config sha256: {hash}", cmd.name());
        return Ok(());
    }
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let out = commands::run(cmd, &cfg, cli.seed, exec)?;
    let manifest = Manifest::new(cmd.name(), cli.config.as_deref(), hash, cli.seed, started);
    let manifest = write_outputs(&cli.out, &out.files, manifest)?;
    print!("{}", out.summary);
    println!(
        "wrote {} files to {}",
        manifest.files.len() + 1,
        cli.out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
