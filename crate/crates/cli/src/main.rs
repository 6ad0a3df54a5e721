use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sawomit::BranchSelection;
use sawomit_cli::{run, ConfigError, RunError, Source};

/// SAW-driven optomechanically induced transparency: spectra, sweeps,
/// group delay and a time-domain check of the linear response.
#[derive(Parser, Debug)]
#[command(name = "sawomit", version)]
struct Cli {
    #[command(subcommand)]
    mode: Mode,
}

#[derive(Subcommand, Debug)]
enum Mode {
    /// Derived model parameters with provenance, RF window and regime checks.
    Derive(Common),
    /// Steady-state branches.
    Steady(Common),
    /// Probe spectrum, with and without the SAW.
    Spectrum(Common),
    /// Spectra over a secondary drive axis (P_pu or P_rf).
    Sweep(Common),
    /// Group delay against pump power down to the transparency threshold.
    Delay(Common),
    /// Time-domain integration compared with the linear response.
    Oracle(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in parameter set.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Override, e.g. `--set drive.P_pu_W=2e-8`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, value_parser = ["lower", "middle", "upper"])]
    branch: Option<String>,
    /// Turn the SAW off (g_om = 0, no RF drive).
    #[arg(long)]
    no_saw: bool,
    /// Also write an SVG plot.
    #[arg(long)]
    plot: bool,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

fn load(mode: &str, c: &Common) -> Result<sawomit_cli::Config, ConfigError> {
    let mut source = match &c.config {
        Some(path) => Source::from_path(path)?,
        None => Source::default(),
    };
    match (&c.preset, &c.config) {
        (Some(p), _) => source.set_preset(p),
        (None, None) => source.set_preset("fig3"),
        (None, Some(_)) => {}
    }
    for o in &c.overrides {
        source.apply_override(o)?;
    }
    if c.no_saw {
        source.apply_override("coupling.saw=false")?;
    }
    let mut config = source.resolve()?;
    config.run.mode = Some(mode.to_string());
    if let Some(b) = &c.branch {
        config.run.branch = b.parse::<BranchSelection>().map_err(|m| ConfigError::Value {
            section: "run".into(),
            key: "branch".into(),
            message: m,
        })?;
    }
    config.run.plot |= c.plot;
    if let Some(out) = &c.out {
        config.run.out = Some(out.clone());
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, common) = match &cli.mode {
        Mode::Derive(c) => ("derive", c),
        Mode::Steady(c) => ("steady", c),
        Mode::Spectrum(c) => ("spectrum", c),
        Mode::Sweep(c) => ("sweep", c),
        Mode::Delay(c) => ("delay", c),
        Mode::Oracle(c) => ("oracle", c),
    };
    let result = load(mode, common).map_err(RunError::from).and_then(|c| run(&c));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for path in &outcome.artifacts {
                println!("wrote {}", path.display());
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            let kind = if e.exit_code() == 2 { "config error" } else { "error" };
            eprintln!("{kind}: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
