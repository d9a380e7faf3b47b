use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cca_sim::circuit::{derive_lattice_params, measured_device};
use cca_sim::scenario::{
    execute, exit_code, expand_preset, preset_table1, set_path, version, OutputFormat, PowerSweepSpec, ScenarioConfig,
    ScenarioKind,
};
use cca_sim::transport::CrosstalkModel;
use cca_sim::{Error, Result};

/// Coupled-cavity array simulator.
#[derive(Parser)]
#[command(name = "cca", version = version(), about)]
struct Cli {
    /// Seed for stochastic scenarios (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Data file format: csv or json.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Default)]
struct Source {
    /// TOML scenario file; the reported device parameters are used when absent.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set lattice.J_GHz=0.25`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the scenario named in a config file.
    Run {
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Print the reported device parameters as a config fragment.
    Preset,
    /// Print chain parameters derived from the measured circuit.
    Derive,
    /// Normal modes of the bare chain.
    Band {
        #[command(flatten)]
        src: Source,
        /// Also write the mode amplitude matrix.
        #[arg(long)]
        amplitudes: bool,
    },
    /// Linear transmission of the chain.
    Transmission {
        #[command(flatten)]
        src: Source,
        /// Include the emitters at their configured frequencies.
        #[arg(long)]
        with_qubits: bool,
        /// Add the measured input-output bypass.
        #[arg(long)]
        crosstalk: bool,
        /// Also write synthetic Kerr traces over several input powers.
        #[arg(long)]
        power_sweep: bool,
        /// Also compute transmission with the ports swapped.
        #[arg(long)]
        reverse: bool,
    },
    /// Single-emitter bound states against emitter frequency.
    Boundstate {
        #[command(flatten)]
        src: Source,
    },
    /// Resonant two-emitter splitting.
    Splitting {
        #[command(flatten)]
        src: Source,
    },
    /// Dressed anharmonicity of the top bound state.
    Anharmonicity {
        #[command(flatten)]
        src: Source,
    },
    /// Conditional ZZ shift of two bound states.
    Zz {
        #[command(flatten)]
        src: Source,
        /// Retune emitter 2 so its bound state sits here (GHz).
        #[arg(long, value_name = "GHZ")]
        omega_bs2: Option<f64>,
    },
    /// Two-excitation spectrum with occupation weights.
    Spectrum2ex {
        #[command(flatten)]
        src: Source,
    },
    /// Excitation swap chevron, or a single flux schedule.
    Swap {
        #[command(flatten)]
        src: Source,
        /// TOML flux schedule; replaces the chevron.
        #[arg(long)]
        schedule: Option<PathBuf>,
    },
    /// Bound-state statistics over site-frequency disorder.
    Disorder {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        realizations: Option<usize>,
    },
    /// Fit a Kerr model to multi-power transmission traces.
    CalibrateKerr {
        #[command(flatten)]
        src: Source,
        /// CSV with columns P_in_dBm, omega_GHz, re_S21, im_S21.
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long = "attenuation-db")]
        attenuation_db: Option<f64>,
    },
}

fn value<T: serde::Serialize>(v: T) -> Result<toml::Value> {
    toml::Value::try_from(v).map_err(|e| Error::Config(e.to_string()))
}

fn absolute(p: &Path) -> Result<toml::Value> {
    Ok(std::path::absolute(p)?.to_string_lossy().into_owned().into())
}

/// Parses `key=value`, reading the value as TOML and falling back to a string.
fn parse_set(s: &str) -> Result<(String, toml::Value)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{s}`")))?;
    let parsed = toml::from_str::<toml::Table>(&format!("v = {v}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(v.to_string()));
    Ok((k.trim().to_string(), parsed))
}

fn load(
    config: Option<&Path>,
    scenario: Option<ScenarioKind>,
    sets: &[String],
    mut flags: Vec<(&str, toml::Value)>,
    cli: &Cli,
) -> Result<ScenarioConfig> {
    let (table, base) = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            let t: toml::Table = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            (t, p.parent().unwrap_or(Path::new(".")).to_path_buf())
        }
        None => {
            let mut t = toml::Table::new();
            t.insert("preset".into(), "table1".into());
            (t, PathBuf::from("."))
        }
    };
    // Expanded first so overrides can reach into preset arrays.
    let mut table = expand_preset(table)?;
    if let Some(s) = scenario {
        table.insert("scenario".into(), s.name().into());
    }
    if let Some(seed) = cli.seed {
        flags.push(("seed", value(seed)?));
    }
    if let Some(out) = &cli.out {
        flags.push(("output.dir", absolute(out)?));
    }
    if let Some(f) = cli.format {
        flags.push(("output.format", value(f)?));
    }
    for (k, v) in flags {
        set_path(&mut table, k, v)?;
    }
    for s in sets {
        let (k, v) = parse_set(s)?;
        set_path(&mut table, &k, v)?;
    }
    ScenarioConfig::from_table(table, &base)
}

fn dispatch(cli: &Cli) -> Result<()> {
    let on = || toml::Value::Boolean(true);
    let (src, kind, flags): (&Source, ScenarioKind, Vec<(&str, toml::Value)>) = match &cli.cmd {
        Cmd::Run { config, set } => {
            let cfg = load(Some(config), None, set, vec![], cli)?;
            return report(&cfg);
        }
        Cmd::Preset => {
            let text = toml::to_string_pretty(&preset_table1()).map_err(|e| Error::Config(e.to_string()))?;
            print!("{text}");
            return Ok(());
        }
        Cmd::Derive => {
            let d = derive_lattice_params(&measured_device())?;
            println!("{}", serde_json::to_string_pretty(&d).map_err(|e| Error::Numerical(e.to_string()))?);
            return Ok(());
        }
        Cmd::Band { src, amplitudes } => {
            let f = if *amplitudes { vec![("band.amplitudes", on())] } else { vec![] };
            (src, ScenarioKind::Band, f)
        }
        Cmd::Transmission { src, with_qubits, crosstalk, power_sweep, reverse } => {
            let mut f = vec![];
            if *with_qubits {
                f.push(("transmission.with_qubits", on()));
            }
            if *reverse {
                f.push(("transmission.reverse", on()));
            }
            if *crosstalk {
                f.push(("transmission.crosstalk", value(CrosstalkModel::measured_setup())?));
            }
            if *power_sweep {
                f.push(("transmission.power_sweep", value(PowerSweepSpec::default())?));
            }
            (src, ScenarioKind::Transmission, f)
        }
        Cmd::Boundstate { src } => (src, ScenarioKind::Boundstate, vec![]),
        Cmd::Splitting { src } => (src, ScenarioKind::Splitting, vec![]),
        Cmd::Anharmonicity { src } => (src, ScenarioKind::Anharmonicity, vec![]),
        Cmd::Zz { src, omega_bs2 } => {
            let f = match omega_bs2 {
                Some(w) => vec![("zz.omega_bs2_GHz", value(*w)?)],
                None => vec![],
            };
            (src, ScenarioKind::Zz, f)
        }
        Cmd::Spectrum2ex { src } => (src, ScenarioKind::Spectrum2ex, vec![]),
        Cmd::Swap { src, schedule } => {
            let f = match schedule {
                Some(p) => vec![("swap.schedule", absolute(p)?)],
                None => vec![],
            };
            (src, ScenarioKind::Swap, f)
        }
        Cmd::Disorder { src, realizations } => {
            let f = match realizations {
                Some(n) => vec![("disorder.realizations", value(*n as i64)?)],
                None => vec![],
            };
            (src, ScenarioKind::Disorder, f)
        }
        Cmd::CalibrateKerr { src, traces, attenuation_db } => {
            let mut f = vec![];
            if let Some(p) = traces {
                f.push(("calibrate_kerr.traces", absolute(p)?));
            }
            if let Some(a) = attenuation_db {
                f.push(("calibrate_kerr.attenuation_dB", value(*a)?));
            }
            (src, ScenarioKind::CalibrateKerr, f)
        }
    };
    let cfg = load(src.config.as_deref(), Some(kind), &src.set, flags, cli)?;
    report(&cfg)
}

fn report(cfg: &ScenarioConfig) -> Result<()> {
    let r = execute(cfg)?;
    for f in &r.files {
        println!("{}", f.display());
    }
    log::info!("{} finished in {:.3} s", cfg.scenario, r.wall_time_s);
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
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
