use std::path::PathBuf;
use std::process::ExitCode;

use axsr::scenario::SrMode;
use axsr_cli::{
    cmd_crossval, cmd_ctmn, cmd_sim, cmd_sweep, cmd_validate_srps, parse_seed_range, CliError, Format, Invocation,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "axsr", version, about = "802.11ax OBSS/PD spatial reuse: CTMN model and MAC simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the CTMN model at every threshold point of the sweep
    Ctmn(Common),
    /// Run the simulator at one configuration
    Sim(SimArgs),
    /// Sweep OBSS/PD thresholds in the simulator against a legacy baseline
    Sweep(Common),
    /// Compare CTMN and simulator throughput over the sweep
    Crossval(Common),
    /// Check a Spatial Reuse Parameter Set element (TOML)
    ValidateSrps {
        file: PathBuf,
        /// Also write the report as a table here
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Seed range such as 0..10 or 3..=5; overrides the scenario's seeds
    #[arg(long)]
    seeds: Option<String>,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Write per-run event traces under <out>/traces
    #[arg(long)]
    trace: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Override the scenario's SR mode (legacy, only_a, mixed, all)
    #[arg(long)]
    sr_mode: Option<SrMode>,
    /// Override the non-SRG OBSS/PD sweep with these values (dBm)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    obss_pd: Option<Vec<f64>>,
    /// Override the SRG OBSS/PD sweep with these values (dBm)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    obss_pd_srg: Option<Vec<f64>>,
    /// Send a CF-End after an RTS/CTS timeout
    #[arg(long)]
    cf_end_on_timeout: bool,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    common: Common,
}

impl Common {
    fn invocation(&self) -> Result<Invocation, CliError> {
        let mut inv = Invocation::load(&self.scenario, &self.out)?;
        let sweep = &mut inv.scenario.sweep;
        if let Some(m) = self.sr_mode {
            sweep.sr_mode = m;
        }
        if let Some(v) = &self.obss_pd {
            sweep.obss_pd_values = v.clone();
        }
        if let Some(v) = &self.obss_pd_srg {
            sweep.obss_pd_srg_values = v.clone();
        }
        sweep.validate()?;
        if let Some(s) = &self.seeds {
            inv.seeds = parse_seed_range(s).map_err(CliError::Input)?;
        }
        inv.jobs = self.jobs;
        inv.trace = self.trace;
        inv.format = self.format;
        inv.cf_end_on_timeout = self.cf_end_on_timeout;
        Ok(inv)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ctmn(c) => {
            let out = cmd_ctmn(&c.invocation()?)?;
            log::info!("wrote {}", out.files.join(", "));
        }
        Command::Sim(s) => {
            let c = &s.common;
            let mut inv = c.invocation()?;
            // a single threshold pair on the command line replaces the
            // per-BSS settings with the sweep's SR mode at that point
            if let Some(v) = &c.obss_pd {
                if v.len() != 1 || c.obss_pd_srg.as_ref().is_some_and(|s| s.len() != 1) {
                    return Err(CliError::Input("sim takes a single --obss-pd / --obss-pd-srg value".into()));
                }
                inv.point = Some((v[0], c.obss_pd_srg.as_ref().map(|s| s[0])));
            }
            let out = cmd_sim(&inv)?;
            log::info!("wrote {}", out.files.join(", "));
        }
        Command::Sweep(c) => {
            let out = cmd_sweep(&c.invocation()?)?;
            log::info!("wrote {}", out.files.join(", "));
        }
        Command::Crossval(c) => {
            let out = cmd_crossval(&c.invocation()?)?;
            for s in &out.summary {
                println!(
                    "n_agg={} bss={} mae={:.3} Mbps mad={:.3} Mbps over {} points",
                    s.n_agg, s.bss, s.mae_mbps, s.mad_mbps, s.points
                );
            }
        }
        Command::ValidateSrps { file, out, format } => {
            let r = cmd_validate_srps(&file, out.as_deref(), format)?;
            if let Some(v) = r.violation {
                println!("invalid: violates \"{v}\"");
                return Err(CliError::Input(format!("{}: invalid SRPS element", file.display())));
            }
            print!(
                "valid: non-SRG OBSS/PD {:.0}..{:.0} dBm",
                r.non_srg_min_dbm.unwrap_or(f64::NAN),
                r.non_srg_max_dbm.unwrap_or(f64::NAN)
            );
            match (r.srg_min_dbm, r.srg_max_dbm) {
                (Some(a), Some(b)) => println!(", SRG {a:.0}..{b:.0} dBm"),
                _ => println!(),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("axsr: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
