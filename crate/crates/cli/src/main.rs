//! `beamimpact` command-line front end.
//!
//! Exit status: 0 success, 2 configuration or usage error, 3 I/O error,
//! 4 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use beamimpact::run;
use beamimpact::scenario::{defaults_text, parse_scenario, Scenario, Strictness};
use beamimpact::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "beamimpact", version, about = "Reduced-order sphere-on-beam impact simulation")]
struct Cli {
    /// Print every config key with its default and exit.
    #[arg(long)]
    print_defaults: bool,
    /// Reject unknown config keys (default).
    #[arg(long, global = true, conflicts_with = "lenient")]
    strict: bool,
    /// Warn about unknown config keys instead of failing.
    #[arg(long, global = true)]
    lenient: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct ConfigArg {
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// List the beam's natural frequencies and the retained set.
    Modes(ConfigArg),
    /// Export the sphere and beam reduced models.
    Rom {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the impact simulation and write all artifacts.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        /// Output directory; defaults to `output.dir` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the nonlinear Hertz reference problem.
    Oracle {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Post-process a trajectory CSV written by `simulate` or `oracle`.
    Post {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Free-decay fit window, s.
        #[arg(long, default_value_t = 5e-4)]
        fit_window: f64,
        /// Pulses closer than this form one contact, s.
        #[arg(long, default_value_t = 5e-6)]
        coalescence: f64,
    },
    /// Time the reduced model against the full-order reference.
    Bench {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Runs per method; the fastest is reported.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Simulate several configs concurrently (threads from BEAMIMPACT_THREADS).
    Batch {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_io() {
        3
    } else if e.is_input() {
        2
    } else {
        4
    }
}

fn load(config: &ConfigArg, strictness: Strictness) -> Result<Scenario, Error> {
    parse_scenario(&config.config, strictness)
}

fn execute(cli: Cli) -> Result<(), Error> {
    let strictness = if cli.lenient {
        Strictness::Lenient
    } else {
        Strictness::Strict
    };
    let Some(command) = cli.command else {
        return Err(Error::InvalidInput("no command given; see --help".into()));
    };
    match command {
        Command::Modes(c) => print!("{}", run::run_modes(&load(&c, strictness)?)?),
        Command::Rom { config, out } => {
            let manifest = run::run_rom(&load(&config, strictness)?, &out)?;
            println!("{}", manifest.display());
        }
        Command::Simulate { config, out } => {
            let s = load(&config, strictness)?;
            let dir = out.unwrap_or_else(|| s.output_dir.clone());
            let outcome = run::run_simulate(&s, &dir)?;
            report_simulation(&outcome, &dir);
        }
        Command::Oracle { config, out } => {
            let traj = run::run_oracle(&load(&config, strictness)?, &out)?;
            if let Some(w) = traj.events.first_window() {
                println!("contact duration {:.3} us", w.duration() * 1e6);
            }
        }
        Command::Post {
            traj,
            out,
            fit_window,
            coalescence,
        } => {
            if let Some(summary) = run::run_post(&traj, &out, fit_window, coalescence)? {
                print!("{}", beamimpact::output::summary_csv(&summary));
            }
        }
        Command::Bench {
            config,
            out,
            repeats,
        } => {
            let report = run::run_bench(&load(&config, strictness)?, out.as_deref(), repeats)?;
            print!("{}", report.to_text());
        }
        Command::Batch { out, configs } => {
            let results = run::run_batch(&configs, &out, strictness)?;
            let mut first_error = None;
            for (cfg, r) in results {
                match r {
                    Ok(m) => println!("{}: {}", cfg.display(), m.display()),
                    Err(e) => {
                        eprintln!("{}: {e}", cfg.display());
                        first_error.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = first_error {
                return Err(e);
            }
        }
    }
    Ok(())
}

fn report_simulation(outcome: &run::SimulateOutcome, dir: &Path) {
    let t = &outcome.trajectory;
    if let Some(w) = t.events.first_window() {
        println!(
            "contact {:.3} us, peak {:.1} N, {} window(s)",
            w.duration() * 1e6,
            w.peak_force,
            t.events.windows.len()
        );
    }
    if let Some(s) = &outcome.summary {
        for r in s.significant(0.02) {
            println!("{:>4} {:>10.1} Hz  {:6.2}%", r.label, r.freq_hz, 100.0 * r.energy_fraction);
        }
    }
    println!("{}", dir.join("manifest.txt").display());
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.print_defaults {
        print!("{}", defaults_text());
        return ExitCode::SUCCESS;
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
