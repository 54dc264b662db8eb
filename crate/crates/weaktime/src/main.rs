use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use weaktime::commands::{
    cmd_check, cmd_conditional, cmd_dwell, cmd_figures, cmd_oracle, FigPreset,
};
use weaktime::scenario::load_scenario;
use weaktime::series::TimeSeries;
use weaktime::Error;

/// Dwell times and postselected conditional times for finite-dimensional
/// quantum systems, validated against a composite system-pointer simulation.
#[derive(Parser)]
#[command(name = "weaktime", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dwell times and presence probabilities over the scenario time grid.
    Dwell {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Conditional time components for one final subspace.
    Conditional {
        #[arg(long)]
        config: PathBuf,
        /// Final-subspace label from the scenario.
        #[arg(long = "final")]
        final_label: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Definiteness verdict for one (chi, final, t) triple.
    /// Exits 0 when definite, 3 when indefinite.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// Observable value index.
        #[arg(long, default_value_t = 0)]
        chi: usize,
        #[arg(long = "final")]
        final_label: String,
        /// Evaluation time (defaults to the scenario t_max).
        #[arg(long)]
        t: Option<f64>,
    },
    /// Coupling sweep against the composite simulator.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Postselect on this final label; omit for the unconditional time.
        #[arg(long = "final")]
        final_label: Option<String>,
        #[arg(long, default_value_t = 0)]
        chi: usize,
        #[arg(long)]
        t: Option<f64>,
        /// Descending coupling strengths, comma separated.
        #[arg(long, value_delimiter = ',')]
        gammas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reference curves of the two-level example as CSV.
    Figures {
        /// `fig1` or `fig2`.
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(series: &TimeSeries, out: Option<&PathBuf>) -> weaktime::Result<()> {
    match out {
        Some(path) => {
            let file = std::fs::File::create(path)?;
            series.write_csv(std::io::BufWriter::new(file))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            series.write_csv(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> weaktime::Result<u8> {
    match cli.command {
        Command::Dwell { config, out } => {
            let sc = load_scenario(&config)?;
            emit(&cmd_dwell(&sc)?, out.as_ref())?;
            Ok(0)
        }
        Command::Conditional {
            config,
            final_label,
            out,
        } => {
            let sc = load_scenario(&config)?;
            emit(&cmd_conditional(&sc, &final_label)?, out.as_ref())?;
            Ok(0)
        }
        Command::Check {
            config,
            chi,
            final_label,
            t,
        } => {
            let sc = load_scenario(&config)?;
            let t = t.unwrap_or(sc.t_max);
            let report = cmd_check(&sc, chi, &final_label, t)?;
            println!("{}", report.render());
            Ok(if report.definite { 0 } else { 3 })
        }
        Command::Oracle {
            config,
            final_label,
            chi,
            t,
            gammas,
            out,
        } => {
            let sc = load_scenario(&config)?;
            let t = t.unwrap_or(sc.t_max);
            let series = cmd_oracle(&sc, final_label.as_deref(), chi, t, &gammas)?;
            emit(&series, out.as_ref())?;
            Ok(0)
        }
        Command::Figures { preset, out } => {
            let series = cmd_figures(FigPreset::parse(&preset)?)?;
            emit(&series, out.as_ref())?;
            Ok(0)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    match std::env::var("WEAKTIME_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let n: usize = raw
                .parse()
                .map_err(|_| format!("WEAKTIME_THREADS must be a positive integer, got `{raw}`"))?;
            if n == 0 {
                return Err("WEAKTIME_THREADS must be at least 1".into());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| format!("could not configure thread pool: {e}"))
        }
    }
}

fn main() -> ExitCode {
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Io(_) => 1,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}
