use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use otfs_harness::config::FULL_TRIALS;
use otfs_harness::results::{to_csv, to_json};
use otfs_harness::{
    convergence_report, convergence_rows, emit_results, measure_runtime, run_sweep, support_recovery_report,
    Format, HarnessError, Method, ResultRow, ScenarioConfig, SETTLE_BAND,
};

#[derive(Parser)]
#[command(name = "otfs-bench", version, about = "Monte Carlo benchmarks for MIMO-OTFS channel estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// NMSE sweep of one of the shipped figures.
    Sweep {
        #[arg(long, value_enum)]
        figure: Figure,
        #[command(flatten)]
        common: Common,
    },
    /// Wall-clock time versus the delay grid size.
    Runtime {
        /// Timed repeats after the warm-up run.
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Angular support recovery on fixed path lists.
    Support {
        #[arg(long, value_parser = ["5", "6"])]
        simulation: String,
        #[command(flatten)]
        common: Common,
    },
    /// NMSE after every iteration.
    Convergence {
        #[command(flatten)]
        common: Common,
    },
    /// NMSE sweep of a scenario file.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    #[value(name = "2a")]
    A,
    #[value(name = "2b")]
    B,
    #[value(name = "2c")]
    C,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Monte Carlo trials per sweep value.
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial t uses seed ^ t.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Comma-separated method list (ls, l1, ogvbi, vector_ogvbi, fast_vbi, proposed, oracle).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Use the full trial count instead of the desk-scale default.
    #[arg(long)]
    full: bool,
}

impl Common {
    fn apply(&self, mut s: ScenarioConfig) -> Result<ScenarioConfig, HarnessError> {
        if self.full {
            s.trials = FULL_TRIALS;
        }
        if let Some(t) = self.trials {
            s.trials = t;
        }
        if let Some(seed) = self.seed {
            s.base_seed = seed;
        }
        if let Some(list) = &self.methods {
            s.methods = list.iter().map(|m| m.parse::<Method>()).collect::<Result<_, _>>()?;
        }
        s.validate()?;
        Ok(s)
    }

    fn format(&self) -> Format {
        match self.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }

    fn write(&self, rows: &[ResultRow], scenario: &ScenarioConfig) -> Result<(), HarnessError> {
        match &self.out {
            Some(path) => emit_results(rows, scenario, path, self.format()),
            None => {
                if rows.is_empty() {
                    return Err(HarnessError::EmptyTable);
                }
                let text = match self.format() {
                    Format::Csv => to_csv(rows)?,
                    Format::Json => to_json(rows, scenario)?,
                };
                std::io::stdout().write_all(text.as_bytes()).map_err(|e| HarnessError::Io(e.to_string()))
            }
        }
    }
}

fn sweep(scenario: &ScenarioConfig, common: &Common) -> Result<(), HarnessError> {
    let report = run_sweep(scenario)?;
    for f in &report.failures {
        eprintln!("{} failed at {} (seed {}): {}", f.method, f.sweep_value, f.seed, f.message);
    }
    common.write(&report.rows, scenario)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Sweep { figure, common } => {
            let base = match figure {
                Figure::A => ScenarioConfig::figure_2a(),
                Figure::B => ScenarioConfig::figure_2b(),
                Figure::C => ScenarioConfig::figure_2c(),
            };
            let scenario = common.apply(base)?;
            sweep(&scenario, &common)
        }
        Command::Estimate { config, common } => {
            let scenario = common.apply(ScenarioConfig::from_file(&config)?)?;
            sweep(&scenario, &common)
        }
        Command::Runtime { repeats, common } => {
            let scenario = common.apply(ScenarioConfig::runtime())?;
            let rows = measure_runtime(&scenario, repeats)?;
            common.write(&rows, &scenario)
        }
        Command::Support { simulation, common } => {
            let base = if simulation == "5" { ScenarioConfig::simulation_5() } else { ScenarioConfig::simulation_6() };
            let scenario = common.apply(base)?;
            let report = support_recovery_report(&scenario)?;
            for p in &report.profiles {
                eprintln!("# {} seed {} fraction {:.4}", p.method, p.seed, p.support_energy_fraction);
                let line: Vec<String> =
                    p.angles_deg.iter().zip(&p.modulus).map(|(a, m)| format!("{a:.3}:{m:.4e}")).collect();
                eprintln!("{}", line.join(" "));
            }
            common.write(&report.rows, &scenario)
        }
        Command::Convergence { common } => {
            let scenario = common.apply(ScenarioConfig::convergence())?;
            let traces = convergence_report(&scenario)?;
            for t in &traces {
                eprintln!(
                    "# {} at {} dB: final {:.5}, settled at iteration {}",
                    t.method,
                    t.sweep_value,
                    t.final_nmse(),
                    t.settled_at(SETTLE_BAND)
                );
            }
            common.write(&convergence_rows(&scenario, &traces)?, &scenario)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
