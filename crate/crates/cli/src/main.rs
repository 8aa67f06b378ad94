use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use elastowave::driver::{converge_sweep, preset, Scenario, ScenarioConfig, Sweep};
use elastowave::{Error, Result};

#[derive(Parser)]
#[command(name = "elastowave", version, about = "Coupled elastic-acoustic wave simulations")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Run a convergence sweep and fit the rate.
    Converge {
        #[arg(short, long)]
        config: PathBuf,
        /// `h` or `N`.
        #[arg(long)]
        sweep: Sweep,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Where `errors.csv` goes; defaults to `output.dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print a built-in scenario as configuration text.
    Preset {
        name: String,
        /// Full-size cavity instead of the scaled one.
        #[arg(long)]
        full: bool,
    },
}

fn load(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ScenarioConfig::parse(&text)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, output_dir } => {
            let cfg = load(&config)?;
            let scenario = Scenario::build(&cfg)?;
            log::info!("{} steps of {:e}", scenario.steps, scenario.dt);
            let run = scenario.run(output_dir.as_deref())?;
            let m = &run.metadata;
            println!(
                "steps {} dt {:e} t {:e} elements {} wall {:.2} s",
                m.steps, m.dt, m.end_time, m.elements, m.wall_seconds
            );
            if let Some(e) = run.errors {
                println!("energy error {:.6e} l2 error {:.6e}", e.energy(), e.l2());
            }
            Ok(())
        }
        Command::Converge {
            config,
            sweep,
            values,
            output_dir,
        } => {
            let cfg = load(&config)?;
            let dir = output_dir.or_else(|| cfg.output.dir.clone());
            let result = converge_sweep(&cfg, sweep, &values, dir.as_deref())?;
            println!("param,energy_error,l2_error");
            for r in &result.rows {
                println!("{},{:.6e},{:.6e}", r.param, r.energy_error, r.l2_error);
            }
            let (e, l) = (&result.energy_fit, &result.l2_fit);
            println!(
                "energy slope {:.4} (R² {:.4}), l2 slope {:.4} (R² {:.4})",
                e.slope, e.r_squared, l.slope, l.r_squared
            );
            Ok(())
        }
        Command::Preset { name, full } => {
            let cfg = preset(&name, full)?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
