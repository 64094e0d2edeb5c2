use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pespec_cli::config::parse_config;
use pespec_cli::run::{apply, parse_grid, run, Command, Overrides};

/// Perfect-entangler spectroscopy of a three-transmon, one-coupler device.
#[derive(Debug, Parser)]
#[command(name = "pespec", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Configuration file, or the name of a built-in preset
    /// (`cz_ganzhorn`, `iswap_mckay`).
    #[arg(long, default_value = "cz_ganzhorn")]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
    /// Evaluate at this gate time (ns) instead of minimizing over time.
    #[arg(long)]
    fixed_t: Option<f64>,
    /// Spectator grid `START:STOP:STEP` in GHz.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(f64, f64, f64)>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PESPEC_LOG", "warn")).init();
    let cli = Cli::parse();
    let mut cfg = match parse_config(&cli.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let overrides = Overrides { out: cli.out, jobs: cli.jobs, svg: cli.svg, fixed_t: cli.fixed_t, grid: cli.grid };
    let result = apply(&mut cfg, &overrides).and_then(|()| run(cli.command, &cfg));
    match result {
        Ok(files) => {
            let mut stdout = std::io::stdout().lock();
            for f in files {
                // a closed pipe downstream is not an error of the run
                let _ = writeln!(stdout, "{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
