use clap::{Parser, Subcommand};
use ifsm_core::config::{parse_config, RunConfig};
use ifsm_core::oracle::{FormTerm, LinearForm};
use ifsm_core::runner;
use std::path::PathBuf;
use std::process::ExitCode;

/// Simulation and statistical verification of indicator fractional stable
/// motions and related stable integrals.
#[derive(Parser)]
#[command(name = "ifsm", version, about)]
struct Cli {
    /// TOML run configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports, CSVs, and the binary cache.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores). Results are identical for
    /// any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reject unknown config keys instead of noting them.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured process and write samples.csv.
    Simulate,
    /// Evaluate the characteristic-functional exponent of one linear form
    /// and emit JSON.
    Oracle {
        /// Coefficients theta_j (comma separated).
        #[arg(long, value_delimiter = ',', required = true)]
        theta: Vec<f64>,
        /// Times t_j (comma separated, same length as theta).
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<f64>,
        /// Base times s_j (comma separated; defaults to zeros).
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
    },
    /// Run the configured experiments; exit 0 only if every verdict passes.
    Verify,
    /// Re-derive verdicts from the CSVs in --out and compare with the JSON
    /// report.
    Report,
    /// Write the subordinator ensemble as paths.csv.
    ExportPaths,
}

fn load_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            parse_config(&text, cli.strict).map_err(|e| e.to_string())?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("warning: thread pool already initialized: {e}");
        }
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, String> {
    let cfg = load_config(cli)?;
    for notice in &cfg.notices {
        eprintln!("notice: {notice}");
    }
    match &cli.command {
        Command::Simulate => {
            let csv = runner::simulate_csv(&cfg).map_err(|e| e.to_string())?;
            std::fs::create_dir_all(&cli.out).map_err(|e| e.to_string())?;
            let path = cli.out.join("samples.csv");
            std::fs::write(&path, csv).map_err(|e| e.to_string())?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { theta, t, s } => {
            if theta.len() != t.len() {
                return Err("--theta and --t must have the same length".into());
            }
            let s_vec = if s.is_empty() { vec![0.0; theta.len()] } else { s.clone() };
            if s_vec.len() != theta.len() {
                return Err("--s must match --theta in length".into());
            }
            let terms: Vec<FormTerm> = theta
                .iter()
                .zip(t)
                .zip(&s_vec)
                .map(|((&theta, &t), &s)| FormTerm { theta, t, s })
                .collect();
            let form = LinearForm::new(terms).map_err(|e| e.to_string())?;
            let json = runner::oracle_json(&cfg, &form).map_err(|e| e.to_string())?;
            print!("{json}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify => {
            let report = runner::run(&cfg, Some(&cli.out)).map_err(|e| e.to_string())?;
            for result in &report.results {
                println!(
                    "{:<16} {}",
                    result.experiment.name(),
                    if result.pass { "PASS" } else { "FAIL" }
                );
            }
            println!(
                "report: {} ({} experiments, {:.1}s)",
                cli.out.join("report.json").display(),
                report.results.len(),
                report.wall_time_secs
            );
            Ok(if report.all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Report => {
            let (table, consistent, all_pass) =
                runner::rederive_report(&cli.out).map_err(|e| e.to_string())?;
            print!("{table}");
            if !consistent {
                eprintln!("CSV re-derivation disagrees with report.json");
            }
            Ok(if consistent && all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::ExportPaths => {
            let csv = runner::export_paths_csv(&cfg).map_err(|e| e.to_string())?;
            std::fs::create_dir_all(&cli.out).map_err(|e| e.to_string())?;
            let path = cli.out.join("paths.csv");
            std::fs::write(&path, csv).map_err(|e| e.to_string())?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
