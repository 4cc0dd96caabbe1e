use super::{run, write_atomic, ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::ham_algebra::to_text;
use clap::{Parser, Subcommand};
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "beamnf", version, about = "Normal form and lifespan experiments for the beam equation")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    /// TOML config; missing keys take defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for the record and CSV files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Proceed through normalization steps whose empirical gate fails.
    #[arg(long, global = true)]
    pub override_gates: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Verb {
    AuditDivisors,
    ScanMass,
    Bnf,
    Lifespan,
    Fit,
    PredictTimes,
    /// Print the Taylor-expanded nonlinearity of the `[bnf]` section.
    DumpHamiltonian,
}

impl Verb {
    fn kind(self) -> Option<ExperimentKind> {
        Some(match self {
            Verb::AuditDivisors => ExperimentKind::DivisorAudit,
            Verb::ScanMass => ExperimentKind::MassScan,
            Verb::Bnf => ExperimentKind::Bnf,
            Verb::Lifespan => ExperimentKind::Lifespan,
            Verb::Fit => ExperimentKind::Fit,
            Verb::PredictTimes => ExperimentKind::PredictTimes,
            Verb::DumpHamiltonian => return None,
        })
    }
}

/// Resolves the config of a parsed command line.
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(kind) = cli.verb.kind() {
        config.kind = kind;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = Some(out.clone());
    }
    if cli.override_gates {
        config.bnf.override_gates = true;
    }
    Ok(config)
}

fn execute(cli: &Cli) -> Result<i32> {
    let config = resolve(cli)?;
    if let Verb::DumpHamiltonian = cli.verb {
        let text = to_text(config.bnf.hamiltonian()?.as_poly());
        match &config.out_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                write_atomic(&dir.join("hamiltonian.txt"), text.as_bytes())?;
            }
            None => print!("{text}"),
        }
        return Ok(0);
    }
    let record = run(&config)?;
    if config.out_dir.is_none() {
        println!("{}", record.to_json());
    }
    if let Some(e) = &record.error {
        eprintln!("beamnf: {e}");
    }
    Ok(record.exit_code)
}

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("beamnf: {e}");
            e.exit_code()
        }
    }
}
