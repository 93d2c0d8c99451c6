use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use orthopersist_cli::{run, CliError, Command, Format, Range, RunConfig, EXIT_USAGE};

/// Persistence probabilities and real-eigenvalue statistics of truncated
/// Haar orthogonal matrices.
#[derive(Debug, Parser)]
#[command(name = "orthopersist", version)]
struct Cli {
    command: Option<Command>,
    /// Command evaluated by `sweep`
    #[arg(long = "command", value_name = "COMMAND")]
    sweep_command: Option<Command>,
    /// n, or a range a:b, a:b:+k, a:b:xk
    #[arg(long)]
    n: Option<Range>,
    /// ell, or a range
    #[arg(long)]
    ell: Option<Range>,
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Spectral variable for `hilbert`
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Kernel bandwidth for `walk`
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Append a least-squares fit of ln|value| against ln n
    #[arg(long)]
    fit: bool,
    /// JSON config; flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
}

fn build_config(cli: Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_json(&std::fs::read_to_string(p)?)?,
        None => match cli.command {
            Some(c) => RunConfig::new(c),
            None => return Err(CliError::Usage("missing command".into())),
        },
    };
    if let Some(c) = cli.command {
        cfg.command = c;
    }
    macro_rules! flag {
        ($($f:ident => $g:ident),*) => { $(if let Some(v) = cli.$f { cfg.$g = Some(v); })* };
    }
    flag!(sweep_command => sweep_command, n => n, ell => ell, s => s, alpha => alpha, x => x,
          samples => samples, bandwidth => bandwidth, out => out_path);
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    cfg.fit |= cli.fit;
    Ok(cfg)
}

fn threads_from_env() -> Result<(), CliError> {
    let Ok(v) = std::env::var("ORTHOPERSIST_THREADS") else {
        return Ok(());
    };
    let n: usize = match v.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return Err(CliError::Usage(format!("ORTHOPERSIST_THREADS must be a positive integer, got '{v}'"))),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let result = threads_from_env().and_then(|_| build_config(cli)).and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("orthopersist: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
