use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ergolab_cli::config::{parse_config, Kind};
use ergolab_cli::manifest::{read_manifest, replay_check};
use ergolab_cli::pipelines::run;
use ergolab_cli::CliError;

#[derive(Parser)]
#[command(name = "ergolab", version, about = "Seeded, replayable experiments on finite models of equivalence relations")]
struct Cli {
    /// Worker threads; defaults to ERGOLAB_THREADS, then to the core count.
    #[arg(long, global = true, env = "ERGOLAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `outputDir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Added to every seed of the config.
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Percolation sweep over a p grid (kind "sweep").
    Sweep(RunArgs),
    /// Interval probe on a free-group window (kind "interval-probe").
    Percolate(RunArgs),
    /// Window operator norms and isoperimetric estimates (kind "spectral").
    Spectrum(RunArgs),
    /// Entropy bound ledger (kind "entropy-ledger").
    Entropy(RunArgs),
    /// Choice system and co-induced relation (kind "coinduce").
    Coinduce(RunArgs),
    /// Randomized exact extension suite (kind "extension-suite").
    Extend(RunArgs),
    /// Recomputes the digests listed in a run manifest.
    Replay {
        /// Directory holding manifest.json and the outputs.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run_kind(expected: Kind, args: &RunArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::io(format!("reading {}", args.config.display()), e))?;
    let cfg = parse_config(&text)?;
    if cfg.kind != expected {
        return Err(CliError::Schema {
            path: "kind".into(),
            message: format!("this subcommand runs kind {:?}, got {:?}", expected.name(), cfg.kind.name()),
        });
    }
    let out = args.out.clone().or_else(|| cfg.output_dir.clone()).ok_or_else(|| CliError::Schema {
        path: "outputDir".into(),
        message: "no output directory: set outputDir or pass --out".into(),
    })?;
    let (manifest, report) = run(&cfg, &out, args.seed_offset)?;
    print!("{report}");
    println!("wrote {} files and manifest.json to {}", manifest.outputs.len(), out.display());
    Ok(())
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Sweep(a) => run_kind(Kind::Sweep, a),
        Command::Percolate(a) => run_kind(Kind::IntervalProbe, a),
        Command::Spectrum(a) => run_kind(Kind::Spectral, a),
        Command::Entropy(a) => run_kind(Kind::EntropyLedger, a),
        Command::Coinduce(a) => run_kind(Kind::Coinduce, a),
        Command::Extend(a) => run_kind(Kind::ExtensionSuite, a),
        Command::Replay { out } => {
            let manifest = read_manifest(out)?;
            replay_check(&manifest, out)?;
            println!("replay ok: {} outputs match", manifest.outputs.len());
            Ok(())
        }
    }
}

fn init_threads(threads: Option<usize>) -> anyhow::Result<()> {
    if let Some(k) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().context("configuring the thread pool")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads(cli.threads) {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error: {:#}", anyhow::Error::new(e));
            ExitCode::from(code)
        }
    }
}
