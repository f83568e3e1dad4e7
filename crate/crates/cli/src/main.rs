use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use acqroc::harness::{self, ExperimentConfig, Overrides};
use acqroc::simulator::Fidelity;
use acqroc::{Error, SearchOrder};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Acquisition ROC toolkit: cell and global detection probabilities of a
/// serial GNSS search versus Doppler bin width.
#[derive(Parser)]
#[command(name = "acqroc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cell detection probabilities per bin width and offset
    CellProbs(Common),
    /// Global ROC curves per bin width
    Roc {
        #[command(flatten)]
        common: Common,
        /// Attach Monte Carlo estimates
        #[arg(long)]
        with_mc: bool,
    },
    /// Monte Carlo estimates with confidence bounds; also writes
    /// <out>_offsets.csv next to --out
    Simulate(Common),
    /// Run the cross-check suite
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_enum)]
    fidelity: Option<FidelityArg>,
    #[arg(long, value_enum)]
    order: Option<OrderArg>,
    /// Worker threads (results do not depend on it)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FidelityArg {
    Metric,
    Waveform,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    CodeFirst,
    DopplerFirst,
}

enum Failure {
    Config(String),
    Validation,
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(msg) => Failure::Config(msg),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Failure> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot set up {n} threads: {e}")))?;
    }
    let mut cfg = ExperimentConfig::load(&common.config)?;
    cfg.apply(&Overrides {
        seed: common.seed,
        trials: common.trials,
        fidelity: common.fidelity.map(|f| match f {
            FidelityArg::Metric => Fidelity::MetricLevel,
            FidelityArg::Waveform => Fidelity::Waveform,
        }),
        order: common.order.map(|o| match o {
            OrderArg::CodeFirst => SearchOrder::CodePhaseFirst,
            OrderArg::DopplerFirst => SearchOrder::DopplerFirst,
        }),
    })?;
    Ok(cfg)
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| Failure::Config(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents.as_bytes()).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(contents.as_bytes())
                .map_err(|e| Failure::Runtime(format!("stdout: {e}")))
        }
    }
}

fn offsets_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_offsets.{}", ext.to_string_lossy()),
        None => format!("{stem}_offsets"),
    };
    out.with_file_name(name)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::CellProbs(common) => {
            let cfg = load(&common)?;
            emit(common.out.as_deref(), &harness::cell_probs(&cfg)?.to_csv()?)
        }
        Command::Roc { common, with_mc } => {
            let cfg = load(&common)?;
            emit(common.out.as_deref(), &harness::roc(&cfg, with_mc)?.to_csv()?)
        }
        Command::Simulate(common) => {
            let cfg = load(&common)?;
            let out = harness::simulate(&cfg)?;
            if let Some(path) = common.out.as_deref() {
                write_atomic(&offsets_path(path), &out.offsets.to_csv()?)?;
            }
            emit(common.out.as_deref(), &out.roc.to_csv()?)
        }
        Command::Validate(common) => {
            let cfg = load(&common)?;
            let report = harness::validate(&cfg);
            let text = report.render();
            if let Some(path) = common.out.as_deref() {
                write_atomic(path, &text)?;
            }
            print!("{text}");
            if report.passed() {
                Ok(())
            } else {
                for c in report.failures() {
                    eprintln!("failed: [{}] {}: {}", c.group, c.name, c.detail);
                }
                Err(Failure::Validation)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
    }
}
