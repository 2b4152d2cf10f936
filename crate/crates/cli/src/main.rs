use clap::{Args, Parser, Subcommand};
use elg_core::geometry::{make_phantom, Phantom, PhantomOverrides, PHANTOM_IDS};
use elg_core::pipeline::{config_phantom, emit_outputs, run_forward, run_reconstruct, ExperimentConfig, ForwardData, ReconstructionResult, Status};
use elg_core::{Error, Result};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Elastic inclusion reconstruction from sparse boundary displacements.
#[derive(Parser)]
#[command(name = "elg", version)]
struct Cli {
    /// Repeat for more detail (-v info, -vv debug, -vvv per-iteration traces).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Overrides the configured noise seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate boundary measurements and write the forward-data file.
    Forward {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "forward.json")]
        out: PathBuf,
    },
    /// Reconstruct support and Lamé parameters from a forward-data file.
    Reconstruct {
        #[command(flatten)]
        common: Common,
        /// Forward-data file.
        #[arg(long)]
        data: PathBuf,
        /// Output directory for result.json and the CSV maps.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Skip the metrics against the catalog phantom.
        #[arg(long)]
        no_metrics: bool,
    },
    /// Forward simulation followed by reconstruction.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the phantom catalog.
    Phantoms,
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn reconstruct(data: &ForwardData, cfg: &ExperimentConfig, truth: Option<&Phantom>, out: &Path) -> Result<Status> {
    let result: ReconstructionResult = run_reconstruct(data, cfg, truth)?;
    for path in emit_outputs(&result, out)? {
        log::info!("wrote {}", path.display());
    }
    if let Some(m) = &result.metrics {
        log::info!("jaccard {:.3}, support {} cells, truth {} cells", m.jaccard, m.support_size, m.truth_size);
    }
    Ok(result.status())
}

fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Forward { common, out } => {
            let cfg = load_config(&common)?;
            run_forward(&cfg)?.save(&out)?;
            log::info!("wrote {}", out.display());
            Ok(Status::Complete)
        }
        Command::Reconstruct { common, data, out, no_metrics } => {
            let cfg = load_config(&common)?;
            let data = ForwardData::load(&data)?;
            // metrics only when the data came from the configured phantom
            let truth = if no_metrics || data.phantom_id != cfg.phantom { None } else { Some(config_phantom(&cfg)?) };
            reconstruct(&data, &cfg, truth.as_ref(), &out)
        }
        Command::Pipeline { common, out } => {
            let cfg = load_config(&common)?;
            let data = run_forward(&cfg)?;
            std::fs::create_dir_all(&out)?;
            data.save(&out.join("forward.json"))?;
            let truth = config_phantom(&cfg)?;
            reconstruct(&data, &cfg, Some(&truth), &out)
        }
        Command::Phantoms => {
            let catalog = PHANTOM_IDS.iter().map(|id| make_phantom(id, &PhantomOverrides::default())).collect::<Result<Vec<_>>>()?;
            println!("{}", serde_json::to_string_pretty(&catalog)?);
            Ok(Status::Complete)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("ELG_THREADS") else {
        return Ok(());
    };
    let n: usize = value.parse().map_err(|_| Error::Config(format!("ELG_THREADS must be a positive integer, got `{value}`")))?;
    if n == 0 {
        return Err(Error::Config("ELG_THREADS must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    log::info!("built without the parallel feature; ELG_THREADS={n} ignored");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match configure_threads().and_then(|_| run(cli)) {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(Status::EmptySupport) => {
            eprintln!("elg: empty support; partial result written");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("elg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
