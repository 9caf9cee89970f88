//! `hypermap`: run the mineral-mapping pipeline stage by stage.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hypermap_core::hyperion;
use hypermap_core::pipeline::{self, PipelineConfig, Stage, DEFAULT_GAINS_FILE, DEFAULT_MASK_FILE};
use hypermap_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_DEPENDENCY: u8 = 3;
const EXIT_DATA: u8 = 4;

#[derive(Parser)]
#[command(name = "hypermap", version, about = "Hyperspectral endmember extraction and mineral mapping")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline configuration file.
    #[arg(long, short)]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the dimensions and layout of the input cube.
    Info(RunArgs),
    /// Bad-band removal, ROI subset, radiance scaling, reflectance.
    Preprocess(RunArgs),
    /// Fit the MNF transform and denoise.
    Mnf(RunArgs),
    /// Pixel purity index and pure-pixel selection.
    Ppi(RunArgs),
    /// Cluster pure pixels into class-mean endmembers.
    Endmembers(RunArgs),
    /// Rank library minerals against every endmember.
    Match(RunArgs),
    /// SAM classification of the whole scene.
    Classify(RunArgs),
    /// Mixture-tuned matched filtering per endmember.
    Mtmf(RunArgs),
    /// Generate a synthetic scene with ground truth.
    Synth(RunArgs),
    /// Summary table and plot data.
    Report(RunArgs),
    /// Preprocess through report in one go.
    All(RunArgs),
    /// Write default.cfg and the Hyperion band tables into a directory.
    DefaultConfig {
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Dependency { .. } => EXIT_DEPENDENCY,
        _ => EXIT_DATA,
    }
}

fn write_defaults(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let files = [
        ("default.cfg", pipeline::default_config_text()),
        (DEFAULT_MASK_FILE, hyperion::default_band_mask_csv()),
        (DEFAULT_GAINS_FILE, hyperion::default_gains_csv()),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::Io {
            path: p.clone(),
            source: e,
        })?;
        written.push(p);
    }
    Ok(written)
}

fn run(stage: Stage, args: RunArgs) -> Result<(), Error> {
    let mut cfg = PipelineConfig::load(&args.config).map_err(|e| match e {
        Error::Io { path, source } => Error::Config {
            key: "--config".into(),
            message: format!("cannot read {}: {source}", path.display()),
        },
        other => other,
    })?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output_directory = out;
    }
    let report = pipeline::run_stage(stage, &cfg)?;
    for line in &report.summary {
        println!("{line}");
    }
    for p in &report.artifacts {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::DefaultConfig { out } => write_defaults(&out).map(|files| {
            for f in files {
                println!("wrote {}", f.display());
            }
        }),
        Command::Info(a) => run(Stage::Info, a),
        Command::Preprocess(a) => run(Stage::Preprocess, a),
        Command::Mnf(a) => run(Stage::Mnf, a),
        Command::Ppi(a) => run(Stage::Ppi, a),
        Command::Endmembers(a) => run(Stage::Endmembers, a),
        Command::Match(a) => run(Stage::Match, a),
        Command::Classify(a) => run(Stage::Classify, a),
        Command::Mtmf(a) => run(Stage::Mtmf, a),
        Command::Synth(a) => run(Stage::Synth, a),
        Command::Report(a) => run(Stage::Report, a),
        Command::All(a) => run(Stage::All, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
