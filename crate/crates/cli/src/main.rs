mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "pdiae", version, about = "Pseudo-differential autoencoder networks")]
struct Cli {
    /// key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one key; repeatable, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a symbol or scattering dataset.
    GenData(GenData),
    /// Train a model on a dataset.
    Train(Train),
    /// Relative error of a checkpoint on a dataset, per grid.
    Eval(Eval),
    /// Tikhonov reconstruction of one scattering sample.
    Oracle(Oracle),
    /// Median forward time of single blocks across grid sizes.
    Bench(Bench),
    /// Parameter breakdown and checkpoint manifest.
    Inspect(Inspect),
}

#[derive(Args)]
pub struct GenData {
    #[arg(long)]
    pub out: PathBuf,
    /// symbol or scatter.
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Additive noise in percent of the RMS.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Also write the first sample as CSV next to the dataset.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args)]
pub struct Train {
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Epoch log CSV; defaults to `<out>.log.csv`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub max_steps: Option<usize>,
}

#[derive(Args)]
pub struct Eval {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated grids, `32,48` or `32x32,48x48`.
    #[arg(long)]
    pub grids: Option<String>,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct Oracle {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Prefix of the CSV and SVG outputs.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct Bench {
    /// Comma-separated block kinds: pd, dense, fno.
    #[arg(long, default_value = "pd,dense")]
    pub kinds: String,
    /// Comma-separated ascending grid sizes.
    #[arg(long, default_value = "4096,32768")]
    pub sizes: String,
    #[arg(long, default_value_t = 21)]
    pub repeats: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct Inspect {
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config::RunConfig::load(cli.config.as_deref(), &cli.sets) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::GenData(a) => commands::gen_data(cfg, a),
        Command::Train(a) => commands::train(cfg, a),
        Command::Eval(a) => commands::eval(cfg, a),
        Command::Oracle(a) => commands::oracle(cfg, a),
        Command::Bench(a) => commands::bench(cfg, a),
        Command::Inspect(a) => commands::inspect(cfg, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
