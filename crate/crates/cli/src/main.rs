//! `splitpack`: segment a tetrahedral mesh into box-like parts and pack
//! them into a small container.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use splitpack::packer::{InsertionOrder, PackerConfig};

#[derive(Parser)]
#[command(name = "splitpack", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the part hierarchy of a mesh and write it as JSON.
    Segment(SegmentArgs),
    /// Split a mesh until its parts pack to the target efficiency.
    Splitpack(SplitpackArgs),
    /// Pack parts given as separate meshes, without splitting.
    Pack(PackArgs),
    /// Pack random boxes and report efficiency statistics.
    BenchBoxes(BenchArgs),
    /// Rebuild the packed OBJ files from a placements file.
    Export(ExportArgs),
}

#[derive(Args)]
struct OutArgs {
    /// Directory for all output files; created if missing.
    #[arg(long, default_value = "splitpack-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SegmentArgs {
    /// Mesh as `name.node`, `name.ele` or the common stem `name`.
    mesh: PathBuf,
    /// Also write one OBJ per part of the cut with this many parts.
    #[arg(long, value_name = "K")]
    dump_level: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Sorted,
    Random,
}

#[derive(Args)]
struct PackerArgs {
    /// Orientations tried per part.
    #[arg(long, default_value_t = 10)]
    rotations: usize,
    /// Voxels along the longest container axis.
    #[arg(long, default_value_t = 256)]
    grid: usize,
    /// Relative base growths, tried on X and Y independently.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.0, 0.25, 0.5, -0.25])]
    base_factors: Vec<f64>,
    /// Upper bound on the container's X extent.
    #[arg(long)]
    base_max_x: Option<f64>,
    /// Upper bound on the container's Y extent.
    #[arg(long)]
    base_max_y: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "sorted")]
    order: Order,
    /// Never place parts into holes under already placed parts.
    #[arg(long)]
    no_holes: bool,
}

impl PackerArgs {
    fn config(&self) -> PackerConfig {
        PackerConfig {
            grid_budget: self.grid,
            rotations: self.rotations,
            seed: self.seed,
            base_factors: self.base_factors.clone(),
            base_max_x: self.base_max_x,
            base_max_y: self.base_max_y,
            holes_enabled: !self.no_holes,
            insertion_order: match self.order {
                Order::Sorted => InsertionOrder::Sorted,
                Order::Random => InsertionOrder::Random,
            },
        }
    }
}

#[derive(Args)]
struct SplitpackArgs {
    mesh: PathBuf,
    /// Largest number of parts.
    #[arg(long, default_value_t = 8)]
    nmax: usize,
    /// Target packing efficiency in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    target: f64,
    /// Stop at the part budget instead of asking for a larger one.
    #[arg(long)]
    non_interactive: bool,
    #[command(flatten)]
    packer: PackerArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct PackArgs {
    /// One mesh per part.
    #[arg(required = true)]
    parts: Vec<PathBuf>,
    #[command(flatten)]
    packer: PackerArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 50)]
    count: usize,
    /// Smallest box edge, as a fraction of the unit container.
    #[arg(long, default_value_t = 0.1)]
    min_edge: f64,
    #[arg(long, default_value_t = 0.3)]
    max_edge: f64,
    /// Number of consecutive seeds, starting at --seed.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[command(flatten)]
    packer: PackerArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ExportArgs {
    /// A `placements.json` written by `pack` or `splitpack`.
    #[arg(long)]
    placements: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Segment(a) => commands::segment(&a),
        Command::Splitpack(a) => commands::splitpack(&a),
        Command::Pack(a) => commands::pack(&a),
        Command::BenchBoxes(a) => commands::bench_boxes(&a),
        Command::Export(a) => commands::export(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("splitpack: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
