//! `rangelab`: point generation, structure builds, queries, benchmarks,
//! lower-bound verification and SVG rendering.

mod bench;
mod common;
mod data;
mod lbverify;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use common::{CheckFailed, Globals, StructureArgs};

#[derive(Parser, Debug)]
#[command(name = "rangelab", version, about = "Semialgebraic range reporting experiments")]
struct Cli {
    /// Master seed for every random choice.
    #[arg(long, global = true, env = "RANGELAB_SEED", default_value_t = 0)]
    seed: u64,
    /// JSON file with the base configuration of the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Uniform points in the unit square as `x,y` CSV.
    Gen {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
    },
    /// Builds a structure and reports its modeled space.
    Build {
        #[arg(long)]
        points: PathBuf,
        #[command(flatten)]
        structure: StructureArgs,
    },
    /// Answers one range query given as JSON.
    Query {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        range: PathBuf,
        #[command(flatten)]
        structure: StructureArgs,
        /// Compare against a brute-force scan and fail on a mismatch.
        #[arg(long)]
        verify: bool,
    },
    /// Space and overscan across grid resolutions, checked against the
    /// brute-force oracle.
    Bench(bench::BenchArgs),
    /// Parameter audit, geometric estimates and the derandomization run.
    Lbverify(lbverify::LbArgs),
    /// SVG of the grid, a range boundary, its cover strips and chunks.
    Render(render::RenderArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let g = Globals { seed: cli.seed, config: cli.config, out: cli.out };
    match cli.cmd {
        Command::Gen { n } => data::gen(&g, n as usize),
        Command::Build { points, structure } => data::build(&g, &points, &structure),
        Command::Query { points, range, structure, verify } => data::query(&g, &points, &range, &structure, verify),
        Command::Bench(a) => bench::run(&g, &a),
        Command::Lbverify(a) => lbverify::run(&g, &a),
        Command::Render(a) => render::run(&g, &a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<CheckFailed>().is_some() => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
