use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use supplyshock::io::Format;
use supplyshock::pipeline::{
    cascade_report, cmd_cascade, cmd_exposure, cmd_generate, cmd_inequality, Dataset,
    DirectionSpec, RunConfig,
};
use supplyshock::synth::{
    scale_config, REFERENCE_FIRMS, REFERENCE_LINKS, TOY_EDGES_CSV, TOY_FIRMS_CSV, TOY_MACRO_CSV,
};
use supplyshock::Error;

/// Supply shock exposures between regions from firm-level supply networks.
#[derive(Parser)]
#[command(name = "supplyshock", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Region exposure, exposed value, link count and mean out-link matrices
    /// plus the total exposure profile.
    Exposure(RunArgs),
    /// Lorenz curves, Gini coefficients, income group exposure, correlations
    /// and regressions against macro data.
    Inequality(RunArgs),
    /// Write a synthetic block-model economy as input tables.
    Generate(GenerateArgs),
    /// Distress vector, step count and DebtRank of a single failing firm.
    Cascade(CascadeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DirectionArg {
    Down,
    Up,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct InputArgs {
    /// Edge list with header `supplier_id,customer_id`.
    #[arg(long)]
    edges: PathBuf,
    /// Firm table with header `firm_id,region,sector`.
    #[arg(long)]
    firms: PathBuf,
    /// Macro table with header `region,gdp_usd,population,imports_usd,exports_usd`.
    #[arg(long = "macro")]
    macro_path: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "down")]
    direction: DirectionArg,
    /// Regions with at most this many firms are dropped.
    #[arg(long, default_value_t = 30)]
    min_firms: usize,
    /// Regions to drop before anything else (repeat or separate by commas).
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    /// Cascade threads, 0 for all cores. Does not change any output.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output directory, created if needed.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Args)]
struct CascadeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Id of the failing firm.
    #[arg(long)]
    firm: String,
    /// Write `cascade.json` here instead of printing to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Output directory for edges.csv, firms.csv and macro.csv.
    #[arg(long)]
    out: PathBuf,
    /// Number of firms.
    #[arg(long = "firms", default_value_t = 1000)]
    n_firms: usize,
    /// Number of regions of (nearly) equal size.
    #[arg(long = "regions", default_value_t = 10)]
    n_regions: usize,
    /// Expected mean total degree per firm.
    #[arg(long, default_value_t = 2.0 * REFERENCE_LINKS as f64 / REFERENCE_FIRMS as f64)]
    mean_degree: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the nine-firm toy economy instead.
    #[arg(long, conflicts_with_all = ["n_firms", "n_regions", "mean_degree", "seed"])]
    toy: bool,
}

fn run_config(input: InputArgs, out: PathBuf, format: FormatArg) -> RunConfig {
    let mut config = RunConfig::new(input.edges, input.firms, out);
    config.macro_path = input.macro_path;
    config.direction = match input.direction {
        DirectionArg::Down => DirectionSpec::Down,
        DirectionArg::Up => DirectionSpec::Up,
        DirectionArg::Both => DirectionSpec::Both,
    };
    config.min_firms = input.min_firms;
    config.exclude = input
        .exclude
        .into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect::<BTreeSet<_>>();
    config.workers = input.workers;
    config.format = match format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    config
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn write_toy(out: &PathBuf) -> supplyshock::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let files = [
        ("edges.csv", TOY_EDGES_CSV),
        ("firms.csv", TOY_FIRMS_CSV),
        ("macro.csv", TOY_MACRO_CSV),
    ];
    let staged: Vec<(PathBuf, Vec<u8>)> = files
        .iter()
        .map(|(name, text)| (out.join(name), text.as_bytes().to_vec()))
        .collect();
    supplyshock::io::write_files_atomic(&staged)?;
    Ok(staged.into_iter().map(|(p, _)| p).collect())
}

fn run(cli: Cli) -> supplyshock::Result<()> {
    match cli.command {
        Command::Exposure(args) => {
            let config = run_config(args.input, args.out, args.format);
            print_paths(&cmd_exposure(&config)?);
        }
        Command::Inequality(args) => {
            let config = run_config(args.input, args.out, args.format);
            if config.macro_path.is_none() {
                return Err(Error::InvalidInput("inequality needs --macro".into()));
            }
            print_paths(&cmd_inequality(&config)?);
        }
        Command::Generate(args) => {
            let paths = if args.toy {
                write_toy(&args.out)?
            } else {
                let config =
                    scale_config(args.n_firms, args.n_regions, args.mean_degree, args.seed)?;
                cmd_generate(&config, &args.out)?
            };
            print_paths(&paths);
        }
        Command::Cascade(args) => {
            let out = args.out.clone().unwrap_or_default();
            let config = run_config(args.input, out, FormatArg::Json);
            if args.out.is_some() {
                print_paths(&[cmd_cascade(&config, &args.firm)?]);
            } else {
                let data = Dataset::load(&config)?;
                let json = cascade_report(&config, &data, &args.firm)?.to_json()?;
                let _ = std::io::stdout().write_all(json.as_bytes());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("supplyshock: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
