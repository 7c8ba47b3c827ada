//! `v2x`: run the allocator on single snapshots, drive Monte-Carlo
//! evaluations and execute the built-in oracle suites.

mod manifest;
mod selftest;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use v2x_core::channel::{draw_bs_fading, large_scale};
use v2x_core::eval::{self, stream, stream_rng};
use v2x_core::matching::{match_3d, write_matching_csv};
use v2x_core::partition::{max_n_cut_partition, InterferenceGraph};
use v2x_core::pipeline::{audit, sum_capacity, write_allocation_csv, Allocation, PatternTable};
use v2x_core::power::PowerParams;
use v2x_core::{scenario, ScenarioConfig};

use manifest::Manifest;

#[derive(Parser)]
#[command(name = "v2x", version, about = "Graph-based spectrum and power allocation for vehicular D2D networks")]
struct Cli {
    /// Worker threads for Monte-Carlo drops (default: all logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo evaluation; writes CDF and summary CSVs plus a manifest.
    Simulate(SimulateArgs),
    /// Runs the oracle suites and reports pass/fail per suite.
    Selftest(SelftestArgs),
    /// Allocates a single drop and dumps the channel, matching and allocation.
    AllocateOnce(AllocateArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` config file; missing keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. `--set m=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut config = ScenarioConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            config.apply_text(&text).with_context(|| format!("parsing {}", path.display()))?;
        }
        for item in &self.overrides {
            let Some((key, value)) = item.split_once('=') else {
                bail!("--set expects KEY=VALUE, got {item:?}");
            };
            config.set(key, value).map_err(anyhow::Error::msg).with_context(|| format!("--set {item}"))?;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    F32,
    F64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,

    #[arg(long)]
    drops: Option<usize>,

    #[arg(long)]
    fading_samples: Option<usize>,

    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,

    /// Also write the random-feasible-assignment capacity CDF.
    #[arg(long)]
    baseline: bool,

    #[arg(long, value_enum, default_value = "f64")]
    precision: Precision,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: selftest::Suite,

    /// Instances per suite (default depends on the suite).
    #[arg(long)]
    instances: Option<usize>,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Feed the matching algorithm negated weights; the 2-approximation suite
    /// must then fail.
    #[arg(long)]
    perturb: bool,
}

#[derive(Args)]
struct AllocateArgs {
    #[command(flatten)]
    config: ConfigArgs,

    /// Drop index; the same index in `simulate` sees the same snapshot.
    #[arg(long, default_value_t = 0)]
    drop: usize,

    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("building thread pool")?;
    let threads = pool.current_num_threads();
    pool.install(|| match cli.command {
        Command::Simulate(args) => simulate(args, threads),
        Command::Selftest(args) => selftest::run(args.suite, args.instances, args.seed, args.perturb),
        Command::AllocateOnce(args) => allocate_once(args, threads),
    })
}

fn simulate(args: SimulateArgs, threads: usize) -> Result<ExitCode> {
    let mut config = args.config.resolve()?;
    if let Some(d) = args.drops {
        config.drops = d;
    }
    if let Some(s) = args.fading_samples {
        config.fading_samples = s;
    }
    config.validate()?;
    let start = Instant::now();
    let data = match args.precision {
        Precision::F64 => eval::run_monte_carlo::<f64>(&config)?,
        Precision::F32 => eval::run_monte_carlo::<f32>(&config)?,
    };
    let mut outputs = eval::write_outputs(&data, &args.out, args.baseline)?;
    let manifest = Manifest {
        command: "simulate",
        precision: match args.precision {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        },
        threads,
        wall_clock_s: start.elapsed().as_secs_f64(),
        outputs: outputs.clone(),
        config: &config,
    };
    outputs.push(manifest.write(&args.out)?);
    println!(
        "{} allocations, mean sum capacity {:.3} bit/s/Hz, V2V outage {:.5} (bound {:.5}), unserved V2V {:.3}",
        data.capacity.len(),
        data.mean_capacity(),
        data.empirical_outage(),
        data.outage_bound(),
        data.unserved_v2v_fraction()
    );
    for p in &outputs {
        println!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn allocate_once(args: AllocateArgs, threads: usize) -> Result<ExitCode> {
    let config = args.config.resolve()?;
    config.validate()?;
    let start = Instant::now();
    let params = PowerParams::<f64>::from_config(&config)?;
    let mut geo = stream_rng(config.seed, args.drop, 0, stream::GEOMETRY);
    let topology = scenario::generate(&config, &mut geo)?;
    let mut cs = large_scale::<f64, _>(&topology, &config, &mut geo)?;
    draw_bs_fading(&mut cs, &mut stream_rng(config.seed, args.drop, 0, stream::BS_FADING));
    let clustering = max_n_cut_partition(&InterferenceGraph::from_channel(&cs), config.clusters())?;
    let table = PatternTable::compute(&cs, &clustering, &params)?;
    let hypergraph = table.hypergraph()?;
    let matching = match_3d(&hypergraph)?;
    let alloc = Allocation::from_matching(&table, &clustering, &matching);
    let issues = audit(&alloc, &cs, &params);
    if !issues.is_empty() {
        bail!("allocation failed its audit: {}", issues.join("; "));
    }

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut outputs = vec![
        write_file(&args.out, "allocation.csv", |w| Ok(write_allocation_csv(&alloc, cs.num_v2i(), w)?))?,
        write_file(&args.out, "matching.csv", |w| Ok(write_matching_csv(&hypergraph, &matching, w)?))?,
        write_file(&args.out, "channel.csv", |w| Ok(cs.write_alpha_csv(w)?))?,
    ];
    let manifest = Manifest {
        command: "allocate-once",
        precision: "f64",
        threads,
        wall_clock_s: start.elapsed().as_secs_f64(),
        outputs: outputs.clone(),
        config: &config,
    };
    outputs.push(manifest.write(&args.out)?);
    println!(
        "drop {}: {} of {} patterns feasible, {} matches, sum capacity {:.3} bit/s/Hz, {} of {} V2V links served",
        args.drop,
        table.num_feasible(),
        cs.num_v2i() * cs.num_rbs() * clustering.num_clusters(),
        alloc.matches.len(),
        sum_capacity(&alloc, &cs),
        alloc.num_served_v2v(),
        cs.num_v2v()
    );
    for p in &outputs {
        println!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    body(&mut w)?;
    w.flush()?;
    Ok(path)
}
