//! `exponents`: capacities, exponent curves and verification runs for
//! discrete memoryless channels.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use exponents::channel::Channel;
use exponents::channel_file::{is_builtin_spec, parse_channel_file, parse_channel_source, parse_corpus_sizes, ChannelFile};
use exponents::curve::{emit_curve, CurveFile, Quantity};
use exponents::kl::{KlSolver, VSolverConfig};
use exponents::optim::linspace;
use exponents::verifier::{generate_corpus, load_corpus_dir, run_entries, CorpusDescription, VerifyConfig};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "exponents", version, about = "Channel exponents in Gallager and divergence form")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the capacity C and the zero-rate threshold C0
    Capacity {
        /// Channel file or builtin spec (bsc:p, bec:p, z:p, identity:n, useless:n:m, random:NxM)
        source: String,
        /// Also print the values in bits
        #[arg(long)]
        bits: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write exponent curves as CSV
    Curve(CurveArgs),
    /// Run the verification checks over a channel corpus
    Verify(VerifyArgs),
    /// Write a builtin or random channel as a channel file
    Gen {
        spec: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CurveArgs {
    source: String,
    /// Comma-separated quantities: G, G_dk, G_sp, E, E_sp, C
    #[arg(long = "q", default_value = "G,G_dk")]
    quantities: String,
    #[arg(long, default_value_t = 0.0)]
    rmin: f64,
    /// Defaults to ln|X| + 0.5, or ln|X| when G_sp is requested
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long, default_value_t = 21)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated channel sizes such as 2x2,2x3
    #[arg(long, default_value = "2x2,2x3,3x3", conflicts_with = "dir")]
    sizes: String,
    /// Random channels per size
    #[arg(long, default_value_t = 10, conflicts_with = "dir")]
    count: usize,
    /// Random channels with exact zeros per size
    #[arg(long, default_value_t = 0, conflicts_with = "dir")]
    sparse: usize,
    /// Leave out the builtin channel families
    #[arg(long, conflicts_with = "dir")]
    no_builtins: bool,
    /// Verify every *.json channel file of a directory instead
    #[arg(long)]
    dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit status 2: bad input or I/O failure.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn load_channel(source: &str, seed: u64) -> Result<Channel, Failure> {
    if is_builtin_spec(source) {
        return Ok(parse_channel_source(source, seed)?);
    }
    let text = std::fs::read_to_string(source).map_err(|e| Failure(format!("{source}: {e}")))?;
    let (_, w) = parse_channel_file(&text).map_err(|e| Failure(format!("{source}: {e}")))?;
    Ok(w)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_capacity(source: &str, bits: bool, seed: u64) -> Result<(), Failure> {
    let w = load_channel(source, seed)?;
    let mut kl = KlSolver::new(&w, VSolverConfig::default())?;
    let (c, c0) = (kl.capacity(), kl.zero_rate_threshold());
    println!("C = {c:.6} nats");
    println!("C0 = {c0:.6} nats");
    if bits {
        let ln2 = std::f64::consts::LN_2;
        println!("C = {:.6} bits", c / ln2);
        println!("C0 = {:.6} bits", c0 / ln2);
    }
    Ok(())
}

fn cmd_curve(args: &CurveArgs) -> Result<(), Failure> {
    let w = load_channel(&args.source, args.seed)?;
    let quantities = args
        .quantities
        .split(',')
        .map(|q| q.trim().parse::<Quantity>())
        .collect::<Result<Vec<_>, _>>()?;
    if args.points < 2 {
        return Err(Failure("--points must be at least 2".into()));
    }
    let ln_x = (w.inputs() as f64).ln();
    let rmax = args.rmax.unwrap_or(if quantities.contains(&Quantity::SpherePackingSc) {
        ln_x
    } else {
        ln_x + 0.5
    });
    let rates = linspace(args.rmin, rmax, args.points);
    let cfg = VSolverConfig {
        seed: args.seed,
        ..VSolverConfig::default()
    };
    let curves = quantities
        .par_iter()
        .map(|&q| emit_curve(q, &w, &rates, &cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let file = CurveFile::from_curves(&curves)?;
    write_output(args.out.as_deref(), &file.to_csv())
}

fn cmd_verify(args: &VerifyArgs) -> Result<bool, Failure> {
    let (entries, corpus) = match &args.dir {
        Some(dir) => (
            load_corpus_dir(dir)?,
            CorpusDescription {
                directory: Some(dir.display().to_string()),
                ..Default::default()
            },
        ),
        None => {
            let sizes = parse_corpus_sizes(&args.sizes)?;
            let entries = generate_corpus(args.seed, &sizes, args.count, args.sparse, !args.no_builtins);
            let corpus = CorpusDescription {
                sizes: sizes.iter().map(|(n, m)| format!("{n}x{m}")).collect(),
                count: args.count,
                builtins: !args.no_builtins,
                sparse_per_size: args.sparse,
                directory: None,
            };
            (entries, corpus)
        }
    };
    let cfg = VerifyConfig {
        solver: VSolverConfig {
            seed: args.seed,
            ..VSolverConfig::default()
        },
        ..VerifyConfig::default()
    };
    let report = run_entries(&entries, args.seed, corpus, &cfg)?;
    write_output(args.out.as_deref(), &report.to_json())?;
    for inv in &report.invalid {
        eprintln!("INVALID {}: {}", inv.label, inv.error);
    }
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {} on {}: deviation {} > {}", c.check_id, c.channel, c.worst_deviation, c.tolerance);
    }
    let s = &report.summary;
    eprintln!(
        "channels {}, invalid {}, checks {}, passed {}, failed {}",
        s.channels, s.invalid, s.checks, s.passed, s.failed
    );
    Ok(report.all_passed())
}

fn cmd_gen(spec: &str, seed: u64, out: Option<&Path>) -> Result<(), Failure> {
    let w = parse_channel_source(spec, seed)?;
    let file = ChannelFile::from_channel(&w, Some(spec.to_string()));
    write_output(out, &file.to_json())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("EXPONENTS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure(format!("EXPONENTS_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    configure_threads()?;
    match cli.command {
        Command::Capacity { source, bits, seed } => cmd_capacity(&source, bits, seed).map(|_| true),
        Command::Curve(args) => cmd_curve(&args).map(|_| true),
        Command::Verify(args) => cmd_verify(&args),
        Command::Gen { spec, seed, out } => cmd_gen(&spec, seed, out.as_deref()).map(|_| true),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
