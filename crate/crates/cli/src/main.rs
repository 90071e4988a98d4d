//! `gdifs`: dimensions, extraction certificates, verification and rendering
//! for graph-directed systems of similarities.
//!
//! Exit codes: 0 success, 1 other failure, 2 invalid input or graph,
//! 3 mode precondition, 4 verification.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand};
use gdifs_core::approx::Mode;
use gdifs_core::config::{load, LoadedSystem, RotationSpec};
use gdifs_core::dimension::{mauldin_williams_dimension, similarity_dimension};
use gdifs_core::logratio::log_ratio_check;
use gdifs_core::render::{render, write_atomic, RenderSpec};
use gdifs_core::verify::{verify, CertificateDocument, VerifyReport};
use gdifs_core::Error;

#[derive(Parser)]
#[command(name = "gdifs", version, about = "Graph-directed IFS of similarities: dimensions and SSC subsystems")]
struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "GDIFS_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the dimension of the attractor.
    Dim {
        #[arg(long)]
        config: PathBuf,
        /// Emit JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Extract a subsystem and write its certificate.
    Approximate(ApproximateArgs),
    /// Re-check a certificate against the system it claims to come from.
    Verify {
        #[arg(long)]
        certificate: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Render the attractor, optionally with a certified subsystem on top.
    Render(RenderArgs),
    /// Look for cycle pairs with log-ratio quotients far from small rationals.
    LogRatio {
        #[arg(long)]
        config_a: PathBuf,
        #[arg(long)]
        config_b: PathBuf,
        #[arg(long, default_value_t = 0)]
        vertex_a: usize,
        #[arg(long, default_value_t = 0)]
        vertex_b: usize,
        /// Longest cycle considered.
        #[arg(long, default_value_t = 6)]
        max_length: usize,
    },
}

#[derive(Args)]
struct ApproximateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 0)]
    vertex: usize,
    #[arg(long)]
    epsilon: f64,
    /// dense, uniform, exact or planar.
    #[arg(long, default_value = "dense")]
    mode: Mode,
    /// JSON rotation: angle, row-major matrix or {"axis": [..], "angle": a}.
    #[arg(long)]
    target_rotation: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Certificate path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    word_budget: Option<usize>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long, default_value_t = 512)]
    height: usize,
    #[arg(long, default_value_t = 100_000)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coordinate pair shown when d > 2, e.g. `0,2`.
    #[arg(long, default_value = "0,1", value_parser = parse_pair)]
    projection: (usize, usize),
    /// Draw this certificate's subsystem on top.
    #[arg(long)]
    certificate: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated indices")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::NotStronglyConnected) => 2,
        Some(Error::Precondition(_) | Error::Singleton(_)) => 3,
        Some(Error::Verification { .. }) => 4,
        _ => 1,
    }
}

fn load_system(path: &Path) -> anyhow::Result<LoadedSystem> {
    Ok(load(path)?)
}

fn read_certificate(path: &Path) -> anyhow::Result<CertificateDocument> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(CertificateDocument::parse(&text)?)
}

fn print_report(report: &VerifyReport) {
    for c in &report.checks {
        eprintln!("  {:<16} {}  {}", c.name, if c.passed { "ok  " } else { "FAIL" }, c.detail);
    }
}

fn cmd_dim(config: &Path, json: bool) -> anyhow::Result<()> {
    let system = load_system(config)?;
    let g = &system.gdifs;
    let result = if g.vertex_count() == 1 {
        similarity_dimension(&g.edges().iter().map(|e| e.map.ratio()).collect::<Vec<_>>())?
    } else {
        mauldin_williams_dimension(g)?
    };
    if json {
        println!("{}", serde_json::to_string_pretty(&result)?);
    } else {
        println!(
            "dimension {:.12}  bracket [{:.12}, {:.12}]  method {:?}",
            result.value, result.bracket.0, result.bracket.1, result.method
        );
    }
    Ok(())
}

fn cmd_approximate(args: &ApproximateArgs) -> anyhow::Result<()> {
    let system = load_system(&args.config)?;
    let d = system.gdifs.dim();
    let mut cfg = system.config.approx_config();
    if let Some(v) = args.max_depth {
        cfg.max_depth = v;
    }
    if let Some(v) = args.word_budget {
        cfg.word_budget = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    let target = match &args.target_rotation {
        Some(text) => Some(RotationSpec::parse(text)?.to_orthogonal(d)?),
        None => None,
    };
    let start = Instant::now();
    let (ssifs, cert) = args.mode.run(&system.gdifs, args.vertex, args.epsilon, target.as_ref(), &cfg)?;
    let extract = start.elapsed().as_secs_f64();
    let mut doc = CertificateDocument::new(&system, args.mode, &ssifs, &cert, BTreeMap::new());
    let start = Instant::now();
    let report = verify(&doc, &system);
    doc.timings = BTreeMap::from([("extract".into(), extract), ("verify".into(), start.elapsed().as_secs_f64())]);
    let text = doc.to_json();
    match &args.out {
        Some(p) => write_atomic(p, text.as_bytes()).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    eprintln!(
        "{} mode at vertex {}: {} maps, dimension {:.6} (reference {:.6}, ε = {}), density {}",
        args.mode.name(),
        doc.j,
        doc.ssifs.len(),
        doc.achieved_dimension.value,
        doc.reference_dimension.value,
        doc.epsilon,
        doc.group_report.density
    );
    print_report(&report);
    report.into_result()?;
    Ok(())
}

fn cmd_verify(certificate: &Path, config: &Path) -> anyhow::Result<()> {
    let system = load_system(config)?;
    let doc = read_certificate(certificate)?;
    let report = verify(&doc, &system);
    print_report(&report);
    report.into_result()?;
    println!("certificate verified");
    Ok(())
}

fn cmd_render(args: &RenderArgs) -> anyhow::Result<()> {
    let system = load_system(&args.config)?;
    let spec = RenderSpec {
        width: args.width,
        height: args.height,
        iterations: args.iterations,
        seed: args.seed,
        projection: args.projection,
    };
    let overlay = match &args.certificate {
        Some(p) => {
            let doc = read_certificate(p)?;
            Some((doc.j, doc.maps(system.gdifs.dim())?))
        }
        None => None,
    };
    let img = render(&system.gdifs, &spec, overlay.as_ref().map(|(j, m)| (*j, m.as_slice())))?;
    write_atomic(&args.out, &img.to_ppm()).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn cmd_log_ratio(a: &Path, b: &Path, ja: usize, jb: usize, max_length: usize) -> anyhow::Result<()> {
    let sa = load_system(a)?;
    let sb = load_system(b)?;
    let report = log_ratio_check(&sa.gdifs, ja, &sb.gdifs, jb, max_length)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    eprintln!(
        "{} of {} cycle pairs have log-ratio quotients far from rationals with denominator ≤ {} (indication only)",
        report.flagged.len(),
        report.pairs_scanned,
        gdifs_core::logratio::MAX_DENOMINATOR
    );
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    match &cli.command {
        Command::Dim { config, json } => cmd_dim(config, *json),
        Command::Approximate(args) => cmd_approximate(args),
        Command::Verify { certificate, config } => cmd_verify(certificate, config),
        Command::Render(args) => cmd_render(args),
        Command::LogRatio { config_a, config_b, vertex_a, vertex_b, max_length } => {
            cmd_log_ratio(config_a, config_b, *vertex_a, *vertex_b, *max_length)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
