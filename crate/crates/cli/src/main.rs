//! `autodirector` command-line interface.
//!
//! Exit status: 0 on success, 1 for usage errors, 2 for data errors. The
//! last line written to stderr on failure is a JSON object with `error`
//! (`usage` or `data`) and `message`.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use autodirector::evaluation::DEFAULT_F1_RATE;
use autodirector::projection::{Lens, Sampling};
use autodirector::reid::{DEFAULT_REPRESENTATIVES, DEFAULT_UNCERTAINTY_MARGIN};
use autodirector::sim::Scenario;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "autodirector", version, about = "Automated camera operator and director")]
struct Cli {
    /// Run every stage on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate synthetic detections and ground truth.
    Simulate(SimulateArgs),
    /// Build per-stream and group traces from a manifest.
    Track(TrackArgs),
    /// Select shots and write rendering instructions and cuts.
    Direct(DirectArgs),
    /// Cluster tracks into identities and direct each one.
    Reid(ReidArgs),
    /// Render instructions into output images.
    Project(ProjectArgs),
    /// Compare two cut arrays.
    Evaluate(EvaluateArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_parser = parse_scenario)]
    scenario: Scenario,
    #[arg(long, default_value_t = 300)]
    frames: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Detection noise in pixels.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Fraction of detections dropped.
    #[arg(long, default_value_t = 0.0)]
    drop: f64,
    #[arg(long, default_value_t = 1920)]
    width: u32,
    #[arg(long, default_value_t = 1080)]
    height: u32,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[arg(long, default_value_t = 0)]
    stream: usize,
    /// Output directory for `detections_<stream>.txt` and `truth_<stream>.txt`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrackArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; defaults to the manifest's.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DirectArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Trace file from `track`; tracking runs first when omitted.
    #[arg(long)]
    traces: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the selection seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the minimum shot length in seconds.
    #[arg(long)]
    min_cut_length: Option<f64>,
    /// Use randomized segments instead of the best viewpoint.
    #[arg(long)]
    segmented: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ProviderKind {
    /// Identity-coded features from the manifest's ground-truth files.
    Synthetic,
    /// Color histograms over the manifest's frame images.
    ColorHistogram,
}

#[derive(Args, Debug)]
struct ReidArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Precomputed `track_id d v1 .. vd` feature file.
    #[arg(long, conflicts_with = "provider")]
    features: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "features")]
    provider: Option<ProviderKind>,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_UNCERTAINTY_MARGIN)]
    margin: f64,
    #[arg(long, default_value_t = DEFAULT_REPRESENTATIVES)]
    representatives: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[arg(long)]
    instructions: PathBuf,
    /// Frame directory of each stream, in stream order.
    #[arg(long = "source", required = true)]
    sources: Vec<PathBuf>,
    /// Lens of each stream; a single value applies to all.
    #[arg(long = "lens", value_parser = parse_lens, default_value = "flat")]
    lenses: Vec<Lens>,
    #[arg(long)]
    out: PathBuf,
    /// Output size for equirect streams.
    #[arg(long, default_value = "640x360", value_parser = parse_size)]
    size: (u32, u32),
    #[arg(long, value_enum, default_value_t = SamplingArg::Bilinear)]
    sampling: SamplingArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SamplingArg {
    Bilinear,
    Nearest,
}

impl From<SamplingArg> for Sampling {
    fn from(s: SamplingArg) -> Self {
        match s {
            SamplingArg::Bilinear => Sampling::Bilinear,
            SamplingArg::Nearest => Sampling::Nearest,
        }
    }
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Reference cut array.
    a: PathBuf,
    /// Compared cut array.
    b: PathBuf,
    /// F1 sampling rate in Hz.
    #[arg(long, default_value_t = DEFAULT_F1_RATE)]
    rate: f64,
    /// Count temporal overlap regardless of angle.
    #[arg(long)]
    raw_overlap: bool,
    /// Print JSON instead of the text tables.
    #[arg(long)]
    json: bool,
    /// Write the report to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: autodirector::Error| e.to_string())
}

fn parse_lens(s: &str) -> Result<Lens, String> {
    s.parse().map_err(|e: autodirector::Error| e.to_string())
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once('x').ok_or("expected WIDTHxHEIGHT")?;
    let w: u32 = w.parse().map_err(|_| "bad width")?;
    let h: u32 = h.parse().map_err(|_| "bad height")?;
    if w == 0 || h == 0 {
        return Err("size must be positive".into());
    }
    Ok((w, h))
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            let msg = e.to_string();
            eprintln!("{}", error_line("usage", msg.lines().next().unwrap_or_default()));
            return ExitCode::from(1);
        }
    };
    let exec = if cli.sequential { autodirector::Exec::Sequential } else { autodirector::Exec::Parallel };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Track(a) => commands::track(a, exec),
        Command::Direct(a) => commands::direct(a, exec),
        Command::Reid(a) => commands::reid(a, exec),
        Command::Project(a) => commands::project(a, exec),
        Command::Evaluate(a) => commands::evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            eprintln!("autodirector: {msg}");
            eprintln!("{}", error_line("data", &msg));
            ExitCode::from(2)
        }
    }
}
