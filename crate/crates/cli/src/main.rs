use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use stereorig::alignment::compute_base_model_with_ipd;
use stereorig::fixtures::builtin_registry;
use stereorig::guidance::{
    check_alignment, grid_overlay_with_pitch, instructions, parse_readings, DEFAULT_GRID_PITCH_MM,
    DEFAULT_GYRO_TOLERANCE_DPS, DEFAULT_MAG_TOLERANCE_UT,
};
use stereorig::merge::{merge_streams, MergeMode};
use stereorig::sync::{pair, run_capture_sync, run_frame_sync, safe_capture_delay, LinkParams, SimSetup};
use stereorig::template::{
    mirror_rig_layout_with, render_svg, three_phone_layout_with, two_phone_layout_with, MirrorOptions,
    ThreePhoneOptions, TwoPhoneOptions, DEFAULT_CARDBOARD_MM, DEFAULT_VELCRO_MM,
};
use stereorig::{Axis, BaseModel, Exec, Ipd, LayoutConfig, Orientation, Registry, Rotation, Stacking};

/// `println!` that reports a closed stdout instead of panicking.
macro_rules! outln {
    ($($arg:tt)*) => {
        writeln!(io::stdout(), $($arg)*)?
    };
}

#[derive(Parser, Debug)]
#[command(name = "stereorig", version, about = "Build and drive a two-phone stereo capture rig")]
struct Cli {
    /// Device registry JSON; the bundled fixture registry when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    specs: Option<PathBuf>,
    /// Target camera separation, mm.
    #[arg(long, global = true, default_value_t = Ipd::DEFAULT_MM)]
    ipd: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a printable holder template as SVG.
    GenTemplate(GenTemplate),
    /// Solve the placement of the second device and print it as JSON.
    BaseModel(BaseModelArgs),
    /// Print the on-screen alignment grid for a depth-stacked pair.
    Grid(GridArgs),
    /// Judge alignment from paired magnetometer/gyroscope readings.
    AlignCheck(AlignCheck),
    /// Simulate pairing and capture start over a lossy link.
    SimulateSync(SimulateSync),
    /// Pair two frame streams by timestamp and compose stereo frames.
    Merge(MergeArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TemplateMode {
    Two,
    Three,
    Mirror,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisArg {
    Horizontal,
    Vertical,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StackArg {
    Coplanar,
    DepthStacked,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OrientationArg {
    Portrait,
    Landscape,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Sbs,
    Anaglyph,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Axis {
        match a {
            AxisArg::Horizontal => Axis::Horizontal,
            AxisArg::Vertical => Axis::Vertical,
        }
    }
}

impl From<StackArg> for Stacking {
    fn from(s: StackArg) -> Stacking {
        match s {
            StackArg::Coplanar => Stacking::Coplanar,
            StackArg::DepthStacked => Stacking::DepthStacked,
        }
    }
}

impl From<OrientationArg> for Orientation {
    fn from(o: OrientationArg) -> Orientation {
        match o {
            OrientationArg::Portrait => Orientation::Portrait,
            OrientationArg::Landscape => Orientation::Landscape,
        }
    }
}

fn parse_rotation(s: &str) -> Result<Rotation, String> {
    s.parse::<u32>()
        .ok()
        .and_then(Rotation::from_degrees)
        .ok_or_else(|| format!("rotation must be 0, 90, 180 or 270, got `{s}`"))
}

#[derive(Args, Debug)]
struct GenTemplate {
    #[arg(long, value_enum)]
    mode: TemplateMode,
    #[arg(long)]
    device: String,
    /// Velcro strip length, mm.
    #[arg(long, default_value_t = DEFAULT_VELCRO_MM)]
    velcro: f64,
    /// Cardboard thickness, mm.
    #[arg(long, default_value_t = DEFAULT_CARDBOARD_MM)]
    cardboard: f64,
    #[arg(long, default_value_t = TwoPhoneOptions::default().strap_width)]
    strap_width: f64,
    /// Mirror rig cradle corner radius, mm.
    #[arg(long, default_value_t = 0.0)]
    fillet: f64,
    /// Two-phone rig: direction the second phone is offset in.
    #[arg(long, value_enum, default_value_t = AxisArg::Vertical)]
    axis: AxisArg,
    /// Two-phone rig: rotation of the second phone, degrees clockwise.
    #[arg(long, value_parser = parse_rotation, default_value = "180")]
    rotation: Rotation,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct Placement {
    #[arg(long)]
    a: String,
    #[arg(long)]
    b: String,
    #[arg(long, value_enum)]
    layout: AxisArg,
    #[arg(long, value_enum)]
    stack: StackArg,
    #[arg(long, value_enum, default_value_t = OrientationArg::Portrait)]
    orientation: OrientationArg,
    /// Fallback rotation for device B, degrees clockwise.
    #[arg(long, value_parser = parse_rotation, default_value = "0")]
    rotation: Rotation,
}

#[derive(Args, Debug)]
struct BaseModelArgs {
    #[command(flatten)]
    placement: Placement,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[command(flatten)]
    placement: Placement,
    /// Grid line spacing on device A's face, mm.
    #[arg(long, default_value_t = DEFAULT_GRID_PITCH_MM)]
    pitch: f64,
    /// Also write a debug rendering of the overlay.
    #[arg(long, value_name = "FILE")]
    svg: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AlignCheck {
    #[arg(long)]
    readings: PathBuf,
    /// Magnetometer tolerance per axis, µT.
    #[arg(long, default_value_t = DEFAULT_MAG_TOLERANCE_UT)]
    mag_tol: f64,
    /// Gyroscope tolerance per axis, deg/s.
    #[arg(long, default_value_t = DEFAULT_GYRO_TOLERANCE_DPS)]
    gyro_tol: f64,
}

#[derive(Args, Debug)]
struct SimulateSync {
    #[arg(long, default_value = "J7-fixture")]
    a: String,
    #[arg(long, default_value = "S8-fixture")]
    b: String,
    /// One-way base latency, ms.
    #[arg(long)]
    latency: f64,
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    /// Per-message loss probability.
    #[arg(long, default_value_t = 0.0)]
    loss: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Capture start delay proposed by the initiator, ms. Defaults to a
    /// delay that always reaches the responder in time.
    #[arg(long)]
    capture: Option<f64>,
    /// Also run a frame-synchronous capture of this many ms.
    #[arg(long)]
    duration: Option<u64>,
    /// Bound on each device's clock offset, ms.
    #[arg(long, default_value_t = 0.0)]
    clock_error: f64,
    /// Transcript file; printed to stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MergeArgs {
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    /// Maximum timestamp difference of a pair, ms.
    #[arg(long)]
    tol: f64,
    /// Output directory.
    #[arg(short, long)]
    output: PathBuf,
}

fn load_registry(specs: Option<&Path>) -> Result<Registry> {
    match specs {
        None => Ok(builtin_registry()),
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Registry::from_json(&text).with_context(|| format!("loading {}", path.display()))
        }
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            write!(io::stdout(), "{text}")?;
            if !text.ends_with('\n') {
                outln!();
            }
            Ok(())
        }
    }
}

fn solve(registry: &Registry, p: &Placement, ipd: Ipd) -> Result<BaseModel> {
    let a = registry.lookup(&p.a)?;
    let b = registry.lookup(&p.b)?;
    let layout = LayoutConfig::new(p.layout.into(), p.stack.into())
        .with_orientation(p.orientation.into())
        .with_rotation(p.rotation);
    Ok(compute_base_model_with_ipd(a, b, layout, ipd)?)
}

fn gen_template(registry: &Registry, args: &GenTemplate, ipd: Ipd) -> Result<ExitCode> {
    let spec = registry.lookup(&args.device)?;
    let layout = match args.mode {
        TemplateMode::Two => {
            let config = LayoutConfig::new(args.axis.into(), Stacking::Coplanar).with_rotation(args.rotation);
            let base = compute_base_model_with_ipd(spec, spec, config, ipd)?;
            let opts = TwoPhoneOptions {
                velcro: args.velcro,
                cardboard: args.cardboard,
                strap_width: args.strap_width,
                ..TwoPhoneOptions::default()
            };
            two_phone_layout_with(spec, &base, &opts)?
        }
        TemplateMode::Three => {
            three_phone_layout_with(spec, &ThreePhoneOptions { ipd, ..ThreePhoneOptions::default() })?
        }
        TemplateMode::Mirror => {
            let opts = MirrorOptions { ipd, fillet_radius: args.fillet, ..MirrorOptions::default() };
            mirror_rig_layout_with(spec, &opts)?
        }
    };
    let svg = render_svg(&layout)?;
    emit(&svg, Some(&args.output))?;
    eprintln!("wrote {} ({} pieces)", args.output.display(), layout.pieces.len());
    Ok(ExitCode::SUCCESS)
}

fn grid(registry: &Registry, args: &GridArgs, ipd: Ipd) -> Result<ExitCode> {
    let base = solve(registry, &args.placement, ipd)?;
    let screen = registry.lookup(&args.placement.a)?;
    let overlay = grid_overlay_with_pitch(&base, screen, args.pitch)?;
    if let Some(path) = &args.svg {
        emit(&overlay.to_svg(), Some(path))?;
    }
    emit(&serde_json::to_string_pretty(&overlay)?, args.output.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn align_check(args: &AlignCheck) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.readings).with_context(|| format!("reading {}", args.readings.display()))?;
    let pairs = parse_readings(&text)?;
    if pairs.is_empty() {
        bail!("{} holds no readings", args.readings.display());
    }
    let mut last = None;
    for (i, p) in pairs.iter().enumerate() {
        let status = check_alignment(&p.a, &p.b, args.mag_tol, args.gyro_tol);
        let [dx, dy, dz] = status.axis_deltas;
        outln!(
            "{i} t={} {} delta=({dx:.2}, {dy:.2}, {dz:.2})",
            p.b.timestamp_ms,
            if status.aligned { "aligned" } else { "misaligned" }
        );
        last = Some(status);
    }
    let last = last.expect("non-empty");
    for line in instructions(&last) {
        outln!("{line}");
    }
    Ok(if last.aligned { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn simulate_sync(registry: &Registry, args: &SimulateSync) -> Result<ExitCode> {
    let a = registry.lookup(&args.a)?;
    let b = registry.lookup(&args.b)?;
    let link = LinkParams::new(args.latency, args.jitter, args.loss)?;
    if !(args.clock_error.is_finite() && args.clock_error >= 0.0) {
        bail!("clock error must be finite and non-negative, got {}", args.clock_error);
    }
    let setup = SimSetup::new(link, args.seed).with_clock_error(args.clock_error);
    let sim = pair(a, b, setup);
    let delay = args.capture.unwrap_or_else(|| safe_capture_delay(&setup));

    let (transcript, summary, ok) = match args.duration {
        None => match run_capture_sync(&sim, delay) {
            Ok(c) => {
                let summary = format!("capture start A={:.3} B={:.3}\nskew {:.3} ms", c.start_a, c.start_b, c.skew);
                (c.simulation.transcript().to_text(), summary, true)
            }
            Err(f) => (f.simulation.transcript().to_text(), f.error.to_string(), false),
        },
        Some(duration) => match run_frame_sync(&sim, duration, &[]) {
            Ok(fs) => {
                let pairs = fs.pairs();
                let skew = pairs.iter().map(|(_, ta, tb)| (ta.global_time - tb.global_time).abs()).fold(0.0, f64::max);
                let summary = format!("frames {} at {} fps\nskew {skew:.3} ms", pairs.len(), fs.frame_rate);
                (fs.simulation.transcript().to_text(), summary, true)
            }
            Err(f) => (f.simulation.transcript().to_text(), f.error.to_string(), false),
        },
    };
    emit(&transcript, args.output.as_deref())?;
    if let Some(profile) = sim.agreed_profile() {
        outln!("profile {}", serde_json::to_string(profile)?);
    }
    if ok {
        outln!("{summary}");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{summary}");
        Ok(ExitCode::FAILURE)
    }
}

fn merge(args: &MergeArgs) -> Result<ExitCode> {
    let mode = match args.mode {
        ModeArg::Sbs => MergeMode::Sbs,
        ModeArg::Anaglyph => MergeMode::Anaglyph,
    };
    let report = merge_streams(&args.left, &args.right, mode, args.tol, &args.output, Exec::default())?;
    outln!(
        "paired {} frames, dropped {} left and {} right; manifest {}",
        report.pairs,
        report.dropped_left,
        report.dropped_right,
        report.manifest.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let ipd = Ipd::new(cli.ipd)?;
    let registry = load_registry(cli.specs.as_deref())?;
    match &cli.command {
        Command::GenTemplate(args) => gen_template(&registry, args, ipd),
        Command::BaseModel(args) => {
            let base = solve(&registry, &args.placement, ipd)?;
            emit(&base.to_json(), args.output.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Grid(args) => grid(&registry, args, ipd),
        Command::AlignCheck(args) => align_check(args),
        Command::SimulateSync(args) => simulate_sync(&registry, args),
        Command::Merge(args) => merge(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
