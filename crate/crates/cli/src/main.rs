//! Command-line interface over the beatmotion toolkit.
//!
//! One command per invocation; every input and output is a file named
//! by a flag. Exit codes: 0 success, 1 usage error, 2 domain or
//! validation error, 3 numeric failure. Errors print a single JSON
//! line to stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use serde::Serialize;

use beatmotion::beat::{estimate_beat_distance, extract_motion_beats, nearest_beat_distance};
use beatmotion::diffusion::{
    cosine_schedule, sample, ConstantDenoiser, Constraint, Denoiser, IdentityDenoiser,
    OracleDenoiser, SamplerConfig,
};
use beatmotion::io::{
    emit_plot_data, load_beats, load_config, load_mask, load_motion, load_skeleton, save_beats,
    save_json, save_mask, save_motion, RunConfig,
};
use beatmotion::loss::{beat_loss, combine_kin, combine_total, LossReport};
use beatmotion::mask::{attention_mask, dilate_mask};
use beatmotion::metrics::{
    beat_alignment_score, beat_assignment_precision, keypose_distance, kinetic_diversity,
    physical_foot_contact, MetricReport,
};
use beatmotion::motion::{forward_kinematics, MotionSequence, Skeleton, POSE_DIM};
use beatmotion::synth::{
    periodic_beat_frames, sample_keyframes, synth_motion, SynthKind, SynthParams,
};

#[derive(Parser)]
#[command(
    name = "beatmotion",
    version,
    about = "Beat-synchronized dance motion toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Nearest-beat distances, from a beat file or estimated from motion
    BeatDistance(BeatDistanceArgs),
    /// Beat-aware dilation of a keyframe mask
    DilateMask(DilateMaskArgs),
    /// L x L attention mask from a keyframe mask and its dilation
    AttentionMask(DilateMaskArgs),
    /// Loss suite over a ground-truth/prediction pair
    Losses(LossesArgs),
    /// Evaluation metrics over motions and beat grids
    Metrics(MetricsArgs),
    /// Constrained diffusion sampling with a built-in test denoiser
    Sample(SampleArgs),
    /// Mean joint-speed curve with beat markers, as JSON and/or CSV
    PlotData(PlotDataArgs),
    /// Uniform random keyframe mask
    SampleKeyframes(SampleKeyframesArgs),
    /// Synthetic motion generation
    Synth(SynthArgs),
}

#[derive(Args)]
struct BeatDistanceArgs {
    /// Beat file with designated beats (ground-truth mode)
    #[arg(long)]
    beats: Option<PathBuf>,
    /// Motion file to run the kinematic estimator on
    #[arg(long)]
    motion: Option<PathBuf>,
    #[arg(long)]
    skeleton: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct DilateMaskArgs {
    #[arg(long)]
    mask: PathBuf,
    #[arg(long)]
    beats: PathBuf,
    /// Base dilation step s
    #[arg(long)]
    step: u32,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct LossesArgs {
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(long)]
    prediction: PathBuf,
    #[arg(long)]
    skeleton: Option<PathBuf>,
    /// Designated beats; enables the beat alignment loss
    #[arg(long)]
    beats: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Generated motion under evaluation
    #[arg(long)]
    motion: Option<PathBuf>,
    #[arg(long)]
    skeleton: Option<PathBuf>,
    /// Reference motion for the key pose distance
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Keyframe mask for the key pose distance
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Musical beats for the beat alignment score
    #[arg(long)]
    music_beats: Option<PathBuf>,
    /// Designated beats for the beat assignment score
    #[arg(long)]
    designated_beats: Option<PathBuf>,
    /// Two or more motions for kinetic diversity
    #[arg(long, num_args = 2..)]
    motion_set: Vec<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DenoiserKind {
    /// Returns the noisy input unchanged
    Identity,
    /// Returns a uniform fill value
    Constant,
    /// Returns a target motion file
    Oracle,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    length: usize,
    #[arg(long)]
    fps: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    guidance_scale: Option<f64>,
    #[arg(long, value_enum)]
    denoiser: DenoiserKind,
    /// Target motion for the oracle denoiser
    #[arg(long)]
    target: Option<PathBuf>,
    /// Fill value for the constant denoiser
    #[arg(long)]
    fill: Option<f64>,
    /// Reference motion for keyframe constraint injection
    #[arg(long)]
    constraint_motion: Option<PathBuf>,
    /// Keyframe mask for constraint injection
    #[arg(long)]
    constraint_mask: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct PlotDataArgs {
    #[arg(long)]
    motion: PathBuf,
    #[arg(long)]
    skeleton: Option<PathBuf>,
    #[arg(long)]
    beats: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    output_json: Option<PathBuf>,
    #[arg(long)]
    output_csv: Option<PathBuf>,
}

#[derive(Args)]
struct SampleKeyframesArgs {
    #[arg(long)]
    length: usize,
    /// Fraction of frames to mark, in (0, 1]
    #[arg(long)]
    ratio: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthKindArg {
    Static,
    Linear,
    Periodic,
}

impl From<SynthKindArg> for SynthKind {
    fn from(kind: SynthKindArg) -> Self {
        match kind {
            SynthKindArg::Static => SynthKind::Static,
            SynthKindArg::Linear => SynthKind::Linear,
            SynthKindArg::Periodic => SynthKind::Periodic,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: SynthKindArg,
    #[arg(long)]
    length: usize,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Root speed for the linear kind, m/s
    #[arg(long)]
    speed: Option<f64>,
    /// Frames between speed minima for the periodic kind
    #[arg(long)]
    period: Option<usize>,
    #[arg(long)]
    base_speed: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    output: PathBuf,
    /// Also write the beat grid the motion was constructed to carry
    #[arg(long)]
    beats_output: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Core(beatmotion::Error),
}

impl From<beatmotion::Error> for CliError {
    fn from(e: beatmotion::Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            report_error("usage", &err.to_string());
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            report_error("usage", &message);
            ExitCode::from(1)
        }
        Err(CliError::Core(err)) => {
            let kind = if err.is_numeric() {
                "numeric"
            } else {
                "domain"
            };
            report_error(kind, &err.to_string());
            ExitCode::from(if err.is_numeric() { 3 } else { 2 })
        }
    }
}

fn report_error(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{line}");
}

fn load_config_or_default(path: &Option<PathBuf>) -> CliResult<RunConfig> {
    match path {
        Some(p) => Ok(load_config(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn load_skeleton_or_default(path: &Option<PathBuf>) -> CliResult<Skeleton> {
    match path {
        Some(p) => Ok(load_skeleton(p)?),
        None => Ok(Skeleton::smpl_default()),
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::BeatDistance(args) => beat_distance_cmd(args),
        Command::DilateMask(args) => dilate_mask_cmd(args, false),
        Command::AttentionMask(args) => dilate_mask_cmd(args, true),
        Command::Losses(args) => losses_cmd(args),
        Command::Metrics(args) => metrics_cmd(args),
        Command::Sample(args) => sample_cmd(args),
        Command::PlotData(args) => plot_data_cmd(args),
        Command::SampleKeyframes(args) => sample_keyframes_cmd(args),
        Command::Synth(args) => synth_cmd(args),
    }
}

#[derive(Serialize)]
struct BeatDistanceOutput {
    length: usize,
    values: Vec<usize>,
    no_beats: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    motion_beat_frames: Option<Vec<usize>>,
}

fn beat_distance_cmd(args: BeatDistanceArgs) -> CliResult<()> {
    let output = match (&args.beats, &args.motion) {
        (Some(beats), None) => {
            let (grid, _) = load_beats(beats)?;
            let distances = nearest_beat_distance(&grid)?;
            BeatDistanceOutput {
                length: grid.length(),
                values: distances.values().to_vec(),
                no_beats: false,
                motion_beat_frames: None,
            }
        }
        (None, Some(motion)) => {
            let config = load_config_or_default(&args.config)?;
            let skeleton = load_skeleton_or_default(&args.skeleton)?;
            let seq = load_motion(motion)?;
            let estimate = estimate_beat_distance(&seq, &skeleton, &config.beat_extract)?;
            BeatDistanceOutput {
                length: seq.len(),
                values: estimate.distances.values().to_vec(),
                no_beats: estimate.no_beats,
                motion_beat_frames: Some(estimate.motion_beats.beat_frames().to_vec()),
            }
        }
        _ => {
            return Err(usage(
                "beat-distance needs exactly one of --beats or --motion",
            ))
        }
    };
    save_json(&args.output, &output)?;
    Ok(())
}

fn dilate_mask_cmd(args: DilateMaskArgs, emit_attention: bool) -> CliResult<()> {
    let mask = load_mask(&args.mask)?;
    let (grid, _) = load_beats(&args.beats)?;
    let dilated = dilate_mask(&mask, &grid, args.step)?;
    if emit_attention {
        let attn = attention_mask(&mask, &dilated)?;
        let rows: Vec<Vec<u8>> = attn.rows().map(|r| r.to_vec()).collect();
        save_json(&args.output, &rows)?;
    } else {
        save_json(&args.output, &dilated.values().to_vec())?;
    }
    Ok(())
}

#[derive(Serialize)]
struct LossOutput {
    #[serde(flatten)]
    report: LossReport,
    /// Set when the kinematic estimator found no motion beats in the
    /// prediction; the beat loss then used the sentinel distances.
    #[serde(skip_serializing_if = "Option::is_none")]
    beat_estimate_degenerate: Option<bool>,
}

fn losses_cmd(args: LossesArgs) -> CliResult<()> {
    let config = load_config_or_default(&args.config)?;
    let skeleton = load_skeleton_or_default(&args.skeleton)?;
    let ground_truth = load_motion(&args.ground_truth)?;
    let prediction = load_motion(&args.prediction)?;
    let weights = config.loss;

    let simple = beatmotion::loss::simple_loss(&ground_truth, &prediction)?;
    let joint = beatmotion::loss::joint_loss(&ground_truth, &prediction, &skeleton)?;
    let vel = beatmotion::loss::vel_loss(&ground_truth, &prediction, &skeleton)?;
    let contact = beatmotion::loss::contact_loss(&prediction, &skeleton)?;
    let acc = beatmotion::loss::acc_loss(&ground_truth, &prediction, &skeleton)?;
    let kin = combine_kin(joint, vel, contact, acc, &weights);

    let (beat, degenerate) = match &args.beats {
        Some(path) => {
            let (grid, _) = load_beats(path)?;
            let b = nearest_beat_distance(&grid)?;
            let estimate = estimate_beat_distance(&prediction, &skeleton, &config.beat_extract)?;
            let b_hat: Vec<f64> = estimate
                .distances
                .values()
                .iter()
                .map(|&v| v as f64)
                .collect();
            let value = beat_loss(&b, &b_hat, &grid, &weights)?;
            (value, Some(estimate.no_beats))
        }
        None => (0.0, None),
    };

    let report = LossReport {
        simple,
        joint,
        vel,
        contact,
        acc,
        kin,
        beat,
        total: combine_total(simple, kin, beat, &weights),
        weights,
    };
    save_json(
        &args.output,
        &LossOutput {
            report,
            beat_estimate_degenerate: degenerate,
        },
    )?;
    Ok(())
}

fn metrics_cmd(args: MetricsArgs) -> CliResult<()> {
    let config = load_config_or_default(&args.config)?;
    let skeleton = load_skeleton_or_default(&args.skeleton)?;
    let mut report = MetricReport::empty(config.metrics);

    let motion = args.motion.as_deref().map(load_motion).transpose()?;
    let positions = motion
        .as_ref()
        .map(|seq| forward_kinematics(seq, &skeleton))
        .transpose()?;

    // motion beats are shared by the alignment and assignment scores
    let motion_beats = match (&motion, &positions) {
        (Some(seq), Some(pos)) => {
            let speed = beatmotion::motion::mean_joint_speed(pos, seq.fps())?;
            Some(extract_motion_beats(
                &speed,
                config.beat_extract.min_prominence,
                config.beat_extract.smooth_radius,
            )?)
        }
        _ => None,
    };

    if let (Some(pos), Some(seq)) = (&positions, &motion) {
        report.pfc = Some(physical_foot_contact(pos, seq.fps())?);
    }

    if let Some(path) = &args.music_beats {
        let beats = motion_beats
            .as_ref()
            .ok_or_else(|| usage("--music-beats needs --motion for motion beats"))?;
        let (music, _) = load_beats(path)?;
        report.bas = Some(beat_alignment_score(beats, &music, &config.metrics)?);
    }

    if let Some(path) = &args.designated_beats {
        let beats = motion_beats
            .as_ref()
            .ok_or_else(|| usage("--designated-beats needs --motion for motion beats"))?;
        let (designated, _) = load_beats(path)?;
        let score = beat_assignment_precision(beats, &designated, &config.metrics);
        report.bap = Some(score.value);
        report.bap_degenerate = Some(score.degenerate);
    }

    if let Some(reference) = &args.reference {
        let mask_path = args
            .mask
            .as_ref()
            .ok_or_else(|| usage("--reference needs --mask for the keyframes"))?;
        let gen_pos = positions
            .as_ref()
            .ok_or_else(|| usage("--reference needs --motion"))?;
        let ref_seq = load_motion(reference)?;
        let ref_pos = forward_kinematics(&ref_seq, &skeleton)?;
        let mask = load_mask(mask_path)?;
        report.kpd = Some(keypose_distance(gen_pos, &ref_pos, &mask)?);
    }

    if !args.motion_set.is_empty() {
        let seqs: Vec<MotionSequence> = args
            .motion_set
            .iter()
            .map(|p| load_motion(p))
            .collect::<Result<_, _>>()?;
        report.div_k = Some(kinetic_diversity(&seqs, &skeleton)?);
    }

    if report.bas.is_none()
        && report.pfc.is_none()
        && report.kpd.is_none()
        && report.bap.is_none()
        && report.div_k.is_none()
    {
        return Err(usage(
            "metrics needs inputs for at least one metric; see --help",
        ));
    }

    save_json(&args.output, &report)?;
    Ok(())
}

fn sample_cmd(args: SampleArgs) -> CliResult<()> {
    let config = load_config_or_default(&args.config)?;
    let steps = args.steps.unwrap_or(config.sampler.steps);
    let seed = args.seed.unwrap_or(config.sampler.seed);
    let guidance_scale = args.guidance_scale.unwrap_or(config.sampler.guidance_scale);
    let fps = args.fps.unwrap_or(30.0);

    let denoiser: Box<dyn Denoiser> = match args.denoiser {
        DenoiserKind::Identity => Box::new(IdentityDenoiser),
        DenoiserKind::Constant => {
            let fill = args.fill.unwrap_or(0.0);
            Box::new(ConstantDenoiser::new(Array2::from_elem(
                (args.length, POSE_DIM),
                fill,
            )))
        }
        DenoiserKind::Oracle => {
            let path = args
                .target
                .as_ref()
                .ok_or_else(|| usage("--denoiser oracle needs --target"))?;
            let target = load_motion(path)?;
            Box::new(OracleDenoiser::new(target.frames().clone()))
        }
    };

    let constraint = match (&args.constraint_motion, &args.constraint_mask) {
        (Some(motion), Some(mask)) => Some(Constraint {
            reference: load_motion(motion)?.frames().clone(),
            mask: load_mask(mask)?,
        }),
        (None, None) => None,
        _ => {
            return Err(usage(
                "constraint needs both --constraint-motion and --constraint-mask",
            ))
        }
    };

    let sched = cosine_schedule(steps)?;
    let sampler_config = SamplerConfig {
        guidance_scale,
        seed,
        fps,
        constraint,
    };
    let sequence = sample(denoiser.as_ref(), &sampler_config, &sched, args.length)?;
    save_motion(&args.output, &sequence)?;
    Ok(())
}

fn plot_data_cmd(args: PlotDataArgs) -> CliResult<()> {
    if args.output_json.is_none() && args.output_csv.is_none() {
        return Err(usage("plot-data needs --output-json and/or --output-csv"));
    }
    let config = load_config_or_default(&args.config)?;
    let skeleton = load_skeleton_or_default(&args.skeleton)?;
    let seq = load_motion(&args.motion)?;
    let (beats, _) = load_beats(&args.beats)?;
    let data = emit_plot_data(&seq, &skeleton, &beats, &config.beat_extract)?;
    if let Some(path) = &args.output_json {
        save_json(path, &data)?;
    }
    if let Some(path) = &args.output_csv {
        let csv = data.to_csv()?;
        std::fs::write(path, csv).map_err(beatmotion::Error::from)?;
    }
    Ok(())
}

fn sample_keyframes_cmd(args: SampleKeyframesArgs) -> CliResult<()> {
    let mask = sample_keyframes(args.length, args.ratio, args.seed)?;
    save_mask(&args.output, &mask)?;
    Ok(())
}

fn synth_cmd(args: SynthArgs) -> CliResult<()> {
    let defaults = SynthParams::default();
    let params = SynthParams {
        speed: args.speed.unwrap_or(defaults.speed),
        period: args.period.unwrap_or(defaults.period),
        base_speed: args.base_speed.unwrap_or(defaults.base_speed),
        amplitude: args.amplitude.unwrap_or(defaults.amplitude),
    };
    let kind: SynthKind = args.kind.into();
    let seq = synth_motion(kind, args.length, args.fps, &params, args.seed)?;
    save_motion(&args.output, &seq)?;

    if let Some(path) = &args.beats_output {
        let frames = match kind {
            SynthKind::Periodic => periodic_beat_frames(args.length, params.period),
            _ => Vec::new(),
        };
        let grid = beatmotion::beat::BeatGrid::new(args.length, frames)?;
        save_beats(path, &grid, args.fps)?;
    }
    Ok(())
}
