//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::builder::TypedValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureParams, QuadratureConstant};
use crate::io::{list_frames, read_pgm, write_pfm, write_pgm16, write_pgm8, write_pgm_display};
use crate::kernels::{kernel_derivative_samples, CascadeKernel};
use crate::normalization::{NormMode, NormalizationSpec};
use crate::pipeline::{write_manifest, Pipeline, PipelineConfig, TemporalDistribution};
use crate::scales::{self, ScaleDistribution};
use crate::spatial::SmoothingScheme;
use crate::synth::{self, SynthKind, SynthParams};
use crate::tables::{self, TableId};

#[derive(Debug, Parser)]
#[command(name = "timecausal", version, about = "Time-causal and time-recursive spatio-temporal scale-space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print one of the numeric tables as CSV.
    Tables {
        /// T1, T2, T3, T4, T5, cumulants or koenderink.
        which: String,
    },
    /// Sample a temporal kernel or one of its derivatives as CSV.
    Kernel(KernelArgs),
    /// Compute features over a directory of PGM frames.
    Process(Box<ProcessArgs>),
    /// Write a synthetic frame sequence with its ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistArg {
    Uniform,
    Log,
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Var,
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Pgm,
    Pfm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpatialArg {
    Separable,
    GammaThird,
}

/// Temporal scale distribution flags shared by `kernel` and `process`.
#[derive(Debug, Clone, Args)]
pub struct DistArgs {
    #[arg(long, value_enum, default_value = "log")]
    pub dist: DistArg,
    /// Distribution parameter of the logarithmic and limit cascades.
    #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
    pub c: f64,
    /// Number of stages.
    #[arg(long = "K", default_value_t = 7)]
    pub stages: usize,
    /// Residual variance at which the limit cascade is cut.
    #[arg(long = "limit-eps", default_value_t = 1e-10)]
    pub limit_eps: f64,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    /// Temporal variance.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    /// Derivative order.
    #[arg(long, default_value_t = 0)]
    pub n: usize,
    /// Sampling step; defaults to sqrt(tau)/256.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Sampling horizon; defaults to the mean plus 12 sqrt(tau).
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ProcessArgs {
    /// Directory of PGM frames, processed in lexicographic order.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory for the feature maps and manifest.txt.
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 25.0)]
    pub fps: f64,
    /// Temporal scales in seconds.
    #[arg(long = "tau-seconds", value_delimiter = ',', default_value = "0.2")]
    pub tau_seconds: Vec<f64>,
    /// Spatial scales in degrees, or pixels when --ppd is 1.
    #[arg(long = "sigma-x", value_delimiter = ',', default_value = "2")]
    pub sigma_x: Vec<f64>,
    /// Pixels per degree.
    #[arg(long, default_value_t = 1.0)]
    pub ppd: f64,
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, value_enum, default_value = "var")]
    pub norm: NormArg,
    #[arg(long = "gamma-s", default_value_t = 1.0)]
    pub gamma_s: f64,
    #[arg(long = "gamma-t", default_value_t = 1.0)]
    pub gamma_t: f64,
    /// Comma separated feature names.
    #[arg(long, value_delimiter = ',', default_value = "q2")]
    pub features: Vec<String>,
    /// Blending constant: 2/3, e/4 or a number.
    #[arg(long = "C", default_value = "2/3")]
    pub quadrature: String,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Image velocity in pixels per frame, as vx,vy.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.0, 0.0])]
    pub velocity: Vec<f64>,
    /// Process log(1 + pixel) instead of raw values.
    #[arg(long = "log-intensity")]
    pub log_intensity: bool,
    #[arg(long, value_enum, default_value = "pfm")]
    pub format: FormatArg,
    #[arg(long, value_enum, default_value = "separable")]
    pub spatial: SpatialArg,
    /// Continue from a state file written by an earlier run.
    #[arg(long = "load-state")]
    pub load_state: Option<PathBuf>,
    /// Write the recursive state after the last frame.
    #[arg(long = "save-state")]
    pub save_state: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// blob, flicker, translate or step.
    #[arg(value_parser = parse_synth_kind)]
    pub kind: SynthKind,
    /// Directory for the frames and truth.txt.
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    #[arg(long, default_value_t = 40)]
    pub frames: usize,
    /// Blob standard deviation or half side of the step square, in pixels.
    #[arg(long, default_value_t = 3.0)]
    pub size: f64,
    #[arg(long, default_value_t = 20.0)]
    pub background: f64,
    #[arg(long, default_value_t = 200.0)]
    pub amplitude: f64,
    /// Velocity of the translating blob in pixels per frame, as vx,vy.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [0.5, 0.0])]
    pub velocity: Vec<f64>,
    /// Flicker period in frames.
    #[arg(long, default_value_t = 16.0)]
    pub period: f64,
    /// First frame of the step.
    #[arg(long, default_value_t = 10)]
    pub onset: usize,
    /// Bits per sample of the written frames.
    #[arg(long, default_value_t = 8, value_parser = clap::builder::PossibleValuesParser::new(["8", "16"]).map(|s| s.parse::<u8>().unwrap()))]
    pub bits: u8,
}

fn parse_synth_kind(s: &str) -> std::result::Result<SynthKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

impl DistArgs {
    fn temporal(&self) -> TemporalDistribution {
        match self.dist {
            DistArg::Uniform => TemporalDistribution::Uniform,
            DistArg::Log => TemporalDistribution::Logarithmic { c: self.c },
            DistArg::Limit => TemporalDistribution::Limit { c: self.c, eps: self.limit_eps },
        }
    }

    fn distribution(&self, tau: f64) -> Result<ScaleDistribution> {
        match self.dist {
            DistArg::Uniform => scales::uniform_time_constants(tau, self.stages),
            DistArg::Log => scales::logarithmic_time_constants(tau, self.c, self.stages),
            DistArg::Limit => scales::truncated_limit_time_constants(tau, self.c, self.limit_eps),
        }
    }
}

impl ProcessArgs {
    /// Pipeline configuration described by the flags.
    pub fn config(&self) -> Result<PipelineConfig> {
        let features = self.features.iter().map(|f| f.parse()).collect::<Result<Vec<FeatureKind>>>()?;
        let c: QuadratureConstant = self.quadrature.parse()?;
        Ok(PipelineConfig {
            fps: self.fps,
            sigma_t_seconds: self.tau_seconds.clone(),
            sigma_x: self.sigma_x.clone(),
            pixels_per_degree: self.ppd,
            distribution: self.dist.temporal(),
            stages: self.dist.stages,
            normalization: NormalizationSpec {
                mode: match self.norm {
                    NormArg::Var => NormMode::Variance,
                    NormArg::Lp => NormMode::Lp,
                },
                gamma_s: self.gamma_s,
                gamma_tau: self.gamma_t,
            },
            features,
            params: FeatureParams {
                c,
                kappa: self.kappa,
                velocity: (self.velocity[0], self.velocity[1]),
                ..FeatureParams::default()
            },
            log_intensity: self.log_intensity,
            smoothing: match self.spatial {
                SpatialArg::Separable => SmoothingScheme::Separable,
                SpatialArg::GammaThird => SmoothingScheme::GammaThird,
            },
            spatial_eps: 1e-8,
        })
    }
}

/// Runs a parsed command, writing normal output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Tables { which } => cmd_tables(which.parse()?, out),
        Command::Kernel(args) => cmd_kernel(&args, out),
        Command::Process(args) => cmd_process(&args, out),
        Command::Synth(args) => cmd_synth(&args, out),
    }
}

pub fn cmd_tables(which: TableId, out: &mut dyn Write) -> Result<()> {
    let table = tables::table(which)?;
    out.write_all(table.to_csv().as_bytes()).map_err(io_err(Path::new("<stdout>")))
}

/// Largest deviation from the recurrence `Psi(tau) = h_exp(mu_1) * Psi(tau / c^2)`, relative to the peak.
///
/// Both sides are evaluated in closed form; only the truncation of the cascade contributes.
fn self_similarity_residual(dist: &ScaleDistribution, c: f64, dt: f64, count: usize) -> Result<f64> {
    // stages are stored finest first; the recurrence adds one finer stage
    let mut extended = vec![dist.mus.first().copied().unwrap_or(0.0) / c];
    extended.extend_from_slice(&dist.mus);
    let lhs = CascadeKernel::new(&dist.mus)?;
    let rhs = CascadeKernel::new(&extended)?;
    let (mut peak, mut worst) = (0.0f64, 0.0f64);
    for i in 0..count {
        let t = i as f64 * dt;
        let a = lhs.value(t);
        peak = peak.max(a.abs());
        worst = worst.max((a - rhs.value(t)).abs());
    }
    Ok(worst / peak)
}

pub fn cmd_kernel(args: &KernelArgs, out: &mut dyn Write) -> Result<()> {
    let dist = args.dist.distribution(args.tau)?;
    let sd = args.tau.sqrt();
    let dt = args.dt.unwrap_or(sd / 256.0);
    let horizon = args.horizon.unwrap_or(dist.mus.iter().sum::<f64>() + 12.0 * sd);
    let kernel = kernel_derivative_samples(&dist, args.n, dt, horizon)?;
    let mut text = String::new();
    let dist_label = match args.dist.dist {
        DistArg::Uniform => "uniform".to_string(),
        DistArg::Log => format!("log c={}", args.dist.c),
        DistArg::Limit => format!("limit c={} eps={}", args.dist.c, args.dist.limit_eps),
    };
    text.push_str(&format!("# tau={}\n# dist={dist_label}\n# K={}\n# n={}\n", args.tau, dist.stages(), args.n));
    if args.dist.dist == DistArg::Limit {
        let r = self_similarity_residual(&dist, args.dist.c, dt, kernel.len())?;
        text.push_str(&format!("# self_similarity_residual={r:e}\n"));
    }
    text.push_str("t,value\n");
    for (i, v) in kernel.values.iter().enumerate() {
        text.push_str(&format!("{},{}\n", kernel.time(i), v));
    }
    match &args.out {
        Some(path) => std::fs::write(path, text).map_err(io_err(path)),
        None => out.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>"))),
    }
}

/// Output file name of one feature map.
pub fn feature_file_name(
    feature: FeatureKind,
    spatial: usize,
    temporal: usize,
    frame: usize,
    format: FormatArg,
) -> String {
    let ext = match format {
        FormatArg::Pgm => "pgm",
        FormatArg::Pfm => "pfm",
    };
    format!("{}_x{spatial}_t{temporal}_{frame:06}.{ext}", feature.name())
}

pub fn cmd_process(args: &ProcessArgs, out: &mut dyn Write) -> Result<()> {
    let config = args.config()?;
    let mut pipeline = match &args.load_state {
        Some(path) => Pipeline::load_state(config, path)?,
        None => Pipeline::new(config)?,
    };
    let frames = list_frames(&args.input)?;
    std::fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    let mut written = 0usize;
    for path in &frames {
        let pgm = read_pgm(path).map_err(|e| match e {
            Error::Io { .. } | Error::Format { .. } => e,
            other => Error::Frame { index: pipeline.frames_seen(), message: other.to_string() },
        })?;
        for f in pipeline.push_frame(&pgm.image)? {
            let file = args.out_dir.join(feature_file_name(
                f.feature,
                f.spatial_index,
                f.temporal_index,
                f.frame_index,
                args.format,
            ));
            match args.format {
                FormatArg::Pgm => write_pgm_display(&file, &f.image)?,
                FormatArg::Pfm => write_pfm(&file, &f.image)?,
            }
            written += 1;
        }
    }
    if let Some(path) = &args.save_state {
        pipeline.save_state(path)?;
    }
    let mut manifest = pipeline.manifest();
    manifest.push(("input".into(), args.input.display().to_string()));
    manifest.push(("frames_read".into(), frames.len().to_string()));
    manifest.push(("files_written".into(), written.to_string()));
    write_manifest(&args.out_dir.join("manifest.txt"), &manifest)?;
    writeln!(out, "processed {} frames, wrote {written} feature maps", frames.len())
        .map_err(io_err(Path::new("<stdout>")))
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let params = SynthParams {
        width: args.width,
        height: args.height,
        frames: args.frames,
        background: args.background,
        amplitude: args.amplitude,
        size: args.size,
        start: None,
        velocity: (args.velocity[0], args.velocity[1]),
        period: args.period,
        onset: args.onset,
    };
    params.validate()?;
    std::fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    for t in 0..params.frames {
        let img = synth::frame(args.kind, &params, t);
        let path = args.out_dir.join(format!("frame_{t:06}.pgm"));
        if args.bits == 16 {
            write_pgm16(&path, &img)?;
        } else {
            write_pgm8(&path, &img)?;
        }
    }
    let truth = args.out_dir.join("truth.txt");
    let mut lines = synth::ground_truth(args.kind, &params).join("\n");
    lines.push('\n');
    std::fs::write(&truth, lines).map_err(io_err(&truth))?;
    writeln!(out, "wrote {} frames to {}", params.frames, args.out_dir.display()).map_err(io_err(Path::new("<stdout>")))
}
