use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "thzkit", version, about = "Terahertz time-domain imaging toolkit")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw of the command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic phantom scan with labels, reference and ground truth.
    Synth(SynthArgs),
    /// Refractive index and absorption of a trace or cube.
    Extract(ExtractArgs),
    /// Per-pixel image of one modality.
    Image(ImageArgs),
    /// Principal components of one or more cubes and their score maps.
    Pca(PcaArgs),
    /// Train the autoencoder.
    Train(TrainArgs),
    /// Latent vectors of every pixel.
    Encode(EncodeArgs),
    /// Compare analytic and finite-difference gradients on a reduced model.
    Gradcheck(GradcheckArgs),
    /// Rasterize map CSV files.
    Render(RenderArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct OpticsArgs {
    /// Lower band edge (THz).
    #[arg(long)]
    pub fmin: Option<f64>,
    /// Upper band edge (THz).
    #[arg(long)]
    pub fmax: Option<f64>,
    /// Reference amplitude floor relative to its peak.
    #[arg(long)]
    pub floor: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, conflicts_with = "spec")]
    pub preset: Option<String>,
    /// Phantom spec JSON.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Override the additive noise standard deviation.
    #[arg(long)]
    pub noise: Option<f64>,
    /// File name stem (default: the phantom name).
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Trace CSV or cube file.
    #[arg(long)]
    pub sample: PathBuf,
    /// Reference trace CSV.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Sample thickness (mm).
    #[arg(long)]
    pub thickness: Option<f64>,
    #[command(flatten)]
    pub optics: OpticsArgs,
    /// Extract one cube pixel, given as `x,y`.
    #[arg(long, value_parser = parse_pixel, conflicts_with = "mean")]
    pub pixel: Option<(usize, usize)>,
    /// Extract the mean trace of the cube (tissue pixels when labels are given).
    #[arg(long)]
    pub mean: bool,
    #[arg(long, requires = "mean")]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Modality {
    Gate,
    Amplitude,
    Phase,
    N,
    Alpha,
    Pc,
    Latent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Statistic {
    PeakToPeak,
    MeanAbs,
    Energy,
}

#[derive(Debug, Args)]
pub struct ImageArgs {
    /// Cube to image, each on its own scale.
    #[arg(long = "cube")]
    pub cubes: Vec<PathBuf>,
    /// Cubes imaged together on one shared scale.
    #[arg(long, num_args = 1.., conflicts_with = "cubes")]
    pub group: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub modality: Modality,
    /// Gate region, A1 to A4.
    #[arg(long)]
    pub region: Option<String>,
    #[arg(long, value_enum, default_value = "peak-to-peak")]
    pub statistic: Statistic,
    /// Frequency (THz) for amplitude, phase, n and alpha.
    #[arg(long)]
    pub freq: Option<f64>,
    /// 1-based component or latent index.
    #[arg(long)]
    pub index: Option<usize>,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[arg(long)]
    pub thickness: Option<f64>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Labels per cube; gates then come from the tissue pixels.
    #[arg(long = "labels", num_args = 1..)]
    pub labels: Vec<PathBuf>,
    #[command(flatten)]
    pub optics: OpticsArgs,
    #[arg(long, default_value = "grayscale")]
    pub colormap: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[arg(long = "cube", required = true)]
    pub cubes: Vec<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub components: usize,
    #[arg(long, default_value = "grayscale")]
    pub colormap: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long = "cube", required = true)]
    pub cubes: Vec<PathBuf>,
    /// Labels per cube. Without `--include-labels` only healthy pixels train.
    #[arg(long = "labels")]
    pub labels: Vec<PathBuf>,
    /// Train on infected pixels too.
    #[arg(long)]
    pub include_labels: bool,
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Use at most this many traces, in pixel order.
    #[arg(long)]
    pub max_traces: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub clip_max_norm: Option<f64>,
    /// Training input SNR (dB).
    #[arg(long)]
    pub noise_db: Option<f64>,
    /// Log the physics terms without weighting them in.
    #[arg(long)]
    pub no_physics: bool,
    #[arg(long)]
    pub thickness: Option<f64>,
    #[command(flatten)]
    pub optics: OpticsArgs,
    #[arg(long, default_value = "model")]
    pub name: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "cube", required = true)]
    pub cubes: Vec<PathBuf>,
    /// Also write the reconstructed cube.
    #[arg(long)]
    pub reconstruct: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Arithmetic precision; only `double` is supported.
    #[arg(long, default_value = "double")]
    pub dtype: String,
    #[arg(long)]
    pub thickness: Option<f64>,
    #[command(flatten)]
    pub optics: OpticsArgs,
    /// Perturb one analytic gradient so the check must fail.
    #[arg(long, hide = true)]
    pub corrupt_gradient: bool,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Map CSV (`x,y,value`).
    #[arg(long = "map", required = true)]
    pub maps: Vec<PathBuf>,
    /// Render all maps on one joint scale.
    #[arg(long)]
    pub shared: bool,
    #[arg(long, default_value = "grayscale")]
    pub colormap: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_pixel(s: &str) -> Result<(usize, usize), String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    let p = |v: &str| v.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok((p(x)?, p(y)?))
}
