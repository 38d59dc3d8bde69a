//! `splidar` command-line interface.
//!
//! Exit codes: 0 on success, 2 on argument errors, 1 on I/O or validation
//! errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use splidar::io::{self, DepthMap, DepthUnits};
use splidar::metrics;
use splidar::pyramid::build_pyramid;
use splidar::scene::{calibrate_levels, simulate, Irf, Scene, Synthetic};
use splidar::{estimate_all, fusion, FusionConfig};

#[derive(Parser, Debug)]
#[command(name = "splidar", version, about = "Single-photon Lidar simulation and multiscale Bayesian reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
#[command(group(ArgGroup::new("irf_source").args(["irf", "irf_sigma"])))]
struct IrfArgs {
    /// One-column text file with impulse response samples.
    #[arg(long)]
    irf: Option<PathBuf>,
    /// Width of the built-in Gaussian impulse response, in bins.
    #[arg(long, default_value_t = 2.0)]
    irf_sigma: f64,
}

impl IrfArgs {
    fn load(&self) -> splidar::Result<Irf> {
        match &self.irf {
            Some(path) => io::read_irf(path),
            None => Irf::gaussian(self.irf_sigma),
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SyntheticKind {
    Step,
    Staircase,
    Sphere,
}

impl From<SyntheticKind> for Synthetic {
    fn from(k: SyntheticKind) -> Self {
        match k {
            SyntheticKind::Step => Synthetic::Step,
            SyntheticKind::Staircase => Synthetic::Staircase,
            SyntheticKind::Sphere => Synthetic::Sphere,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Metric {
    Dae,
    Rmse,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a Poisson histogram cube at a target PPP and SBR.
    #[command(group(ArgGroup::new("source").required(true).args(["scene", "synthetic"])))]
    Simulate {
        /// Depth image (PGM, 8 or 16 bit), mapped linearly onto [0, 0.8 T].
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, value_enum)]
        synthetic: Option<SyntheticKind>,
        /// Image height for synthetic scenes.
        #[arg(long, default_value_t = 64)]
        height: usize,
        /// Image width for synthetic scenes.
        #[arg(long, default_value_t = 64)]
        width: usize,
        /// Average photons per pixel.
        #[arg(long)]
        ppp: f64,
        /// Signal-to-background ratio.
        #[arg(long)]
        sbr: f64,
        #[arg(long, default_value_t = 256)]
        bins: usize,
        #[command(flatten)]
        irf: IrfArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output cube file.
        #[arg(long)]
        out: PathBuf,
        /// Optional ground-truth depth map output.
        #[arg(long)]
        out_truth: Option<PathBuf>,
    },
    /// Reconstruct depth and uncertainty maps from a cube.
    Reconstruct {
        #[arg(long = "in")]
        input: PathBuf,
        #[command(flatten)]
        irf: IrfArgs,
        #[arg(long, default_value_t = 3)]
        scales: usize,
        /// Fusion window radius (1 = 3x3).
        #[arg(long, default_value_t = 1)]
        window: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Defaults to twice the impulse response variance.
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 50)]
        iters: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        out_depth: PathBuf,
        #[arg(long)]
        out_eps: Option<PathBuf>,
        /// Write the per-scale ML estimates (SPMS format).
        #[arg(long)]
        dump_multiscale: Option<PathBuf>,
        /// Write every pyramid level as `<prefix>_level<l>.splh`.
        #[arg(long)]
        dump_pyramid: Option<PathBuf>,
    },
    /// Compare an estimated depth map against a reference.
    Evaluate {
        #[arg(long)]
        est: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, value_enum, default_value_t = Metric::Dae)]
        metric: Metric,
    },
    /// Export a depth map as an ASCII PLY point cloud.
    ExportPly {
        #[arg(long)]
        depth: PathBuf,
        #[arg(long)]
        eps: Option<PathBuf>,
        /// Meters per time bin.
        #[arg(long, default_value_t = 1.0)]
        bin_width: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Six significant digits; zero prints as `0.000000`.
fn format_sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.6}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

fn run(cli: Cli) -> splidar::Result<()> {
    match cli.command {
        Command::Simulate {
            scene,
            synthetic,
            height,
            width,
            ppp,
            sbr,
            bins,
            irf,
            seed,
            out,
            out_truth,
        } => {
            let irf = irf.load()?;
            let base = match (scene, synthetic) {
                (Some(path), _) => {
                    let img = io::read_pgm(&path)?;
                    Scene::from_depth(io::depth_from_gray(&img, bins), bins)?
                }
                (None, Some(kind)) => Synthetic::from(kind).scene(height, width, bins)?,
                (None, None) => unreachable!("clap enforces a scene source"),
            };
            let calibrated = calibrate_levels(&base, ppp, sbr)?;
            let cube = simulate(&calibrated, &irf, seed)?;
            io::write_cube(&out, &cube)?;
            if let Some(path) = out_truth {
                io::write_depth_map(&path, &DepthMap::from_f64(&calibrated.depth, DepthUnits::Bins))?;
            }
        }
        Command::Reconstruct {
            input,
            irf,
            scales,
            window,
            alpha,
            beta,
            iters,
            tol,
            out_depth,
            out_eps,
            dump_multiscale,
            dump_pyramid,
        } => {
            let irf = irf.load()?;
            let cube = io::read_cube(&input)?;
            let config = FusionConfig {
                alpha,
                beta: beta.unwrap_or(2.0 * irf.depth_variance()),
                window_radius: window,
                max_iters: iters,
                tol,
                scales,
            };
            config.validate()?;
            let pyramid = build_pyramid(&cube, scales)?;
            if let Some(prefix) = dump_pyramid {
                for (l, level) in pyramid.levels().iter().enumerate() {
                    let path = PathBuf::from(format!("{}_level{}.splh", prefix.display(), l + 1));
                    io::write_cube(&path, level)?;
                }
            }
            let est = estimate_all(&pyramid, &irf)?;
            if let Some(path) = dump_multiscale {
                io::write_multiscale(&path, &est)?;
            }
            let rec = fusion::fuse(est, &config)?;
            io::write_depth_map(&out_depth, &DepthMap::from_f64(&rec.depth, DepthUnits::Bins))?;
            if let Some(path) = out_eps {
                io::write_depth_map(&path, &DepthMap::from_f64(&rec.eps, DepthUnits::Bins))?;
            }
            eprintln!(
                "reconstructed {}x{} in {} sweeps (converged: {})",
                rec.depth.nrows(),
                rec.depth.ncols(),
                rec.iterations,
                rec.converged
            );
        }
        Command::Evaluate {
            est,
            reference,
            metric,
        } => {
            let a = io::read_depth_map(&est)?;
            let b = io::read_depth_map(&reference)?;
            if a.units != b.units {
                return Err(splidar::Error::DimensionMismatch(format!(
                    "units differ: {:?} vs {:?}",
                    a.units, b.units
                )));
            }
            let (a, b) = (a.to_f64(), b.to_f64());
            let value = match metric {
                Metric::Dae => metrics::dae(&a, &b)?,
                Metric::Rmse => metrics::rmse(&a, &b)?,
            };
            println!("{}", format_sig6(value));
        }
        Command::ExportPly {
            depth,
            eps,
            bin_width,
            out,
        } => {
            let depth = io::read_depth_map(&depth)?.to_f64();
            let eps = eps.map(|p| io::read_depth_map(&p)).transpose()?.map(|m| m.to_f64());
            io::write_ply(&out, &depth, eps.as_ref(), bin_width)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
