use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;

use b3seg::geometry::Vec3;
use b3seg::harness::{
    emit_artifacts, run_pipeline, HarnessError, RunConfig, SceneSource, Strategy,
};
use b3seg::masker::{FailureMode, MaskBackend, NoiseSpec};
use b3seg::scene::{generate_synthetic, save_scene, Scene, SceneSpec, SplatFormat};

const EXIT_VALIDATION: u8 = 2;
const EXIT_PIPELINE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "b3seg",
    version,
    about = "Bayesian segmentation of Gaussian-splat scenes with active view selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment one object of a scene and write the run artifacts.
    Run(Box<RunArgs>),
    /// Write a synthetic labeled scene to a splat file.
    Generate(GenerateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Eig,
    #[value(name = "random_sphere")]
    RandomSphere,
    #[value(name = "random_holdout")]
    RandomHoldout,
}

#[derive(Clone, Copy, ValueEnum)]
enum FailModeArg {
    Empty,
    #[value(name = "wrong_object")]
    WrongObject,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Binary,
    Json,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["scene", "generate"]))]
struct RunArgs {
    /// Splat file (`.json` for JSON, anything else binary).
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Synthetic scene spec, e.g. `seed=7,objects=1,per_object=100,background=400,extent=4`.
    #[arg(long)]
    generate: Option<String>,
    /// Ground-truth class id of the object to segment.
    #[arg(long)]
    target: u32,
    #[arg(long, default_value_t = 20)]
    iters: usize,
    #[arg(long, default_value_t = 20)]
    candidates: usize,
    #[arg(long, default_value_t = 1.0)]
    a_init: f64,
    #[arg(long, default_value_t = 1.0)]
    b_init: f64,
    /// Render resolution as WIDTHxHEIGHT.
    #[arg(long, default_value = "128x128", value_parser = parse_resolution)]
    res: (u32, u32),
    #[arg(long, default_value_t = 60.0)]
    fov_deg: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_flip: f64,
    #[arg(long, default_value_t = 0)]
    noise_erode: u32,
    #[arg(long, default_value_t = 0.0)]
    noise_fail: f64,
    #[arg(long, value_enum, default_value = "empty")]
    noise_fail_mode: FailModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "eig")]
    strategy: StrategyArg,
    /// Stop once the mean accuracy bound reaches this value.
    #[arg(long)]
    early_stop_accuracy: Option<f64>,
    /// Posterior checkpoint; resumed from when it exists, rewritten every iteration.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Mask backend: `oracle` or `external:<command>`.
    #[arg(long, default_value = "oracle")]
    backend: String,
    /// Weight of the posterior prior image blended into each mask.
    #[arg(long, default_value_t = 0.0)]
    prior_blend: f64,
    /// First camera position as x,y,z (default: +x of the scene bounds).
    #[arg(long, value_parser = parse_vec3)]
    canonical_pos: Option<Vec3<f64>>,
    /// Also write PNG images of every selected view.
    #[arg(long)]
    debug_images: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(
        long,
        default_value = "seed=7,objects=1,per_object=100,background=400,extent=4"
    )]
    spec: String,
    #[arg(long, value_enum, default_value = "binary")]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
}

fn parse_resolution(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got `{s}`"))?;
    let w: u32 = w.parse().map_err(|e| format!("width: {e}"))?;
    let h: u32 = h.parse().map_err(|e| format!("height: {e}"))?;
    if w == 0 || h == 0 {
        return Err("resolution must be at least 1x1".into());
    }
    Ok((w, h))
}

fn parse_vec3(s: &str) -> Result<Vec3<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got `{s}`")),
    }
}

fn run_config(args: &RunArgs) -> Result<RunConfig, String> {
    let source = match (&args.scene, &args.generate) {
        (Some(path), None) => SceneSource::File(path.clone()),
        (None, Some(spec)) => SceneSource::Generate(spec.parse::<SceneSpec>()?),
        _ => return Err("give exactly one of --scene and --generate".into()),
    };
    let mut config = RunConfig::new(source, args.target);
    config.iterations = args.iters;
    config.n_candidates = args.candidates;
    config.a_init = args.a_init;
    config.b_init = args.b_init;
    config.resolution = args.res;
    config.fov = args.fov_deg.to_radians();
    config.backend = args
        .backend
        .parse::<MaskBackend>()
        .map_err(|e| e.to_string())?;
    config.noise = NoiseSpec {
        pixel_flip_prob: args.noise_flip,
        boundary_erode_px: args.noise_erode,
        view_failure_prob: args.noise_fail,
        seed: args.seed,
        failure_mode: match args.noise_fail_mode {
            FailModeArg::Empty => FailureMode::Empty,
            FailModeArg::WrongObject => FailureMode::WrongObject,
        },
    };
    config.seed = args.seed;
    config.strategy = match args.strategy {
        StrategyArg::Eig => Strategy::Eig,
        StrategyArg::RandomSphere => Strategy::RandomSphere,
        StrategyArg::RandomHoldout => Strategy::RandomHoldout,
    };
    config.early_stop_accuracy = args.early_stop_accuracy;
    config.checkpoint = args.checkpoint.clone();
    config.prior_blend = args.prior_blend;
    config.canonical_position = args.canonical_pos;
    config.output_dir = Some(args.out.clone());
    config.debug_images = args.debug_images;
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn run(args: RunArgs) -> ExitCode {
    let config = match run_config(&args) {
        Ok(c) => c,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    match run_pipeline(&config) {
        Ok(report) => {
            if let Err(e) = emit_artifacts(&report, &args.out) {
                error!("{e}");
                return ExitCode::from(EXIT_PIPELINE);
            }
            println!(
                "{}: {} views, total entropy {:.4}, iou_3d {}, miou_2d {}",
                report.scene_id,
                report.rows.len(),
                report.final_total_entropy,
                report.iou_3d.map_or("n/a".into(), |v| format!("{v:.4}")),
                report.miou_2d.map_or("n/a".into(), |v| format!("{v:.4}")),
            );
            ExitCode::SUCCESS
        }
        Err(HarnessError::Pipeline {
            iteration,
            source,
            partial,
        }) => {
            error!("pipeline failed at iteration {iteration}: {source}");
            if let Err(e) = emit_artifacts(&partial, &args.out) {
                error!("writing the partial report failed: {e}");
            }
            ExitCode::from(EXIT_PIPELINE)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_PIPELINE
            })
        }
    }
}

fn generate(args: GenerateArgs) -> ExitCode {
    let spec: SceneSpec = match args.spec.parse() {
        Ok(s) => s,
        Err(e) => {
            error!("{e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let format = match args.format {
        FormatArg::Binary => SplatFormat::BinarySplat,
        FormatArg::Json => SplatFormat::JsonSplat,
    };
    let result = generate_synthetic::<f64>(&spec).and_then(|scene: Scene<f64>| {
        save_scene(&scene, &args.out, format)?;
        Ok(scene.len())
    });
    match result {
        Ok(n) => {
            println!("wrote {n} gaussians to {}", args.out.display());
            ExitCode::SUCCESS
        }
        Err(e @ b3seg::scene::SceneError::Io { .. }) => {
            error!("{e}");
            ExitCode::from(EXIT_PIPELINE)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match cli.command {
        Command::Run(args) => run(*args),
        Command::Generate(args) => generate(args),
    }
}
