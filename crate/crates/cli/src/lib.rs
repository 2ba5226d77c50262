//! Command-line front end. `run` parses arguments, executes one command and
//! returns the process exit code: 0 on success, 1 on usage errors, 2 on
//! data errors.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use tomograd::filtering::FilterKind;
use tomograd::geometry::{Geometry, GeometryConfig, VolumeSpec};
use tomograd::image::rmse;
use tomograd::io::{self, ProfileAxis};
use tomograd::pipelines::{self, ExperimentConfig, FdkOptions, PhantomKind};
use tomograd::{Image, Sinogram};

#[derive(Parser, Debug)]
#[command(name = "tomograd", version, about = "Differentiable CT projectors and reconstruction")]
struct Cli {
    /// Worker threads for the operators (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rasterize a numerical phantom.
    Phantom(PhantomArgs),
    /// Write the view angles and ray vectors (or projection matrices) of a geometry as CSV.
    Trajectory(TrajectoryArgs),
    /// Forward project a volume.
    Project(ProjectArgs),
    /// Reconstruct a volume from projections.
    #[command(subcommand)]
    Reconstruct(Reconstruct),
    /// Learn a reconstruction filter from an experiment config.
    LearnFilter(ConfigArgs),
    /// Extract a line profile as CSV.
    Profile(ProfileArgs),
    /// Export an image (or one plane of a volume) as 8-bit PGM.
    ExportPgm(PgmArgs),
}

#[derive(Subcommand, Debug)]
enum Reconstruct {
    /// Parallel-beam filtered backprojection.
    Fbp(FbpArgs),
    /// Divergent-beam FDK with cosine and Parker weights.
    Fdk(FdkArgs),
    /// Gradient-descent reconstruction with a TV penalty.
    Iterative(IterativeArgs),
}

#[derive(Args, Debug)]
struct PhantomArgs {
    #[arg(long = "type", value_enum)]
    kind: PhantomType,
    /// Grid size per axis; ignored when --geometry is given.
    #[arg(long, default_value_t = 256)]
    size: usize,
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// Take the volume grid from this geometry instead of --size/--spacing.
    #[arg(long)]
    geometry: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PhantomType {
    #[value(name = "shepp-logan-2d")]
    SheppLogan2d,
    #[value(name = "shepp-logan-3d")]
    SheppLogan3d,
    #[value(name = "disk-2d")]
    Disk2d,
    #[value(name = "disk-3d")]
    Disk3d,
    #[value(name = "gaussian-2d")]
    Gaussian2d,
    #[value(name = "gaussian-3d")]
    Gaussian3d,
}

impl PhantomType {
    fn split(self) -> (PhantomKind, usize) {
        match self {
            PhantomType::SheppLogan2d => (PhantomKind::SheppLogan2d, 2),
            PhantomType::SheppLogan3d => (PhantomKind::SheppLogan3d, 3),
            PhantomType::Disk2d => (PhantomKind::Disk, 2),
            PhantomType::Disk3d => (PhantomKind::Disk, 3),
            PhantomType::Gaussian2d => (PhantomKind::Gaussian, 2),
            PhantomType::Gaussian3d => (PhantomKind::Gaussian, 3),
        }
    }
}

#[derive(Args, Debug)]
struct TrajectoryArgs {
    #[arg(long)]
    geometry: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[arg(long)]
    geometry: Option<PathBuf>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Relative Gaussian noise level (fraction of the sinogram maximum).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ReconCommon {
    #[arg(long)]
    geometry: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report the RMSE against this image.
    #[arg(long)]
    reference: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FilterArg {
    Ramlak,
    Ramp,
}

impl From<FilterArg> for FilterKind {
    fn from(f: FilterArg) -> Self {
        match f {
            FilterArg::Ramlak => FilterKind::RamLak,
            FilterArg::Ramp => FilterKind::Ramp,
        }
    }
}

#[derive(Args, Debug)]
struct FbpArgs {
    #[command(flatten)]
    common: ReconCommon,
    #[arg(long, value_enum, default_value_t = FilterArg::Ramlak)]
    filter: FilterArg,
}

#[derive(Args, Debug)]
struct FdkArgs {
    #[command(flatten)]
    common: ReconCommon,
    #[arg(long, value_enum, default_value_t = FilterArg::Ramlak)]
    filter: FilterArg,
    /// Disable Parker redundancy weights.
    #[arg(long)]
    no_parker: bool,
    /// Run the FDK experiment described by this config instead.
    #[arg(long, conflicts_with_all = ["input", "geometry"])]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IterativeArgs {
    #[command(flatten)]
    common: ReconCommon,
    /// Experiment config. With --input, only learning_rate, iterations and
    /// lambda are taken from it; without, the full experiment runs.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisArg {
    Row,
    Column,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = AxisArg::Row)]
    axis: AxisArg,
    /// Row or column index (default: central).
    #[arg(long)]
    index: Option<usize>,
    /// Plane of a 3D volume (default: central).
    #[arg(long)]
    slice: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PgmArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.0, 0.4], allow_negative_numbers = true)]
    window: Vec<f64>,
    #[arg(long)]
    slice: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<tomograd::Error> for Failure {
    fn from(e: tomograd::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn required<'a, T>(v: &'a Option<T>, flag: &str) -> std::result::Result<&'a T, Failure> {
    v.as_ref().ok_or_else(|| Failure::Usage(format!("missing required option --{flag}")))
}

fn at<T>(r: tomograd::Result<T>, path: &Path) -> std::result::Result<T, Failure> {
    r.map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_image(path: &Path) -> std::result::Result<Image, Failure> {
    at(io::read_image(path), path)
}

fn read_sinogram(path: &Path) -> std::result::Result<Sinogram, Failure> {
    at(io::read_sinogram(path), path)
}

fn load_geometry(path: &Path) -> std::result::Result<Geometry, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    let cfg: GeometryConfig = serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    Ok(Geometry::from_config(&cfg)?)
}

fn load_config(path: &Path) -> std::result::Result<(ExperimentConfig, PathBuf), Failure> {
    ExperimentConfig::from_file(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn plane(img: &Image, slice: Option<usize>) -> std::result::Result<Image, Failure> {
    if img.ndim() == 3 {
        Ok(img.slice(slice.unwrap_or(img.shape()[0] / 2))?)
    } else {
        Ok(img.clone())
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            let _ = writeln!(err, "error: --threads must be >= 1");
            return 1;
        }
        // an already initialized global pool keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\nRun `tomograd --help` for usage.");
            1
        }
        Err(Failure::Data(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn report_rmse(out: &mut dyn Write, img: &Image, reference: &Option<PathBuf>) -> Outcome {
    if let Some(r) = reference {
        let reference = read_image(r)?;
        if reference.shape() != img.shape() {
            return Err(Failure::Data(format!(
                "reference shape {:?} differs from reconstruction shape {:?}",
                reference.shape(),
                img.shape()
            )));
        }
        writeln!(out, "rmse: {:.6}", rmse(&img.data, &reference.data))?;
    }
    Ok(())
}

fn execute(cmd: Command, out: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Phantom(a) => {
            let (kind, ndim) = a.kind.split();
            let spec = match &a.geometry {
                Some(g) => load_geometry(g)?.volume().clone(),
                None => VolumeSpec::new(&vec![a.size; ndim], &vec![a.spacing; ndim])?,
            };
            if spec.ndim() != ndim {
                return Err(Failure::Data(format!("phantom is {ndim}D but the geometry volume is {}D", spec.ndim())));
            }
            let img = kind.build(&spec)?;
            io::write_image(&img, &a.out)?;
            writeln!(out, "wrote phantom {:?} to {}", img.shape(), a.out.display())?;
        }
        Command::Trajectory(a) => {
            let geo = load_geometry(required(&a.geometry, "geometry")?)?;
            fs::write(&a.out, trajectory_csv(&geo))?;
            writeln!(out, "wrote {} views to {}", geo.n_projections(), a.out.display())?;
        }
        Command::Project(a) => {
            let geo = load_geometry(required(&a.geometry, "geometry")?)?;
            let img = read_image(&a.input)?;
            let sino = geo.forward_project(&img)?;
            let sino = pipelines::add_gaussian_noise(&sino, a.noise, a.seed)?;
            write_sino(&sino, &geo, &a.out)?;
            writeln!(out, "wrote sinogram {:?} to {}", sino.shape(), a.out.display())?;
        }
        Command::Reconstruct(Reconstruct::Fbp(a)) => {
            let c = &a.common;
            let geo = load_geometry(required(&c.geometry, "geometry")?)?;
            let (input, dest) = (required(&c.input, "input")?, required(&c.out, "out")?);
            let Geometry::Parallel2D(pg) = &geo else {
                return Err(Failure::Data("fbp needs a parallel2d geometry; use fdk for fan and cone beams".into()));
            };
            let sino = read_sinogram(input)?;
            let img = pipelines::fbp_reconstruct(&sino, pg, a.filter.into())?;
            io::write_image(&img, dest)?;
            writeln!(out, "wrote reconstruction {:?} to {}", img.shape(), dest.display())?;
            report_rmse(out, &img, &c.reference)?;
        }
        Command::Reconstruct(Reconstruct::Fdk(a)) => {
            if let Some(cfg_path) = &a.config {
                let (mut cfg, base) = load_config(cfg_path)?;
                if let Some(o) = &a.common.out {
                    cfg.output_dir = Some(o.clone());
                }
                if a.no_parker {
                    cfg.parker = false;
                }
                let (dir, res) = pipelines::run_fdk(&cfg, &base)?;
                let e = pipelines::interior_rmse(&plane(&res.reconstruction, None)?, &plane(&res.phantom, None)?, 0.6);
                writeln!(out, "wrote FDK experiment outputs to {}", dir.display())?;
                writeln!(out, "central-slice interior rmse: {e:.6}")?;
                return Ok(());
            }
            let c = &a.common;
            let geo = load_geometry(required(&c.geometry, "geometry")?)?;
            let (input, dest) = (required(&c.input, "input")?, required(&c.out, "out")?);
            let sino = read_sinogram(input)?;
            let opts = FdkOptions {
                filter: a.filter.into(),
                parker: !a.no_parker,
            };
            let img = pipelines::divergent_fbp(&sino, &geo, opts)?;
            io::write_image(&img, dest)?;
            writeln!(out, "wrote reconstruction {:?} to {}", img.shape(), dest.display())?;
            report_rmse(out, &img, &c.reference)?;
        }
        Command::Reconstruct(Reconstruct::Iterative(a)) => iterative(a, out)?,
        Command::LearnFilter(a) => {
            let (mut cfg, base) = load_config(required(&a.config, "config")?)?;
            if let Some(o) = a.out {
                cfg.output_dir = Some(o);
            }
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            let (dir, res) = pipelines::run_learn_filter(&cfg, &base)?;
            let first = res.log.first().map(|r| r.loss).unwrap_or(f64::NAN);
            let last = res.log.last().map(|r| r.loss).unwrap_or(f64::NAN);
            writeln!(out, "wrote filter-learning outputs to {}", dir.display())?;
            writeln!(out, "loss {first:.6e} -> {last:.6e}; ramlak distance ratio {:.4}", res.distance_ratio())?;
        }
        Command::Profile(a) => {
            let img = plane(&read_image(&a.input)?, a.slice)?;
            let (axis, default) = match a.axis {
                AxisArg::Row => (ProfileAxis::Row, img.shape()[0] / 2),
                AxisArg::Column => (ProfileAxis::Column, img.shape()[1] / 2),
            };
            let p = io::line_profile(&img, axis, a.index.unwrap_or(default))?;
            fs::write(&a.out, io::profile_csv(&p))?;
            writeln!(out, "wrote {} profile samples to {}", p.len(), a.out.display())?;
        }
        Command::ExportPgm(a) => {
            let img = plane(&read_image(&a.input)?, a.slice)?;
            io::export_pgm(&img, a.window[0], a.window[1], &a.out)?;
            writeln!(out, "wrote {}", a.out.display())?;
        }
    }
    Ok(())
}

fn iterative(a: IterativeArgs, out: &mut dyn Write) -> Outcome {
    let c = &a.common;
    let cfg = match &a.config {
        Some(p) => Some(load_config(p)?),
        None => None,
    };
    if c.input.is_none() {
        let Some((mut cfg, base)) = cfg else {
            return Err(Failure::Usage("iterative needs --input and --geometry, or --config".into()));
        };
        if let Some(o) = &c.out {
            cfg.output_dir = Some(o.clone());
        }
        let (dir, res) = pipelines::run_iterative_tv(&cfg, &base)?;
        writeln!(out, "wrote iterative experiment outputs to {}", dir.display())?;
        writeln!(
            out,
            "rmse tv: {:.6}, rmse fbp: {:.6}",
            rmse(&res.reconstruction.data, &res.phantom.data),
            rmse(&res.fbp.data, &res.phantom.data)
        )?;
        return Ok(());
    }
    let geo = load_geometry(required(&c.geometry, "geometry")?)?;
    let dest = required(&c.out, "out")?;
    let Geometry::Parallel2D(pg) = &geo else {
        return Err(Failure::Data("iterative reconstruction needs a parallel2d geometry".into()));
    };
    let from_cfg = cfg.as_ref().map(|(c, _)| c);
    let lr = a.learning_rate.or(from_cfg.map(|c| c.learning_rate));
    let iterations = a.iterations.or(from_cfg.map(|c| c.iterations));
    let lambda = a.lambda.or(from_cfg.map(|c| c.lambda)).unwrap_or(0.0);
    let (Some(lr), Some(iterations)) = (lr, iterations) else {
        return Err(Failure::Usage("iterative needs --learning-rate and --iterations (or --config)".into()));
    };
    if iterations == 0 {
        return Err(Failure::Usage("--iterations must be >= 1".into()));
    }
    let sino = read_sinogram(required(&c.input, "input")?)?;
    let (img, log) = pipelines::iterative_tv_reconstruct(&sino, pg, lr, iterations, lambda, None)?;
    io::write_image(&img, dest)?;
    let log_path = PathBuf::from(format!("{}_loss.csv", dest.display()));
    fs::write(&log_path, io::loss_csv(&log, "metric"))?;
    writeln!(out, "wrote reconstruction {:?} to {}", img.shape(), dest.display())?;
    report_rmse(out, &img, &c.reference)?;
    Ok(())
}

fn write_sino(sino: &Sinogram, geo: &Geometry, path: &Path) -> Outcome {
    let step = geo.angular_range() / geo.n_projections() as f64;
    io::write_sinogram(sino, step, path)?;
    Ok(())
}

fn trajectory_csv(geo: &Geometry) -> String {
    let mut s = String::new();
    match geo {
        Geometry::Parallel2D(g) => {
            s.push_str("view,ray_x,ray_y\n");
            for (i, r) in g.ray_vectors.iter().enumerate() {
                let _ = writeln!(s, "{i},{},{}", r[0], r[1]);
            }
        }
        Geometry::Fan2D(g) => {
            s.push_str("view,ray_x,ray_y,source_x,source_y\n");
            for (i, r) in g.ray_vectors.iter().enumerate() {
                let _ = writeln!(s, "{i},{},{},{},{}", r[0], r[1], -g.sid * r[0] + 0.0, -g.sid * r[1] + 0.0);
            }
        }
        Geometry::Cone3D(g) => {
            s.push_str("view");
            for r in 0..3 {
                for c in 0..4 {
                    let _ = write!(s, ",p{r}{c}");
                }
            }
            s.push_str(",source_x,source_y,source_z\n");
            for (i, m) in g.projection_matrices.iter().enumerate() {
                let _ = write!(s, "{i}");
                for v in m.to_row_major() {
                    let _ = write!(s, ",{v}");
                }
                let src = m.source();
                let _ = writeln!(s, ",{},{},{}", src[0], src[1], src[2]);
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run(std::iter::once("tomograd").chain(args.iter().copied()), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, 0);
        for cmd in ["phantom", "trajectory", "project", "reconstruct", "learn-filter", "profile", "export-pgm"] {
            assert!(out.contains(cmd), "{cmd}");
        }
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_capture(&[]).0, 1);
        assert_eq!(run_capture(&["reconstruct", "tomosynthesis"]).0, 1);
        assert_eq!(run_capture(&["phantom", "--type", "cube", "--out", "x"]).0, 1);
        let (code, _, err) = run_capture(&["reconstruct", "fbp", "--input", "s", "--out", "r"]);
        assert_eq!(code, 1);
        assert!(err.contains("--geometry"));
        assert_eq!(run_capture(&["learn-filter"]).0, 1);
        assert_eq!(run_capture(&["reconstruct", "iterative", "--out", "r"]).0, 1);
    }

    #[test]
    fn missing_files_exit_two() {
        let (code, _, err) = run_capture(&["export-pgm", "--input", "/nonexistent/img", "--out", "x.pgm"]);
        assert_eq!(code, 2);
        assert!(err.contains("/nonexistent/img"));
    }

    #[test]
    fn trajectory_csv_layout() {
        let geo = Geometry::from_config(
            &serde_json::from_str(
                r#"{"type":"fan2d","volume_shape":[8,8],"volume_spacing":1.0,"detector_shape":[12],
                    "detector_spacing":1.0,"n_projections":4,"angular_range_deg":360,"sid":50,"sdd":90}"#,
            )
            .unwrap(),
        )
        .unwrap();
        let csv = trajectory_csv(&geo);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "view,ray_x,ray_y,source_x,source_y");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "0,1,0,-50,0");
    }
}
