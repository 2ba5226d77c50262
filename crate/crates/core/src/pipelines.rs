//! Reconstruction algorithms and the three experiments built from the
//! operator modules.
//!
//! Amplitude normalization: filter weights are in cycles per millimetre, so
//! a filtered projection is already the ramp-filtered line integral. The
//! back projector sums over views without normalization; the pipelines
//! multiply by the angular increment per effective half turn, `π/n`. With
//! Parker weights the redundant rays already sum to one, so the factor
//! becomes the true angular step `range/n`.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtering::{
    apply_filter, cosine_weights, default_padding, parker_weights, ramlak_filter, ramp_filter,
    Filter1D, FilterKind,
};
use crate::geometry::{
    ConeGeometry3D, Geometry, GeometryConfig, ParallelGeometry2D, VolumeSpec,
};
use crate::graph::{Feeds, Graph, Tensor};
use crate::image::{central_disk_mask, masked_rmse, rmse, Image, Sinogram};
use crate::io::{self, LossRecord, ProfileAxis};
use crate::phantom::{rasterize_primitives, shepp_logan_2d, shepp_logan_3d, Primitive};

/// `(π / n_projections) · backproject(filter(sino))`.
pub fn fbp_reconstruct(
    sino: &Sinogram,
    geo: &ParallelGeometry2D,
    filter: FilterKind,
) -> Result<Image> {
    let bins = geo.detector.shape()[0];
    let k = filter.build(bins, geo.detector.spacing()[0], default_padding(bins))?;
    fbp_with_filter(sino, geo, &k)
}

pub fn fbp_with_filter(sino: &Sinogram, geo: &ParallelGeometry2D, filter: &Filter1D) -> Result<Image> {
    let filtered = apply_filter(sino, filter)?;
    let mut img = crate::projector::backproject_parallel_2d(&filtered, geo)?;
    let scale = PI / geo.n_projections as f64;
    img.data.iter_mut().for_each(|v| *v *= scale);
    Ok(img)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdkOptions {
    pub filter: FilterKind,
    /// Parker redundancy weighting; requires a short-scan angular range.
    pub parker: bool,
}

impl Default for FdkOptions {
    fn default() -> Self {
        Self {
            filter: FilterKind::RamLak,
            parker: true,
        }
    }
}

/// Filtered backprojection for divergent beams: cosine (and optionally
/// Parker) weighting, row-wise filtering on the virtual detector through
/// the iso-center, distance-weighted back projection. Works for fan- and
/// cone-beam geometries; for cone-beam this is FDK.
pub fn divergent_fbp(sino: &Sinogram, geo: &Geometry, opts: FdkOptions) -> Result<Image> {
    let (sid, sdd) = match geo {
        Geometry::Fan2D(g) => (g.sid, g.sdd),
        Geometry::Cone3D(g) => (g.sid, g.sdd),
        Geometry::Parallel2D(_) => {
            return Err(Error::Geometry("divergent FBP needs a fan- or cone-beam geometry".into()))
        }
    };
    if sino.shape() != geo.sinogram_shape() {
        return Err(Error::shape(&geo.sinogram_shape(), sino.shape()));
    }
    let mut weights = cosine_weights(geo)?;
    let n = geo.n_projections() as f64;
    let angular = if opts.parker {
        weights = weights.product(&parker_weights(geo)?)?;
        geo.angular_range() / n
    } else {
        PI / n
    };
    let det = geo.detector();
    let u_axis = det.ndim() - 1;
    let bins = det.shape()[u_axis];
    let iso_spacing = det.spacing()[u_axis] * sid / sdd;
    let k = opts.filter.build(bins, iso_spacing, default_padding(bins))?;
    let filtered = apply_filter(&weights.apply(sino)?, &k)?;
    let mut img = geo.backproject(&filtered)?;
    img.data.iter_mut().for_each(|v| *v *= angular);
    Ok(img)
}

pub fn fdk_reconstruct(sino: &Sinogram, geo: &ConeGeometry3D, opts: FdkOptions) -> Result<Image> {
    divergent_fbp(sino, &Geometry::Cone3D(geo.clone()), opts)
}

/// Adds `N(0, (relative_std · max(sino))²)` noise, deterministic per seed.
pub fn add_gaussian_noise(sino: &Sinogram, relative_std: f64, seed: u64) -> Result<Sinogram> {
    if !(relative_std >= 0.0 && relative_std.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "relative noise level must be >= 0, got {relative_std}"
        )));
    }
    if relative_std == 0.0 {
        return Ok(sino.clone());
    }
    let sigma = relative_std * sino.max().abs();
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = sino.data.iter().map(|v| v + normal.sample(&mut rng)).collect();
    Sinogram::from_data(sino.shape(), &sino.spacing, data)
}

/// Where an experiment takes its geometry from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometryRef {
    Path(PathBuf),
    Inline(GeometryConfig),
}

impl GeometryRef {
    pub fn resolve(&self, base: &Path) -> Result<Geometry> {
        match self {
            GeometryRef::Inline(cfg) => Geometry::from_config(cfg),
            GeometryRef::Path(p) => {
                let p = if p.is_relative() { base.join(p) } else { p.clone() };
                let cfg: GeometryConfig = serde_json::from_str(&fs::read_to_string(p)?)?;
                Geometry::from_config(&cfg)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomKind {
    #[serde(rename = "shepp-logan-2d")]
    SheppLogan2d,
    #[serde(rename = "shepp-logan-3d")]
    SheppLogan3d,
    /// Centered disk (sphere) of unit intensity, radius 0.4 of the field of view.
    Disk,
    /// Centered isotropic Gaussian of unit peak, standard deviation 0.3 of
    /// the half field of view.
    Gaussian,
}

impl PhantomKind {
    pub fn build(self, spec: &VolumeSpec) -> Result<Image> {
        let nd = spec.ndim();
        let half = (0..nd)
            .map(|a| spec.shape()[a] as f64 * spec.spacing()[a] / 2.0)
            .fold(f64::INFINITY, f64::min);
        match self {
            PhantomKind::SheppLogan2d => shepp_logan_2d(spec),
            PhantomKind::SheppLogan3d => shepp_logan_3d(spec),
            PhantomKind::Gaussian => {
                let sigma = 0.3 * half;
                let shape = spec.shape();
                let data = (0..spec.len())
                    .map(|i| {
                        let mut rem = i;
                        let mut r2 = 0.0;
                        for a in (0..nd).rev() {
                            let c = spec.coordinate(a, rem % shape[a]);
                            rem /= shape[a];
                            r2 += c * c;
                        }
                        (-r2 / (2.0 * sigma * sigma)).exp()
                    })
                    .collect();
                Image::from_data(spec, data)
            }
            PhantomKind::Disk => {
                let r = 0.4 * half;
                let prim = if nd == 2 {
                    Primitive::circle([0.0, 0.0], r, 1.0)
                } else {
                    Primitive::sphere([0.0; 3], r, 1.0)
                };
                rasterize_primitives(&[prim], spec)
            }
        }
    }
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::InvalidArgument(format!("unknown phantom `{s}`")))
    }
}

fn default_seed() -> u64 {
    42
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: GeometryRef,
    pub phantom: PhantomKind,
    /// Relative Gaussian noise level (fraction of the sinogram maximum).
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub learning_rate: f64,
    #[serde(default = "one")]
    pub iterations: usize,
    /// TV weight.
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// FDK only: apply Parker weights.
    #[serde(default = "yes")]
    pub parker: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<(Self, PathBuf)> {
        let path = path.as_ref();
        let cfg: ExperimentConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok((cfg, path.parent().unwrap_or(Path::new(".")).to_path_buf()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise >= 0.0) || !(self.lambda >= 0.0) {
            return Err(Error::InvalidArgument("noise and lambda must be >= 0".into()));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning_rate must be >= 0".into()));
        }
        Ok(())
    }
}

fn parallel_of(geo: &Geometry) -> Result<&ParallelGeometry2D> {
    match geo {
        Geometry::Parallel2D(g) => Ok(g),
        _ => Err(Error::Geometry("this experiment needs a parallel 2D geometry".into())),
    }
}

fn check_loss(iteration: usize, loss: f64) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Diverged { iteration, loss })
    }
}

#[derive(Clone, Debug)]
pub struct FilterLearningResult {
    pub learned: Filter1D,
    pub ramp: Filter1D,
    pub ramlak: Filter1D,
    /// Loss before each update, plus the loss of the returned filter as the
    /// last entry. Metric: `‖K − K_ramlak‖ / ‖K_ramp − K_ramlak‖`.
    pub log: Vec<LossRecord>,
    pub reconstruction: Image,
    pub phantom: Image,
}

impl FilterLearningResult {
    pub fn distance_ratio(&self) -> f64 {
        self.learned.distance(&self.ramlak) / self.ramp.distance(&self.ramlak)
    }
}

/// Learns the reconstruction filter of `x̂ = (π/n)·Aᵀ Fᴴ K F p` from the
/// ramp initialization by gradient descent on `‖x̂ − x‖²`.
pub fn experiment_learn_filter(cfg: &ExperimentConfig, base: &Path) -> Result<FilterLearningResult> {
    cfg.validate()?;
    let geo = cfg.geometry.resolve(base)?;
    let pg = parallel_of(&geo)?.clone();
    let phantom = cfg.phantom.build(&pg.volume)?;
    let sino = crate::projector::forward_parallel_2d(&phantom, &pg)?;
    let sino = add_gaussian_noise(&sino, cfg.noise, cfg.seed)?;
    learn_filter(&sino, &phantom, &pg, cfg.learning_rate, cfg.iterations)
}

pub fn learn_filter(
    sino: &Sinogram,
    phantom: &Image,
    geo: &ParallelGeometry2D,
    learning_rate: f64,
    iterations: usize,
) -> Result<FilterLearningResult> {
    let bins = geo.detector.shape()[0];
    let spacing = geo.detector.spacing()[0];
    let n = default_padding(bins);
    let ramp = ramp_filter(bins, spacing, n)?;
    let ramlak = ramlak_filter(bins, spacing, n)?;
    let base_distance = ramp.distance(&ramlak);

    let shared = Arc::new(Geometry::Parallel2D(geo.clone()));
    let mut g = Graph::new();
    let p = g.input("projections");
    let target = g.input("phantom");
    let k = g.parameter("filter", Tensor::new(vec![n], ramp.weights.clone())?, true);
    let filtered = g.fourier_filter(p, k);
    let bp = g.backproject(filtered, shared);
    let recon = g.scale(bp, PI / geo.n_projections as f64);
    let loss = g.l2_loss(recon, target);
    let feeds = Feeds::from([
        (p, Tensor::from(sino.clone())),
        (target, Tensor::from(phantom.clone())),
    ]);

    let mut log = Vec::with_capacity(iterations + 1);
    let metric = |w: &[f64]| {
        w.iter()
            .zip(&ramlak.weights)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / base_distance
    };
    for it in 0..=iterations {
        let values = g.forward(&feeds)?;
        let l = values.get(loss).data[0];
        check_loss(it, l)?;
        log.push(LossRecord {
            iteration: it,
            loss: l,
            metric: Some(metric(&g.param(k).unwrap().data)),
        });
        if it == iterations {
            let learned = Filter1D::from_weights(g.param(k).unwrap().data.clone(), spacing)?;
            let reconstruction = Image::from_data(&geo.volume, values.get(recon).data.clone())?;
            return Ok(FilterLearningResult {
                learned,
                ramp,
                ramlak,
                log,
                reconstruction,
                phantom: phantom.clone(),
            });
        }
        let grads = g.backward(&values, loss)?;
        g.gradient_descent_step(&grads, learning_rate)?;
    }
    unreachable!()
}

#[derive(Clone, Debug)]
pub struct IterativeResult {
    pub reconstruction: Image,
    /// Ram-Lak FBP of the same data, for comparison.
    pub fbp: Image,
    pub phantom: Image,
    pub sinogram: Sinogram,
    /// Total loss before each update; metric is RMSE to the phantom when known.
    pub log: Vec<LossRecord>,
}

/// Minimizes `‖A x − p‖² + λ·TV(x)` by gradient descent on an additive
/// layer initialized with zero. The gradient of the projector term uses the
/// registered back projector.
pub fn iterative_tv_reconstruct(
    sino: &Sinogram,
    geo: &ParallelGeometry2D,
    learning_rate: f64,
    iterations: usize,
    lambda: f64,
    reference: Option<&Image>,
) -> Result<(Image, Vec<LossRecord>)> {
    let shared = Arc::new(Geometry::Parallel2D(geo.clone()));
    let shape = geo.volume.shape().to_vec();
    let mut g = Graph::new();
    let zero = g.input("zero");
    let x = g.parameter("additive", Tensor::zeros(&shape), true);
    let layer = g.add(zero, x);
    let proj = g.forward_project(layer, shared);
    let p = g.input("measured");
    let fidelity = g.l2_loss(proj, p);
    let tv = g.tv_loss(layer);
    let reg = g.scale(tv, lambda);
    let loss = g.add(fidelity, reg);
    let feeds = Feeds::from([
        (zero, Tensor::zeros(&shape)),
        (p, Tensor::from(sino.clone())),
    ]);

    let mut log = Vec::with_capacity(iterations);
    for it in 0..iterations {
        let values = g.forward(&feeds)?;
        let l = values.get(loss).data[0];
        check_loss(it, l)?;
        let metric = reference.map(|r| rmse(&g.param(x).unwrap().data, &r.data));
        log.push(LossRecord {
            iteration: it,
            loss: l,
            metric,
        });
        let grads = g.backward(&values, loss)?;
        g.gradient_descent_step(&grads, learning_rate)?;
    }
    let img = Image::from_data(&geo.volume, g.param(x).unwrap().data.clone())?;
    Ok((img, log))
}

pub fn experiment_iterative_tv(cfg: &ExperimentConfig, base: &Path) -> Result<IterativeResult> {
    cfg.validate()?;
    let geo = cfg.geometry.resolve(base)?;
    let pg = parallel_of(&geo)?;
    let phantom = cfg.phantom.build(&pg.volume)?;
    let clean = crate::projector::forward_parallel_2d(&phantom, pg)?;
    let sinogram = add_gaussian_noise(&clean, cfg.noise, cfg.seed)?;
    let (reconstruction, log) = iterative_tv_reconstruct(
        &sinogram,
        pg,
        cfg.learning_rate,
        cfg.iterations,
        cfg.lambda,
        Some(&phantom),
    )?;
    let fbp = fbp_reconstruct(&sinogram, pg, FilterKind::RamLak)?;
    Ok(IterativeResult {
        reconstruction,
        fbp,
        phantom,
        sinogram,
        log,
    })
}

#[derive(Clone, Debug)]
pub struct FdkResult {
    pub reconstruction: Image,
    pub phantom: Image,
    pub sinogram: Sinogram,
}

pub fn experiment_fdk(cfg: &ExperimentConfig, base: &Path) -> Result<FdkResult> {
    cfg.validate()?;
    let geo = cfg.geometry.resolve(base)?;
    let Geometry::Cone3D(cg) = &geo else {
        return Err(Error::Geometry("the FDK experiment needs a cone 3D geometry".into()));
    };
    let phantom = cfg.phantom.build(&cg.volume)?;
    let clean = crate::projector::forward_cone_3d(&phantom, cg)?;
    let sinogram = add_gaussian_noise(&clean, cfg.noise, cfg.seed)?;
    let reconstruction = fdk_reconstruct(
        &sinogram,
        cg,
        FdkOptions {
            filter: FilterKind::RamLak,
            parker: cfg.parker,
        },
    )?;
    Ok(FdkResult {
        reconstruction,
        phantom,
        sinogram,
    })
}

/// RMSE inside the central disk of radius `fraction` of the half field of
/// view (2D images, or one plane of a volume).
pub fn interior_rmse(a: &Image, b: &Image, fraction: f64) -> f64 {
    let mask = central_disk_mask(&a.spec, fraction);
    let plane = mask.len();
    masked_rmse(&a.data, &b.data, |i| mask[i % plane])
}

fn central_plane(img: &Image) -> Result<Image> {
    if img.ndim() == 3 {
        img.slice(img.shape()[0] / 2)
    } else {
        Ok(img.clone())
    }
}

/// Writes images, PGMs and central row/column profiles of reconstruction
/// and phantom into `dir` with the given name prefix.
fn write_image_set(dir: &Path, name: &str, img: &Image, window: (f64, f64)) -> Result<()> {
    io::write_image(img, dir.join(name))?;
    let plane = central_plane(img)?;
    io::export_pgm(&plane, window.0, window.1, dir.join(format!("{name}.pgm")))?;
    let (ny, nx) = (plane.shape()[0], plane.shape()[1]);
    let row = io::line_profile(&plane, ProfileAxis::Row, ny / 2)?;
    fs::write(dir.join(format!("{name}_row_profile.csv")), io::profile_csv(&row))?;
    let col = io::line_profile(&plane, ProfileAxis::Column, nx / 2)?;
    fs::write(dir.join(format!("{name}_column_profile.csv")), io::profile_csv(&col))?;
    Ok(())
}

fn output_dir(cfg: &ExperimentConfig, base: &Path, fallback: &str) -> Result<PathBuf> {
    let dir = match &cfg.output_dir {
        Some(d) if d.is_relative() => base.join(d),
        Some(d) => d.clone(),
        None => base.join(fallback),
    };
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Runs the filter-learning experiment and writes its outputs.
pub fn run_learn_filter(cfg: &ExperimentConfig, base: &Path) -> Result<(PathBuf, FilterLearningResult)> {
    let res = experiment_learn_filter(cfg, base)?;
    let dir = output_dir(cfg, base, "learn_filter_out")?;
    fs::write(dir.join("learned_filter.csv"), res.learned.to_csv())?;
    fs::write(dir.join("ramp_filter.csv"), res.ramp.to_csv())?;
    fs::write(dir.join("ramlak_filter.csv"), res.ramlak.to_csv())?;
    fs::write(dir.join("loss.csv"), io::loss_csv(&res.log, "ramlak_distance_ratio"))?;
    write_image_set(&dir, "reconstruction", &res.reconstruction, (0.0, 0.4))?;
    write_image_set(&dir, "phantom", &res.phantom, (0.0, 0.4))?;
    Ok((dir, res))
}

pub fn run_iterative_tv(cfg: &ExperimentConfig, base: &Path) -> Result<(PathBuf, IterativeResult)> {
    let res = experiment_iterative_tv(cfg, base)?;
    let dir = output_dir(cfg, base, "iterative_out")?;
    fs::write(dir.join("loss.csv"), io::loss_csv(&res.log, "rmse_to_phantom"))?;
    write_image_set(&dir, "reconstruction", &res.reconstruction, (0.0, 0.4))?;
    write_image_set(&dir, "fbp", &res.fbp, (0.0, 0.4))?;
    write_image_set(&dir, "phantom", &res.phantom, (0.0, 0.4))?;
    Ok((dir, res))
}

pub fn run_fdk(cfg: &ExperimentConfig, base: &Path) -> Result<(PathBuf, FdkResult)> {
    let res = experiment_fdk(cfg, base)?;
    let dir = output_dir(cfg, base, "fdk_out")?;
    write_image_set(&dir, "reconstruction", &res.reconstruction, (0.0, 0.4))?;
    write_image_set(&dir, "phantom", &res.phantom, (0.0, 0.4))?;
    Ok((dir, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DetectorSpec;

    fn par(n: usize, views: usize) -> ParallelGeometry2D {
        let det = ((n as f64) * 1.5).ceil() as usize;
        ParallelGeometry2D::new(
            VolumeSpec::new(&[n, n], &[1.0, 1.0]).unwrap(),
            DetectorSpec::new(&[det], &[1.0]).unwrap(),
            views,
            PI,
        )
        .unwrap()
    }

    #[test]
    fn zero_sinogram_reconstructs_to_zero() {
        let g = par(16, 10);
        let s = Sinogram::zeros(&g.sinogram_shape(), &[1.0]);
        let img = fbp_reconstruct(&s, &g, FilterKind::RamLak).unwrap();
        assert!(img.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_properties() {
        let s = Sinogram::from_data(&[100, 1000], &[1.0], vec![5.0; 100_000]).unwrap();
        assert_eq!(add_gaussian_noise(&s, 0.0, 1).unwrap(), s);
        let a = add_gaussian_noise(&s, 0.02, 7).unwrap();
        let b = add_gaussian_noise(&s, 0.02, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, add_gaussian_noise(&s, 0.02, 8).unwrap());
        let n = a.data.len() as f64;
        let diffs: Vec<f64> = a.data.iter().map(|v| v - 5.0).collect();
        let mean = diffs.iter().sum::<f64>() / n;
        let std = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((std - 0.1).abs() / 0.1 < 0.02, "{std}");
        assert!(add_gaussian_noise(&s, -0.1, 1).is_err());
    }

    #[test]
    fn zero_data_keeps_iterate_zero() {
        let g = par(12, 6);
        let s = Sinogram::zeros(&g.sinogram_shape(), &[1.0]);
        let (img, log) = iterative_tv_reconstruct(&s, &g, 1e-3, 5, 0.0, None).unwrap();
        assert!(img.data.iter().all(|&v| v == 0.0));
        assert!(log.iter().all(|r| r.loss == 0.0));
    }

    #[test]
    fn zero_iterations_returns_ramp() {
        let g = par(16, 12);
        let ph = shepp_logan_2d(&g.volume).unwrap();
        let s = crate::projector::forward_parallel_2d(&ph, &g).unwrap();
        let res = learn_filter(&s, &ph, &g, 1e-3, 0).unwrap();
        assert_eq!(res.learned, res.ramp);
        assert_eq!(res.log.len(), 1);
    }

    #[test]
    fn config_parsing() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"geometry":{"type":"parallel2d","volume_shape":[16,16],"volume_spacing":1.0,
                 "detector_shape":[24],"detector_spacing":1.0,"n_projections":8,
                 "angular_range_deg":180},
                "phantom":"shepp-logan-2d","noise":0.02,"learning_rate":0.001,
                "iterations":3,"lambda":0.1,"seed":3}"#,
        )
        .unwrap();
        assert_eq!(cfg.phantom, PhantomKind::SheppLogan2d);
        assert!(cfg.geometry.resolve(Path::new(".")).is_ok());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"geometry":"g.json","phantom":"cube"}"#).is_err());
        let mut bad = cfg.clone();
        bad.noise = -1.0;
        assert!(bad.validate().is_err());
        let mut bad = cfg.clone();
        bad.iterations = 0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn gaussian_phantom_peak_and_width() {
        let spec = VolumeSpec::new(&[41, 41], &[1.0, 1.0]).unwrap();
        let img = PhantomKind::Gaussian.build(&spec).unwrap();
        assert_eq!(img.data[20 * 41 + 20], 1.0);
        // sigma = 0.3 * 20.5 mm; one sigma out along x
        let sigma = 0.3 * 20.5;
        let x = spec.coordinate(1, 30);
        let expect = (-(x * x) / (2.0 * sigma * sigma)).exp();
        assert!((img.data[20 * 41 + 30] - expect).abs() < 1e-12);
        assert_eq!(img.data[3 * 41 + 7], img.data[37 * 41 + 33]);
    }

    #[test]
    fn divergence_detected() {
        let g = par(16, 8);
        let ph = shepp_logan_2d(&g.volume).unwrap();
        let s = crate::projector::forward_parallel_2d(&ph, &g).unwrap();
        let err = iterative_tv_reconstruct(&s, &g, 1e6, 200, 0.0, None).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. } | Error::NonFinite(_)), "{err}");
    }
}
