//! Fourier-domain reconstruction filters and projection-domain weights.
//!
//! Filter weights are in physical frequency units (cycles per millimetre of
//! detector coordinate), so a filtered projection approximates the
//! continuous ramp-filtered projection without further scaling.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
pub use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::{half_fan_angle, view_angles, DetectorSpec, Geometry};
use crate::image::Sinogram;

fn check_pow2(n: usize) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "length {n} is not a power of two"
        )));
    }
    Ok(())
}

/// Discrete Fourier transform. The forward transform is unscaled, the
/// inverse is scaled by `1/n`.
pub fn fft_1d(signal: &[Complex64], inverse: bool) -> Result<Vec<Complex64>> {
    check_pow2(signal.len())?;
    let mut buf = signal.to_vec();
    FftPair::new(buf.len()).run(&mut buf, inverse);
    Ok(buf)
}

/// Planned forward/inverse transforms of one length.
#[derive(Clone)]
struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    n: usize,
}

impl FftPair {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            n,
        }
    }

    fn run(&self, buf: &mut [Complex64], inverse: bool) {
        if inverse {
            self.inverse.process(buf);
            let s = 1.0 / self.n as f64;
            buf.iter_mut().for_each(|c| *c *= s);
        } else {
            self.forward.process(buf);
        }
    }

    /// Forward transform of `row` zero-padded to `n`.
    fn spectrum(&self, row: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n];
        for (b, &v) in buf.iter_mut().zip(row) {
            b.re = v;
        }
        self.run(&mut buf, false);
        buf
    }
}

/// Smallest power of two that is at least twice `detector_bins`.
pub fn default_padding(detector_bins: usize) -> usize {
    (2 * detector_bins.max(1)).next_power_of_two()
}

/// Real weights per frequency bin of the padded transform.
#[derive(Clone, Debug, PartialEq)]
pub struct Filter1D {
    pub weights: Vec<f64>,
    pub detector_spacing: f64,
}

impl Filter1D {
    pub fn from_weights(weights: Vec<f64>, detector_spacing: f64) -> Result<Self> {
        check_pow2(weights.len())?;
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("filter weights".into()));
        }
        if !(detector_spacing > 0.0) {
            return Err(Error::InvalidArgument("detector spacing must be > 0".into()));
        }
        Ok(Self {
            weights,
            detector_spacing,
        })
    }

    pub fn n_bins(&self) -> usize {
        self.weights.len()
    }

    /// Euclidean distance between two filters of equal length.
    pub fn distance(&self, other: &Filter1D) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// CSV text with a `bin_index,weight` header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_index,weight\n");
        for (k, w) in self.weights.iter().enumerate() {
            s.push_str(&format!("{k},{w:e}\n"));
        }
        s
    }

    pub fn from_csv(text: &str, detector_spacing: f64) -> Result<Self> {
        let mut weights = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (line_no == 0 && line.starts_with("bin_index")) {
                continue;
            }
            let mut parts = line.split(',');
            let (Some(k), Some(w), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Format(format!("filter CSV line {}: `{line}`", line_no + 1)));
            };
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad bin index `{k}`")))?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad weight `{w}`")))?;
            if k != weights.len() {
                return Err(Error::Format(format!(
                    "filter CSV bins must be consecutive from 0, found {k}"
                )));
            }
            weights.push(w);
        }
        Self::from_weights(weights, detector_spacing)
    }
}

fn check_padding(detector_bins: usize, spacing: f64, padded_n: usize) -> Result<()> {
    check_pow2(padded_n)?;
    if padded_n < detector_bins {
        return Err(Error::InvalidArgument(format!(
            "padded length {padded_n} shorter than {detector_bins} detector bins"
        )));
    }
    if !(spacing > 0.0) {
        return Err(Error::InvalidArgument("detector spacing must be > 0".into()));
    }
    Ok(())
}

/// `|f|` sampled at the DFT bin frequencies.
pub fn ramp_filter(detector_bins: usize, spacing: f64, padded_n: usize) -> Result<Filter1D> {
    check_padding(detector_bins, spacing, padded_n)?;
    let n = padded_n;
    let weights = (0..n)
        .map(|k| k.min(n - k) as f64 / (n as f64 * spacing))
        .collect();
    Filter1D::from_weights(weights, spacing)
}

/// Spatial Ram-Lak kernel wrapped into a window of `padded_n` samples.
pub fn ramlak_kernel(spacing: f64, padded_n: usize) -> Vec<f64> {
    let n = padded_n as isize;
    let s2 = spacing * spacing;
    (0..n)
        .map(|i| {
            let m = if i <= n / 2 { i } else { i - n };
            if m == 0 {
                1.0 / (4.0 * s2)
            } else if m % 2 != 0 {
                -1.0 / ((m * m) as f64 * PI * PI * s2)
            } else {
                0.0
            }
        })
        .collect()
}

pub fn ramlak_filter(detector_bins: usize, spacing: f64, padded_n: usize) -> Result<Filter1D> {
    check_padding(detector_bins, spacing, padded_n)?;
    let kernel: Vec<Complex64> = ramlak_kernel(spacing, padded_n)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    let spec = fft_1d(&kernel, false)?;
    Filter1D::from_weights(spec.iter().map(|c| c.re * spacing).collect(), spacing)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterKind {
    Ramp,
    RamLak,
}

impl FilterKind {
    pub fn build(self, detector_bins: usize, spacing: f64, padded_n: usize) -> Result<Filter1D> {
        match self {
            FilterKind::Ramp => ramp_filter(detector_bins, spacing, padded_n),
            FilterKind::RamLak => ramlak_filter(detector_bins, spacing, padded_n),
        }
    }
}

impl std::str::FromStr for FilterKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "ramp" => Ok(FilterKind::Ramp),
            "ramlak" => Ok(FilterKind::RamLak),
            _ => Err(Error::InvalidArgument(format!("unknown filter `{s}`"))),
        }
    }
}

/// Filters every detector row (last axis) of a row-major array:
/// zero-pad, transform, multiply by the weights, invert, truncate.
pub fn filter_rows(data: &[f64], row_len: usize, weights: &[f64]) -> Result<Vec<f64>> {
    let n = weights.len();
    check_pow2(n)?;
    if row_len == 0 || row_len > n || !data.len().is_multiple_of(row_len) {
        return Err(Error::InvalidArgument(format!(
            "filter with {n} bins cannot filter rows of {row_len} samples"
        )));
    }
    let fft = FftPair::new(n);
    let mut out = vec![0.0; data.len()];
    out.par_chunks_mut(row_len)
        .zip(data.par_chunks(row_len))
        .for_each(|(dst, src)| {
            let mut buf = fft.spectrum(src);
            for (b, &w) in buf.iter_mut().zip(weights) {
                *b *= w;
            }
            fft.run(&mut buf, true);
            for (d, b) in dst.iter_mut().zip(&buf) {
                *d = b.re;
            }
        });
    Ok(out)
}

pub fn apply_filter(sino: &Sinogram, filter: &Filter1D) -> Result<Sinogram> {
    let data = filter_rows(&sino.data, sino.row_len(), &filter.weights)?;
    Sinogram::from_data(sino.shape(), &sino.spacing, data)
}

/// Gradient of `Σ upstream · filter_rows(data, K)` with respect to the
/// filter weights `K`: `Σ_rows Re(conj(P_k) G_k) / n`, where `P` and `G`
/// are the padded spectra of the input and upstream rows.
pub fn filter_weight_gradient(
    data: &[f64],
    upstream: &[f64],
    row_len: usize,
    n_bins: usize,
) -> Result<Vec<f64>> {
    check_pow2(n_bins)?;
    if data.len() != upstream.len() || row_len == 0 || !data.len().is_multiple_of(row_len) {
        return Err(Error::shape(&[data.len()], &[upstream.len()]));
    }
    let fft = FftPair::new(n_bins);
    let inv_n = 1.0 / n_bins as f64;
    let per_row: Vec<Vec<f64>> = data
        .par_chunks(row_len)
        .zip(upstream.par_chunks(row_len))
        .map(|(p, g)| {
            let ps = fft.spectrum(p);
            let gs = fft.spectrum(g);
            ps.iter()
                .zip(&gs)
                .map(|(a, b)| (a.conj() * b).re * inv_n)
                .collect()
        })
        .collect();
    // fixed-order reduction keeps the result independent of thread count
    let mut grad = vec![0.0; n_bins];
    for row in per_row {
        for (g, v) in grad.iter_mut().zip(row) {
            *g += v;
        }
    }
    Ok(grad)
}

/// Per-pixel projection weights, either full sinogram shape or one
/// projection broadcast over all views.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMap {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl WeightMap {
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if shape.iter().product::<usize>() != values.len() {
            return Err(Error::shape(&shape, &[values.len()]));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be finite and >= 0".into()));
        }
        Ok(Self { shape, values })
    }

    /// Weight values expanded to `shape`, broadcasting over views.
    pub fn expand(&self, shape: &[usize]) -> Result<Vec<f64>> {
        if self.shape == shape {
            return Ok(self.values.clone());
        }
        if shape.len() == self.shape.len() + 1 && shape[1..] == self.shape[..] {
            return Ok(self.values.repeat(shape[0]));
        }
        Err(Error::shape(shape, &self.shape))
    }

    pub fn apply(&self, sino: &Sinogram) -> Result<Sinogram> {
        let w = self.expand(sino.shape())?;
        let data = sino.data.iter().zip(&w).map(|(a, b)| a * b).collect();
        Sinogram::from_data(sino.shape(), &sino.spacing, data)
    }

    /// Element-wise product of two maps of equal shape.
    pub fn product(&self, other: &WeightMap) -> Result<WeightMap> {
        let (big, small) = if self.shape.len() >= other.shape.len() {
            (self, other)
        } else {
            (other, self)
        };
        let w = small.expand(&big.shape)?;
        WeightMap::new(
            big.shape.clone(),
            big.values.iter().zip(&w).map(|(a, b)| a * b).collect(),
        )
    }
}

/// Cosine of the angle between a ray and the central ray, in coordinates
/// `(u, v)` on the virtual detector through the iso-center.
pub fn cosine_weight(sid: f64, u: f64, v: f64) -> f64 {
    sid / (sid * sid + u * u + v * v).sqrt()
}

fn divergent(geo: &Geometry) -> Result<(f64, f64, &DetectorSpec)> {
    match geo {
        Geometry::Parallel2D(_) => Err(Error::Geometry(
            "cosine and redundancy weights need a fan- or cone-beam geometry".into(),
        )),
        Geometry::Fan2D(g) => Ok((g.sid, g.sdd, &g.detector)),
        Geometry::Cone3D(g) => Ok((g.sid, g.sdd, &g.detector)),
    }
}

/// Cosine pre-weights for one projection, broadcast over views.
pub fn cosine_weights(geo: &Geometry) -> Result<WeightMap> {
    let (sid, sdd, det) = divergent(geo)?;
    let mag = sid / sdd;
    let values = match det.ndim() {
        1 => (0..det.shape()[0])
            .map(|j| cosine_weight(sid, det.coordinate(0, j) * mag, 0.0))
            .collect(),
        _ => {
            let (rows, cols) = (det.shape()[0], det.shape()[1]);
            let mut v = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                let vv = det.coordinate(0, r) * mag;
                for c in 0..cols {
                    v.push(cosine_weight(sid, det.coordinate(1, c) * mag, vv));
                }
            }
            v
        }
    };
    WeightMap::new(det.shape().to_vec(), values)
}

/// Parker redundancy weight of the ray at view angle `beta` and fan angle
/// `gamma` for a scan over `[0, π + 2·delta]`.
pub fn parker_weight(beta: f64, gamma: f64, delta: f64) -> f64 {
    let s2 = |x: f64| x.sin().powi(2);
    if beta < 0.0 {
        0.0
    } else if beta < 2.0 * delta - 2.0 * gamma {
        s2(PI / 4.0 * beta / (delta - gamma))
    } else if beta < PI - 2.0 * gamma {
        1.0
    } else if beta <= PI + 2.0 * delta {
        s2(PI / 4.0 * (PI + 2.0 * delta - beta) / (delta + gamma))
    } else {
        0.0
    }
}

/// Tolerance on the short-scan minimum angular range (radians).
pub const SHORT_SCAN_TOLERANCE: f64 = 1e-6;

/// Parker weights for a short scan. The ramp width follows the actual
/// over-scan `(range − π)/2`, which equals the half fan angle for a minimal
/// short scan. Full sinogram shape.
pub fn parker_weights(geo: &Geometry) -> Result<WeightMap> {
    let (_, sdd, det) = divergent(geo)?;
    let range = geo.angular_range();
    let fan = half_fan_angle(det, sdd);
    let minimum = PI + 2.0 * fan;
    if range < minimum - SHORT_SCAN_TOLERANCE {
        return Err(Error::ShortScan {
            range_deg: range.to_degrees(),
            minimum_deg: minimum.to_degrees(),
        });
    }
    if range > 2.0 * PI + SHORT_SCAN_TOLERANCE {
        return Err(Error::Geometry(format!(
            "angular range {:.3} deg exceeds a full turn",
            range.to_degrees()
        )));
    }
    let delta = ((range - PI) / 2.0).max(fan);
    let betas = view_angles(geo.n_projections(), range)?;
    let u_axis = det.ndim() - 1;
    let cols = det.shape()[u_axis];
    let rows = if det.ndim() == 2 { det.shape()[0] } else { 1 };
    let gammas: Vec<f64> = (0..cols)
        .map(|j| (det.coordinate(u_axis, j) / sdd).atan())
        .collect();
    let mut values = Vec::with_capacity(betas.len() * rows * cols);
    for &b in &betas {
        let row: Vec<f64> = gammas.iter().map(|&g| parker_weight(b, g, delta)).collect();
        for _ in 0..rows {
            values.extend_from_slice(&row);
        }
    }
    WeightMap::new(geo.sinogram_shape(), values)
}
