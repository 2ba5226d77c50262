//! File formats: raw little-endian `f32` payload with a JSON header,
//! 8-bit PGM export, and CSV line profiles and logs.
//!
//! An image stored at `name` consists of `name.json` (header) and
//! `name.raw` (payload). Paths that already end in `.json` name the header
//! directly. Values are stored as `f32`, so a roundtrip is exact for values
//! representable in single precision.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::VolumeSpec;
use crate::image::{Image, Sinogram};

pub const DTYPE: &str = "f32le";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawImageHeader {
    pub shape: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    pub dtype: String,
    pub data_file: String,
}

/// Header and payload paths for `path`.
pub fn file_pair(path: &Path) -> (PathBuf, PathBuf) {
    if path.extension().is_some_and(|e| e == "json") {
        (path.to_path_buf(), path.with_extension("raw"))
    } else {
        let mut h = path.as_os_str().to_owned();
        h.push(".json");
        let mut r = path.as_os_str().to_owned();
        r.push(".raw");
        (PathBuf::from(h), PathBuf::from(r))
    }
}

fn write_raw(path: &Path, shape: &[usize], spacing: &[f64], origin: &[f64], data: &[f64]) -> Result<()> {
    let (header_path, raw_path) = file_pair(path);
    let header = RawImageHeader {
        shape: shape.to_vec(),
        spacing: spacing.to_vec(),
        origin: origin.to_vec(),
        dtype: DTYPE.into(),
        data_file: raw_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    let mut bytes = Vec::with_capacity(4 * data.len());
    for &v in data {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(&raw_path, bytes)?;
    fs::write(&header_path, serde_json::to_string_pretty(&header)? + "\n")?;
    Ok(())
}

fn read_raw(path: &Path) -> Result<(RawImageHeader, Vec<f64>)> {
    let (header_path, _) = file_pair(path);
    let header: RawImageHeader = serde_json::from_str(&fs::read_to_string(&header_path)?)?;
    if header.dtype != DTYPE {
        return Err(Error::Format(format!("unknown dtype `{}`", header.dtype)));
    }
    if header.spacing.len() != header.shape.len() || header.origin.len() != header.shape.len() {
        return Err(Error::Format("header shape, spacing and origin lengths differ".into()));
    }
    let raw_path = header_path
        .parent()
        .unwrap_or(Path::new(""))
        .join(&header.data_file);
    let bytes = fs::read(&raw_path)?;
    let expected = 4 * header.shape.iter().product::<usize>();
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "payload length mismatch: expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    Ok((header, data))
}

pub fn write_image(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    write_raw(
        path.as_ref(),
        image.shape(),
        image.spec.spacing(),
        image.spec.origin(),
        &image.data,
    )
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    let (h, data) = read_raw(path.as_ref())?;
    let spec = VolumeSpec::with_origin(&h.shape, &h.spacing, &h.origin)
        .map_err(|e| Error::Format(e.to_string()))?;
    Image::from_data(&spec, data)
}

/// Sinograms use the same layout; axis 0 carries the angular step in
/// radians as its spacing.
pub fn write_sinogram(sino: &Sinogram, angular_step: f64, path: impl AsRef<Path>) -> Result<()> {
    let mut spacing = vec![angular_step];
    spacing.extend_from_slice(&sino.spacing);
    let origin: Vec<f64> = std::iter::once(0.0)
        .chain(
            sino.shape()[1..]
                .iter()
                .zip(&sino.spacing)
                .map(|(&n, &s)| -((n as f64) - 1.0) * s / 2.0),
        )
        .collect();
    write_raw(path.as_ref(), sino.shape(), &spacing, &origin, &sino.data)
}

pub fn read_sinogram(path: impl AsRef<Path>) -> Result<Sinogram> {
    let (h, data) = read_raw(path.as_ref())?;
    if h.shape.len() < 2 {
        return Err(Error::Format("sinogram needs at least two axes".into()));
    }
    Sinogram::from_data(&h.shape, &h.spacing[1..], data)
}

/// Linear window mapping `floor(255·(v − lo)/(hi − lo))`, clamped.
pub fn window_to_gray(v: f64, lo: f64, hi: f64) -> u8 {
    let g = (255.0 * (v - lo) / (hi - lo)).floor();
    g.clamp(0.0, 255.0) as u8
}

/// Binary (P5) PGM of a 2D image, row 0 first.
pub fn pgm_bytes(image: &Image, lo: f64, hi: f64) -> Result<Vec<u8>> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!(
            "window lower bound {lo} must be below upper bound {hi}"
        )));
    }
    if image.ndim() != 2 {
        return Err(Error::InvalidArgument("PGM export needs a 2D image".into()));
    }
    let (h, w) = (image.shape()[0], image.shape()[1]);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(image.data.iter().map(|&v| window_to_gray(v, lo, hi)));
    Ok(out)
}

pub fn export_pgm(image: &Image, lo: f64, hi: f64, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, pgm_bytes(image, lo, hi)?)?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileAxis {
    /// Fixed row index, positions along x.
    Row,
    /// Fixed column index, positions along y.
    Column,
}

impl std::str::FromStr for ProfileAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "row" | "x" | "0" => Ok(ProfileAxis::Row),
            "column" | "col" | "y" | "1" => Ok(ProfileAxis::Column),
            _ => Err(Error::InvalidArgument(format!("unknown profile axis `{s}`"))),
        }
    }
}

/// `(position_mm, value)` pairs along one row or column of a 2D image.
pub fn line_profile(image: &Image, axis: ProfileAxis, index: usize) -> Result<Vec<(f64, f64)>> {
    if image.ndim() != 2 {
        return Err(Error::InvalidArgument("line profiles need a 2D image".into()));
    }
    let (ny, nx) = (image.shape()[0], image.shape()[1]);
    let spec = &image.spec;
    match axis {
        ProfileAxis::Row => {
            if index >= ny {
                return Err(Error::InvalidArgument(format!("row {index} out of range 0..{ny}")));
            }
            Ok((0..nx)
                .map(|ix| (spec.coordinate(1, ix), image.data[index * nx + ix]))
                .collect())
        }
        ProfileAxis::Column => {
            if index >= nx {
                return Err(Error::InvalidArgument(format!("column {index} out of range 0..{nx}")));
            }
            Ok((0..ny)
                .map(|iy| (spec.coordinate(0, iy), image.data[iy * nx + index]))
                .collect())
        }
    }
}

pub fn profile_csv(profile: &[(f64, f64)]) -> String {
    let mut s = String::from("position_mm,value\n");
    for (p, v) in profile {
        s.push_str(&format!("{p},{v:e}\n"));
    }
    s
}

/// One line of a training log.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossRecord {
    pub iteration: usize,
    pub loss: f64,
    pub metric: Option<f64>,
}

pub fn loss_csv(records: &[LossRecord], metric_name: &str) -> String {
    let mut s = format!("iteration,loss,{metric_name}\n");
    for r in records {
        match r.metric {
            Some(m) => s.push_str(&format!("{},{:e},{:e}\n", r.iteration, r.loss, m)),
            None => s.push_str(&format!("{},{:e},\n", r.iteration, r.loss)),
        }
    }
    s
}
