use crate::error::{Error, Result};
use crate::geometry::VolumeSpec;

/// Dense real-valued 2D or 3D array with physical placement.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    pub spec: VolumeSpec,
    pub data: Vec<f64>,
}

impl Image {
    pub fn zeros(spec: &VolumeSpec) -> Self {
        Self {
            spec: spec.clone(),
            data: vec![0.0; spec.len()],
        }
    }

    pub fn from_data(spec: &VolumeSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.len() {
            return Err(Error::shape(&[spec.len()], &[data.len()]));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image data".into()));
        }
        Ok(Self {
            spec: spec.clone(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        self.spec.shape()
    }

    pub fn ndim(&self) -> usize {
        self.spec.ndim()
    }

    /// Plane `z` (axis 0) of a 3D volume.
    pub fn slice(&self, z: usize) -> Result<Image> {
        let s = self.shape();
        if s.len() != 3 || z >= s[0] {
            return Err(Error::InvalidArgument(format!(
                "slice {z} out of range for shape {s:?}"
            )));
        }
        let plane = s[1] * s[2];
        let spec = VolumeSpec::with_origin(
            &s[1..],
            &self.spec.spacing()[1..],
            &self.spec.origin()[1..],
        )?;
        Image::from_data(&spec, self.data[z * plane..(z + 1) * plane].to_vec())
    }
}

/// Stack of projections `[n_projections, detector...]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    shape: Vec<usize>,
    /// Detector pixel pitch per detector axis.
    pub spacing: Vec<f64>,
    pub data: Vec<f64>,
}

impl Sinogram {
    pub fn zeros(shape: &[usize], spacing: &[f64]) -> Self {
        Self {
            shape: shape.to_vec(),
            spacing: spacing.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn from_data(shape: &[usize], spacing: &[f64], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if shape.len() < 2 || spacing.len() != shape.len() - 1 {
            return Err(Error::InvalidArgument(format!(
                "sinogram shape {shape:?} needs one spacing per detector axis"
            )));
        }
        if data.len() != n {
            return Err(Error::shape(&[n], &[data.len()]));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sinogram data".into()));
        }
        Ok(Self {
            shape: shape.to_vec(),
            spacing: spacing.to_vec(),
            data,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn n_projections(&self) -> usize {
        self.shape[0]
    }

    /// Detector samples per projection row (last axis).
    pub fn row_len(&self) -> usize {
        *self.shape.last().unwrap()
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.row_len())
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Root-mean-square difference over the voxels where `mask` is true.
pub fn masked_rmse(a: &[f64], b: &[f64], mask: impl Fn(usize) -> bool) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        if mask(i) {
            sum += (x - y) * (x - y);
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    masked_rmse(a, b, |_| true)
}

/// Mask of the 2D disk centered at the world origin whose radius is
/// `fraction` of the smaller half-extent of the image.
pub fn central_disk_mask(spec: &VolumeSpec, fraction: f64) -> Vec<bool> {
    let s = spec.shape();
    let (ny, nx) = (s[s.len() - 2], s[s.len() - 1]);
    let ax = spec.ndim() - 1;
    let half = (nx as f64 * spec.spacing()[ax]).min(ny as f64 * spec.spacing()[ax - 1]) / 2.0;
    let r = fraction * half;
    let mut m = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        let y = spec.coordinate(ax - 1, iy);
        for ix in 0..nx {
            let x = spec.coordinate(ax, ix);
            m.push(x * x + y * y <= r * r);
        }
    }
    m
}

/// Pearson correlation coefficient.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length() {
        let spec = VolumeSpec::new(&[2, 3], &[1.0, 1.0]).unwrap();
        assert!(Image::from_data(&spec, vec![0.0; 5]).is_err());
        assert!(Image::from_data(&spec, vec![f64::NAN; 6]).is_err());
        assert!(Sinogram::from_data(&[2, 3], &[1.0], vec![0.0; 6]).is_ok());
        assert!(Sinogram::from_data(&[2, 3], &[], vec![0.0; 6]).is_err());
    }

    #[test]
    fn slice_extracts_plane() {
        let spec = VolumeSpec::new(&[2, 2, 2], &[1.0, 1.0, 1.0]).unwrap();
        let img = Image::from_data(&spec, (0..8).map(f64::from).collect()).unwrap();
        assert_eq!(img.slice(1).unwrap().data, vec![4.0, 5.0, 6.0, 7.0]);
        assert!(img.slice(2).is_err());
    }

    #[test]
    fn disk_mask_counts() {
        let spec = VolumeSpec::new(&[101, 101], &[1.0, 1.0]).unwrap();
        let m = central_disk_mask(&spec, 0.6);
        let count = m.iter().filter(|&&b| b).count() as f64;
        let r: f64 = 0.6 * 50.5;
        assert!((count - std::f64::consts::PI * r * r).abs() < 4.0 * std::f64::consts::PI * r);
    }
}
