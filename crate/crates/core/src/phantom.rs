//! Numerical phantoms.
//!
//! Primitives are additive: a voxel receives the sum of the intensities of
//! every primitive containing its center. No anti-aliasing is applied.
//!
//! The Shepp-Logan tables are the "modified" (Toft) intensities, which keep
//! the phantom within `[0, 1]`. Ellipse geometry is given in units of the
//! half field of view. The 3D table is the common ellipsoid extension of
//! the 2D phantom (Kak & Slaney geometry, modified intensities) with
//! in-plane rotations only, so its `z = 0` cross-section reproduces the 2D
//! phantom.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::VolumeSpec;
use crate::image::Image;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipseSpec {
    pub center: [f64; 2],
    pub semi_axes: [f64; 2],
    /// Counter-clockwise rotation in radians.
    pub angle: f64,
    pub intensity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipsoidSpec {
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
    /// Z-X-Z Euler angles in radians.
    pub angles: [f64; 3],
    pub intensity: f64,
}

/// Geometric primitive; coordinates are world millimetres.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Primitive {
    Ellipse(EllipseSpec),
    Rectangle {
        center: [f64; 2],
        half_sizes: [f64; 2],
        angle: f64,
        intensity: f64,
    },
    Ellipsoid(EllipsoidSpec),
    Cuboid {
        center: [f64; 3],
        half_sizes: [f64; 3],
        intensity: f64,
    },
}

impl Primitive {
    pub fn circle(center: [f64; 2], radius: f64, intensity: f64) -> Self {
        Primitive::Ellipse(EllipseSpec {
            center,
            semi_axes: [radius, radius],
            angle: 0.0,
            intensity,
        })
    }

    pub fn sphere(center: [f64; 3], radius: f64, intensity: f64) -> Self {
        Primitive::Ellipsoid(EllipsoidSpec {
            center,
            semi_axes: [radius; 3],
            angles: [0.0; 3],
            intensity,
        })
    }

    fn ndim(&self) -> usize {
        match self {
            Primitive::Ellipse(_) | Primitive::Rectangle { .. } => 2,
            Primitive::Ellipsoid(_) | Primitive::Cuboid { .. } => 3,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Primitive::Ellipse(e) => e.semi_axes.iter().all(|&a| a > 0.0),
            Primitive::Rectangle { half_sizes, .. } => half_sizes.iter().all(|&a| a > 0.0),
            Primitive::Ellipsoid(e) => e.semi_axes.iter().all(|&a| a > 0.0),
            Primitive::Cuboid { half_sizes, .. } => half_sizes.iter().all(|&a| a > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("non-positive extent in {self:?}")))
        }
    }

    fn intensity(&self) -> f64 {
        match *self {
            Primitive::Ellipse(e) => e.intensity,
            Primitive::Rectangle { intensity, .. } => intensity,
            Primitive::Ellipsoid(e) => e.intensity,
            Primitive::Cuboid { intensity, .. } => intensity,
        }
    }

    /// Whether the world point `p = (x, y[, z])` lies inside.
    pub fn contains(&self, p: &[f64]) -> bool {
        match *self {
            Primitive::Ellipse(e) => {
                let (dx, dy) = (p[0] - e.center[0], p[1] - e.center[1]);
                let (s, c) = e.angle.sin_cos();
                let u = c * dx + s * dy;
                let v = -s * dx + c * dy;
                (u / e.semi_axes[0]).powi(2) + (v / e.semi_axes[1]).powi(2) <= 1.0
            }
            Primitive::Rectangle {
                center,
                half_sizes,
                angle,
                ..
            } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                let (s, c) = angle.sin_cos();
                let u = c * dx + s * dy;
                let v = -s * dx + c * dy;
                u.abs() <= half_sizes[0] && v.abs() <= half_sizes[1]
            }
            Primitive::Ellipsoid(e) => {
                let d = [p[0] - e.center[0], p[1] - e.center[1], p[2] - e.center[2]];
                let r = euler_zxz(e.angles);
                // body coordinates: Rᵀ d
                let mut q = 0.0;
                for k in 0..3 {
                    let b = r[0][k] * d[0] + r[1][k] * d[1] + r[2][k] * d[2];
                    q += (b / e.semi_axes[k]).powi(2);
                }
                q <= 1.0
            }
            Primitive::Cuboid {
                center, half_sizes, ..
            } => (0..3).all(|k| (p[k] - center[k]).abs() <= half_sizes[k]),
        }
    }
}

fn euler_zxz(a: [f64; 3]) -> [[f64; 3]; 3] {
    let (s1, c1) = a[0].sin_cos();
    let (s2, c2) = a[1].sin_cos();
    let (s3, c3) = a[2].sin_cos();
    // Rz(a0) · Rx(a1) · Rz(a2)
    [
        [c1 * c3 - s1 * c2 * s3, -c1 * s3 - s1 * c2 * c3, s1 * s2],
        [s1 * c3 + c1 * c2 * s3, -s1 * s3 + c1 * c2 * c3, -c1 * s2],
        [s2 * s3, s2 * c3, c2],
    ]
}

/// Voxelizes a list of primitives onto the grid of `spec`.
pub fn rasterize_primitives(primitives: &[Primitive], spec: &VolumeSpec) -> Result<Image> {
    for p in primitives {
        p.validate()?;
        if p.ndim() != spec.ndim() {
            return Err(Error::InvalidArgument(format!(
                "{}D primitive on a {}D volume",
                p.ndim(),
                spec.ndim()
            )));
        }
    }
    let mut img = Image::zeros(spec);
    let shape = spec.shape().to_vec();
    let nx = *shape.last().unwrap();
    let ndim = spec.ndim();
    img.data
        .par_chunks_mut(nx)
        .enumerate()
        .for_each(|(row, out)| {
            // row index -> (z, y) or (y)
            let (iz, iy) = if ndim == 3 {
                (row / shape[1], row % shape[1])
            } else {
                (0, row)
            };
            let y = spec.coordinate(ndim - 2, iy);
            let z = if ndim == 3 { spec.coordinate(0, iz) } else { 0.0 };
            for (ix, v) in out.iter_mut().enumerate() {
                let x = spec.coordinate(ndim - 1, ix);
                let p = [x, y, z];
                *v = primitives
                    .iter()
                    .filter(|prim| prim.contains(&p[..ndim]))
                    .map(Primitive::intensity)
                    .sum();
            }
        });
    Ok(img)
}

/// Modified Shepp-Logan ellipses: intensity, semi-axes (a, b), center
/// (x, y), rotation in degrees; lengths relative to the half field of view.
pub const SHEPP_LOGAN_2D: [[f64; 6]; 10] = [
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0],
    [-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0],
    [-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0],
    [0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0],
    [0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0],
    [0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0],
    [0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0],
    [0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0],
    [0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0],
];

/// Ellipsoid extension: intensity, semi-axes (a, b, c), center (x, y, z),
/// rotation about z in degrees.
pub const SHEPP_LOGAN_3D: [[f64; 8]; 10] = [
    [1.0, 0.6900, 0.920, 0.810, 0.0, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.780, 0.0, -0.0184, 0.0, 0.0],
    [-0.2, 0.1100, 0.310, 0.220, 0.22, 0.0, 0.0, -18.0],
    [-0.2, 0.1600, 0.410, 0.280, -0.22, 0.0, 0.0, 18.0],
    [0.1, 0.2100, 0.250, 0.410, 0.0, 0.35, -0.15, 0.0],
    [0.1, 0.0460, 0.046, 0.050, 0.0, 0.1, 0.25, 0.0],
    [0.1, 0.0460, 0.046, 0.050, 0.0, -0.1, 0.25, 0.0],
    [0.1, 0.0460, 0.023, 0.050, -0.08, -0.605, 0.0, 0.0],
    [0.1, 0.0230, 0.023, 0.020, 0.0, -0.606, 0.0, 0.0],
    [0.1, 0.0230, 0.046, 0.020, 0.06, -0.605, 0.0, 0.0],
];

fn half_extent(spec: &VolumeSpec, axis: usize) -> f64 {
    spec.shape()[axis] as f64 * spec.spacing()[axis] / 2.0
}

/// Scales a normalized ellipse table to the in-plane field of view of `spec`.
pub fn ellipses_to_primitives(table: &[[f64; 6]], spec: &VolumeSpec) -> Vec<Primitive> {
    let nd = spec.ndim();
    let r = half_extent(spec, nd - 1).min(half_extent(spec, nd - 2));
    table
        .iter()
        .map(|e| {
            Primitive::Ellipse(EllipseSpec {
                intensity: e[0],
                semi_axes: [e[1] * r, e[2] * r],
                center: [e[3] * r, e[4] * r],
                angle: e[5].to_radians(),
            })
        })
        .collect()
}

pub fn ellipsoids_to_primitives(table: &[[f64; 8]], spec: &VolumeSpec) -> Vec<Primitive> {
    let r = half_extent(spec, 2).min(half_extent(spec, 1));
    let rz = half_extent(spec, 0);
    table
        .iter()
        .map(|e| {
            Primitive::Ellipsoid(EllipsoidSpec {
                intensity: e[0],
                semi_axes: [e[1] * r, e[2] * r, e[3] * rz],
                center: [e[4] * r, e[5] * r, e[6] * rz],
                angles: [e[7].to_radians(), 0.0, 0.0],
            })
        })
        .collect()
}

pub fn shepp_logan_2d(spec: &VolumeSpec) -> Result<Image> {
    if spec.ndim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "2D Shepp-Logan needs a 2D volume, got {}D",
            spec.ndim()
        )));
    }
    rasterize_primitives(&ellipses_to_primitives(&SHEPP_LOGAN_2D, spec), spec)
}

pub fn shepp_logan_3d(spec: &VolumeSpec) -> Result<Image> {
    if spec.ndim() != 3 {
        return Err(Error::InvalidArgument(format!(
            "3D Shepp-Logan needs a 3D volume, got {}D",
            spec.ndim()
        )));
    }
    rasterize_primitives(&ellipsoids_to_primitives(&SHEPP_LOGAN_3D, spec), spec)
}
